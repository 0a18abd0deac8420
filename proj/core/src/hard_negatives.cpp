#include "geoball/hard_negatives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace geoball {

namespace {

std::vector<Vec> plus_plus_seeds(std::span<const Vec> points, std::size_t k, std::mt19937_64& rng)
{
    std::vector<Vec> centroids;
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    centroids.push_back(points[pick(rng)]);
    std::vector<double> d2(points.size(), std::numeric_limits<double>::infinity());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
            total += d2[i];
        }
        std::size_t chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            chosen = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                target -= d2[i];
                if (target < 0.0 && d2[i] > 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centroids.push_back(points[chosen]);
    }
    return centroids;
}

std::size_t nearest(const Vec& p, const std::vector<Vec>& centroids)
{
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = squared_distance(p, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

void recompute_centroids(std::span<const Vec> points, const std::vector<std::size_t>& assign,
                         std::vector<Vec>& centroids)
{
    const std::size_t dim = points.front().size();
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (auto& c : centroids) c.assign(dim, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        axpy(1.0, points[i], centroids[assign[i]]);
        ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (counts[c] == 0) continue;
        for (double& x : centroids[c]) x /= static_cast<double>(counts[c]);
    }
}

// Moves the farthest point of the largest cluster into each empty cluster.
bool repair_empty(std::span<const Vec> points, std::vector<std::size_t>& assign, std::vector<Vec>& centroids)
{
    bool changed = false;
    for (;;) {
        std::vector<std::size_t> counts(centroids.size(), 0);
        for (auto a : assign) ++counts[a];
        const auto empty = std::find(counts.begin(), counts.end(), 0U);
        if (empty == counts.end()) return changed;
        const auto largest = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (assign[i] != largest) continue;
            const double d = squared_distance(points[i], centroids[largest]);
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        assign[far] = static_cast<std::size_t>(empty - counts.begin());
        recompute_centroids(points, assign, centroids);
        changed = true;
    }
}

KMeansResult lloyd(std::span<const Vec> points, std::size_t k, std::mt19937_64& rng, int max_iters)
{
    KMeansResult r;
    r.centroids = plus_plus_seeds(points, k, rng);
    r.assignment.assign(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) r.assignment[i] = nearest(points[i], r.centroids);
    recompute_centroids(points, r.assignment, r.centroids);
    repair_empty(points, r.assignment, r.centroids);

    for (r.iterations = 1; r.iterations <= max_iters; ++r.iterations) {
        bool moved = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = nearest(points[i], r.centroids);
            if (c != r.assignment[i]) {
                r.assignment[i] = c;
                moved = true;
            }
        }
        recompute_centroids(points, r.assignment, r.centroids);
        moved = repair_empty(points, r.assignment, r.centroids) || moved;
        if (!moved) break;
    }
    r.iterations = std::min(r.iterations, max_iters);
    r.sse = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) r.sse += squared_distance(points[i], r.centroids[r.assignment[i]]);
    return r;
}

}  // namespace

KMeansResult kmeans(std::span<const Vec> points, std::size_t k, std::uint64_t seed, const KMeansOptions& options)
{
    if (k < 1 || k > points.size()) {
        throw std::invalid_argument("k = " + std::to_string(k) + " outside [1, " + std::to_string(points.size()) + "]");
    }
    for (const auto& p : points) require_same_dim(p.size(), points.front().size(), "kmeans");

    std::mt19937_64 rng(seed);
    KMeansResult best;
    best.sse = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
        auto r = lloyd(points, k, rng, options.max_iters);
        if (r.sse < best.sse) best = std::move(r);
    }
    return best;
}

const std::vector<std::string>& NegativeSets::of(const std::string& label) const
{
    const auto it = negatives.find(label);
    if (it == negatives.end()) throw std::out_of_range("no negative set for class '" + label + "'");
    return it->second;
}

std::size_t default_cluster_count(std::size_t n_leaves)
{
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_leaves))));
}

namespace {

std::string nearest_other(const BallSpace& space, const std::string& label, std::span<const std::string> pool)
{
    const auto c = space.centre(space.index(label));
    std::string best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& other : pool) {
        if (other == label) continue;
        const double d = squared_distance(c, space.centre(space.index(other)));
        if (d < best_d) {
            best_d = d;
            best = other;
        }
    }
    return best;
}

}  // namespace

NegativeSets build_negative_sets(const BallSpace& space, std::span<const std::string> leaves, std::size_t k,
                                 std::uint64_t seed, const KMeansOptions& options)
{
    if (k > leaves.size()) {
        throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the number of leaves (" +
                                    std::to_string(leaves.size()) + ")");
    }
    std::vector<Vec> points;
    points.reserve(leaves.size());
    for (const auto& leaf : leaves) {
        const auto c = space.centre(space.index(leaf));
        points.emplace_back(c.begin(), c.end());
    }
    const auto km = kmeans(points, k, seed, options);

    NegativeSets out;
    out.clusters.assign(k, {});
    for (std::size_t i = 0; i < leaves.size(); ++i) out.clusters[km.assignment[i]].push_back(leaves[i]);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        auto& neg = out.negatives[leaves[i]];
        for (const auto& other : out.clusters[km.assignment[i]]) {
            if (other != leaves[i]) neg.push_back(other);
        }
        if (neg.empty() && leaves.size() > 1) neg.push_back(nearest_other(space, leaves[i], leaves));
    }
    return out;
}

NegativeSets restrict_negatives(const NegativeSets& sets, const BallSpace& space,
                                std::span<const std::string> candidates)
{
    NegativeSets out;
    for (const auto& label : candidates) {
        auto& neg = out.negatives[label];
        if (const auto it = sets.negatives.find(label); it != sets.negatives.end()) {
            for (const auto& q : it->second) {
                if (std::find(candidates.begin(), candidates.end(), q) != candidates.end()) neg.push_back(q);
            }
        }
        if (neg.empty() && candidates.size() > 1) neg.push_back(nearest_other(space, label, candidates));
    }
    for (const auto& cluster : sets.clusters) {
        std::vector<std::string> kept;
        for (const auto& c : cluster) {
            if (std::find(candidates.begin(), candidates.end(), c) != candidates.end()) kept.push_back(c);
        }
        if (!kept.empty()) out.clusters.push_back(std::move(kept));
    }
    return out;
}

}  // namespace geoball
