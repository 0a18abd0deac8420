#include "geoball/embedding_eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace geoball {

bool containment_holds(const BallRef& p, const BallRef& q)
{
    require_same_dim(p.centre.size(), q.centre.size(), "containment_holds");
    return distance(p.centre, q.centre) <= q.radius - p.radius;
}

namespace {

PrfScore finish(std::size_t tp, std::size_t fp, std::size_t fn, bool empty)
{
    PrfScore s;
    s.true_positives = tp;
    s.false_positives = fp;
    s.false_negatives = fn;
    s.empty_universe = empty;
    s.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    s.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

PrfScore score_pairs(const BallSpace& space, const Ich& ich, std::span<const ConceptId> lhs,
                     std::span<const ConceptId> rhs)
{
    std::size_t tp = 0, fp = 0, fn = 0, seen = 0;
    for (ConceptId p : lhs) {
        for (ConceptId q : rhs) {
            if (p == q) continue;
            ++seen;
            const bool truth = ich.contains(p, q);
            const bool predicted = containment_holds(space.ball(p), space.ball(q));
            if (truth && predicted) ++tp;
            else if (predicted) ++fp;
            else if (truth) ++fn;
        }
    }
    return finish(tp, fp, fn, seen == 0);
}

void check_space(const BallSpace& space, const Ich& ich)
{
    if (space.size() < ich.num_concepts()) throw std::out_of_range("ball space does not cover the hierarchy");
}

}  // namespace

PrfScore f1_all(const BallSpace& space, const Ich& ich)
{
    check_space(space, ich);
    std::vector<ConceptId> all(ich.num_concepts());
    for (ConceptId c = 0; c < all.size(); ++c) all[c] = c;
    return score_pairs(space, ich, all, all);
}

PrfScore f1_leaf(const BallSpace& space, const Ich& ich, std::span<const ConceptId> leaves)
{
    check_space(space, ich);
    std::vector<ConceptId> targets(leaves.begin(), leaves.end());
    for (ConceptId leaf : leaves) {
        for (ConceptId p : ich.direct_parents(leaf)) targets.push_back(p);
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    return score_pairs(space, ich, leaves, targets);
}

std::size_t s_d(const BallSpace& space, std::span<const ConceptId> leaves)
{
    if (leaves.size() < 2) throw std::invalid_argument("s_d needs at least two leaves");
    std::size_t count = 0;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        for (std::size_t j = i + 1; j < leaves.size(); ++j) {
            const auto p = space.ball(leaves[i]);
            const auto q = space.ball(leaves[j]);
            if (distance(p.centre, q.centre) >= p.radius + q.radius) ++count;
        }
    }
    return count;
}

Scores score_embedding(const BallSpace& space, const Ich& ich, std::span<const ConceptId> leaves)
{
    Scores s;
    s.f1_all = f1_all(space, ich).f1;
    s.f1_leaf = f1_leaf(space, ich, leaves).f1;
    if (leaves.size() >= 2) {
        s.s_d = s_d(space, leaves);
        const double pairs = static_cast<double>(leaves.size()) * static_cast<double>(leaves.size() - 1) / 2.0;
        s.s_d_fraction = static_cast<double>(s.s_d) / pairs;
    }
    return s;
}

void GridSpec::validate() const
{
    if (gammas.empty() || psis.empty() || phis.empty()) throw std::invalid_argument("grid lists must be non-empty");
    if (s_d_threshold < 0.0 || s_d_threshold > 1.0) throw std::invalid_argument("s_d threshold must lie in [0, 1]");
}

GridResult grid_search(const Ontology& ontology, const Ich& ich, const HierarchyStats& stats, const GridSpec& grid,
                       const EmbedConfig& base_config, unsigned threads)
{
    grid.validate();
    GridResult result;
    for (double g : grid.gammas) {
        for (double p : grid.psis) {
            for (double f : grid.phis) result.rows.push_back({g, p, f, {}, {}, false});
        }
    }

    auto config_for = [&](const GridRow& row) {
        EmbedConfig c = base_config;
        c.gamma = row.gamma;
        c.psi = row.psi;
        c.phi = row.phi;
        return c;
    };

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < result.rows.size(); i = next++) try {
            auto& row = result.rows[i];
            const auto trained = train_embeddings(ontology, ich, stats, config_for(row));
            row.scores = score_embedding(trained.space, ich, ontology.leaves());
            row.final_loss = trained.history.epochs.empty()
                                 ? total_loss(trained.space, {ich, ontology.disjoint_axioms(), stats}, config_for(row))
                                 : trained.history.epochs.back().loss;
            row.passes_threshold = row.scores.s_d_fraction >= grid.s_d_threshold;
        } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    const unsigned n_threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(result.rows.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    // Lexicographic (f1_leaf, f1_all, s_d_fraction); ties prefer smaller |gamma|, then grid order.
    auto better = [&](std::size_t a, std::size_t b) {
        const auto& x = result.rows[a].scores;
        const auto& y = result.rows[b].scores;
        if (x.f1_leaf != y.f1_leaf) return x.f1_leaf > y.f1_leaf;
        if (x.f1_all != y.f1_all) return x.f1_all > y.f1_all;
        if (x.s_d_fraction != y.s_d_fraction) return x.s_d_fraction > y.s_d_fraction;
        const double ga = std::abs(result.rows[a].gamma);
        const double gb = std::abs(result.rows[b].gamma);
        if (ga != gb) return ga < gb;
        return a < b;
    };
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        if (result.rows[i].passes_threshold) candidates.push_back(i);
    }
    if (candidates.empty()) {
        result.below_threshold = true;
        for (std::size_t i = 0; i < result.rows.size(); ++i) candidates.push_back(i);
    }
    result.best = *std::min_element(candidates.begin(), candidates.end(), better);
    result.best_config = config_for(result.rows[result.best]);
    return result;
}

}  // namespace geoball
