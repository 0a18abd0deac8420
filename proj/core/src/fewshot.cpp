#include "geoball/fewshot.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace geoball {

Episode sample_episode(const FeatureDataset& novel, std::size_t w, std::size_t s, std::size_t q, std::uint64_t seed)
{
    if (w == 0) throw std::invalid_argument("an episode needs at least one class");
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < novel.examples.size(); ++i) by_label[novel.examples[i].label].push_back(i);

    auto classes = novel.labels();
    if (classes.size() < w) {
        throw std::invalid_argument("episode needs " + std::to_string(w) + " classes, novel split has " +
                                    std::to_string(classes.size()));
    }
    std::mt19937_64 rng(seed);
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(w);

    Episode ep{classes, {novel.dim, Split::Novel, {}}, {novel.dim, Split::Novel, {}}};
    for (const auto& label : classes) {
        auto idx = by_label[label];
        if (idx.size() < s + q) {
            throw std::invalid_argument("class '" + label + "' has " + std::to_string(idx.size()) +
                                        " examples, episode needs " + std::to_string(s + q));
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < s; ++i) ep.support.examples.push_back(novel.examples[idx[i]]);
        for (std::size_t i = s; i < s + q; ++i) ep.query.examples.push_back(novel.examples[idx[i]]);
    }
    return ep;
}

std::vector<Episode> sample_episodes(const FeatureDataset& novel, std::size_t w, std::size_t s, std::size_t q,
                                     std::size_t count, std::uint64_t seed)
{
    std::vector<Episode> out;
    out.reserve(count);
    for (std::size_t e = 0; e < count; ++e) out.push_back(sample_episode(novel, w, s, q, seed + e));
    return out;
}

void summarize(EvalReport& report)
{
    const auto n = report.episode_accuracy.size();
    if (n == 0) return;
    const double mean = std::accumulate(report.episode_accuracy.begin(), report.episode_accuracy.end(), 0.0) /
                        static_cast<double>(n);
    double var = 0.0;
    for (double a : report.episode_accuracy) var += (a - mean) * (a - mean);
    var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
    report.accuracy = mean;
    report.ci95_half_width = 1.96 * std::sqrt(var) / std::sqrt(static_cast<double>(n));
    report.semantic_error_fraction =
        report.wrong == 0 ? 0.0 : static_cast<double>(report.semantic_errors) / static_cast<double>(report.wrong);
}

namespace {

struct EpisodeOutcome {
    std::size_t correct = 0;
    std::size_t total = 0;
    std::size_t wrong = 0;
    std::size_t semantic = 0;
    std::size_t inside = 0;
};

EpisodeOutcome run_episode(const BallSpace& space, const Ich& ich, const Mlp& base_mlp, const Episode& ep,
                           const ProjectorConfig& config, const NegativeSets& negatives, std::uint64_t episode_index)
{
    const auto restricted = restrict_negatives(negatives, space, ep.classes);
    ProjectorConfig cfg = config;
    cfg.seed = config.seed + 7919 * episode_index;
    const auto tuned = finetune_fewshot(base_mlp, ep.support, space, restricted, cfg);
    const auto candidates = make_candidates(space, ep.classes);

    EpisodeOutcome out;
    for (const auto& ex : ep.query.examples) {
        const auto h = tuned.mlp.forward(ex.f);
        const auto pred = classify(h, candidates);
        ++out.total;
        if (pred.inside) ++out.inside;
        if (pred.label == ex.label) {
            ++out.correct;
            continue;
        }
        ++out.wrong;
        const auto truth = static_cast<ConceptId>(space.index(ex.label));
        if (truth >= ich.num_concepts()) continue;
        const auto containing = ancestor_report(h, space, ich);
        for (ConceptId parent : ich.direct_parents(truth)) {
            if (std::find(containing.begin(), containing.end(), space.name(parent)) != containing.end()) {
                ++out.semantic;
                break;
            }
        }
    }
    return out;
}

}  // namespace

EvalReport evaluate_episodes(const BallSpace& space, const Ich& ich, const Mlp& base_mlp,
                             const std::vector<Episode>& episodes, const ProjectorConfig& config,
                             const NegativeSets& negatives, unsigned threads)
{
    std::vector<EpisodeOutcome> outcomes(episodes.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < episodes.size(); i = next++) try {
            outcomes[i] = run_episode(space, ich, base_mlp, episodes[i], config, negatives, i);
        } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    const unsigned n_threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(episodes.size())));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    EvalReport report;
    for (const auto& o : outcomes) {
        report.episode_accuracy.push_back(o.total == 0 ? 0.0 : static_cast<double>(o.correct) / static_cast<double>(o.total));
        report.queries += o.total;
        report.wrong += o.wrong;
        report.semantic_errors += o.semantic;
        report.inside_predictions += o.inside;
    }
    summarize(report);
    return report;
}

std::vector<double> nearest_centroid_accuracy(const std::vector<Episode>& episodes)
{
    std::vector<double> out;
    for (const auto& ep : episodes) {
        std::vector<Vec> centroids(ep.classes.size(), Vec(ep.support.dim, 0.0));
        std::vector<std::size_t> counts(ep.classes.size(), 0);
        for (const auto& ex : ep.support.examples) {
            const auto c = static_cast<std::size_t>(std::find(ep.classes.begin(), ep.classes.end(), ex.label) -
                                                    ep.classes.begin());
            axpy(1.0, ex.f, centroids[c]);
            ++counts[c];
        }
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            for (double& x : centroids[c]) x /= static_cast<double>(std::max<std::size_t>(1, counts[c]));
        }
        std::size_t correct = 0;
        for (const auto& ex : ep.query.examples) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < centroids.size(); ++c) {
                if (squared_distance(ex.f, centroids[c]) < squared_distance(ex.f, centroids[best])) best = c;
            }
            if (ep.classes[best] == ex.label) ++correct;
        }
        out.push_back(ep.query.examples.empty() ? 0.0
                                                : static_cast<double>(correct) / static_cast<double>(ep.query.size()));
    }
    return out;
}

double projection_accuracy(const Mlp& mlp, const FeatureDataset& data, const BallSpace& space,
                           const std::vector<std::string>& labels)
{
    if (data.examples.empty()) return 0.0;
    const auto candidates = make_candidates(space, labels);
    std::size_t correct = 0;
    for (const auto& ex : data.examples) {
        if (classify(mlp.forward(ex.f), candidates).label == ex.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.examples.size());
}

}  // namespace geoball
