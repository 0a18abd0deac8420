#pragma once

#include "geoball/features.hpp"
#include "geoball/hard_negatives.hpp"
#include "geoball/nball.hpp"
#include "geoball/projector.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace geoball {

/// A w-way s-shot task: support and query examples of `classes`, disjoint from each other.
struct Episode {
    std::vector<std::string> classes;
    FeatureDataset support;
    FeatureDataset query;
};

/// Samples w classes, then s + q examples of each, without replacement.
/// Throws std::invalid_argument when the novel split is too small.
Episode sample_episode(const FeatureDataset& novel, std::size_t w, std::size_t s, std::size_t q, std::uint64_t seed);

/// `count` episodes seeded seed, seed+1, ...
std::vector<Episode> sample_episodes(const FeatureDataset& novel, std::size_t w, std::size_t s, std::size_t q,
                                     std::size_t count, std::uint64_t seed);

struct EvalReport {
    double accuracy = 0.0;        ///< mean over episodes
    double ci95_half_width = 0.0; ///< 1.96 * sample std. dev. / sqrt(episodes)
    std::vector<double> episode_accuracy;
    /// Wrong predictions whose point lies in a ball of a direct parent of the true class,
    /// as a fraction of all wrong predictions.
    double semantic_error_fraction = 0.0;
    std::size_t queries = 0;
    std::size_t wrong = 0;
    std::size_t semantic_errors = 0;
    std::size_t inside_predictions = 0;  ///< predictions made by the U <= 0 rule
};

/// Mean and 95% half-width of per-episode accuracies.
void summarize(EvalReport& report);

/// Per episode: fine-tune a copy of the base MLP on the support set with negatives
/// restricted to the episode's classes, then classify each query among the episode's
/// balls. Episodes are independent; `threads` does not change the result.
EvalReport evaluate_episodes(const BallSpace& space, const Ich& ich, const Mlp& base_mlp,
                             const std::vector<Episode>& episodes, const ProjectorConfig& config,
                             const NegativeSets& negatives, unsigned threads = 1);

/// Prototype baseline: each query goes to the class whose mean support feature is nearest.
std::vector<double> nearest_centroid_accuracy(const std::vector<Episode>& episodes);

/// Fraction of examples whose classification among `labels` matches their label.
double projection_accuracy(const Mlp& mlp, const FeatureDataset& data, const BallSpace& space,
                           const std::vector<std::string>& labels);

}  // namespace geoball
