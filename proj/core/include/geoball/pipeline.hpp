#pragma once

#include "geoball/embedding_eval.hpp"
#include "geoball/error.hpp"
#include "geoball/features.hpp"
#include "geoball/hard_negatives.hpp"
#include "geoball/nball.hpp"
#include "geoball/ontology.hpp"
#include "geoball/projector.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geoball {

struct EpisodeConfig {
    std::size_t w = 5;
    std::size_t s = 5;
    std::size_t q = 15;
    std::size_t count = 100;
    std::uint64_t seed = 42;
};

struct PipelineConfig {
    /// Ontology JSON. Alternatively a hypernym edge list plus a leaf list, or branching
    /// factors of a generated balanced hierarchy (siblings disjoint at every level).
    std::filesystem::path ontology;
    std::filesystem::path hypernym_edges;
    std::filesystem::path leaves;
    bool sibling_disjoint = false;
    std::vector<std::size_t> balanced_ontology;

    /// Feature CSVs; synthetic features are generated when both are empty.
    std::filesystem::path base_features;
    std::filesystem::path novel_features;
    SyntheticFeatureConfig synthetic;
    /// Share of each base class's examples held out to measure base-learning generalisation.
    double base_holdout = 0.2;

    std::filesystem::path output_dir = "artifacts";
    std::uint64_t seed = 42;
    unsigned threads = 1;

    OccurrenceCount occurrences = OccurrenceCount::InferredAndDisjoint;
    EmbedConfig embed;
    /// When set, the embedding hyperparameters are chosen by grid search.
    std::optional<GridSpec> tune;

    /// 0 picks ceil(sqrt(leaves)).
    std::size_t clusters = 0;
    std::uint64_t cluster_seed = 42;
    KMeansOptions kmeans;

    ProjectorConfig projector;
    EpisodeConfig episodes;

    /// Concepts to draw; all concepts when empty.
    std::vector<std::string> viz_concepts;
    /// Projected base examples drawn per class.
    std::size_t viz_points_per_class = 5;
};

/// Parses a JSON pipeline config. Stage sections (`embed`, `negatives`, `synthetic`,
/// `projector`, `episodes`) inherit the top-level `seed` unless they set their own.
/// Relative paths resolve against `base_dir`. Unknown keys are rejected.
PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// `{"gammas":[...], "psis":[...], "phis":[...], "s_d_threshold":x}`; every key optional, lists may stay empty.
GridSpec parse_grid_spec(std::string_view text);

/// A stage that failed, with its name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error("stage '" + stage + "' failed: " + message), stage_(std::move(stage))
    {
    }
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct PipelineArtifacts {
    std::filesystem::path ich;
    std::filesystem::path space;
    std::filesystem::path negatives;
    std::filesystem::path mlp;
    std::filesystem::path report;
    std::filesystem::path viz;

    std::vector<std::filesystem::path> all() const { return {ich, space, negatives, mlp, report, viz}; }
};

PipelineArtifacts artifact_paths(const std::filesystem::path& output_dir);

/// Loads the ontology named by the config (JSON, edge list or balanced hierarchy).
Ontology load_ontology(const PipelineConfig& config);

struct FeatureSplits {
    FeatureDataset base_train;
    FeatureDataset base_heldout;
    FeatureDataset novel;
};

/// Reads the feature CSVs or generates synthetic ones (aligned with `space` when given),
/// then holds out part of each base class.
FeatureSplits load_features(const PipelineConfig& config, const Ontology& ontology, const BallSpace* space = nullptr);

/// Runs ingest, embed (or tune), negatives, base learning, episodes and viz in order,
/// writing one artifact per stage. Progress goes to `log` when given; `verbose` adds
/// per-epoch losses. Throws StageError naming the stage that failed.
PipelineArtifacts run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr, bool verbose = false);

}  // namespace geoball
