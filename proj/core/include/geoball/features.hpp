#pragma once

#include "geoball/linalg.hpp"
#include "geoball/nball.hpp"
#include "geoball/ontology.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace geoball {

enum class Split { Base, Novel };

struct LabeledFeature {
    std::string label;
    Vec f;
};

/// Labelled feature vectors standing in for backbone outputs.
struct FeatureDataset {
    std::size_t dim = 0;
    Split split = Split::Base;
    std::vector<LabeledFeature> examples;

    /// Distinct labels in first-appearance order.
    std::vector<std::string> labels() const;
    std::size_t size() const noexcept { return examples.size(); }
};

/// One example per line: `label,f_1,...,f_d`. A first line starting with `label,` is a header.
FeatureDataset parse_feature_csv(std::string_view text, Split split);
std::string to_feature_csv(const FeatureDataset& data);

struct SyntheticFeatureConfig {
    std::size_t dim = 128;
    /// Class anchors live in a random latent_dim-dimensional subspace of the feature space.
    std::size_t latent_dim = 8;
    std::size_t per_class = 40;
    double noise_sigma = 0.45;
    /// Std. dev. of the offset a root draws from the origin, in latent units.
    double root_spread = 1.0;
    /// Offset scale shrinks by this factor per level; smaller means siblings sit closer together.
    double level_decay = 0.7;
    std::uint64_t seed = 42;
    /// Leaves held out as novel classes. When empty, `novel_count` leaves are drawn with the seed.
    std::vector<std::string> novel_labels;
    std::size_t novel_count = 0;
    /// Weight in [0, 1] of a class's ball centre in its anchor when a ball space is given:
    /// anchor = (1 - alignment) * hierarchical anchor + alignment * alignment_scale * B c_P,
    /// with B an orthonormal embedding of the ball space orthogonal to the latent subspace.
    double alignment = 0.0;
    double alignment_scale = 2.0;
};

struct SyntheticFeatures {
    FeatureDataset base;
    FeatureDataset novel;
    /// Noise-free class anchor per leaf, in ontology leaf order.
    std::vector<LabeledFeature> anchors;
};

/// Hierarchy-correlated synthetic features: each concept's latent anchor is the mean of
/// its parents' anchors plus a Gaussian offset, so leaves with a shared parent have
/// correlated anchors. Examples add isotropic noise of std. dev. noise_sigma.
SyntheticFeatures generate_synthetic_features(const Ontology& ontology, const SyntheticFeatureConfig& config,
                                              const BallSpace* space = nullptr);

}  // namespace geoball
