#pragma once

#include "geoball/features.hpp"
#include "geoball/hard_negatives.hpp"
#include "geoball/linalg.hpp"
#include "geoball/nball.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace geoball {

/// Feed-forward projector from feature space into ball space: affine layers,
/// rectifier on hidden layers, identity on the output.
///
/// Parameters live in one flat vector: for each layer the row-major weight
/// matrix (out x in) followed by its bias.
class Mlp {
public:
    Mlp() = default;
    /// All-zero parameters. Needs at least an input and an output size.
    explicit Mlp(std::vector<std::size_t> layer_sizes);
    /// Weights U(-a, a) with a = sqrt(6 / fan_in), zero biases.
    static Mlp initialized(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

    const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    std::size_t num_layers() const noexcept { return sizes_.empty() ? 0 : sizes_.size() - 1; }
    std::size_t input_dim() const { return sizes_.front(); }
    std::size_t output_dim() const { return sizes_.back(); }

    std::span<double> weights(std::size_t layer);
    std::span<const double> weights(std::size_t layer) const;
    std::span<double> biases(std::size_t layer);
    std::span<const double> biases(std::size_t layer) const;
    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }
    /// Offset of a layer's weight block inside parameters().
    std::size_t layer_offset(std::size_t layer) const { return offsets_.at(layer); }

    /// Throws std::invalid_argument on an input dimension mismatch.
    Vec forward(std::span<const double> f) const;

    /// Classes seen during base learning; few-shot classes must not overlap them.
    std::vector<std::string> base_labels;

    bool operator==(const Mlp&) const = default;

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

struct ProjectorConfig {
    double mu = 1.0;
    double nu = 1.0;
    double learning_rate = 3e-3;
    double fsl_learning_rate = 1e-3;
    int epochs_bl = 30;
    int epochs_fsl = 100;
    std::size_t batch_size = 32;
    std::uint64_t seed = 42;
    Optimizer optimizer = Optimizer::Adam;
    /// Hidden layer widths; input and output sizes come from the data and the ball space.
    std::vector<std::size_t> hidden = {128, 64};
    /// Few-shot fine-tuning updates only the output layer when set.
    bool fsl_output_layer_only = false;
    /// L2 penalty (weight_decay / 2) * |W|^2 on weights, not biases. Not part of the recorded loss.
    double weight_decay = 0.01;

    void validate() const;
};

/// Desk-scale defaults (hidden 128, 64).
ProjectorConfig desk_preset();
/// Reference stack 2048 -> 1024 -> 512 -> 512 -> 300 (for 2048-d features and a 300-d space).
ProjectorConfig full_preset();

/// max(0, |c_P - h| - mu r_P) + sum over negatives Q of max(0, nu r_Q - |c_Q - h|)
double ranking_loss(std::span<const double> h, const BallRef& positive, std::span<const BallRef> negatives,
                    double mu, double nu);

/// Adds d(ranking_loss)/dh to `grad_h`; zero at kinks and at coincident points. Returns the loss.
double ranking_loss_gradient(std::span<const double> h, const BallRef& positive, std::span<const BallRef> negatives,
                             double mu, double nu, std::span<double> grad_h);

/// Adds the gradient of ranking_loss(mlp.forward(f), ...) with respect to every MLP
/// parameter to `grad` (same layout as Mlp::parameters()). Returns the loss.
double accumulate_parameter_gradient(const Mlp& mlp, std::span<const double> f, const BallRef& positive,
                                     std::span<const BallRef> negatives, double mu, double nu, std::span<double> grad);

struct ProjectorTraining {
    Mlp mlp;
    /// Mean ranking loss over the training set after each epoch.
    std::vector<double> loss_history;
};

/// Base learning from a seeded initialisation. Every label needs a ball and a negative set.
ProjectorTraining train_base(const FeatureDataset& features, const BallSpace& space, const NegativeSets& negatives,
                             const ProjectorConfig& config);

/// Few-shot fine-tuning of a copy of `mlp` on novel-class support examples.
/// Throws std::invalid_argument if a support label was a base class.
ProjectorTraining finetune_fewshot(const Mlp& mlp, const FeatureDataset& support, const BallSpace& space,
                                   const NegativeSets& negatives, const ProjectorConfig& config);

/// Mean ranking loss of `mlp` over a dataset.
double mean_ranking_loss(const Mlp& mlp, const FeatureDataset& data, const BallSpace& space,
                         const NegativeSets& negatives, const ProjectorConfig& config);

struct Candidate {
    std::string label;
    BallRef ball;
};

struct Prediction {
    std::size_t index = 0;  ///< into the candidate list
    std::string label;
    double u_value = 0.0;   ///< |c_P - h| - r_P for the chosen class
    bool inside = false;
    /// Non-candidate concepts whose balls contain h, deepest first. Filled by annotate_ancestors().
    std::vector<std::string> containing_ancestors;
};

/// Among candidates with U <= 0 the smallest U wins; otherwise the nearest centre.
/// Ties go to the earlier candidate. Throws std::invalid_argument on an empty list.
Prediction classify(std::span<const double> h, std::span<const Candidate> candidates);

/// Concepts whose balls contain h, deepest level first (ties by concept order).
std::vector<std::string> ancestor_report(std::span<const double> h, const BallSpace& space, const Ich& ich);

void annotate_ancestors(Prediction& prediction, std::span<const double> h, std::span<const Candidate> candidates,
                        const BallSpace& space, const Ich& ich);

/// Candidate list for the given labels, in order.
std::vector<Candidate> make_candidates(const BallSpace& space, std::span<const std::string> labels);

}  // namespace geoball
