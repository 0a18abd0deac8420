#pragma once

#include "geoball/linalg.hpp"
#include "geoball/ontology.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace geoball {

/// Read-only view of one n-ball.
struct BallRef {
    std::span<const double> centre;
    double radius;
};

/// One n-ball per concept: centre c_P in R^n and radius r_P.
/// Centres are stored contiguously, concept i occupying [i*dim, (i+1)*dim).
class BallSpace {
public:
    BallSpace() = default;
    BallSpace(std::size_t dim, std::vector<std::string> concepts);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& concepts() const noexcept { return names_; }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    std::optional<std::size_t> find(std::string_view name) const;
    /// Throws std::out_of_range naming the missing concept.
    std::size_t index(std::string_view name) const;

    std::span<double> centre(std::size_t i) { return {centres_.data() + i * dim_, dim_}; }
    std::span<const double> centre(std::size_t i) const { return {centres_.data() + i * dim_, dim_}; }
    double& radius(std::size_t i) { return radii_[i]; }
    double radius(std::size_t i) const { return radii_[i]; }
    BallRef ball(std::size_t i) const { return {centre(i), radii_.at(i)}; }

    std::span<double> centres() noexcept { return centres_; }
    std::span<const double> centres() const noexcept { return centres_; }
    std::span<double> radii() noexcept { return radii_; }
    std::span<const double> radii() const noexcept { return radii_; }

    bool operator==(const BallSpace&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> centres_;
    std::vector<double> radii_;
};

enum class Optimizer { Sgd, Adam };

struct EmbedConfig {
    std::size_t dim = 300;
    double gamma = 0.0;
    /// Separate margin for disjointness hinges; shares `gamma` when unset.
    std::optional<double> gamma_disjoint;
    double psi = 0.1;
    double phi = 1.0;
    double learning_rate = 0.05;
    /// Step size at epoch t is learning_rate / (1 + lr_decay * t).
    double lr_decay = 0.01;
    Optimizer optimizer = Optimizer::Sgd;
    int epochs = 500;
    std::size_t batch_size = 64;
    std::uint64_t seed = 42;
    /// Radii are clamped to at least this after every step.
    double radius_clamp_min = 1e-4;
    /// Initial radius is the level floor plus this offset.
    double radius_init_offset = 0.1;
    /// Reject an epoch whose total loss exceeds the previous one and halve the step;
    /// accepted epochs let the step grow back by 25% up to its scheduled value.
    bool monotone = false;

    double disjoint_margin() const { return gamma_disjoint.value_or(gamma); }
    /// Throws std::invalid_argument if a field is out of range.
    void validate() const;
};

// Individual loss terms. Vectors must share a dimension (std::invalid_argument otherwise).

/// max(0, |c_P - c_Q| + r_P - r_Q - gamma)
double subsumption_hinge(std::span<const double> c_p, std::span<const double> c_q, double r_p, double r_q,
                         double gamma);
/// max(0, -|c_P - c_Q| + r_P + r_Q + gamma)
double disjointness_hinge(std::span<const double> c_p, std::span<const double> c_q, double r_p, double r_q,
                          double gamma);
/// max(0, psi * sqrt(N_h - L) - r). Throws if level is outside [1, n_h].
double radius_floor_penalty(double r, int n_h, int level, double psi);
/// psi * sqrt(N_h - L)
double radius_floor(int n_h, int level, double psi);
/// N(P) * | |c_P| - phi |
double center_norm_penalty(std::span<const double> c, int n_occurrences, double phi);

struct LossBreakdown {
    double subsumption = 0.0;
    double disjointness = 0.0;
    double radius_floor = 0.0;
    double centre_norm = 0.0;

    double hinge() const { return subsumption + disjointness; }
    double total() const { return subsumption + disjointness + radius_floor + centre_norm; }
};

/// Axioms and per-concept statistics the loss is defined over. Concept ids
/// index the BallSpace.
struct EmbeddingProblem {
    const Ich& ich;
    std::span<const DisjointPair> disjoint;
    const HierarchyStats& stats;
};

LossBreakdown total_loss(const BallSpace& space, const EmbeddingProblem& problem, const EmbedConfig& config);

struct SpaceGradient {
    std::vector<double> centres;  ///< same layout as BallSpace::centres()
    std::vector<double> radii;
};

/// Analytic (sub)gradient of total_loss; zero at hinge kinks and coincident centres.
SpaceGradient loss_gradients(const BallSpace& space, const EmbeddingProblem& problem, const EmbedConfig& config);

/// Centres uniform on the sphere of radius phi, radii at their level floor plus the init offset.
BallSpace init_space(const std::vector<std::string>& concepts, const HierarchyStats& stats,
                     const EmbedConfig& config);

struct EpochRecord {
    int epoch = 0;
    LossBreakdown loss;
    double learning_rate = 0.0;
    bool accepted = true;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainedSpace {
    BallSpace space;
    TrainHistory history;
};

/// Mini-batch (sub)gradient descent over the axioms. Deterministic for a given seed.
/// Throws TrainingError if any loss term becomes non-finite.
TrainedSpace train_embeddings(const Ontology& ontology, const Ich& ich, const HierarchyStats& stats,
                              const EmbedConfig& config, const EpochCallback& on_epoch = {});

}  // namespace geoball
