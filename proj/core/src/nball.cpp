#include "geoball/nball.hpp"

#include "geoball/error.hpp"
#include "detail/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace geoball {

// ---------------------------------------------------------------------------
// BallSpace

BallSpace::BallSpace(std::size_t dim, std::vector<std::string> concepts)
    : dim_(dim), names_(std::move(concepts)), centres_(dim * names_.size(), 0.0), radii_(names_.size(), 0.0)
{
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (!index_.emplace(names_[i], i).second) {
            throw std::invalid_argument("duplicate concept '" + names_[i] + "' in ball space");
        }
    }
}

std::optional<std::size_t> BallSpace::find(std::string_view name) const
{
    if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
    return std::nullopt;
}

std::size_t BallSpace::index(std::string_view name) const
{
    if (auto i = find(name)) return *i;
    throw std::out_of_range("no ball for concept '" + std::string(name) + "'");
}

void EmbedConfig::validate() const
{
    auto fail = [](const char* msg) { throw std::invalid_argument(std::string("EmbedConfig: ") + msg); };
    if (dim < 2) fail("dim must be at least 2");
    if (!(psi > 0.0)) fail("psi must be positive");
    if (!(phi > 0.0)) fail("phi must be positive");
    if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
    if (lr_decay < 0.0) fail("lr_decay must be non-negative");
    if (epochs < 0) fail("epochs must be non-negative");
    if (batch_size == 0) fail("batch_size must be positive");
    if (!(radius_clamp_min > 0.0)) fail("radius_clamp_min must be positive");
    if (radius_init_offset < 0.0) fail("radius_init_offset must be non-negative");
}

// ---------------------------------------------------------------------------
// Loss terms

double subsumption_hinge(std::span<const double> c_p, std::span<const double> c_q, double r_p, double r_q,
                         double gamma)
{
    require_same_dim(c_p.size(), c_q.size(), "subsumption_hinge");
    return std::max(0.0, distance(c_p, c_q) + r_p - r_q - gamma);
}

double disjointness_hinge(std::span<const double> c_p, std::span<const double> c_q, double r_p, double r_q,
                          double gamma)
{
    require_same_dim(c_p.size(), c_q.size(), "disjointness_hinge");
    return std::max(0.0, -distance(c_p, c_q) + r_p + r_q + gamma);
}

double radius_floor(int n_h, int level, double psi)
{
    if (level < 1 || level > n_h) {
        throw std::out_of_range("level " + std::to_string(level) + " outside [1, " + std::to_string(n_h) + "]");
    }
    return psi * std::sqrt(static_cast<double>(n_h - level));
}

double radius_floor_penalty(double r, int n_h, int level, double psi)
{
    return std::max(0.0, radius_floor(n_h, level, psi) - r);
}

double center_norm_penalty(std::span<const double> c, int n_occurrences, double phi)
{
    return n_occurrences * std::abs(norm(c) - phi);
}

namespace {

void check_coverage(const BallSpace& space, const EmbeddingProblem& problem)
{
    const std::size_t n = space.size();
    auto missing = [&](ConceptId c) {
        throw std::out_of_range("no ball for concept id " + std::to_string(c) + " mentioned by an axiom");
    };
    for (const auto& p : problem.ich.pairs()) {
        if (p.child >= n) missing(p.child);
        if (p.parent >= n) missing(p.parent);
    }
    for (const auto& d : problem.disjoint) {
        if (d.second >= n) missing(d.second);
        if (d.first >= n) missing(d.first);
    }
    if (problem.stats.level.size() != n || problem.stats.occurrences.size() != n) {
        throw std::invalid_argument("hierarchy statistics do not match the ball space size");
    }
}

// Unit vector (c_p - c_q)/|c_p - c_q| written into `out`; zero when the centres coincide.
double direction(std::span<const double> c_p, std::span<const double> c_q, std::span<double> out)
{
    const double d = distance(c_p, c_q);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = d > 0.0 ? (c_p[k] - c_q[k]) / d : 0.0;
    return d;
}

struct GradientAccumulator {
    const BallSpace& space;
    SpaceGradient& grad;
    std::vector<double> dir;

    std::span<double> gc(std::size_t i) { return {grad.centres.data() + i * space.dim(), space.dim()}; }

    void subsumption(ConceptId p, ConceptId q, double gamma, double weight)
    {
        const double d = direction(space.centre(p), space.centre(q), dir);
        if (d + space.radius(p) - space.radius(q) - gamma <= 0.0) return;
        axpy(weight, dir, gc(p));
        axpy(-weight, dir, gc(q));
        grad.radii[p] += weight;
        grad.radii[q] -= weight;
    }

    void disjointness(ConceptId p, ConceptId q, double gamma, double weight)
    {
        const double d = direction(space.centre(p), space.centre(q), dir);
        if (-d + space.radius(p) + space.radius(q) + gamma <= 0.0) return;
        axpy(-weight, dir, gc(p));
        axpy(weight, dir, gc(q));
        grad.radii[p] += weight;
        grad.radii[q] += weight;
    }

    void regularizers(const HierarchyStats& stats, const EmbedConfig& config, double weight)
    {
        for (std::size_t i = 0; i < space.size(); ++i) {
            const int level = stats.level[i];
            if (radius_floor(stats.total_levels, level, config.psi) - space.radius(i) > 0.0) {
                grad.radii[i] -= weight;
            }
            const auto c = space.centre(i);
            const double len = norm(c);
            const double gap = len - config.phi;
            if (gap == 0.0 || len == 0.0 || stats.occurrences[i] == 0) continue;
            const double scale = weight * stats.occurrences[i] * (gap > 0.0 ? 1.0 : -1.0) / len;
            axpy(scale, c, gc(i));
        }
    }
};

SpaceGradient zero_gradient(const BallSpace& space)
{
    return {std::vector<double>(space.centres().size(), 0.0), std::vector<double>(space.size(), 0.0)};
}

}  // namespace

LossBreakdown total_loss(const BallSpace& space, const EmbeddingProblem& problem, const EmbedConfig& config)
{
    check_coverage(space, problem);
    LossBreakdown loss;
    for (const auto& p : problem.ich.pairs()) {
        loss.subsumption += subsumption_hinge(space.centre(p.child), space.centre(p.parent),
                                              space.radius(p.child), space.radius(p.parent), config.gamma);
    }
    const double gamma_d = config.disjoint_margin();
    for (const auto& d : problem.disjoint) {
        loss.disjointness += disjointness_hinge(space.centre(d.first), space.centre(d.second),
                                                space.radius(d.first), space.radius(d.second), gamma_d);
    }
    const auto& stats = problem.stats;
    for (std::size_t i = 0; i < space.size(); ++i) {
        loss.radius_floor += radius_floor_penalty(space.radius(i), stats.total_levels, stats.level[i], config.psi);
        loss.centre_norm += center_norm_penalty(space.centre(i), stats.occurrences[i], config.phi);
    }
    return loss;
}

SpaceGradient loss_gradients(const BallSpace& space, const EmbeddingProblem& problem, const EmbedConfig& config)
{
    check_coverage(space, problem);
    auto grad = zero_gradient(space);
    GradientAccumulator acc{space, grad, std::vector<double>(space.dim())};
    for (const auto& p : problem.ich.pairs()) acc.subsumption(p.child, p.parent, config.gamma, 1.0);
    for (const auto& d : problem.disjoint) acc.disjointness(d.first, d.second, config.disjoint_margin(), 1.0);
    acc.regularizers(problem.stats, config, 1.0);
    return grad;
}

BallSpace init_space(const std::vector<std::string>& concepts, const HierarchyStats& stats,
                     const EmbedConfig& config)
{
    config.validate();
    if (stats.level.size() != concepts.size()) {
        throw std::invalid_argument("hierarchy statistics do not match the concept list");
    }
    BallSpace space(config.dim, concepts);
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < space.size(); ++i) {
        auto c = space.centre(i);
        double len = 0.0;
        while (len == 0.0) {
            for (double& x : c) x = gauss(rng);
            len = norm(c);
        }
        for (double& x : c) x *= config.phi / len;
        const double floor = radius_floor(stats.total_levels, stats.level[i], config.psi);
        space.radius(i) = std::max(floor + config.radius_init_offset, config.radius_clamp_min);
    }
    return space;
}

namespace {

struct Axiom {
    bool disjoint;
    ConceptId a;
    ConceptId b;
};

void check_finite(const LossBreakdown& loss, int epoch)
{
    auto check = [epoch](double v, const char* term) {
        if (!std::isfinite(v)) {
            throw TrainingError(std::string("non-finite ") + term + " loss at epoch " + std::to_string(epoch));
        }
    };
    check(loss.subsumption, "subsumption");
    check(loss.disjointness, "disjointness");
    check(loss.radius_floor, "radius-floor");
    check(loss.centre_norm, "centre-norm");
}

}  // namespace

TrainedSpace train_embeddings(const Ontology& ontology, const Ich& ich, const HierarchyStats& stats,
                              const EmbedConfig& config, const EpochCallback& on_epoch)
{
    config.validate();
    TrainedSpace out{init_space(ontology.concepts(), stats, config), {}};
    BallSpace& space = out.space;
    const EmbeddingProblem problem{ich, ontology.disjoint_axioms(), stats};

    std::vector<Axiom> axioms;
    axioms.reserve(ich.size() + problem.disjoint.size());
    for (const auto& p : ich.pairs()) axioms.push_back({false, p.child, p.parent});
    for (const auto& d : problem.disjoint) axioms.push_back({true, d.first, d.second});

    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    detail::ParameterStepper stepper(config.optimizer, space.centres().size() + space.size());
    auto grad = zero_gradient(space);
    GradientAccumulator acc{space, grad, std::vector<double>(space.dim())};

    LossBreakdown previous = total_loss(space, problem, config);
    check_finite(previous, 0);
    double backoff = 1.0;
    const std::size_t n_axioms = axioms.size();
    const std::size_t batch = std::max<std::size_t>(1, std::min(config.batch_size, std::max<std::size_t>(n_axioms, 1)));

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = config.learning_rate / (1.0 + config.lr_decay * (epoch - 1)) * backoff;
        std::shuffle(axioms.begin(), axioms.end(), rng);

        std::optional<BallSpace> snapshot;
        std::optional<detail::ParameterStepper> stepper_snapshot;
        if (config.monotone) {
            snapshot = space;
            stepper_snapshot = stepper;
        }

        const std::size_t n_batches = n_axioms == 0 ? 1 : (n_axioms + batch - 1) / batch;
        for (std::size_t bi = 0; bi < n_batches; ++bi) {
            std::fill(grad.centres.begin(), grad.centres.end(), 0.0);
            std::fill(grad.radii.begin(), grad.radii.end(), 0.0);
            const std::size_t lo = bi * batch;
            const std::size_t hi = std::min(n_axioms, lo + batch);
            for (std::size_t k = lo; k < hi; ++k) {
                const auto& ax = axioms[k];
                if (ax.disjoint) {
                    acc.disjointness(ax.a, ax.b, config.disjoint_margin(), 1.0);
                } else {
                    acc.subsumption(ax.a, ax.b, config.gamma, 1.0);
                }
            }
            // Per-concept terms are spread over the batches of an epoch.
            const double share = n_axioms == 0 ? 1.0 : static_cast<double>(hi - lo) / static_cast<double>(n_axioms);
            acc.regularizers(stats, config, share);

            stepper.tick();
            stepper.step(space.centres(), grad.centres, 0, lr);
            stepper.step(space.radii(), grad.radii, space.centres().size(), lr);
            for (double& r : space.radii()) r = std::max(r, config.radius_clamp_min);
        }

        EpochRecord rec{epoch, total_loss(space, problem, config), lr, true};
        check_finite(rec.loss, epoch);
        if (config.monotone && rec.loss.total() > previous.total()) {
            space = std::move(*snapshot);
            stepper = std::move(*stepper_snapshot);
            backoff *= 0.5;
            rec.loss = previous;
            rec.accepted = false;
        } else {
            backoff = std::min(1.0, backoff * 1.25);
        }
        previous = rec.loss;
        out.history.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    return out;
}

}  // namespace geoball
