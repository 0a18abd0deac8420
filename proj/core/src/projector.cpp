#include "geoball/projector.hpp"

#include "detail/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace geoball {

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes))
{
    if (sizes_.size() < 2) throw std::invalid_argument("an MLP needs input and output sizes");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw std::invalid_argument("layer sizes must be positive");
        offsets_.push_back(total);
        total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    params_.assign(total, 0.0);
}

Mlp Mlp::initialized(std::vector<std::size_t> layer_sizes, std::uint64_t seed)
{
    Mlp mlp(std::move(layer_sizes));
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
        const double a = std::sqrt(6.0 / static_cast<double>(mlp.sizes_[l]));
        std::uniform_real_distribution<double> u(-a, a);
        for (double& w : mlp.weights(l)) w = u(rng);
    }
    return mlp;
}

std::span<double> Mlp::weights(std::size_t l)
{
    return {params_.data() + offsets_.at(l), sizes_[l + 1] * sizes_[l]};
}
std::span<const double> Mlp::weights(std::size_t l) const
{
    return {params_.data() + offsets_.at(l), sizes_[l + 1] * sizes_[l]};
}
std::span<double> Mlp::biases(std::size_t l)
{
    return {params_.data() + offsets_.at(l) + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
}
std::span<const double> Mlp::biases(std::size_t l) const
{
    return {params_.data() + offsets_.at(l) + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
}

namespace {

// Pre-activations of every layer; the last entry is the output h.
std::vector<Vec> forward_trace(const Mlp& mlp, std::span<const double> f)
{
    require_same_dim(f.size(), mlp.input_dim(), "Mlp::forward");
    std::vector<Vec> z;
    z.reserve(mlp.num_layers());
    Vec a(f.begin(), f.end());
    for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
        const auto w = mlp.weights(l);
        const auto b = mlp.biases(l);
        const std::size_t in = a.size();
        Vec out(b.begin(), b.end());
        for (std::size_t r = 0; r < out.size(); ++r) out[r] += dot(w.subspan(r * in, in), a);
        z.push_back(out);
        if (l + 1 < mlp.num_layers()) {
            for (double& x : out) x = std::max(0.0, x);
        }
        a = std::move(out);
    }
    return z;
}

}  // namespace

Vec Mlp::forward(std::span<const double> f) const { return forward_trace(*this, f).back(); }

void ProjectorConfig::validate() const
{
    auto fail = [](const char* msg) { throw std::invalid_argument(std::string("ProjectorConfig: ") + msg); };
    if (!(mu > 0.0)) fail("mu must be positive");
    if (!(nu > 0.0)) fail("nu must be positive");
    if (!(learning_rate > 0.0) || !(fsl_learning_rate > 0.0)) fail("learning rates must be positive");
    if (epochs_bl < 0 || epochs_fsl < 0) fail("epoch counts must be non-negative");
    if (batch_size == 0) fail("batch_size must be positive");
    if (weight_decay < 0.0) fail("weight_decay must be non-negative");
}

ProjectorConfig desk_preset() { return ProjectorConfig{}; }

ProjectorConfig full_preset()
{
    ProjectorConfig c;
    c.hidden = {1024, 512, 512};
    return c;
}

double ranking_loss(std::span<const double> h, const BallRef& positive, std::span<const BallRef> negatives,
                    double mu, double nu)
{
    require_same_dim(h.size(), positive.centre.size(), "ranking_loss");
    double loss = std::max(0.0, distance(positive.centre, h) - mu * positive.radius);
    for (const auto& q : negatives) {
        require_same_dim(h.size(), q.centre.size(), "ranking_loss");
        loss += std::max(0.0, nu * q.radius - distance(q.centre, h));
    }
    return loss;
}

double ranking_loss_gradient(std::span<const double> h, const BallRef& positive, std::span<const BallRef> negatives,
                             double mu, double nu, std::span<double> grad_h)
{
    require_same_dim(h.size(), positive.centre.size(), "ranking_loss_gradient");
    require_same_dim(h.size(), grad_h.size(), "ranking_loss_gradient");
    double loss = 0.0;
    // d|h - c|/dh = (h - c)/|h - c|
    const double dp = distance(positive.centre, h);
    if (dp - mu * positive.radius > 0.0) {
        loss += dp - mu * positive.radius;
        for (std::size_t k = 0; k < h.size(); ++k) grad_h[k] += (h[k] - positive.centre[k]) / dp;
    }
    for (const auto& q : negatives) {
        require_same_dim(h.size(), q.centre.size(), "ranking_loss_gradient");
        const double dq = distance(q.centre, h);
        if (nu * q.radius - dq <= 0.0) continue;
        loss += nu * q.radius - dq;
        if (dq == 0.0) continue;
        for (std::size_t k = 0; k < h.size(); ++k) grad_h[k] -= (h[k] - q.centre[k]) / dq;
    }
    return loss;
}

double accumulate_parameter_gradient(const Mlp& mlp, std::span<const double> f, const BallRef& positive,
                                     std::span<const BallRef> negatives, double mu, double nu, std::span<double> grad)
{
    require_same_dim(grad.size(), mlp.parameters().size(), "accumulate_parameter_gradient");
    const auto z = forward_trace(mlp, f);
    Vec delta(mlp.output_dim(), 0.0);
    const double loss = ranking_loss_gradient(z.back(), positive, negatives, mu, nu, delta);

    for (std::size_t l = mlp.num_layers(); l-- > 0;) {
        const std::size_t in = mlp.layer_sizes()[l];
        const std::size_t out = mlp.layer_sizes()[l + 1];
        const auto w = mlp.weights(l);
        auto gw = grad.subspan(mlp.layer_offset(l), out * in);
        auto gb = grad.subspan(mlp.layer_offset(l) + out * in, out);

        for (std::size_t r = 0; r < out; ++r) {
            gb[r] += delta[r];
            if (delta[r] == 0.0) continue;
            auto row = gw.subspan(r * in, in);
            if (l == 0) {
                axpy(delta[r], f, row);
            } else {
                const auto& zin = z[l - 1];
                for (std::size_t c = 0; c < in; ++c) {
                    if (zin[c] > 0.0) row[c] += delta[r] * zin[c];
                }
            }
        }
        if (l == 0) break;
        Vec prev(in, 0.0);
        for (std::size_t r = 0; r < out; ++r) {
            if (delta[r] != 0.0) axpy(delta[r], w.subspan(r * in, in), prev);
        }
        const auto& zin = z[l - 1];
        for (std::size_t c = 0; c < in; ++c) {
            if (zin[c] <= 0.0) prev[c] = 0.0;
        }
        delta = std::move(prev);
    }
    return loss;
}

namespace {

struct Targets {
    BallRef positive;
    std::vector<BallRef> negatives;
};

std::map<std::string, Targets> resolve_targets(const FeatureDataset& data, const BallSpace& space,
                                               const NegativeSets& negatives)
{
    std::map<std::string, Targets> out;
    for (const auto& label : data.labels()) {
        const auto idx = space.find(label);
        if (!idx) throw std::invalid_argument("label '" + label + "' has no ball");
        const auto it = negatives.negatives.find(label);
        if (it == negatives.negatives.end()) throw std::invalid_argument("label '" + label + "' has no negative set");
        Targets t{space.ball(*idx), {}};
        for (const auto& q : it->second) t.negatives.push_back(space.ball(space.index(q)));
        out.emplace(label, std::move(t));
    }
    return out;
}

double mean_loss(const Mlp& mlp, const FeatureDataset& data, const std::map<std::string, Targets>& targets,
                 const ProjectorConfig& config)
{
    if (data.examples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& ex : data.examples) {
        const auto& t = targets.at(ex.label);
        total += ranking_loss(mlp.forward(ex.f), t.positive, t.negatives, config.mu, config.nu);
    }
    return total / static_cast<double>(data.examples.size());
}

void fit(Mlp& mlp, const FeatureDataset& data, const std::map<std::string, Targets>& targets,
         const ProjectorConfig& config, int epochs, double lr, std::uint64_t seed, bool output_only,
         std::vector<double>& history)
{
    const auto params = mlp.parameters();
    std::vector<double> grad(params.size(), 0.0);
    detail::ParameterStepper stepper(config.optimizer, params.size());
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(data.examples.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t first = output_only ? mlp.layer_offset(mlp.num_layers() - 1) : 0;
    const std::size_t batch = std::max<std::size_t>(1, config.batch_size);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t lo = 0; lo < order.size(); lo += batch) {
            const std::size_t hi = std::min(order.size(), lo + batch);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = lo; k < hi; ++k) {
                const auto& ex = data.examples[order[k]];
                const auto& t = targets.at(ex.label);
                accumulate_parameter_gradient(mlp, ex.f, t.positive, t.negatives, config.mu, config.nu, grad);
            }
            const double scale = 1.0 / static_cast<double>(hi - lo);
            for (double& g : grad) g *= scale;
            if (config.weight_decay > 0.0) {
                for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
                    const auto off = mlp.layer_offset(l);
                    const auto w = mlp.weights(l);
                    for (std::size_t i = 0; i < w.size(); ++i) grad[off + i] += config.weight_decay * w[i];
                }
            }
            stepper.tick();
            stepper.step(params.subspan(first), std::span<const double>(grad).subspan(first), first, lr);
        }
        history.push_back(mean_loss(mlp, data, targets, config));
    }
}

}  // namespace

ProjectorTraining train_base(const FeatureDataset& features, const BallSpace& space, const NegativeSets& negatives,
                             const ProjectorConfig& config)
{
    config.validate();
    const auto targets = resolve_targets(features, space, negatives);
    std::vector<std::size_t> sizes{features.dim};
    sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
    sizes.push_back(space.dim());

    ProjectorTraining out{Mlp::initialized(sizes, config.seed), {}};
    out.mlp.base_labels = features.labels();
    fit(out.mlp, features, targets, config, config.epochs_bl, config.learning_rate, config.seed + 1, false,
        out.loss_history);
    return out;
}

ProjectorTraining finetune_fewshot(const Mlp& mlp, const FeatureDataset& support, const BallSpace& space,
                                   const NegativeSets& negatives, const ProjectorConfig& config)
{
    config.validate();
    for (const auto& label : support.labels()) {
        if (std::find(mlp.base_labels.begin(), mlp.base_labels.end(), label) != mlp.base_labels.end()) {
            throw std::invalid_argument("few-shot class '" + label + "' is also a base class");
        }
    }
    const auto targets = resolve_targets(support, space, negatives);
    ProjectorTraining out{mlp, {}};
    fit(out.mlp, support, targets, config, config.epochs_fsl, config.fsl_learning_rate, config.seed + 2,
        config.fsl_output_layer_only, out.loss_history);
    return out;
}

double mean_ranking_loss(const Mlp& mlp, const FeatureDataset& data, const BallSpace& space,
                         const NegativeSets& negatives, const ProjectorConfig& config)
{
    return mean_loss(mlp, data, resolve_targets(data, space, negatives), config);
}

Prediction classify(std::span<const double> h, std::span<const Candidate> candidates)
{
    if (candidates.empty()) throw std::invalid_argument("classify needs at least one candidate");
    std::size_t inside_best = candidates.size();
    double inside_u = 0.0;
    std::size_t nearest = 0;
    double nearest_d = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& ball = candidates[i].ball;
        require_same_dim(h.size(), ball.centre.size(), "classify");
        const double d = distance(ball.centre, h);
        const double u = d - ball.radius;
        if (u <= 0.0 && (inside_best == candidates.size() || u < inside_u)) {
            inside_best = i;
            inside_u = u;
        }
        if (i == 0 || d < nearest_d) {
            nearest = i;
            nearest_d = d;
        }
    }
    Prediction p;
    p.index = inside_best != candidates.size() ? inside_best : nearest;
    p.label = candidates[p.index].label;
    p.u_value = distance(candidates[p.index].ball.centre, h) - candidates[p.index].ball.radius;
    p.inside = p.u_value <= 0.0;
    return p;
}

std::vector<std::string> ancestor_report(std::span<const double> h, const BallSpace& space, const Ich& ich)
{
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto b = space.ball(i);
        if (distance(b.centre, h) <= b.radius) hits.push_back(i);
    }
    auto depth = [&](std::size_t i) { return i < ich.num_concepts() ? ich.depth(static_cast<ConceptId>(i)) : 1; };
    std::stable_sort(hits.begin(), hits.end(), [&](std::size_t a, std::size_t b) { return depth(a) > depth(b); });
    std::vector<std::string> out;
    for (auto i : hits) out.push_back(space.name(i));
    return out;
}

void annotate_ancestors(Prediction& prediction, std::span<const double> h, std::span<const Candidate> candidates,
                        const BallSpace& space, const Ich& ich)
{
    prediction.containing_ancestors.clear();
    for (auto& name : ancestor_report(h, space, ich)) {
        const bool is_candidate = std::any_of(candidates.begin(), candidates.end(),
                                              [&](const Candidate& c) { return c.label == name; });
        if (!is_candidate) prediction.containing_ancestors.push_back(std::move(name));
    }
}

std::vector<Candidate> make_candidates(const BallSpace& space, std::span<const std::string> labels)
{
    std::vector<Candidate> out;
    for (const auto& l : labels) out.push_back({l, space.ball(space.index(l))});
    return out;
}

}  // namespace geoball
