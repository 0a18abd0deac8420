#include "geoball/features.hpp"

#include "geoball/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <stdexcept>

namespace geoball {

std::vector<std::string> FeatureDataset::labels() const
{
    std::vector<std::string> out;
    for (const auto& e : examples) {
        if (std::find(out.begin(), out.end(), e.label) == out.end()) out.push_back(e.label);
    }
    return out;
}

namespace {

std::string_view trim(std::string_view s)
{
    const auto* ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

double parse_double(std::string_view field, std::size_t line, std::size_t column)
{
    field = trim(field);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError("invalid number '" + std::string(field) + "'", line, column);
    }
    return v;
}

}  // namespace

FeatureDataset parse_feature_csv(std::string_view text, Split split)
{
    FeatureDataset data;
    data.split = split;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = trim(text.substr(0, nl));
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("label,", 0) == 0) continue;

        LabeledFeature ex;
        std::size_t start = 0;
        std::size_t field = 0;
        while (start <= line.size()) {
            const auto comma = line.find(',', start);
            const auto piece = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            if (field == 0) {
                ex.label = std::string(trim(piece));
                if (ex.label.empty()) throw ParseError("empty label", line_no, 1);
            } else {
                ex.f.push_back(parse_double(piece, line_no, start + 1));
            }
            ++field;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (ex.f.empty()) throw ParseError("row has no feature values", line_no);
        if (data.examples.empty()) {
            data.dim = ex.f.size();
        } else if (ex.f.size() != data.dim) {
            throw ParseError("expected " + std::to_string(data.dim) + " features, found " + std::to_string(ex.f.size()),
                             line_no);
        }
        data.examples.push_back(std::move(ex));
    }
    return data;
}

std::string to_feature_csv(const FeatureDataset& data)
{
    std::string out;
    char buf[32];
    for (const auto& ex : data.examples) {
        out += ex.label;
        for (double v : ex.f) {
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
            out += ',';
            out.append(buf, ptr);
        }
        out += '\n';
    }
    return out;
}

SyntheticFeatures generate_synthetic_features(const Ontology& ontology, const SyntheticFeatureConfig& config,
                                              const BallSpace* space)
{
    if (ontology.leaves().size() < 2) throw std::invalid_argument("synthetic features need at least two leaves");
    if (config.dim == 0 || config.latent_dim == 0 || config.latent_dim > config.dim) {
        throw std::invalid_argument("latent_dim must lie in [1, dim]");
    }
    if (config.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be non-negative");
    if (config.alignment < 0.0 || config.alignment > 1.0) throw std::invalid_argument("alignment must lie in [0, 1]");
    const bool aligned = space != nullptr && config.alignment > 0.0;
    if (aligned && config.latent_dim + space->dim() > config.dim) {
        throw std::invalid_argument("latent_dim plus the ball space dimension must not exceed dim");
    }
    const std::size_t n_basis = config.latent_dim + (aligned ? space->dim() : 0);

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Orthonormal embedding of the latent space (Gram-Schmidt on Gaussian columns).
    std::vector<Vec> basis;
    while (basis.size() < n_basis) {
        Vec v(config.dim);
        for (double& x : v) x = gauss(rng);
        for (const auto& b : basis) axpy(-dot(v, b), b, v);
        const double len = norm(v);
        if (len < 1e-8) continue;
        for (double& x : v) x /= len;
        basis.push_back(std::move(v));
    }

    // Latent anchors top-down: roots scatter around the origin, children around their parents.
    const auto ich = compute_ich(ontology);
    std::vector<ConceptId> order(ontology.size());
    for (ConceptId c = 0; c < order.size(); ++c) order[c] = c;
    std::stable_sort(order.begin(), order.end(), [&](ConceptId a, ConceptId b) { return ich.depth(a) < ich.depth(b); });
    std::vector<Vec> latent(ontology.size(), Vec(config.latent_dim, 0.0));
    for (ConceptId c : order) {
        const auto& parents = ontology.told_parents(c);
        const double scale = config.root_spread * std::pow(config.level_decay, static_cast<double>(ich.depth(c) - 1));
        auto& z = latent[c];
        for (ConceptId p : parents) axpy(1.0 / static_cast<double>(parents.size()), latent[p], z);
        for (double& x : z) x += scale * gauss(rng);
    }

    SyntheticFeatures out;
    out.base = {config.dim, Split::Base, {}};
    out.novel = {config.dim, Split::Novel, {}};

    std::vector<std::string> novel = config.novel_labels;
    if (novel.empty() && config.novel_count > 0) {
        if (config.novel_count >= ontology.leaves().size()) {
            throw std::invalid_argument("novel_count must leave at least one base class");
        }
        std::vector<std::string> leaves;
        for (ConceptId l : ontology.leaves()) leaves.push_back(ontology.name(l));
        std::shuffle(leaves.begin(), leaves.end(), rng);
        novel.assign(leaves.begin(), leaves.begin() + static_cast<std::ptrdiff_t>(config.novel_count));
    }
    for (const auto& n : novel) {
        const auto id = ontology.id(n);
        if (!ontology.is_leaf(id)) throw std::invalid_argument("novel label '" + n + "' is not a leaf");
    }

    for (ConceptId leaf : ontology.leaves()) {
        const auto& label = ontology.name(leaf);
        Vec anchor(config.dim, 0.0);
        const double own = aligned ? 1.0 - config.alignment : 1.0;
        for (std::size_t k = 0; k < config.latent_dim; ++k) axpy(own * latent[leaf][k], basis[k], anchor);
        if (aligned) {
            const auto c = space->centre(space->index(label));
            const double w = config.alignment * config.alignment_scale;
            for (std::size_t k = 0; k < c.size(); ++k) axpy(w * c[k], basis[config.latent_dim + k], anchor);
        }
        const bool is_novel = std::find(novel.begin(), novel.end(), label) != novel.end();
        auto& target = is_novel ? out.novel : out.base;
        for (std::size_t i = 0; i < config.per_class; ++i) {
            Vec f = anchor;
            for (double& x : f) x += config.noise_sigma * gauss(rng);
            target.examples.push_back({label, std::move(f)});
        }
        out.anchors.push_back({label, std::move(anchor)});
    }
    return out;
}

}  // namespace geoball
