#include "geoball/io.hpp"

#include "detail/json_io.hpp"
#include "geoball/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace geoball {

using ojson = nlohmann::ordered_json;

namespace {

ojson parse_json(std::string_view text, const char* what)
{
    try {
        return ojson::parse(text.begin(), text.end());
    } catch (const ojson::parse_error& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

std::string dump(const ojson& doc) { return doc.dump(2) + "\n"; }

template <typename T>
T get(const ojson& doc, const char* key, const char* what)
{
    if (!doc.is_object() || !doc.contains(key)) throw ParseError(std::string(what) + ": missing '" + key + "'");
    try {
        return doc.at(key).get<T>();
    } catch (const ojson::exception& e) {
        throw ParseError(std::string(what) + ": bad '" + key + "': " + e.what());
    }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + path.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("failed writing '" + path.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

std::string ball_space_to_json(const BallSpace& space)
{
    ojson doc;
    doc["dim"] = space.dim();
    auto& balls = doc["balls"] = ojson::object();
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto c = space.centre(i);
        balls[space.name(i)] = {{"c", std::vector<double>(c.begin(), c.end())}, {"r", space.radius(i)}};
    }
    return dump(doc);
}

BallSpace ball_space_from_json(std::string_view text)
{
    const auto doc = parse_json(text, "ball space");
    const auto dim = get<std::size_t>(doc, "dim", "ball space");
    if (!doc.contains("balls") || !doc["balls"].is_object()) throw ParseError("ball space: missing 'balls' object");
    std::vector<std::string> names;
    for (const auto& [name, _] : doc["balls"].items()) names.push_back(name);
    BallSpace space(dim, names);
    std::size_t i = 0;
    for (const auto& [name, ball] : doc["balls"].items()) {
        const auto c = get<std::vector<double>>(ball, "c", "ball space");
        if (c.size() != dim) throw ParseError("ball space: centre of '" + name + "' has wrong dimension");
        std::copy(c.begin(), c.end(), space.centre(i).begin());
        space.radius(i) = get<double>(ball, "r", "ball space");
        ++i;
    }
    return space;
}

std::string ich_to_json(const Ontology& ontology, const Ich& ich)
{
    ojson doc;
    auto& pairs = doc["pairs"] = ojson::array();
    for (const auto& p : ich.pairs()) pairs.push_back({ontology.name(p.child), ontology.name(p.parent)});
    return dump(doc);
}

std::string negatives_to_json(const NegativeSets& sets)
{
    ojson doc = ojson::object();
    for (const auto& [label, negs] : sets.negatives) doc[label] = negs;
    return dump(doc);
}

NegativeSets negatives_from_json(std::string_view text)
{
    const auto doc = parse_json(text, "negatives");
    if (!doc.is_object()) throw ParseError("negatives: expected an object");
    NegativeSets sets;
    for (const auto& [label, negs] : doc.items()) {
        try {
            sets.negatives[label] = negs.get<std::vector<std::string>>();
        } catch (const ojson::exception&) {
            throw ParseError("negatives: entry '" + label + "' must be a list of class names");
        }
    }
    return sets;
}

std::string mlp_to_json(const Mlp& mlp)
{
    ojson doc;
    doc["layers"] = mlp.layer_sizes();
    auto w = ojson::array();
    auto b = ojson::array();
    for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
        const auto wl = mlp.weights(l);
        const auto bl = mlp.biases(l);
        w.push_back(std::vector<double>(wl.begin(), wl.end()));
        b.push_back(std::vector<double>(bl.begin(), bl.end()));
    }
    doc["weights"] = std::move(w);
    doc["biases"] = std::move(b);
    doc["base_labels"] = mlp.base_labels;
    return dump(doc);
}

Mlp mlp_from_json(std::string_view text)
{
    const auto doc = parse_json(text, "mlp");
    Mlp mlp(get<std::vector<std::size_t>>(doc, "layers", "mlp"));
    const auto w = get<std::vector<std::vector<double>>>(doc, "weights", "mlp");
    const auto b = get<std::vector<std::vector<double>>>(doc, "biases", "mlp");
    if (w.size() != mlp.num_layers() || b.size() != mlp.num_layers()) throw ParseError("mlp: layer count mismatch");
    for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
        auto wl = mlp.weights(l);
        auto bl = mlp.biases(l);
        if (w[l].size() != wl.size() || b[l].size() != bl.size()) {
            throw ParseError("mlp: parameter block " + std::to_string(l) + " has the wrong size");
        }
        std::copy(w[l].begin(), w[l].end(), wl.begin());
        std::copy(b[l].begin(), b[l].end(), bl.begin());
    }
    if (doc.contains("base_labels")) mlp.base_labels = get<std::vector<std::string>>(doc, "base_labels", "mlp");
    return mlp;
}

namespace detail {

ojson grid_report_json(const GridResult& result)
{
    ojson doc;
    auto& rows = doc["rows"] = ojson::array();
    for (const auto& r : result.rows) {
        rows.push_back({{"gamma", r.gamma},
                        {"psi", r.psi},
                        {"phi", r.phi},
                        {"f1_all", r.scores.f1_all},
                        {"f1_leaf", r.scores.f1_leaf},
                        {"s_d", r.scores.s_d},
                        {"s_d_fraction", r.scores.s_d_fraction},
                        {"final_loss", r.final_loss.total()},
                        {"passes_threshold", r.passes_threshold}});
    }
    doc["best"] = result.best;
    doc["below_threshold"] = result.below_threshold;
    const auto& best = result.rows.at(result.best);
    doc["best_config"] = {{"gamma", best.gamma}, {"psi", best.psi}, {"phi", best.phi}};
    return doc;
}

ojson eval_report_json(const EvalReport& report, double baseline_accuracy, std::size_t w, std::size_t s,
                       std::size_t q)
{
    ojson doc;
    doc["protocol"] = {{"w", w}, {"s", s}, {"q", q}, {"episodes", report.episode_accuracy.size()}};
    doc["accuracy"] = report.accuracy;
    doc["ci95_half_width"] = report.ci95_half_width;
    doc["nearest_centroid_baseline"] = baseline_accuracy;
    doc["semantic_error_fraction"] = report.semantic_error_fraction;
    doc["queries"] = report.queries;
    doc["wrong"] = report.wrong;
    doc["semantic_errors"] = report.semantic_errors;
    doc["inside_predictions"] = report.inside_predictions;
    doc["episode_accuracy"] = report.episode_accuracy;
    // Published accuracies (%) from full-scale image benchmarks; not reproducible with synthetic features.
    doc["reference_values_non_reproducible"] = {
        {"miniImageNet_5way_1shot", 65.71},   {"miniImageNet_5way_5shot", 93.65},
        {"tieredImageNet_5way_1shot", 73.4},  {"tieredImageNet_5way_5shot", 88.95},
        {"miniImageNet_20way_1shot", 48.02},  {"miniImageNet_20way_5shot", 84.13},
    };
    return doc;
}

}  // namespace detail

std::string grid_report_to_json(const GridResult& result) { return dump(detail::grid_report_json(result)); }

std::string eval_report_to_json(const EvalReport& report, double baseline_accuracy, std::size_t w, std::size_t s,
                                std::size_t q)
{
    return dump(detail::eval_report_json(report, baseline_accuracy, w, s, q));
}

}  // namespace geoball
