#include "geoball/pipeline.hpp"

#include "detail/json_io.hpp"
#include "geoball/fewshot.hpp"
#include "geoball/io.hpp"
#include "geoball/viz.hpp"

#include <json.hpp>

#include <map>
#include <ostream>
#include <set>

namespace geoball {

using ojson = nlohmann::ordered_json;

namespace {

class Section {
public:
    Section(const ojson& doc, std::string name) : doc_(doc), name_(std::move(name))
    {
        if (!doc_.is_object()) throw ParseError("config: '" + name_ + "' must be an object");
    }

    template <typename T>
    bool read(const char* key, T& out)
    {
        seen_.insert(key);
        if (!doc_.contains(key)) return false;
        try {
            out = doc_.at(key).get<T>();
        } catch (const ojson::exception& e) {
            throw ParseError("config: bad value for '" + name_ + "." + key + "': " + e.what());
        }
        return true;
    }

    bool has(const char* key)
    {
        seen_.insert(key);
        return doc_.contains(key);
    }
    const ojson& at(const char* key) const { return doc_.at(key); }

    void finish() const
    {
        for (const auto& [key, _] : doc_.items()) {
            if (!seen_.contains(key)) throw ParseError("config: unknown key '" + name_ + "." + key + "'");
        }
    }

private:
    const ojson& doc_;
    std::string name_;
    std::set<std::string> seen_;
};

Optimizer parse_optimizer(const std::string& name)
{
    if (name == "sgd") return Optimizer::Sgd;
    if (name == "adam") return Optimizer::Adam;
    throw ParseError("config: optimizer must be 'sgd' or 'adam', got '" + name + "'");
}

void read_path(Section& s, const char* key, std::filesystem::path& out, const std::filesystem::path& base)
{
    std::string text;
    if (s.read(key, text)) out = text.empty() || base.empty() ? std::filesystem::path(text) : base / text;
}

void read_embed(Section s, EmbedConfig& c, std::uint64_t seed)
{
    c.seed = seed;
    s.read("dim", c.dim);
    s.read("gamma", c.gamma);
    double gd = 0.0;
    if (s.read("gamma_disjoint", gd)) c.gamma_disjoint = gd;
    s.read("psi", c.psi);
    s.read("phi", c.phi);
    s.read("learning_rate", c.learning_rate);
    s.read("lr_decay", c.lr_decay);
    std::string opt;
    if (s.read("optimizer", opt)) c.optimizer = parse_optimizer(opt);
    s.read("epochs", c.epochs);
    s.read("batch_size", c.batch_size);
    s.read("seed", c.seed);
    s.read("radius_clamp_min", c.radius_clamp_min);
    s.read("radius_init_offset", c.radius_init_offset);
    s.read("monotone", c.monotone);
    s.finish();
}

void read_tune(Section s, GridSpec& g)
{
    s.read("gammas", g.gammas);
    s.read("psis", g.psis);
    s.read("phis", g.phis);
    s.read("s_d_threshold", g.s_d_threshold);
    s.finish();
}

void read_synthetic(Section s, SyntheticFeatureConfig& c, std::uint64_t seed)
{
    c.seed = seed;
    s.read("dim", c.dim);
    s.read("latent_dim", c.latent_dim);
    s.read("per_class", c.per_class);
    s.read("noise_sigma", c.noise_sigma);
    s.read("root_spread", c.root_spread);
    s.read("level_decay", c.level_decay);
    s.read("seed", c.seed);
    s.read("novel_labels", c.novel_labels);
    s.read("novel_count", c.novel_count);
    s.read("alignment", c.alignment);
    s.read("alignment_scale", c.alignment_scale);
    s.finish();
}

void read_projector(Section s, ProjectorConfig& c, std::uint64_t seed)
{
    c.seed = seed;
    s.read("mu", c.mu);
    s.read("nu", c.nu);
    s.read("learning_rate", c.learning_rate);
    s.read("fsl_learning_rate", c.fsl_learning_rate);
    s.read("epochs_bl", c.epochs_bl);
    s.read("epochs_fsl", c.epochs_fsl);
    s.read("batch_size", c.batch_size);
    s.read("seed", c.seed);
    std::string opt;
    if (s.read("optimizer", opt)) c.optimizer = parse_optimizer(opt);
    s.read("hidden", c.hidden);
    s.read("fsl_output_layer_only", c.fsl_output_layer_only);
    s.read("weight_decay", c.weight_decay);
    s.finish();
}

void read_episodes(Section s, EpisodeConfig& c, std::uint64_t seed)
{
    c.seed = seed;
    s.read("w", c.w);
    s.read("s", c.s);
    s.read("q", c.q);
    s.read("count", c.count);
    s.read("seed", c.seed);
    s.finish();
}

void read_negatives(Section s, PipelineConfig& c)
{
    c.cluster_seed = c.seed;
    s.read("clusters", c.clusters);
    s.read("seed", c.cluster_seed);
    s.read("restarts", c.kmeans.restarts);
    s.read("max_iters", c.kmeans.max_iters);
    s.finish();
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir)
{
    ojson doc;
    try {
        doc = ojson::parse(text.begin(), text.end());
    } catch (const ojson::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    PipelineConfig c;
    Section top(doc, "config");
    top.read("seed", c.seed);
    read_path(top, "ontology", c.ontology, base_dir);
    read_path(top, "hypernym_edges", c.hypernym_edges, base_dir);
    read_path(top, "leaves", c.leaves, base_dir);
    top.read("sibling_disjoint", c.sibling_disjoint);
    top.read("balanced_ontology", c.balanced_ontology);
    read_path(top, "base_features", c.base_features, base_dir);
    read_path(top, "novel_features", c.novel_features, base_dir);
    top.read("base_holdout", c.base_holdout);
    read_path(top, "output_dir", c.output_dir, base_dir);
    top.read("threads", c.threads);
    std::string occ;
    if (top.read("occurrences", occ)) {
        if (occ == "inferred") c.occurrences = OccurrenceCount::InferredAndDisjoint;
        else if (occ == "told") c.occurrences = OccurrenceCount::ToldAndDisjoint;
        else throw ParseError("config: occurrences must be 'inferred' or 'told'");
    }
    top.read("viz_concepts", c.viz_concepts);
    top.read("viz_points_per_class", c.viz_points_per_class);

    const ojson empty = ojson::object();
    auto section = [&](const char* key) -> const ojson& { return top.has(key) ? top.at(key) : empty; };
    read_embed(Section(section("embed"), "embed"), c.embed, c.seed);
    if (top.has("tune")) {
        c.tune.emplace();
        read_tune(Section(top.at("tune"), "tune"), *c.tune);
    }
    read_negatives(Section(section("negatives"), "negatives"), c);
    read_synthetic(Section(section("synthetic"), "synthetic"), c.synthetic, c.seed);
    read_projector(Section(section("projector"), "projector"), c.projector, c.seed);
    read_episodes(Section(section("episodes"), "episodes"), c.episodes, c.seed);
    top.finish();

    if (c.base_holdout < 0.0 || c.base_holdout >= 1.0) throw ParseError("config: base_holdout must be in [0, 1)");
    c.embed.validate();
    if (c.tune) c.tune->validate();
    c.projector.validate();
    return c;
}

GridSpec parse_grid_spec(std::string_view text)
{
    ojson doc;
    try {
        doc = ojson::parse(text.begin(), text.end());
    } catch (const ojson::parse_error& e) {
        throw ParseError(std::string("grid: ") + e.what());
    }
    GridSpec g;
    read_tune(Section(doc, "grid"), g);
    return g;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path)
{
    return parse_pipeline_config(read_text_file(path), path.parent_path());
}

PipelineArtifacts artifact_paths(const std::filesystem::path& output_dir)
{
    return {output_dir / "ich.json",   output_dir / "space.json",  output_dir / "negatives.json",
            output_dir / "mlp.json",   output_dir / "report.json", output_dir / "viz.svg"};
}

Ontology load_ontology(const PipelineConfig& config)
{
    if (!config.ontology.empty()) return parse_ontology(read_text_file(config.ontology));
    if (!config.balanced_ontology.empty()) return make_balanced_ontology(config.balanced_ontology);
    if (config.hypernym_edges.empty() || config.leaves.empty()) {
        throw Error("no ontology given: set 'ontology', 'balanced_ontology' or both 'hypernym_edges' and 'leaves'");
    }
    const auto leaves = parse_label_list(read_text_file(config.leaves));
    return ingest_hypernym_edges(read_text_file(config.hypernym_edges), leaves, {config.sibling_disjoint});
}

FeatureSplits load_features(const PipelineConfig& config, const Ontology& ontology, const BallSpace* space)
{
    FeatureDataset base;
    FeatureSplits out;
    if (config.base_features.empty() && config.novel_features.empty()) {
        auto synth = generate_synthetic_features(ontology, config.synthetic, space);
        base = std::move(synth.base);
        out.novel = std::move(synth.novel);
    } else {
        if (config.base_features.empty() || config.novel_features.empty()) {
            throw Error("feature CSVs need both 'base_features' and 'novel_features'");
        }
        base = parse_feature_csv(read_text_file(config.base_features), Split::Base);
        out.novel = parse_feature_csv(read_text_file(config.novel_features), Split::Novel);
        if (base.dim != out.novel.dim) throw Error("base and novel features differ in dimension");
    }

    out.base_train = {base.dim, Split::Base, {}};
    out.base_heldout = {base.dim, Split::Base, {}};
    std::map<std::string, std::vector<const LabeledFeature*>> by_label;
    for (const auto& ex : base.examples) by_label[ex.label].push_back(&ex);
    std::map<std::string, std::size_t> keep;
    for (const auto& [label, exs] : by_label) {
        const auto held = static_cast<std::size_t>(config.base_holdout * static_cast<double>(exs.size()));
        keep[label] = exs.size() - std::min(held, exs.size() - 1);
    }
    std::map<std::string, std::size_t> seen;
    for (const auto& ex : base.examples) {
        auto& target = seen[ex.label]++ < keep[ex.label] ? out.base_train : out.base_heldout;
        target.examples.push_back(ex);
    }
    return out;
}

namespace {

template <typename F>
auto stage(const char* name, std::ostream* log, F&& body)
{
    if (log) *log << "[" << name << "]\n";
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

ojson scores_json(const Scores& s)
{
    return {{"f1_all", s.f1_all}, {"f1_leaf", s.f1_leaf}, {"s_d", s.s_d}, {"s_d_fraction", s.s_d_fraction}};
}

}  // namespace

PipelineArtifacts run_pipeline(const PipelineConfig& config, std::ostream* log, bool verbose)
{
    const auto paths = artifact_paths(config.output_dir);
    ojson report;

    struct Ingested {
        Ontology ontology;
        Ich ich;
        HierarchyStats stats;
    };
    const auto in = stage("ingest", log, [&] {
        auto o = load_ontology(config);
        auto ich = compute_ich(o);
        auto stats = compute_stats(o, ich, config.occurrences);
        write_text_file(paths.ich, ich_to_json(o, ich));
        return Ingested{std::move(o), std::move(ich), std::move(stats)};
    });
    report["ontology"] = {{"concepts", in.ontology.size()},
                          {"leaves", in.ontology.leaves().size()},
                          {"ich_pairs", in.ich.size()},
                          {"disjoint_axioms", in.ontology.disjoint_axioms().size()},
                          {"levels", in.stats.total_levels}};

    const auto space = stage(config.tune ? "tune" : "embed", log, [&] {
        EmbedConfig ec = config.embed;
        if (config.tune) {
            const auto grid = grid_search(in.ontology, in.ich, in.stats, *config.tune, ec, config.threads);
            report["tune"] = detail::grid_report_json(grid);
            ec = grid.best_config;
            if (log) {
                *log << "  best gamma=" << ec.gamma << " psi=" << ec.psi << " phi=" << ec.phi
                     << (grid.below_threshold ? " (below s_d threshold)" : "") << "\n";
            }
        }
        EpochCallback on_epoch;
        if (verbose && log) {
            on_epoch = [log](const EpochRecord& r) {
                *log << "  epoch " << r.epoch << " loss " << r.loss.total() << (r.accepted ? "" : " (rejected)")
                     << "\n";
            };
        }
        auto trained = train_embeddings(in.ontology, in.ich, in.stats, ec, on_epoch);
        const auto leaves = in.ontology.leaves();
        report["embedding"] = {{"gamma", ec.gamma},
                               {"psi", ec.psi},
                               {"phi", ec.phi},
                               {"dim", ec.dim},
                               {"epochs", ec.epochs},
                               {"seed", ec.seed},
                               {"final_loss", total_loss(trained.space, {in.ich, in.ontology.disjoint_axioms(), in.stats}, ec).total()}};
        if (leaves.size() >= 2) {
            report["embedding"]["scores"] = scores_json(score_embedding(trained.space, in.ich, leaves));
        }
        write_text_file(paths.space, ball_space_to_json(trained.space));
        return std::move(trained.space);
    });

    std::vector<std::string> leaf_names;
    for (ConceptId id : in.ontology.leaves()) leaf_names.push_back(in.ontology.name(id));

    const auto negatives = stage("negatives", log, [&] {
        const auto k = config.clusters == 0 ? default_cluster_count(leaf_names.size()) : config.clusters;
        auto sets = build_negative_sets(space, leaf_names, k, config.cluster_seed, config.kmeans);
        report["negatives"] = {{"clusters", sets.clusters.size()}, {"seed", config.cluster_seed}};
        write_text_file(paths.negatives, negatives_to_json(sets));
        return sets;
    });

    const auto features = stage("features", log, [&] { return load_features(config, in.ontology, &space); });

    const auto mlp = stage("train-projector", log, [&] {
        auto trained = train_base(features.base_train, space, negatives, config.projector);
        if (verbose && log) {
            for (std::size_t e = 0; e < trained.loss_history.size(); ++e) {
                *log << "  epoch " << e + 1 << " loss " << trained.loss_history[e] << "\n";
            }
        }
        const auto labels = trained.mlp.base_labels;
        report["base_learning"] = {
            {"train_examples", features.base_train.size()},
            {"heldout_examples", features.base_heldout.size()},
            {"train_accuracy", projection_accuracy(trained.mlp, features.base_train, space, labels)},
            {"heldout_accuracy", features.base_heldout.size() == 0
                                     ? ojson(nullptr)
                                     : ojson(projection_accuracy(trained.mlp, features.base_heldout, space, labels))},
            {"final_loss", trained.loss_history.empty() ? 0.0 : trained.loss_history.back()},
            {"seed", config.projector.seed}};
        write_text_file(paths.mlp, mlp_to_json(trained.mlp));
        return std::move(trained.mlp);
    });

    stage("episodes", log, [&] {
        const auto& ep = config.episodes;
        const auto episodes = sample_episodes(features.novel, ep.w, ep.s, ep.q, ep.count, ep.seed);
        const auto eval = evaluate_episodes(space, in.ich, mlp, episodes, config.projector, negatives, config.threads);
        const auto baseline = nearest_centroid_accuracy(episodes);
        double base_mean = 0.0;
        for (double a : baseline) base_mean += a;
        if (!baseline.empty()) base_mean /= static_cast<double>(baseline.size());
        report["fewshot"] = detail::eval_report_json(eval, base_mean, ep.w, ep.s, ep.q);
        report["fewshot"]["seed"] = ep.seed;
        if (log) *log << "  accuracy " << eval.accuracy << " (nearest centroid " << base_mean << ")\n";
        write_text_file(paths.report, report.dump(2) + "\n");
        return 0;
    });

    stage("viz", log, [&] {
        auto selected = config.viz_concepts.empty() ? space.concepts() : config.viz_concepts;
        std::vector<LabeledPoint> points;
        std::map<std::string, std::size_t> drawn;
        for (const auto& ex : features.base_train.examples) {
            if (drawn[ex.label]++ < config.viz_points_per_class) points.push_back({ex.label, mlp.forward(ex.f)});
        }
        write_text_file(paths.viz, render_balls_2d(space, selected, points));
        return 0;
    });
    return paths;
}

}  // namespace geoball
