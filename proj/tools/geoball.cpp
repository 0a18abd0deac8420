#include <geoball/embedding_eval.hpp>
#include <geoball/fewshot.hpp>
#include <geoball/io.hpp>
#include <geoball/pipeline.hpp>
#include <geoball/viz.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>

namespace {

using namespace geoball;
namespace fs = std::filesystem;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    bool verbose = false;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "JSON pipeline config supplying defaults")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "Seed for every stage (default 42)");
    sub->add_flag("-v,--verbose", c.verbose, "Stream per-epoch losses to stderr");
}

// Config from --config (or defaults), with --seed pushed into every stage.
PipelineConfig base_config(const Common& c)
{
    auto cfg = c.config.empty() ? PipelineConfig{} : load_pipeline_config(c.config);
    if (c.seed) {
        cfg.seed = *c.seed;
        cfg.embed.seed = cfg.synthetic.seed = cfg.projector.seed = cfg.episodes.seed = cfg.cluster_seed = *c.seed;
    }
    return cfg;
}

void emit(const std::string& path, const std::string& content)
{
    if (path.empty() || path == "-") {
        std::cout << content;
    } else {
        write_text_file(path, content);
    }
}

std::vector<std::string> leaf_names(const Ontology& o)
{
    std::vector<std::string> out;
    for (ConceptId id : o.leaves()) out.push_back(o.name(id));
    return out;
}

Optimizer optimizer_named(const std::string& s) { return s == "adam" ? Optimizer::Adam : Optimizer::Sgd; }

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"geoball: n-ball ontology embeddings and few-shot classification"};
    app.require_subcommand(1);
    const char* out_flags = "-o,--out,--output";

    // ingest
    Common ingest_c;
    std::string edges, leaves, ingest_out;
    bool sibling = false;
    auto* ingest = app.add_subcommand("ingest", "Build an ontology from hypernym edges and a leaf list");
    add_common(ingest, ingest_c);
    ingest->add_option("edges", edges, "TSV of child<TAB>parent lines")->required()->check(CLI::ExistingFile);
    ingest->add_option("--leaves", leaves, "Leaf labels, one per line")->required()->check(CLI::ExistingFile);
    ingest->add_flag("--sibling-disjoint", sibling, "Declare leaves sharing a parent disjoint");
    ingest->add_option(out_flags, ingest_out, "Ontology JSON (stdout if omitted)");

    // ich
    Common ich_c;
    std::string ich_onto, ich_out;
    auto* ich_cmd = app.add_subcommand("ich", "Write the inferred class hierarchy");
    add_common(ich_cmd, ich_c);
    ich_cmd->add_option("ontology", ich_onto, "Ontology JSON (default: from --config)")->check(CLI::ExistingFile);
    ich_cmd->add_option(out_flags, ich_out, "ICH JSON (stdout if omitted)");

    // embed
    Common embed_c;
    std::string embed_onto, embed_out, embed_opt;
    std::optional<std::size_t> e_dim;
    std::optional<double> e_gamma, e_psi, e_phi, e_lr;
    std::optional<int> e_epochs;
    auto* embed = app.add_subcommand("embed", "Train one n-ball per concept");
    add_common(embed, embed_c);
    embed->add_option("ontology", embed_onto, "Ontology JSON (default: from --config)")->check(CLI::ExistingFile);
    embed->add_option("--dim", e_dim, "Ball space dimension");
    embed->add_option("--gamma", e_gamma, "Hinge margin");
    embed->add_option("--psi", e_psi, "Radius floor scale");
    embed->add_option("--phi", e_phi, "Target centre norm");
    embed->add_option("--lr", e_lr, "Initial learning rate");
    embed->add_option("--epochs", e_epochs, "Training epochs");
    embed->add_option("--optimizer", embed_opt, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}));
    embed->add_option(out_flags, embed_out, "Ball space JSON (stdout if omitted)");

    // tune
    Common tune_c;
    std::string tune_onto, tune_out, tune_space, tune_grid;
    std::vector<double> gammas, psis, phis;
    std::optional<double> threshold;
    std::optional<std::size_t> t_dim;
    std::optional<int> t_epochs;
    unsigned tune_threads = 1;
    auto* tune = app.add_subcommand("tune", "Grid search over gamma, psi and phi");
    add_common(tune, tune_c);
    tune->add_option("ontology", tune_onto, "Ontology JSON (default: from --config)")->check(CLI::ExistingFile);
    tune->add_option("--grid", tune_grid, "Grid JSON with gammas, psis, phis lists")->check(CLI::ExistingFile);
    tune->add_option("--gammas", gammas, "Margins to try")->delimiter(',');
    tune->add_option("--psis", psis, "Radius floor scales to try")->delimiter(',');
    tune->add_option("--phis", phis, "Centre norms to try")->delimiter(',');
    tune->add_option("--threshold", threshold, "Minimum s_d fraction");
    tune->add_option("--dim", t_dim, "Ball space dimension");
    tune->add_option("--epochs", t_epochs, "Training epochs per grid point");
    tune->add_option("--threads", tune_threads, "Parallel training jobs");
    tune->add_option(out_flags, tune_out, "Score table JSON (stdout if omitted)");
    tune->add_option("--space-out", tune_space, "Also write the best ball space here");

    // negatives
    Common neg_c;
    std::string neg_space, neg_onto, neg_out;
    std::optional<std::size_t> neg_k;
    auto* neg = app.add_subcommand("negatives", "Cluster leaf centres into hard-negative sets");
    add_common(neg, neg_c);
    neg->add_option("space", neg_space, "Ball space JSON")->required()->check(CLI::ExistingFile);
    neg->add_option("--ontology", neg_onto, "Ontology JSON for the leaf list (default: every ball)")
        ->check(CLI::ExistingFile);
    neg->add_option("-k,--k,--clusters", neg_k, "Cluster count (default ceil(sqrt(leaves)))");
    neg->add_option(out_flags, neg_out, "Negatives JSON (stdout if omitted)");

    // train-projector
    Common tp_c;
    std::string tp_space, tp_neg, tp_onto, tp_base, tp_out, tp_preset;
    std::optional<int> tp_epochs;
    std::optional<double> tp_lr;
    auto* tp = app.add_subcommand("train-projector", "Base learning of the feature projector");
    add_common(tp, tp_c);
    tp->add_option("space", tp_space, "Ball space JSON")->required()->check(CLI::ExistingFile);
    tp->add_option("features", tp_base, "Base feature CSV (synthetic if omitted)")->check(CLI::ExistingFile);
    tp->add_option("--negatives", tp_neg, "Negatives JSON")->required()->check(CLI::ExistingFile);
    tp->add_option("--ontology", tp_onto, "Ontology JSON (for synthetic features)")->check(CLI::ExistingFile);
    tp->add_option("--preset", tp_preset, "Hidden layers: desk (128, 64) or full (1024, 512, 512)")
        ->check(CLI::IsMember({"desk", "full"}));
    tp->add_option("--epochs", tp_epochs, "Base learning epochs");
    tp->add_option("--lr", tp_lr, "Learning rate");
    tp->add_option(out_flags, tp_out, "MLP JSON (stdout if omitted)");

    // infer
    Common inf_c;
    std::string inf_space, inf_mlp, inf_onto, inf_features, inf_out;
    std::vector<std::string> inf_candidates;
    auto* inf = app.add_subcommand("infer", "Classify feature vectors among candidate balls");
    add_common(inf, inf_c);
    inf->add_option("space", inf_space, "Ball space JSON")->required()->check(CLI::ExistingFile);
    inf->add_option("mlp", inf_mlp, "MLP JSON")->required()->check(CLI::ExistingFile);
    inf->add_option("features", inf_features, "Feature CSV to classify")->required()->check(CLI::ExistingFile);
    inf->add_option("--ontology", inf_onto, "Ontology JSON (ancestor report)")->check(CLI::ExistingFile);
    inf->add_option("--candidates", inf_candidates, "Candidate classes (default: every leaf)")->delimiter(',');
    inf->add_option(out_flags, inf_out, "Predictions JSON (stdout if omitted)");

    // episodes
    Common ep_c;
    std::string ep_space, ep_mlp, ep_neg, ep_onto, ep_novel, ep_out;
    std::optional<std::size_t> ep_w, ep_s, ep_q, ep_count;
    unsigned ep_threads = 1;
    auto* ep = app.add_subcommand("episodes", "Few-shot episodic evaluation");
    add_common(ep, ep_c);
    ep->add_option("space", ep_space, "Ball space JSON")->required()->check(CLI::ExistingFile);
    ep->add_option("mlp", ep_mlp, "Base-learned MLP JSON")->required()->check(CLI::ExistingFile);
    ep->add_option("--novel", ep_novel, "Novel feature CSV (synthetic if omitted)")->check(CLI::ExistingFile);
    ep->add_option("--negatives", ep_neg, "Negatives JSON (default: clustered from the space)")
        ->check(CLI::ExistingFile);
    ep->add_option("--ontology", ep_onto, "Ontology JSON")->check(CLI::ExistingFile);
    ep->add_option("-w,--w,--ways", ep_w, "Classes per episode");
    ep->add_option("-s,--s,--shots", ep_s, "Support examples per class");
    ep->add_option("-q,--q,--queries", ep_q, "Query examples per class");
    ep->add_option("-n,--episodes,--count", ep_count, "Episodes");
    ep->add_option("--threads", ep_threads, "Parallel episodes");
    ep->add_option(out_flags, ep_out, "Report JSON (stdout if omitted)");

    // viz
    Common viz_c;
    std::string viz_space, viz_out, viz_points, viz_mlp;
    std::vector<std::string> viz_concepts;
    auto* viz = app.add_subcommand("viz", "Draw balls in 2D as SVG");
    add_common(viz, viz_c);
    viz->add_option("space", viz_space, "Ball space JSON")->required()->check(CLI::ExistingFile);
    viz->add_option("--concepts", viz_concepts, "Concepts to draw (default: all)")->delimiter(',');
    viz->add_option("--points", viz_points, "Feature CSV to project and draw")->check(CLI::ExistingFile);
    viz->add_option("--mlp", viz_mlp, "MLP JSON used with --points")->check(CLI::ExistingFile);
    viz->add_option(out_flags, viz_out, "SVG file (stdout if omitted)");

    // pipeline
    Common pipe_c;
    std::string pipe_dir;
    std::optional<unsigned> pipe_threads;
    auto* pipe = app.add_subcommand("pipeline", "Run every stage and write all artifacts");
    add_common(pipe, pipe_c);
    pipe->add_option("--output-dir", pipe_dir, "Artifact directory");
    pipe->add_option("--threads", pipe_threads, "Worker threads for tuning and episodes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    auto ontology_from = [](const std::string& path, const PipelineConfig& cfg) {
        if (path.empty()) return load_ontology(cfg);
        std::vector<std::string> warnings;
        auto o = parse_ontology(read_text_file(path), &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        return o;
    };

    try {
        if (*ingest) {
            const auto labels = parse_label_list(read_text_file(leaves));
            const auto o = ingest_hypernym_edges(read_text_file(edges), labels, {sibling});
            emit(ingest_out, to_json_text(o));
        } else if (*ich_cmd) {
            const auto cfg = base_config(ich_c);
            const auto o = ontology_from(ich_onto, cfg);
            emit(ich_out, ich_to_json(o, compute_ich(o)));
        } else if (*embed) {
            auto cfg = base_config(embed_c);
            auto& ec = cfg.embed;
            if (e_dim) ec.dim = *e_dim;
            if (e_gamma) ec.gamma = *e_gamma;
            if (e_psi) ec.psi = *e_psi;
            if (e_phi) ec.phi = *e_phi;
            if (e_lr) ec.learning_rate = *e_lr;
            if (e_epochs) ec.epochs = *e_epochs;
            if (!embed_opt.empty()) ec.optimizer = optimizer_named(embed_opt);
            ec.validate();
            const auto o = ontology_from(embed_onto, cfg);
            const auto ich = compute_ich(o);
            const auto stats = compute_stats(o, ich, cfg.occurrences);
            EpochCallback cb;
            if (embed_c.verbose) {
                cb = [](const EpochRecord& r) {
                    std::cerr << "epoch " << r.epoch << " loss " << r.loss.total() << (r.accepted ? "" : " (rejected)")
                              << "\n";
                };
            }
            const auto trained = train_embeddings(o, ich, stats, ec, cb);
            if (o.leaves().size() >= 2) {
                const auto s = score_embedding(trained.space, ich, o.leaves());
                std::cerr << "f1_all " << s.f1_all << " f1_leaf " << s.f1_leaf << " s_d " << s.s_d << " ("
                          << s.s_d_fraction << ")\n";
            }
            emit(embed_out, ball_space_to_json(trained.space));
        } else if (*tune) {
            auto cfg = base_config(tune_c);
            GridSpec grid = tune_grid.empty() ? cfg.tune.value_or(GridSpec{}) : parse_grid_spec(read_text_file(tune_grid));
            if (!gammas.empty()) grid.gammas = gammas;
            if (!psis.empty()) grid.psis = psis;
            if (!phis.empty()) grid.phis = phis;
            if (threshold) grid.s_d_threshold = *threshold;
            if (t_dim) cfg.embed.dim = *t_dim;
            if (t_epochs) cfg.embed.epochs = *t_epochs;
            cfg.embed.validate();
            if (grid.gammas.empty()) grid.gammas = {cfg.embed.gamma};
            if (grid.psis.empty()) grid.psis = {cfg.embed.psi};
            if (grid.phis.empty()) grid.phis = {cfg.embed.phi};
            grid.validate();
            const auto o = ontology_from(tune_onto, cfg);
            const auto ich = compute_ich(o);
            const auto stats = compute_stats(o, ich, cfg.occurrences);
            const auto result = grid_search(o, ich, stats, grid, cfg.embed, tune_threads);
            if (tune_c.verbose) {
                for (const auto& r : result.rows) {
                    std::cerr << "gamma " << r.gamma << " psi " << r.psi << " phi " << r.phi << ": f1_all "
                              << r.scores.f1_all << " f1_leaf " << r.scores.f1_leaf << " s_d " << r.scores.s_d_fraction
                              << "\n";
                }
            }
            if (result.below_threshold) std::cerr << "warning: no grid point reached the s_d threshold\n";
            emit(tune_out, grid_report_to_json(result));
            if (!tune_space.empty()) {
                write_text_file(tune_space, ball_space_to_json(train_embeddings(o, ich, stats, result.best_config).space));
            }
        } else if (*neg) {
            const auto cfg = base_config(neg_c);
            const auto space = ball_space_from_json(read_text_file(neg_space));
            std::vector<std::string> labels;
            if (!neg_onto.empty() || !cfg.ontology.empty() || !cfg.balanced_ontology.empty() || !cfg.hypernym_edges.empty()) {
                labels = leaf_names(ontology_from(neg_onto, cfg));
            } else {
                labels = space.concepts();
            }
            const auto k = neg_k.value_or(cfg.clusters == 0 ? default_cluster_count(labels.size()) : cfg.clusters);
            emit(neg_out, negatives_to_json(build_negative_sets(space, labels, k, cfg.cluster_seed, cfg.kmeans)));
        } else if (*tp) {
            auto cfg = base_config(tp_c);
            if (tp_epochs) cfg.projector.epochs_bl = *tp_epochs;
            if (tp_lr) cfg.projector.learning_rate = *tp_lr;
            if (!tp_preset.empty()) cfg.projector.hidden = (tp_preset == "full" ? full_preset() : desk_preset()).hidden;
            cfg.projector.validate();
            const auto space = ball_space_from_json(read_text_file(tp_space));
            const auto negatives = negatives_from_json(read_text_file(tp_neg));
            FeatureDataset base;
            if (!tp_base.empty()) {
                base = parse_feature_csv(read_text_file(tp_base), Split::Base);
            } else {
                cfg.base_features.clear();
                cfg.novel_features.clear();
                base = load_features(cfg, ontology_from(tp_onto, cfg), &space).base_train;
            }
            const auto trained = train_base(base, space, negatives, cfg.projector);
            if (tp_c.verbose) {
                for (std::size_t e = 0; e < trained.loss_history.size(); ++e) {
                    std::cerr << "epoch " << e + 1 << " loss " << trained.loss_history[e] << "\n";
                }
            }
            std::cerr << "train accuracy "
                      << projection_accuracy(trained.mlp, base, space, trained.mlp.base_labels) << "\n";
            emit(tp_out, mlp_to_json(trained.mlp));
        } else if (*inf) {
            const auto cfg = base_config(inf_c);
            const auto space = ball_space_from_json(read_text_file(inf_space));
            const auto mlp = mlp_from_json(read_text_file(inf_mlp));
            const auto data = parse_feature_csv(read_text_file(inf_features), Split::Novel);
            std::optional<Ontology> o;
            if (!inf_onto.empty() || !cfg.ontology.empty() || !cfg.balanced_ontology.empty() || !cfg.hypernym_edges.empty()) o = ontology_from(inf_onto, cfg);
            auto labels = inf_candidates;
            if (labels.empty()) labels = o ? leaf_names(*o) : space.concepts();
            const auto candidates = make_candidates(space, labels);
            const auto ich = o ? std::optional<Ich>(compute_ich(*o)) : std::nullopt;
            nlohmann::ordered_json out = nlohmann::ordered_json::array();
            for (const auto& ex : data.examples) {
                const auto h = mlp.forward(ex.f);
                auto pred = classify(h, candidates);
                if (ich) annotate_ancestors(pred, h, candidates, space, *ich);
                out.push_back({{"label", ex.label},
                               {"predicted", pred.label},
                               {"u", pred.u_value},
                               {"inside", pred.inside},
                               {"containing_ancestors", pred.containing_ancestors}});
            }
            emit(inf_out, out.dump(2) + "\n");
        } else if (*ep) {
            auto cfg = base_config(ep_c);
            auto& e = cfg.episodes;
            if (ep_w) e.w = *ep_w;
            if (ep_s) e.s = *ep_s;
            if (ep_q) e.q = *ep_q;
            if (ep_count) e.count = *ep_count;
            const auto space = ball_space_from_json(read_text_file(ep_space));
            const auto mlp = mlp_from_json(read_text_file(ep_mlp));
            std::optional<Ontology> o;
            if (!ep_onto.empty() || !cfg.ontology.empty() || !cfg.balanced_ontology.empty() || !cfg.hypernym_edges.empty()) o = ontology_from(ep_onto, cfg);
            const auto ich = o ? compute_ich(*o) : Ich(space.size(), {});
            if (ep_novel.empty() && !o) throw Error("episodes needs --novel or an ontology to synthesise features");
            const auto novel = ep_novel.empty() ? load_features(cfg, *o, &space).novel
                                                : parse_feature_csv(read_text_file(ep_novel), Split::Novel);
            NegativeSets negatives;
            if (!ep_neg.empty()) {
                negatives = negatives_from_json(read_text_file(ep_neg));
            } else {
                const auto labels = o ? leaf_names(*o) : space.concepts();
                const auto k = cfg.clusters == 0 ? default_cluster_count(labels.size()) : cfg.clusters;
                negatives = build_negative_sets(space, labels, k, cfg.cluster_seed, cfg.kmeans);
            }
            const auto episodes = sample_episodes(novel, e.w, e.s, e.q, e.count, e.seed);
            const auto report = evaluate_episodes(space, ich, mlp, episodes, cfg.projector, negatives, ep_threads);
            const auto baseline = nearest_centroid_accuracy(episodes);
            double base_mean = 0.0;
            for (double a : baseline) base_mean += a;
            base_mean /= static_cast<double>(std::max<std::size_t>(1, baseline.size()));
            std::cerr << "accuracy " << report.accuracy << " +- " << report.ci95_half_width << " (nearest centroid "
                      << base_mean << ")\n";
            emit(ep_out, eval_report_to_json(report, base_mean, e.w, e.s, e.q));
        } else if (*viz) {
            const auto cfg = base_config(viz_c);
            const auto space = ball_space_from_json(read_text_file(viz_space));
            auto concepts = viz_concepts.empty() ? cfg.viz_concepts : viz_concepts;
            if (concepts.empty()) concepts = space.concepts();
            std::vector<LabeledPoint> points;
            if (!viz_points.empty()) {
                if (viz_mlp.empty()) throw Error("--points needs --mlp");
                const auto mlp = mlp_from_json(read_text_file(viz_mlp));
                for (const auto& ex : parse_feature_csv(read_text_file(viz_points), Split::Novel).examples) {
                    points.push_back({ex.label, mlp.forward(ex.f)});
                }
            }
            emit(viz_out, render_balls_2d(space, concepts, points));
        } else if (*pipe) {
            if (pipe_c.config.empty()) throw Error("pipeline needs --config");
            auto cfg = base_config(pipe_c);
            if (!pipe_dir.empty()) cfg.output_dir = pipe_dir;
            if (pipe_threads) cfg.threads = *pipe_threads;
            const auto paths = run_pipeline(cfg, &std::cerr, pipe_c.verbose);
            for (const auto& p : paths.all()) std::cout << p.string() << "\n";
        }
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
