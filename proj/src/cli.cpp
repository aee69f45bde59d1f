#include "pairfair/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <memory>
#include <ostream>

#include "pairfair/csv.hpp"
#include "pairfair/data.hpp"
#include "pairfair/error.hpp"
#include "pairfair/importance.hpp"
#include "pairfair/logreg.hpp"
#include "pairfair/metrics.hpp"
#include "pairfair/pairs.hpp"
#include "pairfair/report.hpp"
#include "pairfair/rng.hpp"
#include "pairfair/tree.hpp"

namespace pairfair::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kOutRootEnv = "PAIRFAIR_OUT_ROOT";

struct OptionDef {
    const char* key;
    const char* help;
};

// Every configurable key, in manifest order.
constexpr OptionDef kOptions[] = {
    {"data", "input CSV with header row"},
    {"schema", "schema config file"},
    {"match", "match spec config file (mine-pairs)"},
    {"pairs", "pair file i,j[,weight]"},
    {"model", "model kind: logreg | tree"},
    {"model-file", "trained model JSON (evaluate, importance)"},
    {"eta", "fairness trade-off for train, or fixed eta for a pair-count sweep"},
    {"grid", "comma-separated eta grid for sweep"},
    {"n-pairs", "comma-separated pair counts for sweep ('all' = every training pair)"},
    {"seed", "global seed (split, subsampling, importance)"},
    {"out", "output directory"},
    {"test-ratio", "test fraction of the pair-aware split"},
    {"protected", "protected column for grouping and importance (default: schema's first protected)"},
    {"group-threshold", "numeric protected values >= this are privileged"},
    {"privileged-value", "categorical protected value that is privileged"},
    {"max-pairs", "cap on mined pairs"},
    {"epochs", "logistic regression epochs"},
    {"learning-rate", "logistic regression step size"},
    {"l2", "logistic regression l2 coefficient"},
    {"max-depth", "tree depth limit"},
    {"min-leaf", "tree minimum rows per leaf"},
    {"knn-k", "neighbours for kNN consistency"},
    {"importance-repeats", "permutations per feature"},
};

bool known_key(const std::string& key) {
    for (const auto& o : kOptions) {
        if (key == o.key) return true;
    }
    return false;
}

struct RunConfig {
    std::string command;
    KvConfig kv;
    unsigned threads = 1;

    std::string str(const std::string& k) const { return kv.get_or(k, ""); }
    double num(const std::string& k) const { return parse_double(kv.get(k), "--" + k); }
    long long integer(const std::string& k) const { return parse_int(kv.get(k), "--" + k); }
    std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("seed")); }
    fs::path out() const { return fs::path(str("out")); }
    std::string required(const std::string& k) const {
        const auto v = str(k);
        if (v.empty()) throw DataError("--" + k + " is required for '" + command + "'");
        return v;
    }
};

struct Experiment {
    Dataset dataset;
    EncodedDataset encoded;
    PairSet pairs;
    SplitResult split;
    GroupingRule grouping;
    GroupAssignment test_groups;
    std::string protected_feature;
};

Dataset load_dataset(const RunConfig& cfg) {
    const auto data = cfg.required("data");
    if (!fs::exists(data)) throw IoError("data file not found: " + data);
    const auto schema_path = cfg.required("schema");
    if (!fs::exists(schema_path)) throw IoError("schema file not found: " + schema_path);
    return load_csv(data, FeatureSchema::load(schema_path));
}

GroupingRule grouping_for(const RunConfig& cfg, const Dataset& ds) {
    GroupingRule rule;
    rule.column = cfg.str("protected");
    if (rule.column.empty()) {
        const auto prot = ds.schema.protected_indices();
        if (prot.empty()) throw DataError("no --protected column given and the schema declares none");
        rule.column = ds.schema.columns[prot.front()].name;
    }
    rule.threshold = cfg.num("group-threshold");
    rule.privileged_value = cfg.str("privileged-value");
    return rule;
}

std::string protected_feature_name(const Dataset& ds, const GroupingRule& rule) {
    const auto& col = ds.schema.columns[ds.schema.index_of(rule.column)];
    if (!col.encoded(ds.schema.keep_protected_in_model)) {
        throw DataError("protected column '" + rule.column + "' is not part of the model features");
    }
    return col.kind == ColumnKind::numeric ? col.name : col.name + "=" + rule.privileged_value;
}

Experiment load_experiment(const RunConfig& cfg, bool need_pairs) {
    Experiment ex;
    ex.dataset = load_dataset(cfg);
    ex.encoded = encode(ex.dataset);
    const auto pairs_path = cfg.str("pairs");
    if (!pairs_path.empty()) {
        if (!fs::exists(pairs_path)) throw IoError("pair file not found: " + pairs_path);
        ex.pairs = load_pairs(pairs_path, ex.dataset);
    } else if (need_pairs) {
        throw DataError("--pairs is required for '" + cfg.command + "'");
    }
    ex.split = pair_aware_split(ex.encoded, ex.pairs, cfg.num("test-ratio"), cfg.seed());
    ex.grouping = grouping_for(cfg, ex.dataset);
    ex.test_groups = make_groups(ex.dataset, ex.split.test.row_origin, ex.grouping);
    ex.protected_feature = protected_feature_name(ex.dataset, ex.grouping);
    return ex;
}

TrainConfig logreg_config(const RunConfig& cfg) {
    TrainConfig tc;
    tc.eta = cfg.num("eta");
    tc.epochs = static_cast<int>(cfg.integer("epochs"));
    tc.learning_rate = cfg.num("learning-rate");
    tc.l2 = cfg.num("l2");
    tc.seed = cfg.seed();
    tc.validate();
    return tc;
}

TreeConfig tree_config(const RunConfig& cfg) {
    TreeConfig tc;
    tc.eta = cfg.num("eta");
    tc.max_depth = static_cast<int>(cfg.integer("max-depth"));
    const auto min_leaf = cfg.integer("min-leaf");
    if (min_leaf < 1) throw DataError("--min-leaf must be >= 1");
    tc.min_leaf = static_cast<std::size_t>(min_leaf);
    tc.seed = cfg.seed();
    tc.validate();
    return tc;
}

EvalOptions eval_options(const RunConfig& cfg, const GroupingRule& rule) {
    EvalOptions opt;
    const auto k = cfg.integer("knn-k");
    if (k < 1) throw DataError("--knn-k must be >= 1");
    opt.knn_k = static_cast<std::size_t>(k);
    opt.threads = cfg.threads;
    opt.grouping = rule;
    return opt;
}

int importance_repeats(const RunConfig& cfg) { return static_cast<int>(cfg.integer("importance-repeats")); }

std::unique_ptr<Classifier> load_model(const RunConfig& cfg, const EncodedDataset& encoded) {
    const auto path = cfg.required("model-file");
    if (!fs::exists(path)) throw IoError("model file not found: " + path);
    const auto text = csv::read_file(path);
    std::string kind;
    try {
        kind = json::parse(text).at("kind").get<std::string>();
    } catch (const json::exception& e) {
        throw DataError("invalid model file " + path + ": " + e.what());
    }
    std::unique_ptr<Classifier> model;
    std::vector<std::string> names;
    if (kind == "logreg") {
        auto m = std::make_unique<LogisticModel>(logistic_from_json(text));
        names = m->feature_names;
        model = std::move(m);
    } else if (kind == "tree") {
        auto t = std::make_unique<DecisionTree>(tree_from_json(text));
        names = t->feature_names;
        model = std::move(t);
    } else {
        throw DataError("unknown model kind '" + kind + "' in " + path);
    }
    if (names != encoded.feature_names()) {
        throw DataError("model features do not match the encoded dataset features");
    }
    return model;
}

class OutputDir {
public:
    explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
        fs::remove(dir_ / "manifest.json", ec);
    }

    void write(const std::string& name, const std::string& content) {
        csv::write_file(dir_ / name, content);
        files_.push_back(name);
    }

    // Written last; its presence marks a completed run.
    void finish(const RunConfig& cfg) {
        json config = json::object();
        for (const auto& o : kOptions) config[o.key] = cfg.str(o.key);
        json j{{"tool", "pairfair"}, {"version", kVersion}, {"command", cfg.command}, {"config", config},
               {"outputs", files_}};
        const auto tmp = dir_ / "manifest.json.tmp";
        csv::write_file(tmp, j.dump(2) + "\n");
        std::error_code ec;
        fs::rename(tmp, dir_ / "manifest.json", ec);
        if (ec) throw IoError("cannot finalize manifest: " + ec.message());
    }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

std::string fixed(double v) { return std::isnan(v) ? "undefined" : fmt::format("{:.4f}", v); }

int cmd_ingest(const RunConfig& cfg, std::ostream& out) {
    const auto ds = load_dataset(cfg);
    const auto enc = encode(ds);
    std::size_t positives = 0;
    for (auto l : ds.labels) positives += l;
    const double positive_fraction = static_cast<double>(positives) / static_cast<double>(ds.size());

    OutputDir dir(cfg.out());
    dir.write("encoded.csv", encoded_to_csv(enc));
    json diag{{"rows_read", ds.diagnostics.rows_read},
              {"dropped", ds.diagnostics.dropped},
              {"rows", ds.size()},
              {"num_features", enc.num_features()},
              {"positive_fraction", positive_fraction},
              {"feature_names", enc.feature_names()},
              {"dropped_lines_sample", ds.diagnostics.dropped_lines}};
    dir.write("ingest.json", diag.dump(2) + "\n");
    dir.finish(cfg);
    out << fmt::format("rows read {}, dropped {}, kept {}\n", ds.diagnostics.rows_read, ds.diagnostics.dropped,
                       ds.size());
    out << fmt::format("encoded features {}, positive fraction {:.4f}\n", enc.num_features(), positive_fraction);
    return 0;
}

int cmd_mine_pairs(const RunConfig& cfg, std::ostream& out) {
    const auto ds = load_dataset(cfg);
    const auto match_path = cfg.required("match");
    if (!fs::exists(match_path)) throw IoError("match spec not found: " + match_path);
    auto spec = MatchSpec::load(match_path);
    if (const auto cap = cfg.str("max-pairs"); !cap.empty()) {
        const auto v = parse_int(cap, "--max-pairs");
        if (v < 1) throw DataError("--max-pairs must be >= 1");
        spec.max_pairs = static_cast<std::size_t>(v);
    }
    const auto mined = mine_pairs(ds, spec);

    OutputDir dir(cfg.out());
    dir.write("pairs.csv", pairs_to_csv(mined.pairs));
    json constraints = json::array();
    for (const auto& c : mined.stats.constraints) {
        constraints.push_back({{"column", c.column}, {"rule", c.rule}, {"pairs_passing", c.pairs_passing}});
    }
    json stats{{"rows", mined.stats.rows},
               {"total_row_pairs", mined.stats.total_row_pairs},
               {"constraints", constraints},
               {"blocks", mined.stats.blocks},
               {"exact_candidates", mined.stats.exact_candidates},
               {"eligible_pairs", mined.stats.eligible_pairs},
               {"selected", mined.stats.selected},
               {"match_spec", spec.to_config().serialize()}};
    dir.write("match_stats.json", stats.dump(2) + "\n");
    dir.finish(cfg);
    out << mined.stats.summary();
    return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    const auto ex = load_experiment(cfg, false);
    const auto kind = parse_model_kind(cfg.str("model"));
    OutputDir dir(cfg.out());
    std::vector<double> train_scores, test_scores;
    if (kind == ModelKind::logreg) {
        const auto result = train_logreg(ex.split.train, ex.split.train_pairs, logreg_config(cfg));
        dir.write("model.json", to_json(result.model));
        dir.write("trace.csv", trace_to_csv(result.trace));
        train_scores = result.model.predict_proba(ex.split.train.matrix);
        test_scores = result.model.predict_proba(ex.split.test.matrix);
        const auto& last = result.trace.epochs.back();
        out << fmt::format("final loss: ce {:.6f}, pair {:.6f}, total {:.6f}, gradient norm {:.3g}\n", last.ce,
                           last.pair, last.total, result.model.final_gradient_norm);
    } else {
        const auto tree = train_tree(ex.split.train, ex.split.train_pairs, tree_config(cfg));
        dir.write("model.json", to_json(tree));
        dir.write("tree.txt", render_text(tree));
        train_scores = tree.predict_proba(ex.split.train.matrix);
        test_scores = tree.predict_proba(ex.split.test.matrix);
        out << fmt::format("tree: {} nodes, depth {}\n", tree.nodes.size(), tree.depth());
    }
    const double train_acc = accuracy(Predictions::from_scores(train_scores), ex.split.train.labels);
    const double test_acc = accuracy(Predictions::from_scores(test_scores), ex.split.test.labels);
    dir.finish(cfg);
    out << fmt::format("train rows {}, test rows {}, train pairs {}, test pairs {}\n", ex.split.train.size(),
                       ex.split.test.size(), ex.split.train_pairs.size(), ex.split.test_pairs.size());
    out << fmt::format("train accuracy {:.4f}\ntest accuracy {:.4f}\n", train_acc, test_acc);
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
    const auto ex = load_experiment(cfg, false);
    const auto model = load_model(cfg, ex.encoded);
    const auto report = evaluate(*model, ex.split.test, ex.split.test_pairs, ex.test_groups, ex.split.test.labels,
                                 eval_options(cfg, ex.grouping));
    OutputDir dir(cfg.out());
    dir.write("report.json", report_to_json(report));
    dir.write("fairness_report.csv", report_to_csv(report));
    dir.finish(cfg);
    out << fmt::format("accuracy {}  precision {}  recall {}\n", fixed(report.accuracy), fixed(report.precision),
                       fixed(report.recall));
    out << fmt::format("paired consistency {}  PRC {}\n", fixed(report.paired_consistency), fixed(report.prc));
    out << fmt::format("parity difference {}  disparate impact {}\n", fixed(report.statistical_parity_difference),
                       fixed(report.disparate_impact));
    out << fmt::format("average odds difference {}  equal opportunity difference {}\n",
                       fixed(report.average_odds_difference), fixed(report.equal_opportunity_difference));
    out << fmt::format("kNN consistency {}  prejudice index {}\n", fixed(report.knn_consistency),
                       fixed(report.prejudice_index));
    for (const auto& [name, cause] : report.undefined) out << fmt::format("undefined {}: {}\n", name, cause);
    return 0;
}

int cmd_importance(const RunConfig& cfg, std::ostream& out) {
    const auto ex = load_experiment(cfg, false);
    const auto model = load_model(cfg, ex.encoded);
    const auto report =
        permutation_importance(*model, ex.split.test, importance_repeats(cfg), Rng::mix(cfg.seed(), 3), cfg.threads);
    OutputDir dir(cfg.out());
    dir.write("importance_" + model->kind() + ".csv", importance_to_csv(report));
    dir.finish(cfg);
    out << fmt::format("baseline accuracy {:.4f}\n", report.baseline_accuracy);
    for (std::size_t k = 0; k < std::min<std::size_t>(10, report.entries.size()); ++k) {
        const auto& e = report.entries[k];
        out << fmt::format("{:>3}  {:<45} {:.5f} (std {:.5f})\n", e.rank, e.feature, e.mean_drop, e.std);
    }
    out << fmt::format("rank of {}: {}\n", ex.protected_feature, rank_of(report, ex.protected_feature));
    return 0;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    for (const auto& item : split_list(text)) grid.push_back(parse_double(item, "--grid"));
    return grid;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
    const auto ex = load_experiment(cfg, true);
    SweepConfig sc;
    sc.kind = parse_model_kind(cfg.str("model"));
    sc.logreg = logreg_config(cfg);
    sc.tree = tree_config(cfg);
    sc.eval = eval_options(cfg, ex.grouping);
    sc.importance_repeats = importance_repeats(cfg);
    sc.importance_seed = Rng::mix(cfg.seed(), 3);
    sc.protected_feature = ex.protected_feature;

    OutputDir dir(cfg.out());
    const auto grid_text = cfg.str("grid");
    const auto counts_text = cfg.str("n-pairs");
    if (!grid_text.empty()) {
        const auto grid = parse_grid(grid_text);
        const auto sweep = sweep_eta(ex.split, ex.test_groups, sc, grid);
        dir.write("sweep_eta.csv", sweep_to_csv(sweep));
        if (sc.kind == ModelKind::logreg) {
            for (std::size_t k = 0; k < grid.size(); ++k) {
                dir.write("trace_eta_" + csv::format_double(grid[k]) + ".csv", trace_to_csv(sweep.traces[k]));
            }
            dir.write("tradeoff.csv", tradeoff_to_csv(sweep));
        }
        out << "eta sweep (" << to_string(sc.kind) << ")\n" << sweep_to_csv(sweep);
    }
    if (!counts_text.empty()) {
        std::vector<std::size_t> counts;
        for (const auto& item : split_list(counts_text)) {
            if (item == "all") {
                counts.push_back(ex.split.train_pairs.size());
            } else {
                const auto v = parse_int(item, "--n-pairs");
                if (v < 1) throw DataError("--n-pairs entries must be >= 1");
                counts.push_back(static_cast<std::size_t>(v));
            }
        }
        const auto sweep =
            sweep_pair_count(ex.split, ex.test_groups, sc, counts, cfg.num("eta"), Rng::mix(cfg.seed(), 2));
        dir.write("sweep_pairs.csv", sweep_to_csv(sweep));
        out << "pair-count sweep (" << to_string(sc.kind) << ", eta " << cfg.str("eta") << ")\n"
            << sweep_to_csv(sweep);
    }
    if (grid_text.empty() && counts_text.empty()) throw DataError("sweep needs --grid and/or --n-pairs");
    dir.finish(cfg);
    return 0;
}

int dispatch(const RunConfig& cfg, std::ostream& out) {
    if (cfg.command == "ingest") return cmd_ingest(cfg, out);
    if (cfg.command == "mine-pairs") return cmd_mine_pairs(cfg, out);
    if (cfg.command == "train") return cmd_train(cfg, out);
    if (cfg.command == "evaluate") return cmd_evaluate(cfg, out);
    if (cfg.command == "importance") return cmd_importance(cfg, out);
    if (cfg.command == "sweep") return cmd_sweep(cfg, out);
    throw DataError("unknown command '" + cfg.command + "'");
}

}  // namespace

KvConfig default_config() {
    KvConfig kv;
    kv.set("data", "");
    kv.set("schema", "");
    kv.set("match", "");
    kv.set("pairs", "");
    kv.set("model", "tree");
    kv.set("model-file", "");
    kv.set("eta", "0");
    kv.set("grid", "");
    kv.set("n-pairs", "");
    kv.set("seed", "42");
    kv.set("out", "");
    kv.set("test-ratio", "0.2");
    kv.set("protected", "");
    kv.set("group-threshold", "37");
    kv.set("privileged-value", "");
    kv.set("max-pairs", "");
    kv.set("epochs", "500");
    kv.set("learning-rate", "0.5");
    kv.set("l2", "1e-06");
    kv.set("max-depth", "5");
    kv.set("min-leaf", "5");
    kv.set("knn-k", "5");
    kv.set("importance-repeats", "5");
    return kv;
}

KvConfig resolve_config(const KvConfig& file, const KvConfig& flags) {
    auto kv = default_config();
    for (const auto* layer : {&file, &flags}) {
        for (const auto& [k, v] : layer->entries()) {
            if (!known_key(k)) throw DataError("unknown configuration key '" + k + "'");
            kv.set(k, v);
        }
    }
    return kv;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Paired-consistency fairness: mine pairs, train regularized models, audit fairness.", "pairfair"};
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* help;
    };
    constexpr Command kCommands[] = {
        {"ingest", "parse and one-hot encode a CSV, write encoded.csv and ingest.json"},
        {"mine-pairs", "mine consistency pairs with a match spec, write pairs.csv and match_stats.json"},
        {"train", "train a logreg or tree model on the pair-aware split, write model.json"},
        {"evaluate", "audit a model: report.json and fairness_report.csv"},
        {"importance", "permutation importance of a model: importance_<model>.csv"},
        {"sweep", "eta sweep (sweep_eta.csv) and/or pair-count sweep (sweep_pairs.csv)"},
    };

    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::string> config_files;
    unsigned threads = 1;
    std::string manifest_path;
    std::vector<std::pair<CLI::App*, std::string>> subs;
    std::map<std::string, std::map<std::string, CLI::Option*>> options;
    for (const auto& c : kCommands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", config_files[c.name], "run config file (key = value, keys as flag names)");
        sub->add_option("--threads", threads, "worker threads (results do not depend on it)");
        for (const auto& o : kOptions) {
            options[c.name][o.key] = sub->add_option(std::string("--") + o.key, values[c.name][o.key], o.help);
        }
        subs.emplace_back(sub, c.name);
    }
    auto* rerun = app.add_subcommand("rerun", "replay a run from its manifest.json");
    rerun->add_option("manifest", manifest_path, "manifest.json of a previous run")->required();
    rerun->add_option("--threads", threads, "worker threads (results do not depend on it)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg;
        cfg.threads = std::max(1u, threads);
        if (rerun->parsed()) {
            json manifest;
            try {
                manifest = json::parse(csv::read_file(manifest_path));
            } catch (const json::exception& e) {
                throw DataError("invalid manifest " + manifest_path + ": " + e.what());
            }
            cfg.command = manifest.at("command").get<std::string>();
            KvConfig flags;
            for (const auto& [k, v] : manifest.at("config").items()) flags.set(k, v.get<std::string>());
            cfg.kv = resolve_config(KvConfig{}, flags);
        } else {
            for (const auto& [sub, name] : subs) {
                if (!sub->parsed()) continue;
                cfg.command = name;
                KvConfig file;
                if (!config_files[name].empty()) file = KvConfig::load(config_files[name]);
                KvConfig flags;
                for (const auto& o : kOptions) {
                    if (options[name][o.key]->count() > 0) flags.set(o.key, values[name][o.key]);
                }
                cfg.kv = resolve_config(file, flags);
            }
        }
        if (cfg.kv.get_or("out", "").empty()) {
            const char* root = std::getenv(kOutRootEnv);
            cfg.kv.set("out", (fs::path(root && *root ? root : "runs") / cfg.command).string());
        }
        return dispatch(cfg, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace pairfair::cli
