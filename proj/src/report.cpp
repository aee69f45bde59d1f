#include "pairfair/report.hpp"

#include <fmt/format.h>

#include <cmath>
#include <json.hpp>
#include <limits>

#include "pairfair/csv.hpp"
#include "pairfair/error.hpp"
#include "pairfair/pairs.hpp"

namespace pairfair {

using nlohmann::json;

std::string to_string(ModelKind kind) { return kind == ModelKind::logreg ? "logreg" : "tree"; }

ModelKind parse_model_kind(const std::string& text) {
    if (text == "logreg") return ModelKind::logreg;
    if (text == "tree") return ModelKind::tree;
    throw DataError("unknown model kind '" + text + "' (expected logreg or tree)");
}

namespace {

constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

// Ordered (name, member) table shared by the JSON and CSV writers.
struct Field {
    const char* name;
    double FairnessReport::*member;
};

constexpr Field kFields[] = {
    {"paired_consistency", &FairnessReport::paired_consistency},
    {"paired_consistency_weighted", &FairnessReport::paired_consistency_weighted},
    {"prc", &FairnessReport::prc},
    {"accuracy", &FairnessReport::accuracy},
    {"precision", &FairnessReport::precision},
    {"recall", &FairnessReport::recall},
    {"statistical_parity_difference", &FairnessReport::statistical_parity_difference},
    {"disparate_impact", &FairnessReport::disparate_impact},
    {"average_odds_difference", &FairnessReport::average_odds_difference},
    {"equal_opportunity_difference", &FairnessReport::equal_opportunity_difference},
    {"knn_consistency", &FairnessReport::knn_consistency},
    {"prejudice_index", &FairnessReport::prejudice_index},
};

}  // namespace

FairnessReport evaluate(const Classifier& model, const EncodedDataset& test, const PairSet& test_pairs,
                        const GroupAssignment& groups, std::span<const std::uint8_t> truth,
                        const EvalOptions& options) {
    if (truth.size() != test.size() || groups.size() != test.size()) {
        throw DataError(fmt::format("evaluate: {} rows, {} truth labels, {} group labels", test.size(), truth.size(),
                                    groups.size()));
    }
    const auto preds = Predictions::from_scores(model.predict_proba(test.matrix), options.threshold);

    FairnessReport r;
    r.knn_k = options.knn_k;
    r.threshold = options.threshold;
    r.grouping = options.grouping;
    r.num_rows = test.size();
    r.num_pairs = test_pairs.size();

    auto attempt = [&](const char* name, double& slot, auto&& compute) {
        try {
            slot = compute();
        } catch (const Error& e) {
            slot = kUndefined;
            r.undefined.emplace_back(name, e.what());
        }
    };

    const auto c = confusion(preds, truth);
    attempt("accuracy", r.accuracy, [&] { return accuracy(preds, truth); });
    attempt("precision", r.precision, [&] {
        if (c.tp + c.fp == 0) throw NumericError("no positive predictions");
        return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    });
    attempt("recall", r.recall, [&] {
        if (c.tp + c.fn == 0) throw NumericError("no ground-truth positives");
        return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    });
    attempt("paired_consistency", r.paired_consistency, [&] { return paired_consistency_cls(preds, test_pairs); });
    attempt("paired_consistency_weighted", r.paired_consistency_weighted,
            [&] { return paired_consistency_weighted(preds, test_pairs); });
    attempt("prc", r.prc, [&] {
        if (std::isnan(r.precision) || std::isnan(r.recall) || std::isnan(r.paired_consistency)) {
            throw NumericError("an input of the PRC score is undefined");
        }
        const auto prc = prc_score(r.precision, r.recall, r.paired_consistency, options.prc_weights);
        r.prc_zero_input = prc.zero_input;
        return prc.value;
    });
    attempt("statistical_parity_difference", r.statistical_parity_difference,
            [&] { return statistical_parity_difference(preds, groups); });
    attempt("disparate_impact", r.disparate_impact, [&] { return disparate_impact(preds, groups); });
    attempt("average_odds_difference", r.average_odds_difference,
            [&] { return average_odds_difference(preds, truth, groups); });
    attempt("equal_opportunity_difference", r.equal_opportunity_difference,
            [&] { return equal_opportunity_difference(preds, truth, groups); });
    attempt("knn_consistency", r.knn_consistency,
            [&] { return knn_consistency(preds, test.matrix, options.knn_k, options.threads); });
    attempt("prejudice_index", r.prejudice_index, [&] { return prejudice_index(preds, groups); });
    return r;
}

std::string report_to_json(const FairnessReport& r) {
    json j = json::object();
    for (const auto& f : kFields) {
        const double v = r.*(f.member);
        j[f.name] = std::isnan(v) ? json(nullptr) : json(v);
    }
    j["knn_k"] = r.knn_k;
    j["threshold"] = r.threshold;
    j["group_coding"] = r.group_coding;
    j["group_column"] = r.grouping.column;
    j["group_threshold"] = r.grouping.threshold;
    j["group_privileged_value"] = r.grouping.privileged_value;
    j["num_rows"] = r.num_rows;
    j["num_pairs"] = r.num_pairs;
    j["prc_zero_input"] = r.prc_zero_input;
    json undefined = json::object();
    for (const auto& [name, cause] : r.undefined) undefined[name] = cause;
    j["undefined"] = undefined;
    return j.dump(2) + "\n";
}

std::string report_csv_header() {
    std::vector<std::string> cols;
    for (const auto& f : kFields) cols.emplace_back(f.name);
    for (const char* extra : {"knn_k", "threshold", "group_column", "group_threshold", "num_rows", "num_pairs"}) {
        cols.emplace_back(extra);
    }
    return csv::join(cols);
}

std::string report_to_csv(const FairnessReport& r) {
    std::vector<std::string> cells;
    for (const auto& f : kFields) {
        const double v = r.*(f.member);
        cells.push_back(std::isnan(v) ? std::string{} : csv::format_double(v));
    }
    cells.push_back(std::to_string(r.knn_k));
    cells.push_back(csv::format_double(r.threshold));
    cells.push_back(r.grouping.column);
    cells.push_back(csv::format_double(r.grouping.threshold));
    cells.push_back(std::to_string(r.num_rows));
    cells.push_back(std::to_string(r.num_pairs));
    return report_csv_header() + "\n" + csv::join(cells) + "\n";
}

RunOutcome train_and_evaluate(const SplitResult& split, const PairSet& train_pairs,
                              const GroupAssignment& test_groups, const SweepConfig& cfg, double eta) {
    RunOutcome out;
    auto finish = [&](const Classifier& model) {
        out.report = evaluate(model, split.test, split.test_pairs, test_groups, split.test.labels, cfg.eval);
        out.importance =
            permutation_importance(model, split.test, cfg.importance_repeats, cfg.importance_seed, cfg.eval.threads);
    };
    if (cfg.kind == ModelKind::logreg) {
        auto tc = cfg.logreg;
        tc.eta = eta;
        auto trained = train_logreg(split.train, train_pairs, tc);
        out.trace = std::move(trained.trace);
        out.final_loss = out.trace.epochs.back();
        finish(trained.model);
    } else {
        auto tc = cfg.tree;
        tc.eta = eta;
        const auto tree = train_tree(split.train, train_pairs, tc);
        finish(tree);
    }
    return out;
}

namespace {

SweepRow make_row(double param, const RunOutcome& run, const std::string& protected_feature) {
    SweepRow row;
    row.param = param;
    row.accuracy = run.report.accuracy;
    row.paired_consistency = run.report.paired_consistency;
    row.pct_pairs_intact = 100.0 * run.report.paired_consistency;
    const auto& entry = entry_of(run.importance, protected_feature);
    row.age_importance = entry.mean_drop;
    row.age_rank = entry.rank;
    row.statistical_parity_difference = run.report.statistical_parity_difference;
    row.average_odds_difference = run.report.average_odds_difference;
    row.disparate_impact = run.report.disparate_impact;
    row.equal_opportunity_difference = run.report.equal_opportunity_difference;
    row.ce_loss = run.final_loss.ce;
    row.pair_loss = run.final_loss.pair;
    return row;
}

}  // namespace

SweepResult sweep_eta(const SplitResult& split, const GroupAssignment& test_groups, const SweepConfig& cfg,
                      std::span<const double> grid) {
    if (grid.empty()) throw DataError("eta grid is empty");
    SweepResult sweep;
    sweep.parameter = "eta";
    sweep.kind = cfg.kind;
    sweep.grid.assign(grid.begin(), grid.end());
    for (double eta : grid) {
        auto run = train_and_evaluate(split, split.train_pairs, test_groups, cfg, eta);
        sweep.rows.push_back(make_row(eta, run, cfg.protected_feature));
        if (cfg.kind == ModelKind::logreg) sweep.traces.push_back(std::move(run.trace));
    }
    return sweep;
}

SweepResult sweep_pair_count(const SplitResult& split, const GroupAssignment& test_groups, const SweepConfig& cfg,
                             std::span<const std::size_t> counts, double eta, std::uint64_t seed) {
    if (counts.empty()) throw DataError("pair-count grid is empty");
    SweepResult sweep;
    sweep.parameter = "n_pairs";
    sweep.kind = cfg.kind;
    for (auto n : counts) {
        if (n > split.train_pairs.size()) {
            throw DataError(fmt::format("pair count {} exceeds the {} training pairs", n, split.train_pairs.size()));
        }
        const auto subset = subsample_pairs(split.train_pairs, n, seed);
        auto run = train_and_evaluate(split, subset, test_groups, cfg, eta);
        sweep.grid.push_back(static_cast<double>(n));
        sweep.rows.push_back(make_row(static_cast<double>(n), run, cfg.protected_feature));
        if (cfg.kind == ModelKind::logreg) sweep.traces.push_back(std::move(run.trace));
    }
    return sweep;
}

std::string sweep_to_csv(const SweepResult& sweep) {
    auto cell = [](double v) { return std::isnan(v) ? std::string{} : csv::format_double(v); };
    std::string out = sweep.parameter +
                      ",accuracy,paired_consistency,pct_pairs_intact,age_importance,age_rank,"
                      "statistical_parity_difference,average_odds_difference,disparate_impact,"
                      "equal_opportunity_difference";
    const bool losses = sweep.kind == ModelKind::logreg;
    if (losses) out += ",ce_loss,pair_loss";
    out += "\n";
    for (const auto& r : sweep.rows) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}", cell(r.param), cell(r.accuracy),
                           cell(r.paired_consistency), cell(r.pct_pairs_intact), cell(r.age_importance), r.age_rank,
                           cell(r.statistical_parity_difference), cell(r.average_odds_difference),
                           cell(r.disparate_impact), cell(r.equal_opportunity_difference));
        if (losses) out += "," + cell(r.ce_loss) + "," + cell(r.pair_loss);
        out += "\n";
    }
    return out;
}

std::string tradeoff_to_csv(const SweepResult& sweep) {
    if (sweep.rows.empty()) throw DataError("empty sweep");
    const auto& base = sweep.rows.front();
    std::string out = "eta,ce_loss,pair_loss,ce_ratio,pair_ratio\n";
    for (const auto& r : sweep.rows) {
        const double ce_ratio = base.ce_loss > 0.0 ? r.ce_loss / base.ce_loss : kUndefined;
        const double pair_ratio = base.pair_loss > 0.0 ? r.pair_loss / base.pair_loss : kUndefined;
        out += fmt::format("{},{},{},{},{}\n", csv::format_double(r.param), csv::format_double(r.ce_loss),
                           csv::format_double(r.pair_loss), std::isnan(ce_ratio) ? "" : csv::format_double(ce_ratio),
                           std::isnan(pair_ratio) ? "" : csv::format_double(pair_ratio));
    }
    return out;
}

}  // namespace pairfair
