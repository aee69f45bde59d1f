#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pairfair/classifier.hpp"
#include "pairfair/data.hpp"
#include "pairfair/importance.hpp"
#include "pairfair/logreg.hpp"
#include "pairfair/metrics.hpp"
#include "pairfair/tree.hpp"

namespace pairfair {

enum class ModelKind { logreg, tree };
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct EvalOptions {
    std::size_t knn_k = 5;
    double threshold = 0.5;
    std::array<double, 3> prc_weights{1.0, 1.0, 1.0};
    unsigned threads = 1;
    GroupingRule grouping;  // echoed into the report
};

/// Populates every FairnessReport field in a single pass. Metrics whose
/// preconditions fail are recorded as undefined with the error text.
FairnessReport evaluate(const Classifier& model, const EncodedDataset& test, const PairSet& test_pairs,
                        const GroupAssignment& groups, std::span<const std::uint8_t> truth,
                        const EvalOptions& options = {});

std::string report_to_json(const FairnessReport& report);
std::string report_csv_header();
std::string report_to_csv(const FairnessReport& report);

struct SweepConfig {
    ModelKind kind = ModelKind::tree;
    TrainConfig logreg;
    TreeConfig tree;
    EvalOptions eval;
    int importance_repeats = 5;
    std::uint64_t importance_seed = 0;
    std::string protected_feature = "age";
};

struct SweepRow {
    double param = 0.0;
    double accuracy = 0.0;
    double paired_consistency = 0.0;
    double pct_pairs_intact = 0.0;
    double age_importance = 0.0;
    int age_rank = 0;
    double statistical_parity_difference = 0.0;
    double average_odds_difference = 0.0;
    double disparate_impact = 0.0;
    double equal_opportunity_difference = 0.0;
    // Final training loss components; logreg only.
    double ce_loss = 0.0;
    double pair_loss = 0.0;
};

struct SweepResult {
    std::string parameter;  // "eta" or "n_pairs"
    ModelKind kind = ModelKind::tree;
    std::vector<double> grid;
    std::vector<SweepRow> rows;
    std::vector<TrainingTrace> traces;  // one per grid point for logreg
};

/// Everything one model run produces on a split.
struct RunOutcome {
    FairnessReport report;
    ImportanceReport importance;
    LossParts final_loss;
    TrainingTrace trace;
};

RunOutcome train_and_evaluate(const SplitResult& split, const PairSet& train_pairs,
                              const GroupAssignment& test_groups, const SweepConfig& cfg, double eta);

SweepResult sweep_eta(const SplitResult& split, const GroupAssignment& test_groups, const SweepConfig& cfg,
                      std::span<const double> grid);

/// Subsamples the training pairs to each count (seeded), trains at `eta`, and
/// evaluates on the full test pair set.
SweepResult sweep_pair_count(const SplitResult& split, const GroupAssignment& test_groups,
                             const SweepConfig& cfg, std::span<const std::size_t> counts, double eta,
                             std::uint64_t seed);

std::string sweep_to_csv(const SweepResult& sweep);
/// Final loss components relative to the first grid point (eta = 0 baseline).
std::string tradeoff_to_csv(const SweepResult& sweep);

}  // namespace pairfair
