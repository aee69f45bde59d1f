#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pairfair/data.hpp"
#include "pairfair/matrix.hpp"
#include "pairfair/pair_set.hpp"

namespace pairfair {

/// Model output: probability scores and labels thresholded at `threshold`.
struct Predictions {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    double threshold = 0.5;

    static Predictions from_scores(std::vector<double> scores, double threshold = 0.5);
    /// Hard labels only; scores are the labels themselves.
    static Predictions from_labels(std::vector<std::uint8_t> labels);

    std::size_t size() const noexcept { return labels.size(); }
};

/// Protected-group membership: 1 = privileged, 0 = unprivileged.
struct GroupAssignment {
    std::vector<std::uint8_t> d;
    std::size_t size() const noexcept { return d.size(); }
};

/// How a protected column is binarized. Numeric columns: value >= threshold is
/// privileged. Categorical columns: value == privileged_value is privileged.
struct GroupingRule {
    std::string column;
    double threshold = 37.0;
    std::string privileged_value;
};

GroupAssignment make_groups(const Dataset& dataset, std::span<const std::size_t> row_origin,
                            const GroupingRule& rule);

// Paired consistency (classification): share of pairs with equal labels.
double paired_consistency_cls(const Predictions& preds, const PairSet& pairs);
// Paired consistency (regression): 1 - sum of squared score gaps / (M * delta_max).
double paired_consistency_reg(const Predictions& preds, const PairSet& pairs, double delta_max = 1.0);
// Weighted agreement normalized by the total weight.
double paired_consistency_weighted(const Predictions& preds, const PairSet& pairs);

struct PrcResult {
    double value = 0.0;
    bool zero_input = false;
};
/// Weighted harmonic mean of precision, recall and paired consistency.
PrcResult prc_score(double precision, double recall, double paired_consistency,
                    std::array<double, 3> weights = {1.0, 1.0, 1.0});

double statistical_parity_difference(const Predictions& preds, const GroupAssignment& groups);
double disparate_impact(const Predictions& preds, const GroupAssignment& groups);
double average_odds_difference(const Predictions& preds, std::span<const std::uint8_t> truth,
                               const GroupAssignment& groups);
double equal_opportunity_difference(const Predictions& preds, std::span<const std::uint8_t> truth,
                                    const GroupAssignment& groups);
double knn_consistency(const Predictions& preds, const Matrix& features, std::size_t k,
                       unsigned threads = 1);
double prejudice_index(const Predictions& preds, const GroupAssignment& groups);

double accuracy(const Predictions& preds, std::span<const std::uint8_t> truth);

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};
Confusion confusion(const Predictions& preds, std::span<const std::uint8_t> truth);

/// Every audit value for one (model, data, pairs, grouping) evaluation.
/// Undefined values are NaN and listed in `undefined` with their cause.
struct FairnessReport {
    double paired_consistency = 0.0;
    double paired_consistency_weighted = 0.0;
    double prc = 0.0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double statistical_parity_difference = 0.0;
    double disparate_impact = 0.0;
    double average_odds_difference = 0.0;
    double equal_opportunity_difference = 0.0;
    double knn_consistency = 0.0;
    double prejudice_index = 0.0;

    // config echo
    std::size_t knn_k = 5;
    double threshold = 0.5;
    std::string group_coding = "1=privileged,0=unprivileged";
    GroupingRule grouping;
    std::size_t num_rows = 0;
    std::size_t num_pairs = 0;
    bool prc_zero_input = false;

    std::vector<std::pair<std::string, std::string>> undefined;
};

}  // namespace pairfair
