#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairfair/classifier.hpp"
#include "pairfair/data.hpp"
#include "pairfair/pair_set.hpp"

namespace pairfair {

struct TrainConfig {
    double eta = 0.0;            // fairness trade-off
    double learning_rate = 0.5;
    int epochs = 500;
    std::uint64_t seed = 0;
    double l2 = 1e-6;
    // Run descent on column-standardized features and map the result back to
    // raw coordinates. The objective is unchanged; only the step geometry is.
    bool standardize = true;

    void validate() const;
};

class LogisticModel : public Classifier {
public:
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<std::string> feature_names;
    TrainConfig config;
    double final_gradient_norm = 0.0;

    LogisticModel() = default;
    explicit LogisticModel(std::size_t num_features) : weights(num_features, 0.0) {}

    std::size_t num_features() const override { return weights.size(); }
    std::vector<double> predict_proba(const Matrix& rows) const override;
    std::string kind() const override { return "logreg"; }
};

struct LossParts {
    double ce = 0.0;
    double pair = 0.0;  // weighted mean squared probability gap over pairs
    double l2 = 0.0;    // l2 * |w|^2
    double total = 0.0; // ce + eta * pair + l2
};

struct TrainingTrace {
    std::vector<LossParts> epochs;  // loss after each update
};

struct LogregResult {
    LogisticModel model;
    TrainingTrace trace;
};

double sigmoid(double z);

LossParts logistic_loss(const LogisticModel& model, const EncodedDataset& train, const PairSet& pairs,
                        const TrainConfig& cfg);

/// Analytic gradient of the penalized loss in raw coordinates:
/// weights first, bias last.
std::vector<double> gradient(const LogisticModel& model, const EncodedDataset& train, const PairSet& pairs,
                             const TrainConfig& cfg);

/// Full-batch gradient descent from zero on
/// mean CE + eta * (1/M) sum_j w_j (p1 - p2)^2 + l2 |w|^2.
/// Throws NumericError naming the epoch on divergence.
LogregResult train_logreg(const EncodedDataset& train, const PairSet& pairs, const TrainConfig& cfg);

std::string to_json(const LogisticModel& model);
LogisticModel logistic_from_json(const std::string& text);
std::string trace_to_csv(const TrainingTrace& trace);

}  // namespace pairfair
