#include "pairfair/logreg.hpp"

#include <fmt/format.h>

#include <cmath>
#include <json.hpp>

#include "pairfair/csv.hpp"
#include "pairfair/error.hpp"

namespace pairfair {

using nlohmann::json;

void TrainConfig::validate() const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw DataError(fmt::format("eta must be >= 0, got {}", eta));
    if (!(learning_rate > 0.0)) throw DataError(fmt::format("learning rate must be > 0, got {}", learning_rate));
    if (epochs < 1) throw DataError(fmt::format("epochs must be >= 1, got {}", epochs));
    if (!(l2 >= 0.0)) throw DataError(fmt::format("l2 must be >= 0, got {}", l2));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_dims(std::size_t model_features, const EncodedDataset& data) {
    if (model_features != data.num_features()) {
        throw DataError(fmt::format("model expects {} features, data has {}", model_features, data.num_features()));
    }
}

std::vector<double> logits(const Matrix& x, std::span<const double> w, double b) {
    std::vector<double> z(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r);
        double s = b;
        for (std::size_t f = 0; f < w.size(); ++f) s += w[f] * row[f];
        z[r] = s;
    }
    return z;
}

LossParts loss_from_logits(std::span<const double> z, std::span<const double> p, const EncodedDataset& data,
                           const PairSet& pairs, double eta, double l2_term) {
    LossParts loss;
    double ce = 0.0;
    for (std::size_t r = 0; r < z.size(); ++r) ce += softplus(z[r]) - (data.labels[r] ? z[r] : 0.0);
    loss.ce = ce / static_cast<double>(z.size());
    if (!pairs.empty()) {
        double pair = 0.0;
        for (const auto& q : pairs.pairs) {
            const double d = p[q.i] - p[q.j];
            pair += q.weight * d * d;
        }
        loss.pair = pair / static_cast<double>(pairs.size());
    }
    loss.l2 = l2_term;
    loss.total = loss.ce + eta * loss.pair + loss.l2;
    return loss;
}

// Gradient of mean CE + eta * pair penalty with respect to (w, b) for features x.
// The l2 part is added by the caller since it depends on the parametrization.
void data_gradient(const Matrix& x, std::span<const double> p, const EncodedDataset& data, const PairSet& pairs,
                   double eta, std::vector<double>& grad) {
    const std::size_t nf = x.cols();
    grad.assign(nf + 1, 0.0);
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double resid = p[r] - (data.labels[r] ? 1.0 : 0.0);
        const auto row = x.row(r);
        for (std::size_t f = 0; f < nf; ++f) grad[f] += resid * row[f];
        grad[nf] += resid;
    }
    for (auto& g : grad) g *= inv_n;

    if (eta == 0.0 || pairs.empty()) return;
    std::vector<double> pen(nf + 1, 0.0);
    for (const auto& q : pairs.pairs) {
        const double p1 = p[q.i], p2 = p[q.j];
        const double d = q.weight * (p1 - p2);
        const double s1 = d * p1 * (1.0 - p1);
        const double s2 = d * p2 * (1.0 - p2);
        const auto x1 = x.row(q.i);
        const auto x2 = x.row(q.j);
        for (std::size_t f = 0; f < nf; ++f) pen[f] += s1 * x1[f] - s2 * x2[f];
        pen[nf] += s1 - s2;
    }
    const double scale = eta * 2.0 / static_cast<double>(pairs.size());
    for (std::size_t f = 0; f <= nf; ++f) grad[f] += scale * pen[f];
}

std::vector<double> sigmoid_all(std::span<const double> z) {
    std::vector<double> p(z.size());
    for (std::size_t r = 0; r < z.size(); ++r) p[r] = sigmoid(z[r]);
    return p;
}

}  // namespace

std::vector<double> LogisticModel::predict_proba(const Matrix& rows) const {
    if (rows.cols() != weights.size()) {
        throw DataError(fmt::format("model expects {} features, rows have {}", weights.size(), rows.cols()));
    }
    return sigmoid_all(logits(rows, weights, bias));
}

LossParts logistic_loss(const LogisticModel& model, const EncodedDataset& train, const PairSet& pairs,
                        const TrainConfig& cfg) {
    check_dims(model.num_features(), train);
    const auto z = logits(train.matrix, model.weights, model.bias);
    const auto p = sigmoid_all(z);
    double sq = 0.0;
    for (double w : model.weights) sq += w * w;
    return loss_from_logits(z, p, train, pairs, cfg.eta, cfg.l2 * sq);
}

std::vector<double> gradient(const LogisticModel& model, const EncodedDataset& train, const PairSet& pairs,
                             const TrainConfig& cfg) {
    check_dims(model.num_features(), train);
    pairs.validate(train.size());
    const auto p = sigmoid_all(logits(train.matrix, model.weights, model.bias));
    std::vector<double> grad;
    data_gradient(train.matrix, p, train, pairs, cfg.eta, grad);
    for (std::size_t f = 0; f < model.weights.size(); ++f) grad[f] += 2.0 * cfg.l2 * model.weights[f];
    return grad;
}

LogregResult train_logreg(const EncodedDataset& train, const PairSet& pairs, const TrainConfig& cfg) {
    cfg.validate();
    if (train.size() == 0) throw DataError("cannot train on an empty dataset");
    if (cfg.eta > 0.0 && pairs.empty()) throw DataError("eta > 0 requires a non-empty pair set");
    pairs.validate(train.size());

    const std::size_t n = train.size();
    const std::size_t nf = train.num_features();

    // Affine reparametrization z = (x - mean) / scale. Descent runs on (v, c)
    // with w = v / scale and b = c - sum(v * mean / scale); logits are equal.
    std::vector<double> mean(nf, 0.0), scale(nf, 1.0);
    const Matrix* x = &train.matrix;
    Matrix standardized;
    if (cfg.standardize) {
        for (std::size_t f = 0; f < nf; ++f) {
            double s = 0.0;
            for (std::size_t r = 0; r < n; ++r) s += train.matrix(r, f);
            mean[f] = s / static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                const double d = train.matrix(r, f) - mean[f];
                ss += d * d;
            }
            const double sd = std::sqrt(ss / static_cast<double>(n));
            scale[f] = sd > 0.0 ? sd : 1.0;
        }
        standardized = Matrix(n, nf);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t f = 0; f < nf; ++f) standardized(r, f) = (train.matrix(r, f) - mean[f]) / scale[f];
        }
        x = &standardized;
    }

    std::vector<double> v(nf, 0.0);
    double c = 0.0;
    auto raw_l2 = [&] {
        double sq = 0.0;
        for (std::size_t f = 0; f < nf; ++f) {
            const double w = v[f] / scale[f];
            sq += w * w;
        }
        return cfg.l2 * sq;
    };

    LogregResult result;
    result.trace.epochs.reserve(static_cast<std::size_t>(cfg.epochs));
    auto z = logits(*x, v, c);
    auto p = sigmoid_all(z);
    std::vector<double> grad;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        data_gradient(*x, p, train, pairs, cfg.eta, grad);
        for (std::size_t f = 0; f < nf; ++f) grad[f] += 2.0 * cfg.l2 * v[f] / (scale[f] * scale[f]);
        for (std::size_t f = 0; f < nf; ++f) v[f] -= cfg.learning_rate * grad[f];
        c -= cfg.learning_rate * grad[nf];

        z = logits(*x, v, c);
        p = sigmoid_all(z);
        const auto loss = loss_from_logits(z, p, train, pairs, cfg.eta, raw_l2());
        if (!std::isfinite(loss.total)) {
            throw NumericError(fmt::format("logistic regression diverged at epoch {} (loss {})", epoch, loss.total));
        }
        result.trace.epochs.push_back(loss);
    }

    auto& model = result.model;
    model.weights.resize(nf);
    model.bias = c;
    for (std::size_t f = 0; f < nf; ++f) {
        model.weights[f] = v[f] / scale[f];
        model.bias -= v[f] * mean[f] / scale[f];
    }
    model.feature_names = train.feature_names();
    model.config = cfg;
    double norm = 0.0;
    for (double g : gradient(model, train, pairs, cfg)) norm += g * g;
    model.final_gradient_norm = std::sqrt(norm);
    return result;
}

namespace {

json config_json(const TrainConfig& cfg) {
    return {{"eta", cfg.eta},       {"learning_rate", cfg.learning_rate}, {"epochs", cfg.epochs},
            {"seed", cfg.seed},     {"l2", cfg.l2},                       {"standardize", cfg.standardize}};
}

}  // namespace

std::string to_json(const LogisticModel& model) {
    json j;
    j["kind"] = "logreg";
    j["feature_names"] = model.feature_names;
    j["weights"] = model.weights;
    j["bias"] = model.bias;
    j["config"] = config_json(model.config);
    j["final_gradient_norm"] = model.final_gradient_norm;
    return j.dump(2) + "\n";
}

LogisticModel logistic_from_json(const std::string& text) {
    try {
        const auto j = json::parse(text);
        if (j.at("kind") != "logreg") throw DataError("model file is not a logistic regression model");
        LogisticModel m;
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        const auto& c = j.at("config");
        m.config.eta = c.at("eta");
        m.config.learning_rate = c.at("learning_rate");
        m.config.epochs = c.at("epochs");
        m.config.seed = c.at("seed");
        m.config.l2 = c.at("l2");
        m.config.standardize = c.at("standardize");
        m.final_gradient_norm = j.value("final_gradient_norm", 0.0);
        if (m.weights.size() != m.feature_names.size()) throw DataError("model weights and feature names differ in length");
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid logistic model JSON: ") + e.what());
    }
}

std::string trace_to_csv(const TrainingTrace& trace) {
    std::string out = "epoch,ce_loss,pair_loss,total\n";
    for (std::size_t e = 0; e < trace.epochs.size(); ++e) {
        const auto& l = trace.epochs[e];
        out += fmt::format("{},{},{},{}\n", e + 1, csv::format_double(l.ce), csv::format_double(l.pair),
                           csv::format_double(l.total));
    }
    return out;
}

}  // namespace pairfair
