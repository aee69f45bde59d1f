#include "pairfair/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pairfair/error.hpp"
#include "pairfair/parallel.hpp"

namespace pairfair {

Predictions Predictions::from_scores(std::vector<double> scores, double threshold) {
    Predictions p;
    p.threshold = threshold;
    p.labels.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i]) || scores[i] < 0.0 || scores[i] > 1.0) {
            throw NumericError(fmt::format("score {} at row {} is outside [0, 1]", scores[i], i));
        }
        p.labels[i] = scores[i] >= threshold ? 1 : 0;
    }
    p.scores = std::move(scores);
    return p;
}

Predictions Predictions::from_labels(std::vector<std::uint8_t> labels) {
    std::vector<double> scores(labels.begin(), labels.end());
    return from_scores(std::move(scores), 0.5);
}

GroupAssignment make_groups(const Dataset& dataset, std::span<const std::size_t> row_origin,
                            const GroupingRule& rule) {
    const auto col = dataset.schema.index_of(rule.column);
    const auto& spec = dataset.schema.columns[col];
    GroupAssignment g;
    g.d.reserve(row_origin.size());
    std::int32_t privileged_code = -1;
    if (spec.kind == ColumnKind::categorical) {
        const auto it = std::find(spec.vocabulary.begin(), spec.vocabulary.end(), rule.privileged_value);
        if (it == spec.vocabulary.end()) {
            throw DataError("privileged value '" + rule.privileged_value + "' not found in column '" + rule.column + "'");
        }
        privileged_code = static_cast<std::int32_t>(it - spec.vocabulary.begin());
    }
    for (auto r : row_origin) {
        if (spec.kind == ColumnKind::numeric) {
            const double v = dataset.numeric(r, col);
            if (std::isnan(v)) throw DataError(fmt::format("row {} has no value for '{}'", r, rule.column));
            g.d.push_back(v >= rule.threshold ? 1 : 0);
        } else {
            g.d.push_back(dataset.code(r, col) == privileged_code ? 1 : 0);
        }
    }
    return g;
}

namespace {

void require_pairs(const Predictions& preds, const PairSet& pairs) {
    if (pairs.empty()) throw DataError("paired consistency needs at least one pair");
    pairs.validate(preds.size());
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw DataError(fmt::format("{}: size mismatch ({} vs {})", what, a, b));
}

struct GroupRates {
    std::array<std::size_t, 2> count{0, 0};
    std::array<std::size_t, 2> positive{0, 0};
};

GroupRates group_rates(const Predictions& preds, const GroupAssignment& groups) {
    require_same_size(preds.size(), groups.size(), "group metric");
    GroupRates r;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        ++r.count[groups.d[i]];
        r.positive[groups.d[i]] += preds.labels[i];
    }
    if (r.count[0] == 0 || r.count[1] == 0) {
        throw DataError(fmt::format("group metric needs both groups non-empty (unprivileged {}, privileged {})",
                                    r.count[0], r.count[1]));
    }
    return r;
}

double rate(std::size_t num, std::size_t den) { return static_cast<double>(num) / static_cast<double>(den); }

// Per-group confusion: [group][truth][prediction].
using GroupConfusion = std::array<std::array<std::array<std::size_t, 2>, 2>, 2>;

GroupConfusion group_confusion(const Predictions& preds, std::span<const std::uint8_t> truth,
                               const GroupAssignment& groups) {
    require_same_size(preds.size(), truth.size(), "confusion");
    require_same_size(preds.size(), groups.size(), "confusion");
    GroupConfusion c{};
    for (std::size_t i = 0; i < preds.size(); ++i) ++c[groups.d[i]][truth[i]][preds.labels[i]];
    return c;
}

double tpr(const GroupConfusion& c, int g) {
    const auto pos = c[g][1][0] + c[g][1][1];
    if (pos == 0) throw DataError(fmt::format("group D={} has no ground-truth positives; TPR undefined", g));
    return rate(c[g][1][1], pos);
}

double fpr(const GroupConfusion& c, int g) {
    const auto neg = c[g][0][0] + c[g][0][1];
    if (neg == 0) throw DataError(fmt::format("group D={} has no ground-truth negatives; FPR undefined", g));
    return rate(c[g][0][1], neg);
}

}  // namespace

double paired_consistency_cls(const Predictions& preds, const PairSet& pairs) {
    require_pairs(preds, pairs);
    std::size_t agree = 0;
    for (const auto& p : pairs.pairs) agree += preds.labels[p.i] == preds.labels[p.j];
    return rate(agree, pairs.size());
}

double paired_consistency_reg(const Predictions& preds, const PairSet& pairs, double delta_max) {
    require_pairs(preds, pairs);
    if (!(delta_max > 0.0)) throw DataError(fmt::format("delta_max must be > 0, got {}", delta_max));
    double sum = 0.0;
    for (const auto& p : pairs.pairs) {
        const double gap = preds.scores[p.i] - preds.scores[p.j];
        const double sq = gap * gap;
        if (sq > delta_max) {
            throw NumericError(fmt::format("squared gap {} on pair ({}, {}) exceeds delta_max {}", sq, p.i, p.j,
                                           delta_max));
        }
        sum += sq;
    }
    return 1.0 - sum / (static_cast<double>(pairs.size()) * delta_max);
}

double paired_consistency_weighted(const Predictions& preds, const PairSet& pairs) {
    require_pairs(preds, pairs);
    double agree = 0.0, total = 0.0;
    for (const auto& p : pairs.pairs) {
        total += p.weight;
        if (preds.labels[p.i] == preds.labels[p.j]) agree += p.weight;
    }
    return agree / total;
}

PrcResult prc_score(double precision, double recall, double paired_consistency, std::array<double, 3> weights) {
    const std::array<double, 3> x{precision, recall, paired_consistency};
    for (std::size_t k = 0; k < 3; ++k) {
        if (!(weights[k] > 0.0)) throw DataError("PRC weights must be positive");
        if (!(x[k] >= 0.0 && x[k] <= 1.0)) throw DataError(fmt::format("PRC input {} outside [0, 1]", x[k]));
    }
    if (x[0] == 0.0 || x[1] == 0.0 || x[2] == 0.0) return {0.0, true};
    double wsum = 0.0, denom = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        wsum += weights[k];
        denom += weights[k] / x[k];
    }
    return {wsum / denom, false};
}

double statistical_parity_difference(const Predictions& preds, const GroupAssignment& groups) {
    const auto r = group_rates(preds, groups);
    return rate(r.positive[0], r.count[0]) - rate(r.positive[1], r.count[1]);
}

double disparate_impact(const Predictions& preds, const GroupAssignment& groups) {
    const auto r = group_rates(preds, groups);
    if (r.positive[1] == 0) {
        throw NumericError("disparate impact undefined: privileged group has no positive predictions");
    }
    return rate(r.positive[0], r.count[0]) / rate(r.positive[1], r.count[1]);
}

double average_odds_difference(const Predictions& preds, std::span<const std::uint8_t> truth,
                               const GroupAssignment& groups) {
    const auto c = group_confusion(preds, truth, groups);
    return 0.5 * ((fpr(c, 0) - fpr(c, 1)) + (tpr(c, 0) - tpr(c, 1)));
}

double equal_opportunity_difference(const Predictions& preds, std::span<const std::uint8_t> truth,
                                    const GroupAssignment& groups) {
    const auto c = group_confusion(preds, truth, groups);
    return tpr(c, 0) - tpr(c, 1);
}

double knn_consistency(const Predictions& preds, const Matrix& features, std::size_t k, unsigned threads) {
    const std::size_t n = preds.size();
    require_same_size(n, features.rows(), "kNN consistency");
    if (k < 1 || k >= n) throw DataError(fmt::format("kNN consistency needs 1 <= k < N, got k={} N={}", k, n));

    std::vector<double> deviation(n);
    parallel_for(n, threads, [&](std::size_t i) {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(n - 1);
        const auto xi = features.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const auto xj = features.row(j);
            double d = 0.0;
            for (std::size_t f = 0; f < xi.size(); ++f) {
                const double diff = xi[f] - xj[f];
                d += diff * diff;
            }
            dist.emplace_back(d, j);
        }
        // (distance, index) ordering breaks ties toward the lower row.
        std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
        std::size_t positives = 0;
        for (std::size_t m = 0; m < k; ++m) positives += preds.labels[dist[m].second];
        deviation[i] = std::abs(static_cast<double>(preds.labels[i]) - rate(positives, k));
    });
    double sum = 0.0;
    for (double d : deviation) sum += d;
    return 1.0 - sum / static_cast<double>(n);
}

double prejudice_index(const Predictions& preds, const GroupAssignment& groups) {
    require_same_size(preds.size(), groups.size(), "prejudice index");
    const std::size_t n = preds.size();
    if (n == 0) throw DataError("prejudice index of an empty prediction set");
    // Count form n_yd/n * ln(n_yd * n / (n_y * n_d)) keeps exact cases exact.
    std::array<std::array<double, 2>, 2> joint{};
    std::array<double, 2> ny{}, nd{};
    for (std::size_t i = 0; i < n; ++i) {
        joint[preds.labels[i]][groups.d[i]] += 1.0;
        ny[preds.labels[i]] += 1.0;
        nd[groups.d[i]] += 1.0;
    }
    const auto total = static_cast<double>(n);
    double mi = 0.0;
    for (int y = 0; y < 2; ++y) {
        for (int d = 0; d < 2; ++d) {
            if (joint[y][d] > 0.0) mi += joint[y][d] / total * std::log(joint[y][d] * total / (ny[y] * nd[d]));
        }
    }
    return std::max(mi, 0.0);
}

Confusion confusion(const Predictions& preds, std::span<const std::uint8_t> truth) {
    require_same_size(preds.size(), truth.size(), "confusion");
    Confusion c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (truth[i]) (preds.labels[i] ? c.tp : c.fn)++;
        else (preds.labels[i] ? c.fp : c.tn)++;
    }
    return c;
}

double accuracy(const Predictions& preds, std::span<const std::uint8_t> truth) {
    const auto c = confusion(preds, truth);
    const auto n = c.tp + c.tn + c.fp + c.fn;
    if (n == 0) throw DataError("accuracy of an empty prediction set");
    return rate(c.tp + c.tn, n);
}

}  // namespace pairfair
