#include "pairfair/tree.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <optional>

#include "pairfair/csv.hpp"
#include "pairfair/error.hpp"

namespace pairfair {

using nlohmann::json;

void TreeConfig::validate() const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw DataError(fmt::format("eta must be >= 0, got {}", eta));
    if (max_depth < 1) throw DataError(fmt::format("max_depth must be >= 1, got {}", max_depth));
    if (min_leaf < 1) throw DataError("min_leaf must be >= 1");
}

double gini(std::size_t positives, std::size_t total) {
    if (total == 0) return 0.0;
    const double p = static_cast<double>(positives) / static_cast<double>(total);
    const double q = static_cast<double>(total - positives) / static_cast<double>(total);
    return 1.0 - p * p - q * q;
}

std::vector<double> candidate_thresholds(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::vector<double> out;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] != values[k - 1]) out.push_back(values[k - 1] + (values[k] - values[k - 1]) / 2.0);
    }
    return out;
}

namespace {

struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    SplitScore score;
};

class Grower {
public:
    Grower(const EncodedDataset& data, const PairSet& pairs, const TreeConfig& cfg)
        : data_(data), pairs_(pairs), cfg_(cfg) {
        columns_.resize(data.num_features());
        for (std::size_t f = 0; f < columns_.size(); ++f) columns_[f] = data.matrix.column(f);
    }

    DecisionTree grow() {
        std::vector<std::size_t> rows(data_.size());
        for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
        std::vector<std::size_t> pair_ids(pairs_.size());
        for (std::size_t k = 0; k < pair_ids.size(); ++k) pair_ids[k] = k;
        build(rows, pair_ids, 0);
        tree_.feature_names = data_.feature_names();
        tree_.config = cfg_;
        return std::move(tree_);
    }

private:
    int build(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& pair_ids, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        {
            auto& node = tree_.nodes.back();
            node.depth = depth;
            for (auto r : rows) (data_.labels[r] ? node.positives : node.negatives)++;
            node.pairs_at_node = pair_ids.size();
        }
        const auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        if (depth >= cfg_.max_depth || node.positives == 0 || node.negatives == 0 ||
            rows.size() < 2 * cfg_.min_leaf) {
            return id;
        }
        const auto best = best_split(rows, pair_ids, node.positives);
        if (!best) return id;

        const auto& col = columns_[static_cast<std::size_t>(best->feature)];
        std::vector<std::size_t> left_rows, right_rows;
        for (auto r : rows) (col[r] <= best->threshold ? left_rows : right_rows).push_back(r);
        std::vector<std::size_t> left_pairs, right_pairs;
        for (auto k : pair_ids) {
            const bool li = col[pairs_.pairs[k].i] <= best->threshold;
            const bool lj = col[pairs_.pairs[k].j] <= best->threshold;
            if (li == lj) (li ? left_pairs : right_pairs).push_back(k);
        }

        const int left = build(left_rows, left_pairs, depth + 1);
        const int right = build(right_rows, right_pairs, depth + 1);
        auto& split = tree_.nodes[static_cast<std::size_t>(id)];
        split.feature = best->feature;
        split.threshold = best->threshold;
        split.score = best->score;
        split.left = left;
        split.right = right;
        return id;
    }

    std::optional<Candidate> best_split(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& pair_ids,
                                        std::size_t positives) const {
        const std::size_t n = rows.size();
        const double parent = gini(positives, n);
        const double dn = static_cast<double>(n);
        const std::size_t npairs = pair_ids.size();
        std::optional<Candidate> best;

        std::vector<std::pair<double, std::uint8_t>> sorted(n);
        std::vector<double> lo(npairs), hi(npairs);
        for (std::size_t f = 0; f < columns_.size(); ++f) {
            const auto& col = columns_[f];
            for (std::size_t k = 0; k < n; ++k) sorted[k] = {col[rows[k]], data_.labels[rows[k]]};
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            if (sorted.front().first == sorted.back().first) continue;

            for (std::size_t k = 0; k < npairs; ++k) {
                const double a = col[pairs_.pairs[pair_ids[k]].i];
                const double b = col[pairs_.pairs[pair_ids[k]].j];
                lo[k] = std::min(a, b);
                hi[k] = std::max(a, b);
            }
            std::sort(lo.begin(), lo.end());
            std::sort(hi.begin(), hi.end());
            std::size_t lo_le = 0, hi_le = 0;

            std::size_t left_pos = 0;
            for (std::size_t k = 1; k < n; ++k) {
                left_pos += sorted[k - 1].second;
                if (sorted[k].first == sorted[k - 1].first) continue;
                const double threshold = sorted[k - 1].first + (sorted[k].first - sorted[k - 1].first) / 2.0;
                const std::size_t nl = k, nr = n - k;
                if (nl < cfg_.min_leaf || nr < cfg_.min_leaf) continue;

                const double gain = parent - (static_cast<double>(nl) / dn) * gini(left_pos, nl) -
                                    (static_cast<double>(nr) / dn) * gini(positives - left_pos, nr);
                // A pair is broken when one member is <= threshold and the other is not.
                while (lo_le < npairs && lo[lo_le] <= threshold) ++lo_le;
                while (hi_le < npairs && hi[hi_le] <= threshold) ++hi_le;
                const double intact =
                    npairs == 0 ? 1.0
                                : static_cast<double>(npairs - (lo_le - hi_le)) / static_cast<double>(npairs);
                const double combined = gain + cfg_.eta * intact;
                if (!best || combined > best->score.combined) {
                    best = Candidate{static_cast<int>(f), threshold, {gain, intact, combined, npairs}};
                }
            }
        }
        return best;
    }

    const EncodedDataset& data_;
    const PairSet& pairs_;
    const TreeConfig& cfg_;
    std::vector<std::vector<double>> columns_;
    DecisionTree tree_;
};

}  // namespace

DecisionTree train_tree(const EncodedDataset& train, const PairSet& pairs, const TreeConfig& cfg) {
    cfg.validate();
    if (train.size() == 0) throw DataError("cannot train a tree on an empty dataset");
    pairs.validate(train.size());
    return Grower(train, pairs, cfg).grow();
}

std::size_t DecisionTree::leaf_of(std::span<const double> row) const {
    std::size_t id = 0;
    while (!nodes[id].is_leaf()) {
        const auto& n = nodes[id];
        id = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return id;
}

std::vector<double> DecisionTree::predict_proba(const Matrix& rows) const {
    if (rows.cols() != num_features()) {
        throw DataError(fmt::format("tree expects {} features, rows have {}", num_features(), rows.cols()));
    }
    if (nodes.empty()) throw DataError("tree has no nodes");
    std::vector<double> out(rows.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = nodes[leaf_of(rows.row(r))].probability();
    return out;
}

int DecisionTree::depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
}

std::vector<int> DecisionTree::features_used() const {
    std::vector<int> used;
    for (const auto& n : nodes) {
        if (!n.is_leaf()) used.push_back(n.feature);
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    return used;
}

Predictions predict_tree(const DecisionTree& tree, const Matrix& rows) {
    return Predictions::from_scores(tree.predict_proba(rows), 0.5);
}

std::string to_json(const DecisionTree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
        json j{{"depth", n.depth},
               {"negatives", n.negatives},
               {"positives", n.positives},
               {"pairs_at_node", n.pairs_at_node}};
        if (n.is_leaf()) {
            j["leaf"] = {{"probability", n.probability()}, {"label", n.label()}};
        } else {
            j["split"] = {{"feature", n.feature},
                          {"feature_name", tree.feature_names[static_cast<std::size_t>(n.feature)]},
                          {"threshold", n.threshold},
                          {"left", n.left},
                          {"right", n.right},
                          {"gini_gain", n.score.gini_gain},
                          {"intact_fraction", n.score.intact_fraction},
                          {"combined", n.score.combined}};
        }
        nodes.push_back(std::move(j));
    }
    json out{{"kind", "tree"},
             {"feature_names", tree.feature_names},
             {"config",
              {{"eta", tree.config.eta},
               {"max_depth", tree.config.max_depth},
               {"min_leaf", tree.config.min_leaf},
               {"seed", tree.config.seed}}},
             {"nodes", std::move(nodes)}};
    return out.dump(2) + "\n";
}

DecisionTree tree_from_json(const std::string& text) {
    try {
        const auto j = json::parse(text);
        if (j.at("kind") != "tree") throw DataError("model file is not a decision tree");
        DecisionTree t;
        t.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        const auto& c = j.at("config");
        t.config.eta = c.at("eta");
        t.config.max_depth = c.at("max_depth");
        t.config.min_leaf = c.at("min_leaf");
        t.config.seed = c.at("seed");
        for (const auto& jn : j.at("nodes")) {
            TreeNode n;
            n.depth = jn.at("depth");
            n.negatives = jn.at("negatives");
            n.positives = jn.at("positives");
            n.pairs_at_node = jn.at("pairs_at_node");
            if (jn.contains("split")) {
                const auto& s = jn.at("split");
                n.feature = s.at("feature");
                n.threshold = s.at("threshold");
                n.left = s.at("left");
                n.right = s.at("right");
                n.score.gini_gain = s.at("gini_gain");
                n.score.intact_fraction = s.at("intact_fraction");
                n.score.combined = s.at("combined");
                n.score.pairs_at_node = n.pairs_at_node;
            }
            t.nodes.push_back(n);
        }
        const auto nn = static_cast<int>(t.nodes.size());
        for (const auto& n : t.nodes) {
            if (!n.is_leaf() && (n.left <= 0 || n.left >= nn || n.right <= 0 || n.right >= nn ||
                                 n.feature >= static_cast<int>(t.feature_names.size()))) {
                throw DataError("tree JSON has an out-of-range child or feature index");
            }
        }
        if (t.nodes.empty()) throw DataError("tree JSON has no nodes");
        return t;
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid tree JSON: ") + e.what());
    }
}

std::string render_text(const DecisionTree& tree) {
    std::string out;
    auto visit = [&](auto&& self, int id, const std::string& indent) -> void {
        const auto& n = tree.nodes[static_cast<std::size_t>(id)];
        if (n.is_leaf()) {
            out += fmt::format("{}leaf: p={:.4f} label={} ({} neg, {} pos)\n", indent, n.probability(), n.label(),
                               n.negatives, n.positives);
            return;
        }
        const auto& name = tree.feature_names[static_cast<std::size_t>(n.feature)];
        out += fmt::format("{}{} <= {}  [gain {:.5f}, intact {:.4f}, n={}, pairs={}]\n", indent, name,
                           csv::format_double(n.threshold), n.score.gini_gain, n.score.intact_fraction, n.count(),
                           n.pairs_at_node);
        self(self, n.left, indent + "  ");
        out += fmt::format("{}else ({} > {})\n", indent, name, csv::format_double(n.threshold));
        self(self, n.right, indent + "  ");
    };
    if (!tree.nodes.empty()) visit(visit, 0, "");
    return out;
}

}  // namespace pairfair
