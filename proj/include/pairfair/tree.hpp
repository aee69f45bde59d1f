#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairfair/classifier.hpp"
#include "pairfair/data.hpp"
#include "pairfair/metrics.hpp"
#include "pairfair/pair_set.hpp"

namespace pairfair {

struct TreeConfig {
    double eta = 0.0;
    int max_depth = 5;
    std::size_t min_leaf = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Score of one candidate split. combined = gini_gain + eta * intact_fraction.
struct SplitScore {
    double gini_gain = 0.0;
    double intact_fraction = 1.0;
    double combined = 0.0;
    std::size_t pairs_at_node = 0;
};

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;     // rows with value <= threshold
    int right = -1;
    int depth = 0;
    std::size_t negatives = 0;
    std::size_t positives = 0;
    std::size_t pairs_at_node = 0;
    SplitScore score;  // meaningful for internal nodes

    bool is_leaf() const noexcept { return feature < 0; }
    std::size_t count() const noexcept { return negatives + positives; }
    double probability() const {
        return static_cast<double>(positives) / static_cast<double>(count());
    }
    int label() const noexcept { return positives >= negatives ? 1 : 0; }
};

/// Binary tree stored in preorder; node 0 is the root.
class DecisionTree : public Classifier {
public:
    std::vector<TreeNode> nodes;
    std::vector<std::string> feature_names;
    TreeConfig config;

    std::size_t num_features() const override { return feature_names.size(); }
    std::vector<double> predict_proba(const Matrix& rows) const override;
    std::string kind() const override { return "tree"; }

    std::size_t leaf_of(std::span<const double> row) const;
    int depth() const;
    std::vector<int> features_used() const;
};

/// Midpoints between consecutive distinct sorted values.
std::vector<double> candidate_thresholds(std::vector<double> values);

/// Gini impurity 1 - p^2 - q^2 of a node with `positives` of `total` rows.
double gini(std::size_t positives, std::size_t total);

/// Greedy CART growth maximizing Gini gain + eta * share of the node's pairs
/// kept on one side. Ties go to the lower feature index, then the lower threshold.
DecisionTree train_tree(const EncodedDataset& train, const PairSet& pairs, const TreeConfig& cfg);

/// Leaf positive fraction as score; majority label with ties to 1.
Predictions predict_tree(const DecisionTree& tree, const Matrix& rows);

std::string to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const std::string& text);
std::string render_text(const DecisionTree& tree);

}  // namespace pairfair
