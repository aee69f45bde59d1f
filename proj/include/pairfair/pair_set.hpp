#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pairfair {

/// Two rows a fair expert judged should receive the same response, with the
/// expert's confidence as weight.
struct ConsistencyPair {
    std::size_t i = 0;
    std::size_t j = 0;
    double weight = 1.0;

    bool operator==(const ConsistencyPair&) const = default;
};

class PairSet {
public:
    std::vector<ConsistencyPair> pairs;
    std::string provenance;

    std::size_t size() const noexcept { return pairs.size(); }
    bool empty() const noexcept { return pairs.empty(); }
    double total_weight() const;

    /// Throws DataError on self-pairs, out-of-range indices or non-positive weights.
    void validate(std::size_t num_rows) const;

    /// Sort by (i, j) with i < j inside each pair.
    void canonicalize();

    bool operator==(const PairSet&) const = default;
};

}  // namespace pairfair
