#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairfair/classifier.hpp"
#include "pairfair/data.hpp"

namespace pairfair {

struct ImportanceEntry {
    std::string feature;
    double mean_drop = 0.0;
    double std = 0.0;
    int rank = 0;
};

/// Entries sorted by rank (descending mean drop, ties by feature order).
struct ImportanceReport {
    std::vector<ImportanceEntry> entries;
    double baseline_accuracy = 0.0;
    int n_repeats = 0;
    std::uint64_t seed = 0;
};

/// Accuracy drop when each column of `test` is shuffled, averaged over
/// `n_repeats` seeded permutations. Column f uses substream (seed, f), so the
/// result does not depend on `threads`.
ImportanceReport permutation_importance(const Classifier& model, const EncodedDataset& test, int n_repeats,
                                        std::uint64_t seed, unsigned threads = 1);

int rank_of(const ImportanceReport& report, const std::string& feature);
const ImportanceEntry& entry_of(const ImportanceReport& report, const std::string& feature);

std::string importance_to_csv(const ImportanceReport& report);

}  // namespace pairfair
