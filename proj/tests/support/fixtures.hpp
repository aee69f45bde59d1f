#pragma once

#include <sstream>
#include <string>

#include "pairfair/data.hpp"
#include "pairfair/kv_config.hpp"
#include "pairfair/pair_set.hpp"
#include "pairfair/rng.hpp"

namespace pairfair::fixture {

inline FeatureSchema schema_from(const std::string& text) { return FeatureSchema::from_config(KvConfig::parse(text)); }

inline Dataset dataset_from(const std::string& schema_text, const std::string& csv_text) {
    std::istringstream in(csv_text);
    return parse_csv(in, schema_from(schema_text));
}

/// Encoded dataset straight from a feature matrix and labels.
inline EncodedDataset encoded_from(const Matrix& x, std::vector<std::uint8_t> labels) {
    EncodedDataset e;
    for (std::size_t f = 0; f < x.cols(); ++f) e.columns.push_back({"x" + std::to_string(f), f, std::nullopt});
    e.matrix = x;
    e.labels = std::move(labels);
    e.row_origin.resize(e.labels.size());
    for (std::size_t r = 0; r < e.row_origin.size(); ++r) e.row_origin[r] = r;
    return e;
}

inline PairSet pairs_of(std::initializer_list<ConsistencyPair> list) {
    PairSet p;
    p.pairs.assign(list.begin(), list.end());
    p.provenance = "test";
    return p;
}

/// Uniform double in [lo, hi).
inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
}

inline std::string data_path(const std::string& rel) { return std::string(PAIRFAIR_SOURCE_DIR) + "/" + rel; }

}  // namespace pairfair::fixture
