#pragma once

#include <string>
#include <vector>

#include "pairfair/matrix.hpp"

namespace pairfair {

/// Anything that scores encoded rows with a positive-class probability.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::size_t num_features() const = 0;
    virtual std::vector<double> predict_proba(const Matrix& rows) const = 0;
    virtual std::string kind() const = 0;
};

}  // namespace pairfair
