#pragma once

#include <span>
#include <string>
#include <vector>

#include "scnp/dense.hpp"

namespace scnp {

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax_row(std::span<const double> row);

// Fraction of mask rows whose argmax matches the label.
double accuracy(const DenseMatrix& probs, std::span<const int> labels,
                std::span<const std::size_t> mask);

// Unweighted mean of per-class F1 over all probs.cols() classes. A
// precision or recall with zero denominator counts as 0, as does the F1 of
// a class absent from both predictions and labels within the mask.
double macro_f1(const DenseMatrix& probs, std::span<const int> labels,
                std::span<const std::size_t> mask);

// Mean and sample standard deviation (n-1; 0 for a single value).
struct RunStats {
    std::string name;
    std::vector<double> values;
    double mean = 0.0;
    double stddev = 0.0;
};

// Requires at least one value (EmptyMask otherwise).
RunStats aggregate(std::string name, std::vector<double> values);

}  // namespace scnp
