#include "scnp/evaluation.hpp"

#include <cmath>
#include <cstddef>

#include "scnp/error.hpp"

namespace scnp {

std::size_t argmax_row(std::span<const double> row) {
    if (row.empty()) throw ShapeMismatch("argmax of an empty row");
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
        if (row[j] > row[best]) best = j;
    }
    return best;
}

namespace {

void check_eval_inputs(const DenseMatrix& probs, std::span<const int> labels,
                       std::span<const std::size_t> mask) {
    if (labels.size() != probs.rows()) {
        throw LengthMismatch("label count does not match prediction rows");
    }
    if (mask.empty()) throw EmptyMask("evaluation mask is empty");
    for (std::size_t i : mask) {
        if (i >= probs.rows()) throw LengthMismatch("mask index out of range");
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= probs.cols()) {
            throw LengthMismatch("label out of class range");
        }
    }
}

}  // namespace

double accuracy(const DenseMatrix& probs, std::span<const int> labels,
                std::span<const std::size_t> mask) {
    check_eval_inputs(probs, labels, mask);
    std::size_t hits = 0;
    for (std::size_t i : mask) {
        if (argmax_row(probs.row(i)) == static_cast<std::size_t>(labels[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(mask.size());
}

double macro_f1(const DenseMatrix& probs, std::span<const int> labels,
                std::span<const std::size_t> mask) {
    check_eval_inputs(probs, labels, mask);
    const std::size_t c = probs.cols();
    std::vector<std::size_t> tp(c, 0), fp(c, 0), fn(c, 0);
    for (std::size_t i : mask) {
        const std::size_t pred = argmax_row(probs.row(i));
        const std::size_t truth = static_cast<std::size_t>(labels[i]);
        if (pred == truth) {
            ++tp[pred];
        } else {
            ++fp[pred];
            ++fn[truth];
        }
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        const double prec_den = static_cast<double>(tp[k] + fp[k]);
        const double rec_den = static_cast<double>(tp[k] + fn[k]);
        const double prec = prec_den > 0 ? static_cast<double>(tp[k]) / prec_den : 0.0;
        const double rec = rec_den > 0 ? static_cast<double>(tp[k]) / rec_den : 0.0;
        sum += (prec + rec > 0) ? 2.0 * prec * rec / (prec + rec) : 0.0;
    }
    return sum / static_cast<double>(c);
}

RunStats aggregate(std::string name, std::vector<double> values) {
    if (values.empty()) throw EmptyMask("aggregate of zero values");
    RunStats s;
    s.name = std::move(name);
    s.values = std::move(values);
    double total = 0.0;
    for (double v : s.values) total += v;
    s.mean = total / static_cast<double>(s.values.size());
    if (s.values.size() >= 2) {
        double ss = 0.0;
        for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(s.values.size() - 1));
    }
    return s;
}

}  // namespace scnp
