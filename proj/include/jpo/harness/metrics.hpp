#pragma once

#include <cstddef>
#include <vector>

namespace jpo::harness {

/// Relative tolerance under which two losses count as equal.
inline constexpr double equality_tolerance = 1e-9;
/// Losses both at or below this are at machine precision and count as equal.
inline constexpr double equality_floor = 1e-20;

bool losses_equal(double a, double b, double rel_tol = equality_tolerance, double floor = equality_floor);

/// f_N = N_better / N + N_equal / (2N) of `method` against `reference`.
double fraction_better(const std::vector<double>& method, const std::vector<double>& reference,
                       double rel_tol = equality_tolerance, double floor = equality_floor);

struct ErrorBar {
    double mean = 0.0;
    double bar = 0.0;
};

/// Mean over seeds and sqrt(Σ_k (f_k − f̄)²) / n, n being the data set size.
ErrorBar errorbar(const std::vector<double>& f, std::size_t n);

struct ImprovementSplit {
    double fraction = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0;
};

/// Per example (initial − pre) / (initial − post) clamped to [0, 1], for
/// examples whose refined loss is below the initial one; averaged.
ImprovementSplit improvement_split(const std::vector<double>& pre, const std::vector<double>& post,
                                   const std::vector<double>& initial);

}  // namespace jpo::harness
