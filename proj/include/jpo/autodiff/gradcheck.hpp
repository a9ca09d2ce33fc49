#pragma once

#include <functional>
#include <span>

#include "jpo/autodiff/tape.hpp"

namespace jpo::ad {

/// Builds a scalar from a rank-1 variable on the given tape.
using ScalarFn = std::function<Value(Tape&, const Value&)>;

/// Max over coordinates of |AD - FD| / (|AD| + |FD| + 1e-12), FD being the
/// central difference with the given step. Exceptions from `f` propagate.
double check_gradient(const ScalarFn& f, std::span<const double> point, double step);

/// Reverse-mode gradient of `f` at `point`.
std::vector<double> gradient(const ScalarFn& f, std::span<const double> point);
double evaluate(const ScalarFn& f, std::span<const double> point);

}  // namespace jpo::ad
