#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace jpo::opt {

enum class Kind { bfgs, gd, adam };

struct OptimizerConfig {
    Kind kind = Kind::bfgs;
    double learning_rate = 1e-3;
    std::size_t max_iterations = 1000;
    /// Stop when the gradient 2-norm falls below this.
    double tolerance = 1e-12;
    double c1 = 1e-4;
    double c2 = 0.9;
    std::size_t max_bracket = 25;
    std::size_t max_zoom = 30;
    double clip_percentile = 90.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

/// Loss at x; writes the gradient into `grad` (same length as x).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;
/// Per-example objective used by batched solves.
using BatchObjective = std::function<double(std::size_t example, std::span<const double> x, std::span<double> grad)>;

enum class Termination { converged, stationary, line_search_failed, max_iterations, non_finite, diverged };
const char* termination_name(Termination t);

struct OptResult {
    std::vector<double> x;
    /// losses[0] is the starting loss; one entry per accepted iterate after.
    std::vector<double> losses;
    std::vector<std::vector<double>> trajectory;
    Termination reason = Termination::max_iterations;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    /// Final BFGS inverse-Hessian approximation, row major (empty for GD).
    std::vector<double> inverse_hessian;

    [[nodiscard]] double final_loss() const { return losses.back(); }
};

/// BFGS with a strong-Wolfe line search. The inverse Hessian starts at the
/// identity and is reset to it whenever y·s <= 0.
OptResult bfgs_minimize(const Objective& f, std::vector<double> x0, const OptimizerConfig& config);
/// Fixed-step steepest descent with divergence detection.
OptResult gd_minimize(const Objective& f, std::vector<double> x0, const OptimizerConfig& config);

/// Independent per-example solves; examples run on the worker pool and the
/// result order follows the input order.
std::vector<OptResult> bfgs_minimize_batch(const BatchObjective& f, const std::vector<std::vector<double>>& x0,
                                           const OptimizerConfig& config);
std::vector<OptResult> gd_minimize_batch(const BatchObjective& f, const std::vector<std::vector<double>>& x0,
                                         const OptimizerConfig& config);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;
    std::size_t skipped = 0;
};

/// One Adam update of x in place. Returns false (and leaves everything
/// untouched) when the gradient has a non-finite entry.
bool adam_step(std::vector<double>& x, AdamState& state, std::span<const double> grad, const OptimizerConfig& config);

/// Rescales every gradient whose norm exceeds the nearest-rank p-th
/// percentile of the norms down to that percentile. Returns the threshold.
double clip_percentile(std::vector<std::vector<double>>& grads, double p);

/// Per-coordinate sign of the majority of per-example gradient signs; 0 on ties.
std::vector<double> majority_vote_reduce(const std::vector<std::vector<double>>& grads);

}  // namespace jpo::opt
