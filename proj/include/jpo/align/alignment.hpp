#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "jpo/nn/network.hpp"
#include "jpo/noise/landscape.hpp"

namespace jpo::align {

struct AlignmentParams {
    double plasticity = 1.0;  // A
    double complexity = 0.0;  // C̃

    void validate() const;
};

enum class Provenance { predicted, measured };

struct AlignmentCurve {
    std::vector<std::size_t> n;
    std::vector<double> rho;
    Provenance provenance = Provenance::predicted;
};

/// ρ_1 .. ρ_{n_max} from the recursion
///   P_N = (1 − e^{−(N−1)/A}) (c/2 + (1 − c) ρ_{N−1}) + e^{−(N−1)/A},  c = clamp(C̃/N, 0, 1)
///   ρ_N = ((N − 1) ρ_{N−1} + P_N) / N.
AlignmentCurve rho_predict(const AlignmentParams& params, std::size_t n_max);
/// Predicted ρ at the listed N only.
std::vector<double> rho_at(const AlignmentParams& params, const std::vector<std::size_t>& n);

struct FitResult {
    AlignmentParams params;
    /// Root mean square deviation between the fitted prediction and the curve.
    double residual = 0.0;
    /// The curve was constant; params sit on the search boundary.
    bool flat = false;
};

/// Least squares over (A, C̃): grid search over A ∈ logspace[0.1, 100],
/// C̃ ∈ [0, 50], then a Nelder-Mead polish in (log A, C̃).
FitResult rho_fit(const AlignmentCurve& measured);

enum class AlignTask { linear, sine, sine_noisy };

const char* task_name(AlignTask t);
AlignTask parse_task(const std::string& s);

struct AlignConfig {
    AlignTask task = AlignTask::linear;
    std::vector<std::size_t> hidden = {32, 32};
    double learning_rate = 1e-3;
    std::size_t replicas = 256;
    /// |Aω|₂ of the Fourier perturbation in the noisy task (λ = 1).
    double noise = 1.0;
    std::size_t components = 8;
};

struct AlignmentSample {
    std::size_t aligned = 0;
    std::size_t counted = 0;
    /// Examples with a zero individual gradient, left out of the fraction.
    std::size_t excluded = 0;

    [[nodiscard]] double fraction() const {
        return counted ? static_cast<double>(aligned) / static_cast<double>(counted) : 0.0;
    }
};

/// One SGD step on θ driven by Σ_i L_i(x_i), x_i = net(γ_i); counts examples
/// whose change Δx_i has the sign of −∂L_i/∂x_i taken before the step.
/// The network maps one scalar input to one scalar output.
AlignmentSample measure_alignment(const nn::NetSpec& spec, const nn::NetParams& params,
                                  const std::vector<double>& gamma, const std::vector<noise::LandscapeSpec>& losses,
                                  double learning_rate);

/// Examples of one replica: γ_i and the loss landscapes around x*(γ_i).
struct AlignProblem {
    std::vector<double> gamma;
    std::vector<noise::LandscapeSpec> losses;
};
AlignProblem make_align_problem(AlignTask task, std::size_t n, const AlignConfig& cfg, CounterRng& rng);

nn::NetSpec align_net(const AlignConfig& cfg);

/// Mean aligned fraction over cfg.replicas independent (network, problem)
/// draws. Replicas run in parallel; the result depends only on the seed.
double measure_task(std::size_t n, const AlignConfig& cfg, std::uint64_t seed);
AlignmentCurve measure_curve(const std::vector<std::size_t>& n, const AlignConfig& cfg, std::uint64_t seed);

}  // namespace jpo::align
