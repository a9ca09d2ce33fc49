#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "jpo/rng.hpp"

namespace jpo::noise {

struct Component {
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;
};

/// Loss λ|x − x*| − Σ A cos(ωx + φ) for one example.
struct LandscapeSpec {
    double lambda = 0.0;
    double x_star = 0.0;
    std::vector<Component> components;

    /// |Aω|₂ over the components.
    [[nodiscard]] double aw_norm() const;
};

struct LandscapeBatch {
    std::vector<LandscapeSpec> specs;
    bool shared_optimum = true;
};

/// Sampling law for amplitudes and frequencies.
using Law = std::function<double(CounterRng&)>;
Law constant_law(double value);
Law uniform_law(double lo, double hi);

LandscapeSpec make_landscape(std::size_t m, const Law& amplitude, const Law& frequency, double lambda,
                             CounterRng& rng, double x_star = 0.0);

double landscape_loss(const LandscapeSpec& spec, double x);
/// At x == x* the signal term contributes 0.
double landscape_grad(const LandscapeSpec& spec, double x);

/// N examples with shared x* = 0, each with m components (A ~ U(0,1),
/// ω ~ U(1,20)) rescaled to |Aω|₂ = 1, and λ = snr.
LandscapeBatch equal_noise_batch(std::size_t n, std::size_t m, double snr, CounterRng& rng);

}  // namespace jpo::noise
