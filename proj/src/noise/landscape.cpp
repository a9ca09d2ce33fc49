#include "jpo/noise/landscape.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace jpo::noise {

double LandscapeSpec::aw_norm() const {
    double s = 0.0;
    for (const auto& c : components) s += (c.amplitude * c.omega) * (c.amplitude * c.omega);
    return std::sqrt(s);
}

Law constant_law(double value) {
    return [value](CounterRng&) { return value; };
}

Law uniform_law(double lo, double hi) {
    return [lo, hi](CounterRng& rng) { return rng.uniform(lo, hi); };
}

LandscapeSpec make_landscape(std::size_t m, const Law& amplitude, const Law& frequency, double lambda,
                             CounterRng& rng, double x_star) {
    if (m == 0) throw std::invalid_argument("make_landscape: component count must be >= 1");
    if (lambda < 0) throw std::invalid_argument("make_landscape: lambda must be >= 0");
    LandscapeSpec spec;
    spec.lambda = lambda;
    spec.x_star = x_star;
    spec.components.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        Component c;
        c.amplitude = amplitude(rng);
        c.omega = frequency(rng);
        c.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        if (c.amplitude < 0 || c.omega < 0)
            throw std::invalid_argument("make_landscape: amplitude and frequency laws must be non-negative");
        spec.components.push_back(c);
    }
    return spec;
}

double landscape_loss(const LandscapeSpec& spec, double x) {
    double l = spec.lambda * std::abs(x - spec.x_star);
    for (const auto& c : spec.components) l -= c.amplitude * std::cos(c.omega * x + c.phase);
    return l;
}

double landscape_grad(const LandscapeSpec& spec, double x) {
    double g = 0.0;
    if (x > spec.x_star)
        g = spec.lambda;
    else if (x < spec.x_star)
        g = -spec.lambda;
    for (const auto& c : spec.components) g += c.amplitude * c.omega * std::sin(c.omega * x + c.phase);
    return g;
}

LandscapeBatch equal_noise_batch(std::size_t n, std::size_t m, double snr, CounterRng& rng) {
    LandscapeBatch batch;
    batch.shared_optimum = true;
    const Law amp = uniform_law(0.0, 1.0);
    const Law freq = uniform_law(1.0, 20.0);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng sub = rng.substream(i);
        LandscapeSpec spec = make_landscape(m, amp, freq, snr, sub, 0.0);
        const double norm = spec.aw_norm();
        if (norm > 0)
            for (auto& c : spec.components) c.amplitude /= norm;
        batch.specs.push_back(std::move(spec));
    }
    return batch;
}

}  // namespace jpo::noise
