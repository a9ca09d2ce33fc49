#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "jpo/noise/landscape.hpp"

namespace jpo::noise {

/// ½ + ½ erf(λ / |Aω|₂)
double prob_aligned_single(double lambda, double aw_norm);
/// ½ + ½ erf(Σλ / |Aω|₂), where aw_norm_total is taken over all examples.
double prob_aligned_sum(std::span<const double> lambdas, double aw_norm_total);

/// Normal approximation of the majority-vote probability with per-voter
/// accuracy ½ + ε.
double prob_majority_normal(std::size_t n, double epsilon);
/// Exact Bernoulli tail. Even n counts a tie as ½.
double prob_majority_exact(std::size_t n, double epsilon);

enum class Reducer { sum, vote };
const char* reducer_name(Reducer r);
Reducer parse_reducer(const std::string& s);

struct Estimate {
    double p = 0.0;
    double se = 0.0;
};

/// window: the landscapes are fixed and only x is random.
/// ensemble: every draw also redraws all component phases, so the estimate
/// averages over landscape realizations with the batch's (λ, A, ω).
enum class Sampling { window, ensemble };

/// Fraction of uniformly drawn x (shared by all examples, on a window of
/// three slowest-noise periods around x*) at which the reduced gradient points
/// toward x*.
Estimate mc_alignment(const LandscapeBatch& batch, Reducer reducer, std::size_t samples, const CounterRng& rng,
                      Sampling sampling = Sampling::window);

/// Half-width of the sampling window used by mc_alignment.
double sampling_half_width(const LandscapeBatch& batch);

}  // namespace jpo::noise
