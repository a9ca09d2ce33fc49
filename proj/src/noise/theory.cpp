#include "jpo/noise/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "jpo/parallel.hpp"

namespace jpo::noise {

double prob_aligned_single(double lambda, double aw_norm) {
    if (lambda < 0) throw std::invalid_argument("prob_aligned_single: lambda must be >= 0");
    if (aw_norm < 0) throw std::invalid_argument("prob_aligned_single: aw_norm must be >= 0");
    if (aw_norm == 0) return lambda > 0 ? 1.0 : 0.5;
    return 0.5 + 0.5 * std::erf(lambda / aw_norm);
}

double prob_aligned_sum(std::span<const double> lambdas, double aw_norm_total) {
    if (lambdas.empty()) throw std::invalid_argument("prob_aligned_sum: empty lambda list");
    double total = 0.0;
    for (double l : lambdas) {
        if (l < 0) throw std::invalid_argument("prob_aligned_sum: lambdas must be >= 0");
        total += l;
    }
    return prob_aligned_single(total, aw_norm_total);
}

namespace {
void check_epsilon(double eps, const char* where) {
    if (!(eps >= 0.0 && eps < 0.5)) throw std::invalid_argument(std::string(where) + ": epsilon must be in [0, 0.5)");
}
}  // namespace

double prob_majority_normal(std::size_t n, double epsilon) {
    check_epsilon(epsilon, "prob_majority_normal");
    if (n == 0) throw std::invalid_argument("prob_majority_normal: n must be >= 1");
    const double z = std::sqrt(static_cast<double>(n)) * epsilon / std::sqrt(0.25 - epsilon * epsilon);
    return 0.5 + 0.5 * std::erf(z / std::numbers::sqrt2);
}

double prob_majority_exact(std::size_t n, double epsilon) {
    check_epsilon(epsilon, "prob_majority_exact");
    if (n == 0) throw std::invalid_argument("prob_majority_exact: n must be >= 1");
    const double p = 0.5 + epsilon, q = 0.5 - epsilon;
    const double lp = std::log(p);
    const double lq = q > 0 ? std::log(q) : -std::numeric_limits<double>::infinity();
    const double nd = static_cast<double>(n);
    auto term = [&](std::size_t k) {
        const double kd = static_cast<double>(k);
        const double lc = std::lgamma(nd + 1) - std::lgamma(kd + 1) - std::lgamma(nd - kd + 1);
        double lt = lc + kd * lp;
        if (k < n) lt += (nd - kd) * lq;
        return std::exp(lt);
    };
    double total = 0.0;
    for (std::size_t k = n / 2 + 1; k <= n; ++k) total += term(k);
    if (n % 2 == 0) total += 0.5 * term(n / 2);
    return std::min(total, 1.0);
}

const char* reducer_name(Reducer r) { return r == Reducer::sum ? "sum" : "vote"; }

Reducer parse_reducer(const std::string& s) {
    if (s == "sum" || s == "sum-of-losses") return Reducer::sum;
    if (s == "vote" || s == "majority" || s == "majority-vote") return Reducer::vote;
    throw std::invalid_argument("unknown reducer '" + s + "' (expected sum or vote)");
}

double sampling_half_width(const LandscapeBatch& batch) {
    double wmin = std::numeric_limits<double>::infinity();
    for (const auto& s : batch.specs)
        for (const auto& c : s.components)
            if (c.omega > 0) wmin = std::min(wmin, c.omega);
    if (!std::isfinite(wmin)) return 1.0;
    return 3.0 * 2.0 * std::numbers::pi / wmin;
}

Estimate mc_alignment(const LandscapeBatch& batch, Reducer reducer, std::size_t samples, const CounterRng& rng,
                      Sampling sampling) {
    if (batch.specs.empty()) throw std::invalid_argument("mc_alignment: empty batch");
    if (samples == 0) throw std::invalid_argument("mc_alignment: samples must be >= 1");
    const double x_star = batch.specs.front().x_star;
    for (const auto& s : batch.specs)
        if (s.x_star != x_star) throw std::invalid_argument("mc_alignment: batch does not share its optimum");
    const double half = sampling_half_width(batch);

    // blocks of samples so each worker keeps a local tally; scores are in
    // half-units to keep vote ties exact
    constexpr std::size_t block = 4096;
    const std::size_t blocks = (samples + block - 1) / block;
    std::vector<std::uint64_t> score(blocks, 0);
    parallel_for(blocks, [&](std::size_t b) {
        std::uint64_t local = 0;
        CounterRng draw = rng.substream(b);
        LandscapeBatch scratch;
        if (sampling == Sampling::ensemble) scratch = batch;
        const LandscapeBatch& use = sampling == Sampling::ensemble ? scratch : batch;
        const std::size_t end = std::min(samples, (b + 1) * block);
        for (std::size_t s = b * block; s < end; ++s) {
            const double x = x_star + half * (2.0 * draw.uniform() - 1.0);
            const double dir = x > x_star ? 1.0 : (x < x_star ? -1.0 : 0.0);
            if (sampling == Sampling::ensemble)
                for (auto& spec : scratch.specs)
                    for (auto& c : spec.components) c.phase = draw.uniform(0.0, 2.0 * std::numbers::pi);
            if (reducer == Reducer::sum) {
                double g = 0.0;
                for (const auto& spec : use.specs) g += landscape_grad(spec, x);
                if (g * dir > 0) local += 2;
            } else {
                std::size_t good = 0, bad = 0;
                for (const auto& spec : use.specs) {
                    const double g = landscape_grad(spec, x) * dir;
                    if (g > 0)
                        ++good;
                    else if (g < 0)
                        ++bad;
                }
                if (good > bad)
                    local += 2;
                else if (good == bad)
                    local += 1;
            }
        }
        score[b] = local;
    });
    std::uint64_t total = 0;
    for (auto v : score) total += v;
    Estimate e;
    e.p = static_cast<double>(total) / (2.0 * static_cast<double>(samples));
    e.se = std::sqrt(e.p * (1.0 - e.p) / static_cast<double>(samples));
    return e;
}

}  // namespace jpo::noise
