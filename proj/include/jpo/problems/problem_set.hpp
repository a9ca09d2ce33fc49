#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jpo/container.hpp"
#include "jpo/rng.hpp"
#include "jpo/problems/simulators.hpp"

namespace jpo::prob {

enum class Family : std::uint32_t { wavepacket = 1, billiards = 2, ks = 3, arm = 4 };

const char* family_name(Family f);
Family parse_family(const std::string& s);
std::size_t solution_dim(Family f);

/// Key type for ground-truth reads. Only evaluation code obtains one
/// (see problems/evaluation.hpp); optimizers and methods never do.
class TruthAccess {
    TruthAccess() = default;
    friend TruthAccess evaluation_access();
};

/// Bounds of the prior over (α, β) used to draw KS ground truth.
struct KsPrior {
    double alpha_lo = -0.3;
    double alpha_hi = 0.3;
    double beta_lo = 0.85;
    double beta_hi = 1.15;

    [[nodiscard]] std::vector<double> mean() const { return {0.5 * (alpha_lo + alpha_hi), 0.5 * (beta_lo + beta_hi)}; }
    [[nodiscard]] std::vector<double> half_width() const {
        return {0.5 * (alpha_hi - alpha_lo), 0.5 * (beta_hi - beta_lo)};
    }
};

struct FamilyConfig {
    WavepacketConfig wavepacket;
    BilliardsConfig billiards;
    KsConfig ks;
    KsPrior ks_prior;
    ArmConfig arm;
};

/// A batch of N inverse problems. conditioning[i] holds γ_i (wave packet:
/// empty; billiards: ball-2 position; ks: u0; arm: empty) and targets[i]
/// holds y_i (observed signal, target point, u(T), target point).
class ProblemSet {
public:
    ProblemSet() = default;
    ProblemSet(Family family, std::uint64_t seed, FamilyConfig config, std::vector<std::vector<double>> conditioning,
               std::vector<std::vector<double>> targets, std::vector<std::vector<double>> truth);

    [[nodiscard]] Family family() const { return family_; }
    [[nodiscard]] std::size_t size() const { return targets_.size(); }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] const FamilyConfig& config() const { return config_; }
    [[nodiscard]] const std::vector<double>& conditioning(std::size_t i) const { return conditioning_.at(i); }
    [[nodiscard]] const std::vector<double>& target(std::size_t i) const { return targets_.at(i); }

    [[nodiscard]] bool has_ground_truth() const { return !truth_.empty(); }
    [[nodiscard]] const std::vector<double>& ground_truth(std::size_t i, TruthAccess) const;
    /// Removes the hidden truth (used to prove solvers never need it).
    void drop_ground_truth() { truth_.clear(); }

    /// Examples `indices` as a new set (same seed and config).
    [[nodiscard]] ProblemSet subset(std::span<const std::size_t> indices) const;

    [[nodiscard]] Container to_container() const;
    static ProblemSet from_container(const Container& c);

private:
    Family family_ = Family::wavepacket;
    std::uint64_t seed_ = 0;
    FamilyConfig config_;
    std::vector<std::vector<double>> conditioning_;
    std::vector<std::vector<double>> targets_;
    std::vector<std::vector<double>> truth_;
};

/// Example i of a family depends only on (seed, i), so the same example shows
/// up unchanged in sets of different size.
ProblemSet generate(Family family, std::size_t n, std::uint64_t seed, const FamilyConfig& config = {});
ProblemSet wavepacket_generate(std::size_t n, std::uint64_t seed, const WavepacketConfig& cfg = {});
ProblemSet billiards_generate(std::size_t n, std::uint64_t seed, const BilliardsConfig& cfg = {});
ProblemSet ks_generate(std::size_t n, std::uint64_t seed, const KsConfig& cfg = {}, const KsPrior& prior = {});
ProblemSet arm_generate(std::size_t n, std::uint64_t seed, const ArmConfig& cfg = {});

/// Smooth random KS initial state with unit RMS.
std::vector<double> ks_initial_state(CounterRng& rng, const KsConfig& cfg = {});

/// Default starting guess for per-problem optimizers.
std::vector<double> default_start(const ProblemSet& set);

struct BatchEval {
    std::vector<double> loss;
    std::vector<std::vector<double>> grad;
    /// Examples whose simulation diverged; their loss is +inf and grad 0.
    std::vector<bool> failed;
};

/// Losses (and gradients) of candidate solutions xs[k] for examples
/// examples[k]. Examples are evaluated in parallel chunks.
BatchEval evaluate(const ProblemSet& set, std::span<const std::size_t> examples,
                   const std::vector<std::vector<double>>& xs, bool with_grad = true);
BatchEval evaluate_all(const ProblemSet& set, const std::vector<std::vector<double>>& xs, bool with_grad = true);

/// Loss of one example; writes the gradient if `grad` is non-empty. Returns
/// +inf (gradient zero) when the simulation diverges.
double example_loss(const ProblemSet& set, std::size_t i, std::span<const double> x, std::span<double> grad = {});

/// Tape-level per-example losses for the rows of X (B, d), all belonging to
/// `examples`. Diverged rows are reported in `failed` (KS only) and their
/// entries must not be used.
ad::Value loss_on_tape(const ProblemSet& set, std::span<const std::size_t> examples, const ad::Value& x,
                       std::vector<bool>* failed = nullptr);

}  // namespace jpo::prob
