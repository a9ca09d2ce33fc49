#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jpo/container.hpp"
#include "jpo/nn/network.hpp"
#include "jpo/opt/optimizers.hpp"
#include "jpo/problems/problem_set.hpp"

namespace jpo::methods {

enum class MethodKind : std::uint32_t { jpo = 1, supervised = 2, neural_adjoint = 3, bfgs = 4, gd = 5 };

const char* method_name(MethodKind m);
MethodKind parse_method(const std::string& s);

struct Refinement {
    std::vector<std::vector<double>> x;
    std::vector<double> loss;
    std::vector<std::size_t> iterations;
    std::vector<opt::Termination> reason;
    /// Loss of the estimate each refinement started from.
    std::vector<double> start_loss;
};

/// Solutions produced by one method on one problem set. history[k][i] is the
/// estimate of example i at logged iteration iteration[k].
struct MethodResult {
    MethodKind method = MethodKind::jpo;
    prob::Family family = prob::Family::wavepacket;
    std::uint64_t seed = 0;

    std::vector<std::size_t> iteration;
    std::vector<std::vector<std::vector<double>>> history;
    std::vector<std::vector<double>> history_loss;

    std::vector<std::vector<double>> best;
    std::vector<double> best_loss;
    std::vector<std::vector<double>> final;
    std::vector<double> final_loss;

    std::optional<Refinement> refinement;
    /// Divergence events, surrogate warnings and similar notes.
    std::vector<std::string> events;
    /// Learning rate actually used by network-based methods.
    double learning_rate = 0.0;

    [[nodiscard]] std::size_t size() const { return final_loss.size(); }
    /// Loss after refinement when present, else the loss of the estimate a
    /// refinement would start from.
    [[nodiscard]] std::vector<double> outcome_loss() const;
    /// Per-example starting estimate for refinement: the best logged
    /// estimate, or the final one for supervised training.
    [[nodiscard]] const std::vector<std::vector<double>>& refine_start() const;

    /// Appends an entry to the history and updates best/final.
    void log(std::size_t iter, const std::vector<std::vector<double>>& xs, const std::vector<double>& losses);

    [[nodiscard]] Container to_container() const;
    static MethodResult from_container(const Container& c);
    /// Rows (example, iteration, loss, x...) over the history, then the
    /// refined result with iteration = -1.
    [[nodiscard]] std::string csv_digest() const;
};

// ---- network plumbing --------------------------------------------------------

/// Default architecture per family.
nn::NetSpec family_net(prob::Family f);
/// Network input for every example: s2s rows of (γ, y), g2s channel stacks.
std::vector<double> network_input(const prob::ProblemSet& set, ad::Shape& shape);
/// Maps raw network outputs (B, d) to solutions in the family's domain.
ad::Value solution_head(prob::Family f, const ad::Value& raw, const prob::FamilyConfig& config);

// ---- JPO --------------------------------------------------------------------

struct JpoConfig {
    std::size_t iterations = 1000;
    /// Network optimizer: Adam, or plain gradient steps when kind is gd.
    opt::OptimizerConfig adam = [] {
        opt::OptimizerConfig c;
        c.kind = opt::Kind::adam;
        return c;
    }();
    /// Per-example clipping of ∂L_i/∂x_i at this percentile; <= 0 disables it.
    double clip_percentile = 90.0;
    std::size_t log_every = 1;
    /// End training once the moving average of the total loss over
    /// `plateau_window` iterations improves by less than `plateau_tolerance`.
    bool stop_on_plateau = false;
    std::size_t plateau_window = 100;
    double plateau_tolerance = 1e-3;
};

/// Trains one network whose outputs are the solutions of all examples,
/// minimizing Σ_i L_i(head(net(γ_i, y_i))).
MethodResult jpo_train(const prob::ProblemSet& set, const nn::NetSpec& spec, const JpoConfig& config,
                       std::uint64_t seed);

/// Tries learning rates start, start/10, ... and returns the first for which
/// the total loss after `probe_iterations` is below the starting loss.
double select_learning_rate(const prob::ProblemSet& set, const nn::NetSpec& spec, const JpoConfig& config,
                            std::uint64_t seed, double start = 1e-2, std::size_t attempts = 4,
                            std::size_t probe_iterations = 50);

// ---- supervised ---------------------------------------------------------------

struct SupervisedConfig {
    std::size_t synthetic = 4096;
    std::size_t batch = 128;
    std::size_t iterations = 2000;
    opt::OptimizerConfig adam = [] {
        opt::OptimizerConfig c;
        c.kind = opt::Kind::adam;
        return c;
    }();
    /// Target-problem estimates are logged every this many iterations.
    std::size_t log_every = 100;
};

/// Synthetic (solution, problem) pairs drawn from the family prior. The
/// returned set holds the drawn solutions as ground truth.
prob::ProblemSet synthetic_set(prob::Family f, std::size_t n, const prob::FamilyConfig& config, std::uint64_t seed);

/// Trains on synthetic data only, then predicts the target solutions.
MethodResult supervised_train(const prob::ProblemSet& set, const nn::NetSpec& spec, const SupervisedConfig& config,
                              std::uint64_t seed);

// ---- neural adjoint --------------------------------------------------------------

struct AdjointConfig {
    std::size_t synthetic = 4096;
    std::size_t batch = 128;
    std::size_t surrogate_iterations = 3000;
    opt::OptimizerConfig surrogate_adam = [] {
        opt::OptimizerConfig c;
        c.kind = opt::Kind::adam;
        return c;
    }();
    /// Surrogate hidden widths; empty keeps those of the family network.
    std::vector<std::size_t> hidden;
    double sharpness = 64.0;
    std::size_t iterations = 500;
    opt::OptimizerConfig input_adam = [] {
        opt::OptimizerConfig c;
        c.kind = opt::Kind::adam;
        c.learning_rate = 1e-2;
        return c;
    }();
    std::size_t log_every = 10;
    /// Validation MSE of the surrogate above which a warning is attached.
    double residual_warning = 1e-2;
};

/// Σ_j SoftPlus_γ(max(ξ_j − hi_j, lo_j − ξ_j) / (hi_j − lo_j)) per row of
/// xi (B, d); returns (B).
ad::Value boundary_loss(const ad::Value& xi, const std::vector<double>& lo, const std::vector<double>& hi,
                        double sharpness);

/// Fits a surrogate of F on synthetic data, then optimizes each example's
/// input of the frozen surrogate plus the boundary loss. Billiards and arm.
MethodResult neural_adjoint_solve(const prob::ProblemSet& set, const AdjointConfig& config, std::uint64_t seed);

// ---- per-example optimizers ------------------------------------------------------

/// Per-example BFGS or GD from the family's default start.
MethodResult classical_solve(const prob::ProblemSet& set, MethodKind kind, const opt::OptimizerConfig& config);

/// Per-example BFGS from result.refine_start() on the true objective.
void refine(MethodResult& result, const prob::ProblemSet& set, const opt::OptimizerConfig& config);

}  // namespace jpo::methods
