#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "jpo/harness/metrics.hpp"
#include "jpo/methods/methods.hpp"

namespace jpo::harness {

struct ExperimentConfig {
    static constexpr int schema_version = 1;

    prob::Family family = prob::Family::wavepacket;
    std::vector<std::size_t> n = {2, 4, 8, 16, 32, 64, 128, 256};
    std::vector<std::uint64_t> seeds = {1};
    /// BFGS always runs as the reference even when not listed.
    std::vector<methods::MethodKind> methods = {methods::MethodKind::jpo};
    /// Refine network-based methods with per-example BFGS.
    bool refine = true;
    std::string output = "runs/default";
    std::size_t threads = 0;
    /// Pick the JPO learning rate by the decade search before each cell.
    bool auto_learning_rate = false;

    prob::FamilyConfig problems;
    methods::JpoConfig jpo;
    methods::SupervisedConfig supervised;
    methods::AdjointConfig adjoint;
    opt::OptimizerConfig bfgs;
    opt::OptimizerConfig gd;
    opt::OptimizerConfig refinement;

    void validate() const;
    /// Listed methods plus the BFGS reference, in a fixed order.
    [[nodiscard]] std::vector<methods::MethodKind> run_methods() const;
};

/// Per-family defaults (learning rates, iteration budgets).
ExperimentConfig default_config(prob::Family family);
/// JSON text -> config. Missing keys keep the family defaults; unknown keys
/// are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);
/// JPO_SEEDS (comma separated) and JPO_OUTPUT replace the seed list and
/// output directory.
void apply_env_overrides(ExperimentConfig& config);

struct Cell {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    methods::MethodKind method = methods::MethodKind::bfgs;
    methods::MethodResult result;
    bool failed = false;
    std::string error;
};

struct FractionRow {
    std::size_t n = 0;
    methods::MethodKind method = methods::MethodKind::bfgs;
    std::string stage;
    std::vector<double> per_seed;
    ErrorBar f;
};

struct SplitRow {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    methods::MethodKind method = methods::MethodKind::bfgs;
    ImprovementSplit split;
};

struct RunRecord {
    ExperimentConfig config;
    /// Sorted by (n, seed, method).
    std::vector<Cell> cells;
    std::vector<FractionRow> fractions;
    std::vector<SplitRow> splits;

    [[nodiscard]] bool any_failed() const;
    [[nodiscard]] const Cell* find(std::size_t n, std::uint64_t seed, methods::MethodKind m) const;
};

/// Stage names and per-example losses of one result: "network" and
/// "refined" for learned methods, "final" for per-example optimizers.
std::vector<std::pair<std::string, std::vector<double>>> stage_losses(const methods::MethodResult& r);

/// Runs every (n, seed, method) cell. A failing cell is recorded and the
/// run continues.
RunRecord run_experiment(const ExperimentConfig& config);
/// Recomputes fractions and splits from the cells.
void compute_metrics(RunRecord& record);

/// Writes config.json, problem and result containers under `dir`.
void save_run(const RunRecord& record, const std::string& dir);
/// Reads a saved run back and recomputes its metrics.
RunRecord load_run(const std::string& dir);
/// Writes metrics.csv, fractions.csv, curves.csv and splits.csv.
void report(const RunRecord& record, const std::string& dir);
/// Recomputes fractions.csv from metrics.csv alone. Returns an empty string
/// when every row matches exactly, else a description of the first mismatch.
std::string audit_report(const std::string& dir);

}  // namespace jpo::harness
