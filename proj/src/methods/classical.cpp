#include <algorithm>
#include <stdexcept>

#include "jpo/methods/methods.hpp"

namespace jpo::methods {

namespace {

opt::BatchObjective true_objective(const prob::ProblemSet& set) {
    return [&set](std::size_t i, std::span<const double> x, std::span<double> g) {
        return prob::example_loss(set, i, x, g);
    };
}

}  // namespace

MethodResult classical_solve(const prob::ProblemSet& set, MethodKind kind, const opt::OptimizerConfig& config) {
    if (kind != MethodKind::bfgs && kind != MethodKind::gd)
        throw std::invalid_argument("classical_solve: method must be bfgs or gd");
    const std::vector<std::vector<double>> x0(set.size(), prob::default_start(set));
    const auto runs = kind == MethodKind::bfgs ? opt::bfgs_minimize_batch(true_objective(set), x0, config)
                                               : opt::gd_minimize_batch(true_objective(set), x0, config);
    MethodResult r;
    r.method = kind;
    r.family = set.family();
    r.seed = set.seed();
    r.learning_rate = kind == MethodKind::gd ? config.learning_rate : 0.0;
    std::size_t len = 0;
    for (const auto& run : runs) len = std::max(len, run.losses.size());
    // examples that stopped early keep their last iterate
    for (std::size_t k = 0; k < len; ++k) {
        std::vector<std::vector<double>> xs(runs.size());
        std::vector<double> ls(runs.size());
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const std::size_t j = std::min(k, runs[i].losses.size() - 1);
            xs[i] = runs[i].trajectory[j];
            ls[i] = runs[i].losses[j];
        }
        r.log(k, xs, ls);
    }
    for (std::size_t i = 0; i < runs.size(); ++i)
        if (runs[i].reason == opt::Termination::diverged || runs[i].reason == opt::Termination::non_finite)
            r.events.push_back("example " + std::to_string(i) + ": " + opt::termination_name(runs[i].reason));
    return r;
}

void refine(MethodResult& result, const prob::ProblemSet& set, const opt::OptimizerConfig& config) {
    if (result.size() != set.size()) throw std::invalid_argument("refine: result and problem set differ in size");
    const auto& start = result.refine_start();
    const auto runs = opt::bfgs_minimize_batch(true_objective(set), start, config);
    Refinement f;
    for (const auto& run : runs) {
        f.x.push_back(run.x);
        f.loss.push_back(run.final_loss());
        f.iterations.push_back(run.iterations);
        f.reason.push_back(run.reason);
        f.start_loss.push_back(run.losses.front());
    }
    result.refinement = std::move(f);
}

}  // namespace jpo::methods
