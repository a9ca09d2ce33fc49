#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jpo/align/alignment.hpp"
#include "jpo/harness/experiment.hpp"
#include "jpo/noise/theory.hpp"
#include "jpo/parallel.hpp"

using namespace jpo;

namespace {

void print_fractions(const harness::RunRecord& rec) {
    std::printf("%-6s %-15s %-8s %-6s %-10s %-10s\n", "N", "method", "stage", "seeds", "f_mean", "f_bar");
    for (auto& f : rec.fractions)
        std::printf("%-6zu %-15s %-8s %-6zu %-10.4f %-10.4f\n", f.n, methods::method_name(f.method), f.stage.c_str(),
                    f.per_seed.size(), f.f.mean, f.f.bar);
    for (auto& c : rec.cells)
        if (c.failed)
            std::printf("FAILED cell N=%zu seed=%llu method=%s: %s\n", c.n, static_cast<unsigned long long>(c.seed),
                        methods::method_name(c.method), c.error.c_str());
}

int finish(const harness::RunRecord& rec, const std::string& dir) {
    harness::save_run(rec, dir);
    harness::report(rec, dir);
    print_fractions(rec);
    const auto audit = harness::audit_report(dir);
    if (!audit.empty()) {
        std::fprintf(stderr, "audit failed: %s\n", audit.c_str());
        return 1;
    }
    std::printf("wrote %s\n", dir.c_str());
    return rec.any_failed() ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint parameterized optimization of inverse problems"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");

    // theory
    auto* theory = app.add_subcommand("theory", "Closed-form alignment probabilities against Monte Carlo");
    double snr = 0.05;
    std::vector<std::size_t> theory_n = {1, 4, 16, 64};
    std::size_t components = 8, samples = 100000;
    std::uint64_t theory_seed = 1;
    std::string reducer = "sum";
    theory->add_option("--snr", snr, "λ / |Aω|₂ of every example");
    theory->add_option("--n", theory_n, "Batch sizes")->delimiter(',');
    theory->add_option("--components", components, "Fourier components per example");
    theory->add_option("--samples", samples, "Monte Carlo draws");
    theory->add_option("--seed", theory_seed);
    theory->add_option("--reducer", reducer, "sum or vote");

    // align
    auto* align = app.add_subcommand("align", "Measure network alignment and fit the recursion");
    align::AlignConfig acfg;
    std::string task = "linear";
    std::size_t n_max = 64;
    std::uint64_t align_seed = 1;
    align->add_option("--task", task, "linear, sine or sine-noisy");
    align->add_option("--n-max", n_max, "Largest batch size");
    align->add_option("--replicas", acfg.replicas);
    align->add_option("--hidden", acfg.hidden, "Hidden widths")->delimiter(',');
    align->add_option("--lr", acfg.learning_rate);
    align->add_option("--noise", acfg.noise, "|Aω|₂ of the noisy task");
    align->add_option("--seed", align_seed);

    // solve
    auto* solve = app.add_subcommand("solve", "Run one method on one problem set");
    std::string family, method;
    std::size_t solve_n = 16, iterations = 0;
    std::uint64_t solve_seed = 1;
    std::string solve_out = "runs/solve";
    bool no_refine = false;
    double lr = 0;
    solve->add_option("--family", family, "wavepacket, billiards, ks or arm")->required();
    solve->add_option("--method", method, "jpo, supervised, neural_adjoint, bfgs or gd")->required();
    solve->add_option("--n", solve_n, "Number of problems");
    solve->add_option("--seed", solve_seed);
    solve->add_option("--iterations", iterations, "Training iterations (0 = family default)");
    solve->add_option("--lr", lr, "JPO learning rate (0 = family default)");
    solve->add_flag("--no-refine", no_refine, "Skip the BFGS refinement stage");
    solve->add_option("--output", solve_out, "Run directory");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run an experiment grid from a config file");
    std::string config_path, sweep_out;
    sweep->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
    sweep->add_option("--output", sweep_out, "Override the output directory");

    // report
    auto* rep = app.add_subcommand("report", "Rewrite CSVs of a saved run and audit them");
    std::string run_dir;
    rep->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

    // config
    auto* conf = app.add_subcommand("config", "Print the default config of a family");
    std::string conf_family;
    conf->add_option("--family", conf_family)->required();

    CLI11_PARSE(app, argc, argv);
    if (threads) set_thread_count(threads);

    try {
        if (*theory) {
            const auto red = noise::parse_reducer(reducer);
            std::printf("N,reducer,predicted,measured,se\n");
            for (auto n : theory_n) {
                CounterRng rng(theory_seed, streams::landscape);
                CounterRng brng = rng.substream(n);
                const auto batch = noise::equal_noise_batch(n, components, snr, brng);
                double predicted = 0;
                if (red == noise::Reducer::sum) {
                    std::vector<double> lambdas;
                    double aw2 = 0;
                    for (auto& s : batch.specs) {
                        lambdas.push_back(s.lambda);
                        aw2 += s.aw_norm() * s.aw_norm();
                    }
                    predicted = noise::prob_aligned_sum(lambdas, std::sqrt(aw2));
                } else {
                    predicted = noise::prob_majority_exact(n, noise::prob_aligned_single(snr, 1.0) - 0.5);
                }
                const auto est = noise::mc_alignment(batch, red, samples, CounterRng(theory_seed, streams::sampling).substream(n),
                                                     noise::Sampling::ensemble);
                std::printf("%zu,%s,%.6f,%.6f,%.6f\n", n, noise::reducer_name(red), predicted, est.p, est.se);
            }
            return 0;
        }
        if (*align) {
            acfg.task = align::parse_task(task);
            std::vector<std::size_t> ns;
            for (std::size_t n = 1; n <= n_max; ++n) ns.push_back(n);
            const auto curve = align::measure_curve(ns, acfg, align_seed);
            const auto fit = align::rho_fit(curve);
            const auto pred = align::rho_at(fit.params, ns);
            double worst = 0;
            std::printf("N,measured,predicted\n");
            for (std::size_t k = 0; k < ns.size(); ++k) {
                std::printf("%zu,%.6f,%.6f\n", ns[k], curve.rho[k], pred[k]);
                worst = std::max(worst, std::abs(curve.rho[k] - pred[k]));
            }
            std::printf("# fitted A=%.4g C=%.4g rms=%.4g max_dev=%.4g (reference A=12.9 C=6.4)\n",
                        fit.params.plasticity, fit.params.complexity, fit.residual, worst);
            return 0;
        }
        if (*solve) {
            auto cfg = harness::default_config(prob::parse_family(family));
            cfg.n = {solve_n};
            cfg.seeds = {solve_seed};
            cfg.methods = {methods::parse_method(method)};
            cfg.refine = !no_refine;
            cfg.output = solve_out;
            cfg.threads = threads;
            if (iterations) {
                cfg.jpo.iterations = iterations;
                cfg.supervised.iterations = iterations;
                cfg.adjoint.iterations = iterations;
                cfg.bfgs.max_iterations = iterations;
                cfg.gd.max_iterations = iterations;
            }
            if (lr > 0) cfg.jpo.adam.learning_rate = lr;
            harness::apply_env_overrides(cfg);
            return finish(harness::run_experiment(cfg), cfg.output);
        }
        if (*sweep) {
            auto cfg = harness::load_config(config_path);
            harness::apply_env_overrides(cfg);
            if (!sweep_out.empty()) cfg.output = sweep_out;
            if (threads) cfg.threads = threads;
            return finish(harness::run_experiment(cfg), cfg.output);
        }
        if (*rep) {
            const auto rec = harness::load_run(run_dir);
            harness::report(rec, run_dir);
            print_fractions(rec);
            const auto audit = harness::audit_report(run_dir);
            if (!audit.empty()) {
                std::fprintf(stderr, "audit failed: %s\n", audit.c_str());
                return 1;
            }
            return rec.any_failed() ? 2 : 0;
        }
        if (*conf) {
            std::cout << harness::config_to_json(harness::default_config(prob::parse_family(conf_family)));
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
