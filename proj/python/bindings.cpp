#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "jpo/align/alignment.hpp"
#include "jpo/harness/experiment.hpp"
#include "jpo/nn/network.hpp"
#include "jpo/noise/theory.hpp"

namespace py = pybind11;
using namespace jpo;

namespace {

nn::NetSpec net_by_name(const std::string& name) {
    switch (prob::parse_family(name)) {
        case prob::Family::wavepacket:
            return nn::wavepacket_net();
        case prob::Family::billiards:
            return nn::billiards_net();
        case prob::Family::ks:
            return nn::ks_net();
        case prob::Family::arm:
            return nn::arm_net();
    }
    throw std::invalid_argument("unknown family");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bindings for the jpo C++ core";

    py::register_exception<std::invalid_argument>(m, "InvalidArgument", PyExc_ValueError);

    // noise lab
    m.def("prob_aligned_single", &noise::prob_aligned_single, py::arg("lam"), py::arg("aw_norm"));
    m.def(
        "prob_aligned_sum",
        [](const std::vector<double>& lambdas, double aw_norm_total) {
            return noise::prob_aligned_sum(lambdas, aw_norm_total);
        },
        py::arg("lambdas"), py::arg("aw_norm_total"));
    m.def("prob_majority_exact", &noise::prob_majority_exact, py::arg("n"), py::arg("epsilon"));
    m.def("prob_majority_normal", &noise::prob_majority_normal, py::arg("n"), py::arg("epsilon"));

    // alignment model
    m.def(
        "rho_predict",
        [](double plasticity, double complexity, std::size_t n_max) {
            return align::rho_predict({plasticity, complexity}, n_max).rho;
        },
        py::arg("plasticity"), py::arg("complexity"), py::arg("n_max"));
    m.def(
        "rho_fit",
        [](const std::vector<std::size_t>& n, const std::vector<double>& rho) {
            align::AlignmentCurve c{n, rho, align::Provenance::measured};
            const auto f = align::rho_fit(c);
            py::dict d;
            d["plasticity"] = f.params.plasticity;
            d["complexity"] = f.params.complexity;
            d["residual"] = f.residual;
            d["flat"] = f.flat;
            return d;
        },
        py::arg("n"), py::arg("rho"));

    // problems
    py::class_<prob::ProblemSet>(m, "ProblemSet")
        .def_property_readonly("family", [](const prob::ProblemSet& s) { return prob::family_name(s.family()); })
        .def_property_readonly("seed", &prob::ProblemSet::seed)
        .def("__len__", &prob::ProblemSet::size)
        .def("target", &prob::ProblemSet::target, py::arg("i"))
        .def("conditioning", &prob::ProblemSet::conditioning, py::arg("i"))
        .def("default_start", [](const prob::ProblemSet& s) { return prob::default_start(s); });
    m.def(
        "generate",
        [](const std::string& family, std::size_t n, std::uint64_t seed) {
            auto s = prob::generate(prob::parse_family(family), n, seed);
            s.drop_ground_truth();
            return s;
        },
        py::arg("family"), py::arg("n"), py::arg("seed"));
    m.def(
        "evaluate",
        [](const prob::ProblemSet& s, const std::vector<std::vector<double>>& xs) {
            auto r = prob::evaluate_all(s, xs, true);
            return py::make_tuple(r.loss, r.grad);
        },
        py::arg("problems"), py::arg("solutions"), "Per-example losses and gradients");

    // networks
    m.def("param_count", [](const std::string& family) { return nn::param_count(net_by_name(family)); },
          py::arg("family"));

    // harness
    m.def(
        "fraction_better",
        [](const std::vector<double>& a, const std::vector<double>& b) { return harness::fraction_better(a, b); },
        py::arg("method_losses"), py::arg("reference_losses"));
    m.def(
        "errorbar",
        [](const std::vector<double>& f, std::size_t n) {
            const auto e = harness::errorbar(f, n);
            return py::make_tuple(e.mean, e.bar);
        },
        py::arg("f"), py::arg("n"));
    m.def(
        "improvement_split",
        [](const std::vector<double>& pre, const std::vector<double>& post, const std::vector<double>& initial) {
            const auto s = harness::improvement_split(pre, post, initial);
            return py::make_tuple(s.fraction, s.used, s.excluded);
        },
        py::arg("pre"), py::arg("post"), py::arg("initial"));
    m.def(
        "default_config",
        [](const std::string& family) { return harness::config_to_json(harness::default_config(prob::parse_family(family))); },
        py::arg("family"), "Default experiment config as JSON text");
    m.def(
        "run_sweep",
        [](const std::string& config_json, const std::string& output) {
            auto cfg = harness::parse_config(config_json);
            if (!output.empty()) cfg.output = output;
            harness::RunRecord rec;
            {
                py::gil_scoped_release release;
                rec = harness::run_experiment(cfg);
            }
            harness::save_run(rec, cfg.output);
            harness::report(rec, cfg.output);
            return rec.any_failed() ? 2 : 0;
        },
        py::arg("config_json"), py::arg("output") = "", "Runs a sweep and writes its CSVs; returns the CLI exit code");
    m.def(
        "solve",
        [](const std::string& family, const std::string& method, std::size_t n, std::uint64_t seed,
           std::size_t iterations, bool refine) {
            auto cfg = harness::default_config(prob::parse_family(family));
            cfg.n = {n};
            cfg.seeds = {seed};
            cfg.methods = {methods::parse_method(method)};
            cfg.refine = refine;
            if (iterations) {
                cfg.jpo.iterations = iterations;
                cfg.supervised.iterations = iterations;
                cfg.adjoint.iterations = iterations;
            }
            harness::RunRecord rec;
            {
                py::gil_scoped_release release;
                rec = harness::run_experiment(cfg);
            }
            const auto* c = rec.find(n, seed, methods::parse_method(method));
            if (c->failed) throw std::runtime_error(c->error);
            py::dict d;
            for (auto& [stage, losses] : harness::stage_losses(c->result)) d[py::str(stage)] = losses;
            d["reference"] = rec.find(n, seed, methods::MethodKind::bfgs)->result.final_loss;
            return d;
        },
        py::arg("family"), py::arg("method"), py::arg("n"), py::arg("seed") = 1, py::arg("iterations") = 0,
        py::arg("refine") = true, "Per-stage losses of one method and the BFGS reference losses");
}
