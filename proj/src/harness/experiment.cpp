#include "jpo/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "jpo/parallel.hpp"

namespace jpo::harness {

using methods::MethodKind;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool network_based(MethodKind m) { return m == MethodKind::jpo || m == MethodKind::supervised || m == MethodKind::neural_adjoint; }

// reads keys of one object and rejects anything it did not consume
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw std::invalid_argument("config: " + path_ + " must be an object");
    }
    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw std::invalid_argument("config: unknown key " + path_ + "." + it.key());
    }

    template <class T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw std::invalid_argument("config: bad value for " + path_ + "." + key);
        }
    }
    const json* child(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    std::string sub(const std::string& key) const { return path_ + "." + key; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

const char* kind_name(opt::Kind k) { return k == opt::Kind::bfgs ? "bfgs" : k == opt::Kind::gd ? "gd" : "adam"; }

json opt_to_json(const opt::OptimizerConfig& c) {
    return {{"kind", kind_name(c.kind)}, {"learning_rate", c.learning_rate}, {"max_iterations", c.max_iterations}, {"tolerance", c.tolerance},
            {"c1", c.c1}, {"c2", c.c2}, {"max_bracket", c.max_bracket}, {"max_zoom", c.max_zoom},
            {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

void opt_from_json(const json& j, const std::string& path, opt::OptimizerConfig& c) {
    Reader r(j, path);
    std::string kind = kind_name(c.kind);
    r.get("kind", kind);
    if (kind == "bfgs")
        c.kind = opt::Kind::bfgs;
    else if (kind == "gd")
        c.kind = opt::Kind::gd;
    else if (kind == "adam")
        c.kind = opt::Kind::adam;
    else
        throw std::invalid_argument("config: unknown optimizer kind " + kind + " at " + path);
    r.get("learning_rate", c.learning_rate);
    r.get("max_iterations", c.max_iterations);
    r.get("tolerance", c.tolerance);
    r.get("c1", c.c1);
    r.get("c2", c.c2);
    r.get("max_bracket", c.max_bracket);
    r.get("max_zoom", c.max_zoom);
    r.get("beta1", c.beta1);
    r.get("beta2", c.beta2);
    r.get("epsilon", c.epsilon);
}

json problems_to_json(const prob::FamilyConfig& p) {
    return {{"wavepacket",
             {{"samples", p.wavepacket.samples}, {"envelope", p.wavepacket.envelope}, {"carrier", p.wavepacket.carrier},
              {"t0_min", p.wavepacket.t0_min}, {"t0_max", p.wavepacket.t0_max}, {"noise", p.wavepacket.noise}}},
            {"billiards",
             {{"radius", p.billiards.radius}, {"elasticity", p.billiards.elasticity},
              {"friction", p.billiards.friction}, {"cue_x", p.billiards.cue_x}, {"cue_y", p.billiards.cue_y},
              {"target_x", p.billiards.target_x}, {"target_y", p.billiards.target_y}}},
            {"ks",
             {{"resolution", p.ks.resolution}, {"length", p.ks.length}, {"dt", p.ks.dt}, {"steps", p.ks.steps},
              {"guard", p.ks.guard}}},
            {"ks_prior",
             {{"alpha_lo", p.ks_prior.alpha_lo}, {"alpha_hi", p.ks_prior.alpha_hi}, {"beta_lo", p.ks_prior.beta_lo},
              {"beta_hi", p.ks_prior.beta_hi}}},
            {"arm",
             {{"l1", p.arm.l1}, {"l2", p.arm.l2}, {"l3", p.arm.l3}, {"sigma_height", p.arm.sigma_height},
              {"sigma_angle", p.arm.sigma_angle}}}};
}

void problems_from_json(const json& j, const std::string& path, prob::FamilyConfig& p) {
    Reader r(j, path);
    if (auto* w = r.child("wavepacket")) {
        Reader s(*w, r.sub("wavepacket"));
        s.get("samples", p.wavepacket.samples);
        s.get("envelope", p.wavepacket.envelope);
        s.get("carrier", p.wavepacket.carrier);
        s.get("t0_min", p.wavepacket.t0_min);
        s.get("t0_max", p.wavepacket.t0_max);
        s.get("noise", p.wavepacket.noise);
    }
    if (auto* b = r.child("billiards")) {
        Reader s(*b, r.sub("billiards"));
        s.get("radius", p.billiards.radius);
        s.get("elasticity", p.billiards.elasticity);
        s.get("friction", p.billiards.friction);
        s.get("cue_x", p.billiards.cue_x);
        s.get("cue_y", p.billiards.cue_y);
        s.get("target_x", p.billiards.target_x);
        s.get("target_y", p.billiards.target_y);
    }
    if (auto* k = r.child("ks")) {
        Reader s(*k, r.sub("ks"));
        s.get("resolution", p.ks.resolution);
        s.get("length", p.ks.length);
        s.get("dt", p.ks.dt);
        s.get("steps", p.ks.steps);
        s.get("guard", p.ks.guard);
    }
    if (auto* k = r.child("ks_prior")) {
        Reader s(*k, r.sub("ks_prior"));
        s.get("alpha_lo", p.ks_prior.alpha_lo);
        s.get("alpha_hi", p.ks_prior.alpha_hi);
        s.get("beta_lo", p.ks_prior.beta_lo);
        s.get("beta_hi", p.ks_prior.beta_hi);
    }
    if (auto* a = r.child("arm")) {
        Reader s(*a, r.sub("arm"));
        s.get("l1", p.arm.l1);
        s.get("l2", p.arm.l2);
        s.get("l3", p.arm.l3);
        s.get("sigma_height", p.arm.sigma_height);
        s.get("sigma_angle", p.arm.sigma_angle);
    }
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string cell_stem(std::size_t n, std::uint64_t seed) { return "n" + std::to_string(n) + "_s" + std::to_string(seed); }

std::string one_line(std::string s) {
    std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ' ');
    return s;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + p.string());
}

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace

// ---- config ------------------------------------------------------------------

void ExperimentConfig::validate() const {
    if (n.empty()) throw std::invalid_argument("config: N list is empty");
    for (auto v : n)
        if (v == 0) throw std::invalid_argument("config: N values must be positive");
    if (seeds.empty()) throw std::invalid_argument("config: at least one seed is required");
    if (methods.empty()) throw std::invalid_argument("config: method list is empty");
    for (auto m : methods)
        if (m == MethodKind::neural_adjoint && family != prob::Family::billiards && family != prob::Family::arm)
            throw std::invalid_argument("config: neural_adjoint supports billiards and arm only");
    if (jpo.iterations == 0) throw std::invalid_argument("config: jpo.iterations must be positive");
    if (jpo.log_every == 0 || supervised.log_every == 0 || adjoint.log_every == 0)
        throw std::invalid_argument("config: log_every must be positive");
    jpo.adam.validate();
    supervised.adam.validate();
    adjoint.surrogate_adam.validate();
    adjoint.input_adam.validate();
    bfgs.validate();
    gd.validate();
    refinement.validate();
}

std::vector<MethodKind> ExperimentConfig::run_methods() const {
    std::set<MethodKind> s(methods.begin(), methods.end());
    s.insert(MethodKind::bfgs);
    return {s.begin(), s.end()};
}

ExperimentConfig default_config(prob::Family family) {
    ExperimentConfig c;
    c.family = family;
    c.output = std::string("runs/") + prob::family_name(family);
    c.bfgs.kind = opt::Kind::bfgs;
    c.refinement.kind = opt::Kind::bfgs;
    c.gd.kind = opt::Kind::gd;
    c.gd.learning_rate = 1e-2;
    c.gd.max_iterations = 1000;
    switch (family) {
        case prob::Family::wavepacket:
            c.methods = {MethodKind::jpo, MethodKind::supervised};
            c.jpo.iterations = 1000;
            c.jpo.adam.learning_rate = 1e-3;
            break;
        case prob::Family::billiards:
            c.methods = {MethodKind::jpo, MethodKind::supervised, MethodKind::neural_adjoint};
            c.jpo.iterations = 3000;
            c.jpo.adam.learning_rate = 1e-4;
            break;
        case prob::Family::ks:
            c.methods = {MethodKind::jpo, MethodKind::supervised};
            c.jpo.iterations = 1000;
            c.jpo.adam.learning_rate = 1e-3;
            c.jpo.stop_on_plateau = true;
            c.supervised.log_every = 200;
            break;
        case prob::Family::arm:
            c.methods = {MethodKind::jpo, MethodKind::supervised, MethodKind::neural_adjoint, MethodKind::gd};
            c.jpo.iterations = 2000;
            c.jpo.adam.learning_rate = 1e-3;
            c.jpo.stop_on_plateau = true;
            c.gd.learning_rate = 0.1;
            c.gd.max_iterations = 20000;
            break;
    }
    return c;
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    if (!j.contains("schema_version")) throw std::invalid_argument("config: schema_version missing");
    if (!j.contains("family")) throw std::invalid_argument("config: family missing");
    ExperimentConfig c = default_config(prob::parse_family(j.at("family").get<std::string>()));

    Reader r(j, "config");
    int version = 0;
    r.get("schema_version", version);
    if (version != ExperimentConfig::schema_version)
        throw std::invalid_argument("config: unsupported schema_version " + std::to_string(version));
    std::string family;
    r.get("family", family);
    r.get("n", c.n);
    r.get("seeds", c.seeds);
    std::vector<std::string> names;
    r.get("methods", names);
    if (j.contains("methods")) {
        c.methods.clear();
        for (auto& s : names) c.methods.push_back(methods::parse_method(s));
    }
    r.get("refine", c.refine);
    r.get("output", c.output);
    r.get("threads", c.threads);
    r.get("auto_learning_rate", c.auto_learning_rate);
    if (auto* p = r.child("problems")) problems_from_json(*p, "config.problems", c.problems);
    if (auto* p = r.child("jpo")) {
        Reader s(*p, "config.jpo");
        s.get("iterations", c.jpo.iterations);
        s.get("clip_percentile", c.jpo.clip_percentile);
        s.get("log_every", c.jpo.log_every);
        s.get("stop_on_plateau", c.jpo.stop_on_plateau);
        s.get("plateau_window", c.jpo.plateau_window);
        s.get("plateau_tolerance", c.jpo.plateau_tolerance);
        if (auto* a = s.child("adam")) opt_from_json(*a, "config.jpo.adam", c.jpo.adam);
    }
    if (auto* p = r.child("supervised")) {
        Reader s(*p, "config.supervised");
        s.get("synthetic", c.supervised.synthetic);
        s.get("batch", c.supervised.batch);
        s.get("iterations", c.supervised.iterations);
        s.get("log_every", c.supervised.log_every);
        if (auto* a = s.child("adam")) opt_from_json(*a, "config.supervised.adam", c.supervised.adam);
    }
    if (auto* p = r.child("adjoint")) {
        Reader s(*p, "config.adjoint");
        s.get("synthetic", c.adjoint.synthetic);
        s.get("batch", c.adjoint.batch);
        s.get("surrogate_iterations", c.adjoint.surrogate_iterations);
        s.get("hidden", c.adjoint.hidden);
        s.get("sharpness", c.adjoint.sharpness);
        s.get("iterations", c.adjoint.iterations);
        s.get("log_every", c.adjoint.log_every);
        s.get("residual_warning", c.adjoint.residual_warning);
        if (auto* a = s.child("surrogate_adam")) opt_from_json(*a, "config.adjoint.surrogate_adam", c.adjoint.surrogate_adam);
        if (auto* a = s.child("input_adam")) opt_from_json(*a, "config.adjoint.input_adam", c.adjoint.input_adam);
    }
    if (auto* p = r.child("bfgs")) opt_from_json(*p, "config.bfgs", c.bfgs);
    if (auto* p = r.child("gd")) opt_from_json(*p, "config.gd", c.gd);
    if (auto* p = r.child("refinement")) opt_from_json(*p, "config.refinement", c.refinement);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_text(path)); }

std::string config_to_json(const ExperimentConfig& c) {
    json m = json::array();
    for (auto k : c.methods) m.push_back(methods::method_name(k));
    json j = {
        {"schema_version", ExperimentConfig::schema_version},
        {"family", prob::family_name(c.family)},
        {"n", c.n},
        {"seeds", c.seeds},
        {"methods", m},
        {"refine", c.refine},
        {"output", c.output},
        {"threads", c.threads},
        {"auto_learning_rate", c.auto_learning_rate},
        {"problems", problems_to_json(c.problems)},
        {"jpo",
         {{"iterations", c.jpo.iterations}, {"clip_percentile", c.jpo.clip_percentile}, {"log_every", c.jpo.log_every},
          {"stop_on_plateau", c.jpo.stop_on_plateau}, {"plateau_window", c.jpo.plateau_window},
          {"plateau_tolerance", c.jpo.plateau_tolerance}, {"adam", opt_to_json(c.jpo.adam)}}},
        {"supervised",
         {{"synthetic", c.supervised.synthetic}, {"batch", c.supervised.batch},
          {"iterations", c.supervised.iterations}, {"log_every", c.supervised.log_every},
          {"adam", opt_to_json(c.supervised.adam)}}},
        {"adjoint",
         {{"synthetic", c.adjoint.synthetic}, {"batch", c.adjoint.batch},
          {"surrogate_iterations", c.adjoint.surrogate_iterations}, {"hidden", c.adjoint.hidden},
          {"sharpness", c.adjoint.sharpness}, {"iterations", c.adjoint.iterations},
          {"log_every", c.adjoint.log_every}, {"residual_warning", c.adjoint.residual_warning},
          {"surrogate_adam", opt_to_json(c.adjoint.surrogate_adam)}, {"input_adam", opt_to_json(c.adjoint.input_adam)}}},
        {"bfgs", opt_to_json(c.bfgs)},
        {"gd", opt_to_json(c.gd)},
        {"refinement", opt_to_json(c.refinement)},
    };
    return j.dump(2) + "\n";
}

void apply_env_overrides(ExperimentConfig& config) {
    if (const char* s = std::getenv("JPO_SEEDS"); s && *s) {
        std::vector<std::uint64_t> seeds;
        std::stringstream in(s);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            if (tok.empty()) continue;
            std::size_t used = 0;
            unsigned long long v = 0;
            try {
                v = std::stoull(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size()) throw std::invalid_argument("JPO_SEEDS: not an integer: " + tok);
            seeds.push_back(v);
        }
        if (seeds.empty()) throw std::invalid_argument("JPO_SEEDS: no seeds given");
        config.seeds = seeds;
    }
    if (const char* s = std::getenv("JPO_OUTPUT"); s && *s) config.output = s;
}

// ---- running -----------------------------------------------------------------

bool RunRecord::any_failed() const {
    return std::any_of(cells.begin(), cells.end(), [](const Cell& c) { return c.failed; });
}

const Cell* RunRecord::find(std::size_t n, std::uint64_t seed, MethodKind m) const {
    for (auto& c : cells)
        if (c.n == n && c.seed == seed && c.method == m) return &c;
    return nullptr;
}

std::vector<std::pair<std::string, std::vector<double>>> stage_losses(const methods::MethodResult& r) {
    std::vector<std::pair<std::string, std::vector<double>>> out;
    if (!r.history_loss.empty()) out.emplace_back("initial", r.history_loss.front());
    if (network_based(r.method)) {
        out.emplace_back("network", r.method == MethodKind::supervised ? r.final_loss : r.best_loss);
        if (r.refinement) out.emplace_back("refined", r.refinement->loss);
    } else {
        out.emplace_back("final", r.final_loss);
    }
    return out;
}

namespace {

methods::MethodResult run_cell(const ExperimentConfig& c, const prob::ProblemSet& set, MethodKind m,
                               std::uint64_t seed) {
    methods::MethodResult r;
    switch (m) {
        case MethodKind::jpo: {
            auto spec = methods::family_net(c.family);
            auto cfg = c.jpo;
            if (c.auto_learning_rate) cfg.adam.learning_rate = methods::select_learning_rate(set, spec, cfg, seed);
            r = methods::jpo_train(set, spec, cfg, seed);
            break;
        }
        case MethodKind::supervised:
            r = methods::supervised_train(set, methods::family_net(c.family), c.supervised, seed);
            break;
        case MethodKind::neural_adjoint:
            r = methods::neural_adjoint_solve(set, c.adjoint, seed);
            break;
        case MethodKind::bfgs:
            r = methods::classical_solve(set, MethodKind::bfgs, c.bfgs);
            break;
        case MethodKind::gd:
            r = methods::classical_solve(set, MethodKind::gd, c.gd);
            break;
    }
    r.seed = seed;
    if (c.refine && network_based(m)) methods::refine(r, set, c.refinement);
    return r;
}

struct ThreadScope {
    explicit ThreadScope(std::size_t n) : saved(thread_count()) {
        if (n) set_thread_count(n);
    }
    ~ThreadScope() { set_thread_count(saved); }
    std::size_t saved;
};

}  // namespace

RunRecord run_experiment(const ExperimentConfig& config) {
    config.validate();
    ThreadScope scope(config.threads);
    RunRecord rec;
    rec.config = config;

    std::vector<std::size_t> ns = config.n;
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    std::vector<std::uint64_t> seeds = config.seeds;
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    const auto ms = config.run_methods();

    for (auto n : ns)
        for (auto s : seeds)
            for (auto m : ms) {
                Cell cell;
                cell.n = n;
                cell.seed = s;
                cell.method = m;
                rec.cells.push_back(std::move(cell));
            }

    // problem sets are shared by the methods of one (n, seed) pair
    std::vector<prob::ProblemSet> sets(ns.size() * seeds.size());
    std::vector<std::string> set_error(sets.size());
    parallel_for(sets.size(), [&](std::size_t k) {
        try {
            sets[k] = prob::generate(config.family, ns[k / seeds.size()], seeds[k % seeds.size()], config.problems);
            sets[k].drop_ground_truth();
        } catch (const std::exception& e) {
            set_error[k] = std::string("problem generation: ") + e.what();
        }
    });

    parallel_for(rec.cells.size(), [&](std::size_t i) {
        Cell& cell = rec.cells[i];
        const std::size_t k = i / ms.size();
        if (!set_error[k].empty()) {
            cell.failed = true;
            cell.error = set_error[k];
            return;
        }
        try {
            cell.result = run_cell(config, sets[k], cell.method, cell.seed);
        } catch (const std::exception& e) {
            cell.failed = true;
            cell.error = e.what();
        }
    });
    compute_metrics(rec);
    return rec;
}

void compute_metrics(RunRecord& rec) {
    rec.fractions.clear();
    rec.splits.clear();
    std::vector<std::size_t> ns;
    std::vector<std::uint64_t> seeds;
    std::vector<MethodKind> ms;
    for (auto& c : rec.cells) {
        ns.push_back(c.n);
        seeds.push_back(c.seed);
        ms.push_back(c.method);
    }
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    std::sort(ms.begin(), ms.end());
    ms.erase(std::unique(ms.begin(), ms.end()), ms.end());

    for (auto n : ns) {
        for (auto m : ms) {
            std::map<std::string, std::vector<double>> per_stage;
            std::vector<std::string> order;
            for (auto s : seeds) {
                const Cell* cell = rec.find(n, s, m);
                const Cell* ref = rec.find(n, s, MethodKind::bfgs);
                if (!cell || !ref || cell->failed || ref->failed) continue;
                for (auto& [stage, losses] : stage_losses(cell->result)) {
                    if (stage == "initial") continue;
                    if (!per_stage.count(stage)) order.push_back(stage);
                    per_stage[stage].push_back(fraction_better(losses, ref->result.final_loss));
                }
                auto st = stage_losses(cell->result);
                if (st.size() == 3 && st[2].first == "refined") {
                    SplitRow row;
                    row.n = n;
                    row.seed = s;
                    row.method = m;
                    row.split = improvement_split(st[1].second, st[2].second, st[0].second);
                    rec.splits.push_back(row);
                }
            }
            for (auto& stage : order) {
                FractionRow row;
                row.n = n;
                row.method = m;
                row.stage = stage;
                row.per_seed = per_stage[stage];
                row.f = errorbar(row.per_seed, n);
                rec.fractions.push_back(std::move(row));
            }
        }
    }
}

// ---- persistence -------------------------------------------------------------

void save_run(const RunRecord& rec, const std::string& dir) {
    const fs::path root(dir);
    fs::create_directories(root / "cells");
    write_text(root / "config.json", config_to_json(rec.config));
    std::string status = "n,seed,method,status,error\n";
    for (auto& c : rec.cells) {
        status += std::to_string(c.n) + "," + std::to_string(c.seed) + "," + methods::method_name(c.method) + "," +
                  (c.failed ? "failed" : "ok") + "," + one_line(c.error) + "\n";
        if (!c.failed)
            write_container((root / "cells" / (cell_stem(c.n, c.seed) + "_" + methods::method_name(c.method) + ".jpoc"))
                                .string(),
                            c.result.to_container());
    }
    write_text(root / "cells.csv", status);
}

RunRecord load_run(const std::string& dir) {
    const fs::path root(dir);
    RunRecord rec;
    rec.config = load_config((root / "config.json").string());
    std::istringstream in(read_text(root / "cells.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) f.push_back(tok);
        while (f.size() < 5) f.emplace_back();
        Cell c;
        c.n = std::stoull(f[0]);
        c.seed = std::stoull(f[1]);
        c.method = methods::parse_method(f[2]);
        c.failed = f[3] != "ok";
        c.error = f[4];
        if (!c.failed)
            c.result = methods::MethodResult::from_container(
                read_container((root / "cells" / (cell_stem(c.n, c.seed) + "_" + f[2] + ".jpoc")).string()));
        rec.cells.push_back(std::move(c));
    }
    compute_metrics(rec);
    return rec;
}

void report(const RunRecord& rec, const std::string& dir) {
    const fs::path root(dir);
    fs::create_directories(root);
    const std::string family = prob::family_name(rec.config.family);

    std::string metrics = "family,N,seed,method,stage,example,loss\n";
    std::string curves = "family,N,seed,method,iteration,mean_loss,finite\n";
    for (auto& c : rec.cells) {
        if (c.failed) continue;
        const std::string head = family + "," + std::to_string(c.n) + "," + std::to_string(c.seed) + "," +
                                 methods::method_name(c.method) + ",";
        for (auto& [stage, losses] : stage_losses(c.result))
            for (std::size_t i = 0; i < losses.size(); ++i)
                metrics += head + stage + "," + std::to_string(i) + "," + fmt(losses[i]) + "\n";
        for (std::size_t k = 0; k < c.result.iteration.size(); ++k) {
            double sum = 0;
            std::size_t finite = 0;
            for (double v : c.result.history_loss[k])
                if (std::isfinite(v)) {
                    sum += v;
                    ++finite;
                }
            curves += head + std::to_string(c.result.iteration[k]) + "," +
                      fmt(finite ? sum / static_cast<double>(finite) : std::nan("")) + "," + std::to_string(finite) +
                      "\n";
        }
    }

    std::string fractions = "family,N,method,stage,seeds,f_mean,f_bar\n";
    for (auto& f : rec.fractions)
        fractions += family + "," + std::to_string(f.n) + "," + methods::method_name(f.method) + "," + f.stage + "," +
                     std::to_string(f.per_seed.size()) + "," + fmt(f.f.mean) + "," + fmt(f.f.bar) + "\n";

    std::string splits = "family,N,seed,method,network_fraction,used,excluded\n";
    for (auto& s : rec.splits)
        splits += family + "," + std::to_string(s.n) + "," + std::to_string(s.seed) + "," +
                  methods::method_name(s.method) + "," + fmt(s.split.fraction) + "," + std::to_string(s.split.used) +
                  "," + std::to_string(s.split.excluded) + "\n";

    write_text(root / "metrics.csv", metrics);
    write_text(root / "curves.csv", curves);
    write_text(root / "fractions.csv", fractions);
    write_text(root / "splits.csv", splits);
}

std::string audit_report(const std::string& dir) {
    const fs::path root(dir);
    // (N, seed, method, stage) -> losses, read back from metrics.csv only
    std::map<std::tuple<std::size_t, std::uint64_t, std::string, std::string>, std::vector<double>> losses;
    {
        std::istringstream in(read_text(root / "metrics.csv"));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> f;
            std::stringstream ls(line);
            std::string tok;
            while (std::getline(ls, tok, ',')) f.push_back(tok);
            if (f.size() != 7) return "metrics.csv: malformed row: " + line;
            auto& v = losses[{std::stoull(f[1]), std::stoull(f[2]), f[3], f[4]}];
            if (std::stoull(f[5]) != v.size()) return "metrics.csv: examples out of order";
            v.push_back(std::strtod(f[6].c_str(), nullptr));
        }
    }
    std::istringstream in(read_text(root / "fractions.csv"));
    std::string line;
    std::getline(in, line);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) f.push_back(tok);
        if (f.size() != 7) return "fractions.csv: malformed row: " + line;
        const std::size_t n = std::stoull(f[1]);
        std::vector<double> per_seed;
        for (auto& [key, v] : losses) {
            if (std::get<0>(key) != n || std::get<2>(key) != f[2] || std::get<3>(key) != f[3]) continue;
            auto ref = losses.find({n, std::get<1>(key), "bfgs", "final"});
            if (ref == losses.end()) continue;
            per_seed.push_back(fraction_better(v, ref->second));
        }
        if (per_seed.size() != std::stoull(f[4])) return "fractions.csv: seed count differs for " + line;
        const auto e = errorbar(per_seed, n);
        if (fmt(e.mean) != f[5] || fmt(e.bar) != f[6])
            return "fractions.csv: recomputed " + fmt(e.mean) + " / " + fmt(e.bar) + " for " + line;
        ++rows;
    }
    if (rows == 0) return "fractions.csv: no rows";
    return {};
}

}  // namespace jpo::harness
