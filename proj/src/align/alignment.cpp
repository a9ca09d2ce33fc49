#include "jpo/align/alignment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "jpo/parallel.hpp"

namespace jpo::align {

void AlignmentParams::validate() const {
    if (!(plasticity > 0)) throw std::invalid_argument("alignment model: plasticity A must be > 0");
    if (!(complexity >= 0)) throw std::invalid_argument("alignment model: complexity C~ must be >= 0");
}

AlignmentCurve rho_predict(const AlignmentParams& params, std::size_t n_max) {
    params.validate();
    if (n_max < 1) throw std::invalid_argument("rho_predict: n_max must be >= 1");
    AlignmentCurve c;
    c.provenance = Provenance::predicted;
    double rho = 1.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        if (n > 1) {
            const double nn = static_cast<double>(n);
            const double keep = std::exp(-(nn - 1.0) / params.plasticity);
            const double corr = std::clamp(params.complexity / nn, 0.0, 1.0);
            const double p = (1.0 - keep) * (0.5 * corr + (1.0 - corr) * rho) + keep;
            rho = ((nn - 1.0) * rho + p) / nn;
        }
        c.n.push_back(n);
        c.rho.push_back(rho);
    }
    return c;
}

std::vector<double> rho_at(const AlignmentParams& params, const std::vector<std::size_t>& n) {
    if (n.empty()) return {};
    const auto full = rho_predict(params, *std::max_element(n.begin(), n.end()));
    std::vector<double> out;
    out.reserve(n.size());
    for (auto k : n) {
        if (k < 1) throw std::invalid_argument("rho_at: N must be >= 1");
        out.push_back(full.rho[k - 1]);
    }
    return out;
}

namespace {

constexpr double a_lo = 0.1, a_hi = 100.0, c_lo = 0.0, c_hi = 50.0;

double sq_error(const AlignmentCurve& m, double log_a, double c) {
    const AlignmentParams p{std::exp(std::clamp(log_a, std::log(a_lo), std::log(a_hi))), std::clamp(c, c_lo, c_hi)};
    const auto pred = rho_at(p, m.n);
    double s = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - m.rho[i]) * (pred[i] - m.rho[i]);
    return s;
}

// plain Nelder-Mead in two dimensions
std::array<double, 2> polish(const AlignmentCurve& m, std::array<double, 2> start, std::array<double, 2> step) {
    using P = std::array<double, 2>;
    std::array<P, 3> x{start, P{start[0] + step[0], start[1]}, P{start[0], start[1] + step[1]}};
    std::array<double, 3> f{};
    for (int i = 0; i < 3; ++i) f[i] = sq_error(m, x[i][0], x[i][1]);
    for (int iter = 0; iter < 400; ++iter) {
        std::array<int, 3> o{0, 1, 2};
        std::sort(o.begin(), o.end(), [&](int a, int b) { return f[a] < f[b]; });
        const int best = o[0], mid = o[1], worst = o[2];
        if (std::abs(f[worst] - f[best]) < 1e-16 && std::abs(x[worst][0] - x[best][0]) < 1e-10) break;
        const P cen{0.5 * (x[best][0] + x[mid][0]), 0.5 * (x[best][1] + x[mid][1])};
        auto along = [&](double t) { return P{cen[0] + t * (x[worst][0] - cen[0]), cen[1] + t * (x[worst][1] - cen[1])}; };
        const P r = along(-1.0);
        const double fr = sq_error(m, r[0], r[1]);
        if (fr < f[best]) {
            const P e = along(-2.0);
            const double fe = sq_error(m, e[0], e[1]);
            if (fe < fr) x[worst] = e, f[worst] = fe;
            else x[worst] = r, f[worst] = fr;
        } else if (fr < f[mid]) {
            x[worst] = r, f[worst] = fr;
        } else {
            const P k = along(fr < f[worst] ? -0.5 : 0.5);
            const double fk = sq_error(m, k[0], k[1]);
            if (fk < std::min(fr, f[worst])) {
                x[worst] = k, f[worst] = fk;
            } else {
                for (int i : {mid, worst}) {
                    x[i] = P{0.5 * (x[i][0] + x[best][0]), 0.5 * (x[i][1] + x[best][1])};
                    f[i] = sq_error(m, x[i][0], x[i][1]);
                }
            }
        }
    }
    const int b = static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
    return x[b];
}

}  // namespace

FitResult rho_fit(const AlignmentCurve& measured) {
    if (measured.n.size() != measured.rho.size()) throw std::invalid_argument("rho_fit: N and rho lists differ in length");
    if (std::set<std::size_t>(measured.n.begin(), measured.n.end()).size() < 3)
        throw std::invalid_argument("rho_fit: need at least 3 distinct N values");
    for (double r : measured.rho)
        if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("rho_fit: rho values must lie in [0, 1]");

    FitResult out;
    const auto [lo, hi] = std::minmax_element(measured.rho.begin(), measured.rho.end());
    out.flat = *hi - *lo < 1e-12;
    if (out.flat && *lo >= 1.0 - 1e-12) {
        out.params = {a_hi, 0.0};
        out.residual = std::sqrt(sq_error(measured, std::log(a_hi), 0.0) / static_cast<double>(measured.n.size()));
        return out;
    }

    double best = std::numeric_limits<double>::infinity();
    std::array<double, 2> arg{0.0, 0.0};
    const int na = 61, nc = 101;
    for (int i = 0; i < na; ++i) {
        const double log_a = std::log(a_lo) + (std::log(a_hi) - std::log(a_lo)) * i / (na - 1);
        for (int j = 0; j < nc; ++j) {
            const double c = c_lo + (c_hi - c_lo) * j / (nc - 1);
            const double e = sq_error(measured, log_a, c);
            if (e < best) best = e, arg = {log_a, c};
        }
    }
    const auto x = polish(measured, arg, {0.1, 0.5});
    out.params = {std::exp(std::clamp(x[0], std::log(a_lo), std::log(a_hi))), std::clamp(x[1], c_lo, c_hi)};
    out.residual = std::sqrt(sq_error(measured, std::log(out.params.plasticity), out.params.complexity) /
                             static_cast<double>(measured.n.size()));
    return out;
}

// ---- measurement -----------------------------------------------------------

const char* task_name(AlignTask t) {
    switch (t) {
        case AlignTask::linear: return "linear";
        case AlignTask::sine: return "sine";
        case AlignTask::sine_noisy: return "sine-noisy";
    }
    return "?";
}

AlignTask parse_task(const std::string& s) {
    if (s == "linear") return AlignTask::linear;
    if (s == "sine") return AlignTask::sine;
    if (s == "sine-noisy" || s == "sine_noisy") return AlignTask::sine_noisy;
    throw std::invalid_argument("unknown alignment task '" + s + "' (expected linear, sine or sine-noisy)");
}

nn::NetSpec align_net(const AlignConfig& cfg) {
    nn::NetSpec s;
    s.kind = nn::NetKind::s2s;
    s.inputs = 1;
    s.hidden = cfg.hidden;
    s.outputs = 1;
    return s;
}

AlignmentSample measure_alignment(const nn::NetSpec& spec, const nn::NetParams& params,
                                  const std::vector<double>& gamma, const std::vector<noise::LandscapeSpec>& losses,
                                  double learning_rate) {
    if (spec.kind != nn::NetKind::s2s || spec.inputs != 1) throw std::invalid_argument("measure_alignment: net must take one scalar");
    if (spec.outputs != 1) throw std::invalid_argument("measure_alignment: net must output one scalar solution");
    if (gamma.size() != losses.size()) throw std::invalid_argument("measure_alignment: one loss per example required");
    const std::size_t n = gamma.size();

    ad::Tape tape;
    const ad::Value theta = tape.variable(params.theta, {params.theta.size()});
    const ad::Value x = net_forward(spec, params, theta, tape.constant(gamma, {n, 1}));
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = noise::landscape_grad(losses[i], x[i]);
    // d/dθ Σ L_i(x_i(θ)) = Σ g_i dx_i/dθ
    const ad::Value surrogate = ad::sum(x * tape.constant(g, {n, 1}));
    const auto grad = tape.backward(surrogate).of(theta);

    nn::NetParams next = params;
    for (std::size_t k = 0; k < next.theta.size(); ++k) next.theta[k] -= learning_rate * grad[k];
    const auto x1 = net_eval(spec, next, gamma, {n, 1});

    AlignmentSample s;
    for (std::size_t i = 0; i < n; ++i) {
        if (g[i] == 0.0) {
            ++s.excluded;
            continue;
        }
        ++s.counted;
        const double dx = x1[i] - x[i];
        if ((dx > 0 && g[i] < 0) || (dx < 0 && g[i] > 0)) ++s.aligned;
    }
    return s;
}

AlignProblem make_align_problem(AlignTask task, std::size_t n, const AlignConfig& cfg, CounterRng& rng) {
    AlignProblem p;
    for (std::size_t i = 0; i < n; ++i) {
        double gamma = 0, x_star = 0;
        if (task == AlignTask::linear) {
            gamma = rng.uniform(-1.0, 1.0);
            x_star = 10.0 * gamma;
        } else {
            gamma = rng.uniform(-2.0, 2.0);
            x_star = std::sin(2.0 * gamma);
        }
        noise::LandscapeSpec spec;
        if (task == AlignTask::sine_noisy) {
            spec = noise::make_landscape(cfg.components, noise::uniform_law(0.0, 1.0), noise::uniform_law(1.0, 20.0),
                                         1.0, rng, x_star);
            const double scale = cfg.noise / spec.aw_norm();
            for (auto& c : spec.components) c.amplitude *= scale;
        } else {
            spec.lambda = 1.0;
            spec.x_star = x_star;
        }
        p.gamma.push_back(gamma);
        p.losses.push_back(std::move(spec));
    }
    return p;
}

double measure_task(std::size_t n, const AlignConfig& cfg, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("measure_task: N must be >= 1");
    if (cfg.replicas < 1) throw std::invalid_argument("measure_task: need at least one replica");
    const nn::NetSpec spec = align_net(cfg);
    std::vector<double> frac(cfg.replicas);
    std::vector<std::size_t> counted(cfg.replicas);
    const CounterRng root = CounterRng(seed, streams::synthetic).substream(static_cast<std::uint64_t>(cfg.task)).substream(n);
    parallel_for(cfg.replicas, [&](std::size_t r) {
        CounterRng rng = root.substream(r);
        CounterRng net_rng = rng.substream(0);
        CounterRng prob_rng = rng.substream(1);
        const auto params = nn::net_init(spec, net_rng);
        const auto prob = make_align_problem(cfg.task, n, cfg, prob_rng);
        const auto s = measure_alignment(spec, params, prob.gamma, prob.losses, cfg.learning_rate);
        frac[r] = s.fraction();
        counted[r] = s.counted;
    });
    double sum = 0;
    std::size_t used = 0;
    for (std::size_t r = 0; r < cfg.replicas; ++r)
        if (counted[r] > 0) sum += frac[r], ++used;
    return used ? sum / static_cast<double>(used) : 0.0;
}

AlignmentCurve measure_curve(const std::vector<std::size_t>& n, const AlignConfig& cfg, std::uint64_t seed) {
    AlignmentCurve c;
    c.provenance = Provenance::measured;
    for (auto k : n) {
        c.n.push_back(k);
        c.rho.push_back(measure_task(k, cfg, seed));
    }
    return c;
}

}  // namespace jpo::align
