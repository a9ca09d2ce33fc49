#include "jpo/opt/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "jpo/parallel.hpp"

namespace jpo::opt {

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0)) throw std::invalid_argument("optimizer config: learning rate must be > 0");
    if (!(tolerance > 0)) throw std::invalid_argument("optimizer config: tolerance must be > 0");
    if (!(c1 > 0 && c1 < c2 && c2 < 1)) throw std::invalid_argument("optimizer config: need 0 < c1 < c2 < 1");
    if (!(clip_percentile > 0 && clip_percentile <= 100))
        throw std::invalid_argument("optimizer config: clip percentile must be in (0, 100]");
}

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::stationary: return "stationary";
        case Termination::line_search_failed: return "line_search_failed";
        case Termination::max_iterations: return "max_iterations";
        case Termination::non_finite: return "non_finite";
        case Termination::diverged: return "diverged";
    }
    return "?";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool all_finite(std::span<const double> a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

struct Probe {
    double alpha = 0;
    double f = 0;
    double d = 0;  // directional derivative
    std::vector<double> x;
    std::vector<double> g;
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db); NaN if none.
double cubic_min(double a, double fa, double da, double b, double fb, double db) {
    const double d1 = da + db - 3 * (fa - fb) / (a - b);
    const double rad = d1 * d1 - da * db;
    if (!(rad >= 0)) return std::nan("");
    const double d2 = std::copysign(std::sqrt(rad), b - a);
    const double denom = db - da + 2 * d2;
    if (denom == 0) return std::nan("");
    return b - (b - a) * (db + d2 - d1) / denom;
}

class LineSearch {
public:
    LineSearch(const Objective& f, const std::vector<double>& x, const std::vector<double>& p, double f0, double d0,
               const OptimizerConfig& cfg, std::size_t& evals)
        : f_(f), x_(x), p_(p), f0_(f0), d0_(d0), cfg_(cfg), evals_(evals) {}

    bool saw_non_finite = false;

    // Nocedal-Wright algorithm 3.5 with the zoom of algorithm 3.6.
    bool run(double alpha1, Probe& out) {
        Probe prev{0.0, f0_, d0_, {}, {}};
        double alpha = alpha1;
        for (std::size_t i = 0; i < cfg_.max_bracket; ++i) {
            Probe cur = probe(alpha);
            if (!(cur.f <= f0_ + cfg_.c1 * alpha * d0_) || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur, out);
            if (std::abs(cur.d) <= -cfg_.c2 * d0_) {
                out = std::move(cur);
                return true;
            }
            if (cur.d >= 0) return zoom(cur, prev, out);
            prev = std::move(cur);
            alpha *= 2.0;
        }
        return false;
    }

private:
    Probe probe(double alpha) {
        Probe pr;
        pr.alpha = alpha;
        pr.x.resize(x_.size());
        pr.g.assign(x_.size(), 0.0);
        for (std::size_t i = 0; i < x_.size(); ++i) pr.x[i] = x_[i] + alpha * p_[i];
        ++evals_;
        pr.f = f_(pr.x, pr.g);
        if (!std::isfinite(pr.f) || !all_finite(pr.g)) {
            saw_non_finite = true;
            pr.f = std::numeric_limits<double>::infinity();
            pr.d = std::numeric_limits<double>::infinity();
        } else {
            pr.d = dot(pr.g, p_);
        }
        return pr;
    }

    bool zoom(Probe lo, Probe hi, Probe& out) {
        for (std::size_t j = 0; j < cfg_.max_zoom; ++j) {
            const double a = std::min(lo.alpha, hi.alpha), b = std::max(lo.alpha, hi.alpha);
            const double width = b - a;
            if (width <= 1e-16 * std::max(1.0, b)) return false;
            double alpha = std::nan("");
            if (std::isfinite(hi.f) && std::isfinite(hi.d))
                alpha = cubic_min(lo.alpha, lo.f, lo.d, hi.alpha, hi.f, hi.d);
            // keep the trial point away from the bracket ends
            if (!std::isfinite(alpha) || alpha < a + 0.1 * width || alpha > b - 0.1 * width) alpha = 0.5 * (a + b);
            Probe cur = probe(alpha);
            if (!(cur.f <= f0_ + cfg_.c1 * alpha * d0_) || cur.f >= lo.f) {
                hi = std::move(cur);
            } else {
                if (std::abs(cur.d) <= -cfg_.c2 * d0_) {
                    out = std::move(cur);
                    return true;
                }
                if (cur.d * (hi.alpha - lo.alpha) >= 0) hi = lo;
                lo = std::move(cur);
            }
        }
        // fall back to the best sufficient-decrease point found, if any
        if (lo.alpha > 0 && lo.f < f0_) {
            out = std::move(lo);
            return true;
        }
        return false;
    }

    const Objective& f_;
    const std::vector<double>& x_;
    const std::vector<double>& p_;
    double f0_, d0_;
    const OptimizerConfig& cfg_;
    std::size_t& evals_;
};

OptResult start(const Objective& f, std::vector<double> x0, std::vector<double>& g) {
    OptResult r;
    g.assign(x0.size(), 0.0);
    const double f0 = f(x0, g);
    r.evaluations = 1;
    if (!std::isfinite(f0) || !all_finite(g))
        throw std::invalid_argument("minimize: objective is not finite at the starting point");
    r.losses.push_back(f0);
    r.trajectory.push_back(x0);
    r.x = std::move(x0);
    return r;
}

}  // namespace

OptResult bfgs_minimize(const Objective& f, std::vector<double> x0, const OptimizerConfig& cfg) {
    cfg.validate();
    std::vector<double> g;
    OptResult r = start(f, std::move(x0), g);
    const std::size_t n = r.x.size();
    std::vector<double> h(n * n, 0.0);
    auto reset = [&] {
        std::fill(h.begin(), h.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
    };
    reset();
    double fx = r.losses.back();
    std::vector<double> p(n), s(n), y(n), hy(n);
    bool first = true;
    for (;;) {
        const double gnorm = norm(g);
        if (gnorm == 0.0) {
            r.reason = Termination::stationary;
            break;
        }
        if (gnorm < cfg.tolerance) {
            r.reason = Termination::converged;
            break;
        }
        if (r.iterations >= cfg.max_iterations) {
            r.reason = Termination::max_iterations;
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0;
            for (std::size_t j = 0; j < n; ++j) acc += h[i * n + j] * g[j];
            p[i] = -acc;
        }
        double d0 = dot(g, p);
        if (!(d0 < 0)) {
            reset();
            for (std::size_t i = 0; i < n; ++i) p[i] = -g[i];
            d0 = -gnorm * gnorm;
        }
        const double alpha1 = first ? std::min(1.0, 1.01 / gnorm) : 1.0;
        LineSearch ls(f, r.x, p, fx, d0, cfg, r.evaluations);
        Probe acc;
        if (!ls.run(alpha1, acc) || !(acc.f < fx)) {
            r.reason = ls.saw_non_finite ? Termination::non_finite : Termination::line_search_failed;
            break;
        }
        first = false;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = acc.x[i] - r.x[i];
            y[i] = acc.g[i] - g[i];
        }
        const double ys = dot(y, s);
        if (ys > 0) {
            const double rho = 1.0 / ys;
            for (std::size_t i = 0; i < n; ++i) {
                double v = 0;
                for (std::size_t j = 0; j < n; ++j) v += h[i * n + j] * y[j];
                hy[i] = v;
            }
            const double yhy = dot(y, hy);
            // H += (1 + ρ yHy) ρ s sᵀ − ρ (Hy sᵀ + s yᵀH)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    h[i * n + j] += (1 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        } else {
            reset();
        }
        r.x = std::move(acc.x);
        g = std::move(acc.g);
        fx = acc.f;
        ++r.iterations;
        r.losses.push_back(fx);
        r.trajectory.push_back(r.x);
    }
    r.inverse_hessian = std::move(h);
    return r;
}

OptResult gd_minimize(const Objective& f, std::vector<double> x0, const OptimizerConfig& cfg) {
    cfg.validate();
    std::vector<double> g;
    OptResult r = start(f, std::move(x0), g);
    const double initial = r.losses.front();
    std::size_t rising = 0;
    std::vector<double> x(r.x);
    for (;;) {
        const double gnorm = norm(g);
        if (gnorm == 0.0) {
            r.reason = Termination::stationary;
            break;
        }
        if (gnorm < cfg.tolerance) {
            r.reason = Termination::converged;
            break;
        }
        if (r.iterations >= cfg.max_iterations) {
            r.reason = Termination::max_iterations;
            break;
        }
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= cfg.learning_rate * g[i];
        const double fx = f(x, g);
        ++r.evaluations;
        ++r.iterations;
        if (!std::isfinite(fx) || !all_finite(g)) {
            r.reason = Termination::non_finite;
            break;
        }
        rising = fx > r.losses.back() ? rising + 1 : 0;
        r.x = x;
        r.losses.push_back(fx);
        r.trajectory.push_back(x);
        if (fx > 1e6 * std::max(initial, 1e-300) || (rising >= 10 && fx > initial)) {
            r.reason = Termination::diverged;
            break;
        }
    }
    return r;
}

namespace {
std::vector<OptResult> run_batch(const BatchObjective& f, const std::vector<std::vector<double>>& x0,
                                 const OptimizerConfig& cfg, bool bfgs) {
    std::vector<OptResult> out(x0.size());
    parallel_for(x0.size(), [&](std::size_t i) {
        Objective fi = [&f, i](std::span<const double> x, std::span<double> g) { return f(i, x, g); };
        out[i] = bfgs ? bfgs_minimize(fi, x0[i], cfg) : gd_minimize(fi, x0[i], cfg);
    });
    return out;
}
}  // namespace

std::vector<OptResult> bfgs_minimize_batch(const BatchObjective& f, const std::vector<std::vector<double>>& x0,
                                           const OptimizerConfig& cfg) {
    return run_batch(f, x0, cfg, true);
}

std::vector<OptResult> gd_minimize_batch(const BatchObjective& f, const std::vector<std::vector<double>>& x0,
                                         const OptimizerConfig& cfg) {
    return run_batch(f, x0, cfg, false);
}

bool adam_step(std::vector<double>& x, AdamState& st, std::span<const double> grad, const OptimizerConfig& cfg) {
    if (grad.size() != x.size()) throw std::invalid_argument("adam_step: gradient length does not match parameters");
    if (!all_finite(grad)) {
        ++st.skipped;
        return false;
    }
    if (st.m.empty()) {
        st.m.assign(x.size(), 0.0);
        st.v.assign(x.size(), 0.0);
    }
    ++st.step;
    const double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < x.size(); ++i) {
        st.m[i] = cfg.beta1 * st.m[i] + (1 - cfg.beta1) * grad[i];
        st.v[i] = cfg.beta2 * st.v[i] + (1 - cfg.beta2) * grad[i] * grad[i];
        const double mh = st.m[i] / b1t, vh = st.v[i] / b2t;
        x[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
    }
    return true;
}

double clip_percentile(std::vector<std::vector<double>>& grads, double p) {
    if (grads.empty()) throw std::invalid_argument("clip_percentile: empty gradient list");
    if (!(p > 0 && p <= 100)) throw std::invalid_argument("clip_percentile: p must be in (0, 100]");
    std::vector<double> norms(grads.size());
    for (std::size_t i = 0; i < grads.size(); ++i) norms[i] = norm(grads[i]);
    std::vector<double> sorted(norms);
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
    const double threshold = sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (norms[i] > threshold) {
            const double factor = threshold / norms[i];
            for (double& v : grads[i]) v *= factor;
        }
    return threshold;
}

std::vector<double> majority_vote_reduce(const std::vector<std::vector<double>>& grads) {
    if (grads.empty()) return {};
    const std::size_t dim = grads.front().size();
    std::vector<double> out(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
        long votes = 0;
        for (const auto& g : grads) {
            if (g.size() != dim) throw std::invalid_argument("majority_vote_reduce: gradient dimensions differ");
            votes += (g[d] > 0) - (g[d] < 0);
        }
        out[d] = static_cast<double>((votes > 0) - (votes < 0));
    }
    return out;
}

}  // namespace jpo::opt
