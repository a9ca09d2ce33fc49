#include "jpo/problems/simulators.hpp"

#include <cmath>
#include <numbers>

#include "jpo/autodiff/fft.hpp"

namespace jpo::prob {

using ad::Shape;
using ad::Value;

// ---- wave packet --------------------------------------------------------

Value wavepacket_forward(const Value& t0, const WavepacketConfig& cfg) {
    if (t0.shape().size() != 2 || t0.shape()[1] != 1)
        throw std::invalid_argument("wavepacket_forward: t0 must have shape (B, 1), got " + ad::shape_str(t0.shape()));
    std::vector<double> t(cfg.samples);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i + 1);
    ad::Tape& tape = *t0.tape();
    const Value d = tape.constant(t, {cfg.samples}) - t0;
    const Value env = ad::exp(d * d * (-1.0 / (2.0 * cfg.envelope * cfg.envelope)));
    return env * ad::sin(d * cfg.carrier);
}

std::vector<double> wavepacket_signal(double t0, const WavepacketConfig& cfg) {
    std::vector<double> w(cfg.samples);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double d = static_cast<double>(i + 1) - t0;
        w[i] = std::exp(-d * d / (2.0 * cfg.envelope * cfg.envelope)) * std::sin(cfg.carrier * d);
    }
    return w;
}

// ---- billiards ----------------------------------------------------------

BilliardsOutcome billiards_forward(const Value& v0, double bx, double by, const BilliardsConfig& cfg) {
    if (v0.shape() != Shape{2})
        throw std::invalid_argument("billiards_forward: v0 must have shape (2), got " + ad::shape_str(v0.shape()));
    ad::Tape& tape = *v0.tape();
    const double mu = cfg.friction;
    const double vx = v0[0], vy = v0[1];
    const double qx = cfg.cue_x - bx, qy = cfg.cue_y - by;
    const double a = vx * vx + vy * vy;
    const double b = qx * vx + qy * vy;
    const double c = qx * qx + qy * qy - 4.0 * cfg.radius * cfg.radius;
    const double disc = b * b - a * c;

    BilliardsOutcome out;
    bool hit = a > 0 && disc > 0;
    double s_hit = 0;
    if (hit) {
        s_hit = (-b - std::sqrt(disc)) / a;
        hit = s_hit >= 0 && s_hit < 1.0 / mu;
    }
    if (!hit) {
        // cue rolls v0/μ and stops; ball 2 never moves
        out.cue_final = tape.constant({cfg.cue_x + vx / mu, cfg.cue_y + vy / mu}, {2});
        out.ball2_final = tape.constant({bx, by}, {2});
        return out;
    }
    out.collided = true;
    out.contact_s = s_hit;

    const Value q = tape.constant({qx, qy}, {2});
    const Value bq = ad::sum(q * v0);
    const Value aa = ad::sum(v0 * v0);
    const Value root = ad::sqrt(bq * bq - aa * c);
    const Value s = (ad::neg(bq) - root) / aa;
    // unit normal from cue to ball 2 at contact
    const Value rel = q + v0 * s;
    const Value m = rel * (-1.0 / (2.0 * cfg.radius));
    const Value vc = v0 * (1.0 - s * mu);
    const Value vn = ad::sum(vc * m);
    const Value kick = m * (vn * (0.5 * (1.0 + cfg.elasticity)));
    const Value ball2 = tape.constant({bx, by}, {2});
    out.ball2_final = ball2 + kick * (1.0 / mu);
    const Value cue_contact = tape.constant({cfg.cue_x, cfg.cue_y}, {2}) + v0 * s;
    out.cue_final = cue_contact + (vc - kick) * (1.0 / mu);
    return out;
}

std::vector<double> billiards_exact_velocity(double bx, double by, const BilliardsConfig& cfg) {
    const double mu = cfg.friction;
    const double tx = cfg.target_x - bx, ty = cfg.target_y - by;
    const double dist = std::hypot(tx, ty);
    const double dx = tx / dist, dy = ty / dist;
    // cue centre at contact sits 2r behind ball 2 along the travel direction
    const double cx = bx - 2 * cfg.radius * dx, cy = by - 2 * cfg.radius * dy;
    const double lx = cx - cfg.cue_x, ly = cy - cfg.cue_y;
    const double len = std::hypot(lx, ly);
    const double ex = lx / len, ey = ly / len;
    const double cosang = ex * dx + ey * dy;
    // ball 2 needs speed μ·dist; it receives (1+e)/2 of the normal cue speed
    const double vc = 2.0 * mu * dist / ((1.0 + cfg.elasticity) * cosang);
    const double speed = vc + mu * len;
    return {speed * ex, speed * ey};
}

// ---- Kuramoto-Sivashinsky -----------------------------------------------

double KsConfig::domain() const { return length > 0 ? length : 32.0 * std::numbers::pi; }

SimulationDiverged::SimulationDiverged(std::size_t ex, std::size_t st)
    : std::runtime_error("ks_forward: state exceeded the overflow guard for example " + std::to_string(ex) +
                         " at step " + std::to_string(st)),
      example(ex),
      step(st) {}

std::vector<double> ks_forcing(const KsConfig& cfg) {
    const std::size_t n = cfg.resolution;
    std::vector<double> g(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = cfg.domain() * static_cast<double>(j) / static_cast<double>(n);
        g[j] = 0.1 * std::cos(x) - 0.01 * std::cos(x / 16.0) * (1.0 - 2.0 * std::sin(x / 16.0));
    }
    return g;
}

namespace {

struct KsConstants {
    std::vector<double> factor;  // packed exp(L dt)
    std::vector<double> wavenumber;  // k_m for m = 1 .. n/2-1
    std::vector<double> forcing_hat;
};

KsConstants ks_constants(const KsConfig& cfg) {
    const std::size_t n = cfg.resolution;
    const double base = 2.0 * std::numbers::pi / cfg.domain();
    KsConstants k;
    k.factor.assign(n, 0.0);
    for (std::size_t m = 0; m <= n / 2; ++m) {
        const double km = base * static_cast<double>(m);
        const double e = std::exp((km * km - km * km * km * km) * cfg.dt);
        k.factor[m] = e;
        if (m > 0 && m < n / 2) k.factor[n / 2 + m] = e;
    }
    for (std::size_t m = 1; m < n / 2; ++m) k.wavenumber.push_back(base * static_cast<double>(m));
    const auto g = ks_forcing(cfg);
    k.forcing_hat.resize(n);
    ad::fft::rfft_packed(g, k.forcing_hat);
    return k;
}

}  // namespace

Value ks_forward(const Value& params, const Value& u0, const KsConfig& cfg, KsStatus* status) {
    const std::size_t n = cfg.resolution;
    if (u0.shape().size() != 2 || u0.shape()[1] != n)
        throw std::invalid_argument("ks_forward: u0 must have shape (B, " + std::to_string(n) + "), got " +
                                    ad::shape_str(u0.shape()));
    const std::size_t batch = u0.shape()[0];
    if (params.shape() != Shape{batch, 2})
        throw std::invalid_argument("ks_forward: params must have shape (B, 2), got " + ad::shape_str(params.shape()));
    ad::Tape& tape = *u0.tape();
    const KsConstants kc = ks_constants(cfg);
    const std::size_t half = n / 2;

    const Value e = tape.constant(kc.factor, {n});
    const Value kpos = tape.constant(kc.wavenumber, {half - 1});
    const Value kneg = tape.constant(std::vector<double>(kc.wavenumber.begin(), kc.wavenumber.end()), {half - 1}) * -1.0;
    const Value zero = tape.constant(std::vector<double>(batch, 0.0), {batch, 1});
    const Value alpha = ad::slice(params, 0, 1);
    const Value half_beta = ad::slice(params, 1, 2) * 0.5;
    const Value forcing = alpha * tape.constant(kc.forcing_hat, {n});

    // spectral derivative in the packed layout; the Nyquist mode is dropped
    auto ddx = [&](const Value& s) {
        const Value re = ad::slice(s, 1, half);
        const Value im = ad::slice(s, half + 1, n);
        return ad::concat({zero, im * kneg, zero, re * kpos});
    };
    auto nonlinear = [&](const Value& u) { return forcing - half_beta * ddx(ad::rfft(u * u)); };

    if (status) {
        status->diverged.assign(batch, false);
        status->step.assign(batch, 0);
    }
    auto check = [&](const Value& u, std::size_t step) {
        const auto d = u.data();
        for (std::size_t b = 0; b < batch; ++b) {
            if (status && status->diverged[b]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                const double v = d[b * n + j];
                if (!(std::abs(v) <= cfg.guard)) {
                    if (!status) throw SimulationDiverged(b, step);
                    status->diverged[b] = true;
                    status->step[b] = step;
                    break;
                }
            }
        }
    };

    Value uh = ad::rfft(u0);
    Value u = u0;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        check(u, step);
        const Value n1 = nonlinear(u);
        const Value a = e * (uh + n1 * cfg.dt);
        const Value n2 = nonlinear(ad::irfft(a));
        uh = e * uh + (e * n1 + n2) * (0.5 * cfg.dt);
        u = ad::irfft(uh);
    }
    check(u, cfg.steps);
    return u;
}

// ---- robotic arm --------------------------------------------------------

Value arm_forward(const Value& x, const ArmConfig& cfg) {
    if (x.shape().size() != 2 || x.shape()[1] != 4)
        throw std::invalid_argument("arm_forward: x must have shape (B, 4), got " + ad::shape_str(x.shape()));
    const Value h = ad::slice(x, 0, 1);
    const Value p1 = ad::slice(x, 1, 2);
    const Value p2 = p1 + ad::slice(x, 2, 3);
    const Value p3 = p2 + ad::slice(x, 3, 4);
    const Value ex = ad::cos(p1) * cfg.l1 + ad::cos(p2) * cfg.l2 + ad::cos(p3) * cfg.l3;
    const Value ey = h + ad::sin(p1) * cfg.l1 + ad::sin(p2) * cfg.l2 + ad::sin(p3) * cfg.l3;
    return ad::concat({ex, ey});
}

}  // namespace jpo::prob
