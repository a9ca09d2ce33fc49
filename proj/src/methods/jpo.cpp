#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "jpo/methods/methods.hpp"

namespace jpo::methods {

using prob::Family;

nn::NetSpec family_net(Family f) {
    switch (f) {
        case Family::wavepacket: return nn::wavepacket_net();
        case Family::billiards: return nn::billiards_net();
        case Family::ks: return nn::ks_net();
        case Family::arm: return nn::arm_net();
    }
    throw std::invalid_argument("family_net: unknown family");
}

std::vector<double> network_input(const prob::ProblemSet& set, ad::Shape& shape) {
    const std::size_t n = set.size();
    std::vector<double> in;
    switch (set.family()) {
        case Family::wavepacket: {
            const std::size_t len = n ? set.target(0).size() : 0;
            shape = {n, 1, len};
            for (std::size_t i = 0; i < n; ++i) in.insert(in.end(), set.target(i).begin(), set.target(i).end());
            break;
        }
        case Family::ks: {
            const std::size_t len = n ? set.target(0).size() : 0;
            shape = {n, 2, len};
            for (std::size_t i = 0; i < n; ++i) {
                in.insert(in.end(), set.conditioning(i).begin(), set.conditioning(i).end());
                in.insert(in.end(), set.target(i).begin(), set.target(i).end());
            }
            break;
        }
        case Family::billiards:
        case Family::arm: {
            const std::size_t w = n ? set.conditioning(0).size() + set.target(0).size() : 0;
            shape = {n, w};
            for (std::size_t i = 0; i < n; ++i) {
                in.insert(in.end(), set.conditioning(i).begin(), set.conditioning(i).end());
                in.insert(in.end(), set.target(i).begin(), set.target(i).end());
            }
            break;
        }
    }
    return in;
}

ad::Value solution_head(Family f, const ad::Value& raw, const prob::FamilyConfig& config) {
    const std::size_t d = prob::solution_dim(f);
    if (raw.shape().size() != 2 || raw.shape()[1] != d)
        throw std::invalid_argument(std::string("solution_head: ") + prob::family_name(f) + " expects network output (B, " +
                                    std::to_string(d) + "), got " + ad::shape_str(raw.shape()));
    ad::Tape& tape = *raw.tape();
    switch (f) {
        case Family::wavepacket: {
            // scaled tanh keeps t0 inside [1, samples]
            const double lo = 1.0, hi = static_cast<double>(config.wavepacket.samples);
            return ad::tanh(raw) * (0.5 * (hi - lo)) + 0.5 * (hi + lo);
        }
        case Family::billiards: return raw + tape.constant({1.0, 0.0}, {2});
        case Family::ks:
            return raw * tape.constant(config.ks_prior.half_width(), {2}) + tape.constant(config.ks_prior.mean(), {2});
        case Family::arm: return raw;
    }
    throw std::invalid_argument("solution_head: unknown family");
}

namespace {

std::vector<std::vector<double>> rows_of(const ad::Value& x) {
    const std::size_t b = x.shape()[0], d = x.shape()[1];
    std::vector<std::vector<double>> out(b);
    const auto data = x.data();
    for (std::size_t i = 0; i < b; ++i) out[i].assign(data.begin() + static_cast<std::ptrdiff_t>(i * d),
                                                      data.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    return out;
}

double finite_total(const std::vector<double>& losses) {
    double s = 0;
    for (double l : losses)
        if (std::isfinite(l)) s += l;
    return s;
}

}  // namespace

MethodResult jpo_train(const prob::ProblemSet& set, const nn::NetSpec& spec, const JpoConfig& config,
                       std::uint64_t seed) {
    spec.validate();
    config.adam.validate();
    if (set.size() == 0) throw std::invalid_argument("jpo_train: empty problem set");
    if (spec.outputs != prob::solution_dim(set.family()))
        throw std::invalid_argument("jpo_train: network outputs " + std::to_string(spec.outputs) + " values but " +
                                    prob::family_name(set.family()) + " solutions have dimension " +
                                    std::to_string(prob::solution_dim(set.family())));
    if (config.log_every == 0) throw std::invalid_argument("jpo_train: log_every must be >= 1");

    CounterRng rng = CounterRng(seed, streams::network).substream(static_cast<std::uint64_t>(MethodKind::jpo));
    nn::NetParams params = nn::net_init(spec, rng);
    ad::Shape shape;
    const auto input = network_input(set, shape);
    nn::calibrate(spec, params, input, shape);

    MethodResult r;
    r.method = MethodKind::jpo;
    r.family = set.family();
    r.seed = seed;
    r.learning_rate = config.adam.learning_rate;

    std::vector<std::size_t> all(set.size());
    std::iota(all.begin(), all.end(), 0);
    opt::AdamState adam;
    std::vector<double> totals;

    for (std::size_t it = 0;; ++it) {
        const bool last = it == config.iterations;
        ad::Tape tape;
        const ad::Value theta = tape.variable(params.theta, {params.theta.size()});
        const ad::Value x = solution_head(set.family(), nn::net_forward(spec, params, theta, tape.constant(input, shape)),
                                          set.config());
        const auto xs = rows_of(x);
        auto ev = prob::evaluate(set, all, xs, !last);
        for (std::size_t i = 0; i < ev.failed.size(); ++i)
            if (ev.failed[i])
                r.events.push_back("iteration " + std::to_string(it) + ": example " + std::to_string(i) +
                                   " diverged, loss masked");

        bool plateau = false;
        if (config.stop_on_plateau) {
            totals.push_back(finite_total(ev.loss));
            const std::size_t w = config.plateau_window;
            if (w > 0 && totals.size() >= 2 * w) {
                const auto end = totals.end();
                const double prev = std::accumulate(end - 2 * static_cast<std::ptrdiff_t>(w), end - static_cast<std::ptrdiff_t>(w), 0.0) / w;
                const double cur = std::accumulate(end - static_cast<std::ptrdiff_t>(w), end, 0.0) / w;
                plateau = prev - cur < config.plateau_tolerance * std::abs(prev);
            }
        }
        if (last || plateau || it % config.log_every == 0) r.log(it, xs, ev.loss);
        if (last || plateau) {
            if (plateau) r.events.push_back("iteration " + std::to_string(it) + ": loss plateau, training stopped");
            break;
        }

        auto grads = std::move(ev.grad);
        if (config.clip_percentile > 0) opt::clip_percentile(grads, config.clip_percentile);
        const std::size_t d = prob::solution_dim(set.family());
        std::vector<double> flat;
        flat.reserve(grads.size() * d);
        for (const auto& g : grads) flat.insert(flat.end(), g.begin(), g.end());
        // Σ_i (∂L_i/∂x_i) · x_i(θ) has the θ-gradient of Σ_i L_i
        const ad::Value surrogate = ad::sum(x * tape.constant(std::move(flat), x.shape()));
        const auto g = tape.backward(surrogate).of(theta);
        bool stepped = true;
        if (config.adam.kind == opt::Kind::gd) {
            stepped = std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); });
            if (stepped)
                for (std::size_t k = 0; k < g.size(); ++k) params.theta[k] -= config.adam.learning_rate * g[k];
        } else {
            stepped = opt::adam_step(params.theta, adam, g, config.adam);
        }
        if (!stepped)
            r.events.push_back("iteration " + std::to_string(it) + ": non-finite parameter gradient, step skipped");
    }
    return r;
}

double select_learning_rate(const prob::ProblemSet& set, const nn::NetSpec& spec, const JpoConfig& config,
                            std::uint64_t seed, double start, std::size_t attempts, std::size_t probe_iterations) {
    if (attempts == 0) throw std::invalid_argument("select_learning_rate: need at least one attempt");
    double lr = start;
    for (std::size_t a = 0; a < attempts; ++a, lr /= 10.0) {
        JpoConfig probe = config;
        probe.iterations = probe_iterations;
        probe.log_every = probe_iterations;
        probe.stop_on_plateau = false;
        probe.adam.learning_rate = lr;
        const auto r = jpo_train(set, spec, probe, seed);
        double before = 0, after = 0;
        for (double l : r.history_loss.front()) before += l;
        for (double l : r.history_loss.back()) after += l;
        if (std::isfinite(after) && after < before) return lr;
    }
    return lr * 10.0;
}

}  // namespace jpo::methods
