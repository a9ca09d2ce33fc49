#include "jpo/problems/problem_set.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "jpo/autodiff/fft.hpp"
#include "jpo/parallel.hpp"
#include "jpo/problems/evaluation.hpp"

namespace jpo::prob {

using ad::Value;

const char* family_name(Family f) {
    switch (f) {
        case Family::wavepacket: return "wavepacket";
        case Family::billiards: return "billiards";
        case Family::ks: return "ks";
        case Family::arm: return "arm";
    }
    return "?";
}

Family parse_family(const std::string& s) {
    if (s == "wavepacket" || s == "wave") return Family::wavepacket;
    if (s == "billiards") return Family::billiards;
    if (s == "ks") return Family::ks;
    if (s == "arm") return Family::arm;
    throw std::invalid_argument("unknown family '" + s + "' (expected wavepacket, billiards, ks or arm)");
}

std::size_t solution_dim(Family f) {
    switch (f) {
        case Family::wavepacket: return 1;
        case Family::billiards: return 2;
        case Family::ks: return 2;
        case Family::arm: return 4;
    }
    return 0;
}

TruthAccess evaluation_access() { return TruthAccess{}; }

ProblemSet::ProblemSet(Family family, std::uint64_t seed, FamilyConfig config,
                       std::vector<std::vector<double>> conditioning, std::vector<std::vector<double>> targets,
                       std::vector<std::vector<double>> truth)
    : family_(family),
      seed_(seed),
      config_(std::move(config)),
      conditioning_(std::move(conditioning)),
      targets_(std::move(targets)),
      truth_(std::move(truth)) {
    if (conditioning_.size() != targets_.size() || (!truth_.empty() && truth_.size() != targets_.size()))
        throw std::invalid_argument("ProblemSet: conditioning, target and truth lists differ in length");
}

const std::vector<double>& ProblemSet::ground_truth(std::size_t i, TruthAccess) const {
    if (truth_.empty()) throw std::logic_error("ProblemSet: ground truth has been removed");
    return truth_.at(i);
}

ProblemSet ProblemSet::subset(std::span<const std::size_t> indices) const {
    std::vector<std::vector<double>> c, t, g;
    for (auto i : indices) {
        c.push_back(conditioning_.at(i));
        t.push_back(targets_.at(i));
        if (!truth_.empty()) g.push_back(truth_.at(i));
    }
    return ProblemSet(family_, seed_, config_, std::move(c), std::move(t), std::move(g));
}

namespace {

std::vector<double> config_vector(Family f, const FamilyConfig& c) {
    switch (f) {
        case Family::wavepacket: {
            const auto& w = c.wavepacket;
            return {static_cast<double>(w.samples), w.envelope, w.carrier, w.t0_min, w.t0_max, w.noise};
        }
        case Family::billiards: {
            const auto& b = c.billiards;
            return {b.radius, b.elasticity, b.friction, b.cue_x, b.cue_y, b.target_x, b.target_y};
        }
        case Family::ks: {
            const auto& k = c.ks;
            const auto& p = c.ks_prior;
            return {static_cast<double>(k.resolution), k.length, k.dt, static_cast<double>(k.steps), k.guard,
                    p.alpha_lo, p.alpha_hi, p.beta_lo, p.beta_hi};
        }
        case Family::arm: {
            const auto& a = c.arm;
            return {a.l1, a.l2, a.l3, a.sigma_height, a.sigma_angle};
        }
    }
    return {};
}

FamilyConfig config_from_vector(Family f, const std::vector<double>& v) {
    FamilyConfig c;
    auto need = [&](std::size_t n) {
        if (v.size() != n) throw std::runtime_error("container: family config has wrong length");
    };
    switch (f) {
        case Family::wavepacket:
            need(6);
            c.wavepacket = {static_cast<std::size_t>(v[0]), v[1], v[2], v[3], v[4], v[5]};
            break;
        case Family::billiards:
            need(7);
            c.billiards = {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
            break;
        case Family::ks:
            need(9);
            c.ks = {static_cast<std::size_t>(v[0]), v[1], v[2], static_cast<std::size_t>(v[3]), v[4]};
            c.ks_prior = {v[5], v[6], v[7], v[8]};
            break;
        case Family::arm:
            need(5);
            c.arm = {v[0], v[1], v[2], v[3], v[4]};
            break;
    }
    return c;
}

std::uint64_t hash_rows(std::uint64_t h, const std::vector<std::vector<double>>& rows) {
    for (const auto& r : rows) {
        h = splitmix64(h ^ r.size());
        for (double v : r) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
    }
    return h;
}

}  // namespace

Container ProblemSet::to_container() const {
    Container c;
    c.kind = PayloadKind::problem_set;
    c.family = static_cast<std::uint32_t>(family_);
    c.n = size();
    c.seed = seed_;
    const auto cfg = config_vector(family_, config_);
    c.add("config", {cfg.size()}, cfg);
    c.arrays.push_back(pack_rows("conditioning", conditioning_));
    c.arrays.push_back(pack_rows("targets", targets_));
    if (!truth_.empty()) c.arrays.push_back(pack_rows("truth", truth_));
    c.hash = hash_rows(hash_rows(seed_, conditioning_), targets_);
    return c;
}

ProblemSet ProblemSet::from_container(const Container& c) {
    if (c.kind != PayloadKind::problem_set) throw std::runtime_error("container does not hold a problem set");
    const auto family = static_cast<Family>(c.family);
    (void)family_name(family);
    auto cond = unpack_rows(c.get("conditioning"));
    auto targets = unpack_rows(c.get("targets"));
    std::vector<std::vector<double>> truth;
    if (c.has("truth")) truth = unpack_rows(c.get("truth"));
    if (cond.size() != c.n || targets.size() != c.n) throw std::runtime_error("container: example count mismatch");
    if (hash_rows(hash_rows(c.seed, cond), targets) != c.hash) throw std::runtime_error("container: hash mismatch");
    return ProblemSet(family, c.seed, config_from_vector(family, c.get("config").data), std::move(cond),
                      std::move(targets), std::move(truth));
}

// ---- generators ----------------------------------------------------------

namespace {
CounterRng example_rng(Family f, std::uint64_t seed, std::size_t i) {
    return CounterRng(seed, streams::problems).substream(static_cast<std::uint64_t>(f)).substream(i);
}
}  // namespace

ProblemSet wavepacket_generate(std::size_t n, std::uint64_t seed, const WavepacketConfig& cfg) {
    std::vector<std::vector<double>> cond(n), targets(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng = example_rng(Family::wavepacket, seed, i);
        const double t0 = rng.uniform(cfg.t0_min, cfg.t0_max);
        auto y = wavepacket_signal(t0, cfg);
        for (double& v : y) v += cfg.noise * rng.normal();
        targets[i] = std::move(y);
        truth[i] = {t0};
    }
    FamilyConfig fc;
    fc.wavepacket = cfg;
    return ProblemSet(Family::wavepacket, seed, fc, std::move(cond), std::move(targets), std::move(truth));
}

ProblemSet billiards_generate(std::size_t n, std::uint64_t seed, const BilliardsConfig& cfg) {
    std::vector<std::vector<double>> cond(n), targets(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng = example_rng(Family::billiards, seed, i);
        const double by = rng.uniform();
        cond[i] = {1.0, by};
        targets[i] = {cfg.target_x, cfg.target_y};
        truth[i] = billiards_exact_velocity(1.0, by, cfg);
    }
    FamilyConfig fc;
    fc.billiards = cfg;
    return ProblemSet(Family::billiards, seed, fc, std::move(cond), std::move(targets), std::move(truth));
}

std::vector<double> ks_initial_state(CounterRng& rng, const KsConfig& cfg) {
    const std::size_t n = cfg.resolution;
    const double base = 2.0 * std::numbers::pi / cfg.domain();
    const double k0 = 0.5;
    std::vector<double> spec(n, 0.0);
    for (std::size_t m = 1; m <= n / 2; ++m) {
        const double k = base * static_cast<double>(m);
        const double env = std::exp(-k * k / (2.0 * k0 * k0));
        spec[m] = env * rng.normal();
        if (m < n / 2) spec[n / 2 + m] = env * rng.normal();
    }
    std::vector<double> u(n);
    ad::fft::irfft_packed(spec, u);
    double rms = 0;
    for (double v : u) rms += v * v;
    rms = std::sqrt(rms / static_cast<double>(n));
    for (double& v : u) v /= rms;
    return u;
}

ProblemSet ks_generate(std::size_t n, std::uint64_t seed, const KsConfig& cfg, const KsPrior& prior) {
    std::vector<std::vector<double>> cond(n), targets(n), truth(n);
    parallel_for(n, [&](std::size_t i) {
        CounterRng base = example_rng(Family::ks, seed, i);
        for (std::uint64_t attempt = 0;; ++attempt) {
            CounterRng rng = base.substream(attempt);
            auto u0 = ks_initial_state(rng, cfg);
            const double alpha = rng.uniform(prior.alpha_lo, prior.alpha_hi);
            const double beta = rng.uniform(prior.beta_lo, prior.beta_hi);
            ad::Tape tape;
            KsStatus status;
            const Value u = ks_forward(tape.constant({alpha, beta}, {1, 2}), tape.constant(u0, {1, cfg.resolution}),
                                       cfg, &status);
            if (status.diverged[0]) continue;
            cond[i] = std::move(u0);
            targets[i].assign(u.data().begin(), u.data().end());
            truth[i] = {alpha, beta};
            break;
        }
    });
    FamilyConfig fc;
    fc.ks = cfg;
    fc.ks_prior = prior;
    return ProblemSet(Family::ks, seed, fc, std::move(cond), std::move(targets), std::move(truth));
}

ProblemSet arm_generate(std::size_t n, std::uint64_t seed, const ArmConfig& cfg) {
    std::vector<std::vector<double>> cond(n), targets(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng = example_rng(Family::arm, seed, i);
        std::vector<double> x{cfg.sigma_height * rng.normal(), cfg.sigma_angle * rng.normal(),
                              cfg.sigma_angle * rng.normal(), cfg.sigma_angle * rng.normal()};
        ad::Tape tape;
        const Value end = arm_forward(tape.constant(x, {1, 4}), cfg);
        targets[i] = {end[0], end[1]};
        truth[i] = std::move(x);
    }
    FamilyConfig fc;
    fc.arm = cfg;
    return ProblemSet(Family::arm, seed, fc, std::move(cond), std::move(targets), std::move(truth));
}

ProblemSet generate(Family family, std::size_t n, std::uint64_t seed, const FamilyConfig& config) {
    switch (family) {
        case Family::wavepacket: return wavepacket_generate(n, seed, config.wavepacket);
        case Family::billiards: return billiards_generate(n, seed, config.billiards);
        case Family::ks: return ks_generate(n, seed, config.ks, config.ks_prior);
        case Family::arm: return arm_generate(n, seed, config.arm);
    }
    throw std::invalid_argument("generate: unknown family");
}

std::vector<double> default_start(const ProblemSet& set) {
    switch (set.family()) {
        case Family::wavepacket: return {128.0};
        case Family::billiards: return {1.0, 0.0};
        case Family::ks: return set.config().ks_prior.mean();
        case Family::arm: return {0.0, 0.0, 0.0, 0.0};
    }
    return {};
}

// ---- losses ---------------------------------------------------------------

namespace {
Value stack_rows(ad::Tape& tape, const ProblemSet& set, std::span<const std::size_t> examples, bool targets) {
    const auto& first = targets ? set.target(examples[0]) : set.conditioning(examples[0]);
    std::vector<double> data;
    data.reserve(examples.size() * first.size());
    for (auto i : examples) {
        const auto& row = targets ? set.target(i) : set.conditioning(i);
        data.insert(data.end(), row.begin(), row.end());
    }
    return tape.constant(std::move(data), {examples.size(), first.size()});
}
}  // namespace

Value loss_on_tape(const ProblemSet& set, std::span<const std::size_t> examples, const Value& x,
                   std::vector<bool>* failed) {
    ad::Tape& tape = *x.tape();
    const std::size_t b = examples.size();
    const std::size_t dim = solution_dim(set.family());
    if (x.shape() != ad::Shape{b, dim})
        throw std::invalid_argument(std::string("loss_on_tape: ") + family_name(set.family()) +
                                    " solutions must have shape (" + std::to_string(b) + ", " + std::to_string(dim) +
                                    "), got " + ad::shape_str(x.shape()));
    if (failed) failed->assign(b, false);
    const auto& cfg = set.config();
    switch (set.family()) {
        case Family::wavepacket: {
            const Value r = wavepacket_forward(x, cfg.wavepacket) - stack_rows(tape, set, examples, true);
            return ad::mean_last(r * r);
        }
        case Family::arm: {
            const Value r = arm_forward(x, cfg.arm) - stack_rows(tape, set, examples, true);
            return ad::sum_last(r * r);
        }
        case Family::ks: {
            KsStatus status;
            const Value u = ks_forward(x, stack_rows(tape, set, examples, false), cfg.ks, &status);
            if (failed) *failed = status.diverged;
            const Value r = u - stack_rows(tape, set, examples, true);
            return ad::mean_last(r * r);
        }
        case Family::billiards: {
            const Value flat = ad::reshape(x, {2 * b});
            std::vector<Value> parts;
            parts.reserve(b);
            for (std::size_t k = 0; k < b; ++k) {
                const auto& c = set.conditioning(examples[k]);
                const auto& t = set.target(examples[k]);
                const auto out = billiards_forward(ad::slice(flat, 2 * k, 2 * k + 2), c[0], c[1], cfg.billiards);
                const Value r = out.ball2_final - tape.constant(t, {2});
                parts.push_back(ad::reshape(ad::sum_squares(r), {1}));
            }
            return ad::concat(parts);
        }
    }
    throw std::invalid_argument("loss_on_tape: unknown family");
}

BatchEval evaluate(const ProblemSet& set, std::span<const std::size_t> examples,
                   const std::vector<std::vector<double>>& xs, bool with_grad) {
    if (xs.size() != examples.size()) throw std::invalid_argument("evaluate: one candidate per example required");
    const std::size_t dim = solution_dim(set.family());
    const std::size_t n = examples.size();
    BatchEval out;
    out.loss.assign(n, 0.0);
    out.failed.assign(n, false);
    if (with_grad) out.grad.assign(n, std::vector<double>(dim, 0.0));
    const std::size_t chunk = set.family() == Family::ks ? 16 : (set.family() == Family::billiards ? 32 : 256);
    const std::size_t chunks = (n + chunk - 1) / chunk;
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t lo = c * chunk, hi = std::min(n, lo + chunk);
        const std::size_t b = hi - lo;
        std::vector<double> flat;
        flat.reserve(b * dim);
        for (std::size_t k = lo; k < hi; ++k) {
            if (xs[k].size() != dim) throw std::invalid_argument("evaluate: candidate has the wrong dimension");
            flat.insert(flat.end(), xs[k].begin(), xs[k].end());
        }
        ad::Tape tape;
        const Value x = with_grad ? tape.variable(flat, {b, dim}) : tape.constant(flat, {b, dim});
        std::vector<bool> failed;
        const Value losses = loss_on_tape(set, examples.subspan(lo, b), x, &failed);
        std::vector<Value> good;
        for (std::size_t k = 0; k < b; ++k) {
            const double l = losses[k];
            if (failed[k] || !std::isfinite(l)) {
                out.failed[lo + k] = true;
                out.loss[lo + k] = std::numeric_limits<double>::infinity();
            } else {
                out.loss[lo + k] = l;
                if (with_grad) good.push_back(ad::slice(losses, k, k + 1));
            }
        }
        if (!with_grad || good.empty()) return;
        const Value total = good.size() == b ? ad::sum(losses) : ad::sum(ad::concat(good));
        const auto g = tape.backward(total).of(x);
        for (std::size_t k = 0; k < b; ++k)
            if (!out.failed[lo + k]) out.grad[lo + k].assign(g.begin() + static_cast<std::ptrdiff_t>(k * dim),
                                                            g.begin() + static_cast<std::ptrdiff_t>((k + 1) * dim));
    });
    return out;
}

BatchEval evaluate_all(const ProblemSet& set, const std::vector<std::vector<double>>& xs, bool with_grad) {
    std::vector<std::size_t> idx(set.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return evaluate(set, idx, xs, with_grad);
}

double example_loss(const ProblemSet& set, std::size_t i, std::span<const double> x, std::span<double> grad) {
    const std::size_t idx[1] = {i};
    std::vector<std::vector<double>> xs{{x.begin(), x.end()}};
    const auto r = evaluate(set, idx, xs, !grad.empty());
    if (!grad.empty()) {
        if (r.failed[0])
            std::fill(grad.begin(), grad.end(), 0.0);
        else
            std::copy(r.grad[0].begin(), r.grad[0].end(), grad.begin());
    }
    return r.loss[0];
}

}  // namespace jpo::prob
