#include <cmath>
#include <numeric>
#include <stdexcept>

#include "jpo/methods/methods.hpp"
#include "jpo/problems/evaluation.hpp"

namespace jpo::methods {

using prob::Family;

namespace {

constexpr std::uint64_t supervised_stream = 1;
constexpr std::uint64_t adjoint_stream = 2;

// Billiards shots around the default start, kept only when they hit ball 2.
prob::ProblemSet billiards_synthetic(std::size_t n, const prob::BilliardsConfig& cfg, std::uint64_t seed,
                                     bool colliding_only) {
    std::vector<std::vector<double>> cond(n), targets(n), truth(n);
    const CounterRng root(seed, streams::synthetic);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng = root.substream(i);
        for (;;) {
            const double by = rng.uniform();
            const double vx = rng.uniform(0.5, 1.5), vy = rng.uniform(-0.5, 0.5);
            ad::Tape tape;
            const auto out = prob::billiards_forward(tape.constant({vx, vy}, {2}), 1.0, by, cfg);
            if (colliding_only && !out.collided) continue;
            cond[i] = {1.0, by};
            targets[i] = {out.ball2_final[0], out.ball2_final[1]};
            truth[i] = {vx, vy};
            break;
        }
    }
    prob::FamilyConfig fc;
    fc.billiards = cfg;
    return prob::ProblemSet(Family::billiards, seed, fc, std::move(cond), std::move(targets), std::move(truth));
}

struct Dataset {
    std::vector<double> input;
    ad::Shape shape;  // full shape, shape[0] = sample count
    std::vector<double> target;
    std::size_t target_dim = 0;

    [[nodiscard]] std::size_t size() const { return shape.empty() ? 0 : shape[0]; }
    [[nodiscard]] std::size_t row() const {
        std::size_t w = 1;
        for (std::size_t k = 1; k < shape.size(); ++k) w *= shape[k];
        return w;
    }
};

std::vector<double> column_scale(const std::vector<double>& t, std::size_t d) {
    const std::size_t n = t.size() / d;
    std::vector<double> mean(d, 0.0), w(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += t[i * d + j] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) w[j] += std::pow(t[i * d + j] - mean[j], 2) / static_cast<double>(n);
    for (double& v : w) v = v > 0 ? 1.0 / v : 1.0;
    return w;
}

using Head = std::function<ad::Value(const ad::Value&)>;

// Minibatch Adam on the weighted squared error between head(net(input)) and target.
void fit(const nn::NetSpec& spec, nn::NetParams& params, const Dataset& data, const Head& head, std::size_t iterations,
         std::size_t batch, const opt::OptimizerConfig& adam_cfg, CounterRng& rng) {
    const std::size_t n = data.size(), w = data.row(), d = data.target_dim;
    const auto weights = column_scale(data.target, d);
    batch = std::min(batch, n);
    opt::AdamState adam;
    std::vector<double> in(batch * w), tg(batch * d);
    ad::Shape shape = data.shape;
    shape[0] = batch;
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t k = rng.below(n);
            std::copy_n(data.input.begin() + static_cast<std::ptrdiff_t>(k * w), w, in.begin() + static_cast<std::ptrdiff_t>(b * w));
            std::copy_n(data.target.begin() + static_cast<std::ptrdiff_t>(k * d), d, tg.begin() + static_cast<std::ptrdiff_t>(b * d));
        }
        ad::Tape tape;
        const ad::Value theta = tape.variable(params.theta, {params.theta.size()});
        const ad::Value pred = head(nn::net_forward(spec, params, theta, tape.constant(in, shape)));
        const ad::Value r = pred - tape.constant(tg, {batch, d});
        const ad::Value loss = ad::mean(ad::sum_last(r * r * tape.constant(weights, {d})));
        const auto g = tape.backward(loss).of(theta);
        opt::adam_step(params.theta, adam, g, adam_cfg);
    }
}

std::vector<double> stack_truth(const prob::ProblemSet& set) {
    std::vector<double> t;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& g = set.ground_truth(i, prob::evaluation_access());
        t.insert(t.end(), g.begin(), g.end());
    }
    return t;
}

std::vector<std::vector<double>> rows(std::span<const double> data, std::size_t d) {
    std::vector<std::vector<double>> out(data.size() / d);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].assign(data.begin() + static_cast<std::ptrdiff_t>(i * d),
                                                              data.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    return out;
}

}  // namespace

prob::ProblemSet synthetic_set(Family f, std::size_t n, const prob::FamilyConfig& config, std::uint64_t seed) {
    const std::uint64_t s = splitmix64(seed ^ streams::synthetic);
    if (f == Family::billiards) return billiards_synthetic(n, config.billiards, s, true);
    return prob::generate(f, n, s, config);
}

MethodResult supervised_train(const prob::ProblemSet& set, const nn::NetSpec& spec, const SupervisedConfig& config,
                              std::uint64_t seed) {
    spec.validate();
    config.adam.validate();
    const Family f = set.family();
    const std::size_t d = prob::solution_dim(f);
    if (spec.outputs != d) throw std::invalid_argument("supervised_train: network output does not match solution dimension");
    if (config.log_every == 0) throw std::invalid_argument("supervised_train: log_every must be >= 1");
    if (config.synthetic == 0 || config.batch == 0)
        throw std::invalid_argument("supervised_train: synthetic set and batch sizes must be positive");

    const auto synth = synthetic_set(f, config.synthetic, set.config(), seed);
    Dataset data;
    data.input = network_input(synth, data.shape);
    data.target = stack_truth(synth);
    data.target_dim = d;

    CounterRng rng = CounterRng(seed, streams::network).substream(static_cast<std::uint64_t>(MethodKind::supervised));
    CounterRng init_rng = rng.substream(0), batch_rng = rng.substream(1);
    nn::NetParams params = nn::net_init(spec, init_rng);
    {
        const std::size_t m = std::min<std::size_t>(256, data.size());
        ad::Shape s = data.shape;
        s[0] = m;
        nn::calibrate(spec, params, std::vector<double>(data.input.begin(), data.input.begin() + static_cast<std::ptrdiff_t>(m * data.row())), s);
    }
    const Head head = [&](const ad::Value& raw) { return solution_head(f, raw, set.config()); };

    ad::Shape target_shape;
    const auto target_input = network_input(set, target_shape);
    MethodResult r;
    r.method = MethodKind::supervised;
    r.family = f;
    r.seed = seed;
    r.learning_rate = config.adam.learning_rate;
    auto predict = [&](std::size_t it) {
        ad::Tape tape;
        const ad::Value theta = tape.constant(params.theta, {params.theta.size()});
        const auto x = head(nn::net_forward(spec, params, theta, tape.constant(target_input, target_shape)));
        const auto xs = rows(x.data(), d);
        r.log(it, xs, prob::evaluate_all(set, xs, false).loss);
    };
    predict(0);
    for (std::size_t done = 0; done < config.iterations;) {
        const std::size_t step = std::min(config.log_every, config.iterations - done);
        fit(spec, params, data, head, step, config.batch, config.adam, batch_rng);
        done += step;
        predict(done);
    }
    return r;
}

ad::Value boundary_loss(const ad::Value& xi, const std::vector<double>& lo, const std::vector<double>& hi,
                        double sharpness) {
    const std::size_t d = lo.size();
    if (hi.size() != d || xi.shape().empty() || xi.shape().back() != d)
        throw std::invalid_argument("boundary_loss: box and input dimensions differ");
    std::vector<double> width(d);
    for (std::size_t j = 0; j < d; ++j) {
        width[j] = hi[j] - lo[j];
        if (!(width[j] > 0)) throw std::invalid_argument("boundary_loss: empty training box");
    }
    ad::Tape& tape = *xi.tape();
    const ad::Value l = tape.constant(lo, {d}), h = tape.constant(hi, {d}), inv = tape.constant(width, {d});
    const ad::Value z = ad::maximum(xi - h, l - xi) / inv;
    return ad::sum_last(ad::softplus(z, sharpness));
}

MethodResult neural_adjoint_solve(const prob::ProblemSet& set, const AdjointConfig& config, std::uint64_t seed) {
    const Family f = set.family();
    if (f != Family::billiards && f != Family::arm)
        throw std::invalid_argument(std::string("neural adjoint supports billiards and arm only, not ") + prob::family_name(f));
    config.surrogate_adam.validate();
    config.input_adam.validate();
    if (config.log_every == 0) throw std::invalid_argument("neural_adjoint_solve: log_every must be >= 1");
    if (config.synthetic == 0 || config.batch == 0)
        throw std::invalid_argument("neural_adjoint_solve: synthetic set and batch sizes must be positive");
    const std::size_t d = prob::solution_dim(f);
    const std::size_t c = set.size() ? set.conditioning(0).size() : 0;
    const std::size_t out_dim = set.size() ? set.target(0).size() : 2;

    const std::uint64_t s = splitmix64(seed ^ streams::synthetic ^ adjoint_stream);
    const auto make_data = [&](std::size_t n, std::uint64_t sd) {
        const auto synth = f == Family::billiards ? billiards_synthetic(n, set.config().billiards, sd, false)
                                                  : prob::generate(f, n, sd, set.config());
        Dataset data;
        data.shape = {n, c + d};
        data.target_dim = out_dim;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& g = synth.conditioning(i);
            const auto& xi = synth.ground_truth(i, prob::evaluation_access());
            data.input.insert(data.input.end(), g.begin(), g.end());
            data.input.insert(data.input.end(), xi.begin(), xi.end());
            data.target.insert(data.target.end(), synth.target(i).begin(), synth.target(i).end());
        }
        return data;
    };
    const Dataset train = make_data(config.synthetic, s);
    const Dataset valid = make_data(512, splitmix64(s + 1));

    // the family network with inputs and outputs swapped
    nn::NetSpec sur = family_net(f);
    sur.inputs = c + d;
    sur.outputs = out_dim;
    if (!config.hidden.empty()) sur.hidden = config.hidden;
    CounterRng rng = CounterRng(seed, streams::network).substream(static_cast<std::uint64_t>(MethodKind::neural_adjoint));
    CounterRng init_rng = rng.substream(0), batch_rng = rng.substream(1);
    nn::NetParams params = nn::net_init(sur, init_rng);
    const Head identity = [](const ad::Value& v) { return v; };
    fit(sur, params, train, identity, config.surrogate_iterations, config.batch, config.surrogate_adam, batch_rng);

    MethodResult r;
    r.method = MethodKind::neural_adjoint;
    r.family = f;
    r.seed = seed;
    r.learning_rate = config.input_adam.learning_rate;
    {
        const auto pred = nn::net_eval(sur, params, valid.input, valid.shape);
        double mse = 0;
        for (std::size_t k = 0; k < pred.size(); ++k) mse += std::pow(pred[k] - valid.target[k], 2);
        mse /= static_cast<double>(valid.size());
        r.events.push_back("surrogate validation mse " + std::to_string(mse));
        if (mse > config.residual_warning) r.events.push_back("warning: surrogate fit residual above threshold");
    }

    // training box of the surrogate inputs
    std::vector<double> lo(d, INFINITY), hi(d, -INFINITY);
    for (std::size_t i = 0; i < train.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double v = train.input[i * (c + d) + c + j];
            lo[j] = std::min(lo[j], v);
            hi[j] = std::max(hi[j], v);
        }

    const std::size_t n = set.size();
    std::vector<double> cond, target, xi;
    for (std::size_t i = 0; i < n; ++i) {
        cond.insert(cond.end(), set.conditioning(i).begin(), set.conditioning(i).end());
        target.insert(target.end(), set.target(i).begin(), set.target(i).end());
        const auto x0 = prob::default_start(set);
        xi.insert(xi.end(), x0.begin(), x0.end());
    }
    opt::AdamState adam;
    auto log_now = [&](std::size_t it) {
        const auto xs = rows(xi, d);
        r.log(it, xs, prob::evaluate_all(set, xs, false).loss);
    };
    for (std::size_t it = 0; it < config.iterations; ++it) {
        if (it % config.log_every == 0) log_now(it);
        ad::Tape tape;
        const ad::Value x = tape.variable(xi, {n, d});
        const ad::Value in = c ? ad::concat({tape.constant(cond, {n, c}), x}) : x;
        const ad::Value res = nn::net_forward(sur, params, tape.constant(params.theta, {params.theta.size()}), in) -
                              tape.constant(target, {n, out_dim});
        const ad::Value loss = ad::sum(ad::sum_last(res * res) + boundary_loss(x, lo, hi, config.sharpness));
        const auto g = tape.backward(loss).of(x);
        opt::adam_step(xi, adam, g, config.input_adam);
    }
    log_now(config.iterations);
    return r;
}

}  // namespace jpo::methods
