#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numeric>

#include "jpo/autodiff/ops.hpp"
#include "jpo/methods/methods.hpp"
#include "jpo/parallel.hpp"

using namespace jpo;
using namespace jpo::methods;
using Catch::Approx;

namespace {

JpoConfig short_jpo(std::size_t iterations, double lr = 1e-3) {
    JpoConfig c;
    c.iterations = iterations;
    c.adam.learning_rate = lr;
    return c;
}

}  // namespace

TEST_CASE("method names round trip", "[methods]") {
    for (auto m : {MethodKind::jpo, MethodKind::supervised, MethodKind::neural_adjoint, MethodKind::bfgs, MethodKind::gd})
        CHECK(parse_method(method_name(m)) == m);
    CHECK_THROWS(parse_method("lbfgs"));
}

TEST_CASE("best estimate is the argmin over the logged history", "[methods]") {
    const auto set = prob::generate(prob::Family::arm, 6, 3);
    const auto r = jpo_train(set, family_net(prob::Family::arm), short_jpo(40, 1e-2), 3);
    REQUIRE(r.history.size() == 41);
    for (std::size_t i = 0; i < r.size(); ++i) {
        std::size_t arg = 0;
        for (std::size_t k = 1; k < r.history_loss.size(); ++k)
            if (r.history_loss[k][i] < r.history_loss[arg][i]) arg = k;
        CHECK(r.best_loss[i] == r.history_loss[arg][i]);
        CHECK(r.best[i] == r.history[arg][i]);
        CHECK(r.final[i] == r.history.back()[i]);
    }
}

TEST_CASE("refinement never increases the loss", "[methods]") {
    const auto set = prob::generate(prob::Family::billiards, 8, 5);
    auto r = jpo_train(set, family_net(prob::Family::billiards), short_jpo(30), 5);
    refine(r, set, opt::OptimizerConfig{});
    REQUIRE(r.refinement);
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(r.refinement->start_loss[i] == r.best_loss[i]);
        CHECK(r.refinement->loss[i] <= r.refinement->start_loss[i]);
    }
}

TEST_CASE("refining converged estimates is a no-op", "[methods]") {
    const auto set = prob::generate(prob::Family::arm, 5, 2);
    auto r = classical_solve(set, MethodKind::bfgs, opt::OptimizerConfig{});
    refine(r, set, opt::OptimizerConfig{});
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(r.refinement->loss[i] <= r.best_loss[i]);
        CHECK(r.refinement->iterations[i] <= 1);
        for (std::size_t j = 0; j < 4; ++j) CHECK(r.refinement->x[i][j] == Approx(r.best[i][j]).margin(1e-6));
    }
}

TEST_CASE("single-example JPO step equals gradient descent through the composed objective", "[methods]") {
    const auto set = prob::generate(prob::Family::arm, 1, 8);
    const auto spec = family_net(prob::Family::arm);
    JpoConfig cfg = short_jpo(1, 0.05);
    cfg.adam.kind = opt::Kind::gd;
    cfg.clip_percentile = 0;
    const auto r = jpo_train(set, spec, cfg, 8);
    REQUIRE(r.history.size() == 2);

    // rebuild the same initial network and take the step by hand
    CounterRng rng = CounterRng(8, streams::network).substream(static_cast<std::uint64_t>(MethodKind::jpo));
    nn::NetParams params = nn::net_init(spec, rng);
    ad::Shape shape;
    const auto input = network_input(set, shape);
    nn::calibrate(spec, params, input, shape);
    const std::vector<std::size_t> ex = {0};
    auto solution = [&](ad::Tape& tape, const std::vector<double>& th) {
        const ad::Value theta = tape.variable(th, {th.size()});
        return std::pair{theta, solution_head(set.family(), nn::net_forward(spec, params, theta, tape.constant(input, shape)),
                                              set.config())};
    };
    std::vector<double> grad;
    {
        ad::Tape tape;
        auto [theta, x] = solution(tape, params.theta);
        CHECK(std::vector<double>(x.data().begin(), x.data().end()) == r.history[0][0]);
        grad = tape.backward(ad::sum(prob::loss_on_tape(set, ex, x))).of(theta);
    }
    std::vector<double> stepped = params.theta;
    for (std::size_t k = 0; k < grad.size(); ++k) stepped[k] -= 0.05 * grad[k];
    ad::Tape tape;
    const auto x1 = solution(tape, stepped).second;
    for (std::size_t j = 0; j < 4; ++j) CHECK(r.history[1][0][j] == Approx(x1.data()[j]).margin(1e-12));
}

TEST_CASE("boundary loss values", "[methods]") {
    ad::Tape tape;
    const std::vector<double> lo = {0.0}, hi = {1.0};
    const auto at = [&](double v) { return boundary_loss(tape.constant({v}, {1, 1}), lo, hi, 64.0).data()[0]; };
    CHECK(at(0.5) == Approx(std::log1p(std::exp(-32.0)) / 64.0).epsilon(1e-12));
    CHECK(at(1.0) == Approx(std::log(2.0) / 64.0).epsilon(1e-12));
    CHECK(at(0.0) == Approx(std::log(2.0) / 64.0).epsilon(1e-12));
    CHECK(at(3.0) == Approx(2.0).epsilon(1e-9));
    CHECK_THROWS(boundary_loss(tape.constant({0.5}, {1, 1}), lo, lo, 64.0));
}

TEST_CASE("method results are deterministic and thread independent", "[methods]") {
    const auto set = prob::generate(prob::Family::billiards, 12, 4);
    const auto spec = family_net(prob::Family::billiards);
    set_thread_count(1);
    const auto a = jpo_train(set, spec, short_jpo(15), 9).csv_digest();
    set_thread_count(4);
    const auto b = jpo_train(set, spec, short_jpo(15), 9).csv_digest();
    set_thread_count(0);
    CHECK(a == b);
    CHECK(a != jpo_train(set, spec, short_jpo(15), 10).csv_digest());
}

TEST_CASE("method result container and digest round trip", "[methods]") {
    const auto set = prob::generate(prob::Family::arm, 4, 6);
    auto r = jpo_train(set, family_net(prob::Family::arm), short_jpo(10), 6);
    refine(r, set, opt::OptimizerConfig{});
    const auto back = MethodResult::from_container(r.to_container());
    CHECK(back.csv_digest() == r.csv_digest());
    CHECK(back.best_loss == r.best_loss);
    CHECK(back.refinement->iterations == r.refinement->iterations);
    const auto digest = r.csv_digest();
    CHECK(digest.rfind("example,iteration,loss,x0,x1,x2,x3\n", 0) == 0);
    CHECK(digest.find(",-1,") != std::string::npos);
}

TEST_CASE("classical solvers on the arm reach machine precision", "[methods]") {
    const auto set = prob::generate(prob::Family::arm, 16, 1);
    const auto b = classical_solve(set, MethodKind::bfgs, opt::OptimizerConfig{});
    for (double l : b.final_loss) CHECK(l < 1e-10);
    opt::OptimizerConfig gd;
    gd.kind = opt::Kind::gd;
    gd.learning_rate = 0.1;
    gd.max_iterations = 20000;
    const auto g = classical_solve(set, MethodKind::gd, gd);
    for (double l : g.final_loss) CHECK(l < 1e-10);
}

TEST_CASE("supervised and neural adjoint produce per-example estimates", "[methods]") {
    const auto set = prob::generate(prob::Family::arm, 6, 2);
    SupervisedConfig sc;
    sc.synthetic = 256;
    sc.iterations = 50;
    sc.log_every = 25;
    const auto s = supervised_train(set, family_net(prob::Family::arm), sc, 2);
    CHECK(s.size() == 6);
    CHECK(s.iteration.back() == 50);
    CHECK(&s.refine_start() == &s.final);

    AdjointConfig ac;
    ac.synthetic = 256;
    ac.surrogate_iterations = 50;
    ac.iterations = 20;
    const auto a = neural_adjoint_solve(set, ac, 2);
    CHECK(a.size() == 6);
    CHECK(a.events.front().rfind("surrogate validation mse", 0) == 0);
    for (double l : a.best_loss) CHECK(std::isfinite(l));
    CHECK_THROWS(neural_adjoint_solve(prob::generate(prob::Family::wavepacket, 2, 1), ac, 2));
}

TEST_CASE("learning rate selection walks down by decades", "[methods]") {
    const auto set = prob::generate(prob::Family::arm, 8, 1);
    const double lr = select_learning_rate(set, family_net(prob::Family::arm), short_jpo(0), 1, 1e-2, 4, 10);
    CHECK((lr == 1e-2 || lr == 1e-3 || lr == 1e-4 || lr == 1e-5));
}
