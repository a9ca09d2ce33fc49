#include <catch_amalgamated.hpp>

#include <cmath>

#include "jpo/align/alignment.hpp"
#include "jpo/parallel.hpp"

using namespace jpo;
using namespace jpo::align;
using Catch::Approx;

TEST_CASE("recursion base case and hand-evaluated step", "[align]") {
    for (double a : {0.5, 3.0, 40.0})
        for (double c : {0.0, 2.0, 30.0}) CHECK(rho_predict({a, c}, 5).rho[0] == 1.0);
    // P_2 = (1 - e^-1) * 0.75 + e^-1
    const double p2 = (1 - std::exp(-1.0)) * 0.75 + std::exp(-1.0);
    CHECK(rho_predict({1.0, 1.0}, 2).rho[1] == Approx((1 + p2) / 2));
    CHECK(rho_predict({1.0, 1.0}, 2).rho[1] == Approx(0.9210).margin(5e-5));
}

TEST_CASE("recursion limits", "[align]") {
    const auto flat = rho_predict({1e-6, 0.0}, 200);
    for (double r : flat.rho) CHECK(r == Approx(1.0).margin(1e-15));
    const auto plastic = rho_predict({1e9, 10.0}, 200);
    for (double r : plastic.rho) CHECK(r == Approx(1.0).margin(1e-6));

    for (auto p : {AlignmentParams{12.9, 6.4}, AlignmentParams{1.0, 1.0}, AlignmentParams{3.0, 40.0}}) {
        const auto c = rho_predict(p, 20000);
        const double last = c.rho.back();
        CHECK(std::abs(last - c.rho[c.rho.size() - 2]) < 1e-6);
        CHECK(last >= 0.5);
        CHECK(last <= 1.0);
        for (double r : c.rho) {
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
        }
    }
    CHECK_THROWS(rho_predict({0.0, 1.0}, 3));
    CHECK_THROWS(rho_predict({1.0, -1.0}, 3));
}

TEST_CASE("fit recovers generating parameters", "[align]") {
    const auto c = rho_predict({12.9, 6.4}, 64);
    AlignmentCurve m{c.n, c.rho, Provenance::measured};
    const auto f = rho_fit(m);
    CHECK(f.params.plasticity == Approx(12.9).epsilon(0.05));
    CHECK(f.params.complexity == Approx(6.4).epsilon(0.05));
    CHECK(f.residual < 1e-4);
    CHECK_FALSE(f.flat);
}

TEST_CASE("fit of a constant curve of ones", "[align]") {
    AlignmentCurve m{{1, 2, 4, 8}, {1, 1, 1, 1}, Provenance::measured};
    const auto f = rho_fit(m);
    CHECK(f.flat);
    CHECK(f.params.complexity == 0.0);
    CHECK(f.residual < 1e-9);
    CHECK_THROWS_WITH(rho_fit({{1, 1, 2}, {1, 1, 1}, Provenance::measured}),
                      Catch::Matchers::ContainsSubstring("3 distinct"));
}

TEST_CASE("fit under one percent noise stays at the noise floor", "[align]") {
    const auto c = rho_predict({1.0, 1.0}, 64);
    CounterRng rng(3);
    AlignmentCurve m{c.n, {}, Provenance::measured};
    double noise_ss = 0;
    for (double r : c.rho) {
        const double e = 0.01 * rng.normal();
        noise_ss += e * e;
        m.rho.push_back(std::clamp(r + e, 0.0, 1.0));
    }
    const auto f = rho_fit(m);
    CHECK(f.residual <= std::sqrt(noise_ss / 64.0) + 1e-12);
}

TEST_CASE("single example update is always aligned", "[align]") {
    AlignConfig cfg;
    for (auto task : {AlignTask::linear, AlignTask::sine, AlignTask::sine_noisy}) {
        cfg.task = task;
        cfg.replicas = 64;
        CHECK(measure_task(1, cfg, 5) == 1.0);
    }
}

TEST_CASE("zero individual gradients are excluded", "[align]") {
    AlignConfig cfg;
    const auto spec = align_net(cfg);
    CounterRng rng(1);
    const auto params = nn::net_init(spec, rng);
    const auto x = nn::net_eval(spec, params, {0.3, -0.2}, {2, 1});
    std::vector<noise::LandscapeSpec> losses(2);
    losses[0].lambda = 1.0;
    losses[0].x_star = x[0];
    losses[1].lambda = 1.0;
    losses[1].x_star = x[1] + 5.0;
    const auto s = measure_alignment(spec, params, {0.3, -0.2}, losses, 1e-3);
    CHECK(s.excluded == 1);
    CHECK(s.counted == 1);
    CHECK(s.aligned == 1);
}

TEST_CASE("alignment measurement is reproducible across thread counts", "[align]") {
    AlignConfig cfg;
    cfg.replicas = 40;
    cfg.task = AlignTask::sine_noisy;
    set_thread_count(1);
    const double a = measure_task(16, cfg, 9);
    set_thread_count(4);
    const double b = measure_task(16, cfg, 9);
    set_thread_count(0);
    CHECK(a == b);
    CHECK(a < 1.0);
    CHECK(a > 0.3);
}

TEST_CASE("task names", "[align]") {
    CHECK(parse_task("sine-noisy") == AlignTask::sine_noisy);
    CHECK(std::string(task_name(AlignTask::linear)) == "linear");
    CHECK_THROWS_WITH(parse_task("cubic"), Catch::Matchers::ContainsSubstring("unknown alignment task"));
}
