#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "jpo/noise/theory.hpp"
#include "jpo/parallel.hpp"

using namespace jpo;
using namespace jpo::noise;
using Catch::Approx;

TEST_CASE("counter rng is reproducible and substreams differ", "[rng]") {
    CounterRng a(7, 3), b(7, 3);
    for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
    CounterRng c = CounterRng(7, 3).substream(1), d = CounterRng(7, 3).substream(2);
    CHECK(c.next_u64() != d.next_u64());
    CounterRng u(1);
    double mean = 0;
    for (int i = 0; i < 100000; ++i) mean += u.uniform();
    CHECK(mean / 100000 == Approx(0.5).margin(0.005));
}

TEST_CASE("landscape construction", "[noise]") {
    CounterRng r1(7), r2(7);
    auto s1 = make_landscape(3, uniform_law(0, 1), uniform_law(0, 20), 1.0, r1);
    auto s2 = make_landscape(3, uniform_law(0, 1), uniform_law(0, 20), 1.0, r2);
    REQUIRE(s1.components.size() == 3);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(s1.components[j].amplitude == s2.components[j].amplitude);
        CHECK(s1.components[j].phase == s2.components[j].phase);
        CHECK(s1.components[j].phase >= 0.0);
        CHECK(s1.components[j].phase < 2 * std::numbers::pi);
    }
    CHECK_THROWS_AS(make_landscape(0, uniform_law(0, 1), uniform_law(0, 1), 1.0, r1), std::invalid_argument);

    auto flat = make_landscape(1, constant_law(0.0), constant_law(3.0), 1.0, r1, 0.5);
    CHECK(landscape_loss(flat, 2.5) == 2.0);
    CHECK(landscape_loss(flat, -1.5) == 2.0);
}

TEST_CASE("landscape loss and gradient", "[noise]") {
    LandscapeSpec s{1.0, 0.0, {}};
    CHECK(landscape_loss(s, 2.0) == 2.0);
    CHECK(landscape_grad(s, 2.0) == 1.0);
    CHECK(landscape_grad(s, 0.0) == 0.0);

    LandscapeSpec single{0.0, 0.0, {{1.0, 1.0, 0.0}}};
    CHECK(landscape_grad(single, std::numbers::pi / 2) == Approx(1.0).epsilon(1e-15));

    CounterRng rng(11);
    auto spec = make_landscape(20, uniform_law(0, 1), uniform_law(0, 20), 0.7, rng, 0.3);
    for (double x : {-2.0, -0.4, 1.1, 3.7}) {
        const double h = 1e-6;
        const double fd = (landscape_loss(spec, x + h) - landscape_loss(spec, x - h)) / (2 * h);
        CHECK(landscape_grad(spec, x) == Approx(fd).margin(1e-6));
    }
}

TEST_CASE("gradient noise std matches |Aw|/sqrt2", "[noise]") {
    CounterRng rng(5);
    auto spec = make_landscape(50, uniform_law(0, 1), uniform_law(0, 20), 0.0, rng);
    LandscapeBatch batch{{spec}, true};
    const double half = sampling_half_width(batch);
    CounterRng draw(6);
    const std::size_t n = 1000000;
    double s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = half * (2 * draw.uniform() - 1);
        const double g = landscape_grad(spec, x);
        s1 += g;
        s2 += g * g;
    }
    const double mean = s1 / n;
    const double sd = std::sqrt(s2 / n - mean * mean);
    CHECK(std::abs(sd / (spec.aw_norm() / std::numbers::sqrt2) - 1.0) < 0.02);
}

TEST_CASE("single-sine gradient follows the arcsine law", "[noise]") {
    // one-sample KS distance of landscape gradients against the analytic CDF
    // ½ + asin(y/Aω)/π, plus a two-sample distance against inverse-CDF draws
    const double a = 0.8, w = 3.0;
    LandscapeSpec s{0.0, 0.0, {{a, w, 0.4}}};
    const double half = sampling_half_width({{s}, true});
    CounterRng draw(9), ref(10);
    const std::size_t n = 100000;
    std::vector<double> y(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = landscape_grad(s, half * (2 * draw.uniform() - 1));
        z[i] = a * w * std::sin(std::numbers::pi * (ref.uniform() - 0.5));
    }
    std::sort(y.begin(), y.end());
    std::sort(z.begin(), z.end());
    double d1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = 0.5 + std::asin(std::clamp(y[i] / (a * w), -1.0, 1.0)) / std::numbers::pi;
        d1 = std::max({d1, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
    }
    double d2 = 0;
    std::size_t i = 0, j = 0;
    while (i < n && j < n) {
        if (y[i] <= z[j])
            ++i;
        else
            ++j;
        d2 = std::max(d2, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / n));
    }
    // 1% critical values: 1.63/sqrt(n) and 1.63*sqrt(2/n)
    CHECK(d1 < 1.63 / std::sqrt(static_cast<double>(n)));
    CHECK(d2 < 1.63 * std::sqrt(2.0 / n));
}

TEST_CASE("closed-form alignment probabilities", "[noise]") {
    CHECK(prob_aligned_single(0.0, 1.0) == 0.5);
    CHECK(prob_aligned_single(2.0, 0.0) == 1.0);
    CHECK(prob_aligned_single(1.0, 1.0) == Approx(0.92135).margin(5e-6));
    CHECK_THROWS_AS(prob_aligned_single(-1.0, 1.0), std::invalid_argument);

    std::vector<double> one{0.3};
    CHECK(prob_aligned_sum(one, 0.8) == prob_aligned_single(0.3, 0.8));
    std::vector<double> four(4, 1.0);
    CHECK(prob_aligned_sum(four, 2.0) == Approx(0.5 + 0.5 * std::erf(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(prob_aligned_sum(std::vector<double>{}, 1.0), std::invalid_argument);

    for (double arg : {0.01, 0.05, 0.1}) {
        const double lin = 0.5 + arg / std::sqrt(std::numbers::pi);
        CHECK(std::abs(prob_aligned_single(arg, 1.0) / lin - 1.0) < 0.01);
    }
    // monotone in lambda and in noise
    CHECK(prob_aligned_single(0.2, 1.0) < prob_aligned_single(0.3, 1.0));
    CHECK(prob_aligned_single(0.2, 1.0) > prob_aligned_single(0.2, 1.5));
}

TEST_CASE("majority-vote probabilities", "[noise]") {
    CHECK(prob_majority_exact(1, 0.1) == Approx(0.6).epsilon(1e-14));
    CHECK(prob_majority_exact(3, 0.1) == Approx(0.648).epsilon(1e-13));
    CHECK(prob_majority_exact(2, 0.1) == Approx(0.6).epsilon(1e-14));  // tie credited ½
    CHECK(std::abs(prob_majority_exact(101, 0.05) - prob_majority_normal(101, 0.05)) < 0.02);
    double prev = 1.0;
    for (std::size_t n : {11u, 51u, 101u}) {
        const double d = std::abs(prob_majority_exact(n, 0.05) - prob_majority_normal(n, 0.05));
        CHECK(d < prev);
        prev = d;
    }
    CHECK_THROWS_AS(prob_majority_exact(3, 0.5), std::invalid_argument);
}

TEST_CASE("monte carlo alignment", "[noise]") {
    CounterRng rng(3);
    LandscapeBatch quiet{{make_landscape(1, constant_law(0.0), constant_law(2.0), 1.0, rng)}, true};
    CHECK(mc_alignment(quiet, Reducer::sum, 1000, CounterRng(1)).p == 1.0);

    auto batch = equal_noise_batch(1, 150, 0.4, rng);
    auto est = mc_alignment(batch, Reducer::sum, 100000, CounterRng(2), Sampling::ensemble);
    CHECK(std::abs(est.p - prob_aligned_single(0.4, 1.0)) < 3 * est.se);

    LandscapeBatch mixed = batch;
    mixed.specs.push_back(batch.specs[0]);
    mixed.specs.back().x_star = 1.0;
    CHECK_THROWS_AS(mc_alignment(mixed, Reducer::sum, 10, CounterRng(1)), std::invalid_argument);
}

TEST_CASE("monte carlo is thread-count independent", "[noise]") {
    CounterRng rng(4);
    auto batch = equal_noise_batch(4, 20, 0.1, rng);
    set_thread_count(1);
    auto a = mc_alignment(batch, Reducer::vote, 20000, CounterRng(8));
    set_thread_count(4);
    auto b = mc_alignment(batch, Reducer::vote, 20000, CounterRng(8));
    set_thread_count(0);
    CHECK(a.p == b.p);
}
