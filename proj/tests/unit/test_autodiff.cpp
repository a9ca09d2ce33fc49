#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "jpo/autodiff/fft.hpp"
#include "jpo/autodiff/gradcheck.hpp"
#include "jpo/autodiff/ops.hpp"

using namespace jpo::ad;
using Catch::Approx;

namespace {

std::vector<double> random_vector(std::size_t n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (double& x : v) x = d(gen);
    return v;
}

// O(n^2) reference DFT in the packed layout.
std::vector<double> naive_rdft(const std::vector<double>& u) {
    const std::size_t n = u.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        double re = 0, im = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double a = 2 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(n);
            re += u[j] * std::cos(a);
            im -= u[j] * std::sin(a);
        }
        out[k] = re;
        if (k > 0 && k < n / 2) out[n / 2 + k] = im;
    }
    return out;
}

}  // namespace

TEST_CASE("elementwise forward values", "[autodiff]") {
    Tape t;
    auto a = t.constant({1, 2}, {2});
    auto b = t.constant({3, 4}, {2});
    auto c = a + b;
    CHECK(c[0] == 4.0);
    CHECK(c[1] == 6.0);
    CHECK(tanh(t.constant(0.0)).item() == 0.0);
}

TEST_CASE("broadcasting follows trailing-axis rules", "[autodiff]") {
    Tape t;
    auto m = t.variable({1, 2, 3, 4, 5, 6}, {2, 3});
    auto row = t.variable({10, 20, 30}, {3});
    auto col = t.variable({2, 3}, {2, 1});
    auto r = (m + row) * col;
    CHECK(r.shape() == Shape{2, 3});
    CHECK(r[0] == 22.0);
    CHECK(r[5] == 108.0);
    auto g = t.backward(sum(r));
    // d/d row_j = sum_i col_i
    CHECK(g.of(row) == std::vector<double>{5, 5, 5});
    CHECK(g.of(col) == std::vector<double>{66, 75});
}

TEST_CASE("shape errors name the op and shapes", "[autodiff]") {
    Tape t;
    auto a = t.constant({1, 2, 3}, {3});
    auto b = t.constant({1, 2}, {2});
    try {
        (void)add(a, b);
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("add") != std::string::npos);
        CHECK(msg.find("(3)") != std::string::npos);
        CHECK(msg.find("(2)") != std::string::npos);
    }
    auto m1 = t.constant(std::vector<double>(6, 1.0), {2, 3});
    CHECK_THROWS_WITH(matmul(m1, m1), Catch::Matchers::ContainsSubstring("matmul"));
    CHECK_THROWS_AS(rfft(t.constant(std::vector<double>(6, 0.0), {6})), std::invalid_argument);
    CHECK_THROWS_AS(t.backward(a), std::invalid_argument);
}

TEST_CASE("packed real DFT matches the naive transform and round-trips", "[autodiff][fft]") {
    for (std::size_t n : {1u, 2u, 4u, 8u, 64u, 128u}) {
        auto u = random_vector(n, static_cast<unsigned>(n));
        std::vector<double> spec(n), back(n);
        fft::rfft_packed(u, spec);
        auto ref = naive_rdft(u);
        for (std::size_t i = 0; i < n; ++i) CHECK(spec[i] == Approx(ref[i]).margin(1e-11));
        fft::irfft_packed(spec, back);
        double err = 0, norm = 0;
        for (std::size_t i = 0; i < n; ++i) {
            err += (back[i] - u[i]) * (back[i] - u[i]);
            norm += u[i] * u[i];
        }
        CHECK(std::sqrt(err / norm) < 1e-12);
    }
}

TEST_CASE("tape-level DFT round trip", "[autodiff][fft]") {
    Tape t;
    auto u = t.variable(random_vector(32, 3), {2, 16});
    auto r = irfft(rfft(u));
    for (std::size_t i = 0; i < 32; ++i) CHECK(r[i] == Approx(u[i]).epsilon(1e-12));
}

TEST_CASE("basic derivatives", "[autodiff]") {
    Tape t;
    auto x = t.variable(3.0);
    auto g = t.backward(x * x);
    CHECK(g.of(x)[0] == 6.0);

    Tape t2;
    auto y = t2.variable(0.0);
    CHECK(t2.backward(sin(y)).of(y)[0] == 1.0);
}

TEST_CASE("gradient of DFT energy matches finite differences of a naive DFT", "[autodiff][fft]") {
    const auto u0 = random_vector(8, 11);
    Tape t;
    auto u = t.variable(u0, {8});
    auto g = t.backward(sum_squares(rfft(u))).of(u);

    auto energy = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : naive_rdft(v)) s += x * x;
        return s;
    };
    const double h = 1e-6;
    for (std::size_t i = 0; i < 8; ++i) {
        auto p = u0, m = u0;
        p[i] += h;
        m[i] -= h;
        const double fd = (energy(p) - energy(m)) / (2 * h);
        CHECK(std::abs(g[i] - fd) / (std::abs(fd) + 1e-12) < 1e-6);
    }
}

TEST_CASE("DFT backward equals the transpose of the DFT matrix", "[autodiff][fft]") {
    const std::size_t n = 16;
    const auto u0 = random_vector(n, 5);
    const auto w = random_vector(n, 6);
    for (bool inverse : {false, true}) {
        Tape t;
        auto u = t.variable(u0, {n});
        auto wc = t.constant(w, {n});
        auto y = inverse ? irfft(u) : rfft(u);
        auto g = t.backward(sum(y * wc)).of(u);

        // explicit matrix of the (inverse) transform, column j = transform of e_j
        std::vector<double> expected(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> e(n, 0.0), col(n);
            e[j] = 1.0;
            if (inverse)
                fft::irfft_packed(e, col);
            else
                col = naive_rdft(e);
            for (std::size_t i = 0; i < n; ++i) expected[j] += w[i] * col[i];
        }
        for (std::size_t j = 0; j < n; ++j) CHECK(g[j] == Approx(expected[j]).margin(1e-10));
    }
}

TEST_CASE("check_gradient on x*x", "[autodiff]") {
    std::vector<double> p{2.0};
    const double err = check_gradient([](Tape&, const Value& x) { return sum(x * x); }, p, 1e-5);
    CHECK(err < 1e-7);
}

TEST_CASE("every op kind passes a finite-difference check", "[autodiff]") {
    const auto base = random_vector(24, 9);
    auto positive = base;
    for (double& v : positive) v = 0.5 + std::abs(v);

    auto run = [](const ScalarFn& f, const std::vector<double>& p) { return check_gradient(f, p, 1e-6); };

    CHECK(run([](Tape&, const Value& x) { return sum(sin(x) * cos(x) + tanh(x)); }, base) < 1e-6);
    CHECK(run([](Tape&, const Value& x) { return sum(exp(x) - abs(x)); }, base) < 1e-6);
    CHECK(run([](Tape&, const Value& x) { return sum(log(x) + pow(x, 1.7) + sqrt(x)); }, positive) < 1e-6);
    CHECK(run([](Tape&, const Value& x) { return sum(softplus(x, 3.0) / (x * x + 1.0)); }, base) < 1e-6);
    CHECK(run([](Tape&, const Value& x) { return mean(neg(x) * 2.5 - x); }, base) < 1e-6);
    CHECK(run(
              [](Tape&, const Value& x) {
                  auto m = reshape(x, {4, 6});
                  auto w = reshape(slice(reshape(x, {24}), 0, 18), {6, 3});
                  return sum_squares(matmul(m, w));
              },
              base) < 1e-6);
    CHECK(run(
              [](Tape& t, const Value& x) {
                  auto in = reshape(slice(reshape(x, {1, 24}), 0, 16), {2, 1, 8});
                  auto w = reshape(slice(reshape(x, {1, 24}), 16, 22), {2, 1, 3});
                  auto b = t.constant({0.1, -0.2}, {2});
                  auto y = maxpool1d(tanh(conv1d(in, w, b)));
                  return sum_squares(y);
              },
              base) < 1e-6);
    CHECK(run(
              [](Tape&, const Value& x) {
                  auto m = reshape(x, {3, 8});
                  auto s = concat({slice(m, 5, 8), slice(m, 0, 2)});
                  return sum(mean_last(s * s)) + sum(sum_last(irfft(m) * m));
              },
              base) < 1e-6);
}

TEST_CASE("backward is linear in the output", "[autodiff]") {
    const auto u0 = random_vector(16, 21);
    auto grad_scaled = [&](double c) {
        Tape t;
        auto u = t.variable(u0, {16});
        auto l = sum_squares(rfft(tanh(u)));
        return t.backward(c == 1.0 ? l : scale(l, c)).of(u);
    };
    const auto g1 = grad_scaled(1.0);
    for (double c : {4.0, 0.5, -2.0}) {
        const auto gc = grad_scaled(c);
        for (std::size_t i = 0; i < 16; ++i) CHECK(gc[i] == c * g1[i]);
    }
    const auto g3 = grad_scaled(3.0);
    for (std::size_t i = 0; i < 16; ++i) CHECK(g3[i] == Approx(3.0 * g1[i]).epsilon(1e-14));
}

TEST_CASE("unreachable inputs get exact zero", "[autodiff]") {
    Tape t;
    auto a = t.variable({1.0, 2.0}, {2});
    auto b = t.variable({3.0}, {1});
    auto g = t.backward(sum(a * a));
    CHECK(g.of(b) == std::vector<double>{0.0});
    CHECK(g.of(a) == std::vector<double>{2.0, 4.0});
}

TEST_CASE("identical tapes give bit-identical gradients", "[autodiff]") {
    const auto u0 = random_vector(64, 2);
    auto grad = [&] {
        Tape t;
        auto u = t.variable(u0, {4, 16});
        auto w = t.constant(random_vector(16 * 8, 3), {16, 8});
        return t.backward(sum_squares(tanh(matmul(irfft(rfft(u)), w)))).of(u);
    };
    CHECK(grad() == grad());
}
