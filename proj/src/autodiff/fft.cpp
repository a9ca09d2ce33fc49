#include "jpo/autodiff/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace jpo::ad::fft {
namespace {

struct Plan {
    std::vector<std::complex<double>> twiddle;  // e^{-2 pi i k / n}, k < n/2
    std::vector<std::size_t> bitrev;
    std::vector<std::complex<double>> real_twiddle;  // e^{-2 pi i k / (2n)}, k <= n
};

const Plan& plan_for(std::size_t n) {
    thread_local std::unordered_map<std::size_t, Plan> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    Plan p;
    p.twiddle.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        p.twiddle[k] = {std::cos(a), std::sin(a)};
    }
    p.bitrev.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (std::size_t b = 0; b < bits; ++b)
            if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
        p.bitrev[i] = r;
    }
    p.real_twiddle.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        const double a = -std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        p.real_twiddle[k] = {std::cos(a), std::sin(a)};
    }
    return cache.emplace(n, std::move(p)).first->second;
}

}  // namespace

void complex_fft(std::span<std::complex<double>> data, bool inverse) {
    const std::size_t n = data.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: length must be a power of two");
    if (n == 1) return;
    const Plan& p = plan_for(n);
    for (std::size_t i = 0; i < n; ++i)
        if (i < p.bitrev[i]) std::swap(data[i], data[p.bitrev[i]]);

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t step = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                std::complex<double> w = p.twiddle[k * step];
                if (inverse) w = std::conj(w);
                const std::complex<double> t = w * data[start + k + half];
                data[start + k + half] = data[start + k] - t;
                data[start + k] += t;
            }
        }
    }
}

void rfft_packed(std::span<const double> in, std::span<double> out) {
    const std::size_t n = in.size();
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const std::size_t m = n / 2;
    thread_local std::vector<std::complex<double>> z;
    z.resize(m);
    for (std::size_t j = 0; j < m; ++j) z[j] = {in[2 * j], in[2 * j + 1]};
    complex_fft(z, false);

    const Plan& p = plan_for(m);
    for (std::size_t k = 0; k <= m; ++k) {
        const std::complex<double> zk = z[k % m];
        const std::complex<double> zc = std::conj(z[(m - k) % m]);
        const std::complex<double> even = 0.5 * (zk + zc);
        const std::complex<double> odd = std::complex<double>(0.0, -0.5) * (zk - zc);
        const std::complex<double> x = even + p.real_twiddle[k] * odd;
        out[k] = x.real();
        if (k > 0 && k < m) out[m + k] = x.imag();
    }
}

void irfft_packed(std::span<const double> in, std::span<double> out) {
    const std::size_t n = in.size();
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const std::size_t m = n / 2;
    auto spectrum = [&](std::size_t k) -> std::complex<double> {
        if (k == 0 || k == m) return {in[k], 0.0};
        return {in[k], in[m + k]};
    };
    const Plan& p = plan_for(m);
    thread_local std::vector<std::complex<double>> z;
    z.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::complex<double> xk = spectrum(k);
        const std::complex<double> xc = std::conj(spectrum(m - k));
        const std::complex<double> even = 0.5 * (xk + xc);
        const std::complex<double> odd = 0.5 * (xk - xc) * std::conj(p.real_twiddle[k]);
        z[k] = even + std::complex<double>(0.0, 1.0) * odd;
    }
    complex_fft(z, true);
    const double inv = 1.0 / static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
        out[2 * j] = z[j].real() * inv;
        out[2 * j + 1] = z[j].imag() * inv;
    }
}

}  // namespace jpo::ad::fft
