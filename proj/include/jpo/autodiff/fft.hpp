#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace jpo::ad::fft {

[[nodiscard]] constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place radix-2 transform. The inverse is unnormalized.
void complex_fft(std::span<std::complex<double>> data, bool inverse);

/// One row, packed layout [Re X_0 .. Re X_{n/2}, Im X_1 .. Im X_{n/2-1}].
void rfft_packed(std::span<const double> in, std::span<double> out);
/// Inverse of rfft_packed, normalized by 1/n.
void irfft_packed(std::span<const double> in, std::span<double> out);

}  // namespace jpo::ad::fft
