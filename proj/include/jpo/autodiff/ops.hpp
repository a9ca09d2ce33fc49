#pragma once

#include "jpo/autodiff/tape.hpp"

namespace jpo::ad {

// Elementwise binary ops broadcast numpy-style over trailing axes.
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value div(const Value& a, const Value& b);
Value neg(const Value& a);

Value sin(const Value& a);
Value cos(const Value& a);
Value tanh(const Value& a);
Value exp(const Value& a);
Value log(const Value& a);
Value abs(const Value& a);
Value pow(const Value& a, double exponent);
Value sqrt(const Value& a);
/// (1/sharpness) * log(1 + exp(sharpness * x))
Value softplus(const Value& a, double sharpness);
Value scale(const Value& a, double factor);

/// (M, K) x (K, N) -> (M, N)
Value matmul(const Value& a, const Value& b);
/// x (B, Cin, L), w (Cout, Cin, 3), bias (Cout) -> (B, Cout, L); zero padding.
Value conv1d(const Value& x, const Value& w, const Value& bias);
/// (..., L) -> (..., L/2), window 2, stride 2.
Value maxpool1d(const Value& x);

Value sum(const Value& a);
Value mean(const Value& a);
/// Reduce over the last axis: (..., n) -> (...)
Value sum_last(const Value& a);
Value mean_last(const Value& a);
Value sum_squares(const Value& a);

/// Join along the last axis; leading extents must agree.
Value concat(std::span<const Value> parts);
Value concat(std::initializer_list<Value> parts);
/// Entries [begin, end) of the last axis.
Value slice(const Value& a, std::size_t begin, std::size_t end);
Value reshape(const Value& a, Shape shape);

/// Real DFT along the last axis (power-of-two length n). Output keeps length n
/// in packed layout [Re X_0 .. Re X_{n/2}, Im X_1 .. Im X_{n/2-1}].
Value rfft(const Value& a);
/// Inverse of rfft, including the 1/n normalization.
Value irfft(const Value& a);

/// max(a, b) built from abs so the tape stays within the core op set.
Value maximum(const Value& a, const Value& b);

inline Value operator+(const Value& a, const Value& b) { return add(a, b); }
inline Value operator-(const Value& a, const Value& b) { return sub(a, b); }
inline Value operator*(const Value& a, const Value& b) { return mul(a, b); }
inline Value operator/(const Value& a, const Value& b) { return div(a, b); }
inline Value operator-(const Value& a) { return neg(a); }

Value operator+(const Value& a, double c);
Value operator+(double c, const Value& a);
Value operator-(const Value& a, double c);
Value operator-(double c, const Value& a);
Value operator*(const Value& a, double c);
Value operator*(double c, const Value& a);
Value operator/(const Value& a, double c);

}  // namespace jpo::ad
