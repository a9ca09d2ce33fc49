#include "jpo/autodiff/ops.hpp"

#include <stdexcept>

namespace jpo::ad {
namespace {

Tape& tape_of(const Value& v) {
    if (!v.valid()) throw std::invalid_argument("operation on an empty Value");
    return *v.tape();
}

Value unary(Op op, const Value& a, double s = 0.0) {
    Attributes at;
    at.scalar = s;
    return tape_of(a).record(op, {a}, at);
}

Value binary(Op op, const Value& a, const Value& b) { return tape_of(a).record(op, {a, b}); }

Value lift(const Value& like, double c) { return tape_of(like).constant(c); }

}  // namespace

Value add(const Value& a, const Value& b) { return binary(Op::add, a, b); }
Value sub(const Value& a, const Value& b) { return binary(Op::sub, a, b); }
Value mul(const Value& a, const Value& b) { return binary(Op::mul, a, b); }
Value div(const Value& a, const Value& b) { return binary(Op::div, a, b); }
Value neg(const Value& a) { return unary(Op::neg, a); }

Value sin(const Value& a) { return unary(Op::sin, a); }
Value cos(const Value& a) { return unary(Op::cos, a); }
Value tanh(const Value& a) { return unary(Op::tanh, a); }
Value exp(const Value& a) { return unary(Op::exp, a); }
Value log(const Value& a) { return unary(Op::log, a); }
Value abs(const Value& a) { return unary(Op::abs, a); }
Value pow(const Value& a, double exponent) { return unary(Op::power, a, exponent); }
Value sqrt(const Value& a) { return unary(Op::power, a, 0.5); }
Value softplus(const Value& a, double sharpness) {
    if (!(sharpness > 0)) throw std::invalid_argument("softplus: sharpness must be positive");
    return unary(Op::softplus, a, sharpness);
}
Value scale(const Value& a, double factor) { return unary(Op::scale, a, factor); }

Value matmul(const Value& a, const Value& b) { return binary(Op::matmul, a, b); }
Value conv1d(const Value& x, const Value& w, const Value& bias) { return tape_of(x).record(Op::conv1d, {x, w, bias}); }
Value maxpool1d(const Value& x) { return unary(Op::maxpool1d, x); }

Value sum(const Value& a) { return unary(Op::sum, a); }
Value mean(const Value& a) { return unary(Op::mean, a); }
Value sum_last(const Value& a) { return unary(Op::sum_last, a); }
Value mean_last(const Value& a) { return unary(Op::mean_last, a); }
Value sum_squares(const Value& a) { return unary(Op::sum_squares, a); }

Value concat(std::span<const Value> parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no operands");
    return tape_of(parts[0]).record(Op::concat, parts);
}
Value concat(std::initializer_list<Value> parts) { return concat(std::span<const Value>(parts.begin(), parts.size())); }

Value slice(const Value& a, std::size_t begin, std::size_t end) {
    Attributes at;
    at.begin = begin;
    at.end = end;
    return tape_of(a).record(Op::slice, {a}, at);
}

Value reshape(const Value& a, Shape shape) {
    Attributes at;
    at.shape = std::move(shape);
    return tape_of(a).record(Op::reshape, {a}, at);
}

Value rfft(const Value& a) { return unary(Op::rfft, a); }
Value irfft(const Value& a) { return unary(Op::irfft, a); }

Value maximum(const Value& a, const Value& b) { return scale(add(add(a, b), abs(sub(a, b))), 0.5); }

Value operator+(const Value& a, double c) { return add(a, lift(a, c)); }
Value operator+(double c, const Value& a) { return add(lift(a, c), a); }
Value operator-(const Value& a, double c) { return sub(a, lift(a, c)); }
Value operator-(double c, const Value& a) { return sub(lift(a, c), a); }
Value operator*(const Value& a, double c) { return scale(a, c); }
Value operator*(double c, const Value& a) { return scale(a, c); }
Value operator/(const Value& a, double c) { return scale(a, 1.0 / c); }

}  // namespace jpo::ad
