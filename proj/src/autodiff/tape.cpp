#include "jpo/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "jpo/autodiff/fft.hpp"
#include "kernels.hpp"

namespace jpo::ad {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ')';
    return os.str();
}

const char* op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::constant: return "constant";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::div: return "div";
        case Op::neg: return "neg";
        case Op::sin: return "sin";
        case Op::cos: return "cos";
        case Op::tanh: return "tanh";
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::abs: return "abs";
        case Op::power: return "power";
        case Op::softplus: return "softplus";
        case Op::scale: return "scale";
        case Op::matmul: return "matmul";
        case Op::conv1d: return "conv1d";
        case Op::maxpool1d: return "maxpool1d";
        case Op::sum: return "sum";
        case Op::mean: return "mean";
        case Op::sum_last: return "sum_last";
        case Op::mean_last: return "mean_last";
        case Op::sum_squares: return "sum_squares";
        case Op::concat: return "concat";
        case Op::slice: return "slice";
        case Op::reshape: return "reshape";
        case Op::rfft: return "rfft";
        case Op::irfft: return "irfft";
    }
    return "?";
}

const Shape& Value::shape() const { return tape_->node(id_).shape; }

std::span<const double> Value::data() const { return tape_->node(id_).value; }

double Value::item() const {
    const auto& v = tape_->node(id_).value;
    if (v.size() != 1) throw std::invalid_argument("item: value has " + std::to_string(v.size()) + " entries");
    return v[0];
}

std::vector<double> Gradients::of(const Value& v) const {
    if (v.id() < grads_.size() && !grads_[v.id()].empty()) return grads_[v.id()];
    return std::vector<double>(v.size(), 0.0);
}

namespace {

[[noreturn]] void shape_error(Op op, const std::string& what) {
    throw std::invalid_argument(std::string(op_name(op)) + ": " + what);
}

std::size_t last_extent(const Shape& s) { return s.empty() ? 1 : s.back(); }

Shape leading(const Shape& s) {
    if (s.empty()) return {};
    return Shape(s.begin(), s.end() - 1);
}

bool is_unary(Op op) {
    switch (op) {
        case Op::neg:
        case Op::sin:
        case Op::cos:
        case Op::tanh:
        case Op::exp:
        case Op::log:
        case Op::abs:
        case Op::power:
        case Op::softplus:
        case Op::scale:
            return true;
        default:
            return false;
    }
}

bool is_binary(Op op) { return op == Op::add || op == Op::sub || op == Op::mul || op == Op::div; }

double softplus_value(double x, double k) {
    const double z = k * x;
    if (z > 0) return x + std::log1p(std::exp(-z)) / k;
    return std::log1p(std::exp(z)) / k;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double unary_forward(Op op, double x, double s) {
    switch (op) {
        case Op::neg: return -x;
        case Op::sin: return std::sin(x);
        case Op::cos: return std::cos(x);
        case Op::tanh: return std::tanh(x);
        case Op::exp: return std::exp(x);
        case Op::log: return std::log(x);
        case Op::abs: return std::abs(x);
        case Op::power: return std::pow(x, s);
        case Op::softplus: return softplus_value(x, s);
        case Op::scale: return s * x;
        default: return 0.0;
    }
}

// derivative given input x and output y
double unary_derivative(Op op, double x, double y, double s) {
    switch (op) {
        case Op::neg: return -1.0;
        case Op::sin: return std::cos(x);
        case Op::cos: return -std::sin(x);
        case Op::tanh: return 1.0 - y * y;
        case Op::exp: return y;
        case Op::log: return 1.0 / x;
        case Op::abs: return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
        case Op::power: return s == 0.0 ? 0.0 : s * std::pow(x, s - 1.0);
        case Op::softplus: return sigmoid(s * x);
        case Op::scale: return s;
        default: return 0.0;
    }
}

}  // namespace

Value Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Value(this, static_cast<NodeId>(nodes_.size() - 1));
}

Value Tape::variable(std::vector<double> data, Shape shape) {
    if (data.size() != numel(shape))
        throw std::invalid_argument("variable: data length " + std::to_string(data.size()) + " does not match shape " +
                                    shape_str(shape));
    Node n;
    n.op = Op::leaf;
    n.shape = std::move(shape);
    n.value = std::move(data);
    n.requires_grad = true;
    return push(std::move(n));
}

Value Tape::constant(std::vector<double> data, Shape shape) {
    if (data.size() != numel(shape))
        throw std::invalid_argument("constant: data length " + std::to_string(data.size()) + " does not match shape " +
                                    shape_str(shape));
    Node n;
    n.op = Op::constant;
    n.shape = std::move(shape);
    n.value = std::move(data);
    return push(std::move(n));
}

Value Tape::record(Op op, std::initializer_list<Value> operands, const Attributes& attrs) {
    return record(op, std::span<const Value>(operands.begin(), operands.size()), attrs);
}

Value Tape::record(Op op, std::span<const Value> operands, const Attributes& attrs) {
    for (const Value& v : operands)
        if (v.tape() != this) shape_error(op, "operand belongs to a different tape");

    Node out;
    out.op = op;
    out.attrs = attrs;
    for (const Value& v : operands) {
        out.parents.push_back(v.id());
        out.requires_grad = out.requires_grad || nodes_[v.id()].requires_grad;
    }
    auto in = [&](std::size_t i) -> const Node& { return nodes_[operands[i].id()]; };
    auto expect_arity = [&](std::size_t k) {
        if (operands.size() != k)
            shape_error(op, "expected " + std::to_string(k) + " operands, got " + std::to_string(operands.size()));
    };

    if (is_unary(op)) {
        expect_arity(1);
        const Node& a = in(0);
        out.shape = a.shape;
        out.value.resize(a.value.size());
        const double s = attrs.scalar;
        if (op == Op::scale) {
            for (std::size_t i = 0; i < a.value.size(); ++i) out.value[i] = s * a.value[i];
        } else if (op == Op::tanh) {
            for (std::size_t i = 0; i < a.value.size(); ++i) out.value[i] = std::tanh(a.value[i]);
        } else if (op == Op::neg) {
            for (std::size_t i = 0; i < a.value.size(); ++i) out.value[i] = -a.value[i];
        } else {
            for (std::size_t i = 0; i < a.value.size(); ++i) out.value[i] = unary_forward(op, a.value[i], s);
        }
        return push(std::move(out));
    }

    if (is_binary(op)) {
        expect_arity(2);
        const Node& a = in(0);
        const Node& b = in(1);
        auto bc = detail::broadcast_shapes(a.shape, b.shape);
        if (!bc) shape_error(op, "shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
        out.shape = *bc;
        detail::binary_forward(op, a.value, a.shape, b.value, b.shape, out.shape, out.value);
        return push(std::move(out));
    }

    switch (op) {
        case Op::matmul: {
            expect_arity(2);
            const Node& a = in(0);
            const Node& b = in(1);
            if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[0])
                shape_error(op, "inner extent mismatch " + shape_str(a.shape) + " x " + shape_str(b.shape));
            out.shape = {a.shape[0], b.shape[1]};
            out.value.assign(a.shape[0] * b.shape[1], 0.0);
            detail::matmul(a.value.data(), b.value.data(), out.value.data(), a.shape[0], a.shape[1], b.shape[1]);
            break;
        }
        case Op::conv1d: {
            expect_arity(3);
            const Node& x = in(0);
            const Node& w = in(1);
            const Node& bias = in(2);
            if (x.shape.size() != 3 || w.shape.size() != 3 || w.shape[2] != 3 || w.shape[1] != x.shape[1] ||
                bias.shape.size() != 1 || bias.shape[0] != w.shape[0])
                shape_error(op, "bad shapes x" + shape_str(x.shape) + " w" + shape_str(w.shape) + " b" +
                                    shape_str(bias.shape));
            const std::size_t batch = x.shape[0], cin = x.shape[1], len = x.shape[2], cout = w.shape[0];
            out.shape = {batch, cout, len};
            out.value.assign(batch * cout * len, 0.0);
            detail::conv1d_forward(x.value.data(), w.value.data(), bias.value.data(), out.value.data(), batch, cin,
                                   cout, len);
            break;
        }
        case Op::maxpool1d: {
            expect_arity(1);
            const Node& x = in(0);
            const std::size_t len = last_extent(x.shape);
            if (x.shape.empty() || len % 2 != 0) shape_error(op, "last extent must be even, got " + shape_str(x.shape));
            out.shape = x.shape;
            out.shape.back() = len / 2;
            const std::size_t m = x.value.size() / 2;
            out.value.resize(m);
            out.aux.resize(m);
            for (std::size_t j = 0; j < m; ++j) {
                const double l = x.value[2 * j], r = x.value[2 * j + 1];
                const bool right = r > l;
                out.value[j] = right ? r : l;
                out.aux[j] = static_cast<std::uint32_t>(2 * j + (right ? 1 : 0));
            }
            break;
        }
        case Op::sum:
        case Op::mean:
        case Op::sum_squares: {
            expect_arity(1);
            const Node& a = in(0);
            double acc = 0.0;
            if (op == Op::sum_squares)
                for (double v : a.value) acc += v * v;
            else
                for (double v : a.value) acc += v;
            if (op == Op::mean) {
                if (a.value.empty()) shape_error(op, "empty operand");
                acc /= static_cast<double>(a.value.size());
            }
            out.shape = {};
            out.value = {acc};
            break;
        }
        case Op::sum_last:
        case Op::mean_last: {
            expect_arity(1);
            const Node& a = in(0);
            if (a.shape.empty()) shape_error(op, "operand must have rank >= 1");
            const std::size_t n = a.shape.back();
            if (n == 0) shape_error(op, "empty last axis");
            out.shape = leading(a.shape);
            const std::size_t rows = a.value.size() / n;
            out.value.assign(rows, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += a.value[r * n + j];
                out.value[r] = op == Op::mean_last ? acc / static_cast<double>(n) : acc;
            }
            break;
        }
        case Op::concat: {
            if (operands.empty()) shape_error(op, "no operands");
            Shape lead;
            std::size_t total = 0;
            std::vector<std::size_t> widths;
            for (std::size_t p = 0; p < operands.size(); ++p) {
                const Shape& s = in(p).shape;
                Shape l = leading(s);
                if (p == 0)
                    lead = l;
                else if (l != lead)
                    shape_error(op, "leading extents differ: " + shape_str(in(0).shape) + " vs " + shape_str(s));
                widths.push_back(last_extent(s));
                total += widths.back();
            }
            out.shape = lead;
            out.shape.push_back(total);
            const std::size_t rows = numel(lead);
            out.value.resize(rows * total);
            for (std::size_t r = 0; r < rows; ++r) {
                std::size_t off = 0;
                for (std::size_t p = 0; p < operands.size(); ++p) {
                    const auto& v = in(p).value;
                    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * widths[p]), widths[p],
                                out.value.begin() + static_cast<std::ptrdiff_t>(r * total + off));
                    off += widths[p];
                }
            }
            break;
        }
        case Op::slice: {
            expect_arity(1);
            const Node& a = in(0);
            const std::size_t n = last_extent(a.shape);
            if (a.shape.empty() || attrs.begin >= attrs.end || attrs.end > n)
                shape_error(op, "range [" + std::to_string(attrs.begin) + "," + std::to_string(attrs.end) +
                                    ") invalid for " + shape_str(a.shape));
            const std::size_t w = attrs.end - attrs.begin;
            out.shape = a.shape;
            out.shape.back() = w;
            const std::size_t rows = a.value.size() / n;
            out.value.resize(rows * w);
            for (std::size_t r = 0; r < rows; ++r)
                std::copy_n(a.value.begin() + static_cast<std::ptrdiff_t>(r * n + attrs.begin), w,
                            out.value.begin() + static_cast<std::ptrdiff_t>(r * w));
            break;
        }
        case Op::reshape: {
            expect_arity(1);
            const Node& a = in(0);
            if (numel(attrs.shape) != a.value.size())
                shape_error(op, "cannot reshape " + shape_str(a.shape) + " to " + shape_str(attrs.shape));
            out.shape = attrs.shape;
            out.value = a.value;
            break;
        }
        case Op::rfft:
        case Op::irfft: {
            expect_arity(1);
            const Node& a = in(0);
            const std::size_t n = last_extent(a.shape);
            if (a.shape.empty() || !fft::is_power_of_two(n))
                shape_error(op, "last extent must be a power of two, got " + shape_str(a.shape));
            out.shape = a.shape;
            out.value.resize(a.value.size());
            const std::size_t rows = a.value.size() / n;
            for (std::size_t r = 0; r < rows; ++r) {
                std::span<const double> src(a.value.data() + r * n, n);
                std::span<double> dst(out.value.data() + r * n, n);
                if (op == Op::rfft)
                    fft::rfft_packed(src, dst);
                else
                    fft::irfft_packed(src, dst);
            }
            break;
        }
        default:
            shape_error(op, "cannot be recorded directly");
    }
    return push(std::move(out));
}

Gradients Tape::backward(const Value& output) const {
    if (output.tape() != this) throw std::invalid_argument("backward: output belongs to a different tape");
    const Node& root = nodes_[output.id()];
    if (root.value.size() != 1)
        throw std::invalid_argument("backward: output must be scalar, got shape " + shape_str(root.shape));

    std::vector<std::vector<double>> g(output.id() + 1);
    g[output.id()] = {1.0};

    auto acc = [&](NodeId pid) -> std::vector<double>& {
        auto& v = g[pid];
        if (v.empty()) v.assign(nodes_[pid].value.size(), 0.0);
        return v;
    };

    for (std::size_t idx = output.id() + 1; idx-- > 0;) {
        const Node& n = nodes_[idx];
        if (g[idx].empty() || !n.requires_grad) continue;
        const std::vector<double>& go = g[idx];
        const auto& P = n.parents;

        if (is_unary(n.op)) {
            const Node& a = nodes_[P[0]];
            if (!a.requires_grad) continue;
            auto& ga = acc(P[0]);
            const double s = n.attrs.scalar;
            if (n.op == Op::scale) {
                for (std::size_t i = 0; i < go.size(); ++i) ga[i] += s * go[i];
            } else if (n.op == Op::tanh) {
                for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (1.0 - n.value[i] * n.value[i]);
            } else {
                for (std::size_t i = 0; i < go.size(); ++i)
                    ga[i] += go[i] * unary_derivative(n.op, a.value[i], n.value[i], s);
            }
            continue;
        }

        if (is_binary(n.op)) {
            const Node& a = nodes_[P[0]];
            const Node& b = nodes_[P[1]];
            std::vector<double>* ga = a.requires_grad ? &acc(P[0]) : nullptr;
            std::vector<double>* gb = b.requires_grad ? &acc(P[1]) : nullptr;
            detail::binary_backward(n.op, a.value, a.shape, b.value, b.shape, n.shape, go, ga, gb);
            continue;
        }

        switch (n.op) {
            case Op::matmul: {
                const Node& a = nodes_[P[0]];
                const Node& b = nodes_[P[1]];
                const std::size_t m = a.shape[0], k = a.shape[1], cols = b.shape[1];
                if (a.requires_grad) detail::matmul_grad_a(go.data(), b.value.data(), acc(P[0]).data(), m, k, cols);
                if (b.requires_grad) detail::matmul_grad_b(a.value.data(), go.data(), acc(P[1]).data(), m, k, cols);
                break;
            }
            case Op::conv1d: {
                const Node& x = nodes_[P[0]];
                const Node& w = nodes_[P[1]];
                const Node& bias = nodes_[P[2]];
                const std::size_t batch = x.shape[0], cin = x.shape[1], len = x.shape[2], cout = w.shape[0];
                detail::conv1d_backward(x.value.data(), w.value.data(), go.data(),
                                        x.requires_grad ? acc(P[0]).data() : nullptr,
                                        w.requires_grad ? acc(P[1]).data() : nullptr,
                                        bias.requires_grad ? acc(P[2]).data() : nullptr, batch, cin, cout, len);
                break;
            }
            case Op::maxpool1d: {
                if (!nodes_[P[0]].requires_grad) break;
                auto& ga = acc(P[0]);
                for (std::size_t j = 0; j < go.size(); ++j) ga[n.aux[j]] += go[j];
                break;
            }
            case Op::sum:
            case Op::mean: {
                const Node& a = nodes_[P[0]];
                if (!a.requires_grad) break;
                auto& ga = acc(P[0]);
                const double s = n.op == Op::mean ? go[0] / static_cast<double>(a.value.size()) : go[0];
                for (double& v : ga) v += s;
                break;
            }
            case Op::sum_squares: {
                const Node& a = nodes_[P[0]];
                if (!a.requires_grad) break;
                auto& ga = acc(P[0]);
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * a.value[i] * go[0];
                break;
            }
            case Op::sum_last:
            case Op::mean_last: {
                const Node& a = nodes_[P[0]];
                if (!a.requires_grad) break;
                auto& ga = acc(P[0]);
                const std::size_t w = a.shape.back();
                const double f = n.op == Op::mean_last ? 1.0 / static_cast<double>(w) : 1.0;
                for (std::size_t r = 0; r < go.size(); ++r)
                    for (std::size_t j = 0; j < w; ++j) ga[r * w + j] += f * go[r];
                break;
            }
            case Op::concat: {
                const std::size_t total = n.shape.back();
                const std::size_t rows = go.size() / total;
                std::size_t off = 0;
                for (NodeId pid : P) {
                    const Node& p = nodes_[pid];
                    const std::size_t w = last_extent(p.shape);
                    if (p.requires_grad) {
                        auto& gp = acc(pid);
                        for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t j = 0; j < w; ++j) gp[r * w + j] += go[r * total + off + j];
                    }
                    off += w;
                }
                break;
            }
            case Op::slice: {
                const Node& a = nodes_[P[0]];
                if (!a.requires_grad) break;
                auto& ga = acc(P[0]);
                const std::size_t width = a.shape.back();
                const std::size_t w = n.attrs.end - n.attrs.begin;
                const std::size_t rows = go.size() / w;
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < w; ++j) ga[r * width + n.attrs.begin + j] += go[r * w + j];
                break;
            }
            case Op::reshape: {
                if (!nodes_[P[0]].requires_grad) break;
                auto& ga = acc(P[0]);
                for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
                break;
            }
            case Op::rfft:
            case Op::irfft: {
                const Node& a = nodes_[P[0]];
                if (!a.requires_grad) break;
                auto& ga = acc(P[0]);
                const std::size_t len = a.shape.back();
                const std::size_t half = len / 2;
                const std::size_t rows = go.size() / len;
                std::vector<double> tmp(len), res(len);
                for (std::size_t r = 0; r < rows; ++r) {
                    std::copy_n(go.begin() + static_cast<std::ptrdiff_t>(r * len), len, tmp.begin());
                    if (n.op == Op::rfft) {
                        // adjoint of the forward DFT: n * irfft with interior modes halved
                        for (std::size_t k = 1; k < half; ++k) {
                            tmp[k] *= 0.5;
                            tmp[half + k] *= 0.5;
                        }
                        fft::irfft_packed(tmp, res);
                        for (std::size_t j = 0; j < len; ++j) ga[r * len + j] += static_cast<double>(len) * res[j];
                    } else {
                        // adjoint of the inverse DFT: rfft / n with interior modes doubled
                        fft::rfft_packed(tmp, res);
                        const double inv = 1.0 / static_cast<double>(len);
                        for (std::size_t j = 0; j < len; ++j) {
                            const bool interior = (j > 0 && j < half) || j > half;
                            ga[r * len + j] += (interior ? 2.0 : 1.0) * inv * res[j];
                        }
                    }
                }
                break;
            }
            default:
                break;
        }
    }
    return Gradients(std::move(g));
}

}  // namespace jpo::ad
