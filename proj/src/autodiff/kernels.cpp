#include "kernels.hpp"

#include <cstdint>

namespace jpo::ad::detail {

std::optional<Shape> broadcast_shapes(const Shape& a, const Shape& b) {
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank, 1);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (da != db && da != 1 && db != 1) return std::nullopt;
        out[i] = da == 1 ? db : da;
    }
    return out;
}

namespace {

// Offset into an operand of shape `in` for every element of `out`.
std::vector<std::uint32_t> offsets(const Shape& out, const Shape& in) {
    const std::size_t rank = out.size();
    std::vector<std::size_t> stride(rank, 0);
    std::size_t s = 1;
    for (std::size_t i = rank; i-- > 0;) {
        const std::size_t k = i + in.size();
        if (k < rank) break;
        const std::size_t d = in[k - rank];
        stride[i] = d == 1 ? 0 : s;
        s *= d;
    }
    const std::size_t total = numel(out);
    std::vector<std::uint32_t> off(total);
    std::vector<std::size_t> idx(rank, 0);
    std::size_t cur = 0;
    for (std::size_t t = 0; t < total; ++t) {
        off[t] = static_cast<std::uint32_t>(cur);
        for (std::size_t i = rank; i-- > 0;) {
            ++idx[i];
            cur += stride[i];
            if (idx[i] < out[i]) break;
            cur -= stride[i] * idx[i];
            idx[i] = 0;
        }
    }
    return off;
}

template <class F>
void apply(const std::vector<double>& a, const Shape& as, const std::vector<double>& b, const Shape& bs,
           const Shape& os, std::vector<double>& out, F f) {
    const std::size_t n = numel(os);
    out.resize(n);
    if (as == bs) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
    } else if (b.size() == 1 && a.size() == n) {
        const double bv = b[0];
        for (std::size_t i = 0; i < n; ++i) out[i] = f(a[i], bv);
    } else if (a.size() == 1 && b.size() == n) {
        const double av = a[0];
        for (std::size_t i = 0; i < n; ++i) out[i] = f(av, b[i]);
    } else {
        const auto ia = offsets(os, as);
        const auto ib = offsets(os, bs);
        for (std::size_t i = 0; i < n; ++i) out[i] = f(a[ia[i]], b[ib[i]]);
    }
}

}  // namespace

void binary_forward(Op op, const std::vector<double>& a, const Shape& as, const std::vector<double>& b,
                    const Shape& bs, const Shape& os, std::vector<double>& out) {
    switch (op) {
        case Op::add: apply(a, as, b, bs, os, out, [](double x, double y) { return x + y; }); break;
        case Op::sub: apply(a, as, b, bs, os, out, [](double x, double y) { return x - y; }); break;
        case Op::mul: apply(a, as, b, bs, os, out, [](double x, double y) { return x * y; }); break;
        case Op::div: apply(a, as, b, bs, os, out, [](double x, double y) { return x / y; }); break;
        default: break;
    }
}

void binary_backward(Op op, const std::vector<double>& a, const Shape& as, const std::vector<double>& b,
                     const Shape& bs, const Shape& os, const std::vector<double>& go, std::vector<double>* ga,
                     std::vector<double>* gb) {
    const std::size_t n = go.size();
    const bool same = as == bs;
    std::vector<std::uint32_t> ia, ib;
    if (!same) {
        ia = offsets(os, as);
        ib = offsets(os, bs);
    }
    auto A = [&](std::size_t i) { return same ? i : static_cast<std::size_t>(ia[i]); };
    auto B = [&](std::size_t i) { return same ? i : static_cast<std::size_t>(ib[i]); };

    switch (op) {
        case Op::add:
        case Op::sub: {
            const double sb = op == Op::add ? 1.0 : -1.0;
            if (ga)
                for (std::size_t i = 0; i < n; ++i) (*ga)[A(i)] += go[i];
            if (gb)
                for (std::size_t i = 0; i < n; ++i) (*gb)[B(i)] += sb * go[i];
            break;
        }
        case Op::mul: {
            if (ga)
                for (std::size_t i = 0; i < n; ++i) (*ga)[A(i)] += go[i] * b[B(i)];
            if (gb)
                for (std::size_t i = 0; i < n; ++i) (*gb)[B(i)] += go[i] * a[A(i)];
            break;
        }
        case Op::div: {
            if (ga)
                for (std::size_t i = 0; i < n; ++i) (*ga)[A(i)] += go[i] / b[B(i)];
            if (gb)
                for (std::size_t i = 0; i < n; ++i) {
                    const double bv = b[B(i)];
                    (*gb)[B(i)] -= go[i] * a[A(i)] / (bv * bv);
                }
            break;
        }
        default: break;
    }
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void matmul_grad_a(const double* gc, const double* b, double* ga, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* gi = gc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
            ga[i * k + p] += acc;
        }
    }
}

void matmul_grad_b(const double* a, const double* gc, double* gb, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* gi = gc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            double* gp = gb + p * n;
            for (std::size_t j = 0; j < n; ++j) gp[j] += av * gi[j];
        }
    }
}

void conv1d_forward(const double* x, const double* w, const double* bias, double* out, std::size_t batch,
                    std::size_t cin, std::size_t cout, std::size_t len) {
    for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t o = 0; o < cout; ++o) {
            double* row = out + (bi * cout + o) * len;
            for (std::size_t l = 0; l < len; ++l) row[l] = bias[o];
            for (std::size_t i = 0; i < cin; ++i) {
                const double* xr = x + (bi * cin + i) * len;
                const double* wk = w + (o * cin + i) * 3;
                const double w0 = wk[0], w1 = wk[1], w2 = wk[2];
                for (std::size_t l = 1; l < len; ++l) row[l] += w0 * xr[l - 1];
                for (std::size_t l = 0; l < len; ++l) row[l] += w1 * xr[l];
                for (std::size_t l = 0; l + 1 < len; ++l) row[l] += w2 * xr[l + 1];
            }
        }
    }
}

void conv1d_backward(const double* x, const double* w, const double* go, double* gx, double* gw, double* gbias,
                     std::size_t batch, std::size_t cin, std::size_t cout, std::size_t len) {
    for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t o = 0; o < cout; ++o) {
            const double* g = go + (bi * cout + o) * len;
            if (gbias) {
                double s = 0.0;
                for (std::size_t l = 0; l < len; ++l) s += g[l];
                gbias[o] += s;
            }
            for (std::size_t i = 0; i < cin; ++i) {
                const double* xr = x + (bi * cin + i) * len;
                const double* wk = w + (o * cin + i) * 3;
                if (gx) {
                    double* gxr = gx + (bi * cin + i) * len;
                    const double w0 = wk[0], w1 = wk[1], w2 = wk[2];
                    for (std::size_t l = 1; l < len; ++l) gxr[l - 1] += w0 * g[l];
                    for (std::size_t l = 0; l < len; ++l) gxr[l] += w1 * g[l];
                    for (std::size_t l = 0; l + 1 < len; ++l) gxr[l + 1] += w2 * g[l];
                }
                if (gw) {
                    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
                    for (std::size_t l = 1; l < len; ++l) s0 += g[l] * xr[l - 1];
                    for (std::size_t l = 0; l < len; ++l) s1 += g[l] * xr[l];
                    for (std::size_t l = 0; l + 1 < len; ++l) s2 += g[l] * xr[l + 1];
                    double* gwk = gw + (o * cin + i) * 3;
                    gwk[0] += s0;
                    gwk[1] += s1;
                    gwk[2] += s2;
                }
            }
        }
    }
}

}  // namespace jpo::ad::detail
