#pragma once

#include <optional>
#include <vector>

#include "jpo/autodiff/tape.hpp"

namespace jpo::ad::detail {

std::optional<Shape> broadcast_shapes(const Shape& a, const Shape& b);

void binary_forward(Op op, const std::vector<double>& a, const Shape& as, const std::vector<double>& b,
                    const Shape& bs, const Shape& out_shape, std::vector<double>& out);

// ga / gb may be null when the operand does not need a gradient
void binary_backward(Op op, const std::vector<double>& a, const Shape& as, const std::vector<double>& b,
                     const Shape& bs, const Shape& out_shape, const std::vector<double>& go, std::vector<double>* ga,
                     std::vector<double>* gb);

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void matmul_grad_a(const double* gc, const double* b, double* ga, std::size_t m, std::size_t k, std::size_t n);
void matmul_grad_b(const double* a, const double* gc, double* gb, std::size_t m, std::size_t k, std::size_t n);

void conv1d_forward(const double* x, const double* w, const double* bias, double* out, std::size_t batch,
                    std::size_t cin, std::size_t cout, std::size_t len);
void conv1d_backward(const double* x, const double* w, const double* go, double* gx, double* gw, double* gbias,
                     std::size_t batch, std::size_t cin, std::size_t cout, std::size_t len);

}  // namespace jpo::ad::detail
