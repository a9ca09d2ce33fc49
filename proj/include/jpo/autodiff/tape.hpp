#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

namespace jpo::ad {

using Shape = std::vector<std::size_t>;
using NodeId = std::uint32_t;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

enum class Op : std::uint8_t {
    leaf,
    constant,
    add,
    sub,
    mul,
    div,
    neg,
    sin,
    cos,
    tanh,
    exp,
    log,
    abs,
    power,
    softplus,
    scale,
    matmul,
    conv1d,
    maxpool1d,
    sum,
    mean,
    sum_last,
    mean_last,
    sum_squares,
    concat,
    slice,
    reshape,
    rfft,
    irfft,
};

const char* op_name(Op op);

/// Per-op extra arguments. Only the fields relevant to an op are read.
struct Attributes {
    double scalar = 0.0;     // power exponent, softplus sharpness, scale factor
    std::size_t begin = 0;   // slice along the last axis: [begin, end)
    std::size_t end = 0;
    Shape shape;             // reshape target
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
class Value {
public:
    Value() = default;
    Value(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

    [[nodiscard]] const Shape& shape() const;
    [[nodiscard]] std::span<const double> data() const;
    [[nodiscard]] std::size_t size() const { return data().size(); }
    [[nodiscard]] double item() const;
    [[nodiscard]] double operator[](std::size_t i) const { return data()[i]; }
    [[nodiscard]] NodeId id() const { return id_; }
    [[nodiscard]] Tape* tape() const { return tape_; }
    [[nodiscard]] bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    NodeId id_ = 0;
};

struct Node {
    Op op = Op::leaf;
    std::vector<NodeId> parents;
    Shape shape;
    std::vector<double> value;
    Attributes attrs;
    std::vector<std::uint32_t> aux;  // maxpool argmax
    bool requires_grad = false;
};

/// Gradients of one backward sweep, indexed by node id.
class Gradients {
public:
    Gradients() = default;
    explicit Gradients(std::vector<std::vector<double>> g) : grads_(std::move(g)) {}

    /// Gradient with respect to a node. Nodes that the output does not depend
    /// on get a zero array of the node's size.
    [[nodiscard]] std::vector<double> of(const Value& v) const;

private:
    std::vector<std::vector<double>> grads_;
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Differentiable input.
    Value variable(std::vector<double> data, Shape shape);
    Value variable(double x) { return variable({x}, {}); }
    /// Non-differentiable input.
    Value constant(std::vector<double> data, Shape shape);
    Value constant(double x) { return constant({x}, {}); }

    /// Appends one node computing `op` on `operands`. Throws
    /// std::invalid_argument on nonconforming shapes.
    Value record(Op op, std::span<const Value> operands, const Attributes& attrs = {});
    Value record(Op op, std::initializer_list<Value> operands, const Attributes& attrs = {});

    /// Reverse sweep from a scalar output.
    [[nodiscard]] Gradients backward(const Value& output) const;

    [[nodiscard]] const Node& node(NodeId id) const { return nodes_[id]; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

private:
    Value push(Node node);

    // deque keeps element references stable while the tape grows
    std::deque<Node> nodes_;
};

}  // namespace jpo::ad
