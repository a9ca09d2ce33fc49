#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "jpo/autodiff/ops.hpp"
#include "jpo/rng.hpp"

namespace jpo::nn {

enum class NetKind { s2s, g2s };

/// Architecture description. s2s: (B, inputs) -> (B, outputs), optionally
/// positional-encoded. g2s: (B, channels, grid_length) through conv blocks
/// (conv k=3, [norm], tanh, maxpool 2), flattened, then hidden FC layers.
struct NetSpec {
    NetKind kind = NetKind::s2s;
    std::size_t inputs = 1;
    std::size_t grid_length = 0;
    std::size_t channels = 1;
    std::vector<std::size_t> conv_widths;
    std::vector<std::size_t> hidden;
    std::size_t encoding_k = 0;
    std::size_t outputs = 1;
    /// Scale/offset normalization after every conv and hidden FC layer.
    bool normalize = false;

    /// Width of the first dense layer's input for s2s nets.
    [[nodiscard]] std::size_t encoded_inputs() const;
    void validate() const;
};

struct LayerInfo {
    std::string name;
    ad::Shape shape;
    std::size_t offset = 0;
    std::size_t count = 0;
};

/// Ordered parameter blocks of a spec; offsets index into the flat vector.
std::vector<LayerInfo> layer_table(const NetSpec& spec);
std::size_t param_count(const NetSpec& spec);
std::uint64_t spec_hash(const NetSpec& spec);

struct NetParams {
    std::vector<double> theta;
    /// Fixed per-channel statistics of each normalization layer, filled by
    /// calibrate() from the first batch. Empty until then.
    std::vector<std::vector<double>> norm_mean;
    std::vector<std::vector<double>> norm_inv_std;

    [[nodiscard]] bool calibrated() const { return !norm_mean.empty(); }
};

/// Fan-in uniform weights and biases, unit scales, zero offsets.
NetParams net_init(const NetSpec& spec, CounterRng& rng);

/// Encodes each scalar as [sin(f_1 x) .. sin(f_k x), cos(f_1 x) .. cos(f_k x)]
/// with f_j spanning π to 10π.
ad::Value positional_encode(const ad::Value& raw, std::size_t k);
std::vector<double> encoding_frequencies(std::size_t k);

/// Forward pass on the tape of `theta`. `theta` has shape (P). For s2s the
/// input is (B, inputs); for g2s it is (B, channels, grid_length).
ad::Value net_forward(const NetSpec& spec, const NetParams& params, const ad::Value& theta, const ad::Value& input);

/// Records normalization statistics from a batch (no-op for specs without
/// normalization).
void calibrate(const NetSpec& spec, NetParams& params, const std::vector<double>& input, const ad::Shape& shape);

/// Convenience evaluation outside of any training tape.
std::vector<double> net_eval(const NetSpec& spec, const NetParams& params, const std::vector<double>& input,
                             const ad::Shape& shape);

/// Default architectures of the four problem families.
NetSpec wavepacket_net();
NetSpec billiards_net();
NetSpec ks_net();
NetSpec arm_net();

}  // namespace jpo::nn
