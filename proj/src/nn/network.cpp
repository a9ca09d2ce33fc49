#include "jpo/nn/network.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace jpo::nn {

using ad::Shape;
using ad::Value;

std::size_t NetSpec::encoded_inputs() const { return encoding_k > 0 ? 2 * encoding_k * inputs : inputs; }

void NetSpec::validate() const {
    if (outputs == 0) throw std::invalid_argument("NetSpec: outputs must be positive");
    for (auto w : hidden)
        if (w == 0) throw std::invalid_argument("NetSpec: hidden widths must be positive");
    for (auto w : conv_widths)
        if (w == 0) throw std::invalid_argument("NetSpec: conv widths must be positive");
    if (kind == NetKind::s2s) {
        if (inputs == 0) throw std::invalid_argument("NetSpec: s2s needs at least one input");
    } else {
        if (channels == 0 || grid_length == 0) throw std::invalid_argument("NetSpec: g2s needs a grid");
        const std::size_t div = std::size_t{1} << conv_widths.size();
        if (grid_length % div != 0)
            throw std::invalid_argument("NetSpec: grid length " + std::to_string(grid_length) +
                                        " not divisible by 2^" + std::to_string(conv_widths.size()));
    }
}

std::vector<LayerInfo> layer_table(const NetSpec& spec) {
    spec.validate();
    std::vector<LayerInfo> table;
    std::size_t offset = 0;
    auto add = [&](std::string name, Shape shape) {
        LayerInfo info{std::move(name), shape, offset, ad::numel(shape)};
        offset += info.count;
        table.push_back(std::move(info));
    };
    std::size_t width = 0;
    if (spec.kind == NetKind::g2s) {
        std::size_t cin = spec.channels, len = spec.grid_length;
        for (std::size_t i = 0; i < spec.conv_widths.size(); ++i) {
            const std::size_t cout = spec.conv_widths[i];
            const std::string tag = "conv" + std::to_string(i + 1);
            add(tag + ".weight", {cout, cin, 3});
            add(tag + ".bias", {cout});
            if (spec.normalize) {
                add(tag + ".norm_scale", {cout, 1});
                add(tag + ".norm_offset", {cout, 1});
            }
            cin = cout;
            len /= 2;
        }
        width = cin * len;
    } else {
        width = spec.encoded_inputs();
    }
    for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
        const std::string tag = "fc" + std::to_string(i + 1);
        add(tag + ".weight", {width, spec.hidden[i]});
        add(tag + ".bias", {spec.hidden[i]});
        if (spec.normalize) {
            add(tag + ".norm_scale", {spec.hidden[i]});
            add(tag + ".norm_offset", {spec.hidden[i]});
        }
        width = spec.hidden[i];
    }
    add("out.weight", {width, spec.outputs});
    add("out.bias", {spec.outputs});
    return table;
}

std::size_t param_count(const NetSpec& spec) {
    std::size_t n = 0;
    for (const auto& l : layer_table(spec)) n += l.count;
    return n;
}

std::uint64_t spec_hash(const NetSpec& spec) {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(spec.kind) + 1);
    auto mix = [&h](std::uint64_t v) { h = splitmix64(h ^ v); };
    mix(spec.inputs);
    mix(spec.grid_length);
    mix(spec.channels);
    for (auto w : spec.conv_widths) mix(w);
    mix(0xc0);
    for (auto w : spec.hidden) mix(w);
    mix(spec.encoding_k);
    mix(spec.outputs);
    mix(spec.normalize ? 1 : 0);
    return h;
}

NetParams net_init(const NetSpec& spec, CounterRng& rng) {
    const auto table = layer_table(spec);
    NetParams p;
    p.theta.assign(table.empty() ? 0 : table.back().offset + table.back().count, 0.0);
    std::size_t fan_in = 1;
    for (const auto& layer : table) {
        auto* dst = p.theta.data() + layer.offset;
        const bool is_weight = layer.name.ends_with(".weight");
        if (layer.name.ends_with(".norm_scale")) {
            for (std::size_t i = 0; i < layer.count; ++i) dst[i] = 1.0;
            continue;
        }
        if (layer.name.ends_with(".norm_offset")) continue;
        if (is_weight) fan_in = layer.shape.size() == 3 ? layer.shape[1] * layer.shape[2] : layer.shape[0];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < layer.count; ++i) dst[i] = rng.uniform(-bound, bound);
    }
    return p;
}

std::vector<double> encoding_frequencies(std::size_t k) {
    std::vector<double> f(k);
    for (std::size_t j = 0; j < k; ++j)
        f[j] = k == 1 ? std::numbers::pi : std::numbers::pi * (1.0 + 9.0 * static_cast<double>(j) / static_cast<double>(k - 1));
    return f;
}

Value positional_encode(const Value& raw, std::size_t k) {
    if (k == 0) throw std::invalid_argument("positional_encode: k must be >= 1");
    const auto& shape = raw.shape();
    if (shape.empty()) throw std::invalid_argument("positional_encode: input must have at least one axis");
    const std::size_t dim = shape.back();
    const auto freqs = encoding_frequencies(k);
    std::vector<Value> parts;
    parts.reserve(2 * k * dim);
    for (std::size_t r = 0; r < dim; ++r) {
        Value x = ad::slice(raw, r, r + 1);
        for (double f : freqs) parts.push_back(ad::sin(x * f));
        for (double f : freqs) parts.push_back(ad::cos(x * f));
    }
    return ad::concat(parts);
}

namespace {

struct Cursor {
    const std::vector<LayerInfo>& table;
    const Value& theta;
    std::size_t next = 0;

    Value take() {
        const LayerInfo& l = table.at(next++);
        return ad::reshape(ad::slice(theta, l.offset, l.offset + l.count), l.shape);
    }
};

// Per-channel statistics over every axis except `channel_axis`.
void channel_stats(const Value& v, std::size_t channel_axis, std::vector<double>& mean, std::vector<double>& inv_std) {
    const Shape& s = v.shape();
    const std::size_t channels = s[channel_axis];
    std::size_t inner = 1;
    for (std::size_t a = channel_axis + 1; a < s.size(); ++a) inner *= s[a];
    const std::size_t outer = v.size() / (channels * inner);
    mean.assign(channels, 0.0);
    std::vector<double> sq(channels, 0.0);
    const auto d = v.data();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t i = 0; i < inner; ++i) {
                const double x = d[(o * channels + c) * inner + i];
                mean[c] += x;
                sq[c] += x * x;
            }
    const double count = static_cast<double>(outer * inner);
    inv_std.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        mean[c] /= count;
        const double var = std::max(0.0, sq[c] / count - mean[c] * mean[c]);
        inv_std[c] = 1.0 / std::sqrt(var + 1e-5);
    }
}

Value forward_impl(const NetSpec& spec, const NetParams& params, const Value& theta, const Value& input,
                   NetParams* calib) {
    const auto table = layer_table(spec);
    const std::size_t total = table.back().offset + table.back().count;
    if (theta.shape() != Shape{total})
        throw std::invalid_argument("net_forward: parameter vector has shape " + ad::shape_str(theta.shape()) +
                                    ", expected (" + std::to_string(total) + ")");
    if (spec.normalize && !calib && !params.calibrated())
        throw std::invalid_argument("net_forward: normalization statistics missing; call calibrate first");
    ad::Tape& tape = *theta.tape();
    Cursor cur{table, theta};
    std::size_t norm_index = 0;

    auto normalize = [&](const Value& v, bool conv) {
        const Value scale = cur.take();
        const Value offset = cur.take();
        if (calib) {
            std::vector<double> m, is;
            channel_stats(v, 1, m, is);
            calib->norm_mean.push_back(m);
            calib->norm_inv_std.push_back(is);
        }
        const auto& src = calib ? *calib : params;
        const auto& m = src.norm_mean.at(norm_index);
        const auto& is = src.norm_inv_std.at(norm_index);
        ++norm_index;
        const Shape s = conv ? Shape{m.size(), 1} : Shape{m.size()};
        const Value centered = (v - tape.constant(m, s)) * tape.constant(is, s);
        return centered * scale + offset;
    };

    Value h = input;
    const std::size_t batch = input.shape().empty() ? 0 : input.shape()[0];
    if (spec.kind == NetKind::g2s) {
        if (input.shape() != Shape{batch, spec.channels, spec.grid_length})
            throw std::invalid_argument("input layer: expected (B, " + std::to_string(spec.channels) + ", " +
                                        std::to_string(spec.grid_length) + "), got " + ad::shape_str(input.shape()));
        for (std::size_t i = 0; i < spec.conv_widths.size(); ++i) {
            const Value w = cur.take();
            const Value b = cur.take();
            h = ad::conv1d(h, w, b);
            if (spec.normalize) h = normalize(h, true);
            h = ad::maxpool1d(ad::tanh(h));
        }
        h = ad::reshape(h, {batch, h.size() / std::max<std::size_t>(batch, 1)});
    } else {
        if (input.shape() != Shape{batch, spec.inputs})
            throw std::invalid_argument("input layer: expected (B, " + std::to_string(spec.inputs) + "), got " +
                                        ad::shape_str(input.shape()));
        if (spec.encoding_k > 0) h = positional_encode(h, spec.encoding_k);
    }
    for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
        const Value w = cur.take();
        const Value b = cur.take();
        h = ad::matmul(h, w) + b;
        if (spec.normalize) h = normalize(h, false);
        h = ad::tanh(h);
    }
    const Value w = cur.take();
    const Value b = cur.take();
    return ad::matmul(h, w) + b;
}

}  // namespace

Value net_forward(const NetSpec& spec, const NetParams& params, const Value& theta, const Value& input) {
    return forward_impl(spec, params, theta, input, nullptr);
}

void calibrate(const NetSpec& spec, NetParams& params, const std::vector<double>& input, const Shape& shape) {
    if (!spec.normalize) return;
    params.norm_mean.clear();
    params.norm_inv_std.clear();
    ad::Tape tape;
    const Value theta = tape.constant(params.theta, {params.theta.size()});
    const Value x = tape.constant(input, shape);
    NetParams stats;
    forward_impl(spec, params, theta, x, &stats);
    params.norm_mean = std::move(stats.norm_mean);
    params.norm_inv_std = std::move(stats.norm_inv_std);
}

std::vector<double> net_eval(const NetSpec& spec, const NetParams& params, const std::vector<double>& input,
                             const Shape& shape) {
    ad::Tape tape;
    const Value theta = tape.constant(params.theta, {params.theta.size()});
    const Value x = tape.constant(input, shape);
    const Value y = net_forward(spec, params, theta, x);
    return {y.data().begin(), y.data().end()};
}

NetSpec wavepacket_net() {
    NetSpec s;
    s.kind = NetKind::g2s;
    s.channels = 1;
    s.grid_length = 256;
    s.conv_widths = {16, 16, 16, 16, 16};
    s.hidden = {64, 32};
    s.outputs = 1;
    s.normalize = true;
    return s;
}

NetSpec billiards_net() {
    NetSpec s;
    s.kind = NetKind::s2s;
    s.inputs = 4;
    s.encoding_k = 4;
    s.hidden = {128, 128, 128};
    s.outputs = 2;
    return s;
}

NetSpec ks_net() {
    NetSpec s;
    s.kind = NetKind::g2s;
    s.channels = 2;
    s.grid_length = 128;
    s.conv_widths = {32, 32, 64, 64};
    s.hidden = {64, 64};
    s.outputs = 2;
    s.normalize = true;
    return s;
}

NetSpec arm_net() {
    NetSpec s;
    s.kind = NetKind::s2s;
    s.inputs = 2;
    s.hidden = {64, 64};
    s.outputs = 4;
    return s;
}

}  // namespace jpo::nn
