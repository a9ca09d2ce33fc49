#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace jpo {

/// Versioned binary container shared by problem sets, network parameters and
/// method results. Layout (little endian): "JPOC", u32 version, u32 kind,
/// u32 family, u64 n, u64 seed, u64 hash, u32 array count, then per array:
/// u32 name length, name bytes, u32 rank, u64 dims[rank], f64 data[].
struct NamedArray {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<double> data;
};

enum class PayloadKind : std::uint32_t { problem_set = 1, net_params = 2, method_result = 3 };

struct Container {
    static constexpr std::uint32_t format_version = 1;

    PayloadKind kind = PayloadKind::problem_set;
    std::uint32_t family = 0;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    std::uint64_t hash = 0;
    std::vector<NamedArray> arrays;

    void add(std::string name, std::vector<std::uint64_t> dims, std::vector<double> data);
    [[nodiscard]] const NamedArray& get(const std::string& name) const;
    [[nodiscard]] bool has(const std::string& name) const;
};

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path);

/// Row-major packing helpers for ragged-free per-example arrays.
NamedArray pack_rows(std::string name, const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> unpack_rows(const NamedArray& a);

}  // namespace jpo
