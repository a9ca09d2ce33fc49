#include "jpo/container.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace jpo {

void Container::add(std::string name, std::vector<std::uint64_t> dims, std::vector<double> data) {
    std::uint64_t count = 1;
    for (auto d : dims) count *= d;
    if (count != data.size())
        throw std::invalid_argument("container: array '" + name + "' dims do not match its data length");
    arrays.push_back({std::move(name), std::move(dims), std::move(data)});
}

const NamedArray& Container::get(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return a;
    throw std::out_of_range("container: no array named '" + name + "'");
}

bool Container::has(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return true;
    return false;
}

namespace {

template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get_value(std::ifstream& in, const std::string& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("container: truncated file " + path);
    return v;
}

}  // namespace

void write_container(const std::string& path, const Container& c) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("container: cannot open " + path + " for writing");
    out.write("JPOC", 4);
    put<std::uint32_t>(out, Container::format_version);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.kind));
    put<std::uint32_t>(out, c.family);
    put<std::uint64_t>(out, c.n);
    put<std::uint64_t>(out, c.seed);
    put<std::uint64_t>(out, c.hash);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.arrays.size()));
    for (const auto& a : c.arrays) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
        out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(a.dims.size()));
        for (auto d : a.dims) put<std::uint64_t>(out, d);
        out.write(reinterpret_cast<const char*>(a.data.data()), static_cast<std::streamsize>(a.data.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("container: write failed for " + path);
}

Container read_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("container: cannot open " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "JPOC", 4) != 0)
        throw std::runtime_error("container: " + path + " is not a container file");
    const auto version = get_value<std::uint32_t>(in, path);
    if (version != Container::format_version)
        throw std::runtime_error("container: unsupported format version " + std::to_string(version));
    Container c;
    c.kind = static_cast<PayloadKind>(get_value<std::uint32_t>(in, path));
    c.family = get_value<std::uint32_t>(in, path);
    c.n = get_value<std::uint64_t>(in, path);
    c.seed = get_value<std::uint64_t>(in, path);
    c.hash = get_value<std::uint64_t>(in, path);
    const auto count = get_value<std::uint32_t>(in, path);
    for (std::uint32_t k = 0; k < count; ++k) {
        NamedArray a;
        a.name.resize(get_value<std::uint32_t>(in, path));
        if (!in.read(a.name.data(), static_cast<std::streamsize>(a.name.size())))
            throw std::runtime_error("container: truncated file " + path);
        const auto rank = get_value<std::uint32_t>(in, path);
        std::uint64_t numel = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            a.dims.push_back(get_value<std::uint64_t>(in, path));
            numel *= a.dims.back();
        }
        a.data.resize(numel);
        if (!in.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(numel * sizeof(double))))
            throw std::runtime_error("container: truncated file " + path);
        c.arrays.push_back(std::move(a));
    }
    return c;
}

NamedArray pack_rows(std::string name, const std::vector<std::vector<double>>& rows) {
    const std::size_t width = rows.empty() ? 0 : rows.front().size();
    NamedArray a{std::move(name), {rows.size(), width}, {}};
    a.data.reserve(rows.size() * width);
    for (const auto& r : rows) {
        if (r.size() != width) throw std::invalid_argument("pack_rows: ragged rows in '" + a.name + "'");
        a.data.insert(a.data.end(), r.begin(), r.end());
    }
    return a;
}

std::vector<std::vector<double>> unpack_rows(const NamedArray& a) {
    if (a.dims.size() != 2) throw std::invalid_argument("unpack_rows: '" + a.name + "' is not rank 2");
    std::vector<std::vector<double>> rows(a.dims[0]);
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i].assign(a.data.begin() + static_cast<std::ptrdiff_t>(i * a.dims[1]),
                       a.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * a.dims[1]));
    return rows;
}

}  // namespace jpo
