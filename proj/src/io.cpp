#include "sif/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "array format is little-endian; byte swapping is not implemented");

namespace sif::io {

namespace {
constexpr char kMagic[8] = {'S', 'I', 'F', 'A', 'R', 'R', '1', '\0'};
}

void write_array(const std::string& path, std::span<const double> data,
                 std::span<const std::int64_t> shape) {
    std::int64_t expect = 1;
    for (auto s : shape) {
        if (s < 0) throw std::invalid_argument("write_array: negative extent");
        expect *= s;
    }
    if (expect != static_cast<std::int64_t>(data.size()))
        throw std::invalid_argument("write_array: shape does not match data size");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("write_array: cannot open " + path);
    out.write(kMagic, 8);
    const std::uint32_t version = 1;
    const std::uint32_t ndim = static_cast<std::uint32_t>(shape.size());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&ndim), 4);
    for (auto s : shape) {
        const std::uint64_t u = static_cast<std::uint64_t>(s);
        out.write(reinterpret_cast<const char*>(&u), 8);
    }
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!out) throw std::invalid_argument("write_array: write failed for " + path);
}

Array read_array(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("read_array: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::invalid_argument("read_array: bad magic in " + path);
    std::uint32_t version = 0, ndim = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&ndim), 4);
    if (!in || version != 1)
        throw std::invalid_argument("read_array: unsupported version in " + path);
    if (ndim > 16) throw std::invalid_argument("read_array: implausible rank");
    Array arr;
    arr.shape.resize(ndim);
    std::int64_t count = 1;
    for (auto& s : arr.shape) {
        std::uint64_t u = 0;
        in.read(reinterpret_cast<char*>(&u), 8);
        s = static_cast<std::int64_t>(u);
        count *= s;
    }
    if (!in || count < 0) throw std::invalid_argument("read_array: bad shape in " + path);
    arr.data.resize(static_cast<std::size_t>(count));
    in.read(reinterpret_cast<char*>(arr.data.data()),
            static_cast<std::streamsize>(arr.data.size() * sizeof(double)));
    if (!in) throw std::invalid_argument("read_array: truncated data in " + path);
    return arr;
}

std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("write_text_file: cannot open " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::invalid_argument("write_text_file: write failed for " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("read_text_file: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace sif::io
