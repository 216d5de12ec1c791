#include "morphforge/tensorfile.hpp"

#include <cstring>
#include <fstream>
#include <limits>

namespace morphforge::tensorfile {

namespace {

constexpr char kMagic[5] = {'C', 'N', 'W', 'T', '1'};

// Serialization is explicitly little-endian regardless of host order.
template <typename T>
void put_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!in) throw DecodeError("tensor container: truncated");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

void put_f32(std::ostream& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_le(out, bits);
}

float get_f32(std::istream& in) {
    std::uint32_t bits = get_le<std::uint32_t>(in);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

void save_tensors(const std::vector<Tensor>& tensors, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, 5);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        if (t.name.size() > std::numeric_limits<std::uint16_t>::max())
            throw InvalidArgument("tensor name too long: " + t.name);
        if (t.values.size() != t.count())
            throw InvalidArgument("tensor value count does not match dims: " + t.name);
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.dims.size()));
        for (auto d : t.dims) put_le<std::uint32_t>(out, d);
        for (float v : t.values) put_f32(out, v);
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<Tensor> load_tensors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, kMagic, 5) != 0)
        throw DecodeError("tensor container: bad magic in " + path);
    const std::uint32_t count = get_le<std::uint32_t>(in);
    std::vector<Tensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Tensor t;
        const std::uint16_t namelen = get_le<std::uint16_t>(in);
        t.name.resize(namelen);
        in.read(t.name.data(), namelen);
        if (!in) throw DecodeError("tensor container: truncated name in " + path);
        const std::uint8_t rank = get_le<std::uint8_t>(in);
        t.dims.resize(rank);
        for (auto& d : t.dims) d = get_le<std::uint32_t>(in);
        t.values.resize(t.count());
        for (auto& v : t.values) v = get_f32(in);
        tensors.push_back(std::move(t));
    }
    return tensors;
}

const Tensor& find(const std::vector<Tensor>& tensors, const std::string& name) {
    for (const auto& t : tensors)
        if (t.name == name) return t;
    throw DecodeError("tensor container: missing tensor " + name);
}

}  // namespace morphforge::tensorfile
