#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morphforge/error.hpp"

namespace morphforge::tensorfile {

// Named float tensor as stored in the binary container. Values are carried
// as float (the on-disk precision) so that save/load round-trips bit-exactly.
struct Tensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    std::size_t count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

// Container layout (little-endian): magic "CNWT1", u32 tensor count; per
// tensor u16 name length, name bytes, u8 rank, rank u32 dims, then raw
// 32-bit float data in row-major order.
void save_tensors(const std::vector<Tensor>& tensors, const std::string& path);
std::vector<Tensor> load_tensors(const std::string& path);

// Lookup helper; throws DecodeError when the name is absent.
const Tensor& find(const std::vector<Tensor>& tensors, const std::string& name);

}  // namespace morphforge::tensorfile
