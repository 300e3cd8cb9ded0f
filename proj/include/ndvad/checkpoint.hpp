#pragma once

#include <string>

#include "ndvad/tensor.hpp"

namespace ndvad {

// Named-tensor checkpoint container (magic "NDCK"). Layout:
//   "NDCK"  version:u16  count:u32
//   per entry: name_len:u16  name:utf8  rank:u8  dims:u32*rank  dtype:u8  raw LE values
// F32 entries are stored as 4-byte floats, F64 as 8-byte doubles; round-trips
// are bit-exact.
inline constexpr std::uint16_t kNdckVersion = 1;

void save_ndck(const std::string& path, const ParamSet& params);
ParamSet load_ndck(const std::string& path);

}  // namespace ndvad
