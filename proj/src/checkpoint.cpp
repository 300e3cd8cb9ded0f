#include "ndvad/checkpoint.hpp"

#include "ndvad/binio.hpp"

namespace ndvad {

void save_ndck(const std::string& path, const ParamSet& params) {
  ByteWriter w;
  w.str("NDCK");
  w.u16(kNdckVersion);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    if (name.size() > 0xffff) throw ContractError("ndck: parameter name too long: " + name);
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.str(name);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    w.u8(static_cast<std::uint8_t>(t.dtype()));
    if (t.dtype() == DType::F32) {
      for (double v : t.data()) w.f32(static_cast<float>(v));
    } else {
      for (double v : t.data()) w.f64(v);
    }
  }
  w.write_file(path);
}

ParamSet load_ndck(const std::string& path) {
  ByteReader r = ByteReader::from_file(path);
  if (r.str(4) != "NDCK") r.fail("bad magic, expected 'NDCK'");
  std::uint16_t version = r.u16();
  if (version != kNdckVersion) r.fail("unsupported version " + std::to_string(version));
  std::uint32_t count = r.u32();
  ParamSet params;
  for (std::uint32_t e = 0; e < count; ++e) {
    std::uint16_t name_len = r.u16();
    std::string name = r.str(name_len);
    std::uint8_t rank = r.u8();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::int64_t>(r.u32());
    std::uint8_t dtag = r.u8();
    if (dtag != static_cast<std::uint8_t>(DType::F32) &&
        dtag != static_cast<std::uint8_t>(DType::F64)) {
      r.fail("unknown dtype tag " + std::to_string(dtag));
    }
    DType dtype = static_cast<DType>(dtag);
    std::int64_t n = shape_numel(shape);
    std::vector<double> data(static_cast<std::size_t>(n));
    for (auto& v : data) v = dtype == DType::F32 ? static_cast<double>(r.f32()) : r.f64();
    if (params.count(name)) r.fail("duplicate entry '" + name + "'");
    params.emplace(std::move(name), Tensor::from(std::move(data), std::move(shape), dtype));
  }
  if (!r.at_end()) r.fail("trailing bytes after last entry");
  return params;
}

}  // namespace ndvad
