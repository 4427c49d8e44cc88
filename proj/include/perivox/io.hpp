#pragma once

// Volume file I/O. Two formats:
//  - raw voxel bytes (little-endian, z-major) + JSON sidecar at <path>.json
//    holding {dims, spacing_um, order:"zyx", dtype}; data optionally gzipped
//  - NIfTI-1 (.nii / .nii.gz), single channel, for interoperability with
//    segmentation-model block outputs
// Reads go through zlib, which passes uncompressed files straight through.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include <json.hpp>

#include "perivox/errors.hpp"
#include "perivox/volume.hpp"

namespace perivox {

namespace detail {

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes;
  std::uint8_t buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) bytes.insert(bytes.end(), buf, buf + n);
  const bool bad = n < 0;
  gzclose(f);
  if (bad) throw IoError("read error in " + path);
  return bytes;
}

inline void write_file_bytes(const std::string& path, const void* data, std::size_t size,
                             bool gzip) {
  if (gzip) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open " + path + " for writing");
    const std::uint8_t* p = static_cast<const std::uint8_t*>(data);
    std::size_t left = size;
    while (left > 0) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(left, 1u << 28));
      if (gzwrite(f, p, chunk) != static_cast<int>(chunk)) {
        gzclose(f);
        throw IoError("write error in " + path);
      }
      p += chunk;
      left -= chunk;
    }
    gzclose(f);
  } else {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!f) throw IoError("write error in " + path);
  }
}

// ---- NIfTI-1 ----

struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope, scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must pack to 348 bytes");

enum NiftiDatatype : std::int16_t {
  kDtUint8 = 2,
  kDtInt16 = 4,
  kDtInt32 = 8,
  kDtFloat32 = 16,
  kDtFloat64 = 64,
  kDtUint16 = 512,
};

template <typename T>
void byteswap_inplace(T& value) {
  auto* p = reinterpret_cast<std::uint8_t*>(&value);
  for (std::size_t i = 0, j = sizeof(T) - 1; i < j; ++i, --j) std::swap(p[i], p[j]);
}

inline void byteswap_header(Nifti1Header& h) {
  byteswap_inplace(h.sizeof_hdr);
  for (auto& d : h.dim) byteswap_inplace(d);
  byteswap_inplace(h.datatype);
  byteswap_inplace(h.bitpix);
  for (auto& p : h.pixdim) byteswap_inplace(p);
  byteswap_inplace(h.vox_offset);
  byteswap_inplace(h.scl_slope);
  byteswap_inplace(h.scl_inter);
}

inline double nifti_unit_to_um(char xyzt_units) {
  switch (xyzt_units & 0x07) {
    case 1: return 1e6;  // meters
    case 2: return 1e3;  // millimeters
    case 3: return 1.0;  // micrometers
    default: return 1.0; // unspecified: assume micrometers
  }
}

struct RawNifti {
  Dims dims;
  Spacing spacing;
  std::int16_t datatype;
  std::vector<std::uint8_t> voxels; // raw bytes, native order after swap
  bool swapped;
};

inline RawNifti read_nifti(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < sizeof(Nifti1Header))
    throw DataError("malformed NIfTI header (file too small): " + path);
  Nifti1Header h;
  std::memcpy(&h, bytes.data(), sizeof(h));
  bool swapped = false;
  if (h.sizeof_hdr != 348) {
    byteswap_header(h);
    swapped = true;
    if (h.sizeof_hdr != 348) throw DataError("malformed NIfTI header: " + path);
  }
  if (std::strncmp(h.magic, "n+1", 3) != 0 && std::strncmp(h.magic, "ni1", 3) != 0)
    throw DataError("missing NIfTI magic: " + path);
  if (h.dim[0] < 1 || h.dim[0] > 7) throw DataError("bad NIfTI dim[0]: " + path);
  for (int a = static_cast<int>(h.dim[0]); a >= 4; --a)
    if (h.dim[a] > 1) throw DataError("NIfTI volume has >3 non-trivial dimensions: " + path);

  RawNifti out;
  out.dims = {h.dim[1], std::max<std::int16_t>(h.dim[2], 1), std::max<std::int16_t>(h.dim[3], 1)};
  const double to_um = nifti_unit_to_um(h.xyzt_units);
  out.spacing = {h.pixdim[1] * to_um, h.pixdim[2] * to_um, h.pixdim[3] * to_um};
  for (int a = 0; a < 3; ++a) {
    if (out.dims[a] < 1) throw DataError("NIfTI dims missing or invalid: " + path);
    if (!(out.spacing[a] > 0)) throw DataError("NIfTI spacing missing or invalid: " + path);
  }
  out.datatype = h.datatype;
  out.swapped = swapped;

  std::size_t elem = 0;
  switch (h.datatype) {
    case kDtUint8: elem = 1; break;
    case kDtInt16:
    case kDtUint16: elem = 2; break;
    case kDtInt32:
    case kDtFloat32: elem = 4; break;
    case kDtFloat64: elem = 8; break;
    default: throw DataError("unsupported NIfTI datatype " + std::to_string(h.datatype));
  }
  const std::size_t offset = static_cast<std::size_t>(h.vox_offset);
  const std::size_t need = voxel_count(out.dims) * elem;
  if (offset + need > bytes.size())
    throw DataError("NIfTI byte count mismatch in " + path + ": need " + std::to_string(need) +
                    " voxel bytes");
  out.voxels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                    bytes.begin() + static_cast<std::ptrdiff_t>(offset + need));
  if (swapped && elem > 1) {
    for (std::size_t i = 0; i < out.voxels.size(); i += elem)
      for (std::size_t a = 0, b = elem - 1; a < b; ++a, --b)
        std::swap(out.voxels[i + a], out.voxels[i + b]);
  }
  return out;
}

template <typename Out, typename In>
void convert_voxels(const std::vector<std::uint8_t>& raw, std::vector<Out>& out, bool as_binary) {
  const std::size_t n = raw.size() / sizeof(In);
  out.resize(n);
  const In* p = reinterpret_cast<const In*>(raw.data());
  if (as_binary) {
    for (std::size_t i = 0; i < n; ++i) out[i] = p[i] != In{} ? Out{1} : Out{0};
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<Out>(p[i]);
  }
}

template <typename Out>
void convert_by_dtype(std::int16_t datatype, const std::vector<std::uint8_t>& raw,
                      std::vector<Out>& out, bool as_binary) {
  switch (datatype) {
    case kDtUint8: convert_voxels<Out, std::uint8_t>(raw, out, as_binary); break;
    case kDtInt16: convert_voxels<Out, std::int16_t>(raw, out, as_binary); break;
    case kDtUint16: convert_voxels<Out, std::uint16_t>(raw, out, as_binary); break;
    case kDtInt32: convert_voxels<Out, std::int32_t>(raw, out, as_binary); break;
    case kDtFloat32: convert_voxels<Out, float>(raw, out, as_binary); break;
    case kDtFloat64: convert_voxels<Out, double>(raw, out, as_binary); break;
    default: throw DataError("unsupported datatype");
  }
}

inline void write_nifti(const std::string& path, const Dims& dims, const Spacing& spacing,
                        std::int16_t datatype, std::int16_t bitpix, const void* voxels,
                        std::size_t voxel_bytes) {
  Nifti1Header h;
  std::memset(&h, 0, sizeof(h));
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  h.dim[1] = static_cast<std::int16_t>(dims[0]);
  h.dim[2] = static_cast<std::int16_t>(dims[1]);
  h.dim[3] = static_cast<std::int16_t>(dims[2]);
  for (int a = 4; a < 8; ++a) h.dim[a] = 1;
  h.datatype = datatype;
  h.bitpix = bitpix;
  h.pixdim[0] = 1.0f;
  h.pixdim[1] = static_cast<float>(spacing[0]);
  h.pixdim[2] = static_cast<float>(spacing[1]);
  h.pixdim[3] = static_cast<float>(spacing[2]);
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.xyzt_units = 3; // spatial unit: micrometer
  h.sform_code = 1;
  h.srow_x[0] = static_cast<float>(spacing[0]);
  h.srow_y[1] = static_cast<float>(spacing[1]);
  h.srow_z[2] = static_cast<float>(spacing[2]);
  std::memcpy(h.magic, "n+1", 4);

  std::vector<std::uint8_t> bytes(352 + voxel_bytes, 0);
  std::memcpy(bytes.data(), &h, sizeof(h));
  std::memcpy(bytes.data() + 352, voxels, voxel_bytes);
  write_file_bytes(path, bytes.data(), bytes.size(), ends_with(path, ".gz"));
}

// ---- raw + sidecar ----

struct SidecarInfo {
  Dims dims;
  Spacing spacing;
  std::string dtype; // "uint8" | "uint16" | "float32"
};

inline std::string sidecar_path(const std::string& data_path) { return data_path + ".json"; }

inline SidecarInfo read_sidecar(const std::string& data_path) {
  const std::string sp = sidecar_path(data_path);
  std::ifstream f(sp);
  if (!f) throw IoError("missing sidecar " + sp);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed sidecar " + sp + ": " + e.what());
  }
  if (!j.contains("dims") || !j.contains("spacing_um"))
    throw DataError("sidecar missing dims/spacing_um: " + sp);
  SidecarInfo info;
  try {
    for (int a = 0; a < 3; ++a) {
      info.dims[a] = j.at("dims").at(a).get<int>();
      info.spacing[a] = j.at("spacing_um").at(a).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed sidecar " + sp + ": " + e.what());
  }
  if (j.contains("order") && j.at("order").get<std::string>() != "zyx")
    throw DataError("unsupported voxel order in " + sp);
  info.dtype = j.value("dtype", std::string("uint8"));
  for (int a = 0; a < 3; ++a) {
    if (info.dims[a] < 1) throw DataError("invalid dims in sidecar " + sp);
    if (!(info.spacing[a] > 0)) throw DataError("invalid spacing in sidecar " + sp);
  }
  return info;
}

inline void write_sidecar(const std::string& data_path, const Dims& dims, const Spacing& spacing,
                          const std::string& dtype) {
  nlohmann::json j;
  j["dims"] = {dims[0], dims[1], dims[2]};
  j["spacing_um"] = {spacing[0], spacing[1], spacing[2]};
  j["order"] = "zyx";
  j["dtype"] = dtype;
  std::ofstream f(sidecar_path(data_path));
  if (!f) throw IoError("cannot write sidecar for " + data_path);
  f << j.dump(2) << "\n";
}

inline bool is_nifti_path(const std::string& path) {
  return ends_with(path, ".nii") || ends_with(path, ".nii.gz");
}

} // namespace detail

inline BinaryVolume load_binary(const std::string& path) {
  if (detail::is_nifti_path(path)) {
    const auto raw = detail::read_nifti(path);
    BinaryVolume v(raw.dims, raw.spacing, 0);
    detail::convert_by_dtype(raw.datatype, raw.voxels, v.data, /*as_binary=*/true);
    return v;
  }
  const auto info = detail::read_sidecar(path);
  const auto bytes = detail::read_file_bytes(path);
  std::size_t elem = info.dtype == "uint8" ? 1 : info.dtype == "uint16" ? 2 : 4;
  if (bytes.size() != voxel_count(info.dims) * elem)
    throw DataError("byte count mismatch in " + path + ": got " + std::to_string(bytes.size()) +
                    ", expected " + std::to_string(voxel_count(info.dims) * elem));
  BinaryVolume v(info.dims, info.spacing, 0);
  if (info.dtype == "uint8") detail::convert_voxels<std::uint8_t, std::uint8_t>(bytes, v.data, true);
  else if (info.dtype == "uint16") detail::convert_voxels<std::uint8_t, std::uint16_t>(bytes, v.data, true);
  else if (info.dtype == "float32") detail::convert_voxels<std::uint8_t, float>(bytes, v.data, true);
  else throw DataError("unsupported sidecar dtype " + info.dtype);
  return v;
}

inline IntensityVolume load_intensity(const std::string& path) {
  if (detail::is_nifti_path(path)) {
    const auto raw = detail::read_nifti(path);
    IntensityVolume v(raw.dims, raw.spacing, 0.0f);
    detail::convert_by_dtype(raw.datatype, raw.voxels, v.data, /*as_binary=*/false);
    return v;
  }
  const auto info = detail::read_sidecar(path);
  const auto bytes = detail::read_file_bytes(path);
  std::size_t elem = info.dtype == "uint8" ? 1 : info.dtype == "uint16" ? 2 : 4;
  if (bytes.size() != voxel_count(info.dims) * elem)
    throw DataError("byte count mismatch in " + path);
  IntensityVolume v(info.dims, info.spacing, 0.0f);
  if (info.dtype == "uint8") detail::convert_voxels<float, std::uint8_t>(bytes, v.data, false);
  else if (info.dtype == "uint16") detail::convert_voxels<float, std::uint16_t>(bytes, v.data, false);
  else if (info.dtype == "float32") detail::convert_voxels<float, float>(bytes, v.data, false);
  else throw DataError("unsupported sidecar dtype " + info.dtype);
  return v;
}

inline void save_volume(const BinaryVolume& v, const std::string& path) {
  if (detail::is_nifti_path(path)) {
    detail::write_nifti(path, v.dims, v.spacing, detail::kDtUint8, 8, v.data.data(), v.size());
    return;
  }
  detail::write_file_bytes(path, v.data.data(), v.size(), detail::ends_with(path, ".gz"));
  detail::write_sidecar(path, v.dims, v.spacing, "uint8");
}

inline void save_volume(const IntensityVolume& v, const std::string& path) {
  if (detail::is_nifti_path(path)) {
    detail::write_nifti(path, v.dims, v.spacing, detail::kDtFloat32, 32, v.data.data(),
                        v.size() * sizeof(float));
    return;
  }
  detail::write_file_bytes(path, v.data.data(), v.size() * sizeof(float),
                           detail::ends_with(path, ".gz"));
  detail::write_sidecar(path, v.dims, v.spacing, "float32");
}

} // namespace perivox
