#include "pet/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "pet/errors.hpp"

namespace pet {

namespace {

constexpr char kMagic[4] = {'P', 'E', 'T', '1'};
constexpr uint64_t kMaxPayloadBytes = uint64_t(1) << 33;

size_t dtype_size(Dtype dtype) {
  switch (dtype) {
    case Dtype::U16: return 2;
    case Dtype::F32: return 4;
    case Dtype::U32: return 4;
  }
  throw DimOverflow("unknown dtype");
}

void put_u32le(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v & 0xff));
  out.push_back(uint8_t((v >> 8) & 0xff));
  out.push_back(uint8_t((v >> 16) & 0xff));
  out.push_back(uint8_t((v >> 24) & 0xff));
}

void put_u16le(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(uint8_t(v & 0xff));
  out.push_back(uint8_t((v >> 8) & 0xff));
}

uint32_t get_u32le(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}

uint16_t get_u16le(const uint8_t* p) { return uint16_t(p[0]) | uint16_t(p[1]) << 8; }

}  // namespace

size_t Tensor::element_count() const {
  uint64_t n = 1;
  for (uint32_t d : dims) n *= d;
  return size_t(n);
}

std::vector<uint8_t> encode_tensor(const Tensor& tensor) {
  if (tensor.dims.size() != 2 && tensor.dims.size() != 3) {
    throw DimOverflow("tensor rank must be 2 or 3");
  }
  uint64_t n = 1;
  for (uint32_t d : tensor.dims) n *= uint64_t(d);
  if (n * dtype_size(tensor.dtype) > kMaxPayloadBytes) {
    throw DimOverflow("tensor payload too large");
  }

  std::vector<uint8_t> out;
  out.reserve(6 + 4 * tensor.dims.size() + n * dtype_size(tensor.dtype));
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(uint8_t(tensor.dtype));
  out.push_back(uint8_t(tensor.dims.size()));
  for (uint32_t d : tensor.dims) put_u32le(out, d);

  const size_t count = size_t(n);
  switch (tensor.dtype) {
    case Dtype::U16: {
      const auto& v = std::get<std::vector<uint16_t>>(tensor.data);
      if (v.size() != count) throw DimOverflow("payload length does not match dims");
      for (uint16_t x : v) put_u16le(out, x);
      break;
    }
    case Dtype::F32: {
      const auto& v = std::get<std::vector<float>>(tensor.data);
      if (v.size() != count) throw DimOverflow("payload length does not match dims");
      for (float x : v) put_u32le(out, std::bit_cast<uint32_t>(x));
      break;
    }
    case Dtype::U32: {
      const auto& v = std::get<std::vector<uint32_t>>(tensor.data);
      if (v.size() != count) throw DimOverflow("payload length does not match dims");
      for (uint32_t x : v) put_u32le(out, x);
      break;
    }
  }
  return out;
}

Tensor decode_tensor(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 4) {
    throw BadMagic("file shorter than the magic");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw BadMagic("wrong magic");
  }
  if (bytes.size() < 6) {
    throw TruncatedPayload("header truncated");
  }
  const uint8_t dtype_byte = bytes[4];
  if (dtype_byte > 2) {
    throw DimOverflow("unknown dtype byte " + std::to_string(dtype_byte));
  }
  const Dtype dtype = Dtype(dtype_byte);
  const uint8_t ndim = bytes[5];
  if (ndim != 2 && ndim != 3) {
    throw DimOverflow("tensor rank must be 2 or 3");
  }
  const size_t header = 6 + size_t(ndim) * 4;
  if (bytes.size() < header) {
    throw TruncatedPayload("dims truncated");
  }
  Tensor tensor;
  tensor.dtype = dtype;
  uint64_t n = 1;
  for (int i = 0; i < ndim; ++i) {
    const uint32_t d = get_u32le(bytes.data() + 6 + 4 * i);
    tensor.dims.push_back(d);
    n *= d;
  }
  const uint64_t payload = n * dtype_size(dtype);
  if (payload > kMaxPayloadBytes) {
    throw DimOverflow("tensor payload too large");
  }
  if (bytes.size() < header + payload) {
    throw TruncatedPayload("payload truncated");
  }
  if (bytes.size() > header + payload) {
    throw TruncatedPayload("trailing bytes after the payload");
  }
  const uint8_t* p = bytes.data() + header;
  const size_t count = size_t(n);
  switch (dtype) {
    case Dtype::U16: {
      std::vector<uint16_t> v(count);
      for (size_t i = 0; i < v.size(); ++i) v[i] = get_u16le(p + 2 * i);
      tensor.data = std::move(v);
      break;
    }
    case Dtype::F32: {
      std::vector<float> v(count);
      for (size_t i = 0; i < v.size(); ++i) {
        v[i] = std::bit_cast<float>(get_u32le(p + 4 * i));
      }
      tensor.data = std::move(v);
      break;
    }
    case Dtype::U32: {
      std::vector<uint32_t> v(count);
      for (size_t i = 0; i < v.size(); ++i) v[i] = get_u32le(p + 4 * i);
      tensor.data = std::move(v);
      break;
    }
  }
  return tensor;
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  const std::vector<uint8_t> bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoFailure("cannot open for writing: " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) {
    throw IoFailure("write failed: " + path.string());
  }
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoFailure("cannot open for reading: " + path.string());
  }
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

// --- grid conversions ---

Tensor to_tensor(const LabelGrid& map) {
  Tensor t;
  t.dtype = Dtype::U32;
  t.dims = {uint32_t(map.height()), uint32_t(map.width())};
  t.data = map.data();
  return t;
}

Tensor to_tensor(const CategoryGrid& map) {
  Tensor t;
  t.dtype = Dtype::U16;
  t.dims = {uint32_t(map.height()), uint32_t(map.width())};
  std::vector<uint16_t> v(map.size());
  for (size_t i = 0; i < map.size(); ++i) {
    if (map[i] < 0 || map[i] > 0xffff) {
      throw DimOverflow("category value does not fit u16");
    }
    v[i] = uint16_t(map[i]);
  }
  t.data = std::move(v);
  return t;
}

Tensor to_tensor(const ScalarGrid& map) {
  Tensor t;
  t.dtype = Dtype::F32;
  t.dims = {uint32_t(map.height()), uint32_t(map.width())};
  std::vector<float> v(map.size());
  for (size_t i = 0; i < map.size(); ++i) v[i] = float(map[i]);
  t.data = std::move(v);
  return t;
}

Tensor to_tensor(const OffsetField& field) {
  Tensor t;
  t.dtype = Dtype::F32;
  t.dims = {2, uint32_t(field.height()), uint32_t(field.width())};
  std::vector<float> v;
  v.reserve(2 * field.dy.size());
  for (double x : field.dy.data()) v.push_back(float(x));
  for (double x : field.dx.data()) v.push_back(float(x));
  t.data = std::move(v);
  return t;
}

Tensor to_tensor(const Volume& volume) {
  Tensor t;
  t.dtype = Dtype::F32;
  t.dims = {uint32_t(volume.channels()), uint32_t(volume.height()),
            uint32_t(volume.width())};
  std::vector<float> v(volume.size());
  for (size_t i = 0; i < volume.size(); ++i) v[i] = float(volume[i]);
  t.data = std::move(v);
  return t;
}

namespace {
void expect_rank(const Tensor& t, size_t rank, const char* what) {
  if (t.dims.size() != rank) {
    throw DimOverflow(std::string(what) + ": expected rank " + std::to_string(rank));
  }
}
}  // namespace

LabelGrid label_grid_from(const Tensor& tensor) {
  expect_rank(tensor, 2, "label map");
  LabelGrid map(int(tensor.dims[0]), int(tensor.dims[1]));
  if (const auto* u32 = std::get_if<std::vector<uint32_t>>(&tensor.data)) {
    for (size_t i = 0; i < u32->size(); ++i) map[i] = (*u32)[i];
  } else if (const auto* u16 = std::get_if<std::vector<uint16_t>>(&tensor.data)) {
    for (size_t i = 0; i < u16->size(); ++i) map[i] = (*u16)[i];
  } else {
    throw DimOverflow("label map must be u16 or u32");
  }
  return map;
}

CategoryGrid category_grid_from(const Tensor& tensor) {
  expect_rank(tensor, 2, "category map");
  CategoryGrid map(int(tensor.dims[0]), int(tensor.dims[1]));
  if (const auto* u16 = std::get_if<std::vector<uint16_t>>(&tensor.data)) {
    for (size_t i = 0; i < u16->size(); ++i) map[i] = (*u16)[i];
  } else if (const auto* u32 = std::get_if<std::vector<uint32_t>>(&tensor.data)) {
    for (size_t i = 0; i < u32->size(); ++i) map[i] = int((*u32)[i]);
  } else {
    throw DimOverflow("category map must be u16 or u32");
  }
  return map;
}

ScalarGrid scalar_grid_from(const Tensor& tensor) {
  expect_rank(tensor, 2, "scalar map");
  const auto* f32 = std::get_if<std::vector<float>>(&tensor.data);
  if (!f32) throw DimOverflow("scalar map must be f32");
  ScalarGrid map(int(tensor.dims[0]), int(tensor.dims[1]));
  for (size_t i = 0; i < f32->size(); ++i) map[i] = (*f32)[i];
  return map;
}

OffsetField offset_field_from(const Tensor& tensor) {
  expect_rank(tensor, 3, "offset field");
  if (tensor.dims[0] != 2) {
    throw DimOverflow("offset field must have two channels");
  }
  const auto* f32 = std::get_if<std::vector<float>>(&tensor.data);
  if (!f32) throw DimOverflow("offset field must be f32");
  OffsetField field(int(tensor.dims[1]), int(tensor.dims[2]));
  const size_t plane = field.dy.size();
  for (size_t i = 0; i < plane; ++i) {
    field.dy[i] = (*f32)[i];
    field.dx[i] = (*f32)[plane + i];
  }
  return field;
}

Volume volume_from(const Tensor& tensor) {
  expect_rank(tensor, 3, "volume");
  const auto* f32 = std::get_if<std::vector<float>>(&tensor.data);
  if (!f32) throw DimOverflow("volume must be f32");
  Volume volume(int(tensor.dims[0]), int(tensor.dims[1]), int(tensor.dims[2]));
  for (size_t i = 0; i < f32->size(); ++i) volume[i] = (*f32)[i];
  return volume;
}

// --- rasters ---

namespace {

// Skips netpbm whitespace and '#' comments, then parses one integer.
int pnm_int(std::istream& in) {
  int c = in.get();
  while (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#') {
    if (c == '#') {
      while (c != '\n' && c != EOF) c = in.get();
    }
    c = in.get();
  }
  int value = 0;
  bool digit = false;
  while (c >= '0' && c <= '9') {
    value = value * 10 + (c - '0');
    digit = true;
    c = in.get();
  }
  if (!digit) throw IoFailure("malformed netpbm header");
  return value;
}

}  // namespace

void write_label_pgm(const std::filesystem::path& path, const LabelGrid& map) {
  for (size_t i = 0; i < map.size(); ++i) {
    if (map[i] > 0xffff) {
      throw LabelOverflow("label " + std::to_string(map[i]) +
                          " does not fit a 16-bit graymap");
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  out << "P5\n" << map.width() << " " << map.height() << "\n65535\n";
  for (size_t i = 0; i < map.size(); ++i) {
    // 16-bit samples are most significant byte first
    out.put(char((map[i] >> 8) & 0xff));
    out.put(char(map[i] & 0xff));
  }
  if (!out) throw IoFailure("write failed: " + path.string());
}

LabelGrid read_label_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open for reading: " + path.string());
  char m0 = 0, m1 = 0;
  in.get(m0).get(m1);
  if (m0 != 'P' || m1 != '5') throw BadMagic("not a P5 graymap");
  const int width = pnm_int(in);
  const int height = pnm_int(in);
  const int maxval = pnm_int(in);
  if (maxval != 65535) throw IoFailure("expected a 16-bit graymap");
  LabelGrid map(height, width);
  for (size_t i = 0; i < map.size(); ++i) {
    const int hi = in.get(), lo = in.get();
    if (hi == EOF || lo == EOF) throw TruncatedPayload("graymap payload truncated");
    map[i] = Label(hi) << 8 | Label(lo);
  }
  return map;
}

void write_rgb_ppm(const std::filesystem::path& path, int height, int width,
                   const std::vector<uint8_t>& rgb) {
  if (rgb.size() != size_t(height) * width * 3) {
    throw DimOverflow("rgb buffer does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  out << "P6\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), std::streamsize(rgb.size()));
  if (!out) throw IoFailure("write failed: " + path.string());
}

LabelGrid read_panoptic_rgb(const std::filesystem::path& path,
                            const std::map<uint32_t, DecodedLabel>& table,
                            const Taxonomy& taxonomy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open for reading: " + path.string());
  char m0 = 0, m1 = 0;
  in.get(m0).get(m1);
  if (m0 != 'P' || m1 != '6') throw BadMagic("not a P6 pixmap");
  const int width = pnm_int(in);
  const int height = pnm_int(in);
  const int maxval = pnm_int(in);
  if (maxval != 255) throw IoFailure("expected an 8-bit pixmap");
  LabelGrid map(height, width);
  for (size_t i = 0; i < map.size(); ++i) {
    const int r = in.get(), g = in.get(), b = in.get();
    if (r == EOF || g == EOF || b == EOF) {
      throw TruncatedPayload("pixmap payload truncated");
    }
    const uint32_t id = uint32_t(r) + 256u * uint32_t(g) + 65536u * uint32_t(b);
    const auto it = table.find(id);
    if (it == table.end()) {
      throw UnknownSourceId("source id " + std::to_string(id) +
                            " missing from the translation table");
    }
    map[i] = encode_label(it->second.category, it->second.instance_id, taxonomy);
  }
  return map;
}

void write_label_visualization(const std::filesystem::path& path,
                               const LabelGrid& map) {
  std::vector<uint8_t> rgb(map.size() * 3, 0);
  for (size_t i = 0; i < map.size(); ++i) {
    const Label v = map[i];
    if (v == kNonEdge) continue;
    // scramble the label into a stable, well-spread color
    uint64_t h = v + 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    h ^= h >> 31;
    rgb[3 * i + 0] = uint8_t(64 + (h & 0xbf));
    rgb[3 * i + 1] = uint8_t(64 + ((h >> 8) & 0xbf));
    rgb[3 * i + 2] = uint8_t(64 + ((h >> 16) & 0xbf));
  }
  write_rgb_ppm(path, map.height(), map.width(), rgb);
}

}  // namespace pet
