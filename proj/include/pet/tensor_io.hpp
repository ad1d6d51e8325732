#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <variant>
#include <vector>

#include "pet/grid.hpp"
#include "pet/taxonomy.hpp"

namespace pet {

// Minimal bit-exact tensor container, identical bytes on every platform.
//
//   offset  size          field
//   0       4             magic "PET1"
//   4       1             dtype: 0 = u16, 1 = f32, 2 = u32
//   5       1             ndim: 2 or 3
//   6       4 * ndim      dims, unsigned 32-bit little-endian
//   ...     prod(dims)*s  payload, row-major (last dimension fastest),
//                         little-endian, s = dtype size
//
// Example, a 2x3 u16 tensor: 50 45 54 31 00 02 02 00 00 00 03 00 00 00
// followed by 12 payload bytes.
enum class Dtype : uint8_t { U16 = 0, F32 = 1, U32 = 2 };

struct Tensor {
  Dtype dtype = Dtype::U16;
  std::vector<uint32_t> dims;
  std::variant<std::vector<uint16_t>, std::vector<float>, std::vector<uint32_t>> data;

  size_t element_count() const;
};

void write_tensor(const std::filesystem::path& path, const Tensor& tensor);

// Throws BadMagic, TruncatedPayload, DimOverflow, IoFailure.
Tensor read_tensor(const std::filesystem::path& path);

// In-memory encoding used by write_tensor; exposed for golden-byte tests.
std::vector<uint8_t> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(const std::vector<uint8_t>& bytes);

// --- conversions between tensors and the library's grid types ---
Tensor to_tensor(const LabelGrid& map);                       // u32, 2-D
Tensor to_tensor(const CategoryGrid& map);                    // u16, 2-D
Tensor to_tensor(const ScalarGrid& map);                      // f32, 2-D
Tensor to_tensor(const OffsetField& field);                   // f32, 2 x H x W
Tensor to_tensor(const Volume& volume);                       // f32, C x H x W
LabelGrid label_grid_from(const Tensor& tensor);              // accepts u16/u32
CategoryGrid category_grid_from(const Tensor& tensor);        // accepts u16/u32
ScalarGrid scalar_grid_from(const Tensor& tensor);            // f32, 2-D
OffsetField offset_field_from(const Tensor& tensor);          // f32, 2 x H x W
Volume volume_from(const Tensor& tensor);                     // f32, 3-D

// --- raster adapters ---

// 16-bit single-channel PGM (P5, maxval 65535, most significant byte first
// per the netpbm convention), pixel value = encoded panoptic label.
// Throws LabelOverflow when a label does not fit 16 bits.
void write_label_pgm(const std::filesystem::path& path, const LabelGrid& map);
LabelGrid read_label_pgm(const std::filesystem::path& path);

// 8-bit RGB PPM (P6, maxval 255).
void write_rgb_ppm(const std::filesystem::path& path, int height, int width,
                   const std::vector<uint8_t>& rgb);

// Reads an RGB-encoded panoptic raster (id = R + 256 G + 65536 B) and maps
// every source id through the translation table into encoded labels.
// Throws UnknownSourceId when a pixel's id is missing from the table.
LabelGrid read_panoptic_rgb(const std::filesystem::path& path,
                            const std::map<uint32_t, DecodedLabel>& table,
                            const Taxonomy& taxonomy);

// Color-coded label raster, one deterministic color per panoptic label.
void write_label_visualization(const std::filesystem::path& path, const LabelGrid& map);

}  // namespace pet
