#pragma once

#include <filesystem>

#include "lrtc/tensor.hpp"

namespace lrtc {

/// Reads an 8-bit PNG into an H x W x 3 tensor with values in [0, 255].
/// Grayscale and palette images are expanded to three identical channels;
/// an alpha channel is dropped. 16-bit images are rejected.
DenseTensor load_image(const std::filesystem::path& path);

/// Writes an H x W x 3 tensor as 8-bit RGB PNG. Values are clipped to
/// [0, 255] and rounded to the nearest integer, ties away from zero.
void save_image(const DenseTensor& t, const std::filesystem::path& path);

/// The pixel value save_image writes for v.
unsigned char to_pixel(double v);

/// An observation mask stored as a PNG: an entry is observed when its
/// channel value is nonzero. Grayscale masks mark whole pixels.
ObservationMask load_mask_image(const std::filesystem::path& path, const Shape& shape);

}  // namespace lrtc
