#pragma once

#include "qsr/image.hpp"

#include <filesystem>

namespace qsr {

// Image file format: "<name>.qmap" raw payload + "<name>.qhdr" text header.
// Header: UTF-8, one key=value per line, keys exactly width, height,
// spacing_x, spacing_y, label, units, dtype (f32le), order (row-major).
// Payload: width*height IEEE-754 binary32 little-endian, row-major.
//
// Either the .qmap, .qhdr, or extensionless base path may be passed; the
// pair is derived from it.

Image read_map(const std::filesystem::path& path);
void write_map(const Image& map, const std::filesystem::path& path);

/// Masks ride the same format with 0/1 payloads; read_mask rejects any
/// payload value other than 0 or 1.
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);

}  // namespace qsr
