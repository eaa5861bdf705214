#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "tdopt/tensor.hpp"

namespace tdopt {

// Malformed binary input. offset is the byte position where parsing failed.
struct FormatError : std::runtime_error {
  FormatError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what), offset(byte_offset) {}
  std::size_t offset = 0;
};

// Reads an IDX file of unsigned-byte rank-3 data (magic 0x00000803, then
// three big-endian uint32 extents, then count*rows*cols raw bytes) into a
// count x rows x cols tensor with entries scaled to [0,1] by 1/255.
// Throws FormatError on a wrong magic, a truncated file, or trailing bytes,
// naming the byte offset; throws std::runtime_error if the file cannot be
// opened.
DenseTensor load_idx(const std::string& path);

// Writes a third-order tensor as unsigned-byte IDX, clamping entries to
// [0,1] and rounding value*255 to the nearest byte. Inverse of load_idx for
// tensors whose entries are multiples of 1/255.
void save_idx(const DenseTensor& t, const std::string& path);

// Reads a directory of raw 8-bit grayscale frames described by a JSON
// manifest (<dir>/manifest.json with keys "width", "height", "files": an
// ordered list of file names relative to the directory). Each file must hold
// exactly width*height bytes, row-major. Returns a count x height x width
// tensor scaled to [0,1]. Throws FormatError on a missing or malformed
// manifest or a frame whose size disagrees with the manifest.
DenseTensor load_raw_gray_dir(const std::string& dir);

}  // namespace tdopt
