#include "tdopt/idx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace tdopt {

namespace {

constexpr std::uint32_t kUbyteRank3Magic = 0x00000803u;

[[noreturn]] void fail(const std::string& what, std::size_t offset) {
  std::ostringstream msg;
  msg << what << " at byte offset " << offset;
  throw FormatError(msg.str(), offset);
}

std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) fail("truncated header", bytes.size());
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void append_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

}  // namespace

DenseTensor load_idx(const std::string& path) {
  const std::vector<unsigned char> bytes = read_all(path);
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kUbyteRank3Magic) {
    std::ostringstream msg;
    msg << "bad magic 0x" << std::hex << magic << std::dec << ", want 0x803 at byte offset 0";
    throw FormatError(msg.str(), 0);
  }
  const std::size_t count = read_be32(bytes, 4);
  const std::size_t rows = read_be32(bytes, 8);
  const std::size_t cols = read_be32(bytes, 12);
  const std::size_t expected = 16 + count * rows * cols;
  if (bytes.size() < expected) fail("truncated payload", bytes.size());
  if (bytes.size() > expected) fail("trailing bytes", expected);

  DenseTensor t({count, rows, cols});
  for (std::size_t n = 0; n < count * rows * cols; ++n)
    t.data()[n] = static_cast<double>(bytes[16 + n]) / 255.0;
  return t;
}

void save_idx(const DenseTensor& t, const std::string& path) {
  if (t.order() != 3) throw std::invalid_argument("idx output requires a third-order tensor");
  std::string out;
  out.reserve(16 + t.size());
  append_be32(out, kUbyteRank3Magic);
  for (int m = 0; m < 3; ++m) append_be32(out, static_cast<std::uint32_t>(t.dims()[m]));
  for (std::size_t n = 0; n < t.size(); ++n) {
    const double v = std::clamp(t.data()[n], 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f || !f.write(out.data(), static_cast<std::streamsize>(out.size())))
    throw std::runtime_error("cannot write " + path);
}

DenseTensor load_raw_gray_dir(const std::string& dir) {
  const std::string manifest_path = dir + "/manifest.json";
  std::ifstream mf(manifest_path);
  if (!mf) throw FormatError("missing manifest " + manifest_path + " at byte offset 0", 0);
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed manifest " + manifest_path + ": " + e.what() +
                          " at byte offset 0",
                      0);
  }
  if (!manifest.contains("width") || !manifest.contains("height") || !manifest.contains("files"))
    throw FormatError("manifest " + manifest_path +
                          " needs width, height, files at byte offset 0",
                      0);
  const std::size_t width = manifest.at("width").get<std::size_t>();
  const std::size_t height = manifest.at("height").get<std::size_t>();
  const auto files = manifest.at("files").get<std::vector<std::string>>();
  if (width == 0 || height == 0 || files.empty())
    throw FormatError("manifest " + manifest_path + " describes no data at byte offset 0", 0);

  DenseTensor t({files.size(), height, width});
  const std::size_t frame = width * height;
  for (std::size_t n = 0; n < files.size(); ++n) {
    const std::string path = dir + "/" + files[n];
    const std::vector<unsigned char> bytes = read_all(path);
    if (bytes.size() != frame) {
      std::ostringstream msg;
      msg << path << " holds " << bytes.size() << " bytes, manifest expects " << frame
          << " at byte offset " << std::min(bytes.size(), frame);
      throw FormatError(msg.str(), std::min(bytes.size(), frame));
    }
    for (std::size_t p = 0; p < frame; ++p)
      t.data()[n * frame + p] = static_cast<double>(bytes[p]) / 255.0;
  }
  return t;
}

}  // namespace tdopt
