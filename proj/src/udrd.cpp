#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "unirep/domains.hpp"
#include "unirep/error.hpp"

namespace unirep {

namespace {

constexpr char kMagic[4] = {'U', 'D', 'R', 'D'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 6 * 4 + 1 + 3;

struct Reader {
  std::ifstream in;
  std::size_t offset = 0;
  std::size_t file_size = 0;

  explicit Reader(const std::string& path) {
    std::error_code ec;
    file_size = std::filesystem::file_size(path, ec);
    if (ec) throw IoError("udrd: cannot stat '" + path + "'");
    in.open(path, std::ios::binary);
    if (!in) throw IoError("udrd: cannot open '" + path + "'");
  }

  void read_raw(void* dst, std::size_t n, const char* what) {
    if (offset + n > file_size)
      throw FormatError("udrd: file truncated while reading " + std::string(what) +
                            "; file ends at byte " + std::to_string(file_size),
                        file_size);
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (!in)
      throw FormatError("udrd: read failure at " + std::string(what), offset);
    offset += n;
  }

  std::uint32_t read_u32(const char* what) {
    std::uint32_t v = 0;
    read_raw(&v, 4, what);
    return v;  // little-endian host assumed; documented format property
  }

  std::uint8_t read_u8(const char* what) {
    std::uint8_t v = 0;
    read_raw(&v, 1, what);
    return v;
  }
};

}  // namespace

Dataset load_binary(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.read_raw(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("udrd: bad magic bytes", 0);
  const std::size_t version_off = r.offset;
  const std::uint32_t version = r.read_u32("version");
  if (version != kVersion)
    throw FormatError("udrd: unsupported version " + std::to_string(version), version_off);
  const std::uint32_t n = r.read_u32("N");
  const std::uint32_t h = r.read_u32("H");
  const std::uint32_t w = r.read_u32("W");
  const std::uint32_t c = r.read_u32("C");
  const std::uint32_t k = r.read_u32("K");
  if (n == 0 || h == 0 || w == 0 || c == 0)
    throw FormatError("udrd: zero dimension in header", 8);
  if (k < 2) throw FormatError("udrd: class count must be >= 2", 24);
  const std::uint8_t flip = r.read_u8("flip_allowed");
  std::uint8_t reserved[3];
  r.read_raw(reserved, 3, "reserved bytes");

  Dataset out;
  out.descriptor.name = std::filesystem::path(path).stem().string();
  out.descriptor.height = h;
  out.descriptor.width = w;
  out.descriptor.channels = c;
  out.descriptor.classes = k;
  out.descriptor.flip_allowed = flip != 0;
  out.images = Tensor4(h, w, c, n);
  // Pixel order in the file matches the in-memory layout: instance-major,
  // then row, col, channel.
  r.read_raw(out.images.data(), out.images.size() * sizeof(float), "pixel data");
  out.labels.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t label_off = r.offset;
    const std::uint32_t label = r.read_u32("label");
    if (label >= k)
      throw FormatError("udrd: label " + std::to_string(label) + " >= K=" +
                            std::to_string(k) + " at record " + std::to_string(i),
                        label_off);
    out.labels[i] = static_cast<int>(label);
  }
  if (r.offset != r.file_size)
    throw FormatError("udrd: " + std::to_string(r.file_size - r.offset) +
                          " trailing bytes after the last label",
                      r.offset);
  for (float v : out.images.values())
    if (!std::isfinite(v))
      throw FormatError("udrd: non-finite pixel value", kHeaderBytes);
  return out;
}

void save_binary(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("udrd: cannot write '" + path + "'");
  auto put_u32 = [&](std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
  };
  out.write(kMagic, 4);
  put_u32(kVersion);
  put_u32(static_cast<std::uint32_t>(dataset.size()));
  put_u32(static_cast<std::uint32_t>(dataset.images.rows()));
  put_u32(static_cast<std::uint32_t>(dataset.images.cols()));
  put_u32(static_cast<std::uint32_t>(dataset.images.channels()));
  put_u32(static_cast<std::uint32_t>(dataset.descriptor.classes));
  const std::uint8_t flip = dataset.descriptor.flip_allowed ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&flip), 1);
  const char reserved[3] = {0, 0, 0};
  out.write(reserved, 3);
  out.write(reinterpret_cast<const char*>(dataset.images.data()),
            static_cast<std::streamsize>(dataset.images.size() * sizeof(float)));
  for (int label : dataset.labels) put_u32(static_cast<std::uint32_t>(label));
  if (!out) throw IoError("udrd: write failure on '" + path + "'");
}

}  // namespace unirep
