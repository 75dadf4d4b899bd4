#pragma once

// Binary netpbm I/O: P6 (RGB) for images, P5 (gray) for masks, 8-bit only.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "ffrt/core/mask.hpp"
#include "ffrt/numerics/tensor.hpp"

namespace ffrt {

struct PnmImage {
  int channels = 0;  // 3 for P6, 1 for P5
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // interleaved, row-major
};

inline std::uint8_t quantize_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

namespace detail {

class PnmReader {
 public:
  explicit PnmReader(std::string_view bytes) : b_(bytes) {}

  std::size_t offset() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(b_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int read_int(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 1'000'000) fail(ErrorKind::parse, "pnm: ", what, " too large at byte ", start);
      ++pos_;
    }
    if (pos_ == start) fail(ErrorKind::parse, "pnm: expected ", what, " at byte ", start);
    return static_cast<int>(v);
  }

  std::string_view rest() const { return b_.substr(pos_); }
  void advance(std::size_t n) { pos_ += n; }
  bool at_end() const { return pos_ >= b_.size(); }
  char peek() const { return b_[pos_]; }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline PnmImage parse_pnm(std::string_view bytes) {
  detail::PnmReader r(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    fail(ErrorKind::parse, "pnm: bad magic at byte 0 (expected P5 or P6)");
  PnmImage img;
  img.channels = bytes[1] == '6' ? 3 : 1;
  r.advance(2);
  img.width = r.read_int("width");
  img.height = r.read_int("height");
  const std::size_t maxval_at = r.offset();
  const int maxval = r.read_int("maxval");
  if (maxval != 255) fail(ErrorKind::parse, "pnm: maxval ", maxval, " at byte ", maxval_at, " (only 255 supported)");
  if (img.width < 1 || img.height < 1) fail(ErrorKind::parse, "pnm: empty image at byte ", maxval_at);
  if (r.at_end() || !std::isspace(static_cast<unsigned char>(r.peek())))
    fail(ErrorKind::parse, "pnm: missing whitespace after header at byte ", r.offset());
  r.advance(1);
  const std::size_t expected = static_cast<std::size_t>(img.width) * img.height * img.channels;
  const std::string_view payload = r.rest();
  if (payload.size() < expected)
    fail(ErrorKind::parse, "pnm: truncated payload at byte ", r.offset(), ": expected ", expected, " bytes, got ",
         payload.size());
  img.pixels.assign(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(expected));
  return img;
}

inline std::string encode_pnm(const PnmImage& img) {
  require(img.channels == 1 || img.channels == 3, ErrorKind::parameter, "pnm: channels must be 1 or 3");
  require(img.pixels.size() == static_cast<std::size_t>(img.width) * img.height * img.channels,
          ErrorKind::dimension, "pnm: pixel buffer size mismatch");
  std::string out = (img.channels == 3 ? "P6\n" : "P5\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open '", path.string(), "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Writes to a temporary sibling and renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::io, "cannot open '", tmp.string(), "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(static_cast<bool>(out), ErrorKind::io, "write to '", tmp.string(), "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorKind::io, "rename '", tmp.string(), "' -> '", path.string(), "': ", ec.message());
}

// [1,C,H,W] in [0,1] <-> 8-bit samples.
inline PnmImage to_pnm(const Tensor& image) {
  const Shape s = image.shape();
  require(s.n == 1 && (s.c == 1 || s.c == 3), ErrorKind::dimension, "to_pnm: expected [1,1|3,H,W], got ", s.str());
  PnmImage img{s.c, s.h, s.w, std::vector<std::uint8_t>(image.numel())};
  for (int c = 0; c < s.c; ++c)
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x)
        img.pixels[(static_cast<std::size_t>(y) * s.w + x) * s.c + c] = quantize_u8(image.at(0, c, y, x));
  return img;
}

inline Tensor from_pnm(const PnmImage& img) {
  Tensor t(Shape{1, img.channels, img.height, img.width});
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        t.at(0, c, y, x) = img.pixels[(static_cast<std::size_t>(y) * img.width + x) * img.channels + c] / 255.0;
  return t;
}

inline void write_pnm(const std::filesystem::path& path, const Tensor& image) {
  write_file_atomic(path, encode_pnm(to_pnm(image)));
}

// Masks are stored as 0 / 255.
inline void write_pnm(const std::filesystem::path& path, const Mask& mask) {
  PnmImage img{1, mask.h, mask.w, std::vector<std::uint8_t>(mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) img.pixels[i] = mask.bits[i] ? 255 : 0;
  write_file_atomic(path, encode_pnm(img));
}

inline Tensor read_pnm(const std::filesystem::path& path) { return from_pnm(parse_pnm(read_file(path))); }

// Any sample >= 128 is set.
inline Mask read_mask(const std::filesystem::path& path) {
  const PnmImage img = parse_pnm(read_file(path));
  require(img.channels == 1, ErrorKind::parse, "mask '", path.string(), "' must be P5");
  Mask m(img.height, img.width);
  for (std::size_t i = 0; i < m.size(); ++i) m.bits[i] = img.pixels[i] >= 128;
  return m;
}

}  // namespace ffrt
