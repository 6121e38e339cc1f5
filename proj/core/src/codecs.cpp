/* Copyright 2026 The ShiftConvNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "shiftconv/codecs.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace shiftconv {

namespace {

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Cursor over a netpbm-style text header.
class HeaderReader {
 public:
  HeaderReader(std::span<const std::uint8_t> bytes, bool comments)
      : bytes_(bytes), comments_(comments) {}

  std::size_t offset() const { return pos_; }

  // Offset of the next token (skips whitespace and comments).
  std::size_t next_token() {
    skip_space();
    return pos_;
  }

  std::string magic() {
    if (bytes_.size() < 2) throw ParseError("truncated header", pos_);
    std::string m{static_cast<char>(bytes_[0]), static_cast<char>(bytes_[1])};
    pos_ = 2;
    return m;
  }

  std::string token(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) ++pos_;
    if (start == pos_) throw ParseError(std::string("missing ") + what, start);
    return std::string(bytes_.begin() + start, bytes_.begin() + pos_);
  }

  long integer(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    const std::string t = token(what);
    long v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw ParseError(std::string("malformed ") + what + " '" + t + "'", start);
    }
    return v;
  }

  double real(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    const std::string t = token(what);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v)) {
      throw ParseError(std::string("malformed ") + what + " '" + t + "'", start);
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from the payload.
  void end_of_header() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw ParseError("expected a single whitespace byte before the payload", pos_);
    }
    ++pos_;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (comments_ && bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  bool comments_;
  std::size_t pos_ = 0;
};

void append(Bytes& out, const std::string& s) { out.insert(out.end(), s.begin(), s.end()); }

int image_channels(const Tensor<float>& image, const char* op) {
  const Shape s = image.shape();
  if (s.n != 1 || (s.c != 1 && s.c != 3) || s.h < 1 || s.w < 1) {
    throw ContractError(std::string(op) + ": expected a (1, 1|3, H, W) tensor, got " + s.str());
  }
  return s.c;
}

}  // namespace

Tensor<float> read_pfm(std::span<const std::uint8_t> bytes) {
  HeaderReader hdr(bytes, false);
  const std::string magic = hdr.magic();
  int channels = 0;
  if (magic == "Pf") {
    channels = 1;
  } else if (magic == "PF") {
    channels = 3;
  } else {
    throw ParseError("not a PFM file (magic '" + magic + "')", 0);
  }
  const std::size_t width_at = hdr.next_token();
  const long width = hdr.integer("width");
  const long height = hdr.integer("height");
  if (width < 1 || height < 1) throw ParseError("non-positive image extent", width_at);
  const std::size_t scale_at = hdr.next_token();
  const double scale = hdr.real("scale");
  if (scale == 0.0) throw ParseError("zero scale", scale_at);
  hdr.end_of_header();

  const bool little = scale < 0.0;
  const double magnitude = std::abs(scale);
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  const std::size_t start = hdr.offset();
  if (bytes.size() - start < count * 4) {
    throw ParseError("truncated payload: need " + std::to_string(count * 4) + " bytes, have " +
                         std::to_string(bytes.size() - start),
                     bytes.size());
  }

  Tensor<float> out(Shape{1, channels, static_cast<int>(height), static_cast<int>(width)});
  const std::uint8_t* p = bytes.data() + start;
  for (long row = 0; row < height; ++row) {
    const int y = static_cast<int>(height - 1 - row);
    for (long x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        std::uint32_t bits = little ? (std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
                                       std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24)
                                    : (std::uint32_t{p[3]} | std::uint32_t{p[2]} << 8 |
                                       std::uint32_t{p[1]} << 16 | std::uint32_t{p[0]} << 24);
        float v = std::bit_cast<float>(bits);
        if (magnitude != 1.0) v = static_cast<float>(v * magnitude);
        out.at(0, c, y, static_cast<int>(x)) = v;
        p += 4;
      }
    }
  }
  return out;
}

Bytes write_pfm(const Tensor<float>& image) {
  const int channels = image_channels(image, "write_pfm");
  const Shape s = image.shape();
  Bytes out;
  append(out, std::string(channels == 1 ? "Pf" : "PF") + "\n" + std::to_string(s.w) + " " +
                  std::to_string(s.h) + "\n-1\n");
  out.reserve(out.size() + image.numel() * 4);
  for (int y = s.h - 1; y >= 0; --y) {
    for (int x = 0; x < s.w; ++x) {
      for (int c = 0; c < channels; ++c) {
        const auto bits = std::bit_cast<std::uint32_t>(image.at(0, c, y, x));
        out.push_back(static_cast<std::uint8_t>(bits));
        out.push_back(static_cast<std::uint8_t>(bits >> 8));
        out.push_back(static_cast<std::uint8_t>(bits >> 16));
        out.push_back(static_cast<std::uint8_t>(bits >> 24));
      }
    }
  }
  return out;
}

Tensor<float> read_pnm(std::span<const std::uint8_t> bytes) {
  HeaderReader hdr(bytes, true);
  const std::string magic = hdr.magic();
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw ParseError("unsupported PNM magic '" + magic + "' (expected P5 or P6)", 0);
  }
  const std::size_t width_at = hdr.next_token();
  const long width = hdr.integer("width");
  const long height = hdr.integer("height");
  if (width < 1 || height < 1) throw ParseError("non-positive image extent", width_at);
  const std::size_t maxval_at = hdr.next_token();
  const long maxval = hdr.integer("maxval");
  if (maxval < 1 || maxval > 65535) throw ParseError("maxval out of range", maxval_at);
  hdr.end_of_header();

  const int sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  const std::size_t start = hdr.offset();
  if (bytes.size() - start < count * sample_bytes) {
    throw ParseError("truncated payload: need " + std::to_string(count * sample_bytes) +
                         " bytes, have " + std::to_string(bytes.size() - start),
                     bytes.size());
  }
  Tensor<float> out(Shape{1, channels, static_cast<int>(height), static_cast<int>(width)});
  const std::uint8_t* p = bytes.data() + start;
  const float inv = 1.0f / static_cast<float>(maxval);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        unsigned v = *p++;
        if (sample_bytes == 2) v = (v << 8) | *p++;
        if (static_cast<long>(v) > maxval) {
          throw ParseError("sample exceeds maxval", static_cast<std::size_t>(p - bytes.data()));
        }
        out.at(0, c, y, x) = static_cast<float>(v) * inv;
      }
    }
  }
  return out;
}

Bytes write_pnm(const Tensor<float>& image, int maxval) {
  const int channels = image_channels(image, "write_pnm");
  if (maxval < 1 || maxval > 65535) throw ContractError("write_pnm: maxval out of range");
  const Shape s = image.shape();
  Bytes out;
  append(out, std::string(channels == 1 ? "P5" : "P6") + "\n" + std::to_string(s.w) + " " +
                  std::to_string(s.h) + "\n" + std::to_string(maxval) + "\n");
  for (int y = 0; y < s.h; ++y) {
    for (int x = 0; x < s.w; ++x) {
      for (int c = 0; c < channels; ++c) {
        float v = image.at(0, c, y, x);
        if (!std::isfinite(v)) v = 0.0f;
        const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0f, 1.0f) * maxval));
        if (maxval > 255) out.push_back(static_cast<std::uint8_t>(q >> 8));
        out.push_back(static_cast<std::uint8_t>(q));
      }
    }
  }
  return out;
}

Bytes disparity_to_pgm(const DisparityMap& disp, double disp_cap) {
  if (!(disp_cap > 0.0)) throw ContractError("disparity_to_pgm: disp_cap must be positive");
  Tensor<float> img(Shape{1, 1, disp.height(), disp.width()});
  const auto v = disp.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    img[i] = std::isfinite(v[i]) ? static_cast<float>(v[i] / disp_cap) : 0.0f;
  }
  return write_pnm(img, 255);
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace shiftconv
