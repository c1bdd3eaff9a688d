#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "softbubble/error.hpp"
#include "softbubble/geometry/camera.hpp"

namespace softbubble::render {

using geometry::DepthImage;

/// Export quantization: one LSB is 0.1 mm, 0 marks invalid.
inline constexpr double kDepthUnitsPerMm = 10.0;

inline std::uint16_t quantize_depth(float depth_mm) {
  if (!(depth_mm > 0.0f)) return 0;
  const double q = std::round(depth_mm * kDepthUnitsPerMm);
  if (q < 1.0) return 1;
  if (q > 65535.0) return 65535;
  return static_cast<std::uint16_t>(q);
}

/// Rounds an image to the exported resolution (what a reader would see).
inline DepthImage quantized(const DepthImage& img) {
  DepthImage out = img;
  for (float& d : out.data()) d = static_cast<float>(quantize_depth(d) / kDepthUnitsPerMm);
  return out;
}

/// Binary PGM (P5), maxval 65535, big-endian samples in 0.1 mm units.
inline void write_pgm(std::ostream& out, const DepthImage& img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n65535\n";
  std::vector<char> buf(img.size() * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint16_t q = quantize_depth(img.data()[i]);
    buf[2 * i] = static_cast<char>(q >> 8);
    buf[2 * i + 1] = static_cast<char>(q & 0xff);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline void write_pgm(const std::string& path, const DepthImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_pgm(out, img);
  if (!out) throw IoError("failed writing " + path);
}

namespace detail {
inline int pgm_header_int(std::istream& in) {
  int c = in.peek();
  while (c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '#') {
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else {
      in.get();
    }
    c = in.peek();
  }
  int value = 0;
  if (!(in >> value)) throw IoError("malformed PGM header");
  return value;
}
}  // namespace detail

inline DepthImage read_pgm(std::istream& in) {
  std::string magic;
  if (!(in >> magic) || magic != "P5") throw IoError("not a binary PGM (P5) file");
  const int w = detail::pgm_header_int(in);
  const int h = detail::pgm_header_int(in);
  const int maxval = detail::pgm_header_int(in);
  if (w <= 0 || h <= 0) throw IoError("invalid PGM dimensions");
  if (maxval != 65535) throw IoError("expected a 16-bit PGM (maxval 65535)");
  in.get();  // single whitespace before the raster
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 2);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw IoError("truncated PGM raster");
  DepthImage img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint16_t q = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
    img.data()[i] = static_cast<float>(q / kDepthUnitsPerMm);
  }
  return img;
}

inline DepthImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_pgm(in);
}

}  // namespace softbubble::render
