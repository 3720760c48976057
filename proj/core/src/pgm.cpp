#include "ggcam/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ggcam/errors.hpp"

namespace ggcam::pgm {

namespace {

int read_token(std::istream& in) {
  // Skips whitespace and '#' comments per the PGM grammar.
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
    } else if (!std::isspace(c)) {
      in.unget();
      break;
    }
  }
  int v;
  if (!(in >> v)) throw DataError("pgm: malformed header");
  return v;
}

}  // namespace

Tensor read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open pgm: " + path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '5') throw DataError("not a P5 pgm: " + path);
  int w = read_token(in), h = read_token(in), maxval = read_token(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    throw DataError("pgm: bad dimensions in " + path);
  in.get();  // single whitespace after maxval
  Tensor img({h, w});
  if (maxval < 256) {
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw DataError("pgm: truncated data in " + path);
    for (size_t i = 0; i < raw.size(); ++i) img[static_cast<int64_t>(i)] = raw[i] / static_cast<double>(maxval);
  } else {
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw DataError("pgm: truncated data in " + path);
    for (size_t i = 0; i < raw.size() / 2; ++i) {
      int v = (raw[2 * i] << 8) | raw[2 * i + 1];  // big-endian per spec
      img[static_cast<int64_t>(i)] = v / static_cast<double>(maxval);
    }
  }
  return img;
}

void write8(const std::string& path, const Tensor& image) {
  if (image.ndim() != 2) throw DataError("pgm write: 2-D image expected");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write pgm: " + path);
  int h = image.extent(0), w = image.extent(1);
  out << "P5\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
  for (size_t i = 0; i < raw.size(); ++i) {
    double v = std::clamp(image[static_cast<int64_t>(i)], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError("write failed: " + path);
}

void write16_with_range(const std::string& path, const Tensor& map) {
  if (map.ndim() != 2) throw DataError("pgm write: 2-D map expected");
  double lo = map.min_element(), hi = map.max_element();
  double span = hi - lo;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write pgm: " + path);
  int h = map.extent(0), w = map.extent(1);
  out << "P5\n" << w << " " << h << "\n65535\n";
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 2);
  for (int64_t i = 0; i < map.size(); ++i) {
    double t = span > 0.0 ? (map[i] - lo) / span : 0.0;
    int v = static_cast<int>(std::lround(t * 65535.0));
    raw[static_cast<size_t>(2 * i)] = static_cast<unsigned char>(v >> 8);
    raw[static_cast<size_t>(2 * i + 1)] = static_cast<unsigned char>(v & 0xff);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError("write failed: " + path);

  std::ofstream side(path + ".range");
  if (!side) throw DataError("cannot write range sidecar for " + path);
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", lo, hi);
  side << buf;
}

}  // namespace ggcam::pgm
