#include "advforge/pgm.hpp"

#include <cmath>
#include <fstream>

#include "advforge/error.hpp"

namespace advforge {

namespace {

// Next whitespace-delimited token, skipping '#' comments to end of line.
std::string next_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c) && c != '#') {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (c == '#') in.unget();
  return tok;
}

std::size_t parse_dim(const std::string& tok, const std::string& what, const std::string& path) {
  require(!tok.empty(), path + ": truncated PGM header (missing " + what + ")");
  std::size_t v = 0;
  for (char ch : tok) {
    require(ch >= '0' && ch <= '9', path + ": non-numeric " + what + " '" + tok + "'");
    v = v * 10 + static_cast<std::size_t>(ch - '0');
  }
  require(v > 0, path + ": zero " + what);
  return v;
}

}  // namespace

PgmImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot open " + path);
  std::string magic = next_token(in);
  require(magic == "P5", path + ": not a binary PGM (P5) file, magic '" + magic + "'");
  PgmImage img;
  img.width = parse_dim(next_token(in), "width", path);
  img.height = parse_dim(next_token(in), "height", path);
  std::size_t maxval = parse_dim(next_token(in), "maxval", path);
  require(maxval == 255, path + ": unsupported maxval " + std::to_string(maxval) + ", want 255");
  // The header ends with exactly one whitespace byte before the raster.
  img.pixels.resize(img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  require(static_cast<std::size_t>(in.gcount()) == img.pixels.size(),
          path + ": truncated raster, expected " + std::to_string(img.pixels.size()) + " bytes");
  return img;
}

void write_pgm(const PgmImage& img, const std::string& path) {
  require(img.pixels.size() == img.width * img.height,
          path + ": pixel count " + std::to_string(img.pixels.size()) + " does not match " +
              std::to_string(img.width) + "x" + std::to_string(img.height));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw RuntimeError("write failed for " + path);
}

void write_gray_pgm(const std::vector<double>& values, std::size_t width, std::size_t height,
                    const std::string& path) {
  require(values.size() == width * height, path + ": value count does not match dimensions");
  PgmImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double v = std::min(std::max(values[i], 0.0), 1.0);
    img.pixels[i] = static_cast<std::uint8_t>(std::llround(v * 255.0));
  }
  write_pgm(img, path);
}

}  // namespace advforge
