// Binary PGM (P5) reader/writer, the on-disk image format for faces,
// heatmaps, masks and perturbation exports. Maxval is fixed at 255.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace advforge {

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

// Throws RuntimeError when the file cannot be opened and ValidationError for
// anything that parses but is not an 8-bit P5 image; both name the path.
PgmImage read_pgm(const std::string& path);
void write_pgm(const PgmImage& img, const std::string& path);

// Map [0,1] gray values to bytes (clamped, rounded) and write as P5.
void write_gray_pgm(const std::vector<double>& values, std::size_t width, std::size_t height,
                    const std::string& path);

}  // namespace advforge
