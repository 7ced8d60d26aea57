#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cumolos/field.hpp"

namespace cumolos {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> rgb;  // row-major, 3 bytes per pixel

  void fill(unsigned char r, unsigned char g, unsigned char b);
  void set(int x, int y, unsigned char r, unsigned char g, unsigned char b);
};

Image make_image(int width, int height);

/// Field heatmap: time along x, gate along y (gate 0 at the bottom),
/// perceptual colormap over [vmin, vmax]. `cell px` pixels per matrix cell.
Image render_heatmap(const Matrix& field, double vmin, double vmax,
                     int cell_px = 1);

struct LineSeries {
  std::vector<double> x, y;
  unsigned char r = 0, g = 0, b = 0;
};

/// Plain line plot with an axes box; optionally log10-scales y.
Image render_lines(const std::vector<LineSeries>& series, bool log_y,
                   int width = 900, int height = 500);

void write_png(const Image& image, const std::filesystem::path& path);

/// (width, height) of a PNG, for metadata checks.
std::pair<int, int> read_png_dims(const std::filesystem::path& path);

}  // namespace cumolos
