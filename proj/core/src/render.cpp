#include "cumolos/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cumolos/errors.hpp"

namespace cumolos {

namespace {

// compact viridis-like colormap, linearly interpolated
constexpr unsigned char kStops[][3] = {
    {68, 1, 84},   {59, 82, 139},  {33, 145, 140},
    {94, 201, 98}, {253, 231, 37},
};

void colormap(double t, unsigned char* rgb) {
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * 4.0;
  const int lo = std::min(3, static_cast<int>(pos));
  const double f = pos - lo;
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<unsigned char>(
        std::lround((1.0 - f) * kStops[lo][c] + f * kStops[lo + 1][c]));
}

}  // namespace

Image make_image(int width, int height) {
  Image img;
  img.width = width;
  img.height = height;
  img.rgb.assign(static_cast<std::size_t>(width) * height * 3, 255);
  return img;
}

void Image::fill(unsigned char r, unsigned char g, unsigned char b) {
  for (std::size_t i = 0; i + 2 < rgb.size(); i += 3) {
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }
}

void Image::set(int x, int y, unsigned char r, unsigned char g,
                unsigned char b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t k = (static_cast<std::size_t>(y) * width + x) * 3;
  rgb[k] = r;
  rgb[k + 1] = g;
  rgb[k + 2] = b;
}

Image render_heatmap(const Matrix& field, double vmin, double vmax,
                     int cell_px) {
  if (field.size() == 0) throw ParameterError("render_heatmap: empty field");
  if (cell_px < 1) throw ParameterError("render_heatmap: cell_px must be >= 1");
  if (!(vmax > vmin)) vmax = vmin + 1.0;

  const auto t = static_cast<int>(field.rows());
  const auto g = static_cast<int>(field.cols());
  Image img = make_image(t * cell_px, g * cell_px);
  unsigned char rgb[3];
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < g; ++j) {
      colormap((field(i, j) - vmin) / (vmax - vmin), rgb);
      for (int py = 0; py < cell_px; ++py)
        for (int px = 0; px < cell_px; ++px)
          img.set(i * cell_px + px, (g - 1 - j) * cell_px + py, rgb[0], rgb[1],
                  rgb[2]);
    }
  return img;
}

namespace {

void draw_line(Image& img, int x0, int y0, int x1, int y1, unsigned char r,
               unsigned char g, unsigned char b) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    img.set(x0, y0, r, g, b);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

Image render_lines(const std::vector<LineSeries>& series, bool log_y,
                   int width, int height) {
  Image img = make_image(width, height);

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto yval = [&](double y) {
    return log_y ? std::log10(std::max(y, 1e-300)) : y;
  };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      const double y = yval(s.y[i]);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) ymax = ymin + 1;

  const int m = 40;  // margin
  draw_line(img, m, m, m, height - m, 0, 0, 0);
  draw_line(img, m, height - m, width - m, height - m, 0, 0, 0);

  auto px = [&](double x) {
    return m + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) *
                                            (width - 2 * m)));
  };
  auto py = [&](double y) {
    return height - m -
           static_cast<int>(std::lround((yval(y) - ymin) / (ymax - ymin) *
                                        (height - 2 * m)));
  };

  // tick marks every quarter of each axis
  for (int k = 0; k <= 4; ++k) {
    const int tx = m + k * (width - 2 * m) / 4;
    draw_line(img, tx, height - m, tx, height - m + 5, 0, 0, 0);
    const int ty = height - m - k * (height - 2 * m) / 4;
    draw_line(img, m - 5, ty, m, ty, 0, 0, 0);
  }

  for (const auto& s : series)
    for (std::size_t i = 1; i < s.x.size(); ++i)
      draw_line(img, px(s.x[i - 1]), py(s.y[i - 1]), px(s.x[i]), py(s.y[i]),
                s.r, s.g, s.b);
  return img;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("png: cannot open " + path.string());

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw IoError("png: writer initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw IoError("png: write failed for " + path.string());
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    png_write_row(png, const_cast<png_bytep>(
                           image.rgb.data() +
                           static_cast<std::size_t>(y) * image.width * 3));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

std::pair<int, int> read_png_dims(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) throw IoError("png: cannot open " + path.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(f);
    throw IoError("png: reader initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(f);
    throw IoError("png: not a valid PNG: " + path.string());
  }
  png_init_io(png, f);
  png_read_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(f);
  return {w, h};
}

}  // namespace cumolos
