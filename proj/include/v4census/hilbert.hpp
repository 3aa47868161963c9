#ifndef V4CENSUS_HILBERT_HPP
#define V4CENSUS_HILBERT_HPP

#include <array>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <png.h>

#include "v4census/blockmap.hpp"

namespace v4census {

struct Point {
  std::uint32_t x = 0, y = 0;
  friend constexpr bool operator==(Point, Point) = default;
};

namespace detail {
constexpr void hilbert_rotate(std::uint32_t n, std::uint32_t& x, std::uint32_t& y, std::uint32_t rx, std::uint32_t ry) {
  if (ry == 0) {
    if (rx == 1) {
      x = n - 1 - x;
      y = n - 1 - y;
    }
    std::swap(x, y);
  }
}
} // namespace detail

/// Curve distance to cell on a Hilbert curve of the given order (side 2^order).
constexpr Point hilbert_d2xy(unsigned order, std::uint64_t d) {
  const std::uint32_t n = 1u << order;
  std::uint32_t x = 0, y = 0;
  std::uint64_t t = d;
  for (std::uint32_t s = 1; s < n; s *= 2) {
    const auto rx = static_cast<std::uint32_t>(1 & (t / 2));
    const auto ry = static_cast<std::uint32_t>(1 & (t ^ rx));
    detail::hilbert_rotate(s, x, y, rx, ry);
    x += s * rx;
    y += s * ry;
    t /= 4;
  }
  return {x, y};
}

constexpr std::uint64_t hilbert_xy2d(unsigned order, Point p) {
  const std::uint32_t n = 1u << order;
  std::uint32_t x = p.x, y = p.y;
  std::uint64_t d = 0;
  for (std::uint32_t s = n / 2; s > 0; s /= 2) {
    const std::uint32_t rx = (x & s) ? 1 : 0;
    const std::uint32_t ry = (y & s) ? 1 : 0;
    d += std::uint64_t{s} * s * ((3 * rx) ^ ry);
    detail::hilbert_rotate(n, x, y, rx, ry);
  }
  return d;
}

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend constexpr bool operator==(Rgb, Rgb) = default;
};

/// Colors indexed by TaxonomyLabel value.
using Palette = std::array<Rgb, 5>;

inline constexpr Palette kDefaultPalette{
    Rgb{0, 0, 255},     // reserved
    Rgb{0, 170, 0},     // available
    Rgb{0, 0, 0},       // unrouted assigned
    Rgb{128, 128, 128}, // routed unused
    Rgb{220, 0, 0},     // used
};

struct Raster {
  std::uint32_t width = 0, height = 0;
  std::vector<std::uint8_t> rgb; ///< row-major, 3 bytes per pixel

  Rgb at(std::uint32_t x, std::uint32_t y) const {
    const std::size_t i = 3 * (std::size_t{y} * width + x);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
};

/// Majority leaf over a run of blocks. Ties go to the higher label value
/// (used, routed unused, unrouted assigned, available, reserved).
inline TaxonomyLabel majority_label(const BlockLabelMap& map, Block24Id first, std::uint32_t count) {
  std::array<std::uint32_t, 5> c{};
  for (std::uint32_t i = 0; i < count; ++i) ++c[static_cast<std::size_t>(map.label(first + i))];
  std::size_t best = 4;
  for (std::size_t l = 5; l-- > 0;)
    if (c[l] > c[best]) best = l;
  return static_cast<TaxonomyLabel>(best);
}

/// Renders the label map along a Hilbert curve. At order 12 each pixel is one /24;
/// lower orders aggregate 4^(12-order) consecutive blocks per pixel.
inline Raster render_hilbert(const BlockLabelMap& map, unsigned order = 12, const Palette& palette = kDefaultPalette,
                             unsigned threads = 1) {
  if (order < 1 || order > 12) throw ConfigError("hilbert order must be in [1, 12]");
  Raster img;
  img.width = img.height = 1u << order;
  img.rgb.assign(3 * std::size_t{img.width} * img.height, 0);
  const std::uint32_t per_pixel = 1u << (2 * (12 - order));
  parallel_for(threads, 0, img.height, [&](std::uint64_t y0, std::uint64_t y1) {
    for (auto y = static_cast<std::uint32_t>(y0); y < y1; ++y)
      for (std::uint32_t x = 0; x < img.width; ++x) {
        const std::uint64_t d = hilbert_xy2d(order, {x, y});
        const auto first = static_cast<Block24Id>(d * per_pixel);
        const TaxonomyLabel l = per_pixel == 1 ? map.label(first) : majority_label(map, first, per_pixel);
        const Rgb c = palette[static_cast<std::size_t>(l)];
        const std::size_t i = 3 * (std::size_t{y} * img.width + x);
        img.rgb[i] = c.r;
        img.rgb[i + 1] = c.g;
        img.rgb[i + 2] = c.b;
      }
  }, 1);
  return img;
}

/// Binary PPM (P6).
inline void write_ppm(std::ostream& os, const Raster& img) {
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
}

/// 8-bit RGB PNG, no interlace, no ancillary chunks (output depends only on pixels).
inline void write_png(std::ostream& os, const Raster& img, int level = 6) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG encoding failed");
  }
  png_set_write_fn(
      png, &os,
      [](png_structp p, png_bytep data, png_size_t len) {
        static_cast<std::ostream*>(png_get_io_ptr(p))->write(reinterpret_cast<const char*>(data),
                                                             static_cast<std::streamsize>(len));
      },
      [](png_structp p) { static_cast<std::ostream*>(png_get_io_ptr(p))->flush(); });
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, level);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
  png_write_info(png, info);
  const std::size_t stride = 3 * std::size_t{img.width};
  for (std::uint32_t y = 0; y < img.height; ++y)
    png_write_row(png, const_cast<png_bytep>(img.rgb.data() + y * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (!os) throw Error("PNG write failed");
}

} // namespace v4census

#endif
