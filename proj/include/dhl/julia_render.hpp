#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "dhl/complex_sphere.hpp"
#include "dhl/errors.hpp"
#include "dhl/parallel.hpp"
#include "dhl/rational_map.hpp"
#include "dhl/rng.hpp"

namespace dhl {

// ---- basin classification -----------------------------------------------------

enum class Basin { Zero, One, Undecided };

struct PointClass {
  Basin basin = Basin::Undecided;
  int entry_time = 0;  // first n with the orbit inside the eps-ball
};

// Classify a starting point by which superattracting fixed point captures its
// orbit: the first iterate landing within eps of 0 (or of 1) decides, with a
// pass through infinity feeding the basin of 0 on the next step.  Points that
// enter neither ball within max_iter are undecided — numerically on or near
// the common basin boundary.  eps below 0.1 keeps both balls strictly inside
// their basins at small branching numbers.
inline PointClass classify_point(const MapParams& p, Complex t, int max_iter, double eps) {
  if (max_iter < 1) throw DomainError("classify_point: max_iter must be >= 1");
  if (!(eps > 0.0) || eps >= 0.1) throw DomainError("classify_point: eps must lie in (0, 0.1)");
  ComplexValue cur(t);
  for (int n = 0; n <= max_iter; ++n) {
    if (!cur.infinite()) {
      Complex z = cur.value();
      if (std::abs(z) < eps) return {Basin::Zero, n};
      if (std::abs(z - 1.0) < eps) return {Basin::One, n};
    }
    if (n < max_iter) cur = eval_map(p, cur);
  }
  return {Basin::Undecided, max_iter};
}

// ---- raster rendering -------------------------------------------------------------

struct RasterSpec {
  Complex center = Complex(0.0, 0.0);
  double width = 3.0;   // side length of the (square) view in the plane
  int pixels = 512;     // square pixel grid
  int max_iter = 200;
  double eps = 1e-3;    // attraction-ball radius for classification

  void validate() const {
    if (pixels < 16) throw DomainError("RasterSpec: need at least 16 pixels per side");
    if (pixels > 8192) throw SizeGuardError("RasterSpec: image larger than the 64 Mpixel guard");
    if (!(width > 0.0)) throw DomainError("RasterSpec: width must be positive");
    if (max_iter < 1) throw DomainError("RasterSpec: max_iter must be >= 1");
    if (!(eps > 0.0) || eps >= 0.1) throw DomainError("RasterSpec: eps must lie in (0, 0.1)");
  }
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> rgb;  // 3 bytes per pixel, row-major, top row first
};

struct RasterRender {
  Image image;
  std::int64_t undecided_pixels = 0;

  double undecided_fraction() const {
    double total = static_cast<double>(image.width) * image.height;
    return total > 0.0 ? static_cast<double>(undecided_pixels) / total : 0.0;
  }
};

namespace detail {

inline unsigned char shade_byte(double v) {
  if (v < 0.0) v = 0.0;
  if (v > 1.0) v = 1.0;
  return static_cast<unsigned char>(std::lround(v * 255.0));
}

}  // namespace detail

// Undecided pixels are black; the basin of 0 is shaded in cold (blue) tones
// and the basin of 1 in warm tones, both with intensity set by the entry
// time.  Pixel centers sample a square window of side `width` around
// `center`, row-major from the top-left.
inline RasterRender render_raster(const MapParams& p, const RasterSpec& spec, int jobs = 1) {
  spec.validate();
  const int n = spec.pixels;
  RasterRender out;
  out.image.width = n;
  out.image.height = n;
  out.image.rgb.assign(static_cast<std::size_t>(n) * n * 3, 0);
  std::vector<std::int64_t> undecided_per_row(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), jobs, [&](std::size_t row) {
    double im = spec.center.imag() + spec.width * (0.5 - (row + 0.5) / n);
    for (int col = 0; col < n; ++col) {
      double re = spec.center.real() + spec.width * ((col + 0.5) / n - 0.5);
      PointClass pc = classify_point(p, Complex(re, im), spec.max_iter, spec.eps);
      double depth = 1.0 - std::exp(-0.12 * pc.entry_time);
      unsigned char* px = &out.image.rgb[(row * static_cast<std::size_t>(n) +
                                          static_cast<std::size_t>(col)) *
                                         3];
      switch (pc.basin) {
        case Basin::Zero:
          px[0] = detail::shade_byte(0.10 + 0.25 * depth);
          px[1] = detail::shade_byte(0.25 + 0.55 * depth);
          px[2] = detail::shade_byte(0.45 + 0.55 * depth);
          break;
        case Basin::One:
          px[0] = detail::shade_byte(0.45 + 0.55 * depth);
          px[1] = detail::shade_byte(0.22 + 0.45 * depth);
          px[2] = detail::shade_byte(0.08 + 0.15 * depth);
          break;
        case Basin::Undecided:
          px[0] = px[1] = px[2] = 0;
          ++undecided_per_row[row];
          break;
      }
    }
  });
  for (std::int64_t c : undecided_per_row) out.undecided_pixels += c;
  return out;
}

// ---- inverse-iteration cloud --------------------------------------------------------

// A random backward orbit from the boundary fixed point, drawing uniformly
// among ALL preimages (inner and outer) at every step; after a short burn-in
// the points distribute over the full basin boundary (the balanced measure),
// giving a cheap plot-ready skeleton of it.
inline std::vector<Complex> inverse_iteration_cloud(const MapParams& p, int count,
                                                    std::uint64_t seed) {
  if (count < 1) throw DomainError("inverse_iteration_cloud: count must be positive");
  if (count > 10'000'000)
    throw SizeGuardError("inverse_iteration_cloud: count exceeds 10^7");
  constexpr int kBurnIn = 20;
  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(count));
  SplitMix64 rng(seed);
  Complex y(find_unstable_fixed_point(p).location, 0.0);
  for (int k = 0; k < kBurnIn + count; ++k) {
    std::vector<Complex> kids;
    for (const ComplexValue& v : all_preimages(p, y))
      if (!v.infinite()) kids.push_back(v.value());
    if (kids.empty())
      throw NonConvergenceError("inverse_iteration_cloud: no finite preimages");
    y = kids[static_cast<std::size_t>(rng.next_below(kids.size()))];
    if (k >= kBurnIn) out.push_back(y);
  }
  return out;
}

// Binary PPM (P6, maxval 255).
inline void write_ppm(const std::string& path, const Image& img) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("write_ppm: cannot open " + path);
  std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  bool ok = std::fwrite(header.data(), 1, header.size(), f) == header.size();
  ok = ok && std::fwrite(img.rgb.data(), 1, img.rgb.size(), f) == img.rgb.size();
  if (std::fclose(f) != 0) ok = false;
  if (!ok) throw IoError("write_ppm: short write to " + path);
}

}  // namespace dhl
