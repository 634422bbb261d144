#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "etf/orbit_engine.hpp"

namespace etf {

using Rgb = std::array<std::uint8_t, 3>;

struct Window {
  double re_min = -2.0, re_max = 2.0, im_min = -2.0, im_max = 2.0;
};

/// Colors per orbit class. Basins cycle through `basins` in order of first
/// appearance (row-major), so the shades are stable for a given image.
struct Palette {
  std::vector<Rgb> basins{{{16, 16, 64}}, {{64, 12, 24}}, {{12, 52, 28}}, {{48, 40, 8}}, {{40, 12, 56}}};
  Rgb escape_fast{{252, 250, 240}};  // escapes on the first step
  Rgb escape_slow{{170, 200, 235}};  // escapes after `escape_steps` or more
  int escape_steps = 24;
  Rgb preperiodic{{230, 150, 40}};
  Rgb undecided{{128, 128, 128}};
  Rgb error{{255, 0, 0}};
};

struct ImageSpec {
  Window window;
  int width = 512;
  int height = 512;
  int max_iter = 200;
  Palette palette;
  bool jitter = false;  // sub-pixel offsets drawn from `seed`
  std::uint64_t seed = 0;
  int threads = 0;  // hint only; output does not depend on it

  void validate() const;
  /// Pixel center (column i, row j); row 0 is the top edge.
  Complex pixel_center(int i, int j) const;
  /// The pixel containing z, or {-1, -1} when z is outside the window.
  std::pair<int, int> pixel_of(Complex z) const;
};

struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  ImageBuffer() = default;
  ImageBuffer(int w, int h);
  Rgb at(int i, int j) const;
  void set(int i, int j, Rgb c);
};

enum class PixelClass : std::uint8_t { Escaping, Attracted, Preperiodic, Undecided, Error };
const char* to_string(PixelClass c);

struct Rendering {
  ImageBuffer image;
  std::vector<PixelClass> classes;  // row-major
  std::vector<int> basin;           // basin index for attracted pixels, else -1
  std::vector<Complex> basin_representatives;
  int count(PixelClass c) const;
  PixelClass class_at(int i, int j) const;
  int basin_at(int i, int j) const;
};

Rendering render_classification(const FunctionModel& model, const ImageSpec& img);

/// Connected components (4-neighbour) of the pixels of basin `b`.
int basin_components(const Rendering& r, int b);

/// Binary P6 with header "P6\n{w} {h}\n255\n".
void write_ppm(const ImageBuffer& buf, const std::string& path);
std::string encode_ppm(const ImageBuffer& buf);
/// Accepts exactly the layout written above.
ImageBuffer read_ppm(const std::string& path);
ImageBuffer decode_ppm(const std::string& bytes);

}  // namespace etf
