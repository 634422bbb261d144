#include "etf/renderer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "etf/measure_lab.hpp"

namespace etf {

namespace {

constexpr double kClusterTol = 1e-6;

struct PixelResult {
  PixelClass cls = PixelClass::Undecided;
  int escape_step = 0;
  Complex rep;  // cycle representative for attracted pixels
};

// Smallest point of the final cycle in lexicographic order, so every pixel of
// a basin lands on the same representative whatever its phase.
Complex cycle_representative(const OrbitRecord& rec, int period) {
  Complex best;
  bool have = false;
  size_t n = rec.points.size();
  for (size_t k = n - static_cast<size_t>(period); k < n; ++k) {
    Complex w = rec.points[k].is_zero() ? Complex{} : rec.points[k].to_complex();
    if (!have || w.real() < best.real() || (w.real() == best.real() && w.imag() < best.imag())) best = w;
    have = true;
  }
  return best;
}

PixelResult classify_pixel(const FunctionModel& model, Complex z, const OrbitOptions& opt) {
  PixelResult out;
  OrbitRecord rec = iterate_orbit(model, LogComplex::from_complex(z), opt);
  if (rec.stop_reason == StopReason::ErrorState) {
    out.cls = PixelClass::Error;
    return out;
  }
  if (std::holds_alternative<ExponentialEscape>(rec.classification) || rec.stop_reason == StopReason::Saturated) {
    out.cls = PixelClass::Escaping;
    const double threshold = std::log(1e10);
    out.escape_step = static_cast<int>(rec.points.size());
    for (size_t k = 0; k < rec.points.size(); ++k) {
      if (rec.points[k].saturated || rec.points[k].total_log_mod() > threshold) {
        out.escape_step = static_cast<int>(k);
        break;
      }
    }
    return out;
  }
  if (const auto* a = std::get_if<AttractedToCycle>(&rec.classification)) {
    out.cls = PixelClass::Attracted;
    out.rep = cycle_representative(rec, a->period);
    return out;
  }
  out.cls = std::holds_alternative<Preperiodic>(rec.classification) ? PixelClass::Preperiodic : PixelClass::Undecided;
  return out;
}

Rgb lerp(Rgb a, Rgb b, double t) {
  Rgb c;
  for (int k = 0; k < 3; ++k) c[k] = static_cast<std::uint8_t>(std::lround(a[k] + (b[k] - a[k]) * t));
  return c;
}

}  // namespace

void ImageSpec::validate() const {
  if (width < 1 || height < 1) throw InvalidParams("image size must be at least 1x1");
  if (!(window.re_max > window.re_min) || !(window.im_max > window.im_min))
    throw InvalidParams("window must have re_min < re_max and im_min < im_max");
  if (max_iter < 1) throw InvalidParams("max_iter must be at least 1");
  if (palette.basins.empty()) throw InvalidParams("palette needs at least one basin color");
}

Complex ImageSpec::pixel_center(int i, int j) const {
  double dx = (window.re_max - window.re_min) / width;
  double dy = (window.im_max - window.im_min) / height;
  return {window.re_min + (i + 0.5) * dx, window.im_max - (j + 0.5) * dy};
}

std::pair<int, int> ImageSpec::pixel_of(Complex z) const {
  double x = (z.real() - window.re_min) / (window.re_max - window.re_min) * width;
  double y = (window.im_max - z.imag()) / (window.im_max - window.im_min) * height;
  if (!(x >= 0 && x < width && y >= 0 && y < height)) return {-1, -1};
  return {static_cast<int>(x), static_cast<int>(y)};
}

ImageBuffer::ImageBuffer(int w, int h)
    : width(w), height(h), pixels(static_cast<size_t>(w) * static_cast<size_t>(h) * 3, 0) {}

Rgb ImageBuffer::at(int i, int j) const {
  size_t o = (static_cast<size_t>(j) * static_cast<size_t>(width) + static_cast<size_t>(i)) * 3;
  return {pixels[o], pixels[o + 1], pixels[o + 2]};
}

void ImageBuffer::set(int i, int j, Rgb c) {
  size_t o = (static_cast<size_t>(j) * static_cast<size_t>(width) + static_cast<size_t>(i)) * 3;
  pixels[o] = c[0];
  pixels[o + 1] = c[1];
  pixels[o + 2] = c[2];
}

const char* to_string(PixelClass c) {
  switch (c) {
    case PixelClass::Escaping: return "escaping";
    case PixelClass::Attracted: return "attracted";
    case PixelClass::Preperiodic: return "preperiodic";
    case PixelClass::Undecided: return "undecided";
    case PixelClass::Error: return "error";
  }
  return "?";
}

int Rendering::count(PixelClass c) const {
  int n = 0;
  for (PixelClass x : classes) n += x == c;
  return n;
}

PixelClass Rendering::class_at(int i, int j) const {
  return classes[static_cast<size_t>(j) * static_cast<size_t>(image.width) + static_cast<size_t>(i)];
}

int Rendering::basin_at(int i, int j) const {
  return basin[static_cast<size_t>(j) * static_cast<size_t>(image.width) + static_cast<size_t>(i)];
}

Rendering render_classification(const FunctionModel& model, const ImageSpec& img) {
  img.validate();
  const size_t n = static_cast<size_t>(img.width) * static_cast<size_t>(img.height);
  OrbitOptions opt = orbit_options_for(model, img.max_iter);
  std::vector<PixelResult> px(n);
  double dx = (img.window.re_max - img.window.re_min) / img.width;
  double dy = (img.window.im_max - img.window.im_min) / img.height;
  parallel_for(n, resolve_threads(img.threads), [&](size_t k) {
    int i = static_cast<int>(k % static_cast<size_t>(img.width));
    int j = static_cast<int>(k / static_cast<size_t>(img.width));
    Complex z = img.pixel_center(i, j);
    if (img.jitter) z += Complex((uniform01(img.seed, k, 0) - 0.5) * dx, (uniform01(img.seed, k, 1) - 0.5) * dy);
    px[k] = classify_pixel(model, z, opt);
  });

  // Basin labels are assigned in row-major order so they are independent of
  // the scheduling above.
  Rendering out;
  out.image = ImageBuffer(img.width, img.height);
  out.classes.resize(n);
  out.basin.assign(n, -1);
  const Palette& pal = img.palette;
  for (size_t k = 0; k < n; ++k) {
    const PixelResult& p = px[k];
    out.classes[k] = p.cls;
    Rgb color = pal.undecided;
    switch (p.cls) {
      case PixelClass::Attracted: {
        int b = -1;
        for (size_t m = 0; m < out.basin_representatives.size(); ++m) {
          Complex r = out.basin_representatives[m];
          if (std::abs(r - p.rep) <= kClusterTol * std::max(1.0, std::abs(r))) {
            b = static_cast<int>(m);
            break;
          }
        }
        if (b < 0) {
          b = static_cast<int>(out.basin_representatives.size());
          out.basin_representatives.push_back(p.rep);
        }
        out.basin[k] = b;
        color = pal.basins[static_cast<size_t>(b) % pal.basins.size()];
        break;
      }
      case PixelClass::Escaping: {
        double t = std::min(1.0, static_cast<double>(std::max(0, p.escape_step - 1)) / std::max(1, pal.escape_steps));
        color = lerp(pal.escape_fast, pal.escape_slow, t);
        break;
      }
      case PixelClass::Preperiodic: color = pal.preperiodic; break;
      case PixelClass::Undecided: color = pal.undecided; break;
      case PixelClass::Error: color = pal.error; break;
    }
    out.image.set(static_cast<int>(k % static_cast<size_t>(img.width)), static_cast<int>(k / static_cast<size_t>(img.width)),
                  color);
  }
  return out;
}

int basin_components(const Rendering& r, int b) {
  const int w = r.image.width, h = r.image.height;
  std::vector<char> seen(r.basin.size(), 0);
  std::vector<size_t> stack;
  int comps = 0;
  for (size_t s = 0; s < r.basin.size(); ++s) {
    if (r.basin[s] != b || seen[s]) continue;
    ++comps;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      size_t k = stack.back();
      stack.pop_back();
      int i = static_cast<int>(k % static_cast<size_t>(w)), j = static_cast<int>(k / static_cast<size_t>(w));
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int d = 0; d < 4; ++d) {
        int a = i + di[d], c = j + dj[d];
        if (a < 0 || a >= w || c < 0 || c >= h) continue;
        size_t q = static_cast<size_t>(c) * static_cast<size_t>(w) + static_cast<size_t>(a);
        if (r.basin[q] == b && !seen[q]) {
          seen[q] = 1;
          stack.push_back(q);
        }
      }
    }
  }
  return comps;
}

std::string encode_ppm(const ImageBuffer& buf) {
  if (buf.pixels.size() != static_cast<size_t>(buf.width) * static_cast<size_t>(buf.height) * 3)
    throw InvalidParams("pixel buffer size does not match the image size");
  std::string out = "P6\n" + std::to_string(buf.width) + " " + std::to_string(buf.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(buf.pixels.data()), buf.pixels.size());
  return out;
}

void write_ppm(const ImageBuffer& buf, const std::string& path) {
  std::string bytes = encode_ppm(buf);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed for " + path);
}

ImageBuffer decode_ppm(const std::string& bytes) {
  // Header only: the pixel bytes may contain anything, including NUL and
  // whitespace, so the scan stops right after the maxval digits.
  std::string head = bytes.substr(0, std::min<size_t>(bytes.size(), 64));
  int w = 0, h = 0, maxval = 0, used = 0;
  if (head.rfind("P6\n", 0) != 0 || std::sscanf(head.c_str() + 3, "%d %d\n%d%n", &w, &h, &maxval, &used) != 3 ||
      maxval != 255 || w < 1 || h < 1)
    throw IoError("not a binary PPM with maxval 255");
  size_t start = 3 + static_cast<size_t>(used);
  if (start >= bytes.size() || bytes[start] != '\n') throw IoError("PPM header must end with a single newline");
  ++start;
  ImageBuffer buf(w, h);
  if (bytes.size() != start + buf.pixels.size()) throw IoError("PPM pixel data has the wrong length");
  std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(start), bytes.end(), buf.pixels.begin());
  return buf;
}

ImageBuffer read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return decode_ppm(ss.str());
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace etf
