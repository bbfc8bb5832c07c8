#include "gtakit/scene.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace gtakit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Lattice value in [0,1) from hashed integer coordinates.
double lattice_value(std::uint64_t seed, int octave, int ch, int iy, int ix) {
  std::uint64_t h = seed;
  h = splitmix64(h ^ (static_cast<std::uint64_t>(octave) << 48));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(ch) << 40));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy)) << 20));
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace

Texture make_texture(std::uint64_t seed, int height, int width) {
  Texture tex;
  tex.height = height;
  tex.width = width;
  tex.seed = seed;
  tex.data.assign(static_cast<size_t>(height) * width * 3, 0.0f);

  const int n_octaves = 5;
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      for (int ch = 0; ch < 3; ++ch) {
        double value = 0.0, amp_sum = 0.0;
        double amp = 1.0;
        for (int o = 0; o < n_octaves; ++o) {
          const int ly = 5 << o, lx = 9 << o;  // odd lattice widths break 90-degree symmetry
          const double fy = static_cast<double>(row) / height * ly;
          const double fx = static_cast<double>(col) / width * lx;
          const int iy = static_cast<int>(fy), ix = static_cast<int>(fx);
          const double ty = smoothstep(fy - iy), tx = smoothstep(fx - ix);
          const int iy1 = std::min(iy + 1, ly);  // latitude clamps at the poles
          const int ix1 = (ix + 1) % lx;         // longitude wraps
          const double v00 = lattice_value(seed, o, ch, iy, ix);
          const double v01 = lattice_value(seed, o, ch, iy, ix1);
          const double v10 = lattice_value(seed, o, ch, iy1, ix);
          const double v11 = lattice_value(seed, o, ch, iy1, ix1);
          value += amp * ((v00 * (1 - tx) + v01 * tx) * (1 - ty) +
                          (v10 * (1 - tx) + v11 * tx) * ty);
          amp_sum += amp;
          amp *= 0.55;
        }
        tex.data[(static_cast<size_t>(row) * width + col) * 3 + ch] =
            static_cast<float>(value / amp_sum);
      }
    }
  }

  // Colored lines at hashed positions give sharp, unambiguous landmarks.
  const int n_lines = 14;
  for (int k = 0; k < n_lines; ++k) {
    const bool meridian = k % 2 == 0;
    const std::uint64_t h = splitmix64(seed ^ (0xabcdull + k));
    const int pos = static_cast<int>(h % static_cast<std::uint64_t>(meridian ? width : height));
    float color[3];
    for (int ch = 0; ch < 3; ++ch)
      color[ch] = static_cast<float>(lattice_value(seed, 7, ch, k, 0));
    if (meridian) {
      for (int row = 0; row < height; ++row)
        for (int ch = 0; ch < 3; ++ch)
          tex.data[(static_cast<size_t>(row) * width + pos) * 3 + ch] = color[ch];
    } else {
      for (int col = 0; col < width; ++col)
        for (int ch = 0; ch < 3; ++ch)
          tex.data[(static_cast<size_t>(pos) * width + col) * 3 + ch] = color[ch];
    }
  }

  for (auto& v : tex.data) v = std::clamp(v, 0.0f, 1.0f);
  return tex;
}

double texture_longitude_autocorr(const Texture& tex, double shift_frac) {
  const int shift = static_cast<int>(std::lround(shift_frac * tex.width)) % tex.width;
  const size_t n = tex.data.size();
  double mean = 0.0;
  for (float v : tex.data) mean += v;
  mean /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (int row = 0; row < tex.height; ++row)
    for (int col = 0; col < tex.width; ++col)
      for (int ch = 0; ch < 3; ++ch) {
        const double a = tex.at(row, col, ch) - mean;
        const double b = tex.at(row, (col + shift) % tex.width, ch) - mean;
        num += a * b;
        den += a * a;
      }
  return num / den;
}

namespace {

void sample_texture(const Texture& tex, double lon, double lat, float* rgb) {
  // lon in [0, 2pi), lat in [-pi/2, pi/2].
  const double u = lon / kTwoPi * tex.width - 0.5;
  const double v = (lat + kPi / 2.0) / kPi * tex.height - 0.5;
  const int u0 = static_cast<int>(std::floor(u)), v0 = static_cast<int>(std::floor(v));
  const double tu = u - u0, tv = v - v0;
  const auto wrap_u = [&](int c) { return ((c % tex.width) + tex.width) % tex.width; };
  const auto clamp_v = [&](int r) { return std::clamp(r, 0, tex.height - 1); };
  for (int ch = 0; ch < 3; ++ch) {
    const double a = tex.at(clamp_v(v0), wrap_u(u0), ch) * (1 - tu) +
                     tex.at(clamp_v(v0), wrap_u(u0 + 1), ch) * tu;
    const double b = tex.at(clamp_v(v0 + 1), wrap_u(u0), ch) * (1 - tu) +
                     tex.at(clamp_v(v0 + 1), wrap_u(u0 + 1), ch) * tu;
    rgb[ch] = static_cast<float>(a * (1 - tv) + b * tv);
  }
}

}  // namespace

std::vector<float> render_view(const Texture& tex, const So3Rotation& r, const Intrinsics& K) {
  const int res = K.resolution;
  std::vector<float> image(static_cast<size_t>(res) * res * 3);
  const Eigen::Matrix3d to_world = r.r.transpose();
  for (int i = 0; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      const double x = ((j + 0.5) / res - 0.5) * K.sensor_w;
      const double y = ((i + 0.5) / res - 0.5) * K.sensor_h;
      const Eigen::Vector3d dir = (to_world * Eigen::Vector3d(x, y, K.focal)).normalized();
      double lon = std::atan2(dir.x(), dir.z());
      if (lon < 0.0) lon += kTwoPi;
      const double lat = std::asin(std::clamp(dir.y(), -1.0, 1.0));
      sample_texture(tex, lon, lat, image.data() + (static_cast<size_t>(i) * res + j) * 3);
    }
  }
  return image;
}

SceneSample make_scene(const Texture& tex, std::uint64_t seed, const Intrinsics& K) {
  std::mt19937_64 rng(seed);
  const int n_views = SceneSample::kContextViews + 1;
  std::vector<So3Rotation> abs_rots;
  for (int i = 0; i < n_views; ++i) abs_rots.push_back(sample_rotation(rng));
  const So3Rotation first_inv = inverse(abs_rots[0]);

  SceneSample scene;
  scene.resolution = K.resolution;
  for (int i = 0; i < n_views; ++i) {
    View view;
    view.rotation = compose(abs_rots[i], first_inv);
    view.image = render_view(tex, view.rotation, K);
    scene.views.push_back(std::move(view));
  }
  return scene;
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

void write_scene(std::ostream& os, const SceneSample& scene) {
  write_u32(os, static_cast<std::uint32_t>(scene.views.size()));
  write_u32(os, static_cast<std::uint32_t>(scene.resolution));
  write_u32(os, static_cast<std::uint32_t>(scene.resolution));
  for (const auto& view : scene.views) {
    float rot[9];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot[r * 3 + c] = static_cast<float>(view.rotation.r(r, c));
    os.write(reinterpret_cast<const char*>(rot), sizeof(rot));
    os.write(reinterpret_cast<const char*>(view.image.data()),
             static_cast<std::streamsize>(view.image.size() * sizeof(float)));
  }
}

}  // namespace

void write_dataset(const std::string& path, const std::vector<SceneSample>& scenes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_dataset: cannot open " + path);
  os.write("GTAS", 4);
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(scenes.size()));
  for (const auto& scene : scenes) write_scene(os, scene);
  if (!os) throw std::runtime_error("write_dataset: write failed for " + path);
}

std::vector<SceneSample> read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_dataset: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "GTAS", 4) != 0)
    throw std::runtime_error("read_dataset: bad magic in " + path);
  const std::uint32_t version = read_u32(is);
  if (version != 1) throw std::runtime_error("read_dataset: unsupported version");
  const std::uint32_t n_scenes = read_u32(is);
  std::vector<SceneSample> scenes;
  scenes.reserve(n_scenes);
  for (std::uint32_t s = 0; s < n_scenes; ++s) {
    SceneSample scene;
    const std::uint32_t n_views = read_u32(is);
    const std::uint32_t h = read_u32(is);
    const std::uint32_t w = read_u32(is);
    if (h != w) throw std::runtime_error("read_dataset: non-square views unsupported");
    scene.resolution = static_cast<int>(h);
    for (std::uint32_t i = 0; i < n_views; ++i) {
      View view;
      float rot[9];
      is.read(reinterpret_cast<char*>(rot), sizeof(rot));
      Eigen::Matrix3d m;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = rot[r * 3 + c];
      // Stored in f32; re-orthonormality holds only to f32 precision, so
      // bypass the strict constructor via Gram-Schmidt re-projection.
      Eigen::Vector3d c0 = m.col(0).normalized();
      Eigen::Vector3d c1 = (m.col(1) - c0 * c0.dot(m.col(1))).normalized();
      Eigen::Vector3d c2 = c0.cross(c1);
      Eigen::Matrix3d ortho;
      ortho << c0, c1, c2;
      view.rotation = So3Rotation(ortho);
      view.image.resize(static_cast<size_t>(h) * w * 3);
      is.read(reinterpret_cast<char*>(view.image.data()),
              static_cast<std::streamsize>(view.image.size() * sizeof(float)));
      scene.views.push_back(std::move(view));
    }
    if (!is) throw std::runtime_error("read_dataset: truncated file " + path);
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

void generate_dataset(const std::string& path, std::uint64_t base_seed, int n_scenes,
                      const Intrinsics& K, std::uint64_t texture_seed) {
  const Texture tex = make_texture(texture_seed != 0 ? texture_seed : base_seed);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("generate_dataset: cannot open " + path);
  os.write("GTAS", 4);
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(n_scenes));
  for (int s = 0; s < n_scenes; ++s) {
    const std::uint64_t scene_seed = splitmix64(base_seed ^ (0x5ce9e5ull + s));
    write_scene(os, make_scene(tex, scene_seed, K));
  }
  if (!os) throw std::runtime_error("generate_dataset: write failed for " + path);
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("file_checksum: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  char buf[1 << 16];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    const std::streamsize n = is.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

}  // namespace gtakit
