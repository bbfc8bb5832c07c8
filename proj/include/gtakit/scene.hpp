#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gtakit/groups.hpp"

namespace gtakit {

// Equirectangular sphere texture, values in [0,1], periodic in longitude.
struct Texture {
  int height = 0, width = 0;
  std::vector<float> data;  // height x width x 3
  std::uint64_t seed = 0;

  float at(int row, int col, int ch) const {
    return data[(static_cast<size_t>(row) * width + col) * 3 + ch];
  }
};

struct Intrinsics {
  double sensor_w = 1.0;
  double sensor_h = 1.0;
  double focal = 4.0;
  int resolution = 32;
};

struct View {
  So3Rotation rotation;
  std::vector<float> image;  // res x res x 3
};

// One training sample: 8 context views plus a target view (the last one).
// The first context rotation is the identity by construction.
struct SceneSample {
  std::vector<View> views;
  int resolution = 32;

  static constexpr int kContextViews = 8;
  const View& target() const { return views.back(); }
};

// Seeded multi-octave value noise plus colored great-circle lines; high
// frequency and non-symmetric so orientation is identifiable.
Texture make_texture(std::uint64_t seed, int height = 128, int width = 256);

// Pearson correlation between the texture and itself shifted by
// `shift_frac` of a full turn in longitude.
double texture_longitude_autocorr(const Texture& tex, double shift_frac);

// Pinhole render from the scene center: per-pixel camera ray, rotated to the
// world frame by r^-1, sampled bilinearly from the equirectangular texture.
std::vector<float> render_view(const Texture& tex, const So3Rotation& r, const Intrinsics& K);

// Samples 9 rotations, re-expresses them relative to the first one, renders
// all views. Deterministic in (texture, seed).
SceneSample make_scene(const Texture& tex, std::uint64_t seed, const Intrinsics& K = {});

// "GTAS" binary container, little-endian. Per scene: n_views, H, W, then per
// view a row-major 3x3 f32 rotation followed by H*W*3 f32 pixels.
void write_dataset(const std::string& path, const std::vector<SceneSample>& scenes);
std::vector<SceneSample> read_dataset(const std::string& path);

// Streaming variant: derives scene i's RNG stream from (base_seed, i). The
// sphere texture comes from texture_seed so that disjoint splits (different
// base seeds) can share one texture, as the experiment requires; texture_seed
// 0 means "use base_seed".
void generate_dataset(const std::string& path, std::uint64_t base_seed, int n_scenes,
                      const Intrinsics& K = {}, std::uint64_t texture_seed = 0);

std::uint64_t file_checksum(const std::string& path);

}  // namespace gtakit
