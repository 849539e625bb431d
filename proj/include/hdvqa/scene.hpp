#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hdvqa/hdc.hpp"

namespace hdvqa {

inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kChannels = 3;
inline constexpr std::size_t kImageSize = kImageSide * kImageSide * kChannels;  // 2352
inline constexpr std::size_t kGlyphSide = 12;
inline constexpr std::size_t kQuadrantSide = 14;

struct Figure {
  Concept shape = Concept::Circle;
  Concept color = Concept::Red;

  friend bool operator==(const Figure&, const Figure&) = default;
};

struct Placement {
  Concept position = Concept::TopLeft;
  Figure figure;

  friend bool operator==(const Placement&, const Placement&) = default;
};

/// Two figures at two distinct quadrants.
struct Scene {
  std::array<Placement, 2> placements;

  /// Throws ValidationError on wrong roles or a repeated position.
  void validate() const;

  /// Placements sorted by position enumeration order.
  Scene canonical() const;

  /// Figure at `position`, or nullptr if that quadrant is empty.
  const Figure* at(Concept position) const;

  /// Stable identity of the rendered image (equal for scenes that differ only
  /// in placement order), in [0, 4^2 * 16^2).
  std::uint32_t image_id() const;

  std::string to_string() const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// 28x28 RGB, row-major, channel-last, values in [0, 1].
struct Image {
  std::array<float, kImageSize> pixels{};

  static constexpr std::size_t offset(std::size_t row, std::size_t col,
                                      std::size_t channel) {
    return (row * kImageSide + col) * kChannels + channel;
  }
  float at(std::size_t row, std::size_t col, std::size_t channel) const {
    return pixels[offset(row, col, channel)];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

struct Rgb {
  float r, g, b;
};

using GlyphMask = std::array<std::array<bool, kGlyphSide>, kGlyphSide>;

/// Fixed 12x12 binary mask per shape.
const GlyphMask& glyph_mask(Concept shape);
std::size_t glyph_pixel_count(Concept shape);
Rgb color_rgb(Concept color);

/// Ordered scenes (dedupe=false, 3072) or one canonical scene per distinct
/// image (dedupe=true, 1536). Order: position indices, then per placement
/// shape index, then color index.
std::vector<Scene> enumerate_scenes(bool dedupe);

Image render(const Scene& scene);

/// Binary PPM (P6, maxval 255), channel values rounded half-up.
std::string to_ppm(const Image& image);
/// Parses a 28x28 P6 file; throws ValidationError otherwise.
Image from_ppm(const std::string& bytes);

/// Ground truth for the five training questions and three generalization
/// questions, derived from the symbolic scene only.
struct SceneLabels {
  /// circle exists, green exists, magenta triangle exists, square at
  /// bottom-left, top-left and top-right hold the same shape
  std::array<bool, 5> q{};
  /// square exists, triangle exists, cross exists
  std::array<bool, 3> g{};

  friend bool operator==(const SceneLabels&, const SceneLabels&) = default;
};

SceneLabels label_scene(const Scene& scene);

}  // namespace hdvqa
