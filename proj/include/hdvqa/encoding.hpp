#pragma once

#include <span>

#include "hdvqa/hdc.hpp"
#include "hdvqa/scene.hpp"

namespace hdvqa {

/// m = sum over placements of pos * (shape * shapeValue + color * colorValue).
/// Components are even integers in [-4, 4].
HDVector encode_scene(const Scene& scene, const Codebook& cb);

struct DecodeResult {
  Concept value;
  /// Best cosine minus second best; 0 on a tie.
  double margin;
  /// Cosine against each candidate, in role order.
  std::array<double, 4> cosines;
};

/// Unbinds `position` and `key` (shape or color) from m and returns the
/// nearest candidate value by cosine. Ties go to the earlier candidate.
DecodeResult decode_attribute(std::span<const double> m, Concept position,
                              Concept key, const Codebook& cb);

}  // namespace hdvqa
