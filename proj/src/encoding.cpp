#include "hdvqa/encoding.hpp"

#include "hdvqa/errors.hpp"

namespace hdvqa {

HDVector encode_scene(const Scene& scene, const Codebook& cb) {
  scene.validate();
  HDVector m(cb.dim());
  for (const auto& p : scene.placements) {
    const HDVector filler =
        bundle(bind(cb[Concept::Shape], cb[p.figure.shape]),
               bind(cb[Concept::Color], cb[p.figure.color]));
    m = bundle(m, bind(cb[p.position], filler));
  }
  return m;
}

DecodeResult decode_attribute(std::span<const double> m, Concept position,
                              Concept key, const Codebook& cb) {
  if (role_of(position) != Role::Position) {
    throw ValidationError("decode: not a position: " +
                          std::string(concept_name(position)));
  }
  if (key != Concept::Shape && key != Concept::Color) {
    throw ValidationError("decode: key must be shape or color");
  }
  const HDVector key_vec = bind(cb[position], cb[key]);
  const HDVector probe = hdvqa::bind(key_vec.span(), m);
  const auto& candidates = key == Concept::Shape ? kShapes : kColors;

  DecodeResult result{candidates[0], 0.0, {}};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    result.cosines[i] = cosine(cb[candidates[i]], probe);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < 4; ++i) {
    if (result.cosines[i] > result.cosines[best]) best = i;
  }
  double second = -2.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i != best) second = std::max(second, result.cosines[i]);
  }
  result.value = candidates[best];
  result.margin = result.cosines[best] - second;
  return result;
}

}  // namespace hdvqa
