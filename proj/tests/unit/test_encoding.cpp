#include <doctest.h>

#include <random>

#include "../support/oracles.hpp"
#include "hdvqa/encoding.hpp"
#include "hdvqa/errors.hpp"

using namespace hdvqa;

namespace {

Scene example_scene() {
  return Scene{{Placement{Concept::TopLeft, {Concept::Square, Concept::Magenta}},
                Placement{Concept::TopRight, {Concept::Square, Concept::Green}}}};
}

}  // namespace

TEST_CASE("encode_scene: example scene decodes to square at top-left") {
  const auto cb = Codebook::make();
  const HDVector m = encode_scene(example_scene(), cb);
  const HDVector probe = bind(cb[Concept::Shape], bind(cb[Concept::TopLeft], m));
  const double sq = cosine(cb[Concept::Square], probe);
  for (Concept s : {Concept::Circle, Concept::Triangle, Concept::Cross}) {
    CHECK(sq > cosine(cb[s], probe));
  }
  MESSAGE("cos(square, probe) = " << sq);
  CHECK(decode_attribute(m.span(), Concept::TopLeft, Concept::Shape, cb).value ==
        Concept::Square);
  CHECK(decode_attribute(m.span(), Concept::TopLeft, Concept::Color, cb).value ==
        Concept::Magenta);
  CHECK(decode_attribute(m.span(), Concept::TopRight, Concept::Color, cb).value ==
        Concept::Green);
}

TEST_CASE("encode_scene: order invariant, even integers in [-4, 4]") {
  const auto cb = Codebook::make();
  for (const auto& s : enumerate_scenes(false)) {
    Scene swapped = s;
    std::swap(swapped.placements[0], swapped.placements[1]);
    const HDVector m = encode_scene(s, cb);
    REQUIRE(encode_scene(swapped, cb) == m);
    for (double x : m.components()) {
      REQUIRE(x == std::round(x));
      REQUIRE(static_cast<long>(x) % 2 == 0);
      REQUIRE(std::abs(x) <= 4.0);
    }
  }
}

TEST_CASE("encode_scene matches the formula computed independently") {
  const auto cb = Codebook::make();
  const Scene s = example_scene();
  oracle::Vec m(cb.dim(), 0.0);
  for (const auto& p : s.placements) {
    const auto filler = oracle::add(
        oracle::mul(cb[Concept::Shape].components(), cb[p.figure.shape].components()),
        oracle::mul(cb[Concept::Color].components(), cb[p.figure.color].components()));
    m = oracle::add(m, oracle::mul(cb[p.position].components(), filler));
  }
  CHECK(encode_scene(s, cb).components() == m);
}

TEST_CASE("disentangling yields the filler plus three bound noise terms, exactly") {
  const auto cb = Codebook::make();
  std::mt19937_64 rng(3);
  const auto scenes = enumerate_scenes(false);
  for (int n = 0; n < 200; ++n) {
    const Scene& s = scenes[rng() % scenes.size()];
    const HDVector m = encode_scene(s, cb);
    const auto& here = s.placements[0];
    const auto& there = s.placements[1];
    const HDVector probe = bind(cb[here.position], bind(cb[Concept::Shape], m));
    // shape value + shape*color*colorValue + (pos*pos') bound copies of the other figure
    const HDVector cross_key = bind(cb[here.position], cb[there.position]);
    HDVector expected = cb[here.figure.shape];
    expected = bundle(expected, bind(bind(cb[Concept::Shape], cb[Concept::Color]),
                                     cb[here.figure.color]));
    expected = bundle(expected, bind(cross_key, cb[there.figure.shape]));
    expected = bundle(expected,
                      bind(cross_key, bind(bind(cb[Concept::Shape], cb[Concept::Color]),
                                           cb[there.figure.color])));
    REQUIRE(probe == expected);
  }
}

TEST_CASE("decode_attribute recovers every occupied attribute of all 3072 scenes") {
  const auto cb = Codebook::make();
  std::size_t wrong = 0;
  double worst_margin = 1.0;
  for (const auto& s : enumerate_scenes(false)) {
    const HDVector m = encode_scene(s, cb);
    for (const auto& p : s.placements) {
      const auto shape = decode_attribute(m.span(), p.position, Concept::Shape, cb);
      const auto color = decode_attribute(m.span(), p.position, Concept::Color, cb);
      wrong += shape.value != p.figure.shape;
      wrong += color.value != p.figure.color;
      worst_margin = std::min({worst_margin, shape.margin, color.margin});
    }
  }
  CHECK(wrong == 0);
  CHECK(worst_margin > 0.0);
  MESSAGE("smallest decode margin on occupied positions: " << worst_margin);
}

TEST_CASE("decode_attribute at unoccupied positions has small margins") {
  const auto cb = Codebook::make();
  std::size_t total = 0, small = 0;
  for (const auto& s : enumerate_scenes(false)) {
    const HDVector m = encode_scene(s, cb);
    for (Concept pos : kPositions) {
      if (s.at(pos) != nullptr) continue;
      for (Concept key : {Concept::Shape, Concept::Color}) {
        ++total;
        small += decode_attribute(m.span(), pos, key, cb).margin < 0.2;
      }
    }
  }
  CHECK(static_cast<double>(small) >= 0.95 * static_cast<double>(total));
}

TEST_CASE("decode_attribute: scale invariance, ties and argument checks") {
  const auto cb = Codebook::make();
  const HDVector m = encode_scene(example_scene(), cb);
  const auto a = decode_attribute(m.span(), Concept::TopRight, Concept::Shape, cb);
  const auto b = decode_attribute(scaled(m, 2.0).span(), Concept::TopRight, Concept::Shape, cb);
  CHECK(a.value == b.value);
  CHECK(a.margin == doctest::Approx(b.margin).epsilon(1e-12));

  // probe == circle + square: integer dot products make the two cosines equal
  const HDVector tie_m = bind(bind(cb[Concept::TopLeft], cb[Concept::Shape]),
                              bundle(cb[Concept::Circle], cb[Concept::Square]));
  const auto tie = decode_attribute(tie_m.span(), Concept::TopLeft, Concept::Shape, cb);
  REQUIRE(tie.cosines[0] == tie.cosines[1]);
  CHECK(tie.value == Concept::Circle);
  CHECK(tie.margin == 0.0);

  CHECK_THROWS_AS(decode_attribute(m.span(), Concept::Red, Concept::Shape, cb),
                  ValidationError);
  CHECK_THROWS_AS(decode_attribute(m.span(), Concept::TopLeft, Concept::Position, cb),
                  ValidationError);
}

TEST_CASE("encodings of scenes with no concept value in common are near-orthogonal") {
  const auto cb = Codebook::make();
  const auto scenes = enumerate_scenes(false);
  auto disjoint = [](const Scene& a, const Scene& b) {
    for (const auto& p : a.placements) {
      for (const auto& q : b.placements) {
        if (p.position == q.position || p.figure.shape == q.figure.shape ||
            p.figure.color == q.figure.color) {
          return false;
        }
      }
    }
    return true;
  };
  std::mt19937_64 rng(17);
  int sampled = 0;
  while (sampled < 1000) {
    const Scene& a = scenes[rng() % scenes.size()];
    const Scene& b = scenes[rng() % scenes.size()];
    if (!disjoint(a, b)) continue;
    ++sampled;
    REQUIRE(std::abs(cosine(encode_scene(a, cb), encode_scene(b, cb))) < 0.25);
  }
}
