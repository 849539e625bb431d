#include <doctest.h>

#include <set>

#include "hdvqa/dataset.hpp"
#include "hdvqa/errors.hpp"
#include "hdvqa/io.hpp"
#include "hdvqa/scene.hpp"

using namespace hdvqa;

namespace {

Scene make(Concept p1, Concept s1, Concept c1, Concept p2, Concept s2, Concept c2) {
  return Scene{{Placement{p1, {s1, c1}}, Placement{p2, {s2, c2}}}};
}

std::string image_bytes(const Image& img) {
  std::string out;
  for (float v : img.pixels) io::put<float>(out, v);
  return out;
}

}  // namespace

TEST_CASE("enumerate_scenes: counts and validity") {
  const auto all = enumerate_scenes(false);
  const auto unique = enumerate_scenes(true);
  CHECK(all.size() == 3072);
  CHECK(unique.size() == 1536);
  for (const auto* list : {&all, &unique}) {
    for (const auto& s : *list) {
      REQUIRE(s.placements[0].position != s.placements[1].position);
      REQUIRE_NOTHROW(s.validate());
    }
  }
  // dedupe keeps canonical scenes only
  for (const auto& s : unique) REQUIRE(s == s.canonical());
  CHECK(all.front() == make(Concept::TopLeft, Concept::Circle, Concept::Red,
                            Concept::TopRight, Concept::Circle, Concept::Red));
  CHECK(all.back() == make(Concept::BottomRight, Concept::Cross, Concept::Orange,
                           Concept::BottomLeft, Concept::Cross, Concept::Orange));
}

TEST_CASE("enumerate_scenes: the 3072 list renders exactly 1536 distinct images") {
  std::set<std::string> hashes;
  std::set<std::uint32_t> ids;
  for (const auto& s : enumerate_scenes(false)) {
    hashes.insert(io::sha256_hex(image_bytes(render(s))));
    ids.insert(s.image_id());
  }
  CHECK(hashes.size() == 1536);
  CHECK(ids.size() == 1536);
}

TEST_CASE("scene validation rejects bad roles and repeated positions") {
  CHECK_THROWS_AS(make(Concept::TopLeft, Concept::Circle, Concept::Red, Concept::TopLeft,
                       Concept::Square, Concept::Green)
                      .validate(),
                  ValidationError);
  CHECK_THROWS_AS(make(Concept::Red, Concept::Circle, Concept::Red, Concept::TopLeft,
                       Concept::Square, Concept::Green)
                      .validate(),
                  ValidationError);
  CHECK_THROWS_AS(make(Concept::TopRight, Concept::Green, Concept::Red, Concept::TopLeft,
                       Concept::Square, Concept::Green)
                      .validate(),
                  ValidationError);
}

TEST_CASE("glyph masks have the frozen pixel counts") {
  CHECK(glyph_pixel_count(Concept::Square) == 100);
  CHECK(glyph_pixel_count(Concept::Cross) == 80);
  CHECK(glyph_pixel_count(Concept::Circle) == 80);
  CHECK(glyph_pixel_count(Concept::Triangle) == 74);
  // triangle: two-pixel apex on the top row, full base on the bottom row
  const auto& tri = glyph_mask(Concept::Triangle);
  CHECK(tri[0][5]);
  CHECK(tri[0][6]);
  CHECK_FALSE(tri[0][4]);
  for (bool b : tri[11]) CHECK(b);
}

TEST_CASE("render: geometry, colors and order insensitivity") {
  const Scene s = make(Concept::TopLeft, Concept::Square, Concept::Magenta,
                       Concept::TopRight, Concept::Square, Concept::Green);
  const Image img = render(s);
  Scene swapped = s;
  std::swap(swapped.placements[0], swapped.placements[1]);
  CHECK(render(swapped) == img);
  CHECK(render(s) == img);

  for (std::size_t r = 14; r < 28; ++r) {
    for (std::size_t c = 0; c < 28; ++c) {
      for (std::size_t ch = 0; ch < 3; ++ch) REQUIRE(img.at(r, c, ch) == 0.0f);
    }
  }
  // square occupies quadrant rows/cols 2..11 (1 px margin + 1 px inside mask)
  CHECK(img.at(2, 2, 0) == 1.0f);
  CHECK(img.at(2, 2, 1) == 0.0f);
  CHECK(img.at(2, 2, 2) == 1.0f);
  CHECK(img.at(1, 1, 0) == 0.0f);
  CHECK(img.at(2, 16, 1) == 1.0f);
  CHECK(img.at(2, 16, 0) == 0.0f);

  // every pixel is background or exactly one of the figure colors
  std::size_t lit = 0;
  for (std::size_t r = 0; r < 28; ++r) {
    for (std::size_t c = 0; c < 28; ++c) {
      const Rgb px{img.at(r, c, 0), img.at(r, c, 1), img.at(r, c, 2)};
      const bool bg = px.r == 0 && px.g == 0 && px.b == 0;
      const bool magenta = px.r == 1 && px.g == 0 && px.b == 1;
      const bool green = px.r == 0 && px.g == 1 && px.b == 0;
      REQUIRE((bg || magenta || green));
      if (!bg) ++lit;
    }
  }
  CHECK(lit == 200);
}

TEST_CASE("orange is web orange and survives PPM export with half-up rounding") {
  const Rgb o = color_rgb(Concept::Orange);
  CHECK(o.r == 1.0f);
  CHECK(o.g == 0.647f);
  CHECK(o.b == 0.0f);
  const Scene s = make(Concept::BottomRight, Concept::Cross, Concept::Orange,
                       Concept::TopLeft, Concept::Circle, Concept::Red);
  const std::string ppm = to_ppm(render(s));
  CHECK(ppm.rfind("P6\n28 28\n255\n", 0) == 0);
  const Image back = from_ppm(ppm);
  // 0.647 * 255 = 164.985 -> 165
  const std::size_t header = std::string("P6\n28 28\n255\n").size();
  const std::size_t off = Image::offset(14 + 1 + 5, 14 + 1 + 5, 1);
  CHECK(static_cast<unsigned char>(ppm[header + off]) == 165);
  CHECK(back.at(20, 20, 0) == 1.0f);
  CHECK_THROWS_AS(from_ppm("P3\n28 28\n255\n"), ValidationError);
}

TEST_CASE("label_scene: worked examples") {
  const auto a = label_scene(make(Concept::TopLeft, Concept::Square, Concept::Magenta,
                                  Concept::TopRight, Concept::Square, Concept::Green));
  CHECK(a.q == std::array<bool, 5>{false, true, false, false, true});
  CHECK(a.g == std::array<bool, 3>{true, false, false});

  const auto b = label_scene(make(Concept::BottomLeft, Concept::Square, Concept::Red,
                                  Concept::TopRight, Concept::Cross, Concept::Orange));
  CHECK(b.q[3]);
  CHECK_FALSE(b.q[4]);
}

TEST_CASE("label_scene: positive counts over all 3072 scenes") {
  std::array<std::size_t, 8> counts{};
  for (const auto& s : enumerate_scenes(false)) {
    const auto l = label_scene(s);
    for (std::size_t i = 0; i < 5; ++i) counts[i] += l.q[i];
    for (std::size_t i = 0; i < 3; ++i) counts[5 + i] += l.g[i];
  }
  // circle/green/shape: 3072 * (1 - (3/4)^2); magenta triangle: 3072 * (1 - (15/16)^2)
  // square at bottom-left: 1536 occupied * 1/4; same top shape: 512 * 1/4
  CHECK(counts == std::array<std::size_t, 8>{1344, 1344, 372, 384, 128, 1344, 1344, 1344});
}

TEST_CASE("label_scene agrees with pixel inspection for green") {
  for (const auto& s : enumerate_scenes(false)) {
    const Image img = render(s);
    bool green_pixel = false;
    for (std::size_t i = 0; i < kImageSize; i += 3) {
      if (img.pixels[i] == 0.0f && img.pixels[i + 1] == 1.0f && img.pixels[i + 2] == 0.0f) {
        green_pixel = true;
        break;
      }
    }
    REQUIRE(label_scene(s).q[1] == green_pixel);
  }
}

TEST_CASE("split_dataset: sizes, determinism and leakage safety") {
  const auto cb = Codebook::make();
  SplitSpec spec;
  const Dataset dedup = build_dataset(cb, spec);
  CHECK(dedup.records.size() == 1536);
  CHECK(dedup.count(SplitTag::Test) == 460);
  CHECK(dedup.count(SplitTag::Train) == 1076);
  CHECK(split_dataset(dedup.records, spec) == dedup.tags);

  SplitSpec other = spec;
  other.split_seed = spec.split_seed + 1;
  CHECK(split_dataset(dedup.records, other) != dedup.tags);

  spec.dedupe = false;
  const Dataset full = build_dataset(cb, spec);
  CHECK(full.records.size() == 3072);
  // identities are split (floor(0.3 * 1536) = 460) and duplicates follow them
  CHECK(full.count(SplitTag::Test) == 920);
  CHECK(full.count(SplitTag::Train) == 2152);
  std::map<std::uint32_t, SplitTag> side;
  for (std::size_t i = 0; i < full.records.size(); ++i) {
    const auto [it, inserted] = side.try_emplace(full.records[i].scene.image_id(), full.tags[i]);
    REQUIRE(it->second == full.tags[i]);
  }

  SplitSpec bad;
  bad.test_fraction = 1.0;
  CHECK_THROWS_AS(split_dataset(dedup.records, bad), ValidationError);
  bad.test_fraction = 0.0;
  CHECK_THROWS_AS(split_dataset(dedup.records, bad), ValidationError);
  CHECK_THROWS_AS(split_dataset({}, SplitSpec{}), ValidationError);
}

TEST_CASE("seeded_permutation is a permutation and seed-stable") {
  const auto p = seeded_permutation(1000, 5);
  std::set<std::size_t> seen(p.begin(), p.end());
  CHECK(seen.size() == 1000);
  CHECK(*seen.rbegin() == 999);
  CHECK(seeded_permutation(1000, 5) == p);
  CHECK(seeded_permutation(1000, 6) != p);
}
