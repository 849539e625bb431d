#include "hdvqa/scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hdvqa/errors.hpp"

namespace hdvqa {

namespace {

GlyphMask make_mask(Concept shape) {
  GlyphMask mask{};
  constexpr double kCenter = 5.5;
  for (std::size_t r = 0; r < kGlyphSide; ++r) {
    for (std::size_t c = 0; c < kGlyphSide; ++c) {
      const double dr = static_cast<double>(r) - kCenter;
      const double dc = static_cast<double>(c) - kCenter;
      bool on = false;
      switch (shape) {
        case Concept::Square:
          on = r >= 1 && r <= 10 && c >= 1 && c <= 10;
          break;
        case Concept::Circle:
          on = dr * dr + dc * dc <= 25.0;
          break;
        case Concept::Triangle:
          // apex: the two centre columns of row 0; base: all of row 11
          on = std::abs(dc) <= 0.5 + 5.0 * static_cast<double>(r) / 11.0;
          break;
        case Concept::Cross:
          on = (r >= 4 && r <= 7) || (c >= 4 && c <= 7);
          break;
        default:
          throw ValidationError("not a shape concept: " +
                                std::string(concept_name(shape)));
      }
      mask[r][c] = on;
    }
  }
  return mask;
}

void require_role(Concept c, Role role, const char* what) {
  if (role_of(c) != role) {
    throw ValidationError(std::string(what) + " has wrong role: " +
                          std::string(concept_name(c)));
  }
}

}  // namespace

const GlyphMask& glyph_mask(Concept shape) {
  static const std::array<GlyphMask, 4> masks = {
      make_mask(Concept::Circle), make_mask(Concept::Square),
      make_mask(Concept::Triangle), make_mask(Concept::Cross)};
  if (role_of(shape) != Role::Shape) {
    throw ValidationError("not a shape concept: " +
                          std::string(concept_name(shape)));
  }
  return masks[role_index(shape)];
}

std::size_t glyph_pixel_count(Concept shape) {
  std::size_t n = 0;
  for (const auto& row : glyph_mask(shape)) {
    n += static_cast<std::size_t>(std::count(row.begin(), row.end(), true));
  }
  return n;
}

Rgb color_rgb(Concept color) {
  switch (color) {
    case Concept::Red: return {1.0f, 0.0f, 0.0f};
    case Concept::Green: return {0.0f, 1.0f, 0.0f};
    case Concept::Magenta: return {1.0f, 0.0f, 1.0f};
    case Concept::Orange: return {1.0f, 0.647f, 0.0f};
    default:
      throw ValidationError("not a color concept: " +
                            std::string(concept_name(color)));
  }
}

void Scene::validate() const {
  for (const auto& p : placements) {
    require_role(p.position, Role::Position, "placement position");
    require_role(p.figure.shape, Role::Shape, "figure shape");
    require_role(p.figure.color, Role::Color, "figure color");
  }
  if (placements[0].position == placements[1].position) {
    throw ValidationError("scene places two figures at " +
                          std::string(concept_name(placements[0].position)));
  }
}

Scene Scene::canonical() const {
  Scene s = *this;
  if (index_of(s.placements[1].position) < index_of(s.placements[0].position)) {
    std::swap(s.placements[0], s.placements[1]);
  }
  return s;
}

const Figure* Scene::at(Concept position) const {
  for (const auto& p : placements) {
    if (p.position == position) return &p.figure;
  }
  return nullptr;
}

std::uint32_t Scene::image_id() const {
  const Scene s = canonical();
  std::uint32_t id = 0;
  for (const auto& p : s.placements) id = id * 4 + role_index(p.position);
  for (const auto& p : s.placements) {
    id = id * 4 + role_index(p.figure.shape);
    id = id * 4 + role_index(p.figure.color);
  }
  return id;
}

std::string Scene::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < placements.size(); ++i) {
    const auto& p = placements[i];
    if (i) os << ", ";
    os << concept_name(p.position) << ": (" << concept_name(p.figure.shape)
       << ", " << concept_name(p.figure.color) << ')';
  }
  os << '}';
  return os.str();
}

std::vector<Scene> enumerate_scenes(bool dedupe) {
  std::vector<Scene> out;
  out.reserve(dedupe ? 1536 : 3072);
  for (Concept p1 : kPositions) {
    for (Concept p2 : kPositions) {
      if (p1 == p2) continue;
      if (dedupe && index_of(p2) < index_of(p1)) continue;
      for (Concept s1 : kShapes) {
        for (Concept c1 : kColors) {
          for (Concept s2 : kShapes) {
            for (Concept c2 : kColors) {
              out.push_back(Scene{{Placement{p1, {s1, c1}}, Placement{p2, {s2, c2}}}});
            }
          }
        }
      }
    }
  }
  return out;
}

Image render(const Scene& scene) {
  scene.validate();
  Image img;
  for (const auto& p : scene.placements) {
    const std::size_t qi = role_index(p.position);
    const std::size_t row0 = (qi / 2) * kQuadrantSide + 1;
    const std::size_t col0 = (qi % 2) * kQuadrantSide + 1;
    const GlyphMask& mask = glyph_mask(p.figure.shape);
    const Rgb rgb = color_rgb(p.figure.color);
    for (std::size_t r = 0; r < kGlyphSide; ++r) {
      for (std::size_t c = 0; c < kGlyphSide; ++c) {
        if (!mask[r][c]) continue;
        img.pixels[Image::offset(row0 + r, col0 + c, 0)] = rgb.r;
        img.pixels[Image::offset(row0 + r, col0 + c, 1)] = rgb.g;
        img.pixels[Image::offset(row0 + r, col0 + c, 2)] = rgb.b;
      }
    }
  }
  return img;
}

std::string to_ppm(const Image& image) {
  std::string out = "P6\n28 28\n255\n";
  out.reserve(out.size() + kImageSize);
  for (float v : image.pixels) {
    const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
    out.push_back(static_cast<char>(
        static_cast<unsigned char>(std::floor(clamped * 255.0 + 0.5))));
  }
  return out;
}

Image from_ppm(const std::string& bytes) {
  std::istringstream is(bytes);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (!is || magic != "P6" || w != kImageSide || h != kImageSide ||
      maxval != 255) {
    throw ValidationError("expected a 28x28 P6 PPM with maxval 255");
  }
  is.get();  // single whitespace before the raster
  const auto start = static_cast<std::size_t>(is.tellg());
  if (bytes.size() < start + kImageSize) {
    throw ValidationError("truncated PPM raster");
  }
  Image img;
  for (std::size_t i = 0; i < kImageSize; ++i) {
    img.pixels[i] = static_cast<float>(
        static_cast<unsigned char>(bytes[start + i]) / 255.0);
  }
  return img;
}

SceneLabels label_scene(const Scene& scene) {
  scene.validate();
  SceneLabels labels;
  auto any = [&](auto pred) {
    return pred(scene.placements[0].figure) || pred(scene.placements[1].figure);
  };
  labels.q[0] = any([](const Figure& f) { return f.shape == Concept::Circle; });
  labels.q[1] = any([](const Figure& f) { return f.color == Concept::Green; });
  labels.q[2] = any([](const Figure& f) {
    return f.shape == Concept::Triangle && f.color == Concept::Magenta;
  });
  const Figure* bl = scene.at(Concept::BottomLeft);
  labels.q[3] = bl != nullptr && bl->shape == Concept::Square;
  const Figure* tl = scene.at(Concept::TopLeft);
  const Figure* tr = scene.at(Concept::TopRight);
  labels.q[4] = tl != nullptr && tr != nullptr && tl->shape == tr->shape;
  labels.g[0] = any([](const Figure& f) { return f.shape == Concept::Square; });
  labels.g[1] = any([](const Figure& f) { return f.shape == Concept::Triangle; });
  labels.g[2] = any([](const Figure& f) { return f.shape == Concept::Cross; });
  return labels;
}

}  // namespace hdvqa
