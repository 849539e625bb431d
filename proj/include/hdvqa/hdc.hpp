#pragma once
/**
 * Hyperdimensional algebra over real-valued vectors.
 *
 *   bind    (entangle):  k_i = a_i * b_i   -- XOR on the bipolar encoding
 *   bundle  (grouping):  k_i = a_i + b_i   -- no re-binarization
 *   cosine:              sum(a_i b_i) / (|a| |b|), always in double
 *
 * Concept vectors live in a Codebook generated from a 64-bit seed. The PRNG
 * stream is std::mt19937_64 seeded with the codebook seed; concepts are drawn
 * in Concept enumeration order, components in index order, one 64-bit draw
 * per component. The most significant bit of the draw selects the sign:
 * 0 -> +1, 1 -> -1. mt19937_64 output is fixed by the C++ standard, so a
 * (seed, dim) pair reproduces the same codebook on every conforming build.
 */

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace hdvqa {

inline constexpr std::size_t kDefaultDim = 1000;
inline constexpr std::uint64_t kDefaultCodebookSeed = 42;

enum class Concept : std::uint8_t {
  Position,
  Color,
  Shape,
  TopLeft,
  TopRight,
  BottomLeft,
  BottomRight,
  Red,
  Green,
  Magenta,
  Orange,
  Circle,
  Square,
  Triangle,
  Cross,
};

inline constexpr std::size_t kNumConcepts = 15;

enum class Role : std::uint8_t { AttributeKey, Position, Color, Shape };

inline constexpr std::array<Concept, kNumConcepts> kAllConcepts = {
    Concept::Position, Concept::Color,      Concept::Shape,
    Concept::TopLeft,  Concept::TopRight,   Concept::BottomLeft,
    Concept::BottomRight, Concept::Red,     Concept::Green,
    Concept::Magenta,  Concept::Orange,     Concept::Circle,
    Concept::Square,   Concept::Triangle,   Concept::Cross};

inline constexpr std::array<Concept, 4> kPositions = {
    Concept::TopLeft, Concept::TopRight, Concept::BottomLeft,
    Concept::BottomRight};
inline constexpr std::array<Concept, 4> kColors = {
    Concept::Red, Concept::Green, Concept::Magenta, Concept::Orange};
inline constexpr std::array<Concept, 4> kShapes = {
    Concept::Circle, Concept::Square, Concept::Triangle, Concept::Cross};

constexpr std::size_t index_of(Concept c) { return static_cast<std::size_t>(c); }

Role role_of(Concept c);
std::string_view concept_name(Concept c);
std::optional<Concept> parse_concept(std::string_view name);

/// Index of c inside its role group (kPositions / kColors / kShapes), 0..3.
/// Attribute keys map to 0..2.
std::size_t role_index(Concept c);

/// Dense real-valued hypervector.
class HDVector {
 public:
  HDVector() = default;
  explicit HDVector(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  explicit HDVector(std::vector<double> components)
      : data_(std::move(components)) {}
  explicit HDVector(std::span<const double> components)
      : data_(components.begin(), components.end()) {}

  std::size_t dim() const { return data_.size(); }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> span() const { return data_; }
  std::span<double> span() { return data_; }
  const std::vector<double>& components() const { return data_; }

  double norm() const;
  bool is_bipolar() const;

  friend bool operator==(const HDVector&, const HDVector&) = default;

 private:
  std::vector<double> data_;
};

HDVector bind(std::span<const double> a, std::span<const double> b);
HDVector bundle(std::span<const double> a, std::span<const double> b);
double cosine(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);

inline HDVector bind(const HDVector& a, const HDVector& b) {
  return bind(a.span(), b.span());
}
inline HDVector bundle(const HDVector& a, const HDVector& b) {
  return bundle(a.span(), b.span());
}
inline double cosine(const HDVector& a, const HDVector& b) {
  return cosine(a.span(), b.span());
}

HDVector scaled(const HDVector& v, double alpha);

/// Seeded bipolar vector from the codebook stream (used by tests and tools).
HDVector random_bipolar(std::uint64_t seed, std::size_t dim);

/// Largest |cosine| tolerated between two distinct codebook entries:
/// 0.15 for dim >= 1000, widened as 0.15 * sqrt(1000 / dim) below that.
double orthogonality_bound(std::size_t dim);

class Codebook {
 public:
  /// Deterministic in (seed, dim). Throws ValidationError if any distinct
  /// pair exceeds orthogonality_bound(dim) and check_orthogonality is set.
  static Codebook make(std::uint64_t seed = kDefaultCodebookSeed,
                       std::size_t dim = kDefaultDim,
                       bool check_orthogonality = true);

  std::uint64_t seed() const { return seed_; }
  std::size_t dim() const { return dim_; }

  const HDVector& operator[](Concept c) const { return entries_[index_of(c)]; }
  const std::array<HDVector, kNumConcepts>& entries() const { return entries_; }

  /// Largest |cosine| over all 105 distinct pairs.
  double max_cross_cosine() const;

  /// {"seed", "dim", "entries": {name: [+-1...]}} in canonical concept order.
  nlohmann::ordered_json to_json() const;
  static Codebook from_json(const nlohmann::ordered_json& j);

  friend bool operator==(const Codebook&, const Codebook&) = default;

 private:
  Codebook() = default;

  std::uint64_t seed_ = 0;
  std::size_t dim_ = 0;
  std::array<HDVector, kNumConcepts> entries_;
};

}  // namespace hdvqa
