#include "hdvqa/hdc.hpp"

#include <cmath>
#include <random>

#include "hdvqa/errors.hpp"

namespace hdvqa {

namespace {

constexpr std::array<std::string_view, kNumConcepts> kNames = {
    "position", "color",       "shape",  "top-left", "top-right",
    "bottom-left", "bottom-right", "red", "green",   "magenta",
    "orange",   "circle",      "square", "triangle", "cross"};

void require_same_dim(std::span<const double> a, std::span<const double> b,
                      const char* op) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": dimension mismatch (" +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
}

void fill_bipolar(std::mt19937_64& rng, std::vector<double>& out) {
  for (double& x : out) x = (rng() >> 63) == 0 ? 1.0 : -1.0;
}

}  // namespace

Role role_of(Concept c) {
  const auto i = index_of(c);
  if (i < 3) return Role::AttributeKey;
  if (i < 7) return Role::Position;
  if (i < 11) return Role::Color;
  return Role::Shape;
}

std::size_t role_index(Concept c) {
  const auto i = index_of(c);
  if (i < 3) return i;
  return (i - 3) % 4;
}

std::string_view concept_name(Concept c) { return kNames[index_of(c)]; }

std::optional<Concept> parse_concept(std::string_view name) {
  for (std::size_t i = 0; i < kNumConcepts; ++i) {
    if (kNames[i] == name) return kAllConcepts[i];
  }
  return std::nullopt;
}

double HDVector::norm() const { return std::sqrt(dot(data_, data_)); }

bool HDVector::is_bipolar() const {
  for (double x : data_) {
    if (x != 1.0 && x != -1.0) return false;
  }
  return true;
}

HDVector bind(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b, "bind");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return HDVector(std::move(out));
}

HDVector bundle(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b, "bundle");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return HDVector(std::move(out));
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b, "cosine");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) {
    throw ZeroNormError("cosine: zero-norm operand");
  }
  return ab / std::sqrt(aa * bb);
}

HDVector scaled(const HDVector& v, double alpha) {
  std::vector<double> out(v.components());
  for (double& x : out) x *= alpha;
  return HDVector(std::move(out));
}

HDVector random_bipolar(std::uint64_t seed, std::size_t dim) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(dim);
  fill_bipolar(rng, out);
  return HDVector(std::move(out));
}

double orthogonality_bound(std::size_t dim) {
  if (dim >= kDefaultDim) return 0.15;
  return 0.15 * std::sqrt(static_cast<double>(kDefaultDim) /
                          static_cast<double>(dim));
}

Codebook Codebook::make(std::uint64_t seed, std::size_t dim,
                        bool check_orthogonality) {
  if (dim < 1) throw ValidationError("codebook dimension must be >= 1");
  Codebook cb;
  cb.seed_ = seed;
  cb.dim_ = dim;
  std::mt19937_64 rng(seed);
  for (auto& entry : cb.entries_) {
    std::vector<double> comps(dim);
    fill_bipolar(rng, comps);
    entry = HDVector(std::move(comps));
  }
  if (check_orthogonality) {
    const double worst = cb.max_cross_cosine();
    if (worst > orthogonality_bound(dim)) {
      throw ValidationError(
          "codebook seed " + std::to_string(seed) +
          " fails quasi-orthogonality: max |cos| = " + std::to_string(worst) +
          " > " + std::to_string(orthogonality_bound(dim)));
    }
  }
  return cb;
}

double Codebook::max_cross_cosine() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < kNumConcepts; ++i) {
    for (std::size_t j = i + 1; j < kNumConcepts; ++j) {
      worst = std::max(worst, std::abs(cosine(entries_[i], entries_[j])));
    }
  }
  return worst;
}

nlohmann::ordered_json Codebook::to_json() const {
  nlohmann::ordered_json entries = nlohmann::ordered_json::object();
  for (Concept c : kAllConcepts) {
    std::vector<int> comps;
    comps.reserve(dim_);
    for (double x : (*this)[c].components()) comps.push_back(static_cast<int>(x));
    entries[std::string(concept_name(c))] = comps;
  }
  nlohmann::ordered_json j;
  j["seed"] = seed_;
  j["dim"] = dim_;
  j["entries"] = entries;
  return j;
}

Codebook Codebook::from_json(const nlohmann::ordered_json& j) {
  Codebook cb;
  try {
    cb.seed_ = j.at("seed").get<std::uint64_t>();
    cb.dim_ = j.at("dim").get<std::size_t>();
    const auto& entries = j.at("entries");
    for (Concept c : kAllConcepts) {
      auto comps = entries.at(std::string(concept_name(c))).get<std::vector<double>>();
      HDVector v(std::move(comps));
      if (v.dim() != cb.dim_ || !v.is_bipolar()) {
        throw ValidationError("codebook entry '" + std::string(concept_name(c)) +
                              "' is not a bipolar vector of dim " +
                              std::to_string(cb.dim_));
      }
      cb.entries_[index_of(c)] = std::move(v);
    }
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ValidationError(std::string("malformed codebook json: ") + e.what());
  }
  return cb;
}

}  // namespace hdvqa
