#pragma once
/**
 * Threshold queries against a scene hypervector.
 *
 * Every question disentangles m with a (position, attribute-key) pair and
 * compares the result against codebook entries by cosine:
 *
 *   exists-shape:S      sum_pos cos(S, shape*pos*m)                  > 0.5
 *   exists-color:C      sum_pos cos(C, color*pos*m)                  > 0.5
 *   exists:C+S          sum_pos cos(C, color*pos*m) cos(S, shape*pos*m) > 0.25
 *   at:P=S              cos(S, shape*P*m)                            > 0.5
 *   same-shape:P,Q      cos(shape*P*m, shape*Q*m)                    > 0.5
 *
 * The soft value (left-hand side) is differentiable in m; QueryEngine exposes
 * it together with its analytic gradient for training.
 */

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hdvqa/hdc.hpp"
#include "hdvqa/scene.hpp"

namespace hdvqa {

enum class QuestionKind : std::uint8_t {
  ExistsShape,
  ExistsColor,
  ExistsColorShape,
  ShapeAtPosition,
  SameShape,
};

struct Question {
  QuestionKind kind = QuestionKind::ExistsShape;
  /// ExistsShape: shape. ExistsColor: color. ExistsColorShape: color.
  /// ShapeAtPosition: shape. SameShape: first position.
  Concept first = Concept::Circle;
  /// ExistsColorShape: shape. ShapeAtPosition: position. SameShape: second
  /// position. Unused otherwise.
  Concept second = Concept::Circle;

  static Question exists_shape(Concept shape);
  static Question exists_color(Concept color);
  static Question exists_color_shape(Concept color, Concept shape);
  static Question shape_at(Concept shape, Concept position);
  static Question same_shape(Concept a, Concept b);

  /// 0.25 for exists:C+S, 0.5 otherwise.
  double threshold() const;

  /// Compact form, e.g. "at:bottom-left=square".
  std::string to_string() const;
  /// Inverse of to_string; throws ParseError.
  static Question parse(std::string_view text);

  /// Symbolic answer read from the scene.
  bool truth(const Scene& scene) const;

  friend bool operator==(const Question&, const Question&) = default;
};

/// The five questions used by the training loss, in loss order.
const std::array<Question, 5>& training_questions();
/// exists-shape for square, triangle, cross.
const std::array<Question, 3>& generalization_questions();

/// Comma-separated question list; "trained" and "generalization" expand to the
/// builtin sets. Commas inside same-shape:P,Q are handled.
std::vector<Question> parse_question_list(std::string_view text);

struct QueryScore {
  double value = 0.0;
  double threshold = 0.5;
  bool answer = false;  // value > threshold, strictly
};

/// Caches the bound (key * position) vectors of one codebook.
class QueryEngine {
 public:
  explicit QueryEngine(const Codebook& cb);

  const Codebook& codebook() const { return cb_; }
  std::size_t dim() const { return cb_.dim(); }

  QueryScore score(const Question& q, std::span<const double> m) const;

  /// Soft value of q at m. If grad is non-empty, adds
  /// upstream * d(value)/dm into it.
  double value_and_gradient(const Question& q, std::span<const double> m,
                            std::span<double> grad, double upstream) const;

 private:
  const HDVector& key(Concept attribute, Concept position) const;

  Codebook cb_;
  // [0..3]: shape*pos, [4..7]: color*pos, positions in role order
  std::array<HDVector, 8> bound_keys_;
};

QueryScore score(const Question& q, std::span<const double> m, const Codebook& cb);

/// 20 equal bins over [-1.5, 2.5]; values outside land in the edge bins.
struct Histogram {
  static constexpr double kLow = -1.5;
  static constexpr double kHigh = 2.5;
  static constexpr std::size_t kBins = 20;
  std::array<std::size_t, kBins> counts{};

  void add(double value);
  nlohmann::ordered_json to_json() const;
};

struct ScoreStats {
  std::size_t count = 0;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
  Histogram histogram;

  void add(double value);
  nlohmann::ordered_json to_json() const;

 private:
  double sum_ = 0.0;
};

/// Number of matching figures for the exists-* and at: questions. For
/// same-shape, the number of attributes (shape, color) shared by the two
/// figures, or -1 when either position is empty.
int occurrences(const Question& q, const Scene& scene);

struct MarginEntry {
  Question question;
  ScoreStats when_true;
  ScoreStats when_false;
  /// Keyed by occurrences(): index 0 = -1 (vacant), 1..3 = 0..2.
  std::array<ScoreStats, 4> by_occurrence;
  double accuracy = 0.0;

  const ScoreStats& occurrence(int n) const { return by_occurrence[n + 1]; }
};

struct MarginReport {
  std::vector<MarginEntry> entries;
  nlohmann::ordered_json to_json() const;
  /// question,stratum,count,min,mean,max
  std::string to_csv() const;
};

/// Score distributions of clean encodings for the eight builtin questions.
MarginReport clean_margin_report(std::span<const Scene> scenes, const Codebook& cb);

}  // namespace hdvqa
