#include "hdvqa/query.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hdvqa/encoding.hpp"
#include "hdvqa/errors.hpp"

namespace hdvqa {

namespace {

Concept expect_concept(std::string_view name, Role role, std::string_view text) {
  const auto c = parse_concept(name);
  if (!c || role_of(*c) != role) {
    throw ParseError("bad concept '" + std::string(name) + "' in question '" +
                     std::string(text) + "'");
  }
  return *c;
}

void require_role(Concept c, Role role) {
  if (role_of(c) != role) {
    throw ValidationError("question built with wrong concept role: " +
                          std::string(concept_name(c)));
  }
}

// Scratch-free reductions over the disentangled vector u = key * m.
struct Moments {
  double cu = 0.0;  // <c, u>
  double uu = 0.0;  // <u, u>
};

Moments moments(std::span<const double> c, std::span<const double> key,
                std::span<const double> m) {
  Moments r;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double u = key[i] * m[i];
    r.cu += c[i] * u;
    r.uu += u * u;
  }
  return r;
}

// cos(c, key*m); if grad is non-empty adds upstream * d/dm.
double bound_cosine(std::span<const double> c, double c_norm,
                    std::span<const double> key, std::span<const double> m,
                    std::span<double> grad, double upstream) {
  const Moments mo = moments(c, key, m);
  if (mo.uu == 0.0) throw ZeroNormError("query: disentangled vector has zero norm");
  const double u_norm = std::sqrt(mo.uu);
  const double value = mo.cu / (c_norm * u_norm);
  if (!grad.empty() && upstream != 0.0) {
    // d cos / du = c / (|c||u|) - cos * u / |u|^2 ; du/dm = key
    const double a = upstream / (c_norm * u_norm);
    const double b = upstream * value / mo.uu;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double u = key[i] * m[i];
      grad[i] += key[i] * (a * c[i] - b * u);
    }
  }
  return value;
}

}  // namespace

Question Question::exists_shape(Concept shape) {
  require_role(shape, Role::Shape);
  return {QuestionKind::ExistsShape, shape, shape};
}
Question Question::exists_color(Concept color) {
  require_role(color, Role::Color);
  return {QuestionKind::ExistsColor, color, color};
}
Question Question::exists_color_shape(Concept color, Concept shape) {
  require_role(color, Role::Color);
  require_role(shape, Role::Shape);
  return {QuestionKind::ExistsColorShape, color, shape};
}
Question Question::shape_at(Concept shape, Concept position) {
  require_role(shape, Role::Shape);
  require_role(position, Role::Position);
  return {QuestionKind::ShapeAtPosition, shape, position};
}
Question Question::same_shape(Concept a, Concept b) {
  require_role(a, Role::Position);
  require_role(b, Role::Position);
  return {QuestionKind::SameShape, a, b};
}

double Question::threshold() const {
  return kind == QuestionKind::ExistsColorShape ? 0.25 : 0.5;
}

std::string Question::to_string() const {
  const std::string a(concept_name(first));
  const std::string b(concept_name(second));
  switch (kind) {
    case QuestionKind::ExistsShape: return "exists-shape:" + a;
    case QuestionKind::ExistsColor: return "exists-color:" + a;
    case QuestionKind::ExistsColorShape: return "exists:" + a + "+" + b;
    case QuestionKind::ShapeAtPosition: return "at:" + b + "=" + a;
    case QuestionKind::SameShape: return "same-shape:" + a + "," + b;
  }
  return {};
}

Question Question::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ParseError("question '" + std::string(text) + "' has no ':'");
  }
  const std::string_view head = text.substr(0, colon);
  const std::string_view body = text.substr(colon + 1);
  auto split = [&](char sep) {
    const auto at = body.find(sep);
    if (at == std::string_view::npos) {
      throw ParseError("question '" + std::string(text) + "' expects '" +
                       std::string(1, sep) + "'");
    }
    return std::pair{body.substr(0, at), body.substr(at + 1)};
  };
  if (head == "exists-shape") {
    return exists_shape(expect_concept(body, Role::Shape, text));
  }
  if (head == "exists-color") {
    return exists_color(expect_concept(body, Role::Color, text));
  }
  if (head == "exists") {
    auto [c, s] = split('+');
    return exists_color_shape(expect_concept(c, Role::Color, text),
                              expect_concept(s, Role::Shape, text));
  }
  if (head == "at") {
    auto [p, s] = split('=');
    return shape_at(expect_concept(s, Role::Shape, text),
                    expect_concept(p, Role::Position, text));
  }
  if (head == "same-shape") {
    auto [p, q] = split(',');
    return same_shape(expect_concept(p, Role::Position, text),
                      expect_concept(q, Role::Position, text));
  }
  throw ParseError("unknown question template '" + std::string(head) + "'");
}

bool Question::truth(const Scene& scene) const {
  auto any = [&](auto pred) {
    return pred(scene.placements[0].figure) || pred(scene.placements[1].figure);
  };
  switch (kind) {
    case QuestionKind::ExistsShape:
      return any([&](const Figure& f) { return f.shape == first; });
    case QuestionKind::ExistsColor:
      return any([&](const Figure& f) { return f.color == first; });
    case QuestionKind::ExistsColorShape:
      return any([&](const Figure& f) {
        return f.color == first && f.shape == second;
      });
    case QuestionKind::ShapeAtPosition: {
      const Figure* f = scene.at(second);
      return f != nullptr && f->shape == first;
    }
    case QuestionKind::SameShape: {
      const Figure* a = scene.at(first);
      const Figure* b = scene.at(second);
      return a != nullptr && b != nullptr && a->shape == b->shape;
    }
  }
  return false;
}

const std::array<Question, 5>& training_questions() {
  static const std::array<Question, 5> qs = {
      Question::exists_shape(Concept::Circle),
      Question::exists_color(Concept::Green),
      Question::exists_color_shape(Concept::Magenta, Concept::Triangle),
      Question::shape_at(Concept::Square, Concept::BottomLeft),
      Question::same_shape(Concept::TopLeft, Concept::TopRight)};
  return qs;
}

const std::array<Question, 3>& generalization_questions() {
  static const std::array<Question, 3> qs = {
      Question::exists_shape(Concept::Square),
      Question::exists_shape(Concept::Triangle),
      Question::exists_shape(Concept::Cross)};
  return qs;
}

std::vector<Question> parse_question_list(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string tok(text.substr(start, end - start));
    // a token without ':' continues the previous same-shape question
    if (!tokens.empty() && tok.find(':') == std::string::npos &&
        tok != "trained" && tok != "generalization") {
      tokens.back() += "," + tok;
    } else {
      tokens.push_back(std::move(tok));
    }
    start = end + 1;
  }
  std::vector<Question> out;
  for (const auto& tok : tokens) {
    if (tok == "trained") {
      out.insert(out.end(), training_questions().begin(), training_questions().end());
    } else if (tok == "generalization") {
      out.insert(out.end(), generalization_questions().begin(),
                 generalization_questions().end());
    } else if (tok.empty()) {
      throw ParseError("empty question in list '" + std::string(text) + "'");
    } else {
      out.push_back(Question::parse(tok));
    }
  }
  return out;
}

QueryEngine::QueryEngine(const Codebook& cb) : cb_(cb) {
  for (std::size_t p = 0; p < 4; ++p) {
    bound_keys_[p] = bind(cb_[Concept::Shape], cb_[kPositions[p]]);
    bound_keys_[4 + p] = bind(cb_[Concept::Color], cb_[kPositions[p]]);
  }
}

const HDVector& QueryEngine::key(Concept attribute, Concept position) const {
  const std::size_t base = attribute == Concept::Shape ? 0 : 4;
  return bound_keys_[base + role_index(position)];
}

double QueryEngine::value_and_gradient(const Question& q,
                                       std::span<const double> m,
                                       std::span<double> grad,
                                       double upstream) const {
  if (m.size() != cb_.dim()) {
    throw DimensionError("query: vector dim " + std::to_string(m.size()) +
                         " != codebook dim " + std::to_string(cb_.dim()));
  }
  if (!grad.empty() && grad.size() != m.size()) {
    throw DimensionError("query: gradient buffer has wrong size");
  }
  const double concept_norm = std::sqrt(static_cast<double>(cb_.dim()));
  switch (q.kind) {
    case QuestionKind::ExistsShape:
    case QuestionKind::ExistsColor: {
      const Concept attr =
          q.kind == QuestionKind::ExistsShape ? Concept::Shape : Concept::Color;
      double sum = 0.0;
      for (Concept pos : kPositions) {
        sum += bound_cosine(cb_[q.first].span(), concept_norm,
                            key(attr, pos).span(), m, grad, upstream);
      }
      return sum;
    }
    case QuestionKind::ExistsColorShape: {
      double sum = 0.0;
      for (Concept pos : kPositions) {
        const auto& ckey = key(Concept::Color, pos);
        const auto& skey = key(Concept::Shape, pos);
        const double a = bound_cosine(cb_[q.first].span(), concept_norm,
                                      ckey.span(), m, {}, 0.0);
        const double b = bound_cosine(cb_[q.second].span(), concept_norm,
                                      skey.span(), m, {}, 0.0);
        if (!grad.empty()) {
          bound_cosine(cb_[q.first].span(), concept_norm, ckey.span(), m, grad,
                       upstream * b);
          bound_cosine(cb_[q.second].span(), concept_norm, skey.span(), m, grad,
                       upstream * a);
        }
        sum += a * b;
      }
      return sum;
    }
    case QuestionKind::ShapeAtPosition:
      return bound_cosine(cb_[q.first].span(), concept_norm,
                          key(Concept::Shape, q.second).span(), m, grad, upstream);
    case QuestionKind::SameShape: {
      const auto k1 = key(Concept::Shape, q.first).span();
      const auto k2 = key(Concept::Shape, q.second).span();
      double uv = 0.0, uu = 0.0, vv = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double u = k1[i] * m[i];
        const double v = k2[i] * m[i];
        uv += u * v;
        uu += u * u;
        vv += v * v;
      }
      if (uu == 0.0 || vv == 0.0) {
        throw ZeroNormError("query: disentangled vector has zero norm");
      }
      const double denom = std::sqrt(uu * vv);
      const double value = uv / denom;
      if (!grad.empty() && upstream != 0.0) {
        const double a = upstream / denom;
        const double bu = upstream * value / uu;
        const double bv = upstream * value / vv;
        for (std::size_t i = 0; i < m.size(); ++i) {
          const double u = k1[i] * m[i];
          const double v = k2[i] * m[i];
          grad[i] += k1[i] * (a * v - bu * u) + k2[i] * (a * u - bv * v);
        }
      }
      return value;
    }
  }
  return 0.0;
}

QueryScore QueryEngine::score(const Question& q, std::span<const double> m) const {
  QueryScore s;
  s.value = value_and_gradient(q, m, {}, 0.0);
  s.threshold = q.threshold();
  s.answer = s.value > s.threshold;
  return s;
}

QueryScore score(const Question& q, std::span<const double> m, const Codebook& cb) {
  return QueryEngine(cb).score(q, m);
}

void Histogram::add(double value) {
  const double width = (kHigh - kLow) / static_cast<double>(kBins);
  auto bin = static_cast<long>(std::floor((value - kLow) / width));
  bin = std::clamp<long>(bin, 0, static_cast<long>(kBins) - 1);
  ++counts[static_cast<std::size_t>(bin)];
}

nlohmann::ordered_json Histogram::to_json() const {
  nlohmann::ordered_json j;
  j["low"] = kLow;
  j["high"] = kHigh;
  j["counts"] = counts;
  return j;
}

void ScoreStats::add(double value) {
  if (count == 0) {
    min = max = value;
  } else {
    min = std::min(min, value);
    max = std::max(max, value);
  }
  ++count;
  sum_ += value;
  mean = sum_ / static_cast<double>(count);
  histogram.add(value);
}

nlohmann::ordered_json ScoreStats::to_json() const {
  nlohmann::ordered_json j;
  j["count"] = count;
  j["min"] = min;
  j["mean"] = mean;
  j["max"] = max;
  j["histogram"] = histogram.to_json();
  return j;
}

int occurrences(const Question& q, const Scene& scene) {
  int n = 0;
  switch (q.kind) {
    case QuestionKind::ExistsShape:
    case QuestionKind::ExistsColor:
    case QuestionKind::ExistsColorShape:
      for (const auto& p : scene.placements) {
        n += Question{q.kind, q.first, q.second}.truth(Scene{{p, p}}) ? 1 : 0;
      }
      return n;
    case QuestionKind::ShapeAtPosition:
      return q.truth(scene) ? 1 : 0;
    case QuestionKind::SameShape: {
      const Figure* a = scene.at(q.first);
      const Figure* b = scene.at(q.second);
      if (a == nullptr || b == nullptr) return -1;
      return (a->shape == b->shape ? 1 : 0) + (a->color == b->color ? 1 : 0);
    }
  }
  return 0;
}

MarginReport clean_margin_report(std::span<const Scene> scenes, const Codebook& cb) {
  if (scenes.empty()) throw ValidationError("margin report needs at least one scene");
  const QueryEngine engine(cb);
  std::vector<Question> questions(training_questions().begin(),
                                  training_questions().end());
  questions.insert(questions.end(), generalization_questions().begin(),
                   generalization_questions().end());

  MarginReport report;
  for (const auto& q : questions) report.entries.push_back(MarginEntry{q, {}, {}, {}, 0.0});

  std::vector<std::size_t> correct(questions.size(), 0);
  for (const Scene& scene : scenes) {
    const HDVector m = encode_scene(scene, cb);
    for (std::size_t i = 0; i < questions.size(); ++i) {
      const auto& q = questions[i];
      const QueryScore s = engine.score(q, m.span());
      const bool truth = q.truth(scene);
      auto& e = report.entries[i];
      (truth ? e.when_true : e.when_false).add(s.value);
      e.by_occurrence[static_cast<std::size_t>(occurrences(q, scene) + 1)].add(s.value);
      if (s.answer == truth) ++correct[i];
    }
  }
  for (std::size_t i = 0; i < questions.size(); ++i) {
    report.entries[i].accuracy =
        static_cast<double>(correct[i]) / static_cast<double>(scenes.size());
  }
  return report;
}

nlohmann::ordered_json MarginReport::to_json() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["question"] = e.question.to_string();
    j["threshold"] = e.question.threshold();
    j["accuracy"] = e.accuracy;
    j["true"] = e.when_true.to_json();
    j["false"] = e.when_false.to_json();
    nlohmann::ordered_json occ = nlohmann::ordered_json::object();
    for (int n = -1; n <= 2; ++n) {
      if (e.occurrence(n).count == 0) continue;
      occ[n < 0 ? "vacant" : std::to_string(n)] = e.occurrence(n).to_json();
    }
    j["by_occurrence"] = occ;
    arr.push_back(j);
  }
  return arr;
}

std::string MarginReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "question,stratum,count,min,mean,max\n";
  auto row = [&](const Question& q, const std::string& stratum,
                 const ScoreStats& s) {
    if (s.count == 0) return;
    os << '"' << q.to_string() << "\"," << stratum << ',' << s.count << ',' << s.min
       << ',' << s.mean << ',' << s.max << '\n';
  };
  for (const auto& e : entries) {
    row(e.question, "true", e.when_true);
    row(e.question, "false", e.when_false);
    for (int n = -1; n <= 2; ++n) {
      row(e.question, n < 0 ? "vacant" : "occ" + std::to_string(n), e.occurrence(n));
    }
  }
  return os.str();
}

}  // namespace hdvqa
