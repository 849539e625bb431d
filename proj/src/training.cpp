#include "hdvqa/training.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <cmath>
#include <sstream>

#include "hdvqa/errors.hpp"

namespace hdvqa {

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::PlainSgd: return "plain-sgd";
    case OptimizerKind::MomentumSgd: return "momentum-sgd";
    case OptimizerKind::Adam: return "adam";
  }
  return {};
}

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "plain-sgd") return OptimizerKind::PlainSgd;
  if (text == "momentum-sgd") return OptimizerKind::MomentumSgd;
  if (text == "adam") return OptimizerKind::Adam;
  throw ParseError("unknown optimizer '" + std::string(text) + "'");
}

void TrainConfig::validate(std::size_t train_size) const {
  if (epochs <= 0) throw ValidationError("epochs must be positive");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (batch_size > train_size) {
    throw ValidationError("batch_size exceeds train set size");
  }
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(early_stop >= 0.0)) throw ValidationError("early_stop must be non-negative");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["optimizer"] = to_string(optimizer);
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["epsilon"] = epsilon;
  j["momentum"] = momentum;
  j["shuffle_seed"] = shuffle_seed;
  j["early_stop"] = early_stop;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::ordered_json& j) {
  TrainConfig c;
  try {
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
    c.early_stop = j.at("early_stop").get<double>();
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ValidationError(std::string("bad train config json: ") + e.what());
  }
  return c;
}

LossTerms loss_terms(const QueryEngine& engine, std::span<const double> m,
                     const SceneLabels& labels) {
  LossTerms out;
  out.grad.assign(m.size(), 0.0);
  const auto& questions = training_questions();
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const double target = labels.q[i] ? 1.0 : 0.0;
    // value first, then the gradient with upstream 2 (value - target)
    const double value = engine.value_and_gradient(questions[i], m, {}, 0.0);
    const double residual = value - target;
    engine.value_and_gradient(questions[i], m, out.grad, 2.0 * residual);
    out.e[i] = residual * residual;
    out.total += out.e[i];
  }
  return out;
}

LossTerms loss_terms(const MlpModel& model, const DatasetRecord& record,
                     const QueryEngine& engine) {
  const auto input = network_input(record.image);
  const ForwardTrace trace = model.forward(input);
  return loss_terms(engine, std::span<const double>(trace.output.data(),
                                                    static_cast<std::size_t>(trace.output.rows())),
                    record.labels);
}

Optimizer::Optimizer(const TrainConfig& config, const MlpShape& shape)
    : config_(config), m_(MlpParams::zeros(shape)), v_(MlpParams::zeros(shape)) {}

void Optimizer::step(MlpParams& params, const MlpGradients& grads) {
  ++t_;
  const double lr = config_.learning_rate;
  // Flat walk over the six tensors in declaration order.
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    switch (config_.optimizer) {
      case OptimizerKind::PlainSgd:
        p.noalias() -= lr * g;
        break;
      case OptimizerKind::MomentumSgd:
        m = config_.momentum * m + g;
        p.noalias() -= lr * m;
        break;
      case OptimizerKind::Adam: {
        const double b1 = config_.beta1, b2 = config_.beta2;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        p.array() -= lr * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + config_.epsilon);
        break;
      }
    }
  };
  update(params.w1, grads.w1, m_.w1, v_.w1);
  update(params.b1, grads.b1, m_.b1, v_.b1);
  update(params.w2, grads.w2, m_.w2, v_.w2);
  update(params.b2, grads.b2, m_.b2, v_.b2);
  update(params.w3, grads.w3, m_.w3, v_.w3);
  update(params.b3, grads.b3, m_.b3, v_.b3);
}

Matrix input_matrix(const Dataset& data, std::span<const std::size_t> indices) {
  Matrix x(static_cast<Eigen::Index>(kImageSize), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const auto& px = data.records.at(indices[c]).image.pixels;
    for (std::size_t r = 0; r < kImageSize; ++r) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = px[r];
    }
  }
  return x;
}

TrainResult train(MlpModel model, const Dataset& data,
                  std::span<const std::size_t> train_indices,
                  const QueryEngine& engine, const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  config.validate(train_indices.size());
  if (model.shape().output != engine.dim()) {
    throw DimensionError("model output dim does not match codebook dim");
  }
  if (model.shape().input != kImageSize) {
    throw DimensionError("model input dim does not match image size");
  }
  const Matrix inputs = input_matrix(data, train_indices);
  Optimizer optimizer(config, model.shape());
  std::mt19937_64 shuffle_rng(config.shuffle_seed);

  TrainResult result;
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = train_indices.size();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // one permutation per epoch, seeded from the shuffle stream
    const auto order = seeded_permutation(n, shuffle_rng());
    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t end = std::min(n, begin + config.batch_size);
      const auto b = static_cast<Eigen::Index>(end - begin);
      Matrix batch(inputs.rows(), b);
      for (Eigen::Index k = 0; k < b; ++k) {
        batch.col(k) = inputs.col(static_cast<Eigen::Index>(order[begin + static_cast<std::size_t>(k)]));
      }
      const ForwardTrace trace = model.forward(batch);
      Matrix out_grad(trace.output.rows(), b);
      for (Eigen::Index k = 0; k < b; ++k) {
        const auto& record =
            data.records[train_indices[order[begin + static_cast<std::size_t>(k)]]];
        LossTerms lt;
        try {
          lt = loss_terms(engine,
                          std::span<const double>(trace.output.col(k).data(),
                                                  static_cast<std::size_t>(trace.output.rows())),
                          record.labels);
        } catch (const ZeroNormError& e) {
          throw NumericalError(std::string("training aborted: ") + e.what());
        }
        if (!std::isfinite(lt.total)) {
          throw NumericalError("training diverged: non-finite loss at epoch " +
                               std::to_string(epoch));
        }
        stats.mean_loss += lt.total;
        for (std::size_t q = 0; q < 5; ++q) stats.e[q] += lt.e[q];
        for (Eigen::Index i = 0; i < out_grad.rows(); ++i) {
          out_grad(i, k) = lt.grad[static_cast<std::size_t>(i)] / static_cast<double>(b);
        }
      }
      const MlpGradients grads = model.backward(trace, out_grad);
      optimizer.step(model.mutable_params(), grads);
      if (!model.params().all_finite()) {
        throw NumericalError("training diverged: non-finite parameters at epoch " +
                             std::to_string(epoch));
      }
    }
    stats.mean_loss /= static_cast<double>(n);
    for (double& e : stats.e) e /= static_cast<double>(n);
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (stats.mean_loss < config.early_stop) {
      result.early_stopped = true;
      break;
    }
  }
  result.model = std::move(model);
  return result;
}

std::string training_log_csv(std::span<const EpochStats> history) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,mean_loss,E1,E2,E3,E4,E5,wall_seconds\n";
  for (const auto& s : history) {
    os << s.epoch << ',' << s.mean_loss;
    for (double e : s.e) os << ',' << e;
    os << ',' << s.wall_seconds << '\n';
  }
  return os.str();
}

double QuestionEval::accuracy() const {
  const auto n = total();
  if (n == 0) return 0.0;
  return static_cast<double>(true_positive + true_negative) / static_cast<double>(n);
}

double QuestionEval::majority_rate() const {
  const auto n = total();
  if (n == 0) return 0.0;
  // integer max first so a constant answer matches accuracy() bit for bit
  const std::size_t positives = true_positive + false_negative;
  return static_cast<double>(std::max(positives, n - positives)) / static_cast<double>(n);
}

const QuestionEval& EvalReport::find(const Question& q) const {
  for (const auto& e : questions) {
    if (e.question == q) return e;
  }
  throw ValidationError("question not in report: " + q.to_string());
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["record_count"] = record_count;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : questions) {
    nlohmann::ordered_json q;
    q["question"] = e.question.to_string();
    q["threshold"] = e.question.threshold();
    q["accuracy"] = e.accuracy();
    q["majority_rate"] = e.majority_rate();
    q["counts"] = {{"true_positive", e.true_positive},
                   {"false_positive", e.false_positive},
                   {"true_negative", e.true_negative},
                   {"false_negative", e.false_negative},
                   {"zero_norm", e.zero_norm}};
    q["scores_true"] = e.when_true.to_json();
    q["scores_false"] = e.when_false.to_json();
    arr.push_back(q);
  }
  j["questions"] = arr;
  return j;
}

namespace {

void tally(QuestionEval& e, const Question& q, const QueryEngine& engine,
           std::span<const double> m, bool truth) {
  double value = 0.0;
  bool answer = false;
  try {
    const QueryScore s = engine.score(q, m);
    value = s.value;
    answer = s.answer;
  } catch (const ZeroNormError&) {
    ++e.zero_norm;
  }
  (truth ? e.when_true : e.when_false).add(value);
  if (truth) {
    ++(answer ? e.true_positive : e.false_negative);
  } else {
    ++(answer ? e.false_positive : e.true_negative);
  }
}

EvalReport empty_report(std::span<const std::size_t> indices,
                        std::span<const Question> questions) {
  EvalReport report;
  report.record_count = indices.size();
  for (const auto& q : questions) {
    QuestionEval e;
    e.question = q;
    report.questions.push_back(e);
  }
  return report;
}

}  // namespace

EvalReport evaluate(const MlpModel& model, const Dataset& data,
                    std::span<const std::size_t> indices,
                    std::span<const Question> questions, const QueryEngine& engine) {
  EvalReport report = empty_report(indices, questions);
  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < indices.size(); begin += kChunk) {
    const std::size_t end = std::min(indices.size(), begin + kChunk);
    const auto chunk = indices.subspan(begin, end - begin);
    const ForwardTrace trace = model.forward(input_matrix(data, chunk));
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      const auto col = trace.output.col(static_cast<Eigen::Index>(k));
      const std::span<const double> m(col.data(), static_cast<std::size_t>(col.size()));
      const Scene& scene = data.records[chunk[k]].scene;
      for (std::size_t qi = 0; qi < questions.size(); ++qi) {
        tally(report.questions[qi], questions[qi], engine, m, questions[qi].truth(scene));
      }
    }
  }
  return report;
}

EvalReport evaluate_clean(const Dataset& data, std::span<const std::size_t> indices,
                          std::span<const Question> questions,
                          const QueryEngine& engine) {
  EvalReport report = empty_report(indices, questions);
  for (std::size_t idx : indices) {
    const auto& r = data.records.at(idx);
    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
      tally(report.questions[qi], questions[qi], engine, r.m.span(),
            questions[qi].truth(r.scene));
    }
  }
  return report;
}

}  // namespace hdvqa
