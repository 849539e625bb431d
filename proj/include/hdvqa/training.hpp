#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hdvqa/dataset.hpp"
#include "hdvqa/mlp.hpp"
#include "hdvqa/query.hpp"

namespace hdvqa {

inline constexpr std::uint64_t kDefaultInitSeed = 1;
inline constexpr std::uint64_t kDefaultShuffleSeed = 3;

enum class OptimizerKind : std::uint8_t { PlainSgd, MomentumSgd, Adam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view text);

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum = 0.9;  // momentum-sgd only
  std::uint64_t shuffle_seed = kDefaultShuffleSeed;
  /// Stop once an epoch's mean train loss drops below this.
  double early_stop = 0.01;

  void validate(std::size_t train_size) const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::ordered_json& j);
};

/// Per-record query loss: E_i = (value_i(m) - q_i)^2 for the five training
/// questions, their sum, and d(sum)/dm.
struct LossTerms {
  std::array<double, 5> e{};
  double total = 0.0;
  std::vector<double> grad;
};

/// Loss as a function of the hypervector alone. Throws ZeroNormError.
LossTerms loss_terms(const QueryEngine& engine, std::span<const double> m,
                     const SceneLabels& labels);
/// Forward pass on the record image, then the loss above.
LossTerms loss_terms(const MlpModel& model, const DatasetRecord& record,
                     const QueryEngine& engine);

/// Applies one update per call; holds momentum / Adam moments.
class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const MlpShape& shape);
  void step(MlpParams& params, const MlpGradients& grads);
  std::int64_t steps() const { return t_; }

 private:
  TrainConfig config_;
  MlpParams m_;
  MlpParams v_;
  std::int64_t t_ = 0;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  std::array<double, 5> e{};
  double wall_seconds = 0.0;
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochStats> history;
  bool early_stopped = false;
};

/// Minibatch descent on the mean per-record loss over `train_indices`.
/// Deterministic in (model, data, config); throws NumericalError on a
/// non-finite loss or a zero-norm network output.
TrainResult train(MlpModel model, const Dataset& data,
                  std::span<const std::size_t> train_indices,
                  const QueryEngine& engine, const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// epoch,mean_loss,E1,E2,E3,E4,E5,wall_seconds
std::string training_log_csv(std::span<const EpochStats> history);

struct QuestionEval {
  Question question;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
  std::size_t zero_norm = 0;
  ScoreStats when_true;
  ScoreStats when_false;

  std::size_t total() const {
    return true_positive + false_positive + true_negative + false_negative;
  }
  double accuracy() const;
  /// max(p, 1 - p) for the positive rate p of the ground truth.
  double majority_rate() const;
};

struct EvalReport {
  std::size_t record_count = 0;
  std::vector<QuestionEval> questions;

  const QuestionEval& find(const Question& q) const;
  nlohmann::ordered_json to_json() const;
};

/// Thresholded answers on net(image) against symbolic ground truth. A
/// zero-norm output scores 0 with answer false.
EvalReport evaluate(const MlpModel& model, const Dataset& data,
                    std::span<const std::size_t> indices,
                    std::span<const Question> questions, const QueryEngine& engine);

/// Same report computed on the stored clean encodings.
EvalReport evaluate_clean(const Dataset& data, std::span<const std::size_t> indices,
                          std::span<const Question> questions,
                          const QueryEngine& engine);

/// Column-stacked network inputs for the given records.
Matrix input_matrix(const Dataset& data, std::span<const std::size_t> indices);

}  // namespace hdvqa
