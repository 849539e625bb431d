#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "hdvqa/dataset.hpp"
#include "hdvqa/training.hpp"

namespace hdvqa {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Everything needed to replay generate -> train -> eval bit-for-bit.
struct RunManifest {
  std::uint64_t codebook_seed = kDefaultCodebookSeed;
  std::size_t dim = kDefaultDim;
  std::uint64_t init_seed = kDefaultInitSeed;
  SplitSpec split;
  TrainConfig train;
  std::string dataset_path;
  std::string tool_version{kToolVersion};
  /// file name -> sha256, filled in after a run
  std::map<std::string, std::string> artifacts;

  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::ordered_json& j);
  static RunManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct PipelineResult {
  RunManifest manifest;  // with artifact hashes
  TrainResult training;
  EvalReport test_report;
  EvalReport train_report;
};

/// Generates the dataset into workdir/dataset, trains, writes
/// workdir/model.ckpt, train_log.csv, eval_test.json, eval_train.json and
/// run_manifest.json. Evaluation covers the trained and generalization
/// questions; reports are computed from the saved checkpoint.
PipelineResult run_pipeline(const RunManifest& manifest,
                            const std::filesystem::path& workdir,
                            const std::function<void(const EpochStats&)>& on_epoch = {});

}  // namespace hdvqa
