#include "hdvqa/pipeline.hpp"

#include "hdvqa/errors.hpp"
#include "hdvqa/io.hpp"

namespace hdvqa {

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool_version"] = tool_version;
  j["codebook_seed"] = codebook_seed;
  j["dim"] = dim;
  j["init_seed"] = init_seed;
  j["split"] = {{"split_seed", split.split_seed},
                {"test_fraction", split.test_fraction},
                {"dedupe", split.dedupe}};
  j["train"] = train.to_json();
  j["dataset_path"] = dataset_path;
  nlohmann::ordered_json arts = nlohmann::ordered_json::object();
  for (const auto& [name, hash] : artifacts) arts[name] = hash;
  j["artifacts"] = arts;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::ordered_json& j) {
  RunManifest m;
  try {
    m.tool_version = j.value("tool_version", std::string(kToolVersion));
    m.codebook_seed = j.at("codebook_seed").get<std::uint64_t>();
    m.dim = j.at("dim").get<std::size_t>();
    m.init_seed = j.at("init_seed").get<std::uint64_t>();
    const auto& s = j.at("split");
    m.split.split_seed = s.at("split_seed").get<std::uint64_t>();
    m.split.test_fraction = s.at("test_fraction").get<double>();
    m.split.dedupe = s.at("dedupe").get<bool>();
    m.train = TrainConfig::from_json(j.at("train"));
    m.dataset_path = j.value("dataset_path", std::string());
    if (j.contains("artifacts")) {
      for (const auto& [name, hash] : j.at("artifacts").items()) {
        m.artifacts[name] = hash.get<std::string>();
      }
    }
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ValidationError(std::string("bad run manifest: ") + e.what());
  }
  return m;
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::ordered_json::parse(io::read_file(path)));
  } catch (const nlohmann::ordered_json::parse_error& e) {
    throw ValidationError(std::string("run manifest is not json: ") + e.what());
  }
}

void RunManifest::save(const std::filesystem::path& path) const {
  io::write_file_atomic(path, to_json().dump(2) + "\n");
}

PipelineResult run_pipeline(const RunManifest& manifest,
                            const std::filesystem::path& workdir,
                            const std::function<void(const EpochStats&)>& on_epoch) {
  std::filesystem::create_directories(workdir);
  PipelineResult result;
  result.manifest = manifest;
  result.manifest.artifacts.clear();
  const auto dataset_dir = workdir / "dataset";
  result.manifest.dataset_path = dataset_dir.string();

  const Codebook cb = Codebook::make(manifest.codebook_seed, manifest.dim);
  {
    SplitSpec spec = manifest.split;
    write_dataset(dataset_dir, build_dataset(cb, spec));
  }
  const Dataset data = read_dataset(dataset_dir);
  const QueryEngine engine(cb);

  MlpShape shape;
  shape.output = manifest.dim;
  const auto train_idx = data.indices(SplitTag::Train);
  const auto test_idx = data.indices(SplitTag::Test);
  result.training = train(MlpModel::init(manifest.init_seed, shape), data, train_idx,
                          engine, manifest.train, on_epoch);

  const auto ckpt_path = workdir / "model.ckpt";
  save_checkpoint(ckpt_path, Checkpoint{result.training.model, manifest.codebook_seed});
  io::write_file_atomic(workdir / "train_log.csv",
                        training_log_csv(result.training.history));

  const Checkpoint loaded = load_checkpoint(ckpt_path);
  std::vector<Question> questions(training_questions().begin(), training_questions().end());
  questions.insert(questions.end(), generalization_questions().begin(),
                   generalization_questions().end());
  result.test_report = evaluate(loaded.model, data, test_idx, questions, engine);
  result.train_report = evaluate(loaded.model, data, train_idx, questions, engine);
  io::write_file_atomic(workdir / "eval_test.json", result.test_report.to_json().dump(2) + "\n");
  io::write_file_atomic(workdir / "eval_train.json",
                        result.train_report.to_json().dump(2) + "\n");

  for (const char* name : {"model.ckpt", "eval_test.json", "eval_train.json"}) {
    result.manifest.artifacts[name] = io::sha256_hex(io::read_file(workdir / name));
  }
  for (const char* name : {"images.bin", "encodings.bin", "labels.csv"}) {
    result.manifest.artifacts[std::string("dataset/") + name] =
        io::sha256_hex(io::read_file(dataset_dir / name));
  }
  result.manifest.save(workdir / "run_manifest.json");
  return result;
}

}  // namespace hdvqa
