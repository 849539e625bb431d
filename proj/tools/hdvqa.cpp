// hdvqa: command-line front end for dataset generation, training, evaluation
// and single-image queries.
//
// Exit codes: 0 ok, 1 usage, 2 data/validation, 3 numerical.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hdvqa/dataset.hpp"
#include "hdvqa/encoding.hpp"
#include "hdvqa/errors.hpp"
#include "hdvqa/io.hpp"
#include "hdvqa/mlp.hpp"
#include "hdvqa/pipeline.hpp"
#include "hdvqa/query.hpp"
#include "hdvqa/training.hpp"

namespace fs = std::filesystem;
using namespace hdvqa;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Globals {
  std::uint64_t codebook_seed = kDefaultCodebookSeed;
  std::size_t dim = kDefaultDim;
  bool seed_given = false;
  bool dim_given = false;
  std::string manifest_out;
};

// Datasets carry their own seed and dimension; explicit flags must agree.
void check_dataset_flags(const Globals& g, const Dataset& ds) {
  if (g.seed_given && g.codebook_seed != ds.codebook_seed) {
    throw ValidationError("--codebook-seed " + std::to_string(g.codebook_seed) +
                          " does not match dataset seed " +
                          std::to_string(ds.codebook_seed));
  }
  if (g.dim_given && g.dim != ds.dim) {
    throw ValidationError("--dim " + std::to_string(g.dim) + " does not match dataset dim " +
                          std::to_string(ds.dim));
  }
}

void check_checkpoint(const Checkpoint& ckpt, const Dataset& ds) {
  if (ckpt.codebook_seed != ds.codebook_seed) {
    throw ValidationError("checkpoint codebook seed " + std::to_string(ckpt.codebook_seed) +
                          " does not match dataset seed " +
                          std::to_string(ds.codebook_seed));
  }
  if (ckpt.model.shape().output != ds.dim) {
    throw ValidationError("checkpoint output size does not match dataset dim");
  }
}

std::vector<std::size_t> select_split(const Dataset& ds, const std::string& split) {
  if (split == "test") return ds.indices(SplitTag::Test);
  if (split == "train") return ds.indices(SplitTag::Train);
  std::vector<std::size_t> all(ds.records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

RunManifest base_manifest(const Globals& g) {
  RunManifest m;
  m.codebook_seed = g.codebook_seed;
  m.dim = g.dim;
  return m;
}

void maybe_write_manifest(const Globals& g, const RunManifest& m) {
  if (g.manifest_out.empty()) return;
  m.save(g.manifest_out);
  std::cout << "manifest: " << g.manifest_out << "\n";
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// ---- generate ----------------------------------------------------------

struct GenerateOpts {
  std::string out;
  bool dedupe = true;
  SplitSpec split;
};

int cmd_generate(const Globals& g, const GenerateOpts& o) {
  SplitSpec spec = o.split;
  spec.dedupe = o.dedupe;
  spec.validate();
  const Codebook cb = Codebook::make(g.codebook_seed, g.dim);
  const Dataset ds = build_dataset(cb, spec);
  write_dataset(o.out, ds);

  std::cout << "records: " << ds.records.size() << " (train " << ds.count(SplitTag::Train)
            << ", test " << ds.count(SplitTag::Test) << ")\n";
  std::array<std::size_t, 8> positives{};
  for (const auto& r : ds.records) {
    for (std::size_t i = 0; i < 5; ++i) positives[i] += r.labels.q[i];
    for (std::size_t i = 0; i < 3; ++i) positives[5 + i] += r.labels.g[i];
  }
  std::cout << "label base rates:\n";
  for (std::size_t i = 0; i < 8; ++i) {
    const Question& q = i < 5 ? training_questions()[i] : generalization_questions()[i - 5];
    std::cout << "  " << std::left << std::setw(32) << q.to_string() << " "
              << fixed(static_cast<double>(positives[i]) /
                       static_cast<double>(ds.records.size()))
              << "\n";
  }
  RunManifest m = base_manifest(g);
  m.split = spec;
  m.dataset_path = o.out;
  for (const char* name : {"images.bin", "encodings.bin", "labels.csv"}) {
    m.artifacts[std::string("dataset/") + name] =
        io::sha256_hex(io::read_file(fs::path(o.out) / name));
  }
  maybe_write_manifest(g, m);
  return kOk;
}

// ---- train -------------------------------------------------------------

struct TrainOpts {
  std::string data;
  std::string out;
  std::string log;
  std::string optimizer = "adam";
  std::uint64_t init_seed = kDefaultInitSeed;
  TrainConfig config;
  int print_every = 10;
};

int cmd_train(const Globals& g, TrainOpts o) {
  o.config.optimizer = parse_optimizer(o.optimizer);
  const Dataset ds = read_dataset(o.data);
  check_dataset_flags(g, ds);
  const Codebook cb = Codebook::make(ds.codebook_seed, ds.dim);
  const QueryEngine engine(cb);
  MlpShape shape;
  shape.output = ds.dim;
  const auto idx = ds.indices(SplitTag::Train);
  std::cout << "training on " << idx.size() << " records, " << to_string(o.config.optimizer)
            << " lr " << o.config.learning_rate << ", " << o.config.epochs << " epochs\n";
  const TrainResult result =
      train(MlpModel::init(o.init_seed, shape), ds, idx, engine, o.config,
            [&](const EpochStats& s) {
              if (o.print_every > 0 &&
                  (s.epoch == 1 || s.epoch % o.print_every == 0 || s.epoch == o.config.epochs)) {
                std::cout << "epoch " << std::setw(4) << s.epoch << "  loss "
                          << fixed(s.mean_loss, 5) << "  (" << fixed(s.wall_seconds, 1)
                          << " s)\n";
              }
            });
  if (result.early_stopped) {
    std::cout << "early stop at epoch " << result.history.back().epoch << "\n";
  }
  save_checkpoint(o.out, Checkpoint{result.model, ds.codebook_seed});
  const std::string log_path = o.log.empty() ? o.out + ".log.csv" : o.log;
  io::write_file_atomic(log_path, training_log_csv(result.history));
  std::cout << "final train loss: " << fixed(result.history.back().mean_loss, 5) << "\n"
            << "checkpoint: " << o.out << "\nlog: " << log_path << "\n";

  RunManifest m = base_manifest(g);
  m.codebook_seed = ds.codebook_seed;
  m.dim = ds.dim;
  m.init_seed = o.init_seed;
  m.split = ds.split;
  m.train = o.config;
  m.dataset_path = o.data;
  m.artifacts[fs::path(o.out).filename().string()] = io::sha256_hex(io::read_file(o.out));
  m.artifacts[fs::path(log_path).filename().string()] = io::sha256_hex(io::read_file(log_path));
  Globals with_default = g;
  if (with_default.manifest_out.empty()) with_default.manifest_out = o.out + ".manifest.json";
  maybe_write_manifest(with_default, m);
  return kOk;
}

// ---- eval --------------------------------------------------------------

struct EvalOpts {
  std::string checkpoint;
  std::string data;
  std::string questions = "trained,generalization";
  std::string split = "test";
  std::string out;
};

void print_report(const EvalReport& report) {
  std::cout << std::left << std::setw(32) << "question" << std::right << std::setw(10)
            << "accuracy" << std::setw(10) << "majority" << "\n";
  for (const auto& e : report.questions) {
    std::cout << std::left << std::setw(32) << e.question.to_string() << std::right
              << std::setw(10) << fixed(e.accuracy()) << std::setw(10)
              << fixed(e.majority_rate()) << "\n";
  }
}

int cmd_eval(const Globals& g, const EvalOpts& o) {
  const auto questions = parse_question_list(o.questions);
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const Dataset ds = read_dataset(o.data);
  check_dataset_flags(g, ds);
  check_checkpoint(ckpt, ds);
  const QueryEngine engine(Codebook::make(ds.codebook_seed, ds.dim));
  const auto idx = select_split(ds, o.split);
  const EvalReport report = evaluate(ckpt.model, ds, idx, questions, engine);
  std::cout << o.split << " split, " << idx.size() << " records\n";
  print_report(report);
  if (!o.out.empty()) {
    io::write_file_atomic(o.out, report.to_json().dump(2) + "\n");
    std::cout << "report: " << o.out << "\n";
  }
  RunManifest m = base_manifest(g);
  m.codebook_seed = ds.codebook_seed;
  m.dim = ds.dim;
  m.init_seed = ckpt.model.init_seed();
  m.split = ds.split;
  m.dataset_path = o.data;
  m.artifacts[fs::path(o.checkpoint).filename().string()] =
      io::sha256_hex(io::read_file(o.checkpoint));
  if (!o.out.empty()) {
    m.artifacts[fs::path(o.out).filename().string()] = io::sha256_hex(io::read_file(o.out));
  }
  maybe_write_manifest(g, m);
  return kOk;
}

// ---- query / decode ------------------------------------------------------

struct Target {
  std::string checkpoint;
  bool clean = false;
  std::string data;
  std::string image;  // record index or PPM path
};

bool is_index(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

// Hypervector for the selected image: stored clean encoding or network output.
struct Resolved {
  std::vector<double> m;
  std::optional<Scene> scene;
  std::uint64_t codebook_seed = kDefaultCodebookSeed;
  std::size_t dim = kDefaultDim;
};

Resolved resolve(const Globals& g, const Target& t) {
  if (t.clean == !t.checkpoint.empty()) {
    throw CLI::ValidationError("exactly one of --checkpoint or --clean is required");
  }
  Resolved r;
  r.codebook_seed = g.codebook_seed;
  r.dim = g.dim;
  std::optional<Image> image;
  if (is_index(t.image)) {
    if (t.data.empty()) throw CLI::ValidationError("a record index needs --data");
    const Dataset ds = read_dataset(t.data);
    check_dataset_flags(g, ds);
    const std::size_t i = std::stoul(t.image);
    if (i >= ds.records.size()) {
      throw ValidationError("record index " + t.image + " out of range (" +
                            std::to_string(ds.records.size()) + " records)");
    }
    r.codebook_seed = ds.codebook_seed;
    r.dim = ds.dim;
    r.scene = ds.records[i].scene;
    if (t.clean) r.m = ds.records[i].m.components();
    image = ds.records[i].image;
  } else {
    if (t.clean) throw CLI::ValidationError("--clean needs a record index, not an image file");
    image = from_ppm(io::read_file(t.image));
  }
  if (!t.clean) {
    const Checkpoint ckpt = load_checkpoint(t.checkpoint);
    if (ckpt.codebook_seed != r.codebook_seed) {
      throw ValidationError("checkpoint codebook seed " + std::to_string(ckpt.codebook_seed) +
                            " does not match " + std::to_string(r.codebook_seed));
    }
    if (ckpt.model.shape().output != r.dim) {
      throw ValidationError("checkpoint output size does not match dim");
    }
    const auto out = ckpt.model.forward(network_input(*image)).output;
    r.m.assign(out.data(), out.data() + out.size());
  }
  return r;
}

int cmd_query(const Globals& g, const Target& t, const std::string& question_text) {
  const Question q = Question::parse(question_text);
  const Resolved r = resolve(g, t);
  const Codebook cb = Codebook::make(r.codebook_seed, r.dim);
  const QueryScore s = score(q, r.m, cb);
  std::cout << q.to_string() << "\n"
            << "  value     " << fixed(s.value, 6) << "\n"
            << "  threshold " << fixed(s.threshold, 2) << "\n"
            << "  answer    " << (s.answer ? "yes" : "no") << "\n";
  if (r.scene) {
    std::cout << "  truth     " << (q.truth(*r.scene) ? "yes" : "no") << "\n"
              << "  scene     " << r.scene->to_string() << "\n";
  }
  return kOk;
}

int cmd_decode(const Globals& g, const Target& t, const std::string& position,
               const std::string& key) {
  std::vector<Concept> positions(kPositions.begin(), kPositions.end());
  std::vector<Concept> keys = {Concept::Shape, Concept::Color};
  if (!position.empty()) {
    const auto p = parse_concept(position);
    if (!p || role_of(*p) != Role::Position) throw ParseError("unknown position '" + position + "'");
    positions = {*p};
  }
  if (!key.empty()) {
    if (key != "shape" && key != "color") throw ParseError("key must be shape or color");
    keys = {key == "shape" ? Concept::Shape : Concept::Color};
  }
  const Resolved r = resolve(g, t);
  const Codebook cb = Codebook::make(r.codebook_seed, r.dim);
  for (Concept p : positions) {
    for (Concept k : keys) {
      const DecodeResult d = decode_attribute(r.m, p, k, cb);
      std::cout << std::left << std::setw(14) << concept_name(p) << std::setw(7)
                << concept_name(k) << std::setw(10) << concept_name(d.value) << "margin "
                << fixed(d.margin) << "\n";
    }
  }
  if (r.scene) std::cout << "scene: " << r.scene->to_string() << "\n";
  return kOk;
}

// ---- margins -----------------------------------------------------------

int cmd_margins(const Globals& g, const std::string& data, const std::string& out,
                const std::string& json_out) {
  const Dataset ds = read_dataset(data);
  check_dataset_flags(g, ds);
  std::vector<Scene> scenes;
  scenes.reserve(ds.records.size());
  for (const auto& r : ds.records) scenes.push_back(r.scene);
  const MarginReport report =
      clean_margin_report(scenes, Codebook::make(ds.codebook_seed, ds.dim));
  std::cout << std::left << std::setw(32) << "question" << std::right << std::setw(9)
            << "thresh" << std::setw(9) << "occ=0" << std::setw(9) << "occ=1" << std::setw(9)
            << "occ=2" << std::setw(10) << "accuracy" << "\n";
  for (const auto& e : report.entries) {
    std::cout << std::left << std::setw(32) << e.question.to_string() << std::right
              << std::setw(9) << fixed(e.question.threshold(), 2);
    for (int n = 0; n < 3; ++n) {
      const auto& s = e.occurrence(n);
      std::cout << std::setw(9) << (s.count ? fixed(s.mean, 3) : std::string("-"));
    }
    std::cout << std::setw(10) << fixed(e.accuracy) << "\n";
  }
  std::cout << "(same-shape strata count attributes shared by the two figures)\n";
  if (!out.empty()) {
    io::write_file_atomic(out, report.to_csv());
    std::cout << "csv: " << out << "\n";
  }
  if (!json_out.empty()) {
    io::write_file_atomic(json_out, report.to_json().dump(2) + "\n");
    std::cout << "json: " << json_out << "\n";
  }
  return kOk;
}

// ---- run (replay a manifest) --------------------------------------------

int cmd_run(const Globals& g, const std::string& manifest_path, const std::string& workdir) {
  RunManifest m = manifest_path.empty() ? base_manifest(g) : RunManifest::load(manifest_path);
  if (manifest_path.empty()) m.dim = g.dim;
  const PipelineResult r = run_pipeline(m, workdir, [](const EpochStats& s) {
    if (s.epoch == 1 || s.epoch % 10 == 0) {
      std::cout << "epoch " << std::setw(4) << s.epoch << "  loss " << fixed(s.mean_loss, 5)
                << "  (" << fixed(s.wall_seconds, 1) << " s)\n";
    }
  });
  std::cout << "final train loss: " << fixed(r.training.history.back().mean_loss, 5) << "\n"
            << "test split\n";
  print_report(r.test_report);
  for (const auto& [name, hash] : r.manifest.artifacts) {
    std::cout << "  " << std::left << std::setw(26) << name << hash << "\n";
  }
  if (!g.manifest_out.empty()) r.manifest.save(g.manifest_out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hdvqa: hyperdimensional visual question answering"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--codebook-seed", g.codebook_seed, "codebook seed")
                       ->capture_default_str();
  auto* dim_opt = app.add_option("--dim", g.dim, "hypervector dimension")
                      ->capture_default_str()
                      ->check(CLI::PositiveNumber);
  app.add_option("--manifest-out", g.manifest_out, "write a run manifest JSON here");

  GenerateOpts gen;
  auto* generate = app.add_subcommand("generate", "enumerate, render, encode and split scenes");
  generate->add_option("out", gen.out, "output directory")->required();
  generate->add_flag("--dedupe,!--no-dedupe", gen.dedupe,
                     "keep one scene per rendered image (default)");
  generate->add_option("--split-seed", gen.split.split_seed)->capture_default_str();
  generate->add_option("--test-fraction", gen.split.test_fraction)->capture_default_str();

  TrainOpts tr;
  auto* train_cmd = app.add_subcommand("train", "train the perceiver on a dataset");
  train_cmd->add_option("--data", tr.data, "dataset directory")->required();
  train_cmd->add_option("--out", tr.out, "checkpoint path")->required();
  train_cmd->add_option("--log", tr.log, "training log CSV (default <out>.log.csv)");
  train_cmd->add_option("--epochs", tr.config.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.config.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", tr.config.learning_rate)->capture_default_str();
  train_cmd->add_option("--optimizer", tr.optimizer)
      ->check(CLI::IsMember({"adam", "plain-sgd", "momentum-sgd"}))
      ->capture_default_str();
  train_cmd->add_option("--beta1", tr.config.beta1)->capture_default_str();
  train_cmd->add_option("--beta2", tr.config.beta2)->capture_default_str();
  train_cmd->add_option("--epsilon", tr.config.epsilon)->capture_default_str();
  train_cmd->add_option("--momentum", tr.config.momentum)->capture_default_str();
  train_cmd->add_option("--early-stop", tr.config.early_stop)->capture_default_str();
  train_cmd->add_option("--init-seed", tr.init_seed)->capture_default_str();
  train_cmd->add_option("--shuffle-seed", tr.config.shuffle_seed)->capture_default_str();
  train_cmd->add_option("--print-every", tr.print_every)->capture_default_str();

  EvalOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "thresholded accuracy of a checkpoint");
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--data", ev.data)->required();
  eval_cmd->add_option("--questions", ev.questions,
                       "comma-separated questions; 'trained' and 'generalization' expand")
      ->capture_default_str();
  eval_cmd->add_option("--split", ev.split)
      ->check(CLI::IsMember({"test", "train", "all"}))
      ->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "write the report JSON here");

  Target qt;
  std::string question;
  auto* query = app.add_subcommand("query", "score one question on one image");
  query->add_option("--checkpoint", qt.checkpoint);
  query->add_flag("--clean", qt.clean, "use the stored clean encoding");
  query->add_option("--data", qt.data, "dataset directory (for record indices)");
  query->add_option("image", qt.image, "record index or PPM file")->required();
  query->add_option("question", question)->required();

  Target dt;
  std::string position, key;
  auto* decode = app.add_subcommand("decode", "nearest-concept decode of position/key pairs");
  decode->add_option("--checkpoint", dt.checkpoint);
  decode->add_flag("--clean", dt.clean, "use the stored clean encoding");
  decode->add_option("--data", dt.data, "dataset directory (for record indices)");
  decode->add_option("--position", position, "one position (default all)");
  decode->add_option("--key", key, "shape or color (default both)");
  decode->add_option("image", dt.image, "record index or PPM file")->required();

  std::string margins_data, margins_out, margins_json;
  auto* margins = app.add_subcommand("margins", "clean-encoding score distributions");
  margins->add_option("data", margins_data, "dataset directory")->required();
  margins->add_option("--out", margins_out, "CSV output");
  margins->add_option("--json", margins_json, "JSON output");

  std::string run_manifest, run_workdir;
  auto* run = app.add_subcommand("run", "generate, train and evaluate from a manifest");
  run->add_option("--manifest", run_manifest, "run manifest to replay (default settings if omitted)");
  run->add_option("--workdir", run_workdir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  g.seed_given = seed_opt->count() > 0;
  g.dim_given = dim_opt->count() > 0;

  try {
    if (*generate) return cmd_generate(g, gen);
    if (*train_cmd) return cmd_train(g, tr);
    if (*eval_cmd) return cmd_eval(g, ev);
    if (*query) return cmd_query(g, qt, question);
    if (*decode) return cmd_decode(g, dt, position, key);
    if (*margins) return cmd_margins(g, margins_data, margins_out, margins_json);
    if (*run) return cmd_run(g, run_manifest, run_workdir);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const ZeroNormError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
