#include "hdvqa/dataset.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "hdvqa/encoding.hpp"
#include "hdvqa/errors.hpp"
#include "hdvqa/io.hpp"

namespace hdvqa {

namespace {

constexpr std::string_view kLabelsHeader =
    "index,pos1,shape1,color1,pos2,shape2,color2,q1,q2,q3,q4,q5,g1,g2,g3,split";

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t upper_inclusive) {
  const std::uint64_t range = upper_inclusive + 1;
  if (range == 0) return rng();
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % range;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

Concept concept_field(const std::string& s, Role role) {
  const auto c = parse_concept(s);
  if (!c || role_of(*c) != role) {
    throw ValidationError("labels.csv: bad concept '" + s + "'");
  }
  return *c;
}

bool bool_field(const std::string& s) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ValidationError("labels.csv: expected 0/1, got '" + s + "'");
}

}  // namespace

void SplitSpec::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction must lie in (0, 1)");
  }
}

std::vector<std::size_t> Dataset::indices(SplitTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == tag) out.push_back(i);
  }
  return out;
}

std::size_t Dataset::count(SplitTag tag) const {
  return static_cast<std::size_t>(std::count(tags.begin(), tags.end(), tag));
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded(rng, i - 1));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::vector<SplitTag> split_dataset(std::span<const DatasetRecord> records,
                                    const SplitSpec& spec) {
  spec.validate();
  if (records.empty()) throw ValidationError("cannot split an empty dataset");

  // unique identities in first-occurrence order
  std::map<std::uint32_t, std::size_t> identity_slot;
  std::vector<std::size_t> slot_of(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto [it, inserted] =
        identity_slot.try_emplace(records[i].scene.image_id(), identity_slot.size());
    slot_of[i] = it->second;
  }
  const std::size_t unique = identity_slot.size();
  const auto n_test = static_cast<std::size_t>(
      std::floor(spec.test_fraction * static_cast<double>(unique)));

  const auto perm = seeded_permutation(unique, spec.split_seed);
  std::vector<SplitTag> slot_tag(unique, SplitTag::Train);
  for (std::size_t k = 0; k < n_test; ++k) slot_tag[perm[k]] = SplitTag::Test;

  std::vector<SplitTag> tags(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) tags[i] = slot_tag[slot_of[i]];
  return tags;
}

Dataset build_dataset(const Codebook& cb, const SplitSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.codebook_seed = cb.seed();
  ds.dim = cb.dim();
  ds.split = spec;
  const auto scenes = enumerate_scenes(spec.dedupe);
  ds.records.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    ds.records.push_back(DatasetRecord{i, scenes[i], render(scenes[i]),
                                       encode_scene(scenes[i], cb),
                                       label_scene(scenes[i])});
  }
  ds.tags = split_dataset(ds.records, spec);
  return ds;
}

nlohmann::ordered_json dataset_manifest(const Dataset& ds) {
  nlohmann::ordered_json j;
  j["format_version"] = kDatasetFormatVersion;
  j["codebook_seed"] = ds.codebook_seed;
  j["dim"] = ds.dim;
  j["dedupe"] = ds.split.dedupe;
  j["split"] = {{"split_seed", ds.split.split_seed},
                {"test_fraction", ds.split.test_fraction},
                {"dedupe", ds.split.dedupe}};
  j["record_count"] = ds.records.size();
  j["train_count"] = ds.count(SplitTag::Train);
  j["test_count"] = ds.count(SplitTag::Test);
  j["image_size"] = kImageSize;
  return j;
}

std::string labels_csv(const Dataset& ds) {
  std::ostringstream os;
  os << kLabelsHeader << '\n';
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    os << r.index;
    for (const auto& p : r.scene.placements) {
      os << ',' << concept_name(p.position) << ',' << concept_name(p.figure.shape)
         << ',' << concept_name(p.figure.color);
    }
    for (bool b : r.labels.q) os << ',' << (b ? 1 : 0);
    for (bool b : r.labels.g) os << ',' << (b ? 1 : 0);
    os << ',' << (ds.tags[i] == SplitTag::Test ? "test" : "train") << '\n';
  }
  return os.str();
}

void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create " + dir.string() + ": " + ec.message());

  std::string images, encodings;
  images.reserve(ds.records.size() * kImageSize * sizeof(float));
  encodings.reserve(ds.records.size() * ds.dim * sizeof(float));
  for (const auto& r : ds.records) {
    for (float v : r.image.pixels) io::put<float>(images, v);
    for (double v : r.m.components()) io::put<float>(encodings, static_cast<float>(v));
  }
  io::write_file_atomic(dir / "images.bin", images);
  io::write_file_atomic(dir / "encodings.bin", encodings);
  io::write_file_atomic(dir / "labels.csv", labels_csv(ds));
  io::write_file_atomic(dir / "manifest.json", dataset_manifest(ds).dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  nlohmann::ordered_json manifest;
  std::size_t count = 0;
  try {
    manifest = nlohmann::ordered_json::parse(io::read_file(dir / "manifest.json"));
    if (manifest.at("format_version").get<int>() != kDatasetFormatVersion) {
      throw ValidationError("unsupported dataset format version");
    }
    ds.codebook_seed = manifest.at("codebook_seed").get<std::uint64_t>();
    ds.dim = manifest.at("dim").get<std::size_t>();
    ds.split.split_seed = manifest.at("split").at("split_seed").get<std::uint64_t>();
    ds.split.test_fraction = manifest.at("split").at("test_fraction").get<double>();
    ds.split.dedupe = manifest.at("dedupe").get<bool>();
    count = manifest.at("record_count").get<std::size_t>();
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ValidationError(std::string("bad manifest.json: ") + e.what());
  }
  const Codebook cb = Codebook::make(ds.codebook_seed, ds.dim);

  const std::string images = io::read_file(dir / "images.bin");
  const std::string encodings = io::read_file(dir / "encodings.bin");
  if (images.size() != count * kImageSize * sizeof(float) ||
      encodings.size() != count * ds.dim * sizeof(float)) {
    throw ValidationError("binary payload sizes do not match record_count");
  }
  io::Reader img_in(images), enc_in(encodings);

  std::istringstream labels(io::read_file(dir / "labels.csv"));
  std::string line;
  std::getline(labels, line);
  if (line != kLabelsHeader) throw ValidationError("labels.csv: bad header");

  ds.records.reserve(count);
  while (std::getline(labels, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 16) throw ValidationError("labels.csv: expected 16 fields");
    DatasetRecord r;
    r.index = std::stoul(f[0]);
    for (std::size_t k = 0; k < 2; ++k) {
      r.scene.placements[k] = Placement{concept_field(f[1 + 3 * k], Role::Position),
                                        {concept_field(f[2 + 3 * k], Role::Shape),
                                         concept_field(f[3 + 3 * k], Role::Color)}};
    }
    r.scene.validate();
    for (std::size_t k = 0; k < 5; ++k) r.labels.q[k] = bool_field(f[7 + k]);
    for (std::size_t k = 0; k < 3; ++k) r.labels.g[k] = bool_field(f[12 + k]);
    if (f[15] != "train" && f[15] != "test") {
      throw ValidationError("labels.csv: split must be train or test");
    }
    for (auto& px : r.image.pixels) px = img_in.get<float>();
    std::vector<double> m(ds.dim);
    for (auto& x : m) x = static_cast<double>(enc_in.get<float>());
    r.m = HDVector(std::move(m));

    if (!(r.labels == label_scene(r.scene))) {
      throw ValidationError("labels.csv: labels disagree with scene at record " + f[0]);
    }
    if (!(r.image == render(r.scene))) {
      throw ValidationError("images.bin: image disagrees with scene at record " + f[0]);
    }
    if (!(r.m == encode_scene(r.scene, cb))) {
      throw ValidationError("encodings.bin: encoding disagrees with codebook at record " +
                            f[0]);
    }
    ds.tags.push_back(f[15] == "test" ? SplitTag::Test : SplitTag::Train);
    ds.records.push_back(std::move(r));
  }
  if (ds.records.size() != count) {
    throw ValidationError("labels.csv row count does not match record_count");
  }
  return ds;
}

std::vector<double> network_input(const Image& image) {
  return std::vector<double>(image.pixels.begin(), image.pixels.end());
}

}  // namespace hdvqa
