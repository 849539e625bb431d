#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hdvqa/hdc.hpp"
#include "hdvqa/scene.hpp"

namespace hdvqa {

inline constexpr std::uint64_t kDefaultSplitSeed = 7;
inline constexpr int kDatasetFormatVersion = 1;

struct DatasetRecord {
  std::size_t index = 0;
  Scene scene;
  Image image;
  HDVector m;
  SceneLabels labels;
};

struct SplitSpec {
  std::uint64_t split_seed = kDefaultSplitSeed;
  double test_fraction = 0.30;
  bool dedupe = true;

  void validate() const;
};

enum class SplitTag : std::uint8_t { Train, Test };

struct Dataset {
  std::uint64_t codebook_seed = kDefaultCodebookSeed;
  std::size_t dim = kDefaultDim;
  SplitSpec split;
  std::vector<DatasetRecord> records;
  std::vector<SplitTag> tags;  // parallel to records

  std::vector<std::size_t> indices(SplitTag tag) const;
  std::size_t count(SplitTag tag) const;
};

/// Deterministic Fisher-Yates over [0, n): draws from mt19937_64(seed), bounded
/// by rejection so the permutation depends only on the seed.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Shuffle by spec.split_seed and mark the first floor(f * N) as test. Records
/// sharing an image identity are kept on the same side: identities are
/// shuffled and split, and duplicates follow their first occurrence.
std::vector<SplitTag> split_dataset(std::span<const DatasetRecord> records,
                                    const SplitSpec& spec);

/// Enumerate, render, encode, label and split.
Dataset build_dataset(const Codebook& cb, const SplitSpec& spec);

/// Directory format: manifest.json, images.bin (f32 x 2352 per record),
/// encodings.bin (f32 x D per record), labels.csv.
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
/// Reads and cross-checks a dataset directory against a regenerated codebook.
Dataset read_dataset(const std::filesystem::path& dir);

nlohmann::ordered_json dataset_manifest(const Dataset& ds);
std::string labels_csv(const Dataset& ds);

/// Flattened pixel vector in [0, 1] for one record.
std::vector<double> network_input(const Image& image);

}  // namespace hdvqa
