#pragma once
/**
 * The perceiver: x -> relu(W1 x + b1) -> relu(W2 h1 + b2) -> tanh(W3 h2 + b3).
 *
 * Batched: inputs are columns of an (input x batch) matrix. Backward is the
 * hand-written reverse-mode chain rule with relu'(0) = 0.
 */

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace hdvqa {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1>;

struct MlpShape {
  std::size_t input = 2352;
  std::size_t hidden1 = 200;
  std::size_t hidden2 = 200;
  std::size_t output = 1000;

  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

/// Parameter tensors in declaration order W1, b1, W2, b2, W3, b3.
struct MlpParams {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  Matrix w3;
  Vector b3;

  static MlpParams zeros(const MlpShape& shape);
  MlpShape shape() const;

  /// Applies f(tensor_index, Eigen::Ref<Matrix-like>) to each tensor in order.
  template <typename F>
  void for_each(F&& f) {
    f(0, w1); f(1, b1); f(2, w2); f(3, b2); f(4, w3); f(5, b3);
  }
  template <typename F>
  void for_each(F&& f) const {
    f(0, w1); f(1, b1); f(2, w2); f(3, b2); f(4, w3); f(5, b3);
  }

  std::size_t parameter_count() const;
  bool all_finite() const;
  void set_zero();
};

using MlpGradients = MlpParams;

struct ForwardTrace {
  Matrix input;  // input x batch
  Matrix z1, h1;
  Matrix z2, h2;
  Matrix z3;
  Matrix output;  // tanh(z3), output x batch
};

class MlpModel {
 public:
  MlpModel() = default;
  MlpModel(MlpParams params, std::uint64_t init_seed);

  /// Uniform(-a, a) with a = sqrt(6 / fan_in) (std sqrt(2 / fan_in)), zero
  /// biases. Draws from mt19937_64(seed), W1 then W2 then W3, row-major,
  /// 53-bit mantissa mapping of each 64-bit draw.
  static MlpModel init(std::uint64_t seed, const MlpShape& shape = {});

  const MlpShape& shape() const { return shape_; }
  const MlpParams& params() const { return params_; }
  MlpParams& mutable_params() { return params_; }
  std::uint64_t init_seed() const { return init_seed_; }

  /// Throws DimensionError on a wrong input size, NumericalError on a
  /// non-finite intermediate.
  ForwardTrace forward(const Matrix& inputs) const;
  ForwardTrace forward(std::span<const double> input) const;

  /// Gradients (summed over the batch) given d(loss)/d(output), one column
  /// per sample.
  MlpGradients backward(const ForwardTrace& trace,
                        const Matrix& output_gradient) const;

  void check_finite() const;

 private:
  MlpShape shape_;
  MlpParams params_;
  std::uint64_t init_seed_ = 0;
};

/// Checkpoint: "HDVQA1", u32 layer count, u32 dims (layers + 1), float32
/// tensors row-major in declaration order, u64 init seed, u64 codebook seed.
/// All little-endian. Weights round to float32 on save.
struct Checkpoint {
  MlpModel model;
  std::uint64_t codebook_seed = 0;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

/// Writes to a sibling temp file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hdvqa
