#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "../support/oracles.hpp"
#include "hdvqa/errors.hpp"
#include "hdvqa/io.hpp"
#include "hdvqa/mlp.hpp"

using namespace hdvqa;

namespace {

const MlpShape kToy{8, 5, 5, 6};

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  }
  return m;
}

// Loss = sum(G .* net(X)), so dLoss/dOutput == G.
double probe_loss(const MlpModel& model, const Matrix& x, const Matrix& g) {
  return (model.forward(x).output.array() * g.array()).sum();
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hdvqa_mlp_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("init: deterministic, zero biases, He-uniform spread") {
  const MlpModel a = MlpModel::init(1);
  const MlpModel b = MlpModel::init(1);
  CHECK(a.params().w1 == b.params().w1);
  CHECK(a.params().w3 == b.params().w3);
  CHECK_FALSE(MlpModel::init(2).params().w1 == a.params().w1);
  CHECK(a.params().b1.isZero());
  CHECK(a.params().b2.isZero());
  CHECK(a.params().b3.isZero());
  CHECK(a.params().parameter_count() ==
        2352 * 200 + 200 + 200 * 200 + 200 + 200 * 1000 + 1000);

  auto check_spread = [](const Matrix& w, double fan_in) {
    const double limit = std::sqrt(6.0 / fan_in);
    CHECK(w.cwiseAbs().maxCoeff() <= limit);
    const double mean = w.mean();
    const double var = (w.array() - mean).square().mean();
    const double expected = std::sqrt(2.0 / fan_in);
    CHECK(std::abs(std::sqrt(var) - expected) <= 0.2 * expected);
  };
  check_spread(a.params().w1, 2352);
  check_spread(a.params().w2, 200);
  check_spread(a.params().w3, 200);
}

TEST_CASE("forward: shapes, range, determinism and zero model") {
  const MlpModel model = MlpModel::init(4);
  std::mt19937_64 rng(1);
  Matrix x = random_matrix(rng, 2352, 3).cwiseAbs();
  const ForwardTrace t = model.forward(x);
  CHECK(t.output.rows() == 1000);
  CHECK(t.output.cols() == 3);
  CHECK(t.output.cwiseAbs().maxCoeff() < 1.0);
  CHECK(model.forward(x).output == t.output);

  // one column at a time equals the batch up to summation order
  for (Eigen::Index c = 0; c < 3; ++c) {
    const std::vector<double> col(x.col(c).data(), x.col(c).data() + x.rows());
    const Matrix single = model.forward(std::span<const double>(col)).output;
    CHECK((single.col(0) - t.output.col(c)).cwiseAbs().maxCoeff() < 1e-12);
  }

  MlpModel zero(MlpParams::zeros(MlpShape{}), 0);
  CHECK(zero.forward(x).output.isZero());

  CHECK_THROWS_AS(model.forward(Matrix::Zero(100, 1)), DimensionError);
}

TEST_CASE("forward: non-finite parameters are a numerical error") {
  MlpModel model = MlpModel::init(3, kToy);
  model.mutable_params().w2(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(model.params().all_finite());
  CHECK_THROWS_AS(model.check_finite(), NumericalError);
  CHECK_THROWS_AS(model.forward(Matrix::Ones(8, 1)), NumericalError);
}

TEST_CASE("forward: relu layers are positively homogeneous") {
  // with zero biases, h1(a x) = a h1(x) for a > 0
  MlpModel model = MlpModel::init(5, kToy);
  std::mt19937_64 rng(2);
  const Matrix x = random_matrix(rng, 8, 4);
  const auto t1 = model.forward(x);
  const auto t2 = model.forward(Matrix(3.0 * x));
  CHECK((t2.h1 - 3.0 * t1.h1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((t2.h2 - 3.0 * t1.h2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((t1.h1.array() >= 0.0).all());
}

TEST_CASE("backward: zero upstream gives zero gradients, db3 closed form") {
  const MlpModel model = MlpModel::init(6, kToy);
  std::mt19937_64 rng(3);
  const Matrix x = random_matrix(rng, 8, 2);
  const ForwardTrace t = model.forward(x);
  const MlpGradients zero = model.backward(t, Matrix::Zero(6, 2));
  zero.for_each([](int, const auto& tensor) { CHECK(tensor.isZero()); });

  const Matrix g = random_matrix(rng, 6, 2);
  const MlpGradients grads = model.backward(t, g);
  const Vector db3 = (g.array() * (1.0 - t.output.array().square())).rowwise().sum();
  CHECK((grads.b3 - db3).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(model.backward(t, Matrix::Zero(5, 2)), DimensionError);
}

TEST_CASE("backward matches central differences on a toy network") {
  MlpModel model = MlpModel::init(7, kToy);
  std::mt19937_64 rng(4);
  // nonzero biases so every path is exercised
  model.mutable_params().b1 = random_matrix(rng, 5, 1) * 0.1;
  model.mutable_params().b2 = random_matrix(rng, 5, 1) * 0.1;
  model.mutable_params().b3 = random_matrix(rng, 6, 1) * 0.1;
  const Matrix x = random_matrix(rng, 8, 3);
  const Matrix g = random_matrix(rng, 6, 3);
  const MlpGradients analytic = model.backward(model.forward(x), g);

  for (int which = 0; which < 6; ++which) {
    oracle::Vec a, fd;
    MlpParams& p = model.mutable_params();
    p.for_each([&](int idx, auto& tensor) {
      if (idx != which) return;
      for (Eigen::Index i = 0; i < tensor.size(); ++i) {
        const double saved = tensor.data()[i];
        tensor.data()[i] = saved + 1e-6;
        const double plus = probe_loss(model, x, g);
        tensor.data()[i] = saved - 1e-6;
        const double minus = probe_loss(model, x, g);
        tensor.data()[i] = saved;
        fd.push_back((plus - minus) / 2e-6);
      }
    });
    analytic.for_each([&](int idx, const auto& tensor) {
      if (idx != which) return;
      a.assign(tensor.data(), tensor.data() + tensor.size());
    });
    INFO("tensor " << which);
    CHECK(oracle::relative_error(a, fd) < 1e-4);
  }
}

TEST_CASE("checkpoint: round-trip, float32 rounding, header and atomic save") {
  const MlpModel model = MlpModel::init(9, kToy);
  const Checkpoint ckpt{model, 42};
  const std::string bytes = serialize_checkpoint(ckpt);
  CHECK(bytes.substr(0, 6) == "HDVQA1");
  const std::size_t floats = 8 * 5 + 5 + 5 * 5 + 5 + 5 * 6 + 6;
  CHECK(bytes.size() == 6 + 4 + 4 * 4 + 4 * floats + 8 + 8);

  const Checkpoint back = deserialize_checkpoint(bytes);
  CHECK(back.codebook_seed == 42);
  CHECK(back.model.init_seed() == 9);
  CHECK(back.model.shape() == kToy);
  const Matrix expected = model.params().w1.cast<float>().cast<double>();
  CHECK(back.model.params().w1 == expected);
  CHECK(serialize_checkpoint(back) == bytes);

  const auto dir = temp_dir("ckpt");
  save_checkpoint(dir / "m.ckpt", ckpt);
  CHECK(io::read_file(dir / "m.ckpt") == bytes);
  CHECK_FALSE(std::filesystem::exists(dir / "m.ckpt.tmp"));
  CHECK(serialize_checkpoint(load_checkpoint(dir / "m.ckpt")) == bytes);

  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(bad), ValidationError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 1)), ValidationError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), ValidationError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), ValidationError);
  std::filesystem::remove_all(dir);
}
