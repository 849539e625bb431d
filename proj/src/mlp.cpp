#include "hdvqa/mlp.hpp"

#include <cmath>
#include <random>

#include "hdvqa/errors.hpp"
#include "hdvqa/io.hpp"

namespace hdvqa {

namespace {

constexpr std::string_view kMagic = "HDVQA1";
constexpr std::uint32_t kLayerCount = 3;

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void fill_uniform(std::mt19937_64& rng, Matrix& w, double limit) {
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      w(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
    }
  }
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericalError(std::string("non-finite values in ") + what);
  }
}

}  // namespace

MlpParams MlpParams::zeros(const MlpShape& s) {
  MlpParams p;
  p.w1 = Matrix::Zero(s.hidden1, s.input);
  p.b1 = Vector::Zero(s.hidden1);
  p.w2 = Matrix::Zero(s.hidden2, s.hidden1);
  p.b2 = Vector::Zero(s.hidden2);
  p.w3 = Matrix::Zero(s.output, s.hidden2);
  p.b3 = Vector::Zero(s.output);
  return p;
}

MlpShape MlpParams::shape() const {
  return {static_cast<std::size_t>(w1.cols()), static_cast<std::size_t>(w1.rows()),
          static_cast<std::size_t>(w2.rows()), static_cast<std::size_t>(w3.rows())};
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](int, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

bool MlpParams::all_finite() const {
  bool ok = true;
  for_each([&](int, const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

void MlpParams::set_zero() {
  for_each([](int, auto& t) { t.setZero(); });
}

MlpModel::MlpModel(MlpParams params, std::uint64_t init_seed)
    : shape_(params.shape()), params_(std::move(params)), init_seed_(init_seed) {
  const auto& p = params_;
  if (p.b1.size() != p.w1.rows() || p.w2.cols() != p.w1.rows() ||
      p.b2.size() != p.w2.rows() || p.w3.cols() != p.w2.rows() ||
      p.b3.size() != p.w3.rows()) {
    throw DimensionError("inconsistent MLP parameter shapes");
  }
  check_finite();
}

MlpModel MlpModel::init(std::uint64_t seed, const MlpShape& shape) {
  MlpParams p = MlpParams::zeros(shape);
  std::mt19937_64 rng(seed);
  fill_uniform(rng, p.w1, std::sqrt(6.0 / static_cast<double>(shape.input)));
  fill_uniform(rng, p.w2, std::sqrt(6.0 / static_cast<double>(shape.hidden1)));
  fill_uniform(rng, p.w3, std::sqrt(6.0 / static_cast<double>(shape.hidden2)));
  return MlpModel(std::move(p), seed);
}

void MlpModel::check_finite() const {
  if (!params_.all_finite()) throw NumericalError("non-finite model parameters");
}

ForwardTrace MlpModel::forward(const Matrix& inputs) const {
  if (static_cast<std::size_t>(inputs.rows()) != shape_.input) {
    throw DimensionError("forward: input size " + std::to_string(inputs.rows()) +
                         " != " + std::to_string(shape_.input));
  }
  const auto& p = params_;
  ForwardTrace t;
  t.input = inputs;
  t.z1 = (p.w1 * inputs).colwise() + p.b1;
  t.h1 = t.z1.cwiseMax(0.0);
  t.z2 = (p.w2 * t.h1).colwise() + p.b2;
  t.h2 = t.z2.cwiseMax(0.0);
  t.z3 = (p.w3 * t.h2).colwise() + p.b3;
  t.output = t.z3.array().tanh().matrix();
  require_finite(t.z1, "layer 1");
  require_finite(t.z2, "layer 2");
  require_finite(t.z3, "layer 3");
  return t;
}

ForwardTrace MlpModel::forward(std::span<const double> input) const {
  Matrix x(static_cast<Eigen::Index>(input.size()), 1);
  for (std::size_t i = 0; i < input.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = input[i];
  return forward(x);
}

MlpGradients MlpModel::backward(const ForwardTrace& t,
                                const Matrix& output_gradient) const {
  if (output_gradient.rows() != t.output.rows() ||
      output_gradient.cols() != t.output.cols()) {
    throw DimensionError("backward: output gradient shape mismatch");
  }
  const auto& p = params_;
  MlpGradients g;
  const Matrix dz3 =
      output_gradient.cwiseProduct((1.0 - t.output.array().square()).matrix());
  g.w3.noalias() = dz3 * t.h2.transpose();
  g.b3 = dz3.rowwise().sum();
  const Matrix dz2 = (p.w3.transpose() * dz3)
                         .cwiseProduct((t.z2.array() > 0.0).cast<double>().matrix());
  g.w2.noalias() = dz2 * t.h1.transpose();
  g.b2 = dz2.rowwise().sum();
  const Matrix dz1 = (p.w2.transpose() * dz2)
                         .cwiseProduct((t.z1.array() > 0.0).cast<double>().matrix());
  g.w1.noalias() = dz1 * t.input.transpose();
  g.b1 = dz1.rowwise().sum();
  return g;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const auto& m = ckpt.model;
  const auto& s = m.shape();
  std::string out(kMagic);
  io::put<std::uint32_t>(out, kLayerCount);
  for (std::size_t d : {s.input, s.hidden1, s.hidden2, s.output}) {
    io::put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  }
  m.params().for_each([&](int, const auto& t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        io::put<float>(out, static_cast<float>(t(r, c)));
      }
    }
  });
  io::put<std::uint64_t>(out, m.init_seed());
  io::put<std::uint64_t>(out, ckpt.codebook_seed);
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  io::Reader in(bytes);
  if (in.take(kMagic.size()) != kMagic) {
    throw ValidationError("not a checkpoint (bad magic)");
  }
  if (in.get<std::uint32_t>() != kLayerCount) {
    throw ValidationError("checkpoint layer count must be 3");
  }
  MlpShape s;
  s.input = in.get<std::uint32_t>();
  s.hidden1 = in.get<std::uint32_t>();
  s.hidden2 = in.get<std::uint32_t>();
  s.output = in.get<std::uint32_t>();
  MlpParams p = MlpParams::zeros(s);
  p.for_each([&](int, auto& t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        t(r, c) = static_cast<double>(in.get<float>());
      }
    }
  });
  const auto init_seed = in.get<std::uint64_t>();
  Checkpoint ckpt;
  ckpt.codebook_seed = in.get<std::uint64_t>();
  if (!in.done()) throw ValidationError("trailing bytes after checkpoint");
  ckpt.model = MlpModel(std::move(p), init_seed);
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(io::read_file(path));
}

}  // namespace hdvqa
