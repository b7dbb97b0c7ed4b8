#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace aoimec::nn {

/// Batch-major: one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

enum class Activation { Relu, Sigmoid, Identity };
enum class Mode { Train, Infer };

/// A contiguous slice of a dense layer's outputs that is normalised with a
/// softmax instead of the layer's element-wise activation.
struct SoftmaxGroup {
  int begin = 0;
  int count = 0;

  bool operator==(const SoftmaxGroup&) const = default;
};

struct DenseLayer {
  Matrix weights;  // out x in
  RowVector bias;
  Activation activation = Activation::Identity;
  std::optional<SoftmaxGroup> softmax;

  int inputs() const { return static_cast<int>(weights.cols()); }
  int outputs() const { return static_cast<int>(weights.rows()); }
};

struct BatchNormLayer {
  RowVector gamma, beta;
  RowVector running_mean, running_var;
  double momentum = 0.9;  // weight of the old running statistic
  double eps = 1e-5;

  int features() const { return static_cast<int>(gamma.size()); }
};

using Layer = std::variant<DenseLayer, BatchNormLayer>;

/// Architecture descriptor; also the checkpoint header.
struct ArchSpec {
  int inputs = 0;
  std::vector<int> hidden;  // each hidden block is Dense(ReLU) followed by BatchNorm
  int outputs = 0;
  Activation output_activation = Activation::Identity;
  std::optional<SoftmaxGroup> output_softmax;
  bool batch_norm = true;

  bool operator==(const ArchSpec&) const = default;
};

/// Actor: 4N (or 5N) -> 128 -> BN -> 128 -> BN -> 3N, sigmoid head whose last N
/// outputs form a softmax group (the bandwidth shares).
ArchSpec actor_arch(int features, int n_wds, int hidden = 128);
/// Value: features -> 128 -> BN -> 128 -> BN -> 1, identity head.
ArchSpec value_arch(int features, int hidden = 128);

enum class Pass { Forward, Backward };
/// FLOPs of the dense layers only (2 n_in n_out per layer forward; backward is
/// twice the forward count). Batch-norm and activations are not counted.
std::uint64_t flop_count(const ArchSpec& arch, Pass pass);

/// Per-layer activations kept by a forward pass for backward().
struct ForwardCache {
  struct Entry {
    Matrix input;
    Matrix output;
    Matrix xhat;        // batch norm only
    RowVector inv_std;  // batch norm only
    Mode mode = Mode::Train;
  };
  std::vector<Entry> layers;
  std::uint64_t version = 0;
  const void* owner = nullptr;
};

/// Same layout as the parameters of an Mlp; used for gradients and Adam moments.
struct ParamSet {
  struct Block {
    Matrix weights;  // dense weights, empty for batch norm
    RowVector a;     // dense bias, or batch-norm gamma
    RowVector b;     // batch-norm beta, empty for dense
  };
  std::vector<Block> blocks;

  double squared_norm() const;
};

struct Gradients {
  ParamSet params;
  Matrix input;  // dL/d(input batch)
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(const ArchSpec& arch, std::mt19937_64& rng);

  const ArchSpec& arch() const { return arch_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers();
  int inputs() const { return arch_.inputs; }
  int outputs() const { return arch_.outputs; }
  std::size_t parameter_count() const;

  /// Train mode normalises with batch statistics and folds them into the
  /// running statistics; Infer mode uses the running statistics.
  Matrix forward(const Matrix& batch, Mode mode, ForwardCache* cache = nullptr);
  /// Forward without touching running statistics.
  Matrix evaluate(const Matrix& batch, Mode mode, ForwardCache* cache = nullptr) const;

  /// Backpropagates dL/d(output). Throws if `cache` came from another network
  /// or the parameters changed since it was filled.
  Gradients backward(const ForwardCache& cache, const Matrix& upstream) const;

  /// Bias-corrected Adam step on every parameter.
  void adam_step(const ParamSet& grads, double lr, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8);
  long adam_steps() const { return adam_t_; }

  /// target <- omega * primary + (1 - omega) * target, parameters and running
  /// statistics alike.
  void soft_update(const Mlp& primary, double omega);

  /// Parameters then batch-norm running statistics, flattened.
  std::vector<double> flat_state() const;
  void load_flat_state(const std::vector<double>& flat);

  /// Header line, then parameters, running statistics, and Adam moments as
  /// raw 64-bit reals.
  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);

 private:
  Matrix run(const Matrix& batch, Mode mode, bool update_stats, ForwardCache* cache);
  void touch() { ++version_; }

  ArchSpec arch_;
  std::vector<Layer> layers_;
  ParamSet adam_m_, adam_v_;
  long adam_t_ = 0;
  std::uint64_t version_ = 0;
};

std::string describe(const ArchSpec& arch);
ArchSpec parse_arch(const std::string& text);

}  // namespace aoimec::nn
