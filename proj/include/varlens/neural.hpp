#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "varlens/error.hpp"

namespace varlens {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Flat parameter/gradient storage. Eigen picks vectorization peeling from
/// the data address, so a fixed base alignment keeps float reductions (and
/// therefore trained weights) bit-identical from run to run.
template <typename T>
using ParamBuffer = std::vector<T, Eigen::aligned_allocator<T>>;

enum class Activation : std::uint8_t { Tanh = 0, Relu = 1, Square = 2, Identity = 3 };

struct DenseSpec {
  int in = 0;
  int out = 0;
  Activation act = Activation::Tanh;

  friend bool operator==(const DenseSpec&, const DenseSpec&) = default;
};

/// h network: input -> 300 -> 300 -> 300, tanh everywhere (outputs in [-1, 1]).
std::vector<DenseSpec> embedding_mlp_arch(int input_dim, int width = 300);
/// g network: input -> 300 -> 300 (ReLU) -> 1 with a(z) = z^2 (outputs >= 0).
std::vector<DenseSpec> adjustment_mlp_arch(int input_dim, int width = 300);

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename T>
void glorot_uniform(std::span<T> out, int fan_in, int fan_out, std::mt19937_64& rng);

template <typename T>
struct MlpCache {
  std::vector<Mat<T>> inputs;  // input to each layer
  std::vector<Mat<T>> pre;     // pre-activation of each layer
  Mat<T> output;
  std::size_t num_params = 0;
};

/// Fully connected network whose parameters live in an external flat buffer:
/// for each layer, W (out x in, column-major) followed by b (out).
/// Inputs and outputs are batched column-wise (one instance per column).
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseSpec> layers);

  const std::vector<DenseSpec>& layers() const { return layers_; }
  int input_dim() const { return layers_.front().in; }
  int output_dim() const { return layers_.back().out; }
  std::size_t num_params() const { return num_params_; }

  /// Glorot weights, zero biases.
  void init(std::span<T> params, std::mt19937_64& rng) const;

  /// Forward pass over the columns of `x`. When `cache` is given it receives
  /// everything needed by backward().
  Mat<T> forward(std::span<const T> params, const Mat<T>& x, MlpCache<T>* cache = nullptr) const;

  /// Accumulates d(sum(output .* grad_output))/d(params) into `grad` and,
  /// when `grad_input` is non-null, stores the gradient w.r.t. the input.
  void backward(std::span<const T> params, const MlpCache<T>& cache, const Mat<T>& grad_output,
                std::span<T> grad, Mat<T>* grad_input = nullptr) const;

 private:
  std::vector<DenseSpec> layers_;
  std::vector<std::size_t> offsets_;
  std::size_t num_params_ = 0;
};

struct LstmSpec {
  int alphabet = 1;  // one-hot input width (includes the unknown symbol)
  int hidden = 128;
  int layers = 2;

  int output_dim() const { return 2 * hidden; }
  friend bool operator==(const LstmSpec&, const LstmSpec&) = default;
};

template <typename T>
struct LstmStepCache {
  std::size_t active = 0;
  Mat<T> x;       // layer input (unused for the one-hot first layer)
  Mat<T> gates;   // 4H x active: activated i, f, g, o
  Mat<T> c;       // cell state after the step
  Mat<T> tanh_c;
  Mat<T> h_prev;
  Mat<T> c_prev;
};

template <typename T>
struct LstmCache {
  std::vector<std::size_t> order;   // sorted position -> original batch index
  std::vector<std::size_t> length;  // by sorted position
  std::vector<std::vector<int>> symbols;  // by sorted position
  std::size_t max_len = 0;
  // steps[layer][direction][step]
  std::vector<std::array<std::vector<LstmStepCache<T>>, 2>> steps;
  std::size_t num_params = 0;
};

/// Stacked bidirectional character LSTM (gates i, f, g, o). Returns, per
/// sequence, the concatenation of the top layer's final forward state and
/// final backward state (2 * hidden). The backward direction reads the
/// reversed sequence. Sequences in one batch may have different lengths.
template <typename T>
class BiLstm {
 public:
  BiLstm() = default;
  explicit BiLstm(LstmSpec spec);

  const LstmSpec& spec() const { return spec_; }
  std::size_t num_params() const { return num_params_; }

  /// Glorot weights, zero biases except forget gates (1.0).
  void init(std::span<T> params, std::mt19937_64& rng) const;

  Mat<T> forward(std::span<const T> params, const std::vector<std::vector<int>>& seqs,
                 LstmCache<T>* cache = nullptr) const;

  void backward(std::span<const T> params, const LstmCache<T>& cache, const Mat<T>& grad_output,
                std::span<T> grad) const;

 private:
  struct Slot {
    std::size_t wx, wh, b;
    int in;
  };
  const Slot& slot(int layer, int dir) const { return slots_[layer * 2 + dir]; }

  LstmSpec spec_;
  std::vector<Slot> slots_;
  std::size_t num_params_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::uint64_t step = 0;
  AdamConfig config;

  AdamState() = default;
  AdamState(std::size_t n, AdamConfig cfg) : m(n, T(0)), v(n, T(0)), config(cfg) {}
};

/// Bias-corrected Adam update, in place.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state);

}  // namespace varlens
