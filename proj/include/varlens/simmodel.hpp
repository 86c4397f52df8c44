#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "varlens/core.hpp"
#include "varlens/encode.hpp"
#include "varlens/neural.hpp"

namespace varlens {

/// Network sizes. Defaults are the production architecture; tests shrink them.
struct ModelConfig {
  int width = 300;      // hidden layer width
  int embed_dim = kEmbeddingDim;
  int word_dim = kEmbeddingDim;  // Language input width
  int lstm_hidden = 128;
  int lstm_layers = 2;
  std::uint32_t char_cap = static_cast<std::uint32_t>(kDefaultCharCap);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// A dataset turned into network input: one column (or character sequence)
/// per distinct value, with the value's share of the dataset as its weight.
template <typename T>
struct EncodedSet {
  ValueSpace space = ValueSpace::Numeric;
  Mat<T> features;                          // Numeric / Language
  std::vector<std::vector<int>> sequences;  // GeneralString
  Vec<T> weights;                           // sums to 1

  std::size_t distinct() const { return static_cast<std::size_t>(weights.size()); }
};

template <typename T>
struct ForwardPass {
  Vec<T> h;
  T g = T(0);
  const EncodedSet<T>* input = nullptr;
  Mat<T> readout;  // character encoder output (GeneralString only)
  MlpCache<T> h_cache;
  MlpCache<T> g_cache;
  LstmCache<T> lstm_cache;
};

/// Parameters theta (embedding network h) and psi (adjustment network g) for
/// one value space, stored in a single flat buffer.
///   Numeric / Language: [h MLP | g MLP]
///   GeneralString:      [BiLSTM | h head | g head], the LSTM shared by both heads
template <typename T>
class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(ValueSpace space, ModelConfig config, CharVocabulary chars = {});

  void init(std::uint64_t seed);

  ValueSpace space() const { return space_; }
  const ModelConfig& config() const { return config_; }
  const CharVocabulary& chars() const { return chars_; }
  int input_dim() const;
  int embed_dim() const { return config_.embed_dim; }

  ParamBuffer<T>& params() { return params_; }
  const ParamBuffer<T>& params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  const Mlp<T>& h_net() const { return h_net_; }
  const Mlp<T>& g_net() const { return g_net_; }
  const BiLstm<T>& encoder() const { return lstm_; }

  /// Per-instance inputs. With `dedupe`, identical values are collapsed into
  /// one column weighted by frequency; otherwise each instance gets 1/|d|.
  /// Language instances with no in-vocabulary token are dropped.
  EncodedSet<T> encode(const ColumnDataset& d, const WordVectorTable* words,
                       bool dedupe = true) const;

  ForwardPass<T> forward(const EncodedSet<T>& x, bool keep_cache = false) const;

  /// Accumulates into `grad` the parameter gradient of dh.h + dg*g.
  void backward(const ForwardPass<T>& pass, const Vec<T>& dh, T dg, std::span<T> grad) const;

  /// Per-instance network outputs (columns of h, entries of g) for each
  /// encoded column, without averaging.
  std::pair<Mat<T>, Vec<T>> instance_outputs(const EncodedSet<T>& x) const;

  DatasetEmbedding embed(const ColumnDataset& d, const WordVectorTable* words) const;

  template <typename U>
  EmbeddingModel<U> cast() const {
    EmbeddingModel<U> out(space_, config_, chars_);
    out.params().assign(params_.begin(), params_.end());
    return out;
  }

 private:
  std::span<const T> h_params() const;
  std::span<const T> g_params() const;
  std::span<const T> lstm_params() const;

  ValueSpace space_ = ValueSpace::Numeric;
  ModelConfig config_;
  CharVocabulary chars_;
  Mlp<T> h_net_;
  Mlp<T> g_net_;
  BiLstm<T> lstm_;
  std::size_t lstm_size_ = 0;
  ParamBuffer<T> params_;
};

MatchScore pairwise_distance(const DatasetEmbedding& a, const DatasetEmbedding& b);

inline constexpr double kLossClamp = 1e-7;

/// y = 1: D. y = 0: log(1 / (1 - exp(-max(D, 1e-7)))).
double pair_loss(const MatchScore& score, int y);
/// dLoss/dD. The clamp is passed straight through for y = 0.
double pair_loss_grad(double distance, int y);

struct PairExample {
  ColumnDataset left;
  ColumnDataset right;
  int y = 0;
};

struct TripletExample {
  ColumnDataset anchor;
  ColumnDataset positive;
  ColumnDataset negative;
};

template <typename T>
struct EncodedTriplet {
  EncodedSet<T> anchor;
  EncodedSet<T> positive;
  EncodedSet<T> negative;
};

template <typename T>
EncodedTriplet<T> encode_triplet(const EmbeddingModel<T>& model, const TripletExample& t,
                                 const WordVectorTable* words);

/// Returns pair_loss(a, p; 1) + pair_loss(a, n; 0) and accumulates its
/// parameter gradient into `grad`.
template <typename T>
double triplet_loss_and_grads(const EmbeddingModel<T>& model, const EncodedTriplet<T>& t,
                              std::span<T> grad);

/// Checkpoint: "VLNS", version, value-space tag, architecture, then the
/// parameters as little-endian float32.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const EmbeddingModel<float>& model, const std::filesystem::path& path);
EmbeddingModel<float> load_checkpoint(const std::filesystem::path& path);
void write_checkpoint(const EmbeddingModel<float>& model, std::ostream& out);
EmbeddingModel<float> read_checkpoint(std::istream& in);

}  // namespace varlens
