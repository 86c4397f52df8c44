#include "varlens/simmodel.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "varlens/binary_io.hpp"

namespace varlens {

namespace {

std::vector<DenseSpec> head_arch(int in, int out, Activation act) { return {{in, out, act}}; }

}  // namespace

template <typename T>
EmbeddingModel<T>::EmbeddingModel(ValueSpace space, ModelConfig config, CharVocabulary chars)
    : space_(space), config_(config), chars_(std::move(chars)) {
  if (config_.width < 1 || config_.embed_dim < 1 || config_.word_dim < 1 ||
      config_.lstm_hidden < 1 || config_.lstm_layers < 1 || config_.char_cap < 1) {
    fail(ErrorCode::kInvalidArgument, "model dimensions must be positive");
  }
  if (space_ == ValueSpace::GeneralString) {
    lstm_ = BiLstm<T>(LstmSpec{chars_.size(), config_.lstm_hidden, config_.lstm_layers});
    lstm_size_ = lstm_.num_params();
    const int r = lstm_.spec().output_dim();
    h_net_ = Mlp<T>(head_arch(r, config_.embed_dim, Activation::Tanh));
    g_net_ = Mlp<T>(head_arch(r, 1, Activation::Square));
  } else {
    const int in = input_dim();
    auto h = embedding_mlp_arch(in, config_.width);
    h.back().out = config_.embed_dim;
    h_net_ = Mlp<T>(std::move(h));
    g_net_ = Mlp<T>(adjustment_mlp_arch(in, config_.width));
  }
  params_.assign(lstm_size_ + h_net_.num_params() + g_net_.num_params(), T(0));
}

template <typename T>
int EmbeddingModel<T>::input_dim() const {
  switch (space_) {
    case ValueSpace::Numeric: return kNumericBits;
    case ValueSpace::Language: return config_.word_dim;
    case ValueSpace::GeneralString: return 2 * config_.lstm_hidden;
  }
  return 0;
}

template <typename T>
void EmbeddingModel<T>::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::span<T> all(params_);
  if (lstm_size_ > 0) lstm_.init(all.subspan(0, lstm_size_), rng);
  h_net_.init(all.subspan(lstm_size_, h_net_.num_params()), rng);
  g_net_.init(all.subspan(lstm_size_ + h_net_.num_params(), g_net_.num_params()), rng);
}

template <typename T>
std::span<const T> EmbeddingModel<T>::lstm_params() const {
  return std::span<const T>(params_).subspan(0, lstm_size_);
}
template <typename T>
std::span<const T> EmbeddingModel<T>::h_params() const {
  return std::span<const T>(params_).subspan(lstm_size_, h_net_.num_params());
}
template <typename T>
std::span<const T> EmbeddingModel<T>::g_params() const {
  return std::span<const T>(params_).subspan(lstm_size_ + h_net_.num_params(),
                                             g_net_.num_params());
}

template <typename T>
EncodedSet<T> EmbeddingModel<T>::encode(const ColumnDataset& d, const WordVectorTable* words,
                                        bool dedupe) const {
  if (d.space != space_) {
    fail(ErrorCode::kInvalidArgument, "dataset " + d.id + " is " + std::string(to_string(d.space)) +
                                          ", model is " + std::string(to_string(space_)));
  }
  if (d.empty()) fail(ErrorCode::kInvalidArgument, "dataset " + d.id + " is empty");

  EncodedSet<T> out;
  out.space = space_;
  std::vector<double> counts;

  if (space_ == ValueSpace::Numeric) {
    std::vector<float> values;
    if (dedupe) {
      std::map<std::uint32_t, std::size_t> freq;
      for (float x : d.numbers) ++freq[std::bit_cast<std::uint32_t>(x)];
      for (const auto& [bits, c] : freq) {
        values.push_back(std::bit_cast<float>(bits));
        counts.push_back(static_cast<double>(c));
      }
    } else {
      values = d.numbers;
      counts.assign(values.size(), 1.0);
    }
    out.features.resize(kNumericBits, static_cast<Eigen::Index>(values.size()));
    for (std::size_t j = 0; j < values.size(); ++j) {
      const auto bits = encode_numeric_bits(values[j]);
      for (int i = 0; i < kNumericBits; ++i) {
        out.features(i, static_cast<Eigen::Index>(j)) = static_cast<T>(bits[i]);
      }
    }
  } else {
    std::vector<std::pair<std::string_view, std::size_t>> items;
    if (dedupe) {
      std::map<std::string_view, std::size_t> freq;
      for (const auto& s : d.strings) ++freq[s];
      items.assign(freq.begin(), freq.end());
    } else {
      for (const auto& s : d.strings) items.emplace_back(s, 1);
    }

    if (space_ == ValueSpace::Language) {
      if (words == nullptr) fail(ErrorCode::kInvalidArgument, "language space needs word vectors");
      if (words->dim() != config_.word_dim) {
        fail(ErrorCode::kConfigError, "word vectors have dim " + std::to_string(words->dim()) +
                                          ", model expects " + std::to_string(config_.word_dim));
      }
      std::vector<std::vector<float>> rows;
      for (const auto& [s, c] : items) {
        auto v = embed_text_field(s, *words);
        if (!v) continue;
        rows.push_back(std::move(*v));
        counts.push_back(static_cast<double>(c));
      }
      if (rows.empty()) {
        fail(ErrorCode::kNotComparable, "dataset " + d.id + " has no in-vocabulary instance");
      }
      out.features.resize(config_.word_dim, static_cast<Eigen::Index>(rows.size()));
      for (std::size_t j = 0; j < rows.size(); ++j) {
        for (int i = 0; i < config_.word_dim; ++i) {
          out.features(i, static_cast<Eigen::Index>(j)) = static_cast<T>(rows[j][i]);
        }
      }
    } else {
      for (const auto& [s, c] : items) {
        if (s.empty()) continue;
        out.sequences.push_back(encode_chars(s, chars_, config_.char_cap).indices);
        counts.push_back(static_cast<double>(c));
      }
      if (out.sequences.empty()) {
        fail(ErrorCode::kInvalidValue, "dataset " + d.id + " has only empty strings");
      }
    }
  }

  double total = 0.0;
  for (double c : counts) total += c;
  out.weights.resize(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t j = 0; j < counts.size(); ++j) {
    out.weights(static_cast<Eigen::Index>(j)) = static_cast<T>(counts[j] / total);
  }
  return out;
}

template <typename T>
ForwardPass<T> EmbeddingModel<T>::forward(const EncodedSet<T>& x, bool keep_cache) const {
  if (x.space != space_) fail(ErrorCode::kInvalidArgument, "encoded set from another value space");
  ForwardPass<T> pass;
  pass.input = &x;
  const Mat<T>* in = &x.features;
  if (space_ == ValueSpace::GeneralString) {
    pass.readout = lstm_.forward(lstm_params(), x.sequences, keep_cache ? &pass.lstm_cache : nullptr);
    in = &pass.readout;
  }
  const Mat<T> hs = h_net_.forward(h_params(), *in, keep_cache ? &pass.h_cache : nullptr);
  const Mat<T> gs = g_net_.forward(g_params(), *in, keep_cache ? &pass.g_cache : nullptr);
  pass.h = hs * x.weights;
  pass.g = gs.row(0).dot(x.weights);
  if (!keep_cache) pass.readout.resize(0, 0);
  return pass;
}

template <typename T>
void EmbeddingModel<T>::backward(const ForwardPass<T>& pass, const Vec<T>& dh, T dg,
                                 std::span<T> grad) const {
  if (grad.size() != params_.size()) {
    fail(ErrorCode::kInvalidArgument, "gradient buffer size mismatch");
  }
  if (pass.input == nullptr || pass.h_cache.inputs.empty()) {
    fail(ErrorCode::kInvalidArgument, "forward pass was run without a cache");
  }
  const Vec<T>& w = pass.input->weights;
  const Mat<T> dh_out = dh * w.transpose();
  const Mat<T> dg_out = dg * w.transpose();
  auto gh = grad.subspan(lstm_size_, h_net_.num_params());
  auto gg = grad.subspan(lstm_size_ + h_net_.num_params(), g_net_.num_params());
  if (space_ == ValueSpace::GeneralString) {
    Mat<T> dr_h, dr_g;
    h_net_.backward(h_params(), pass.h_cache, dh_out, gh, &dr_h);
    g_net_.backward(g_params(), pass.g_cache, dg_out, gg, &dr_g);
    dr_h += dr_g;
    lstm_.backward(lstm_params(), pass.lstm_cache, dr_h, grad.subspan(0, lstm_size_));
  } else {
    h_net_.backward(h_params(), pass.h_cache, dh_out, gh);
    g_net_.backward(g_params(), pass.g_cache, dg_out, gg);
  }
}

template <typename T>
std::pair<Mat<T>, Vec<T>> EmbeddingModel<T>::instance_outputs(const EncodedSet<T>& x) const {
  const Mat<T>* in = &x.features;
  Mat<T> readout;
  if (space_ == ValueSpace::GeneralString) {
    readout = lstm_.forward(lstm_params(), x.sequences);
    in = &readout;
  }
  Mat<T> hs = h_net_.forward(h_params(), *in);
  Vec<T> gs = g_net_.forward(g_params(), *in).row(0).transpose();
  return {std::move(hs), std::move(gs)};
}

template <typename T>
DatasetEmbedding EmbeddingModel<T>::embed(const ColumnDataset& d,
                                          const WordVectorTable* words) const {
  const EncodedSet<T> x = encode(d, words);
  const ForwardPass<T> pass = forward(x);
  DatasetEmbedding e;
  e.h.assign(pass.h.data(), pass.h.data() + pass.h.size());
  e.g = static_cast<double>(pass.g);
  return e;
}

template class EmbeddingModel<float>;
template class EmbeddingModel<double>;

MatchScore pairwise_distance(const DatasetEmbedding& a, const DatasetEmbedding& b) {
  if (a.h.size() != b.h.size()) fail(ErrorCode::kInvalidArgument, "embedding sizes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < a.h.size(); ++i) {
    const double t = a.h[i] - b.h[i];
    d += t * t;
  }
  return MatchScore::from_distance(d + a.g + b.g);
}

double pair_loss(const MatchScore& score, int y) {
  if (y == 1) return score.d;
  const double d = std::max(score.d, kLossClamp);
  return -std::log(-std::expm1(-d));
}

double pair_loss_grad(double distance, int y) {
  if (y == 1) return 1.0;
  const double d = std::max(distance, kLossClamp);
  return -1.0 / std::expm1(d);
}

template <typename T>
EncodedTriplet<T> encode_triplet(const EmbeddingModel<T>& model, const TripletExample& t,
                                 const WordVectorTable* words) {
  return {model.encode(t.anchor, words), model.encode(t.positive, words),
          model.encode(t.negative, words)};
}

template <typename T>
double triplet_loss_and_grads(const EmbeddingModel<T>& model, const EncodedTriplet<T>& t,
                              std::span<T> grad) {
  const auto a = model.forward(t.anchor, true);
  const auto p = model.forward(t.positive, true);
  const auto n = model.forward(t.negative, true);

  const Vec<T> dap = a.h - p.h;
  const Vec<T> dan = a.h - n.h;
  const double d_pos = static_cast<double>(dap.squaredNorm() + a.g + p.g);
  const double d_neg = static_cast<double>(dan.squaredNorm() + a.g + n.g);
  const double loss = pair_loss(MatchScore::from_distance(d_pos), 1) +
                      pair_loss(MatchScore::from_distance(d_neg), 0);

  const T lp = static_cast<T>(pair_loss_grad(d_pos, 1));
  const T ln = static_cast<T>(pair_loss_grad(d_neg, 0));
  model.backward(a, T(2) * (lp * dap + ln * dan), lp + ln, grad);
  model.backward(p, T(-2) * lp * dap, lp, grad);
  model.backward(n, T(-2) * ln * dan, ln, grad);
  return loss;
}

template EncodedTriplet<float> encode_triplet(const EmbeddingModel<float>&, const TripletExample&,
                                              const WordVectorTable*);
template EncodedTriplet<double> encode_triplet(const EmbeddingModel<double>&,
                                               const TripletExample&, const WordVectorTable*);
template double triplet_loss_and_grads(const EmbeddingModel<float>&, const EncodedTriplet<float>&,
                                       std::span<float>);
template double triplet_loss_and_grads(const EmbeddingModel<double>&,
                                       const EncodedTriplet<double>&, std::span<double>);

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

void write_layers(io::Writer& w, const std::vector<DenseSpec>& layers) {
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
    w.u8(static_cast<std::uint8_t>(l.act));
  }
}

std::vector<DenseSpec> read_layers(io::Reader& r) {
  const std::uint32_t n = r.u32();
  if (n > 64) fail(ErrorCode::kFormatError, "checkpoint: implausible layer count");
  std::vector<DenseSpec> layers(n);
  for (auto& l : layers) {
    l.in = static_cast<int>(r.u32());
    l.out = static_cast<int>(r.u32());
    const std::uint8_t act = r.u8();
    if (act > static_cast<std::uint8_t>(Activation::Identity)) {
      fail(ErrorCode::kFormatError, "checkpoint: unknown activation");
    }
    l.act = static_cast<Activation>(act);
  }
  return layers;
}

}  // namespace

void write_checkpoint(const EmbeddingModel<float>& model, std::ostream& out) {
  io::Writer w(out);
  w.bytes("VLNS", 4);
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(model.space()));
  const auto& c = model.config();
  w.u32(static_cast<std::uint32_t>(c.width));
  w.u32(static_cast<std::uint32_t>(c.embed_dim));
  w.u32(static_cast<std::uint32_t>(c.word_dim));
  w.u32(static_cast<std::uint32_t>(c.lstm_hidden));
  w.u32(static_cast<std::uint32_t>(c.lstm_layers));
  w.u32(c.char_cap);
  const auto& alphabet = model.chars().alphabet();
  w.u32(static_cast<std::uint32_t>(alphabet.size()));
  w.bytes(alphabet.data(), alphabet.size());
  write_layers(w, model.h_net().layers());
  write_layers(w, model.g_net().layers());
  w.u64(model.num_params());
  for (float v : model.params()) w.f32(v);
}

EmbeddingModel<float> read_checkpoint(std::istream& in) {
  io::Reader r(in, "checkpoint");
  r.expect_magic("VLNS");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kUnsupportedVersion,
         "checkpoint version " + std::to_string(version) + " is not supported");
  }
  const std::uint8_t tag = r.u8();
  if (tag > static_cast<std::uint8_t>(ValueSpace::GeneralString)) {
    fail(ErrorCode::kFormatError, "checkpoint: unknown value space tag");
  }
  ModelConfig c;
  c.width = static_cast<int>(r.u32());
  c.embed_dim = static_cast<int>(r.u32());
  c.word_dim = static_cast<int>(r.u32());
  c.lstm_hidden = static_cast<int>(r.u32());
  c.lstm_layers = static_cast<int>(r.u32());
  c.char_cap = r.u32();
  for (int v : {c.width, c.embed_dim, c.word_dim, c.lstm_hidden, c.lstm_layers}) {
    if (v < 1 || v > 100000) fail(ErrorCode::kFormatError, "checkpoint: implausible dimension");
  }
  const std::uint32_t alen = r.u32();
  if (alen > 255) fail(ErrorCode::kFormatError, "checkpoint: alphabet too large");
  std::vector<std::uint8_t> alphabet(alen);
  r.bytes(alphabet.data(), alen);

  EmbeddingModel<float> model(static_cast<ValueSpace>(tag), c, CharVocabulary::from_bytes(alphabet));
  if (read_layers(r) != model.h_net().layers() || read_layers(r) != model.g_net().layers()) {
    fail(ErrorCode::kFormatError, "checkpoint: architecture does not match its configuration");
  }
  const std::uint64_t n = r.u64();
  if (n != model.num_params()) {
    fail(ErrorCode::kFormatError, "checkpoint: parameter count " + std::to_string(n) +
                                      " does not match architecture (" +
                                      std::to_string(model.num_params()) + ")");
  }
  for (auto& v : model.params()) v = r.f32();
  if (!r.at_end()) fail(ErrorCode::kFormatError, "checkpoint: trailing bytes");
  return model;
}

void save_checkpoint(const EmbeddingModel<float>& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  write_checkpoint(model, out);
}

EmbeddingModel<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot read " + path.string());
  return read_checkpoint(in);
}

}  // namespace varlens
