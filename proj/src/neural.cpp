#include "varlens/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace varlens {

std::vector<DenseSpec> embedding_mlp_arch(int input_dim, int width) {
  return {{input_dim, width, Activation::Tanh},
          {width, width, Activation::Tanh},
          {width, width, Activation::Tanh}};
}

std::vector<DenseSpec> adjustment_mlp_arch(int input_dim, int width) {
  return {{input_dim, width, Activation::Relu},
          {width, width, Activation::Relu},
          {width, 1, Activation::Square}};
}

template <typename T>
void glorot_uniform(std::span<T> out, int fan_in, int fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  for (T& w : out) w = static_cast<T>(dist(rng));
}

namespace {

template <typename T>
using MapMat = Eigen::Map<Mat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const Mat<T>>;
template <typename T>
using MapVec = Eigen::Map<Vec<T>>;
template <typename T>
using CMapVec = Eigen::Map<const Vec<T>>;

template <typename T>
Mat<T> activate(const Mat<T>& z, Activation act) {
  switch (act) {
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Relu: return z.cwiseMax(T(0));
    case Activation::Square: return z.array().square().matrix();
    case Activation::Identity: return z;
  }
  return z;
}

// Upstream gradient times the activation derivative at `z`.
template <typename T>
Mat<T> activation_backward(const Mat<T>& z, const Mat<T>& upstream, Activation act) {
  switch (act) {
    case Activation::Tanh:
      return (upstream.array() * (T(1) - z.array().tanh().square())).matrix();
    case Activation::Relu:
      return (upstream.array() * (z.array() > T(0)).template cast<T>()).matrix();
    case Activation::Square: return (upstream.array() * (T(2) * z.array())).matrix();
    case Activation::Identity: return upstream;
  }
  return upstream;
}

template <typename T>
auto sigmoid(const Eigen::ArrayBase<T>& z) {
  return (typename T::Scalar(1) + (-z).exp()).inverse();
}

void check_params(std::size_t have, std::size_t want, const char* what) {
  if (have != want) {
    fail(ErrorCode::kInvalidArgument, std::string(what) + ": parameter buffer has " +
                                          std::to_string(have) + " entries, expected " +
                                          std::to_string(want));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Mlp

template <typename T>
Mlp<T>::Mlp(std::vector<DenseSpec> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) fail(ErrorCode::kInvalidArgument, "an MLP needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (l > 0 && layers_[l].in != layers_[l - 1].out) {
      fail(ErrorCode::kInvalidArgument, "MLP layer widths do not chain");
    }
    offsets_.push_back(num_params_);
    num_params_ += static_cast<std::size_t>(layers_[l].out) * (layers_[l].in + 1);
  }
}

template <typename T>
void Mlp<T>::init(std::span<T> params, std::mt19937_64& rng) const {
  check_params(params.size(), num_params_, "Mlp::init");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    const std::size_t nw = static_cast<std::size_t>(L.out) * L.in;
    glorot_uniform(params.subspan(offsets_[l], nw), L.in, L.out, rng);
    std::fill_n(params.begin() + static_cast<std::ptrdiff_t>(offsets_[l] + nw), L.out, T(0));
  }
}

template <typename T>
Mat<T> Mlp<T>::forward(std::span<const T> params, const Mat<T>& x, MlpCache<T>* cache) const {
  check_params(params.size(), num_params_, "Mlp::forward");
  if (x.rows() != input_dim()) {
    fail(ErrorCode::kInvalidArgument, "MLP input has " + std::to_string(x.rows()) +
                                          " rows, expected " + std::to_string(input_dim()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
    cache->num_params = num_params_;
  }
  Mat<T> a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    CMapMat<T> w(params.data() + offsets_[l], L.out, L.in);
    CMapVec<T> b(params.data() + offsets_[l] + static_cast<std::size_t>(L.out) * L.in, L.out);
    Mat<T> z(L.out, a.cols());
    z.noalias() = w * a;
    z.colwise() += b;
    Mat<T> next = activate(z, L.act);
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(std::move(z));
    }
    a = std::move(next);
  }
  if (cache) cache->output = a;
  return a;
}

template <typename T>
void Mlp<T>::backward(std::span<const T> params, const MlpCache<T>& cache,
                      const Mat<T>& grad_output, std::span<T> grad, Mat<T>* grad_input) const {
  check_params(params.size(), num_params_, "Mlp::backward");
  check_params(grad.size(), num_params_, "Mlp::backward (grad)");
  if (cache.num_params != num_params_ || cache.pre.size() != layers_.size()) {
    fail(ErrorCode::kInvalidArgument, "MLP cache does not belong to this network");
  }
  if (grad_output.rows() != output_dim() || grad_output.cols() != cache.output.cols()) {
    fail(ErrorCode::kInvalidArgument, "MLP grad_output shape mismatch");
  }
  Mat<T> d = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& L = layers_[l];
    Mat<T> dz = activation_backward(cache.pre[l], d, L.act);
    MapMat<T> gw(grad.data() + offsets_[l], L.out, L.in);
    MapVec<T> gb(grad.data() + offsets_[l] + static_cast<std::size_t>(L.out) * L.in, L.out);
    gw.noalias() += dz * cache.inputs[l].transpose();
    gb += dz.rowwise().sum();
    if (l > 0 || grad_input != nullptr) {
      CMapMat<T> w(params.data() + offsets_[l], L.out, L.in);
      d.resize(L.in, dz.cols());
      d.noalias() = w.transpose() * dz;
    }
  }
  if (grad_input) *grad_input = std::move(d);
}

// ---------------------------------------------------------------------------
// BiLstm

template <typename T>
BiLstm<T>::BiLstm(LstmSpec spec) : spec_(spec) {
  if (spec_.alphabet < 1 || spec_.hidden < 1 || spec_.layers < 1) {
    fail(ErrorCode::kInvalidArgument, "invalid LSTM specification");
  }
  const int h = spec_.hidden;
  for (int layer = 0; layer < spec_.layers; ++layer) {
    const int in = layer == 0 ? spec_.alphabet : 2 * h;
    for (int dir = 0; dir < 2; ++dir) {
      Slot s{};
      s.in = in;
      s.wx = num_params_;
      num_params_ += static_cast<std::size_t>(4 * h) * in;
      s.wh = num_params_;
      num_params_ += static_cast<std::size_t>(4 * h) * h;
      s.b = num_params_;
      num_params_ += static_cast<std::size_t>(4 * h);
      slots_.push_back(s);
    }
  }
}

template <typename T>
void BiLstm<T>::init(std::span<T> params, std::mt19937_64& rng) const {
  check_params(params.size(), num_params_, "BiLstm::init");
  const int h = spec_.hidden;
  for (const Slot& s : slots_) {
    glorot_uniform(params.subspan(s.wx, static_cast<std::size_t>(4 * h) * s.in), s.in, 4 * h, rng);
    glorot_uniform(params.subspan(s.wh, static_cast<std::size_t>(4 * h) * h), h, 4 * h, rng);
    auto b = params.subspan(s.b, static_cast<std::size_t>(4 * h));
    std::fill(b.begin(), b.end(), T(0));
    std::fill(b.begin() + h, b.begin() + 2 * h, T(1));  // forget gate
  }
}

template <typename T>
Mat<T> BiLstm<T>::forward(std::span<const T> params, const std::vector<std::vector<int>>& seqs,
                          LstmCache<T>* cache) const {
  check_params(params.size(), num_params_, "BiLstm::forward");
  const std::size_t batch = seqs.size();
  const int H = spec_.hidden;
  if (batch == 0) return Mat<T>(2 * H, 0);

  std::vector<std::size_t> order(batch);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return seqs[a].size() > seqs[b].size();
  });
  std::vector<std::size_t> len(batch);
  for (std::size_t k = 0; k < batch; ++k) {
    len[k] = seqs[order[k]].size();
    if (len[k] == 0) fail(ErrorCode::kInvalidValue, "LSTM input sequence is empty");
    for (int sym : seqs[order[k]]) {
      if (sym < 0 || sym >= spec_.alphabet) {
        fail(ErrorCode::kInvalidArgument, "LSTM symbol out of alphabet range");
      }
    }
  }
  const std::size_t max_len = len[0];
  std::vector<std::size_t> active(max_len);
  for (std::size_t s = 0; s < max_len; ++s) {
    active[s] = static_cast<std::size_t>(
        std::count_if(len.begin(), len.end(), [&](std::size_t l) { return l > s; }));
  }

  if (cache) {
    cache->order = order;
    cache->length = len;
    cache->symbols.resize(batch);
    for (std::size_t k = 0; k < batch; ++k) cache->symbols[k] = seqs[order[k]];
    cache->max_len = max_len;
    cache->steps.assign(spec_.layers, {});
    cache->num_params = num_params_;
  }

  // Layer outputs indexed by sequence position: 2H x active[p].
  std::vector<Mat<T>> below;
  Mat<T> final_state(2 * H, batch);

  for (int layer = 0; layer < spec_.layers; ++layer) {
    std::vector<Mat<T>> outputs(max_len);
    for (std::size_t p = 0; p < max_len; ++p) outputs[p].setZero(2 * H, active[p]);

    for (int dir = 0; dir < 2; ++dir) {
      const Slot& sl = slot(layer, dir);
      CMapMat<T> wx(params.data() + sl.wx, 4 * H, sl.in);
      CMapMat<T> wh(params.data() + sl.wh, 4 * H, H);
      CMapVec<T> bias(params.data() + sl.b, 4 * H);
      Mat<T> h_state = Mat<T>::Zero(H, batch);
      Mat<T> c_state = Mat<T>::Zero(H, batch);
      std::vector<LstmStepCache<T>>* step_cache = nullptr;
      if (cache) {
        step_cache = &cache->steps[layer][dir];
        step_cache->resize(max_len);
      }

      for (std::size_t s = 0; s < max_len; ++s) {
        const std::size_t n = active[s];
        auto pos = [&](std::size_t k) { return dir == 0 ? s : len[k] - 1 - s; };
        Mat<T> z(4 * H, n);
        Mat<T> x;
        z.noalias() = wh * h_state.leftCols(n);
        z.colwise() += bias;
        if (layer == 0) {
          for (std::size_t k = 0; k < n; ++k) z.col(k) += wx.col(seqs[order[k]][pos(k)]);
        } else {
          if (dir == 0) {
            x = below[s];
          } else {
            x.resize(2 * H, n);
            for (std::size_t k = 0; k < n; ++k) x.col(k) = below[pos(k)].col(k);
          }
          z.noalias() += wx * x;
        }
        Mat<T> gates(4 * H, n);
        gates.topRows(2 * H) = sigmoid(z.topRows(2 * H).array()).matrix();
        gates.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh().matrix();
        gates.bottomRows(H) = sigmoid(z.bottomRows(H).array()).matrix();

        Mat<T> c_prev = c_state.leftCols(n);
        Mat<T> c = (gates.middleRows(H, H).array() * c_prev.array() +
                    gates.topRows(H).array() * gates.middleRows(2 * H, H).array())
                       .matrix();
        Mat<T> tanh_c = c.array().tanh().matrix();
        Mat<T> h = (gates.bottomRows(H).array() * tanh_c.array()).matrix();

        if (step_cache) {
          auto& sc = (*step_cache)[s];
          sc.active = n;
          sc.x = std::move(x);
          sc.h_prev = h_state.leftCols(n);
          sc.c_prev = std::move(c_prev);
          sc.gates = std::move(gates);
          sc.c = c;
          sc.tanh_c = std::move(tanh_c);
        }
        h_state.leftCols(n) = h;
        c_state.leftCols(n) = c;
        for (std::size_t k = 0; k < n; ++k) {
          outputs[pos(k)].block(dir * H, k, H, 1) = h.col(k);
        }
      }
      if (layer == spec_.layers - 1) final_state.middleRows(dir * H, H) = h_state;
    }
    below = std::move(outputs);
  }

  Mat<T> out(2 * H, batch);
  for (std::size_t k = 0; k < batch; ++k) out.col(order[k]) = final_state.col(k);
  return out;
}

template <typename T>
void BiLstm<T>::backward(std::span<const T> params, const LstmCache<T>& cache,
                         const Mat<T>& grad_output, std::span<T> grad) const {
  check_params(params.size(), num_params_, "BiLstm::backward");
  check_params(grad.size(), num_params_, "BiLstm::backward (grad)");
  const std::size_t batch = cache.order.size();
  const int H = spec_.hidden;
  if (cache.num_params != num_params_ || static_cast<int>(cache.steps.size()) != spec_.layers) {
    fail(ErrorCode::kInvalidArgument, "LSTM cache does not belong to this network");
  }
  if (grad_output.rows() != 2 * H || static_cast<std::size_t>(grad_output.cols()) != batch) {
    fail(ErrorCode::kInvalidArgument, "LSTM grad_output shape mismatch");
  }
  if (batch == 0) return;
  const auto& len = cache.length;
  const std::size_t max_len = cache.max_len;

  Mat<T> d_final(2 * H, batch);
  for (std::size_t k = 0; k < batch; ++k) d_final.col(k) = grad_output.col(cache.order[k]);

  // Gradient w.r.t. the current layer's outputs, indexed by position.
  std::vector<Mat<T>> d_out;

  for (int layer = spec_.layers - 1; layer >= 0; --layer) {
    const bool top = layer == spec_.layers - 1;
    std::vector<Mat<T>> d_below;
    if (layer > 0) {
      d_below.resize(max_len);
      for (std::size_t p = 0; p < max_len; ++p) {
        d_below[p].setZero(2 * H, cache.steps[layer][0][p].active);
      }
    }
    for (int dir = 0; dir < 2; ++dir) {
      const Slot& sl = slot(layer, dir);
      CMapMat<T> wx(params.data() + sl.wx, 4 * H, sl.in);
      CMapMat<T> wh(params.data() + sl.wh, 4 * H, H);
      MapMat<T> gwx(grad.data() + sl.wx, 4 * H, sl.in);
      MapMat<T> gwh(grad.data() + sl.wh, 4 * H, H);
      MapVec<T> gb(grad.data() + sl.b, 4 * H);
      const auto& steps = cache.steps[layer][dir];

      Mat<T> carry_h = Mat<T>::Zero(H, 0);
      Mat<T> carry_c = Mat<T>::Zero(H, 0);
      for (std::size_t s = max_len; s-- > 0;) {
        const auto& sc = steps[s];
        const std::size_t n = sc.active;
        const std::size_t n_next = s + 1 < max_len ? steps[s + 1].active : 0;
        auto pos = [&](std::size_t k) { return dir == 0 ? s : len[k] - 1 - s; };

        Mat<T> dh = Mat<T>::Zero(H, n);
        Mat<T> dc = Mat<T>::Zero(H, n);
        dh.leftCols(n_next) = carry_h;
        dc.leftCols(n_next) = carry_c;
        if (top) {
          for (std::size_t k = n_next; k < n; ++k) dh.col(k) += d_final.block(dir * H, k, H, 1);
        } else {
          for (std::size_t k = 0; k < n; ++k) dh.col(k) += d_out[pos(k)].block(dir * H, k, H, 1);
        }

        const auto i_g = sc.gates.topRows(H).array();
        const auto f_g = sc.gates.middleRows(H, H).array();
        const auto g_g = sc.gates.middleRows(2 * H, H).array();
        const auto o_g = sc.gates.bottomRows(H).array();
        const auto tc = sc.tanh_c.array();

        dc.array() += dh.array() * o_g * (T(1) - tc.square());
        Mat<T> dz(4 * H, n);
        dz.topRows(H) = (dc.array() * g_g * i_g * (T(1) - i_g)).matrix();
        dz.middleRows(H, H) = (dc.array() * sc.c_prev.array() * f_g * (T(1) - f_g)).matrix();
        dz.middleRows(2 * H, H) = (dc.array() * i_g * (T(1) - g_g.square())).matrix();
        dz.bottomRows(H) = (dh.array() * tc * o_g * (T(1) - o_g)).matrix();

        gwh.noalias() += dz * sc.h_prev.transpose();
        gb += dz.rowwise().sum();
        if (layer == 0) {
          for (std::size_t k = 0; k < n; ++k) gwx.col(cache.symbols[k][pos(k)]) += dz.col(k);
        } else {
          gwx.noalias() += dz * sc.x.transpose();
          Mat<T> dx(2 * H, n);
          dx.noalias() = wx.transpose() * dz;
          if (dir == 0) {
            d_below[s] += dx;
          } else {
            for (std::size_t k = 0; k < n; ++k) d_below[pos(k)].col(k) += dx.col(k);
          }
        }
        carry_h.resize(H, n);
        carry_h.noalias() = wh.transpose() * dz;
        carry_c = (dc.array() * f_g).matrix();
      }
    }
    d_out = std::move(d_below);
  }
}

// ---------------------------------------------------------------------------
// Adam

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    fail(ErrorCode::kInvalidArgument, "adam_step: parameter, gradient and moment shapes differ");
  }
  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    const double m_hat = static_cast<double>(state.m[i]) / bc1;
    const double v_hat = static_cast<double>(state.v[i]) / bc2;
    params[i] -= static_cast<T>(c.lr * m_hat / (std::sqrt(v_hat) + c.eps));
  }
}

template void glorot_uniform<float>(std::span<float>, int, int, std::mt19937_64&);
template void glorot_uniform<double>(std::span<double>, int, int, std::mt19937_64&);
template class Mlp<float>;
template class Mlp<double>;
template class BiLstm<float>;
template class BiLstm<double>;
template void adam_step<float>(std::span<float>, std::span<const float>, AdamState<float>&);
template void adam_step<double>(std::span<double>, std::span<const double>, AdamState<double>&);

}  // namespace varlens
