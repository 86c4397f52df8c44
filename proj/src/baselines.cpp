#include "varlens/baselines.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

namespace varlens {

std::string_view to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::MeanSD: return "meansd";
    case BaselineMethod::KS: return "ks";
    case BaselineMethod::MMD: return "mmd";
    case BaselineMethod::SCF: return "scf";
    case BaselineMethod::Jaccard: return "jaccard";
    case BaselineMethod::MWordVec: return "mwordvec";
    case BaselineMethod::PWordVec: return "pwordvec";
  }
  return "?";
}

BaselineMethod parse_baseline_method(std::string_view text) {
  const std::string t = to_lower(text);
  for (auto m : kAllBaselines) {
    if (t == to_string(m)) return m;
  }
  fail(ErrorCode::kInvalidArgument, "unknown baseline method '" + std::string(text) + "'");
}

bool applicable(BaselineMethod m, ValueSpace space) {
  switch (m) {
    case BaselineMethod::MeanSD:
    case BaselineMethod::KS:
    case BaselineMethod::MMD:
    case BaselineMethod::SCF: return space == ValueSpace::Numeric;
    case BaselineMethod::Jaccard: return space != ValueSpace::Numeric;
    case BaselineMethod::MWordVec:
    case BaselineMethod::PWordVec: return space == ValueSpace::Language;
  }
  return false;
}

namespace {

void require_nonempty(std::span<const float> x, std::span<const float> y) {
  if (x.empty() || y.empty()) fail(ErrorCode::kInvalidArgument, "baseline on an empty sample");
}

std::pair<double, double> mean_sd(std::span<const float> x) {
  double mean = 0.0;
  for (float v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (float v : x) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(x.size()))};
}

// A permutation that depends only on (seed, size), so swapping the two
// arguments of a paired estimator pairs the same positions.
std::vector<double> shuffled_prefix(std::span<const float> x, std::size_t m, std::uint64_t seed) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = x[idx[i]];
  return out;
}

}  // namespace

double meansd(std::span<const float> x, std::span<const float> y) {
  require_nonempty(x, y);
  const auto [m1, s1] = mean_sd(x);
  const auto [m2, s2] = mean_sd(y);
  return std::abs(m1 - m2) + std::abs(s1 - s2);
}

double kolmogorov_q(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  double q;
  if (lambda < 1.18) {
    // Dual theta form; the alternating series converges slowly here.
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k < 1000; ++k) {
      const double term = std::exp(-static_cast<double>((2 * k - 1) * (2 * k - 1)) * c);
      s += term;
      if (term < 1e-12) break;
    }
    q = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s;
  } else {
    double s = 0.0;
    for (int k = 1; k < 1000; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      s += (k % 2 == 1) ? term : -term;
      if (term < 1e-12) break;
    }
    q = 2.0 * s;
  }
  return std::clamp(q, 0.0, 1.0);
}

KsResult ks_test(std::span<const float> x, std::span<const float> y) {
  require_nonempty(x, y);
  std::vector<float> a(x.begin(), x.end()), b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // sup |i/n1 - j/n2| kept as the exact integer |i n2 - j n1| so that equal
  // lattice values of K compare equal.
  const auto n1 = static_cast<std::int64_t>(a.size()), n2 = static_cast<std::int64_t>(b.size());
  std::int64_t i = 0, j = 0, best = 0;
  while (i < n1 && j < n2) {
    const float v = std::min(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]);
    while (i < n1 && a[static_cast<std::size_t>(i)] == v) ++i;
    while (j < n2 && b[static_cast<std::size_t>(j)] == v) ++j;
    best = std::max(best, std::abs(i * n2 - j * n1));
  }
  const double k = static_cast<double>(best) / (static_cast<double>(n1) * static_cast<double>(n2));
  const double ne = static_cast<double>(n1) * static_cast<double>(n2) / static_cast<double>(n1 + n2);
  const double sq = std::sqrt(ne);
  return {k, kolmogorov_q((sq + 0.12 + 0.11 / sq) * k)};
}

double MmdResult::standard_error() const {
  return pairs > 0 ? std::sqrt(variance / static_cast<double>(pairs)) : 0.0;
}

double median_bandwidth(std::span<const float> x, std::span<const float> y, std::uint64_t seed,
                        std::size_t cap) {
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::sort(pooled.begin(), pooled.end());  // order-free pooling keeps the rule symmetric
  if (pooled.size() > cap) {
    std::vector<double> sample;
    std::mt19937_64 rng(seed);
    std::sample(pooled.begin(), pooled.end(), std::back_inserter(sample), cap, rng);
    pooled = std::move(sample);
  }
  std::vector<double> diffs;
  diffs.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = i + 1; j < pooled.size(); ++j) diffs.push_back(std::abs(pooled[i] - pooled[j]));
  if (diffs.empty()) return 1.0;
  auto mid = diffs.begin() + static_cast<std::ptrdiff_t>(diffs.size() / 2);
  std::nth_element(diffs.begin(), mid, diffs.end());
  double med = *mid;
  if (diffs.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(diffs.begin(), mid));
  }
  return med > 0.0 ? med : 1.0;
}

MmdResult mmd_linear(std::span<const float> x, std::span<const float> y, std::uint64_t seed) {
  const std::size_t m = std::min(x.size(), y.size());
  if (m < 2) fail(ErrorCode::kInvalidArgument, "linear MMD needs at least 2 values per sample");
  MmdResult r;
  r.bandwidth = median_bandwidth(x, y, seed);
  const auto a = shuffled_prefix(x, m, seed + 1);
  const auto b = shuffled_prefix(y, m, seed + 1);
  const double inv = 1.0 / (2.0 * r.bandwidth * r.bandwidth);
  auto k = [inv](double u, double v) { return std::exp(-(u - v) * (u - v) * inv); };
  r.pairs = m / 2;
  std::vector<double> h(r.pairs);
  for (std::size_t i = 0; i < r.pairs; ++i) {
    const double x1 = a[2 * i], x2 = a[2 * i + 1], y1 = b[2 * i], y2 = b[2 * i + 1];
    h[i] = k(x1, x2) + k(y1, y2) - k(x1, y2) - k(x2, y1);
  }
  r.statistic = std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(r.pairs);
  if (r.pairs > 1) {
    double ss = 0.0;
    for (double v : h) ss += (v - r.statistic) * (v - r.statistic);
    r.variance = ss / static_cast<double>(r.pairs - 1);
  }
  return r;
}

ScfResult scf_test(std::span<const float> x, std::span<const float> y, int j, std::uint64_t seed) {
  if (j < 1) fail(ErrorCode::kInvalidArgument, "SCF needs at least one frequency");
  const std::size_t m = std::min(x.size(), y.size());
  if (m < static_cast<std::size_t>(2 * j + 2)) {
    fail(ErrorCode::kInvalidArgument, "SCF needs at least 2J + 2 values per sample");
  }
  auto a = shuffled_prefix(x, m, seed + 1);
  auto b = shuffled_prefix(y, m, seed + 1);

  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) mean += a[i] + b[i];
  mean /= static_cast<double>(2 * m);
  double ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) ss += (a[i] - mean) * (a[i] - mean) + (b[i] - mean) * (b[i] - mean);
  const double sd = std::sqrt(ss / static_cast<double>(2 * m));
  if (!(sd > 0.0)) return {0.0, 1.0, 0.0};
  for (std::size_t i = 0; i < m; ++i) {
    a[i] = (a[i] - mean) / sd;
    b[i] = (b[i] - mean) / sd;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> freq(static_cast<std::size_t>(j));
  for (auto& t : freq) t = normal(rng);

  const int dim = 2 * j;
  Eigen::MatrixXd z(dim, static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const double fx = std::exp(-a[i] * a[i] / 2), fy = std::exp(-b[i] * b[i] / 2);
    for (int q = 0; q < j; ++q) {
      const double t = freq[static_cast<std::size_t>(q)];
      const auto col = static_cast<Eigen::Index>(i);
      z(q, col) = fx * std::sin(t * a[i]) - fy * std::sin(t * b[i]);
      z(j + q, col) = fx * std::cos(t * a[i]) - fy * std::cos(t * b[i]);
    }
  }
  const Eigen::VectorXd zbar = z.rowwise().mean();
  const Eigen::MatrixXd centered = z.colwise() - zbar;
  const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(m - 1);
  // S = m zbar' (cov + eps I)^-1 zbar, evaluated in the eigenbasis of cov.
  constexpr double kRidge = 1e-8;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) return {0.0, 1.0, 0.0};
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * zbar;
  double s = 0.0, w1 = 0.0, w2 = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double lam = std::max(eig.eigenvalues()(k), 0.0);
    s += proj(k) * proj(k) / (lam + kRidge);
    // Under the null, sqrt(m) proj(k) ~ N(0, lam), so S ~ sum_k w_k chi2_1.
    const double w = lam / (lam + kRidge);
    w1 += w;
    w2 += w * w;
  }
  s *= static_cast<double>(m);
  // No direction carries more variance than the ridge: the covariance is
  // singular for practical purposes and there is no evidence of a difference.
  if (!std::isfinite(s) || w1 < 0.5) return {s, 1.0, w1};
  // Satterthwaite: S ~ c chi2_nu, exactly chi2_2J when cov is well conditioned.
  const double c = w2 / w1, nu = w1 * w1 / w2;
  const boost::math::chi_squared chi(nu);
  return {s, boost::math::cdf(boost::math::complement(chi, std::max(s, 0.0) / c)), w1};
}

double jaccard(std::span<const std::string> x, std::span<const std::string> y) {
  const std::set<std::string_view> a(x.begin(), x.end()), b(y.begin(), y.end());
  std::size_t inter = 0;
  for (const auto& v : a) inter += b.count(v);
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

std::vector<std::vector<double>> word_rows(std::span<const std::string> x,
                                           const WordVectorTable& vocab) {
  std::vector<std::vector<double>> rows;
  for (const auto& s : x) {
    if (auto v = embed_text_field(s, vocab)) rows.emplace_back(v->begin(), v->end());
  }
  if (rows.empty()) fail(ErrorCode::kNotComparable, "no instance has an in-vocabulary token");
  return rows;
}

}  // namespace

double m_wordvec(std::span<const std::string> x, std::span<const std::string> y,
                 const WordVectorTable& vocab) {
  const auto a = word_rows(x, vocab), b = word_rows(y, vocab);
  const std::size_t dim = a.front().size();
  double d2 = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    double ma = 0.0, mb = 0.0;
    for (const auto& r : a) ma += r[k];
    for (const auto& r : b) mb += r[k];
    const double t = ma / static_cast<double>(a.size()) - mb / static_cast<double>(b.size());
    d2 += t * t;
  }
  return std::sqrt(d2);
}

HotellingResult hotelling_test(const std::vector<std::vector<double>>& x,
                               const std::vector<std::vector<double>>& y) {
  const std::size_t n1 = x.size(), n2 = y.size();
  if (n1 == 0 || n2 == 0) fail(ErrorCode::kNotComparable, "Hotelling test on an empty sample");
  if (n1 + n2 < 4) fail(ErrorCode::kInvalidArgument, "Hotelling test needs n1 + n2 >= 4");
  const auto p = static_cast<Eigen::Index>(x.front().size());
  auto to_matrix = [p](const std::vector<std::vector<double>>& rows) {
    Eigen::MatrixXd m(p, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != p) {
        fail(ErrorCode::kInvalidArgument, "Hotelling rows differ in dimension");
      }
      m.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(rows[i].data(), p);
    }
    return m;
  };
  const Eigen::MatrixXd a = to_matrix(x), b = to_matrix(y);
  const Eigen::VectorXd ma = a.rowwise().mean(), mb = b.rowwise().mean();
  const Eigen::VectorXd diff = ma - mb;
  const Eigen::MatrixXd ca = a.colwise() - ma, cb = b.colwise() - mb;
  const double dof = static_cast<double>(n1 + n2 - 2);
  const double scale = static_cast<double>(n1) * static_cast<double>(n2) /
                       static_cast<double>(n1 + n2);

  HotellingResult r;
  r.diagonal = n1 + n2 - 2 < static_cast<std::size_t>(p);
  Eigen::VectorXd var(p);
  for (Eigen::Index k = 0; k < p; ++k) var(k) = (ca.row(k).squaredNorm() + cb.row(k).squaredNorm()) / dof;
  const double trace = var.sum();
  if (!(trace > 0.0)) {
    // No within-sample spread: any mean difference is decisive.
    r.p = diff.squaredNorm() > 0.0 ? 0.0 : 1.0;
    r.t2 = diff.squaredNorm() > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return r;
  }
  const double lambda = 1e-3 * trace / static_cast<double>(p);
  if (r.diagonal) {
    r.t2 = scale * (diff.array().square() / (var.array() + lambda)).sum();
    // F degrees of freedom are not positive here; use the chi-square limit.
    r.p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(static_cast<double>(p)), r.t2));
    return r;
  }
  Eigen::MatrixXd cov = (ca * ca.transpose() + cb * cb.transpose()) / dof;
  cov.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  r.t2 = scale * diff.dot(llt.solve(diff));
  const double pd = static_cast<double>(p);
  const double df2 = static_cast<double>(n1 + n2) - pd - 1.0;
  const double f = df2 / (pd * dof) * r.t2;
  r.p = boost::math::cdf(boost::math::complement(boost::math::fisher_f(pd, df2), std::max(f, 0.0)));
  return r;
}

HotellingResult p_wordvec_test(std::span<const std::string> x, std::span<const std::string> y,
                               const WordVectorTable& vocab) {
  return hotelling_test(word_rows(x, vocab), word_rows(y, vocab));
}

MatchScore baseline_score(BaselineMethod m, const ColumnDataset& a, const ColumnDataset& b,
                          const WordVectorTable* vocab, const BaselineConfig& cfg) {
  if (a.space != b.space) {
    fail(ErrorCode::kNotComparable, "datasets " + a.id + " and " + b.id + " are in different value spaces");
  }
  if (!applicable(m, a.space)) {
    fail(ErrorCode::kNotComparable, std::string(to_string(m)) + " does not apply to " +
                                        std::string(to_string(a.space)) + " datasets");
  }
  double d = 0.0;
  switch (m) {
    case BaselineMethod::MeanSD: d = meansd(a.numbers, b.numbers); break;
    case BaselineMethod::KS: d = 1.0 - ks_test(a.numbers, b.numbers).p; break;
    case BaselineMethod::MMD: d = std::max(0.0, mmd_linear(a.numbers, b.numbers, cfg.seed).statistic); break;
    case BaselineMethod::SCF: d = 1.0 - scf_test(a.numbers, b.numbers, cfg.scf_frequencies, cfg.seed).p; break;
    case BaselineMethod::Jaccard: d = jaccard(a.strings, b.strings); break;
    case BaselineMethod::MWordVec:
    case BaselineMethod::PWordVec:
      if (vocab == nullptr) fail(ErrorCode::kNotComparable, "word-vector baseline without word vectors");
      d = m == BaselineMethod::MWordVec ? m_wordvec(a.strings, b.strings, *vocab)
                                        : 1.0 - p_wordvec_test(a.strings, b.strings, *vocab).p;
      break;
  }
  return MatchScore::from_distance(std::max(d, 0.0));
}

}  // namespace varlens
