#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varlens/core.hpp"
#include "varlens/encode.hpp"

namespace varlens {

enum class BaselineMethod : std::uint8_t { MeanSD, KS, MMD, SCF, Jaccard, MWordVec, PWordVec };

inline constexpr BaselineMethod kAllBaselines[] = {
    BaselineMethod::MeanSD,  BaselineMethod::KS,       BaselineMethod::MMD,     BaselineMethod::SCF,
    BaselineMethod::Jaccard, BaselineMethod::MWordVec, BaselineMethod::PWordVec};

std::string_view to_string(BaselineMethod m);
BaselineMethod parse_baseline_method(std::string_view text);

/// MeanSD/KS/MMD/SCF need numbers, Jaccard any strings, the word-vector
/// methods language values.
bool applicable(BaselineMethod m, ValueSpace space);

/// |mean1 - mean2| + |sd1 - sd2| with population standard deviations.
double meansd(std::span<const float> x, std::span<const float> y);

struct KsResult {
  double statistic = 0.0;  // sup |F1 - F2|
  double p = 1.0;
};

/// Asymptotic two-sample Kolmogorov-Smirnov test.
KsResult ks_test(std::span<const float> x, std::span<const float> y);
/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

struct MmdResult {
  double statistic = 0.0;  // unclamped linear-time estimate
  double variance = 0.0;   // sample variance of the per-pair terms
  std::size_t pairs = 0;
  double bandwidth = 1.0;

  double standard_error() const;
};

inline constexpr std::size_t kBandwidthSample = 500;

/// Median pairwise |difference| of a pooled subsample of at most `cap`
/// points; 1 when the median is 0.
double median_bandwidth(std::span<const float> x, std::span<const float> y, std::uint64_t seed,
                        std::size_t cap = kBandwidthSample);

/// Linear-time MMD^2 with an RBF kernel, after shuffling both samples and
/// truncating to the smaller size.
MmdResult mmd_linear(std::span<const float> x, std::span<const float> y, std::uint64_t seed);

struct ScfResult {
  double statistic = 0.0;
  double p = 1.0;
  /// Expected statistic under the null, sum of lam / (lam + 1e-8) over the
  /// covariance eigenvalues; equals 2J when the covariance is well conditioned.
  double effective_df = 0.0;
};

inline constexpr int kScfFrequencies = 10;

/// Smoothed characteristic function test with J Gaussian frequencies. The
/// p-value uses the null law of the ridge-regularized statistic, since the
/// 2J features of a univariate sample are close to collinear.
ScfResult scf_test(std::span<const float> x, std::span<const float> y, int j,
                   std::uint64_t seed);

/// 1 - |U1 n U2| / |U1 u U2| over the sets of distinct values.
double jaccard(std::span<const std::string> x, std::span<const std::string> y);

/// Euclidean distance between mean word vectors.
double m_wordvec(std::span<const std::string> x, std::span<const std::string> y,
                 const WordVectorTable& vocab);

struct HotellingResult {
  double t2 = 0.0;
  double p = 1.0;
  bool diagonal = false;  // diagonal covariance was used
};

/// Two-sample Hotelling T^2 on per-instance word vectors.
HotellingResult p_wordvec_test(std::span<const std::string> x, std::span<const std::string> y,
                               const WordVectorTable& vocab);
/// Same test on raw vectors (rows are instances).
HotellingResult hotelling_test(const std::vector<std::vector<double>>& x,
                               const std::vector<std::vector<double>>& y);

struct BaselineConfig {
  int scf_frequencies = kScfFrequencies;
  std::uint64_t seed = 0;
};

/// D (and p = exp(-D)) for any method. Inapplicable spaces, cross-space
/// pairs and missing word vectors raise not-comparable.
MatchScore baseline_score(BaselineMethod m, const ColumnDataset& a, const ColumnDataset& b,
                          const WordVectorTable* vocab, const BaselineConfig& cfg = {});

}  // namespace varlens
