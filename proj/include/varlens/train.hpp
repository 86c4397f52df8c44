#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "varlens/ingest.hpp"
#include "varlens/simmodel.hpp"

namespace varlens {

struct TrainConfig {
  std::size_t cap = 1000;         // subsample size per dataset
  std::size_t batch = 16;         // triplets per step
  std::size_t max_steps = 50000;
  std::size_t patience = 500;     // steps without moving-average improvement
  std::size_t window = 200;       // moving-average length
  double min_improvement = 1e-4;
  double alpha = 0.5;             // probability of a split-half positive
  AdamConfig adam;
  ModelConfig model;
  std::uint64_t seed = 1;
};

/// Throws config-error on a zero count or alpha outside [0, 1].
void validate(const TrainConfig& cfg);

/// Random permutation of `d` cut at a uniform point in [1, |d| - 1]. Both
/// halves keep the variable label; ids get "#a" / "#b" suffixes.
std::pair<ColumnDataset, ColumnDataset> augment_split(const ColumnDataset& d, std::mt19937_64& rng);

/// Draws training triplets from a single-space repository.
class TripletSampler {
 public:
  TripletSampler(std::span<const ColumnDataset> repo, const GroundTruth& gt, const TrainConfig& cfg);

  /// alpha after the forced cases: 1 without annotated pairs, 0 when no
  /// dataset can be split.
  double effective_alpha() const { return alpha_; }

  /// `split_positive` (optional) reports whether the positive came from a split.
  TripletExample sample(std::mt19937_64& rng, bool* split_positive = nullptr) const;

 private:
  std::size_t draw_negative(std::size_t anchor, std::mt19937_64& rng) const;

  std::span<const ColumnDataset> repo_;
  const GroundTruth& gt_;
  std::size_t cap_;
  double alpha_;
  std::vector<std::size_t> splittable_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

struct TrainLogEntry {
  std::size_t step = 0;
  double loss = 0.0;
  double moving_average = 0.0;
};

struct TrainResult {
  EmbeddingModel<float> model;
  std::vector<TrainLogEntry> log;
  bool stopped_early = false;
};

/// Batched triplet training with Adam. `log_out`, when given, receives one
/// tab-separated line per step: step, batch loss, moving average.
/// `words` is required for the Language space.
TrainResult train_model(std::span<const ColumnDataset> repo, const GroundTruth& gt,
                        const TrainConfig& cfg, const WordVectorTable* words = nullptr,
                        std::ostream* log_out = nullptr);

/// Prior correction for probabilities learned under balanced sampling:
/// rescales the odds by prior / (1 - prior).
double recalibrate_probability(double p, double prior);

}  // namespace varlens
