#include "varlens/train.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace varlens {

void validate(const TrainConfig& cfg) {
  if (cfg.cap == 0 || cfg.batch == 0 || cfg.max_steps == 0 || cfg.patience == 0 ||
      cfg.window == 0) {
    fail(ErrorCode::kConfigError, "training counts must be >= 1");
  }
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
    fail(ErrorCode::kConfigError, "alpha must lie in [0, 1]");
  }
  if (!(cfg.adam.lr > 0.0)) fail(ErrorCode::kConfigError, "learning rate must be positive");
}

std::pair<ColumnDataset, ColumnDataset> augment_split(const ColumnDataset& d,
                                                      std::mt19937_64& rng) {
  const std::size_t n = d.size();
  if (n < 2) fail(ErrorCode::kInvalidArgument, "cannot split dataset " + d.id + " of size < 2");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t cut = std::uniform_int_distribution<std::size_t>(1, n - 1)(rng);
  std::vector<std::size_t> left(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<std::size_t> right(perm.begin() + static_cast<std::ptrdiff_t>(cut), perm.end());
  std::sort(left.begin(), left.end());
  std::sort(right.begin(), right.end());
  auto a = select_values(d, left);
  auto b = select_values(d, right);
  a.id += "#a";
  b.id += "#b";
  a.origin_id = b.origin_id = d.id;
  return {std::move(a), std::move(b)};
}

TripletSampler::TripletSampler(std::span<const ColumnDataset> repo, const GroundTruth& gt,
                               const TrainConfig& cfg)
    : repo_(repo), gt_(gt), cap_(cfg.cap), alpha_(cfg.alpha) {
  validate(cfg);
  if (repo_.size() < 2) {
    fail(ErrorCode::kSamplingError, "need at least 2 datasets to sample triplets");
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < repo_.size(); ++i) {
    if (repo_[i].space != repo_[0].space) {
      fail(ErrorCode::kInvalidArgument, "repository mixes value spaces");
    }
    if (repo_[i].size() >= 2) splittable_.push_back(i);
    index.emplace(repo_[i].id, i);
  }
  for (const auto& [a, b] : gt_.pairs()) {
    const auto ia = index.find(a);
    const auto ib = index.find(b);
    if (ia != index.end() && ib != index.end()) pairs_.emplace_back(ia->second, ib->second);
  }
  if (pairs_.empty()) {
    alpha_ = 1.0;
  } else if (splittable_.empty()) {
    alpha_ = 0.0;
  }
  if (alpha_ > 0.0 && splittable_.empty()) {
    fail(ErrorCode::kSamplingError, "no annotated pairs and no dataset with >= 2 values");
  }
}

std::size_t TripletSampler::draw_negative(std::size_t anchor, std::mt19937_64& rng) const {
  const std::string& id = repo_[anchor].id;
  std::uniform_int_distribution<std::size_t> pick(0, repo_.size() - 1);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const std::size_t j = pick(rng);
    if (j != anchor && !gt_.match(id, repo_[j].id)) return j;
  }
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < repo_.size(); ++j) {
    if (j != anchor && !gt_.match(id, repo_[j].id)) candidates.push_back(j);
  }
  if (candidates.empty()) {
    fail(ErrorCode::kSamplingError, "dataset " + id + " matches every other dataset");
  }
  return candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
}

TripletExample TripletSampler::sample(std::mt19937_64& rng, bool* split_positive) const {
  const bool split = std::bernoulli_distribution(alpha_)(rng);
  if (split_positive != nullptr) *split_positive = split;
  TripletExample t;
  std::size_t anchor = 0;
  if (split) {
    anchor = splittable_[std::uniform_int_distribution<std::size_t>(0, splittable_.size() - 1)(rng)];
    auto [a, b] = augment_split(repo_[anchor], rng);
    t.anchor = std::move(a);
    t.positive = std::move(b);
  } else {
    const auto& [i, j] = pairs_[std::uniform_int_distribution<std::size_t>(0, pairs_.size() - 1)(rng)];
    const bool flip = std::bernoulli_distribution(0.5)(rng);
    anchor = flip ? j : i;
    t.anchor = repo_[anchor];
    t.positive = repo_[flip ? i : j];
  }
  t.negative = repo_[draw_negative(anchor, rng)];
  t.anchor = subsample(t.anchor, cap_, rng());
  t.positive = subsample(t.positive, cap_, rng());
  t.negative = subsample(t.negative, cap_, rng());
  return t;
}

TrainResult train_model(std::span<const ColumnDataset> repo, const GroundTruth& gt,
                        const TrainConfig& cfg, const WordVectorTable* words,
                        std::ostream* log_out) {
  validate(cfg);
  if (repo.empty()) fail(ErrorCode::kInvalidArgument, "empty training repository");
  const ValueSpace space = repo.front().space;

  std::mt19937_64 rng(cfg.seed);
  CharVocabulary chars;
  if (space == ValueSpace::GeneralString) chars = CharVocabulary::build(repo);
  TrainResult result{EmbeddingModel<float>(space, cfg.model, std::move(chars)), {}, false};
  EmbeddingModel<float>& model = result.model;
  model.init(rng());

  const TripletSampler sampler(repo, gt, cfg);
  AdamState<float> adam(model.num_params(), cfg.adam);
  ParamBuffer<float> grad(model.num_params());
  std::deque<double> recent;
  double recent_sum = 0.0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_step = 0;
  const float scale = 1.0f / static_cast<float>(cfg.batch);

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0f);
    double loss = 0.0;
    std::vector<std::string> batch_ids;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const TripletExample t = sampler.sample(rng);
      batch_ids.push_back(t.anchor.id + "," + t.positive.id + "," + t.negative.id);
      loss += triplet_loss_and_grads<float>(model, encode_triplet(model, t, words), grad);
    }
    loss /= static_cast<double>(cfg.batch);
    double gsum = 0.0;
    for (float& g : grad) {
      g *= scale;
      gsum += g;
    }
    if (!std::isfinite(loss) || !std::isfinite(gsum)) {
      std::string ids;
      for (const auto& s : batch_ids) ids += (ids.empty() ? "" : " ") + ("(" + s + ")");
      fail(ErrorCode::kDivergence, "non-finite loss at step " + std::to_string(step) +
                                       "; batch " + ids);
    }
    adam_step<float>(model.params(), grad, adam);

    recent.push_back(loss);
    recent_sum += loss;
    if (recent.size() > cfg.window) {
      recent_sum -= recent.front();
      recent.pop_front();
    }
    const double avg = recent_sum / static_cast<double>(recent.size());
    result.log.push_back({step, loss, avg});
    if (log_out != nullptr) *log_out << step << '\t' << loss << '\t' << avg << '\n';

    if (recent.size() < cfg.window) continue;
    if (avg < best - cfg.min_improvement) {
      best = avg;
      best_step = step;
    } else if (step - best_step >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

double recalibrate_probability(double p, double prior) {
  if (!(prior > 0.0 && prior < 1.0)) fail(ErrorCode::kInvalidArgument, "prior must lie in (0, 1)");
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::kInvalidArgument, "probability outside [0, 1]");
  const double num = p * prior;
  const double den = num + (1.0 - p) * (1.0 - prior);
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace varlens
