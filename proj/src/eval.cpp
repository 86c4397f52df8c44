#include "varlens/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include <boost/math/distributions/chi_squared.hpp>

#include "varlens/config.hpp"

namespace varlens {
namespace {

const MatchScore kIncomparable{std::numeric_limits<double>::infinity(), 0.0};

ColumnDataset blind(const ColumnDataset& d) {
  ColumnDataset out = d;
  out.variable_name.clear();
  return out;
}

std::vector<ColumnDataset> blind_all(std::span<const ColumnDataset> ds) {
  std::vector<ColumnDataset> out;
  out.reserve(ds.size());
  for (const auto& d : ds) out.push_back(blind(d));
  return out;
}

template <typename F>
MatchScore guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNotComparable) return kIncomparable;
    throw;
  }
}

std::pair<ColumnDataset, ColumnDataset> equal_halves(const ColumnDataset& d, std::mt19937_64& rng) {
  std::vector<std::size_t> perm(d.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t half = d.size() / 2;
  std::vector<std::size_t> a(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
  std::vector<std::size_t> b(perm.begin() + static_cast<std::ptrdiff_t>(half),
                             perm.begin() + static_cast<std::ptrdiff_t>(2 * half));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  auto left = select_values(d, a);
  auto right = select_values(d, b);
  left.id = d.id + "#a";
  right.id = d.id + "#b";
  left.origin_id = right.origin_id = d.id;
  return {std::move(left), std::move(right)};
}

// Uniform choice of min(n, size) distinct elements, in draw order.
template <typename T>
std::vector<T> choose(std::vector<T> items, std::size_t n, std::mt19937_64& rng) {
  n = std::min(n, items.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
  items.resize(n);
  return items;
}

}  // namespace

// ---------------------------------------------------------------- scorers

MatchScore Scorer::score(const ColumnDataset& a, const ColumnDataset& b) const {
  if (a.space != b.space || !supports(a.space)) return kIncomparable;
  const auto ba = blind(a), bb = blind(b);
  return guarded([&] { return score_blind(ba, bb); });
}

std::vector<std::vector<MatchScore>> Scorer::score_all(std::span<const ColumnDataset> queries,
                                                       std::span<const ColumnDataset> repo) const {
  const auto bq = blind_all(queries), br = blind_all(repo);
  return score_all_blind(bq, br);
}

std::vector<std::vector<MatchScore>> Scorer::score_all_blind(
    std::span<const ColumnDataset> queries, std::span<const ColumnDataset> repo) const {
  std::vector<std::vector<MatchScore>> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out[i].reserve(repo.size());
    for (const auto& r : repo) {
      const auto& q = queries[i];
      if (q.space != r.space || !supports(q.space)) {
        out[i].push_back(kIncomparable);
      } else {
        out[i].push_back(guarded([&] { return score_blind(q, r); }));
      }
    }
  }
  return out;
}

void EmbeddingScorer::add_model(const EmbeddingModel<float>& model) {
  models_[model.space()] = &model;
}

std::optional<DatasetEmbedding> EmbeddingScorer::embed(const ColumnDataset& d) const {
  const auto it = models_.find(d.space);
  if (it == models_.end()) return std::nullopt;
  try {
    return it->second->embed(d, words_);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNotComparable) return std::nullopt;
    throw;
  }
}

MatchScore EmbeddingScorer::score_blind(const ColumnDataset& a, const ColumnDataset& b) const {
  const auto ea = embed(a), eb = embed(b);
  if (!ea || !eb) return kIncomparable;
  return pairwise_distance(*ea, *eb);
}

std::vector<std::vector<MatchScore>> EmbeddingScorer::score_all_blind(
    std::span<const ColumnDataset> queries, std::span<const ColumnDataset> repo) const {
  std::vector<std::optional<DatasetEmbedding>> eq, er;
  for (const auto& q : queries) eq.push_back(embed(q));
  for (const auto& r : repo) er.push_back(embed(r));
  std::vector<std::vector<MatchScore>> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < repo.size(); ++j) {
      const bool ok = eq[i] && er[j] && queries[i].space == repo[j].space;
      out[i].push_back(ok ? pairwise_distance(*eq[i], *er[j]) : kIncomparable);
    }
  }
  return out;
}

MatchScore BaselineScorer::score_blind(const ColumnDataset& a, const ColumnDataset& b) const {
  return baseline_score(method_, a, b, words_, cfg_);
}

// ---------------------------------------------------------------- AUC

double auc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) {
    fail(ErrorCode::kInvalidArgument, "auc needs at least one positive and one negative score");
  }
  std::vector<double> sorted(neg.begin(), neg.end());
  std::sort(sorted.begin(), sorted.end());
  double wins = 0.0;
  for (double p : pos) {
    const auto [lo, hi] = std::equal_range(sorted.begin(), sorted.end(), p);
    wins += static_cast<double>(lo - sorted.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

// ---------------------------------------------------------------- pairs

std::string_view to_string(PairMode mode) { return mode == PairMode::Split ? "split" : "diff"; }

PairMode parse_pair_mode(std::string_view text) {
  if (text == "split") return PairMode::Split;
  if (text == "diff") return PairMode::Diff;
  fail(ErrorCode::kInvalidArgument, "unknown pair mode '" + std::string(text) + "'");
}

std::vector<LabeledPair> build_pairs(std::span<const ColumnDataset> data, const GroundTruth& gt,
                                     PairMode mode, std::size_t n_pairs, std::uint64_t seed) {
  if (n_pairs == 0) fail(ErrorCode::kInvalidArgument, "n_pairs must be positive");
  const std::string label(to_string(mode));
  std::mt19937_64 rng(seed);
  std::vector<LabeledPair> out;

  if (mode == PairMode::Split) {
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].size() >= 2) cand.push_back(i);
    }
    if (cand.empty()) fail(ErrorCode::kShortage, label + " mode: no dataset has two values");
    for (std::size_t i : choose(cand, n_pairs, rng)) {
      auto [a, b] = equal_halves(data[i], rng);
      out.push_back({std::move(a), std::move(b), 1});
    }
  } else {
    std::unordered_map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < data.size(); ++i) where.emplace(data[i].id, i);
    std::vector<std::pair<std::size_t, std::size_t>> cand;
    for (const auto& [x, y] : gt.pairs()) {
      const auto ix = where.find(x), iy = where.find(y);
      if (ix == where.end() || iy == where.end()) continue;
      if (data[ix->second].table_id == data[iy->second].table_id) continue;
      cand.emplace_back(ix->second, iy->second);
    }
    if (cand.empty()) {
      fail(ErrorCode::kShortage, label + " mode: no annotated match across distinct tables");
    }
    for (const auto& [i, j] : choose(cand, n_pairs, rng)) out.push_back({data[i], data[j], 1});
  }
  const std::size_t positives = out.size();

  // negatives: non-matching pairs, cross-table when any exist
  const std::size_t min_size = mode == PairMode::Split ? 2 : 1;
  std::vector<std::pair<std::size_t, std::size_t>> cross, same;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].size() < min_size) continue;
    for (std::size_t j = i + 1; j < data.size(); ++j) {
      if (data[j].size() < min_size || gt.match(data[i].id, data[j].id)) continue;
      (data[i].table_id != data[j].table_id ? cross : same).emplace_back(i, j);
    }
  }
  const auto& pool = cross.empty() ? same : cross;
  if (pool.empty()) fail(ErrorCode::kShortage, label + " mode: no non-matching dataset pair");
  for (const auto& [i, j] : choose(pool, n_pairs, rng)) {
    if (mode == PairMode::Split) {
      out.push_back({equal_halves(data[i], rng).first, equal_halves(data[j], rng).first, 0});
    } else {
      out.push_back({data[i], data[j], 0});
    }
  }
  if (positives < n_pairs || out.size() - positives < n_pairs) {
    warn(label + " mode: only " + std::to_string(positives) + " positive and " +
         std::to_string(out.size() - positives) + " negative pairs available (asked for " +
         std::to_string(n_pairs) + ")");
  }
  return out;
}

std::vector<FractionAuc> eval_pairs(const Scorer& scorer, std::span<const LabeledPair> pairs,
                                    std::span<const double> fractions, std::uint64_t seed) {
  if (fractions.empty()) fail(ErrorCode::kInvalidArgument, "no subsample fractions given");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      fail(ErrorCode::kInvalidArgument, "subsample fraction must lie in (0, 1]");
    }
  }
  std::vector<FractionAuc> out;
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    const double f = fractions[fi];
    std::vector<double> pos, neg;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& pr = pairs[k];
      const auto shrink = [&](const ColumnDataset& d, std::uint64_t side) {
        const auto n = static_cast<std::size_t>(std::ceil(f * static_cast<double>(d.size())));
        return subsample(d, n, derive_seed(seed, (k * 2 + side) * 64 + fi));
      };
      const double p = scorer.score(shrink(pr.left, 0), shrink(pr.right, 1)).p;
      (pr.y == 1 ? pos : neg).push_back(p);
    }
    out.push_back({f, auc(pos, neg), pos.size(), neg.size()});
  }
  return out;
}

std::vector<FractionAuc> eval_pairs(const Scorer& scorer, std::span<const ColumnDataset> data,
                                    const GroundTruth& gt, PairMode mode,
                                    std::span<const double> fractions, std::size_t n_pairs,
                                    std::uint64_t seed) {
  if (fractions.empty()) fail(ErrorCode::kInvalidArgument, "no subsample fractions given");
  const auto pairs = build_pairs(data, gt, mode, n_pairs, seed);
  return eval_pairs(scorer, pairs, fractions, derive_seed(seed, 1));
}

// ---------------------------------------------------------------- retrieval

MatchesAtK matches_at_k(const Scorer& scorer, std::span<const ColumnDataset> queries,
                        std::span<const ColumnDataset> repo, const GroundTruth& gt,
                        std::span<const std::size_t> ks) {
  for (const auto& q : queries) {
    const bool any = std::any_of(repo.begin(), repo.end(),
                                 [&](const ColumnDataset& r) { return gt.match(q.id, r.id); });
    if (!any) fail(ErrorCode::kInvalidArgument, "query " + q.id + " has no match in the repository");
  }
  MatchesAtK out;
  out.ks.assign(ks.begin(), ks.end());
  out.mean_matches.assign(ks.size(), 0.0);
  out.queries = queries.size();
  if (queries.empty()) return out;
  const auto scores = scorer.score_all(queries, repo);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    std::vector<std::size_t> order(repo.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double da = scores[i][a].d, db = scores[i][b].d;
      return da < db || (da == db && repo[a].id < repo[b].id);
    });
    for (std::size_t t = 0; t < ks.size(); ++t) {
      const std::size_t top = std::min(ks[t], order.size());
      std::size_t hits = 0;
      for (std::size_t r = 0; r < top; ++r) hits += gt.match(queries[i].id, repo[order[r]].id);
      out.mean_matches[t] += static_cast<double>(hits);
    }
  }
  for (auto& m : out.mean_matches) m /= static_cast<double>(queries.size());
  return out;
}

CalibratedRecall calibrated_recall(
    const Scorer& scorer, std::span<const ColumnDataset> nomatch, std::span<const ColumnDataset> repo,
    std::span<const std::pair<ColumnDataset, ColumnDataset>> matched) {
  if (nomatch.empty() || repo.empty() || matched.empty()) {
    fail(ErrorCode::kInvalidArgument,
         "calibrated recall needs no-match queries, a repository and matched pairs");
  }
  CalibratedRecall out;
  const auto scores = scorer.score_all(nomatch, repo);
  double total = 0.0;
  for (std::size_t i = 0; i < nomatch.size(); ++i) {
    double best = 0.0;
    for (const auto& s : scores[i]) best = std::max(best, s.p);
    out.max_p.emplace_back(nomatch[i].id, best);
    total += best;
  }
  out.threshold = total / static_cast<double>(nomatch.size());
  std::size_t above = 0;
  for (const auto& [q, r] : matched) above += scorer.score(q, r).p > out.threshold;
  out.matched_pairs = matched.size();
  out.recall = static_cast<double>(above) / static_cast<double>(matched.size());
  return out;
}

std::vector<std::pair<std::string, double>> g_diagnostics(const EmbeddingModel<float>& model,
                                                          std::span<const ColumnDataset> repo,
                                                          const WordVectorTable* words) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& d : repo) {
    if (d.space != model.space()) continue;
    try {
      out.emplace_back(d.id, model.embed(blind(d), words).g);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNotComparable) throw;
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second > b.second || (a.second == b.second && a.first < b.first);
  });
  return out;
}

double uniformity_test(std::vector<double> ps, int bins) {
  if (ps.size() < 2 || bins < 2) {
    fail(ErrorCode::kInvalidArgument, "uniformity test needs two p-values and two bins");
  }
  std::sort(ps.begin(), ps.end());
  std::vector<double> edges = {0.0};
  for (int i = 1; i < bins; ++i) {
    const double q = static_cast<double>(i) / bins;
    const auto it = std::lower_bound(ps.begin(), ps.end(), q);
    double e = it == ps.end() ? ps.back() : *it;
    if (it != ps.begin() && std::abs(*(it - 1) - q) < std::abs(e - q)) e = *(it - 1);
    if (e > edges.back() && e < 1.0) edges.push_back(e);
  }
  edges.push_back(1.0);
  if (edges.size() < 3) return 0.0;  // everything sits on one or two atoms
  const double n = static_cast<double>(ps.size());
  double stat = 0.0;
  for (std::size_t b = 1; b < edges.size(); ++b) {
    // bin b holds (edge[b-1], edge[b]]; the first bin also takes [0, edge[0]]
    const auto lo = b == 1 ? ps.begin() : std::upper_bound(ps.begin(), ps.end(), edges[b - 1]);
    const auto hi = b + 1 == edges.size() ? ps.end() : std::upper_bound(ps.begin(), ps.end(), edges[b]);
    const double observed = static_cast<double>(hi - lo);
    const double expected = n * (edges[b] - edges[b - 1]);
    stat += (observed - expected) * (observed - expected) / expected;
  }
  const double df = static_cast<double>(edges.size() - 2);
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), stat));
}

// ---------------------------------------------------------------- synthetic corpus

std::string_view to_string(Archetype a) {
  switch (a) {
    case Archetype::Affine: return "affine";
    case Archetype::Distinct: return "distinct";
    case Archetype::Boolean: return "boolean";
    case Archetype::Categorical: return "categorical";
    case Archetype::Code: return "code";
    case Archetype::Clustered: return "clustered";
  }
  return "?";
}

namespace {

struct Law {
  int family = 0;
  double a = 0.0, b = 1.0;

  double draw(std::mt19937_64& rng) const {
    switch (family) {
      case 0: return std::normal_distribution<double>(a, b)(rng);
      case 1: return std::lognormal_distribution<double>(a, b)(rng);
      case 2: return std::exponential_distribution<double>(1.0 / a)(rng);
      case 3: return std::uniform_real_distribution<double>(a, a + b)(rng);
      case 4: return std::gamma_distribution<double>(a, b)(rng);
      default: return static_cast<double>(std::poisson_distribution<int>(a)(rng));
    }
  }

  // skewness and excess kurtosis; both are unchanged by positive affine maps
  std::pair<double, double> shape() const {
    switch (family) {
      case 0: return {0.0, 0.0};
      case 1: {
        const double w = std::exp(b * b);
        return {(w + 2.0) * std::sqrt(w - 1.0), w * w * w * w + 2.0 * w * w * w + 3.0 * w * w - 6.0};
      }
      case 2: return {2.0, 6.0};
      case 3: return {0.0, -1.2};
      case 4: return {2.0 / std::sqrt(a), 6.0 / a};
      default: return {1.0 / std::sqrt(a), 1.0 / a};
    }
  }

  // Two affine variables whose laws differ only by location and scale would
  // be the same variable under some unit map.
  bool affine_distinct(const Law& o) const {
    if ((family == 5) != (o.family == 5)) return true;
    const auto [s1, k1] = shape();
    const auto [s2, k2] = o.shape();
    return std::max(std::abs(s1 - s2), std::abs(std::log(k1 + 3.0) - std::log(k2 + 3.0))) >= 0.3;
  }
};

Law random_law(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto decade = [&](double lo, double hi) { return std::pow(10.0, lo + (hi - lo) * u(rng)); };
  Law law;
  law.family = std::uniform_int_distribution<int>(0, 5)(rng);
  switch (law.family) {
    case 0:
      law.a = decade(-1, 3) * (u(rng) < 0.25 ? -1.0 : 1.0);
      law.b = std::abs(law.a) * (0.05 + 0.45 * u(rng));
      break;
    case 1:
      law.a = -1.0 + 7.0 * u(rng);
      law.b = 0.2 + 0.8 * u(rng);
      break;
    case 2: law.a = decade(-1, 3); break;
    case 3:
      law.a = decade(-1, 3) * (u(rng) < 0.25 ? -1.0 : 1.0);
      law.b = std::abs(law.a) * (0.2 + 1.8 * u(rng));
      break;
    case 4:
      law.a = 1.0 + 7.0 * u(rng);
      law.b = decade(-1, 2);
      break;
    default: law.a = decade(0, 2.5); break;
  }
  return law;
}

// unit conversions: Celsius/Fahrenheit/Kelvin, inches/cm, pounds/kg, km/m
constexpr std::pair<double, double> kAffineMaps[] = {
    {1.0, 0.0}, {1.8, 32.0}, {1.0, 273.15}, {2.54, 0.0}, {0.4536, 0.0}, {1000.0, 0.0}};
constexpr std::size_t kMapsPerVariable = 3;

// clustered variables: word = centre + spread * noise, both of unit scale;
// dataset t of variable v only uses slice (t + v) mod kClusterSlices
constexpr double kClusterSpread = 0.6;
constexpr std::size_t kClusterSlices = 4;
constexpr std::size_t kClusterSliceWords = 6;

std::string pseudo_word(std::mt19937_64& rng, std::size_t syllables) {
  static const char consonants[] = "bdfgklmnprstvz";
  static const char vowels[] = "aeiou";
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) {
    w += consonants[std::uniform_int_distribution<int>(0, 13)(rng)];
    w += vowels[std::uniform_int_distribution<int>(0, 4)(rng)];
  }
  return w;
}

std::string format_float(float v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusConfig& cfg) {
  const std::size_t n_vars = cfg.affine_variables + cfg.distinct_variables +
                             cfg.boolean_variables + cfg.categorical_variables + cfg.code_variables +
                             cfg.clustered_variables;
  if (n_vars == 0 || cfg.datasets_per_variable == 0 || cfg.samples_per_dataset == 0) {
    fail(ErrorCode::kConfigError, "synthetic corpus needs at least one variable, dataset and sample");
  }
  std::mt19937_64 rng(cfg.seed);
  SyntheticCorpus corpus;
  corpus.words = WordVectorTable(kSyntheticWordDim);
  std::set<std::string> taken = {"yes", "no"};

  // names and vocabulary words share one pool of pseudo-words that are
  // pairwise far apart under Jaro-Winkler
  std::vector<std::string> used;
  const auto fresh_word = [&](std::size_t syllables) {
    for (;;) {
      std::string w = pseudo_word(rng, syllables);
      if (taken.contains(w) || is_uninformative_name(w)) continue;
      const bool close = std::any_of(used.begin(), used.end(), [&](const std::string& o) {
        return jaro_winkler(w, o) >= kNameJaroWinklerThreshold;
      });
      if (close) continue;
      taken.insert(w);
      used.push_back(w);
      return w;
    }
  };
  const auto add_word = [&](const std::string& w, const std::vector<float>* centre = nullptr) {
    std::normal_distribution<double> normal;
    std::vector<float> v(kSyntheticWordDim);
    for (auto& x : v) x = static_cast<float>(normal(rng) / std::sqrt(double{kSyntheticWordDim}));
    if (centre) {
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = (*centre)[i] + kClusterSpread * v[i];
    }
    corpus.words.insert(w, std::move(v));
    corpus.word_order.push_back(w);
  };

  struct Generator {
    Law law;
    std::vector<std::pair<double, double>> maps;
    std::vector<std::string> vocab;
    std::vector<double> weights;
  };
  std::vector<Generator> gens;
  const auto add_variable = [&](Archetype a, ValueSpace space) {
    corpus.variables.push_back({fresh_word(4), a, space});
    gens.emplace_back();
    return &gens.back();
  };

  add_word("yes");
  add_word("no");
  for (std::size_t v = 0; v < cfg.affine_variables; ++v) {
    auto* g = add_variable(Archetype::Affine, ValueSpace::Numeric);
    for (int attempt = 0;; ++attempt) {
      if (attempt == 10000) fail(ErrorCode::kConfigError, "too many affine variables for distinct law shapes");
      g->law = random_law(rng);
      const bool clash = std::any_of(gens.begin(), gens.end() - 1,
                                     [&](const Generator& o) { return !g->law.affine_distinct(o.law); });
      if (!clash) break;
    }
    std::vector<std::size_t> pick(std::size(kAffineMaps) - 1);
    std::iota(pick.begin(), pick.end(), std::size_t{1});
    std::shuffle(pick.begin(), pick.end(), rng);
    g->maps.push_back(kAffineMaps[0]);
    for (std::size_t i = 0; i + 1 < kMapsPerVariable; ++i) g->maps.push_back(kAffineMaps[pick[i]]);
  }
  for (std::size_t v = 0; v < cfg.distinct_variables; ++v) {
    add_variable(Archetype::Distinct, ValueSpace::Numeric)->law = random_law(rng);
  }
  for (std::size_t v = 0; v < cfg.boolean_variables; ++v) {
    auto* g = add_variable(Archetype::Boolean, ValueSpace::Language);
    g->vocab = {"yes", "no"};
    g->weights = {0.5, 0.5};
  }
  for (std::size_t v = 0; v < cfg.categorical_variables; ++v) {
    auto* g = add_variable(Archetype::Categorical, ValueSpace::Language);
    const int k = std::uniform_int_distribution<int>(4, 8)(rng);
    for (int i = 0; i < k; ++i) {
      g->vocab.push_back(fresh_word(3));
      add_word(g->vocab.back());
      g->weights.push_back(std::exponential_distribution<double>(1.0)(rng) + 0.05);
    }
  }
  for (std::size_t v = 0; v < cfg.code_variables; ++v) {
    auto* g = add_variable(Archetype::Code, ValueSpace::GeneralString);
    std::string prefix;
    for (int i = 0; i < 2; ++i) prefix += static_cast<char>('A' + std::uniform_int_distribution<int>(0, 25)(rng));
    const int k = std::uniform_int_distribution<int>(6, 12)(rng);
    std::set<std::string> codes;
    while (codes.size() < static_cast<std::size_t>(k)) {
      codes.insert(prefix + "-" + std::to_string(std::uniform_int_distribution<int>(10, 999)(rng)));
    }
    g->vocab.assign(codes.begin(), codes.end());
    for (int i = 0; i < k; ++i) g->weights.push_back(std::exponential_distribution<double>(1.0)(rng) + 0.05);
  }

  for (std::size_t v = 0; v < cfg.clustered_variables; ++v) {
    auto* g = add_variable(Archetype::Clustered, ValueSpace::Language);
    std::normal_distribution<double> normal;
    std::vector<float> centre(kSyntheticWordDim);
    for (auto& x : centre) x = static_cast<float>(normal(rng) / std::sqrt(double{kSyntheticWordDim}));
    for (std::size_t i = 0; i < kClusterSlices * kClusterSliceWords; ++i) {
      g->vocab.push_back(fresh_word(3));
      add_word(g->vocab.back(), &centre);
      g->weights.push_back(std::exponential_distribution<double>(1.0)(rng) + 0.05);
    }
  }

  for (std::size_t t = 0; t < cfg.datasets_per_variable; ++t) {
    Table table;
    char id[32];
    std::snprintf(id, sizeof id, "syn%03zu", t);
    table.id = id;
    for (std::size_t v = 0; v < gens.size(); ++v) {
      const auto& var = corpus.variables[v];
      const auto& g = gens[v];
      const std::string col_id = table.id + "/" + std::to_string(v);
      if (var.space == ValueSpace::Numeric) {
        const auto [scale, shift] = g.maps.empty() ? std::pair{1.0, 0.0} : g.maps[(t + v) % g.maps.size()];
        std::vector<float> xs(cfg.samples_per_dataset);
        for (auto& x : xs) x = static_cast<float>(scale * g.law.draw(rng) + shift);
        table.columns.push_back(make_numeric(col_id, table.id, var.name, std::move(xs)));
      } else if (var.archetype == Archetype::Clustered) {
        const std::size_t first = (t + v) % kClusterSlices * kClusterSliceWords;
        std::discrete_distribution<std::size_t> pick(g.weights.begin() + first,
                                                     g.weights.begin() + first + kClusterSliceWords);
        std::vector<std::string> xs(cfg.samples_per_dataset);
        for (auto& x : xs) x = g.vocab[first + pick(rng)];
        table.columns.push_back(make_strings(col_id, table.id, var.name, var.space, std::move(xs)));
      } else {
        std::discrete_distribution<std::size_t> pick(g.weights.begin(), g.weights.end());
        std::vector<std::string> xs(cfg.samples_per_dataset);
        for (auto& x : xs) x = g.vocab[pick(rng)];
        table.columns.push_back(make_strings(col_id, table.id, var.name, var.space, std::move(xs)));
      }
    }
    corpus.tables.push_back(std::move(table));
  }
  return corpus;
}

std::vector<ColumnDataset> SyntheticCorpus::datasets() const {
  std::vector<ColumnDataset> out;
  for (const auto& t : tables) out.insert(out.end(), t.columns.begin(), t.columns.end());
  return out;
}

GroundTruth SyntheticCorpus::ground_truth() const {
  const auto all = datasets();
  return GroundTruth::build(all, &words);
}

Archetype SyntheticCorpus::archetype_of(const ColumnDataset& d) const {
  for (const auto& v : variables) {
    if (v.name == d.variable_name) return v.archetype;
  }
  fail(ErrorCode::kInvalidArgument, "dataset " + d.id + " is not from this corpus");
}

void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "tables");
  for (const auto& table : corpus.tables) {
    const auto path = dir / "tables" / (table.id + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      out << (c ? "," : "") << csv_field(table.columns[c].variable_name);
    }
    out << '\n';
    const std::size_t rows = table.columns.empty() ? 0 : table.columns[0].size();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        const auto& col = table.columns[c];
        out << (c ? "," : "")
            << (col.space == ValueSpace::Numeric ? format_float(col.numbers[r])
                                                 : csv_field(col.strings[r]));
      }
      out << '\n';
    }
    if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
  }
  save_word_vectors(corpus.words, corpus.word_order, dir / "words.txt");
}

SyntheticCorpusConfig parse_synthetic_config(const std::filesystem::path& path) {
  const auto kv = KeyValueConfig::load(path);
  kv.require_known({"affine_variables", "distinct_variables", "boolean_variables",
                    "categorical_variables", "code_variables", "clustered_variables", "datasets_per_variable",
                    "samples_per_dataset", "seed"});
  SyntheticCorpusConfig cfg;
  cfg.affine_variables = kv.get_size("affine_variables", cfg.affine_variables);
  cfg.distinct_variables = kv.get_size("distinct_variables", cfg.distinct_variables);
  cfg.boolean_variables = kv.get_size("boolean_variables", cfg.boolean_variables);
  cfg.categorical_variables = kv.get_size("categorical_variables", cfg.categorical_variables);
  cfg.code_variables = kv.get_size("code_variables", cfg.code_variables);
  cfg.clustered_variables = kv.get_size("clustered_variables", cfg.clustered_variables);
  cfg.datasets_per_variable = kv.get_size("datasets_per_variable", cfg.datasets_per_variable);
  cfg.samples_per_dataset = kv.get_size("samples_per_dataset", cfg.samples_per_dataset);
  cfg.seed = kv.get_u64("seed", cfg.seed);
  return cfg;
}

}  // namespace varlens
