#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "varlens/baselines.hpp"
#include "varlens/ingest.hpp"
#include "varlens/simmodel.hpp"

namespace varlens {

/// Uniform pairwise scoring over embedding models and baselines. Datasets
/// reach the implementation with `variable_name` cleared, and pairs the
/// method cannot compare score D = inf, p = 0.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::string name() const = 0;
  virtual bool supports(ValueSpace space) const = 0;

  MatchScore score(const ColumnDataset& a, const ColumnDataset& b) const;
  /// scores[i][j] for queries[i] against repo[j].
  std::vector<std::vector<MatchScore>> score_all(std::span<const ColumnDataset> queries,
                                                 std::span<const ColumnDataset> repo) const;

 protected:
  virtual MatchScore score_blind(const ColumnDataset& a, const ColumnDataset& b) const = 0;
  /// Default loops over score_blind; embedding scorers embed each set once.
  virtual std::vector<std::vector<MatchScore>> score_all_blind(
      std::span<const ColumnDataset> queries, std::span<const ColumnDataset> repo) const;
};

class EmbeddingScorer : public Scorer {
 public:
  /// Models are borrowed and must outlive the scorer.
  explicit EmbeddingScorer(const WordVectorTable* words = nullptr) : words_(words) {}
  void add_model(const EmbeddingModel<float>& model);

  std::string name() const override { return "embed"; }
  bool supports(ValueSpace space) const override { return models_.contains(space); }

  /// Embedding with the space's model; nullopt when the space has no model
  /// or the dataset cannot be encoded.
  std::optional<DatasetEmbedding> embed(const ColumnDataset& d) const;

 protected:
  MatchScore score_blind(const ColumnDataset& a, const ColumnDataset& b) const override;
  std::vector<std::vector<MatchScore>> score_all_blind(
      std::span<const ColumnDataset> queries, std::span<const ColumnDataset> repo) const override;

 private:
  std::map<ValueSpace, const EmbeddingModel<float>*> models_;
  const WordVectorTable* words_;
};

class BaselineScorer : public Scorer {
 public:
  BaselineScorer(BaselineMethod method, const WordVectorTable* words = nullptr,
                 BaselineConfig cfg = {})
      : method_(method), words_(words), cfg_(cfg) {}

  std::string name() const override { return std::string(to_string(method_)); }
  bool supports(ValueSpace space) const override { return applicable(method_, space); }

 protected:
  MatchScore score_blind(const ColumnDataset& a, const ColumnDataset& b) const override;

 private:
  BaselineMethod method_;
  const WordVectorTable* words_;
  BaselineConfig cfg_;
};

/// Mann-Whitney AUC: (wins + ties / 2) / (|pos| |neg|).
double auc(std::span<const double> pos, std::span<const double> neg);

enum class PairMode : std::uint8_t { Split, Diff };

std::string_view to_string(PairMode mode);
PairMode parse_pair_mode(std::string_view text);

struct LabeledPair {
  ColumnDataset left;
  ColumnDataset right;
  int y = 0;
};

/// Positive and negative pairs for one mode.
///   Split: both halves of one dataset cut into equal sizes.
///   Diff:  annotated matches from different tables.
/// Negatives are dataset pairs with non-matching names, from different tables
/// when the corpus has any; in Split mode each negative side is a random half
/// so pair sizes agree with the positives. Fewer candidates than n_pairs use
/// every candidate once; none at all is a shortage error.
std::vector<LabeledPair> build_pairs(std::span<const ColumnDataset> data, const GroundTruth& gt,
                                     PairMode mode, std::size_t n_pairs, std::uint64_t seed);

struct FractionAuc {
  double fraction = 1.0;
  double auc = 0.5;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// AUC of the scorer's p over build_pairs output, after subsampling every
/// dataset to ceil(f |d|) for each fraction f.
std::vector<FractionAuc> eval_pairs(const Scorer& scorer, std::span<const ColumnDataset> data,
                                    const GroundTruth& gt, PairMode mode,
                                    std::span<const double> fractions, std::size_t n_pairs,
                                    std::uint64_t seed);
std::vector<FractionAuc> eval_pairs(const Scorer& scorer, std::span<const LabeledPair> pairs,
                                    std::span<const double> fractions, std::uint64_t seed);

inline constexpr std::size_t kDefaultKs[] = {1, 5, 10};

struct MatchesAtK {
  std::vector<std::size_t> ks;
  std::vector<double> mean_matches;  // per k
  std::size_t queries = 0;
};

/// Mean number of annotated matches among each query's top-k repository
/// datasets (ranked by p, ties by id). Every query needs a match in `repo`.
MatchesAtK matches_at_k(const Scorer& scorer, std::span<const ColumnDataset> queries,
                        std::span<const ColumnDataset> repo, const GroundTruth& gt,
                        std::span<const std::size_t> ks = kDefaultKs);

struct CalibratedRecall {
  double recall = 0.0;
  double threshold = 0.0;  // mean of the per-query maxima
  std::vector<std::pair<std::string, double>> max_p;  // per no-match query
  std::size_t matched_pairs = 0;
};

/// The threshold is the mean over no-match queries of their best p against
/// the repository; recall is the fraction of annotated (query, repository)
/// pairs scoring strictly above it.
CalibratedRecall calibrated_recall(const Scorer& scorer, std::span<const ColumnDataset> nomatch,
                                   std::span<const ColumnDataset> repo,
                                   std::span<const std::pair<ColumnDataset, ColumnDataset>> matched);

/// All (id, g) over the repository, descending in g, ties by id.
std::vector<std::pair<std::string, double>> g_diagnostics(const EmbeddingModel<float>& model,
                                                          std::span<const ColumnDataset> repo,
                                                          const WordVectorTable* words);

/// Chi-square test that p-values are uniform. Bin edges sit at the observed
/// p-values nearest the deciles, so discrete statistics whose p-values only
/// take certain values are binned at points where a valid p-value has
/// P(p <= e) = e.
double uniformity_test(std::vector<double> p_values, int bins = 10);

struct SyntheticCorpusConfig {
  std::size_t affine_variables = 10;       // (a) shared base law, per-dataset affine map
  std::size_t distinct_variables = 10;     // (b) numeric, one law per variable
  std::size_t boolean_variables = 0;       // (c) yes/no, Bernoulli(0.5), all alike
  std::size_t categorical_variables = 0;   // (d) words from a private vocabulary
  std::size_t code_variables = 0;          // short alphanumeric codes (general strings)
  std::size_t clustered_variables = 0;     // words near a shared centre, one vocabulary slice per dataset
  std::size_t datasets_per_variable = 10;  // one table per dataset index
  std::size_t samples_per_dataset = 2000;
  std::uint64_t seed = 0;

  friend bool operator==(const SyntheticCorpusConfig&, const SyntheticCorpusConfig&) = default;
};

enum class Archetype : std::uint8_t { Affine, Distinct, Boolean, Categorical, Code, Clustered };

std::string_view to_string(Archetype a);

struct SyntheticVariable {
  std::string name;
  Archetype archetype = Archetype::Affine;
  ValueSpace space = ValueSpace::Numeric;
};

struct SyntheticCorpus {
  std::vector<Table> tables;
  std::vector<SyntheticVariable> variables;  // column j of every table
  WordVectorTable words;
  std::vector<std::string> word_order;  // file order for the word list

  /// All datasets, table by table.
  std::vector<ColumnDataset> datasets() const;
  /// Ground truth derived from the column names, as ingest would.
  GroundTruth ground_truth() const;
  Archetype archetype_of(const ColumnDataset& d) const;
};

inline constexpr int kSyntheticWordDim = kEmbeddingDim;

/// Deterministic per seed. Variable names are pseudo-words with pairwise
/// Jaro-Winkler below the match threshold and outside the word list, so the
/// name-derived ground truth is exactly "same variable".
SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusConfig& cfg);

/// tables/<id>.csv plus words.txt; identical corpora give identical bytes.
void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

/// Reads "key = value" lines (blank lines and # comments ignored).
SyntheticCorpusConfig parse_synthetic_config(const std::filesystem::path& path);

}  // namespace varlens
