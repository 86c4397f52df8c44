#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "varlens/core.hpp"
#include "varlens/encode.hpp"

namespace varlens {

struct CsvOptions {
  char delimiter = ',';
  std::vector<std::string> missing_markers{"", "?", "NA"};
};

/// All rows of an RFC-4180 style delimited file, header included.
std::vector<std::vector<std::string>> read_delimited(const std::filesystem::path& path,
                                                     char delimiter = ',');

struct Table {
  std::string id;
  std::vector<ColumnDataset> columns;
};

/// One raw (string-valued, GeneralString-tagged) dataset per column with
/// missing cells dropped. Columns that end up empty are discarded with a
/// warning. Column ids are "<table_id>/<column index>".
std::vector<ColumnDataset> load_table(const std::filesystem::path& path,
                                      const std::string& table_id,
                                      const CsvOptions& options = {});

/// True iff `text` (after trimming) parses as a finite 32-bit float.
bool parse_finite_float(std::string_view text, float& out);

/// Numeric when >= 99% of values parse as finite floats; Language when more
/// than half the values are fully covered by `vocab`; GeneralString otherwise.
/// A null vocab never yields Language.
ValueSpace detect_value_space(const ColumnDataset& d, const WordVectorTable* vocab);

/// Re-tags a raw string dataset. For Numeric, unparseable cells are dropped.
ColumnDataset assign_value_space(ColumnDataset d, ValueSpace space);

/// detect_value_space + assign_value_space for every column.
Table classify_table(Table table, const WordVectorTable* vocab);

const std::vector<std::string>& default_name_stoplist();

/// Generic column labels that carry no information about the variable.
bool is_uninformative_name(std::string_view name,
                           const std::vector<std::string>& stoplist = default_name_stoplist());

double jaro(std::string_view a, std::string_view b);
double jaro_winkler(std::string_view a, std::string_view b);

/// Lowercased tokens split on non-alphanumerics and camelCase boundaries.
std::vector<std::string> tokenize_name(std::string_view name);

inline constexpr double kNameCosineThreshold = 0.9;
inline constexpr double kNameJaroWinklerThreshold = 0.95;

/// Name-based match: cosine of averaged word vectors when both names are
/// fully in-vocabulary, otherwise Jaro-Winkler on the lowercased names.
bool ground_truth_match(std::string_view a, std::string_view b, const WordVectorTable* vocab);

/// Symmetric match relation over dataset ids, derived from variable names
/// only. Uninformative names take part in no pair. Pairs that are not
/// annotated are negatives; self-pairs are never reported.
class GroundTruth {
 public:
  GroundTruth() = default;
  static GroundTruth build(std::span<const ColumnDataset> datasets, const WordVectorTable* vocab);

  /// Declares an extra positive pair (used for split halves).
  void add_match(const std::string& a, const std::string& b);

  bool match(const std::string& a, const std::string& b) const;
  const std::set<std::string>& matches_of(const std::string& id) const;
  bool has_match(const std::string& id) const { return !matches_of(id).empty(); }
  /// Every annotated pair once, as (smaller id, larger id), sorted.
  std::vector<std::pair<std::string, std::string>> pairs() const;
  std::size_t num_pairs() const;

 private:
  std::unordered_map<std::string, std::set<std::string>> adj_;
};

struct Corpus {
  std::vector<ColumnDataset> R;
  std::vector<ColumnDataset> T;
  std::vector<ColumnDataset> S;
};

/// Assigns whole tables to R (fraction `split_frac`, rounded) or T, then
/// halves `s_count` random R datasets: one half stays in R under the original
/// id, the other goes to S with id "<id>~s" and origin_id set.
Corpus partition_corpus(std::span<const Table> tables, double split_frac, std::size_t s_count,
                        std::uint64_t seed);

/// Removes every column whose name is uninformative.
std::vector<Table> drop_uninformative(std::vector<Table> tables);

}  // namespace varlens
