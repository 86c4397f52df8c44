#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varlens/error.hpp"

namespace varlens {

inline constexpr int kEmbeddingDim = 300;

enum class ValueSpace : std::uint8_t { Numeric = 0, Language = 1, GeneralString = 2 };

std::string_view to_string(ValueSpace space);
ValueSpace parse_value_space(std::string_view text);

enum class Partition : std::uint8_t { R = 0, T = 1, S = 2 };

std::string_view to_string(Partition partition);
Partition parse_partition(std::string_view text);

/// One column of a table: the univariate multiset of values produced by a
/// single variable. `variable_name` is ground-truth metadata only; scorers
/// never read it.
struct ColumnDataset {
  std::string id;
  std::string table_id;
  std::string variable_name;
  /// Id of the dataset this one was split from (empty for original columns).
  std::string origin_id;
  ValueSpace space = ValueSpace::Numeric;
  std::vector<float> numbers;        // used when space == Numeric
  std::vector<std::string> strings;  // used otherwise

  std::size_t size() const {
    return space == ValueSpace::Numeric ? numbers.size() : strings.size();
  }
  bool empty() const { return size() == 0; }
};

ColumnDataset make_numeric(std::string id, std::string table_id, std::string name,
                           std::vector<float> values);
ColumnDataset make_strings(std::string id, std::string table_id, std::string name,
                           ValueSpace space, std::vector<std::string> values);

/// Copy of `d` restricted to the given value positions (in the given order).
ColumnDataset select_values(const ColumnDataset& d, std::span<const std::size_t> positions);

/// Match score D >= 0 and p = exp(-D).
struct MatchScore {
  double d = 0.0;
  double p = 1.0;

  static MatchScore from_distance(double distance) {
    return MatchScore{distance, std::exp(-distance)};
  }
};

/// Deep-sets summary of one dataset: mean embedding h and adjustment g >= 0.
struct DatasetEmbedding {
  std::vector<double> h;
  double g = 0.0;
};

/// Uniform subsample without replacement of at most `n` values. Datasets of
/// size <= n are returned unchanged. Deterministic for a fixed seed; the
/// retained values keep their original relative order.
ColumnDataset subsample(const ColumnDataset& d, std::size_t n, std::uint64_t seed);

/// Independent child seed for stream `salt` of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

/// Deviation bound eps(n) at failure probability `delta` for subsampled
/// embedding distances: solves 4 exp(-n eps^2 / (32 B^2)) = delta.
double concentration_epsilon(std::size_t n, double bound_b, double delta = 0.01);

}  // namespace varlens
