#include "varlens/core.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

namespace varlens {

std::string_view error_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidValue: return "invalid-value";
    case ErrorCode::kIoError: return "io-error";
    case ErrorCode::kFormatError: return "format-error";
    case ErrorCode::kConfigError: return "config-error";
    case ErrorCode::kUnsupportedVersion: return "unsupported-version";
    case ErrorCode::kSamplingError: return "sampling-error";
    case ErrorCode::kNotComparable: return "not-comparable";
    case ErrorCode::kShortage: return "shortage";
    case ErrorCode::kDivergence: return "divergence";
  }
  return "unknown";
}

namespace {
void stderr_sink(std::string_view message) {
  std::fprintf(stderr, "warning: %.*s\n", static_cast<int>(message.size()), message.data());
}
WarningSink g_sink = &stderr_sink;
}  // namespace

void set_warning_sink(WarningSink sink) { g_sink = sink ? sink : &stderr_sink; }
void warn(std::string_view message) { g_sink(message); }

std::string_view to_string(ValueSpace space) {
  switch (space) {
    case ValueSpace::Numeric: return "numeric";
    case ValueSpace::Language: return "language";
    case ValueSpace::GeneralString: return "string";
  }
  return "numeric";
}

ValueSpace parse_value_space(std::string_view text) {
  if (text == "numeric") return ValueSpace::Numeric;
  if (text == "language") return ValueSpace::Language;
  if (text == "string") return ValueSpace::GeneralString;
  fail(ErrorCode::kInvalidArgument, "unknown value space '" + std::string(text) + "'");
}

std::string_view to_string(Partition partition) {
  switch (partition) {
    case Partition::R: return "R";
    case Partition::T: return "T";
    case Partition::S: return "S";
  }
  return "R";
}

Partition parse_partition(std::string_view text) {
  if (text == "R") return Partition::R;
  if (text == "T") return Partition::T;
  if (text == "S") return Partition::S;
  fail(ErrorCode::kInvalidArgument, "unknown partition '" + std::string(text) + "'");
}

ColumnDataset make_numeric(std::string id, std::string table_id, std::string name,
                           std::vector<float> values) {
  ColumnDataset d;
  d.id = std::move(id);
  d.table_id = std::move(table_id);
  d.variable_name = std::move(name);
  d.space = ValueSpace::Numeric;
  d.numbers = std::move(values);
  return d;
}

ColumnDataset make_strings(std::string id, std::string table_id, std::string name,
                           ValueSpace space, std::vector<std::string> values) {
  if (space == ValueSpace::Numeric) {
    fail(ErrorCode::kInvalidArgument, "make_strings requires a string value space");
  }
  ColumnDataset d;
  d.id = std::move(id);
  d.table_id = std::move(table_id);
  d.variable_name = std::move(name);
  d.space = space;
  d.strings = std::move(values);
  return d;
}

ColumnDataset select_values(const ColumnDataset& d, std::span<const std::size_t> positions) {
  ColumnDataset out;
  out.id = d.id;
  out.table_id = d.table_id;
  out.variable_name = d.variable_name;
  out.origin_id = d.origin_id;
  out.space = d.space;
  if (d.space == ValueSpace::Numeric) {
    out.numbers.reserve(positions.size());
    for (std::size_t i : positions) out.numbers.push_back(d.numbers.at(i));
  } else {
    out.strings.reserve(positions.size());
    for (std::size_t i : positions) out.strings.push_back(d.strings.at(i));
  }
  return out;
}

ColumnDataset subsample(const ColumnDataset& d, std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(ErrorCode::kInvalidArgument, "subsample size must be >= 1");
  if (d.size() <= n) return d;
  std::vector<std::size_t> all(d.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), n, rng);
  return select_values(d, chosen);
}

double concentration_epsilon(std::size_t n, double bound_b, double delta) {
  if (n == 0 || delta <= 0.0 || delta >= 4.0) {
    fail(ErrorCode::kInvalidArgument, "concentration_epsilon needs n >= 1 and 0 < delta < 4");
  }
  return bound_b * std::sqrt(32.0 * std::log(4.0 / delta) / static_cast<double>(n));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  // splitmix64 finalizer over a combination of both inputs
  std::uint64_t x = base ^ (salt * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace varlens
