#include "varlens/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace varlens {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::vector<std::string>> read_delimited(const std::filesystem::path& path,
                                                     char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorCode::kIoError, "cannot read " + path.string());
  std::string text = buf.str();
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      // CRLF: handled by the following '\n'.
    } else if (c == '\n') {
      end_row();
      ++line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) {
    fail(ErrorCode::kFormatError,
         path.string() + ":" + std::to_string(line) + ": unterminated quoted field");
  }
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::vector<ColumnDataset> load_table(const std::filesystem::path& path,
                                      const std::string& table_id, const CsvOptions& options) {
  auto rows = read_delimited(path, options.delimiter);
  if (rows.empty() || (rows[0].size() == 1 && trim(rows[0][0]).empty())) {
    fail(ErrorCode::kFormatError, path.string() + ": header row missing");
  }
  const auto& header = rows[0];
  const std::size_t width = header.size();
  std::vector<ColumnDataset> cols(width);
  for (std::size_t c = 0; c < width; ++c) {
    cols[c].id = table_id + "/" + std::to_string(c);
    cols[c].table_id = table_id;
    cols[c].variable_name = std::string(trim(header[c]));
    cols[c].space = ValueSpace::GeneralString;
  }
  auto is_missing = [&](const std::string& cell) {
    return std::find(options.missing_markers.begin(), options.missing_markers.end(), cell) !=
           options.missing_markers.end();
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    if (row.size() > width) {
      fail(ErrorCode::kFormatError, path.string() + ": row " + std::to_string(r + 1) + " has " +
                                        std::to_string(row.size()) + " fields, header has " +
                                        std::to_string(width));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!is_missing(row[c])) cols[c].strings.push_back(row[c]);
    }
  }
  std::vector<ColumnDataset> out;
  for (auto& col : cols) {
    if (col.strings.empty()) {
      warn("column '" + col.variable_name + "' of table " + table_id +
           " is empty after missing-value removal; discarded");
      continue;
    }
    out.push_back(std::move(col));
  }
  return out;
}

bool parse_finite_float(std::string_view text, float& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

ValueSpace detect_value_space(const ColumnDataset& d, const WordVectorTable* vocab) {
  if (d.space == ValueSpace::Numeric) return ValueSpace::Numeric;
  if (d.strings.empty()) fail(ErrorCode::kInvalidArgument, "cannot classify an empty dataset");
  std::size_t numeric = 0;
  float tmp;
  for (const auto& s : d.strings) numeric += parse_finite_float(s, tmp) ? 1 : 0;
  if (static_cast<double>(numeric) >= 0.99 * static_cast<double>(d.strings.size())) {
    return ValueSpace::Numeric;
  }
  if (vocab != nullptr && vocabulary_coverage(d, *vocab) > 0.5) return ValueSpace::Language;
  return ValueSpace::GeneralString;
}

ColumnDataset assign_value_space(ColumnDataset d, ValueSpace space) {
  if (d.space == space) return d;
  if (d.space == ValueSpace::Numeric) {
    fail(ErrorCode::kInvalidArgument, "cannot re-tag a numeric dataset as a string space");
  }
  if (space == ValueSpace::Numeric) {
    std::vector<float> values;
    values.reserve(d.strings.size());
    float v;
    std::size_t dropped = 0;
    for (const auto& s : d.strings) {
      if (parse_finite_float(s, v)) {
        values.push_back(v);
      } else {
        ++dropped;
      }
    }
    if (dropped > 0) {
      warn("dataset " + d.id + ": dropped " + std::to_string(dropped) +
           " non-numeric cells as missing");
    }
    d.numbers = std::move(values);
    d.strings.clear();
  }
  d.space = space;
  return d;
}

Table classify_table(Table table, const WordVectorTable* vocab) {
  for (auto& col : table.columns) {
    const ValueSpace space = detect_value_space(col, vocab);
    col = assign_value_space(std::move(col), space);
  }
  return table;
}

const std::vector<std::string>& default_name_stoplist() {
  static const std::vector<std::string> kStoplist{"attribute", "variable", "column", "col",
                                                  "field",     "value",    "var",    "id",
                                                  "x",         "y"};
  return kStoplist;
}

bool is_uninformative_name(std::string_view name, const std::vector<std::string>& stoplist) {
  const std::string lower = to_lower(trim(name));
  if (lower.size() < 3) return true;
  return std::find(stoplist.begin(), stoplist.end(), lower) != stoplist.end();
}

double jaro(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  const std::ptrdiff_t la = static_cast<std::ptrdiff_t>(a.size());
  const std::ptrdiff_t lb = static_cast<std::ptrdiff_t>(b.size());
  const std::ptrdiff_t window = std::max<std::ptrdiff_t>(0, std::max(la, lb) / 2 - 1);
  std::vector<bool> a_hit(a.size(), false), b_hit(b.size(), false);
  std::size_t matches = 0;
  for (std::ptrdiff_t i = 0; i < la; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
    const std::ptrdiff_t hi = std::min(lb - 1, i + window);
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      if (!b_hit[j] && a[i] == b[j]) {
        a_hit[i] = b_hit[j] = true;
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;
  std::size_t half_transpositions = 0;
  std::size_t k = 0;
  for (std::ptrdiff_t i = 0; i < la; ++i) {
    if (!a_hit[i]) continue;
    while (!b_hit[k]) ++k;
    if (a[i] != b[k]) ++half_transpositions;
    ++k;
  }
  const double m = static_cast<double>(matches);
  const double t = static_cast<double>(half_transpositions) / 2.0;
  return (m / la + m / lb + (m - t) / m) / 3.0;
}

double jaro_winkler(std::string_view a, std::string_view b) {
  const double j = jaro(a, b);
  std::size_t prefix = 0;
  while (prefix < 4 && prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) {
    ++prefix;
  }
  return j + static_cast<double>(prefix) * 0.1 * (1.0 - j);
}

std::vector<std::string> tokenize_name(std::string_view name) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(to_lower(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < name.size(); ++i) {
    const auto c = static_cast<unsigned char>(name[i]);
    if (!std::isalnum(c)) {
      flush();
      continue;
    }
    if (std::isupper(c) && i > 0 && !cur.empty()) {
      const auto prev = static_cast<unsigned char>(name[i - 1]);
      const bool next_lower =
          i + 1 < name.size() && std::islower(static_cast<unsigned char>(name[i + 1]));
      if (std::islower(prev) || std::isdigit(prev) || (std::isupper(prev) && next_lower)) flush();
    }
    cur.push_back(static_cast<char>(c));
  }
  flush();
  return tokens;
}

namespace {

std::optional<std::vector<double>> mean_name_vector(const std::vector<std::string>& tokens,
                                                    const WordVectorTable& vocab) {
  if (tokens.empty()) return std::nullopt;
  std::vector<double> sum(vocab.dim(), 0.0);
  for (const auto& t : tokens) {
    auto vec = vocab.lookup(t);
    if (!vec) return std::nullopt;
    for (int k = 0; k < vocab.dim(); ++k) sum[k] += (*vec)[k];
  }
  for (double& v : sum) v /= static_cast<double>(tokens.size());
  return sum;
}

}  // namespace

bool ground_truth_match(std::string_view a, std::string_view b, const WordVectorTable* vocab) {
  if (vocab != nullptr) {
    auto va = mean_name_vector(tokenize_name(a), *vocab);
    auto vb = mean_name_vector(tokenize_name(b), *vocab);
    if (va && vb) {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t k = 0; k < va->size(); ++k) {
        dot += (*va)[k] * (*vb)[k];
        na += (*va)[k] * (*va)[k];
        nb += (*vb)[k] * (*vb)[k];
      }
      if (na == 0.0 || nb == 0.0) return false;
      return dot / std::sqrt(na * nb) >= kNameCosineThreshold - 1e-12;
    }
  }
  return jaro_winkler(to_lower(trim(a)), to_lower(trim(b))) >= kNameJaroWinklerThreshold;
}

GroundTruth GroundTruth::build(std::span<const ColumnDataset> datasets,
                               const WordVectorTable* vocab) {
  GroundTruth gt;
  // Unique (space, name) groups; names are compared once per group pair.
  std::map<std::pair<ValueSpace, std::string>, std::vector<std::size_t>> groups;
  // uninformative names never produce annotations
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    if (is_uninformative_name(datasets[i].variable_name)) continue;
    groups[{datasets[i].space, datasets[i].variable_name}].push_back(i);
  }
  std::vector<const std::pair<const std::pair<ValueSpace, std::string>,
                              std::vector<std::size_t>>*>
      entries;
  for (const auto& e : groups) entries.push_back(&e);

  auto link_groups = [&](const std::vector<std::size_t>& ga, const std::vector<std::size_t>& gb) {
    for (std::size_t i : ga) {
      for (std::size_t j : gb) {
        if (i != j && datasets[i].id != datasets[j].id) {
          gt.add_match(datasets[i].id, datasets[j].id);
        }
      }
    }
  };
  for (std::size_t x = 0; x < entries.size(); ++x) {
    const auto& [key_x, members_x] = *entries[x];
    link_groups(members_x, members_x);
    for (std::size_t y = x + 1; y < entries.size(); ++y) {
      const auto& [key_y, members_y] = *entries[y];
      if (key_x.first != key_y.first) continue;
      if (ground_truth_match(key_x.second, key_y.second, vocab)) link_groups(members_x, members_y);
    }
  }
  return gt;
}

void GroundTruth::add_match(const std::string& a, const std::string& b) {
  if (a == b) return;
  adj_[a].insert(b);
  adj_[b].insert(a);
}

bool GroundTruth::match(const std::string& a, const std::string& b) const {
  if (a == b) return false;
  auto it = adj_.find(a);
  return it != adj_.end() && it->second.count(b) > 0;
}

const std::set<std::string>& GroundTruth::matches_of(const std::string& id) const {
  static const std::set<std::string> kEmpty;
  auto it = adj_.find(id);
  return it == adj_.end() ? kEmpty : it->second;
}

std::vector<std::pair<std::string, std::string>> GroundTruth::pairs() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [a, bs] : adj_) {
    for (const auto& b : bs) {
      if (a < b) out.emplace_back(a, b);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t GroundTruth::num_pairs() const {
  std::size_t n = 0;
  for (const auto& [a, bs] : adj_) n += bs.size();
  return n / 2;
}

Corpus partition_corpus(std::span<const Table> tables, double split_frac, std::size_t s_count,
                        std::uint64_t seed) {
  if (!(split_frac > 0.0 && split_frac < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "split_frac must lie strictly between 0 and 1");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(tables.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_r = static_cast<std::size_t>(
      std::llround(split_frac * static_cast<double>(tables.size())));

  Corpus corpus;
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& dest = k < n_r ? corpus.R : corpus.T;
    for (const auto& col : tables[order[k]].columns) dest.push_back(col);
  }

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < corpus.R.size(); ++i) {
    if (corpus.R[i].size() >= 2) eligible.push_back(i);
  }
  if (s_count > eligible.size()) {
    fail(ErrorCode::kInvalidArgument, "s_count " + std::to_string(s_count) + " exceeds the " +
                                          std::to_string(eligible.size()) +
                                          " splittable R datasets");
  }
  std::shuffle(eligible.begin(), eligible.end(), rng);
  eligible.resize(s_count);
  std::sort(eligible.begin(), eligible.end());
  for (std::size_t i : eligible) {
    ColumnDataset& original = corpus.R[i];
    std::vector<std::size_t> perm(original.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t half = perm.size() / 2;
    std::vector<std::size_t> keep(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<std::size_t> moved(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end());
    std::sort(keep.begin(), keep.end());
    std::sort(moved.begin(), moved.end());
    ColumnDataset split = select_values(original, moved);
    split.id = original.id + "~s";
    split.origin_id = original.id;
    original = select_values(original, keep);
    corpus.S.push_back(std::move(split));
  }
  return corpus;
}

std::vector<Table> drop_uninformative(std::vector<Table> tables) {
  for (auto& t : tables) {
    std::erase_if(t.columns,
                  [](const ColumnDataset& d) { return is_uninformative_name(d.variable_name); });
  }
  return tables;
}

}  // namespace varlens
