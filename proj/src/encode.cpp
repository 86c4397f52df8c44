#include "varlens/encode.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace varlens {

std::array<float, kNumericBits> encode_numeric_bits(float x) {
  if (!std::isfinite(x)) fail(ErrorCode::kInvalidValue, "cannot encode a non-finite value");
  const auto bits = std::bit_cast<std::uint32_t>(x);
  std::array<float, kNumericBits> out{};
  for (int i = 0; i < kNumericBits; ++i) {
    out[i] = ((bits >> (kNumericBits - 1 - i)) & 1u) ? 1.0f : 0.0f;
  }
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

void WordVectorTable::insert(std::string_view token, std::vector<float> vec) {
  if (static_cast<int>(vec.size()) != dim_) {
    fail(ErrorCode::kInvalidArgument, "word vector dimension mismatch for '" +
                                          std::string(token) + "'");
  }
  entries_[to_lower(token)] = std::move(vec);
}

std::optional<std::span<const float>> WordVectorTable::lookup(std::string_view token) const {
  auto it = entries_.find(to_lower(token));
  if (it == entries_.end()) return std::nullopt;
  return std::span<const float>(it->second);
}

WordVectorTable load_word_vectors(const std::filesystem::path& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open word-vector file " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorCode::kFormatError, path.string() + ":1: missing 'count dim' header");
  }
  std::istringstream header(line);
  long long count = -1;
  int dim = -1;
  if (!(header >> count >> dim) || count < 0 || dim <= 0) {
    fail(ErrorCode::kFormatError, path.string() + ":1: malformed 'count dim' header");
  }
  if (dim != expected_dim) {
    fail(ErrorCode::kConfigError, "word vectors have dimension " + std::to_string(dim) +
                                      ", expected " + std::to_string(expected_dim));
  }

  WordVectorTable table(dim);
  long long seen = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_whitespace(line);
    auto bad = [&](const std::string& why) {
      fail(ErrorCode::kFormatError,
           path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    if (static_cast<int>(fields.size()) != dim + 1) {
      bad("expected token and " + std::to_string(dim) + " values, got " +
          std::to_string(fields.size()) + " fields");
    }
    std::vector<float> vec(dim);
    for (int k = 0; k < dim; ++k) {
      const std::string& f = fields[k + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), vec[k]);
      if (ec != std::errc() || ptr != f.data() + f.size()) bad("bad number '" + f + "'");
    }
    if (table.contains(fields[0])) warn("duplicate word vector '" + fields[0] + "'; last wins");
    table.insert(fields[0], std::move(vec));
    ++seen;
  }
  if (seen != count) {
    fail(ErrorCode::kFormatError, path.string() + ": header declares " +
                                      std::to_string(count) + " entries, found " +
                                      std::to_string(seen));
  }
  return table;
}

void save_word_vectors(const WordVectorTable& table, std::span<const std::string> order,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << order.size() << ' ' << table.dim() << '\n';
  char buf[32];
  for (const auto& token : order) {
    auto vec = table.lookup(token);
    if (!vec) fail(ErrorCode::kInvalidArgument, "token '" + token + "' not in table");
    out << to_lower(token);
    for (float v : *vec) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out << ' ' << std::string_view(buf, ptr - buf);
    }
    out << '\n';
  }
}

std::optional<std::vector<float>> embed_text_field(std::string_view field,
                                                   const WordVectorTable& vocab) {
  std::vector<float> sum;
  int hits = 0;
  for (const auto& token : split_whitespace(field)) {
    auto vec = vocab.lookup(token);
    if (!vec) continue;
    if (sum.empty()) sum.assign(vec->size(), 0.0f);
    for (std::size_t k = 0; k < vec->size(); ++k) sum[k] += (*vec)[k];
    ++hits;
  }
  if (hits == 0) return std::nullopt;
  for (float& v : sum) v /= static_cast<float>(hits);
  return sum;
}

bool fully_in_vocabulary(std::string_view field, const WordVectorTable& vocab) {
  const auto tokens = split_whitespace(field);
  if (tokens.empty()) return false;
  return std::all_of(tokens.begin(), tokens.end(),
                     [&](const std::string& t) { return vocab.contains(t); });
}

double vocabulary_coverage(const ColumnDataset& d, const WordVectorTable& vocab) {
  if (d.space == ValueSpace::Numeric) {
    fail(ErrorCode::kInvalidArgument, "vocabulary_coverage needs a string dataset");
  }
  if (d.strings.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : d.strings) hits += fully_in_vocabulary(s, vocab) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(d.strings.size());
}

CharVocabulary::CharVocabulary() { index_.fill(0); }

CharVocabulary CharVocabulary::from_bytes(std::span<const std::uint8_t> alphabet) {
  CharVocabulary v;
  std::vector<std::uint8_t> sorted(alphabet.begin(), alphabet.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  v.alphabet_ = std::move(sorted);
  for (std::size_t i = 0; i < v.alphabet_.size(); ++i) {
    v.index_[v.alphabet_[i]] = static_cast<int>(i) + 1;
  }
  return v;
}

CharVocabulary CharVocabulary::build(std::span<const ColumnDataset> datasets) {
  std::array<bool, 256> seen{};
  for (const auto& d : datasets) {
    for (const auto& s : d.strings) {
      for (unsigned char c : s) seen[c] = true;
    }
  }
  std::vector<std::uint8_t> bytes;
  for (int b = 0; b < 256; ++b) {
    if (seen[b]) bytes.push_back(static_cast<std::uint8_t>(b));
  }
  return from_bytes(bytes);
}

EncodedChars encode_chars(std::string_view s, const CharVocabulary& vocab, std::size_t cap) {
  if (s.empty()) fail(ErrorCode::kInvalidValue, "cannot encode an empty string");
  EncodedChars out;
  const std::size_t n = std::min(s.size(), cap);
  out.truncated = s.size() > cap;
  out.indices.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.indices.push_back(vocab.index_of(static_cast<std::uint8_t>(s[i])));
  }
  return out;
}

}  // namespace varlens
