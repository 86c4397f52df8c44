#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "varlens/core.hpp"

namespace varlens {

inline constexpr int kNumericBits = 32;

/// IEEE-754 single-precision bit pattern of `x`, sign bit first, as 0/1
/// features. Non-finite values are rejected.
std::array<float, kNumericBits> encode_numeric_bits(float x);

/// Pretrained word vectors in the standard text format ("count dim" header,
/// then one token and `dim` decimals per line). Lookups are lowercased.
class WordVectorTable {
 public:
  WordVectorTable() = default;
  explicit WordVectorTable(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }

  /// Inserts or replaces a vector; the token is lowercased.
  void insert(std::string_view token, std::vector<float> vec);

  /// Absent tokens yield std::nullopt, never a zero vector.
  std::optional<std::span<const float>> lookup(std::string_view token) const;
  bool contains(std::string_view token) const { return lookup(token).has_value(); }

 private:
  int dim_ = kEmbeddingDim;
  std::unordered_map<std::string, std::vector<float>> entries_;
};

/// Reads a word-vector file. `expected_dim` overrides the required dimension
/// (300 unless a test fixture says otherwise).
WordVectorTable load_word_vectors(const std::filesystem::path& path,
                                  int expected_dim = kEmbeddingDim);
void save_word_vectors(const WordVectorTable& table, std::span<const std::string> order,
                       const std::filesystem::path& path);

std::string to_lower(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

/// Mean of the in-vocabulary token vectors of a text field, or nullopt when
/// no token is in the vocabulary.
std::optional<std::vector<float>> embed_text_field(std::string_view field,
                                                   const WordVectorTable& vocab);

/// True iff the field has at least one token and every token is in vocab.
bool fully_in_vocabulary(std::string_view field, const WordVectorTable& vocab);

/// Fraction of instances whose every whitespace token is in the vocabulary.
double vocabulary_coverage(const ColumnDataset& d, const WordVectorTable& vocab);

/// Byte alphabet for the character-level encoder. Index 0 is the unknown
/// symbol; observed bytes get indices 1..n in ascending byte order.
class CharVocabulary {
 public:
  CharVocabulary();
  static CharVocabulary from_bytes(std::span<const std::uint8_t> alphabet);
  static CharVocabulary build(std::span<const ColumnDataset> datasets);

  int size() const { return static_cast<int>(alphabet_.size()) + 1; }
  int index_of(std::uint8_t byte) const { return index_[byte]; }
  const std::vector<std::uint8_t>& alphabet() const { return alphabet_; }

 private:
  std::vector<std::uint8_t> alphabet_;
  std::array<int, 256> index_{};
};

inline constexpr std::size_t kDefaultCharCap = 64;

struct EncodedChars {
  std::vector<int> indices;
  bool truncated = false;
};

EncodedChars encode_chars(std::string_view s, const CharVocabulary& vocab,
                          std::size_t cap = kDefaultCharCap);

}  // namespace varlens
