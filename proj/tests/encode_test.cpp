#include "varlens/encode.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <unistd.h>

namespace varlens {
namespace {

namespace fs = std::filesystem;

float from_features(const std::array<float, kNumericBits>& f) {
  std::uint32_t bits = 0;
  for (int i = 0; i < kNumericBits; ++i) bits = (bits << 1) | (f[static_cast<std::size_t>(i)] > 0.5f ? 1u : 0u);
  return std::bit_cast<float>(bits);
}

TEST(NumericBitsTest, Examples) {
  const auto zero = encode_numeric_bits(0.0f);
  for (float b : zero) EXPECT_EQ(b, 0.0f);
  const auto neg = encode_numeric_bits(-0.0f);
  EXPECT_EQ(neg[0], 1.0f);
  for (int i = 1; i < kNumericBits; ++i) EXPECT_EQ(neg[static_cast<std::size_t>(i)], 0.0f);
  // 1.0f = 0 01111111 000...0
  const auto one = encode_numeric_bits(1.0f);
  for (int i = 0; i < kNumericBits; ++i) {
    EXPECT_EQ(one[static_cast<std::size_t>(i)], (i >= 2 && i <= 8) ? 1.0f : 0.0f) << i;
  }
  EXPECT_THROW(encode_numeric_bits(std::numeric_limits<float>::infinity()), Error);
  EXPECT_THROW(encode_numeric_bits(std::numeric_limits<float>::quiet_NaN()), Error);
}

TEST(NumericBitsTest, RoundTripsThroughBits) {
  std::mt19937 rng(1);
  for (int rep = 0; rep < 10000; ++rep) {
    float x;
    do {
      x = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
    } while (!std::isfinite(x));
    const float back = from_features(encode_numeric_bits(x));
    EXPECT_EQ(std::bit_cast<std::uint32_t>(back), std::bit_cast<std::uint32_t>(x));
  }
}

class WordFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    path_ = fs::temp_directory_path() / ("varlens_words_" + std::to_string(::getpid()) + ".txt");
  }
  void TearDown() override { fs::remove(path_); }
  void write(const std::string& text) { std::ofstream(path_) << text; }
  ErrorCode load_error(int dim) {
    try {
      load_word_vectors(path_, dim);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kDivergence;
  }
  fs::path path_;
};

TEST_F(WordFileTest, DeclaredCount) {
  std::string text = "2 300\n";
  for (const char* w : {"alpha", "Beta"}) {
    text += w;
    for (int i = 0; i < 300; ++i) text += " " + std::to_string(i % 7) + ".25";
    text += "\n";
  }
  write(text);
  const auto t = load_word_vectors(path_);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.dim(), 300);
  ASSERT_TRUE(t.lookup("BETA"));
  EXPECT_EQ((*t.lookup("beta"))[8], 1.25f);
  EXPECT_FALSE(t.lookup("gamma").has_value());
}

TEST_F(WordFileTest, DimensionOverrideAndErrors) {
  write("1 3\nred 1 0 0\n");
  EXPECT_EQ(load_word_vectors(path_, 3).size(), 1u);
  EXPECT_EQ(load_error(300), ErrorCode::kConfigError);
  write("2 3\nred 1 0 0\nblue 0 1\n");
  try {
    load_word_vectors(path_, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormatError);
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos);
  }
  write("2 3\nred 1 0 x\nblue 0 1 0\n");
  EXPECT_EQ(load_error(3), ErrorCode::kFormatError);
  write("");
  EXPECT_EQ(load_error(3), ErrorCode::kFormatError);
  fs::remove(path_);
  EXPECT_EQ(load_error(3), ErrorCode::kIoError);
}

TEST_F(WordFileTest, SaveLoadRoundTrip) {
  WordVectorTable t(4);
  t.insert("one", {0.1f, -2.5f, 3e-7f, 1e8f});
  t.insert("two", {1, 2, 3, 4});
  const std::vector<std::string> order = {"two", "one"};
  save_word_vectors(t, order, path_);
  const auto back = load_word_vectors(path_, 4);
  for (const auto& w : order) {
    const auto a = *t.lookup(w), b = *back.lookup(w);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

WordVectorTable tiny() {
  WordVectorTable w(2);
  w.insert("red", {1, 0});
  w.insert("blue", {0, 1});
  w.insert("dark", {2, 2});
  return w;
}

TEST(TextFieldTest, Averages) {
  const auto w = tiny();
  EXPECT_EQ(*embed_text_field("red", w), (std::vector<float>{1, 0}));
  EXPECT_EQ(*embed_text_field("red  blue", w), (std::vector<float>{0.5f, 0.5f}));
  EXPECT_EQ(*embed_text_field("dark zzz red", w), (std::vector<float>{1.5f, 1.0f}));  // oov skipped
  EXPECT_EQ(*embed_text_field("blue red", w), *embed_text_field("red blue", w));
  EXPECT_FALSE(embed_text_field("zzz qqq", w).has_value());
  EXPECT_FALSE(embed_text_field("", w).has_value());
}

TEST(TextFieldTest, Coverage) {
  const auto w = tiny();
  const auto d = [](std::vector<std::string> v) {
    return make_strings("d", "t", "x", ValueSpace::GeneralString, std::move(v));
  };
  EXPECT_EQ(vocabulary_coverage(d({"red", "blue"}), w), 1.0);
  EXPECT_EQ(vocabulary_coverage(d({"x", "y"}), w), 0.0);
  EXPECT_EQ(vocabulary_coverage(d({"red", "dark blue", "blue", "red zzz"}), w), 0.75);
  EXPECT_THROW(vocabulary_coverage(make_numeric("n", "t", "x", {1}), w), Error);
}

TEST(CharTest, Examples) {
  const std::uint8_t ab[] = {'a', 'b'};
  const auto v = CharVocabulary::from_bytes(ab);
  EXPECT_EQ(v.size(), 3);
  EXPECT_EQ(encode_chars("a", v).indices, (std::vector<int>{1}));
  EXPECT_EQ(encode_chars("bz", v).indices, (std::vector<int>{2, 0}));
  const auto long_one = encode_chars(std::string(100, 'a'), v);
  EXPECT_EQ(long_one.indices.size(), 64u);
  EXPECT_TRUE(long_one.truncated);
  EXPECT_FALSE(encode_chars("ab", v).truncated);
  EXPECT_THROW(encode_chars("", v), Error);
}

TEST(CharTest, BuildFromDatasets) {
  const std::vector<ColumnDataset> ds = {
      make_strings("a", "t", "x", ValueSpace::GeneralString, {"ca", "b\xff"}),
      make_numeric("n", "t", "y", {1})};
  const auto v = CharVocabulary::build(ds);
  EXPECT_EQ(v.alphabet(), (std::vector<std::uint8_t>{'a', 'b', 'c', 0xff}));
  EXPECT_EQ(v.index_of('c'), 3);
  EXPECT_EQ(v.index_of(0xff), 4);
  EXPECT_EQ(v.index_of('1'), 0);
}

}  // namespace
}  // namespace varlens
