#include "varlens/ingest.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

namespace varlens {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> warnings;
void capture(std::string_view w) { warnings.emplace_back(w); }

class IngestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("varlens_ingest_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    warnings.clear();
    set_warning_sink(capture);
  }
  void TearDown() override {
    set_warning_sink(nullptr);
    fs::remove_all(dir_);
  }
  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }
  fs::path dir_;
};

TEST_F(IngestTest, MissingCellsDroppedPerColumn) {
  const auto cols = load_table(write("t.csv", "a,b\n1,2\n3,?\n5,6\n"), "t");
  ASSERT_EQ(cols.size(), 2u);
  EXPECT_EQ(cols[0].strings, (std::vector<std::string>{"1", "3", "5"}));
  EXPECT_EQ(cols[1].strings, (std::vector<std::string>{"2", "6"}));
  EXPECT_EQ(cols[0].id, "t/0");
  EXPECT_EQ(cols[1].variable_name, "b");
  EXPECT_EQ(cols[1].table_id, "t");
}

TEST_F(IngestTest, AllMissingColumnDiscardedWithWarning) {
  const auto cols = load_table(write("t.csv", "a,b,c\n1,NA,x\n2,,y\n"), "t");
  ASSERT_EQ(cols.size(), 2u);
  EXPECT_EQ(cols[1].variable_name, "c");
  EXPECT_EQ(cols[1].id, "t/2");
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("'b'"), std::string::npos);
}

TEST_F(IngestTest, QuotingAndDelimiters) {
  const auto rows = read_delimited(write("q.csv", "x,y\r\n\"a,b\",\"say \"\"hi\"\"\"\n\"multi\nline\",z\n"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1], (std::vector<std::string>{"a,b", "say \"hi\""}));
  EXPECT_EQ(rows[2], (std::vector<std::string>{"multi\nline", "z"}));
  CsvOptions tab;
  tab.delimiter = '\t';
  tab.missing_markers = {"-"};
  const auto cols = load_table(write("t.tsv", "p\tq\n1\t-\n\t2\n"), "tt", tab);
  ASSERT_EQ(cols.size(), 2u);
  EXPECT_EQ(cols[0].strings, (std::vector<std::string>{"1", ""}));
  EXPECT_EQ(cols[1].strings, (std::vector<std::string>{"2"}));
}

TEST_F(IngestTest, Errors) {
  const auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kDivergence;  // sentinel: nothing thrown
  };
  EXPECT_EQ(code([&] { load_table(dir_ / "absent.csv", "t"); }), ErrorCode::kIoError);
  EXPECT_EQ(code([&] { load_table(write("e.csv", ""), "t"); }), ErrorCode::kFormatError);
  EXPECT_EQ(code([&] { load_table(write("r.csv", "a,b\n1,2,3\n"), "t"); }), ErrorCode::kFormatError);
}

// Independent reader for unquoted files: split each line on commas.
TEST_F(IngestTest, LargeFileMatchesLineReader) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cell(0, 9);
  std::ostringstream text;
  text << "alpha,beta,gamma\n";
  for (int r = 0; r < 1000; ++r) {
    for (int c = 0; c < 3; ++c) {
      const int v = cell(rng);
      text << (c ? "," : "") << (v == 0 ? "" : (v == 1 ? "?" : std::to_string(r * 3 + c) + ".5"));
    }
    text << "\n";
  }
  const auto path = write("big.csv", text.str());
  const auto cols = load_table(path, "big");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> want(3);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell_text;
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(ss, cell_text, ',')) cell_text.clear();
      if (!cell_text.empty() && cell_text != "?") want[static_cast<std::size_t>(c)].push_back(cell_text);
    }
  }
  ASSERT_EQ(cols.size(), 3u);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(cols[static_cast<std::size_t>(c)].strings, want[static_cast<std::size_t>(c)]);
}

WordVectorTable colours() {
  WordVectorTable w(3);
  w.insert("red", {1, 0, 0});
  w.insert("green", {0, 1, 0});
  w.insert("blue", {0, 0, 1});
  w.insert("age", {1, 1, 0});
  w.insert("years", {1, 0.9f, 0.1f});
  w.insert("height", {-1, 1, 0});
  return w;
}

TEST(ValueSpaceDetectionTest, Examples) {
  const auto words = colours();
  const auto raw = [](std::vector<std::string> v) {
    return make_strings("d", "t", "x", ValueSpace::GeneralString, std::move(v));
  };
  EXPECT_EQ(detect_value_space(raw({"1.5", "2", "3e4"}), &words), ValueSpace::Numeric);
  EXPECT_EQ(detect_value_space(raw({"red", "green", "blue"}), &words), ValueSpace::Language);
  EXPECT_EQ(detect_value_space(raw({"red", "green", "blue"}), nullptr), ValueSpace::GeneralString);
  EXPECT_EQ(detect_value_space(raw({"+1-555-0100", "+1-555-0199"}), &words), ValueSpace::GeneralString);
  // 99 of 100 parse: still numeric; 98: not
  std::vector<std::string> v(99, "4");
  v.push_back("n/a");
  EXPECT_EQ(detect_value_space(raw(v), &words), ValueSpace::Numeric);
  v[0] = "oops";
  EXPECT_EQ(detect_value_space(raw(v), &words), ValueSpace::GeneralString);
  // exactly half covered is not a majority
  EXPECT_EQ(detect_value_space(raw({"red", "zzz"}), &words), ValueSpace::GeneralString);
  EXPECT_EQ(detect_value_space(raw({"red", "blue green", "zzz"}), &words), ValueSpace::Language);
  EXPECT_EQ(detect_value_space(raw({"inf", "nan", "1"}), &words), ValueSpace::GeneralString);
}

TEST(ValueSpaceDetectionTest, NumericRetagDropsUnparseable) {
  std::vector<std::string> v(200, "2.5");
  v[10] = "bad";
  const auto d = assign_value_space(make_strings("d", "t", "x", ValueSpace::GeneralString, v),
                                    ValueSpace::Numeric);
  EXPECT_EQ(d.space, ValueSpace::Numeric);
  EXPECT_EQ(d.numbers.size(), 199u);
  EXPECT_TRUE(d.strings.empty());
  float f = 0;
  EXPECT_TRUE(parse_finite_float(" 1e3 ", f));
  EXPECT_EQ(f, 1000.0f);
  EXPECT_FALSE(parse_finite_float("1e40", f));  // overflows float
}

TEST(NameTest, Uninformative) {
  EXPECT_TRUE(is_uninformative_name("attribute"));
  EXPECT_TRUE(is_uninformative_name("Variable"));
  EXPECT_TRUE(is_uninformative_name("column"));
  EXPECT_TRUE(is_uninformative_name("v1"));
  EXPECT_TRUE(is_uninformative_name("id"));
  EXPECT_FALSE(is_uninformative_name("temperature"));
  EXPECT_FALSE(is_uninformative_name("age"));
}

// Textbook Jaro: matching window, transpositions counted over matched order.
double jaro_oracle(const std::string& a, const std::string& b) {
  if (a.empty() && b.empty()) return 1.0;
  const int la = static_cast<int>(a.size()), lb = static_cast<int>(b.size());
  const int window = std::max(0, std::max(la, lb) / 2 - 1);
  std::vector<bool> ma(a.size()), mb(b.size());
  int m = 0;
  for (int i = 0; i < la; ++i)
    for (int j = std::max(0, i - window); j <= std::min(lb - 1, i + window); ++j) {
      if (!mb[static_cast<std::size_t>(j)] && a[static_cast<std::size_t>(i)] == b[static_cast<std::size_t>(j)]) {
        ma[static_cast<std::size_t>(i)] = mb[static_cast<std::size_t>(j)] = true;
        ++m;
        break;
      }
    }
  if (m == 0) return 0.0;
  std::string sa, sb;
  for (int i = 0; i < la; ++i) if (ma[static_cast<std::size_t>(i)]) sa += a[static_cast<std::size_t>(i)];
  for (int j = 0; j < lb; ++j) if (mb[static_cast<std::size_t>(j)]) sb += b[static_cast<std::size_t>(j)];
  int half = 0;
  for (std::size_t k = 0; k < sa.size(); ++k) half += sa[k] != sb[k];
  return (m / double(la) + m / double(lb) + (m - half / 2.0) / m) / 3.0;
}

TEST(NameTest, JaroWinklerExamples) {
  EXPECT_EQ(jaro_winkler("age", "age"), 1.0);
  EXPECT_EQ(jaro_winkler("abc", "xyz"), 0.0);
  EXPECT_EQ(jaro_winkler("", ""), 1.0);
  EXPECT_NEAR(jaro("MARTHA", "MARHTA"), (1 + 1 + 5.0 / 6.0) / 3, 1e-12);
  EXPECT_NEAR(jaro_winkler("MARTHA", "MARHTA"), 0.9611, 5e-5);
  EXPECT_NEAR(jaro_winkler("custid", "cust_id"), 0.9714, 5e-5);
  EXPECT_NEAR(jaro_winkler("DIXON", "DICKSONX"), 0.8133, 5e-5);
}

TEST(NameTest, JaroAgreesWithOracleAndIsSymmetric) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(0, 9), ch(0, 3);
  for (int rep = 0; rep < 2000; ++rep) {
    std::string a, b;
    for (int i = len(rng); i > 0; --i) a += static_cast<char>('a' + ch(rng));
    for (int i = len(rng); i > 0; --i) b += static_cast<char>('a' + ch(rng));
    EXPECT_NEAR(jaro(a, b), jaro_oracle(a, b), 1e-12) << a << " " << b;
    EXPECT_DOUBLE_EQ(jaro_winkler(a, b), jaro_winkler(b, a));
    const double jw = jaro_winkler(a, b);
    EXPECT_GE(jw, 0.0);
    EXPECT_LE(jw, 1.0);
  }
}

TEST(NameTest, Tokenize) {
  EXPECT_EQ(tokenize_name("custID"), (std::vector<std::string>{"cust", "id"}));
  EXPECT_EQ(tokenize_name("first_name-2"), (std::vector<std::string>{"first", "name", "2"}));
  EXPECT_EQ(tokenize_name("HTTPServer"), (std::vector<std::string>{"http", "server"}));
}

TEST(NameTest, GroundTruthMatch) {
  const auto words = colours();
  EXPECT_TRUE(ground_truth_match("age", "age", &words));
  EXPECT_TRUE(ground_truth_match("custid", "cust_id", &words));
  EXPECT_TRUE(ground_truth_match("custid", "cust_id", nullptr));
  // vocabulary path: cosine of (1,1,0) and (1,.9,.1)
  const double cos = (1 + 0.9) / (std::sqrt(2.0) * std::sqrt(1 + 0.81 + 0.01));
  EXPECT_EQ(ground_truth_match("age", "years", &words), cos >= 0.9);
  EXPECT_TRUE(ground_truth_match("Age", "YEARS", &words));
  EXPECT_FALSE(ground_truth_match("age", "height", &words));
  EXPECT_FALSE(ground_truth_match("red", "blue", &words));
  for (auto [a, b] : {std::pair{"age", "years"}, {"red", "reed"}, {"custid", "cust_id"}}) {
    EXPECT_EQ(ground_truth_match(a, b, &words), ground_truth_match(b, a, &words));
  }
}

TEST(GroundTruthTest, BuildSkipsSelfAndUninformative) {
  const std::vector<ColumnDataset> ds = {
      make_numeric("a/0", "a", "speed", {1}), make_numeric("b/0", "b", "Speed", {1}),
      make_numeric("a/1", "a", "value", {1}), make_numeric("b/1", "b", "value", {1}),
      make_numeric("c/0", "c", "weight", {1})};
  auto gt = GroundTruth::build(ds, nullptr);
  EXPECT_TRUE(gt.match("a/0", "b/0"));
  EXPECT_TRUE(gt.match("b/0", "a/0"));
  EXPECT_FALSE(gt.match("a/0", "a/0"));
  EXPECT_FALSE(gt.match("a/1", "b/1"));
  EXPECT_FALSE(gt.has_match("c/0"));
  EXPECT_EQ(gt.num_pairs(), 1u);
  gt.add_match("c/0", "a/1");
  EXPECT_EQ(gt.pairs(), (std::vector<std::pair<std::string, std::string>>{{"a/0", "b/0"}, {"a/1", "c/0"}}));
}

std::vector<Table> ten_tables() {
  std::vector<Table> tables;
  for (int t = 0; t < 10; ++t) {
    Table tab{"t" + std::to_string(t), {}};
    for (int c = 0; c < 3; ++c) {
      std::vector<float> v(11);
      for (int i = 0; i < 11; ++i) v[static_cast<std::size_t>(i)] = static_cast<float>(t * 100 + c * 20 + i);
      tab.columns.push_back(make_numeric(tab.id + "/" + std::to_string(c), tab.id,
                                         "var" + std::to_string(c), std::move(v)));
    }
    tables.push_back(std::move(tab));
  }
  return tables;
}

TEST(PartitionTest, TablesStayWhole) {
  const auto tables = ten_tables();
  const auto c = partition_corpus(tables, 0.8, 5, 3);
  std::set<std::string> r_tables, t_tables;
  for (const auto& d : c.R) r_tables.insert(d.table_id);
  for (const auto& d : c.T) t_tables.insert(d.table_id);
  EXPECT_EQ(r_tables.size(), 8u);
  EXPECT_EQ(t_tables.size(), 2u);
  EXPECT_EQ(c.R.size(), 24u);
  for (const auto& t : t_tables) EXPECT_FALSE(r_tables.contains(t));
  std::set<std::string> ids;
  for (const auto* part : {&c.R, &c.T, &c.S})
    for (const auto& d : *part) EXPECT_TRUE(ids.insert(d.id).second) << d.id;
  EXPECT_THROW(partition_corpus(tables, 0.8, 25, 3), Error);
  EXPECT_THROW(partition_corpus(tables, 1.0, 0, 3), Error);
}

TEST(PartitionTest, SplitHalvesReassembleOriginal) {
  const auto tables = ten_tables();
  const auto c = partition_corpus(tables, 0.8, 5, 3);
  ASSERT_EQ(c.S.size(), 5u);
  for (const auto& s : c.S) {
    const auto& sibling = *std::find_if(c.R.begin(), c.R.end(), [&](const auto& r) { return r.id == s.origin_id; });
    const auto& table = *std::find_if(tables.begin(), tables.end(), [&](const auto& t) { return t.id == s.table_id; });
    const auto& orig = *std::find_if(table.columns.begin(), table.columns.end(),
                                     [&](const auto& d) { return d.id == s.origin_id; });
    std::multiset<float> both(s.numbers.begin(), s.numbers.end());
    both.insert(sibling.numbers.begin(), sibling.numbers.end());
    EXPECT_EQ(both, std::multiset<float>(orig.numbers.begin(), orig.numbers.end()));
    EXPECT_LE(std::max(s.size(), sibling.size()) - std::min(s.size(), sibling.size()), 1u);
    EXPECT_EQ(s.variable_name, orig.variable_name);
  }
  const auto again = partition_corpus(tables, 0.8, 5, 3);
  ASSERT_EQ(again.S.size(), c.S.size());
  for (std::size_t i = 0; i < c.S.size(); ++i) EXPECT_EQ(again.S[i].numbers, c.S[i].numbers);
}

}  // namespace
}  // namespace varlens
