#include "store.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "varlens/config.hpp"
#include "varlens/error.hpp"

namespace varlens::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestHeader =
    "id\ttable\tfile\tvariable_name\tspace\tpartition\torigin\tcount";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

std::string dir_name(const std::string& table_id) {
  std::string s;
  for (char c : table_id) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return s.empty() ? "_" : s;
}

std::string format_float(float x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string escape_field(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i == s.size()) fail(ErrorCode::kFormatError, "dangling escape in store field");
    switch (s[i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: fail(ErrorCode::kFormatError, std::string("unknown escape \\") + s[i] + " in store field");
    }
  }
  return out;
}

std::vector<ColumnDataset> DatasetStore::select(Partition p) const {
  std::vector<ColumnDataset> out;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    if (partition[i] == p) out.push_back(datasets[i]);
  }
  return out;
}

std::vector<ColumnDataset> DatasetStore::select(Partition p, ValueSpace space) const {
  auto out = select(p);
  std::erase_if(out, [&](const ColumnDataset& d) { return d.space != space; });
  return out;
}

void save_store(const DatasetStore& store, const fs::path& dir) {
  if (store.partition.size() != store.datasets.size()) {
    fail(ErrorCode::kInvalidArgument, "store partition tags do not match its datasets");
  }
  fs::create_directories(dir);
  std::map<std::string, std::string> dirs;  // table id -> directory
  std::set<std::string> used;
  std::map<std::string, std::size_t> next_file;
  auto manifest = open_out(dir / "manifest.tsv");
  manifest << kManifestHeader << '\n';
  for (std::size_t i = 0; i < store.datasets.size(); ++i) {
    const auto& d = store.datasets[i];
    auto it = dirs.find(d.table_id);
    if (it == dirs.end()) {
      std::string name = dir_name(d.table_id);
      for (std::size_t k = 1; used.contains(name); ++k) name = dir_name(d.table_id) + "~" + std::to_string(k);
      used.insert(name);
      it = dirs.emplace(d.table_id, name).first;
      fs::create_directories(dir / name);
    }
    const std::string file = it->second + "/" + std::to_string(next_file[d.table_id]++) + ".txt";
    auto values = open_out(dir / file);
    if (d.space == ValueSpace::Numeric) {
      for (float x : d.numbers) values << format_float(x) << '\n';
    } else {
      for (const auto& s : d.strings) values << escape_field(s) << '\n';
    }
    manifest << escape_field(d.id) << '\t' << escape_field(d.table_id) << '\t' << file << '\t'
             << escape_field(d.variable_name) << '\t' << to_string(d.space) << '\t'
             << to_string(store.partition[i]) << '\t' << escape_field(d.origin_id) << '\t' << d.size()
             << '\n';
  }
  auto gt = open_out(dir / "ground_truth.tsv");
  for (const auto& [a, b] : store.gt.pairs()) gt << escape_field(a) << '\t' << escape_field(b) << '\n';
  auto cfg = open_out(dir / "store.cfg");
  cfg << "words = " << store.words_path << '\n';
}

DatasetStore load_store(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kIoError, "no dataset store at " + dir.string());
  DatasetStore store;
  auto manifest = open_in(dir / "manifest.tsv");
  std::string line;
  if (!std::getline(manifest, line) || line != kManifestHeader) {
    fail(ErrorCode::kFormatError, (dir / "manifest.tsv").string() + ": unexpected header");
  }
  std::set<std::string> ids;
  for (std::size_t row = 2; std::getline(manifest, line); ++row) {
    const auto f = split_tabs(line);
    const std::string where = (dir / "manifest.tsv").string() + ":" + std::to_string(row);
    if (f.size() != 8) fail(ErrorCode::kFormatError, where + ": expected 8 fields");
    ColumnDataset d;
    d.id = unescape_field(f[0]);
    d.table_id = unescape_field(f[1]);
    d.variable_name = unescape_field(f[3]);
    d.space = parse_value_space(f[4]);
    d.origin_id = unescape_field(f[6]);
    std::size_t count = 0;
    if (std::from_chars(f[7].data(), f[7].data() + f[7].size(), count).ec != std::errc{}) {
      fail(ErrorCode::kFormatError, where + ": bad count");
    }
    if (!ids.insert(d.id).second) fail(ErrorCode::kFormatError, where + ": duplicate id " + d.id);
    auto values = open_in(dir / f[2]);
    std::string v;
    while (std::getline(values, v)) {
      if (d.space == ValueSpace::Numeric) {
        float x = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
        if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) {
          fail(ErrorCode::kFormatError, (dir / f[2]).string() + ": bad number '" + v + "'");
        }
        d.numbers.push_back(x);
      } else {
        d.strings.push_back(unescape_field(v));
      }
    }
    if (d.size() != count) {
      fail(ErrorCode::kFormatError, where + ": manifest count " + f[7] + " but file holds " +
                                        std::to_string(d.size()));
    }
    store.partition.push_back(parse_partition(f[5]));
    store.datasets.push_back(std::move(d));
  }
  auto gt = open_in(dir / "ground_truth.tsv");
  while (std::getline(gt, line)) {
    const auto f = split_tabs(line);
    if (f.size() != 2) fail(ErrorCode::kFormatError, "ground_truth.tsv: expected 2 fields");
    const auto a = unescape_field(f[0]), b = unescape_field(f[1]);
    if (!ids.contains(a) || !ids.contains(b)) {
      fail(ErrorCode::kFormatError, "ground_truth.tsv names an unknown dataset");
    }
    store.gt.add_match(a, b);
  }
  store.words_path = KeyValueConfig::load(dir / "store.cfg").get_string("words", "");
  return store;
}

}  // namespace varlens::cli
