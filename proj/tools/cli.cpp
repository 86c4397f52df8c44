#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include "store.hpp"
#include "varlens/apps.hpp"
#include "varlens/config.hpp"
#include "varlens/eval.hpp"
#include "varlens/index.hpp"
#include "varlens/train.hpp"

namespace varlens::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kMethods = {"embed",   "meansd",   "ks",      "mmd",
                                           "scf",     "jaccard",  "mwordvec", "pwordvec"};
const std::vector<std::string> kModes = {"split", "diff", "retrieve", "calibrate"};
const std::vector<std::string> kSpaces = {"numeric", "language", "string"};
const std::vector<std::string> kPartitions = {"R", "T", "S"};

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) fail(ErrorCode::kIoError, what + " not found: " + p.string());
}

void require_dir(const fs::path& p, const std::string& what) {
  if (!fs::is_directory(p)) fail(ErrorCode::kIoError, what + " not found: " + p.string());
}

std::optional<WordVectorTable> load_words(const std::string& path) {
  if (path.empty()) return std::nullopt;
  require_file(path, "word-vector file");
  return load_word_vectors(path);
}

const WordVectorTable* ptr(const std::optional<WordVectorTable>& w) { return w ? &*w : nullptr; }

CsvOptions csv_options(char delimiter) {
  CsvOptions o;
  o.delimiter = delimiter;
  return o;
}

std::vector<fs::path> table_files(const fs::path& dir) {
  require_dir(dir, "table directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".csv" || ext == ".tsv")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Table read_table(const fs::path& path, const CsvOptions& opt, const WordVectorTable* words) {
  require_file(path, "table");
  const std::string id = path.stem().string();
  return classify_table(Table{id, load_table(path, id, opt)}, words);
}

// Checkpoints keyed by value space; the scorer borrows them.
class ModelSet {
 public:
  void load(const std::vector<std::string>& paths) {
    for (const auto& p : paths) require_file(p, "checkpoint");
    for (const auto& p : paths) {
      auto m = std::make_unique<EmbeddingModel<float>>(load_checkpoint(p));
      for (const auto& other : models_) {
        if (other->space() == m->space()) {
          fail(ErrorCode::kConfigError,
               "two checkpoints for the " + std::string(to_string(m->space())) + " space");
        }
      }
      models_.push_back(std::move(m));
    }
  }
  bool empty() const { return models_.empty(); }
  const EmbeddingModel<float>& only() const {
    if (models_.size() != 1) fail(ErrorCode::kConfigError, "exactly one --model is required");
    return *models_.front();
  }
  const std::vector<std::unique_ptr<EmbeddingModel<float>>>& all() const { return models_; }

 private:
  std::vector<std::unique_ptr<EmbeddingModel<float>>> models_;
};

std::unique_ptr<Scorer> make_scorer(const std::string& method, const ModelSet& models,
                                    const WordVectorTable* words) {
  if (method == "embed") {
    if (models.empty()) fail(ErrorCode::kConfigError, "method embed needs --model");
    auto s = std::make_unique<EmbeddingScorer>(words);
    for (const auto& m : models.all()) s->add_model(*m);
    return s;
  }
  return std::make_unique<BaselineScorer>(parse_baseline_method(method), words);
}

// ---- ingest ----------------------------------------------------------------

struct IngestArgs {
  std::string dir, out, words;
  double split_frac = 0.8;
  std::size_t s_count = 0;
  std::uint64_t seed = 0;
  char delimiter = ',';
};

void run_ingest(const IngestArgs& a, std::ostream& out) {
  const auto files = table_files(a.dir);
  const auto words = load_words(a.words);
  if (files.empty()) fail(ErrorCode::kInvalidArgument, "no .csv or .tsv tables in " + a.dir);
  std::vector<Table> tables;
  for (const auto& f : files) tables.push_back(read_table(f, csv_options(a.delimiter), ptr(words)));
  tables = drop_uninformative(std::move(tables));
  const Corpus corpus = partition_corpus(tables, a.split_frac, a.s_count, a.seed);

  DatasetStore store;
  for (auto [p, part] : {std::pair{Partition::R, &corpus.R}, {Partition::T, &corpus.T}, {Partition::S, &corpus.S}}) {
    for (const auto& d : *part) {
      store.datasets.push_back(d);
      store.partition.push_back(p);
    }
  }
  store.gt = GroundTruth::build(store.datasets, ptr(words));
  if (!a.words.empty()) store.words_path = fs::absolute(a.words).string();
  save_store(store, a.out);

  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  for (std::size_t i = 0; i < store.datasets.size(); ++i) {
    ++counts[{std::string(to_string(store.partition[i])), std::string(to_string(store.datasets[i].space))}];
  }
  out << "tables\t" << tables.size() << '\n';
  out << "partition\tspace\tdatasets\n";
  for (const auto& [key, n] : counts) out << key.first << '\t' << key.second << '\t' << n << '\n';
  out << "ground_truth_pairs\t" << store.gt.num_pairs() << '\n';
}

// ---- synth -----------------------------------------------------------------

void run_synth(const std::string& config, const std::string& dir, std::ostream& out) {
  require_file(config, "config");
  const auto corpus = generate_synthetic_corpus(parse_synthetic_config(config));
  write_synthetic_corpus(corpus, dir);
  out << "tables\t" << corpus.tables.size() << '\n';
  out << "variables\t" << corpus.variables.size() << '\n';
  out << "words\t" << corpus.word_order.size() << '\n';
}

// ---- train -----------------------------------------------------------------

const std::set<std::string> kTrainKeys = {
    "store", "words", "checkpoint", "log", "partition", "cap", "batch", "max_steps", "patience",
    "window", "min_improvement", "alpha", "lr", "beta1", "beta2", "eps", "width", "embed_dim",
    "lstm_hidden", "lstm_layers", "char_cap", "seed"};

TrainConfig train_config(const KeyValueConfig& c) {
  TrainConfig t;
  t.cap = c.get_size("cap", t.cap);
  t.batch = c.get_size("batch", t.batch);
  t.max_steps = c.get_size("max_steps", t.max_steps);
  t.patience = c.get_size("patience", t.patience);
  t.window = c.get_size("window", t.window);
  t.min_improvement = c.get_double("min_improvement", t.min_improvement);
  t.alpha = c.get_double("alpha", t.alpha);
  t.adam.lr = c.get_double("lr", t.adam.lr);
  t.adam.beta1 = c.get_double("beta1", t.adam.beta1);
  t.adam.beta2 = c.get_double("beta2", t.adam.beta2);
  t.adam.eps = c.get_double("eps", t.adam.eps);
  t.model.width = static_cast<int>(c.get_size("width", static_cast<std::size_t>(t.model.width)));
  t.model.embed_dim = static_cast<int>(c.get_size("embed_dim", static_cast<std::size_t>(t.model.embed_dim)));
  t.model.lstm_hidden = static_cast<int>(c.get_size("lstm_hidden", static_cast<std::size_t>(t.model.lstm_hidden)));
  t.model.lstm_layers = static_cast<int>(c.get_size("lstm_layers", static_cast<std::size_t>(t.model.lstm_layers)));
  t.model.char_cap = static_cast<std::uint32_t>(c.get_size("char_cap", t.model.char_cap));
  t.seed = c.get_u64("seed", t.seed);
  validate(t);
  return t;
}

struct TrainArgs {
  std::string space, config, store, out;
};

void run_train(const TrainArgs& a, std::ostream& out) {
  require_file(a.config, "config");
  auto cfg = KeyValueConfig::load(a.config);
  cfg.require_known(kTrainKeys);
  if (!a.store.empty()) cfg.set("store", a.store);
  if (!a.out.empty()) cfg.set("checkpoint", a.out);
  const ValueSpace space = parse_value_space(a.space);
  TrainConfig tc = train_config(cfg);

  // every path is checked before training starts
  const fs::path store_dir = cfg.get_string("store", "");
  const fs::path checkpoint = cfg.get_string("checkpoint", "");
  if (store_dir.empty()) fail(ErrorCode::kConfigError, "train needs 'store'");
  if (checkpoint.empty()) fail(ErrorCode::kConfigError, "train needs 'checkpoint'");
  require_file(store_dir / "manifest.tsv", "dataset store");
  const fs::path log_path = cfg.get_string("log", checkpoint.string() + ".log");
  if (checkpoint.has_parent_path()) fs::create_directories(checkpoint.parent_path());
  if (log_path.has_parent_path()) fs::create_directories(log_path.parent_path());
  std::ofstream log(log_path);
  if (!log) fail(ErrorCode::kIoError, "cannot write " + log_path.string());
  { std::ofstream probe(checkpoint, std::ios::binary | std::ios::app);
    if (!probe) fail(ErrorCode::kIoError, "cannot write " + checkpoint.string()); }

  const DatasetStore store = load_store(store_dir);
  const auto words = load_words(cfg.get_string("words", store.words_path));
  if (space == ValueSpace::Language) {
    if (!words) fail(ErrorCode::kConfigError, "the language space needs a word-vector file");
    tc.model.word_dim = words->dim();
  }
  const auto part = parse_partition(cfg.get_string("partition", "R"));
  const auto repo = store.select(part, space);
  const auto result = train_model(repo, store.gt, tc, ptr(words), &log);
  save_checkpoint(result.model, checkpoint);

  out << "datasets\t" << repo.size() << '\n';
  out << "steps\t" << result.log.size() << '\n';
  out << "final_moving_average\t" << (result.log.empty() ? 0.0 : result.log.back().moving_average) << '\n';
  out << "stopped_early\t" << (result.stopped_early ? 1 : 0) << '\n';
  out << "checkpoint\t" << checkpoint.string() << '\n';
}

// ---- embed / query ---------------------------------------------------------

struct EmbedArgs {
  std::string model, store, index, words, partition = "R";
  IndexConfig index_config;
};

void run_embed(const EmbedArgs& a, std::ostream& out) {
  require_file(a.model, "checkpoint");
  require_file(fs::path(a.store) / "manifest.tsv", "dataset store");
  const auto model = load_checkpoint(a.model);
  const DatasetStore store = load_store(a.store);
  const auto words = load_words(a.words.empty() ? store.words_path : a.words);
  RepositoryIndex index(a.index_config);
  std::size_t skipped = 0;
  for (const auto& d : store.select(parse_partition(a.partition), model.space())) {
    try {
      index.add(augment(model.embed(d, ptr(words)), d.id, VectorKind::Repository));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNotComparable) throw;
      warn("skipping " + d.id + ": " + e.what());
      ++skipped;
    }
  }
  if (index.empty()) fail(ErrorCode::kShortage, "no datasets of the model's space to index");
  save_index(index, a.index);
  out << "indexed\t" << index.size() << '\n';
  out << "skipped\t" << skipped << '\n';
  out << "dim\t" << index.dim() << '\n';
}

struct QueryArgs {
  std::string index, model, column, words;
  std::size_t k = 10;
  std::size_t ef = 0;
  bool exact = false;
  char delimiter = ',';
};

ColumnDataset pick_column(const std::string& spec, char delimiter) {
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size()) {
    fail(ErrorCode::kInvalidArgument, "--column expects <csv>:<column>, got '" + spec + "'");
  }
  const fs::path path = spec.substr(0, colon);
  const std::string col = spec.substr(colon + 1);
  require_file(path, "table");
  const auto cols = load_table(path, path.stem().string(), csv_options(delimiter));
  for (const auto& d : cols) {
    if (d.variable_name == col) return d;
  }
  if (std::all_of(col.begin(), col.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    const std::string id = path.stem().string() + "/" + col;
    for (const auto& d : cols) {
      if (d.id == id) return d;
    }
  }
  fail(ErrorCode::kInvalidArgument, "no column '" + col + "' in " + path.string());
}

void run_query(const QueryArgs& a, std::ostream& out) {
  require_file(a.index, "index");
  require_file(a.model, "checkpoint");
  const auto index = load_index(a.index);
  const auto model = load_checkpoint(a.model);
  const auto words = load_words(a.words);
  if (model.space() == ValueSpace::Language && !words) {
    fail(ErrorCode::kConfigError, "a language model needs --words");
  }
  const auto d = assign_value_space(pick_column(a.column, a.delimiter), model.space());
  if (d.empty()) fail(ErrorCode::kInvalidValue, "query column has no usable values");
  const auto q = augment(model.embed(d, ptr(words)), d.id, VectorKind::Query);
  const auto found = a.exact ? index.knn_exact(q, a.k)
                             : index.knn_approx(q, a.k, a.ef ? a.ef : std::max<std::size_t>(a.k, index.config().ef_search));
  out << "rank\tid\tD\tp\n";
  for (std::size_t i = 0; i < found.size(); ++i) {
    out << i + 1 << '\t' << found[i].id << '\t' << found[i].d << '\t' << std::exp(-found[i].d) << '\n';
  }
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string mode, method, store, words, partition = "T", space;
  std::vector<std::string> models;
  std::vector<double> fractions{1.0};
  std::size_t pairs = 200;
  std::uint64_t seed = 0;
};

void run_eval(const EvalArgs& a, std::ostream& out) {
  require_file(fs::path(a.store) / "manifest.tsv", "dataset store");
  ModelSet models;
  models.load(a.models);
  const DatasetStore store = load_store(a.store);
  const auto words = load_words(a.words.empty() ? store.words_path : a.words);
  const auto scorer = make_scorer(a.method, models, ptr(words));
  const Partition part = parse_partition(a.partition);

  std::vector<ValueSpace> spaces;
  if (!a.space.empty()) {
    spaces.push_back(parse_value_space(a.space));
  } else {
    for (auto s : {ValueSpace::Numeric, ValueSpace::Language, ValueSpace::GeneralString}) {
      if (scorer->supports(s)) spaces.push_back(s);
    }
  }

  if (a.mode == "split" || a.mode == "diff") {
    out << "mode\tmethod\tspace\tfraction\tauc\tpositives\tnegatives\n";
  } else if (a.mode == "retrieve") {
    out << "mode\tmethod\tspace\tk\tmean_matches\tqueries\n";
  } else {
    out << "mode\tmethod\tspace\trecall\tthreshold\tmatched_pairs\tnomatch_queries\n";
  }
  for (const ValueSpace space : spaces) {
    const std::string prefix = a.mode + "\t" + a.method + "\t" + std::string(to_string(space)) + "\t";
    const auto data = store.select(part, space);
    try {
      if (a.mode == "split" || a.mode == "diff") {
        for (const auto& r : eval_pairs(*scorer, data, store.gt, parse_pair_mode(a.mode), a.fractions,
                                        a.pairs, a.seed)) {
          out << prefix << r.fraction << '\t' << r.auc << '\t' << r.positives << '\t' << r.negatives << '\n';
        }
        continue;
      }
      const auto repo = store.select(Partition::R, space);
      std::vector<ColumnDataset> with_match, without_match;
      for (const auto& d : data) {
        const bool hit = std::any_of(repo.begin(), repo.end(),
                                     [&](const ColumnDataset& r) { return store.gt.match(d.id, r.id); });
        (hit ? with_match : without_match).push_back(d);
      }
      if (a.mode == "retrieve") {
        if (with_match.empty()) fail(ErrorCode::kShortage, "no query has a match in R");
        const auto m = matches_at_k(*scorer, with_match, repo, store.gt);
        for (std::size_t i = 0; i < m.ks.size(); ++i) {
          out << prefix << m.ks[i] << '\t' << m.mean_matches[i] << '\t' << m.queries << '\n';
        }
      } else {
        std::vector<std::pair<ColumnDataset, ColumnDataset>> matched;
        for (const auto& q : with_match)
          for (const auto& r : repo) {
            if (store.gt.match(q.id, r.id)) matched.emplace_back(q, r);
          }
        if (matched.empty() || without_match.empty()) {
          fail(ErrorCode::kShortage, "calibration needs matched and unmatched queries");
        }
        const auto c = calibrated_recall(*scorer, without_match, repo, matched);
        out << prefix << c.recall << '\t' << c.threshold << '\t' << c.matched_pairs << '\t'
            << without_match.size() << '\n';
      }
    } catch (const Error& e) {
      // with no explicit space, a space lacking data is skipped
      if (!a.space.empty() || e.code() != ErrorCode::kShortage) throw;
      warn(std::string(to_string(space)) + ": " + e.what());
    }
  }
}

// ---- schema-match / union-search --------------------------------------------

struct AppArgs {
  std::string a, b, method = "embed", words;
  std::vector<std::string> models;
  std::size_t restarts = 10, k = 10;
  std::uint64_t seed = 0;
  double tau = kUnionThreshold;
  char delimiter = ',';
};

void run_schema_match(const AppArgs& a, std::ostream& out) {
  ModelSet models;
  models.load(a.models);
  const auto words = load_words(a.words);
  const auto scorer = make_scorer(a.method, models, ptr(words));
  const Table ta = read_table(a.a, csv_options(a.delimiter), ptr(words));
  const Table tb = read_table(a.b, csv_options(a.delimiter), ptr(words));
  const auto p = column_similarity_matrix(ta, tb, *scorer);
  const auto al = schema_match(p, a.restarts, a.seed);
  out << "column_a\tcolumn_b\tp\n";
  for (std::size_t i = 0; i < al.target.size(); ++i) {
    out << ta.columns[i].variable_name << '\t' << tb.columns[al.target[i]].variable_name << '\t'
        << p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(al.target[i])) << '\n';
  }
  out << "score\t" << al.score << '\n';
}

void run_union_search(const AppArgs& a, std::ostream& out) {
  ModelSet models;
  models.load(a.models);
  const auto words = load_words(a.words);
  const auto scorer = make_scorer(a.method, models, ptr(words));
  const Table query = read_table(a.a, csv_options(a.delimiter), ptr(words));
  std::vector<Table> candidates;
  for (const auto& f : table_files(a.b)) {
    if (fs::exists(a.a) && fs::equivalent(f, a.a)) continue;
    candidates.push_back(read_table(f, csv_options(a.delimiter), ptr(words)));
  }
  const auto ranking = union_search(query, candidates, *scorer, a.k, a.tau);
  out << "rank\ttable\tc_star\tscore\talignment\n";
  write_union_ranking(out, ranking);
}

char delimiter_of(const std::string& s) {
  if (s == "\\t" || s == "tab") return '\t';
  if (s.size() != 1) fail(ErrorCode::kInvalidArgument, "delimiter must be one character");
  return s[0];
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"varlens: learned column embeddings for variable matching", "varlens"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "varlens 0.1.0");
  std::string delimiter = ",";

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Load a directory of tables into a dataset store");
  c_ingest->add_option("dir", ingest.dir, "Directory of .csv/.tsv tables")->required();
  c_ingest->add_option("--out", ingest.out, "Dataset store directory")->required();
  c_ingest->add_option("--words", ingest.words, "Word-vector file");
  c_ingest->add_option("--split-frac", ingest.split_frac, "Fraction of tables in R")->capture_default_str();
  c_ingest->add_option("--s-count", ingest.s_count, "Number of R datasets split into S")->capture_default_str();
  c_ingest->add_option("--seed", ingest.seed)->capture_default_str();
  c_ingest->add_option("--delimiter", delimiter)->capture_default_str();

  std::string synth_config, synth_out;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  c_synth->add_option("--config", synth_config, "key = value corpus description")->required();
  c_synth->add_option("--out", synth_out, "Output directory")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train one value space's model");
  c_train->add_option("--space", train.space)->required()->check(CLI::IsMember(kSpaces));
  c_train->add_option("--config", train.config, "key = value training configuration")->required();
  c_train->add_option("--store", train.store, "Overrides the config's store");
  c_train->add_option("--out", train.out, "Overrides the config's checkpoint");

  EmbedArgs embed;
  auto* c_embed = app.add_subcommand("embed", "Embed a store partition into a repository index");
  c_embed->add_option("--model", embed.model)->required();
  c_embed->add_option("--store", embed.store)->required();
  c_embed->add_option("--index", embed.index)->required();
  c_embed->add_option("--words", embed.words);
  c_embed->add_option("--partition", embed.partition)->capture_default_str()->check(CLI::IsMember(kPartitions));
  c_embed->add_option("--m", embed.index_config.m)->capture_default_str();
  c_embed->add_option("--ef-construction", embed.index_config.ef_construction)->capture_default_str();
  c_embed->add_option("--ef-search", embed.index_config.ef_search)->capture_default_str();
  c_embed->add_option("--seed", embed.index_config.seed)->capture_default_str();

  QueryArgs query;
  auto* c_query = app.add_subcommand("query", "Rank repository datasets against one column");
  c_query->add_option("--index", query.index)->required();
  c_query->add_option("--model", query.model)->required();
  c_query->add_option("--column", query.column, "<csv>:<column name or index>")->required();
  c_query->add_option("-k", query.k)->capture_default_str()->check(CLI::PositiveNumber);
  c_query->add_option("--ef", query.ef, "Beam width (default max(k, index ef))");
  c_query->add_flag("--exact", query.exact, "Exhaustive search");
  c_query->add_option("--words", query.words);
  c_query->add_option("--delimiter", delimiter)->capture_default_str();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluation reports");
  c_eval->add_option("--mode", ev.mode)->required()->check(CLI::IsMember(kModes));
  c_eval->add_option("--method", ev.method)->required()->check(CLI::IsMember(kMethods));
  c_eval->add_option("--store", ev.store)->required();
  c_eval->add_option("--model", ev.models, "Checkpoint (repeat per space)");
  c_eval->add_option("--words", ev.words);
  c_eval->add_option("--partition", ev.partition, "Query partition")->capture_default_str()->check(CLI::IsMember(kPartitions));
  c_eval->add_option("--space", ev.space)->check(CLI::IsMember(kSpaces));
  c_eval->add_option("--pairs", ev.pairs, "Pairs per label (split/diff)")->capture_default_str();
  c_eval->add_option("--fractions", ev.fractions, "Sample fractions (split/diff)")->delimiter(',');
  c_eval->add_option("--seed", ev.seed)->capture_default_str();

  AppArgs sm;
  auto* c_sm = app.add_subcommand("schema-match", "One-to-one alignment of two equal-width tables");
  c_sm->add_option("table_a", sm.a)->required();
  c_sm->add_option("table_b", sm.b)->required();
  c_sm->add_option("--model", sm.models, "Checkpoint (repeat per space)");
  c_sm->add_option("--method", sm.method)->capture_default_str()->check(CLI::IsMember(kMethods));
  c_sm->add_option("--words", sm.words);
  c_sm->add_option("--restarts", sm.restarts)->capture_default_str()->check(CLI::PositiveNumber);
  c_sm->add_option("--seed", sm.seed)->capture_default_str();
  c_sm->add_option("--delimiter", delimiter)->capture_default_str();

  AppArgs us;
  auto* c_us = app.add_subcommand("union-search", "Rank tables by unionability with a query table");
  c_us->add_option("query", us.a)->required();
  c_us->add_option("repo_dir", us.b)->required();
  c_us->add_option("--model", us.models, "Checkpoint (repeat per space)");
  c_us->add_option("--method", us.method)->capture_default_str()->check(CLI::IsMember(kMethods));
  c_us->add_option("--words", us.words);
  c_us->add_option("-k", us.k)->capture_default_str()->check(CLI::PositiveNumber);
  c_us->add_option("--tau", us.tau)->capture_default_str();
  c_us->add_option("--delimiter", delimiter)->capture_default_str();

  try {
    std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rev.begin(), rev.end());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "varlens 0.1.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    err << "error: usage: " << e.what() << '\n';
    return kExitUsage;
  }

  const auto saved = out.precision(10);
  try {
    const char d = delimiter_of(delimiter);
    ingest.delimiter = query.delimiter = sm.delimiter = us.delimiter = d;
    if (*c_ingest) run_ingest(ingest, out);
    if (*c_synth) run_synth(synth_config, synth_out, out);
    if (*c_train) run_train(train, out);
    if (*c_embed) run_embed(embed, out);
    if (*c_query) run_query(query, out);
    if (*c_eval) run_eval(ev, out);
    if (*c_sm) run_schema_match(sm, out);
    if (*c_us) run_union_search(us, out);
  } catch (const Error& e) {
    out.precision(saved);
    err << "error: " << error_category(e.code()) << ": " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    out.precision(saved);
    err << "error: internal: " << e.what() << '\n';
    return kExitRuntime;
  }
  out.precision(saved);
  return kExitOk;
}

}  // namespace varlens::cli
