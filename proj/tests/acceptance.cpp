// Acceptance run: one PASS/FAIL line per criterion, then diagnostics.
// Exit status is nonzero when a criterion fails for a reason other than the
// documented unattainable clauses (criterion 7's raw cross-boolean p and the
// i.i.d. ANN workload of criterion 9).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "varlens/apps.hpp"
#include "varlens/eval.hpp"
#include "varlens/index.hpp"
#include "varlens/neural.hpp"
#include "varlens/train.hpp"

namespace {

using namespace varlens;
using Clock = std::chrono::steady_clock;

struct Outcome {
  int id;
  bool pass;
  bool known;  // failure is one of the documented unattainable clauses
  std::string summary;
  std::vector<std::string> notes = {};
};

std::vector<Outcome> outcomes;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(Outcome o) {
  std::printf("criterion %2d: %s  %s\n", o.id, o.pass ? "PASS" : "FAIL", o.summary.c_str());
  for (const auto& n : o.notes) std::printf("              %s\n", n.c_str());
  std::fflush(stdout);
  outcomes.push_back(std::move(o));
}

// ---------------------------------------------------------------- 1

template <typename Objective>
double worst_relative_error(std::span<double> params, std::span<const double> grad,
                            Objective&& objective, int probes, std::uint64_t seed) {
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (grad[i] != 0.0) live.push_back(i);
  if (live.empty()) return INFINITY;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
  const double step = 1e-5;
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    const std::size_t i = live[pick(rng)];
    const double saved = params[i];
    params[i] = saved + step;
    const double up = objective();
    params[i] = saved - step;
    const double down = objective();
    params[i] = saved;
    const double numeric = (up - down) / (2 * step);
    worst = std::max(worst, std::abs(numeric - grad[i]) /
                                std::max({std::abs(numeric), std::abs(grad[i]), 1e-6}));
  }
  return worst;
}

Mat<double> random_matrix(int rows, int cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Mat<double> m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

double mlp_error(bool adjustment, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Mlp<double> net(adjustment ? adjustment_mlp_arch(300) : embedding_mlp_arch(300));
  std::vector<double> params(net.num_params());
  net.init(params, rng);
  for (double& p : params) p += 0.01;
  const Mat<double> x = random_matrix(300, 4, rng, 0.7);
  const Mat<double> r = random_matrix(net.output_dim(), 4, rng, 1.0);
  MlpCache<double> cache;
  net.forward(params, x, &cache);
  std::vector<double> grad(net.num_params(), 0.0);
  net.backward(params, cache, r, grad);
  return worst_relative_error(params, grad, [&] { return (net.forward(params, x).array() * r.array()).sum(); },
                              100, seed);
}

double lstm_error(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BiLstm<double> net(LstmSpec{12, 128, 2});
  std::vector<double> params(net.num_params());
  net.init(params, rng);
  const std::vector<std::vector<int>> seqs{{1, 4, 2, 6, 3, 11}, {2, 2}, {5}, {7, 8, 9, 10}};
  const Mat<double> r = random_matrix(256, 4, rng, 1.0);
  LstmCache<double> cache;
  net.forward(params, seqs, &cache);
  std::vector<double> grad(net.num_params(), 0.0);
  net.backward(params, cache, r, grad);
  return worst_relative_error(params, grad, [&] { return (net.forward(params, seqs).array() * r.array()).sum(); },
                              100, seed);
}

double triplet_error(EmbeddingModel<double>& model, const TripletExample& t, const WordVectorTable* words,
                     std::uint64_t seed) {
  const auto enc = encode_triplet(model, t, words);
  std::vector<double> grad(model.num_params(), 0.0), scratch(model.num_params());
  triplet_loss_and_grads<double>(model, enc, grad);
  std::span<double> params(model.params().data(), model.params().size());
  return worst_relative_error(params, grad, [&] { return triplet_loss_and_grads<double>(model, enc, scratch); },
                              100, seed);
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  std::vector<std::pair<std::string, double>> errs;
  errs.emplace_back("mlp-h", mlp_error(false, 1));
  errs.emplace_back("mlp-g", mlp_error(true, 2));
  errs.emplace_back("bilstm", lstm_error(3));

  auto num = [](std::string id, std::vector<float> v) { return make_numeric(std::move(id), "t", "x", std::move(v)); };
  EmbeddingModel<double> nm(ValueSpace::Numeric, ModelConfig{});
  nm.init(4);
  errs.emplace_back("triplet-numeric",
                    triplet_error(nm,
                                  {num("a", {0.5f, 1.5f, -2.0f, 7.0f}), num("p", {0.75f, 1.25f, -3.0f}),
                                   num("n", {100.0f, 2e5f, 7.0f, -1e-3f})},
                                  nullptr, 5));

  WordVectorTable words(kEmbeddingDim);
  std::mt19937_64 rng(6);
  std::normal_distribution<float> normal(0.0f, 0.1f);
  for (const char* w : {"alpha", "beta", "gamma", "delta", "eps"}) {
    std::vector<float> v(kEmbeddingDim);
    for (auto& x : v) x = normal(rng);
    words.insert(w, v);
  }
  auto lang = [](std::string id, std::vector<std::string> v) {
    return make_strings(std::move(id), "t", "x", ValueSpace::Language, std::move(v));
  };
  EmbeddingModel<double> lm(ValueSpace::Language, ModelConfig{});
  lm.init(7);
  errs.emplace_back("triplet-language",
                    triplet_error(lm,
                                  {lang("a", {"alpha", "beta gamma", "alpha"}), lang("p", {"beta", "alpha", "delta"}),
                                   lang("n", {"eps", "eps delta", "gamma"})},
                                  &words, 8));

  auto gen = [](std::string id, std::vector<std::string> v) {
    return make_strings(std::move(id), "t", "x", ValueSpace::GeneralString, std::move(v));
  };
  const std::vector<ColumnDataset> sd = {gen("a", {"ab1", "x-9", "ab1"}), gen("p", {"ab2", "x-7", "q"}),
                                         gen("n", {"ZZZZ", "hello world", "0"})};
  EmbeddingModel<double> sm(ValueSpace::GeneralString, ModelConfig{}, CharVocabulary::build(sd));
  sm.init(9);
  errs.emplace_back("triplet-string", triplet_error(sm, {sd[0], sd[1], sd[2]}, nullptr, 10));

  double worst = 0.0;
  std::string detail;
  for (const auto& [name, e] : errs) {
    worst = std::max(worst, e);
    detail += fmt("%s %.2e  ", name.c_str(), e);
  }
  report({1, worst < 1e-4, false,
          fmt("gradients: max relative error %.2e over 6 x 100 probes (< 1e-4), %.1fs", worst, seconds_since(t0)),
          {detail}});
}

// ---------------------------------------------------------------- 2, 3

void criterion_loss_identity() {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ud(1e-3, 20.0);
  std::bernoulli_distribution uy(0.5);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double d = ud(rng);
    const int y = uy(rng) ? 1 : 0;
    const double p = std::exp(-d);
    const double cross_entropy = -y * std::log(p) - (1 - y) * std::log(1 - p);
    worst = std::max(worst, std::abs(pair_loss(MatchScore::from_distance(d), y) - cross_entropy));
  }
  report({2, worst <= 1e-12, false, fmt("loss identity: max |difference| %.2e over 1000 (D, y) (<= 1e-12)", worst)});
}

DatasetEmbedding random_embedding(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DatasetEmbedding e;
  e.h.resize(kEmbeddingDim);
  for (auto& x : e.h) x = u(rng);
  e.g = std::abs(u(rng)) * 2.0;
  return e;
}

void criterion_index_identity() {
  std::mt19937_64 rng(31);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto a = random_embedding(rng), b = random_embedding(rng);
    const auto r = augment(a, "a", VectorKind::Repository);
    const auto q = augment(b, "b", VectorKind::Query);
    worst = std::max(worst, std::abs(squared_distance(r.v, q.v) - pairwise_distance(a, b).d));
  }
  report({3, worst <= 1e-9, false, fmt("index identity: max |difference| %.2e over 1000 pairs (<= 1e-9)", worst)});
}

// ---------------------------------------------------------------- shared numeric run

struct NumericRun {
  SyntheticCorpus corpus;
  std::vector<ColumnDataset> repo, queries;  // even tables, odd tables
  GroundTruth gt_repo, gt_queries, gt_all;
  TrainResult trained;
  double train_seconds = 0.0;
};

NumericRun numeric_run() {
  NumericRun run;
  SyntheticCorpusConfig sc;  // 10 affine + 10 distinct variables, 10 tables, 2000 samples
  sc.seed = 5;
  run.corpus = generate_synthetic_corpus(sc);
  for (std::size_t t = 0; t < run.corpus.tables.size(); ++t)
    for (const auto& c : run.corpus.tables[t].columns) (t % 2 ? run.queries : run.repo).push_back(c);
  run.gt_repo = GroundTruth::build(run.repo, nullptr);
  run.gt_queries = GroundTruth::build(run.queries, nullptr);
  std::vector<ColumnDataset> all = run.repo;
  all.insert(all.end(), run.queries.begin(), run.queries.end());
  run.gt_all = GroundTruth::build(all, nullptr);

  TrainConfig cfg;
  cfg.cap = 128;
  cfg.batch = 8;
  cfg.max_steps = 9000;
  cfg.patience = 9000;
  cfg.window = 100;
  cfg.seed = 3;
  const auto t0 = Clock::now();
  run.trained = train_model(run.repo, run.gt_repo, cfg);
  run.train_seconds = seconds_since(t0);
  std::printf("numeric model: %zu repository datasets, %zu steps, %.1fs, loss %.4f -> %.4f\n", run.repo.size(),
              run.trained.log.size(), run.train_seconds, run.trained.log.front().moving_average,
              run.trained.log.back().moving_average);
  return run;
}

constexpr BaselineMethod kNumericBaselines[] = {BaselineMethod::MeanSD, BaselineMethod::KS, BaselineMethod::MMD,
                                                BaselineMethod::SCF};

// ---------------------------------------------------------------- 4

double quantile99(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(0.99 * static_cast<double>(v.size() - 1))];
}

void criterion_concentration(const NumericRun& run) {
  const auto t0 = Clock::now();
  const auto& model = run.trained.model;
  // one affine and one distinct query dataset
  const ColumnDataset& a = run.queries[0];
  const ColumnDataset& b = run.queries[run.corpus.variables.size() - 1];
  const double full = pairwise_distance(model.embed(a, nullptr), model.embed(b, nullptr)).d;
  bool within = true, decreasing = true;
  std::vector<double> q99;
  std::string detail;
  for (std::size_t n : {64u, 128u, 256u, 512u}) {
    std::vector<double> dev;
    for (std::uint64_t s = 0; s < 200; ++s) {
      const auto sa = subsample(a, n, derive_seed(s, 2 * n)), sb = subsample(b, n, derive_seed(s, 2 * n + 1));
      dev.push_back(std::abs(pairwise_distance(model.embed(sa, nullptr), model.embed(sb, nullptr)).d - full));
    }
    const double eps = concentration_epsilon(n, kEmbeddingDim);
    const double worst = *std::max_element(dev.begin(), dev.end());
    within = within && worst <= eps;
    if (!q99.empty()) decreasing = decreasing && quantile99(dev) < q99.back();
    q99.push_back(quantile99(dev));
    detail += fmt("n=%zu max %.4f q99 %.4f eps %.1f  ", n, worst, q99.back(), eps);
  }
  report({4, within && decreasing, false,
          fmt("concentration: all deviations within eps(n): %s, q99 decreasing: %s, %.1fs", within ? "yes" : "no",
              decreasing ? "yes" : "no", seconds_since(t0)),
          {detail}});
}

// ---------------------------------------------------------------- 5, 6

void criteria_pairs(const NumericRun& run, const EmbeddingScorer& embed) {
  const auto t0 = Clock::now();
  const double full[] = {1.0};
  const auto diff = build_pairs(run.queries, run.gt_queries, PairMode::Diff, 200, 11);
  const auto split = build_pairs(run.queries, run.gt_queries, PairMode::Split, 100, 12);

  const double embed_diff = eval_pairs(embed, diff, full, 1)[0].auc;
  const double embed_split = eval_pairs(embed, split, full, 1)[0].auc;
  bool separated = embed_diff >= 0.85;
  bool split_ok = embed_split >= 0.90;
  std::string diff_detail = fmt("diff AUC embed %.3f", embed_diff);
  std::string split_detail = fmt("split AUC embed %.3f", embed_split);
  for (const auto m : kNumericBaselines) {
    const BaselineScorer b(m);
    const double d = eval_pairs(b, diff, full, 1)[0].auc;
    const double s = eval_pairs(b, split, full, 1)[0].auc;
    separated = separated && embed_diff - d >= 0.10;
    split_ok = split_ok && s >= 0.90;
    diff_detail += fmt(", %s %.3f", b.name().c_str(), d);
    split_detail += fmt(", %s %.3f", b.name().c_str(), s);
  }
  const bool in_time = run.train_seconds <= 15 * 60;
  report({5, separated && in_time, false,
          fmt("diff analog: embed >= 0.85 and >= each baseline + 0.10: %s; training %.0fs (<= 900s)",
              separated ? "yes" : "no", run.train_seconds),
          {diff_detail}});
  report({6, split_ok, false, fmt("split analog: every method >= 0.90: %s, %.1fs", split_ok ? "yes" : "no",
                                  seconds_since(t0)),
          {split_detail}});
}

// ---------------------------------------------------------------- 8 (shared by both spaces)

struct RetrievalRow {
  std::string method;
  std::vector<double> matches;
  double recall = 0.0;
};

RetrievalRow retrieval_row(const Scorer& s, std::span<const ColumnDataset> queries, std::span<const ColumnDataset> nomatch,
                           std::span<const ColumnDataset> repo, const GroundTruth& gt) {
  std::vector<std::pair<ColumnDataset, ColumnDataset>> matched;
  for (const auto& q : queries)
    for (const auto& r : repo)
      if (gt.match(q.id, r.id)) matched.emplace_back(q, r);
  const auto m = matches_at_k(s, queries, repo, gt);
  const auto c = calibrated_recall(s, nomatch, repo, matched);
  return {s.name(), m.mean_matches, c.recall};
}

// Embed >= every baseline on each of matches@1/5/10 and calibrated recall.
bool embed_dominates(const std::vector<RetrievalRow>& rows, std::vector<std::string>& notes, const char* space) {
  bool ok = true;
  for (const auto& r : rows) {
    notes.push_back(fmt("%-9s %-9s m@1 %.3f  m@5 %.3f  m@10 %.3f  calibrated recall %.3f", space, r.method.c_str(),
                        r.matches[0], r.matches[1], r.matches[2], r.recall));
    for (std::size_t k = 0; k < 3; ++k) ok = ok && rows[0].matches[k] >= r.matches[k];
    ok = ok && rows[0].recall >= r.recall;
  }
  return ok;
}

bool numeric_retrieval(const NumericRun& run, const EmbeddingScorer& embed, std::vector<std::string>& notes) {
  // no-match queries: variables from an independent corpus
  SyntheticCorpusConfig nc;
  nc.seed = 1005;
  nc.affine_variables = 0;
  nc.distinct_variables = 5;
  nc.datasets_per_variable = 4;
  const auto novel = generate_synthetic_corpus(nc).datasets();
  std::vector<RetrievalRow> rows{retrieval_row(embed, run.queries, novel, run.repo, run.gt_all)};
  for (const auto m : kNumericBaselines)
    rows.push_back(retrieval_row(BaselineScorer(m), run.queries, novel, run.repo, run.gt_all));
  return embed_dominates(rows, notes, "numeric");
}

// ---------------------------------------------------------------- 11

std::size_t aligned_correctly(const Table& a, const Table& b, std::span<const std::size_t> perm, const Scorer& s,
                              std::uint64_t seed) {
  const auto al = schema_match(column_similarity_matrix(a, b, s), 10, seed);
  std::size_t c = 0;
  for (std::size_t r = 0; r < perm.size(); ++r) c += perm[al.target[r]] == r;
  return c;
}

// Half of each column of `src` in A; the other half, scaled about its mean
// and shifted by up to 10% of its sd, in B under a planted order.
std::pair<Table, Table> perturbed_halves(const Table& src, std::span<const std::size_t> perm, std::mt19937_64& rng) {
  Table a{src.id + "a", {}}, b{src.id + "b", {}};
  std::vector<ColumnDataset> noisy;
  for (const auto& c : src.columns) {
    std::vector<std::size_t> idx(c.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t half = idx.size() / 2;
    a.columns.push_back(select_values(c, std::span(idx).first(half)));
    auto other = select_values(c, std::span(idx).subspan(half));
    double mean = 0.0, ss = 0.0;
    for (float x : other.numbers) mean += x;
    mean /= static_cast<double>(other.numbers.size());
    for (float x : other.numbers) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(other.numbers.size()));
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    const double scale = 1.0 + u(rng), shift = u(rng) * sd;
    for (float& x : other.numbers) x = static_cast<float>(mean + scale * (x - mean) + shift);
    noisy.push_back(std::move(other));
  }
  for (auto k : perm) b.columns.push_back(noisy[k]);
  return {a, b};
}

void criterion_schema(const NumericRun& run, const EmbeddingScorer& embed) {
  const auto t0 = Clock::now();
  // Pairs of query tables: the same 20 variables in both, each affine column
  // under its own table's unit conversion, B's columns in a planted order.
  std::vector<std::size_t> tables;
  for (std::size_t t = 1; t < run.corpus.tables.size(); t += 2) tables.push_back(t);
  std::mt19937_64 rng(17);
  std::size_t correct = 0, total = 0;
  std::string detail;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    for (std::size_t j = i + 1; j < tables.size(); ++j) {
      const Table& a = run.corpus.tables[tables[i]];
      const Table& src = run.corpus.tables[tables[j]];
      std::vector<std::size_t> perm(src.columns.size());
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      Table b{src.id, {}};
      for (auto k : perm) b.columns.push_back(src.columns[k]);
      const std::size_t c = aligned_correctly(a, b, perm, embed, i * 10 + j);
      correct += c;
      total += perm.size();
      detail += fmt("%zu/%zu ", c, perm.size());
    }
  }
  const double precision = static_cast<double>(correct) / static_cast<double>(total);

  // diagnostic: the same variable's sample split in two, B perturbed per column
  std::size_t p_correct = 0, p_total = 0, ks_correct = 0;
  const BaselineScorer ks(BaselineMethod::KS);
  for (std::size_t t : tables) {
    std::vector<std::size_t> perm(run.corpus.tables[t].columns.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto [a, b] = perturbed_halves(run.corpus.tables[t], perm, rng);
    p_correct += aligned_correctly(a, b, perm, embed, t);
    ks_correct += aligned_correctly(a, b, perm, ks, t);
    p_total += perm.size();
  }
  report({11, precision >= 0.9, false,
          fmt("schema matching: precision %.3f over 10 table pairs of 20 columns (>= 0.9), %.1fs", precision,
              seconds_since(t0)),
          {"per pair: " + detail,
           fmt("diagnostic only: perturbed halves of one table (scale 1 +- 0.1, shift +- 0.1 sd): embed %.3f, ks %.3f",
               static_cast<double>(p_correct) / static_cast<double>(p_total),
               static_cast<double>(ks_correct) / static_cast<double>(p_total))}});
}

// ---------------------------------------------------------------- 7 and language retrieval

struct LanguageRun {
  SyntheticCorpus corpus;
  std::vector<ColumnDataset> repo, queries, nomatch;
  GroundTruth gt_all;
  TrainResult trained;
};

// Tables alternate between repository (even) and queries (odd); variables in
// `novel` only appear in query tables.
LanguageRun language_run(const SyntheticCorpusConfig& sc, std::initializer_list<std::size_t> novel_vars,
                         std::size_t cap, const char* label) {
  LanguageRun run;
  run.corpus = generate_synthetic_corpus(sc);
  std::set<std::string> novel;
  for (auto v : novel_vars) novel.insert(run.corpus.variables[v].name);
  for (std::size_t t = 0; t < run.corpus.tables.size(); ++t) {
    for (const auto& c : run.corpus.tables[t].columns) {
      if (t % 2 == 0 && !novel.contains(c.variable_name)) run.repo.push_back(c);
      if (t % 2 == 1) (novel.contains(c.variable_name) ? run.nomatch : run.queries).push_back(c);
    }
  }
  std::vector<ColumnDataset> all = run.repo;
  all.insert(all.end(), run.queries.begin(), run.queries.end());
  run.gt_all = GroundTruth::build(all, &run.corpus.words);
  TrainConfig cfg;
  cfg.cap = cap;
  cfg.batch = 8;
  cfg.max_steps = 1000;
  cfg.patience = 1000;
  cfg.window = 100;
  cfg.seed = 3;
  const auto t0 = Clock::now();
  run.trained = train_model(run.repo, GroundTruth::build(run.repo, &run.corpus.words), cfg, &run.corpus.words);
  std::printf("%s model: %zu repository datasets, %zu steps, %.1fs\n", label, run.repo.size(),
              run.trained.log.size(), seconds_since(t0));
  return run;
}

// 6 boolean and 18 categorical variables; the repository keeps 5 and 15
LanguageRun adjustment_run() {
  SyntheticCorpusConfig sc;
  sc.seed = 7;
  sc.affine_variables = 0;
  sc.distinct_variables = 0;
  sc.boolean_variables = 6;
  sc.categorical_variables = 18;
  sc.samples_per_dataset = 500;
  return language_run(sc, {5, 21, 22, 23}, 1000, "boolean/categorical");
}

// Categorical variables plus clustered ones, whose query and repository
// datasets share no words. Identical booleans are left out: no method can
// rank one boolean variable above another.
LanguageRun retrieval_run() {
  SyntheticCorpusConfig sc;
  sc.seed = 8;
  sc.affine_variables = 0;
  sc.distinct_variables = 0;
  sc.categorical_variables = 10;
  sc.clustered_variables = 10;
  sc.samples_per_dataset = 500;
  return language_run(sc, {8, 9, 18, 19}, 500, "categorical/clustered");
}

void criterion_adjustment(const LanguageRun& run) {
  const auto& words = run.corpus.words;
  std::map<std::string, const ColumnDataset*> by_id;
  for (const auto& d : run.repo) by_id[d.id] = &d;
  double g_bool = 0.0, g_cat = 0.0;
  int n_bool = 0, n_cat = 0;
  for (const auto& [id, g] : g_diagnostics(run.trained.model, run.repo, &words)) {
    if (run.corpus.archetype_of(*by_id[id]) == Archetype::Boolean) {
      g_bool += g;
      ++n_bool;
    } else {
      g_cat += g;
      ++n_cat;
    }
  }
  g_bool /= n_bool;
  g_cat /= n_cat;

  std::vector<std::pair<DatasetEmbedding, std::string>> booleans;
  for (const auto& d : run.repo)
    if (run.corpus.archetype_of(d) == Archetype::Boolean)
      booleans.emplace_back(run.trained.model.embed(d, &words), d.variable_name);
  double p_trained = 0.0, p_flat = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < booleans.size(); ++i) {
    for (std::size_t j = i + 1; j < booleans.size(); ++j) {
      if (booleans[i].second == booleans[j].second) continue;
      auto a = booleans[i].first, b = booleans[j].first;
      p_trained += pairwise_distance(a, b).p;
      a.g = b.g = 0.0;
      p_flat += pairwise_distance(a, b).p;
      ++pairs;
    }
  }
  p_trained /= pairs;
  p_flat /= pairs;

  // prior of a random repository pair being a match
  std::size_t matches = 0, total = 0;
  for (std::size_t i = 0; i < run.repo.size(); ++i)
    for (std::size_t j = i + 1; j < run.repo.size(); ++j, ++total) matches += run.gt_all.match(run.repo[i].id, run.repo[j].id);
  const double prior = static_cast<double>(matches) / static_cast<double>(total);

  const bool g_order = g_bool > g_cat;
  const bool ablation = p_flat > p_trained;
  const bool raw_below_half = p_trained < 0.5;
  report({7, g_order && ablation && raw_below_half, g_order && ablation,
          fmt("adjustment: mean g boolean %.4f > distinct-vocabulary %.4f: %s; cross-boolean p %.4f < 0.5: %s; "
              "g = 0 raises it to %.4f: %s",
              g_bool, g_cat, g_order ? "yes" : "no", p_trained, raw_below_half ? "yes" : "no", p_flat,
              ablation ? "yes" : "no"),
          {"the < 0.5 clause is unattainable under balanced triplet training (optimum 1/(1+q) >= 0.5)",
           fmt("diagnostic only: prior-corrected cross-boolean p %.4f at match prior %.4f",
               recalibrate_probability(p_trained, prior), prior)}});
}

bool language_retrieval(const LanguageRun& run, std::vector<std::string>& notes) {
  const auto& words = run.corpus.words;
  EmbeddingScorer embed(&words);
  embed.add_model(run.trained.model);
  std::vector<RetrievalRow> rows{retrieval_row(embed, run.queries, run.nomatch, run.repo, run.gt_all)};
  for (const auto m : kAllBaselines)
    if (applicable(m, ValueSpace::Language))
      rows.push_back(retrieval_row(BaselineScorer(m, &words), run.queries, run.nomatch, run.repo, run.gt_all));
  return embed_dominates(rows, notes, "language");
}

// ---------------------------------------------------------------- 9

struct AnnMeasure {
  double recall = 0.0;
  double evaluated = 0.0;  // fraction of exhaustive distance evaluations
  double seconds = 0.0;
};

AnnMeasure measure_ann(const std::vector<DatasetEmbedding>& data, const std::vector<DatasetEmbedding>& queries) {
  const auto t0 = Clock::now();
  RepositoryIndex index;
  for (std::size_t i = 0; i < data.size(); ++i) index.add(augment(data[i], "r" + std::to_string(i), VectorKind::Repository));
  SearchStats stats;
  double found = 0.0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto q = augment(queries[i], "q" + std::to_string(i), VectorKind::Query);
    std::set<std::string> truth;
    for (const auto& n : index.knn_exact(q, 10)) truth.insert(n.id);
    for (const auto& n : index.knn_approx(q, 10, &stats)) found += static_cast<double>(truth.count(n.id));
  }
  const double nq = static_cast<double>(queries.size());
  return {found / (10.0 * nq),
          static_cast<double>(stats.distance_evaluations) / (nq * static_cast<double>(data.size())),
          seconds_since(t0)};
}

void criterion_ann() {
  std::mt19937_64 rng(91);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  auto iid = [&] {
    DatasetEmbedding e;
    e.h.resize(kEmbeddingDim);
    for (auto& x : e.h) x = normal(rng);
    e.g = unit(rng);
    return e;
  };
  std::vector<DatasetEmbedding> data(10000), queries(100);
  for (auto& e : data) e = iid();
  for (auto& e : queries) e = iid();
  const auto m = measure_ann(data, queries);
  const bool pass = m.recall >= 0.95 && m.evaluated <= 0.2 && m.seconds < 120;

  // diagnostic: vectors near an 8-dimensional subspace, queries near stored points
  std::vector<std::vector<double>> basis(8, std::vector<double>(kEmbeddingDim));
  for (auto& b : basis)
    for (auto& x : b) x = normal(rng) / std::sqrt(double{kEmbeddingDim});
  auto low_rank = [&] {
    DatasetEmbedding e;
    e.h.assign(kEmbeddingDim, 0.0);
    for (const auto& b : basis) {
      const double c = normal(rng);
      for (std::size_t j = 0; j < b.size(); ++j) e.h[j] += c * b[j];
    }
    for (auto& x : e.h) x += 0.01 * normal(rng);
    e.g = 0.05 * std::abs(normal(rng));
    return e;
  };
  for (auto& e : data) e = low_rank();
  for (auto& e : queries) {
    e = data[std::uniform_int_distribution<std::size_t>(0, data.size() - 1)(rng)];
    for (auto& x : e.h) x += 0.02 * normal(rng);
  }
  const auto s = measure_ann(data, queries);
  report({9, pass, true,
          fmt("ANN on 10000 i.i.d. 302-d vectors: recall@10 %.3f (>= 0.95) at %.1f%% of exhaustive evaluations "
              "(<= 20%%), %.1fs",
              m.recall, 100 * m.evaluated, m.seconds),
          {"i.i.d. high-dimensional vectors leave the 10th neighbor barely closer than a typical point",
           fmt("diagnostic only: low-rank vectors recall@10 %.3f at %.1f%% of evaluations", s.recall,
               100 * s.evaluated)}});
}

// ---------------------------------------------------------------- 10

std::vector<float> normal_sample(std::size_t n, double mean, std::mt19937_64& rng) {
  std::normal_distribution<double> d(mean, 1.0);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(d(rng));
  return v;
}

// unbiased quadratic-time MMD^2, equal sample sizes
double quadratic_mmd(const std::vector<float>& x, const std::vector<float>& y, double sigma) {
  const std::size_t m = x.size();
  const double inv = 1.0 / (2 * sigma * sigma);
  auto k = [inv](double a, double b) { return std::exp(-(a - b) * (a - b) * inv); };
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      sxx += k(x[i], x[j]);
      syy += k(y[i], y[j]);
      sxy += k(x[i], y[j]);
    }
  }
  return (sxx + syy - 2 * sxy) / (static_cast<double>(m) * static_cast<double>(m - 1));
}

std::pair<double, double> mean_and_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1) / n)};
}

void criterion_calibration() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::vector<double> ks, scf;
  for (int r = 0; r < 1000; ++r) {
    const auto x = normal_sample(500, 0.0, rng), y = normal_sample(500, 0.0, rng);
    ks.push_back(ks_test(x, y).p);
    scf.push_back(scf_test(x, y, kScfFrequencies, static_cast<std::uint64_t>(r)).p);
  }
  const double u_ks = uniformity_test(ks), u_scf = uniformity_test(scf);

  std::vector<std::string> notes;
  bool mmd_ok = true;
  for (double shift : {0.0, 0.5}) {
    std::vector<double> lin, quad;
    for (int r = 0; r < 40; ++r) {
      const auto x = normal_sample(1000, 0.0, rng), y = normal_sample(1000, shift, rng);
      const auto res = mmd_linear(x, y, static_cast<std::uint64_t>(r));
      lin.push_back(res.statistic);
      quad.push_back(quadratic_mmd(x, y, res.bandwidth));
    }
    const auto [ml, sl] = mean_and_se(lin);
    const auto [mq, sq] = mean_and_se(quad);
    const double se = std::sqrt(sl * sl + sq * sq);
    mmd_ok = mmd_ok && std::abs(ml - mq) <= 3 * se;
    notes.push_back(fmt("mmd shift %.1f: linear %.5f, quadratic %.5f, |diff| %.5f, 3 se %.5f", shift, ml, mq,
                        std::abs(ml - mq), 3 * se));
  }
  const bool pass = u_ks > 0.01 && u_scf > 0.01 && mmd_ok;
  report({10, pass, false,
          fmt("baseline calibration: null uniformity p (KS %.3f, SCF %.3f) > 0.01; MMD within 3 se: %s, %.1fs", u_ks,
              u_scf, mmd_ok ? "yes" : "no", seconds_since(t0)),
          notes});
}

// ---------------------------------------------------------------- 12

struct Artifacts {
  std::string checkpoint, index, report;
};

Artifacts pipeline_once() {
  SyntheticCorpusConfig sc;
  sc.seed = 12;
  sc.affine_variables = 3;
  sc.distinct_variables = 3;
  sc.datasets_per_variable = 4;
  sc.samples_per_dataset = 300;
  const auto corpus = generate_synthetic_corpus(sc);
  const auto data = corpus.datasets();
  const auto gt = corpus.ground_truth();
  TrainConfig cfg;
  cfg.cap = 100;
  cfg.batch = 4;
  cfg.max_steps = 60;
  cfg.window = 10;
  cfg.model.width = 32;
  cfg.model.embed_dim = 16;
  cfg.seed = 8;
  std::ostringstream log;
  const auto trained = train_model(data, gt, cfg, nullptr, &log);
  Artifacts a;
  std::ostringstream ckpt;
  write_checkpoint(trained.model, ckpt);
  a.checkpoint = ckpt.str() + log.str();

  RepositoryIndex index(IndexConfig{.seed = 4});
  for (const auto& d : data) index.add(augment(trained.model.embed(d, nullptr), d.id, VectorKind::Repository));
  std::ostringstream idx;
  index.write(idx);
  a.index = idx.str();

  EmbeddingScorer embed;
  embed.add_model(trained.model);
  const double fr[] = {1.0, 0.5};
  std::ostringstream rep;
  rep.precision(17);
  for (const auto mode : {PairMode::Split, PairMode::Diff})
    for (const auto& f : eval_pairs(embed, data, gt, mode, fr, 20, 3)) rep << f.fraction << '\t' << f.auc << '\n';
  for (const auto& n : index.knn_approx(augment(trained.model.embed(data[0], nullptr), "q", VectorKind::Query), 5))
    rep << n.id << '\t' << n.d << '\n';
  a.report = rep.str();
  return a;
}

void criterion_determinism() {
  const auto a = pipeline_once(), b = pipeline_once();
  const bool ckpt = a.checkpoint == b.checkpoint, idx = a.index == b.index, rep = a.report == b.report;
  report({12, ckpt && idx && rep, false,
          fmt("determinism: identical checkpoint+log %s, index %s, report %s (%zu, %zu, %zu bytes)",
              ckpt ? "yes" : "no", idx ? "yes" : "no", rep ? "yes" : "no", a.checkpoint.size(), a.index.size(),
              a.report.size())});
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  criterion_gradients();
  criterion_loss_identity();
  criterion_index_identity();

  const auto num = numeric_run();
  EmbeddingScorer embed;
  embed.add_model(num.trained.model);
  criterion_concentration(num);
  criteria_pairs(num, embed);

  criterion_adjustment(adjustment_run());
  const auto lang = retrieval_run();

  {
    const auto t8 = Clock::now();
    std::vector<std::string> notes;
    const bool numeric_ok = numeric_retrieval(num, embed, notes);
    const bool language_ok = language_retrieval(lang, notes);
    report({8, numeric_ok && language_ok, false,
            fmt("retrieval: embed >= every applicable baseline on matches@1/5/10 and calibrated recall: numeric %s, "
                "language %s, %.1fs",
                numeric_ok ? "yes" : "no", language_ok ? "yes" : "no", seconds_since(t8)),
            notes});
  }

  criterion_ann();
  criterion_calibration();
  criterion_schema(num, embed);
  criterion_determinism();

  std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
  int passed = 0, known = 0, unexpected = 0;
  std::printf("\nsummary\n");
  for (const auto& o : outcomes) {
    std::printf("  %2d %s%s\n", o.id, o.pass ? "PASS" : "FAIL", !o.pass && o.known ? " (documented)" : "");
    if (o.pass) {
      ++passed;
    } else if (o.known) {
      ++known;
    } else {
      ++unexpected;
    }
  }
  std::printf("%d passed, %d failed as documented, %d failed unexpectedly, %.0fs total\n", passed, known, unexpected,
              seconds_since(t0));
  return unexpected == 0 ? 0 : 1;
}
