#include "varlens/apps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "varlens/error.hpp"

namespace varlens {

namespace {

Eigen::MatrixXd log_weights(const Eigen::MatrixXd& p) {
  return p.unaryExpr([](double v) { return std::log(std::max(v, kMinAlignedP)); });
}

}  // namespace

Eigen::MatrixXd column_similarity_matrix(const Table& a, const Table& b, const Scorer& scorer) {
  const auto scores = scorer.score_all(a.columns, b.columns);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(a.columns.size()),
                    static_cast<Eigen::Index>(b.columns.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = scores[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].p;
    }
  return m;
}

double alignment_score(const Eigen::MatrixXd& p, std::span<const std::size_t> target) {
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    s += std::log(std::max(p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(target[i])),
                           kMinAlignedP));
  }
  return s;
}

Alignment schema_match(const Eigen::MatrixXd& p, std::size_t restarts, std::uint64_t seed,
                       std::vector<std::vector<double>>* trace) {
  if (p.rows() != p.cols()) {
    fail(ErrorCode::kInvalidArgument, "schema_match needs equal schema sizes, got " +
                                          std::to_string(p.rows()) + "x" + std::to_string(p.cols()));
  }
  if (restarts == 0) fail(ErrorCode::kInvalidArgument, "schema_match needs at least one restart");
  const auto n = static_cast<std::size_t>(p.rows());
  const Eigen::MatrixXd w = log_weights(p);
  const auto at = [&](std::size_t i, std::size_t j) {
    return w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };
  std::mt19937_64 rng(seed);
  Alignment best;
  best.score = -std::numeric_limits<double>::infinity();
  if (trace) trace->clear();

  for (std::size_t r = 0; r < restarts; ++r) {
    std::vector<std::size_t> t(n);
    std::iota(t.begin(), t.end(), 0);
    std::shuffle(t.begin(), t.end(), rng);
    double score = alignment_score(p, t);
    std::vector<double> steps{score};
    for (;;) {
      double gain = 1e-12;
      std::size_t bi = n, bj = n;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          const double delta = at(i, t[j]) + at(j, t[i]) - at(i, t[i]) - at(j, t[j]);
          if (delta > gain) {
            gain = delta;
            bi = i;
            bj = j;
          }
        }
      if (bi == n) break;
      std::swap(t[bi], t[bj]);
      score = alignment_score(p, t);
      steps.push_back(score);
    }
    if (trace) trace->push_back(std::move(steps));
    if (score > best.score) best = Alignment{std::move(t), score};
  }
  return best;
}

// Shortest augmenting path with potentials over a rows <= cols matrix.
std::vector<std::pair<std::size_t, std::size_t>> min_cost_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() > cost.cols()) {
    auto t = min_cost_assignment(cost.transpose());
    for (auto& [a, b] : t) std::swap(a, b);
    std::sort(t.begin(), t.end());
    return t;
  }
  const auto n = static_cast<std::size_t>(cost.rows()), m = static_cast<std::size_t>(cost.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> owner(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                           u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t j = 1; j <= m; ++j) {
    if (owner[j] != 0) out.emplace_back(owner[j] - 1, j - 1);
  }
  std::sort(out.begin(), out.end());
  return out;
}

UnionCandidate union_candidate(const Table& query, const Table& candidate, const Scorer& scorer,
                               double tau) {
  if (query.columns.empty()) fail(ErrorCode::kInvalidArgument, "query table has no columns");
  if (candidate.columns.empty()) {
    fail(ErrorCode::kInvalidArgument, "candidate table " + candidate.id + " has no columns");
  }
  const Eigen::MatrixXd p = column_similarity_matrix(query, candidate, scorer);
  const auto pairs = min_cost_assignment(-log_weights(p));

  UnionCandidate out;
  out.table_id = candidate.id;
  std::vector<AlignedColumn> aligned;
  for (const auto& [i, j] : pairs) {
    aligned.push_back({i, j, query.columns[i].id, candidate.columns[j].id,
                       p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
  }
  std::stable_sort(aligned.begin(), aligned.end(),
                   [](const AlignedColumn& a, const AlignedColumn& b) { return a.p > b.p; });

  double log_sum = 0.0;
  std::size_t best_c = 1;
  for (std::size_t c = 1; c <= aligned.size(); ++c) {
    log_sum += std::log(std::max(aligned[c - 1].p, kMinAlignedP));
    out.score_by_c.push_back(std::exp(log_sum / static_cast<double>(c)));
    if (out.score_by_c.back() > out.score_by_c[best_c - 1]) best_c = c;
  }
  out.c_star = best_c;
  for (std::size_t c = aligned.size(); c >= 1; --c) {
    if (out.score_by_c[c - 1] >= tau) {
      out.c_star = c;
      break;
    }
  }
  out.score = out.score_by_c[out.c_star - 1];
  aligned.resize(out.c_star);
  out.aligned = std::move(aligned);
  return out;
}

std::vector<UnionCandidate> union_search(const Table& query, std::span<const Table> candidates,
                                         const Scorer& scorer, std::size_t k, double tau) {
  if (k == 0) fail(ErrorCode::kInvalidArgument, "union_search needs k >= 1");
  std::vector<UnionCandidate> all;
  for (const auto& c : candidates) {
    if (c.columns.empty()) {
      warn("skipping candidate table " + c.id + " with no columns");
      continue;
    }
    all.push_back(union_candidate(query, c, scorer, tau));
  }
  std::sort(all.begin(), all.end(), [](const UnionCandidate& a, const UnionCandidate& b) {
    if (a.c_star != b.c_star) return a.c_star > b.c_star;
    if (a.score != b.score) return a.score > b.score;
    return a.table_id < b.table_id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

void write_union_ranking(std::ostream& out, std::span<const UnionCandidate> ranking) {
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    const auto& c = ranking[r];
    out << r + 1 << '\t' << c.table_id << '\t' << c.c_star << '\t' << c.score;
    for (const auto& a : c.aligned) out << '\t' << a.query_id << '=' << a.candidate_id << ':' << a.p;
    out << '\n';
  }
}

}  // namespace varlens
