#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "varlens/eval.hpp"
#include "varlens/ingest.hpp"

namespace varlens {

/// p for every (column of a, column of b); cross-space pairs are 0.
Eigen::MatrixXd column_similarity_matrix(const Table& a, const Table& b, const Scorer& scorer);

inline constexpr double kMinAlignedP = 1e-12;

struct Alignment {
  std::vector<std::size_t> target;  // row i is aligned with column target[i]
  double score = 0.0;               // sum of log max(p, 1e-12)
};

double alignment_score(const Eigen::MatrixXd& p, std::span<const std::size_t> target);

/// Best-improvement two-opt from `restarts` random permutations; the best
/// local optimum wins. `trace`, when given, receives the score after every
/// accepted swap, restart after restart.
Alignment schema_match(const Eigen::MatrixXd& p, std::size_t restarts = 10, std::uint64_t seed = 0,
                       std::vector<std::vector<double>>* trace = nullptr);

/// Minimum-cost assignment of every row of the smaller side (rows <= cols
/// or the transpose). Returns pairs (row, col).
std::vector<std::pair<std::size_t, std::size_t>> min_cost_assignment(const Eigen::MatrixXd& cost);

struct AlignedColumn {
  std::size_t query_column = 0;
  std::size_t candidate_column = 0;
  std::string query_id;
  std::string candidate_id;
  double p = 0.0;
};

struct UnionCandidate {
  std::string table_id;
  std::size_t c_star = 0;
  double score = 0.0;                 // geometric mean of p at c*
  std::vector<double> score_by_c;     // entry c-1
  std::vector<AlignedColumn> aligned;  // the c* pairs, best first
};

inline constexpr double kUnionThreshold = 0.5;

/// Scores one candidate table against the query.
UnionCandidate union_candidate(const Table& query, const Table& candidate, const Scorer& scorer,
                               double tau = kUnionThreshold);

/// Top k candidates by (c*, score) descending, ties by table id.
std::vector<UnionCandidate> union_search(const Table& query, std::span<const Table> candidates,
                                         const Scorer& scorer, std::size_t k,
                                         double tau = kUnionThreshold);

/// Tab-separated: rank, table, c*, score, then query_id=candidate_id:p for
/// each aligned pair.
void write_union_ranking(std::ostream& out, std::span<const UnionCandidate> ranking);

}  // namespace varlens
