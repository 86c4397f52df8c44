#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "varlens/core.hpp"

namespace varlens {

enum class VectorKind : std::uint8_t { Repository = 0, Query = 1 };

/// Embedding rewritten so that the match distance becomes a squared
/// Euclidean distance:
///   repository  [h; sqrt(g); 0]
///   query       [h; 0; sqrt(g)]
/// |r - q|^2 = |h_r - h_q|^2 + g_r + g_q.
struct AugmentedVector {
  std::vector<double> v;
  std::string id;
  VectorKind kind = VectorKind::Repository;
};

AugmentedVector augment(const DatasetEmbedding& e, std::string id, VectorKind kind);

double squared_distance(std::span<const double> a, std::span<const double> b);

struct Neighbor {
  std::string id;
  double d = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct IndexConfig {
  std::uint32_t m = 16;  // max degree above layer 0; layer 0 allows 2m
  std::uint32_t ef_construction = 100;
  std::uint32_t ef_search = 64;
  std::uint64_t seed = 0;  // level assignment
};

struct SearchStats {
  std::size_t distance_evaluations = 0;
};

/// Repository vectors plus a hierarchical navigable small-world graph over
/// them. Exact and approximate search read the same vector store.
class RepositoryIndex {
 public:
  explicit RepositoryIndex(IndexConfig config = {});

  const IndexConfig& config() const { return config_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  /// Augmented dimension, fixed by the first inserted vector.
  std::size_t dim() const { return dim_; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  std::span<const double> vector(std::size_t i) const;

  /// Inserts a repository-kind vector into the store and the graph.
  void add(const AugmentedVector& v);

  std::vector<Neighbor> knn_exact(const AugmentedVector& q, std::size_t k) const;
  /// Beam search with beam width `ef` (>= k) on the bottom layer.
  std::vector<Neighbor> knn_approx(const AugmentedVector& q, std::size_t k, std::size_t ef,
                                   SearchStats* stats = nullptr) const;
  std::vector<Neighbor> knn_approx(const AugmentedVector& q, std::size_t k,
                                   SearchStats* stats = nullptr) const {
    return knn_approx(q, k, config_.ef_search, stats);
  }

  // graph inspection
  int max_level() const { return max_level_; }
  std::size_t entry_point() const { return entry_; }
  int level(std::size_t node) const { return static_cast<int>(links_[node].size()) - 1; }
  const std::vector<std::uint32_t>& neighbors(std::size_t node, int layer) const {
    return links_[node][static_cast<std::size_t>(layer)];
  }

  void write(std::ostream& out) const;
  static RepositoryIndex read(std::istream& in);

 private:
  struct Candidate {
    double d;
    std::uint32_t node;
  };

  const double* row(std::size_t i) const { return store_.data() + i * stride_; }
  double dist(const double* q, std::size_t node) const;
  int draw_level(std::size_t node) const;
  std::vector<Candidate> search_layer(const double* q, std::vector<Candidate> entry,
                                     std::size_t ef, int layer, SearchStats* stats) const;
  std::vector<std::uint32_t> select_neighbors(std::vector<Candidate> candidates,
                                              std::size_t limit) const;
  std::vector<double> padded_query(const AugmentedVector& q) const;
  std::vector<Neighbor> finish(std::vector<Candidate> found, std::size_t k) const;

  IndexConfig config_;
  std::size_t dim_ = 0;
  std::size_t stride_ = 0;  // dim rounded up to 8 lanes, zero padded
  std::vector<double> store_;
  std::vector<std::string> ids_;
  std::unordered_set<std::string> id_set_;
  // links_[node][layer] for layers 0..level(node)
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;
  std::size_t entry_ = 0;
  int max_level_ = -1;
};

inline constexpr std::uint32_t kIndexVersion = 1;

void save_index(const RepositoryIndex& index, const std::filesystem::path& path);
RepositoryIndex load_index(const std::filesystem::path& path);

}  // namespace varlens
