#include "varlens/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include "varlens/binary_io.hpp"

namespace varlens {
namespace {

constexpr std::size_t kLanes = 8;
constexpr int kMaxLevel = 16;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

AugmentedVector augment(const DatasetEmbedding& e, std::string id, VectorKind kind) {
  if (!(e.g >= 0.0)) fail(ErrorCode::kInvalidArgument, "augment: negative adjustment g for " + id);
  AugmentedVector out;
  out.id = std::move(id);
  out.kind = kind;
  out.v.assign(e.h.begin(), e.h.end());
  const double root = std::sqrt(e.g);
  out.v.push_back(kind == VectorKind::Repository ? root : 0.0);
  out.v.push_back(kind == VectorKind::Repository ? 0.0 : root);
  return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::kInvalidArgument, "squared_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

RepositoryIndex::RepositoryIndex(IndexConfig config) : config_(config) {
  if (config_.m < 2) fail(ErrorCode::kConfigError, "index: m must be at least 2");
  if (config_.ef_construction < 1 || config_.ef_search < 1) {
    fail(ErrorCode::kConfigError, "index: beam widths must be positive");
  }
}

std::span<const double> RepositoryIndex::vector(std::size_t i) const { return {row(i), dim_}; }

// Fixed lane order keeps the sum independent of memory alignment.
double RepositoryIndex::dist(const double* q, std::size_t node) const {
  const double* r = row(node);
  double acc[kLanes] = {};
  for (std::size_t i = 0; i < stride_; i += kLanes) {
    for (std::size_t j = 0; j < kLanes; ++j) {
      const double t = q[i + j] - r[i + j];
      acc[j] += t * t;
    }
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

int RepositoryIndex::draw_level(std::size_t node) const {
  const std::uint64_t bits = splitmix(config_.seed ^ splitmix(node));
  const double u = (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double ml = 1.0 / std::log(static_cast<double>(config_.m));
  return std::min(kMaxLevel, static_cast<int>(-std::log(u) * ml));
}

std::vector<double> RepositoryIndex::padded_query(const AugmentedVector& q) const {
  if (q.kind != VectorKind::Query) {
    fail(ErrorCode::kInvalidArgument, "index search needs a query-kind vector");
  }
  if (q.v.size() != dim_) {
    fail(ErrorCode::kInvalidArgument, "query dimension " + std::to_string(q.v.size()) +
                                          " does not match index dimension " +
                                          std::to_string(dim_));
  }
  std::vector<double> out(stride_, 0.0);
  std::copy(q.v.begin(), q.v.end(), out.begin());
  return out;
}

std::vector<RepositoryIndex::Candidate> RepositoryIndex::search_layer(
    const double* q, std::vector<Candidate> entry, std::size_t ef, int layer,
    SearchStats* stats) const {
  const auto closer = [](const Candidate& a, const Candidate& b) {
    return a.d < b.d || (a.d == b.d && a.node < b.node);
  };
  const auto farther = [&](const Candidate& a, const Candidate& b) { return closer(b, a); };
  std::vector<char> visited(size(), 0);
  // frontier pops the closest; best pops the farthest
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(farther)> frontier(farther);
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(closer)> best(closer);
  for (const auto& c : entry) {
    if (visited[c.node]) continue;
    visited[c.node] = 1;
    frontier.push(c);
    best.push(c);
    if (best.size() > ef) best.pop();
  }
  while (!frontier.empty()) {
    const Candidate c = frontier.top();
    frontier.pop();
    if (best.size() >= ef && closer(best.top(), c)) break;
    for (std::uint32_t nb : links_[c.node][static_cast<std::size_t>(layer)]) {
      if (visited[nb]) continue;
      visited[nb] = 1;
      const Candidate e{dist(q, nb), nb};
      if (stats) ++stats->distance_evaluations;
      if (best.size() < ef || closer(e, best.top())) {
        frontier.push(e);
        best.push(e);
        if (best.size() > ef) best.pop();
      }
    }
  }
  std::vector<Candidate> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Keep a candidate only if it is closer to the base than to every neighbor
// already kept, which spreads links over different directions.
std::vector<std::uint32_t> RepositoryIndex::select_neighbors(std::vector<Candidate> candidates,
                                                             std::size_t limit) const {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.d < b.d || (a.d == b.d && a.node < b.node);
  });
  std::vector<std::uint32_t> kept;
  for (const auto& c : candidates) {
    if (kept.size() >= limit) break;
    bool diverse = true;
    for (std::uint32_t r : kept) {
      if (dist(row(c.node), r) < c.d) {
        diverse = false;
        break;
      }
    }
    if (diverse) kept.push_back(c.node);
  }
  return kept;
}

void RepositoryIndex::add(const AugmentedVector& v) {
  if (v.kind != VectorKind::Repository) {
    fail(ErrorCode::kInvalidArgument, "index stores repository-kind vectors only");
  }
  if (v.v.empty()) fail(ErrorCode::kInvalidArgument, "empty vector for " + v.id);
  if (empty()) {
    dim_ = v.v.size();
    stride_ = (dim_ + kLanes - 1) / kLanes * kLanes;
  } else if (v.v.size() != dim_) {
    fail(ErrorCode::kInvalidArgument, "vector " + v.id + " has dimension " +
                                          std::to_string(v.v.size()) + ", index has " +
                                          std::to_string(dim_));
  }
  for (double x : v.v) {
    if (!std::isfinite(x)) fail(ErrorCode::kInvalidValue, "non-finite coordinate in " + v.id);
  }
  if (id_set_.contains(v.id)) {
    fail(ErrorCode::kInvalidArgument, "duplicate id in index: " + v.id);
  }

  const std::size_t node = size();
  store_.resize(store_.size() + stride_, 0.0);
  std::copy(v.v.begin(), v.v.end(), store_.begin() + static_cast<std::ptrdiff_t>(node * stride_));
  ids_.push_back(v.id);
  id_set_.insert(v.id);
  const int top = draw_level(node);
  links_.emplace_back(static_cast<std::size_t>(top) + 1);
  if (node == 0) {
    entry_ = 0;
    max_level_ = top;
    return;
  }

  const double* q = row(node);
  std::vector<Candidate> eps = {{dist(q, entry_), static_cast<std::uint32_t>(entry_)}};
  for (int layer = max_level_; layer > top; --layer) {
    eps = search_layer(q, eps, 1, layer, nullptr);
  }
  for (int layer = std::min(top, max_level_); layer >= 0; --layer) {
    const auto found = search_layer(q, eps, config_.ef_construction, layer, nullptr);
    const std::size_t cap = layer == 0 ? 2 * config_.m : config_.m;
    auto& mine = links_[node][static_cast<std::size_t>(layer)];
    mine = select_neighbors(found, config_.m);
    for (std::uint32_t nb : mine) {
      auto& theirs = links_[nb][static_cast<std::size_t>(layer)];
      theirs.push_back(static_cast<std::uint32_t>(node));
      if (theirs.size() > cap) {
        std::vector<Candidate> cands;
        cands.reserve(theirs.size());
        for (std::uint32_t x : theirs) cands.push_back({dist(row(nb), x), x});
        theirs = select_neighbors(std::move(cands), cap);
      }
    }
    eps = found;
  }
  if (top > max_level_) {
    entry_ = node;
    max_level_ = top;
  }
}

std::vector<Neighbor> RepositoryIndex::finish(std::vector<Candidate> found, std::size_t k) const {
  std::sort(found.begin(), found.end(), [&](const Candidate& a, const Candidate& b) {
    return a.d < b.d || (a.d == b.d && ids_[a.node] < ids_[b.node]);
  });
  if (found.size() > k) found.resize(k);
  std::vector<Neighbor> out;
  out.reserve(found.size());
  for (const auto& c : found) out.push_back({ids_[c.node], c.d});
  return out;
}

std::vector<Neighbor> RepositoryIndex::knn_exact(const AugmentedVector& q, std::size_t k) const {
  if (k < 1) fail(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (empty()) return {};
  const auto qp = padded_query(q);
  std::vector<Candidate> all(size());
  for (std::size_t i = 0; i < size(); ++i) all[i] = {dist(qp.data(), i), static_cast<std::uint32_t>(i)};
  return finish(std::move(all), k);
}

std::vector<Neighbor> RepositoryIndex::knn_approx(const AugmentedVector& q, std::size_t k,
                                                  std::size_t ef, SearchStats* stats) const {
  if (k < 1) fail(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (ef < k) {
    fail(ErrorCode::kInvalidArgument,
         "ef (" + std::to_string(ef) + ") must be at least k (" + std::to_string(k) + ")");
  }
  if (empty()) return {};
  const auto qp = padded_query(q);
  std::vector<Candidate> eps = {{dist(qp.data(), entry_), static_cast<std::uint32_t>(entry_)}};
  if (stats) ++stats->distance_evaluations;
  for (int layer = max_level_; layer > 0; --layer) {
    eps = search_layer(qp.data(), eps, 1, layer, stats);
  }
  return finish(search_layer(qp.data(), eps, ef, 0, stats), k);
}

// "VLIX", version, count, dim, m, ef_construction, ef_search, seed, ids,
// vectors (float64), entry point, then per node its levels and adjacency.
void RepositoryIndex::write(std::ostream& out) const {
  io::Writer w(out);
  w.bytes("VLIX", 4);
  w.u32(kIndexVersion);
  w.u64(size());
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u32(config_.m);
  w.u32(config_.ef_construction);
  w.u32(config_.ef_search);
  w.u64(config_.seed);
  for (const auto& id : ids_) w.str(id);
  for (std::size_t i = 0; i < size(); ++i) {
    for (double x : vector(i)) w.f64(x);
  }
  w.u64(entry_);
  for (const auto& levels : links_) {
    w.u32(static_cast<std::uint32_t>(levels.size()));
    for (const auto& list : levels) {
      w.u32(static_cast<std::uint32_t>(list.size()));
      for (std::uint32_t nb : list) w.u32(nb);
    }
  }
}

RepositoryIndex RepositoryIndex::read(std::istream& in) {
  io::Reader r(in, "index");
  r.expect_magic("VLIX");
  const std::uint32_t version = r.u32();
  if (version != kIndexVersion) {
    fail(ErrorCode::kUnsupportedVersion, "index version " + std::to_string(version) +
                                             " is not supported (expected " +
                                             std::to_string(kIndexVersion) + ")");
  }
  const std::uint64_t count = r.u64();
  const std::uint32_t dim = r.u32();
  IndexConfig cfg;
  cfg.m = r.u32();
  cfg.ef_construction = r.u32();
  cfg.ef_search = r.u32();
  cfg.seed = r.u64();
  if (count > (1u << 28) || dim > (1u << 20) || (count > 0 && dim == 0)) {
    fail(ErrorCode::kFormatError, "index: implausible header");
  }
  RepositoryIndex idx(cfg);
  idx.dim_ = dim;
  idx.stride_ = (dim + kLanes - 1) / kLanes * kLanes;
  idx.ids_.resize(count);
  for (auto& id : idx.ids_) id = r.str();
  idx.store_.assign(count * idx.stride_, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < dim; ++j) idx.store_[i * idx.stride_ + j] = r.f64();
  }
  idx.entry_ = r.u64();
  if (count > 0 && idx.entry_ >= count) fail(ErrorCode::kFormatError, "index: bad entry point");
  idx.links_.resize(count);
  for (auto& levels : idx.links_) {
    const std::uint32_t n_levels = r.u32();
    if (n_levels < 1 || n_levels > kMaxLevel + 1) fail(ErrorCode::kFormatError, "index: bad level");
    levels.resize(n_levels);
    for (std::size_t layer = 0; layer < n_levels; ++layer) {
      const std::uint32_t degree = r.u32();
      if (degree > (layer == 0 ? 2 * cfg.m : cfg.m)) {
        fail(ErrorCode::kFormatError, "index: neighbor list exceeds the degree limit");
      }
      levels[layer].resize(degree);
      for (auto& nb : levels[layer]) {
        nb = r.u32();
        if (nb >= count) fail(ErrorCode::kFormatError, "index: neighbor out of range");
      }
    }
    idx.max_level_ = std::max(idx.max_level_, static_cast<int>(n_levels) - 1);
  }
  if (count > 0 && idx.level(idx.entry_) != idx.max_level_) {
    fail(ErrorCode::kFormatError, "index: entry point is not on the top level");
  }
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t layer = 0; layer < idx.links_[i].size(); ++layer) {
      for (std::uint32_t nb : idx.links_[i][layer]) {
        if (idx.links_[nb].size() <= layer) fail(ErrorCode::kFormatError, "index: dangling link");
      }
    }
  }
  if (!r.at_end()) fail(ErrorCode::kFormatError, "index: trailing bytes");
  idx.id_set_.insert(idx.ids_.begin(), idx.ids_.end());
  if (idx.id_set_.size() != idx.ids_.size()) fail(ErrorCode::kFormatError, "index: duplicate ids");
  return idx;
}

void save_index(const RepositoryIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  index.write(out);
}

RepositoryIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot read " + path.string());
  return RepositoryIndex::read(in);
}

}  // namespace varlens
