#ifndef GWTREE_SAMPLERS_HPP
#define GWTREE_SAMPLERS_HPP

// Samplers for Poisson Galton-Watson trees, the survival-conditioned tree in
// its two-type form, and uniformly rooted uniform trees on n vertices.
//
// Every node carries a key; its child counts are drawn from a stream attached
// to that key and its children's keys are derived from it. Sampling a tree to
// depth d and later extending it to depth d' therefore gives exactly the tree
// one would get by sampling to depth d' directly.

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "random.hpp"
#include "tree.hpp"

namespace gwtree {

inline constexpr std::int64_t kDefaultBushCap = 1000000;

namespace detail {

inline constexpr std::uint64_t kCountsTag = 0x436f756e7473ULL;
inline constexpr std::uint64_t kRetryTag = 0x5265747279ULL;

/// Grows a Poisson(mean) Galton-Watson tree under `at` breadth first, each
/// node's offspring drawn from its own key. Returns false if more than `cap`
/// nodes would be created; the partially built subtree is left in place.
inline bool grow_gw(RootedTree& t, NodeId at, double mean, NodeType type, std::int64_t cap) {
  std::queue<NodeId> bfs;
  bfs.push(at);
  std::int64_t created = 1;
  while (!bfs.empty()) {
    const NodeId v = bfs.front();
    bfs.pop();
    Stream rng(derive(t[v].key, kCountsTag));
    const auto kids = static_cast<std::int32_t>(sample_poisson(rng, mean));
    if (created + kids > cap) {
      t.mark_frontier(v, kids);
      while (!bfs.empty()) {
        const NodeId w = bfs.front();
        bfs.pop();
        Stream r2(derive(t[w].key, kCountsTag));
        t.mark_frontier(w, static_cast<std::int32_t>(sample_poisson(r2, mean)));
      }
      return false;
    }
    created += kids;
    const Key parent_key = t[v].key;
    const NodeId first = t.add_children(v, kids, type);
    for (std::int32_t i = 0; i < kids; ++i) {
      t[first + i].key = derive(parent_key, static_cast<std::uint64_t>(i));
      bfs.push(first + i);
    }
  }
  return true;
}

}  // namespace detail

/// PGW(c) tree grown breadth first until extinction or until `node_cap` nodes
/// exist. A capped tree has `capped` set and frontier markers on the nodes
/// whose children were not generated.
inline RootedTree sample_pgw(double c, std::int64_t node_cap, Key seed) {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::domain_error("sample_pgw: c must be positive");
  if (node_cap < 1) throw std::domain_error("sample_pgw: node_cap must be at least 1");
  RootedTree t;
  t.add_root(NodeType::Untyped, seed);
  t.capped = !detail::grow_gw(t, RootedTree::root(), c, NodeType::Untyped, node_cap);
  return t;
}

/// Two-type description of PGW*(c). A type-I node has Q*_{c theta} type-I
/// children and Q_{cq} type-F children; a type-F node has Poisson(cq) type-F
/// children. At c = 1 this degenerates to the spine: one type-I child and
/// Poisson(1) type-F children per spine vertex.
class PgwStarModel {
 public:
  explicit PgwStarModel(double c, std::int64_t bush_cap = kDefaultBushCap) : c_(c), bush_cap_(bush_cap) {
    if (!std::isfinite(c) || c < 1.0) throw std::domain_error("PgwStarModel: c must be at least 1");
    if (c == 1.0) {
      params_ = GWParams{1.0, 1.0, 0.0};
      infinite_mean_ = 0.0;
      finite_mean_ = 1.0;
    } else {
      params_ = extinction_prob(c);
      infinite_mean_ = c * params_.theta;
      finite_mean_ = c * params_.q;
    }
  }

  double c() const noexcept { return c_; }
  const GWParams& params() const noexcept { return params_; }
  double infinite_mean() const noexcept { return infinite_mean_; }
  double finite_mean() const noexcept { return finite_mean_; }

  struct Counts {
    std::int32_t infinite = 0;
    std::int32_t finite = 0;
  };

  /// Offspring counts of a type-I node, a pure function of its key.
  Counts counts(Key key) const {
    Stream rng(derive(key, detail::kCountsTag));
    Counts k;
    k.infinite = static_cast<std::int32_t>(sample_positive_poisson(rng, infinite_mean_));
    k.finite = static_cast<std::int32_t>(sample_poisson(rng, finite_mean_));
    return k;
  }

  /// Creates the children of type-I node `v`. Type-F children receive their
  /// complete bush; type-I children become frontier nodes (counts known,
  /// children absent).
  void expand(RootedTree& t, NodeId v) const {
    const Counts k = counts(t[v].key);
    const Key parent_key = t[v].key;
    const NodeId first = t.add_children(v, k.infinite + k.finite, NodeType::Infinite);
    for (std::int32_t i = 0; i < k.infinite + k.finite; ++i) {
      Node& child = t[first + i];
      child.key = derive(parent_key, static_cast<std::uint64_t>(i));
      if (i >= k.infinite) child.type = NodeType::Finite;
    }
    for (std::int32_t i = 0; i < k.infinite + k.finite; ++i) {
      const NodeId child = first + i;
      if (i < k.infinite) {
        t.mark_frontier(child, total_count(t[child].key));
      } else {
        grow_bush(t, child);
      }
    }
  }

  /// Materializes frontier type-I nodes level by level until every type-I
  /// node at depth < `depth` is expanded.
  void extend(RootedTree& t, std::int32_t depth) const {
    std::vector<NodeId> pending;
    for (NodeId id = 0; id < static_cast<NodeId>(t.size()); ++id) {
      if (t[id].frontier && t[id].type == NodeType::Infinite && t[id].depth < depth) pending.push_back(id);
    }
    while (!pending.empty()) {
      std::vector<NodeId> next;
      for (NodeId v : pending) {
        expand(t, v);
        const Node& n = t[v];
        for (NodeId c = n.first_child; c < n.first_child + n.num_children; ++c) {
          if (t[c].frontier && t[c].depth < depth) next.push_back(c);
        }
      }
      pending.swap(next);
    }
    if (!t.truncation_depth || *t.truncation_depth < depth) t.truncation_depth = depth;
  }

  /// Expander interface for on-demand growth during walks.
  void operator()(RootedTree& t, NodeId v) const { expand(t, v); }

  std::int32_t total_count(Key key) const {
    const Counts k = counts(key);
    return k.infinite + k.finite;
  }

 private:
  void grow_bush(RootedTree& t, NodeId at) const {
    const Key base = t[at].key;
    const std::size_t mark = t.size();
    for (std::uint64_t attempt = 0;; ++attempt) {
      t[at].key = attempt == 0 ? base : derive(base, detail::kRetryTag + attempt);
      if (detail::grow_gw(t, at, finite_mean_, NodeType::Finite, bush_cap_)) return;
      t.rollback(mark, at);
      ++t.rejections;
    }
  }

  double c_;
  std::int64_t bush_cap_;
  GWParams params_;
  double infinite_mean_ = 0.0;
  double finite_mean_ = 0.0;
};

/// PGW*(c) truncated at `depth`: every node at depth < `depth` has its
/// children; type-I nodes at depth `depth` are frontier nodes whose child
/// counts are known. Type-F bushes are always complete.
inline RootedTree sample_pgw_star(const PgwStarModel& model, std::int32_t depth, Key seed) {
  if (depth < 0) throw std::domain_error("sample_pgw_star: depth must be non-negative");
  RootedTree t;
  t.add_root(NodeType::Infinite, seed);
  t.mark_frontier(RootedTree::root(), model.total_count(seed));
  t.truncation_depth = 0;
  model.extend(t, depth);
  return t;
}

inline RootedTree sample_pgw_star(double c, std::int32_t depth, Key seed) {
  return sample_pgw_star(PgwStarModel(c), depth, seed);
}

/// Grows PGW*(c) one level at a time, stopping at `max_depth` or after the
/// first level that brings the tree to at least `node_budget` nodes.
inline RootedTree sample_pgw_star_budgeted(const PgwStarModel& model, std::int32_t max_depth,
                                           std::int64_t node_budget, Key seed) {
  RootedTree t = sample_pgw_star(model, 0, seed);
  for (std::int32_t d = 1; d <= max_depth; ++d) {
    if (static_cast<std::int64_t>(t.size()) >= node_budget) break;
    model.extend(t, d);
  }
  return t;
}

/// Edges of a uniform labelled tree on n vertices, decoded from a uniformly
/// random Pruefer sequence; returned as adjacency lists.
inline std::vector<std::vector<std::int32_t>> uniform_labelled_tree(std::int32_t n, Stream& rng) {
  if (n < 1) throw std::domain_error("uniform_labelled_tree: n must be positive");
  std::vector<std::vector<std::int32_t>> adj(static_cast<std::size_t>(n));
  auto link = [&](std::int32_t a, std::int32_t b) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  };
  if (n == 1) return adj;
  if (n == 2) {
    link(0, 1);
    return adj;
  }
  std::vector<std::int32_t> code(static_cast<std::size_t>(n - 2));
  std::vector<std::int32_t> degree(static_cast<std::size_t>(n), 1);
  for (auto& x : code) {
    x = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(n)));
    ++degree[static_cast<std::size_t>(x)];
  }
  // Linear-time decoding.
  std::int32_t ptr = 0;
  while (degree[static_cast<std::size_t>(ptr)] != 1) ++ptr;
  std::int32_t leaf = ptr;
  for (std::int32_t v : code) {
    link(leaf, v);
    --degree[static_cast<std::size_t>(leaf)];
    if (--degree[static_cast<std::size_t>(v)] == 1 && v < ptr) {
      leaf = v;
    } else {
      ++ptr;
      while (degree[static_cast<std::size_t>(ptr)] != 1) ++ptr;
      leaf = ptr;
    }
  }
  link(leaf, n - 1);
  return adj;
}

/// Uniform tree on n vertices with a uniform root, labels forgotten. Equal in
/// law to PGW(lambda) conditioned on having n vertices, for every lambda.
inline RootedTree sample_uniform_rooted_tree(std::int32_t n, Key seed) {
  if (n < 1) throw std::domain_error("sample_uniform_rooted_tree: n must be positive");
  Stream rng(seed);
  const auto adj = uniform_labelled_tree(n, rng);
  const auto root = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(n)));
  RootedTree t;
  t.add_root(NodeType::Untyped, seed);
  attach_tree(t, RootedTree::root(), adj, root, NodeType::Untyped);
  return t;
}

}  // namespace gwtree

#endif  // GWTREE_SAMPLERS_HPP
