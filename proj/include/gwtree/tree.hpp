#ifndef GWTREE_TREE_HPP
#define GWTREE_TREE_HPP

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "random.hpp"

namespace gwtree {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

/// Subtree size sentinel for infinite (or truncated infinite-type) branches.
inline constexpr std::int64_t kInfiniteSize = std::numeric_limits<std::int64_t>::max();

/// I: vertex with an infinite line of descent. F: vertex whose subtree is
/// finite. Untyped: plain Galton-Watson or uniform trees.
enum class NodeType : std::uint8_t { Untyped, Infinite, Finite };

inline char type_code(NodeType t) {
  switch (t) {
    case NodeType::Infinite: return 'I';
    case NodeType::Finite: return 'F';
    default: return 'U';
  }
}

struct Node {
  NodeId parent = kNoNode;
  NodeId first_child = kNoNode;  // children occupy [first_child, first_child + num_children)
  std::int32_t num_children = 0;
  std::int32_t depth = 0;
  NodeType type = NodeType::Untyped;
  // Child count is known but the children are not materialized.
  bool frontier = false;
  Key key = 0;
  std::int64_t subtree_size = 0;
};

/// Arena-backed rooted tree. The root is node 0. Children of a node are
/// contiguous in the arena, so a node's children are always created together.
class RootedTree {
 public:
  RootedTree() = default;

  NodeId add_root(NodeType type, Key key = 0) {
    if (!nodes_.empty()) throw std::logic_error("RootedTree::add_root: tree already has a root");
    Node n;
    n.type = type;
    n.key = key;
    nodes_.push_back(n);
    return 0;
  }

  /// Appends `count` children under `parent` and returns the first new id.
  NodeId add_children(NodeId parent, std::int32_t count, NodeType type = NodeType::Untyped) {
    Node& p = nodes_.at(parent);
    if (p.first_child != kNoNode) throw std::logic_error("RootedTree::add_children: children already present");
    p.frontier = false;
    p.num_children = count;
    if (count == 0) return kNoNode;
    const auto first = static_cast<NodeId>(nodes_.size());
    nodes_[parent].first_child = first;
    const std::int32_t depth = nodes_[parent].depth + 1;
    for (std::int32_t i = 0; i < count; ++i) {
      Node c;
      c.parent = parent;
      c.depth = depth;
      c.type = type;
      nodes_.push_back(c);
    }
    return first;
  }

  /// Records a known child count without materializing the children.
  void mark_frontier(NodeId id, std::int32_t child_count) {
    Node& n = nodes_.at(id);
    if (n.first_child != kNoNode) throw std::logic_error("RootedTree::mark_frontier: node already expanded");
    n.frontier = true;
    n.num_children = child_count;
  }

  /// Drops every node with id >= `new_size` and clears the children of `at`,
  /// which must be the only surviving parent of the dropped nodes.
  void rollback(std::size_t new_size, NodeId at) {
    nodes_.resize(new_size);
    Node& n = nodes_.at(static_cast<std::size_t>(at));
    n.first_child = kNoNode;
    n.num_children = 0;
    n.frontier = false;
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  static constexpr NodeId root() noexcept { return 0; }

  const Node& operator[](NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Node& operator[](NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  /// Number of neighbours in the full (untruncated) tree.
  std::int32_t degree(NodeId id) const {
    const Node& n = (*this)[id];
    return n.num_children + (n.parent == kNoNode ? 0 : 1);
  }

  bool materialized(NodeId id) const { return (*this)[id].num_children == 0 || (*this)[id].first_child != kNoNode; }

  /// Smallest depth carrying a frontier node, if any.
  std::optional<std::int32_t> frontier_depth() const {
    std::optional<std::int32_t> d;
    for (const Node& n : nodes_) {
      if (n.frontier && (!d || n.depth < *d)) d = n.depth;
    }
    return d;
  }

  std::optional<std::int32_t> truncation_depth;
  bool capped = false;             // generation hit a node cap
  std::uint64_t rejections = 0;    // finite bushes resampled after exceeding the cap

 private:
  std::vector<Node> nodes_;
};

struct SubtreeStats {
  std::map<std::int64_t, std::int64_t> root_histogram;  // n_k for finite k
  std::int64_t n_infinite = 0;                          // root children with N(v) infinite
};

/// Fills subtree_size for every node: exact for finite subtrees, kInfiniteSize
/// for type-I nodes and for any subtree containing a frontier.
inline SubtreeStats subtree_stats(RootedTree& t) {
  // Children always have larger ids than their parent.
  for (auto id = static_cast<NodeId>(t.size()) - 1; id >= 0; --id) {
    Node& n = t[id];
    bool infinite = n.type == NodeType::Infinite || n.frontier;
    std::int64_t total = 1;
    if (n.first_child != kNoNode) {
      for (NodeId c = n.first_child; c < n.first_child + n.num_children && !infinite; ++c) {
        if (t[c].subtree_size == kInfiniteSize) {
          infinite = true;
        } else {
          total += t[c].subtree_size;
        }
      }
    }
    n.subtree_size = infinite ? kInfiniteSize : total;
  }
  SubtreeStats s;
  if (t.empty()) return s;
  const Node& r = t[RootedTree::root()];
  if (r.first_child == kNoNode) return s;
  for (NodeId c = r.first_child; c < r.first_child + r.num_children; ++c) {
    if (t[c].subtree_size == kInfiniteSize) {
      ++s.n_infinite;
    } else {
      ++s.root_histogram[t[c].subtree_size];
    }
  }
  return s;
}

/// Structural check; returns a description of the first violation found.
inline std::optional<std::string> validate(const RootedTree& t) {
  if (t.empty()) return "empty tree";
  if (t[0].parent != kNoNode) return "root has a parent";
  for (NodeId id = 0; id < static_cast<NodeId>(t.size()); ++id) {
    const Node& n = t[id];
    if (id != 0 && (n.parent < 0 || n.parent >= id)) return "node " + std::to_string(id) + ": bad parent";
    if (id != 0 && n.depth != t[n.parent].depth + 1) return "node " + std::to_string(id) + ": bad depth";
    if (n.first_child != kNoNode) {
      if (n.first_child <= id || n.first_child + n.num_children > static_cast<NodeId>(t.size())) {
        return "node " + std::to_string(id) + ": child range out of bounds";
      }
      std::int32_t infinite_children = 0;
      for (NodeId c = n.first_child; c < n.first_child + n.num_children; ++c) {
        if (t[c].parent != id) return "node " + std::to_string(c) + ": parent/child mismatch";
        if (n.type == NodeType::Finite && t[c].type != NodeType::Finite) {
          return "node " + std::to_string(id) + ": type-F node with non-F child";
        }
        if (t[c].type == NodeType::Infinite) ++infinite_children;
      }
      if (n.type == NodeType::Infinite && infinite_children == 0) {
        return "node " + std::to_string(id) + ": type-I node without type-I child";
      }
    } else if (n.num_children > 0 && !n.frontier && !t.capped) {
      return "node " + std::to_string(id) + ": children missing";
    }
    if (n.type == NodeType::Finite && n.frontier) return "node " + std::to_string(id) + ": type-F frontier";
  }
  return std::nullopt;
}

/// Appends a tree given by adjacency lists under `at`; `root_label` is mapped
/// onto `at`. Children are appended breadth first. Returns arena ids indexed by
/// label.
inline std::vector<NodeId> attach_tree(RootedTree& t, NodeId at,
                                       const std::vector<std::vector<std::int32_t>>& adj,
                                       std::int32_t root_label, NodeType type) {
  std::vector<NodeId> id_of(adj.size(), kNoNode);
  std::vector<std::int32_t> parent_label(adj.size(), -1);
  id_of[static_cast<std::size_t>(root_label)] = at;
  t[at].type = type;
  std::queue<std::int32_t> bfs;
  bfs.push(root_label);
  std::vector<std::int32_t> kids;
  while (!bfs.empty()) {
    const std::int32_t v = bfs.front();
    bfs.pop();
    kids.clear();
    for (std::int32_t w : adj[static_cast<std::size_t>(v)]) {
      if (w != parent_label[static_cast<std::size_t>(v)]) kids.push_back(w);
    }
    const NodeId first = t.add_children(id_of[static_cast<std::size_t>(v)],
                                        static_cast<std::int32_t>(kids.size()), type);
    for (std::size_t i = 0; i < kids.size(); ++i) {
      id_of[static_cast<std::size_t>(kids[i])] = first + static_cast<NodeId>(i);
      parent_label[static_cast<std::size_t>(kids[i])] = v;
      bfs.push(kids[i]);
    }
  }
  return id_of;
}

/// Copies the complete finite subtree below `from` in `src` under `to` in
/// `dst`; `map` receives src id -> dst id for every copied node.
inline void copy_subtree(const RootedTree& src, NodeId from, RootedTree& dst, NodeId to,
                         std::vector<std::pair<NodeId, NodeId>>& map) {
  std::queue<std::pair<NodeId, NodeId>> bfs;
  bfs.emplace(from, to);
  dst[to].type = src[from].type;
  while (!bfs.empty()) {
    auto [s, d] = bfs.front();
    bfs.pop();
    map.emplace_back(s, d);
    const Node& sn = src[s];
    if (sn.frontier) throw std::logic_error("copy_subtree: source subtree is not complete");
    const NodeId first = dst.add_children(d, sn.num_children, sn.type);
    for (std::int32_t i = 0; i < sn.num_children; ++i) {
      dst[first + i].type = src[sn.first_child + i].type;
      bfs.emplace(sn.first_child + i, first + i);
    }
  }
}

// Text format, one node per line after a header:
//   # gwtree-tree <node-count>
//   <id> <parent-id or -1> <type I|F|U> <N(v) or inf>
// Children are listed in arena order, so parent ids determine the shape.
inline void write_tree(std::ostream& os, RootedTree& t) {
  subtree_stats(t);
  os << "# gwtree-tree " << t.size() << '\n';
  for (NodeId id = 0; id < static_cast<NodeId>(t.size()); ++id) {
    const Node& n = t[id];
    os << id << ' ' << n.parent << ' ' << type_code(n.type) << ' ';
    if (n.subtree_size == kInfiniteSize) {
      os << "inf";
    } else {
      os << n.subtree_size;
    }
    os << '\n';
  }
}

inline RootedTree read_tree(std::istream& is) {
  std::string line;
  std::size_t count = 0;
  while (std::getline(is, line)) {
    if (line.rfind("# gwtree-tree ", 0) == 0) {
      count = std::stoull(line.substr(14));
      break;
    }
  }
  if (count == 0) throw std::runtime_error("read_tree: missing header");
  struct Row {
    NodeId parent;
    NodeType type;
    bool infinite;
  };
  std::vector<Row> rows(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(is, line)) throw std::runtime_error("read_tree: truncated input");
    std::istringstream ls(line);
    NodeId id = 0;
    NodeId parent = 0;
    char type = 'U';
    std::string size;
    if (!(ls >> id >> parent >> type >> size) || id != static_cast<NodeId>(i) ||
        (id == 0) != (parent == kNoNode) || parent >= id) {
      throw std::runtime_error("read_tree: malformed line " + std::to_string(i + 2));
    }
    rows[i] = {parent, type == 'I' ? NodeType::Infinite : type == 'F' ? NodeType::Finite : NodeType::Untyped,
               size == "inf"};
  }
  std::vector<std::vector<NodeId>> kids(count);
  for (std::size_t i = 1; i < count; ++i) kids[static_cast<std::size_t>(rows[i].parent)].push_back(static_cast<NodeId>(i));
  RootedTree t;
  t.add_root(rows[0].type);
  // Rebuild breadth first; arena ids are reassigned but the shape is preserved.
  std::vector<NodeId> new_id(count, kNoNode);
  new_id[0] = 0;
  std::queue<NodeId> bfs;
  bfs.push(0);
  while (!bfs.empty()) {
    const NodeId v = bfs.front();
    bfs.pop();
    const auto& ks = kids[static_cast<std::size_t>(v)];
    const NodeId first = t.add_children(new_id[static_cast<std::size_t>(v)], static_cast<std::int32_t>(ks.size()));
    for (std::size_t i = 0; i < ks.size(); ++i) {
      new_id[static_cast<std::size_t>(ks[i])] = first + static_cast<NodeId>(i);
      t[first + static_cast<NodeId>(i)].type = rows[static_cast<std::size_t>(ks[i])].type;
      bfs.push(ks[i]);
    }
  }
  // A childless node recorded as infinite was a frontier when written; its
  // child count is not part of the format.
  for (std::size_t i = 0; i < count; ++i) {
    if (rows[i].infinite && kids[i].empty()) t.mark_frontier(new_id[i], 0);
  }
  subtree_stats(t);
  return t;
}

}  // namespace gwtree

#endif  // GWTREE_TREE_HPP
