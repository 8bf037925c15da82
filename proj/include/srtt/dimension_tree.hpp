#pragma once

#include "srtt/tensor.hpp"

#include <deque>

namespace srtt {

struct TreeNode {
  ModeSet modes;
  Index left = -1;    // node index of the left child, -1 for leaves
  Index right = -1;   // node index of the right child, -1 for leaves
  Index parent = -1;  // -1 for the root
  Index level = 0;    // root at level 0

  bool is_leaf() const { return left < 0; }
};

/// Binary tree over mode subsets: the root holds every mode, leaves hold
/// single modes, and each internal node's children partition it. Nodes are
/// stored breadth-first with the root at index 0 (heap-style enumeration).
///
/// Children must split their parent contiguously (every left-child mode
/// smaller than every right-child mode); this is what lets a node basis be
/// reshaped into a (left x right) matrix under the global first-index-
/// fastest linearization, with the left child's block running fastest.
class DimensionTree {
 public:
  explicit DimensionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    validate();
  }

  /// Recursive halving: a node over modes (a..b) splits after
  /// ceil((b-a+1)/2) modes. Depth is ceil(log2 d). The FIFO construction
  /// enumerates nodes level by level, giving the heap-style layout.
  static DimensionTree balanced(Index order) {
    if (order < 2) throw std::invalid_argument("DimensionTree: order must be >= 2");
    std::vector<TreeNode> nodes;
    std::vector<Index> range;
    for (Index k = 0; k < order; ++k) range.push_back(k);
    nodes.push_back(TreeNode{ModeSet{range}, -1, -1, -1, 0});

    std::deque<Index> queue{0};
    while (!queue.empty()) {
      const Index id = queue.front();
      queue.pop_front();
      const std::vector<Index>& modes = nodes[static_cast<std::size_t>(id)].modes.modes();
      if (modes.size() == 1) continue;
      const std::size_t half = (modes.size() + 1) / 2;
      const std::vector<Index> left_modes(modes.begin(), modes.begin() + half);
      const std::vector<Index> right_modes(modes.begin() + half, modes.end());
      const Index level = nodes[static_cast<std::size_t>(id)].level + 1;

      const Index left_id = static_cast<Index>(nodes.size());
      nodes.push_back(TreeNode{ModeSet{left_modes}, -1, -1, id, level});
      const Index right_id = static_cast<Index>(nodes.size());
      nodes.push_back(TreeNode{ModeSet{right_modes}, -1, -1, id, level});
      nodes[static_cast<std::size_t>(id)].left = left_id;
      nodes[static_cast<std::size_t>(id)].right = right_id;
      queue.push_back(left_id);
      queue.push_back(right_id);
    }
    return DimensionTree(std::move(nodes));
  }

  Index num_nodes() const { return static_cast<Index>(nodes_.size()); }
  const TreeNode& node(Index id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Index order() const { return nodes_[0].modes.size(); }

  Index depth() const {
    Index z = 0;
    for (const auto& n : nodes_) z = std::max(z, n.level);
    return z;
  }

  std::vector<Index> leaves() const {
    std::vector<Index> out;
    for (Index i = 0; i < num_nodes(); ++i)
      if (node(i).is_leaf()) out.push_back(i);
    return out;
  }

  /// Internal node ids except the root, by decreasing level (deepest first)
  /// and ascending id within a level: the visit order of a root-to-leaves
  /// pass over the transfer structure.
  std::vector<Index> internal_nodes_bottom_up() const {
    std::vector<Index> out;
    for (Index level = depth(); level >= 1; --level)
      for (Index i = 1; i < num_nodes(); ++i)
        if (!node(i).is_leaf() && node(i).level == level) out.push_back(i);
    return out;
  }

  Index leaf_of_mode(Index mode) const {
    for (Index i = 0; i < num_nodes(); ++i)
      if (node(i).is_leaf() && node(i).modes[0] == mode) return i;
    throw std::invalid_argument("DimensionTree: no leaf for mode " + std::to_string(mode));
  }

  /// Row count of the mode-set unfolding at a node.
  Index node_rows(Index id, const Shape& shape) const {
    Index rows = 1;
    for (Index m : node(id).modes) rows *= shape.dim(m);
    return rows;
  }

  Index node_cols(Index id, const Shape& shape) const {
    return shape.num_elements() / node_rows(id, shape);
  }

 private:
  void validate() const {
    if (nodes_.empty()) throw std::invalid_argument("DimensionTree: empty");
    const Index d = nodes_[0].modes.size();
    if (d < 2) throw std::invalid_argument("DimensionTree: order must be >= 2");
    for (Index k = 0; k < d; ++k)
      if (nodes_[0].modes[k] != k)
        throw std::invalid_argument("DimensionTree: root must hold modes 0..d-1");
    if (nodes_[0].parent != -1) throw std::invalid_argument("DimensionTree: root has a parent");

    Index leaf_count = 0;
    for (Index i = 0; i < num_nodes(); ++i) {
      const TreeNode& n = node(i);
      if ((n.left < 0) != (n.right < 0))
        throw std::invalid_argument("DimensionTree: node must have zero or two children");
      if (n.is_leaf()) {
        if (n.modes.size() != 1)
          throw std::invalid_argument("DimensionTree: leaves must hold a single mode");
        ++leaf_count;
        continue;
      }
      if (n.left >= num_nodes() || n.right >= num_nodes())
        throw std::invalid_argument("DimensionTree: child index out of range");
      const ModeSet& l = node(n.left).modes;
      const ModeSet& r = node(n.right).modes;
      if (node(n.left).parent != i || node(n.right).parent != i)
        throw std::invalid_argument("DimensionTree: child parent link mismatch");
      // Disjoint contiguous partition with the left block first.
      if (l.size() + r.size() != n.modes.size())
        throw std::invalid_argument("DimensionTree: children do not partition the node");
      if (l.modes().back() >= r.modes().front())
        throw std::invalid_argument("DimensionTree: left child modes must precede right child modes");
      std::vector<Index> merged = l.modes();
      merged.insert(merged.end(), r.modes().begin(), r.modes().end());
      if (merged != n.modes.modes())
        throw std::invalid_argument("DimensionTree: children do not partition the node");
    }
    if (leaf_count != d) throw std::invalid_argument("DimensionTree: expected one leaf per mode");
  }

  std::vector<TreeNode> nodes_;
};

/// Per-node rank (or fiber-sample budget) vector, indexed like the tree's
/// node array. The root entry of a rank vector is fixed at 1: the root
/// carries no basis of its own.
using NodeRanks = std::vector<Index>;

inline NodeRanks uniform_node_ranks(const DimensionTree& tree, Index rank) {
  NodeRanks out(static_cast<std::size_t>(tree.num_nodes()), rank);
  out[0] = 1;
  return out;
}

/// Leaf entries of a per-node vector, ordered by mode.
inline Ranks leaf_values(const DimensionTree& tree, const NodeRanks& per_node) {
  Ranks out(static_cast<std::size_t>(tree.order()));
  for (Index id : tree.leaves())
    out[static_cast<std::size_t>(tree.node(id).modes[0])] = per_node[static_cast<std::size_t>(id)];
  return out;
}

/// Fiber budgets w_S = min(ceil(alpha * n_S), n_{not in S}) per node.
inline NodeRanks node_sample_counts(const DimensionTree& tree, const Shape& shape, double alpha) {
  NodeRanks out(static_cast<std::size_t>(tree.num_nodes()), 1);
  for (Index i = 1; i < tree.num_nodes(); ++i) {
    const Index rows = tree.node_rows(i, shape);
    const Index cols = tree.node_cols(i, shape);
    out[static_cast<std::size_t>(i)] =
        std::min(static_cast<Index>(std::ceil(alpha * static_cast<double>(rows))), cols);
  }
  return out;
}

}  // namespace srtt
