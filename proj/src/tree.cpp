#include "btsynth/tree.hpp"

#include <cassert>
#include <stdexcept>

namespace btsynth {

int add_leaf(BehaviorTree& t, BehaviorId id) {
  t.nodes.push_back(Node{NodeKind::Leaf, std::move(id), {}});
  return static_cast<int>(t.nodes.size()) - 1;
}

int add_control(BehaviorTree& t, NodeKind kind, std::vector<int> children) {
  assert(is_control(kind));
  t.nodes.push_back(Node{kind, BehaviorId{}, std::move(children)});
  return static_cast<int>(t.nodes.size()) - 1;
}

namespace {

int count_rec(const BehaviorTree& t, int idx) {
  int n = 1;
  for (int c : t.at(idx).children) {
    n += count_rec(t, c);
  }
  return n;
}

}  // namespace

int node_count(const BehaviorTree& t) {
  if (t.empty()) {
    return 0;
  }
  return count_rec(t, t.root);
}

int parent_of(const BehaviorTree& t, int node) {
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    for (int c : t.nodes[i].children) {
      if (c == node) {
        return static_cast<int>(i);
      }
    }
  }
  return -1;
}

std::vector<int> subtree_of(const BehaviorTree& t, int node) {
  std::vector<int> out;
  std::vector<int> stack{node};
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    out.push_back(i);
    const auto& ch = t.at(i).children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) {
      stack.push_back(*it);
    }
  }
  return out;
}

namespace {

bool equal_rec(const BehaviorTree& a, int ia, const BehaviorTree& b, int ib) {
  const Node& na = a.at(ia);
  const Node& nb = b.at(ib);
  if (na.kind != nb.kind) {
    return false;
  }
  if (na.kind == NodeKind::Leaf) {
    return na.behavior == nb.behavior;
  }
  if (na.children.size() != nb.children.size()) {
    return false;
  }
  for (std::size_t i = 0; i < na.children.size(); ++i) {
    if (!equal_rec(a, na.children[i], b, nb.children[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace

bool structurally_equal(const BehaviorTree& a, const BehaviorTree& b) {
  if (a.empty() || b.empty()) {
    return a.empty() && b.empty();
  }
  return equal_rec(a, a.root, b, b.root);
}

std::vector<Violation> validate(const BehaviorTree& t) {
  std::vector<Violation> out;
  if (t.empty() || t.nodes.empty()) {
    out.push_back({ViolationKind::EmptyTree, -1, "tree has no root"});
    return out;
  }
  if (!is_control(t.at(t.root).kind)) {
    out.push_back({ViolationKind::RootNotControl, t.root,
                   "root must be a Fallback or Sequence"});
  }
  for (int idx : subtree_of(t, t.root)) {
    const Node& n = t.at(idx);
    if (n.kind == NodeKind::Leaf) {
      if (!n.children.empty()) {
        out.push_back({ViolationKind::LeafWithChildren, idx,
                       "leaf node has children"});
      }
      continue;
    }
    if (n.children.empty()) {
      out.push_back({ViolationKind::ChildlessControl, idx,
                     "control node has no children"});
    }
    for (int c : n.children) {
      const Node& child = t.at(c);
      if (is_control(child.kind) && child.kind == n.kind) {
        out.push_back({ViolationKind::SameKindParent, c,
                       "control node repeats its parent's kind"});
      }
    }
    for (std::size_t i = 0; i + 1 < n.children.size(); ++i) {
      const Node& lhs = t.at(n.children[i]);
      const Node& rhs = t.at(n.children[i + 1]);
      if (lhs.kind == NodeKind::Leaf && rhs.kind == NodeKind::Leaf &&
          lhs.behavior.kind() == BehaviorKind::Condition &&
          rhs.behavior.kind() == BehaviorKind::Condition &&
          lhs.behavior == rhs.behavior) {
        out.push_back({ViolationKind::AdjacentIdenticalConditions,
                       n.children[i + 1],
                       "identical condition next to its twin"});
      }
    }
  }
  return out;
}

namespace {

Status tick_rec(const BehaviorTree& t, int idx, const LeafFn& leaf) {
  const Node& n = t.at(idx);
  if (n.kind == NodeKind::Leaf) {
    Status s = leaf(n.behavior);
    if (n.behavior.kind() == BehaviorKind::Condition && s == Status::Running) {
      throw std::logic_error("condition leaf returned Running: " +
                             n.behavior.display());
    }
    return s;
  }
  if (n.kind == NodeKind::Sequence) {
    for (int c : n.children) {
      Status s = tick_rec(t, c, leaf);
      if (s != Status::Success) {
        return s;
      }
    }
    return Status::Success;
  }
  // Fallback
  for (int c : n.children) {
    Status s = tick_rec(t, c, leaf);
    if (s != Status::Failure) {
      return s;
    }
  }
  return Status::Failure;
}

}  // namespace

Status tick(const BehaviorTree& t, const LeafFn& leaf) {
  assert(!t.empty());
  return tick_rec(t, t.root, leaf);
}

// --- edits ------------------------------------------------------------

namespace {

// Copies src's subtree into dst; `graft` may supply replacement children
// for one particular source node.
struct Copier {
  const BehaviorTree& src;
  BehaviorTree& dst;

  int copy(int idx) {
    const Node& n = src.at(idx);
    if (n.kind == NodeKind::Leaf) {
      return add_leaf(dst, n.behavior);
    }
    std::vector<int> children;
    children.reserve(n.children.size());
    for (int c : n.children) {
      children.push_back(copy(c));
    }
    return add_control(dst, n.kind, std::move(children));
  }
};

}  // namespace

BehaviorTree clone(const BehaviorTree& t) {
  BehaviorTree out;
  Copier c{t, out};
  out.root = c.copy(t.root);
  return out;
}

namespace {

// Generic rebuild: walks `t` and, at node `target`, lets `rebuild` decide
// what to emit instead of the plain copy. Returns the new index or -1 if
// the node vanished.
using RebuildFn = std::function<int(BehaviorTree& dst, int src_idx)>;

int rebuild_rec(const BehaviorTree& t, int idx, int target,
                const RebuildFn& fn, BehaviorTree& dst) {
  if (idx == target) {
    return fn(dst, idx);
  }
  const Node& n = t.at(idx);
  if (n.kind == NodeKind::Leaf) {
    return add_leaf(dst, n.behavior);
  }
  std::vector<int> children;
  children.reserve(n.children.size());
  for (int c : n.children) {
    int nc = rebuild_rec(t, c, target, fn, dst);
    if (nc >= 0) {
      children.push_back(nc);
    }
  }
  if (children.empty()) {
    return -1;  // childless control cascades away
  }
  return add_control(dst, n.kind, std::move(children));
}

BehaviorTree rebuilt(const BehaviorTree& t, int target, const RebuildFn& fn) {
  BehaviorTree out;
  out.root = rebuild_rec(t, t.root, target, fn, out);
  return out;
}

}  // namespace

BehaviorTree with_leaf_inserted(const BehaviorTree& t, int parent, int pos,
                                const BehaviorId& id) {
  assert(is_control(t.at(parent).kind));
  return rebuilt(t, parent, [&](BehaviorTree& dst, int src_idx) {
    const Node& n = t.at(src_idx);
    std::vector<int> children;
    for (std::size_t i = 0; i <= n.children.size(); ++i) {
      if (static_cast<int>(i) == pos) {
        children.push_back(add_leaf(dst, id));
      }
      if (i < n.children.size()) {
        int nc = rebuild_rec(t, n.children[i], -1, nullptr, dst);
        children.push_back(nc);
      }
    }
    return add_control(dst, n.kind, std::move(children));
  });
}

BehaviorTree with_control_inserted(const BehaviorTree& t, int parent, int pos,
                                   NodeKind kind, const BehaviorId& child0,
                                   const BehaviorId& child1) {
  assert(is_control(t.at(parent).kind));
  return rebuilt(t, parent, [&](BehaviorTree& dst, int src_idx) {
    const Node& n = t.at(src_idx);
    std::vector<int> children;
    for (std::size_t i = 0; i <= n.children.size(); ++i) {
      if (static_cast<int>(i) == pos) {
        int l0 = add_leaf(dst, child0);
        int l1 = add_leaf(dst, child1);
        children.push_back(add_control(dst, kind, {l0, l1}));
      }
      if (i < n.children.size()) {
        children.push_back(rebuild_rec(t, n.children[i], -1, nullptr, dst));
      }
    }
    return add_control(dst, n.kind, std::move(children));
  });
}

BehaviorTree with_subtree_inserted(const BehaviorTree& t, int parent, int pos,
                                   const BehaviorTree& donor, int donor_node) {
  assert(is_control(t.at(parent).kind));
  return rebuilt(t, parent, [&](BehaviorTree& dst, int src_idx) {
    const Node& n = t.at(src_idx);
    std::vector<int> children;
    for (std::size_t i = 0; i <= n.children.size(); ++i) {
      if (static_cast<int>(i) == pos) {
        Copier c{donor, dst};
        children.push_back(c.copy(donor_node));
      }
      if (i < n.children.size()) {
        children.push_back(rebuild_rec(t, n.children[i], -1, nullptr, dst));
      }
    }
    return add_control(dst, n.kind, std::move(children));
  });
}

std::optional<BehaviorTree> with_subtree_deleted(const BehaviorTree& t,
                                                 int node) {
  assert(node != t.root);
  BehaviorTree out = rebuilt(t, node, [](BehaviorTree&, int) { return -1; });
  if (out.root < 0) {
    return std::nullopt;
  }
  return out;
}

BehaviorTree with_node_replaced_by_leaf(const BehaviorTree& t, int node,
                                        const BehaviorId& id) {
  return rebuilt(t, node, [&](BehaviorTree& dst, int) {
    return add_leaf(dst, id);
  });
}

BehaviorTree with_control_kind_changed(const BehaviorTree& t, int node,
                                       NodeKind kind) {
  assert(is_control(t.at(node).kind) && is_control(kind));
  return rebuilt(t, node, [&](BehaviorTree& dst, int src_idx) {
    const Node& n = t.at(src_idx);
    std::vector<int> children;
    for (int c : n.children) {
      children.push_back(rebuild_rec(t, c, -1, nullptr, dst));
    }
    return add_control(dst, kind, std::move(children));
  });
}

BehaviorTree with_leaf_replaced_by_control(const BehaviorTree& t, int node,
                                           NodeKind kind,
                                           const BehaviorId& child0,
                                           const BehaviorId& child1) {
  assert(t.at(node).kind == NodeKind::Leaf);
  return rebuilt(t, node, [&](BehaviorTree& dst, int) {
    int l0 = add_leaf(dst, child0);
    int l1 = add_leaf(dst, child1);
    return add_control(dst, kind, {l0, l1});
  });
}

BehaviorTree with_subtree_replaced(const BehaviorTree& t, int node,
                                   const BehaviorTree& repl, int repl_root) {
  return rebuilt(t, node, [&](BehaviorTree& dst, int) {
    Copier c{repl, dst};
    return c.copy(repl_root);
  });
}

std::vector<std::pair<int, int>> insertion_slots(const BehaviorTree& t) {
  std::vector<std::pair<int, int>> slots;
  for (int idx : subtree_of(t, t.root)) {
    const Node& n = t.at(idx);
    if (!is_control(n.kind)) {
      continue;
    }
    for (int pos = 0; pos <= static_cast<int>(n.children.size()); ++pos) {
      slots.emplace_back(idx, pos);
    }
  }
  return slots;
}

}  // namespace btsynth
