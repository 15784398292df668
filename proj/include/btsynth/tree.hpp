#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "btsynth/behavior.hpp"

namespace btsynth {

enum class NodeKind : std::uint8_t { Fallback, Sequence, Leaf };

inline bool is_control(NodeKind k) { return k != NodeKind::Leaf; }

struct Node {
  NodeKind kind = NodeKind::Leaf;
  BehaviorId behavior;        // meaningful for leaves only
  std::vector<int> children;  // ordered, indices into the arena
};

/// Arena-backed ordered tree. Trees are immutable once built: every edit
/// operation below returns a fresh tree with a compact arena.
struct BehaviorTree {
  std::vector<Node> nodes;
  int root = -1;

  const Node& at(int i) const { return nodes[static_cast<std::size_t>(i)]; }
  bool empty() const { return root < 0; }
};

// --- construction helpers -------------------------------------------------

int add_leaf(BehaviorTree& t, BehaviorId id);
int add_control(BehaviorTree& t, NodeKind kind, std::vector<int> children);

// --- structural queries ---------------------------------------------------

int node_count(const BehaviorTree& t);

/// Parent arena index of `node`, or -1 for the root.
int parent_of(const BehaviorTree& t, int node);

/// Arena indices of the subtree rooted at `node`, in preorder.
std::vector<int> subtree_of(const BehaviorTree& t, int node);

bool structurally_equal(const BehaviorTree& a, const BehaviorTree& b);

// --- validation -----------------------------------------------------------

enum class ViolationKind : std::uint8_t {
  EmptyTree,
  RootNotControl,
  ChildlessControl,
  SameKindParent,
  AdjacentIdenticalConditions,
  LeafWithChildren,
};

struct Violation {
  ViolationKind kind;
  int node;
  std::string message;
};

/// Checks every structural constraint the search operators must respect.
/// Empty result means the tree is accepted and executable.
std::vector<Violation> validate(const BehaviorTree& t);

inline bool is_valid(const BehaviorTree& t) { return validate(t).empty(); }

// --- execution ------------------------------------------------------------

using LeafFn = std::function<Status(const BehaviorId&)>;

/// One root-to-leaf pass with memory-less Fallback/Sequence semantics:
/// every tick restarts from the first child, previously successful
/// children are re-evaluated, and nothing to the right of the child that
/// decided a control node's status is visited. Throws std::logic_error if
/// the evaluator reports Running for a condition leaf.
Status tick(const BehaviorTree& t, const LeafFn& leaf);

// --- edit operations (used by the search operators and the planner) -------

BehaviorTree clone(const BehaviorTree& t);

/// Inserts a leaf as child `pos` of control node `parent`.
BehaviorTree with_leaf_inserted(const BehaviorTree& t, int parent, int pos,
                                const BehaviorId& id);

/// Inserts a new control node (with two leaf children) at the given slot.
BehaviorTree with_control_inserted(const BehaviorTree& t, int parent, int pos,
                                   NodeKind kind, const BehaviorId& child0,
                                   const BehaviorId& child1);

/// Copies the subtree of `donor` rooted at `donor_node` into `t` as child
/// `pos` of control node `parent`.
BehaviorTree with_subtree_inserted(const BehaviorTree& t, int parent, int pos,
                                   const BehaviorTree& donor, int donor_node);

/// Removes the subtree rooted at `node` (non-root), cascading away any
/// control node left childless. Returns nullopt if the cascade would
/// consume the whole tree.
std::optional<BehaviorTree> with_subtree_deleted(const BehaviorTree& t,
                                                 int node);

/// Replaces the subtree rooted at `node` with a single leaf.
BehaviorTree with_node_replaced_by_leaf(const BehaviorTree& t, int node,
                                        const BehaviorId& id);

/// Rewrites the kind of control node `node`, keeping its children.
BehaviorTree with_control_kind_changed(const BehaviorTree& t, int node,
                                       NodeKind kind);

/// Replaces leaf `node` with a control node owning two fresh leaves.
BehaviorTree with_leaf_replaced_by_control(const BehaviorTree& t, int node,
                                           NodeKind kind,
                                           const BehaviorId& child0,
                                           const BehaviorId& child1);

/// Replaces the subtree rooted at `node` with a copy of another tree's
/// subtree (used by the planner's expansion step).
BehaviorTree with_subtree_replaced(const BehaviorTree& t, int node,
                                   const BehaviorTree& repl, int repl_root);

/// All (parent, child-index) insertion slots, in arena order.
std::vector<std::pair<int, int>> insertion_slots(const BehaviorTree& t);

}  // namespace btsynth
