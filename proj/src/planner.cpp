#include "btsynth/planner.hpp"

#include <algorithm>
#include <cassert>

#include "btsynth/sim.hpp"

namespace btsynth {

namespace {

bool contains(const std::vector<SymbolicFact>& facts, const SymbolicFact& f) {
  return std::find(facts.begin(), facts.end(), f) != facts.end();
}

const ActionModel* model_for_action(const std::vector<ActionModel>& models,
                                    const BehaviorId& behavior,
                                    const FactSet& state) {
  // Several models may share one behavior id (the effect depends on what
  // the gripper carries); the first whose preconditions hold wins. With
  // none satisfied, fall back to the first declared so the failure is
  // attributed to that model's preconditions.
  const ActionModel* first = nullptr;
  for (const auto& m : models) {
    if (!(m.behavior == behavior)) {
      continue;
    }
    if (first == nullptr) {
      first = &m;
    }
    bool ok = true;
    for (const auto& p : m.pre) {
      if (state.count(p) == 0) {
        ok = false;
        break;
      }
    }
    if (ok) {
      return &m;
    }
  }
  return first;
}

Status sym_rec(const BehaviorTree& tree, int idx,
               const std::vector<ActionModel>& models, FactSet& state) {
  const Node& n = tree.at(idx);
  if (n.kind == NodeKind::Leaf) {
    if (n.behavior.kind() == BehaviorKind::Condition) {
      return state.count(n.behavior) ? Status::Success : Status::Failure;
    }
    const ActionModel* m = model_for_action(models, n.behavior, state);
    if (m == nullptr) {
      return Status::Failure;  // action without a model cannot be reasoned about
    }
    for (const auto& p : m->pre) {
      if (state.count(p) == 0) {
        return Status::Failure;
      }
    }
    for (const auto& d : m->del) {
      state.erase(d);
    }
    for (const auto& p : m->post) {
      state.insert(p);
    }
    return Status::Success;
  }
  if (n.kind == NodeKind::Sequence) {
    for (int c : n.children) {
      Status s = sym_rec(tree, c, models, state);
      if (s != Status::Success) {
        return s;
      }
    }
    return Status::Success;
  }
  for (int c : n.children) {
    Status s = sym_rec(tree, c, models, state);
    if (s != Status::Failure) {
      return s;
    }
  }
  return Status::Failure;
}

// Locates the condition whose failure drove the overall Failure: walk into
// a Sequence's first failing child; walk into a Fallback's last child (the
// branch that was supposed to achieve the condition).
std::optional<int> failing_condition(const BehaviorTree& tree, int idx,
                                     const std::vector<ActionModel>& models,
                                     FactSet state) {
  const Node& n = tree.at(idx);
  if (n.kind == NodeKind::Leaf) {
    if (n.behavior.kind() == BehaviorKind::Condition) {
      return idx;
    }
    return std::nullopt;
  }
  if (n.kind == NodeKind::Sequence) {
    for (int c : n.children) {
      FactSet before = state;
      Status s = sym_rec(tree, c, models, state);
      if (s == Status::Failure) {
        return failing_condition(tree, c, models, before);
      }
    }
    return std::nullopt;
  }
  // Fallback whose children all failed.
  const int last = n.children.back();
  auto r = failing_condition(tree, last, models, state);
  if (r) {
    return r;
  }
  for (int c : n.children) {
    auto inner = failing_condition(tree, c, models, state);
    if (inner) {
      return inner;
    }
  }
  return std::nullopt;
}

}  // namespace

std::pair<Status, std::optional<int>> symbolic_tick(
    const BehaviorTree& tree, const std::vector<ActionModel>& models,
    FactSet& state) {
  assert(!tree.empty());
  FactSet initial = state;
  Status s = sym_rec(tree, tree.root, models, state);
  if (s != Status::Failure) {
    return {s, std::nullopt};
  }
  return {s, failing_condition(tree, tree.root, models, initial)};
}

BehaviorTree expand(const BehaviorTree& tree, int failing,
                    const std::vector<ActionModel>& models) {
  const Node& n = tree.at(failing);
  assert(n.kind == NodeKind::Leaf &&
         n.behavior.kind() == BehaviorKind::Condition);

  const ActionModel* chosen = nullptr;
  for (const auto& m : models) {
    if (contains(m.post, n.behavior)) {
      chosen = &m;  // first declared producer wins
      break;
    }
  }
  if (chosen == nullptr) {
    throw UnachievableGoal(n.behavior);
  }

  BehaviorTree repl;
  const int cond = add_leaf(repl, n.behavior);
  int achiever;
  if (chosen->pre.empty()) {
    achiever = add_leaf(repl, chosen->behavior);
  } else {
    std::vector<int> seq_children;
    for (const auto& p : chosen->pre) {
      seq_children.push_back(add_leaf(repl, p));
    }
    seq_children.push_back(add_leaf(repl, chosen->behavior));
    achiever = add_control(repl, NodeKind::Sequence, std::move(seq_children));
  }
  repl.root = add_control(repl, NodeKind::Fallback, {cond, achiever});

  return with_subtree_replaced(tree, failing, repl, repl.root);
}

FactSet initial_facts(const TaskSpec& task) {
  const WorldState w = init_world(task);
  FactSet facts;
  for (const auto& id : task.behavior_pool) {
    if (id.kind() != BehaviorKind::Condition) {
      continue;
    }
    if (eval_condition(id, w, task) == Status::Success) {
      facts.insert(id);
    }
  }
  return facts;
}

BehaviorTree plan(const TaskSpec& task, const std::vector<ActionModel>& models,
                  const GoalSpec& goals, int depth_limit) {
  if (goals.facts.empty()) {
    throw ConfigError("goal specification is empty");
  }
  const FactSet start = initial_facts(task);

  BehaviorTree tree;
  std::vector<int> goal_leaves;
  for (const auto& g : goals.facts) {
    goal_leaves.push_back(add_leaf(tree, g));
  }
  tree.root = add_control(tree, NodeKind::Sequence, std::move(goal_leaves));

  for (int iter = 0; iter < depth_limit; ++iter) {
    FactSet state = start;
    auto [status, failing] = symbolic_tick(tree, models, state);
    if (status == Status::Success) {
      // A single expanded goal makes the top-level sequence redundant.
      const Node& root = tree.at(tree.root);
      if (root.kind == NodeKind::Sequence && root.children.size() == 1 &&
          is_control(tree.at(root.children[0]).kind)) {
        tree = with_subtree_replaced(tree, tree.root, tree, root.children[0]);
      }
      auto violations = validate(tree);
      if (!violations.empty()) {
        throw ConfigError("planner produced an invalid tree: " +
                          violations.front().message);
      }
      return tree;
    }
    if (!failing) {
      throw ConfigError(
          "symbolic execution failed with no expandable condition");
    }
    tree = expand(tree, *failing, models);
  }
  throw PlanDepthExceeded(depth_limit);
}

}  // namespace btsynth
