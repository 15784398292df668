#include "btsynth/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace btsynth {

namespace {

constexpr double kEps = 1e-9;
// Maximum joint gap for the "rests on" relation (covers the unpressed
// press-fit residual, which stays below 1 mm by design).
constexpr double kRestGapMm = 1.0;

// Phase boundaries, in work ticks from action start.
constexpr int kPickApproachEnd = 4;
constexpr int kPickGraspEnd = 6;
constexpr int kPickLiftEnd = 10;
constexpr int kPlaceTransitEnd = 6;
constexpr int kPlaceReleaseEnd = 10;
constexpr int kForceApproachEnd = 4;
constexpr int kForcePressEnd = 6;

}  // namespace

Brick* WorldState::find_brick(const std::string& id) {
  for (auto& b : bricks) {
    if (b.id == id) {
      return &b;
    }
  }
  return nullptr;
}

const Brick* WorldState::find_brick(const std::string& id) const {
  for (const auto& b : bricks) {
    if (b.id == id) {
      return &b;
    }
  }
  return nullptr;
}

const BrickSpec* TaskSpec::find_brick_spec(const std::string& id) const {
  for (const auto& b : bricks) {
    if (b.id == id) {
      return &b;
    }
  }
  return nullptr;
}

bool TaskSpec::brick_no_stack(const std::string& id) const {
  const BrickSpec* b = find_brick_spec(id);
  return b != nullptr && b->no_stack;
}

Vec3 TaskSpec::position(const std::string& id) const {
  auto it = positions.find(id);
  if (it == positions.end()) {
    throw ConfigError("unknown position '" + id + "'");
  }
  return it->second;
}

bool TaskSpec::in_pool(const BehaviorId& id) const {
  return std::find(behavior_pool.begin(), behavior_pool.end(), id) !=
         behavior_pool.end();
}

WorldState init_world(const TaskSpec& task) {
  WorldState w;
  w.bricks.reserve(task.bricks.size());
  for (const auto& spec : task.bricks) {
    Brick b;
    b.id = spec.id;
    b.width = spec.width;
    b.depth = spec.depth;
    b.height = spec.height;
    b.pose = spec.start;
    b.com_offset_x = spec.com_offset_x;
    w.bricks.push_back(std::move(b));
  }
  w.gripper.position = task.gripper_start;
  return w;
}

namespace {

const Brick& brick_or_throw(const WorldState& w, const std::string& id) {
  const Brick* b = w.find_brick(id);
  if (b == nullptr) {
    throw ConfigError("unknown brick '" + id + "'");
  }
  return *b;
}

bool footprint_contains(const Brick& b, double x, double y) {
  return std::abs(x - b.pose.x) <= b.width / 2 + kEps &&
         std::abs(y - b.pose.y) <= b.depth / 2 + kEps;
}

}  // namespace

std::optional<std::string> support_below(const WorldState& world,
                                         const std::string& brick) {
  const Brick& b = brick_or_throw(world, brick);
  const Brick* best = nullptr;
  for (const auto& o : world.bricks) {
    if (o.id == brick) {
      continue;
    }
    if (!footprint_contains(o, b.pose.x, b.pose.y)) {
      continue;
    }
    const double gap = b.pose.z - o.top();
    if (gap < -0.1 || gap > kRestGapMm) {
      continue;
    }
    if (best == nullptr || o.top() > best->top() ||
        (o.top() == best->top() && o.id < best->id)) {
      best = &o;
    }
  }
  if (best == nullptr) {
    return std::nullopt;
  }
  return best->id;
}

bool is_buried(const WorldState& world, const std::string& brick) {
  for (const auto& o : world.bricks) {
    if (o.id == brick) {
      continue;
    }
    if (world.gripper.held == o.id) {
      continue;
    }
    auto s = support_below(world, o.id);
    if (s && *s == brick) {
      return true;
    }
  }
  return false;
}

Status eval_condition(const BehaviorId& id, const WorldState& world,
                      const TaskSpec& task) {
  assert(id.kind() == BehaviorKind::Condition);
  switch (id.tmpl) {
    case BehaviorTemplate::Picked: {
      brick_or_throw(world, id.params[0]);
      return world.gripper.held == id.params[0] ? Status::Success
                                                : Status::Failure;
    }
    case BehaviorTemplate::AtPos: {
      const Brick& b = brick_or_throw(world, id.params[0]);
      const Vec3 p = task.position(id.params[1]);
      return distance(b.pose, p) < kAtPosToleranceMm ? Status::Success
                                                     : Status::Failure;
    }
    case BehaviorTemplate::On: {
      const Brick& a = brick_or_throw(world, id.params[0]);
      const Brick& b = brick_or_throw(world, id.params[1]);
      const double gap = a.pose.z - b.top();
      const bool on = std::abs(a.pose.x - b.pose.x) < kOnXyToleranceMm &&
                      std::abs(a.pose.y - b.pose.y) < kOnXyToleranceMm &&
                      gap >= -kEps && gap <= kOnMaxGapMm + kEps;
      return on ? Status::Success : Status::Failure;
    }
    default:
      throw ConfigError("not a condition: " + id.display());
  }
}

PlaceOutcome place_outcome(const WorldState& world, const std::string& brick,
                           double target_x, double target_y,
                           const TaskSpec& task) {
  const Brick& held = brick_or_throw(world, brick);
  const Brick* support = nullptr;
  for (const auto& o : world.bricks) {
    if (o.id == brick) {
      continue;
    }
    if (!footprint_contains(o, target_x, target_y)) {
      continue;
    }
    if (support == nullptr || o.top() > support->top() ||
        (o.top() == support->top() && o.id < support->id)) {
      support = &o;
    }
  }
  const double support_top = support != nullptr ? support->top() : 0.0;

  PlaceOutcome out;
  if (support != nullptr && task.rules.red_no_stack &&
      task.brick_no_stack(support->id)) {
    out.kind = PlaceOutcome::CollisionBlocked;
    return out;
  }
  if (task.rules.collision_corridor_check) {
    for (const auto& o : world.bricks) {
      if (o.id == brick) {
        continue;
      }
      if (o.top() <= support_top + 1e-6) {
        continue;  // at or below the landing surface; cannot obstruct
      }
      const double ox =
          std::min(target_x + held.width / 2, o.pose.x + o.width / 2) -
          std::max(target_x - held.width / 2, o.pose.x - o.width / 2);
      const double oy =
          std::min(target_y + held.depth / 2, o.pose.y + o.depth / 2) -
          std::max(target_y - held.depth / 2, o.pose.y - o.depth / 2);
      if (ox > 1e-6 && oy > 1e-6) {
        out.kind = PlaceOutcome::CollisionBlocked;
        return out;
      }
    }
  }
  if (support != nullptr && task.rules.balance_check) {
    const double com_x = target_x + held.com_offset_x;
    const bool outside =
        std::abs(com_x - support->pose.x) > support->width / 2 + kEps ||
        std::abs(target_y - support->pose.y) > support->depth / 2 + kEps;
    if (outside) {
      // The brick tips over the support's edge and comes to rest on the
      // table, clear of the support's footprint.
      out.kind = PlaceOutcome::Toppled;
      out.rest_pose = {support->pose.x + support->width / 2 + held.width / 2 +
                           held.height,
                       support->pose.y, 0.0};
      return out;
    }
  }
  const double residual =
      (support != nullptr && task.rules.press_fit_residual)
          ? task.press_fit_residual_mm
          : 0.0;
  out.kind = PlaceOutcome::Placed;
  out.rest_pose = {target_x, target_y, support_top + residual};
  if (support != nullptr) {
    out.support = support->id;
  }
  return out;
}

namespace {

// Seats every unsettled joint in the support chain under (and including)
// `brick`: bottom-up, each member drops onto its support's top and its
// joint is marked fitted. Pressing transmits through the stack.
void press_column(WorldState& world, const std::string& brick) {
  std::vector<std::string> chain{brick};
  while (true) {
    auto s = support_below(world, chain.back());
    if (!s) {
      break;
    }
    chain.push_back(*s);
  }
  // The chain is discovered before anything moves; seating bottom-up keeps
  // every member on the support it was resting on.
  for (std::size_t i = chain.size() - 1; i-- > 0;) {
    Brick& b = *world.find_brick(chain[i]);
    const Brick& sup = *world.find_brick(chain[i + 1]);
    b.pose.z = sup.top();
    b.fitted = true;
  }
}

struct StartResult {
  std::optional<Status> terminal;  // set when the action ended immediately
  ActiveAction act;                // valid when terminal is empty
};

// Pure start checks: either an instant outcome (no motion, the in-flight
// action is left alone) or a fresh ActiveAction ready to run.
StartResult start_action(const BehaviorId& id, const WorldState& world,
                         const TaskSpec& task) {
  ActiveAction act;
  act.behavior = id;
  const auto& held = world.gripper.held;

  switch (id.tmpl) {
    case BehaviorTemplate::Pick: {
      brick_or_throw(world, id.params[0]);
      if (held == id.params[0]) {
        return {Status::Success, {}};  // already in the gripper
      }
      if (held) {
        return {Status::Failure, {}};
      }
      if (is_buried(world, id.params[0])) {
        return {Status::Failure, {}};
      }
      act.total_ticks = kPickLiftEnd;
      break;
    }
    case BehaviorTemplate::PlaceOn: {
      const Brick& target = brick_or_throw(world, id.params[0]);
      if (!held) {
        return {Status::Failure, {}};
      }
      if (*held == id.params[0]) {
        return {Status::Failure, {}};  // cannot place a brick onto itself
      }
      act.total_ticks = kPlaceReleaseEnd;
      act.place_only = true;
      act.target_x = target.pose.x;
      act.target_y = target.pose.y;
      break;
    }
    case BehaviorTemplate::PlaceAt: {
      const Vec3 p = task.position(id.params[0]);
      if (!held) {
        return {Status::Failure, {}};
      }
      act.total_ticks = kPlaceReleaseEnd;
      act.place_only = true;
      act.target_x = p.x;
      act.target_y = p.y;
      break;
    }
    case BehaviorTemplate::PutOn:
    case BehaviorTemplate::PutAt: {
      const std::string& a = id.params[0];
      brick_or_throw(world, a);
      BehaviorId cond;
      double tx = 0;
      double ty = 0;
      if (id.tmpl == BehaviorTemplate::PutOn) {
        const Brick& b = brick_or_throw(world, id.params[1]);
        cond = BehaviorId{BehaviorTemplate::On, id.params};
        tx = b.pose.x;
        ty = b.pose.y;
      } else {
        const Vec3 p = task.position(id.params[1]);
        cond = BehaviorId{BehaviorTemplate::AtPos, id.params};
        tx = p.x;
        ty = p.y;
      }
      if (eval_condition(cond, world, task) == Status::Success) {
        return {Status::Success, {}};  // goal already holds, no motion
      }
      if (held && *held != a) {
        return {Status::Failure, {}};
      }
      if (held && *held == a) {
        if (world.active_action) {
          // The brick is mid-carry under a different action; yield rather
          // than wrestle it away. This is what lets chains of puts run
          // without guarding conditions.
          return {Status::Success, {}};
        }
        act.place_only = true;  // resume an orphaned carry of the brick
        act.total_ticks = kPlaceReleaseEnd;
      } else {
        if (is_buried(world, a)) {
          return {Status::Failure, {}};
        }
        act.total_ticks = kPickLiftEnd + kPlaceReleaseEnd;
      }
      act.target_x = tx;
      act.target_y = ty;
      break;
    }
    case BehaviorTemplate::ApplyForce: {
      brick_or_throw(world, id.params[0]);
      if (held) {
        return {Status::Failure, {}};
      }
      if (is_buried(world, id.params[0])) {
        return {Status::Failure, {}};
      }
      act.total_ticks = kForcePressEnd;
      break;
    }
    default:
      throw ConfigError("not an action: " + id.display());
  }
  return {std::nullopt, std::move(act)};
}

// Applies the world effect of the phase boundary that `elapsed` has just
// reached, if any. Returns Failure when the placement corridor is blocked.
Status on_work_tick(ActiveAction& act, WorldState& world,
                    const TaskSpec& task) {
  const BehaviorId& id = act.behavior;
  const std::string& subject = id.params[0];

  const bool has_pick_part =
      (id.tmpl == BehaviorTemplate::Pick ||
       ((id.tmpl == BehaviorTemplate::PutOn ||
         id.tmpl == BehaviorTemplate::PutAt) &&
        !act.place_only));
  const bool has_place_part = id.tmpl != BehaviorTemplate::Pick &&
                              id.tmpl != BehaviorTemplate::ApplyForce;
  const int place_offset = has_pick_part ? kPickLiftEnd : 0;

  if (id.tmpl == BehaviorTemplate::ApplyForce) {
    Brick& b = *world.find_brick(subject);
    if (act.ticks_elapsed == kForceApproachEnd) {
      world.gripper.position = {b.pose.x, b.pose.y, b.top()};
    } else if (act.ticks_elapsed == kForcePressEnd) {
      press_column(world, subject);
    }
    return Status::Running;
  }

  if (has_pick_part) {
    Brick& b = *world.find_brick(subject);
    if (act.ticks_elapsed == kPickApproachEnd) {
      world.gripper.position = b.pose;
      return Status::Running;
    }
    if (act.ticks_elapsed == kPickGraspEnd) {
      world.gripper.held = subject;
      b.fitted = false;
      return Status::Running;
    }
    if (act.ticks_elapsed == kPickLiftEnd) {
      world.gripper.position = {b.pose.x, b.pose.y, task.transport_z};
      b.pose = world.gripper.position;
      return Status::Running;
    }
  }

  if (has_place_part) {
    if (act.ticks_elapsed == place_offset + kPlaceTransitEnd) {
      const std::string carried = *world.gripper.held;
      Brick& b = *world.find_brick(carried);
      world.gripper.position = {act.target_x, act.target_y, task.transport_z};
      b.pose = world.gripper.position;
      PlaceOutcome outcome =
          place_outcome(world, carried, act.target_x, act.target_y, task);
      if (outcome.kind == PlaceOutcome::CollisionBlocked) {
        world.placements.push_back({PlacementEventKind::Blocked, carried,
                                    act.target_x, act.target_y, b.pose,
                                    world.tick_count});
        return Status::Failure;
      }
      act.outcome_resolved = true;
      act.outcome_kind = outcome.kind;
      act.rest_pose = outcome.rest_pose;
      return Status::Running;
    }
    if (act.ticks_elapsed == place_offset + kPlaceReleaseEnd) {
      assert(act.outcome_resolved);
      const std::string carried = *world.gripper.held;
      Brick& b = *world.find_brick(carried);
      b.pose = act.rest_pose;
      b.fitted = false;
      world.gripper.held.reset();
      world.gripper.position = act.rest_pose;
      const auto kind = act.outcome_kind == PlaceOutcome::Toppled
                            ? PlacementEventKind::Toppled
                            : PlacementEventKind::Placed;
      world.placements.push_back({kind, carried, act.target_x, act.target_y,
                                  act.rest_pose, world.tick_count});
      return Status::Running;
    }
  }
  return Status::Running;
}

}  // namespace

Status step_action(const BehaviorId& id, WorldState& world,
                   const TaskSpec& task) {
  assert(id.kind() == BehaviorKind::Action);
  const bool continuing =
      world.active_action && world.active_action->behavior == id;
  if (!continuing) {
    StartResult r = start_action(id, world, task);
    if (r.terminal) {
      // Instant outcome without motion; a different in-flight action is
      // left alone (it is only halted when something else claims the arm).
      return *r.terminal;
    }
    world.active_action = std::move(r.act);  // preempts any running action
  }
  ActiveAction& act = *world.active_action;
  act.last_ticked = world.tick_count;
  if (act.ticks_elapsed >= act.total_ticks) {
    world.active_action.reset();
    return Status::Success;
  }
  if (act.ticks_elapsed >= task.limits.max_action_ticks) {
    world.active_action.reset();
    return Status::Failure;
  }
  ++act.ticks_elapsed;
  Status s = on_work_tick(act, world, task);
  if (s == Status::Failure) {
    world.active_action.reset();
    return Status::Failure;
  }
  return Status::Running;
}

const char* to_string(EndReason r) {
  switch (r) {
    case EndReason::SolvedDoubleSuccess:
      return "solved-double-success";
    case EndReason::RootFailure:
      return "root-failure";
    case EndReason::TickTimeout:
      return "tick-timeout";
    case EndReason::BudgetAbort:
      return "budget-abort";
  }
  return "?";
}

EpisodeResult run_episode(const BehaviorTree& tree, const TaskSpec& task) {
  if (!is_valid(tree)) {
    throw ConfigError("refusing to run a constraint-violating tree");
  }
  for (int idx : subtree_of(tree, tree.root)) {
    const Node& n = tree.at(idx);
    if (n.kind == NodeKind::Leaf && !task.in_pool(n.behavior)) {
      throw ConfigError("behavior not in task pool: " + n.behavior.display());
    }
  }

  WorldState w = init_world(task);
  LeafFn leaf = [&](const BehaviorId& id) {
    ++w.leaf_evaluations;
    return id.kind() == BehaviorKind::Condition ? eval_condition(id, w, task)
                                                : step_action(id, w, task);
  };

  EndReason reason = EndReason::TickTimeout;
  int consecutive_success = 0;
  while (true) {
    if (w.tick_count >= task.limits.max_ticks) {
      reason = EndReason::TickTimeout;
      break;
    }
    if (task.limits.work_budget &&
        w.leaf_evaluations > *task.limits.work_budget) {
      reason = EndReason::BudgetAbort;
      break;
    }
    ++w.tick_count;
    Status s = tick(tree, leaf);
    if (w.active_action && w.active_action->last_ticked != w.tick_count) {
      w.active_action.reset();  // running action was not re-ticked
    }
    if (s == Status::Failure) {
      reason = EndReason::RootFailure;
      break;
    }
    if (s == Status::Success) {
      if (++consecutive_success == 2) {
        reason = EndReason::SolvedDoubleSuccess;
        break;
      }
    } else {
      consecutive_success = 0;
    }
  }

  EpisodeResult result;
  result.ticks_used = w.tick_count;
  result.end_reason = reason;
  result.held_at_end = w.gripper.held.has_value();
  result.final_world = std::move(w);
  return result;
}

double compute_fitness(const EpisodeResult& result, const BehaviorTree& tree,
                       const TaskSpec& task) {
  double f = 0.0;
  for (const auto& goal : task.goals) {
    const Brick* b = result.final_world.find_brick(goal.brick);
    if (b == nullptr) {
      throw ConfigError("goal references unknown brick '" + goal.brick + "'");
    }
    f -= std::max(0.0, distance(b->pose, goal.target) - task.fitness.delta);
  }
  f -= task.fitness.length_penalty * node_count(tree);
  if (result.end_reason == EndReason::TickTimeout) {
    f -= task.fitness.timeout_penalty;
  }
  if (result.end_reason == EndReason::RootFailure) {
    f -= task.fitness.failure_penalty;
  }
  if (result.held_at_end) {
    f -= task.fitness.hold_penalty;
  }
  return f;
}

std::string world_to_text(const WorldState& w) {
  std::ostringstream out;
  char buf[128];
  std::vector<const Brick*> bricks;
  for (const auto& b : w.bricks) {
    bricks.push_back(&b);
  }
  std::sort(bricks.begin(), bricks.end(),
            [](const Brick* a, const Brick* b) { return a->id < b->id; });
  for (const Brick* b : bricks) {
    std::snprintf(buf, sizeof(buf), "%s (%.6f,%.6f,%.6f) fitted=%d\n",
                  b->id.c_str(), b->pose.x, b->pose.y, b->pose.z,
                  b->fitted ? 1 : 0);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "gripper (%.6f,%.6f,%.6f) held=%s\n",
                w.gripper.position.x, w.gripper.position.y,
                w.gripper.position.z,
                w.gripper.held ? w.gripper.held->c_str() : "-");
  out << buf;
  out << "tick " << w.tick_count << "\n";
  if (w.active_action) {
    out << "active " << w.active_action->behavior.display() << " "
        << w.active_action->ticks_elapsed << "/"
        << w.active_action->total_ticks << "\n";
  }
  for (const auto& e : w.placements) {
    const char* k = e.kind == PlacementEventKind::Placed    ? "placed"
                    : e.kind == PlacementEventKind::Toppled ? "toppled"
                                                            : "blocked";
    std::snprintf(buf, sizeof(buf), "%s %s (%.6f,%.6f)->(%.6f,%.6f,%.6f) @%d\n",
                  k, e.brick.c_str(), e.target_x, e.target_y, e.rest_pose.x,
                  e.rest_pose.y, e.rest_pose.z, e.tick);
    out << buf;
  }
  return out.str();
}

}  // namespace btsynth
