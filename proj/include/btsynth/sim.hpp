#pragma once

#include <optional>
#include <string>

#include "btsynth/task.hpp"
#include "btsynth/tree.hpp"
#include "btsynth/world.hpp"

namespace btsynth {

// Tolerances of the nine behavior templates (mm).
inline constexpr double kAtPosToleranceMm = 1.0;
inline constexpr double kOnXyToleranceMm = 1.0;
inline constexpr double kOnMaxGapMm = 10.0;

WorldState init_world(const TaskSpec& task);

/// Condition semantics. Never returns Running.
///  - picked a?    gripper holds a.
///  - a at pos p?  3D Euclidean distance below 1 mm.
///  - a on b?      x and y aligned within 1 mm and the gap between a's base
///                 and b's top lies in [0, 10] mm.
Status eval_condition(const BehaviorId& id, const WorldState& world,
                      const TaskSpec& task);

struct PlaceOutcome {
  enum Kind { Placed, CollisionBlocked, Toppled };
  Kind kind = Placed;
  Vec3 rest_pose;
  std::optional<std::string> support;  // brick beneath, if any
};

/// Resolves where a held brick would come to rest if released over
/// (target_x, target_y). Pure function of its arguments.
PlaceOutcome place_outcome(const WorldState& world, const std::string& brick,
                           double target_x, double target_y,
                           const TaskSpec& task);

/// Advances the in-flight action machine by one tick. Preempts any
/// different in-flight action first. See ActiveAction for phase rules.
Status step_action(const BehaviorId& id, WorldState& world,
                   const TaskSpec& task);

/// Brick directly supporting `brick`, if it rests on one (not the table).
std::optional<std::string> support_below(const WorldState& world,
                                         const std::string& brick);

/// True when some other brick rests on top of `brick`.
bool is_buried(const WorldState& world, const std::string& brick);

enum class EndReason : std::uint8_t {
  SolvedDoubleSuccess,
  RootFailure,
  TickTimeout,
  BudgetAbort,
};

const char* to_string(EndReason r);

struct EpisodeResult {
  WorldState final_world;
  int ticks_used = 0;
  EndReason end_reason = EndReason::TickTimeout;
  bool held_at_end = false;
};

/// Runs one episode: ticks the root until the root fails, succeeds twice
/// in a row, the 200-tick budget elapses, or the optional work budget
/// trips. Identical (tree, task) pairs give identical results.
EpisodeResult run_episode(const BehaviorTree& tree, const TaskSpec& task);

/// Fitness of an episode: negated sum of goal distances beyond delta,
/// minus length/timeout/failure penalties, minus the hold penalty when the
/// gripper still carries a brick at the end. Always <= 0.
double compute_fitness(const EpisodeResult& result, const BehaviorTree& tree,
                       const TaskSpec& task);

}  // namespace btsynth
