#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "btsynth/behavior.hpp"

namespace btsynth {

struct Vec3 {
  double x = 0;
  double y = 0;
  double z = 0;

  bool operator==(const Vec3&) const = default;
};

inline double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// One brick. `pose` is the base-center position in mm; z == 0 means the
/// brick rests on the table. `fitted` marks a press-fit joint beneath it
/// (only meaningful while the brick is supported by another brick).
struct Brick {
  std::string id;
  double width = 31.8;
  double depth = 31.8;
  double height = 19.2;
  Vec3 pose;
  double com_offset_x = 0.0;
  bool fitted = false;

  double top() const { return pose.z + height; }
};

struct Gripper {
  std::optional<std::string> held;
  Vec3 position;
};

/// Phase bookkeeping for the one in-flight action. World effects land when
/// a phase boundary is crossed; the record disappears when the action
/// returns Success/Failure or is not re-ticked on the following root tick.
struct ActiveAction {
  BehaviorId behavior;
  int ticks_elapsed = 0;
  int total_ticks = 0;
  int last_ticked = -1;       // root tick stamp, for preemption
  bool place_only = false;    // put resumed while already holding the brick
  // Resolved at the end of the transit phase for place-style actions.
  double target_x = 0;
  double target_y = 0;
  bool outcome_resolved = false;
  int outcome_kind = 0;       // PlaceOutcome::Kind, stashed
  Vec3 rest_pose;
};

enum class PlacementEventKind : std::uint8_t { Placed, Toppled, Blocked };

struct PlacementEvent {
  PlacementEventKind kind;
  std::string brick;
  double target_x = 0;
  double target_y = 0;
  Vec3 rest_pose;
  int tick = 0;
};

struct WorldState {
  std::vector<Brick> bricks;
  Gripper gripper;
  int tick_count = 0;
  std::optional<ActiveAction> active_action;
  std::vector<PlacementEvent> placements;
  long leaf_evaluations = 0;

  Brick* find_brick(const std::string& id);
  const Brick* find_brick(const std::string& id) const;
};

/// Deterministic text form of the full state, for equality checks in tests.
std::string world_to_text(const WorldState& w);

}  // namespace btsynth
