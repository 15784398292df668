#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace btsynth {

enum class Status : std::uint8_t { Success, Failure, Running };

const char* to_string(Status s);

enum class BehaviorKind : std::uint8_t { Condition, Action };

/// The nine behavior templates. The first three are conditions, the rest
/// are actions that may span several ticks.
enum class BehaviorTemplate : std::uint8_t {
  Picked,      // "picked a?"
  AtPos,       // "a at pos p?"
  On,          // "a on b?"
  Pick,        // "pick a!"
  PlaceOn,     // "place on a!"
  PlaceAt,     // "place at pos p!"
  PutOn,       // "put a on b!"
  PutAt,       // "put a at pos p!"
  ApplyForce,  // "apply force a!"
};

BehaviorKind kind_of(BehaviorTemplate t);
int arity_of(BehaviorTemplate t);

/// Identity of one leaf behavior: a template plus its brick/position
/// parameters. Two ids are equal iff template and all params match.
struct BehaviorId {
  BehaviorTemplate tmpl = BehaviorTemplate::Picked;
  std::vector<std::string> params;

  BehaviorKind kind() const { return kind_of(tmpl); }

  /// Human-readable form, e.g. `put a at pos B!`. Also the canonical
  /// leaf token used by tree serialization.
  std::string display() const;

  auto operator<=>(const BehaviorId&) const = default;
};

BehaviorId make_behavior(BehaviorTemplate t, std::vector<std::string> params);

/// Parses a display string back into an id. Returns nullopt when the text
/// matches none of the nine templates.
std::optional<BehaviorId> parse_behavior(std::string_view text);

/// Words that cannot be used as brick or position identifiers because the
/// display grammar would become ambiguous.
bool is_reserved_word(std::string_view token);

struct BehaviorIdHash {
  std::size_t operator()(const BehaviorId& id) const;
};

}  // namespace btsynth
