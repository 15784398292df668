#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "btsynth/tree.hpp"

namespace btsynth {

/// Canonical text form: `f(...)` for Fallback, `s(...)` for Sequence,
/// leaves as their quoted display names, children comma-separated, no
/// whitespace. Equal trees serialize to equal bytes.
std::string serialize(const BehaviorTree& t);

struct TreeParseError : std::runtime_error {
  TreeParseError(std::size_t position, const std::string& what)
      : std::runtime_error("parse error at offset " +
                           std::to_string(position) + ": " + what),
        position(position) {}
  std::size_t position;
};

/// Inverse of serialize. Structural constraints are not enforced here;
/// run validate() on the result. Throws TreeParseError on the first
/// grammar violation, with its byte offset.
BehaviorTree parse_tree(std::string_view text);

/// FNV-1a digest of the canonical form; the evaluation cache key space.
std::uint64_t structural_hash(const BehaviorTree& t);

/// GraphViz export: one statement per node, "?" / "→" labels for
/// Fallback / Sequence, behavior names for leaves, child order kept via
/// ordinal edge labels. Byte-deterministic.
std::string to_dot(const BehaviorTree& t);

}  // namespace btsynth
