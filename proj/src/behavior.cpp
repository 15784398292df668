#include "btsynth/behavior.hpp"

#include <array>
#include <cassert>
#include <stdexcept>

namespace btsynth {

const char* to_string(Status s) {
  switch (s) {
    case Status::Success:
      return "Success";
    case Status::Failure:
      return "Failure";
    case Status::Running:
      return "Running";
  }
  return "?";
}

BehaviorKind kind_of(BehaviorTemplate t) {
  switch (t) {
    case BehaviorTemplate::Picked:
    case BehaviorTemplate::AtPos:
    case BehaviorTemplate::On:
      return BehaviorKind::Condition;
    default:
      return BehaviorKind::Action;
  }
}

int arity_of(BehaviorTemplate t) {
  switch (t) {
    case BehaviorTemplate::Picked:
    case BehaviorTemplate::Pick:
    case BehaviorTemplate::PlaceOn:
    case BehaviorTemplate::PlaceAt:
    case BehaviorTemplate::ApplyForce:
      return 1;
    default:
      return 2;
  }
}

BehaviorId make_behavior(BehaviorTemplate t, std::vector<std::string> params) {
  if (static_cast<int>(params.size()) != arity_of(t)) {
    throw std::invalid_argument("behavior arity mismatch");
  }
  for (const auto& p : params) {
    if (p.empty() || is_reserved_word(p)) {
      throw std::invalid_argument("invalid behavior parameter: " + p);
    }
  }
  return BehaviorId{t, std::move(params)};
}

std::string BehaviorId::display() const {
  switch (tmpl) {
    case BehaviorTemplate::Picked:
      return "picked " + params[0] + "?";
    case BehaviorTemplate::AtPos:
      return params[0] + " at pos " + params[1] + "?";
    case BehaviorTemplate::On:
      return params[0] + " on " + params[1] + "?";
    case BehaviorTemplate::Pick:
      return "pick " + params[0] + "!";
    case BehaviorTemplate::PlaceOn:
      return "place on " + params[0] + "!";
    case BehaviorTemplate::PlaceAt:
      return "place at pos " + params[0] + "!";
    case BehaviorTemplate::PutOn:
      return "put " + params[0] + " on " + params[1] + "!";
    case BehaviorTemplate::PutAt:
      return "put " + params[0] + " at pos " + params[1] + "!";
    case BehaviorTemplate::ApplyForce:
      return "apply force " + params[0] + "!";
  }
  return "";
}

bool is_reserved_word(std::string_view token) {
  static constexpr std::array<std::string_view, 9> kReserved = {
      "picked", "at", "pos", "on", "pick", "place", "put", "apply", "force"};
  for (auto w : kReserved) {
    if (token == w) {
      return true;
    }
  }
  return false;
}

namespace {

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') {
      ++i;
    }
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') {
      ++j;
    }
    if (j > i) {
      out.emplace_back(s.substr(i, j - i));
    }
    i = j;
  }
  return out;
}

bool valid_ident(const std::string& s) {
  if (s.empty() || is_reserved_word(s)) {
    return false;
  }
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_';
    if (!ok) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::optional<BehaviorId> parse_behavior(std::string_view text) {
  if (text.size() < 2) {
    return std::nullopt;
  }
  const char suffix = text.back();
  if (suffix != '?' && suffix != '!') {
    return std::nullopt;
  }
  auto words = split_words(text.substr(0, text.size() - 1));
  auto make = [](BehaviorTemplate t,
                 std::vector<std::string> p) -> std::optional<BehaviorId> {
    for (const auto& s : p) {
      if (!valid_ident(s)) {
        return std::nullopt;
      }
    }
    return BehaviorId{t, std::move(p)};
  };

  if (suffix == '?') {
    if (words.size() == 2 && words[0] == "picked") {
      return make(BehaviorTemplate::Picked, {words[1]});
    }
    if (words.size() == 4 && words[1] == "at" && words[2] == "pos") {
      return make(BehaviorTemplate::AtPos, {words[0], words[3]});
    }
    if (words.size() == 3 && words[1] == "on") {
      return make(BehaviorTemplate::On, {words[0], words[2]});
    }
    return std::nullopt;
  }

  if (words.size() == 2 && words[0] == "pick") {
    return make(BehaviorTemplate::Pick, {words[1]});
  }
  if (words.size() == 3 && words[0] == "place" && words[1] == "on") {
    return make(BehaviorTemplate::PlaceOn, {words[2]});
  }
  if (words.size() == 4 && words[0] == "place" && words[1] == "at" &&
      words[2] == "pos") {
    return make(BehaviorTemplate::PlaceAt, {words[3]});
  }
  if (words.size() == 4 && words[0] == "put" && words[2] == "on") {
    return make(BehaviorTemplate::PutOn, {words[1], words[3]});
  }
  if (words.size() == 5 && words[0] == "put" && words[2] == "at" &&
      words[3] == "pos") {
    return make(BehaviorTemplate::PutAt, {words[1], words[4]});
  }
  if (words.size() == 3 && words[0] == "apply" && words[1] == "force") {
    return make(BehaviorTemplate::ApplyForce, {words[2]});
  }
  return std::nullopt;
}

std::size_t BehaviorIdHash::operator()(const BehaviorId& id) const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  mix(static_cast<unsigned char>(id.tmpl));
  for (const auto& p : id.params) {
    mix(0xff);
    for (char c : p) {
      mix(static_cast<unsigned char>(c));
    }
  }
  return static_cast<std::size_t>(h);
}

}  // namespace btsynth
