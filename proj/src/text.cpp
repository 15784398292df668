#include "btsynth/text.hpp"

#include <sstream>

namespace btsynth {

namespace {

void serialize_rec(const BehaviorTree& t, int idx, std::string& out) {
  const Node& n = t.at(idx);
  if (n.kind == NodeKind::Leaf) {
    out += '"';
    out += n.behavior.display();
    out += '"';
    return;
  }
  out += (n.kind == NodeKind::Fallback) ? 'f' : 's';
  out += '(';
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    if (i > 0) {
      out += ',';
    }
    serialize_rec(t, n.children[i], out);
  }
  out += ')';
}

}  // namespace

std::string serialize(const BehaviorTree& t) {
  std::string out;
  if (!t.empty()) {
    serialize_rec(t, t.root, out);
  }
  return out;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  BehaviorTree run() {
    BehaviorTree t;
    t.root = parse_node(t);
    if (pos_ != text_.size()) {
      fail("trailing characters after tree");
    }
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw TreeParseError(pos_, what);
  }

  char peek() const {
    if (pos_ >= text_.size()) {
      fail("unexpected end of input");
    }
    return text_[pos_];
  }

  void expect(char c) {
    if (peek() != c) {
      fail(std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  int parse_node(BehaviorTree& t) {
    char c = peek();
    if (c == '"') {
      return parse_leaf(t);
    }
    if (c != 'f' && c != 's') {
      fail("expected 'f', 's' or a quoted leaf");
    }
    NodeKind kind = (c == 'f') ? NodeKind::Fallback : NodeKind::Sequence;
    ++pos_;
    expect('(');
    std::vector<int> children;
    if (peek() == ')') {
      fail("control node needs at least one child");
    }
    children.push_back(parse_node(t));
    while (peek() == ',') {
      ++pos_;
      children.push_back(parse_node(t));
    }
    expect(')');
    return add_control(t, kind, std::move(children));
  }

  int parse_leaf(BehaviorTree& t) {
    const std::size_t start = pos_;
    expect('"');
    std::size_t end = pos_;
    while (end < text_.size() && text_[end] != '"') {
      ++end;
    }
    if (end >= text_.size()) {
      fail("unterminated leaf");
    }
    auto body = text_.substr(pos_, end - pos_);
    auto id = parse_behavior(body);
    if (!id) {
      pos_ = start;
      fail("unrecognized behavior '" + std::string(body) + "'");
    }
    pos_ = end + 1;
    return add_leaf(t, *id);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

BehaviorTree parse_tree(std::string_view text) {
  if (text.empty()) {
    throw TreeParseError(0, "empty input");
  }
  return Parser(text).run();
}

std::uint64_t structural_hash(const BehaviorTree& t) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : serialize(t)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

void dot_rec(const BehaviorTree& t, int idx, int& next_id, int my_id,
             std::ostringstream& out) {
  const Node& n = t.at(idx);
  if (n.kind == NodeKind::Leaf) {
    out << "  n" << my_id << " [shape=ellipse,label=\""
        << n.behavior.display() << "\"];\n";
    return;
  }
  out << "  n" << my_id << " [shape=box,label=\""
      << (n.kind == NodeKind::Fallback ? "?" : "→") << "\"];\n";
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    const int child_id = next_id++;
    out << "  n" << my_id << " -> n" << child_id << " [label=\"" << i
        << "\"];\n";
    dot_rec(t, n.children[i], next_id, child_id, out);
  }
}

}  // namespace

std::string to_dot(const BehaviorTree& t) {
  std::ostringstream out;
  out << "digraph bt {\n";
  if (!t.empty()) {
    int next_id = 1;
    dot_rec(t, t.root, next_id, 0, out);
  }
  out << "}\n";
  return out.str();
}

}  // namespace btsynth
