// SPDX-License-Identifier: Apache-2.0

#include <cctype>
#include <map>
#include <optional>
#include <vector>

#include "odorgen/elements.hpp"
#include "odorgen/smiles.hpp"

namespace odorgen::smiles {
namespace {

struct RingOpen {
  int atom;
  std::optional<BondType> bond;
  std::size_t position;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  MoleculeGraph run() {
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '(') {
        if (prev_ < 0) fail("branch without a preceding atom");
        if (pending_) fail("bond symbol before branch");
        branches_.push_back({prev_, pos_});
        ++pos_;
        if (pos_ < s_.size() && s_[pos_] == ')') fail("empty branch");
      } else if (c == ')') {
        if (branches_.empty()) fail("unbalanced ')'");
        if (pending_) fail("bond symbol at end of branch");
        prev_ = branches_.back().first;
        branches_.pop_back();
        ++pos_;
      } else if (c == '.') {
        if (pending_) fail("bond symbol before '.'");
        if (prev_ < 0) fail("'.' without a preceding atom");
        if (!branches_.empty()) fail("'.' inside a branch");
        prev_ = -1;
        ++pos_;
      } else if (is_bond_char(c)) {
        if (pending_) fail("consecutive bond symbols");
        if (prev_ < 0) fail("bond symbol without a preceding atom");
        pending_ = bond_for(c);
        ++pos_;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        ring_closure();
      } else {
        atom();
      }
    }
    if (pending_) fail("dangling bond symbol");
    if (!branches_.empty()) fail_at(branches_.back().second, "unbalanced '('");
    if (!rings_.empty()) {
      fail_at(rings_.begin()->second.position,
              "unclosed ring " + std::to_string(rings_.begin()->first));
    }
    MoleculeGraph g(std::move(atoms_));
    for (const auto& b : bonds_) g.add_bond(b.i, b.j, b.type);
    return g;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const { throw SyntaxError(pos_, why); }
  [[noreturn]] void fail_at(std::size_t p, const std::string& why) const {
    throw SyntaxError(p, why);
  }

  static bool is_bond_char(char c) {
    return c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\' || c == '$';
  }

  BondType bond_for(char c) const {
    switch (c) {
      case '=': return BondType::Double;
      case '#': return BondType::Triple;
      case ':': return BondType::Aromatic;
      case '$': fail("quadruple bonds are not supported");
      default: return BondType::Single;
    }
  }

  bool has_bond(int i, int j) const {
    if (i > j) std::swap(i, j);
    for (const auto& b : bonds_) {
      if (b.i == i && b.j == j) return true;
    }
    return false;
  }

  void connect(int a, int b, std::optional<BondType> explicit_type) {
    if (a == b) fail("ring closure on the same atom");
    if (has_bond(a, b)) fail("duplicate bond between atoms");
    BondType t = BondType::Single;
    if (explicit_type) {
      t = *explicit_type;
    } else if (aromatic_[static_cast<std::size_t>(a)] && aromatic_[static_cast<std::size_t>(b)]) {
      t = BondType::Aromatic;
    }
    bonds_.push_back(Bond{std::min(a, b), std::max(a, b), t});
  }

  void ring_closure() {
    if (prev_ < 0) fail("ring closure without a preceding atom");
    const std::size_t start = pos_;
    int number;
    if (s_[pos_] == '%') {
      if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2]))) {
        fail("'%' must be followed by two digits");
      }
      number = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = s_[pos_] - '0';
      ++pos_;
    }
    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_[number] = RingOpen{prev_, pending_, start};
    } else {
      const auto open = it->second;
      rings_.erase(it);
      if (open.bond && pending_ && *open.bond != *pending_) {
        fail_at(start, "conflicting ring closure bond symbols");
      }
      auto type = pending_ ? pending_ : open.bond;
      connect(open.atom, prev_, type);
    }
    pending_.reset();
  }

  void add_atom(int z, bool aromatic) {
    const int idx = static_cast<int>(atoms_.size());
    atoms_.push_back(Atom{z, {0.0, 0.0, 0.0}});
    aromatic_.push_back(aromatic);
    if (prev_ >= 0) connect(prev_, idx, pending_);
    pending_.reset();
    prev_ = idx;
  }

  void atom() {
    const char c = s_[pos_];
    if (c == '[') {
      bracket_atom();
      return;
    }
    auto two = s_.substr(pos_, 2);
    if (two == "Cl") {
      pos_ += 2;
      add_atom(17, false);
      return;
    }
    if (two == "Br") {
      pos_ += 2;
      add_atom(35, false);
      return;
    }
    int z = 0;
    bool aromatic = false;
    switch (c) {
      case 'B': z = 5; break;
      case 'C': z = 6; break;
      case 'N': z = 7; break;
      case 'O': z = 8; break;
      case 'P': z = 15; break;
      case 'S': z = 16; break;
      case 'F': z = 9; break;
      case 'I': z = 53; break;
      case 'b': z = 5; aromatic = true; break;
      case 'c': z = 6; aromatic = true; break;
      case 'n': z = 7; aromatic = true; break;
      case 'o': z = 8; aromatic = true; break;
      case 'p': z = 15; aromatic = true; break;
      case 's': z = 16; aromatic = true; break;
      default: {
        if (std::isalpha(static_cast<unsigned char>(c))) {
          throw UnknownElement("element '" + std::string(1, c) + "' at position " +
                               std::to_string(pos_) + " must be bracketed");
        }
        fail(std::string("unexpected character '") +
             (std::isprint(static_cast<unsigned char>(c)) ? std::string(1, c) : "?") + "'");
      }
    }
    ++pos_;
    add_atom(z, aromatic);
  }

  void bracket_atom() {
    const std::size_t open = pos_;
    ++pos_;
    auto peek = [this]() -> char { return pos_ < s_.size() ? s_[pos_] : '\0'; };
    if (std::isdigit(static_cast<unsigned char>(peek()))) fail("isotopes are not supported");
    if (!std::isalpha(static_cast<unsigned char>(peek()))) fail("expected element symbol");

    int z = 0;
    bool aromatic = false;
    const char first = peek();
    if (std::islower(static_cast<unsigned char>(first))) {
      aromatic = true;
      static const std::map<std::string, int> kAromatic = {
          {"se", 34}, {"as", 33}, {"b", 5}, {"c", 6}, {"n", 7}, {"o", 8}, {"p", 15}, {"s", 16}};
      auto two = std::string(s_.substr(pos_, 2));
      if (auto it = kAromatic.find(two); two.size() == 2 && it != kAromatic.end()) {
        z = it->second;
        pos_ += 2;
      } else if (auto it1 = kAromatic.find(std::string(1, first)); it1 != kAromatic.end()) {
        z = it1->second;
        ++pos_;
      } else {
        throw UnknownElement("unknown aromatic symbol at position " + std::to_string(pos_));
      }
    } else {
      std::string sym(1, first);
      ++pos_;
      if (std::islower(static_cast<unsigned char>(peek()))) {
        auto two = sym + peek();
        if (atomic_number_of(two)) {
          sym = two;
          ++pos_;
        }
      }
      auto found = atomic_number_of(sym);
      if (!found) {
        throw UnknownElement("unknown element '" + sym + "' at position " +
                             std::to_string(open + 1));
      }
      z = *found;
    }
    while (peek() == '@') ++pos_;
    if (peek() == 'H') {
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (peek() == '+' || peek() == '-') fail("charged atoms are not supported");
    if (peek() == ':') fail("atom classes are not supported");
    if (peek() != ']') fail("unterminated bracket atom");
    ++pos_;
    add_atom(z, aromatic);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int prev_ = -1;
  std::optional<BondType> pending_;
  std::vector<std::pair<int, std::size_t>> branches_;
  std::map<int, RingOpen> rings_;
  std::vector<Atom> atoms_;
  std::vector<char> aromatic_;
  std::vector<Bond> bonds_;
};

}  // namespace

MoleculeGraph parse(std::string_view text) { return Parser(text).run(); }

}  // namespace odorgen::smiles
