#pragma once

// The logic of a finite manual: perspectivity classes of events, ordered by
// inclusion and equipped with the local-complement orthocomplementation.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "opstat/error.hpp"
#include "opstat/manual.hpp"

namespace opstat {

namespace detail {

class Bitset {
 public:
  explicit Bitset(std::size_t n = 0) : words_((n + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  Bitset& operator&=(const Bitset& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= o.words_[w];
    return *this;
  }
  Bitset& operator|=(const Bitset& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
    return *this;
  }
  friend Bitset operator&(Bitset a, const Bitset& b) { return a &= b; }
  friend bool operator==(const Bitset&, const Bitset&) = default;
  friend bool operator<(const Bitset& a, const Bitset& b) { return a.words_ < b.words_; }

 private:
  std::vector<std::uint64_t> words_;
};

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

}  // namespace detail

inline constexpr std::size_t kDefaultEventCap = std::size_t{1} << 20;

/// A perspectivity class of events.
struct LogicElement {
  std::vector<Event> members;  // sorted; members.front() is the representative
  const Event& representative() const { return members.front(); }
};

struct LogicDegeneracy {
  enum class Kind { OrthocomplementNotWellDefined, NotAntisymmetric, ZeroEqualsOne };
  Kind kind;
  std::string detail;
  std::vector<Event> witnesses;
};

inline std::string_view to_string(LogicDegeneracy::Kind kind) {
  switch (kind) {
    case LogicDegeneracy::Kind::OrthocomplementNotWellDefined: return "OrthocomplementNotWellDefined";
    case LogicDegeneracy::Kind::NotAntisymmetric: return "NotAntisymmetric";
    case LogicDegeneracy::Kind::ZeroEqualsOne: return "ZeroEqualsOne";
  }
  return "Unknown";
}

class Logic {
 public:
  Logic(std::vector<LogicElement> elements, std::vector<detail::Bitset> up, std::vector<std::size_t> ortho,
        std::size_t zero, std::size_t one)
      : elements_(std::move(elements)), up_(std::move(up)), ortho_(std::move(ortho)), zero_(zero), one_(one) {
    for (std::size_t i = 0; i < up_.size(); ++i) by_upset_.emplace(up_[i], i);
  }

  std::size_t size() const noexcept { return elements_.size(); }
  const std::vector<LogicElement>& elements() const noexcept { return elements_; }
  const LogicElement& element(std::size_t i) const { return elements_.at(i); }
  std::size_t zero() const noexcept { return zero_; }
  std::size_t one() const noexcept { return one_; }
  std::size_t orthocomplement(std::size_t i) const { return ortho_.at(i); }
  bool leq(std::size_t a, std::size_t b) const { return up_.at(a).test(b); }

  /// Least upper bound of {a, b}, if one exists in the poset.
  std::optional<std::size_t> join(std::size_t a, std::size_t b) const {
    auto it = by_upset_.find(up_.at(a) & up_.at(b));
    if (it == by_upset_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> meet(std::size_t a, std::size_t b) const {
    auto j = join(ortho_.at(a), ortho_.at(b));
    if (!j) return std::nullopt;
    return ortho_.at(*j);
  }

  /// Elements covering zero.
  std::vector<std::size_t> atoms() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i)
      if (i != zero_ && covers(i, zero_)) out.push_back(i);
    return out;
  }

  /// Covering pairs (lower, upper).
  std::vector<std::pair<std::size_t, std::size_t>> hasse_edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a = 0; a < size(); ++a)
      for (std::size_t b = 0; b < size(); ++b)
        if (a != b && covers(b, a)) out.emplace_back(a, b);
    return out;
  }

  /// Outcomes occurring in some member of the class.
  OutcomeSet confirming_outcomes(std::size_t i) const {
    OutcomeSet out;
    for (const auto& ev : element(i).members) out.insert(ev.outcomes.begin(), ev.outcomes.end());
    return out;
  }
  OutcomeSet refuting_outcomes(std::size_t i) const { return confirming_outcomes(orthocomplement(i)); }

 private:
  bool covers(std::size_t upper, std::size_t lower) const {
    if (upper == lower || !leq(lower, upper)) return false;
    for (std::size_t m = 0; m < size(); ++m)
      if (m != upper && m != lower && leq(lower, m) && leq(m, upper)) return false;
    return true;
  }

  std::vector<LogicElement> elements_;
  std::vector<detail::Bitset> up_;  // up_[a] = { b : a <= b }
  std::vector<std::size_t> ortho_;
  std::size_t zero_;
  std::size_t one_;
  std::map<detail::Bitset, std::size_t> by_upset_;
};

using LogicBuild = std::variant<Logic, LogicDegeneracy>;

/// Builds the logic of `manual`. Events are perspective when they share a local
/// complement; classes are the transitive closure. The order is the transitive
/// closure of class-level inclusion. Throws EventCapExceeded.
inline LogicBuild build_logic(const Manual& manual, std::size_t event_cap = kDefaultEventCap) {
  const auto& outcomes = manual.outcomes();
  std::map<OutcomeId, int> dense;
  for (std::size_t i = 0; i < outcomes.size(); ++i) dense.emplace(outcomes[i], static_cast<int>(i));

  std::vector<std::vector<int>> op_members;
  std::size_t bound = 0;
  for (const auto& op : manual.operations()) {
    if (op.size() >= 63) throw Error(Errc::EventCapExceeded, "operation with " + std::to_string(op.size()) + " outcomes");
    bound += std::size_t{1} << op.size();
    if (bound > event_cap)
      throw Error(Errc::EventCapExceeded, "more than " + std::to_string(event_cap) + " events");
    std::vector<int> ids;
    for (const auto& id : op.as_set()) ids.push_back(dense.at(id));
    op_members.push_back(std::move(ids));
  }

  // Events as sorted dense-index vectors.
  std::map<std::vector<int>, std::size_t> event_id;
  std::vector<std::vector<int>> events;
  auto intern = [&](std::vector<int> key) {
    auto [it, fresh] = event_id.emplace(std::move(key), events.size());
    if (fresh) events.push_back(it->first);
    return it->second;
  };
  auto subset_of = [](const std::vector<int>& members, std::uint64_t mask) {
    std::vector<int> out;
    for (std::size_t k = 0; k < members.size(); ++k)
      if ((mask >> k) & 1U) out.push_back(members[k]);
    return out;
  };

  // Per operation: ids of all its subsets, indexed by mask.
  std::vector<std::vector<std::size_t>> by_mask(op_members.size());
  for (std::size_t o = 0; o < op_members.size(); ++o) {
    const std::uint64_t n_masks = std::uint64_t{1} << op_members[o].size();
    by_mask[o].resize(n_masks);
    for (std::uint64_t m = 0; m < n_masks; ++m) by_mask[o][m] = intern(subset_of(op_members[o], m));
  }
  const std::size_t n_events = events.size();

  // Perspectivity: group events by shared local complement.
  std::vector<std::vector<std::size_t>> complements(n_events);
  std::vector<std::vector<std::size_t>> having_complement(n_events);
  for (std::size_t o = 0; o < op_members.size(); ++o) {
    const std::uint64_t full = (std::uint64_t{1} << op_members[o].size()) - 1;
    for (std::uint64_t m = 0; m <= full; ++m) {
      std::size_t e = by_mask[o][m];
      std::size_t c = by_mask[o][full ^ m];
      complements[e].push_back(c);
      having_complement[c].push_back(e);
    }
  }
  detail::DisjointSets classes(n_events);
  for (const auto& group : having_complement)
    for (std::size_t k = 1; k < group.size(); ++k) classes.unite(group[0], group[k]);

  auto to_event = [&](std::size_t e) {
    OutcomeSet s;
    for (int k : events[e]) s.insert(outcomes[static_cast<std::size_t>(k)]);
    return require_event(manual, s);
  };

  std::map<std::size_t, std::vector<Event>> grouped;
  std::vector<std::size_t> root_of(n_events);
  for (std::size_t e = 0; e < n_events; ++e) {
    root_of[e] = classes.find(e);
    grouped[root_of[e]].push_back(to_event(e));
  }
  std::vector<std::pair<std::size_t, std::vector<Event>>> ordered(grouped.begin(), grouped.end());
  for (auto& [root, members] : ordered) std::sort(members.begin(), members.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.second.front() < b.second.front(); });

  const std::size_t n = ordered.size();
  std::map<std::size_t, std::size_t> class_of_root;
  for (std::size_t i = 0; i < n; ++i) class_of_root[ordered[i].first] = i;
  auto class_of = [&](std::size_t e) { return class_of_root.at(root_of[e]); };

  // Orthocomplement must be a function of the class.
  std::vector<std::optional<std::size_t>> ortho(n);
  std::vector<std::size_t> ortho_source(n);
  for (std::size_t e = 0; e < n_events; ++e) {
    const std::size_t p = class_of(e);
    for (std::size_t c : complements[e]) {
      const std::size_t q = class_of(c);
      if (!ortho[p]) {
        ortho[p] = q;
        ortho_source[p] = c;
      } else if (*ortho[p] != q) {
        return LogicDegeneracy{LogicDegeneracy::Kind::OrthocomplementNotWellDefined,
                               "local complements of one class fall into different classes",
                               {to_event(e), to_event(ortho_source[p]), to_event(c)}};
      }
    }
  }

  // Order: class-level inclusion within operations, then transitive closure.
  std::vector<std::vector<char>> rel(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) rel[i][i] = 1;
  for (std::size_t o = 0; o < op_members.size(); ++o) {
    const std::uint64_t full = (std::uint64_t{1} << op_members[o].size()) - 1;
    for (std::uint64_t sup = 0; sup <= full; ++sup) {
      const std::size_t hi = class_of(by_mask[o][sup]);
      for (std::uint64_t sub = sup;; sub = (sub - 1) & sup) {
        rel[class_of(by_mask[o][sub])][hi] = 1;
        if (sub == 0) break;
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (rel[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (rel[k][j]) rel[i][j] = 1;

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rel[i][j] && rel[j][i])
        return LogicDegeneracy{LogicDegeneracy::Kind::NotAntisymmetric,
                               "two distinct classes are below each other",
                               {ordered[i].second.front(), ordered[j].second.front()}};

  const std::size_t zero = class_of(event_id.at({}));
  const std::size_t one = class_of(by_mask[0].back());
  if (zero == one)
    return LogicDegeneracy{LogicDegeneracy::Kind::ZeroEqualsOne, "empty event is perspective to an operation",
                           {ordered[zero].second.front()}};

  std::vector<LogicElement> elements;
  elements.reserve(n);
  std::vector<detail::Bitset> up(n, detail::Bitset(n));
  std::vector<std::size_t> ortho_map(n);
  for (std::size_t i = 0; i < n; ++i) {
    elements.push_back(LogicElement{std::move(ordered[i].second)});
    ortho_map[i] = *ortho[i];
    for (std::size_t j = 0; j < n; ++j)
      if (rel[i][j]) up[i].set(j);
  }
  return Logic(std::move(elements), std::move(up), std::move(ortho_map), zero, one);
}

struct OrthomodularVerdict {
  bool holds = true;
  std::string failed_axiom;            // empty when holds
  std::vector<std::size_t> witnesses;  // element indices of the counterexample
};

/// Exhaustive check of the orthoposet axioms and the orthomodular law.
inline OrthomodularVerdict is_orthomodular_poset(const Logic& logic) {
  const std::size_t n = logic.size();
  auto fail = [](std::string axiom, std::vector<std::size_t> w) {
    return OrthomodularVerdict{false, std::move(axiom), std::move(w)};
  };

  for (std::size_t p = 0; p < n; ++p) {
    if (!logic.leq(logic.zero(), p) || !logic.leq(p, logic.one())) return fail("bounds", {p});
    if (logic.orthocomplement(logic.orthocomplement(p)) != p) return fail("involution", {p});
    const std::size_t pc = logic.orthocomplement(p);
    if (logic.join(p, pc) != std::optional<std::size_t>(logic.one())) return fail("join_with_complement", {p, pc});
    if (logic.meet(p, pc) != std::optional<std::size_t>(logic.zero())) return fail("meet_with_complement", {p, pc});
  }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      if (logic.leq(p, q) && !logic.leq(logic.orthocomplement(q), logic.orthocomplement(p)))
        return fail("order_reversal", {p, q});

  // p <= q must admit r <= p' with p v r = q.
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t pc = logic.orthocomplement(p);
    for (std::size_t q = 0; q < n; ++q) {
      if (!logic.leq(p, q)) continue;
      bool found = false;
      for (std::size_t r = 0; r < n && !found; ++r)
        found = logic.leq(r, pc) && logic.join(p, r) == std::optional<std::size_t>(q);
      if (!found) return fail("orthomodular_law", {p, q});
    }
  }
  return {};
}

}  // namespace opstat
