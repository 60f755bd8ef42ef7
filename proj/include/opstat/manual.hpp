#pragma once

// Finite manuals (test spaces): operations over shared outcomes, events,
// orthogonality, local complements and the two coarsening constructions.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "opstat/error.hpp"

namespace opstat {

/// Symbolic outcome identifier. Case-sensitive, never empty.
class OutcomeId {
 public:
  OutcomeId() = delete;
  explicit OutcomeId(std::string value) : value_(std::move(value)) {
    if (value_.empty()) throw Error(Errc::ParseError, "outcome identifier must be non-empty");
  }
  OutcomeId(const char* value) : OutcomeId(std::string(value)) {}  // NOLINT(google-explicit-constructor)

  const std::string& str() const noexcept { return value_; }

  friend bool operator==(const OutcomeId&, const OutcomeId&) = default;
  friend auto operator<=>(const OutcomeId&, const OutcomeId&) = default;

 private:
  std::string value_;
};

using OutcomeSet = std::set<OutcomeId>;

class Operation;
class Manual;
inline Manual validate_manual(std::vector<Operation> ops);

inline std::string describe(const OutcomeSet& outcomes) {
  std::string out = "{";
  for (const auto& id : outcomes) {
    if (out.size() > 1) out += ",";
    out += id.str();
  }
  return out + "}";
}

/// One experiment: its outcomes in presentation order.
class Operation {
 public:
  explicit Operation(std::vector<OutcomeId> outcomes) : outcomes_(std::move(outcomes)) {
    if (outcomes_.empty()) throw Error(Errc::EmptyOperation, "operation has no outcomes");
    OutcomeSet seen;
    for (const auto& id : outcomes_) {
      if (!seen.insert(id).second)
        throw Error(Errc::DuplicateOutcomeInOperation, "outcome " + id.str() + " listed twice");
    }
    set_ = std::move(seen);
  }

  const std::vector<OutcomeId>& outcomes() const noexcept { return outcomes_; }
  const OutcomeSet& as_set() const noexcept { return set_; }
  std::size_t size() const noexcept { return outcomes_.size(); }
  bool contains(const OutcomeId& id) const { return set_.contains(id); }
  bool contains_all(const OutcomeSet& ids) const {
    return std::includes(set_.begin(), set_.end(), ids.begin(), ids.end());
  }

  /// Operations are sets; listing order is presentation only.
  friend bool operator==(const Operation& a, const Operation& b) { return a.set_ == b.set_; }

 private:
  std::vector<OutcomeId> outcomes_;
  OutcomeSet set_;
};

/// An outcome set lying inside some operation. `witness` is the lowest-index
/// operation containing it; equality ignores the witness.
struct Event {
  OutcomeSet outcomes;
  std::size_t witness = 0;

  bool empty() const noexcept { return outcomes.empty(); }
  friend bool operator==(const Event& a, const Event& b) { return a.outcomes == b.outcomes; }
  friend bool operator<(const Event& a, const Event& b) { return a.outcomes < b.outcomes; }
};

/// Immutable irredundant set of operations. Build with validate_manual.
class Manual {
 public:
  const std::vector<Operation>& operations() const& noexcept { return operations_; }
  std::vector<Operation> operations() && { return std::move(operations_); }
  const Operation& operation(std::size_t i) const { return operations_.at(i); }
  std::size_t operation_count() const noexcept { return operations_.size(); }

  /// Outcomes in order of first appearance.
  const std::vector<OutcomeId>& outcomes() const& noexcept { return outcomes_; }
  std::vector<OutcomeId> outcomes() && { return std::move(outcomes_); }
  std::size_t outcome_count() const noexcept { return outcomes_.size(); }
  bool contains(const OutcomeId& id) const { return index_.contains(id); }

  /// Indices of operations containing `id` (ascending). Throws UnknownOutcome.
  const std::vector<std::size_t>& operations_containing(const OutcomeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(Errc::UnknownOutcome, id.str());
    return it->second;
  }
  const std::map<OutcomeId, std::vector<std::size_t>>& outcome_index() const noexcept { return index_; }

  /// Set-of-sets equality; operation order and outcome order are ignored.
  friend bool operator==(const Manual& a, const Manual& b) {
    return a.canonical_form() == b.canonical_form();
  }

  std::set<OutcomeSet> canonical_form() const {
    std::set<OutcomeSet> out;
    for (const auto& op : operations_) out.insert(op.as_set());
    return out;
  }

  static std::map<OutcomeId, std::vector<std::size_t>> build_index(const std::vector<Operation>& ops) {
    std::map<OutcomeId, std::vector<std::size_t>> index;
    for (std::size_t i = 0; i < ops.size(); ++i)
      for (const auto& id : ops[i].outcomes()) index[id].push_back(i);
    return index;
  }

 private:
  friend Manual validate_manual(std::vector<Operation> ops);

  Manual(std::vector<Operation> ops) : operations_(std::move(ops)) {
    index_ = build_index(operations_);
    OutcomeSet seen;
    for (const auto& op : operations_)
      for (const auto& id : op.outcomes())
        if (seen.insert(id).second) outcomes_.push_back(id);
  }

  std::vector<Operation> operations_;
  std::vector<OutcomeId> outcomes_;
  std::map<OutcomeId, std::vector<std::size_t>> index_;
};

/// Checks irredundancy and builds the outcome index. Identical operations are
/// collapsed to their first occurrence (a manual is a set of sets).
inline Manual validate_manual(std::vector<Operation> ops) {
  if (ops.empty()) throw Error(Errc::EmptyOperation, "manual has no operations");
  std::vector<Operation> kept;
  std::set<OutcomeSet> seen;
  for (auto& op : ops)
    if (seen.insert(op.as_set()).second) kept.push_back(std::move(op));

  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = 0; j < kept.size(); ++j) {
      if (i == j || kept[i].size() >= kept[j].size()) continue;
      if (kept[j].contains_all(kept[i].as_set()))
        throw Error(Errc::RedundantOperation,
                    "operation " + describe(kept[i].as_set()) + " is contained in " + describe(kept[j].as_set()));
    }
  }
  return Manual(std::move(kept));
}

inline Manual validate_manual(const std::vector<std::vector<std::string>>& raw) {
  std::vector<Operation> ops;
  ops.reserve(raw.size());
  for (const auto& ids : raw) {
    std::vector<OutcomeId> outcomes;
    outcomes.reserve(ids.size());
    for (const auto& s : ids) outcomes.emplace_back(s);
    ops.emplace_back(std::move(outcomes));
  }
  return validate_manual(std::move(ops));
}

/// Returns the event with the lowest-index witness, or nullopt when no single
/// operation contains `outcomes`. Throws UnknownOutcome.
inline std::optional<Event> is_event(const Manual& manual, const OutcomeSet& outcomes) {
  if (outcomes.empty()) return Event{{}, 0};
  for (const auto& id : outcomes)
    if (!manual.contains(id)) throw Error(Errc::UnknownOutcome, id.str());

  // Candidates are the operations containing the first outcome.
  for (std::size_t i : manual.operations_containing(*outcomes.begin()))
    if (manual.operation(i).contains_all(outcomes)) return Event{outcomes, i};
  return std::nullopt;
}

inline Event require_event(const Manual& manual, const OutcomeSet& outcomes) {
  auto ev = is_event(manual, outcomes);
  if (!ev) throw Error(Errc::UnknownOutcome, describe(outcomes) + " is not an event");
  return *ev;
}

inline bool are_orthogonal(const Manual& manual, const Event& a, const Event& b) {
  OutcomeSet joined = a.outcomes;
  for (const auto& id : b.outcomes)
    if (!joined.insert(id).second) return false;
  return is_event(manual, joined).has_value();
}

/// All events c with a ⊥ c and a ∪ c an operation, sorted by outcome set.
inline std::vector<Event> local_complements(const Manual& manual, const Event& a) {
  std::set<OutcomeSet> found;
  for (const auto& op : manual.operations()) {
    if (!op.contains_all(a.outcomes)) continue;
    OutcomeSet rest;
    std::set_difference(op.as_set().begin(), op.as_set().end(), a.outcomes.begin(), a.outcomes.end(),
                        std::inserter(rest, rest.end()));
    found.insert(std::move(rest));
  }
  std::vector<Event> out;
  out.reserve(found.size());
  for (const auto& s : found) out.push_back(require_event(manual, s));
  return out;
}

/// Replaces `packed` inside operation `op_index` by the single new outcome
/// `new_id`. The new outcome is not an alias for the event it replaces.
inline Manual coarsen_pack(const Manual& manual, std::size_t op_index, const OutcomeSet& packed,
                           const OutcomeId& new_id) {
  if (op_index >= manual.operation_count())
    throw Error(Errc::BadOperationIndex, std::to_string(op_index));
  const Operation& target = manual.operation(op_index);
  if (packed.empty() || packed.size() >= target.size() || !target.contains_all(packed))
    throw Error(Errc::PackedNotSubset,
                describe(packed) + " is not a nonempty proper subset of " + describe(target.as_set()));
  if (manual.contains(new_id)) throw Error(Errc::NewIdCollision, new_id.str());

  std::vector<Operation> ops;
  ops.reserve(manual.operation_count());
  for (std::size_t i = 0; i < manual.operation_count(); ++i) {
    if (i != op_index) {
      ops.push_back(manual.operation(i));
      continue;
    }
    std::vector<OutcomeId> outcomes;
    bool placed = false;
    for (const auto& id : target.outcomes()) {
      if (!packed.contains(id)) {
        outcomes.push_back(id);
      } else if (!placed) {
        outcomes.push_back(new_id);
        placed = true;
      }
    }
    ops.emplace_back(std::move(outcomes));
  }
  return validate_manual(std::move(ops));
}

/// Renames outcomes under `identification` (applied simultaneously) and
/// re-validates. Merging two outcomes of one operation is rejected.
inline Manual identify_outcomes(const Manual& manual, const std::map<OutcomeId, OutcomeId>& identification) {
  for (const auto& [from, to] : identification)
    if (!manual.contains(from)) throw Error(Errc::UnknownOutcome, from.str());

  std::vector<Operation> ops;
  ops.reserve(manual.operation_count());
  for (const auto& op : manual.operations()) {
    std::vector<OutcomeId> outcomes;
    OutcomeSet seen;
    for (const auto& id : op.outcomes()) {
      auto it = identification.find(id);
      const OutcomeId& mapped = it == identification.end() ? id : it->second;
      if (!seen.insert(mapped).second)
        throw Error(Errc::MergeCollapsesOperation,
                    "identification merges two outcomes of " + describe(op.as_set()) + " into " + mapped.str());
      outcomes.push_back(mapped);
    }
    ops.emplace_back(std::move(outcomes));
  }
  return validate_manual(std::move(ops));
}

/// Operations of all inputs side by side (outcome ids are taken literally, so
/// shared ids overlap).
inline Manual combine(const std::vector<Manual>& parts) {
  std::vector<Operation> ops;
  for (const auto& m : parts)
    for (const auto& op : m.operations()) ops.push_back(op);
  return validate_manual(std::move(ops));
}

}  // namespace opstat
