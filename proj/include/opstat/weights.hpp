#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "opstat/error.hpp"
#include "opstat/manual.hpp"

namespace opstat {

inline constexpr double kOperationSumTolerance = 1e-9;

using WeightMap = std::map<OutcomeId, double>;

/// Why a candidate outcome assignment is not a weight function.
struct WeightViolation {
  Errc code;
  std::optional<std::size_t> op_index;  // OperationSumViolation
  OutcomeSet outcomes;                  // the failing operation, or the offending outcome
  double value = 0.0;                   // operation sum, or out-of-range value
};

class WeightError : public Error {
 public:
  explicit WeightError(WeightViolation v) : Error(v.code, summarize(v)), violation_(std::move(v)) {}
  const WeightViolation& violation() const noexcept { return violation_; }

 private:
  static std::string summarize(const WeightViolation& v) {
    std::string s = describe(v.outcomes);
    if (v.op_index) s = "operation " + std::to_string(*v.op_index) + " " + s;
    return s + " value " + std::to_string(v.value);
  }
  WeightViolation violation_;
};

/// A validated assignment of probabilities to every outcome of a manual,
/// summing to one on each operation.
class WeightFunction {
 public:
  const Manual& manual() const noexcept { return manual_; }
  const WeightMap& values() const noexcept { return values_; }
  double operator()(const OutcomeId& id) const {
    auto it = values_.find(id);
    if (it == values_.end()) throw Error(Errc::UnknownOutcome, id.str());
    return it->second;
  }

 private:
  friend WeightFunction validate_weight(const Manual&, WeightMap);
  WeightFunction(Manual manual, WeightMap values) : manual_(std::move(manual)), values_(std::move(values)) {}

  Manual manual_;
  WeightMap values_;
};

/// Every reason `values` fails to be a weight on `manual`, in outcome then
/// operation order. Empty means valid.
inline std::vector<WeightViolation> weight_violations(const Manual& manual, const WeightMap& values) {
  std::vector<WeightViolation> out;
  for (const auto& [id, v] : values)
    if (!manual.contains(id)) out.push_back({Errc::UnknownOutcome, std::nullopt, {id}, v});
  for (const auto& id : manual.outcomes()) {
    auto it = values.find(id);
    if (it == values.end()) {
      out.push_back({Errc::MissingOutcome, std::nullopt, {id}, 0.0});
    } else if (!(it->second >= 0.0 && it->second <= 1.0)) {
      out.push_back({Errc::ValueOutOfRange, std::nullopt, {id}, it->second});
    }
  }
  if (!out.empty()) return out;
  for (std::size_t i = 0; i < manual.operation_count(); ++i) {
    double sum = 0.0;
    for (const auto& id : manual.operation(i).outcomes()) sum += values.at(id);
    if (std::abs(sum - 1.0) > kOperationSumTolerance)
      out.push_back({Errc::OperationSumViolation, i, manual.operation(i).as_set(), sum});
  }
  return out;
}

/// Throws WeightError carrying the first violation.
inline WeightFunction validate_weight(const Manual& manual, WeightMap values) {
  auto problems = weight_violations(manual, values);
  if (!problems.empty()) throw WeightError(std::move(problems.front()));
  return WeightFunction(manual, std::move(values));
}

struct UnsupportedReport {
  std::string reason;
};

/// Dimension of the weight space for manuals whose operations share no
/// outcomes; other manuals are reported unsupported.
inline std::variant<std::size_t, UnsupportedReport> weight_space_dof(const Manual& manual) {
  for (const auto& [id, ops] : manual.outcome_index())
    if (ops.size() > 1)
      return UnsupportedReport{"outcome " + id.str() + " is shared by " + std::to_string(ops.size()) +
                               " operations; weight space is a general polytope"};
  std::size_t dof = 0;
  for (const auto& op : manual.operations()) dof += op.size() - 1;
  return dof;
}

/// Superposition in the Foulis-Piron-Randall sense: `omega` vanishes on every
/// outcome where all generators vanish. An outcome-level check is enough since
/// weights are nonnegative and additive on events.
inline bool is_superposition(const WeightFunction& omega, const std::vector<WeightFunction>& generators) {
  for (const auto& g : generators)
    if (!(g.manual() == omega.manual()))
      throw Error(Errc::ManualMismatch, "generator defined on a different manual");
  for (const auto& id : omega.manual().outcomes()) {
    bool common_zero = true;
    for (const auto& g : generators) {
      if (g(id) != 0.0) {
        common_zero = false;
        break;
      }
    }
    if (common_zero && omega(id) != 0.0) return false;
  }
  return true;
}

/// Outcomes where every generator vanishes.
inline OutcomeSet common_zero_set(const Manual& manual, const std::vector<WeightFunction>& generators) {
  OutcomeSet out;
  for (const auto& id : manual.outcomes()) {
    bool zero = true;
    for (const auto& g : generators) zero = zero && g(id) == 0.0;
    if (zero) out.insert(id);
  }
  return out;
}

inline double event_probability(const WeightFunction& omega, const Event& event) {
  double p = 0.0;
  for (const auto& id : event.outcomes) p += omega(id);
  return p;
}

}  // namespace opstat
