#pragma once

// Fuzzy Trace Theory recognition model: covert judgments (identity,
// similarity, nonidentity) mapped to overt Yes/No responses on the memory
// manuals, plus the canonical memory states and the interference excess.

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "opstat/error.hpp"
#include "opstat/manual.hpp"
#include "opstat/weights.hpp"

namespace opstat::ftt {

/// Response category and probe type share the alphabet {T, R, U}.
enum class Kind : std::size_t { T = 0, R = 1, U = 2 };

inline constexpr std::array<Kind, 3> kKinds{Kind::T, Kind::R, Kind::U};

constexpr char letter(Kind k) { return "TRU"[static_cast<std::size_t>(k)]; }

/// Outcome naming convention: response Y to probe type Z is "Y_Z"; the
/// complementary dichotomy outcome is "Y'_Z".
inline OutcomeId yes_id(Kind response, Kind probe) {
  return OutcomeId(std::string{letter(response), '_', letter(probe)});
}
inline OutcomeId no_id(Kind response, Kind probe) {
  return OutcomeId(std::string{letter(response), '\'', '_', letter(probe)});
}

struct Params {
  double iota_t = 0.0;   // identity judgment, target
  double sigma_t = 0.0;  // similarity judgment given no identity, target
  double nu_r = 0.0;     // nonidentity judgment, related distractor
  double sigma_r = 0.0;  // similarity judgment given no nonidentity, related distractor

  std::array<double, 4> as_array() const { return {iota_t, sigma_t, nu_r, sigma_r}; }
  static Params from_array(const std::array<double, 4>& x) { return {x[0], x[1], x[2], x[3]}; }
};

/// Probability of answering "Y" when no covert judgment is made, per
/// discrimination. (0, 0, 1) is the bias-free model.
struct Bias {
  double b_T = 0.0;
  double b_R = 0.0;
  double b_U = 1.0;

  bool is_default() const { return b_T == 0.0 && b_R == 0.0 && b_U == 1.0; }
};

inline void check_range(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::ParamOutOfRange, std::string(name) + " = " + std::to_string(v));
}

inline void validate(const Params& p) {
  check_range(p.iota_t, "iota_t");
  check_range(p.sigma_t, "sigma_t");
  check_range(p.nu_r, "nu_r");
  check_range(p.sigma_r, "sigma_r");
}

inline void validate(const Bias& b) {
  check_range(b.b_T, "b_T");
  check_range(b.b_R, "b_R");
  check_range(b.b_U, "b_U");
}

/// p(Y, Z) = P(respond "Y" | probe type Z) in the Y-vs-not-Y discrimination.
struct DichotomyPredictions {
  std::array<std::array<double, 3>, 3> p{};  // [response][probe]

  double operator()(Kind response, Kind probe) const {
    return p[static_cast<std::size_t>(response)][static_cast<std::size_t>(probe)];
  }
  double& at(Kind response, Kind probe) {
    return p[static_cast<std::size_t>(response)][static_cast<std::size_t>(probe)];
  }
};

/// Response probabilities for the three Yes/No discriminations. In the
/// no-judgment branch the answer is "Y" with probability b_Y; a similarity
/// judgment answers "Y" for T and R and "not U" for U.
inline DichotomyPredictions predict_dichotomies(const Params& params, const Bias& bias = {}) {
  validate(params);
  validate(bias);
  const double i = params.iota_t, st = params.sigma_t, n = params.nu_r, sr = params.sigma_r;
  const double none_t = (1 - i) * (1 - st);  // no judgment on a target
  const double none_r = (1 - n) * (1 - sr);  // no judgment on a related distractor
  const double gist_t = (1 - i) * st;
  const double gist_r = (1 - n) * sr;

  DichotomyPredictions out;
  out.at(Kind::T, Kind::T) = i + gist_t + none_t * bias.b_T;
  out.at(Kind::R, Kind::T) = gist_t + none_t * bias.b_R;
  out.at(Kind::U, Kind::T) = none_t * bias.b_U;
  out.at(Kind::T, Kind::R) = gist_r + none_r * bias.b_T;
  out.at(Kind::R, Kind::R) = n + gist_r + none_r * bias.b_R;
  out.at(Kind::U, Kind::R) = none_r * bias.b_U;
  out.at(Kind::T, Kind::U) = bias.b_T;
  out.at(Kind::R, Kind::U) = bias.b_R;
  out.at(Kind::U, Kind::U) = bias.b_U;
  return out;
}

struct TruSums {
  double sum_T = 0.0;
  double sum_R = 0.0;
  double sum_U = 0.0;
};

/// Dichotomy "Yes" probabilities summed per probe type, as they would be if
/// the dichotomy outcomes were identified with the TRU outcomes.
inline TruSums tru_sums(const Params& params) {
  validate(params);
  return {1.0 + (1 - params.iota_t) * params.sigma_t, 1.0 + (1 - params.nu_r) * params.sigma_r, 1.0};
}

/// (P(T), P(R), P(U)) in the three-way classification of one probe type.
using Trichotomy = std::array<double, 3>;

struct TruPredictions {
  std::array<Trichotomy, 3> by_probe{};  // indexed by probe Kind
  const Trichotomy& operator[](Kind probe) const { return by_probe[static_cast<std::size_t>(probe)]; }
};

/// Forced-choice rule: maps params to the T/R/U response distribution of each
/// probe type.
using TruResponseRule = std::function<TruPredictions(const Params&)>;

/// Verbatim judgments decide; gist without verbatim answers "R"; nothing
/// answers "U".
inline TruPredictions similarity_responds_related(const Params& p) {
  TruPredictions out;
  out.by_probe[0] = {p.iota_t, (1 - p.iota_t) * p.sigma_t, (1 - p.iota_t) * (1 - p.sigma_t)};
  out.by_probe[1] = {0.0, p.nu_r + (1 - p.nu_r) * p.sigma_r, (1 - p.nu_r) * (1 - p.sigma_r)};
  out.by_probe[2] = {0.0, 0.0, 1.0};
  return out;
}

/// Alternative rule: gist without verbatim splits its mass between "T" and
/// "R" with weight `toward_target` on "T".
inline TruResponseRule similarity_split(double toward_target) {
  check_range(toward_target, "toward_target");
  return [toward_target](const Params& p) {
    const double gt = (1 - p.iota_t) * p.sigma_t;
    const double gr = (1 - p.nu_r) * p.sigma_r;
    TruPredictions out;
    out.by_probe[0] = {p.iota_t + toward_target * gt, (1 - toward_target) * gt, (1 - p.iota_t) * (1 - p.sigma_t)};
    out.by_probe[1] = {toward_target * gr, p.nu_r + (1 - toward_target) * gr, (1 - p.nu_r) * (1 - p.sigma_r)};
    out.by_probe[2] = {0.0, 0.0, 1.0};
    return out;
  };
}

inline TruPredictions predict_tru(const Params& params, const TruResponseRule& rule = similarity_responds_related) {
  validate(params);
  return rule(params);
}

struct Excess {
  double excess_T = 0.0;
  double excess_R = 0.0;
};

/// P_TRU({R, U}) - P_dichotomy(T') per probe type: how much more probability
/// the unpacked event carries than the packed outcome.
inline Excess interference_excess(const Params& params) {
  const auto tru = predict_tru(params);
  const auto dich = predict_dichotomies(params);
  const double packed_t = 1.0 - dich(Kind::T, Kind::T);
  const double packed_r = 1.0 - dich(Kind::T, Kind::R);
  const double event_t = tru[Kind::T][1] + tru[Kind::T][2];
  const double event_r = tru[Kind::R][1] + tru[Kind::R][2];
  return {event_t - packed_t, event_r - packed_r};
}

// Memory manuals.

/// Nine Yes/No operations {Y_Z, Y'_Z}, ordered by probe type then response.
inline Manual dichotomy_manual() {
  std::vector<std::vector<std::string>> ops;
  for (Kind probe : kKinds)
    for (Kind response : kKinds) ops.push_back({yes_id(response, probe).str(), no_id(response, probe).str()});
  return validate_manual(ops);
}

/// Three TRU triangles {T_Z, R_Z, U_Z}, one per probe type.
inline Manual tru_manual() {
  std::vector<std::vector<std::string>> ops;
  for (Kind probe : kKinds) {
    std::vector<std::string> op;
    for (Kind response : kKinds) op.push_back(yes_id(response, probe).str());
    ops.push_back(std::move(op));
  }
  return validate_manual(ops);
}

/// Suffix marking TRU outcomes before identification.
inline constexpr const char* kTruTag = "@TRU";

/// TRU triangles side by side with the nine dichotomies, then each TRU
/// outcome identified with the like-labeled dichotomy outcome. Operations
/// 0..2 are the triangles.
inline Manual combined_manual() {
  std::vector<std::vector<std::string>> ops;
  for (Kind probe : kKinds) {
    std::vector<std::string> op;
    for (Kind response : kKinds) op.push_back(yes_id(response, probe).str() + kTruTag);
    ops.push_back(std::move(op));
  }
  const Manual dichotomies = dichotomy_manual();
  for (const auto& op : dichotomies.operations()) {
    std::vector<std::string> ids;
    for (const auto& id : op.outcomes()) ids.push_back(id.str());
    ops.push_back(std::move(ids));
  }
  std::map<OutcomeId, OutcomeId> identify;
  for (Kind probe : kKinds)
    for (Kind response : kKinds)
      identify.emplace(OutcomeId(yes_id(response, probe).str() + kTruTag), yes_id(response, probe));
  return identify_outcomes(validate_manual(ops), identify);
}

/// Outcome assignment on the dichotomy outcomes (Y_Z and Y'_Z) implied by the
/// predictions. Valid on both the dichotomy and the combined manual's
/// outcome set.
inline WeightMap dichotomy_values(const DichotomyPredictions& pred) {
  WeightMap w;
  for (Kind probe : kKinds)
    for (Kind response : kKinds) {
      w.emplace(yes_id(response, probe), pred(response, probe));
      w.emplace(no_id(response, probe), 1.0 - pred(response, probe));
    }
  return w;
}

inline WeightFunction dichotomy_weight(const DichotomyPredictions& pred) {
  return validate_weight(dichotomy_manual(), dichotomy_values(pred));
}

struct CanonicalStates {
  WeightFunction perfect;    // perfect gist and verbatim memory
  WeightFunction none;       // no memory
  WeightFunction gist_only;  // perfect gist, no verbatim memory
};

inline CanonicalStates canonical_states() {
  return {dichotomy_weight(predict_dichotomies({1, 1, 1, 1})), dichotomy_weight(predict_dichotomies({0, 0, 0, 0})),
          dichotomy_weight(predict_dichotomies({0, 1, 0, 1}))};
}

}  // namespace opstat::ftt
