#pragma once

// Recognition-experiment count data: seeded simulation, a closed-form moment
// inversion, and box-constrained maximum likelihood for the 4- and
// 7-parameter models.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "opstat/error.hpp"
#include "opstat/ftt.hpp"

namespace opstat::est {

using ftt::Bias;
using ftt::DichotomyPredictions;
using ftt::Kind;
using ftt::kKinds;
using ftt::Params;

/// Algorithm names reported alongside simulated tables.
inline constexpr const char* kGeneratorName = "std::mt19937_64";
inline constexpr const char* kBinomialName = "std::binomial_distribution (libstdc++)";

struct Cell {
  std::uint64_t yes = 0;
  std::uint64_t total = 0;
  double frequency() const { return static_cast<double>(yes) / static_cast<double>(total); }
};

/// Yes counts for each (discrimination, probe type) pair.
struct CountTable {
  std::array<std::array<Cell, 3>, 3> cells{};  // [discrimination][probe]

  const Cell& operator()(Kind discrimination, Kind probe) const {
    return cells[static_cast<std::size_t>(discrimination)][static_cast<std::size_t>(probe)];
  }
  Cell& at(Kind discrimination, Kind probe) {
    return cells[static_cast<std::size_t>(discrimination)][static_cast<std::size_t>(probe)];
  }

  /// Throws BadCount when some yes_count exceeds its total.
  void validate() const {
    for (Kind d : kKinds)
      for (Kind z : kKinds)
        if ((*this)(d, z).yes > (*this)(d, z).total)
          throw Error(Errc::BadCount, std::string("cell ") + ftt::letter(d) + "|" + ftt::letter(z) +
                                          " has more yes responses than trials");
  }

  DichotomyPredictions frequencies() const {
    DichotomyPredictions f;
    for (Kind d : kKinds)
      for (Kind z : kKinds) {
        const Cell& c = (*this)(d, z);
        f.at(d, z) = c.total == 0 ? 0.0 : c.frequency();
      }
    return f;
  }
};

/// Independent binomial draw per cell, in discrimination-major order.
inline CountTable simulate_counts(const Params& params, const Bias& bias, std::uint64_t n_per_cell,
                                  std::uint64_t seed) {
  if (n_per_cell == 0) throw Error(Errc::BadCount, "n_per_cell must be at least 1");
  const auto pred = ftt::predict_dichotomies(params, bias);
  std::mt19937_64 rng(seed);
  CountTable out;
  for (Kind d : kKinds)
    for (Kind z : kKinds) {
      std::binomial_distribution<std::uint64_t> draw(n_per_cell, pred(d, z));
      out.at(d, z) = {draw(rng), n_per_cell};
    }
  return out;
}

inline CountTable simulate_counts(const Params& params, std::uint64_t n_per_cell, std::uint64_t seed) {
  return simulate_counts(params, Bias{}, n_per_cell, seed);
}

/// y = round(n p) in every cell.
inline CountTable expected_counts(const DichotomyPredictions& pred, std::uint64_t n_per_cell) {
  CountTable out;
  for (Kind d : kKinds)
    for (Kind z : kKinds)
      out.at(d, z) = {static_cast<std::uint64_t>(std::llround(static_cast<double>(n_per_cell) * pred(d, z))),
                      n_per_cell};
  return out;
}

struct MomentEstimate {
  Params params;
  bool sigma_t_unidentifiable = false;
  bool sigma_r_unidentifiable = false;
  bool out_of_box = false;  // some raw estimate left [0, 1]: data inconsistent with the model
};

/// Inverts the bias-free response equations using the T|T, R|T, R|R and T|R
/// frequencies.
inline MomentEstimate moment_estimate(const DichotomyPredictions& freq) {
  MomentEstimate out;
  auto clamp = [&](double raw) {
    if (!(raw >= 0.0 && raw <= 1.0)) out.out_of_box = true;
    return std::clamp(raw, 0.0, 1.0);
  };
  auto split = [&](double verbatim_yes, double gist_yes, double& verbatim, double& gist, bool& unidentifiable) {
    verbatim = clamp(verbatim_yes - gist_yes);
    if (verbatim < 1.0) {
      gist = clamp(gist_yes / (1.0 - verbatim));
    } else {
      gist = 0.0;
      unidentifiable = true;
    }
  };
  split(freq(Kind::T, Kind::T), freq(Kind::R, Kind::T), out.params.iota_t, out.params.sigma_t,
        out.sigma_t_unidentifiable);
  split(freq(Kind::R, Kind::R), freq(Kind::T, Kind::R), out.params.nu_r, out.params.sigma_r,
        out.sigma_r_unidentifiable);
  return out;
}

enum class Model { FourParam = 4, SevenParam = 7 };

inline std::size_t parameter_count(Model m) { return static_cast<std::size_t>(m); }

struct FitOptions {
  double tol = 1e-8;
  int max_iter = 10000;
};

struct FitResult {
  Model model = Model::FourParam;
  Params params;
  Bias bias;  // (0, 0, 1) for the 4-parameter model
  double log_likelihood = 0.0;
  bool converged = false;
  bool feasible = true;  // false: some cell has zero likelihood under the model
  int iterations = 0;
  DichotomyPredictions predicted;
  double max_abs_residual = 0.0;
  bool sigma_t_unidentifiable = false;
  bool sigma_r_unidentifiable = false;
  std::string diagnostic;
  std::vector<double> objective_trace;  // per accepted iterate; nondecreasing
  FitOptions options;
};

namespace detail {

using Theta = std::array<double, 7>;  // (iota_t, sigma_t, nu_r, sigma_r, b_T, b_R, b_U)

inline Params params_of(const Theta& t) { return {t[0], t[1], t[2], t[3]}; }
inline Bias bias_of(const Theta& t, Model m) {
  return m == Model::SevenParam ? Bias{t[4], t[5], t[6]} : Bias{};
}

inline std::size_t cell_index(Kind d, Kind z) { return 3 * static_cast<std::size_t>(d) + static_cast<std::size_t>(z); }

/// d p(cell) / d theta for all nine cells, all seven coordinates.
inline std::array<Theta, 9> jacobian(const Theta& t) {
  const double a = t[0], s = t[1], v = t[2], r = t[3], bT = t[4], bR = t[5], bU = t[6];
  const double A = 1 - a, S = 1 - s, V = 1 - v, Rr = 1 - r;
  std::array<Theta, 9> J{};
  auto& tt = J[cell_index(Kind::T, Kind::T)];
  tt[0] = 1 - s - S * bT;
  tt[1] = A - A * bT;
  tt[4] = A * S;
  auto& rt = J[cell_index(Kind::R, Kind::T)];
  rt[0] = -s - S * bR;
  rt[1] = A - A * bR;
  rt[5] = A * S;
  auto& ut = J[cell_index(Kind::U, Kind::T)];
  ut[0] = -S * bU;
  ut[1] = -A * bU;
  ut[6] = A * S;
  auto& tr = J[cell_index(Kind::T, Kind::R)];
  tr[2] = -r - Rr * bT;
  tr[3] = V - V * bT;
  tr[4] = V * Rr;
  auto& rr = J[cell_index(Kind::R, Kind::R)];
  rr[2] = 1 - r - Rr * bR;
  rr[3] = V - V * bR;
  rr[5] = V * Rr;
  auto& ur = J[cell_index(Kind::U, Kind::R)];
  ur[2] = -Rr * bU;
  ur[3] = -V * bU;
  ur[6] = V * Rr;
  J[cell_index(Kind::T, Kind::U)][4] = 1;
  J[cell_index(Kind::R, Kind::U)][5] = 1;
  J[cell_index(Kind::U, Kind::U)][6] = 1;
  return J;
}

/// y log(p) + (n - y) log(1 - p) with 0 log 0 = 0.
inline double binomial_loglik(double y, double n, double p) {
  double out = 0.0;
  if (y > 0) out += p > 0 ? y * std::log(p) : -std::numeric_limits<double>::infinity();
  if (n - y > 0) out += p < 1 ? (n - y) * std::log1p(-p) : -std::numeric_limits<double>::infinity();
  return out;
}

/// Same, relative to the saturated fit p = y / n. Small near the optimum, so
/// ascent steps are resolved without cancellation.
inline double relative_loglik(double y, double n, double p) {
  const double f = y / n;
  double out = 0.0;
  if (y > 0) out += p > 0 ? y * std::log(p / f) : -std::numeric_limits<double>::infinity();
  if (n - y > 0) out += p < 1 ? (n - y) * std::log((1 - p) / (1 - f)) : -std::numeric_limits<double>::infinity();
  return out;
}

/// Cells whose probability depends on the free parameters.
inline std::vector<std::size_t> free_cells(Model m) {
  if (m == Model::SevenParam) return {0, 1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<std::size_t> out;
  for (Kind d : kKinds)
    for (Kind z : {Kind::T, Kind::R}) out.push_back(cell_index(d, z));
  return out;
}

class Objective {
 public:
  Objective(const CountTable& counts, Model model) : model_(model), cells_(free_cells(model)) {
    for (Kind d : kKinds)
      for (Kind z : kKinds) {
        y_[cell_index(d, z)] = static_cast<double>(counts(d, z).yes);
        n_[cell_index(d, z)] = static_cast<double>(counts(d, z).total);
      }
  }

  std::size_t dim() const { return parameter_count(model_); }

  std::array<double, 9> probabilities(const Theta& t) const {
    const auto pred = ftt::predict_dichotomies(params_of(t), bias_of(t, model_));
    std::array<double, 9> p{};
    for (Kind d : kKinds)
      for (Kind z : kKinds) p[cell_index(d, z)] = pred(d, z);
    return p;
  }

  double value(const Theta& t) const {
    const auto p = probabilities(t);
    double f = 0.0;
    for (std::size_t c : cells_) f += relative_loglik(y_[c], n_[c], p[c]);
    return f;
  }

  /// Score vector and expected information over the free coordinates.
  void derivatives(const Theta& t, std::vector<double>& grad, std::vector<std::vector<double>>& info) const {
    const std::size_t k = dim();
    grad.assign(k, 0.0);
    info.assign(k, std::vector<double>(k, 0.0));
    const auto p = probabilities(t);
    const auto J = jacobian(t);
    for (std::size_t c : cells_) {
      const double pc = std::clamp(p[c], 1e-12, 1 - 1e-12);
      const double score = (y_[c] > 0 ? y_[c] / pc : 0.0) - (n_[c] - y_[c] > 0 ? (n_[c] - y_[c]) / (1 - pc) : 0.0);
      const double weight = n_[c] / (pc * (1 - pc));
      for (std::size_t i = 0; i < k; ++i) {
        grad[i] += score * J[c][i];
        for (std::size_t j = 0; j < k; ++j) info[i][j] += weight * J[c][i] * J[c][j];
      }
    }
  }

 private:
  Model model_;
  std::vector<std::size_t> cells_;
  std::array<double, 9> y_{};
  std::array<double, 9> n_{};
};

/// Solves a small symmetric positive definite system by Cholesky. Returns
/// false when the matrix is not numerically positive definite.
inline bool cholesky_solve(std::vector<std::vector<double>> a, std::vector<double>& x) {
  const std::size_t n = a.size();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    if (!(d > 0.0)) return false;
    a[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
      a[i][j] = s / a[j][j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k][i] * x[k];
    x[i] = s / a[i][i];
  }
  return true;
}

}  // namespace detail

/// Maximum likelihood over the unit box by projected Fisher scoring with
/// Levenberg damping. Only steps that do not lower the log-likelihood are
/// accepted; the fit has converged once an accepted step gains less than
/// `tol`, or no step gains at all. Cells whose probability is fixed by the
/// model still enter the reported log-likelihood, which is -inf when they
/// contradict the data. Throws EmptyCell.
inline FitResult fit_mle(const CountTable& counts, Model model, const FitOptions& options = {}) {
  counts.validate();
  for (Kind d : kKinds)
    for (Kind z : kKinds)
      if (counts(d, z).total == 0)
        throw Error(Errc::EmptyCell, std::string("cell ") + ftt::letter(d) + "|" + ftt::letter(z) + " has no trials");

  const std::size_t k = parameter_count(model);
  const detail::Objective objective(counts, model);
  const auto freq = counts.frequencies();

  detail::Theta theta{0, 0, 0, 0, 0, 0, 1};
  const auto start = moment_estimate(freq).params.as_array();
  std::copy(start.begin(), start.end(), theta.begin());
  if (model == Model::SevenParam) {
    theta[4] = freq(Kind::T, Kind::U);
    theta[5] = freq(Kind::R, Kind::U);
    theta[6] = freq(Kind::U, Kind::U);
  }
  for (std::size_t i = 0; i < k; ++i) theta[i] = std::clamp(theta[i], 1e-3, 1 - 1e-3);

  FitResult result;
  result.model = model;
  result.options = options;
  double f = objective.value(theta);
  result.objective_trace.push_back(f);

  std::vector<double> grad;
  std::vector<std::vector<double>> info;
  double lambda = 1e-6;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    objective.derivatives(theta, grad, info);

    // Coordinates pinned at a bound with the score pointing outward stay put.
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < k; ++i) {
      const bool pinned = (theta[i] <= 0.0 && grad[i] < 0.0) || (theta[i] >= 1.0 && grad[i] > 0.0);
      if (!pinned) active.push_back(i);
    }
    if (active.empty()) {
      result.converged = true;
      break;
    }

    bool accepted = false;
    double gain = 0.0;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt, lambda *= 10.0) {
      std::vector<std::vector<double>> sys(active.size(), std::vector<double>(active.size()));
      std::vector<double> step(active.size());
      for (std::size_t i = 0; i < active.size(); ++i) {
        step[i] = grad[active[i]];
        for (std::size_t j = 0; j < active.size(); ++j) sys[i][j] = info[active[i]][active[j]];
        sys[i][i] += lambda * (info[active[i]][active[i]] + 1.0);
      }
      if (!detail::cholesky_solve(sys, step)) continue;
      detail::Theta trial = theta;
      for (std::size_t i = 0; i < active.size(); ++i)
        trial[active[i]] = std::clamp(theta[active[i]] + step[i], 0.0, 1.0);
      const double f_trial = objective.value(trial);
      if (f_trial >= f) {
        accepted = true;
        gain = f_trial - f;
        theta = trial;
        f = f_trial;
      }
    }
    if (!accepted) {
      // No nondecreasing step exists at working precision.
      result.converged = true;
      break;
    }
    lambda = std::max(lambda / 100.0, 1e-12);
    result.objective_trace.push_back(f);
    if (gain < options.tol) {
      result.converged = true;
      ++iter;
      break;
    }
  }
  result.iterations = iter;
  if (!result.converged) result.diagnostic = "iteration limit reached before the gain fell below tol";

  result.params = detail::params_of(theta);
  result.bias = detail::bias_of(theta, model);
  constexpr double kBoundarySnap = 1e-9;
  if (result.params.iota_t >= 1 - kBoundarySnap) {
    result.params.iota_t = 1.0;
    result.params.sigma_t = 0.0;
    result.sigma_t_unidentifiable = true;
  }
  if (result.params.nu_r >= 1 - kBoundarySnap) {
    result.params.nu_r = 1.0;
    result.params.sigma_r = 0.0;
    result.sigma_r_unidentifiable = true;
  }

  result.predicted = ftt::predict_dichotomies(result.params, result.bias);
  result.log_likelihood = 0.0;
  for (Kind d : kKinds)
    for (Kind z : kKinds) {
      const Cell& c = counts(d, z);
      const double p = result.predicted(d, z);
      const double ll = detail::binomial_loglik(static_cast<double>(c.yes), static_cast<double>(c.total), p);
      if (std::isinf(ll)) {
        result.feasible = false;
        if (!result.diagnostic.empty()) result.diagnostic += "; ";
        result.diagnostic += std::string("cell ") + ftt::letter(d) + "|" + ftt::letter(z) + " predicted " +
                             std::to_string(p) + " contradicts " + std::to_string(c.yes) + "/" +
                             std::to_string(c.total);
      }
      result.log_likelihood += ll;
      result.max_abs_residual = std::max(result.max_abs_residual, std::abs(p - freq(d, z)));
    }
  return result;
}

struct GofCell {
  Kind discrimination;
  Kind probe;
  double observed;
  double predicted;
  double abs_residual;
  double g2_term;
};

struct GofReport {
  std::vector<GofCell> cells;
  double max_residual = 0.0;
  double g2 = 0.0;
  int dof = 0;  // cells with parameter-dependent probability minus free parameters
};

/// Per-cell residuals and the likelihood-ratio statistic
/// G^2 = 2 sum [y log(y / n p) + (n - y) log((n - y) / n (1 - p))].
inline GofReport goodness_of_fit(const FitResult& result, const CountTable& counts) {
  GofReport out;
  for (Kind d : kKinds)
    for (Kind z : kKinds) {
      const Cell& c = counts(d, z);
      const double p = result.predicted(d, z);
      const double obs = c.total == 0 ? 0.0 : c.frequency();
      const double term = c.total == 0 ? 0.0
                                       : -2.0 * detail::relative_loglik(static_cast<double>(c.yes),
                                                                        static_cast<double>(c.total), p);
      out.cells.push_back({d, z, obs, p, std::abs(obs - p), term});
      out.max_residual = std::max(out.max_residual, std::abs(obs - p));
      out.g2 += term;
    }
  out.dof = static_cast<int>(detail::free_cells(result.model).size()) - static_cast<int>(parameter_count(result.model));
  return out;
}

}  // namespace opstat::est
