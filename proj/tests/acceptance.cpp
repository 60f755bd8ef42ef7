// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "opstat/cli.hpp"

using namespace opstat;
using nlohmann::json;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // <= 0 means no runtime limit
  std::function<Verdict()> body;
};

json cli_json(std::vector<std::string> args, int* code = nullptr) {
  args.insert(args.begin(), "opstat");
  std::ostringstream out, err;
  const int c = cli::run(args, out, err);
  if (code) *code = c;
  return json::parse(out.str());
}

std::string params_json(const ftt::Params& p) { return io::to_json(p).dump(); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Columns in the order T_T, R_T, U_T, T_R, R_R, U_R, T_U, R_U, U_U.
Verdict table_columns() {
  Verdict v;
  const std::vector<std::pair<ftt::Params, std::array<double, 9>>> cases = {
      {{1, 1, 1, 1}, {1, 0, 0, 0, 1, 0, 0, 0, 1}},
      {{0, 0, 0, 0}, {0, 0, 1, 0, 0, 1, 0, 0, 1}},
      {{0, 1, 0, 1}, {1, 1, 0, 1, 1, 0, 0, 0, 1}},
  };
  for (const auto& [params, column] : cases) {
    int code = -1;
    const json pred = cli_json({"ftt", "predict", "--params", params_json(params)}, &code)["predictions"];
    v.require(code == 0, "ftt predict exit code " + std::to_string(code));
    std::size_t k = 0;
    for (auto probe : ftt::kKinds)
      for (auto resp : ftt::kKinds) {
        const std::string cell = std::string(1, ftt::letter(resp)) + "|" + ftt::letter(probe);
        v.require(pred.at(cell).get<double>() == column[k++], "cell " + cell + " at " + params_json(params));
      }
  }
  return v;
}

Verdict sum_rows() {
  Verdict v;
  const auto g = ftt::tru_sums({0, 1, 0, 1});
  v.require(g.sum_T == 2.0 && g.sum_R == 2.0 && g.sum_U == 1.0, "gist-only sums not (2,2,1)");
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 1000; ++t) {
    const auto s = ftt::tru_sums({1, u(rng), 1, u(rng)});
    v.require(s.sum_T == 1.0 && s.sum_R == 1.0 && s.sum_U == 1.0, "verbatim sums not (1,1,1)");
  }
  for (double s : {0.0, 1.0}) {
    const auto x = ftt::tru_sums({1, s, 1, s});
    v.require(x.sum_T == 1.0 && x.sum_R == 1.0 && x.sum_U == 1.0, "verbatim corner sums not (1,1,1)");
  }
  return v;
}

double reported_excess(const json& report, std::size_t op_index) {
  for (const auto& viol : report.at("violations"))
    if (viol.at("op_index") == op_index) return viol.at("excess").get<double>();
  return 0.0;
}

Verdict interference() {
  Verdict v;
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const ftt::Params p{u(rng), u(rng), u(rng), u(rng)};
    int code = -1;
    const json r = cli_json({"demo", "interference", "--params", params_json(p)}, &code);
    v.require(code == 0, "demo interference exit code");
    const double want_t = (1 - p.iota_t) * p.sigma_t, want_r = (1 - p.nu_r) * p.sigma_r;
    for (const auto& viol : r.at("violations")) v.require(viol.at("error") == "OperationSumViolation", "error kind");
    worst = std::max({worst, std::abs(reported_excess(r, 0) - want_t), std::abs(reported_excess(r, 1) - want_r)});
  }
  v.require(worst <= 1e-12, "excess error " + fmt(worst));

  // Zero excess when verbatim is certain or similarity never fires.
  for (int t = 0; t < 100; ++t) {
    ftt::Params p{u(rng), u(rng), u(rng), u(rng)};
    (t % 2 ? p.iota_t : p.sigma_t) = t % 2 ? 1.0 : 0.0;
    (t % 4 < 2 ? p.nu_r : p.sigma_r) = t % 4 < 2 ? 1.0 : 0.0;
    const json r = cli_json({"demo", "interference", "--params", params_json(p)});
    v.require(r.at("consistent").get<bool>() && r.at("violations").empty(), "violation at " + params_json(p));
    v.require(r.at("excess").at("excess_T") == 0.0 && r.at("excess").at("excess_R") == 0.0, "nonzero excess");
  }
  return v;
}

Verdict spin_additivity() {
  Verdict v;
  std::mt19937_64 rng(4004);
  double merge = 0, untouched = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto rho = spin::random_density(rng);
    const auto frame = spin::random_frame(rng);
    const auto fine = spin::frame_weights(rho, frame);
    const auto coarse = spin::frame_weights(rho, spin::coarsen_frame(frame, 1, 2));
    merge = std::max(merge, std::abs(coarse[1] - (fine[1] + fine[2])));
    untouched = std::max(untouched, std::abs(coarse[0] - fine[0]));
  }
  v.require(merge <= 1e-10, "merge error " + fmt(merge));
  v.require(untouched <= 1e-12, "untouched error " + fmt(untouched));
  v.detail = v.ok ? "max merge error " + fmt(merge) + ", untouched " + fmt(untouched) : v.detail;
  return v;
}

Verdict density_recovery() {
  Verdict v;
  std::mt19937_64 rng(5005);
  double worst_entry = 0, worst_residual = 0;
  for (int t = 0; t < 50; ++t) {
    const auto rho = spin::random_density(rng);
    std::vector<spin::Frame> frames;
    std::vector<std::vector<double>> observed;
    for (int f = 0; f < 6; ++f) {
      frames.push_back(spin::random_frame(rng));
      const auto w = spin::frame_weights(rho, frames.back());
      observed.emplace_back(w.begin(), w.end());
    }
    const auto fit = spin::fit_density(frames, observed);
    worst_entry = std::max(worst_entry, spin::max_abs_diff(fit.rho, rho.matrix()));
    worst_residual = std::max(worst_residual, fit.residual);
  }
  v.require(worst_entry <= 1e-6, "entry error " + fmt(worst_entry));
  v.require(worst_residual <= 1e-10, "residual " + fmt(worst_residual));
  v.detail = v.ok ? "max entry error " + fmt(worst_entry) + ", residual " + fmt(worst_residual) : v.detail;
  return v;
}

Verdict logic_structure() {
  Verdict v;
  const auto dich = build_logic(ftt::dichotomy_manual());
  v.require(std::holds_alternative<Logic>(dich), "dichotomy logic degenerate");
  if (!v.ok) return v;
  const Logic& l = std::get<Logic>(dich);
  v.require(l.size() == 20, "dichotomy elements " + std::to_string(l.size()));
  v.require(l.atoms().size() == 18, "dichotomy atoms " + std::to_string(l.atoms().size()));
  v.require(is_orthomodular_poset(l).holds, "dichotomy logic not orthomodular");

  const auto tri = build_logic(validate_manual({{"T_T", "R_T", "U_T"}}));
  v.require(std::holds_alternative<Logic>(tri), "TRU logic degenerate");
  if (!v.ok) return v;
  const Logic& b = std::get<Logic>(tri);
  v.require(b.size() == 8 && b.atoms().size() == 3, "TRU logic size " + std::to_string(b.size()));
  v.require(is_orthomodular_poset(b).holds, "TRU logic not orthomodular");
  return v;
}

Verdict estimator_round_trip() {
  Verdict v;
  std::mt19937_64 truths(7007);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  std::vector<double> errors;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const ftt::Params truth{u(truths), u(truths), u(truths), u(truths)};
    const auto fit = est::fit_mle(est::simulate_counts(truth, 100000, seed), est::Model::FourParam);
    v.require(fit.converged && fit.feasible, "fit failed for seed " + std::to_string(seed));
    for (double e : {fit.params.iota_t - truth.iota_t, fit.params.sigma_t - truth.sigma_t,
                     fit.params.nu_r - truth.nu_r, fit.params.sigma_r - truth.sigma_r})
      errors.push_back(std::abs(e));
  }
  std::sort(errors.begin(), errors.end());
  const double median = 0.5 * (errors[errors.size() / 2 - 1] + errors[errors.size() / 2]);
  const double max = errors.back();
  v.require(median <= 0.005, "median error " + fmt(median));
  v.require(max <= 0.02, "max error " + fmt(max));

  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    const ftt::Params truth{u(truths), u(truths), u(truths), u(truths)};
    const auto counts = est::expected_counts(ftt::predict_dichotomies(truth), 1000000000);
    const auto fit = est::fit_mle(counts, est::Model::FourParam);
    const auto m = est::moment_estimate(counts.frequencies());
    worst = std::max({worst, std::abs(fit.params.iota_t - m.params.iota_t),
                      std::abs(fit.params.sigma_t - m.params.sigma_t), std::abs(fit.params.nu_r - m.params.nu_r),
                      std::abs(fit.params.sigma_r - m.params.sigma_r)});
  }
  v.require(worst <= 1e-6, "noiseless mismatch " + fmt(worst));
  v.detail = v.ok ? "median " + fmt(median) + ", max " + fmt(max) + ", noiseless gap " + fmt(worst) : v.detail;
  return v;
}

Verdict superposition() {
  Verdict v;
  const auto s = ftt::canonical_states();
  v.require(is_superposition(s.perfect, {s.none, s.gist_only}), "perfect not in span of none, gist-only");
  WeightMap point;
  for (auto z : ftt::kKinds)
    for (auto y : ftt::kKinds) {
      point[ftt::yes_id(y, z)] = 0.0;
      point[ftt::no_id(y, z)] = 1.0;
    }
  point[ftt::yes_id(ftt::Kind::T, ftt::Kind::T)] = 1.0;
  point[ftt::no_id(ftt::Kind::T, ftt::Kind::T)] = 0.0;
  v.require(!is_superposition(validate_weight(ftt::dichotomy_manual(), point), {s.none}),
            "point weight reported as superposition");
  return v;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "published columns from ftt predict", 1.0, table_columns},
      {2, "sum rows", 0, sum_rows},
      {3, "interference demonstration", 5.0, interference},
      {4, "spin-one additivity", 5.0, spin_additivity},
      {5, "density recovery", 10.0, density_recovery},
      {6, "logic structure", 5.0, logic_structure},
      {7, "estimator round trip", 60.0, estimator_round_trip},
      {8, "superposition check", 0, superposition},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.body();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0 && secs >= c.limit_s && v.ok) {
      v.ok = false;
      v.detail = "runtime " + fmt(secs) + " s over limit " + fmt(c.limit_s) + " s";
    }
    if (!v.ok) ++failures;
    std::printf("%s criterion %d: %s (%.3f s)%s%s\n", v.ok ? "PASS" : "FAIL", c.id, c.name, secs,
                v.detail.empty() ? "" : " - ", v.detail.c_str());
  }
  return failures == 0 ? 0 : 1;
}
