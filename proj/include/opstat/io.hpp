#pragma once

// Wire formats: manual, identification, weight, frame, density, params and
// fit JSON; counts CSV.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opstat/error.hpp"
#include "opstat/estimation.hpp"
#include "opstat/ftt.hpp"
#include "opstat/logic.hpp"
#include "opstat/manual.hpp"
#include "opstat/spin_one.hpp"
#include "opstat/weights.hpp"

namespace opstat::io {

using nlohmann::json;

/// Malformed input (as opposed to a domain violation).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(Errc::ParseError, what) {}
};

inline json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

// Manuals and events.

inline json to_json(const Manual& m) {
  json ops = json::array();
  for (const auto& op : m.operations()) {
    json ids = json::array();
    for (const auto& id : op.outcomes()) ids.push_back(id.str());
    ops.push_back(std::move(ids));
  }
  return {{"operations", std::move(ops)}};
}

/// Structural problems (duplicates, redundancy) surface as domain errors.
inline Manual manual_from_json(const json& j) {
  auto raw = guarded("manual", [&] { return j.at("operations").get<std::vector<std::vector<std::string>>>(); });
  return validate_manual(raw);
}

inline OutcomeSet outcome_set_from_json(const json& j) {
  auto ids = guarded("outcome list", [&] { return j.get<std::vector<std::string>>(); });
  OutcomeSet out;
  for (auto& s : ids) out.insert(OutcomeId(std::move(s)));
  return out;
}

inline json to_json(const OutcomeSet& s) {
  json out = json::array();
  for (const auto& id : s) out.push_back(id.str());
  return out;
}

inline json to_json(const Event& e) { return {{"outcomes", to_json(e.outcomes)}, {"witness", e.witness}}; }

inline std::map<OutcomeId, OutcomeId> identification_from_json(const json& j) {
  auto raw = guarded("identification", [&] { return j.at("identify").get<std::map<std::string, std::string>>(); });
  std::map<OutcomeId, OutcomeId> out;
  for (auto& [from, to] : raw) out.emplace(OutcomeId(from), OutcomeId(to));
  return out;
}

// Weights.

inline json to_json(const WeightMap& w) {
  json out = json::object();
  for (const auto& [id, v] : w) out[id.str()] = v;
  return out;
}

inline json to_json(const WeightFunction& w) {
  return {{"manual", to_json(w.manual())}, {"weights", to_json(w.values())}};
}

inline WeightMap weight_map_from_json(const json& j) {
  auto raw = guarded("weights", [&] { return j.get<std::map<std::string, double>>(); });
  WeightMap out;
  for (auto& [id, v] : raw) out.emplace(OutcomeId(id), v);
  return out;
}

struct WeightDocument {
  Manual manual;
  WeightMap values;
};

inline WeightDocument weight_document_from_json(const json& j) {
  Manual m = manual_from_json(guarded("weight document", [&] { return j.at("manual"); }));
  WeightMap w = weight_map_from_json(guarded("weight document", [&] { return j.at("weights"); }));
  return {std::move(m), std::move(w)};
}

inline json to_json(const WeightViolation& v) {
  json out = {{"error", std::string(to_string(v.code))}, {"outcomes", to_json(v.outcomes)}};
  if (v.op_index) {
    out["op_index"] = *v.op_index;
    out["sum"] = v.value;
  } else {
    out["value"] = v.value;
  }
  return out;
}

// Logic.

inline json to_json(const Logic& logic, const OrthomodularVerdict& verdict) {
  json elements = json::array();
  for (std::size_t i = 0; i < logic.size(); ++i)
    elements.push_back({{"index", i},
                        {"representative", to_json(logic.element(i).representative().outcomes)},
                        {"members", logic.element(i).members.size()}});
  json edges = json::array();
  for (auto [lo, hi] : logic.hasse_edges()) edges.push_back({lo, hi});
  json ortho = json::array();
  for (std::size_t i = 0; i < logic.size(); ++i)
    if (i <= logic.orthocomplement(i)) ortho.push_back({i, logic.orthocomplement(i)});
  json omp = {{"holds", verdict.holds}};
  if (!verdict.holds) omp.update({{"failed_axiom", verdict.failed_axiom}, {"witnesses", verdict.witnesses}});
  return {{"element_count", logic.size()},
          {"atom_count", logic.atoms().size()},
          {"zero", logic.zero()},
          {"one", logic.one()},
          {"elements", std::move(elements)},
          {"hasse_edges", std::move(edges)},
          {"orthocomplement_pairs", std::move(ortho)},
          {"orthomodular", std::move(omp)}};
}

inline json to_json(const LogicDegeneracy& d) {
  json events = json::array();
  for (const auto& e : d.witnesses) events.push_back(to_json(e.outcomes));
  return {{"degenerate", true}, {"kind", std::string(to_string(d.kind))}, {"detail", d.detail}, {"events", events}};
}

// Spin one.

inline json to_json(spin::cplx z) { return json::array({z.real(), z.imag()}); }

inline spin::cplx complex_from_json(const json& j) {
  return guarded("complex number", [&] {
    if (!j.is_array() || j.size() != 2) throw ParseError("complex number must be [re, im]");
    return spin::cplx(j.at(0).get<double>(), j.at(1).get<double>());
  });
}

inline json to_json(const spin::CVec3& v) { return json::array({to_json(v[0]), to_json(v[1]), to_json(v[2])}); }

inline spin::CVec3 vector_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("complex vector must have 3 components");
  return {{complex_from_json(j[0]), complex_from_json(j[1]), complex_from_json(j[2])}};
}

using Basis = std::array<spin::CVec3, 3>;

inline json to_json(const Basis& b) { return json::array({to_json(b[0]), to_json(b[1]), to_json(b[2])}); }

inline Basis basis_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("frame must list 3 complex vectors");
  return {vector_from_json(j[0]), vector_from_json(j[1]), vector_from_json(j[2])};
}

inline std::vector<Basis> bases_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("expected a list of frames");
  std::vector<Basis> out;
  for (const auto& f : j) out.push_back(basis_from_json(f));
  return out;
}

inline json to_json(const spin::Mat3& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < 3; ++r) rows.push_back(json::array({to_json(m(r, 0)), to_json(m(r, 1)), to_json(m(r, 2))}));
  return rows;
}

inline spin::Mat3 matrix_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("matrix must have 3 rows");
  spin::Mat3 m;
  for (std::size_t r = 0; r < 3; ++r) {
    if (!j[r].is_array() || j[r].size() != 3) throw ParseError("matrix row must have 3 entries");
    for (std::size_t c = 0; c < 3; ++c) m(r, c) = complex_from_json(j[r][c]);
  }
  return m;
}

// FTT parameters and predictions.

inline ftt::Params params_from_json(const json& j) {
  return guarded("params", [&] {
    return ftt::Params{j.at("iota_t").get<double>(), j.at("sigma_t").get<double>(), j.at("nu_r").get<double>(),
                       j.at("sigma_r").get<double>()};
  });
}

inline ftt::Bias bias_from_json(const json& j) {
  if (!j.contains("bias")) return {};
  return guarded("bias", [&] {
    const json& b = j.at("bias");
    return ftt::Bias{b.at("b_T").get<double>(), b.at("b_R").get<double>(), b.at("b_U").get<double>()};
  });
}

inline json to_json(const ftt::Params& p) {
  return {{"iota_t", p.iota_t}, {"sigma_t", p.sigma_t}, {"nu_r", p.nu_r}, {"sigma_r", p.sigma_r}};
}

inline json to_json(const ftt::Bias& b) { return {{"b_T", b.b_T}, {"b_R", b.b_R}, {"b_U", b.b_U}}; }

/// {"T|T": p, "R|T": p, ...}, keyed response|probe.
inline json to_json(const ftt::DichotomyPredictions& pred) {
  json out = json::object();
  for (auto d : ftt::kKinds)
    for (auto z : ftt::kKinds) out[std::string{ftt::letter(d), '|', ftt::letter(z)}] = pred(d, z);
  return out;
}

inline ftt::DichotomyPredictions predictions_from_json(const json& j) {
  ftt::DichotomyPredictions out;
  for (auto d : ftt::kKinds)
    for (auto z : ftt::kKinds)
      out.at(d, z) = guarded("predictions", [&] { return j.at(std::string{ftt::letter(d), '|', ftt::letter(z)}).get<double>(); });
  return out;
}

// Counts CSV.

inline constexpr const char* kCountsHeader = "discrimination,probe_type,yes,total";

inline std::string counts_to_csv(const est::CountTable& t) {
  std::ostringstream out;
  out << kCountsHeader << "\n";
  for (auto d : ftt::kKinds)
    for (auto z : ftt::kKinds) out << ftt::letter(d) << "," << ftt::letter(z) << "," << t(d, z).yes << "," << t(d, z).total << "\n";
  return out.str();
}

inline ftt::Kind kind_from_letter(const std::string& s) {
  if (s == "T") return ftt::Kind::T;
  if (s == "R") return ftt::Kind::R;
  if (s == "U") return ftt::Kind::U;
  throw ParseError("expected T, R or U, got '" + s + "'");
}

inline std::uint64_t parse_count(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ParseError("expected a nonnegative integer, got '" + s + "'");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ParseError("count out of range: '" + s + "'");
  }
}

/// Exactly nine data rows, one per (discrimination, probe type) pair.
inline est::CountTable counts_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  if (!std::getline(in, line) || trim(line) != kCountsHeader)
    throw ParseError(std::string("counts CSV must start with header '") + kCountsHeader + "'");
  est::CountTable t;
  std::array<std::array<bool, 3>, 3> seen{};
  int rows = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (fields.size() != 4) throw ParseError("counts row must have 4 fields: '" + line + "'");
    const auto d = kind_from_letter(fields[0]);
    const auto z = kind_from_letter(fields[1]);
    auto& flag = seen[static_cast<std::size_t>(d)][static_cast<std::size_t>(z)];
    if (flag) throw ParseError("duplicate counts row for " + fields[0] + "|" + fields[1]);
    flag = true;
    t.at(d, z) = {parse_count(fields[2]), parse_count(fields[3])};
    ++rows;
  }
  if (rows != 9) throw ParseError("counts CSV needs 9 data rows, got " + std::to_string(rows));
  t.validate();
  return t;
}

inline json to_json(const est::CountTable& t) {
  json rows = json::array();
  for (auto d : ftt::kKinds)
    for (auto z : ftt::kKinds)
      rows.push_back({{"discrimination", std::string(1, ftt::letter(d))},
                      {"probe_type", std::string(1, ftt::letter(z))},
                      {"yes", t(d, z).yes},
                      {"total", t(d, z).total}});
  return rows;
}

// Fits.

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const est::FitResult& r) {
  json out = {{"model", static_cast<int>(r.model)},
              {"params", to_json(r.params)},
              {"log_likelihood", finite_or_null(r.log_likelihood)},
              {"converged", r.converged},
              {"feasible", r.feasible},
              {"iterations", r.iterations},
              {"predicted", to_json(r.predicted)},
              {"max_abs_residual", r.max_abs_residual},
              {"unidentifiable", {{"sigma_t", r.sigma_t_unidentifiable}, {"sigma_r", r.sigma_r_unidentifiable}}},
              {"options", {{"tol", r.options.tol}, {"max_iter", r.options.max_iter}}},
              {"generator", {{"engine", est::kGeneratorName}, {"binomial", est::kBinomialName}}}};
  if (r.model == est::Model::SevenParam) out["bias"] = to_json(r.bias);
  if (!r.diagnostic.empty()) out["diagnostic"] = r.diagnostic;
  return out;
}

/// Rebuilds the parts of a fit needed for goodness of fit.
inline est::FitResult fit_from_json(const json& j) {
  est::FitResult r;
  const int model = guarded("fit", [&] { return j.at("model").get<int>(); });
  if (model != 4 && model != 7) throw ParseError("model must be 4 or 7");
  r.model = static_cast<est::Model>(model);
  r.params = params_from_json(guarded("fit", [&] { return j.at("params"); }));
  r.bias = r.model == est::Model::SevenParam ? bias_from_json(j) : ftt::Bias{};
  r.predicted = ftt::predict_dichotomies(r.params, r.bias);
  r.converged = j.value("converged", false);
  return r;
}

inline json to_json(const est::GofReport& g) {
  json cells = json::array();
  for (const auto& c : g.cells)
    cells.push_back({{"discrimination", std::string(1, ftt::letter(c.discrimination))},
                     {"probe_type", std::string(1, ftt::letter(c.probe))},
                     {"observed", c.observed},
                     {"predicted", c.predicted},
                     {"abs_residual", c.abs_residual},
                     {"g2_term", finite_or_null(c.g2_term)}});
  return {{"cells", cells}, {"max_residual", g.max_residual}, {"g2", finite_or_null(g.g2)}, {"dof", g.dof}};
}

}  // namespace opstat::io
