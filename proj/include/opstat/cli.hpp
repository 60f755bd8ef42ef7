#pragma once

// Command-line front end. Exit codes: 0 success, 1 domain violation reported,
// 2 usage or input error. Results go to `out`; diagnostics to `err`.

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "opstat/estimation.hpp"
#include "opstat/ftt.hpp"
#include "opstat/io.hpp"
#include "opstat/logic.hpp"
#include "opstat/manual.hpp"
#include "opstat/spin_one.hpp"
#include "opstat/weights.hpp"

namespace opstat::cli {

using nlohmann::json;

enum ExitCode : int { kOk = 0, kDomain = 1, kUsage = 2 };

/// Raised by handlers that have already written a domain report to stdout.
struct DomainReport {
  json report;
};

namespace detail {

inline std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream s;
    s << std::cin.rdbuf();
    return s.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io::ParseError("cannot read file '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline json read_json(const std::string& path) { return io::parse_json(read_text(path)); }

/// Inline JSON when the argument starts with '{', a file path otherwise.
inline json inline_or_file(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && arg[first] == '{') return io::parse_json(arg);
  return read_json(arg);
}

/// Accepts a weight document or any object carrying one under "weight".
inline json unwrap_weight(const json& j) {
  if (j.is_object() && !j.contains("manual") && j.contains("weight")) return j.at("weight");
  return j;
}

inline OutcomeSet split_ids(const std::string& csv) {
  OutcomeSet out;
  std::stringstream ss(csv);
  std::string id;
  while (std::getline(ss, id, ','))
    if (!id.empty()) out.insert(OutcomeId(id));
  return out;
}

inline json error_json(Errc code, const std::string& detail) {
  return {{"error", std::string(to_string(code))}, {"detail", detail}};
}

}  // namespace detail

/// Runs one command line; argv[0] is the program name.
inline int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Operational statistics for finite manuals: memory and spin-one worked instances", "opstat"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "opstat 1.0.0");

  json result;
  int status = kOk;
  auto emit = [&](json j) { result = std::move(j); };
  auto domain = [&](json j) {
    status = kDomain;
    result = std::move(j);
  };

  // manual ---------------------------------------------------------------
  auto* manual = app.add_subcommand("manual", "Validate and transform manuals");
  manual->require_subcommand(1);
  std::string manual_file;

  auto* m_validate = manual->add_subcommand("validate", "Check a manual JSON file");
  m_validate->add_option("file", manual_file, "Manual JSON")->required();
  m_validate->callback([&] {
    try {
      Manual m = io::manual_from_json(detail::read_json(manual_file));
      json j = {{"valid", true}, {"operations", m.operation_count()}, {"outcomes", m.outcome_count()}};
      auto dof = weight_space_dof(m);
      if (auto* d = std::get_if<std::size_t>(&dof)) j["weight_space_dof"] = *d;
      else j["weight_space_dof"] = nullptr;
      emit(j);
    } catch (const io::ParseError&) {
      throw;
    } catch (const Error& e) {
      domain({{"valid", false}, {"error", std::string(to_string(e.code()))}, {"detail", e.what()}});
    }
  });

  std::size_t event_cap = kDefaultEventCap;
  auto* m_logic = manual->add_subcommand("logic", "Build the logic and check orthomodularity");
  m_logic->add_option("file", manual_file, "Manual JSON")->required();
  m_logic->add_option("--event-cap", event_cap, "Maximum number of events to enumerate");
  m_logic->callback([&] {
    Manual m = io::manual_from_json(detail::read_json(manual_file));
    auto built = build_logic(m, event_cap);
    if (auto* d = std::get_if<LogicDegeneracy>(&built)) {
      domain(io::to_json(*d));
      return;
    }
    const Logic& logic = std::get<Logic>(built);
    emit(io::to_json(logic, is_orthomodular_poset(logic)));
  });

  std::size_t op_index = 0;
  std::string pack_ids, new_id;
  auto* m_coarsen = manual->add_subcommand("coarsen", "Pack outcomes of one operation into a new outcome");
  m_coarsen->add_option("file", manual_file, "Manual JSON")->required();
  m_coarsen->add_option("--op", op_index, "Operation index")->required();
  m_coarsen->add_option("--pack", pack_ids, "Comma-separated outcomes to pack")->required();
  m_coarsen->add_option("--new-id", new_id, "Identifier of the packed outcome")->required();
  m_coarsen->callback([&] {
    Manual m = io::manual_from_json(detail::read_json(manual_file));
    emit(io::to_json(coarsen_pack(m, op_index, detail::split_ids(pack_ids), OutcomeId(new_id))));
  });

  std::string map_file;
  auto* m_identify = manual->add_subcommand("identify", "Merge outcomes under an identification map");
  m_identify->add_option("file", manual_file, "Manual JSON")->required();
  m_identify->add_option("--map", map_file, "Identification JSON {\"identify\": {...}}")->required();
  m_identify->callback([&] {
    Manual m = io::manual_from_json(detail::read_json(manual_file));
    emit(io::to_json(identify_outcomes(m, io::identification_from_json(detail::read_json(map_file)))));
  });

  // weights --------------------------------------------------------------
  auto* weights = app.add_subcommand("weights", "Weight functions on manuals");
  weights->require_subcommand(1);
  std::string weight_file;
  std::vector<std::string> generator_files;
  std::string event_ids;

  auto load_weight = [&](const std::string& path) {
    auto doc = io::weight_document_from_json(detail::unwrap_weight(detail::read_json(path)));
    return validate_weight(doc.manual, std::move(doc.values));
  };

  auto* w_check = weights->add_subcommand("check", "Validate a weight JSON file");
  w_check->add_option("file", weight_file, "Weight JSON")->required();
  w_check->callback([&] {
    auto doc = io::weight_document_from_json(detail::unwrap_weight(detail::read_json(weight_file)));
    auto problems = weight_violations(doc.manual, doc.values);
    if (problems.empty()) {
      emit({{"valid", true}});
      return;
    }
    json list = json::array();
    for (const auto& p : problems) list.push_back(io::to_json(p));
    domain({{"valid", false}, {"first", list.front()}, {"violations", list}});
  });

  auto* w_super = weights->add_subcommand("superposition", "Superposition check against generator weights");
  w_super->add_option("file", weight_file, "Weight JSON")->required();
  w_super->add_option("--generator", generator_files, "Generator weight JSON (repeatable)")->required();
  w_super->callback([&] {
    WeightFunction omega = load_weight(weight_file);
    std::vector<WeightFunction> gens;
    for (const auto& g : generator_files) gens.push_back(load_weight(g));
    emit({{"superposition", is_superposition(omega, gens)},
          {"common_zero_set", io::to_json(common_zero_set(omega.manual(), gens))}});
  });

  auto* w_event = weights->add_subcommand("event-prob", "Probability of an event");
  w_event->add_option("file", weight_file, "Weight JSON")->required();
  w_event->add_option("--event", event_ids, "Comma-separated outcomes (empty for the null event)")->required();
  w_event->callback([&] {
    WeightFunction omega = load_weight(weight_file);
    const auto ids = detail::split_ids(event_ids);
    auto ev = is_event(omega.manual(), ids);
    if (!ev) {
      domain(detail::error_json(Errc::UnknownOutcome, describe(ids) + " is not an event"));
      return;
    }
    emit({{"event", io::to_json(*ev)}, {"probability", event_probability(omega, *ev)}});
  });

  // spin -----------------------------------------------------------------
  auto* spin_cmd = app.add_subcommand("spin", "Spin-one frames and density operators");
  spin_cmd->require_subcommand(1);
  std::uint64_t seed = 0;
  std::size_t count = 1;
  std::string density_file, frames_file, weights_list_file, merge;

  auto* s_frames = spin_cmd->add_subcommand("frames", "Random orthonormal frames");
  s_frames->add_option("--seed", seed, "Generator seed")->required();
  s_frames->add_option("--count", count, "Number of frames")->required()->check(CLI::PositiveNumber);
  s_frames->callback([&] {
    std::mt19937_64 rng(seed);
    json list = json::array();
    for (std::size_t i = 0; i < count; ++i) list.push_back(io::to_json(spin::random_basis(rng)));
    emit(list);
  });

  auto* s_density = spin_cmd->add_subcommand("density", "Random full-rank density operator");
  s_density->add_option("--seed", seed, "Generator seed")->required();
  s_density->callback([&] {
    std::mt19937_64 rng(seed);
    emit(io::to_json(spin::random_density(rng).matrix()));
  });

  auto load_frames = [&] {
    std::vector<spin::Frame> frames;
    for (const auto& b : io::bases_from_json(detail::read_json(frames_file))) frames.push_back(spin::frame_from_basis(b));
    return frames;
  };

  auto* s_weights = spin_cmd->add_subcommand("weights", "Trace-rule weights of a density operator on frames");
  s_weights->add_option("--density", density_file, "Density JSON")->required();
  s_weights->add_option("--frames", frames_file, "Frames JSON")->required();
  s_weights->add_option("--merge", merge, "Coarsen every frame by merging projections i,j first");
  s_weights->callback([&] {
    spin::DensityOperator rho(io::matrix_from_json(detail::read_json(density_file)));
    json list = json::array();
    for (auto f : load_frames()) {
      if (!merge.empty()) {
        const auto comma = merge.find(',');
        if (comma == std::string::npos) throw io::ParseError("--merge expects i,j");
        try {
          f = spin::coarsen_frame(f, std::stoul(merge.substr(0, comma)), std::stoul(merge.substr(comma + 1)));
        } catch (const std::logic_error&) {
          throw io::ParseError("--merge expects i,j");
        }
      }
      list.push_back(spin::frame_weights(rho, f));
    }
    emit({{"weights", list}});
  });

  auto* s_fit = spin_cmd->add_subcommand("fit-density", "Least-squares density recovery from frame weights");
  s_fit->add_option("--frames", frames_file, "Frames JSON")->required();
  s_fit->add_option("--weights", weights_list_file, "Weights JSON (output of 'spin weights')")->required();
  s_fit->callback([&] {
    const json wj = detail::read_json(weights_list_file);
    auto observed = io::guarded("weights", [&] {
      return (wj.is_object() ? wj.at("weights") : wj).get<std::vector<std::vector<double>>>();
    });
    try {
      auto fit = spin::fit_density(load_frames(), observed);
      json j = {{"rho", io::to_json(fit.rho)},
                {"residual", fit.residual},
                {"min_eigenvalue", fit.min_eigenvalue},
                {"not_positive", fit.not_positive}};
      if (fit.not_positive) domain(j);
      else emit(j);
    } catch (const spin::UnderdeterminedError& e) {
      domain({{"error", "Underdetermined"}, {"null_space_dimension", e.null_space_dimension()}});
    }
  });

  // ftt ------------------------------------------------------------------
  auto* ftt_cmd = app.add_subcommand("ftt", "Fuzzy Trace Theory forward model");
  ftt_cmd->require_subcommand(1);
  std::string params_arg;
  std::string format = "json";

  auto load_params = [&] {
    const json j = detail::inline_or_file(params_arg);
    return std::pair{io::params_from_json(j), io::bias_from_json(j)};
  };

  auto* f_predict = ftt_cmd->add_subcommand("predict", "Dichotomy response probabilities");
  f_predict->add_option("--params", params_arg, "Params JSON (inline or file)")->required();
  f_predict->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  f_predict->callback([&] {
    auto [params, bias] = load_params();
    const auto pred = ftt::predict_dichotomies(params, bias);
    if (format == "csv") {
      std::ostringstream csv;
      csv << "discrimination,probe_type,probability\n";
      for (auto d : ftt::kKinds)
        for (auto z : ftt::kKinds) csv << ftt::letter(d) << "," << ftt::letter(z) << "," << pred(d, z) << "\n";
      result = csv.str();
      return;
    }
    emit({{"params", io::to_json(params)},
          {"bias", io::to_json(bias)},
          {"predictions", io::to_json(pred)},
          {"weight", io::to_json(ftt::dichotomy_weight(pred))}});
  });

  auto* f_sums = ftt_cmd->add_subcommand("sums", "TRU sums of identified dichotomy outcomes");
  f_sums->add_option("--params", params_arg, "Params JSON (inline or file)")->required();
  f_sums->callback([&] {
    const auto s = ftt::tru_sums(load_params().first);
    emit({{"sum_T", s.sum_T}, {"sum_R", s.sum_R}, {"sum_U", s.sum_U}});
  });

  auto* f_interference = ftt_cmd->add_subcommand("interference", "Interference excess of packed outcomes");
  f_interference->add_option("--params", params_arg, "Params JSON (inline or file)")->required();
  f_interference->callback([&] {
    const auto x = ftt::interference_excess(load_params().first);
    emit({{"excess_T", x.excess_T}, {"excess_R", x.excess_R}});
  });

  double split = -1.0;
  auto* f_tru = ftt_cmd->add_subcommand("tru", "Three-way classification probabilities");
  f_tru->add_option("--params", params_arg, "Params JSON (inline or file)")->required();
  f_tru->add_option("--split", split, "Send this fraction of gist-only responses to T instead of R");
  f_tru->callback([&] {
    const auto params = load_params().first;
    const auto tru = split < 0 ? ftt::predict_tru(params) : ftt::predict_tru(params, ftt::similarity_split(split));
    json j = json::object();
    for (auto z : ftt::kKinds) j[std::string(1, ftt::letter(z))] = tru[z];
    emit(j);
  });

  std::string state;
  auto* f_canonical = ftt_cmd->add_subcommand("canonical", "Perfect, no-memory and gist-only weights");
  f_canonical->add_option("--state", state, "Emit only this weight document: p, 0 or g")
      ->check(CLI::IsMember({"p", "0", "g"}));
  f_canonical->callback([&] {
    const auto states = ftt::canonical_states();
    if (!state.empty()) {
      emit(io::to_json(state == "p" ? states.perfect : state == "0" ? states.none : states.gist_only));
      return;
    }
    emit({{"omega_p", io::to_json(states.perfect)},
          {"omega_0", io::to_json(states.none)},
          {"omega_g", io::to_json(states.gist_only)}});
  });

  // est ------------------------------------------------------------------
  auto* est_cmd = app.add_subcommand("est", "Simulation and maximum-likelihood estimation");
  est_cmd->require_subcommand(1);
  std::uint64_t n_per_cell = 0;
  std::string counts_file, fit_file;
  int model = 4;
  est::FitOptions fit_options;

  auto* e_sim = est_cmd->add_subcommand("simulate", "Binomial counts from model parameters");
  e_sim->add_option("--params", params_arg, "Params JSON (inline or file)")->required();
  e_sim->add_option("--n", n_per_cell, "Trials per cell")->required();
  e_sim->add_option("--seed", seed, "Generator seed")->required();
  e_sim->add_option("--format", format, "csv or json")->check(CLI::IsMember({"json", "csv"}));
  e_sim->callback([&] {
    auto [params, bias] = load_params();
    const auto table = est::simulate_counts(params, bias, n_per_cell, seed);
    if (e_sim->count("--format") == 0 || format == "csv") {
      result = io::counts_to_csv(table);
      return;
    }
    emit({{"counts", io::to_json(table)},
          {"seed", seed},
          {"generator", {{"engine", est::kGeneratorName}, {"binomial", est::kBinomialName}}}});
  });

  auto load_counts = [&] { return io::counts_from_csv(detail::read_text(counts_file)); };
  auto model_of = [&] { return model == 7 ? est::Model::SevenParam : est::Model::FourParam; };

  auto* e_fit = est_cmd->add_subcommand("fit", "Maximum-likelihood fit of counts");
  e_fit->add_option("counts", counts_file, "Counts CSV")->required();
  e_fit->add_option("--model", model, "4 or 7 parameters")->check(CLI::IsMember({4, 7}));
  e_fit->add_option("--tol", fit_options.tol, "Log-likelihood gain tolerance");
  e_fit->add_option("--max-iter", fit_options.max_iter, "Iteration limit");
  e_fit->callback([&] {
    const auto fit = est::fit_mle(load_counts(), model_of(), fit_options);
    if (fit.feasible) emit(io::to_json(fit));
    else domain(io::to_json(fit));
  });

  auto* e_moment = est_cmd->add_subcommand("moment", "Closed-form moment estimate from counts");
  e_moment->add_option("counts", counts_file, "Counts CSV")->required();
  e_moment->callback([&] {
    const auto m = est::moment_estimate(load_counts().frequencies());
    emit({{"params", io::to_json(m.params)},
          {"unidentifiable", {{"sigma_t", m.sigma_t_unidentifiable}, {"sigma_r", m.sigma_r_unidentifiable}}},
          {"out_of_box", m.out_of_box}});
  });

  auto* e_gof = est_cmd->add_subcommand("gof", "Goodness of fit of a fit result to counts");
  e_gof->add_option("counts", counts_file, "Counts CSV")->required();
  e_gof->add_option("--fit", fit_file, "FitResult JSON (output of 'est fit'); fits afresh when omitted");
  e_gof->add_option("--model", model, "4 or 7 parameters, used when fitting afresh")->check(CLI::IsMember({4, 7}));
  e_gof->callback([&] {
    const auto counts = load_counts();
    const auto fit = fit_file.empty() ? est::fit_mle(counts, model_of()) : io::fit_from_json(detail::read_json(fit_file));
    emit(io::to_json(est::goodness_of_fit(fit, counts)));
  });

  // demo -----------------------------------------------------------------
  auto* demo = app.add_subcommand("demo", "End-to-end demonstrations");
  demo->require_subcommand(1);

  auto* d_interf = demo->add_subcommand("interference", "Packed vs unpacked outcomes on the combined memory manual");
  d_interf->add_option("--params", params_arg, "Params JSON (inline or file)")->required();
  d_interf->callback([&] {
    const auto params = load_params().first;
    const Manual combined = ftt::combined_manual();
    const auto values = ftt::dichotomy_values(ftt::predict_dichotomies(params));
    const auto problems = weight_violations(combined, values);
    const auto sums = ftt::tru_sums(params);
    const auto excess = ftt::interference_excess(params);
    json violations = json::array();
    for (const auto& p : problems) {
      json v = io::to_json(p);
      if (p.op_index) v["excess"] = p.value - 1.0;
      violations.push_back(v);
    }
    emit({{"params", io::to_json(params)},
          {"manual", io::to_json(combined)},
          {"consistent", problems.empty()},
          {"violations", violations},
          {"sums", {{"sum_T", sums.sum_T}, {"sum_R", sums.sum_R}, {"sum_U", sums.sum_U}}},
          {"excess", {{"excess_T", excess.excess_T}, {"excess_R", excess.excess_R}}}});
  });

  std::size_t trials = 1000;
  auto* d_spin = demo->add_subcommand("spin-additivity", "Coarsened spin-one frames preserve event probabilities");
  d_spin->add_option("--seed", seed, "Generator seed")->required();
  d_spin->add_option("--trials", trials, "Number of random (state, frame) pairs")->check(CLI::PositiveNumber);
  d_spin->callback([&] {
    std::mt19937_64 rng(seed);
    double merge_err = 0.0, untouched_err = 0.0;
    json example;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto rho = spin::random_density(rng);
      const auto frame = spin::random_frame(rng);
      const auto fine = spin::frame_weights(rho, frame);
      const auto coarse = spin::frame_weights(rho, spin::coarsen_frame(frame, 1, 2));
      merge_err = std::max(merge_err, std::abs(coarse[1] - (fine[1] + fine[2])));
      untouched_err = std::max(untouched_err, std::abs(coarse[0] - fine[0]));
      if (t == 0) example = {{"fine", fine}, {"coarse", coarse}};
    }
    emit({{"trials", trials},
          {"max_merge_error", merge_err},
          {"max_untouched_error", untouched_err},
          {"additive", merge_err <= 1e-10 && untouched_err <= 1e-12},
          {"example", example}});
  });

  // Build a C-style argv for CLI11.
  std::vector<const char*> raw;
  raw.reserve(argv.size());
  for (const auto& a : argv) raw.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "UsageError"}, {"detail", e.what()}}.dump() << "\n";
    return kUsage;
  } catch (const io::ParseError& e) {
    err << detail::error_json(e.code(), e.what()).dump() << "\n";
    return kUsage;
  } catch (const Error& e) {
    const json report = detail::error_json(e.code(), e.what());
    out << report.dump(2) << "\n";
    err << report.dump() << "\n";
    return kDomain;
  } catch (const std::exception& e) {
    err << json{{"error", "InternalError"}, {"detail", e.what()}}.dump() << "\n";
    return kUsage;
  }

  if (result.is_string()) out << result.get<std::string>();
  else out << result.dump(2) << "\n";
  if (status == kDomain) err << json{{"error", "DomainViolation"}}.dump() << "\n";
  return status;
}

}  // namespace opstat::cli
