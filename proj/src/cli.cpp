#include "fincon/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <system_error>

#include <CLI11.hpp>
#include <json.hpp>

#include "fincon/errors.hpp"

namespace fincon {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json one_based(const std::vector<std::size_t>& idx) {
  json out = json::array();
  for (auto i : idx) out.push_back(i + 1);
  return out;
}

const char* stage_kind_name(StageKind kind) {
  switch (kind) {
    case StageKind::StronglyConnected: return "strongly-connected";
    case StageKind::Rooted: return "rooted";
    case StageKind::SingletonRoot: return "singleton-root";
  }
  return "";
}

const char* beta_source_name(BetaSource s) {
  return s == BetaSource::ClosedForm ? "closed-form" : "empirical";
}

const char* c1_provenance_name(C1Provenance p) {
  return p == C1Provenance::APrioriSampled ? "a-priori-sampled" : "a-posteriori-trajectory";
}

json protocols_json(const ExperimentConfig& cfg) {
  json out = json::array();
  for (const auto& f : cfg.protocols) out.push_back(to_spec_string(f));
  return out;
}

ExperimentConfig load_with_override(const fs::path& config, const std::optional<std::string>& protocol) {
  auto cfg = load_config(config);
  if (protocol) {
    try {
      cfg.protocols = {parse_protocol_spec(*protocol)};
    } catch (const InvalidProtocol& e) {
      throw ValidationError(std::string("--protocol: ") + e.what());
    }
  }
  return cfg;
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

void print_a1(std::ostream& out, const A1Report& a1) {
  const auto yes = [](bool b) { return b ? "pass" : "FAIL"; };
  out << "A1 zero only at zero: " << yes(a1.zero_only_at_zero) << "\n"
      << "A1 sign preserving: " << yes(a1.sign_preserving) << "\n"
      << "A1 continuous: " << yes(a1.continuous) << "\n"
      << "A1 monotone: " << (a1.monotone ? "pass" : "no") << "\n";
  if (!a1.monotone) {
    out << "warning: f is not monotone (first decrease near z = "
        << fmt17(a1.monotonicity_violation.value_or(0.0))
        << "); only continuity, zero at zero and sign preservation are required\n";
  }
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj) {
  const auto n = traj.states.empty() ? 0 : traj.states.front().size();
  std::string csv = "t";
  for (Eigen::Index i = 0; i < n; ++i) csv += ",x_" + std::to_string(i + 1);
  csv += ",disagreement";
  if (traj.lyapunov) csv += ",V";
  csv += "\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    csv += fmt17(traj.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) csv += "," + fmt17(traj.states[k](i));
    csv += "," + fmt17(traj.disagreement[k]);
    if (traj.lyapunov) csv += "," + fmt17((*traj.lyapunov)[k]);
    csv += "\n";
  }
  return csv;
}

std::string summary_json(const ExperimentConfig& cfg, const Trajectory& traj) {
  json doc;
  doc["n"] = cfg.n;
  doc["protocols"] = protocols_json(cfg);
  doc["eps_consensus"] = cfg.sim.eps_consensus;
  doc["settled_at"] = optional_number(traj.settled_at);
  doc["frozen_at"] = optional_number(traj.frozen_at);
  doc["final_time"] = traj.times.back();
  doc["final_state"] = vector_json(traj.final_state());
  doc["final_disagreement"] = traj.disagreement.back();
  doc["samples"] = traj.size();
  doc["base_steps"] = traj.base_steps;
  doc["refined_substeps"] = traj.refined_substeps;
  doc["implicit_substeps"] = traj.implicit_substeps;
  return doc.dump(2) + "\n";
}

std::string certificate_json(const ExperimentConfig& cfg, const CertificationReport& report) {
  json doc;
  doc["n"] = cfg.n;
  doc["protocols"] = protocols_json(cfg);
  doc["spanning_tree"] = report.spanning_tree;
  doc["bound_M"] = report.bound_M;

  json comps = json::array();
  for (const auto& c : report.condensation.components) comps.push_back(one_based(c));
  json dag = json::array();
  for (const auto& [from, to] : report.condensation.dag_edges) dag.push_back({from, to});
  doc["condensation"] = {{"components", comps}, {"dag_edges", dag}};

  if (report.constants) {
    const auto& c = *report.constants;
    doc["constants"] = {{"alpha", c.alpha},
                        {"beta", c.beta},
                        {"beta_closed_form", optional_number(c.beta_closed_form)},
                        {"beta_empirical", c.beta_empirical},
                        {"beta_source", beta_source_name(c.source)},
                        {"a2_pass", c.a2_pass}};
  } else {
    doc["constants"] = nullptr;
  }

  json stages = json::array();
  for (std::size_t s = 0; s < report.stages.size(); ++s) {
    const auto& st = report.stages[s];
    json j;
    j["component"] = s;
    j["agents"] = one_based(st.agents);
    j["parents"] = st.parents;
    j["stage_start"] = optional_number(st.stage_start);
    j["upstream_value"] = optional_number(st.upstream_value);
    j["empirical_extinction"] = optional_number(st.empirical_extinction);
    j["bound_respected"] = st.bound_respected ? json(*st.bound_respected) : json(nullptr);
    if (st.certificate) {
      const auto& c = *st.certificate;
      j["certificate"] = {
          {"kind", stage_kind_name(c.kind)},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"beta_source", beta_source_name(c.beta_source)},
          {"c1", optional_number(c.c1)},
          {"c1_provenance", c.c1_provenance ? json(c1_provenance_name(*c.c1_provenance)) : json(nullptr)},
          {"c2", c.c2},
          {"v0", c.v0},
          {"t_star", c.t_star},
          {"lambda1", optional_number(c.lambda1)}};
    } else {
      j["certificate"] = nullptr;
    }
    if (!st.note.empty()) j["note"] = st.note;
    stages.push_back(j);
  }
  doc["stages"] = stages;
  doc["overall_bound"] = optional_number(report.overall_bound);
  doc["overall_bound_kind"] = "empirical-hybrid";
  doc["settled_at"] = optional_number(report.settled_at);
  doc["final_state"] = vector_json(report.final_state);
  doc["final_disagreement"] = report.final_disagreement;
  doc["notes"] = report.notes;
  return doc.dump(2) + "\n";
}

ExperimentConfig fig1_config(const ProtocolFunction& f) {
  ExperimentConfig cfg;
  cfg.n = 4;
  cfg.edges = {{1, 2, 1.0}, {2, 3, 1.0}, {3, 1, 1.0}, {1, 4, 1.0}};
  cfg.protocols = {f};
  cfg.x0 = {2.0, -1.0, 3.0, -2.0};
  return cfg;
}

void write_files_atomically(const fs::path& dir,
                            const std::vector<std::pair<std::string, std::string>>& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());

  std::vector<fs::path> temps;
  const auto cleanup = [&] {
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& [name, content] : files) {
    const auto tmp = dir / ("." + name + ".tmp");
    temps.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) {
      cleanup();
      throw IoError("cannot write " + (dir / name).string());
    }
  }
  for (std::size_t k = 0; k < files.size(); ++k) {
    fs::rename(temps[k], dir / files[k].first, ec);
    if (ec) {
      cleanup();
      throw IoError("cannot write " + (dir / files[k].first).string());
    }
  }
}

int cmd_simulate(const fs::path& config, const fs::path& out_dir,
                 const std::optional<std::string>& protocol, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_with_override(config, protocol);
    const auto traj = integrate(cfg.sim, cfg.graph(), cfg.bank(), cfg.initial_state());
    write_files_atomically(out_dir, {{"trajectory.csv", trajectory_csv(traj)},
                                     {"summary.json", summary_json(cfg, traj)}});
    out << "settled_at: " << (traj.settled_at ? fmt17(*traj.settled_at) : "none") << "\n"
        << "final disagreement: " << fmt17(traj.disagreement.back()) << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_certify(const fs::path& config, const fs::path& out_dir,
                const std::optional<std::string>& protocol, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_with_override(config, protocol);
    const auto report = certify(cfg.graph(), cfg.bank(), cfg.initial_state(), cfg.sim);
    write_files_atomically(out_dir, {{"certificate.json", certificate_json(cfg, report)}});
    out << "spanning tree: " << (report.spanning_tree ? "yes" : "no") << "\n"
        << "stages: " << report.stages.size() << "\n"
        << "overall bound: " << (report.overall_bound ? fmt17(*report.overall_bound) : "none")
        << "\n";
    for (const auto& note : report.notes) out << "note: " << note << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_check_protocol(const std::string& spec, double bound, std::optional<double> alpha,
                       std::optional<double> beta, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!(bound > 0.0)) throw ValidationError("--bound must be positive");
    const auto f = parse_protocol_spec(spec);
    const auto bank = ProtocolBank::uniform(f, 1);
    const auto a1 = check_a1(f, bound);
    const auto choice = select_constants(bank, bound);
    const double a = alpha.value_or(choice.alpha);
    const double b = beta.value_or(choice.beta);
    const auto report = check_a2(bank, bound, a, b);

    out << "protocol: " << to_spec_string(f) << "\n"
        << "bound M: " << fmt17(bound) << "\n";
    print_a1(out, a1);
    out << "alpha: " << fmt17(a) << (alpha ? " (override)" : "") << "\n";
    if (choice.beta_closed_form) out << "beta closed form: " << fmt17(*choice.beta_closed_form) << "\n";
    out << "beta empirical: " << fmt17(report.empirical_ratio_min) << " at z = "
        << fmt17(report.argmin) << "\n"
        << "beta used: " << fmt17(b)
        << (beta ? " (override)" : std::string(" (") + beta_source_name(choice.source) + ")") << "\n"
        << "grid size: " << report.grid_size << "\n";
    if (report.vanishes_at_zero) out << "ratio tends to 0 as z -> 0: no beta > 0 exists\n";
    const bool pass = a1.pass() && report.a2_pass;
    out << "A2: " << (report.a2_pass ? "pass" : "FAIL") << "\n";
    return static_cast<int>(pass ? kExitOk : kExitFailure);
  });
}

int cmd_demo_paper(const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto run = [](const ProtocolFunction& f) {
      const auto cfg = fig1_config(f);
      return std::pair(cfg, integrate(cfg.sim, cfg.graph(), cfg.bank(), cfg.initial_state()));
    };
    const auto [cfg2, traj2] = run(ProtocolFunction::power_linear(1.0, 1.0, 0.75));
    const auto [cfg3, traj3] = run(ProtocolFunction::log_power(1.0, 0.5));
    json summary;
    summary["fig2"] = json::parse(summary_json(cfg2, traj2));
    summary["fig3"] = json::parse(summary_json(cfg3, traj3));
    write_files_atomically(out_dir, {{"fig2.csv", trajectory_csv(traj2)},
                                     {"fig3.csv", trajectory_csv(traj3)},
                                     {"summary.json", summary.dump(2) + "\n"}});
    for (const auto& [name, traj] : {std::pair("fig2", &traj2), std::pair("fig3", &traj3)}) {
      out << name << " settled_at: " << (traj->settled_at ? fmt17(*traj->settled_at) : "none")
          << "\n";
    }
    return static_cast<int>(kExitOk);
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Finite-time consensus simulation and certification"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::optional<std::string> protocol;

  auto* simulate = app.add_subcommand("simulate", "Integrate a config and write trajectory.csv, summary.json");
  simulate->add_option("config", config, "Config file")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--protocol", protocol, "Protocol spec applied to every agent");

  auto* cert = app.add_subcommand("certify", "Simulate and write certificate.json");
  cert->add_option("config", config, "Config file")->required();
  cert->add_option("--out", out_dir, "Output directory")->required();
  cert->add_option("--protocol", protocol, "Protocol spec applied to every agent");

  std::string spec;
  double bound = 0.0;
  std::optional<double> alpha;
  std::optional<double> beta;
  auto* check = app.add_subcommand("check-protocol", "Check (A1) and (A2) for one protocol");
  check->add_option("--spec", spec, "Protocol spec, e.g. powerlinear{a=1, b=1, c=0.75}")->required();
  check->add_option("--bound", bound, "Argument bound M")->required();
  check->add_option("--alpha", alpha, "Override alpha");
  check->add_option("--beta", beta, "Override beta");

  auto* demo = app.add_subcommand("demo-paper", "Run the two four-agent examples");
  demo->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitFailure;
  }

  if (*simulate) return cmd_simulate(config, out_dir, protocol, std::cout, std::cerr);
  if (*cert) return cmd_certify(config, out_dir, protocol, std::cout, std::cerr);
  if (*check) return cmd_check_protocol(spec, bound, alpha, beta, std::cout, std::cerr);
  return cmd_demo_paper(out_dir, std::cout, std::cerr);
}

}  // namespace fincon
