#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fincon/analysis.hpp"
#include "fincon/config.hpp"
#include "fincon/dynamics.hpp"

namespace fincon {

/// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitInternal = 2 };

/// Header `t,x_1,...,x_n,disagreement[,V]`, values with 17 significant digits.
std::string trajectory_csv(const Trajectory& traj);
std::string summary_json(const ExperimentConfig& cfg, const Trajectory& traj);
std::string certificate_json(const ExperimentConfig& cfg, const CertificationReport& report);

/// The four-agent example: arcs 1->2, 2->3, 3->1, 1->4 with unit weights and
/// x0 = (2, -1, 3, -2).
ExperimentConfig fig1_config(const ProtocolFunction& f);

/// Writes every file or none: contents go to temporaries first and are
/// renamed into place only after all writes succeed. Creates `dir` if
/// needed. Throws IoError.
void write_files_atomically(const std::filesystem::path& dir,
                            const std::vector<std::pair<std::string, std::string>>& files);

int cmd_simulate(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                 const std::optional<std::string>& protocol, std::ostream& out, std::ostream& err);
int cmd_certify(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                const std::optional<std::string>& protocol, std::ostream& out, std::ostream& err);
/// Exit 0 iff (A2) holds with the selected or overridden constants.
int cmd_check_protocol(const std::string& spec, double bound, std::optional<double> alpha,
                       std::optional<double> beta, std::ostream& out, std::ostream& err);
int cmd_demo_paper(const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace fincon
