#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fincon/dynamics.hpp"
#include "fincon/graph.hpp"
#include "fincon/protocols.hpp"

namespace fincon {

/// Config edge, information-flow style and one-based: agent `to` receives
/// the state of agent `from`, so it sets a_{to,from} = weight.
struct EdgeSpec {
  std::size_t from = 1;
  std::size_t to = 1;
  double weight = 1.0;

  bool operator==(const EdgeSpec&) const = default;
};

struct ExperimentConfig {
  std::size_t n = 1;
  std::vector<EdgeSpec> edges;
  /// either one function shared by all agents or one per agent
  std::vector<ProtocolFunction> protocols;
  std::vector<double> x0;
  SimulationConfig sim;
  bool certify = false;

  /// Throws ValidationError.
  void validate() const;
  WeightedDigraph graph() const;
  ProtocolBank bank() const;
  Eigen::VectorXd initial_state() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Reads the JSON config document. Throws ParseError (with line and column
/// for syntax errors, the field path otherwise) and ValidationError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Writes a document that parse_config reads back to an equal config.
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace fincon
