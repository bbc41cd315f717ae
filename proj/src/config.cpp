#include "fincon/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "fincon/errors.hpp"

namespace fincon {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw ParseError("field '" + path + "': " + what);
}

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) field_error(path.empty() ? key : path + "." + key, "unknown key");
  }
}

const json& require(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) field_error(path.empty() ? key : path + "." + key, "missing");
  return obj.at(key);
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) field_error(path, "expected a number");
  return v.get<double>();
}

std::size_t as_count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    field_error(path, "expected a nonnegative integer");
  }
  return v.get<std::size_t>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) field_error(path, "expected true or false");
  return v.get<bool>();
}

ProtocolFunction as_protocol(const json& v, const std::string& path) {
  if (!v.is_string()) field_error(path, "expected a protocol spec string");
  try {
    return parse_protocol_spec(v.get<std::string>());
  } catch (const ParseError& e) {
    field_error(path, e.what());
  } catch (const InvalidProtocol& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

SimulationConfig parse_sim(const json& obj) {
  if (!obj.is_object()) field_error("sim", "expected an object");
  allow_keys(obj, "sim",
             {"dt", "t_max", "eps_consensus", "record_stride", "freeze_on_consensus", "refine_tol",
              "refine_rel_tol", "max_refinements", "max_substeps"});
  SimulationConfig sim;
  const auto num = [&](const char* key, double& out) {
    if (obj.contains(key)) out = as_number(obj.at(key), std::string("sim.") + key);
  };
  const auto count = [&](const char* key, std::size_t& out) {
    if (obj.contains(key)) out = as_count(obj.at(key), std::string("sim.") + key);
  };
  num("dt", sim.dt);
  num("t_max", sim.t_max);
  num("eps_consensus", sim.eps_consensus);
  count("record_stride", sim.record_stride);
  if (obj.contains("freeze_on_consensus")) {
    sim.freeze_on_consensus = as_bool(obj.at("freeze_on_consensus"), "sim.freeze_on_consensus");
  }
  num("refine_tol", sim.refine_tol);
  num("refine_rel_tol", sim.refine_rel_tol);
  count("max_refinements", sim.max_refinements);
  count("max_substeps", sim.max_substeps);
  return sim;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n == 0) throw ValidationError("graph.n must be at least 1");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    const std::string where = "graph.edges[" + std::to_string(k) + "]";
    if (e.from < 1 || e.from > n || e.to < 1 || e.to > n) {
      throw ValidationError(where + ": endpoint outside 1.." + std::to_string(n));
    }
    if (e.from == e.to) throw ValidationError(where + ": self-loop");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw ValidationError(where + ": weight must be positive");
    }
    if (!seen.emplace(e.from, e.to).second) throw ValidationError(where + ": duplicate edge");
  }
  if (protocols.size() != 1 && protocols.size() != n) {
    throw ValidationError("protocols: give one spec or one per agent");
  }
  if (x0.size() != n) throw ValidationError("x0: expected " + std::to_string(n) + " entries");
  for (double v : x0) {
    if (!std::isfinite(v)) throw ValidationError("x0: entries must be finite");
  }
  sim.validate();
}

WeightedDigraph ExperimentConfig::graph() const {
  std::vector<Arc> arcs;
  arcs.reserve(edges.size());
  for (const auto& e : edges) arcs.push_back({e.from - 1, e.to - 1, e.weight});
  return WeightedDigraph::from_arcs(n, arcs);
}

ProtocolBank ExperimentConfig::bank() const {
  if (protocols.size() == 1) return ProtocolBank::uniform(protocols.front(), n);
  return ProtocolBank(protocols);
}

Eigen::VectorXd ExperimentConfig::initial_state() const {
  return Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()));
}

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                     ": malformed document");
  }
  if (!doc.is_object()) field_error("(root)", "expected an object");
  allow_keys(doc, "", {"graph", "protocols", "x0", "sim", "certify"});

  ExperimentConfig cfg;
  const auto& graph = require(doc, "", "graph");
  if (!graph.is_object()) field_error("graph", "expected an object");
  allow_keys(graph, "graph", {"n", "edges"});
  cfg.n = as_count(require(graph, "graph", "n"), "graph.n");
  if (graph.contains("edges")) {
    const auto& edges = graph.at("edges");
    if (!edges.is_array()) field_error("graph.edges", "expected an array");
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const std::string path = "graph.edges[" + std::to_string(k) + "]";
      const auto& e = edges[k];
      if (!e.is_object()) field_error(path, "expected an object");
      allow_keys(e, path, {"from", "to", "weight"});
      EdgeSpec edge;
      edge.from = as_count(require(e, path, "from"), path + ".from");
      edge.to = as_count(require(e, path, "to"), path + ".to");
      if (e.contains("weight")) edge.weight = as_number(e.at("weight"), path + ".weight");
      cfg.edges.push_back(edge);
    }
  }

  const auto& protocols = require(doc, "", "protocols");
  if (protocols.is_array()) {
    for (std::size_t k = 0; k < protocols.size(); ++k) {
      cfg.protocols.push_back(as_protocol(protocols[k], "protocols[" + std::to_string(k) + "]"));
    }
  } else {
    cfg.protocols.push_back(as_protocol(protocols, "protocols"));
  }

  const auto& x0 = require(doc, "", "x0");
  if (!x0.is_array()) field_error("x0", "expected an array");
  for (std::size_t k = 0; k < x0.size(); ++k) {
    cfg.x0.push_back(as_number(x0[k], "x0[" + std::to_string(k) + "]"));
  }

  if (doc.contains("sim")) cfg.sim = parse_sim(doc.at("sim"));
  if (doc.contains("certify")) cfg.certify = as_bool(doc.at("certify"), "certify");

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json doc;
  doc["graph"]["n"] = cfg.n;
  doc["graph"]["edges"] = json::array();
  for (const auto& e : cfg.edges) {
    doc["graph"]["edges"].push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
  }
  if (cfg.protocols.size() == 1) {
    doc["protocols"] = to_spec_string(cfg.protocols.front());
  } else {
    doc["protocols"] = json::array();
    for (const auto& f : cfg.protocols) doc["protocols"].push_back(to_spec_string(f));
  }
  doc["x0"] = cfg.x0;
  const auto& s = cfg.sim;
  doc["sim"] = {{"dt", s.dt},
                {"t_max", s.t_max},
                {"eps_consensus", s.eps_consensus},
                {"record_stride", s.record_stride},
                {"freeze_on_consensus", s.freeze_on_consensus},
                {"refine_tol", s.refine_tol},
                {"refine_rel_tol", s.refine_rel_tol},
                {"max_refinements", s.max_refinements},
                {"max_substeps", s.max_substeps}};
  doc["certify"] = cfg.certify;
  return doc.dump(2) + "\n";
}

}  // namespace fincon
