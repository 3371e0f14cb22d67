#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "epac/ct_engine.hpp"
#include "epac/dt_engine.hpp"
#include "epac/graph.hpp"
#include "json.hpp"

namespace epac {

inline nlohmann::json graph_to_json(const Digraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [i, j] : g.edges()) edges.push_back({i, j});
  return {{"n", g.size()}, {"edges", std::move(edges)}};
}

/// Parses {"n": int, "edges": [[i,j],...]} with 1-based agent ids.
inline Digraph graph_from_json(const nlohmann::json& j) {
  const int n = j.at("n").get<int>();
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return Digraph::build(n, std::move(edges));
}

/// Parses the plain edge-list format: one "i j" pair per line; blank lines
/// and lines starting with '#' are skipped. The agent count is the largest
/// id mentioned.
inline Digraph graph_from_edge_list(const std::string& text) {
  std::vector<Edge> edges;
  int n = 0;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    int i = 0, j = 0;
    if (!(ls >> i >> j)) throw std::invalid_argument("edge list: cannot parse line '" + line + "'");
    edges.emplace_back(i, j);
    n = std::max({n, i, j});
  }
  return Digraph::build(n, std::move(edges));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << contents;
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

/// Loads a graph from a .json topology file or a plain edge-list file.
inline Digraph load_graph_file(const std::string& path) {
  const std::string text = read_file(path);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    return graph_from_json(nlohmann::json::parse(text));
  return graph_from_edge_list(text);
}

namespace detail {

/// Shortest text that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// CSV with header "k,x_1,...,x_n", one row per recorded step.
inline std::string trajectory_csv(const DtTrajectory& traj) {
  const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
  std::ostringstream os;
  os << "k";
  for (std::size_t i = 1; i <= n; ++i) os << ",x_" << i;
  os << "\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    os << k;
    for (double v : traj.states[k]) os << "," << detail::format_double(v);
    os << "\n";
  }
  return os.str();
}

/// CSV with header "t,x_1,...,x_n", one row per sample.
inline std::string trajectory_csv(const CtTrajectory& traj) {
  const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
  std::ostringstream os;
  os << "t";
  for (std::size_t i = 1; i <= n; ++i) os << ",x_" << i;
  os << "\n";
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    os << detail::format_double(traj.times[s]);
    for (double v : traj.states[s]) os << "," << detail::format_double(v);
    os << "\n";
  }
  return os.str();
}

/// JSON lines, one message per line: {"k":..., "from":..., "to":..., "value":...}.
inline std::string transcript_jsonl(const DtTranscript& transcript) {
  std::ostringstream os;
  for (const auto& m : transcript.messages) {
    nlohmann::json j{{"k", m.step}, {"from", m.from}, {"to", m.to}, {"value", m.value}};
    os << j.dump() << "\n";
  }
  return os.str();
}

inline std::string transcript_jsonl(const CtTranscript& transcript) {
  std::ostringstream os;
  for (const auto& m : transcript.messages) {
    nlohmann::json j{{"t", m.t}, {"from", m.from}, {"to", m.to}, {"value", m.value}};
    os << j.dump() << "\n";
  }
  return os.str();
}

}  // namespace epac
