#include "toric/io.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "toric/error.hpp"

namespace toric {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json num_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::thermalization: return "thermalization";
    case RunMode::sample: return "sample";
    case RunMode::hysteresis: return "hysteresis";
  }
  return "unknown";
}

json metadata_block(const RunConfig& cfg, RunMode mode, double wall_time_s, std::uint64_t seed) {
  json m;
  m["code_version"] = kCodeVersion;
  m["mode"] = mode_name(mode);
  m["wall_time_s"] = wall_time_s;
  m["seed_used"] = seed;
  m["sim"] = {{"N_samples", cfg.sim.N_samples},
              {"N_thermalization", cfg.sim.N_thermalization},
              {"N_between_samples", cfg.sim.N_between_samples},
              {"N_resamples", cfg.sim.N_resamples},
              {"custom_therm", cfg.sim.custom_therm},
              {"seed", cfg.sim.seed},
              {"observables", cfg.sim.observables}};
  m["params"] = {{"mu", num(cfg.params.mu)},
                 {"h", num(cfg.params.h)},
                 {"J", num(cfg.params.J)},
                 {"lmbda", num(cfg.params.lmbda)},
                 {"h_therm", num(cfg.params.h_therm)},
                 {"lmbda_therm", num(cfg.params.lmbda_therm)},
                 {"h_hys", num_array(cfg.params.h_hys)},
                 {"lmbda_hys", num_array(cfg.params.lmbda_hys)}};
  m["lat"] = {{"basis", std::string(1, to_char(cfg.lat.basis))},
              {"lattice_type", to_string(cfg.lat.lattice_type)},
              {"system_size", cfg.lat.system_size},
              {"beta", num(cfg.lat.beta)},
              {"boundaries", to_string(cfg.lat.boundaries)},
              {"default_spin", cfg.lat.default_spin}};
  m["out"] = {{"path_out", cfg.out.path_out},
              {"paths_out", cfg.out.paths_out},
              {"save_snapshots", cfg.out.save_snapshots},
              {"full_time_series", cfg.out.full_time_series}};
  return m;
}

json results_document(const RunConfig& cfg, RunMode mode, const RunResult& result) {
  json results = json::object();
  if (mode == RunMode::thermalization) results["acc_ratio"] = num_array(result.acc_ratio);
  for (const auto& o : result.observables) {
    json e;
    if (cfg.out.full_time_series) e["series"] = num_array(o.series);
    e["mean"] = num(o.mean);
    e["mean_error"] = num(o.mean_error);
    e["binder"] = num(o.binder);
    e["binder_error"] = num(o.binder_error);
    e["autocorrelation_time"] = num(o.autocorrelation_time);
    results[o.name] = e;
  }
  json doc;
  doc["simulation"]["results"] = results;
  doc["simulation"]["metadata"] = metadata_block(cfg, mode, result.wall_time_s, result.seed);
  return doc;
}

json hysteresis_document(const RunConfig& cfg, const std::vector<RunResult>& steps) {
  json results = json::object();
  if (!steps.empty()) {
    for (std::size_t i = 0; i < steps.front().observables.size(); ++i) {
      json e;
      json series = json::array(), mean = json::array(), mean_error = json::array(),
           binder = json::array(), binder_error = json::array(), tau = json::array();
      for (const auto& s : steps) {
        const auto& o = s.observables[i];
        series.push_back(num_array(o.series));
        mean.push_back(num(o.mean));
        mean_error.push_back(num(o.mean_error));
        binder.push_back(num(o.binder));
        binder_error.push_back(num(o.binder_error));
        tau.push_back(num(o.autocorrelation_time));
      }
      if (cfg.out.full_time_series) e["series"] = series;
      e["mean"] = mean;
      e["mean_error"] = mean_error;
      e["binder"] = binder;
      e["binder_error"] = binder_error;
      e["autocorrelation_time"] = tau;
      results[steps.front().observables[i].name] = e;
    }
  }
  double wall = 0.0;
  for (const auto& s : steps) wall += s.wall_time_s;
  json doc;
  doc["simulation"]["results"] = results;
  doc["simulation"]["metadata"] =
      metadata_block(cfg, RunMode::hysteresis, wall, steps.empty() ? 0 : steps.front().seed);
  return doc;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create directory for '" + path + "': " + ec.message());
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move results into '" + path + "'");
  }
}

void write_results(const json& document, const std::string& path) {
  write_text_atomic(path, document.dump(2) + "\n");
}

json read_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("malformed results file '" + path + "': " + e.what());
  }
}

double json_number(const json& value) {
  if (value.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return value.get<double>();
}

std::string snapshots_graphml(const std::vector<Snapshot>& snapshots, const Lattice& lat,
                              const SnapshotMetadata& meta) {
  const std::vector<std::pair<std::string, std::string>> graph_attrs = {
      {"basis", std::string(1, to_char(meta.basis))},
      {"lattice_type", to_string(lat.lattice_type)},
      {"L", std::to_string(lat.L)},
      {"boundaries", to_string(lat.boundaries)},
      {"beta", fmt_double(meta.beta)},
      {"mu", fmt_double(meta.couplings.mu)},
      {"h", fmt_double(meta.couplings.h)},
      {"J", fmt_double(meta.couplings.J)},
      {"lmbda", fmt_double(meta.couplings.lmbda)},
      {"N_samples", std::to_string(snapshots.size())},
  };
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";
  for (const auto& [k, v] : graph_attrs) {
    const bool numeric = k != "basis" && k != "lattice_type" && k != "boundaries";
    const char* type = k == "L" || k == "N_samples" ? "int" : numeric ? "double" : "string";
    os << "  <key id=\"g_" << k << "\" for=\"graph\" attr.name=\"" << k << "\" attr.type=\""
       << type << "\"/>\n";
  }
  for (const char* c : {"x", "y", "z"})
    os << "  <key id=\"" << c << "\" for=\"node\" attr.name=\"" << c
       << "\" attr.type=\"double\"/>\n";
  os << "  <key id=\"spins\" for=\"edge\" attr.name=\"spins\" attr.type=\"string\"/>\n";
  os << "  <graph id=\"lattice\" edgedefault=\"undirected\">\n";
  for (const auto& [k, v] : graph_attrs)
    os << "    <data key=\"g_" << k << "\">" << xml_escape(v) << "</data>\n";
  for (int v = 0; v < lat.n_vertices(); ++v) {
    auto p = lat.position(v);
    os << "    <node id=\"n" << v << "\">";
    os << "<data key=\"x\">" << fmt_double(p[0]) << "</data>";
    os << "<data key=\"y\">" << fmt_double(p[1]) << "</data>";
    os << "<data key=\"z\">" << fmt_double(p[2]) << "</data>";
    os << "</node>\n";
  }
  for (const Link& l : lat.links) {
    os << "    <edge id=\"e" << l.id << "\" source=\"n" << l.tail << "\" target=\"n" << l.head
       << "\"><data key=\"spins\">";
    for (std::size_t s = 0; s < snapshots.size(); ++s)
      os << (s ? " " : "") << static_cast<int>(snapshots[s][l.id]);
    os << "</data></edge>\n";
  }
  os << "  </graph>\n</graphml>\n";
  return os.str();
}

bool write_snapshots(const std::vector<Snapshot>& snapshots, const Lattice& lattice,
                     const SnapshotMetadata& meta, const std::string& path) {
  if (snapshots.empty()) return false;
  write_text_atomic(path, snapshots_graphml(snapshots, lattice, meta));
  return true;
}

namespace {

SnapshotFile snapshots_from_tree(const boost::property_tree::ptree& tree) {
  namespace pt = boost::property_tree;
  const pt::ptree& graphml = tree.get_child("graphml");
  std::map<std::string, std::string> key_names;  // key id -> attr.name
  for (const auto& [tag, node] : graphml)
    if (tag == "key")
      key_names[node.get<std::string>("<xmlattr>.id")] = node.get<std::string>(pt::ptree::path_type("<xmlattr>/attr.name", '/'));

  SnapshotFile f;
  const pt::ptree& graph = graphml.get_child("graph");
  std::vector<std::vector<std::int8_t>> edge_spins;
  for (const auto& [tag, node] : graph) {
    if (tag == "data") {
      f.graph_attributes[key_names.at(node.get<std::string>("<xmlattr>.key"))] = node.data();
    } else if (tag == "node") {
      f.node_ids.push_back(node.get<std::string>("<xmlattr>.id"));
      std::array<double, 3> pos{0, 0, 0};
      for (const auto& [dtag, d] : node) {
        if (dtag != "data") continue;
        const std::string name = key_names.at(d.get<std::string>("<xmlattr>.key"));
        int axis = name == "x" ? 0 : name == "y" ? 1 : name == "z" ? 2 : -1;
        if (axis >= 0) pos[axis] = std::stod(d.data());
      }
      f.node_positions.push_back(pos);
    } else if (tag == "edge") {
      f.edges.emplace_back(node.get<std::string>("<xmlattr>.source"),
                           node.get<std::string>("<xmlattr>.target"));
      std::vector<std::int8_t> spins;
      for (const auto& [dtag, d] : node) {
        if (dtag != "data" || key_names.at(d.get<std::string>("<xmlattr>.key")) != "spins")
          continue;
        std::istringstream ss(d.data());
        int v;
        while (ss >> v) spins.push_back(static_cast<std::int8_t>(v));
      }
      edge_spins.push_back(std::move(spins));
    }
  }
  const std::size_t n_snap = edge_spins.empty() ? 0 : edge_spins.front().size();
  f.snapshots.assign(n_snap, Snapshot(edge_spins.size()));
  for (std::size_t e = 0; e < edge_spins.size(); ++e) {
    if (edge_spins[e].size() != n_snap) throw IoError("GraphML edges carry unequal spin lists");
    for (std::size_t s = 0; s < n_snap; ++s) f.snapshots[s][e] = edge_spins[e][s];
  }
  return f;
}

}  // namespace

SnapshotFile parse_snapshots(const std::string& xml) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(xml);
  try {
    pt::read_xml(in, tree);
    return snapshots_from_tree(tree);
  } catch (const pt::ptree_error& e) {
    throw IoError(std::string("malformed GraphML: ") + e.what());
  } catch (const std::logic_error& e) {
    // unknown key ids (map::at) and unparsable coordinates (stod)
    throw IoError(std::string("malformed GraphML: ") + e.what());
  }
}

SnapshotFile read_snapshots(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_snapshots(ss.str());
}

std::string series_csv(const RunResult& result) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  std::size_t rows = 0;
  for (std::size_t i = 0; i < result.observables.size(); ++i) {
    os << (i ? "," : "") << result.observables[i].name;
    rows = std::max(rows, result.observables[i].series.size());
  }
  os << "\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < result.observables.size(); ++i) {
      const auto& s = result.observables[i].series;
      os << (i ? "," : "");
      if (r < s.size()) os << s[r];
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace toric
