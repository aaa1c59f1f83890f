#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "toric/driver.hpp"
#include "toric/lattice.hpp"
#include "toric/observables.hpp"

namespace toric {

inline constexpr const char* kCodeVersion = "0.1.0";

std::string mode_name(RunMode mode);

// Hierarchical results document. Keys:
//   /simulation/results/acc_ratio                 (thermalization only)
//   /simulation/results/<obs>/series              (full_time_series only)
//   /simulation/results/<obs>/{mean, mean_error, binder, binder_error,
//                              autocorrelation_time}
//   /simulation/metadata/...
// Missing values (NaN) are stored as null.
nlohmann::json results_document(const RunConfig& cfg, RunMode mode, const RunResult& result);
// Same keys, every entry an array over the schedule in the order of
// h_hys/lmbda_hys (series become arrays of arrays).
nlohmann::json hysteresis_document(const RunConfig& cfg, const std::vector<RunResult>& steps);
nlohmann::json metadata_block(const RunConfig& cfg, RunMode mode, double wall_time_s,
                              std::uint64_t seed);

// Writes to a temporary sibling then renames over path.
void write_text_atomic(const std::string& path, const std::string& content);
void write_results(const nlohmann::json& document, const std::string& path);
nlohmann::json read_results(const std::string& path);
// null entries come back as NaN
double json_number(const nlohmann::json& value);

struct SnapshotMetadata {
  Basis basis = Basis::x;
  double beta = 1.0;
  Couplings couplings;
};

// GraphML with one node per vertex (coordinates x, y, z) and one edge per link
// whose "spins" attribute lists the link's spin in every snapshot, first
// snapshot first.
std::string snapshots_graphml(const std::vector<Snapshot>& snapshots, const Lattice& lattice,
                              const SnapshotMetadata& meta);
// Returns false (and writes nothing) when there are no snapshots.
bool write_snapshots(const std::vector<Snapshot>& snapshots, const Lattice& lattice,
                     const SnapshotMetadata& meta, const std::string& path);

struct SnapshotFile {
  std::map<std::string, std::string> graph_attributes;
  std::vector<std::string> node_ids;
  std::vector<std::array<double, 3>> node_positions;
  std::vector<std::pair<std::string, std::string>> edges;  // source, target
  std::vector<Snapshot> snapshots;                          // per snapshot, per edge
};

// Parses with a generic XML parser; throws IoError on malformed input.
SnapshotFile read_snapshots(const std::string& path);
SnapshotFile parse_snapshots(const std::string& xml);

// One column per observable, one row per sample.
std::string series_csv(const RunResult& result);

}  // namespace toric
