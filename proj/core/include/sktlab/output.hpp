#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sktlab/field.hpp"
#include "sktlab/grid.hpp"
#include "sktlab/path_record.hpp"

namespace sktlab {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

/// CSV text with columns t, H, dissipation, mass_1..mass_n, min_u, max_u,
/// l2_1..l2_n, newton_iters. An empty record gives the header only.
std::string timeseries_csv(const PathRecord& record, int species);
void write_timeseries(const std::filesystem::path& file, const PathRecord& record, int species);

/// Generic numeric CSV.
void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

struct SnapshotFiles {
  std::filesystem::path header;   // <stem>.json
  std::filesystem::path payload;  // <stem>.bin
};

/// Writes `<dir>/<stem>.json` (grid, time, species, layout) and the raw
/// little-endian float64 payload `<dir>/<stem>.bin`, species-major with
/// cells row-major and x fastest.
SnapshotFiles write_snapshot(const std::filesystem::path& dir, const std::string& stem,
                             const FieldArray& field, const Grid& grid, double t,
                             FieldKind kind = FieldKind::Density);

struct SnapshotData {
  Grid grid;
  double t = 0.0;
  FieldKind kind = FieldKind::Density;
  FieldArray values;
};

/// Reads a snapshot from its JSON header; the payload path is taken from the
/// header and resolved next to it.
SnapshotData read_snapshot(const std::filesystem::path& header);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);

struct OutputEntry {
  std::string name;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::string version;
  std::string config_hash;
  std::string config_json;  // effective configuration, canonical JSON
  std::vector<std::uint64_t> seeds;
  std::vector<OutputEntry> outputs;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::string started_utc;
  std::string finished_utc;
  double elapsed_seconds = 0.0;

  /// Hashes `dir / name` and appends the entry.
  void add_output(const std::filesystem::path& dir, const std::string& name);
};

std::string library_version();
std::string utc_timestamp();

/// Writes `<dir>/manifest.json`.
void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

}  // namespace sktlab
