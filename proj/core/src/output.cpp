#include "sktlab/output.hpp"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "sktlab/error.hpp"

namespace sktlab {

static_assert(std::endian::native == std::endian::little,
              "snapshot payloads are written as native little-endian float64");

namespace {

using nlohmann::json;

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open " + file.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorCode::Io, "write to " + file.string() + " failed");
}

std::string read_bytes(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string kind_name(FieldKind kind) {
  switch (kind) {
    case FieldKind::Density:
      return "density";
    case FieldKind::EntropyVariable:
      return "entropy_variable";
    case FieldKind::Dual:
      return "dual";
  }
  return "density";
}

FieldKind kind_from_name(const std::string& name) {
  if (name == "density") return FieldKind::Density;
  if (name == "entropy_variable") return FieldKind::EntropyVariable;
  if (name == "dual") return FieldKind::Dual;
  fail(ErrorCode::SchemaViolation, "unknown field kind '" + name + "'");
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string timeseries_csv(const PathRecord& record, int species) {
  std::string out = "t,H,dissipation";
  for (int i = 1; i <= species; ++i) out += ",mass_" + std::to_string(i);
  out += ",min_u,max_u";
  for (int i = 1; i <= species; ++i) out += ",l2_" + std::to_string(i);
  out += ",newton_iters\n";
  for (std::size_t k = 0; k < record.size(); ++k) {
    out += format_double(record.times[k]);
    out += ',' + format_double(record.entropy[k]);
    out += ',' + format_double(record.dissipation[k]);
    for (int i = 0; i < species; ++i) out += ',' + format_double(record.mass[k](i));
    out += ',' + format_double(record.min_u[k]);
    out += ',' + format_double(record.max_u[k]);
    for (int i = 0; i < species; ++i) out += ',' + format_double(record.l2[k](i));
    out += ',' + std::to_string(record.newton_iterations[k]);
    out += '\n';
  }
  return out;
}

void write_timeseries(const std::filesystem::path& file, const PathRecord& record, int species) {
  write_text(file, timeseries_csv(record, species));
}

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
  out += '\n';
  for (const auto& row : rows) {
    require(row.size() == header.size(), ErrorCode::SizeMismatch, "CSV row width does not match header");
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_double(row[c]);
    out += '\n';
  }
  write_text(file, out);
}

SnapshotFiles write_snapshot(const std::filesystem::path& dir, const std::string& stem,
                             const FieldArray& field, const Grid& grid, double t, FieldKind kind) {
  require(field.cols() == grid.cells(), ErrorCode::SizeMismatch, "snapshot field does not match grid");
  SnapshotFiles files{dir / (stem + ".json"), dir / (stem + ".bin")};
  json header;
  header["format"] = "sktlab-snapshot";
  header["version"] = 1;
  header["dim"] = grid.dim;
  header["shape"] = grid.dim == 1 ? json::array({grid.nx}) : json::array({grid.nx, grid.ny});
  header["lengths"] = grid.dim == 1 ? json::array({grid.lx}) : json::array({grid.lx, grid.ly});
  header["t"] = t;
  header["species"] = field.rows();
  header["kind"] = kind_name(kind);
  header["layout"] = "species-major; cells row-major, x fastest";
  header["dtype"] = "float64";
  header["endianness"] = "little";
  header["payload"] = files.payload.filename().string();
  const std::string payload(reinterpret_cast<const char*>(field.data()),
                            static_cast<std::size_t>(field.size()) * sizeof(double));
  header["payload_sha256"] = sha256_hex(payload);
  write_text(files.payload, payload);
  write_text(files.header, header.dump(2) + "\n");
  return files;
}

SnapshotData read_snapshot(const std::filesystem::path& header_file) {
  json header;
  try {
    header = json::parse(read_bytes(header_file));
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaViolation, "snapshot header " + header_file.string() + ": " + e.what());
  }
  SnapshotData data;
  try {
    const int dim = header.at("dim").get<int>();
    const auto shape = header.at("shape").get<std::vector<int>>();
    const auto lengths = header.at("lengths").get<std::vector<double>>();
    require(static_cast<int>(shape.size()) == dim && static_cast<int>(lengths.size()) == dim,
            ErrorCode::SchemaViolation, "snapshot shape does not match its dimension");
    data.grid = dim == 1 ? Grid::line(shape[0], lengths[0])
                         : Grid::rectangle(shape[0], shape[1], lengths[0], lengths[1]);
    data.t = header.at("t").get<double>();
    data.kind = kind_from_name(header.at("kind").get<std::string>());
    require(header.at("dtype").get<std::string>() == "float64" &&
                header.at("endianness").get<std::string>() == "little",
            ErrorCode::SchemaViolation, "unsupported snapshot encoding");
    const auto species = header.at("species").get<Eigen::Index>();
    const std::string payload = read_bytes(header_file.parent_path() / header.at("payload").get<std::string>());
    const auto count = species * data.grid.cells();
    require(static_cast<std::size_t>(count) * sizeof(double) == payload.size(), ErrorCode::SchemaViolation,
            "snapshot payload size does not match its header");
    if (header.contains("payload_sha256")) {
      require(header["payload_sha256"].get<std::string>() == sha256_hex(payload), ErrorCode::SchemaViolation,
              "snapshot payload checksum mismatch");
    }
    data.values.resize(species, data.grid.cells());
    std::memcpy(data.values.data(), payload.data(), payload.size());
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaViolation, "snapshot header " + header_file.string() + ": " + e.what());
  }
  return data;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::Io, "SHA-256 computation failed");
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < length; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
  return os.str();
}

std::string sha256_file(const std::filesystem::path& file) { return sha256_hex(read_bytes(file)); }

void RunManifest::add_output(const std::filesystem::path& dir, const std::string& name) {
  const std::string bytes = read_bytes(dir / name);
  outputs.push_back({name, sha256_hex(bytes), bytes.size()});
}

std::string library_version() {
#ifdef SKTLAB_VERSION
  return SKTLAB_VERSION;
#else
  return "unknown";
#endif
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  json out;
  out["command"] = m.command;
  out["version"] = m.version;
  out["config_hash"] = m.config_hash;
  out["config"] = m.config_json.empty() ? json(nullptr) : json::parse(m.config_json);
  out["seeds"] = m.seeds;
  json outputs = json::array();
  for (const OutputEntry& e : m.outputs) {
    outputs.push_back({{"name", e.name}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  }
  out["outputs"] = outputs;
  json meta = json::object();
  for (const auto& [k, v] : m.metadata) meta[k] = v;
  out["metadata"] = meta;
  out["wall_clock"] = {{"started_utc", m.started_utc},
                       {"finished_utc", m.finished_utc},
                       {"elapsed_seconds", m.elapsed_seconds}};
  write_text(dir / "manifest.json", out.dump(2) + "\n");
}

}  // namespace sktlab
