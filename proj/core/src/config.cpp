#include "sktlab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sktlab/error.hpp"
#include "sktlab/output.hpp"

namespace sktlab {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  fail(ErrorCode::SchemaViolation, path + ": " + what);
}

/// Object view that remembers which keys were read, so leftovers can be
/// reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) schema_error(path_, "expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }
  std::string child(const std::string& key) const { return path_ + "." + key; }

  const json& get(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) schema_error(child(key), "required key is missing");
    return *it;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) schema_error(child(it.key()), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) schema_error(path, "expected a number");
  return v.get<double>();
}

long long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) schema_error(path, "expected an integer");
  return v.get<long long>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) schema_error(path, "expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd as_vector(const json& v, const std::string& path) {
  if (!v.is_array()) schema_error(path, "expected an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = as_number(v[k], path + "[" + std::to_string(k) + "]");
  }
  return out;
}

Eigen::MatrixXd as_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) schema_error(path, "expected a non-empty array of rows");
  const std::size_t rows = v.size();
  Eigen::MatrixXd out;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const Eigen::VectorXd row = as_vector(v[r], rp);
    if (r == 0) out.resize(static_cast<Eigen::Index>(rows), row.size());
    if (row.size() != out.cols()) schema_error(rp, "rows have different lengths");
    out.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

Grid parse_grid(const json& node) {
  ObjectReader r(node, "$.grid");
  const int dim = static_cast<int>(as_integer(r.get("dim"), r.child("dim")));
  if (dim != 1 && dim != 2) schema_error(r.child("dim"), "must be 1 or 2");
  const json& n_node = r.get("N");
  int nx = 0, ny = 1;
  if (n_node.is_array()) {
    if (static_cast<int>(n_node.size()) != dim) schema_error(r.child("N"), "needs one entry per axis");
    nx = static_cast<int>(as_integer(n_node[0], r.child("N") + "[0]"));
    if (dim == 2) ny = static_cast<int>(as_integer(n_node[1], r.child("N") + "[1]"));
  } else {
    nx = static_cast<int>(as_integer(n_node, r.child("N")));
    if (dim == 2) ny = nx;
  }
  double lx = 1.0, ly = 1.0;
  if (const json* l = r.find("L")) {
    if (l->is_array()) {
      if (static_cast<int>(l->size()) != dim) schema_error(r.child("L"), "needs one entry per axis");
      lx = as_number((*l)[0], r.child("L") + "[0]");
      if (dim == 2) ly = as_number((*l)[1], r.child("L") + "[1]");
    } else {
      lx = as_number(*l, r.child("L"));
      if (dim == 2) ly = lx;
    }
  }
  r.finish();
  try {
    return dim == 1 ? Grid::line(nx, lx) : Grid::rectangle(nx, ny, lx, ly);
  } catch (const SktError& e) {
    schema_error("$.grid", e.what());
  }
}

NoiseSpec parse_noise(const json& node) {
  ObjectReader r(node, "$.noise");
  const std::string family = as_string(r.get("family"), r.child("family"));
  NoiseSpec spec;
  const auto number = [&](const char* key, double fallback) {
    const json* v = r.find(key);
    return v ? as_number(*v, r.child(key)) : fallback;
  };
  if (family == "zero") {
    spec.family = noise_family::Zero{};
  } else if (family == "bounded_ratio") {
    spec.family = noise_family::BoundedRatio{number("eta", 0.5)};
  } else if (family == "power") {
    spec.family = noise_family::Power{number("alpha", 0.5)};
  } else if (family == "power_damped") {
    const double alpha = number("alpha", 0.5);
    spec.family = noise_family::PowerDamped{alpha, number("beta", alpha)};
  } else {
    schema_error(r.child("family"), "unknown family '" + family +
                                        "' (expected zero, bounded_ratio, power or power_damped)");
  }
  if (const json* rho = r.find("rho")) spec.rho = as_number(*rho, r.child("rho"));
  if (const json* k = r.find("K")) spec.modes = as_integer(*k, r.child("K"));
  r.finish();
  return spec;
}

json family_json(const NoiseFamily& family) {
  json out;
  out["family"] = family_name(family);
  if (const auto* f = std::get_if<noise_family::BoundedRatio>(&family)) out["eta"] = f->eta;
  if (const auto* f = std::get_if<noise_family::Power>(&family)) out["alpha"] = f->alpha;
  if (const auto* f = std::get_if<noise_family::PowerDamped>(&family)) {
    out["alpha"] = f->alpha;
    out["beta"] = f->beta;
  }
  return out;
}

}  // namespace

SimConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::SchemaViolation, std::string("$: invalid JSON: ") + e.what());
  }
  ObjectReader r(doc, "$");
  SimConfig cfg;

  const long long n = as_integer(r.get("n"), "$.n");
  if (n < 1) schema_error("$.n", "species count must be at least 1");
  const Eigen::VectorXd a0 = as_vector(r.get("a0"), "$.a0");
  const Eigen::MatrixXd a = as_matrix(r.get("a"), "$.a");
  if (a0.size() != n) schema_error("$.a0", "needs n entries");
  if (a.rows() != n || a.cols() != n) schema_error("$.a", "must be n x n");
  std::optional<Eigen::VectorXd> pi;
  if (const json* p = r.find("pi")) {
    pi = as_vector(*p, "$.pi");
    if (pi->size() != n) schema_error("$.pi", "needs n entries");
  }
  std::optional<DiffusionMode> mode;
  if (const json* m = r.find("mode")) {
    const std::string s = as_string(*m, "$.mode");
    if (s == "with_self_diffusion") {
      mode = DiffusionMode::WithSelfDiffusion;
    } else if (s == "without_self_diffusion") {
      mode = DiffusionMode::WithoutSelfDiffusion;
    } else {
      schema_error("$.mode", "expected with_self_diffusion or without_self_diffusion");
    }
  }
  cfg.params = SKTParameters::make(a0, a, pi, mode);

  cfg.grid = parse_grid(r.get("grid"));
  cfg.T = as_number(r.get("T"), "$.T");
  cfg.dt = as_number(r.get("dt"), "$.dt");
  if (const json* s = r.find("scheme")) {
    const std::string name = as_string(*s, "$.scheme");
    if (name == "entropy_variable") {
      cfg.scheme = Scheme::EntropyVariable;
    } else if (name == "laplacian_form") {
      cfg.scheme = Scheme::LaplacianForm;
    } else {
      schema_error("$.scheme", "expected entropy_variable or laplacian_form");
    }
  }
  if (const json* e = r.find("epsilon")) cfg.epsilon = as_number(*e, "$.epsilon");
  if (const json* m = r.find("sobolev_index")) {
    cfg.sobolev_index = static_cast<int>(as_integer(*m, "$.sobolev_index"));
    if (cfg.sobolev_index < 1) schema_error("$.sobolev_index", "must be positive");
  }
  if (const json* node = r.find("newton")) {
    ObjectReader nr(*node, "$.newton");
    if (const json* v = nr.find("tol")) cfg.newton.tol = as_number(*v, nr.child("tol"));
    if (const json* v = nr.find("max_iter")) cfg.newton.max_iter = static_cast<int>(as_integer(*v, nr.child("max_iter")));
    if (const json* v = nr.find("max_halvings")) {
      cfg.newton.max_halvings = static_cast<int>(as_integer(*v, nr.child("max_halvings")));
    }
    if (const json* v = nr.find("dense_limit")) cfg.newton.dense_limit = as_integer(*v, nr.child("dense_limit"));
    nr.finish();
  }
  if (const json* node = r.find("noise")) cfg.noise = parse_noise(*node);
  if (const json* s = r.find("save_every")) {
    const long long k = as_integer(*s, "$.save_every");
    if (k < 1) schema_error("$.save_every", "must be at least 1");
    cfg.save_every = static_cast<std::size_t>(k);
  }
  if (const json* node = r.find("initial")) {
    ObjectReader ir(*node, "$.initial");
    if (const json* f = ir.find("file")) {
      if (ir.has("constant") || ir.has("amplitude")) {
        schema_error("$.initial", "give either file or constant/amplitude, not both");
      }
      std::filesystem::path file = as_string(*f, "$.initial.file");
      if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
      SnapshotData snap = read_snapshot(file);
      if (snap.grid.dim != cfg.grid.dim || snap.grid.nx != cfg.grid.nx || snap.grid.ny != cfg.grid.ny) {
        schema_error("$.initial.file", "snapshot grid does not match the configured grid");
      }
      cfg.initial.field = std::move(snap.values);
    } else {
      if (const json* c = ir.find("constant")) cfg.initial.constant = as_vector(*c, "$.initial.constant");
      if (const json* d = ir.find("amplitude")) cfg.initial.amplitude = as_vector(*d, "$.initial.amplitude");
    }
    ir.finish();
  }
  r.finish();
  cfg.finalize();
  return cfg;
}

SimConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read config file " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), file.parent_path());
}

std::string effective_config_json(const SimConfig& config) {
  json out;
  const SKTParameters& p = config.params;
  out["n"] = p.n;
  out["a0"] = vector_json(p.a0);
  out["a"] = matrix_json(p.a);
  out["pi"] = vector_json(p.pi);
  out["mode"] = p.mode == DiffusionMode::WithSelfDiffusion ? "with_self_diffusion" : "without_self_diffusion";
  json grid;
  grid["dim"] = config.grid.dim;
  if (config.grid.dim == 1) {
    grid["N"] = config.grid.nx;
    grid["L"] = config.grid.lx;
  } else {
    grid["N"] = {config.grid.nx, config.grid.ny};
    grid["L"] = {config.grid.lx, config.grid.ly};
  }
  out["grid"] = grid;
  out["T"] = config.T;
  out["dt"] = config.dt;
  out["scheme"] = to_string(config.scheme);
  out["epsilon"] = config.epsilon;
  out["sobolev_index"] = config.sobolev_index;
  out["newton"] = {{"tol", config.newton.tol},
                   {"max_iter", config.newton.max_iter},
                   {"max_halvings", config.newton.max_halvings},
                   {"dense_limit", config.newton.dense_limit}};
  json noise = family_json(config.noise.family);
  if (config.noise_model) {
    noise["rho"] = config.noise_model->rho();
    noise["K"] = config.noise_model->modes();
    noise["tail_fraction"] = config.noise_model->tail_fraction();
  }
  out["noise"] = noise;
  out["save_every"] = config.save_every;
  if (config.initial.field) {
    const FieldArray& f = *config.initial.field;
    std::string bytes(reinterpret_cast<const char*>(f.data()), static_cast<std::size_t>(f.size()) * sizeof(double));
    out["initial"] = {{"field_sha256", sha256_hex(bytes)}};
  } else {
    out["initial"] = {{"constant", vector_json(config.initial.constant)},
                      {"amplitude", vector_json(config.initial.amplitude)}};
  }
  return out.dump();
}

std::string config_hash(const SimConfig& config) { return sha256_hex(effective_config_json(config)); }

}  // namespace sktlab
