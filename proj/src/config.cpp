#include "folharm/config.hpp"

#include "folharm/errors.hpp"
#include "folharm/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

namespace folharm {

namespace {

using nlohmann::json;

// Object reader that records which keys were consumed and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& get(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      // Usually a misspelling; name the candidates.
      std::string pending;
      for (auto it = j_.begin(); it != j_.end(); ++it)
        if (!seen_.count(it.key())) pending += (pending.empty() ? "" : ", ") + it.key();
      throw ConfigError(at(key), pending.empty() ? "missing required key"
                                                 : "missing required key (unread keys here: " + pending + ")");
    }
    return j_.at(key);
  }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// A real number, or a string "<k>pi" / "pi" for multiples of pi.
double real(const json& j, const std::string& path) {
  if (j.is_number()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
    return v;
  }
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
      const std::string factor = s.substr(0, s.size() - 2);
      if (factor.empty()) return std::numbers::pi;
      if (factor == "-") return -std::numbers::pi;
      try {
        std::size_t used = 0;
        const double f = std::stod(factor, &used);
        if (used == factor.size()) return f * std::numbers::pi;
      } catch (const std::exception&) {
      }
    }
    throw ConfigError(path, "expected a number or a multiple of pi such as \"2pi\"");
  }
  throw ConfigError(path, "expected a number");
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

std::vector<double> reals(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(real(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int> integers(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(integer(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Point point(const json& j, const std::string& path) {
  const auto v = reals(j, path);
  if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim))
    throw ConfigError(path, "expected 1 to " + std::to_string(kMaxDim) + " coordinates");
  Point p(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p[static_cast<int>(i)] = v[i];
  return p;
}

std::array<double, 2> interval(const json& j, const std::string& path) {
  const auto v = reals(j, path);
  if (v.size() != 2) throw ConfigError(path, "expected [lo, hi]");
  return {v[0], v[1]};
}

WindingMatrix winding(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a matrix (array of rows)");
  std::vector<std::vector<int>> rows;
  for (std::size_t r = 0; r < j.size(); ++r) rows.push_back(integers(j[r], path + "[" + std::to_string(r) + "]"));
  const std::size_t cols = rows.front().size();
  for (const auto& row : rows)
    if (row.size() != cols || cols == 0) throw ConfigError(path, "rows must have equal, nonzero length");
  WindingMatrix w(static_cast<int>(rows.size()), static_cast<int>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) w(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  return w;
}

GeometrySpec parse_geometry(const json& j, const std::string& path) {
  Reader r(j, path);
  GeometrySpec spec;
  const std::string kind = string(r.get("kind"), r.at("kind"));
  if (kind == "flat_torus") {
    spec.kind = GeometryKind::FlatTorus;
    spec.periods = reals(r.get("periods"), r.at("periods"));
    spec.dimension = static_cast<int>(spec.periods.size());
    if (r.has("boundaries")) {
      const json& b = r.get("boundaries");
      if (!b.is_array()) throw ConfigError(r.at("boundaries"), "expected an array of \"periodic\" / \"fixed\"");
      for (std::size_t i = 0; i < b.size(); ++i) {
        const std::string tag = string(b[i], r.at("boundaries") + "[" + std::to_string(i) + "]");
        if (tag == "periodic")
          spec.boundaries.push_back(BoundaryTag::Periodic);
        else if (tag == "fixed")
          spec.boundaries.push_back(BoundaryTag::Fixed);
        else
          throw ConfigError(r.at("boundaries"), "unknown boundary tag '" + tag + "'");
      }
    }
  } else if (kind == "round_sphere") {
    spec.kind = GeometryKind::RoundSphere;
    spec.dimension = 2;
    if (r.has("radius")) spec.radius = real(r.get("radius"), r.at("radius"));
    if (r.has("cap_angle")) spec.cap_angle = real(r.get("cap_angle"), r.at("cap_angle"));
  } else if (kind == "hyperbolic_patch") {
    spec.kind = GeometryKind::HyperbolicPatch;
    spec.dimension = 2;
    if (r.has("x_range")) spec.x_range = interval(r.get("x_range"), r.at("x_range"));
    if (r.has("y_range")) spec.y_range = interval(r.get("y_range"), r.at("y_range"));
  } else {
    throw ConfigError(r.at("kind"), "unknown geometry kind '" + kind + "'");
  }
  if (r.has("injectivity_cap")) spec.injectivity_cap = real(r.get("injectivity_cap"), r.at("injectivity_cap"));
  r.finish();
  try {
    (void)TransverseGeometry::build(spec);
  } catch (const ConfigError& e) {
    throw ConfigError(path + "." + e.field(), e.what());
  }
  return spec;
}

SineMode parse_mode(const json& j, const std::string& path) {
  Reader r(j, path);
  SineMode m;
  m.component = integer(r.get("component"), r.at("component"));
  m.amplitude = real(r.get("amplitude"), r.at("amplitude"));
  m.k = reals(r.get("k"), r.at("k"));
  if (r.has("phase")) m.phase = reals(r.get("phase"), r.at("phase"));
  if (r.has("product")) m.product = boolean(r.get("product"), r.at("product"));
  r.finish();
  if (m.component < 0 || m.component >= kMaxDim) throw ConfigError(r.at("component"), "out of range");
  if (m.k.empty()) throw ConfigError(r.at("k"), "need one wave number per source axis");
  if (m.phase.empty()) m.phase.assign(m.product ? m.k.size() : 1, 0.0);
  if (m.product ? m.phase.size() != m.k.size() : m.phase.size() != 1)
    throw ConfigError(r.at("phase"), m.product ? "product modes take one phase per axis" : "sum modes take one phase");
  return m;
}

std::vector<SineMode> parse_modes(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of modes");
  std::vector<SineMode> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_mode(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ModeFieldConfig parse_mode_field(const json& j, const std::string& path) {
  Reader r(j, path);
  ModeFieldConfig c;
  c.modes = parse_modes(r.get("modes"), r.at("modes"));
  r.finish();
  return c;
}

const std::set<std::string> kFamilies = {"identity", "linear", "sine_perturbation", "latitude_circle", "constant",
                                         "csv"};

MapConfig parse_map(const json& j, const std::string& path) {
  Reader r(j, path);
  MapConfig m;
  m.family = string(r.get("family"), r.at("family"));
  if (!kFamilies.count(m.family)) throw ConfigError(r.at("family"), "unknown map family '" + m.family + "'");
  auto allow = [&](std::initializer_list<const char*> families) {
    for (const char* f : families)
      if (m.family == f) return true;
    return false;
  };
  if (r.has("winding")) {
    if (!allow({"linear", "sine_perturbation", "csv"}))
      throw ConfigError(r.at("winding"), "not used by family '" + m.family + "'");
    m.winding = winding(r.get("winding"), r.at("winding"));
  }
  if (r.has("offset")) {
    if (!allow({"linear", "sine_perturbation"})) throw ConfigError(r.at("offset"), "not used by family '" + m.family + "'");
    m.offset = point(r.get("offset"), r.at("offset"));
  }
  if (r.has("modes")) {
    if (m.family != "sine_perturbation") throw ConfigError(r.at("modes"), "only sine_perturbation takes modes");
    m.modes = parse_modes(r.get("modes"), r.at("modes"));
  }
  if (m.family == "constant") m.value = point(r.get("value"), r.at("value"));
  if (m.family == "latitude_circle") {
    m.theta0 = real(r.get("theta0"), r.at("theta0"));
    if (r.has("phi0")) m.phi0 = real(r.get("phi0"), r.at("phi0"));
    if (r.has("turns")) m.turns = integer(r.get("turns"), r.at("turns"));
    if (r.has("axis")) m.axis = integer(r.get("axis"), r.at("axis"));
  }
  if (m.family == "csv") m.path = string(r.get("path"), r.at("path"));
  if ((m.family == "linear" || m.family == "sine_perturbation") && !m.winding)
    throw ConfigError(r.at("winding"), "missing required key");
  r.finish();
  return m;
}

ProfileConfig parse_profile(const json& j, const std::string& path) {
  Reader r(j, path);
  ProfileConfig p;
  p.name = string(r.get("name"), r.at("name"));
  if (p.name == "constant") {
    if (r.has("value")) p.value = real(r.get("value"), r.at("value"));
  } else if (p.name == "cosine" || p.name == "warped") {
    if (p.name == "cosine" && r.has("offset")) p.offset = real(r.get("offset"), r.at("offset"));
    if (r.has("amplitude")) p.amplitude = real(r.get("amplitude"), r.at("amplitude"));
    if (r.has("axis")) p.axis = integer(r.get("axis"), r.at("axis"));
    if (r.has("k")) p.k = real(r.get("k"), r.at("k"));
  } else {
    throw ConfigError(r.at("name"), "unknown profile '" + p.name + "'");
  }
  if (r.has("kappa")) {
    const std::string k = string(r.get("kappa"), r.at("kappa"));
    if (k == "closed_form")
      p.kappa = KappaSource::ClosedForm;
    else if (k == "discrete")
      p.kappa = KappaSource::Discrete;
    else
      throw ConfigError(r.at("kappa"), "expected \"closed_form\" or \"discrete\"");
  }
  r.finish();
  return p;
}

FoliationConfig parse_foliation(const json& j, const std::string& path) {
  Reader r(j, path);
  FoliationConfig f;
  f.leaf_dimension = integer(r.get("leaf_dimension"), r.at("leaf_dimension"));
  if (f.leaf_dimension < 0) throw ConfigError(r.at("leaf_dimension"), "must be >= 0");
  if (r.has("profile")) f.profile = parse_profile(r.get("profile"), r.at("profile"));
  r.finish();
  return f;
}

FlowConfig parse_flow(const json& j, const std::string& path) {
  Reader r(j, path);
  FlowConfig f;
  if (r.has("dt")) {
    f.dt = real(r.get("dt"), r.at("dt"));
    if (!(*f.dt > 0.0)) throw ConfigError(r.at("dt"), "must be positive");
  }
  if (r.has("max_steps")) {
    f.max_steps = integer(r.get("max_steps"), r.at("max_steps"));
    if (f.max_steps < 0) throw ConfigError(r.at("max_steps"), "must be >= 0");
  }
  if (r.has("tension_tol")) {
    f.tension_tol = real(r.get("tension_tol"), r.at("tension_tol"));
    if (!(f.tension_tol > 0.0)) throw ConfigError(r.at("tension_tol"), "must be positive");
  }
  if (r.has("energy_backtrack")) f.energy_backtrack = boolean(r.get("energy_backtrack"), r.at("energy_backtrack"));
  if (r.has("boundary_value")) f.boundary_value = point(r.get("boundary_value"), r.at("boundary_value"));
  if (r.has("min_dt")) {
    f.min_dt = real(r.get("min_dt"), r.at("min_dt"));
    if (!(f.min_dt > 0.0)) throw ConfigError(r.at("min_dt"), "must be positive");
  }
  r.finish();
  return f;
}

const std::set<std::string> kVerdicts = {"transversally_constant", "totally_geodesic", "bound_violated",
                                         "inconclusive"};

RigidityConfig parse_rigidity(const json& j, const std::string& path) {
  Reader r(j, path);
  RigidityConfig c;
  auto positive = [&](const char* key, double& slot) {
    if (!r.has(key)) return;
    slot = real(r.get(key), r.at(key));
    if (!(slot > 0.0)) throw ConfigError(r.at(key), "must be positive");
  };
  if (r.has("rank_cap")) {
    c.options.rank_cap = real(r.get("rank_cap"), r.at("rank_cap"));
    if (!(c.options.rank_cap >= 2.0)) throw ConfigError(r.at("rank_cap"), "C must be >= 2");
  }
  positive("tension_tol", c.options.tension_tol);
  positive("constant_tol", c.options.constant_tol);
  positive("geodesic_tol", c.options.geodesic_tol);
  positive("rank_tol", c.options.rank_tol);
  if (r.has("expect_verdict")) {
    c.expect_verdict = string(r.get("expect_verdict"), r.at("expect_verdict"));
    if (!kVerdicts.count(*c.expect_verdict)) throw ConfigError(r.at("expect_verdict"), "unknown verdict");
  }
  r.finish();
  return c;
}

CheckConfig parse_check(const json& j, const std::string& path) {
  Reader r(j, path);
  CheckConfig c;
  c.name = string(r.get("name"), r.at("name"));
  const auto& names = known_checks();
  if (std::find(names.begin(), names.end(), c.name) == names.end())
    throw ConfigError(r.at("name"), "unknown check '" + c.name + "'");
  auto only = [&](const char* key, const char* check) {
    if (c.name != check) throw ConfigError(r.at(key), std::string("only used by ") + check);
  };
  if (r.has("tolerance")) {
    c.tolerance = real(r.get("tolerance"), r.at("tolerance"));
    if (!(*c.tolerance > 0.0)) throw ConfigError(r.at("tolerance"), "must be positive");
  }
  if (r.has("mode")) {
    only("mode", "weitzenbock");
    c.mode = string(r.get("mode"), r.at("mode"));
    if (c.mode != "harmonic" && c.mode != "general")
      throw ConfigError(r.at("mode"), "expected \"harmonic\" or \"general\"");
  }
  if (r.has("variation")) {
    only("variation", "first-variation");
    c.variation = parse_mode_field(r.get("variation"), r.at("variation"));
  } else if (c.name == "first-variation") {
    throw ConfigError(r.at("variation"), "missing required key");
  }
  if (r.has("fd_steps")) {
    only("fd_steps", "first-variation");
    c.fd_steps = reals(r.get("fd_steps"), r.at("fd_steps"));
    if (c.fd_steps.empty()) throw ConfigError(r.at("fd_steps"), "need at least one step");
    for (double t : c.fd_steps)
      if (!(t > 0.0)) throw ConfigError(r.at("fd_steps"), "steps must be positive");
  }
  if (r.has("vector_field")) {
    only("vector_field", "divergence");
    c.vector_field = parse_mode_field(r.get("vector_field"), r.at("vector_field"));
  } else if (c.name == "divergence") {
    throw ConfigError(r.at("vector_field"), "missing required key");
  }
  if (r.has("psi")) {
    only("psi", "composition");
    Reader p(r.get("psi"), r.at("psi"));
    PsiConfig psi;
    psi.target = parse_geometry(p.get("target"), p.at("target"));
    psi.map = parse_map(p.get("map"), p.at("map"));
    p.finish();
    if (psi.map.family == "csv") throw ConfigError(p.at("map.family"), "psi must be an analytic family");
    c.psi = psi;
  } else if (c.name == "composition") {
    throw ConfigError(r.at("psi"), "missing required key");
  }
  if (r.has("refinement")) c.refinement = boolean(r.get("refinement"), r.at("refinement"));
  if (r.has("min_order")) c.min_order = real(r.get("min_order"), r.at("min_order"));
  r.finish();
  return c;
}

double mode_value(const SineMode& m, const Point& b) {
  if (static_cast<int>(m.k.size()) != b.size())
    throw ConfigError("modes.k", "need one wave number per source axis");
  if (m.product) {
    double v = m.amplitude;
    for (int a = 0; a < b.size(); ++a) v *= std::sin(m.k[a] * b[a] + m.phase[a]);
    return v;
  }
  double arg = m.phase.empty() ? 0.0 : m.phase[0];
  for (int a = 0; a < b.size(); ++a) arg += m.k[a] * b[a];
  return m.amplitude * std::sin(arg);
}

}  // namespace

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {"first-variation", "weitzenbock", "lemma-volume", "divergence",
                                                 "composition"};
  return names;
}

ExperimentConfig parse_config(const json& doc, const std::string& base_dir) {
  Reader r(doc, "");
  ExperimentConfig c;
  c.base_dir = base_dir;
  c.source = parse_geometry(r.get("source"), "source");
  if (r.has("target")) c.target = parse_geometry(r.get("target"), "target");
  if (r.has("foliation")) c.foliation = parse_foliation(r.get("foliation"), "foliation");
  if (r.has("resolutions")) {
    c.resolutions = integers(r.get("resolutions"), "resolutions");
    if (c.resolutions.empty()) throw ConfigError("resolutions", "need at least one resolution");
    for (int n : c.resolutions)
      if (n < 8) throw ConfigError("resolutions", "every axis needs at least 8 nodes");
  }
  if (r.has("map")) c.map = parse_map(r.get("map"), "map");
  if (r.has("flow")) c.flow = parse_flow(r.get("flow"), "flow");
  if (r.has("rigidity")) c.rigidity = parse_rigidity(r.get("rigidity"), "rigidity");
  if (r.has("verify")) {
    const json& v = r.get("verify");
    if (!v.is_array()) throw ConfigError("verify", "expected an array of checks");
    for (std::size_t i = 0; i < v.size(); ++i) c.checks.push_back(parse_check(v[i], "verify[" + std::to_string(i) + "]"));
  }
  if (r.has("output_dir")) c.output_dir = string(r.get("output_dir"), "output_dir");
  if (r.has("seed")) {
    const json& s = r.get("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("seed", "expected a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  r.finish();

  const int q = c.source.dimension;
  const auto& p = c.foliation.profile;
  if (p.name != "constant" && (p.axis < 0 || p.axis >= q)) throw ConfigError("foliation.profile.axis", "out of range");
  if (c.flow.boundary_value) {
    const int qt = c.target ? c.target->dimension : q;
    if (c.flow.boundary_value->size() != qt)
      throw ConfigError("flow.boundary_value", "expected one coordinate per target axis");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_config(doc, parent.empty() ? "." : parent.string());
}

std::shared_ptr<const TransverseGeometry> build_geometry(const GeometrySpec& spec) {
  return std::make_shared<const TransverseGeometry>(TransverseGeometry::build(spec));
}

VolumeProfile build_profile(const FoliationConfig& config, int dim) {
  const ProfileConfig& p = config.profile;
  if (p.name == "cosine") return VolumeProfile::cosine(p.offset, p.amplitude, p.axis, p.k, dim);
  if (p.name == "warped") return VolumeProfile::warped(config.leaf_dimension, p.amplitude, p.axis, p.k, dim);
  return VolumeProfile::constant(p.value, dim);
}

std::shared_ptr<const ChartMap> build_chart_map(const MapConfig& config,
                                                std::shared_ptr<const TransverseGeometry> source,
                                                std::shared_ptr<const TransverseGeometry> target) {
  const int q = source->dimension();
  const int qt = target->dimension();
  if (config.family == "identity") {
    if (!same_geometry(*source, *target))
      throw ConfigError("map.family", "identity needs the target geometry to equal the source");
    return AnalyticMap::identity(source);
  }
  if (config.family == "constant") {
    if (config.value->size() != qt) throw ConfigError("map.value", "expected one coordinate per target axis");
    return AnalyticMap::constant(source, target, *config.value);
  }
  if (config.family == "latitude_circle") {
    if (target->kind() != GeometryKind::RoundSphere)
      throw ConfigError("map.family", "latitude_circle needs a round_sphere target");
    return AnalyticMap::latitude_circle(source, target, config.theta0, config.phi0, config.turns, config.axis);
  }
  if (config.family == "linear" || config.family == "sine_perturbation") {
    const WindingMatrix& w = *config.winding;
    if (w.rows() != qt || w.cols() != q) throw ConfigError("map.winding", "expected a target_dim x source_dim matrix");
    Point offset = config.offset ? *config.offset : Point(Point::Zero(qt));
    if (offset.size() != qt) throw ConfigError("map.offset", "expected one coordinate per target axis");
    const auto linear = AnalyticMap::linear_with_winding(source, target, w, offset);
    if (config.family == "linear") return linear;
    for (const SineMode& m : config.modes) {
      if (m.component >= qt) throw ConfigError("map.modes.component", "out of range");
      if (static_cast<int>(m.k.size()) != q) throw ConfigError("map.modes.k", "need one wave number per source axis");
    }
    return std::make_shared<const AnalyticMap>("sine_perturbation", source, target, offset, linear->linear(),
                                               config.modes);
  }
  throw ConfigError("map.family", "family '" + config.family + "' has no closed form");
}

FoliatedMapField build_map(const MapConfig& config, std::shared_ptr<const GridChart> grid,
                           std::shared_ptr<const TransverseGeometry> target, const std::string& base_dir) {
  if (config.family == "csv") {
    std::filesystem::path p(config.path);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    std::ifstream in(p);
    if (!in) throw ConfigError("map.path", "cannot read '" + p.string() + "'");
    return read_map_csv(in, grid, target, config.winding);
  }
  return sample_map(grid, *build_chart_map(config, grid->geometry_ptr(), target));
}

template <class Field>
Field build_mode_field(const ModeFieldConfig& config, std::shared_ptr<const GridChart> grid, int components) {
  for (const SineMode& m : config.modes)
    if (m.component >= components) throw ConfigError("modes.component", "out of range");
  Field f(grid, components);
  for (std::size_t node = 0; node < grid->size(); ++node)
    for (const SineMode& m : config.modes) f(node, m.component) += mode_value(m, grid->coords(node));
  return f;
}

template TargetVectorField build_mode_field(const ModeFieldConfig&, std::shared_ptr<const GridChart>, int);
template VectorField build_mode_field(const ModeFieldConfig&, std::shared_ptr<const GridChart>, int);

}  // namespace folharm
