#pragma once

#include "folharm/energy_flow.hpp"
#include "folharm/foliated_map.hpp"
#include "folharm/foliated_structure.hpp"
#include "folharm/manifold_catalog.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace folharm {

struct ProfileConfig {
  std::string name = "constant";  // constant | cosine | warped
  double value = 1.0;             // constant
  double offset = 2.0;            // cosine
  double amplitude = 1.0;         // cosine, warped
  int axis = 0;
  double k = 1.0;
  KappaSource kappa = KappaSource::ClosedForm;
};

struct FoliationConfig {
  int leaf_dimension = 0;
  ProfileConfig profile;
};

// Named analytic families, or a map CSV.
struct MapConfig {
  std::string family = "identity";  // identity | linear | sine_perturbation | latitude_circle | constant | csv
  std::optional<WindingMatrix> winding;
  std::optional<Point> offset;
  std::vector<SineMode> modes;
  std::optional<Point> value;  // constant
  double theta0 = 0.7853981633974483;
  double phi0 = 0.0;
  int turns = 1;
  int axis = 0;
  std::string path;  // csv, resolved against the config file's directory
};

// A field given by sine modes (component, amplitude, k, phase, product).
struct ModeFieldConfig {
  std::vector<SineMode> modes;
};

struct PsiConfig {
  GeometrySpec target;
  MapConfig map;
};

struct CheckConfig {
  std::string name;  // first-variation | weitzenbock | lemma-volume | divergence | composition
  std::optional<double> tolerance;
  std::string mode = "general";  // weitzenbock: harmonic | general
  ModeFieldConfig variation;     // first-variation
  std::vector<double> fd_steps{1e-2, 5e-3, 2.5e-3};
  ModeFieldConfig vector_field;  // divergence
  std::optional<PsiConfig> psi;  // composition
  std::optional<bool> refinement;
  double min_order = 1.7;
};

struct RigidityConfig {
  RigidityOptions options;
  std::optional<std::string> expect_verdict;
};

struct ExperimentConfig {
  GeometrySpec source;
  std::optional<GeometrySpec> target;
  FoliationConfig foliation;
  std::vector<int> resolutions{64};
  MapConfig map;
  FlowConfig flow;
  std::optional<RigidityConfig> rigidity;
  std::vector<CheckConfig> checks;
  std::string output_dir = "folharm_out";
  std::uint64_t seed = 0;
  std::string base_dir = ".";  // directory of the config file
};

// Strict parse: unknown keys, wrong types and out-of-range values raise ConfigError
// naming the JSON path of the offending entry.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

std::shared_ptr<const TransverseGeometry> build_geometry(const GeometrySpec& spec);
VolumeProfile build_profile(const FoliationConfig& config, int dim);
std::shared_ptr<const ChartMap> build_chart_map(const MapConfig& config,
                                                std::shared_ptr<const TransverseGeometry> source,
                                                std::shared_ptr<const TransverseGeometry> target);
FoliatedMapField build_map(const MapConfig& config, std::shared_ptr<const GridChart> grid,
                           std::shared_ptr<const TransverseGeometry> target, const std::string& base_dir);
// Sum of sine modes sampled per node, `components` values each.
template <class Field>
Field build_mode_field(const ModeFieldConfig& config, std::shared_ptr<const GridChart> grid, int components);

const std::vector<std::string>& known_checks();

}  // namespace folharm
