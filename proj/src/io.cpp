#include "folharm/io.hpp"

#include "folharm/errors.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace folharm {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

namespace {

void write_node_prefix(std::ostream& out, const GridChart& grid, std::size_t node) {
  out << node;
  const auto idx = grid.index(node);
  for (int a = 0; a < grid.dim(); ++a) out << ',' << idx[a];
  const Point& b = grid.coords(node);
  for (int a = 0; a < grid.dim(); ++a) out << ',' << format_double(b[a]);
}

void write_header_prefix(std::ostream& out, int dim) {
  out << "node";
  for (int a = 0; a < dim; ++a) out << ",i" << a;
  for (int a = 0; a < dim; ++a) out << ",b" << a;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_double(const std::string& s, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidMapError("map csv row " + std::to_string(row) + ": bad number '" + s + "'");
  }
}

}  // namespace

template <class Tag>
void write_field_csv(std::ostream& out, const NodeField<Tag>& field, const std::string& name) {
  const GridChart& grid = field.grid();
  write_header_prefix(out, grid.dim());
  if (field.components() == 1)
    out << ',' << name;
  else
    for (int c = 0; c < field.components(); ++c) out << ',' << name << c;
  out << '\n';
  for (std::size_t node = 0; node < grid.size(); ++node) {
    write_node_prefix(out, grid, node);
    for (int c = 0; c < field.components(); ++c) out << ',' << format_double(field(node, c));
    out << '\n';
  }
}

template void write_field_csv(std::ostream&, const NodeField<ScalarTag>&, const std::string&);
template void write_field_csv(std::ostream&, const NodeField<VectorTag>&, const std::string&);
template void write_field_csv(std::ostream&, const NodeField<CovectorTag>&, const std::string&);
template void write_field_csv(std::ostream&, const NodeField<TargetVectorTag>&, const std::string&);

void write_map_csv(std::ostream& out, const FoliatedMapField& map) {
  const GridChart& grid = map.source();
  write_header_prefix(out, grid.dim());
  for (int alpha = 0; alpha < map.target_dim(); ++alpha) out << ",phi" << alpha;
  out << '\n';
  for (std::size_t node = 0; node < grid.size(); ++node) {
    write_node_prefix(out, grid, node);
    for (int alpha = 0; alpha < map.target_dim(); ++alpha) out << ',' << format_double(map.value(node, alpha));
    out << '\n';
  }
}

FoliatedMapField read_map_csv(std::istream& in, std::shared_ptr<const GridChart> grid,
                              std::shared_ptr<const TransverseGeometry> target,
                              std::optional<WindingMatrix> winding) {
  const int q = grid->dim();
  const int qt = target->dimension();
  std::string line;
  if (!std::getline(in, line)) throw InvalidMapError("map csv is empty");
  const auto header = split_csv(line);
  const std::size_t expected = 1 + 2 * static_cast<std::size_t>(q) + static_cast<std::size_t>(qt);
  if (header.size() != expected || header.front() != "node")
    throw InvalidMapError("map csv header does not match a " + std::to_string(q) + " -> " +
                          std::to_string(qt) + " map");

  std::vector<double> values(grid->size() * static_cast<std::size_t>(qt), 0.0);
  std::vector<bool> seen(grid->size(), false);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != expected) throw InvalidMapError("map csv row " + std::to_string(row) + ": wrong column count");
    const double node_d = parse_double(cells[0], row);
    if (node_d < 0 || node_d >= static_cast<double>(grid->size()) || node_d != std::floor(node_d))
      throw InvalidMapError("map csv row " + std::to_string(row) + ": node index out of range");
    const auto node = static_cast<std::size_t>(node_d);
    if (seen[node]) throw InvalidMapError("map csv row " + std::to_string(row) + ": duplicate node");
    seen[node] = true;
    for (int alpha = 0; alpha < qt; ++alpha)
      values[node * qt + alpha] = parse_double(cells[1 + 2 * q + alpha], row);
  }
  for (std::size_t node = 0; node < grid->size(); ++node)
    if (!seen[node]) throw InvalidMapError("map csv is missing node " + std::to_string(node));

  if (!winding) {
    // Extrapolate one step past the last node on each periodic axis and compare
    // with the first node: the difference is W(alpha, a) * P'_alpha.
    WindingMatrix w = WindingMatrix::Zero(qt, q);
    for (int a = 0; a < q; ++a) {
      if (grid->boundary(a) != BoundaryTag::Periodic) continue;
      std::array<int, kMaxDim> last{}, before{};
      last[a] = grid->resolution(a) - 1;
      before[a] = grid->resolution(a) - 2;
      const std::size_t n_first = 0, n_last = grid->node(last), n_before = grid->node(before);
      for (int alpha = 0; alpha < qt; ++alpha) {
        const auto period = target->coordinate_period(alpha);
        if (!period) continue;
        const double next = 2.0 * values[n_last * qt + alpha] - values[n_before * qt + alpha];
        w(alpha, a) = static_cast<int>(std::lround((next - values[n_first * qt + alpha]) / *period));
      }
    }
    winding = w;
  }
  FoliatedMapField map(grid, target, *winding);
  map.raw() = std::move(values);
  map.validate();
  return map;
}

void write_trace_csv(std::ostream& out, const FlowTrace& trace) {
  out << "step,E_B,max_tension,max_second_form,max_density,dt\n";
  for (const FlowRecord& r : trace.records)
    out << r.step << ',' << format_double(r.energy) << ',' << format_double(r.max_tension) << ','
        << format_double(r.max_second_form) << ',' << format_double(r.max_density) << ','
        << format_double(r.dt) << '\n';
}

nlohmann::json to_json(const IdentityResidualReport& report) {
  nlohmann::json j;
  j["identity"] = report.identity;
  j["grids"] = report.grids;
  auto residuals = nlohmann::json::array();
  for (double r : report.residuals) residuals.push_back(json_number(r));
  j["residuals"] = residuals;
  auto orders = nlohmann::json::array();
  for (double o : report.orders) orders.push_back(json_number(o));
  j["orders"] = orders;
  j["tolerance"] = json_number(report.tolerance);
  j["passed"] = report.passed;
  auto details = nlohmann::json::object();
  for (const auto& [key, value] : report.details) details[key] = json_number(value);
  j["details"] = details;
  return j;
}

nlohmann::json to_json(const RigidityDiagnostics& d) {
  nlohmann::json j;
  j["lambda"] = json_number(d.lambda);
  j["mu"] = json_number(d.mu);
  j["rank_cap"] = json_number(d.rank_cap);
  j["rank_t"] = d.rank_t;
  j["bound_value"] = json_number(d.bound_value);
  j["max_density"] = json_number(d.max_density);
  j["max_second_form"] = json_number(d.max_second_form);
  j["max_tension"] = json_number(d.max_tension);
  j["verdict"] = to_string(d.verdict);
  return j;
}

nlohmann::json to_json(const FlowTrace& trace) {
  nlohmann::json j;
  j["steps"] = trace.records.empty() ? 0 : trace.records.back().step;
  j["termination"] = to_string(trace.reason);
  if (!trace.records.empty()) {
    j["initial_energy"] = json_number(trace.records.front().energy);
    j["final_energy"] = json_number(trace.records.back().energy);
    j["final_max_tension"] = json_number(trace.records.back().max_tension);
    j["final_max_second_form"] = json_number(trace.records.back().max_second_form);
    j["final_max_density"] = json_number(trace.records.back().max_density);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < trace.records.size(); ++i)
    if (trace.records[i].energy > trace.records[i - 1].energy) monotone = false;
  j["energy_monotone"] = monotone;
  return j;
}

std::string summary_header() { return "identity,grids,finest_residual,min_order,tolerance,passed\n"; }

std::string summary_row(const IdentityResidualReport& report) {
  std::ostringstream os;
  os << report.identity << ',';
  for (std::size_t i = 0; i < report.grids.size(); ++i) os << (i ? ";" : "") << report.grids[i];
  os << ',' << (report.residuals.empty() ? "nan" : format_double(report.residuals.back())) << ',';
  double min_order = NAN;
  for (double o : report.orders) min_order = std::isnan(min_order) ? o : std::min(min_order, o);
  os << format_double(min_order) << ',' << format_double(report.tolerance) << ','
     << (report.passed ? "true" : "false") << '\n';
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace folharm
