#pragma once

#include "folharm/energy_flow.hpp"
#include "folharm/foliated_map.hpp"
#include "folharm/verification.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>

namespace folharm {

// Shortest form is not used on purpose: 17 significant digits always round-trip.
std::string format_double(double v);

// JSON number, or null when v is not finite.
nlohmann::json json_number(double v);

// One row per node: node, i0.., b0.., then `name`0.. (or `name` for one component).
template <class Tag>
void write_field_csv(std::ostream& out, const NodeField<Tag>& field, const std::string& name);

void write_map_csv(std::ostream& out, const FoliatedMapField& map);
// Reads a map written by write_map_csv onto `grid`. Without `winding` the winding is
// recovered from the seam jumps of the stored lift.
FoliatedMapField read_map_csv(std::istream& in, std::shared_ptr<const GridChart> grid,
                              std::shared_ptr<const TransverseGeometry> target,
                              std::optional<WindingMatrix> winding = std::nullopt);

void write_trace_csv(std::ostream& out, const FlowTrace& trace);

nlohmann::json to_json(const IdentityResidualReport& report);
nlohmann::json to_json(const RigidityDiagnostics& diagnostics);
nlohmann::json to_json(const FlowTrace& trace);  // summary only: steps, reason, first/last energy

// Header for the run-level summary and one row per report.
std::string summary_header();
std::string summary_row(const IdentityResidualReport& report);

// Writes text to path, creating parent directories.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace folharm
