#pragma once

#include "pmapp/flowsim.hpp"
#include "pmapp/geometry.hpp"
#include "pmapp/plan.hpp"

#include <optional>
#include <string>

namespace pmapp {

/// {"name", "polygon": [[x, y], ...], "streams": [{"start": [x, y], "goal": [x, y]}, ...]}
std::string environment_to_json(const Environment& env);
Environment environment_from_json(const std::string& text);

/// A built-in scene letter (a-f) or the path of an environment JSON file.
Environment load_environment(const std::string& name_or_path);

/// Extra fields stored next to a plan.
struct PlanMeta {
  std::optional<double> optimized_radius;
  std::optional<std::string> status;  // "converged" or "max-iterations"
};

/// Version 1 plan file. Built-in environments are stored by name, anything
/// else inline. Doubles are written with round-trip precision.
std::string plan_to_json(const PeriodicPlan& plan, const PlanMeta& meta = {});
PeriodicPlan plan_from_json(const std::string& text, PlanMeta* meta = nullptr);

std::string trace_to_json(const StreamTrace& trace);
StreamTrace trace_from_json(const std::string& text);

/// Whole-file helpers; a missing or unreadable file is a parse error.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

/// Environment outline, one polyline per trajectory colored by (stream,
/// slot), and a tick at the position reached after each elapsed period.
std::string render_svg(const PeriodicPlan& plan);

}  // namespace pmapp
