#include "cutkit/mechanistic.hpp"

#include <cmath>

namespace cutkit::mech {

ToolModel ToolModel::uniform(int n_flutes, double edge_thickness, const Vec3& k_c,
                             const Vec3& k_e, double tool_radius) {
  ToolModel t;
  t.n_flutes = n_flutes;
  t.edge_thickness.assign(n_flutes, edge_thickness);
  t.k_c = k_c;
  t.k_e = k_e;
  t.tool_radius = tool_radius;
  return t;
}

double ToolModel::phase(int flute) const {
  if (!phase_offsets.empty()) return phase_offsets.at(flute);
  return 2.0 * M_PI * static_cast<double>(flute) / static_cast<double>(n_flutes);
}

void ToolModel::validate() const {
  if (n_flutes < 1) throw std::invalid_argument("tool: n_flutes must be >= 1");
  if (!(tool_radius > 0.0)) throw std::invalid_argument("tool: radius must be positive");
  if (edge_thickness.size() != static_cast<std::size_t>(n_flutes))
    throw std::invalid_argument("tool: edge_thickness size must equal n_flutes");
  for (double b : edge_thickness)
    if (!(b > 0.0)) throw std::invalid_argument("tool: edge thickness must be positive");
  if (!phase_offsets.empty() && phase_offsets.size() != static_cast<std::size_t>(n_flutes))
    throw std::invalid_argument("tool: phase_offsets size must equal n_flutes");
}

nlohmann::json ToolModel::to_json() const {
  nlohmann::json j;
  j["n_flutes"] = n_flutes;
  j["edge_thickness_mm"] = edge_thickness;
  j["k_c"] = {k_c.x(), k_c.y(), k_c.z()};
  j["k_e"] = {k_e.x(), k_e.y(), k_e.z()};
  j["tool_radius_mm"] = tool_radius;
  if (!phase_offsets.empty()) j["phase_offsets"] = phase_offsets;
  return j;
}

ToolModel ToolModel::from_json(const nlohmann::json& j) {
  ToolModel t;
  t.n_flutes = j.at("n_flutes").get<int>();
  if (j.at("edge_thickness_mm").is_array())
    t.edge_thickness = j.at("edge_thickness_mm").get<std::vector<double>>();
  else
    t.edge_thickness.assign(t.n_flutes, j.at("edge_thickness_mm").get<double>());
  for (int a = 0; a < 3; ++a) {
    t.k_c[a] = j.at("k_c")[a].get<double>();
    t.k_e[a] = j.at("k_e")[a].get<double>();
  }
  t.tool_radius = j.at("tool_radius_mm").get<double>();
  if (j.contains("phase_offsets")) t.phase_offsets = j.at("phase_offsets").get<std::vector<double>>();
  t.validate();
  return t;
}

double chip_thickness(double theta, const SpindleState& spindle, int n_flutes) {
  if (!(spindle.spindle_speed > 0.0))
    throw std::invalid_argument("chip_thickness: spindle speed must be positive");
  const double s = std::sin(theta);
  if (s <= 0.0) return 0.0;  // edge leaving the cut, no material ahead
  return s * spindle.feed_rate / (static_cast<double>(n_flutes) * spindle.spindle_speed);
}

Vec3 flute_force(const ToolModel& tool, int flute, double chip) {
  const double b = tool.edge_thickness.at(flute);
  return b * tool.k_e + b * tool.k_c * chip;
}

double flute_angle(const ToolModel& tool, const SpindleState& spindle, int flute) {
  return spindle.rotation_angle + tool.phase(flute);
}

Vec3 rotate_to_model(double theta, const Vec3& flute_frame) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  // tangential along (c, -s, 0), radial along (s, c, 0), axial along z
  return {c * flute_frame.x() + s * flute_frame.y(),
          -s * flute_frame.x() + c * flute_frame.y(), flute_frame.z()};
}

Vec3 total_force(const ToolModel& tool, const SpindleState& spindle,
                 const Engagement& engagement) {
  if (engagement.flags.size() != static_cast<std::size_t>(tool.n_flutes))
    throw std::invalid_argument("total_force: engagement size must equal n_flutes");
  Vec3 f = Vec3::Zero();
  for (int p = 0; p < tool.n_flutes; ++p) {
    if (!engagement.flags[p]) continue;
    const double theta = flute_angle(tool, spindle, p);
    const double h = chip_thickness(theta, spindle, tool.n_flutes);
    f += rotate_to_model(theta, flute_force(tool, p, h));
  }
  return f;
}

Vec3 model_to_world(const Vec3& f_model) {
  return {f_model.z(), -f_model.x(), -f_model.y()};
}

void flute_tip(double center_y, double center_z, double radius, double theta,
               double* tip_y, double* tip_z) {
  // y_M maps to -z_W and x_M to -y_W; theta = 0 points straight down.
  *tip_y = center_y - radius * std::sin(theta);
  *tip_z = center_z - radius * std::cos(theta);
}

Engagement engagement_from_geometry(double center_y, double center_z, const ToolModel& tool,
                                    const SpindleState& spindle, const OccupancyProbe& solid,
                                    double probe_offset) {
  Engagement e;
  e.flags.resize(tool.n_flutes, false);
  for (int p = 0; p < tool.n_flutes; ++p) {
    const double theta = flute_angle(tool, spindle, p);
    if (chip_thickness(theta, spindle, tool.n_flutes) <= 0.0) continue;
    double ty, tz;
    flute_tip(center_y, center_z, tool.tool_radius + probe_offset, theta, &ty, &tz);
    e.flags[p] = solid(ty, tz);
  }
  return e;
}

std::vector<Vec3> predict_forces(const ToolModel& tool, const SpindleState& spindle0,
                                 const std::vector<double>& times) {
  tool.validate();
  Engagement all;
  all.flags.assign(tool.n_flutes, true);
  std::vector<Vec3> out;
  out.reserve(times.size());
  const double t0 = times.empty() ? 0.0 : times.front();
  for (double t : times) {
    SpindleState s = spindle0;
    s.rotation_angle = spindle0.rotation_angle + 2.0 * M_PI * spindle0.spindle_speed * (t - t0);
    out.push_back(model_to_world(total_force(tool, s, all)));
  }
  return out;
}

}  // namespace cutkit::mech
