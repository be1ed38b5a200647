#pragma once

#include "cutkit/common.hpp"

#include <json.hpp>

#include <functional>
#include <vector>

namespace cutkit::mech {

// Fluted cutting tool with per-edge mechanistic constants. Force constants
// are ordered (tangential, radial, axial) in the flute frame P.
struct ToolModel {
  int n_flutes = 4;
  std::vector<double> edge_thickness;  // mm, per flute
  Vec3 k_c = Vec3::Zero();             // N/mm^2
  Vec3 k_e = Vec3::Zero();             // N/mm
  double tool_radius = 20.0;           // mm
  std::vector<double> phase_offsets;   // rad; empty -> uniform 2*pi/n spacing

  static ToolModel uniform(int n_flutes, double edge_thickness, const Vec3& k_c,
                           const Vec3& k_e, double tool_radius);
  double phase(int flute) const;
  void validate() const;

  nlohmann::json to_json() const;
  static ToolModel from_json(const nlohmann::json& j);
};

struct SpindleState {
  double spindle_speed = 25.0;  // rev/s
  double feed_rate = 12.5;      // mm/s
  double rotation_angle = 0.0;  // rad, accumulated
};

struct Engagement {
  std::vector<bool> flags;
};

// Eq.-style uncut chip thickness, clamped at zero when the edge faces away
// from the feed.
double chip_thickness(double theta, const SpindleState& spindle, int n_flutes);

// Per-edge force in the flute frame P: b * k_e + b * k_c * h.
Vec3 flute_force(const ToolModel& tool, int flute, double chip);

double flute_angle(const ToolModel& tool, const SpindleState& spindle, int flute);

// Rotation of the flute frame into the tool model frame M (tool axis = z_M,
// feed along +x_M). theta is measured from the into-material direction y_M.
Vec3 rotate_to_model(double theta, const Vec3& flute_frame);

// Sum over engaged cutting edges, in frame M.
Vec3 total_force(const ToolModel& tool, const SpindleState& spindle,
                 const Engagement& engagement);

// The simulator works in the base frame W with feed antiparallel to y and
// the cutting plane spanned by (y, z): x_M -> -y_W, y_M -> -z_W, z_M -> x_W.
Vec3 model_to_world(const Vec3& f_model);

// Flute tip location in the W-frame cutting plane for a disc centred at
// (center_y, center_z).
void flute_tip(double center_y, double center_z, double radius, double theta,
               double* tip_y, double* tip_z);

// Solid-material probe at a W-frame cutting-plane point (mm).
using OccupancyProbe = std::function<bool(double y, double z)>;

// Flute p engaged iff its tip lies in occupied material and its chip
// thickness is positive. probe_offset shifts the probe radially outward;
// the simulator passes one grid cell so tips riding on the removal boundary
// still see the uncut chip ahead of the cutting circle.
Engagement engagement_from_geometry(double center_y, double center_z, const ToolModel& tool,
                                    const SpindleState& spindle, const OccupancyProbe& solid,
                                    double probe_offset = 0.0);

// Mechanistic prediction over a time grid under full engagement, for
// residual computation against recordings with rotating-tool contact.
std::vector<Vec3> predict_forces(const ToolModel& tool, const SpindleState& spindle0,
                                 const std::vector<double>& times);

}  // namespace cutkit::mech
