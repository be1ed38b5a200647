#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cutkit/mechanistic.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace cutkit;
using namespace cutkit::mech;

namespace {

ToolModel demo_tool() {
  return ToolModel::uniform(4, 1.2, Vec3(100.0, 30.0, 8.0), Vec3(2.0, 1.0, 0.3), 20.0);
}

}  // namespace

TEST_CASE("chip_thickness: zero at entry, closed form at the top, clamped at exit") {
  SpindleState spindle{25.0, 12.5, 0.0};
  CHECK(chip_thickness(0.0, spindle, 4) == doctest::Approx(0.0));
  CHECK(chip_thickness(M_PI / 2, spindle, 4) == doctest::Approx(0.125));
  CHECK(chip_thickness(M_PI, spindle, 4) == doctest::Approx(0.0));
  CHECK(chip_thickness(1.5 * M_PI, spindle, 4) == doctest::Approx(0.0));  // clamp
  spindle.spindle_speed = 0.0;
  CHECK_THROWS_AS(chip_thickness(0.3, spindle, 4), std::invalid_argument);
}

TEST_CASE("flute_force: edge force at zero chip, linear in chip thickness") {
  auto tool = ToolModel::uniform(2, 2.0, Vec3(10.0, 5.0, 0.0), Vec3(1.0, 0.0, 0.0), 10.0);
  const Vec3 at_zero = flute_force(tool, 0, 0.0);
  CHECK((at_zero - Vec3(2.0, 0.0, 0.0)).norm() < 1e-12);

  tool.k_e = Vec3::Zero();
  const Vec3 f1 = flute_force(tool, 0, 0.05);
  const Vec3 f2 = flute_force(tool, 0, 0.10);
  CHECK((f2 - 2.0 * f1).norm() < 1e-12);

  tool.k_e = Vec3(1.0, 0.0, 0.0);
  const Vec3 f = flute_force(tool, 0, 0.1);
  CHECK((f - Vec3(4.0, 1.0, 0.0)).norm() < 1e-12);
}

TEST_CASE("total_force: zero without engagement, edge force for one flute at zero angle") {
  const auto tool = demo_tool();
  SpindleState spindle{25.0, 12.5, 0.0};
  Engagement none{std::vector<bool>(4, false)};
  CHECK(total_force(tool, spindle, none).norm() == 0.0);

  Engagement single{{true, false, false, false}};
  const Vec3 f = total_force(tool, spindle, single);
  // theta = 0: h = 0, pure edge force rotated by identity
  const Vec3 expected = rotate_to_model(0.0, 1.2 * tool.k_e);
  CHECK((f - expected).norm() < 1e-12);

  Engagement wrong{std::vector<bool>(3, true)};
  CHECK_THROWS_AS(total_force(tool, spindle, wrong), std::invalid_argument);
}

TEST_CASE("total_force: 2pi/N periodicity under full engagement") {
  const auto tool = demo_tool();
  Engagement all{std::vector<bool>(4, true)};
  for (double base : {0.0, 0.3, 1.1, 2.9}) {
    SpindleState s1{25.0, 12.5, base};
    SpindleState s2{25.0, 12.5, base + 2.0 * M_PI / 4};
    CHECK((total_force(tool, s1, all) - total_force(tool, s2, all)).norm() < 1e-9);
  }
}

TEST_CASE("total_force: doubling the constants doubles the force") {
  auto tool = demo_tool();
  Engagement all{std::vector<bool>(4, true)};
  SpindleState spindle{25.0, 18.0, 0.7};
  const Vec3 f1 = total_force(tool, spindle, all);
  tool.k_c *= 2.0;
  tool.k_e *= 2.0;
  const Vec3 f2 = total_force(tool, spindle, all);
  CHECK((f2 - 2.0 * f1).norm() < 1e-12);
}

TEST_CASE("revolution-averaged force matches the quadrature oracle to 1e-6") {
  const auto tool = demo_tool();
  Engagement all{std::vector<bool>(4, true)};
  const double feed = 12.5, rps = 25.0;
  const Vec3 expected =
      oracle::mean_force_quadrature(4, 1.2, tool.k_c, tool.k_e, feed, rps);

  // kinks of the clamp land on grid nodes when M is a multiple of 2*N
  const int m = 40000;
  Vec3 mean = Vec3::Zero();
  for (int i = 0; i < m; ++i) {
    SpindleState spindle{rps, feed, 2.0 * M_PI * i / m};
    mean += total_force(tool, spindle, all);
  }
  mean /= m;
  CHECK((mean - expected).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("mean tangential load grows monotonically with feed rate") {
  const auto tool = demo_tool();
  Engagement all{std::vector<bool>(4, true)};
  double previous = -1.0;
  for (double feed : {5.0, 10.0, 15.0, 20.0}) {
    const int m = 4000;
    double load = 0.0;
    for (int i = 0; i < m; ++i) {
      SpindleState spindle{25.0, feed, 2.0 * M_PI * i / m};
      load += total_force(tool, spindle, all).norm();
    }
    load /= m;
    CHECK(load > previous);
    previous = load;
  }
}

TEST_CASE("engagement_from_geometry: outside material, deep immersion, half immersion") {
  const auto tool = demo_tool();
  SpindleState spindle{25.0, 12.5, 0.0};
  const double surface = 0.0;

  SUBCASE("fully outside -> all flutes disengaged") {
    auto solid = [&](double, double z) { return z < surface; };
    // disc bottom 5 mm above the surface
    const auto e = engagement_from_geometry(0.0, 5.0 + tool.tool_radius, tool, spindle, solid);
    for (bool flag : e.flags) CHECK_FALSE(flag);
  }

  SUBCASE("centre deeper than radius -> every flute with positive chip engaged") {
    auto solid = [&](double, double z) { return z < surface; };
    // centre 1.5 radii below the surface
    const double center_z = surface - 1.5 * tool.tool_radius;
    for (double base : {0.05, 0.9, 2.2, 4.0}) {
      SpindleState s{25.0, 12.5, base};
      const auto e = engagement_from_geometry(0.0, center_z, tool, s, solid);
      for (int p = 0; p < tool.n_flutes; ++p) {
        const double theta = flute_angle(tool, s, p);
        CHECK(e.flags[p] == (std::sin(theta) > 0.0));
      }
    }
  }

  SUBCASE("half immersion: engagement arc spans theta in (0, pi/2]") {
    auto solid = [&](double, double z) { return z < surface; };
    // centre exactly on the surface
    ToolModel probe = tool;
    probe.n_flutes = 1;
    probe.edge_thickness = {1.2};
    probe.phase_offsets = {0.0};
    for (double theta = 0.01; theta < 2.0 * M_PI; theta += 0.01) {
      SpindleState s{25.0, 12.5, theta};
      const auto e = engagement_from_geometry(0.0, surface, probe, s, solid);
      const double wrapped = std::fmod(theta, 2.0 * M_PI);
      const bool in_arc = wrapped > 0.0 && wrapped < M_PI / 2;
      CHECK(e.flags[0] == in_arc);
    }
  }
}

TEST_CASE("model_to_world frame mapping") {
  // axial (z_M) -> +x_W, feed direction (x_M) -> -y_W, into-material (y_M) -> -z_W
  CHECK((model_to_world(Vec3(1, 0, 0)) - Vec3(0, -1, 0)).norm() == 0.0);
  CHECK((model_to_world(Vec3(0, 1, 0)) - Vec3(0, 0, -1)).norm() == 0.0);
  CHECK((model_to_world(Vec3(0, 0, 1)) - Vec3(1, 0, 0)).norm() == 0.0);
}

TEST_CASE("tool json round-trip and validation") {
  auto tool = demo_tool();
  const auto restored = ToolModel::from_json(tool.to_json());
  CHECK(restored.n_flutes == 4);
  CHECK((restored.k_c - tool.k_c).norm() == 0.0);
  CHECK(restored.edge_thickness == tool.edge_thickness);

  tool.n_flutes = 0;
  CHECK_THROWS_AS(tool.validate(), std::invalid_argument);
  tool = demo_tool();
  tool.edge_thickness = {1.0};
  CHECK_THROWS_AS(tool.validate(), std::invalid_argument);
}

TEST_CASE("predict_forces: full-engagement prediction on a grid") {
  const auto tool = demo_tool();
  SpindleState spindle{25.0, 12.5, 0.0};
  std::vector<double> times = {0.0, 0.01, 0.02};
  const auto forces = predict_forces(tool, spindle, times);
  REQUIRE(forces.size() == 3);
  Engagement all{std::vector<bool>(4, true)};
  SpindleState s0 = spindle;
  CHECK((forces[0] - model_to_world(total_force(tool, s0, all))).norm() < 1e-12);
}
