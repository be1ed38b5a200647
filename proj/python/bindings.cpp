#include "cutkit/eval.hpp"
#include "cutkit/gp.hpp"
#include "cutkit/imitation.hpp"
#include "cutkit/mechanistic.hpp"
#include "cutkit/sim.hpp"
#include "cutkit/synth.hpp"
#include "cutkit/timeseries.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

namespace py = pybind11;
using namespace cutkit;

namespace {

std::vector<Vec3> to_vec3_list(const Eigen::MatrixXd& m) {
  if (m.cols() != 3) throw std::invalid_argument("expected an N x 3 array");
  std::vector<Vec3> out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = m.row(i).transpose();
  return out;
}

Eigen::MatrixXd from_vec3_list(const std::vector<Vec3>& v) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

ts::NormalizedSeries values_series(const Eigen::MatrixXd& values) {
  ts::NormalizedSeries s;
  s.values = to_vec3_list(values);
  s.time.resize(s.values.size());
  for (std::size_t i = 0; i < s.time.size(); ++i) s.time[i] = static_cast<double>(i);
  return s;
}

}  // namespace

PYBIND11_MODULE(_cutkit, m) {
  m.doc() = "Sim-to-real transfer toolkit for robotic cutting";
  m.attr("__version__") = kVersion;

  // ---- time series alignment ----
  m.def(
      "normalize",
      [](const std::vector<double>& time, const Eigen::MatrixXd& forces) {
        ts::ForceSeries s;
        s.time = time;
        s.force = to_vec3_list(forces);
        const auto n = ts::normalize(s);
        py::dict out;
        out["values"] = from_vec3_list(n.values);
        out["mean"] = n.mean;
        out["stddev"] = n.stddev;
        out["zero_stddev"] = n.zero_stddev;
        return out;
      },
      py::arg("time"), py::arg("forces"),
      "Per-axis whitening (population convention); constant axes are flagged");

  m.def(
      "coarse_align",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        return ts::coarse_align(values_series(a), values_series(b));
      },
      py::arg("a"), py::arg("b"),
      "Lag (samples) by which b trails a, from the summed cross-correlation");

  m.def(
      "dtw_align",
      [](const Eigen::MatrixXd& reference, const Eigen::MatrixXd& query, bool open_ended,
         int window) {
        const auto path =
            ts::dtw_align(values_series(reference), values_series(query), open_ended, window);
        return py::make_tuple(path.cost, path.pairs);
      },
      py::arg("reference"), py::arg("query"), py::arg("open_ended") = true,
      py::arg("window") = -1,
      "Symmetric2 DTW; returns (normalized cost, list of (ref, query) index pairs)");

  m.def(
      "align_files",
      [](const std::vector<std::string>& csv_paths, bool open_ended, int window,
         int reference) {
        std::vector<ts::ForceSeries> raw;
        for (const auto& p : csv_paths) raw.push_back(ts::read_csv(p));
        ts::AlignConfig config;
        config.open_ended = open_ended;
        config.dtw_window = window;
        config.reference = reference;
        return ts::to_json(ts::build_dataset(raw, config)).dump();
      },
      py::arg("csv_paths"), py::arg("open_ended") = true, py::arg("window") = -1,
      py::arg("reference") = -1,
      "Full alignment pipeline over trial CSVs; returns the dataset as a JSON string");

  // ---- GP disturbance model ----
  py::class_<gp::PeriodicKernel>(m, "PeriodicKernel")
      .def(py::init([](double period, double length_scale, double signal_variance) {
             gp::PeriodicKernel k{period, length_scale, signal_variance};
             k.validate();
             return k;
           }),
           py::arg("period"), py::arg("length_scale"), py::arg("signal_variance"))
      .def_readonly("period", &gp::PeriodicKernel::period)
      .def_readonly("length_scale", &gp::PeriodicKernel::length_scale)
      .def_readonly("signal_variance", &gp::PeriodicKernel::signal_variance)
      .def("__call__", &gp::PeriodicKernel::operator());

  py::class_<gp::GpModel, std::shared_ptr<gp::GpModel>>(m, "GpModel")
      .def(py::init([](const std::vector<double>& time, const Eigen::MatrixXd& targets,
                       const gp::PeriodicKernel& kernel, double noise_variance) {
             std::array<gp::AxisHyper, 3> axes;
             for (auto& a : axes) a = {kernel, noise_variance};
             return gp::GpModel(time, to_vec3_list(targets), axes);
           }),
           py::arg("time"), py::arg("targets"), py::arg("kernel"), py::arg("noise_variance"),
           "Condition a shared kernel on N x 3 targets")
      .def("posterior",
           [](const gp::GpModel& model, const std::vector<double>& times) {
             Eigen::MatrixXd mean(static_cast<Eigen::Index>(times.size()), 3);
             Eigen::MatrixXd stddev(static_cast<Eigen::Index>(times.size()), 3);
             for (int axis = 0; axis < 3; ++axis) {
               const auto post = model.posterior_axis(axis, times);
               mean.col(axis) = post.mean;
               stddev.col(axis) = post.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
             }
             return py::make_tuple(mean, stddev);
           },
           py::arg("times"), "Posterior mean and standard deviation per axis")
      .def("posterior_cov",
           [](const gp::GpModel& model, int axis, const std::vector<double>& times) {
             return model.posterior_axis(axis, times).cov;
           },
           py::arg("axis"), py::arg("times"))
      .def("sample",
           [](const gp::GpModel& model, const std::vector<double>& times, std::uint64_t seed) {
             return from_vec3_list(model.sample(times, seed));
           },
           py::arg("times"), py::arg("seed"))
      .def("nll", &gp::GpModel::nll_axis, py::arg("axis"))
      .def("hyperparameters",
           [](const gp::GpModel& model) {
             py::list out;
             for (const auto& a : model.axes()) {
               py::dict d;
               d["period"] = a.kernel.period;
               d["length_scale"] = a.kernel.length_scale;
               d["signal_variance"] = a.kernel.signal_variance;
               d["noise_variance"] = a.noise_variance;
               out.append(d);
             }
             return out;
           })
      .def("save", &gp::GpModel::save, py::arg("path"))
      .def_static("load", &gp::GpModel::load, py::arg("path"));

  m.def(
      "fit_gp",
      [](const std::vector<double>& time, const Eigen::MatrixXd& residuals, int restarts,
         double noise_init, int fit_points, int max_points, std::uint64_t seed) {
        gp::ResidualTargets targets;
        targets.time = time;
        targets.residual = to_vec3_list(residuals);
        targets.zero_model = true;
        gp::FitConfig config;
        config.restarts = restarts;
        config.noise_init = noise_init;
        config.fit_max_points = fit_points;
        config.seed = seed;
        return gp::fit_model(targets, config, max_points);
      },
      py::arg("time"), py::arg("residuals"), py::arg("restarts") = 8,
      py::arg("noise_init") = 0.01, py::arg("fit_points") = 256, py::arg("max_points") = 1500,
      py::arg("seed") = 0,
      "Multi-start NLL minimisation per axis; returns the conditioned model");

  // ---- mechanistic cutting force ----
  py::class_<mech::ToolModel>(m, "ToolModel")
      .def_static("uniform", &mech::ToolModel::uniform, py::arg("n_flutes"),
                  py::arg("edge_thickness"), py::arg("k_c"), py::arg("k_e"),
                  py::arg("tool_radius"))
      .def_readwrite("n_flutes", &mech::ToolModel::n_flutes)
      .def_readwrite("k_c", &mech::ToolModel::k_c)
      .def_readwrite("k_e", &mech::ToolModel::k_e)
      .def_readwrite("tool_radius", &mech::ToolModel::tool_radius);

  m.def(
      "chip_thickness",
      [](double theta, double spindle_rps, double feed_rate, int n_flutes) {
        return mech::chip_thickness(theta, {spindle_rps, feed_rate, 0.0}, n_flutes);
      },
      py::arg("theta"), py::arg("spindle_rps"), py::arg("feed_rate"), py::arg("n_flutes"));

  m.def(
      "flute_force",
      [](const mech::ToolModel& tool, int flute, double chip) {
        return Vec3(mech::flute_force(tool, flute, chip));
      },
      py::arg("tool"), py::arg("flute"), py::arg("chip"));

  m.def(
      "total_force",
      [](const mech::ToolModel& tool, double spindle_rps, double feed_rate,
         double rotation_angle, const std::vector<bool>& engaged) {
        return Vec3(mech::total_force(tool, {spindle_rps, feed_rate, rotation_angle},
                                      {engaged}));
      },
      py::arg("tool"), py::arg("spindle_rps"), py::arg("feed_rate"),
      py::arg("rotation_angle"), py::arg("engaged"),
      "Summed engaged-flute force in the tool model frame");

  // ---- simulator ----
  py::class_<sim::EnvConfig>(m, "EnvConfig")
      .def(py::init<>())
      .def_static("from_json",
                  [](const std::string& text) {
                    return sim::EnvConfig::from_json(nlohmann::json::parse(text));
                  },
                  py::arg("text"))
      .def_static("load", &sim::EnvConfig::load, py::arg("path"))
      .def("to_json", [](const sim::EnvConfig& c) { return c.to_json().dump(2); })
      .def_readwrite("dt", &sim::EnvConfig::dt)
      .def_readwrite("horizon", &sim::EnvConfig::horizon)
      .def_readwrite("ndelta_init", &sim::EnvConfig::ndelta_init)
      .def("set_augmentation",
           [](sim::EnvConfig& c, std::shared_ptr<gp::GpModel> model, double sensor_sigma) {
             c.augmentation.model = std::move(model);
             c.augmentation.sensor_sigma = sensor_sigma;
           },
           py::arg("model"), py::arg("sensor_sigma") = 0.0);

  py::class_<sim::CutEnv>(m, "CutEnv")
      .def(py::init<sim::EnvConfig>(), py::arg("config"))
      .def("reset",
           [](sim::CutEnv& env, std::uint64_t seed) { return env.reset(seed).vec(); },
           py::arg("seed"))
      .def("step",
           [](sim::CutEnv& env, const Eigen::Matrix<double, 5, 1>& action) {
             const auto r = env.step(sim::Action::from_vec(action));
             return py::make_tuple(r.obs.vec(), r.reward, r.done);
           },
           py::arg("action"), "Returns (observation, reward, done)")
      .def("done", &sim::CutEnv::done)
      .def("time", &sim::CutEnv::time)
      .def("mrv", &sim::CutEnv::mrv)
      .def_static("observation_layout", &sim::Observation::layout);

  // ---- policies and imitation ----
  py::class_<il::Policy>(m, "Policy")
      .def("act",
           [](const il::Policy& p, const Eigen::Matrix<double, 15, 1>& obs) {
             return p.act(sim::Observation::from_vec(obs)).vec();
           },
           py::arg("observation"))
      .def("kind",
           [](const il::Policy& p) {
             switch (p.kind) {
               case il::Policy::Kind::ScriptedExpert: return "scripted_expert";
               case il::Policy::Kind::Linear: return "linear";
               default: return "learned";
             }
           })
      .def("provenance", [](const il::Policy& p) { return p.provenance.dump(); })
      .def("save", &il::Policy::save, py::arg("path"))
      .def_static("load", &il::Policy::load, py::arg("path"));

  m.def(
      "scripted_expert",
      [](const sim::EnvConfig& env) { return il::scripted_expert({}, env.bounds); },
      py::arg("env_config"));

  m.def(
      "run_imitation",
      [](const sim::EnvConfig& env, const std::string& algo,
         std::shared_ptr<gp::GpModel> gp_model, int episodes, double lr, int batch,
         std::uint64_t seed) {
        il::ImitationConfig config;
        config.episodes = episodes;
        config.lr = lr;
        config.batch = batch;
        config.seed = seed;
        const auto expert = il::scripted_expert({}, env.bounds);
        if (algo == "bc") {
          config.algorithm = il::ImitationConfig::Algo::BC;
          return il::run_bc(env, expert, gp_model.get(), config);
        }
        if (algo == "dagger") {
          config.algorithm = il::ImitationConfig::Algo::DAgger;
          return il::run_dagger(env, expert, gp_model.get(), config);
        }
        throw std::invalid_argument("algo must be 'bc' or 'dagger'");
      },
      py::arg("env_config"), py::arg("algo"), py::arg("gp_model") = nullptr,
      py::arg("episodes") = 50, py::arg("lr") = 1e-3, py::arg("batch") = 64,
      py::arg("seed") = 0,
      "Train a surrogate target-domain policy against the scripted expert");

  // ---- evaluation ----
  m.def(
      "rollout",
      [](sim::CutEnv& env, const il::Policy& policy, int max_steps) {
        const auto traj = sim::rollout(env, policy.fn(), max_steps);
        py::dict out;
        out["rewards"] = traj.rewards;
        Eigen::MatrixXd actions(static_cast<Eigen::Index>(traj.actions.size()), 5);
        for (std::size_t i = 0; i < traj.actions.size(); ++i)
          actions.row(static_cast<Eigen::Index>(i)) = traj.actions[i].vec().transpose();
        out["actions"] = actions;
        out["total_reward"] = traj.total_reward();
        return out;
      },
      py::arg("env"), py::arg("policy"), py::arg("max_steps"),
      "Roll the policy from the env's current state");

  m.def(
      "welch_t_test",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = eval::welch_t_test(a, b);
        py::dict out;
        out["t"] = r.t;
        out["dof"] = r.dof;
        out["p"] = r.p;
        out["valid"] = r.valid;
        return out;
      },
      py::arg("a"), py::arg("b"), "Unpaired two-tailed t-test with unequal variances");

  m.def("moving_average", &eval::moving_average, py::arg("values"), py::arg("window"));

  // ---- synthetic data ----
  m.def(
      "synth_trials",
      [](int trials, int samples, double period, double noise_std, int max_lag,
         double warp_amplitude, std::uint64_t seed, const std::string& out_dir) {
        synth::SynthConfig config;
        config.trials = trials;
        config.samples = samples;
        config.period = period;
        config.noise_std = noise_std;
        config.max_lag = max_lag;
        config.warp_amplitude = warp_amplitude;
        const auto result = synth::generate(config, seed);
        if (!out_dir.empty()) synth::write_trials(result, out_dir);
        return result.ground_truth.dump();
      },
      py::arg("trials") = 14, py::arg("samples") = 2500, py::arg("period") = 0.2,
      py::arg("noise_std") = 0.1, py::arg("max_lag") = 120, py::arg("warp_amplitude") = 0.0,
      py::arg("seed") = 0, py::arg("out_dir") = "",
      "Generate ground-truth trials; returns the ground truth as a JSON string");
}
