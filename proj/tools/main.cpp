#include "cutkit/eval.hpp"
#include "cutkit/gp.hpp"
#include "cutkit/imitation.hpp"
#include "cutkit/manifest.hpp"
#include "cutkit/mechanistic.hpp"
#include "cutkit/sim.hpp"
#include "cutkit/synth.hpp"
#include "cutkit/timeseries.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  bool verbose = false;
};

void info(const GlobalOptions& g, const std::string& msg) {
  if (g.verbose) std::cerr << "[cutkit] " << msg << "\n";
}

std::vector<std::string> collect_argv(int argc, char** argv) {
  std::vector<std::string> out;
  for (int i = 0; i < argc; ++i) out.emplace_back(argv[i]);
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  in >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << text;
}

std::vector<double> parse_times(const std::string& spec) {
  std::vector<double> out;
  std::string content = spec;
  if (fs::exists(spec)) {
    std::ifstream in(spec);
    content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::string token;
  for (char c : content) {
    if (c == ',' || c == '\n' || c == ' ' || c == '\t' || c == '\r') {
      if (!token.empty()) out.push_back(std::stod(token));
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) out.push_back(std::stod(token));
  if (out.empty()) throw std::runtime_error("no test times in: " + spec);
  return out;
}

// Built-in strategies. The baseline holds the nominal process parameters
// (feed at nominal, 1 mm DoC, gains at their initial value).
cutkit::il::Policy builtin_policy(const std::string& name, const cutkit::sim::EnvConfig& env) {
  using cutkit::il::ExpertConfig;
  if (name == "expert") return cutkit::il::scripted_expert(ExpertConfig{}, env.bounds);
  if (name == "baseline") {
    ExpertConfig c;
    c.contact_force = 1e30;  // never leaves the parameter-holding phase
    c.doc_target = 1.0;
    c.feed_approach = 0.0;
    c.kp_high = env.kp_init.x();
    return cutkit::il::scripted_expert(c, env.bounds);
  }
  if (name == "null") {
    ExpertConfig c;
    c.contact_force = 1e30;
    c.doc_target = 0.0;
    c.feed_approach = 0.0;
    c.kp_high = env.kp_init.x();
    c.drive_gain = 0.0;
    return cutkit::il::scripted_expert(c, env.bounds);
  }
  return cutkit::il::Policy::load(name);
}

cutkit::eval::StrategyReport evaluate_parallel(const cutkit::sim::EnvConfig& env_config,
                                               const cutkit::il::Policy& policy,
                                               const std::string& strategy,
                                               const std::string& domain, int episodes,
                                               std::uint64_t seed_base, int threads,
                                               std::vector<cutkit::sim::Trajectory>* traces,
                                               int trace_count) {
  using cutkit::eval::StrategyReport;
  if (threads <= 1) {
    std::vector<cutkit::sim::Trajectory> all;
    StrategyReport r = cutkit::eval::evaluate_strategy(env_config, policy.fn(), strategy,
                                                       domain, episodes, seed_base,
                                                       traces ? &all : nullptr);
    if (traces)
      for (int i = 0; i < std::min<int>(trace_count, all.size()); ++i)
        traces->push_back(std::move(all[i]));
    return r;
  }

  StrategyReport report;
  report.strategy = strategy;
  report.domain = domain;
  report.episodes.resize(episodes);
  std::vector<cutkit::sim::Trajectory> kept(traces ? trace_count : 0);
  const int max_steps = static_cast<int>(std::ceil(env_config.horizon / env_config.dt)) + 1;
  std::vector<std::thread> pool;
  const int n_threads = std::min(threads, episodes);
  for (int w = 0; w < n_threads; ++w) {
    pool.emplace_back([&, w]() {
      cutkit::sim::CutEnv env(env_config);
      const auto fn = policy.fn();
      for (int ep = w; ep < episodes; ep += n_threads) {
        env.reset(cutkit::Rng::derive(seed_base, static_cast<std::uint64_t>(ep)).next_u64());
        auto traj = cutkit::sim::rollout(env, fn, max_steps);
        report.episodes[ep] =
            cutkit::eval::metrics_from_trajectory(traj, env_config.weights, env_config.dt);
        if (traces && ep < trace_count) kept[ep] = std::move(traj);
      }
    });
  }
  for (auto& t : pool) t.join();
  if (traces)
    for (auto& t : kept) traces->push_back(std::move(t));
  return report;
}

int cmd_synth(const GlobalOptions& g, const std::vector<std::string>& argv,
              const std::string& config_path, const cutkit::synth::SynthConfig& overrides,
              bool have_config, const std::string& out_dir) {
  cutkit::synth::SynthConfig config = overrides;
  std::vector<std::string> inputs;
  if (have_config) {
    config = cutkit::synth::SynthConfig::from_json(read_json_file(config_path));
    inputs.push_back(config_path);
  }
  auto result = cutkit::synth::generate(config, g.seed);
  cutkit::synth::write_trials(result, out_dir);
  auto manifest = cutkit::cli::RunManifest::make(argv, config.to_json(), g.seed, inputs);
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  info(g, "wrote " + std::to_string(result.trials.size()) + " trials to " + out_dir);
  return 0;
}

int cmd_align(const GlobalOptions& g, const std::vector<std::string>& argv,
              const std::string& input_dir, const std::string& reference, bool open_ended,
              int window, const std::string& out_file) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(input_dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no .csv trials in " + input_dir);

  std::vector<cutkit::ts::ForceSeries> raw;
  for (const auto& f : files) raw.push_back(cutkit::ts::read_csv(f));

  cutkit::ts::AlignConfig config;
  config.open_ended = open_ended;
  config.dtw_window = window;
  if (reference != "auto") config.reference = std::stoi(reference);

  const auto dataset = cutkit::ts::build_dataset(raw, config);
  cutkit::ts::save_dataset(dataset, out_file);

  json cj = {{"reference", reference}, {"open_ended", open_ended}, {"window", window}};
  auto manifest = cutkit::cli::RunManifest::make(argv, cj, g.seed, files);
  manifest.write(out_file + ".manifest.json");
  info(g, "aligned " + std::to_string(dataset.series.size()) + " series onto " +
              std::to_string(dataset.time_grid.size()) + " grid points");
  return 0;
}

int cmd_fit_gp(const GlobalOptions& g, const std::vector<std::string>& argv,
               const std::string& dataset_path, int restarts, double noise_init,
               int max_points, int fit_points, const std::string& out_file) {
  const auto dataset = cutkit::ts::load_dataset(dataset_path);
  // Free-running recordings: no mechanistic context on the aligned grid, so
  // the disturbance targets are the measured forces themselves.
  auto targets = cutkit::gp::compute_residuals(dataset, {});

  cutkit::gp::FitConfig config;
  config.restarts = restarts;
  config.noise_init = noise_init;
  config.fit_max_points = fit_points;
  config.seed = g.seed;
  auto model = cutkit::gp::fit_model(targets, config, max_points);
  model.meta["dataset_hash"] = cutkit::hex64(cutkit::hash_file(dataset_path));
  model.save(out_file);

  json cj = {{"restarts", restarts},
             {"noise_init", noise_init},
             {"max_points", max_points},
             {"fit_points", fit_points}};
  auto manifest = cutkit::cli::RunManifest::make(argv, cj, g.seed, {dataset_path});
  manifest.write(out_file + ".manifest.json");
  for (int a = 0; a < 3; ++a)
    info(g, "axis " + std::to_string(a) +
                ": p=" + std::to_string(model.axes()[a].kernel.period) +
                " l=" + std::to_string(model.axes()[a].kernel.length_scale));
  return 0;
}

int cmd_gp_predict(const GlobalOptions& g, const std::vector<std::string>& argv,
                   const std::string& model_path, const std::string& times_spec, int n_samples,
                   const std::string& out_file) {
  const auto model = cutkit::gp::GpModel::load(model_path);
  const auto times = parse_times(times_spec);

  json out;
  out["times"] = times;
  json mean = json::array(), stddev = json::array();
  std::array<cutkit::gp::GpModel::Posterior, 3> posts;
  for (int a = 0; a < 3; ++a) posts[a] = model.posterior_axis(a, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    mean.push_back({posts[0].mean[i], posts[1].mean[i], posts[2].mean[i]});
    stddev.push_back({std::sqrt(std::max(0.0, posts[0].cov(i, i))),
                      std::sqrt(std::max(0.0, posts[1].cov(i, i))),
                      std::sqrt(std::max(0.0, posts[2].cov(i, i)))});
  }
  out["mean"] = mean;
  out["stddev"] = stddev;
  json draws = json::array();
  for (int s = 0; s < n_samples; ++s) {
    const auto draw =
        model.sample(times, cutkit::Rng::derive(g.seed, static_cast<std::uint64_t>(s)).next_u64());
    json jd = json::array();
    for (const auto& v : draw) jd.push_back({v.x(), v.y(), v.z()});
    draws.push_back(jd);
  }
  out["samples"] = draws;

  if (out_file.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    write_text(out_file, out.dump(2) + "\n");
    json cj = {{"times", times_spec}, {"samples", n_samples}};
    auto manifest = cutkit::cli::RunManifest::make(argv, cj, g.seed, {model_path});
    manifest.write(out_file + ".manifest.json");
  }
  return 0;
}

int cmd_simulate(const GlobalOptions& g, const std::vector<std::string>& argv,
                 const std::string& env_path, const std::string& policy_spec, int episodes,
                 const std::string& out_dir) {
  const auto env_config = cutkit::sim::EnvConfig::load(env_path);
  const auto policy = builtin_policy(policy_spec, env_config);
  fs::create_directories(out_dir);

  cutkit::sim::CutEnv env(env_config);
  const int max_steps = static_cast<int>(std::ceil(env_config.horizon / env_config.dt)) + 1;
  json summary = json::array();
  double reward_sum = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    const std::uint64_t ep_seed =
        cutkit::Rng::derive(g.seed, static_cast<std::uint64_t>(ep)).next_u64();
    env.reset(ep_seed);
    const auto traj = cutkit::sim::rollout(env, policy.fn(), max_steps);
    char name[32];
    std::snprintf(name, sizeof(name), "episode_%03d.csv", ep);
    cutkit::sim::write_trajectory_csv(traj, (fs::path(out_dir) / name).string());
    const double reward = traj.total_reward();
    reward_sum += reward;
    summary.push_back({{"episode", ep},
                       {"seed", ep_seed},
                       {"reward", reward},
                       {"steps", traj.states.size()},
                       {"mrv", env.mrv()},
                       {"time", env.time()}});
  }
  json out = {{"episodes", summary},
              {"mean_reward", episodes > 0 ? reward_sum / episodes : 0.0},
              {"policy", policy_spec}};
  write_text((fs::path(out_dir) / "summary.json").string(), out.dump(2) + "\n");

  std::vector<std::string> inputs = {env_path};
  if (!env_config.gp_model_path.empty()) inputs.push_back(env_config.gp_model_path);
  if (fs::exists(policy_spec)) inputs.push_back(policy_spec);
  auto manifest =
      cutkit::cli::RunManifest::make(argv, env_config.to_json(), g.seed, inputs);
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  info(g, "simulated " + std::to_string(episodes) + " episodes");
  return 0;
}

int cmd_imitate(const GlobalOptions& g, const std::vector<std::string>& argv,
                const std::string& env_path, const std::string& gp_path,
                const std::string& algo, int episodes, double lr, int batch,
                const std::string& out_file) {
  const auto env_config = cutkit::sim::EnvConfig::load(env_path);
  std::optional<cutkit::gp::GpModel> gp_model;
  if (!gp_path.empty()) gp_model = cutkit::gp::GpModel::load(gp_path);

  cutkit::il::ImitationConfig config;
  config.algorithm = algo == "bc" ? cutkit::il::ImitationConfig::Algo::BC
                                  : cutkit::il::ImitationConfig::Algo::DAgger;
  config.episodes = episodes;
  config.lr = lr;
  config.batch = batch;
  config.seed = g.seed;

  const auto expert = cutkit::il::scripted_expert({}, env_config.bounds);
  const auto trained =
      algo == "bc"
          ? cutkit::il::run_bc(env_config, expert, gp_model ? &*gp_model : nullptr, config)
          : cutkit::il::run_dagger(env_config, expert, gp_model ? &*gp_model : nullptr, config);
  trained.save(out_file);

  json cj = {{"algo", algo}, {"episodes", episodes}, {"lr", lr}, {"batch", batch}};
  std::vector<std::string> inputs = {env_path};
  if (!gp_path.empty()) inputs.push_back(gp_path);
  auto manifest = cutkit::cli::RunManifest::make(argv, cj, g.seed, inputs);
  manifest.write(out_file + ".manifest.json");
  info(g, "trained " + algo + " policy -> " + out_file);
  return 0;
}

int cmd_evaluate(const GlobalOptions& g, const std::vector<std::string>& argv,
                 const std::string& env_path, const std::string& policies_spec, bool baseline,
                 bool expert, int episodes, std::uint64_t seed_base,
                 const std::string& domains_spec, int trace_episodes,
                 const std::string& out_dir) {
  const auto env_config = cutkit::sim::EnvConfig::load(env_path);
  fs::create_directories(out_dir);

  std::vector<std::pair<std::string, cutkit::il::Policy>> strategies;
  if (baseline) strategies.emplace_back("baseline", builtin_policy("baseline", env_config));
  if (expert) strategies.emplace_back("expert", builtin_policy("expert", env_config));
  std::vector<std::string> policy_files;
  if (!policies_spec.empty()) {
    std::string token;
    for (char c : policies_spec + ",") {
      if (c == ',') {
        if (!token.empty()) {
          strategies.emplace_back(fs::path(token).stem().string(),
                                  cutkit::il::Policy::load(token));
          policy_files.push_back(token);
        }
        token.clear();
      } else {
        token += c;
      }
    }
  }
  if (strategies.empty()) throw std::runtime_error("no strategies to evaluate");

  std::vector<std::string> domains;
  if (domains_spec == "both") {
    domains = {"base"};
    if (env_config.augmentation.enabled()) domains.push_back("augmented");
  } else {
    domains = {domains_spec};
  }

  std::vector<cutkit::eval::StrategyReport> reports;
  for (const auto& domain : domains) {
    cutkit::sim::EnvConfig domain_config = env_config;
    if (domain == "base") {
      domain_config.augmentation = {};
      domain_config.gp_model_path.clear();
    } else if (!env_config.augmentation.enabled()) {
      throw std::runtime_error("augmented domain requested but no augmentation configured");
    }
    for (const auto& [name, policy] : strategies) {
      info(g, "evaluating " + name + " in " + domain);
      std::vector<cutkit::sim::Trajectory> traces;
      reports.push_back(evaluate_parallel(domain_config, policy, name, domain, episodes,
                                          seed_base, g.threads,
                                          trace_episodes > 0 ? &traces : nullptr,
                                          trace_episodes));
      if (!traces.empty())
        cutkit::eval::export_traces(traces, (fs::path(out_dir) / "traces").string(),
                                    name + "_" + domain);
    }
  }

  const auto comparison = cutkit::eval::compare(reports);
  write_text((fs::path(out_dir) / "report.json").string(), comparison.to_json().dump(2) + "\n");
  write_text((fs::path(out_dir) / "table.csv").string(), comparison.table_csv());

  std::vector<std::string> inputs = {env_path};
  for (const auto& f : policy_files) inputs.push_back(f);
  if (!env_config.gp_model_path.empty()) inputs.push_back(env_config.gp_model_path);
  json cj = {{"episodes", episodes}, {"domains", domains}, {"seed_base", seed_base}};
  auto manifest = cutkit::cli::RunManifest::make(argv, cj, seed_base, inputs);
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& format) {
  const auto j = read_json_file((fs::path(in_dir) / "report.json").string());
  if (format == "json") {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::vector<cutkit::eval::StrategyReport> reports;
  for (const auto& jr : j.at("reports"))
    reports.push_back(cutkit::eval::StrategyReport::from_json(jr));
  const auto comparison = cutkit::eval::compare(reports);
  std::cout << comparison.table_csv();
  std::cout << "\npair,t,dof,p\n";
  for (const auto& p : comparison.pairwise) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s vs %s,%.4g,%.4g,%.4g\n", p.a.c_str(), p.b.c_str(),
                  p.test.t, p.test.dof, p.test.p);
    std::cout << buf;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sim-to-real transfer toolkit for robotic cutting"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed; all randomness derives from it");
  app.add_option("--threads", g.threads, "Worker threads for rollout batches");
  app.add_flag("--verbose", g.verbose, "Progress output on stderr");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic force trials with ground truth");
  std::string synth_config, synth_out = "synth";
  cutkit::synth::SynthConfig synth_overrides;
  synth->add_option("--config", synth_config, "Synth config JSON");
  synth->add_option("--trials", synth_overrides.trials);
  synth->add_option("--samples", synth_overrides.samples);
  synth->add_option("--period", synth_overrides.period);
  synth->add_option("--noise", synth_overrides.noise_std);
  synth->add_option("--max-lag", synth_overrides.max_lag);
  synth->add_option("--warp", synth_overrides.warp_amplitude);
  synth->add_option("--out", synth_out, "Output directory")->required();

  // align
  auto* align = app.add_subcommand("align", "Align raw force recordings into a dataset");
  std::string align_input, align_reference = "auto", align_out = "dataset.json";
  bool align_open_ended = false, align_closed = false;
  int align_window = -1;
  align->add_option("--input", align_input, "Directory of t,fx,fy,fz CSV trials")->required();
  align->add_option("--reference", align_reference, "auto or series index");
  align->add_flag("--open-ended", align_open_ended, "Open-ended DTW (default)");
  align->add_flag("--closed", align_closed, "Force closed-end DTW");
  align->add_option("--window", align_window, "Sakoe-Chiba half-width, -1 unbounded");
  align->add_option("--out", align_out)->required();

  // fit-gp
  auto* fitgp = app.add_subcommand("fit-gp", "Fit the periodic GP disturbance model");
  std::string fitgp_dataset, fitgp_out = "gp.json";
  int fitgp_restarts = 8, fitgp_max_points = 1500, fitgp_fit_points = 256;
  double fitgp_noise = 0.01;
  fitgp->add_option("--dataset", fitgp_dataset)->required();
  fitgp->add_option("--restarts", fitgp_restarts);
  fitgp->add_option("--noise-init", fitgp_noise, "Sensor noise variance N^2");
  fitgp->add_option("--max-points", fitgp_max_points, "Condensed training size");
  fitgp->add_option("--fit-points", fitgp_fit_points, "Condensed size for the search");
  fitgp->add_option("--out", fitgp_out)->required();

  // gp-predict
  auto* gppred = app.add_subcommand("gp-predict", "Posterior mean/std and sample draws");
  std::string gppred_model, gppred_times, gppred_out;
  int gppred_samples = 0;
  gppred->add_option("--model", gppred_model)->required();
  gppred->add_option("--times", gppred_times, "CSV file of times or inline comma list")
      ->required();
  gppred->add_option("--samples", gppred_samples, "Number of posterior draws");
  gppred->add_option("--out", gppred_out, "Output JSON (stdout when omitted)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Roll out a policy in the cutting simulator");
  std::string sim_env, sim_policy = "expert", sim_out = "sim_out";
  int sim_episodes = 1;
  simulate->add_option("--env", sim_env)->required();
  simulate->add_option("--policy", sim_policy, "Policy JSON or builtin expert|baseline|null");
  simulate->add_option("--episodes", sim_episodes);
  simulate->add_option("--out", sim_out)->required();

  // imitate
  auto* imitate = app.add_subcommand("imitate", "Train a surrogate target-domain policy");
  std::string imi_env, imi_gp, imi_algo = "dagger", imi_out = "policy.json";
  int imi_episodes = 50, imi_batch = 64;
  double imi_lr = 1e-3;
  imitate->add_option("--env", imi_env)->required();
  imitate->add_option("--gp", imi_gp, "GP disturbance model JSON");
  imitate->add_option("--algo", imi_algo)->check(CLI::IsMember({"bc", "dagger"}));
  imitate->add_option("--episodes", imi_episodes);
  imitate->add_option("--lr", imi_lr);
  imitate->add_option("--batch", imi_batch);
  imitate->add_option("--out", imi_out)->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compare strategies across domains");
  std::string eval_env, eval_policies, eval_domains = "both", eval_out = "report";
  bool eval_baseline = false, eval_expert = false;
  int eval_episodes = 50, eval_traces = 1;
  std::uint64_t eval_seed_base = 0;
  evaluate->add_option("--env", eval_env)->required();
  evaluate->add_option("--policies", eval_policies, "Comma-separated policy JSON paths");
  evaluate->add_flag("--baseline", eval_baseline, "Include the fixed-parameter baseline");
  evaluate->add_flag("--expert", eval_expert, "Include the scripted expert");
  evaluate->add_option("--episodes", eval_episodes);
  evaluate->add_option("--seed-base", eval_seed_base);
  evaluate->add_option("--domains", eval_domains)->check(CLI::IsMember({"both", "base", "augmented"}));
  evaluate->add_option("--traces", eval_traces, "Episodes to export as trace CSVs");
  evaluate->add_option("--out", eval_out)->required();

  // report
  auto* report = app.add_subcommand("report", "Render a saved evaluation report");
  std::string rep_in, rep_format = "csv";
  report->add_option("--in", rep_in)->required();
  report->add_option("--format", rep_format)->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const auto raw_argv = collect_argv(argc, argv);
  try {
    if (synth->parsed())
      return cmd_synth(g, raw_argv, synth_config, synth_overrides, !synth_config.empty(),
                       synth_out);
    if (align->parsed())
      return cmd_align(g, raw_argv, align_input, align_reference, !align_closed, align_window,
                       align_out);
    if (fitgp->parsed())
      return cmd_fit_gp(g, raw_argv, fitgp_dataset, fitgp_restarts, fitgp_noise,
                        fitgp_max_points, fitgp_fit_points, fitgp_out);
    if (gppred->parsed())
      return cmd_gp_predict(g, raw_argv, gppred_model, gppred_times, gppred_samples, gppred_out);
    if (simulate->parsed())
      return cmd_simulate(g, raw_argv, sim_env, sim_policy, sim_episodes, sim_out);
    if (imitate->parsed())
      return cmd_imitate(g, raw_argv, imi_env, imi_gp, imi_algo, imi_episodes, imi_lr,
                         imi_batch, imi_out);
    if (evaluate->parsed())
      return cmd_evaluate(g, raw_argv, eval_env, eval_policies, eval_baseline, eval_expert,
                          eval_episodes, eval_seed_base, eval_domains, eval_traces, eval_out);
    if (report->parsed()) return cmd_report(rep_in, rep_format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
