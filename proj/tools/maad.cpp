// maad: expert collection, training, evaluation, oracle verification and
// learning-curve plots.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "maad/checkpoint.hpp"
#include "maad/config.hpp"
#include "maad/errors.hpp"
#include "maad/oracle.hpp"
#include "maad/trainer.hpp"

namespace fs = std::filesystem;
using namespace maad;

namespace {

std::string anchor_path(const std::string& dataset) { return dataset + ".anchor.json"; }

void save_anchor(const std::string& path, const ExpertAnchor& a) {
  const nlohmann::json doc{{"expert_return", a.expert_return},
                           {"random_return", a.random_return},
                           {"episodes", a.episodes},
                           {"seed_base", a.seed_base}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << doc.dump(2) << "\n";
}

// Reuses the stored anchor when it was computed on the same evaluation seeds.
ExpertAnchor load_or_compute_anchor(const RunConfig& cfg) {
  const std::string path = anchor_path(cfg.expert_path);
  std::ifstream in(path);
  if (in) {
    try {
      const auto doc = nlohmann::json::parse(in);
      ExpertAnchor a;
      a.expert_return = doc.at("expert_return").get<double>();
      a.random_return = doc.at("random_return").get<double>();
      a.episodes = doc.at("episodes").get<int>();
      a.seed_base = doc.at("seed_base").get<std::uint64_t>();
      if (a.episodes == cfg.train.eval_episodes && a.seed_base == cfg.train.eval_seed_base) return a;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("anchor file '" + path + "': " + e.what(), 1);
    }
  }
  return compute_anchor(cfg.env, cfg.train.eval_episodes, cfg.train.eval_seed_base);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw UsageError("bad seed '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("seed list is empty");
  return out;
}

// ---------------------------------------------------------------------------

int cmd_collect(const std::string& env_name, int position_dim, int episodes, std::uint64_t seed,
                const std::string& out, int anchor_episodes, std::uint64_t eval_seed_base) {
  const EnvSpec env = env_from_name(env_name, position_dim > 0 ? position_dim
                                              : env_name == "mirror_actuator" ? 1 : 2);
  const ActionSource expert = [&](const Vec& s, Rng&) {
    return expert_action(env, EnvState::from_vector(s));
  };
  std::vector<DemoTrajectory> data;
  for (int i = 0; i < episodes; ++i) data.push_back(collect_rollout(expert, env, seed + i));
  save_trajectories(out, data);
  const ExpertAnchor anchor = compute_anchor(env, anchor_episodes, eval_seed_base);
  save_anchor(anchor_path(out), anchor);
  double mean = 0.0;
  for (const auto& d : data) mean += d.ep_return / episodes;
  std::printf("wrote %d trajectories to %s (mean return %.4f)\n", episodes, out.c_str(), mean);
  std::printf("anchor: expert %.4f, zero policy %.4f over %d episodes\n", anchor.expert_return,
              anchor.random_return, anchor_episodes);
  return 0;
}

int cmd_train(RunConfig cfg) {
  apply_algorithm(cfg);
  cfg.train = resolve_config(cfg.train, cfg.env);
  if (cfg.expert_path.empty()) throw UsageError("train: no expert dataset given");
  const std::vector<DemoTrajectory> experts = load_trajectories(cfg.expert_path);
  if ((cfg.algorithm == "bc" || cfg.algorithm == "gail-bc"))
    for (const auto& e : experts)
      if (!e.has_actions()) throw UsageError(cfg.algorithm + " needs expert actions in the dataset");
  const ExpertAnchor anchor = load_or_compute_anchor(cfg);

  const fs::path root(cfg.output_dir);
  fs::create_directories(root);
  const std::string resolved = to_ini(cfg);
  write_text(root / "config.ini", resolved);
  const std::string hash = fnv1a_hex(resolved);
  std::cout << resolved << std::flush;

  for (const std::uint64_t seed : cfg.seeds) {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    const fs::path dir = root / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    std::ofstream metrics(dir / "metrics.csv"), timing(dir / "timing.csv");
    if (!metrics || !timing) throw IoError("cannot write metrics in '" + dir.string() + "'");
    metrics << metrics_csv_header() << "\n";
    timing << "iteration,env_steps,wall_time_s\n";
    const auto on_row = [&](const Metrics& m) {
      metrics << metrics_csv_row(m) << "\n" << std::flush;
      timing << m.iteration << "," << m.env_steps << "," << m.wall_time_s << "\n" << std::flush;
      std::fprintf(stderr, "[%s seed %llu] iter %d steps %lld normalized %.4f\n",
                   cfg.algorithm.c_str(), static_cast<unsigned long long>(seed), m.iteration,
                   static_cast<long long>(m.env_steps), m.normalized_return);
    };
    if (cfg.supervised_only()) {
      GaussianPolicy policy;
      train_bc(tc, cfg.env, experts, anchor, &policy, on_row);
      save_checkpoint((dir / "checkpoint.json").string(), make_checkpoint(policy, hash));
    } else {
      Trainer trainer(tc, cfg.env, experts, anchor);
      trainer.run(on_row);
      save_checkpoint((dir / "checkpoint.json").string(), make_checkpoint(trainer, hash));
    }
  }
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& ckpt_path, int episodes,
             std::uint64_t seed_base) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  if (ckpt.config_hash != fnv1a_hex(to_ini(cfg)))
    std::fprintf(stderr, "warning: checkpoint was produced by a different config\n");
  const GaussianPolicy policy = policy_from_checkpoint(ckpt);
  const EvalResult ev = evaluate(policy, cfg.env, episodes, seed_base);
  const ExpertAnchor anchor = compute_anchor(cfg.env, episodes, seed_base);
  std::printf("return %.4f +- %.4f over %d episodes (normalized %.4f)\n", ev.mean_return,
              ev.std_return, episodes, anchor.normalize(ev.mean_return));

  if (cfg.expert_path.empty()) return 0;
  const std::vector<DemoTrajectory> experts = load_trajectories(cfg.expert_path);
  std::vector<Transition> pairs;
  for (const auto& e : experts)
    if (e.has_actions()) {
      const auto p = all_pairs(e);
      pairs.insert(pairs.end(), p.begin(), p.end());
    }
  if (pairs.size() < 2) return 0;
  const TripletBatch b = to_batch(pairs);
  std::printf("policy R2 vs expert actions: %.4f\n", r_squared(policy.mean_net.forward(b.s), b.a));
  if (ckpt.has("idm.mean_net")) {
    const MdnIdm idm = idm_from_checkpoint(ckpt);
    std::printf("IDM R2 vs expert actions: %.4f\n", r_squared(idm.predict_mean(b.s, b.s_next), b.a));
  }
  return 0;
}

int cmd_verify(int instances, std::uint64_t seed, const std::string& csv_path) {
  const OracleReport rep = run_oracle_battery(instances, seed);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw IoError("cannot write '" + csv_path + "'");
    out << "instance,kl_ild,kl_ilo,kl_idd,idd_residual,lhs,kl_term,integral_term,bound_residual,"
           "sup_integral,sup_gap\n";
    char buf[512];
    for (const auto& r : rep.records) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.3e,%.17g,%.17g,%.17g,%.3e,%.17g,%.17g\n",
                    r.instance, r.idd.kl_ild, r.idd.kl_ilo, r.idd.kl_idd, r.idd.residual,
                    r.bound.lhs, r.bound.kl_term, r.bound.integral_term, r.bound.residual,
                    r.sup_integral, r.sup_gap);
      out << buf;
    }
  }
  std::printf("instances: %d\n", instances);
  std::printf("max |idd residual|:   %.3e\n", rep.max_idd_residual);
  std::printf("max |bound residual|: %.3e\n", rep.max_bound_residual);
  std::printf("max occupancy error:  %.3e\n", rep.max_occupancy_error);
  std::printf("bound holds on every instance: %s\n", rep.bound_holds ? "yes" : "no");
  std::printf("%s\n", rep.passed ? "PASS" : "FAIL");
  return rep.passed ? 0 : 1;
}

// ---------------------------------------------------------------------------
// plot

struct Curve {
  std::vector<double> steps;
  std::vector<double> values;
};

Curve read_curve(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open '" + csv.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  const auto col = [&](const std::string& name) {
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw ParseError("metrics file lacks column '" + name + "'", 1);
    return static_cast<std::size_t>(it - cols.begin());
  };
  const std::size_t c_steps = col("env_steps"), c_norm = col("normalized_return");
  Curve out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) f.push_back(c);
    if (f.size() != cols.size()) throw ParseError("wrong number of fields", n);
    out.steps.push_back(std::stod(f[c_steps]));
    out.values.push_back(std::stod(f[c_norm]));
  }
  return out;
}

struct Series {
  std::string label;
  std::vector<double> x, mid, lo, hi;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#17becf"};

void write_svg(const fs::path& path, const std::string& title, const std::vector<Series>& series) {
  const double W = 720, H = 440, L = 70, R = 170, T = 40, B = 50;
  double xmax = 1, ymin = 0, ymax = 1;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.lo[i]);
      ymax = std::max(ymax, s.hi[i]);
    }
  ymin = std::max(ymin, -1.0);
  const auto px = [&](double x) { return L + (W - L - R) * x / xmax; };
  const auto py = [&](double y) {
    y = std::clamp(y, ymin, ymax);
    return H - B - (H - T - B) * (y - ymin) / (ymax - ymin);
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << L << "\" y=\"24\" font-size=\"15\">" << title << "</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmax * k / 4, yv = ymin + (ymax - ymin) * k / 4;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
       << static_cast<long long>(xv) << "</text>\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", yv);
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << buf
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10
     << "\" text-anchor=\"middle\">environment steps</text>\n"
     << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 "
     << (T + H - B) / 2 << ")\" text-anchor=\"middle\">normalized return</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % 8];
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << "," << py(s.hi[i]) << " ";
    for (std::size_t i = s.x.size(); i-- > 0;) os << px(s.x[i]) << "," << py(s.lo[i]) << " ";
    os << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << "," << py(s.mid[i]) << " ";
    os << "\"/>\n<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" fill=\""
       << color << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  write_text(path, os.str());
}

int cmd_plot(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  fs::create_directories(out_dir);
  // env -> algorithm -> per-seed curves
  std::map<std::string, std::map<std::string, std::vector<Curve>>> runs;
  for (const auto& d : run_dirs) {
    const RunConfig cfg = load_run_config((fs::path(d) / "config.ini").string());
    for (const auto& entry : fs::directory_iterator(d)) {
      const fs::path csv = entry.path() / "metrics.csv";
      if (entry.is_directory() && fs::exists(csv))
        runs[cfg.env.name][cfg.algorithm].push_back(read_curve(csv));
    }
  }
  if (runs.empty()) throw UsageError("plot: no metrics found");

  const auto truncated = [](const std::vector<Curve>& cs) {
    std::size_t n = cs.front().values.size();
    for (const auto& c : cs) n = std::min(n, c.values.size());
    return n;
  };

  std::map<std::string, std::vector<Curve>> by_algorithm;
  for (const auto& [env, algos] : runs) {
    std::vector<Series> series;
    for (const auto& [algo, curves] : algos) {
      Series s;
      s.label = algo;
      const std::size_t n = truncated(curves);
      for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0, sq = 0.0;
        for (const auto& c : curves) mean += c.values[i] / curves.size();
        for (const auto& c : curves) sq += (c.values[i] - mean) * (c.values[i] - mean) / curves.size();
        s.x.push_back(curves.front().steps[i]);
        s.mid.push_back(mean);
        s.lo.push_back(mean - std::sqrt(sq));
        s.hi.push_back(mean + std::sqrt(sq));
      }
      series.push_back(std::move(s));
      auto& all = by_algorithm[algo];
      all.insert(all.end(), curves.begin(), curves.end());
    }
    write_svg(fs::path(out_dir) / (env + ".svg"), env + ": mean +- std across seeds", series);
  }

  std::vector<Series> medians;
  for (const auto& [algo, curves] : by_algorithm) {
    Series s;
    s.label = algo;
    const std::size_t n = truncated(curves);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v;
      for (const auto& c : curves) v.push_back(c.values[i]);
      std::sort(v.begin(), v.end());
      const double med = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
      s.x.push_back(curves.front().steps[i]);
      s.mid.push_back(med);
      s.lo.push_back(med);
      s.hi.push_back(med);
    }
    medians.push_back(std::move(s));
  }
  write_svg(fs::path(out_dir) / "median.svg", "median normalized return", medians);
  std::printf("wrote plots to %s\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imitation learning from observations with an inverse-dynamics action regularizer"};
  app.require_subcommand(1);

  auto* collect = app.add_subcommand("collect-expert", "Record scripted-expert trajectories");
  std::string c_env = "linear_point", c_out = "experts.jsonl";
  int c_pd = 0, c_episodes = 16, c_anchor = 50;
  std::uint64_t c_seed = 0, c_eval_base = TrainConfig{}.eval_seed_base;
  collect->add_option("--env", c_env, "linear_point or mirror_actuator");
  collect->add_option("--position-dim", c_pd, "Position dimensions (0 = environment default)");
  collect->add_option("--episodes", c_episodes, "Number of trajectories");
  collect->add_option("--seed", c_seed, "Seed of the first episode");
  collect->add_option("--out", c_out, "Output JSON-lines file");
  collect->add_option("--anchor-episodes", c_anchor, "Episodes for the return anchor");
  collect->add_option("--eval-seed-base", c_eval_base, "First evaluation seed of the anchor");

  auto* train = app.add_subcommand("train", "Train one algorithm on every configured seed");
  std::string t_config, t_output, t_algorithm, t_expert, t_seeds;
  long long t_steps = 0;
  train->add_option("--config", t_config, "INI config file");
  train->add_option("--output", t_output, "Output directory (overrides [run] output)");
  train->add_option("--algorithm", t_algorithm, "Algorithm (overrides [run] algorithm)");
  train->add_option("--expert", t_expert, "Expert dataset (overrides [run] expert)");
  train->add_option("--seeds", t_seeds, "Comma-separated seeds (overrides [run] seeds)");
  train->add_option("--max-env-steps", t_steps, "Step budget (overrides [train] max_env_steps)");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string e_config, e_ckpt;
  int e_episodes = 50;
  std::uint64_t e_seed_base = TrainConfig{}.eval_seed_base;
  eval->add_option("--config", e_config, "Resolved config of the run")->required();
  eval->add_option("--checkpoint", e_ckpt, "Checkpoint file")->required();
  eval->add_option("--episodes", e_episodes, "Evaluation episodes");
  eval->add_option("--seed-base", e_seed_base, "First evaluation seed");

  auto* verify = app.add_subcommand("verify", "Run the tabular oracle battery");
  int v_instances = 100;
  std::uint64_t v_seed = 0;
  std::string v_csv;
  verify->add_option("--instances", v_instances, "Random MDP instances");
  verify->add_option("--seed", v_seed, "Generator seed");
  verify->add_option("--csv", v_csv, "Residual report CSV");

  auto* plot = app.add_subcommand("plot", "Draw learning curves from metrics CSVs");
  std::vector<std::string> p_runs;
  std::string p_out = "plots";
  plot->add_option("runs", p_runs, "Run directories (each with config.ini)")->required();
  plot->add_option("--out", p_out, "Output directory for SVG files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*collect)
      return cmd_collect(c_env, c_pd, c_episodes, c_seed, c_out, c_anchor, c_eval_base);
    if (*train) {
      RunConfig cfg = t_config.empty() ? RunConfig{} : load_run_config(t_config);
      if (!t_output.empty()) cfg.output_dir = t_output;
      if (!t_algorithm.empty()) cfg.algorithm = t_algorithm;
      if (!t_expert.empty()) cfg.expert_path = t_expert;
      if (!t_seeds.empty()) cfg.seeds = parse_seeds(t_seeds);
      if (t_steps > 0) cfg.train.max_env_steps = t_steps;
      return cmd_train(cfg);
    }
    if (*eval) return cmd_eval(load_run_config(e_config), e_ckpt, e_episodes, e_seed_base);
    if (*verify) return cmd_verify(v_instances, v_seed, v_csv);
    if (*plot) return cmd_plot(p_runs, p_out);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const ContractViolation& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
