#include "maad/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "maad/errors.hpp"

namespace maad {

namespace pt = boost::property_tree;

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
  return os.str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Value conversions; throw std::invalid_argument on malformed input.
double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

long long to_int(const std::string& s) {
  std::size_t used = 0;
  const long long v = std::stoll(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

template <class T>
std::vector<T> to_list(const std::string& s) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<T>(to_int(trim(item))));
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define MAAD_DOUBLE(sec, name, expr)                                              \
  Field {                                                                         \
    sec, name, [](const RunConfig& c) { return fmt_double(c.expr); },             \
        [](RunConfig& c, const std::string& v) { c.expr = to_double(v); }         \
  }
#define MAAD_INT(sec, name, expr)                                                         \
  Field {                                                                                 \
    sec, name, [](const RunConfig& c) { return std::to_string(c.expr); },                 \
        [](RunConfig& c, const std::string& v) {                                          \
          c.expr = static_cast<decltype(c.expr)>(to_int(v));                              \
        }                                                                                 \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"run", "algorithm", [](const RunConfig& c) { return c.algorithm; },
       [](RunConfig& c, const std::string& v) { c.algorithm = v; }},
      {"run", "expert", [](const RunConfig& c) { return c.expert_path; },
       [](RunConfig& c, const std::string& v) { c.expert_path = v; }},
      {"run", "output", [](const RunConfig& c) { return c.output_dir; },
       [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
      {"run", "seeds", [](const RunConfig& c) { return join(c.seeds); },
       [](RunConfig& c, const std::string& v) { c.seeds = to_list<std::uint64_t>(v); }},

      {"env", "name", [](const RunConfig& c) { return c.env.name; },
       [](RunConfig& c, const std::string& v) { c.env = env_from_name(v, c.env.position_dim); }},
      {"env", "position_dim", [](const RunConfig& c) { return std::to_string(c.env.position_dim); },
       [](RunConfig& c, const std::string& v) {
         c.env = env_from_name(c.env.name, static_cast<int>(to_int(v)));
       }},
      MAAD_DOUBLE("env", "dt", env.dt),
      MAAD_INT("env", "horizon", env.horizon),
      MAAD_DOUBLE("env", "k_p", env.k_p),
      MAAD_DOUBLE("env", "k_d", env.k_d),

      MAAD_DOUBLE("train", "gamma", train.gamma),
      MAAD_DOUBLE("train", "gae_lambda", train.gae_lambda),
      MAAD_DOUBLE("train", "ppo_clip", train.ppo_clip),
      MAAD_INT("train", "ppo_epochs", train.ppo_epochs),
      MAAD_INT("train", "batch_size", train.batch_size),
      MAAD_INT("train", "rollout_length", train.rollout_length),
      MAAD_DOUBLE("train", "lr", train.lr),
      MAAD_DOUBLE("train", "clip_norm", train.clip_norm),
      MAAD_DOUBLE("train", "lambda_reg", train.lambda_reg),
      MAAD_DOUBLE("train", "entropy_coef", train.entropy_coef),
      MAAD_DOUBLE("train", "value_coef", train.value_coef),
      MAAD_INT("train", "workers", train.workers),
      {"train", "reward_backend", [](const RunConfig& c) { return to_string(c.train.reward_backend); },
       [](RunConfig& c, const std::string& v) { c.train.reward_backend = reward_backend_from_string(v); }},
      {"train", "regularizer", [](const RunConfig& c) { return to_string(c.train.regularizer); },
       [](RunConfig& c, const std::string& v) { c.train.regularizer = regularizer_from_string(v); }},
      MAAD_INT("train", "max_env_steps", train.max_env_steps),
      {"train", "policy_hidden", [](const RunConfig& c) { return join(c.train.policy_hidden); },
       [](RunConfig& c, const std::string& v) { c.train.policy_hidden = to_list<int>(v); }},
      MAAD_DOUBLE("train", "init_log_std", train.init_log_std),
      MAAD_INT("train", "idm_components", train.idm_components),
      MAAD_INT("train", "idm_hidden", train.idm_hidden),
      MAAD_DOUBLE("train", "idm_lr", train.idm_lr),
      MAAD_INT("train", "replay_capacity", train.replay_capacity),
      MAAD_DOUBLE("train", "idm_holdout", train.idm_holdout),
      MAAD_DOUBLE("train", "idm_tol", train.idm_tol),
      MAAD_INT("train", "idm_patience", train.idm_patience),
      MAAD_INT("train", "idm_max_epochs", train.idm_max_epochs),
      MAAD_INT("train", "idm_epoch_batches", train.idm_epoch_batches),
      MAAD_INT("train", "idm_kl_samples", train.idm_kl_samples),
      {"train", "disc_hidden", [](const RunConfig& c) { return join(c.train.disc_hidden); },
       [](RunConfig& c, const std::string& v) { c.train.disc_hidden = to_list<int>(v); }},
      MAAD_DOUBLE("train", "disc_lr", train.disc_lr),
      MAAD_DOUBLE("train", "gp_coef", train.gp_coef),
      MAAD_INT("train", "disc_updates", train.disc_updates),
      MAAD_INT("train", "subsample_rate", train.subsample_rate),
      MAAD_DOUBLE("train", "sinkhorn_epsilon", train.sinkhorn_epsilon),
      MAAD_INT("train", "sinkhorn_iters", train.sinkhorn_iters),
      MAAD_DOUBLE("train", "ot_scale", train.ot_scale),
      MAAD_INT("train", "bc_epochs", train.bc_epochs),
      MAAD_INT("train", "bc_eval_every", train.bc_eval_every),
      MAAD_INT("train", "eval_episodes", train.eval_episodes),
      MAAD_INT("train", "eval_seed_base", train.eval_seed_base),
  };
  return table;
}

#undef MAAD_DOUBLE
#undef MAAD_INT

// First line (1-based) that assigns `key` inside `[section]`; 0 if absent.
std::size_t find_line(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (!t.empty() && t.front() == '[') {
      current = trim(t.substr(1, t.find(']') - 1));
      continue;
    }
    const auto eq = t.find('=');
    if (current == section && eq != std::string::npos && trim(t.substr(0, eq)) == key) return n;
  }
  return 0;
}

}  // namespace

EnvSpec env_from_name(const std::string& name, int position_dim) {
  if (name == "linear_point") return EnvSpec::linear_point(position_dim);
  if (name == "mirror_actuator") return EnvSpec::mirror_actuator(position_dim);
  throw ContractViolation("unknown environment '" + name + "'");
}

const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names{"maad-ail", "maad-tm", "maad-ot", "gaifo",
                                              "tmo",      "oto",     "bc",      "gail-bc"};
  return names;
}

void apply_algorithm(RunConfig& cfg) {
  TrainConfig& t = cfg.train;
  const std::string& a = cfg.algorithm;
  if (a == "maad-ail" || a == "maad-tm" || a == "maad-ot") {
    t.reward_backend = a == "maad-ail" ? RewardBackend::kAil
                       : a == "maad-tm" ? RewardBackend::kTm
                                        : RewardBackend::kOt;
    t.regularizer = RegularizerKind::kIdm;
  } else if (a == "gaifo" || a == "tmo" || a == "oto") {
    t.reward_backend = a == "gaifo" ? RewardBackend::kAil
                       : a == "tmo" ? RewardBackend::kTm
                                    : RewardBackend::kOt;
    t.regularizer = RegularizerKind::kNone;
    t.lambda_reg = 0.0;
  } else if (a == "gail-bc") {
    t.reward_backend = RewardBackend::kAil;
    t.regularizer = RegularizerKind::kTrueActions;
  } else if (a == "bc") {
    t.reward_backend = RewardBackend::kNone;
    t.regularizer = RegularizerKind::kTrueActions;
  } else {
    throw UsageError("unknown algorithm '" + a + "'");
  }
  if (cfg.seeds.empty()) throw UsageError("seed list is empty");
}

RunConfig parse_run_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }
  RunConfig cfg;
  // The environment name decides the defaults the other [env] keys refine.
  if (const auto sec = tree.get_child_optional("env")) {
    const std::string name = sec->get<std::string>("name", cfg.env.name);
    const int pd = name == "mirror_actuator" ? 1 : 2;
    try {
      cfg.env = env_from_name(name, sec->get<int>("position_dim", pd));
    } catch (const std::exception& e) {
      throw ParseError(e.what(), find_line(text, "env", "name"));
    }
  }
  for (const auto& [section, body] : tree) {
    if (section != "run" && section != "env" && section != "train")
      throw ParseError("unknown section [" + section + "]", find_line(text, section, ""));
    for (const auto& [key, node] : body) {
      const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) {
        return f.section == section && f.key == key;
      });
      const std::size_t line = find_line(text, section, key);
      if (it == fields().end()) throw ParseError("unknown key '" + key + "' in [" + section + "]", line);
      if (section == "env" && (key == "name" || key == "position_dim")) continue;
      try {
        it->set(cfg, trim(node.data()));
      } catch (const std::exception& e) {
        throw ParseError("bad value for '" + key + "': " + e.what(), line);
      }
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream os;
  std::string current;
  for (const Field& f : fields()) {
    if (f.section != current) {
      os << (current.empty() ? "" : "\n") << "[" << f.section << "]\n";
      current = f.section;
    }
    os << f.key << " = " << f.get(cfg) << "\n";
  }
  return os.str();
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace maad
