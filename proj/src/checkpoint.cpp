#include "maad/checkpoint.hpp"

#include <fstream>
#include <json.hpp>

#include "maad/errors.hpp"

namespace maad {

using nlohmann::json;

namespace {

CheckpointEntry net_entry(const std::string& name, const Mlp& net) {
  return {name, net.layer_sizes(), net.params()};
}

CheckpointEntry vec_entry(const std::string& name, const Vec& v) {
  return {name, {static_cast<int>(v.size())}, v};
}

Mlp net_from(const CheckpointEntry& e) {
  Mlp net(e.shape);
  require(net.num_params() == e.values.size(), "checkpoint: '" + e.name + "' has the wrong size");
  net.params() = e.values;
  return net;
}

}  // namespace

const CheckpointEntry& Checkpoint::at(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw ContractViolation("checkpoint has no entry '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return true;
  return false;
}

Checkpoint make_checkpoint(const GaussianPolicy& policy, const std::string& config_hash) {
  Checkpoint c;
  c.config_hash = config_hash;
  c.entries.push_back(net_entry("policy.mean_net", policy.mean_net));
  c.entries.push_back(vec_entry("policy.log_std", policy.log_std));
  return c;
}

Checkpoint make_checkpoint(const Trainer& trainer, const std::string& config_hash) {
  Checkpoint c = make_checkpoint(trainer.policy(), config_hash);
  c.entries.push_back(net_entry("value_net", trainer.value_net()));
  const MdnIdm& idm = trainer.idm();
  if (idm.has_normalizer()) {
    c.entries.push_back(net_entry("idm.weight_net", idm.weight_net()));
    c.entries.push_back(net_entry("idm.mean_net", idm.mean_net()));
    c.entries.push_back(
        {"idm.log_std", {idm.action_dim(), idm.num_components()}, idm.log_std()});
    c.entries.push_back(vec_entry("idm.feature_mean", idm.feature_mean()));
    c.entries.push_back(vec_entry("idm.feature_scale", idm.feature_scale()));
  }
  if (trainer.config().reward_backend == RewardBackend::kAil)
    c.entries.push_back(net_entry("discriminator", trainer.discriminator().net));
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json manifest = json::array();
  std::vector<double> flat;
  for (const auto& e : ckpt.entries) {
    manifest.push_back({{"name", e.name},
                        {"shape", e.shape},
                        {"offset", flat.size()},
                        {"count", e.values.size()}});
    flat.insert(flat.end(), e.values.data(), e.values.data() + e.values.size());
  }
  const json doc{{"config_hash", ckpt.config_hash}, {"manifest", manifest}, {"params", flat}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out << doc.dump() << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  Checkpoint c;
  try {
    const json doc = json::parse(in);
    c.config_hash = doc.at("config_hash").get<std::string>();
    const auto flat = doc.at("params").get<std::vector<double>>();
    for (const auto& m : doc.at("manifest")) {
      CheckpointEntry e;
      e.name = m.at("name").get<std::string>();
      e.shape = m.at("shape").get<std::vector<int>>();
      const auto offset = m.at("offset").get<std::size_t>();
      const auto count = m.at("count").get<std::size_t>();
      if (offset + count > flat.size()) throw ParseError("manifest slice exceeds parameters", 1);
      e.values = Eigen::Map<const Vec>(flat.data() + offset, static_cast<Index>(count));
      c.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint '") + path + "': " + e.what(), 1);
  }
  return c;
}

GaussianPolicy policy_from_checkpoint(const Checkpoint& ckpt) {
  GaussianPolicy p;
  p.mean_net = net_from(ckpt.at("policy.mean_net"));
  p.log_std = ckpt.at("policy.log_std").values;
  require(p.log_std.size() == p.action_dim(), "checkpoint: policy log_std has the wrong size");
  return p;
}

MdnIdm idm_from_checkpoint(const Checkpoint& ckpt) {
  const Mlp wnet = net_from(ckpt.at("idm.weight_net"));
  const Mlp mnet = net_from(ckpt.at("idm.mean_net"));
  const CheckpointEntry& ls = ckpt.at("idm.log_std");
  require(ls.shape.size() == 2, "checkpoint: idm.log_std needs two dimensions");
  Rng rng = make_rng(0, 0);
  MdnIdm m(wnet.input_dim() / 2, ls.shape[0], ls.shape[1], wnet.layer_sizes()[1], rng);
  Vec theta(m.num_params());
  theta << wnet.params(), mnet.params(), ls.values;
  m.unpack(theta);
  m.set_normalizer(ckpt.at("idm.feature_mean").values, ckpt.at("idm.feature_scale").values);
  return m;
}

}  // namespace maad
