#include "maad/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "maad/errors.hpp"

namespace maad {

using nlohmann::json;

namespace {

bool all_finite(const Mat& m) { return m.allFinite(); }

Transition column_transition(const Mat& states, const Mat& actions, Index t) {
  Transition tr;
  tr.s = states.col(t);
  tr.s_next = states.col(t + 1);
  if (actions.cols() > 0) tr.a = actions.col(t);
  return tr;
}

std::vector<Transition> subsample_columns(const Mat& states, const Mat& actions, int rate,
                                          std::uint64_t seed) {
  require(rate >= 1, "subsample_pairs: rate must be >= 1");
  const Index length = states.cols() > 0 ? states.cols() - 1 : 0;
  const Index keep = length / rate;
  if (keep == 0)
    throw EmptyResultError("subsample_pairs: rate " + std::to_string(rate) +
                           " exceeds trajectory length " + std::to_string(length));
  std::vector<Index> idx(static_cast<std::size_t>(length));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (keep < length) {
    Rng rng = make_rng(seed, 0x5b5a);
    // Partial Fisher-Yates: the first `keep` slots become a uniform sample.
    for (Index i = 0; i < keep; ++i) {
      std::uniform_int_distribution<Index> pick(i, length - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(static_cast<std::size_t>(keep));
    std::sort(idx.begin(), idx.end());
  }
  std::vector<Transition> out;
  out.reserve(idx.size());
  for (Index t : idx) out.push_back(column_transition(states, actions, t));
  return out;
}

json matrix_to_json(const Mat& m) {
  json cols = json::array();
  for (Index j = 0; j < m.cols(); ++j) {
    json col = json::array();
    for (Index i = 0; i < m.rows(); ++i) col.push_back(m(i, j));
    cols.push_back(std::move(col));
  }
  return cols;
}

Mat json_to_matrix(const json& j, std::size_t line, const char* field) {
  if (!j.is_array()) throw ParseError(std::string("field '") + field + "' is not an array", line);
  if (j.empty()) return Mat();
  const std::size_t rows = j.front().is_array() ? j.front().size() : 0;
  Mat m(static_cast<Index>(rows), static_cast<Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) {
    const json& col = j[c];
    if (!col.is_array() || col.size() != rows)
      throw ParseError(std::string("ragged or non-array row in '") + field + "'", line);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!col[r].is_number())
        throw ParseError(std::string("non-numeric entry in '") + field + "'", line);
      m(static_cast<Index>(r), static_cast<Index>(c)) = col[r].get<double>();
    }
  }
  return m;
}

}  // namespace

void DemoTrajectory::validate() const {
  require(states.cols() >= 1, "DemoTrajectory: no states");
  require(!has_actions() || actions.cols() == states.cols() - 1,
          "DemoTrajectory: need exactly one action per transition");
  require(all_finite(states) && all_finite(actions), "DemoTrajectory: non-finite entries");
}

void ObsTrajectory::validate() const {
  require(states.cols() >= 2, "ObsTrajectory: need at least two states");
  require(all_finite(states), "ObsTrajectory: non-finite entries");
}

DemoTrajectory collect_rollout(const ActionSource& policy, const EnvSpec& spec, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0xc011);
  EnvState state = env_reset(spec, seed);
  DemoTrajectory traj;
  traj.states.resize(spec.state_dim(), spec.horizon + 1);
  traj.actions.resize(spec.action_dim(), spec.horizon);
  traj.states.col(0) = state.vector();
  for (int t = 0; t < spec.horizon; ++t) {
    const Vec a = policy(traj.states.col(t), rng);
    require(a.size() == spec.action_dim(), "collect_rollout: policy action dimension mismatch");
    for (Index i = 0; i < a.size(); ++i) finite_or_throw(a[i], "policy action");
    const StepResult step = env_step(spec, state, a);
    traj.actions.col(t) = clip_action(spec, a);
    traj.states.col(t + 1) = step.state.vector();
    traj.ep_return += task_reward(spec, step.state);
    state = step.state;
    if (step.done) break;
  }
  return traj;
}

ObsTrajectory strip_actions(const DemoTrajectory& demo) { return ObsTrajectory{demo.states}; }

std::vector<Transition> subsample_pairs(const DemoTrajectory& traj, int rate, std::uint64_t seed) {
  return subsample_columns(traj.states, traj.actions, rate, seed);
}

std::vector<Transition> subsample_pairs(const ObsTrajectory& traj, int rate, std::uint64_t seed) {
  return subsample_columns(traj.states, Mat(), rate, seed);
}

std::vector<Transition> all_pairs(const DemoTrajectory& traj) {
  std::vector<Transition> out;
  for (Index t = 0; t < traj.length(); ++t)
    out.push_back(column_transition(traj.states, traj.actions, t));
  return out;
}

TripletBatch to_batch(const std::vector<Transition>& transitions) {
  TripletBatch b;
  if (transitions.empty()) return b;
  const auto n = static_cast<Index>(transitions.size());
  const Index sd = transitions.front().s.size();
  const Index ad = transitions.front().a.size();
  b.s.resize(sd, n);
  b.a.resize(ad, n);
  b.s_next.resize(sd, n);
  for (Index k = 0; k < n; ++k) {
    const auto& t = transitions[static_cast<std::size_t>(k)];
    require(t.s.size() == sd && t.s_next.size() == sd && t.a.size() == ad,
            "to_batch: inconsistent transition shapes");
    b.s.col(k) = t.s;
    b.s_next.col(k) = t.s_next;
    if (ad > 0) b.a.col(k) = t.a;
  }
  return b;
}

// ---------------------------------------------------------------------------
// ReplayBuffer

ReplayBuffer::ReplayBuffer(int state_dim, int action_dim, Index capacity)
    : state_dim_(state_dim), action_dim_(action_dim), capacity_(capacity) {
  require(capacity > 0, "ReplayBuffer: capacity must be positive");
  require(state_dim > 0 && action_dim > 0, "ReplayBuffer: dimensions must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (t.s.size() != state_dim_ || t.s_next.size() != state_dim_ || t.a.size() != action_dim_)
    throw ContractViolation("replay_push: triplet shape does not match buffer");
  // Storage grows on demand up to capacity.
  if (states_.cols() < capacity_ && size_ == states_.cols()) {
    const Index grown = std::min(capacity_, std::max<Index>(1024, 2 * states_.cols()));
    states_.conservativeResize(state_dim_, grown);
    actions_.conservativeResize(action_dim_, grown);
    next_states_.conservativeResize(state_dim_, grown);
  }
  Index slot;
  if (size_ < capacity_) {
    slot = physical(size_);
    ++size_;
  } else {
    slot = start_;
    start_ = (start_ + 1) % capacity_;
  }
  states_.col(slot) = t.s;
  actions_.col(slot) = t.a;
  next_states_.col(slot) = t.s_next;
}

void ReplayBuffer::push(const std::vector<Transition>& batch) {
  for (const auto& t : batch) push(t);
}

Transition ReplayBuffer::at(Index i) const {
  require(i >= 0 && i < size_, "ReplayBuffer::at: index out of range");
  const Index p = physical(i);
  return Transition{states_.col(p), actions_.col(p), next_states_.col(p)};
}

TripletBatch ReplayBuffer::gather(const std::vector<Index>& indices) const {
  TripletBatch b;
  const auto n = static_cast<Index>(indices.size());
  b.s.resize(state_dim_, n);
  b.a.resize(action_dim_, n);
  b.s_next.resize(state_dim_, n);
  for (Index k = 0; k < n; ++k) {
    const Index i = indices[static_cast<std::size_t>(k)];
    require(i >= 0 && i < size_, "ReplayBuffer::gather: index out of range");
    const Index p = physical(i);
    b.s.col(k) = states_.col(p);
    b.a.col(k) = actions_.col(p);
    b.s_next.col(k) = next_states_.col(p);
  }
  return b;
}

std::vector<Transition> ReplayBuffer::sample(Index batch_size, Rng& rng) const {
  if (empty()) throw EmptyBufferError("replay_sample: buffer is empty");
  std::uniform_int_distribution<Index> pick(0, size_ - 1);
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(batch_size));
  for (Index k = 0; k < batch_size; ++k) out.push_back(at(pick(rng)));
  return out;
}

std::vector<Transition> ReplayBuffer::sample(Index batch_size, std::uint64_t seed) const {
  Rng rng = make_rng(seed, 0x2e91);
  return sample(batch_size, rng);
}

// ---------------------------------------------------------------------------
// File I/O

void save_trajectories(const std::string& path, const std::vector<DemoTrajectory>& dataset) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& traj : dataset) {
    json rec;
    rec["states"] = matrix_to_json(traj.states);
    if (traj.has_actions()) rec["actions"] = matrix_to_json(traj.actions);
    rec["ep_return"] = traj.ep_return;
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<DemoTrajectory> load_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<DemoTrajectory> dataset;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON record: ") + e.what(), line);
    }
    if (!rec.is_object() || !rec.contains("states"))
      throw ParseError("record lacks a 'states' field", line);
    DemoTrajectory traj;
    traj.states = json_to_matrix(rec["states"], line, "states");
    if (rec.contains("actions")) traj.actions = json_to_matrix(rec["actions"], line, "actions");
    if (rec.contains("ep_return")) {
      if (!rec["ep_return"].is_number()) throw ParseError("'ep_return' is not a number", line);
      traj.ep_return = rec["ep_return"].get<double>();
    }
    try {
      traj.validate();
    } catch (const ContractViolation& e) {
      throw ParseError(e.what(), line);
    }
    dataset.push_back(std::move(traj));
  }
  return dataset;
}

}  // namespace maad
