#include "ocp/agent.hpp"

#include <stdexcept>

namespace ocp {

std::optional<int> DiagnosticTracker::step(std::span<const Triple> episode) {
  std::optional<int> found;
  const Shape& s = oracle_.shape();
  for (int t = static_cast<int>(episode.size()) - 1; t >= 0; --t) {
    if (!oracle_.dependent(s.flat(episode[t]), z_flat_)) {
      found = t;
      break;
    }
  }
  if (found) {
    z_.push_back(episode[*found]);
    z_flat_.push_back(s.flat(episode[*found]));
  }
  t_star_.push_back(found);
  return found;
}

std::optional<int> diagnostic_step(DiagnosticTracker& tracker, std::span<const Triple> episode) {
  return tracker.step(episode);
}

OcpAgent::OcpAgent(std::unique_ptr<HypothesisEngine> engine, std::optional<DependenceOracle> diagnostics)
    : engine_(std::move(engine)) {
  if (!engine_) throw std::invalid_argument("OcpAgent: engine is required");
  if (diagnostics) {
    if (!(diagnostics->shape() == engine_->shape()))
      throw std::invalid_argument("OcpAgent: dependence oracle shape differs from the engine's");
    tracker_.emplace(std::move(*diagnostics));
  }
}

int OcpAgent::select_action(int state, int period) const {
  int best = 0;
  ExtReal best_value = engine_->sup({state, 0, period});
  for (int a = 1; a < engine_->shape().actions; ++a) {
    const ExtReal v = engine_->sup({state, a, period});
    if (v > best_value) {
      best = a;
      best_value = v;
    }
  }
  return best;
}

IntervalConstraint OcpAgent::observe_and_stage(const Triple& z, double reward, std::optional<int> next_state) {
  const int horizon = engine_->shape().horizon;
  IntervalConstraint c{z, reward, reward};
  if (z.period < horizon - 1) {
    if (!next_state) throw std::invalid_argument("observe_and_stage: next state required before the last period");
    c.upper = reward + engine_->sup_max(*next_state, z.period + 1);
    // inf max <= sup max; the two LPs can disagree in the last bits.
    c.lower = min(reward + engine_->inf_max(*next_state, z.period + 1), c.upper);
  }
  const bool redundant = c.lower.value() - kRedundancyTolerance <= engine_->inf(z).value() &&
                         engine_->sup(z).value() <= c.upper.value() + kRedundancyTolerance;
  staged_redundant_ = staged_redundant_ && redundant;
  staged_.push_back(c);
  return c;
}

void OcpAgent::commit() {
  engine_->commit(staged_);
  committed_.append(staged_);
  staged_.clear();
}

EpisodeTrace OcpAgent::run_episode(Environment& env) {
  const Shape& shape = engine_->shape();
  if (!(env.shape() == shape)) throw std::invalid_argument("OcpAgent: environment shape differs from the class");
  EpisodeTrace trace;
  trace.episode = episode_;
  staged_.clear();
  staged_redundant_ = true;
  int x = env.initial_state(episode_);
  for (int t = 0; t < shape.horizon; ++t) {
    const Triple z{x, select_action(x, t), t};
    const StepResult r = env.step(z);
    trace.triples.push_back(z);
    trace.rewards.push_back(r.reward);
    observe_and_stage(z, r.reward, r.next_state);
    if (r.next_state) x = *r.next_state;
  }
  extras_ = {};
  extras_.all_redundant = staged_redundant_;
  commit();
  extras_.constraints = committed_.size();
  if (tracker_) {
    extras_.t_star = tracker_->step(trace.triples);
    extras_.z_len = tracker_->sequence().size();
  }
  ++episode_;
  return trace;
}

}  // namespace ocp
