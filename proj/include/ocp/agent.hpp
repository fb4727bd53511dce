#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ocp/constraints.hpp"
#include "ocp/eluder.hpp"
#include "ocp/hypothesis.hpp"
#include "ocp/system.hpp"

namespace ocp {

/// Per-episode bookkeeping beyond the trace. Fields an agent does not track stay at defaults.
struct EpisodeExtras {
  std::size_t constraints = 0;     // |C| after the episode's commit
  std::optional<int> t_star;       // diagnostic period, when enabled
  std::size_t z_len = 0;           // |Z_{j+1}|, when enabled
  bool all_redundant = false;      // every staged constraint was implied by Q_C
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual EpisodeTrace run_episode(Environment& env) = 0;
  /// Extras for the most recent episode.
  virtual EpisodeExtras last_extras() const { return {}; }
};

/// Independent sequence Z_j and the last-independent period t_j*.
class DiagnosticTracker {
 public:
  explicit DiagnosticTracker(DependenceOracle oracle) : oracle_(std::move(oracle)) {}

  /// Processes one episode's triples; returns t_j* and extends Z when it exists.
  std::optional<int> step(std::span<const Triple> episode);

  const std::vector<Triple>& sequence() const { return z_; }
  const std::vector<std::optional<int>>& history() const { return t_star_; }
  const DependenceOracle& oracle() const { return oracle_; }

 private:
  DependenceOracle oracle_;
  std::vector<Triple> z_;
  std::vector<Index> z_flat_;
  std::vector<std::optional<int>> t_star_;
};

std::optional<int> diagnostic_step(DiagnosticTracker& tracker, std::span<const Triple> episode);

/// A staged constraint is redundant when Q_C already confines its triple to [L, U] within this slack.
inline constexpr double kRedundancyTolerance = 1e-7;

/// Optimistic constraint propagation.
///
/// Within an episode every query sees the committed set C; the constraints
/// observed along the way are staged and committed together at the end.
class OcpAgent final : public Agent {
 public:
  explicit OcpAgent(std::unique_ptr<HypothesisEngine> engine,
                    std::optional<DependenceOracle> diagnostics = std::nullopt);

  /// Lowest-index action maximizing the optimistic value at (state, period).
  int select_action(int state, int period) const;

  /// Builds the interval constraint for the observed transition and stages it.
  IntervalConstraint observe_and_stage(const Triple& z, double reward, std::optional<int> next_state);

  /// Appends staged constraints to C and clears the stage.
  void commit();

  EpisodeTrace run_episode(Environment& env) override;
  EpisodeExtras last_extras() const override { return extras_; }

  const HypothesisEngine& engine() const { return *engine_; }
  const ConstraintSequence& committed() const { return committed_; }
  std::span<const IntervalConstraint> staged() const { return staged_; }
  std::int64_t episode() const { return episode_; }
  const DiagnosticTracker* diagnostics() const { return tracker_ ? &*tracker_ : nullptr; }

 private:
  std::unique_ptr<HypothesisEngine> engine_;
  std::optional<DiagnosticTracker> tracker_;
  ConstraintSequence committed_;
  std::vector<IntervalConstraint> staged_;
  bool staged_redundant_ = true;
  std::int64_t episode_ = 0;
  EpisodeExtras extras_;
};

}  // namespace ocp
