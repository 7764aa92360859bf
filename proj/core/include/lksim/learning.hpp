#pragma once

#include "lksim/harness.hpp"
#include "lksim/policy.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace lksim {

enum class ImproveRule {
  Increment,       // add a fixed increment to the argmax action, renormalize
  EpsilonMixture,  // pi <- (1-eps)*pi + eps*onehot(argmax)
};

struct JaakkolaConfig {
  int window_length = 1000;    // average-reward window [steps]
  double gamma_offset = 1000;  // gamma(t) = t / (t + offset), -> 1
  double increment = 0.01;
  ImproveRule improve_rule = ImproveRule::Increment;
};

/// Average-reward value estimation for POMDPs: per-step trace/value
/// updates for the visited message and message-action pair, with the
/// discount-decay of untouched traces applied lazily at their next visit.
class JaakkolaLearner {
 public:
  JaakkolaLearner(int n_messages, int n_actions, JaakkolaConfig cfg = {});

  /// Value/trace update for the (message, action) pair visited at this
  /// step with realized reward. Advances the global step counter.
  void step1_update(int m, int a, double reward);

  /// Policy improvement on the given row: only when max_a Q(m,a) > V(m).
  /// Ties in the argmax break by lowest action ordinal. Returns whether
  /// the row changed.
  bool step2_improve(std::span<double> row, int m);

  /// Windowed mean of past rewards; 0 before any reward is recorded.
  double average_reward_estimate() const;

  double V(int m) const { return v_[m]; }
  double Q(int m, int a) const { return q_[index(m, a)]; }
  std::uint64_t message_visits(int m) const { return k_m_[m]; }
  std::uint64_t pair_visits(int m, int a) const { return k_a_[index(m, a)]; }
  std::uint64_t total_steps() const { return t_; }

  int greedy_action(int m) const;

 private:
  std::size_t index(int m, int a) const {
    return static_cast<std::size_t>(m) * n_actions_ + a;
  }
  double gamma(std::uint64_t t) const;

  int n_messages_;
  int n_actions_;
  JaakkolaConfig cfg_;

  std::vector<double> v_, q_;
  std::vector<double> beta_m_, beta_a_;
  std::vector<std::uint64_t> k_m_, k_a_;
  // Cumulative log-gamma at the last visit, for lazy trace decay.
  std::vector<double> cumlog_at_m_, cumlog_at_a_;
  double cumlog_ = 0.0;
  std::uint64_t t_ = 0;

  // Sliding reward window.
  std::vector<double> window_;
  std::size_t window_pos_ = 0;
  std::size_t window_count_ = 0;
  double window_sum_ = 0.0;
};

/// Arithmetic mean of the (at most window_length) most recent rewards.
double estimate_average_reward(std::span<const double> window);

/// True iff max - min of the history over the last patience entries is
/// below the tolerance.
bool has_converged(std::span<const double> avg_reward_history, double tolerance,
                   std::size_t patience);

struct TrainingConfig {
  int level = 1;  // k >= 1; the level being trained
  long training_cycles = 2000;
  long min_total_steps = 0;  // keep cycling until at least this many steps
  double epsilon_increment = 0.01;
  int n_c_max = -1;  // derived from road geometry when negative
  double x0_max = 200.0;
  double t_f = 200.0;
  double convergence_tolerance = 0.01;
  long convergence_patience_steps = 50000;
  std::uint64_t undertrained_threshold = 100;
  int window_length = 1000;
  double gamma_offset = 1000;
  std::uint64_t seed = 0;
};

struct TrainingLogEntry {
  long cycle = 0;
  int n_c = 0;
  int steps = 0;
  double mean_reward = 0.0;
  double rbar = 0.0;
  bool violated = false;
};

struct TrainingSummary {
  long cycles_run = 0;
  std::uint64_t total_steps = 0;
  bool converged = false;
  std::uint64_t fallback_rows = 0;  // rows replaced by the level-0 action
  std::vector<TrainingLogEntry> log;
  std::vector<double> rbar_history;  // one sample per training step
};

/// Level-k training: the trainee follows the evolving stochastic policy
/// while all traffic runs level-(k-1); per-step Step-1/Step-2 updates;
/// undertrained rows fall back to the level-0 action afterwards.
/// `lower` is the level-(k-1) policy; nullptr means the level-0 rule
/// (valid only for level == 1).
TabularPolicy train_level_k(const TrainingConfig& cfg, const SimParams& params,
                            const TabularPolicy* lower,
                            TrainingSummary* summary = nullptr);

int derived_n_c_max(const RoadConfig& road, double x0_max);

}  // namespace lksim
