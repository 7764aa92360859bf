#include "lksim/learning.hpp"

#include "lksim/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lksim {

JaakkolaLearner::JaakkolaLearner(int n_messages, int n_actions,
                                 JaakkolaConfig cfg)
    : n_messages_(n_messages), n_actions_(n_actions), cfg_(cfg) {
  const std::size_t nm = n_messages;
  const std::size_t na = nm * n_actions;
  v_.assign(nm, 0.0);
  beta_m_.assign(nm, 0.0);
  k_m_.assign(nm, 0);
  cumlog_at_m_.assign(nm, 0.0);
  q_.assign(na, 0.0);
  beta_a_.assign(na, 0.0);
  k_a_.assign(na, 0);
  cumlog_at_a_.assign(na, 0.0);
  window_.assign(std::max(1, cfg_.window_length), 0.0);
}

double JaakkolaLearner::gamma(std::uint64_t t) const {
  return static_cast<double>(t) / (static_cast<double>(t) + cfg_.gamma_offset);
}

void JaakkolaLearner::step1_update(int m, int a, double reward) {
  t_ += 1;
  const double g = gamma(t_);
  const double prev_cumlog = cumlog_;
  cumlog_ += std::log(g);

  // Average reward estimate from the window of rewards before this step.
  const double rbar = average_reward_estimate();
  const double innovation = reward - rbar;

  // Message update. The decayed trace of the unvisited steps since the
  // last visit is reconstructed from the cumulative log-gamma.
  {
    k_m_[m] += 1;
    const double k = static_cast<double>(k_m_[m]);
    const double carried =
        beta_m_[m] * std::exp(prev_cumlog - cumlog_at_m_[m]);
    const double beta = (1.0 - 1.0 / k) * g * carried + 1.0 / k;
    v_[m] = (1.0 - 1.0 / k) * v_[m] + beta * innovation;
    beta_m_[m] = beta;
    cumlog_at_m_[m] = cumlog_;
  }

  // Message-action pair update.
  {
    const std::size_t i = index(m, a);
    k_a_[i] += 1;
    const double k = static_cast<double>(k_a_[i]);
    const double carried =
        beta_a_[i] * std::exp(prev_cumlog - cumlog_at_a_[i]);
    const double beta = (1.0 - 1.0 / k) * g * carried + 1.0 / k;
    q_[i] = (1.0 - 1.0 / k) * q_[i] + beta * innovation;
    beta_a_[i] = beta;
    cumlog_at_a_[i] = cumlog_;
  }

  // Slide the reward window.
  window_sum_ -= window_[window_pos_];
  window_[window_pos_] = reward;
  window_sum_ += reward;
  window_pos_ = (window_pos_ + 1) % window_.size();
  window_count_ = std::min(window_count_ + 1, window_.size());
}

double JaakkolaLearner::average_reward_estimate() const {
  if (window_count_ == 0) return 0.0;
  return window_sum_ / static_cast<double>(window_count_);
}

int JaakkolaLearner::greedy_action(int m) const {
  int best = 0;
  for (int a = 1; a < n_actions_; ++a) {
    if (q_[index(m, a)] > q_[index(m, best)]) best = a;
  }
  return best;
}

bool JaakkolaLearner::step2_improve(std::span<double> row, int m) {
  const int a_star = greedy_action(m);
  if (!(q_[index(m, a_star)] > v_[m])) return false;

  if (cfg_.improve_rule == ImproveRule::Increment) {
    row[a_star] += cfg_.increment;
    double sum = 0.0;
    for (double p : row) sum += p;
    for (auto& p : row) p /= sum;
  } else {
    const double eps = cfg_.increment;
    for (int a = 0; a < n_actions_; ++a) {
      row[a] = (1.0 - eps) * row[a] + (a == a_star ? eps : 0.0);
    }
  }
  return true;
}

double estimate_average_reward(std::span<const double> window) {
  if (window.empty()) return 0.0;
  double sum = 0.0;
  for (double r : window) sum += r;
  return sum / static_cast<double>(window.size());
}

bool has_converged(std::span<const double> history, double tolerance,
                   std::size_t patience) {
  if (history.size() < patience) return false;
  const auto tail = history.subspan(history.size() - patience);
  const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
  return (*hi - *lo) < tolerance;
}

int derived_n_c_max(const RoadConfig& road, double x0_max) {
  // Near-full capacity under the 30 m same-lane spacing rule.
  return static_cast<int>(road.n_lanes * 2.0 * x0_max / 30.0);
}

namespace {

class TrainerHook final : public TraineeHook {
 public:
  TrainerHook(TabularPolicy& policy, JaakkolaLearner& learner,
              const SimParams& params, Rng& rng)
      : policy_(policy), learner_(learner), params_(params), rng_(rng) {}

  Action choose(const Message& m, const FeasibilityMask& mask) override {
    return sample_action(policy_, m, mask, rng_);
  }

  void learn(const Message& m, Action a, bool violation, double v_x,
             Range headway) override {
    const auto r = compute_reward(violation, v_x, headway, a, params_.reward,
                                  params_.kin);
    const int code = encode(m);
    learner_.step1_update(code, static_cast<int>(a), r.total);
    learner_.step2_improve(policy_.row(code), code);
    policy_.visits[code] += 1;
    reward_sum += r.total;
    reward_steps += 1;
  }

  double reward_sum = 0.0;
  int reward_steps = 0;

 private:
  TabularPolicy& policy_;
  JaakkolaLearner& learner_;
  const SimParams& params_;
  Rng& rng_;
};

}  // namespace

TabularPolicy train_level_k(const TrainingConfig& cfg, const SimParams& params,
                            const TabularPolicy* lower,
                            TrainingSummary* summary) {
  if (cfg.level < 1) throw std::invalid_argument("level must be >= 1");
  if (cfg.level >= 2 && lower == nullptr) {
    throw std::invalid_argument("training level >= 2 requires the level-" +
                                std::to_string(cfg.level - 1) + " policy");
  }
  if (cfg.epsilon_increment <= 0.0 || cfg.epsilon_increment >= 1.0) {
    throw std::invalid_argument("epsilon_increment must be in (0, 1)");
  }

  const int n_c_max = cfg.n_c_max >= 0
                          ? cfg.n_c_max
                          : derived_n_c_max(params.road, cfg.x0_max);

  TabularPolicy policy = TabularPolicy::uniform(cfg.level);
  policy.seed = cfg.seed;

  JaakkolaConfig jcfg;
  jcfg.window_length = cfg.window_length;
  jcfg.gamma_offset = cfg.gamma_offset;
  jcfg.increment = cfg.epsilon_increment;
  JaakkolaLearner learner(kNumMessages, kNumActions, jcfg);

  // All traffic runs the level-(k-1) policy.
  PolicySet traffic_policies;
  std::array<double, 3> mix{0.0, 0.0, 0.0};
  if (cfg.level == 1) {
    mix[0] = 1.0;  // rule-based level-0
  } else {
    mix[1] = 1.0;
    traffic_policies.level1 = lower;
  }

  Rng trainer_rng(mix_seed(cfg.seed, 0xace));
  std::uniform_int_distribution<int> nc_dist(0, n_c_max);

  TrainingSummary local;
  TrainingSummary& sum = summary ? *summary : local;
  sum = TrainingSummary{};

  std::uint64_t total_steps = 0;
  bool converged = false;
  long cycle = 0;
  while (cycle < cfg.training_cycles ||
         (cfg.min_total_steps > 0 &&
          static_cast<long>(total_steps) < cfg.min_total_steps)) {
    EpisodeConfig ecfg;
    ecfg.n_c = nc_dist(trainer_rng);
    ecfg.x0_max = cfg.x0_max;
    ecfg.t_f = cfg.t_f;
    ecfg.seed = mix_seed(cfg.seed, 0x700000 + static_cast<std::uint64_t>(cycle));
    ecfg.traffic_mix = mix;

    Rng init_rng(mix_seed(ecfg.seed, 0));
    World world;
    try {
      world = initialize_episode(ecfg, params, init_rng);
    } catch (const std::runtime_error&) {
      ++cycle;
      continue;  // rare placement failure near capacity; redraw
    }

    TrainerHook hook(policy, learner, params, trainer_rng);
    const std::uint64_t steps_before = learner.total_steps();
    const auto result =
        run_episode(world, ecfg, params, traffic_policies, &hook);
    const std::uint64_t steps_run = learner.total_steps() - steps_before;
    total_steps = learner.total_steps();

    for (std::uint64_t s = 0; s < steps_run; ++s) {
      sum.rbar_history.push_back(learner.average_reward_estimate());
    }

    TrainingLogEntry entry;
    entry.cycle = cycle;
    entry.n_c = ecfg.n_c;
    entry.steps = static_cast<int>(steps_run);
    entry.mean_reward =
        hook.reward_steps > 0 ? hook.reward_sum / hook.reward_steps : 0.0;
    entry.rbar = learner.average_reward_estimate();
    entry.violated = result.violated;
    sum.log.push_back(entry);

    ++cycle;
    if (!converged &&
        has_converged(sum.rbar_history, cfg.convergence_tolerance,
                      static_cast<std::size_t>(cfg.convergence_patience_steps))) {
      converged = true;
    }
    if (converged && static_cast<long>(total_steps) >= cfg.min_total_steps) {
      break;
    }
  }

  // Level-0 fallback for rows that were not visited enough.
  std::uint64_t fallback = 0;
  for (int m = 0; m < kNumMessages; ++m) {
    if (policy.visits[m] < cfg.undertrained_threshold) {
      policy.set_row_deterministic(m, level0_action(decode(m)));
      ++fallback;
    }
  }

  sum.cycles_run = cycle;
  sum.total_steps = total_steps;
  sum.converged = converged;
  sum.fallback_rows = fallback;
  return policy;
}

}  // namespace lksim
