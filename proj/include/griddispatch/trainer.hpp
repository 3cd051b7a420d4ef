#pragma once

#include "griddispatch/agent.hpp"
#include "griddispatch/env.hpp"
#include "griddispatch/market.hpp"
#include "griddispatch/replay.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace griddispatch::trainer {

struct TrainConfig {
    int episodes = 200;
    int train_every = 2;       // env steps between gradient updates
    int updates_per_round = 1;
    std::size_t warmup = 500;  // random-action transitions before learning
    std::size_t buffer_capacity = 100000;
    int eval_every = 10;       // episodes; 0 disables periodic evaluation
    int eval_episodes_per_scenario = 1;
    bool sqil = false;
    double reward_scale = 0.1; // scales env rewards fed to the critic
    double param_noise = 0.0;  // rollout-time policy parameter noise
    std::uint64_t seed = 1;
    agent::AgentConfig agent;
};

struct EpisodeMetrics {
    int episode = 0;
    double mean_reward = 0.0; // raw env $, per step
    double mean_cost = 0.0;   // violations per step
    double lambda = 0.0;
    double q1_loss = 0.0, q2_loss = 0.0, v_loss = 0.0, policy_loss = 0.0;
    bool evaluated = false;
    double eval_profit = 0.0; // mean $ per episode on the eval scenarios
};

struct EvalReport {
    double mean_profit = 0.0;        // $ per episode
    double mean_cost_per_step = 0.0; // violations
    double mean_step_seconds = 0.0;  // per-step policy decision wall time
    double mean_perf = 0.0;
    long episodes = 0;
    long steps = 0;
};

struct TrajectoryRow {
    int episode = 0;
    int t = 0;
    double reward = 0.0;
    double cost = 0.0;
    double p_target = 0.0;
    double p_response = 0.0;
    double min_v = 0.0;
    double max_v = 0.0;
};

// A policy queries the environment (observation or richer state) and
// returns the normalized action to apply.
using Policy = std::function<std::vector<double>(const env::Environment&)>;

// Deterministic rollouts over every scenario; per-scenario episode seeds
// derive from `seed` and the scenario index only, so different policies
// see identical episode windows.
EvalReport evaluate_policy(env::Environment& e, const Policy& policy,
                           const std::vector<market::RegulationScenario>& scenarios,
                           int episodes_per_scenario, std::uint64_t seed,
                           std::vector<TrajectoryRow>* trajectory = nullptr);

struct TrainResult {
    std::unique_ptr<agent::CsacAgent> agent;
    std::vector<EpisodeMetrics> metrics;
    // first episode whose evaluation profit reached a threshold; set by
    // episodes_to_reach
};

TrainResult train_run(const env::EnvConfig& env_cfg,
                      const std::vector<market::RegulationScenario>& train_scenarios,
                      const std::vector<market::RegulationScenario>& eval_scenarios,
                      const TrainConfig& cfg, const std::vector<env::Transition>* demos);

std::string metrics_to_csv(const std::vector<EpisodeMetrics>& metrics);
std::string trajectory_to_csv(const std::vector<TrajectoryRow>& rows);

// first episode index whose recorded evaluation profit >= threshold;
// fallback when never reached
int episodes_to_reach(const std::vector<EpisodeMetrics>& metrics, double threshold,
                      int fallback);

} // namespace griddispatch::trainer
