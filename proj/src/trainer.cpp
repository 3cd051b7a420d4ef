#include "griddispatch/trainer.hpp"

#include "griddispatch/csv.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace griddispatch::trainer {

EvalReport evaluate_policy(env::Environment& e, const Policy& policy,
                           const std::vector<market::RegulationScenario>& scenarios,
                           int episodes_per_scenario, std::uint64_t seed,
                           std::vector<TrajectoryRow>* trajectory) {
    if (scenarios.empty()) throw std::runtime_error("evaluate: no scenarios given");
    if (episodes_per_scenario <= 0) throw std::runtime_error("evaluate: need >= 1 episode");
    EvalReport rep;
    double step_seconds = 0.0;
    double perf_sum = 0.0;
    int episode_counter = 0;
    for (std::size_t si = 0; si < scenarios.size(); ++si) {
        for (int ep = 0; ep < episodes_per_scenario; ++ep) {
            std::uint64_t mix = seed ^ (0x9e3779b97f4a7c15ull * (si * 1000 + static_cast<std::size_t>(ep) + 1));
            const std::uint64_t ep_seed = splitmix64(mix);
            e.reset(scenarios[si], ep_seed);
            double profit = 0.0;
            int t = 0;
            while (!e.done()) {
                const auto t0 = std::chrono::steady_clock::now();
                const auto action = policy(e);
                step_seconds +=
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                const auto res = e.step(action);
                profit += res.reward;
                rep.mean_cost_per_step += res.cost;
                perf_sum += res.perf;
                if (trajectory)
                    trajectory->push_back({episode_counter, t, res.reward,
                                           static_cast<double>(res.cost), res.target_kw,
                                           res.response_kw, res.min_v, res.max_v});
                ++rep.steps;
                ++t;
            }
            rep.mean_profit += profit;
            ++rep.episodes;
            ++episode_counter;
        }
    }
    rep.mean_profit /= static_cast<double>(rep.episodes);
    rep.mean_cost_per_step /= static_cast<double>(rep.steps);
    rep.mean_step_seconds = step_seconds / static_cast<double>(rep.steps);
    rep.mean_perf = perf_sum / static_cast<double>(rep.steps);
    return rep;
}

TrainResult train_run(const env::EnvConfig& env_cfg,
                      const std::vector<market::RegulationScenario>& train_scenarios,
                      const std::vector<market::RegulationScenario>& eval_scenarios,
                      const TrainConfig& cfg, const std::vector<env::Transition>* demos) {
    if (train_scenarios.empty()) throw std::runtime_error("train: no training scenarios");
    if (cfg.sqil && (demos == nullptr || demos->empty()))
        throw std::runtime_error("train: SQIL mode requires demonstrations");

    env::Environment e(env_cfg);
    env::Environment eval_env(env_cfg);

    agent::AgentConfig acfg = cfg.agent;
    acfg.episode_steps = env_cfg.episode_steps;
    TrainResult result;
    result.agent = std::make_unique<agent::CsacAgent>(e.obs_dim(), e.action_dim(), acfg);
    agent::CsacAgent& agent = *result.agent;

    replay::ReplayBuffer buffer(cfg.buffer_capacity, cfg.sqil);
    if (cfg.sqil)
        for (const auto& d : *demos) buffer.add_demo(d);

    Rng rng(cfg.seed);
    Rng action_rng = rng.fork(1);
    Rng train_rng = rng.fork(2);
    Rng noise_rng = rng.fork(3);

    agent::LossReport last_losses;
    long total_steps = 0;

    for (int episode = 0; episode < cfg.episodes; ++episode) {
        const auto& scenario =
            train_scenarios[static_cast<std::size_t>(rng.uniform_int(
                0, static_cast<std::int64_t>(train_scenarios.size()) - 1))];
        const std::uint64_t ep_seed = rng.next_u64();
        std::vector<double> obs = e.reset(scenario, ep_seed);

        // per-episode perturbed policy copy for exploration
        learn::Mlp rollout_policy = agent.policy_net();
        if (cfg.param_noise > 0.0) {
            auto params = rollout_policy.flat_params();
            for (auto& p : params) p += noise_rng.normal(0.0, cfg.param_noise);
            rollout_policy.set_flat_params(params);
        }

        double reward_sum = 0.0;
        double cost_sum = 0.0;
        int steps = 0;
        while (!e.done()) {
            std::vector<double> action;
            if (buffer.agent_size() < cfg.warmup) {
                action.resize(static_cast<std::size_t>(e.action_dim()));
                for (auto& a : action) a = action_rng.uniform(-1.0, 1.0);
            } else {
                action = agent.sample_action_from(rollout_policy, obs, action_rng).first;
            }
            const auto res = e.step(action);
            env::Transition tr;
            tr.state = obs;
            tr.action = action;
            tr.next_state = e.observation();
            tr.reward = cfg.sqil ? 0.0 : res.reward * cfg.reward_scale;
            tr.cost = res.cost;
            tr.done = res.done;
            buffer.add_agent(std::move(tr));
            obs = e.observation();
            reward_sum += res.reward;
            cost_sum += res.cost;
            ++steps;
            ++total_steps;

            const std::size_t ready =
                std::max<std::size_t>(cfg.warmup, cfg.agent.batch_size);
            if (buffer.agent_size() + (cfg.sqil ? buffer.demo_size() : 0) >= ready &&
                total_steps % cfg.train_every == 0) {
                for (int u = 0; u < cfg.updates_per_round; ++u)
                    last_losses = agent.train_step(buffer, train_rng);
            }
        }

        EpisodeMetrics m;
        m.episode = episode;
        m.mean_reward = reward_sum / static_cast<double>(steps);
        m.mean_cost = cost_sum / static_cast<double>(steps);
        m.lambda = agent.lambda();
        m.q1_loss = last_losses.q1;
        m.q2_loss = last_losses.q2;
        m.v_loss = last_losses.value;
        m.policy_loss = last_losses.policy;

        if (cfg.eval_every > 0 && !eval_scenarios.empty() &&
            ((episode + 1) % cfg.eval_every == 0 || episode + 1 == cfg.episodes)) {
            const auto rep = evaluate_policy(
                eval_env,
                [&agent](const env::Environment& ev) {
                    return agent.deterministic_action(ev.observation());
                },
                eval_scenarios, cfg.eval_episodes_per_scenario, 0x5eedu);
            m.evaluated = true;
            m.eval_profit = rep.mean_profit;
        }
        result.metrics.push_back(m);
    }
    return result;
}

std::string metrics_to_csv(const std::vector<EpisodeMetrics>& metrics) {
    csv::Writer w({"episode", "mean_reward", "mean_cost", "lambda", "q1_loss", "q2_loss",
                   "v_loss", "policy_loss", "eval_profit"});
    for (const auto& m : metrics)
        w.add_row({std::to_string(m.episode), csv::format_num(m.mean_reward),
                   csv::format_num(m.mean_cost), csv::format_num(m.lambda),
                   csv::format_num(m.q1_loss), csv::format_num(m.q2_loss),
                   csv::format_num(m.v_loss), csv::format_num(m.policy_loss),
                   m.evaluated ? csv::format_num(m.eval_profit) : ""});
    return w.str();
}

std::string trajectory_to_csv(const std::vector<TrajectoryRow>& rows) {
    csv::Writer w({"episode", "t", "reward", "cost", "p_target", "p_response", "min_v",
                   "max_v"});
    for (const auto& r : rows)
        w.add_row({std::to_string(r.episode), std::to_string(r.t), csv::format_num(r.reward),
                   csv::format_num(r.cost), csv::format_num(r.p_target),
                   csv::format_num(r.p_response), csv::format_num(r.min_v),
                   csv::format_num(r.max_v)});
    return w.str();
}

int episodes_to_reach(const std::vector<EpisodeMetrics>& metrics, double threshold,
                      int fallback) {
    for (const auto& m : metrics)
        if (m.evaluated && m.eval_profit >= threshold) return m.episode + 1;
    return fallback;
}

} // namespace griddispatch::trainer
