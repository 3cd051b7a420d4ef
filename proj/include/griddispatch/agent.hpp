#pragma once

#include "griddispatch/mlp.hpp"
#include "griddispatch/replay.hpp"
#include "griddispatch/rng.hpp"

#include <string>
#include <vector>

namespace griddispatch::agent {

struct AgentConfig {
    std::vector<int> hidden = {64, 32};
    double gamma = 0.99;
    double lr = 0.001;
    double lr_lambda = 0.005;
    double tau = 0.005;
    double alpha = 0.1;
    bool alpha_auto = false;
    double lr_alpha = 0.0005;
    double cost_limit = 0.0; // per-step violation limit
    int episode_steps = 450; // T in the discounted cost-limit formula
    std::size_t batch_size = 256;
    double log_std_min = -5.0;
    double log_std_max = 2.0;
    std::uint64_t init_seed = 1;
};

struct LossReport {
    double q1 = 0.0;
    double q2 = 0.0;
    double value = 0.0;
    double policy = 0.0;
    double lambda = 0.0;
    double alpha = 0.0;
    double batch_mean_cost = 0.0;
};

// Squashed-Gaussian soft actor-critic with twin critics, a state-value
// network, soft-updated targets, and a projected Lagrange multiplier that
// prices the violation cost into the critic targets.
class CsacAgent {
public:
    CsacAgent(int obs_dim, int action_dim, AgentConfig cfg);

    int obs_dim() const { return obs_dim_; }
    int action_dim() const { return action_dim_; }
    const AgentConfig& config() const { return cfg_; }

    // reparameterized sample squashed by tanh, with its log-probability
    std::pair<std::vector<double>, double> sample_action(const std::vector<double>& obs,
                                                         Rng& rng) const;
    std::vector<double> deterministic_action(const std::vector<double>& obs) const;

    // one stochastic-gradient update of critics, value net, policy and the
    // multiplier from a buffer sample
    LossReport train_step(const replay::ReplayBuffer& buffer, Rng& rng);

    double lambda() const { return lambda_; }
    double alpha() const { return alpha_; }
    // (1 - gamma^T) / (1 - gamma) * cost_limit
    double cost_value_limit() const;

    // named access for tests and checkpoints: policy, q1, q2, v, q1t, q2t, vt
    std::vector<double> net_params(const std::string& name) const;
    void set_net_params(const std::string& name, const std::vector<double>& flat);

    std::string to_json(std::uint64_t config_hash) const;
    static CsacAgent from_json(const std::string& text, std::uint64_t expect_config_hash);

    // rollout-time parameter-noise exploration: callers perturb a copy of
    // policy_net() and sample through it
    const learn::Mlp& policy_net() const { return policy_; }
    std::pair<std::vector<double>, double> sample_action_from(const learn::Mlp& pol,
                                                              const std::vector<double>& obs,
                                                              Rng& rng) const;

private:
    int obs_dim_;
    int action_dim_;
    AgentConfig cfg_;
    learn::Mlp policy_, q1_, q2_, v_;
    learn::Mlp q1t_, q2t_, vt_;
    learn::Adam opt_policy_, opt_q1_, opt_q2_, opt_v_;
    double lambda_ = 0.0;
    double alpha_;

    const learn::Mlp& net_by_name(const std::string& name) const;
    learn::Mlp& net_by_name(const std::string& name);

    struct PolicyEval;
    PolicyEval eval_policy_net(const learn::Mlp& pol, const std::vector<double>& obs,
                               const std::vector<double>& noise) const;
};

} // namespace griddispatch::agent
