#include "griddispatch/agent.hpp"

#include "griddispatch/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace griddispatch::agent {

using learn::Mlp;
using nlohmann::json;

namespace {
constexpr double kLogSqrt2Pi = 0.9189385332046727; // 0.5 * log(2*pi)
constexpr double kSquashEps = 1e-6;

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}
} // namespace

struct CsacAgent::PolicyEval {
    learn::Workspace ws;
    std::vector<double> mu, ell_raw, ell, sigma, u, a, g;
    double logp = 0.0;
};

CsacAgent::CsacAgent(int obs_dim, int action_dim, AgentConfig cfg)
    : obs_dim_(obs_dim), action_dim_(action_dim), cfg_(std::move(cfg)), alpha_(cfg_.alpha) {
    if (obs_dim_ <= 0 || action_dim_ <= 0) throw std::runtime_error("agent: bad dimensions");
    if (cfg_.gamma <= 0.0 || cfg_.gamma >= 1.0)
        throw std::runtime_error("agent: gamma must be in (0, 1)");
    if (cfg_.batch_size == 0 || cfg_.batch_size % 2 != 0)
        throw std::runtime_error("agent: batch size must be positive and even");
    Rng rng(cfg_.init_seed);

    std::vector<int> pol_sizes{obs_dim_};
    std::vector<int> q_sizes{obs_dim_ + action_dim_};
    std::vector<int> v_sizes{obs_dim_};
    for (int h : cfg_.hidden) {
        pol_sizes.push_back(h);
        q_sizes.push_back(h);
        v_sizes.push_back(h);
    }
    pol_sizes.push_back(2 * action_dim_); // mean and log-std heads
    q_sizes.push_back(1);
    v_sizes.push_back(1);

    auto r0 = rng.fork(0);
    auto r1 = rng.fork(1);
    auto r2 = rng.fork(2);
    auto r3 = rng.fork(3);
    policy_ = Mlp::make(pol_sizes, learn::Activation::Relu, learn::Activation::Identity, r0);
    q1_ = Mlp::make(q_sizes, learn::Activation::Relu, learn::Activation::Identity, r1);
    q2_ = Mlp::make(q_sizes, learn::Activation::Relu, learn::Activation::Identity, r2);
    v_ = Mlp::make(v_sizes, learn::Activation::Relu, learn::Activation::Identity, r3);
    q1t_ = q1_;
    q2t_ = q2_;
    vt_ = v_;

    opt_policy_.lr = opt_q1_.lr = opt_q2_.lr = opt_v_.lr = cfg_.lr;
}

double CsacAgent::cost_value_limit() const {
    const double g = cfg_.gamma;
    const double T = static_cast<double>(cfg_.episode_steps);
    const double horizon_factor = (1.0 - std::pow(g, T)) / (1.0 - g);
    return horizon_factor * cfg_.cost_limit;
}

CsacAgent::PolicyEval CsacAgent::eval_policy_net(const Mlp& pol, const std::vector<double>& obs,
                                                 const std::vector<double>& noise) const {
    PolicyEval ev;
    const auto& out = learn::forward(pol, obs, ev.ws);
    const auto m = static_cast<std::size_t>(action_dim_);
    ev.mu.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(m));
    ev.ell_raw.assign(out.begin() + static_cast<std::ptrdiff_t>(m), out.end());
    ev.ell.resize(m);
    ev.sigma.resize(m);
    ev.u.resize(m);
    ev.a.resize(m);
    ev.g.resize(m);
    ev.logp = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        ev.ell[k] = std::clamp(ev.ell_raw[k], cfg_.log_std_min, cfg_.log_std_max);
        ev.sigma[k] = std::exp(ev.ell[k]);
        ev.u[k] = ev.mu[k] + ev.sigma[k] * noise[k];
        ev.a[k] = std::tanh(ev.u[k]);
        ev.g[k] = 1.0 - ev.a[k] * ev.a[k];
        ev.logp += -0.5 * noise[k] * noise[k] - kLogSqrt2Pi - ev.ell[k] -
                   std::log(ev.g[k] + kSquashEps);
    }
    return ev;
}

std::pair<std::vector<double>, double> CsacAgent::sample_action(const std::vector<double>& obs,
                                                                Rng& rng) const {
    std::vector<double> noise(static_cast<std::size_t>(action_dim_));
    for (auto& z : noise) z = rng.normal();
    auto ev = eval_policy_net(policy_, obs, noise);
    return {ev.a, ev.logp};
}

std::vector<double> CsacAgent::deterministic_action(const std::vector<double>& obs) const {
    learn::Workspace ws;
    const auto& out = learn::forward(policy_, obs, ws);
    std::vector<double> a(static_cast<std::size_t>(action_dim_));
    for (int k = 0; k < action_dim_; ++k) a[static_cast<std::size_t>(k)] = std::tanh(out[static_cast<std::size_t>(k)]);
    return a;
}

LossReport CsacAgent::train_step(const replay::ReplayBuffer& buffer, Rng& rng) {
    const std::size_t n = cfg_.batch_size;
    const auto batch = buffer.sample_batch(n, rng);

    // fresh policy noise per sample, drawn serially so worker count never
    // changes the stream
    std::vector<std::vector<double>> noise(n, std::vector<double>(static_cast<std::size_t>(action_dim_)));
    for (auto& row : noise)
        for (auto& z : row) z = rng.normal();

    struct Partial {
        std::vector<double> gp, gq1, gq2, gv;
        double q1_loss = 0.0, q2_loss = 0.0, v_loss = 0.0, pol_loss = 0.0;
        double cost = 0.0, neg_logp = 0.0;
    };
    const std::size_t blocks = std::min<std::size_t>(learn::kGradBlocks, n);
    std::vector<Partial> partials(blocks);
    const double inv_n = 1.0 / static_cast<double>(n);
    const double lam = lambda_;
    const double alpha = alpha_;

    parallel_for(blocks, [&](std::size_t bi) {
        Partial& part = partials[bi];
        part.gp.assign(policy_.param_count(), 0.0);
        part.gq1.assign(q1_.param_count(), 0.0);
        part.gq2.assign(q2_.param_count(), 0.0);
        part.gv.assign(v_.param_count(), 0.0);
        learn::Workspace wq1, wq2, wv, wvt, wq1t, wq2t, wq1a, wq2a;
        const std::size_t begin = n * bi / blocks;
        const std::size_t end = n * (bi + 1) / blocks;
        for (std::size_t s = begin; s < end; ++s) {
            const env::Transition& tr = *batch[s];
            part.cost += tr.cost;

            // critic regression target r - lambda*c + gamma * Vt(s')
            double y = tr.reward - lam * tr.cost;
            if (!tr.done) {
                const auto& vt_out = learn::forward(vt_, tr.next_state, wvt);
                y += cfg_.gamma * vt_out[0];
            }
            const auto sa = concat(tr.state, tr.action);
            {
                const auto& q1v = learn::forward(q1_, sa, wq1);
                const double diff = q1v[0] - y;
                part.q1_loss += diff * diff;
                learn::backward(q1_, wq1, {2.0 * diff * inv_n}, part.gq1);
            }
            {
                const auto& q2v = learn::forward(q2_, sa, wq2);
                const double diff = q2v[0] - y;
                part.q2_loss += diff * diff;
                learn::backward(q2_, wq2, {2.0 * diff * inv_n}, part.gq2);
            }

            // fresh squashed sample at s for the value and policy losses
            auto ev = eval_policy_net(policy_, tr.state, noise[s]);
            part.neg_logp += -ev.logp;
            const auto sa_pi = concat(tr.state, ev.a);
            const double q1t_pi = learn::forward(q1t_, sa_pi, wq1t)[0];
            const double q2t_pi = learn::forward(q2t_, sa_pi, wq2t)[0];
            {
                const double v_tgt = std::min(q1t_pi, q2t_pi) - alpha * ev.logp;
                const auto& vv = learn::forward(v_, tr.state, wv);
                const double diff = vv[0] - v_tgt;
                part.v_loss += diff * diff;
                learn::backward(v_, wv, {2.0 * diff * inv_n}, part.gv);
            }

            // policy loss alpha*logp - min(Q1, Q2)(s, a~); the min's input
            // gradient carries the Q signal back through the squash
            const double q1_pi = learn::forward(q1_, sa_pi, wq1a)[0];
            const double q2_pi = learn::forward(q2_, sa_pi, wq2a)[0];
            const bool use_q1 = q1_pi <= q2_pi;
            part.pol_loss += alpha * ev.logp - std::min(q1_pi, q2_pi);
            std::vector<double> qin_grad;
            {
                // throwaway gradient buffer: only the input gradient matters
                std::vector<double> scratch((use_q1 ? q1_ : q2_).param_count(), 0.0);
                learn::backward(use_q1 ? q1_ : q2_, use_q1 ? wq1a : wq2a, {-inv_n}, scratch,
                                &qin_grad);
            }
            std::vector<double> upstream(static_cast<std::size_t>(2 * action_dim_), 0.0);
            for (int k = 0; k < action_dim_; ++k) {
                const auto ku = static_cast<std::size_t>(k);
                const double dlogp_du = 2.0 * ev.a[ku] * ev.g[ku] / (ev.g[ku] + kSquashEps);
                const double dq_da = qin_grad[static_cast<std::size_t>(obs_dim_) + ku];
                const double du = alpha * inv_n * dlogp_du + dq_da * ev.g[ku];
                upstream[ku] = du;
                const bool clamped = ev.ell_raw[ku] < cfg_.log_std_min ||
                                     ev.ell_raw[ku] > cfg_.log_std_max;
                if (!clamped)
                    upstream[static_cast<std::size_t>(action_dim_) + ku] =
                        -alpha * inv_n + du * ev.sigma[ku] * noise[s][ku];
            }
            learn::backward(policy_, ev.ws, upstream, part.gp);
        }
    });

    // fold blocks in order
    Partial total = std::move(partials[0]);
    for (std::size_t bi = 1; bi < blocks; ++bi) {
        const Partial& part = partials[bi];
        for (std::size_t i = 0; i < total.gp.size(); ++i) total.gp[i] += part.gp[i];
        for (std::size_t i = 0; i < total.gq1.size(); ++i) total.gq1[i] += part.gq1[i];
        for (std::size_t i = 0; i < total.gq2.size(); ++i) total.gq2[i] += part.gq2[i];
        for (std::size_t i = 0; i < total.gv.size(); ++i) total.gv[i] += part.gv[i];
        total.q1_loss += part.q1_loss;
        total.q2_loss += part.q2_loss;
        total.v_loss += part.v_loss;
        total.pol_loss += part.pol_loss;
        total.cost += part.cost;
        total.neg_logp += part.neg_logp;
    }

    auto apply = [](Mlp& net, learn::Adam& opt, const std::vector<double>& grad) {
        auto params = net.flat_params();
        opt.step(params, grad);
        net.set_flat_params(params);
    };
    apply(q1_, opt_q1_, total.gq1);
    apply(q2_, opt_q2_, total.gq2);
    apply(v_, opt_v_, total.gv);
    apply(policy_, opt_policy_, total.gp);

    // multiplier: projected ascent on (discounted batch cost - limit)
    const double mean_cost = total.cost * inv_n;
    const double horizon_factor = (1.0 - std::pow(cfg_.gamma, static_cast<double>(cfg_.episode_steps))) /
                                  (1.0 - cfg_.gamma);
    lambda_ = std::max(0.0, lambda_ + cfg_.lr_lambda * (mean_cost * horizon_factor - cost_value_limit()));

    if (cfg_.alpha_auto) {
        const double target_entropy = -static_cast<double>(action_dim_);
        alpha_ = std::max(1e-6, alpha_ - cfg_.lr_alpha * (total.neg_logp * inv_n - target_entropy));
    }

    // soft target updates
    auto soft = [&](Mlp& tgt, const Mlp& src) {
        auto tp = tgt.flat_params();
        const auto sp = src.flat_params();
        for (std::size_t i = 0; i < tp.size(); ++i)
            tp[i] = (1.0 - cfg_.tau) * tp[i] + cfg_.tau * sp[i];
        tgt.set_flat_params(tp);
    };
    soft(q1t_, q1_);
    soft(q2t_, q2_);
    soft(vt_, v_);

    LossReport rep;
    rep.q1 = total.q1_loss * inv_n;
    rep.q2 = total.q2_loss * inv_n;
    rep.value = total.v_loss * inv_n;
    rep.policy = total.pol_loss * inv_n;
    rep.lambda = lambda_;
    rep.alpha = alpha_;
    rep.batch_mean_cost = mean_cost;
    return rep;
}

const Mlp& CsacAgent::net_by_name(const std::string& name) const {
    if (name == "policy") return policy_;
    if (name == "q1") return q1_;
    if (name == "q2") return q2_;
    if (name == "v") return v_;
    if (name == "q1t") return q1t_;
    if (name == "q2t") return q2t_;
    if (name == "vt") return vt_;
    throw std::runtime_error("agent: unknown net '" + name + "'");
}

Mlp& CsacAgent::net_by_name(const std::string& name) {
    return const_cast<Mlp&>(static_cast<const CsacAgent*>(this)->net_by_name(name));
}

std::vector<double> CsacAgent::net_params(const std::string& name) const {
    return net_by_name(name).flat_params();
}

void CsacAgent::set_net_params(const std::string& name, const std::vector<double>& flat) {
    net_by_name(name).set_flat_params(flat);
}

static const char* kNetNames[] = {"policy", "q1", "q2", "v", "q1t", "q2t", "vt"};

std::string CsacAgent::to_json(std::uint64_t config_hash) const {
    json j;
    j["version"] = 1;
    j["config_hash"] = config_hash;
    j["obs_dim"] = obs_dim_;
    j["action_dim"] = action_dim_;
    j["hidden"] = cfg_.hidden;
    j["gamma"] = cfg_.gamma;
    j["lr"] = cfg_.lr;
    j["lr_lambda"] = cfg_.lr_lambda;
    j["tau"] = cfg_.tau;
    j["alpha"] = alpha_;
    j["alpha_auto"] = cfg_.alpha_auto;
    j["cost_limit"] = cfg_.cost_limit;
    j["episode_steps"] = cfg_.episode_steps;
    j["batch_size"] = cfg_.batch_size;
    j["lambda"] = lambda_;
    for (const char* name : kNetNames) {
        const auto& net = net_by_name(name);
        j["nets"][name] = {{"sizes", net.sizes()}, {"params", net.flat_params()}};
    }
    return j.dump();
}

CsacAgent CsacAgent::from_json(const std::string& text, std::uint64_t expect_config_hash) {
    json j = json::parse(text);
    if (j.at("version").get<int>() != 1)
        throw std::runtime_error("checkpoint: unsupported version");
    if (expect_config_hash != 0 &&
        j.at("config_hash").get<std::uint64_t>() != expect_config_hash)
        throw std::runtime_error("checkpoint: config hash mismatch");
    AgentConfig cfg;
    cfg.hidden = j.at("hidden").get<std::vector<int>>();
    cfg.gamma = j.at("gamma").get<double>();
    cfg.lr = j.at("lr").get<double>();
    cfg.lr_lambda = j.at("lr_lambda").get<double>();
    cfg.tau = j.at("tau").get<double>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.alpha_auto = j.at("alpha_auto").get<bool>();
    cfg.cost_limit = j.at("cost_limit").get<double>();
    cfg.episode_steps = j.at("episode_steps").get<int>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    CsacAgent agent(j.at("obs_dim").get<int>(), j.at("action_dim").get<int>(), cfg);
    agent.lambda_ = j.at("lambda").get<double>();
    agent.alpha_ = cfg.alpha;
    for (const char* name : kNetNames) {
        const auto& jn = j.at("nets").at(name);
        auto& net = agent.net_by_name(name);
        if (jn.at("sizes").get<std::vector<int>>() != net.sizes())
            throw std::runtime_error("checkpoint: net shape mismatch for '" + std::string(name) + "'");
        net.set_flat_params(jn.at("params").get<std::vector<double>>());
    }
    return agent;
}

std::pair<std::vector<double>, double> CsacAgent::sample_action_from(
    const Mlp& pol, const std::vector<double>& obs, Rng& rng) const {
    std::vector<double> noise(static_cast<std::size_t>(action_dim_));
    for (auto& z : noise) z = rng.normal();
    auto ev = eval_policy_net(pol, obs, noise);
    return {ev.a, ev.logp};
}

} // namespace griddispatch::agent
