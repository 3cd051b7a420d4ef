#pragma once

#include "griddispatch/env.hpp"
#include "griddispatch/rng.hpp"

#include <vector>

namespace griddispatch::replay {

// Two-pool buffer: a demonstration pool fixed after loading and a ring of
// agent experience. In SQIL mode demo rewards are pinned to +1 and agent
// rewards to 0 on insertion.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t agent_capacity, bool sqil_mode);

    void add_demo(env::Transition t);
    void add_agent(env::Transition t);

    std::size_t demo_size() const { return demos_.size(); }
    std::size_t agent_size() const { return agent_count_; }
    bool sqil_mode() const { return sqil_; }

    // SQIL mode: exactly batch/2 demo + batch/2 agent transitions, uniform
    // within each pool (falls back to the non-empty pool with a one-time
    // stderr note). Plain mode: uniform over the agent pool.
    std::vector<const env::Transition*> sample_batch(std::size_t batch, Rng& rng) const;

    const std::vector<env::Transition>& demos() const { return demos_; }

private:
    std::vector<env::Transition> demos_;
    std::vector<env::Transition> agent_;
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::size_t agent_count_ = 0;
    bool sqil_;
    mutable bool fallback_noted_ = false;
};

} // namespace griddispatch::replay
