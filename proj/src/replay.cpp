#include "griddispatch/replay.hpp"

#include <cstdio>
#include <stdexcept>

namespace griddispatch::replay {

ReplayBuffer::ReplayBuffer(std::size_t agent_capacity, bool sqil_mode)
    : capacity_(agent_capacity), sqil_(sqil_mode) {
    if (capacity_ == 0) throw std::runtime_error("replay: capacity must be > 0");
    agent_.reserve(capacity_);
}

void ReplayBuffer::add_demo(env::Transition t) {
    t.demo = true;
    t.reward = 1.0;
    demos_.push_back(std::move(t));
}

void ReplayBuffer::add_agent(env::Transition t) {
    t.demo = false;
    if (sqil_) t.reward = 0.0;
    if (agent_.size() < capacity_) {
        agent_.push_back(std::move(t));
    } else {
        agent_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
    if (agent_count_ < capacity_) ++agent_count_;
}

std::vector<const env::Transition*> ReplayBuffer::sample_batch(std::size_t batch,
                                                               Rng& rng) const {
    if (batch == 0) throw std::runtime_error("replay: empty batch requested");
    std::vector<const env::Transition*> out;
    out.reserve(batch);
    if (!sqil_) {
        if (agent_count_ == 0) throw std::runtime_error("replay: agent pool is empty");
        for (std::size_t k = 0; k < batch; ++k)
            out.push_back(&agent_[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(agent_count_) - 1))]);
        return out;
    }
    if (batch % 2 != 0) throw std::runtime_error("replay: SQIL batch size must be even");
    if (demos_.empty() && agent_count_ == 0)
        throw std::runtime_error("replay: both pools are empty");
    if (demos_.empty() || agent_count_ == 0) {
        if (!fallback_noted_) {
            std::fprintf(stderr, "replay: %s pool empty, sampling only from the other pool\n",
                         demos_.empty() ? "demo" : "agent");
            fallback_noted_ = true;
        }
        const auto& pool = demos_.empty() ? agent_ : demos_;
        const std::size_t count = demos_.empty() ? agent_count_ : demos_.size();
        for (std::size_t k = 0; k < batch; ++k)
            out.push_back(&pool[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(count) - 1))]);
        return out;
    }
    for (std::size_t k = 0; k < batch / 2; ++k)
        out.push_back(&demos_[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(demos_.size()) - 1))]);
    for (std::size_t k = 0; k < batch / 2; ++k)
        out.push_back(&agent_[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(agent_count_) - 1))]);
    return out;
}

} // namespace griddispatch::replay
