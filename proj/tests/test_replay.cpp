#include "griddispatch/replay.hpp"

#include <doctest.h>

using namespace griddispatch;
using namespace griddispatch::replay;

namespace {

env::Transition make_tr(double reward, bool done = false) {
    env::Transition t;
    t.state = {0.0};
    t.action = {0.0};
    t.next_state = {0.0};
    t.reward = reward;
    t.cost = 0.0;
    t.done = done;
    return t;
}

} // namespace

TEST_CASE("SQIL batches are exactly half demo at +1 and half agent at 0") {
    ReplayBuffer buf(1000, true);
    for (int i = 0; i < 40; ++i) buf.add_demo(make_tr(0.123)); // reward gets pinned
    for (int i = 0; i < 40; ++i) buf.add_agent(make_tr(3.21));
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const auto batch = buf.sample_batch(64, rng);
        REQUIRE(batch.size() == 64);
        int demo = 0, agent = 0;
        for (const auto* t : batch) {
            if (t->demo) {
                ++demo;
                CHECK(t->reward == 1.0);
            } else {
                ++agent;
                CHECK(t->reward == 0.0);
            }
        }
        CHECK(demo == 32);
        CHECK(agent == 32);
    }
}

TEST_CASE("one empty pool falls back to the other") {
    ReplayBuffer buf(100, true);
    for (int i = 0; i < 10; ++i) buf.add_demo(make_tr(1.0));
    Rng rng(2);
    const auto batch = buf.sample_batch(16, rng);
    for (const auto* t : batch) {
        CHECK(t->demo);
        CHECK(t->reward == 1.0);
    }

    ReplayBuffer buf2(100, true);
    for (int i = 0; i < 10; ++i) buf2.add_agent(make_tr(0.5));
    const auto batch2 = buf2.sample_batch(16, rng);
    for (const auto* t : batch2) CHECK(!t->demo);
}

TEST_CASE("misuse throws") {
    ReplayBuffer buf(100, true);
    Rng rng(3);
    CHECK_THROWS(buf.sample_batch(8, rng));  // both pools empty
    buf.add_demo(make_tr(1.0));
    CHECK_THROWS(buf.sample_batch(7, rng));  // odd SQIL batch
    CHECK_THROWS(ReplayBuffer(0, true));
}

TEST_CASE("agent pool is a ring of fixed capacity") {
    ReplayBuffer buf(4, false);
    for (int i = 0; i < 9; ++i) buf.add_agent(make_tr(static_cast<double>(i)));
    CHECK(buf.agent_size() == 4);
    Rng rng(4);
    const auto batch = buf.sample_batch(32, rng);
    for (const auto* t : batch) CHECK(t->reward >= 5.0); // only the newest survive
}

TEST_CASE("plain mode keeps the env reward and ignores demos") {
    ReplayBuffer buf(100, false);
    buf.add_agent(make_tr(2.5));
    Rng rng(5);
    const auto batch = buf.sample_batch(4, rng);
    for (const auto* t : batch) CHECK(t->reward == 2.5);
}
