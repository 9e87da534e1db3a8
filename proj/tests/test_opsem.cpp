#include <gtest/gtest.h>

#include "rmmlab/arc.hpp"
#include "rmmlab/enumerate.hpp"
#include "rmmlab/opsem.hpp"
#include "rmmlab/syntax.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace rmmlab;
using namespace rmmlab::testing;

namespace {

const Bounds kArcBounds{64, 4, 64};

struct ArcCase {
    Program program;
    std::vector<Execution> executions;
};

const ArcCase& arc_case(int clones)
{
    static std::map<int, ArcCase> cache;
    auto it = cache.find(clones);
    if (it == cache.end()) {
        ArcCase c;
        c.program = build_arc_program(ArcScenario{clones, 42});
        c.executions = enumerate_executions(c.program, kArcBounds);
        it = cache.emplace(clones, std::move(c)).first;
    }
    return it->second;
}

} // namespace

TEST(FourState, HoldsOnEveryExploredArcConfiguration)
{
    for (int clones : {0, 1}) {
        const auto& c = arc_case(clones);
        ASSERT_FALSE(c.executions.empty());
        for (auto& e : c.executions) {
            auto v = explore_safety(c.program, GraphGuidedOracle{&e.graph});
            EXPECT_TRUE(v.safe) << clones;
            EXPECT_GT(v.states, 1u);
            EXPECT_EQ(v.four_state_violations, 0u);
        }
        auto w = explore_safety(c.program, WitnessSearchOracle{});
        EXPECT_TRUE(w.safe) << clones;
        EXPECT_EQ(w.four_state_violations, 0u);
    }
}

TEST(FourState, PredicateFlagsAtomicEntryOverPlainCell)
{
    Configuration c;
    c.heap[1000] = CellState::reserved();
    c.atomic[1000] = AtomicCell{"arc", Omega{1, {}}};
    EXPECT_TRUE(four_state_ok(c));
    c.heap[1000] = CellState::of(3);
    EXPECT_FALSE(four_state_ok(c));
    c.heap.erase(1000);
    EXPECT_FALSE(four_state_ok(c));
    c.atomic.clear();
    EXPECT_TRUE(four_state_ok(c));
}

TEST(Replay, DeterministicOnEveryArcExecution)
{
    for (int clones : {0, 1}) {
        const auto& c = arc_case(clones);
        for (auto& e : c.executions) {
            long n = check_replay_determinism(c.program, e.graph, event_set(e.graph));
            EXPECT_GT(n, 1) << clones;
        }
    }
}

TEST(Replay, PrefixesCorrespondToConfigurations)
{
    std::mt19937_64 rng(seed() + 50);
    for (int clones : {0, 1}) {
        const auto& c = arc_case(clones);
        for (auto& e : c.executions) {
            auto lead = step_leaders(c.program, e.graph);
            for (int round = 0; round < 5; ++round) {
                auto lin = random_linearisation(e.graph, rng);
                std::set<EventId> P;
                int checked = 0;
                for (auto& x : lin) {
                    P.insert(x);
                    if (!closed_under_steps(lead, P))
                        continue;
                    auto conf = replay_prefix(c.program, e.graph, hb_order(e.graph, P));
                    EXPECT_TRUE(config_corresponds(c.program, e.graph, P, conf));
                    EXPECT_TRUE(four_state_ok(conf));
                    ++checked;
                }
                EXPECT_GT(checked, 2);
            }
        }
    }
}

TEST(Replay, OrdersAgreeOnTheFinalConfiguration)
{
    std::mt19937_64 rng(seed() + 51);
    const auto& c = arc_case(1);
    for (auto& e : c.executions) {
        auto a = replay_prefix(c.program, e.graph, random_linearisation(e.graph, rng));
        auto b = replay_prefix(c.program, e.graph, hb_order(e.graph, event_set(e.graph)));
        EXPECT_TRUE(a.same_state(b));
        EXPECT_EQ(a.key(), b.key());
    }
}

TEST(Replay, OutOfOrderEventIsRejected)
{
    const auto& c = arc_case(0);
    const auto& g = c.executions.at(0).graph;
    auto order = hb_order(g, event_set(g));
    std::vector<EventId> late;
    for (auto& e : order)
        if (e.index > 2 && late.empty())
            late.push_back(e);
    ASSERT_FALSE(late.empty());
    EXPECT_THROW(replay_prefix(c.program, g, late), ReplayStuck);
}

TEST(Safety, DoubleFreeGetsStuck)
{
    auto p = parse_program("thread {\n  let a = cons(0) in\n  free(a);\n  free(a)\n}\n");
    auto v = explore_safety(p, WitnessSearchOracle{});
    EXPECT_FALSE(v.safe);
    ASSERT_TRUE(v.stuck_thread);
    EXPECT_EQ(*v.stuck_thread, 1);
    ASSERT_TRUE(v.stuck_trace);
    EXPECT_FALSE(v.stuck_trace->empty());
}

TEST(Safety, UseAfterFreeGetsStuck)
{
    auto p = parse_program("thread {\n  let a = cons(0) in\n  free(a);\n  [a]_na\n}\n");
    EXPECT_FALSE(explore_safety(p, WitnessSearchOracle{}).safe);
}

TEST(Safety, RacingNonatomicWritesGetStuck)
{
    auto racy = parse_program("loc X = 1\nthread {\n  [X] :=na 1\n}\nthread {\n  [X] :=na 2\n}\n");
    EXPECT_FALSE(explore_safety(racy, WitnessSearchOracle{}).safe);
    auto fine = parse_program("loc X = 1\nthread {\n  [X] :=na 1;\n  [X] :=na 2\n}\n");
    EXPECT_TRUE(explore_safety(fine, WitnessSearchOracle{}).safe);
}

TEST(Safety, FreeWithoutOwnershipGetsStuck)
{
    // every clone frees unconditionally, so the second free of the cell fails
    auto p = parse_program("thread {\n"
                           "  let a = cons(0) in\n"
                           "  fork(free(a));\n"
                           "  free(a)\n"
                           "}\n");
    EXPECT_FALSE(explore_safety(p, WitnessSearchOracle{}).safe);
}

TEST(Safety, StateBoundIsEnforced)
{
    const auto& c = arc_case(1);
    ExploreOptions opt;
    opt.max_states = 3;
    EXPECT_THROW(explore_safety(c.program, WitnessSearchOracle{}, opt), BoundExceeded);
}

TEST(Opsem, GraphGuidedOracleNeedsAGraph)
{
    const auto& c = arc_case(0);
    EXPECT_THROW(Opsem(c.program, GraphGuidedOracle{}), Error);
}
