#include <gtest/gtest.h>

#include "rmmlab/arc.hpp"
#include "rmmlab/enumerate.hpp"
#include "rmmlab/graph_io.hpp"
#include "rmmlab/xmm.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace rmmlab;
using namespace rmmlab::testing;

namespace {

Bounds small_bounds()
{
    Bounds b;
    b.max_events = 12;
    return b;
}

ExecutionGraph witness(const Program& p)
{
    auto v = check_litmus(p);
    EXPECT_TRUE(v.observable);
    return v.witnesses.at(0).graph;
}

void expect_plans_release_clean(const Reachability& r, const ExecutionGraph& target)
{
    if (r.constructible) {
        EXPECT_GT(r.plans.size(), 0u);
    }
    EXPECT_EQ(release_check_failures(r, target), 0);
}

} // namespace

TEST(Ymm, LoadBufferingIsConstructible)
{
    for (auto f : {"lb.lit", "lbf.lit"}) {
        auto p = parse_program(corpus(f));
        auto target = witness(p);
        ASSERT_LE(target.size(), 12u);
        for (int k : {1, 2, 3}) {
            auto r = ymm_reachable(p, target, small_bounds(), k);
            ASSERT_TRUE(r.constructible) << f << " k=" << k;
            EXPECT_EQ(print_graph(r.trace.steps.back().graph), print_graph(target));
            EXPECT_TRUE(validate_trace(r.trace, Model::YC20)) << f;
            EXPECT_GE(r.trace.re_executions(), 1);
            EXPECT_LE(r.trace.re_executions(), k);
            expect_plans_release_clean(r, target);
        }
    }
}

TEST(Ymm, LoadBufferingNeedsAReExecution)
{
    auto p = parse_program(corpus("lb.lit"));
    auto r = ymm_reachable(p, witness(p), small_bounds(), 0);
    EXPECT_FALSE(r.constructible);
}

TEST(Ymm, DependentLoadBufferingIsNotWithinBounds)
{
    auto p = parse_program(corpus("lbd.lit"));
    auto target = witness(p);
    ASSERT_LE(target.size(), 12u);
    auto r = ymm_reachable(p, target, small_bounds(), 3);
    EXPECT_FALSE(r.constructible);
    EXPECT_GT(r.universe, 0u);
    expect_plans_release_clean(r, target);
}

TEST(Xmm, LoadBufferingIsConstructible)
{
    for (auto f : {"lb.lit", "lbf.lit"}) {
        auto p = parse_program(corpus(f));
        auto target = witness(p);
        auto r = xmm_reachable(p, target, small_bounds(), 2);
        ASSERT_TRUE(r.constructible) << f;
        EXPECT_TRUE(validate_trace(r.trace, Model::XC20)) << f;
    }
    auto p = parse_program(corpus("lbd.lit"));
    EXPECT_FALSE(xmm_reachable(p, witness(p), small_bounds(), 3).constructible);
}

TEST(Ymm, RejectsLowLevelTargets)
{
    auto p = parse_program("loc X = 1\nthread {\n  FAA_rlx(X, 1)\n}\n");
    auto g = enumerate_executions(p).at(0).graph;
    ASSERT_TRUE(g.has_rmw_events());
    EXPECT_THROW(ymm_reachable(p, to_low_level(g)), NotHighLevel);
}

TEST(ReExecute, CommittedReleaseMustBeDetermined)
{
    // thread 1: W_rlx(X, 1); W_rel(Y, 1); committing only the release write
    auto g = parse_graph("event 0 0 WriteNA loc=1 val=0\n"
                         "event 0 1 WriteNA loc=2 val=0\n"
                         "event 1 0 WriteRlx loc=1 val=1\n"
                         "event 1 1 WriteRel loc=2 val=1\n"
                         "po 0.0 1.0\npo 0.0 1.1\npo 0.1 1.0\npo 0.1 1.1\npo 1.0 1.1\n"
                         "mo 0.0 1.0\nmo 0.1 1.1\n");
    ASSERT_TRUE(is_consistent(g));
    ReExecutePlan bad;
    bad.committed = {{0, 0}, {0, 1}, {1, 1}};
    bad.determined = {{0, 0}, {0, 1}};
    EXPECT_EQ(committed_release_violations(g, bad), (std::vector<EventId>{{1, 1}}));
    EXPECT_FALSE(validate_re_execute_step(g, g, bad));

    ReExecutePlan good;
    good.committed = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    good.determined = good.committed;
    EXPECT_TRUE(committed_release_violations(g, good).empty());
    EXPECT_TRUE(validate_re_execute_step(g, g, good));
}

TEST(ReExecute, ReadsMustKeepCommittedSources)
{
    auto p = parse_program(corpus("lb.lit"));
    auto target = witness(p);
    auto r = ymm_reachable(p, target, small_bounds(), 2);
    ASSERT_TRUE(r.constructible);
    for (auto& s : r.trace.steps) {
        if (s.kind != ConstructionStep::Kind::ReExecute)
            continue;
        for (auto& e : s.plan.committed)
            if (is_readlike(s.graph.label(e).op.kind)) {
                auto src = s.graph.rf_source(e);
                ASSERT_TRUE(src);
                EXPECT_TRUE(s.plan.committed.count(*src));
            }
    }
}

TEST(Trace, JsonIsVersioned)
{
    auto p = parse_program(corpus("lb.lit"));
    auto r = ymm_reachable(p, witness(p), small_bounds(), 1);
    ASSERT_TRUE(r.constructible);
    auto j = to_json(r.trace);
    EXPECT_EQ(j.at("format"), "rmmlab-trace");
    EXPECT_EQ(j.at("version"), 1);
    EXPECT_EQ(j.at("steps").size(), r.trace.steps.size());
}

TEST(Trace, TamperedTraceFailsValidation)
{
    auto p = parse_program(corpus("lb.lit"));
    auto r = ymm_reachable(p, witness(p), small_bounds(), 1);
    ASSERT_TRUE(r.constructible);
    auto t = r.trace;
    for (auto& s : t.steps)
        if (s.kind == ConstructionStep::Kind::ReExecute) {
            s.plan.determined.clear();
            s.plan.committed.clear();
        }
    // dropping a step breaks the chain
    auto t2 = r.trace;
    t2.steps.erase(t2.steps.begin() + static_cast<long>(t2.steps.size()) / 2);
    EXPECT_FALSE(validate_trace(t2, Model::YC20));
    // re-running the reads from scratch cannot reach the cycle
    EXPECT_FALSE(validate_trace(t, Model::YC20));
}

TEST(Grounding, ArcExecutionsAreGrounded)
{
    auto p = build_arc_program(ArcScenario{1, 42});
    auto all = enumerate_executions(p, Bounds{64, 4, 64});
    ASSERT_FALSE(all.empty());
    for (auto& e : all) {
        auto rep = check_grounded(e.graph, p.specs);
        EXPECT_TRUE(rep.grounded());
        EXPECT_FALSE(rep.events.empty());
    }
}

TEST(Grounding, AccessWithoutBeginIsReported)
{
    auto p = parse_program("loc X = 1\nthread {\n  FAA_rlx(X, 1)\n}\n");
    auto g = enumerate_executions(p).at(0).graph;
    auto rep = check_grounded(g, {{"arc", arc_spec()}});
    EXPECT_FALSE(rep.grounded());
    EXPECT_EQ(rep.events.begin()->second, GroundingStatus::NoBeginAtomic);
}

TEST(Grounding, DisabledOperationIsReported)
{
    // a decrement reading 0 is never enabled
    auto p = parse_program(arc_program_text(ArcScenario{0, 42}));
    auto all = enumerate_executions(p, Bounds{64, 4, 64});
    ASSERT_FALSE(all.empty());
    auto g = all[0].graph;
    bool changed = false;
    for (auto& [e, l] : g.lab)
        if (is_rmw(l.op.kind) && l.result == 1) {
            l.result = 0;
            changed = true;
        }
    ASSERT_TRUE(changed);
    auto rep = check_grounded(g, p.specs);
    bool disabled = false;
    for (auto& [e, s] : rep.events)
        disabled = disabled || s == GroundingStatus::NotEnabled;
    EXPECT_TRUE(disabled);
}
