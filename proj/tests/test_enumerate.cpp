#include <gtest/gtest.h>

#include <algorithm>
#include <functional>

#include "rmmlab/enumerate.hpp"
#include "rmmlab/graph_io.hpp"
#include "rmmlab/syntax.hpp"
#include "support.hpp"

using namespace rmmlab;
using namespace rmmlab::testing;

namespace {

/// Brute force: every value guess per read, every rf choice, every mo
/// permutation; keep what is well formed and consistent. Top-level threads only.
std::set<std::string> brute_force(const Program& p)
{
    auto dom = value_domain(p, 64);
    // per thread, every event sequence the thread can emit
    std::vector<std::vector<std::vector<UnrolledEvent>>> runs(p.threads.size());
    for (std::size_t i = 0; i < p.threads.size(); ++i) {
        std::function<void(ThreadCursor, std::vector<UnrolledEvent>)> go = [&](ThreadCursor c,
                                                                                std::vector<UnrolledEvent> acc) {
            auto st = c.status();
            if (st.kind == ThreadCursorStatus::Kind::Done) {
                runs[i].push_back(acc);
                return;
            }
            if (st.kind == ThreadCursorStatus::Kind::Emits) {
                for (auto& e : c.step())
                    acc.push_back(e);
                go(c, acc);
                return;
            }
            for (Value v : dom) {
                ThreadCursor c2 = c;
                auto acc2 = acc;
                for (auto& e : c2.step(v))
                    acc2.push_back(e);
                go(c2, acc2);
            }
        };
        go(ThreadCursor(static_cast<ThreadId>(i + 1), p.threads[i]), {});
    }
    std::set<std::string> out;
    std::vector<std::size_t> pickrun(p.threads.size(), 0);
    std::function<void(std::size_t)> combine = [&](std::size_t t) {
        if (t < p.threads.size()) {
            for (pickrun[t] = 0; pickrun[t] < runs[t].size(); ++pickrun[t])
                combine(t + 1);
            return;
        }
        ExecutionGraph g;
        int k = 0;
        for (auto& [_, addr] : p.locations)
            g.lab[{kInitThread, k++}] = Label{kInitThread, addr, 0, Operation::write(OpKind::WriteNA, 0)};
        for (std::size_t i = 0; i < p.threads.size(); ++i) {
            int idx = 0;
            for (auto& e : runs[i][pickrun[i]]) {
                EventId id{static_cast<ThreadId>(i + 1), idx++};
                g.lab[id] = e.label;
                if (e.tag)
                    g.tags[id] = *e.tag;
            }
        }
        rebuild_po(g);
        std::vector<EventId> readers;
        std::map<Loc, std::vector<EventId>> writers;
        for (auto& [e, l] : g.lab) {
            if (is_readlike(l.op.kind))
                readers.push_back(e);
            if (is_writelike(l.op.kind) && !e.is_init())
                writers[l.location].push_back(e);
        }
        std::function<void(std::size_t)> rf = [&](std::size_t r) {
            if (r < readers.size()) {
                const Label& lr = g.label(readers[r]);
                std::vector<EventId> cand;
                for (auto& [e, l] : g.lab)
                    if (e != readers[r] && is_writelike(l.op.kind) && l.location == lr.location &&
                        l.written() == lr.result)
                        cand.push_back(e);
                for (auto& w : cand) {
                    g.rf.emplace(w, readers[r]);
                    rf(r + 1);
                    g.rf.erase({w, readers[r]});
                }
                return;
            }
            // mo: all permutations per location, init first
            std::vector<std::pair<Loc, std::vector<EventId>>> locs(writers.begin(), writers.end());
            std::function<void(std::size_t)> mo = [&](std::size_t li) {
                if (li == locs.size()) {
                    if (check_well_formed(g).ok && is_consistent(g))
                        out.insert(print_graph(g));
                    return;
                }
                auto v = locs[li].second;
                std::sort(v.begin(), v.end());
                EventId init{};
                for (auto& [e, l] : g.lab)
                    if (e.is_init() && l.location == locs[li].first)
                        init = e;
                do {
                    Relation saved = g.mo;
                    std::vector<EventId> chain{init};
                    chain.insert(chain.end(), v.begin(), v.end());
                    for (std::size_t a = 0; a < chain.size(); ++a)
                        for (std::size_t b = a + 1; b < chain.size(); ++b)
                            g.mo.emplace(chain[a], chain[b]);
                    mo(li + 1);
                    g.mo = saved;
                } while (std::next_permutation(v.begin(), v.end()));
            };
            mo(0);
        };
        rf(0);
    };
    combine(0);
    return out;
}

std::set<std::string> enumerated(const Program& p)
{
    std::set<std::string> out;
    for (auto& e : enumerate_executions(p))
        out.insert(print_graph(e.graph));
    return out;
}

const char* kPrograms[] = {
    // message passing
    "loc X = 1\nloc Y = 2\n"
    "thread {\n  [X] :=na 1;\n  W_rel(Y, 1)\n}\n"
    "thread {\n  let a = R_acq(Y) in\n  if a = 1 then [X]_na\n}\n",
    // store buffering
    "loc X = 1\nloc Y = 2\n"
    "thread {\n  W_rlx(X, 1);\n  R_rlx(Y)\n}\n"
    "thread {\n  W_rlx(Y, 1);\n  R_rlx(X)\n}\n",
    // coherence of read-read
    "loc X = 1\n"
    "thread {\n  W_rlx(X, 1);\n  W_rlx(X, 2)\n}\n"
    "thread {\n  let a = R_rlx(X) in\n  R_rlx(X)\n}\n",
    // concurrent increments
    "loc X = 1\n"
    "thread {\n  FAA_rlx(X, 1)\n}\n"
    "thread {\n  FAA_acqrel(X, 2)\n}\n"
    "thread {\n  R_acq(X)\n}\n",
    // exchange against a write
    "loc X = 1\n"
    "thread {\n  XCHG_rel(X, 3)\n}\n"
    "thread {\n  W_rlx(X, 1);\n  R_rlx(X)\n}\n",
    // fences
    "loc X = 1\nloc Y = 2\n"
    "thread {\n  [X] :=na 1;\n  fence_rel(Y);\n  W_rlx(Y, 1)\n}\n"
    "thread {\n  let a = R_rlx(Y) in\n  fence_acq(Y);\n  [X]_na\n}\n",
};

} // namespace

TEST(Enumerate, MatchesBruteForceOnCorpusLitmus)
{
    for (auto f : {"lb.lit", "lbd.lit", "lbf.lit"}) {
        auto p = parse_program(corpus(f));
        auto expect = brute_force(p);
        EXPECT_FALSE(expect.empty());
        EXPECT_EQ(enumerated(p), expect) << f;
    }
}

TEST(Enumerate, MatchesBruteForceOnSmallPrograms)
{
    for (const char* src : kPrograms) {
        auto p = parse_program(src);
        auto expect = brute_force(p);
        EXPECT_FALSE(expect.empty());
        EXPECT_EQ(enumerated(p), expect) << src;
    }
}

TEST(Enumerate, ExecutionsAreWellFormedConsistentAndSorted)
{
    for (const char* src : kPrograms) {
        auto all = enumerate_executions(parse_program(src));
        for (std::size_t i = 0; i < all.size(); ++i) {
            EXPECT_TRUE(check_well_formed(all[i].graph).ok);
            EXPECT_TRUE(is_consistent(all[i].graph));
            if (i > 0) {
                EXPECT_LT(print_graph(all[i - 1].graph), print_graph(all[i].graph));
            }
        }
    }
}

TEST(Litmus, LoadBufferingFamilyIsObservable)
{
    for (auto f : {"lb.lit", "lbd.lit", "lbf.lit"}) {
        auto v = check_litmus(parse_program(corpus(f)));
        EXPECT_TRUE(v.observable) << f;
        ASSERT_EQ(v.witnesses.size(), 1u) << f;
        EXPECT_TRUE(has_porf_cycle(v.witnesses[0].graph)) << f;
    }
}

TEST(Litmus, LoadBufferingWitnessIsTheCycleGraph)
{
    auto v = check_litmus(parse_program(corpus("lb.lit")));
    ASSERT_TRUE(v.observable);
    EXPECT_EQ(print_graph(v.witnesses[0].graph), corpus("fig2.graph"));
    EXPECT_EQ(v.total_consistent, 4u);
}

TEST(Litmus, MessagePassingIsRaceFree)
{
    auto s = count_races(parse_program(kPrograms[0]));
    EXPECT_GT(s.executions, 0u);
    EXPECT_FALSE(s.racy());
    auto bad = count_races(parse_program("loc X = 1\nloc Y = 2\n"
                                         "thread {\n  [X] :=na 1;\n  W_rlx(Y, 1)\n}\n"
                                         "thread {\n  let a = R_rlx(Y) in\n  if a = 1 then [X]_na\n}\n"));
    EXPECT_TRUE(bad.racy());
}

TEST(Litmus, StoreBufferingAllowsBothZero)
{
    auto p = parse_program(std::string(kPrograms[1]));
    std::size_t both_zero = 0;
    for (auto& e : enumerate_executions(p)) {
        int zeros = 0;
        for (auto& [id, l] : e.graph.lab)
            if (is_read(l.op.kind) && l.result == 0)
                ++zeros;
        both_zero += zeros == 2;
    }
    EXPECT_EQ(both_zero, 1u);
}

TEST(ValueDomain, ClosesUnderAdditions)
{
    auto p = parse_program("loc X = 1\nthread {\n  FAA_rlx(X, 2)\n}\n");
    EXPECT_EQ(value_domain(p, 0), (std::vector<Value>{0, 2}));
    EXPECT_EQ(value_domain(p, 2), (std::vector<Value>{0, 2, 4, 6}));
}

TEST(Bounds, EventBoundIsEnforced)
{
    auto p = parse_program(corpus("lb.lit"));
    Bounds b;
    b.max_events = 3;
    EXPECT_THROW(enumerate_executions(p, b), BoundExceeded);
}

TEST(ModificationOrder, ForEachMoYieldsTotalOrders)
{
    auto p = parse_program(kPrograms[3]);
    for (auto& e : enumerate_executions(p)) {
        ExecutionGraph g = e.graph;
        g.mo.clear();
        int count = 0;
        bool original_seen = false;
        for_each_mo(g, [&](const Relation& mo) {
            ++count;
            original_seen = original_seen || mo == e.graph.mo;
        });
        EXPECT_GE(count, 1);
        EXPECT_TRUE(original_seen);
    }
}
