#include <gtest/gtest.h>

#include <algorithm>

#include "rmmlab/tied.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace rmmlab;
using namespace rmmlab::testing;

namespace {

using Nat = NatMonoid;
using Pair = ProductMonoid<NatMonoid, NatMonoid>;
using Bound = ThreadBoundMonoid<NatMonoid>;
using Total = TotalTiedMonoid<NatMonoid, NatMonoid>;

struct Gen {
    std::mt19937_64 rng{seed() + 20};
    std::uint64_t nat() { return std::uniform_int_distribution<std::uint64_t>(0, 6)(rng); }
    Pair::value_type pair() { return {nat(), nat()}; }
    Bound::value_type bound()
    {
        Bound::value_type m;
        int n = std::uniform_int_distribution<int>(0, 3)(rng);
        for (int i = 0; i < n; ++i)
            Bound::put(m, std::uniform_int_distribution<ThreadId>(1, 4)(rng), nat());
        return m;
    }
    Total::value_type total() { return {nat(), bound()}; }
};

} // namespace

TEST(Monoids, LawsHoldOnRandomElements)
{
    Gen g;
    constexpr int kCases = 10000;
    EXPECT_EQ(monoid_law_failures<Nat>([&] { return g.nat(); }, kCases), 0);
    EXPECT_EQ(monoid_law_failures<Pair>([&] { return g.pair(); }, kCases), 0);
    EXPECT_EQ(monoid_law_failures<Bound>([&] { return g.bound(); }, kCases), 0);
    EXPECT_EQ(monoid_law_failures<Total>([&] { return g.total(); }, kCases), 0);
}

TEST(Monoids, CancellativityByExhaustionOnSmallNat)
{
    for (std::uint64_t a = 0; a < 20; ++a)
        for (std::uint64_t b = 0; b < 20; ++b)
            for (std::uint64_t c = 0; c < 20; ++c)
                if (Nat::compose(a, c) == Nat::compose(b, c)) {
                    ASSERT_EQ(a, b);
                }
}

TEST(Monoids, NatSubtractFailsBelowZero)
{
    EXPECT_FALSE(Nat::subtract(1, 2).has_value());
    EXPECT_EQ(*Nat::subtract(3, 1), 2u);
    EXPECT_THROW(Nat::compose(~std::uint64_t{0}, 1), Error);
}

TEST(Monoids, ThreadBoundNeverStoresUnits)
{
    Bound::value_type m = Bound::single(3, 0);
    EXPECT_TRUE(m.empty());
    m = Bound::compose(Bound::single(3, 2), Bound::single(4, 1));
    auto r = Bound::subtract(m, Bound::single(3, 2));
    ASSERT_TRUE(r);
    EXPECT_EQ(*r, Bound::single(4, 1));
    EXPECT_FALSE(Bound::subtract(m, Bound::single(5, 1)).has_value());
}

TEST(Monoids, TotalSubtractIsPointwise)
{
    Total::value_type w{2, Bound::single(1, 1)};
    EXPECT_TRUE(Total::subtract(w, Total::at_thread(1, 1, 1)).has_value());
    EXPECT_FALSE(Total::subtract(w, Total::at_thread(1, 2, 1)).has_value());
    EXPECT_FALSE(Total::subtract(w, Total::at_thread(3, 1, 0)).has_value());
}

TEST(Guards, ComparisonsEvaluate)
{
    using C = GuardAtom::Cmp;
    Guard g{{{C::Ge, 1}, {C::Lt, 4}}};
    EXPECT_FALSE(g.holds(0));
    EXPECT_TRUE(g.holds(1));
    EXPECT_TRUE(g.holds(3));
    EXPECT_FALSE(g.holds(4));
    EXPECT_TRUE(Guard{}.holds(-7));
    EXPECT_TRUE((GuardAtom{C::Ne, 2}.holds(3)));
    EXPECT_TRUE((GuardAtom{C::Le, 2}.holds(2)));
    EXPECT_TRUE((GuardAtom{C::Gt, 2}.holds(3)));
}

TEST(ArcSpec, EnabledResults)
{
    auto s = arc_spec();
    EXPECT_TRUE(s.validate().empty());
    EXPECT_TRUE(s.enabled(op_inc(), 1));
    EXPECT_FALSE(s.enabled(op_inc(), 0));
    EXPECT_TRUE(s.enabled(op_dec(), 1));
    EXPECT_TRUE(s.enabled(op_dec(), 5));
    EXPECT_FALSE(s.enabled(op_dec(), 0));
    EXPECT_TRUE(s.enabled(op_fence_acq(), 0));
    EXPECT_FALSE(s.enabled(op_fence_acq(), 1));
    EXPECT_FALSE(s.enabled(Operation::read(OpKind::ReadRlx), 0));
    EXPECT_EQ(s.initial(), (Omega{1, {}}));
}

TEST(ArcSpec, ValidateFlagsBadSpecs)
{
    auto s = arc_spec();
    s.pre.push_back({Operation::read(OpKind::ReadNA), 0, 0});
    EXPECT_FALSE(s.validate().empty());
    s = arc_spec();
    s.pre.push_back(s.pre[0]);
    EXPECT_FALSE(s.validate().empty());
    s = arc_spec();
    s.post.push_back({Operation::read(OpKind::ReadAcq), Guard{}, 0, 0});
    EXPECT_FALSE(s.validate().empty());
}

TEST(Replay, SingleOwnerLifecycle)
{
    auto s = arc_spec();
    std::vector<TracedOp> ev{{1, op_inc(), 1}, {2, op_dec(), 2}, {1, op_dec(), 1}, {1, op_fence_acq(), 0}};
    auto w = replay_in_order(s, ev);
    ASSERT_TRUE(w);
    EXPECT_EQ(*w, (Omega{0, Bound::single(1, 1)}));
    EXPECT_EQ(net_resource(s, ev), w);
    // the fence before the last decrement has nothing to consume
    EXPECT_FALSE(replay_in_order(s, ev, {0, 1, 3, 2}).has_value());
    EXPECT_THROW(replay_in_order(s, {{1, op_inc(), 0}}), UnknownOperation);
}

TEST(Replay, NetResourceIsOrderIndependentWhenAllOrdersReplay)
{
    auto s = arc_spec();
    std::mt19937_64 rng(seed() + 21);
    for (int i = 0; i < 2000; ++i) {
        std::vector<TracedOp> ev;
        int n = std::uniform_int_distribution<int>(1, 6)(rng);
        for (int j = 0; j < n; ++j) {
            ThreadId t = std::uniform_int_distribution<ThreadId>(1, 3)(rng);
            int k = std::uniform_int_distribution<int>(0, 2)(rng);
            if (k == 0)
                ev.push_back({t, op_inc(), std::uniform_int_distribution<Value>(1, 3)(rng)});
            else if (k == 1)
                ev.push_back({t, op_dec(), std::uniform_int_distribution<Value>(1, 3)(rng)});
            else
                ev.push_back({t, op_fence_acq(), 0});
        }
        std::vector<int> order(ev.size());
        for (std::size_t j = 0; j < order.size(); ++j)
            order[j] = static_cast<int>(j);
        auto net = net_resource(s, ev);
        do {
            auto w = replay_in_order(s, ev, order);
            if (w) {
                ASSERT_EQ(w, net);
            }
        } while (std::next_permutation(order.begin(), order.end()));
    }
}

TEST(Replay, FormatsOmega)
{
    EXPECT_EQ(format_omega(Omega{0, {}}), "(0, {})");
    EXPECT_EQ(format_omega(Omega{2, Bound::compose(Bound::single(1, 1), Bound::single(12, 3))}), "(2, {1:1, 12:3})");
}
