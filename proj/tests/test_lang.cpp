#include <gtest/gtest.h>

#include "rmmlab/syntax.hpp"
#include "support.hpp"

using namespace rmmlab;
using namespace rmmlab::testing;
using namespace rmmlab::mk;

namespace {

struct AstGen {
    std::mt19937_64 rng{seed() + 30};
    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    std::vector<std::string> scope; // the parser only accepts closed commands
    std::string fresh() { return std::string(1, static_cast<char>('a' + pick(0, 2))); }
    Expr name_or_value()
    {
        if (scope.empty())
            return val(pick(1, 3));
        return var(scope[static_cast<std::size_t>(pick(0, static_cast<int>(scope.size()) - 1))]);
    }

    Expr expr(int depth)
    {
        int k = depth <= 0 ? pick(0, 1) : pick(0, 3);
        switch (k) {
        case 0: return val(pick(-1, 5));
        case 1: return name_or_value();
        case 2: return add(expr(depth - 1), expr(depth - 1));
        default: return eq(expr(depth - 1), expr(depth - 1));
        }
    }
    Expr address() { return pick(0, 1) ? name_or_value() : add(name_or_value(), val(pick(1, 2))); }

    Cmd simple()
    {
        static const OpKind reads[] = {OpKind::ReadRlx, OpKind::ReadAcq};
        static const OpKind writes[] = {OpKind::WriteRlx, OpKind::WriteRel};
        static const OpKind rmws[] = {OpKind::RmwRlx, OpKind::RmwRel, OpKind::RmwAcq, OpKind::RmwAcqRel};
        switch (pick(0, 10)) {
        case 0: return ret(expr(1));
        case 1: return read_na(address());
        case 2: return write_na(address(), expr(1));
        case 3: return cons({expr(0), expr(0)});
        case 4: return mk::free(address());
        case 5: return begin_atomic(address(), "arc");
        case 6: return end_atomic(address());
        case 7: return op(read_op(reads[pick(0, 1)]), address());
        case 8: return op(write_op(writes[pick(0, 1)], expr(1)), address());
        case 9: return op(pick(0, 1) ? faa_op(rmws[pick(0, 3)], val(pick(-2, 2))) : xchg_op(rmws[pick(0, 3)], val(pick(0, 3))),
                          address());
        default: return op(read_op(pick(0, 1) ? OpKind::FenceAcq : OpKind::FenceRel), address());
        }
    }

    Cmd cmd(int depth)
    {
        if (depth <= 0)
            return simple();
        switch (pick(0, 4)) {
        case 0: {
            Cmd bound = cmd(depth - 1);
            std::string x = fresh();
            scope.push_back(x);
            Cmd body = cmd(depth - 1);
            scope.pop_back();
            return let(x, bound, body);
        }
        case 1: return seq(cmd(depth - 1), cmd(depth - 1));
        case 2: return if_(expr(1), cmd(depth - 1));
        case 3: return fork(cmd(depth - 1));
        default: return simple();
        }
    }
};

} // namespace

TEST(Parser, CorpusLitmusFilesParse)
{
    for (auto f : {"lb.lit", "lbd.lit", "lbf.lit"}) {
        auto p = parse_program(corpus(f));
        EXPECT_EQ(p.threads.size(), 2u) << f;
        EXPECT_EQ(p.locations.size(), 2u) << f;
        EXPECT_TRUE(p.postcondition) << f;
    }
}

TEST(Parser, PrintParseIsIdentityOnRandomCommands)
{
    AstGen g;
    for (int i = 0; i < 3000; ++i) {
        Cmd c = g.cmd(g.pick(0, 4));
        std::string text = print_command(c);
        Cmd back = parse_command(text);
        ASSERT_TRUE(equal(c, back)) << text << "\n---\n" << print_command(back);
        ASSERT_EQ(print_command(back), text);
    }
}

TEST(Parser, FormulasRoundTrip)
{
    for (const char* f : {"a = 1 /\\ b = 1", "~(a = 0) \\/ b = 2", "(a = 1 \\/ b = 1) /\\ c = 0", "true"}) {
        auto x = parse_formula(f);
        EXPECT_TRUE(equal(parse_formula(print_formula(x)), x)) << f;
    }
}

TEST(Parser, SpecsRoundTrip)
{
    auto text = print_spec(arc_spec());
    auto specs = parse_specs(text);
    ASSERT_EQ(specs.size(), 1u);
    EXPECT_EQ(specs[0], arc_spec());
    EXPECT_EQ(print_spec(specs[0]), text);
}

TEST(Parser, ErrorsCarryPositions)
{
    try {
        parse_program("name X\nthread {\n  let a = in 1\n}\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3);
    }
    EXPECT_THROW(parse_program("loc X = 1\nloc X = 2\n"), ParseError);
    EXPECT_THROW(parse_program("loc X = 5000\n"), ParseError);
    EXPECT_THROW(parse_command("R_weird(1)"), ParseError);
    EXPECT_THROW(parse_command("[1]_na extra"), ParseError);
}

TEST(Expressions, EvaluateAndSubstitute)
{
    Expr e = add(var("x"), val(2));
    EXPECT_FALSE(eval(e).has_value());
    EXPECT_EQ(eval_closed(substitute(e, 3, "x")), 5);
    EXPECT_EQ(eval_closed(eq(val(1), val(1))), 1);
    EXPECT_EQ(eval_closed(eq(val(1), val(2))), 0);
    std::set<std::string> fv;
    free_vars(let("a", op(read_op(OpKind::ReadRlx), var("b")), op(write_op(OpKind::WriteRlx, var("a")), var("c"))), fv);
    EXPECT_EQ(fv, (std::set<std::string>{"b", "c"}));
}

TEST(Unroll, StraightLineThread)
{
    auto p = parse_program(corpus("lb.lit"));
    auto tr = unroll_thread(p.threads[0], {1}, 1);
    ASSERT_EQ(tr.events.size(), 2u);
    EXPECT_EQ(tr.events[0].label.op.kind, OpKind::ReadRlx);
    EXPECT_EQ(tr.events[0].label.result, 1);
    EXPECT_EQ(tr.events[1].label.op.kind, OpKind::WriteRlx);
    EXPECT_EQ(tr.registers.at("a"), 1);
    EXPECT_THROW(unroll_thread(p.threads[0], {}, 1), OracleExhausted);
}

TEST(Unroll, DependencyDecidesTheWrite)
{
    auto p = parse_program(corpus("lbd.lit"));
    EXPECT_EQ(unroll_thread(p.threads[0], {0}, 1).events.size(), 1u);
    EXPECT_EQ(unroll_thread(p.threads[0], {1}, 1).events.size(), 2u);
}

TEST(Unroll, ConsAllocatesInTheThreadRegion)
{
    auto tr = unroll_thread(parse_command("let a = cons(1, 42) in [a + 1]_na"), {42}, 2);
    ASSERT_EQ(tr.events.size(), 3u);
    EXPECT_EQ(tr.events[0].label.location, alloc_base(2));
    EXPECT_EQ(tr.events[1].label.location, alloc_base(2) + 1);
    ASSERT_TRUE(tr.events[0].tag);
    EXPECT_EQ(tr.events[0].tag->kind, PseudoKind::Alloc);
    EXPECT_EQ(tr.events[2].label.location, alloc_base(2) + 1);
}

TEST(Unroll, BeginAtomicEmitsTaggedPair)
{
    auto tr = unroll_thread(parse_command("let a = cons(1) in begin_atomic(a, arc)"), {1}, 1);
    ASSERT_EQ(tr.events.size(), 3u);
    for (int i : {1, 2}) {
        ASSERT_TRUE(tr.events[i].tag);
        EXPECT_EQ(tr.events[i].tag->kind, PseudoKind::BeginAtomic);
        EXPECT_EQ(tr.events[i].tag->spec, "arc");
    }
    EXPECT_EQ(tr.events[1].label.op.kind, OpKind::ReadNA);
    EXPECT_EQ(tr.events[2].label.op.kind, OpKind::WriteNA);
    EXPECT_EQ(tr.events[2].label.op.value, 1);
}

TEST(Unroll, ForksAreRecordedWithTheirPosition)
{
    auto tr = unroll_thread(parse_command("W_rlx(1, 1); fork(W_rlx(2, 1)); W_rlx(3, 1)"), {}, 1);
    EXPECT_EQ(tr.events.size(), 2u);
    ASSERT_EQ(tr.forks.size(), 1u);
    EXPECT_EQ(tr.forks[0].first, 1);
    EXPECT_EQ(parent_thread(ThreadCursor(1, ret(val(0))).child_id(0)), 1);
}
