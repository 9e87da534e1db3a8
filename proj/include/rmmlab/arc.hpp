// Core ARC: the reference-counting program, the lemma oracles over its
// atomic specification, and the end-to-end scorecard.
#ifndef RMMLAB_ARC_HPP_
#define RMMLAB_ARC_HPP_

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "rmmlab/enumerate.hpp"
#include "rmmlab/opsem.hpp"
#include "rmmlab/relations.hpp"
#include "rmmlab/syntax.hpp"
#include "rmmlab/tied.hpp"
#include "rmmlab/witness.hpp"
#include "rmmlab/xmm.hpp"

namespace rmmlab {

struct ArcScenario {
    int clones = 1;
    Value payload = 42;
};

/// Thread 1 allocates the instance, turns the counter atomic, clones once per
/// child and forks the child; every owner reads the payload and drops.
inline std::string arc_program_text(const ArcScenario& s)
{
    if (s.clones < 0 || s.clones > 3)
        throw BoundExceeded("ARC scenarios support 0..3 clones");
    const std::string drop = "let n = FAA_rel(a, -1) in if n = 1 then (fence_acq(a); end_atomic(a); free(a); free(a + 1))";
    const std::string owner = "let g = [a + 1]_na in " + drop;
    std::string body = "let a = cons(1, " + std::to_string(s.payload) + ") in\n  begin_atomic(a, arc);\n";
    for (int i = 0; i < s.clones; ++i)
        body += "  FAA_rlx(a, 1);\n  fork(" + owner + ");\n";
    body += "  " + owner;
    return "name ARC" + std::to_string(s.clones) + "\n\n" + print_spec(arc_spec()) + "\nthread {\n  " + body + "\n}\n";
}

inline Program build_arc_program(const ArcScenario& s) { return parse_program(arc_program_text(s)); }

// ---------------------------------------------------------------------------
// Spec mutations used to show the oracles can fail

namespace arc_mutation {

/// Increments enabled at 0 as well.
inline AtomicSpec inc_at_zero()
{
    AtomicSpec s = arc_spec();
    s.post[0].guard = Guard{{{GuardAtom::Cmp::Ge, 0}}};
    return s;
}

/// Decrements relaxed instead of release.
inline AtomicSpec relaxed_decrements()
{
    AtomicSpec s = arc_spec();
    Operation d = Operation::rmw(OpKind::RmwRlx, UpdateFn::add(-1));
    for (auto& p : s.pre)
        if (p.op == op_dec())
            p.op = d;
    for (auto& p : s.post)
        if (p.op == op_dec())
            p.op = d;
    return s;
}

/// A relaxed decrement enabled next to the release one, with the same tied pre and post.
inline AtomicSpec with_relaxed_decrement()
{
    AtomicSpec s = arc_spec();
    Operation d = Operation::rmw(OpKind::RmwRlx, UpdateFn::add(-1));
    s.pre.push_back({d, 1, 0});
    std::vector<AtomicSpec::PostRule> extra;
    for (auto& p : s.post)
        if (p.op == op_dec())
            extra.push_back({d, p.guard, p.global, p.local});
    s.post.insert(s.post.end(), extra.begin(), extra.end());
    return s;
}

/// The decrement precondition zeroed.
inline AtomicSpec dec_pre_zero()
{
    AtomicSpec s = arc_spec();
    for (auto& p : s.pre)
        if (p.op == op_dec())
            p.global = 0;
    return s;
}

} // namespace arc_mutation

// ---------------------------------------------------------------------------
// Lemma oracles

struct LemmaVerdict {
    bool holds = true;
    int bound = 0;
    std::uint64_t traces = 0;
    std::uint64_t witnesses = 0; // witnesses meeting the hypothesis, all checked
    bool key_fact = true;        // the counting fact the argument rests on
    std::optional<ConsistencyWitness> counterexample;
};

/// Any FAA(+1)/FAA(-1) history from 1 in which two decrements read 1 has an
/// increment reading 0 in between.
inline bool decrement_key_fact(int bound)
{
    for (int n = 0; n <= bound; ++n)
        for (std::uint32_t bits = 0; bits < (std::uint32_t{1} << n); ++bits) {
            Value v = 1;
            int last_one = -1;
            bool zero_inc_since = false;
            for (int i = 0; i < n; ++i) {
                bool inc = (bits >> i) & 1;
                if (inc && v == 0)
                    zero_inc_since = true;
                if (!inc && v == 1) {
                    if (last_one >= 0 && !zero_inc_since)
                        return false;
                    last_one = i;
                    zero_inc_since = false;
                }
                v += inc ? 1 : -1;
            }
        }
    return true;
}

/// Sigma, t, 1, dec |= (1, 0) . (rho, Theta) implies Theta = 0.
inline LemmaVerdict check_lemma_decrement(int bound, const AtomicSpec& s = arc_spec())
{
    constexpr ThreadId t = 1;
    LemmaVerdict v;
    v.bound = bound;
    v.key_fact = decrement_key_fact(bound);
    Operation dec;
    for (auto& p : s.pre)
        if (is_rmw(p.op.kind) && p.op.update && p.op.update->arg < 0)
            dec = p.op;
    WitnessCallbacks cb;
    cb.filter = [](const Omega& w) { return w.global >= 1; };
    cb.on_witness = [&](const ConsistencyWitness& w) {
        ++v.witnesses;
        if (!w.omega.bound.empty()) {
            v.holds = false;
            v.counterexample = w;
            return false;
        }
        return true;
    };
    v.traces = search_witnesses(s, WitnessQuery{t, 1, dec, Judgement::Consistent, bound}, cb).traces;
    v.holds = v.holds && v.key_fact;
    return v;
}

/// Sigma, t, 0, fence_acq |= (0, {t: 1}) . (rho, Theta) implies rho = 0. Each
/// witness is also checked against the counting argument: the decrement of
/// thread t that read 1 is preceded in mo by as many increments as decrements.
inline LemmaVerdict check_lemma_fence(int bound, const AtomicSpec& s = arc_spec())
{
    constexpr ThreadId t = 1;
    LemmaVerdict v;
    v.bound = bound;
    WitnessCallbacks cb;
    cb.filter = [](const Omega& w) { return AtomicSpec::Total::Bound::at(w.bound, t) >= 1; };
    cb.on_witness = [&](const ConsistencyWitness& w) {
        ++v.witnesses;
        const auto& ev = w.trace.events;
        int producer = -1;
        for (int i = 0; i < w.pivot; ++i)
            if (ev[i].thread == t && is_rmw(ev[i].op.kind) && ev[i].op.update->arg < 0 && ev[i].result == 1)
                producer = i;
        if (producer < 0) {
            v.key_fact = false;
        } else {
            int inc = 0, dec = 0;
            for (int i = 0; i < producer; ++i)
                if (is_rmw(ev[i].op.kind))
                    (ev[i].op.update->arg > 0 ? inc : dec)++;
            if (inc != dec)
                v.key_fact = false;
        }
        if (w.omega.global != 0) {
            v.holds = false;
            v.counterexample = w;
            return false;
        }
        return true;
    };
    v.traces = search_witnesses(s, WitnessQuery{t, 0, op_fence_acq(), Judgement::Consistent, bound}, cb).traces;
    v.holds = v.holds && v.key_fact;
    return v;
}

struct ArcSufficiencyVerdict {
    SufficiencyResult result;
    std::uint64_t zero_attempts = 0;             // rejected candidate witnesses for a result of 0
    std::uint64_t zero_refuted_empty_global = 0; // of those, refuted at a step facing a global resource of 0
    bool fence_only_zero = true;                 // the fence is enabled exactly at result 0
    bool holds() const { return result.sufficient && fence_only_zero; }
};

/// Sufficiency of the ARC preconditions. Refutations of a result of 0 are
/// counted for diagnostics; they do not affect the verdict.
inline ArcSufficiencyVerdict check_arc_sufficiency(const std::vector<Value>& values, int bound,
                                                   const AtomicSpec& s = arc_spec())
{
    ArcSufficiencyVerdict v;
    for (Value z : values)
        if (s.enabled(op_fence_acq(), z) != (z == 0))
            v.fence_only_zero = false;
    v.result = check_sufficiency(s, values, bound, [&](const RejectedAttempt& r) {
        const TraceEvent& p = r.trace->events[r.pivot];
        if (p.result != 0)
            return;
        ++v.zero_attempts;
        if (r.before.global == 0)
            ++v.zero_refuted_empty_global;
    });
    return v;
}

// ---------------------------------------------------------------------------
// End-to-end pipeline

enum class ArcModel : std::uint8_t { C20, YC20 };

struct ArcExecutionReport {
    bool race_free = true;
    bool grounded = true;
    int decrements_reading_one = 0;
    bool safe = true;
    bool payload_before_free = true;
    bool counter_positive = true; // no counter access reads v <= 0
};

struct ArcScorecard {
    int clones = 0;
    ArcModel model = ArcModel::C20;
    std::size_t executions = 0;
    std::size_t filtered = 0; // C20: executions dropped by the positive-counter assumption
    std::size_t race_free = 0, grounded = 0, one_decrement_reads_one = 0, safe = 0, payload_before_free = 0;
    std::optional<ArcSufficiencyVerdict> sufficiency; // YC20 only
    double seconds = 0;

    bool all_hold() const
    {
        std::size_t n = executions;
        bool ok = n > 0 && race_free == n && grounded == n && one_decrement_reads_one == n && safe == n &&
                  payload_before_free == n;
        if (sufficiency)
            ok = ok && sufficiency->holds();
        return ok;
    }
};

inline ArcExecutionReport check_arc_execution(const Program& p, const ExecutionGraph& g)
{
    ArcExecutionReport r;
    r.race_free = !find_data_races(g).racy();
    r.grounded = check_grounded(g, p.specs).grounded();
    Loc counter = -1;
    for (auto& [e, t] : g.tags)
        if (t.kind == PseudoKind::BeginAtomic)
            counter = g.label(e).location;
    for (auto& [e, l] : g.lab) {
        if (l.location != counter || !is_rmw(l.op.kind))
            continue;
        if (l.result <= 0)
            r.counter_positive = false;
        if (l.op.update->arg < 0 && l.result == 1)
            ++r.decrements_reading_one;
    }
    r.safe = explore_safety(p, GraphGuidedOracle{&g}).safe;
    EventIndex ix(g);
    BitRel hb = ix.dense(derive_hb(g));
    for (auto& [f, t] : g.tags) {
        if (t.kind != PseudoKind::Free)
            continue;
        Loc l = g.label(f).location;
        for (auto& [e, le] : g.lab)
            if (e != f && le.location == l && !hb.test(ix[e], ix[f]))
                r.payload_before_free = false;
    }
    return r;
}

inline ArcScorecard run_arc(int clones, ArcModel model, const Bounds& b = Bounds{64, 4, 64})
{
    auto start = std::chrono::steady_clock::now();
    ArcScorecard sc;
    sc.clones = clones;
    sc.model = model;
    Program p = build_arc_program(ArcScenario{clones, 42});
    for (auto& ex : enumerate_executions(p, b)) {
        ArcExecutionReport r = check_arc_execution(p, ex.graph);
        if (model == ArcModel::C20 && !r.counter_positive) {
            ++sc.filtered;
            continue;
        }
        ++sc.executions;
        sc.race_free += r.race_free;
        sc.grounded += r.grounded;
        sc.one_decrement_reads_one += r.decrements_reading_one == 1;
        sc.safe += r.safe;
        sc.payload_before_free += r.payload_before_free;
    }
    if (model == ArcModel::YC20) {
        std::vector<Value> dom;
        for (Value v = -2; v <= 5; ++v)
            dom.push_back(v);
        sc.sufficiency = check_arc_sufficiency(dom, 6);
    }
    sc.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sc;
}

} // namespace rmmlab

#endif
