// Independent reference implementations shared by the property suites and
// the acceptance runner. Nothing here calls the bitset relation code.
#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "rmmlab/opsem.hpp"
#include "rmmlab/relations.hpp"
#include "rmmlab/xmm.hpp"

namespace rmmlab::testing {

// Naive relation algebra over edge sets.

inline Relation compose(const Relation& a, const Relation& b)
{
    Relation out;
    for (auto& [x, y] : a)
        for (auto& [y2, z] : b)
            if (y == y2)
                out.emplace(x, z);
    return out;
}

inline Relation plus(Relation r)
{
    for (;;) {
        Relation next = r;
        for (auto& e : compose(r, r))
            next.insert(e);
        if (next == r)
            return r;
        r = std::move(next);
    }
}

inline Relation unite(Relation a, const Relation& b)
{
    a.insert(b.begin(), b.end());
    return a;
}

inline Relation naive_sw(const ExecutionGraph& g)
{
    // rf;[RMW] continues a release sequence
    Relation step;
    for (auto& [w, r] : g.rf)
        if (is_rmw(g.label(r).op.kind))
            step.emplace(w, r);
    Relation rs = plus(step);
    for (auto& [e, l] : g.lab)
        if (is_writelike(l.op.kind))
            rs.emplace(e, e);
    Relation out;
    for (auto& [e, l] : g.lab) {
        Mode m = is_rmw(l.op.kind) ? mode_of(split_rmw_kind(l.op.kind).second) : mode_of(l.op.kind);
        if (!is_writelike(l.op.kind) || m == Mode::NA)
            continue;
        std::set<EventId> heads;
        if (at_least_rel(m))
            heads.insert(e);
        for (auto& [f, w] : g.po)
            if (w == e && g.label(f).op.kind == OpKind::FenceRel)
                heads.insert(f);
        for (auto& [w0, w1] : rs) {
            if (w0 != e)
                continue;
            for (auto& [src, r] : g.rf) {
                if (src != w1)
                    continue;
                const Label& lr = g.label(r);
                Mode rm = is_rmw(lr.op.kind) ? mode_of(split_rmw_kind(lr.op.kind).first) : mode_of(lr.op.kind);
                if (rm == Mode::NA)
                    continue;
                std::set<EventId> tails;
                if (at_least_acq(rm))
                    tails.insert(r);
                for (auto& [a, f] : g.po)
                    if (a == r && g.label(f).op.kind == OpKind::FenceAcq)
                        tails.insert(f);
                for (auto& h : heads)
                    for (auto& t : tails)
                        if (h != t)
                            out.emplace(h, t);
            }
        }
    }
    return out;
}

inline Relation naive_hb(const ExecutionGraph& g) { return plus(unite(g.po, naive_sw(g))); }

inline Relation naive_fr(const ExecutionGraph& g)
{
    Relation out;
    for (auto& [w, r] : g.rf)
        for (auto& [w2, x] : g.mo)
            if (w2 == w && x != r)
                out.emplace(r, x);
    return out;
}

inline Relation naive_eco(const ExecutionGraph& g) { return plus(unite(unite(g.rf, g.mo), naive_fr(g))); }

/// Unit, associativity, commutativity, cancellativity and subtraction laws
/// on `cases` random triples; returns the number of violated checks.
template <class M, class Draw>
int monoid_law_failures(Draw draw, int cases)
{
    int bad = 0;
    for (int i = 0; i < cases; ++i) {
        auto a = draw(), b = draw(), c = draw();
        bad += !(M::compose(a, M::unit()) == a);
        bad += !(M::compose(M::unit(), a) == a);
        bad += !(M::compose(M::compose(a, b), c) == M::compose(a, M::compose(b, c)));
        bad += !(M::compose(a, b) == M::compose(b, a));
        if (M::compose(a, c) == M::compose(b, c))
            bad += !(a == b);
        auto d = M::subtract(M::compose(a, b), b);
        bad += !(d && *d == a);
        if (auto e = M::subtract(a, b))
            bad += !(M::compose(*e, b) == a);
    }
    return bad;
}

// Release kinds spelled out, independent of is_release_event.
inline bool releases(const Label& l)
{
    switch (l.op.kind) {
    case OpKind::WriteRel:
    case OpKind::RmwRel:
    case OpKind::RmwAcqRel:
    case OpKind::FenceRel: return true;
    default: return false;
    }
}

/// Plans that fail to commit what they determine, commit an undetermined
/// release, or re-execute into one.
inline int release_check_failures(const Reachability& r, const ExecutionGraph& target)
{
    int bad = 0;
    for (auto& plan : r.plans) {
        bad += !std::includes(plan.committed.begin(), plan.committed.end(), plan.determined.begin(),
                              plan.determined.end());
        bad += !committed_release_violations(target, plan).empty();
    }
    for (auto& s : r.trace.steps) {
        if (s.kind != ConstructionStep::Kind::ReExecute)
            continue;
        for (auto& e : s.plan.committed)
            bad += !s.plan.determined.count(e) && releases(s.graph.label(e));
    }
    return bad;
}

/// Random hb-consistent linearisation of all events of g.
inline std::vector<EventId> random_linearisation(const ExecutionGraph& g, std::mt19937_64& rng)
{
    Relation hb = naive_hb(g);
    std::set<EventId> left = event_set(g);
    std::vector<EventId> out;
    while (!left.empty()) {
        std::vector<EventId> minimal;
        for (auto& e : left) {
            bool m = true;
            for (auto& o : left)
                if (o != e && hb.count({o, e}))
                    m = false;
            if (m)
                minimal.push_back(e);
        }
        EventId pick = minimal[std::uniform_int_distribution<std::size_t>(0, minimal.size() - 1)(rng)];
        out.push_back(pick);
        left.erase(pick);
    }
    return out;
}

/// Steps emitting several events are replayed as one; a downset must not
/// cut such a step.
inline bool closed_under_steps(const std::map<EventId, EventId>& lead, const std::set<EventId>& P)
{
    for (auto& [e, l] : lead)
        for (auto& [e2, l2] : lead)
            if (l == l2 && P.count(e) != P.count(e2))
                return false;
    return true;
}

} // namespace rmmlab::testing
