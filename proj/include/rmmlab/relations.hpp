// Derived relations (sw, hb, fr, eco, rpo), consistency and data races.
#ifndef RMMLAB_RELATIONS_HPP_
#define RMMLAB_RELATIONS_HPP_

#include <map>
#include <set>
#include <vector>

#include "rmmlab/bitrel.hpp"
#include "rmmlab/graph.hpp"

namespace rmmlab {

/// Dense view of a graph. In the split form every high-level RMW becomes a
/// read node po-followed by a write node joined by rmw.
struct RelView {
    struct Node {
        EventId event;
        int part = 0; // 0 whole event, 1 read half, 2 write half
        ThreadId thread = 0;
        Loc loc = 0;
        bool reads = false;
        bool writes = false;
        bool fence = false;
        Mode read_mode = Mode::NA;
        Mode write_mode = Mode::NA;
        Mode fence_mode = Mode::NA;
    };

    std::vector<Node> nodes;
    std::map<EventId, std::pair<int, int>> span; // first and last node of each event
    BitRel po, rf, mo, rmw;
    std::vector<int> rf_src; // per node, -1 when absent

    int size() const { return static_cast<int>(nodes.size()); }
    int read_node(const EventId& e) const { return span.at(e).first; }
    int write_node(const EventId& e) const { return span.at(e).second; }

    /// The write continuing a release sequence through reader x, or -1.
    int rmw_write_of(int x) const
    {
        if (nodes[x].reads && nodes[x].writes)
            return x;
        for (int j = 0; j < size(); ++j)
            if (rmw.test(x, j))
                return j;
        return -1;
    }
};

inline RelView make_view(const ExecutionGraph& g, bool split)
{
    RelView v;
    for (auto& [e, l] : g.lab) {
        RelView::Node n;
        n.event = e;
        n.thread = e.thread;
        n.loc = l.location;
        OpKind k = l.op.kind;
        int first = static_cast<int>(v.nodes.size());
        if (is_rmw(k) && split) {
            auto [rk, wk] = split_rmw_kind(k);
            RelView::Node r = n, w = n;
            r.part = 1;
            r.reads = true;
            r.read_mode = mode_of(rk);
            w.part = 2;
            w.writes = true;
            w.write_mode = mode_of(wk);
            v.nodes.push_back(r);
            v.nodes.push_back(w);
        } else {
            if (is_fence(k)) {
                n.fence = true;
                n.fence_mode = mode_of(k);
            }
            if (is_read(k)) {
                n.reads = true;
                n.read_mode = mode_of(k);
            }
            if (is_write(k)) {
                n.writes = true;
                n.write_mode = mode_of(k);
            }
            if (is_rmw(k)) {
                auto [rk, wk] = split_rmw_kind(k);
                n.reads = n.writes = true;
                n.read_mode = mode_of(rk);
                n.write_mode = mode_of(wk);
            }
            v.nodes.push_back(n);
        }
        v.span.emplace(e, std::pair{first, static_cast<int>(v.nodes.size()) - 1});
    }
    int n = v.size();
    v.po = BitRel(n);
    v.rf = BitRel(n);
    v.mo = BitRel(n);
    v.rmw = BitRel(n);
    v.rf_src.assign(n, -1);
    for (auto& [e, sp] : v.span)
        if (sp.first != sp.second) {
            v.po.set(sp.first, sp.second);
            v.rmw.set(sp.first, sp.second);
        }
    for (auto& [a, b] : g.po) {
        auto sa = v.span.at(a), sb = v.span.at(b);
        for (int x = sa.first; x <= sa.second; ++x)
            for (int y = sb.first; y <= sb.second; ++y)
                v.po.set(x, y);
    }
    for (auto& [w, r] : g.rf) {
        int wn = v.write_node(w), rn = v.read_node(r);
        v.rf.set(wn, rn);
        v.rf_src[rn] = wn;
    }
    for (auto& [a, b] : g.mo)
        v.mo.set(v.write_node(a), v.write_node(b));
    for (auto& [r, w] : g.rmw)
        v.rmw.set(v.read_node(r), v.write_node(w));
    return v;
}

/// Collapse a node relation to events, dropping pairs between the two halves
/// of a split event. A node related to itself (a cycle) is kept.
inline Relation project(const RelView& v, const BitRel& r)
{
    Relation out;
    r.for_each([&](int i, int j) {
        if (i == j || v.nodes[i].event != v.nodes[j].event)
            out.emplace(v.nodes[i].event, v.nodes[j].event);
    });
    return out;
}

namespace detail {

inline BitRel view_sw(const RelView& v)
{
    int n = v.size();
    BitRel sw(n);
    for (int w = 0; w < n; ++w) {
        const auto& nw = v.nodes[w];
        if (!nw.writes || !at_least_rlx(nw.write_mode))
            continue;
        // release heads for w
        std::vector<int> heads;
        if (at_least_rel(nw.write_mode))
            heads.push_back(w);
        for (int f = 0; f < n; ++f)
            if (v.nodes[f].fence && v.nodes[f].fence_mode == Mode::Rel && v.po.test(f, w))
                heads.push_back(f);
        if (heads.empty())
            continue;
        // release sequence of w: w and every RMW write reached through rf chains
        std::vector<char> in_rs(n, 0);
        in_rs[w] = 1;
        std::vector<int> work{w};
        while (!work.empty()) {
            int x = work.back();
            work.pop_back();
            for (int r = 0; r < n; ++r) {
                if (!v.rf.test(x, r))
                    continue;
                int nx = v.rmw_write_of(r);
                if (nx >= 0 && !in_rs[nx]) {
                    in_rs[nx] = 1;
                    work.push_back(nx);
                }
            }
        }
        for (int r = 0; r < n; ++r) {
            const auto& nr = v.nodes[r];
            if (!nr.reads || !at_least_rlx(nr.read_mode) || v.rf_src[r] < 0 || !in_rs[v.rf_src[r]])
                continue;
            std::vector<int> tails;
            if (at_least_acq(nr.read_mode))
                tails.push_back(r);
            for (int f = 0; f < n; ++f)
                if (v.nodes[f].fence && v.nodes[f].fence_mode == Mode::Acq && v.po.test(r, f))
                    tails.push_back(f);
            for (int a : heads)
                for (int b : tails)
                    if (a != b)
                        sw.set(a, b);
        }
    }
    return sw;
}

inline BitRel view_hb(const RelView& v, const BitRel& sw)
{
    BitRel hb = v.po;
    hb.unite(sw);
    hb.close();
    return hb;
}

inline BitRel view_fr(const RelView& v)
{
    BitRel fr(v.size());
    for (int r = 0; r < v.size(); ++r) {
        int w = v.rf_src[r];
        if (w < 0)
            continue;
        for (int x = 0; x < v.size(); ++x)
            if (v.mo.test(w, x) && x != r)
                fr.set(r, x);
    }
    return fr;
}

inline BitRel view_eco(const RelView& v, const BitRel& fr)
{
    BitRel eco = v.rf;
    eco.unite(v.mo);
    eco.unite(fr);
    eco.close();
    return eco;
}

} // namespace detail

inline Relation derive_sw(const ExecutionGraph& g)
{
    RelView v = make_view(g, false);
    return project(v, detail::view_sw(v));
}

inline Relation derive_hb(const ExecutionGraph& g)
{
    RelView v = make_view(g, false);
    return project(v, detail::view_hb(v, detail::view_sw(v)));
}

inline Relation derive_fr(const ExecutionGraph& g)
{
    RelView v = make_view(g, false);
    return project(v, detail::view_fr(v));
}

inline Relation derive_eco(const ExecutionGraph& g)
{
    RelView v = make_view(g, false);
    return project(v, detail::view_eco(v, detail::view_fr(v)));
}

/// Program-order edges kept under re-execution, transitively closed.
inline Relation derive_rpo(const ExecutionGraph& g)
{
    Relation base;
    for (auto& [a, b] : g.po) {
        OpKind ka = g.lab.at(a).op.kind, kb = g.lab.at(b).op.kind;
        Mode ma = mode_of(ka), mb = mode_of(kb);
        bool keep = (is_readlike(ka) && at_least_rlx(ma) && kb == OpKind::FenceAcq) ||
                    (is_access(ka) && at_least_acq(ma)) || (is_access(kb) && at_least_rel(mb)) ||
                    (ka == OpKind::FenceRel && is_writelike(kb) && at_least_rlx(mb));
        if (keep)
            base.emplace(a, b);
    }
    return transitive_closure(g, base);
}

struct DerivedRelations {
    Relation sw, hb, fr, eco, rpo;
};

inline DerivedRelations derive_all(const ExecutionGraph& g)
{
    RelView v = make_view(g, false);
    BitRel sw = detail::view_sw(v);
    BitRel fr = detail::view_fr(v);
    return {project(v, sw), project(v, detail::view_hb(v, sw)), project(v, fr),
            project(v, detail::view_eco(v, fr)), derive_rpo(g)};
}

// ---------------------------------------------------------------------------
// Consistency

enum class ReasonKind : std::uint8_t { NotRfComplete, HbCycle, CoherenceViolation, AtomicityViolation };

inline const char* to_string(ReasonKind k)
{
    switch (k) {
    case ReasonKind::NotRfComplete: return "NotRfComplete";
    case ReasonKind::HbCycle: return "HbCycle";
    case ReasonKind::CoherenceViolation: return "CoherenceViolation";
    case ReasonKind::AtomicityViolation: return "AtomicityViolation";
    }
    return "?";
}

struct Reason {
    ReasonKind kind;
    EventId first;
    EventId second;
    auto operator<=>(const Reason&) const = default;
};

struct ConsistencyVerdict {
    bool consistent = true;
    std::vector<Reason> reasons;

    bool has(ReasonKind k) const
    {
        for (auto& r : reasons)
            if (r.kind == k)
                return true;
        return false;
    }
};

inline ConsistencyVerdict check_consistent(const ExecutionGraph& g)
{
    RelView v = make_view(g, true);
    std::set<Reason> out;
    for (int i = 0; i < v.size(); ++i)
        if (v.nodes[i].reads && v.rf_src[i] < 0)
            out.insert({ReasonKind::NotRfComplete, v.nodes[i].event, v.nodes[i].event});
    BitRel hb = detail::view_hb(v, detail::view_sw(v));
    for (int i = 0; i < v.size(); ++i)
        if (hb.test(i, i))
            out.insert({ReasonKind::HbCycle, v.nodes[i].event, v.nodes[i].event});
    BitRel fr = detail::view_fr(v);
    BitRel eco = detail::view_eco(v, fr);
    hb.for_each([&](int a, int b) {
        if (a != b && eco.test(b, a))
            out.insert({ReasonKind::CoherenceViolation, v.nodes[a].event, v.nodes[b].event});
    });
    v.rmw.for_each([&](int r, int w) {
        for (int x = 0; x < v.size(); ++x)
            if (fr.test(r, x) && v.mo.test(x, w))
                out.insert({ReasonKind::AtomicityViolation, v.nodes[r].event, v.nodes[x].event});
    });
    ConsistencyVerdict verdict;
    verdict.reasons.assign(out.begin(), out.end());
    verdict.consistent = verdict.reasons.empty();
    return verdict;
}

inline bool is_consistent(const ExecutionGraph& g) { return check_consistent(g).consistent; }

// ---------------------------------------------------------------------------
// Data races and porf cycles

struct Race {
    EventId first;
    EventId second;
    Loc location;
    auto operator<=>(const Race&) const = default;
};

struct RaceReport {
    std::vector<Race> races;
    bool racy() const { return !races.empty(); }
};

inline std::set<EventId> tagged_events(const ExecutionGraph& g)
{
    std::set<EventId> s;
    for (auto& [e, _] : g.tags)
        s.insert(e);
    return s;
}

inline RaceReport find_data_races(const ExecutionGraph& g, const std::set<EventId>& mode_events)
{
    RelView v = make_view(g, false);
    BitRel hb = detail::view_hb(v, detail::view_sw(v));
    auto writelike = [&](int i) { return v.nodes[i].writes || mode_events.count(v.nodes[i].event); };
    auto nonatomic = [&](int i) {
        const auto& n = v.nodes[i];
        if (mode_events.count(n.event))
            return true;
        return (n.reads && n.read_mode == Mode::NA) || (n.writes && n.write_mode == Mode::NA);
    };
    RaceReport rep;
    for (int a = 0; a < v.size(); ++a)
        for (int b = a + 1; b < v.size(); ++b) {
            if (v.nodes[a].fence || v.nodes[b].fence || v.nodes[a].loc != v.nodes[b].loc)
                continue;
            if (hb.test(a, b) || hb.test(b, a))
                continue;
            if (!(writelike(a) || writelike(b)) || !(nonatomic(a) || nonatomic(b)))
                continue;
            rep.races.push_back({v.nodes[a].event, v.nodes[b].event, v.nodes[a].loc});
        }
    return rep;
}

inline RaceReport find_data_races(const ExecutionGraph& g) { return find_data_races(g, tagged_events(g)); }

inline bool has_porf_cycle(const ExecutionGraph& g)
{
    EventIndex ix(g);
    BitRel r = ix.dense(g.po);
    r.unite(ix.dense(g.rf));
    return !r.acyclic();
}

/// Events with no po or rf successor.
inline std::vector<EventId> porf_maximal(const ExecutionGraph& g)
{
    std::set<EventId> has_succ;
    for (auto& [a, b] : g.po)
        has_succ.insert(a);
    for (auto& [a, b] : g.rf)
        has_succ.insert(a);
    std::vector<EventId> out;
    for (auto& [e, _] : g.lab)
        if (!has_succ.count(e))
            out.push_back(e);
    return out;
}

} // namespace rmmlab

#endif
