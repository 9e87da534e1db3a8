// Execution graphs: events, labels, the four base relations, well-formedness
// and the high-level/low-level RMW conversion.
#ifndef RMMLAB_GRAPH_HPP_
#define RMMLAB_GRAPH_HPP_

#include <algorithm>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rmmlab/bitrel.hpp"
#include "rmmlab/core.hpp"

namespace rmmlab {

enum class OpKind : std::uint8_t {
    ReadNA,
    ReadRlx,
    ReadAcq,
    FenceAcq,
    FenceRel,
    WriteNA,
    WriteRlx,
    WriteRel,
    RmwRlx,
    RmwRel,
    RmwAcq,
    RmwAcqRel,
};

inline constexpr OpKind kAllOpKinds[] = {
    OpKind::ReadNA,   OpKind::ReadRlx,  OpKind::ReadAcq, OpKind::FenceAcq,
    OpKind::FenceRel, OpKind::WriteNA,  OpKind::WriteRlx, OpKind::WriteRel,
    OpKind::RmwRlx,   OpKind::RmwRel,   OpKind::RmwAcq,  OpKind::RmwAcqRel,
};

/// Access modes. Ordered na < rlx < {acq, rel} < acqrel.
enum class Mode : std::uint8_t { NA, Rlx, Acq, Rel, AcqRel };

inline bool is_read(OpKind k) { return k == OpKind::ReadNA || k == OpKind::ReadRlx || k == OpKind::ReadAcq; }
inline bool is_write(OpKind k) { return k == OpKind::WriteNA || k == OpKind::WriteRlx || k == OpKind::WriteRel; }
inline bool is_rmw(OpKind k)
{
    return k == OpKind::RmwRlx || k == OpKind::RmwRel || k == OpKind::RmwAcq || k == OpKind::RmwAcqRel;
}
inline bool is_fence(OpKind k) { return k == OpKind::FenceAcq || k == OpKind::FenceRel; }
inline bool is_readlike(OpKind k) { return is_read(k) || is_rmw(k); }
inline bool is_writelike(OpKind k) { return is_write(k) || is_rmw(k); }
inline bool is_access(OpKind k) { return !is_fence(k); }
inline bool is_nonatomic(OpKind k) { return k == OpKind::ReadNA || k == OpKind::WriteNA; }

inline Mode mode_of(OpKind k)
{
    switch (k) {
    case OpKind::ReadNA:
    case OpKind::WriteNA:
        return Mode::NA;
    case OpKind::ReadRlx:
    case OpKind::WriteRlx:
    case OpKind::RmwRlx:
        return Mode::Rlx;
    case OpKind::ReadAcq:
    case OpKind::FenceAcq:
    case OpKind::RmwAcq:
        return Mode::Acq;
    case OpKind::WriteRel:
    case OpKind::FenceRel:
    case OpKind::RmwRel:
        return Mode::Rel;
    case OpKind::RmwAcqRel:
        return Mode::AcqRel;
    }
    return Mode::NA;
}

inline bool at_least_rlx(Mode m) { return m != Mode::NA; }
inline bool at_least_acq(Mode m) { return m == Mode::Acq || m == Mode::AcqRel; }
inline bool at_least_rel(Mode m) { return m == Mode::Rel || m == Mode::AcqRel; }

inline const char* to_string(OpKind k)
{
    switch (k) {
    case OpKind::ReadNA: return "ReadNA";
    case OpKind::ReadRlx: return "ReadRlx";
    case OpKind::ReadAcq: return "ReadAcq";
    case OpKind::FenceAcq: return "FenceAcq";
    case OpKind::FenceRel: return "FenceRel";
    case OpKind::WriteNA: return "WriteNA";
    case OpKind::WriteRlx: return "WriteRlx";
    case OpKind::WriteRel: return "WriteRel";
    case OpKind::RmwRlx: return "RmwRlx";
    case OpKind::RmwRel: return "RmwRel";
    case OpKind::RmwAcq: return "RmwAcq";
    case OpKind::RmwAcqRel: return "RmwAcqRel";
    }
    return "?";
}

inline std::optional<OpKind> parse_op_kind(std::string_view s)
{
    for (OpKind k : kAllOpKinds)
        if (s == to_string(k))
            return k;
    return std::nullopt;
}

/// Read and write halves of an RMW kind.
inline std::pair<OpKind, OpKind> split_rmw_kind(OpKind k)
{
    switch (k) {
    case OpKind::RmwRel: return {OpKind::ReadRlx, OpKind::WriteRel};
    case OpKind::RmwAcq: return {OpKind::ReadAcq, OpKind::WriteRlx};
    case OpKind::RmwAcqRel: return {OpKind::ReadAcq, OpKind::WriteRel};
    default: return {OpKind::ReadRlx, OpKind::WriteRlx};
    }
}

inline std::optional<OpKind> join_rmw_kind(OpKind r, OpKind w)
{
    for (OpKind k : {OpKind::RmwRlx, OpKind::RmwRel, OpKind::RmwAcq, OpKind::RmwAcqRel})
        if (split_rmw_kind(k) == std::pair{r, w})
            return k;
    return std::nullopt;
}

struct UpdateFn {
    enum class Form : std::uint8_t { Add, Set, Table };

    Form form = Form::Add;
    Value arg = 0; // addend, stored value, or the table default
    std::map<Value, Value> table;

    static UpdateFn add(Value k) { return {Form::Add, k, {}}; }
    static UpdateFn set(Value v) { return {Form::Set, v, {}}; }
    static UpdateFn make_table(std::map<Value, Value> t, Value fallback) { return {Form::Table, fallback, std::move(t)}; }

    Value apply(Value v, bool* overflow = nullptr) const
    {
        if (overflow)
            *overflow = false;
        switch (form) {
        case Form::Add:
            return wrapping_add(v, arg, overflow);
        case Form::Set:
            return arg;
        case Form::Table: {
            auto it = table.find(v);
            return it == table.end() ? arg : it->second;
        }
        }
        return arg;
    }

    auto operator<=>(const UpdateFn&) const = default;
};

struct Operation {
    OpKind kind = OpKind::ReadNA;
    Value value = 0;
    std::optional<UpdateFn> update;

    static Operation read(OpKind k) { return {k, 0, std::nullopt}; }
    static Operation fence(OpKind k) { return {k, 0, std::nullopt}; }
    static Operation write(OpKind k, Value v) { return {k, v, std::nullopt}; }
    static Operation rmw(OpKind k, UpdateFn f) { return {k, 0, std::move(f)}; }

    /// value only on writes, update exactly on RMWs
    bool valid() const { return (is_write(kind) || value == 0) && (is_rmw(kind) == update.has_value()); }

    auto operator<=>(const Operation&) const = default;
};

struct Label {
    ThreadId thread = 0;
    Loc location = 0;
    Value result = 0;
    Operation op;

    /// Value stored by a write-like event.
    Value written() const
    {
        if (is_write(op.kind))
            return op.value;
        if (is_rmw(op.kind))
            return op.update->apply(result);
        return 0;
    }

    auto operator<=>(const Label&) const = default;
};

/// Release write, release RMW or release fence.
inline bool is_release_event(const Label& l)
{
    OpKind k = l.op.kind;
    if (is_fence(k))
        return k == OpKind::FenceRel;
    if (is_rmw(k))
        return at_least_rel(mode_of(split_rmw_kind(k).second));
    return is_write(k) && at_least_rel(mode_of(k));
}

struct EventId {
    ThreadId thread = 0;
    int index = 0;

    bool is_init() const { return thread == kInitThread; }
    std::string str() const { return std::to_string(thread) + "." + std::to_string(index); }

    auto operator<=>(const EventId&) const = default;
};

enum class PseudoKind : std::uint8_t { Alloc, Free, BeginAtomic, EndAtomic };

inline const char* to_string(PseudoKind k)
{
    switch (k) {
    case PseudoKind::Alloc: return "alloc";
    case PseudoKind::Free: return "free";
    case PseudoKind::BeginAtomic: return "begin";
    case PseudoKind::EndAtomic: return "end";
    }
    return "?";
}

/// Marks events emitted by allocation, deallocation and mode changes.
struct EventTag {
    PseudoKind kind = PseudoKind::Alloc;
    std::string spec; // begin_atomic only

    auto operator<=>(const EventTag&) const = default;
};

using Edge = std::pair<EventId, EventId>;
using Relation = std::set<Edge>;

struct ExecutionGraph {
    std::map<EventId, Label> lab;
    Relation po, rf, mo, rmw;
    std::map<EventId, EventTag> tags;

    bool contains(const EventId& e) const { return lab.count(e) != 0; }
    const Label& label(const EventId& e) const
    {
        auto it = lab.find(e);
        if (it == lab.end())
            throw UnknownEvent("no event " + e.str());
        return it->second;
    }
    std::size_t size() const { return lab.size(); }
    bool empty() const { return lab.empty(); }

    std::vector<EventId> ids() const
    {
        std::vector<EventId> v;
        v.reserve(lab.size());
        for (auto& [e, _] : lab)
            v.push_back(e);
        return v;
    }

    bool is_high_level() const { return rmw.empty(); }
    bool has_rmw_events() const
    {
        return std::any_of(lab.begin(), lab.end(), [](auto& p) { return is_rmw(p.second.op.kind); });
    }

    std::optional<EventId> rf_source(const EventId& r) const
    {
        for (auto& [w, rr] : rf)
            if (rr == r)
                return w;
        return std::nullopt;
    }

    bool operator==(const ExecutionGraph&) const = default;
};

/// Dense numbering of a graph's events in EventId order.
struct EventIndex {
    std::vector<EventId> ids;
    std::map<EventId, int> pos;

    explicit EventIndex(const ExecutionGraph& g)
    {
        for (auto& [e, _] : g.lab) {
            pos[e] = static_cast<int>(ids.size());
            ids.push_back(e);
        }
    }
    int operator[](const EventId& e) const { return pos.at(e); }
    int size() const { return static_cast<int>(ids.size()); }

    BitRel dense(const Relation& r) const
    {
        BitRel b(size());
        for (auto& [a, c] : r)
            b.set(pos.at(a), pos.at(c));
        return b;
    }
    Relation sparse(const BitRel& b) const
    {
        Relation r;
        b.for_each([&](int i, int j) { r.emplace(ids[i], ids[j]); });
        return r;
    }
};

inline Relation transitive_closure(const ExecutionGraph& g, const Relation& r)
{
    EventIndex ix(g);
    return ix.sparse(ix.dense(r).closure());
}

/// Rebuilds po from event identities: same-thread index order, init writes
/// before same-location accesses, and fork edges. `fork_points[c]` is the
/// number of parent events that precede the fork creating thread c.
inline void rebuild_po(ExecutionGraph& g, const std::map<ThreadId, int>& fork_points = {})
{
    g.po.clear();
    EventIndex ix(g);
    BitRel po(ix.size());
    for (int i = 0; i < ix.size(); ++i) {
        const EventId& a = ix.ids[i];
        const Label& la = g.lab.at(a);
        for (int j = 0; j < ix.size(); ++j) {
            const EventId& b = ix.ids[j];
            if (i == j)
                continue;
            const Label& lb = g.lab.at(b);
            if (a.is_init()) {
                if (!b.is_init() && is_access(lb.op.kind) && lb.location == la.location)
                    po.set(i, j);
            } else if (a.thread == b.thread) {
                if (a.index < b.index)
                    po.set(i, j);
            } else if (parent_thread(b.thread) == a.thread) {
                auto it = fork_points.find(b.thread);
                if (it != fork_points.end() && a.index < it->second)
                    po.set(i, j);
            }
        }
    }
    po.close();
    g.po = ix.sparse(po);
}

inline void make_mo_transitive(ExecutionGraph& g) { g.mo = transitive_closure(g, g.mo); }

// ---------------------------------------------------------------------------
// Well-formedness

enum class WfRule : std::uint8_t {
    PoInit,       // init write before every other access of its location, nothing else
    PoThread,     // po only within a thread, or from an ancestor thread
    PoTotal,      // per-thread total order agreeing with indices
    RfShape,      // writer to reader kinds
    RfLocation,
    RfValue,
    RfFunctional, // at most one source
    RfPo,         // same-thread rf follows po
    MoShape,      // writes of one location only
    MoTotal,      // strict total order per location
    RmwShape,     // read to write
    RmwImmediate, // immediate po successor
    LabelShape,   // operation fields, write results, thread ids
    InitShape,    // init events are nonatomic writes of 0, one per location
};

inline const char* to_string(WfRule r)
{
    switch (r) {
    case WfRule::PoInit: return "po-init";
    case WfRule::PoThread: return "po-thread";
    case WfRule::PoTotal: return "po-total";
    case WfRule::RfShape: return "rf-shape";
    case WfRule::RfLocation: return "rf-location";
    case WfRule::RfValue: return "rf-value";
    case WfRule::RfFunctional: return "rf-functional";
    case WfRule::RfPo: return "rf-po";
    case WfRule::MoShape: return "mo-shape";
    case WfRule::MoTotal: return "mo-total";
    case WfRule::RmwShape: return "rmw-shape";
    case WfRule::RmwImmediate: return "rmw-immediate";
    case WfRule::LabelShape: return "label";
    case WfRule::InitShape: return "init";
    }
    return "?";
}

struct WfViolation {
    WfRule rule;
    Edge pair;
    auto operator<=>(const WfViolation&) const = default;
};

struct WellFormednessReport {
    bool ok = true;
    std::vector<WfViolation> violations;

    bool has(WfRule r) const
    {
        return std::any_of(violations.begin(), violations.end(), [&](auto& v) { return v.rule == r; });
    }
};

namespace detail {

inline bool edge_endpoints_known(const ExecutionGraph& g, const Edge& e)
{
    return g.contains(e.first) && g.contains(e.second);
}

} // namespace detail

inline WellFormednessReport check_well_formed(const ExecutionGraph& g)
{
    std::set<WfViolation> out;
    auto bad = [&](WfRule r, const EventId& a, const EventId& b) { out.insert({r, {a, b}}); };

    for (auto& [e, l] : g.lab) {
        if (!l.op.valid() || l.thread != e.thread || e.index < 0)
            bad(WfRule::LabelShape, e, e);
        if ((is_write(l.op.kind) || is_fence(l.op.kind)) && l.result != 0)
            bad(WfRule::LabelShape, e, e);
        if (e.is_init() && (l.op.kind != OpKind::WriteNA || l.op.value != 0))
            bad(WfRule::InitShape, e, e);
    }
    std::map<Loc, EventId> init_of;
    for (auto& [e, l] : g.lab)
        if (e.is_init()) {
            auto [it, fresh] = init_of.emplace(l.location, e);
            if (!fresh)
                bad(WfRule::InitShape, it->second, e);
        }

    for (const Relation* r : {&g.po, &g.rf, &g.mo, &g.rmw})
        for (auto& e : *r)
            if (!detail::edge_endpoints_known(g, e))
                bad(WfRule::LabelShape, e.first, e.second);

    // po
    for (auto& [a, b] : g.po) {
        if (!detail::edge_endpoints_known(g, {a, b}))
            continue;
        const Label& la = g.lab.at(a);
        if (a.is_init()) {
            // direct edges go to same-location accesses, the rest come from transitivity
            auto direct = [&](const EventId& c) {
                const Label& lc = g.lab.at(c);
                return !c.is_init() && is_access(lc.op.kind) && lc.location == la.location;
            };
            bool implied = !b.is_init() && (direct(b) || std::any_of(g.po.begin(), g.po.end(), [&](const Edge& x) {
                               return x.second == b && g.lab.count(x.first) && direct(x.first);
                           }));
            if (!implied)
                bad(WfRule::PoInit, a, b);
        } else if (a.thread == b.thread) {
            if (a.index >= b.index)
                bad(WfRule::PoTotal, a, b);
        } else if (b.is_init() || !is_descendant(b.thread, a.thread)) {
            bad(WfRule::PoThread, a, b);
        }
    }
    for (auto& [i, li] : g.lab) {
        if (!i.is_init())
            continue;
        for (auto& [e, le] : g.lab)
            if (!e.is_init() && is_access(le.op.kind) && le.location == li.location && !g.po.count({i, e}))
                bad(WfRule::PoInit, i, e);
    }
    for (auto& [a, la] : g.lab)
        for (auto& [b, lb] : g.lab)
            if (!a.is_init() && a.thread == b.thread && a.index < b.index && !g.po.count({a, b}))
                bad(WfRule::PoTotal, a, b);

    // rf
    std::map<EventId, EventId> src;
    for (auto& [w, r] : g.rf) {
        if (!detail::edge_endpoints_known(g, {w, r}))
            continue;
        const Label& lw = g.lab.at(w);
        const Label& lr = g.lab.at(r);
        if (!is_writelike(lw.op.kind) || !is_readlike(lr.op.kind) || w == r) {
            bad(WfRule::RfShape, w, r);
            continue;
        }
        if (lw.location != lr.location)
            bad(WfRule::RfLocation, w, r);
        if (lw.written() != lr.result)
            bad(WfRule::RfValue, w, r);
        if (w.thread == r.thread && !g.po.count({w, r}))
            bad(WfRule::RfPo, w, r);
        auto [it, fresh] = src.emplace(r, w);
        if (!fresh)
            bad(WfRule::RfFunctional, it->second, w);
    }

    // mo
    for (auto& [a, b] : g.mo) {
        if (!detail::edge_endpoints_known(g, {a, b}))
            continue;
        const Label& la = g.lab.at(a);
        const Label& lb = g.lab.at(b);
        if (!is_writelike(la.op.kind) || !is_writelike(lb.op.kind) || la.location != lb.location || a == b)
            bad(WfRule::MoShape, a, b);
        if (g.mo.count({b, a}))
            bad(WfRule::MoTotal, std::min(a, b), std::max(a, b));
    }
    for (auto& [a, la] : g.lab)
        for (auto& [b, lb] : g.lab) {
            if (!(a < b) || !is_writelike(la.op.kind) || !is_writelike(lb.op.kind) || la.location != lb.location)
                continue;
            if (!g.mo.count({a, b}) && !g.mo.count({b, a}))
                bad(WfRule::MoTotal, a, b);
        }
    for (auto& [a, b] : g.mo)
        for (auto& [b2, c] : g.mo)
            if (b == b2 && a != c && !g.mo.count({a, c}))
                bad(WfRule::MoTotal, a, c);

    // rmw
    for (auto& [r, w] : g.rmw) {
        if (!detail::edge_endpoints_known(g, {r, w}))
            continue;
        const Label& lr = g.lab.at(r);
        const Label& lw = g.lab.at(w);
        if (!is_read(lr.op.kind) || !is_write(lw.op.kind))
            bad(WfRule::RmwShape, r, w);
        if (r.thread != w.thread || r.index + 1 != w.index || r.is_init())
            bad(WfRule::RmwImmediate, r, w);
    }

    WellFormednessReport rep;
    rep.violations.assign(out.begin(), out.end());
    rep.ok = rep.violations.empty();
    return rep;
}

// ---------------------------------------------------------------------------
// Restriction and rf-completeness

inline ExecutionGraph restrict(const ExecutionGraph& g, const std::set<EventId>& keep)
{
    for (auto& e : keep)
        if (!g.contains(e))
            throw UnknownEvent("restrict: no event " + e.str());
    ExecutionGraph out;
    for (auto& e : keep)
        out.lab.emplace(e, g.lab.at(e));
    auto filt = [&](const Relation& r, Relation& dst) {
        for (auto& ed : r)
            if (keep.count(ed.first) && keep.count(ed.second))
                dst.insert(ed);
    };
    filt(g.po, out.po);
    filt(g.rf, out.rf);
    filt(g.mo, out.mo);
    filt(g.rmw, out.rmw);
    for (auto& [e, t] : g.tags)
        if (keep.count(e))
            out.tags.emplace(e, t);
    return out;
}

inline std::set<EventId> event_set(const ExecutionGraph& g)
{
    std::set<EventId> s;
    for (auto& [e, _] : g.lab)
        s.insert(e);
    return s;
}

inline bool is_rf_complete(const ExecutionGraph& g)
{
    std::set<EventId> read_from;
    for (auto& [w, r] : g.rf)
        read_from.insert(r);
    for (auto& [e, l] : g.lab)
        if (is_readlike(l.op.kind) && !read_from.count(e))
            return false;
    return true;
}

// ---------------------------------------------------------------------------
// High-level / low-level conversion

/// For each event of a high-level graph, its first and last low-level ids.
inline std::map<EventId, std::pair<EventId, EventId>> low_level_ids(const ExecutionGraph& g)
{
    std::map<EventId, std::pair<EventId, EventId>> m;
    std::map<ThreadId, int> next;
    for (auto& [e, l] : g.lab) {
        int& n = next[e.thread];
        EventId first{e.thread, n};
        n += is_rmw(l.op.kind) ? 2 : 1;
        m.emplace(e, std::pair{first, EventId{e.thread, n - 1}});
    }
    return m;
}

inline ExecutionGraph to_low_level(const ExecutionGraph& g)
{
    if (!g.is_high_level())
        throw NotHighLevel();
    auto ids = low_level_ids(g);
    ExecutionGraph out;
    for (auto& [e, l] : g.lab) {
        auto [first, last] = ids.at(e);
        if (is_rmw(l.op.kind)) {
            auto [rk, wk] = split_rmw_kind(l.op.kind);
            out.lab.emplace(first, Label{l.thread, l.location, l.result, Operation::read(rk)});
            out.lab.emplace(last, Label{l.thread, l.location, 0, Operation::write(wk, l.written())});
            out.rmw.emplace(first, last);
            out.po.emplace(first, last);
        } else {
            out.lab.emplace(first, l);
        }
    }
    for (auto& [a, b] : g.po) {
        auto [af, al] = ids.at(a);
        auto [bf, bl] = ids.at(b);
        for (auto x : {af, al})
            for (auto y : {bf, bl})
                out.po.emplace(x, y);
    }
    for (auto& [w, r] : g.rf)
        out.rf.emplace(ids.at(w).second, ids.at(r).first);
    for (auto& [a, b] : g.mo)
        out.mo.emplace(ids.at(a).second, ids.at(b).second);
    for (auto& [e, t] : g.tags)
        out.tags.emplace(ids.at(e).first, t);
    return out;
}

/// The update functions that undo to_low_level: keyed by low-level read id.
inline std::map<EventId, UpdateFn> natural_update_fns(const ExecutionGraph& high)
{
    std::map<EventId, UpdateFn> fns;
    auto ids = low_level_ids(high);
    for (auto& [e, l] : high.lab)
        if (is_rmw(l.op.kind))
            fns.emplace(ids.at(e).first, *l.op.update);
    return fns;
}

inline ExecutionGraph to_high_level(const ExecutionGraph& g, const std::map<EventId, UpdateFn>& fns)
{
    if (g.has_rmw_events())
        throw NotLowLevel();
    std::map<EventId, EventId> partner; // write half -> read half
    std::set<EventId> readhalf;
    for (auto& [r, w] : g.rmw) {
        partner[w] = r;
        readhalf.insert(r);
    }
    // new ids
    std::map<EventId, EventId> nid;
    std::map<ThreadId, int> next;
    for (auto& [e, l] : g.lab) {
        auto p = partner.find(e);
        if (p != partner.end()) {
            nid[e] = nid.at(p->second);
            continue;
        }
        nid[e] = EventId{e.thread, next[e.thread]++};
    }
    ExecutionGraph out;
    for (auto& [e, l] : g.lab) {
        if (partner.count(e))
            continue;
        if (readhalf.count(e)) {
            EventId w;
            for (auto& [r2, w2] : g.rmw)
                if (r2 == e)
                    w = w2;
            const Label& lw = g.lab.at(w);
            auto f = fns.find(e);
            if (f == fns.end())
                throw InconsistentUpdateFn("no update function for " + e.str());
            if (f->second.apply(l.result) != lw.op.value)
                throw InconsistentUpdateFn("update of " + e.str() + " does not produce the written value");
            auto k = join_rmw_kind(l.op.kind, lw.op.kind);
            if (!k || l.location != lw.location)
                throw InconsistentUpdateFn("rmw pair at " + e.str() + " has no RMW counterpart");
            out.lab.emplace(nid.at(e), Label{l.thread, l.location, l.result, Operation::rmw(*k, f->second)});
        } else {
            out.lab.emplace(nid.at(e), l);
        }
    }
    for (auto& [a, b] : g.po)
        if (nid.at(a) != nid.at(b))
            out.po.emplace(nid.at(a), nid.at(b));
    for (auto& [w, r] : g.rf)
        out.rf.emplace(nid.at(w), nid.at(r));
    for (auto& [a, b] : g.mo)
        out.mo.emplace(nid.at(a), nid.at(b));
    for (auto& [e, t] : g.tags)
        out.tags.emplace(nid.at(e), t);
    return out;
}

} // namespace rmmlab

#endif
