// Witness search for the consistency (|=) and grounding-consistency (|=_g)
// judgements, and sufficiency of tied preconditions.
//
// Candidate atomic location traces are single-location executions. On one
// location coherence makes every consistent execution an interleaving in
// which each read sees the latest preceding write, so traces are generated
// as access sequences. Threads are numbered by first appearance and a fence
// follows the previous event of its thread directly.
#ifndef RMMLAB_WITNESS_HPP_
#define RMMLAB_WITNESS_HPP_

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rmmlab/graph.hpp"
#include "rmmlab/tied.hpp"

namespace rmmlab {

inline constexpr int kMaxTraceEvents = 16;

struct TraceEvent {
    ThreadId thread = 0;
    Operation op;
    Value result = 0;
    int rf = -1; // index of the source write; -1 is the init write

    auto operator<=>(const TraceEvent&) const = default;
};

struct AtomicLocationTrace {
    Loc location = 0;
    Value v0 = 0;
    std::vector<TraceEvent> events; // interleaving order; writes appear in mo order

    auto operator<=>(const AtomicLocationTrace&) const = default;
};

/// Event ids used by to_graph: init is 0.0, event i of the trace is
/// (thread, number of earlier events of that thread).
inline std::vector<EventId> trace_event_ids(const AtomicLocationTrace& tr)
{
    std::map<ThreadId, int> next;
    std::vector<EventId> ids;
    for (auto& e : tr.events)
        ids.push_back(EventId{e.thread, next[e.thread]++});
    return ids;
}

/// The init write carries v0, so check_well_formed reports InitShape for it
/// whenever v0 != 0; every other rule holds.
inline ExecutionGraph to_graph(const AtomicLocationTrace& tr)
{
    ExecutionGraph g;
    EventId init{kInitThread, 0};
    g.lab[init] = Label{kInitThread, tr.location, 0, Operation::write(OpKind::WriteNA, tr.v0)};
    auto ids = trace_event_ids(tr);
    std::vector<EventId> writes{init};
    for (std::size_t i = 0; i < tr.events.size(); ++i) {
        const auto& e = tr.events[i];
        g.lab[ids[i]] = Label{e.thread, tr.location, e.result, e.op};
        if (is_readlike(e.op.kind))
            g.rf.emplace(e.rf < 0 ? init : ids[e.rf], ids[i]);
        if (is_writelike(e.op.kind)) {
            for (auto& w : writes)
                g.mo.emplace(w, ids[i]);
            writes.push_back(ids[i]);
        }
    }
    rebuild_po(g);
    return g;
}

/// hb predecessors of each trace event as bitmasks over trace indices.
/// Every po and sw edge points forward in the interleaving, so one pass
/// computes the closure.
class TraceHb {
public:
    void clear() { pred_.clear(); rs_.clear(); ev_.clear(); }

    void push(const TraceEvent& e)
    {
        int j = static_cast<int>(ev_.size());
        if (j >= kMaxTraceEvents)
            throw BoundExceeded("trace longer than " + std::to_string(kMaxTraceEvents) + " events");
        std::uint32_t direct = 0;
        for (int i = 0; i < j; ++i)
            if (ev_[i].thread == e.thread)
                direct |= bit(i);
        OpKind k = e.op.kind;
        if (is_readlike(k) && at_least_acq(read_mode(k)) && e.rf >= 0)
            direct |= heads_for(e.rf);
        if (k == OpKind::FenceAcq)
            for (int r = 0; r < j; ++r)
                if (ev_[r].thread == e.thread && is_readlike(ev_[r].op.kind) && ev_[r].rf >= 0)
                    direct |= heads_for(ev_[r].rf);
        std::uint32_t p = direct;
        for (int i = 0; i < j; ++i)
            if (direct & bit(i))
                p |= pred_[i];
        // release sequences: write j heads its own, and an RMW continues its source's
        std::uint32_t rs = 0;
        if (is_writelike(k)) {
            rs = bit(j);
            if (is_rmw(k) && e.rf >= 0)
                rs |= rs_[e.rf];
        }
        ev_.push_back(e);
        pred_.push_back(p);
        rs_.push_back(rs);
    }

    void pop()
    {
        ev_.pop_back();
        pred_.pop_back();
        rs_.pop_back();
    }

    int size() const { return static_cast<int>(ev_.size()); }
    std::uint32_t pred(int i) const { return pred_[i]; }
    std::uint32_t succ(int i) const
    {
        std::uint32_t s = 0;
        for (int j = i + 1; j < size(); ++j)
            if (pred_[j] & bit(i))
                s |= bit(j);
        return s;
    }
    bool hb(int a, int b) const { return (pred_[b] & bit(a)) != 0; }

    static std::uint32_t bit(int i) { return std::uint32_t{1} << i; }

private:
    static Mode read_mode(OpKind k) { return is_rmw(k) ? mode_of(split_rmw_kind(k).first) : mode_of(k); }
    static Mode write_mode(OpKind k) { return is_rmw(k) ? mode_of(split_rmw_kind(k).second) : mode_of(k); }

    /// Release heads synchronising with a read of source s.
    std::uint32_t heads_for(int s) const
    {
        std::uint32_t heads = 0;
        for (int w = 0; w <= s; ++w) {
            if (!(rs_[s] & bit(w)))
                continue;
            OpKind k = ev_[w].op.kind;
            if (!at_least_rlx(write_mode(k)))
                continue;
            if (at_least_rel(write_mode(k)))
                heads |= bit(w);
            for (int f = 0; f < w; ++f)
                if (ev_[f].thread == ev_[w].thread && ev_[f].op.kind == OpKind::FenceRel)
                    heads |= bit(f);
        }
        return heads;
    }

    std::vector<TraceEvent> ev_;
    std::vector<std::uint32_t> pred_;
    std::vector<std::uint32_t> rs_; // rs_[x]: writes whose release sequence contains x
};

inline std::vector<std::uint32_t> trace_hb(const AtomicLocationTrace& tr)
{
    TraceHb h;
    for (auto& e : tr.events)
        h.push(e);
    std::vector<std::uint32_t> out;
    for (int i = 0; i < h.size(); ++i)
        out.push_back(h.pred(i));
    return out;
}

enum class Judgement : std::uint8_t { Consistent, GroundingConsistent };

inline const char* to_string(Judgement j) { return j == Judgement::Consistent ? "consistent" : "grounding-consistent"; }

struct ConsistencyWitness {
    AtomicLocationTrace trace;
    int pivot = -1;
    std::vector<int> executed;
    Omega omega;
};

/// A candidate whose executed set has the right shape but some hb-consistent
/// order gets stuck: `order` reaches `before`, from which the precondition
/// of `blocked` cannot be taken. `trace` is only valid during the callback.
struct RejectedAttempt {
    const AtomicLocationTrace* trace = nullptr;
    int pivot = -1;
    std::vector<int> executed;
    Omega net;
    std::vector<int> order;
    int blocked = -1;
    Omega before;
};

struct WitnessQuery {
    ThreadId thread = 1;
    Value result = 0;
    Operation op;
    Judgement judgement = Judgement::Consistent;
    int bound = 6; // maximum number of events besides init
};

struct WitnessStats {
    std::uint64_t traces = 0;
    std::uint64_t candidates = 0; // executed sets passing the net and filter checks
    std::uint64_t rejected = 0;   // of those, refuted by some order
    std::uint64_t witnesses = 0;
};

struct WitnessCallbacks {
    std::function<bool(const Omega&)> filter;                  // null accepts everything
    std::function<bool(const ConsistencyWitness&)> on_witness; // false stops the search
    std::function<void(const RejectedAttempt&)> on_reject;     // optional
};

namespace detail {

class WitnessSearch {
public:
    WitnessSearch(const AtomicSpec& s, const WitnessQuery& q, const WitnessCallbacks& cb)
        : s_(s), q_(q), cb_(cb), ops_(s.operations())
    {
        if (q.bound > kMaxTraceEvents)
            throw BoundExceeded("witness bound above " + std::to_string(kMaxTraceEvents));
        trace_.v0 = s.v0;
    }

    WitnessStats run()
    {
        stop_ = false;
        dfs(s_.v0, -1, 0, 0, false);
        return stats_;
    }

private:
    struct Cost {
        std::int64_t pre_g = 0, pre_l = 0, post_g = 0, post_l = 0;
    };

    /// `pending`: thread whose first event is the trailing fence and which
    /// must continue next. `tail`: only fences of fence-only threads remain.
    void dfs(Value cur, int last_writer, int nthreads, int pending, bool tail)
    {
        if (stop_)
            return;
        int n = static_cast<int>(trace_.events.size());
        if (pivot_ >= 0) {
            ++stats_.traces;
            // hb only grows by appending, so a mandated event that is hb-after
            // the pivot rules out every extension
            if (!evaluate())
                return;
        }
        if (n == q_.bound)
            return;
        for (const Operation& op : ops_) {
            for (int th = 1; th <= std::min(nthreads + 1, q_.bound); ++th) {
                bool fresh = th == nthreads + 1;
                bool fence = is_fence(op.kind);
                if (fence && !fresh && canon_.back() != th)
                    continue;
                bool next_tail = tail;
                if (tail || (pending && th != pending)) {
                    if (!fence || (!fresh && canon_.back() != th))
                        continue;
                    next_tail = true;
                }
                int next_pending = !next_tail && fence && fresh ? th : 0;
                TraceEvent e;
                e.thread = th;
                e.op = op;
                Value next = cur;
                int writer = last_writer;
                if (is_readlike(op.kind)) {
                    e.result = cur;
                    e.rf = last_writer;
                }
                if (is_rmw(op.kind)) {
                    bool ovf = false;
                    next = op.update->apply(cur, &ovf);
                    if (ovf)
                        continue;
                }
                if (is_write(op.kind))
                    next = op.value;
                if (is_writelike(op.kind))
                    writer = n;
                bool enabled = s_.enabled(op, e.result);
                bool match = op == q_.op && e.result == q_.result;
                bool pivot_ok = match && pivot_ < 0 && (enabled || q_.judgement == Judgement::GroundingConsistent);
                for (int as_pivot = 0; as_pivot < 2; ++as_pivot) {
                    if (as_pivot ? !pivot_ok : !enabled)
                        continue;
                    push(e, as_pivot != 0);
                    dfs(next, writer, fresh ? nthreads + 1 : nthreads, next_pending, next_tail);
                    pop();
                    if (stop_)
                        return;
                }
            }
        }
    }

    void push(const TraceEvent& e, bool pivot)
    {
        trace_.events.push_back(e);
        canon_.push_back(static_cast<int>(e.thread));
        hb_.push(e);
        Cost c;
        if (auto p = s_.pre_of(e.op)) {
            c.pre_g = static_cast<std::int64_t>(p->global);
            c.pre_l = static_cast<std::int64_t>(p->local);
        }
        if (auto p = s_.post_of(e.op, e.result)) {
            c.post_g = static_cast<std::int64_t>(p->global);
            c.post_l = static_cast<std::int64_t>(p->local);
        }
        cost_.push_back(c);
        if (pivot)
            pivot_ = static_cast<int>(trace_.events.size()) - 1;
    }

    void pop()
    {
        if (pivot_ == static_cast<int>(trace_.events.size()) - 1)
            pivot_ = -1;
        trace_.events.pop_back();
        canon_.pop_back();
        hb_.pop();
        cost_.pop_back();
    }

    /// Real thread id of canonical thread c.
    ThreadId real_thread(int c) const
    {
        int pc = canon_[pivot_];
        if (c == pc)
            return q_.thread;
        // remaining canonical threads take the smallest ids other than the pivot's
        int rank = c < pc ? c : c - 1;
        ThreadId id = 0;
        for (int k = 0; k < rank;) {
            ++id;
            if (id != q_.thread)
                ++k;
        }
        return id;
    }

    /// Resource after executing `mask` (signed so negative means undefined).
    void net_of(std::uint32_t mask, std::int64_t& g, std::int64_t* loc) const
    {
        g = static_cast<std::int64_t>(s_.rho0);
        std::fill(loc, loc + kMaxTraceEvents + 1, 0);
        for (int i = 0; i < static_cast<int>(cost_.size()); ++i)
            if (mask & TraceHb::bit(i)) {
                g += cost_[i].post_g - cost_[i].pre_g;
                loc[canon_[i]] += cost_[i].post_l - cost_[i].pre_l;
            }
    }

    Omega to_omega(std::int64_t g, const std::int64_t* loc) const
    {
        Omega w;
        w.global = static_cast<std::uint64_t>(g);
        for (int c = 1; c <= kMaxTraceEvents; ++c)
            if (loc[c] != 0)
                w.bound[real_thread(c)] = static_cast<std::uint64_t>(loc[c]);
        return w;
    }

    AtomicLocationTrace real_trace() const
    {
        AtomicLocationTrace t = trace_;
        for (std::size_t i = 0; i < t.events.size(); ++i)
            t.events[i].thread = real_thread(canon_[i]);
        return t;
    }

    static std::vector<int> indices(std::uint32_t m)
    {
        std::vector<int> v;
        for (int i = 0; m; ++i, m >>= 1)
            if (m & 1)
                v.push_back(i);
        return v;
    }

    /// false when no extension of the current trace can succeed
    bool evaluate()
    {
        int n = static_cast<int>(trace_.events.size());
        std::uint32_t all = n == 32 ? ~0u : (TraceHb::bit(n) - 1);
        std::uint32_t req = hb_.pred(pivot_);
        if (q_.judgement == Judgement::GroundingConsistent)
            for (int i = 0; i < n; ++i)
                if (i != pivot_ && is_release_event(Label{0, 0, 0, trace_.events[i].op}))
                    req |= TraceHb::bit(i);
        std::uint32_t forbid = TraceHb::bit(pivot_) | hb_.succ(pivot_);
        if (req & forbid)
            return false;
        // a trailing event outside E_ex could be dropped; that trace is visited separately
        int last = n - 1;
        if (last != pivot_) {
            if (forbid & TraceHb::bit(last))
                return true;
            req |= TraceHb::bit(last);
        }
        std::uint32_t free = all & ~req & ~forbid;
        std::int64_t loc[kMaxTraceEvents + 1];
        for (std::uint32_t sub = free;; sub = (sub - 1) & free) {
            std::uint32_t m = req | sub;
            std::int64_t g;
            net_of(m, g, loc);
            bool defined = g >= 0 && std::all_of(loc, loc + kMaxTraceEvents + 1, [](std::int64_t x) { return x >= 0; });
            if (defined) {
                Omega w = to_omega(g, loc);
                if (!cb_.filter || cb_.filter(w)) {
                    ++stats_.candidates;
                    if (all_orders_replay(m, w)) {
                        ++stats_.witnesses;
                        ConsistencyWitness wit{real_trace(), pivot_, indices(m), w};
                        if (cb_.on_witness && !cb_.on_witness(wit)) {
                            stop_ = true;
                            return false;
                        }
                    } else {
                        ++stats_.rejected;
                    }
                }
            }
            if (sub == 0)
                break;
        }
        return true;
    }

    /// Every hb-consistent order of `m` can take each precondition. All
    /// defined replays end at the same resource, so checking every order
    /// ideal and every minimal next event is enough.
    bool all_orders_replay(std::uint32_t m, const Omega& net)
    {
        std::vector<int> members = indices(m);
        int k = static_cast<int>(members.size());
        std::vector<std::uint32_t> pred(k, 0); // in compressed indices
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
                if (hb_.hb(members[b], members[a]))
                    pred[a] |= TraceHb::bit(b);
        std::vector<char> reached(std::size_t{1} << k, 0);
        std::vector<signed char> parent(std::size_t{1} << k, -1);
        reached[0] = 1;
        std::int64_t loc[kMaxTraceEvents + 1];
        for (std::uint32_t d = 0; d < (std::uint32_t{1} << k); ++d) {
            if (!reached[d])
                continue;
            std::uint32_t real = 0;
            for (int a = 0; a < k; ++a)
                if (d & TraceHb::bit(a))
                    real |= TraceHb::bit(members[a]);
            std::int64_t g;
            net_of(real, g, loc);
            for (int a = 0; a < k; ++a) {
                if ((d & TraceHb::bit(a)) || (pred[a] & ~d))
                    continue;
                const Cost& c = cost_[members[a]];
                if (g < c.pre_g || loc[canon_[members[a]]] < c.pre_l) {
                    if (cb_.on_reject) {
                        RejectedAttempt r;
                        AtomicLocationTrace t = real_trace();
                        r.trace = &t;
                        r.pivot = pivot_;
                        r.executed = indices(m);
                        r.net = net;
                        for (std::uint32_t x = d; x; x &= ~TraceHb::bit(parent[x]))
                            r.order.push_back(members[parent[x]]);
                        std::reverse(r.order.begin(), r.order.end());
                        r.blocked = members[a];
                        r.before = to_omega(g, loc);
                        cb_.on_reject(r);
                    }
                    return false;
                }
                std::uint32_t nd = d | TraceHb::bit(a);
                if (!reached[nd]) {
                    reached[nd] = 1;
                    parent[nd] = static_cast<signed char>(a);
                }
            }
        }
        return true;
    }

    const AtomicSpec& s_;
    WitnessQuery q_;
    const WitnessCallbacks& cb_;
    std::vector<Operation> ops_;
    AtomicLocationTrace trace_;
    std::vector<int> canon_;
    std::vector<Cost> cost_;
    TraceHb hb_;
    int pivot_ = -1;
    bool stop_ = false;
    WitnessStats stats_;
};

} // namespace detail

/// Visits every witness for the query up to its bound.
inline WitnessStats search_witnesses(const AtomicSpec& s, const WitnessQuery& q, const WitnessCallbacks& cb)
{
    return detail::WitnessSearch(s, q, cb).run();
}

/// Equality of total tied resources up to renaming threads other than t.
inline bool same_up_to_renaming(const Omega& a, const Omega& b, ThreadId t)
{
    using B = AtomicSpec::Total::Bound;
    if (a.global != b.global || B::at(a.bound, t) != B::at(b.bound, t))
        return false;
    std::vector<std::uint64_t> x, y;
    for (auto& [th, v] : a.bound)
        if (th != t)
            x.push_back(v);
    for (auto& [th, v] : b.bound)
        if (th != t)
            y.push_back(v);
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    return x == y;
}

/// Renames the non-pivot threads of a witness so its resource is exactly `target`.
inline void align_threads(ConsistencyWitness& w, const Omega& target, ThreadId t)
{
    std::map<ThreadId, ThreadId> ren{{t, t}};
    std::set<ThreadId> used{t};
    for (auto& [th, v] : target.bound)
        used.insert(th);
    std::set<ThreadId> taken{t};
    for (auto& [th, v] : w.omega.bound) {
        if (th == t)
            continue;
        for (auto& [tt, tv] : target.bound)
            if (tt != t && tv == v && !taken.count(tt)) {
                ren[th] = tt;
                taken.insert(tt);
                break;
            }
    }
    ThreadId fresh = 1;
    for (auto& e : w.trace.events) {
        if (ren.count(e.thread))
            continue;
        while (used.count(fresh) || taken.count(fresh))
            ++fresh;
        ren[e.thread] = fresh;
        taken.insert(fresh);
    }
    for (auto& e : w.trace.events)
        e.thread = ren.at(e.thread);
    Omega o{w.omega.global, {}};
    for (auto& [th, v] : w.omega.bound)
        o.bound[ren.at(th)] = v;
    w.omega = o;
}

enum class WitnessStatus : std::uint8_t { Consistent, NotFoundWithinBound };

struct ConsistencyResult {
    WitnessStatus status = WitnessStatus::NotFoundWithinBound;
    std::optional<ConsistencyWitness> witness;
    int bound = 0;
    WitnessStats stats;

    bool consistent() const { return status == WitnessStatus::Consistent; }
};

namespace detail {

inline ConsistencyResult judge(const AtomicSpec& s, ThreadId t, Value v, const Operation& o, const Omega& w, int bound,
                               Judgement j)
{
    ConsistencyResult res;
    res.bound = bound;
    WitnessCallbacks cb;
    cb.filter = [&](const Omega& x) { return same_up_to_renaming(x, w, t); };
    cb.on_witness = [&](const ConsistencyWitness& x) {
        res.witness = x;
        return false;
    };
    res.stats = search_witnesses(s, WitnessQuery{t, v, o, j, bound}, cb);
    if (res.witness) {
        res.status = WitnessStatus::Consistent;
        align_threads(*res.witness, w, t);
    }
    return res;
}

} // namespace detail

/// Sigma, t, v, o |= omega, searched over traces of at most `bound` events.
inline ConsistencyResult check_consistent_resource(const AtomicSpec& s, ThreadId t, Value v, const Operation& o,
                                                   const Omega& w, int bound)
{
    return detail::judge(s, t, v, o, w, bound, Judgement::Consistent);
}

/// Sigma, t, v, o |=_g omega; the pivot itself need not be enabled.
inline ConsistencyResult check_grounding_consistent(const AtomicSpec& s, ThreadId t, Value v, const Operation& o,
                                                    const Omega& w, int bound)
{
    return detail::judge(s, t, v, o, w, bound, Judgement::GroundingConsistent);
}

/// omega >= (g, l at t), i.e. omega = (g, {t: l}) . rest for some rest.
inline bool covers(const Omega& w, ThreadId t, std::uint64_t g, std::uint64_t l)
{
    return w.global >= g && AtomicSpec::Total::Bound::at(w.bound, t) >= l;
}

struct SufficiencyCounterExample {
    Operation op;
    Value result = 0;
    ConsistencyWitness witness;
};

struct SufficiencyResult {
    bool sufficient = true;
    std::optional<SufficiencyCounterExample> counterexample;
    int bound = 0;
    int pairs_checked = 0;
    WitnessStats stats;
};

/// For every precondition entry (o, pre) and v in `values` with (o, v)
/// outside dom(post), looks for a grounding-consistency witness whose
/// resource still holds pre at the pivot thread.
inline SufficiencyResult check_sufficiency(const AtomicSpec& s, const std::vector<Value>& values, int bound,
                                           const std::function<void(const RejectedAttempt&)>& on_reject = {})
{
    constexpr ThreadId t = 1;
    SufficiencyResult res;
    res.bound = bound;
    for (auto& p : s.pre) {
        for (Value v : values) {
            if (s.post_of(p.op, v))
                continue;
            ++res.pairs_checked;
            WitnessCallbacks cb;
            cb.filter = [&](const Omega& w) { return covers(w, t, p.global, p.local); };
            cb.on_witness = [&](const ConsistencyWitness& w) {
                res.counterexample = SufficiencyCounterExample{p.op, v, w};
                return false;
            };
            cb.on_reject = on_reject;
            auto st = search_witnesses(s, WitnessQuery{t, v, p.op, Judgement::GroundingConsistent, bound}, cb);
            res.stats.traces += st.traces;
            res.stats.candidates += st.candidates;
            res.stats.rejected += st.rejected;
            res.stats.witnesses += st.witnesses;
            if (res.counterexample) {
                res.sufficient = false;
                return res;
            }
        }
    }
    return res;
}

} // namespace rmmlab

#endif
