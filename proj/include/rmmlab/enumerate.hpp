// Exhaustive enumeration of the consistent executions of a loop-free program.
//
// Threads are unrolled one after another (top-level threads in order, then
// forked children as their parents finish). Each read either takes a write
// that already exists, or is deferred: it guesses a value from the value
// domain and is matched against a write of a later thread once every thread
// has finished. Modification orders are enumerated last, per location.
#ifndef RMMLAB_ENUMERATE_HPP_
#define RMMLAB_ENUMERATE_HPP_

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rmmlab/graph_io.hpp"
#include "rmmlab/lang.hpp"
#include "rmmlab/relations.hpp"

namespace rmmlab {

struct Bounds {
    int max_events = 64;
    int max_value_iterations = 0; // 0 means max_events
    int max_threads = 64;

    int value_iterations() const { return max_value_iterations > 0 ? max_value_iterations : max_events; }
};

/// Largest value domain the fixpoint may produce.
inline constexpr std::size_t kMaxDomain = 4096;

struct Execution {
    ExecutionGraph graph;
    Registers registers;
};

// ---------------------------------------------------------------------------
// Value domain

namespace detail {

struct ValueSeeds {
    std::set<Value> literals{0};
    std::set<Value> addends;
    bool pairwise = false;
};

inline void seed_expr(const Expr& e, ValueSeeds& s)
{
    if (!e)
        return;
    switch (e->kind) {
    case ExprNode::Kind::Val:
        s.literals.insert(e->value);
        return;
    case ExprNode::Kind::Add: {
        auto l = e->lhs->kind == ExprNode::Kind::Val, r = e->rhs->kind == ExprNode::Kind::Val;
        if (l)
            s.addends.insert(e->lhs->value);
        if (r)
            s.addends.insert(e->rhs->value);
        if (!l && !r)
            s.pairwise = true;
        break;
    }
    default:
        break;
    }
    seed_expr(e->lhs, s);
    seed_expr(e->rhs, s);
}

inline void seed_cmd(const Cmd& c, ValueSeeds& s)
{
    if (!c)
        return;
    for (auto& e : c->args)
        seed_expr(e, s);
    if (c->kind == CmdKind::Op && is_rmw(c->op.kind)) {
        if (c->op.form == UpdateFn::Form::Add) {
            if (auto k = eval(c->op.arg))
                s.addends.insert(*k);
            else
                s.pairwise = true;
        }
        for (auto& [k, v] : c->op.table) {
            s.literals.insert(k);
            s.literals.insert(v);
        }
        if (c->op.form == UpdateFn::Form::Table)
            s.literals.insert(c->op.table_default);
    }
    if (c->kind == CmdKind::Op)
        seed_expr(c->op.arg, s);
    seed_cmd(c->c1, s);
    seed_cmd(c->c2, s);
}

} // namespace detail

/// Values a read may return: 0 and the program's literals, closed under the
/// program's additions for at most `iterations` rounds.
inline std::vector<Value> value_domain(const Program& p, int iterations)
{
    detail::ValueSeeds s;
    for (auto& t : p.threads)
        detail::seed_cmd(t, s);
    for (auto& [_, sp] : p.specs)
        s.literals.insert(sp.v0);
    std::set<Value> d = s.literals;
    for (int round = 0; round < iterations; ++round) {
        std::set<Value> next = d;
        for (Value v : d) {
            for (Value k : s.addends)
                next.insert(wrapping_add(v, k));
            if (s.pairwise)
                for (Value w : d)
                    next.insert(wrapping_add(v, w));
        }
        if (next.size() > kMaxDomain)
            throw BoundExceeded("value domain exceeds " + std::to_string(kMaxDomain) + " values");
        if (next == d)
            break;
        d = std::move(next);
    }
    return {d.begin(), d.end()};
}

// ---------------------------------------------------------------------------
// Modification orders

/// Calls `f` with every mo (as a transitive relation) compatible with the
/// coherence constraints that follow from hb and rf alone. The caller still
/// has to run the full consistency check.
inline void for_each_mo(const ExecutionGraph& g, const std::function<void(const Relation&)>& f)
{
    RelView v = make_view(g, false);
    BitRel hb = detail::view_hb(v, detail::view_sw(v));
    int n = v.size();
    std::map<Loc, std::vector<int>> writes;
    for (int i = 0; i < n; ++i)
        if (v.nodes[i].writes)
            writes[v.nodes[i].loc].push_back(i);

    std::vector<std::vector<std::vector<int>>> per_loc;
    for (auto& [loc, ws] : writes) {
        int m = static_cast<int>(ws.size());
        std::map<int, int> local;
        for (int i = 0; i < m; ++i)
            local[ws[i]] = i;
        std::vector<std::vector<char>> prec(m, std::vector<char>(m, 0));
        std::vector<int> rmw_src(m, -1), rmw_next(m, -1);
        auto before = [&](int a, int b) {
            if (a != b && a >= 0 && b >= 0)
                prec[a][b] = 1;
        };
        std::vector<std::pair<int, int>> readers; // (node, local source)
        for (int r = 0; r < n; ++r) {
            if (!v.nodes[r].reads || v.nodes[r].loc != loc || v.rf_src[r] < 0)
                continue;
            int s = local.at(v.rf_src[r]);
            readers.emplace_back(r, s);
            if (v.nodes[r].writes) {
                int u = local.at(r);
                if (rmw_next[s] >= 0)
                    return; // two RMWs read the same write: no valid mo
                rmw_src[u] = s;
                rmw_next[s] = u;
                before(s, u);
            }
        }
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                if (hb.test(ws[a], ws[b]))
                    before(a, b);
        for (auto& [r, s] : readers)
            for (int w = 0; w < m; ++w) {
                if (w == s || ws[w] == r)
                    continue;
                if (hb.test(ws[w], r))
                    before(w, s);
                if (hb.test(r, ws[w]))
                    before(s, w);
            }
        for (auto& [r1, s1] : readers)
            for (auto& [r2, s2] : readers)
                if (s1 != s2 && hb.test(r1, r2))
                    before(s1, s2);

        std::vector<std::vector<int>> orders;
        std::vector<int> seq;
        std::vector<char> placed(m, 0);
        std::function<void()> go = [&]() {
            if (static_cast<int>(seq.size()) == m) {
                orders.push_back(seq);
                return;
            }
            int last = seq.empty() ? -1 : seq.back();
            for (int x = 0; x < m; ++x) {
                if (placed[x])
                    continue;
                if (last >= 0 && rmw_next[last] >= 0 && rmw_next[last] != x)
                    continue;
                if (rmw_src[x] >= 0 && rmw_src[x] != last)
                    continue;
                bool ready = true;
                for (int y = 0; y < m && ready; ++y)
                    if (prec[y][x] && !placed[y])
                        ready = false;
                if (!ready)
                    continue;
                placed[x] = 1;
                seq.push_back(x);
                go();
                seq.pop_back();
                placed[x] = 0;
            }
        };
        go();
        if (orders.empty())
            return;
        for (auto& o : orders)
            for (int& x : o)
                x = ws[x];
        per_loc.push_back(std::move(orders));
    }

    Relation mo;
    std::function<void(std::size_t)> prod = [&](std::size_t k) {
        if (k == per_loc.size()) {
            f(mo);
            return;
        }
        for (auto& o : per_loc[k]) {
            std::vector<Edge> added;
            for (std::size_t i = 0; i < o.size(); ++i)
                for (std::size_t j = i + 1; j < o.size(); ++j) {
                    Edge e{v.nodes[o[i]].event, v.nodes[o[j]].event};
                    if (mo.insert(e).second)
                        added.push_back(e);
                }
            prod(k + 1);
            for (auto& e : added)
                mo.erase(e);
        }
    };
    prod(0);
}

// ---------------------------------------------------------------------------
// Enumeration

struct EnumerateOptions {
    /// Also produce executions in which threads stop early (program prefixes).
    bool prefixes = false;
    /// With prefixes, paths longer than this are cut instead of raising
    /// BoundExceeded. 0 means no cap.
    int prefix_cap = 0;
};

namespace detail {

/// A place where a not-yet-started thread may write.
struct WriteSite {
    std::optional<Loc> loc;     // nullopt: unknown location
    std::optional<Value> value; // nullopt: unknown value
};

inline void collect_write_sites(const Cmd& c, std::vector<WriteSite>& out)
{
    if (!c)
        return;
    auto loc = [&]() { return c->args.empty() ? std::nullopt : eval(c->args[0]); };
    switch (c->kind) {
    case CmdKind::Cons:
        for (auto& e : c->args)
            out.push_back({std::nullopt, eval(e)});
        break;
    case CmdKind::WriteNA:
    case CmdKind::WriteNAInProgress:
        out.push_back({loc(), eval(c->args[1])});
        break;
    case CmdKind::Free:
        out.push_back({loc(), Value{0}});
        break;
    case CmdKind::BeginAtomic:
    case CmdKind::EndAtomic:
        out.push_back({loc(), std::nullopt});
        break;
    case CmdKind::Op:
        if (is_write(c->op.kind)) {
            out.push_back({loc(), eval(c->op.arg)});
        } else if (is_rmw(c->op.kind)) {
            if (c->op.form == UpdateFn::Form::Set) {
                out.push_back({loc(), eval(c->op.arg)});
            } else if (c->op.form == UpdateFn::Form::Table) {
                out.push_back({loc(), c->op.table_default});
                for (auto& [_, w] : c->op.table)
                    out.push_back({loc(), w});
            } else {
                out.push_back({loc(), std::nullopt});
            }
        }
        break;
    default:
        break;
    }
    collect_write_sites(c->c1, out);
    collect_write_sites(c->c2, out);
}

class Enumerator {
public:
    Enumerator(const Program& p, const Bounds& b, EnumerateOptions opt)
        : prog_(p), bounds_(b), opt_(opt), domain_(value_domain(p, b.value_iterations()))
    {
    }

    std::vector<Execution> run()
    {
        for (auto& [name, addr] : prog_.locations) {
            (void)name;
            EventId id{kInitThread, static_cast<int>(events_.size())};
            events_.push_back({id, Label{kInitThread, addr, 0, Operation::write(OpKind::WriteNA, 0)}, std::nullopt});
        }
        if (prog_.threads.size() >= static_cast<std::size_t>(kForkFanout))
            throw BoundExceeded("too many top-level threads");
        for (std::size_t i = 0; i < prog_.threads.size(); ++i)
            queue_.push_back({static_cast<ThreadId>(i + 1), prog_.threads[i]});
        check_threads();
        if (queue_.empty())
            leaf();
        else
            thread_step(0, ThreadCursor(queue_[0].tid, queue_[0].body));
        std::vector<Execution> out;
        for (auto& [_, e] : results_)
            out.push_back(std::move(e));
        return out;
    }

private:
    struct Slot {
        ThreadId tid;
        Cmd body;
    };
    struct Ev {
        EventId id;
        Label label;
        std::optional<EventTag> tag;
    };
    struct Deferred {
        std::size_t reader; // position in events_
        Loc loc;
        Value value;
    };

    void check_threads() const
    {
        if (static_cast<int>(queue_.size()) > bounds_.max_threads)
            throw BoundExceeded("more than " + std::to_string(bounds_.max_threads) + " threads");
    }

    bool po_lt(const EventId& a, const EventId& b) const
    {
        if (a.is_init())
            return !b.is_init();
        if (b.is_init())
            return false;
        if (a.thread == b.thread)
            return a.index < b.index;
        for (ThreadId c = b.thread; parent_thread(c) != kInitThread; c = parent_thread(c))
            if (parent_thread(c) == a.thread)
                return a.index < fork_points_.at(c);
        return false;
    }

    /// Possible later writers of `loc`; nullopt entry = any value.
    std::pair<bool, std::set<Value>> future_values(std::size_t qi, const ThreadCursor& cur, Loc loc) const
    {
        std::vector<WriteSite> sites;
        for (std::size_t j = qi + 1; j < queue_.size(); ++j)
            collect_write_sites(queue_[j].body, sites);
        for (auto& [_, body] : cur.forks())
            collect_write_sites(body, sites);
        bool any = false;
        std::set<Value> vals;
        bool some = false;
        for (auto& s : sites) {
            if (s.loc && *s.loc != loc)
                continue;
            some = true;
            if (!s.value)
                any = true;
            else
                vals.insert(*s.value);
        }
        if (!some)
            return {false, {}};
        if (any)
            return {true, {}};
        return {false, vals};
    }

    void push_events(const ThreadCursor& before, const std::vector<UnrolledEvent>& evs)
    {
        int idx = before.emitted();
        for (auto& e : evs)
            events_.push_back({EventId{before.thread(), idx++}, e.label, e.tag});
    }

    bool over_cap(std::size_t extra) const
    {
        std::size_t total = events_.size() + extra;
        if (opt_.prefixes && opt_.prefix_cap > 0)
            return total > static_cast<std::size_t>(opt_.prefix_cap);
        if (total > static_cast<std::size_t>(bounds_.max_events))
            throw BoundExceeded("more than " + std::to_string(bounds_.max_events) + " events");
        return false;
    }

    void thread_step(std::size_t qi, ThreadCursor cur)
    {
        auto st = cur.status();
        if (st.kind == ThreadCursorStatus::Kind::Done) {
            finish(qi, cur);
            return;
        }
        if (opt_.prefixes)
            finish(qi, cur);
        std::size_t mark = events_.size();
        if (st.kind == ThreadCursorStatus::Kind::Emits) {
            ThreadCursor next = cur;
            auto evs = next.step();
            if (over_cap(evs.size()))
                return;
            push_events(cur, evs);
            thread_step(qi, std::move(next));
            events_.resize(mark);
            return;
        }
        // a read: existing sources first
        EventId rid{cur.thread(), cur.emitted()};
        std::vector<std::size_t> cands;
        for (std::size_t w = 0; w < events_.size(); ++w) {
            const Label& lw = events_[w].label;
            if (!is_writelike(lw.op.kind) || lw.location != st.location)
                continue;
            cands.push_back(w);
        }
        for (std::size_t w : cands) {
            bool dominated = false;
            for (std::size_t w2 : cands)
                if (w2 != w && po_lt(events_[w].id, events_[w2].id) && po_lt(events_[w2].id, rid)) {
                    dominated = true;
                    break;
                }
            if (dominated)
                continue;
            ThreadCursor next = cur;
            auto evs = next.step(events_[w].label.written());
            if (over_cap(evs.size()))
                continue;
            push_events(cur, evs);
            rf_.emplace_back(w, mark);
            thread_step(qi, std::move(next));
            rf_.pop_back();
            events_.resize(mark);
        }
        // deferred to a later thread
        auto [any, vals] = future_values(qi, cur, st.location);
        std::vector<Value> guesses;
        if (any)
            guesses = domain_;
        else
            for (Value v : vals)
                if (std::binary_search(domain_.begin(), domain_.end(), v))
                    guesses.push_back(v);
        for (Value v : guesses) {
            ThreadCursor next = cur;
            auto evs = next.step(v);
            if (over_cap(evs.size()))
                continue;
            push_events(cur, evs);
            deferred_.push_back({mark, st.location, v});
            thread_step(qi, std::move(next));
            deferred_.pop_back();
            events_.resize(mark);
        }
    }

    void finish(std::size_t qi, const ThreadCursor& cur)
    {
        ThreadId t = cur.thread();
        std::size_t qmark = queue_.size();
        const auto& forks = cur.forks();
        if (forks.size() >= static_cast<std::size_t>(kForkFanout))
            throw BoundExceeded("thread forks more than 9 children");
        for (std::size_t k = 0; k < forks.size(); ++k) {
            ThreadId c = cur.child_id(k);
            queue_.push_back({c, forks[k].second});
            fork_points_[c] = forks[k].first;
        }
        check_threads();
        regs_[t] = cur.registers();
        if (qi + 1 < queue_.size())
            thread_step(qi + 1, ThreadCursor(queue_[qi + 1].tid, queue_[qi + 1].body));
        else
            leaf();
        regs_.erase(t);
        for (std::size_t k = qmark; k < queue_.size(); ++k)
            fork_points_.erase(queue_[k].tid);
        queue_.resize(qmark);
    }

    void leaf()
    {
        std::vector<std::vector<std::size_t>> options(deferred_.size());
        for (std::size_t d = 0; d < deferred_.size(); ++d) {
            const auto& df = deferred_[d];
            ThreadId rt = events_[df.reader].id.thread;
            for (std::size_t w = df.reader + 1; w < events_.size(); ++w) {
                const Label& lw = events_[w].label;
                if (events_[w].id.thread == rt || !is_writelike(lw.op.kind) || lw.location != df.loc ||
                    lw.written() != df.value)
                    continue;
                options[d].push_back(w);
            }
            if (options[d].empty())
                return;
        }
        std::vector<std::size_t> pick(deferred_.size());
        std::function<void(std::size_t)> go = [&](std::size_t d) {
            if (d == deferred_.size()) {
                emit(pick);
                return;
            }
            for (std::size_t w : options[d]) {
                pick[d] = w;
                go(d + 1);
            }
        };
        go(0);
    }

    void emit(const std::vector<std::size_t>& pick)
    {
        ExecutionGraph g;
        for (auto& e : events_) {
            g.lab.emplace(e.id, e.label);
            if (e.tag)
                g.tags.emplace(e.id, *e.tag);
        }
        std::map<ThreadId, int> fp;
        for (auto& [c, n] : fork_points_)
            fp[c] = n;
        rebuild_po(g, fp);
        for (auto& [w, r] : rf_)
            g.rf.emplace(events_[w].id, events_[r].id);
        for (std::size_t d = 0; d < deferred_.size(); ++d)
            g.rf.emplace(events_[pick[d]].id, events_[deferred_[d].reader].id);
        if (has_hb_cycle(g))
            return;
        for_each_mo(g, [&](const Relation& mo) {
            g.mo = mo;
            if (!is_consistent(g))
                return;
            std::string key = print_graph(g);
            if (!results_.count(key))
                results_.emplace(std::move(key), Execution{g, regs_});
        });
    }

    static bool has_hb_cycle(const ExecutionGraph& g)
    {
        RelView v = make_view(g, false);
        BitRel hb = detail::view_hb(v, detail::view_sw(v));
        return !hb.irreflexive();
    }

    const Program& prog_;
    Bounds bounds_;
    EnumerateOptions opt_;
    std::vector<Value> domain_;

    std::vector<Slot> queue_;
    std::vector<Ev> events_;
    std::vector<std::pair<std::size_t, std::size_t>> rf_;
    std::vector<Deferred> deferred_;
    std::map<ThreadId, int> fork_points_;
    Registers regs_;
    std::map<std::string, Execution> results_;
};

} // namespace detail

/// The consistent executions of `p`, high-level, sorted by their printed form.
inline std::vector<Execution> enumerate_executions(const Program& p, const Bounds& b = {},
                                                   EnumerateOptions opt = {})
{
    return detail::Enumerator(p, b, opt).run();
}

struct LitmusVerdict {
    bool observable = false;
    std::vector<Execution> witnesses;
    std::size_t total_consistent = 0;
};

inline LitmusVerdict check_litmus(const Program& p, const Bounds& b = {})
{
    LitmusVerdict v;
    auto all = enumerate_executions(p, b);
    v.total_consistent = all.size();
    for (auto& e : all)
        if (!p.postcondition || holds(p.postcondition, e.registers))
            v.witnesses.push_back(std::move(e));
    v.observable = !v.witnesses.empty();
    return v;
}

struct RaceSummary {
    std::size_t executions = 0;
    std::size_t racy_executions = 0;
    std::vector<std::pair<std::size_t, Race>> races; // (execution index, race)
    bool racy() const { return racy_executions > 0; }
};

inline RaceSummary count_races(const Program& p, const Bounds& b = {})
{
    RaceSummary s;
    auto all = enumerate_executions(p, b);
    s.executions = all.size();
    for (std::size_t i = 0; i < all.size(); ++i) {
        auto rep = find_data_races(all[i].graph);
        if (rep.racy())
            ++s.racy_executions;
        for (auto& r : rep.races)
            s.races.emplace_back(i, r);
    }
    return s;
}

} // namespace rmmlab

#endif
