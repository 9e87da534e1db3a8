// Interleaving operational semantics over instrumented programs: configurations,
// head steps, the thread-pool step relation, safety exploration, replay of
// execution prefixes and the prefix/configuration correspondence.
#ifndef RMMLAB_OPSEM_HPP_
#define RMMLAB_OPSEM_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "rmmlab/enumerate.hpp"
#include "rmmlab/graph.hpp"
#include "rmmlab/lang.hpp"
#include "rmmlab/relations.hpp"
#include "rmmlab/tied.hpp"
#include "rmmlab/witness.hpp"

namespace rmmlab {

struct CellState {
    enum class Kind : std::uint8_t { Value, Reserved };
    Kind kind = Kind::Value;
    Value value = 0;
    bool initial = false; // value still the one written at allocation

    static CellState of(Value v, bool init = false) { return {Kind::Value, v, init}; }
    static CellState reserved() { return {Kind::Reserved, 0, false}; }
    bool has_value() const { return kind == Kind::Value; }

    auto operator<=>(const CellState&) const = default;
};

struct AtomicCell {
    std::string spec;
    Omega omega;
    auto operator<=>(const AtomicCell&) const = default;
};

struct ThreadState {
    Cmd cmd;
    int emitted = 0;
    int forks = 0;
    std::vector<Value> history; // results of value-producing head steps; fixes cmd
};

/// gamma = (h, A, T). Cells absent from `heap` are unallocated.
struct Configuration {
    std::map<Loc, CellState> heap;
    std::map<Loc, AtomicCell> atomic;
    std::map<ThreadId, ThreadState> threads;

    /// Identity for exploration: a thread's command is a function of its
    /// initial command and its step history.
    std::string key() const
    {
        std::string k;
        for (auto& [l, c] : heap)
            k += std::to_string(l) + (c.has_value() ? "=" + std::to_string(c.value) + (c.initial ? "i" : "") : "#") + ";";
        k += "|";
        for (auto& [l, a] : atomic) {
            k += std::to_string(l) + ":" + a.spec + ":" + std::to_string(a.omega.global);
            for (auto& [t, v] : a.omega.bound)
                k += "," + std::to_string(t) + "=" + std::to_string(v);
            k += ";";
        }
        k += "|";
        for (auto& [t, s] : threads) {
            k += std::to_string(t) + ":" + std::to_string(s.emitted) + ":";
            for (Value v : s.history)
                k += std::to_string(v) + ",";
            k += ";";
        }
        return k;
    }

    bool same_state(const Configuration& o) const
    {
        if (heap != o.heap || atomic != o.atomic || threads.size() != o.threads.size())
            return false;
        for (auto& [t, s] : threads) {
            auto it = o.threads.find(t);
            if (it == o.threads.end() || !equal(s.cmd, it->second.cmd))
                return false;
        }
        return true;
    }
};

enum class Rule : std::uint8_t {
    Cons,
    NARead,
    NAWriteStart,
    NAWriteEnd,
    Free,
    IfTrue,
    IfFalse,
    Let,
    BeginAtomic,
    EndAtomic,
    AtomicOp,
    AtomicOpStutter,
    Fork,
};

inline const char* to_string(Rule r)
{
    switch (r) {
    case Rule::Cons: return "Cons";
    case Rule::NARead: return "NA-Read";
    case Rule::NAWriteStart: return "NA-Write-Start";
    case Rule::NAWriteEnd: return "NA-Write-End";
    case Rule::Free: return "Free";
    case Rule::IfTrue: return "If-True";
    case Rule::IfFalse: return "If-False";
    case Rule::Let: return "Let";
    case Rule::BeginAtomic: return "BeginAtomic";
    case Rule::EndAtomic: return "EndAtomic";
    case Rule::AtomicOp: return "AtomicOp";
    case Rule::AtomicOpStutter: return "AtomicOp-Stutter";
    case Rule::Fork: return "Fork";
    }
    return "?";
}

struct StepLabel {
    ThreadId thread = 0;
    Rule rule = Rule::Let;
    std::vector<UnrolledEvent> events;
};

/// Four cases per location: unallocated, nonatomic, atomic, deallocated.
/// With absent cells meaning unallocated, the only way to break them is an
/// atomic entry over a cell that is absent or holds a value.
inline bool four_state_ok(const Configuration& g)
{
    for (auto& [l, a] : g.atomic) {
        auto it = g.heap.find(l);
        if (it == g.heap.end() || it->second.has_value())
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Consistency oracles

struct WitnessSearchOracle {
    int bound = 4;
    std::vector<Value> values; // candidate results and end_atomic values; empty: program domain
};

struct GraphGuidedOracle {
    const ExecutionGraph* graph = nullptr;
};

using ConsistencyOracle = std::variant<WitnessSearchOracle, GraphGuidedOracle>;

/// Graph-side check of Sigma, t, v, o |= omega: the trace is the whole graph
/// restricted to the atomic events of the location's current era, the pivot
/// is `e`, and E_ex is the executed part of it.
class GraphWitness {
public:
    explicit GraphWitness(const ExecutionGraph& g) : g_(g), ix_(g), hb_(ix_.dense(derive_hb(g))) {}

    bool holds(const AtomicSpec& s, const EventId& e, const std::set<EventId>& executed, const Omega& w) const
    {
        if (!g_.contains(e))
            return false;
        const Label& le = g_.label(e);
        std::vector<EventId> at = era_events(le.location, e);
        std::vector<TracedOp> ops;
        int pivot = -1;
        std::uint64_t ex = 0;
        for (std::size_t i = 0; i < at.size(); ++i) {
            const Label& l = g_.label(at[i]);
            if (!s.enabled(l.op, l.result))
                return false; // not fully enabled
            ops.push_back({l.thread, l.op, l.result});
            if (at[i] == e)
                pivot = static_cast<int>(i);
            if (executed.count(at[i]))
                ex |= std::uint64_t{1} << i;
        }
        if (pivot < 0 || at.size() > 20)
            return false;
        int n = static_cast<int>(at.size());
        for (int i = 0; i < n; ++i) {
            bool before = hb(at[i], e), after = hb(e, at[i]);
            bool in = (ex >> i) & 1;
            if ((before && !in) || (after && in) || (i == pivot && in))
                return false;
        }
        std::vector<std::uint64_t> pred(n, 0);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (hb(at[b], at[a]))
                    pred[a] |= std::uint64_t{1} << b;
        auto r = replay_all_orders(s, ops, pred, ex);
        return r && *r == w;
    }

    /// Atomic events on `l` that follow the latest begin_atomic hb-before e.
    std::vector<EventId> era_events(Loc l, const EventId& e) const
    {
        std::optional<EventId> begin;
        for (auto& [x, t] : g_.tags)
            if (t.kind == PseudoKind::BeginAtomic && is_write(g_.label(x).op.kind) && g_.label(x).location == l &&
                hb(x, e) && (!begin || hb(*begin, x)))
                begin = x;
        std::vector<EventId> out;
        for (auto& [x, lab] : g_.lab)
            if (lab.location == l && !is_nonatomic(lab.op.kind) && !x.is_init() && (!begin || hb(*begin, x)))
                out.push_back(x);
        return out;
    }

    bool hb(const EventId& a, const EventId& b) const { return hb_.test(ix_[a], ix_[b]); }
    const ExecutionGraph& graph() const { return g_; }

    /// All hb-consistent orders of the events in `mask` can take every
    /// precondition; returns the common final resource.
    static std::optional<Omega> replay_all_orders(const AtomicSpec& s, const std::vector<TracedOp>& ops,
                                                  const std::vector<std::uint64_t>& pred, std::uint64_t mask)
    {
        std::map<std::uint64_t, Omega> layer{{0, s.initial()}};
        std::optional<Omega> last = s.initial();
        while (!layer.empty()) {
            std::map<std::uint64_t, Omega> next;
            for (auto& [d, w] : layer) {
                last = w;
                for (std::size_t a = 0; a < ops.size(); ++a) {
                    std::uint64_t b = std::uint64_t{1} << a;
                    if (!(mask & b) || (d & b) || (pred[a] & mask & ~d))
                        continue;
                    auto c = consume_pre(s, w, ops[a].thread, ops[a].op);
                    if (!c)
                        return std::nullopt;
                    next.emplace(d | b, produce_post(s, *c, ops[a].thread, ops[a].op, ops[a].result));
                }
            }
            layer = std::move(next);
        }
        return last;
    }

private:
    const ExecutionGraph& g_;
    EventIndex ix_;
    BitRel hb_;
};

enum class BeginMode : std::uint8_t { Permissive, Strict };

// ---------------------------------------------------------------------------
// The step relation

class Opsem {
public:
    Opsem(const Program& p, ConsistencyOracle oracle, BeginMode begin = BeginMode::Permissive)
        : p_(p), oracle_(std::move(oracle)), begin_(begin)
    {
        if (auto* ws = std::get_if<WitnessSearchOracle>(&oracle_)) {
            if (ws->values.empty())
                ws->values = value_domain(p, 8);
        } else {
            auto& gg = std::get<GraphGuidedOracle>(oracle_);
            if (!gg.graph)
                throw Error("graph-guided oracle without a graph");
            witness_.emplace(*gg.graph);
        }
    }

    const Program& program() const { return p_; }

    Configuration initial() const
    {
        Configuration c;
        for (auto& [_, l] : p_.locations)
            c.heap[l] = CellState::of(0, true);
        for (std::size_t i = 0; i < p_.threads.size(); ++i)
            c.threads[static_cast<ThreadId>(i + 1)] = ThreadState{p_.threads[i], 0, 0, {}};
        return c;
    }

    /// Head steps of thread t at its redex. Fork is a pool-level rule and
    /// is left to step().
    std::vector<std::pair<Configuration, StepLabel>> head_step(const Configuration& g, ThreadId t) const
    {
        std::vector<std::pair<Configuration, StepLabel>> out;
        const ThreadState& ts = g.threads.at(t);
        const Cmd& h = head_of(ts.cmd);
        auto succ = [&](Rule r, Cmd replacement, std::vector<UnrolledEvent> evs = {}) {
            Configuration c = g;
            ThreadState& s = c.threads.at(t);
            s.cmd = plug(ts.cmd, replacement);
            s.emitted += static_cast<int>(evs.size());
            return std::pair{std::move(c), StepLabel{t, r, std::move(evs)}};
        };
        auto value_cmd = [](Value v) { return mk::ret(val(v)); };
        auto heap_at = [&](Loc l) -> const CellState* {
            auto it = g.heap.find(l);
            return it == g.heap.end() ? nullptr : &it->second;
        };
        switch (h->kind) {
        case CmdKind::Ret:
        case CmdKind::Fork:
            return out;
        case CmdKind::Let: {
            Value v = *as_value(h->c1);
            auto [c, lab] = succ(Rule::Let, substitute(h->c2, v, h->name));
            out.emplace_back(std::move(c), std::move(lab));
            return out;
        }
        case CmdKind::If: {
            Value v = eval_closed(h->args[0]);
            auto [c, lab] = v != 0 ? succ(Rule::IfTrue, h->c1) : succ(Rule::IfFalse, value_cmd(0));
            out.emplace_back(std::move(c), std::move(lab));
            return out;
        }
        case CmdKind::Cons: {
            Loc n = static_cast<Loc>(h->args.size());
            Loc base = alloc_base(t);
            for (;; ++base) {
                if (base + n > alloc_base(t) + 1000)
                    throw BoundExceeded("allocation region of thread " + std::to_string(t) + " exhausted");
                bool freeblk = true;
                for (Loc i = 0; i < n && freeblk; ++i)
                    freeblk = !g.heap.count(base + i) && !g.atomic.count(base + i);
                if (freeblk)
                    break;
            }
            std::vector<UnrolledEvent> evs;
            for (Loc i = 0; i < n; ++i)
                evs.push_back({Label{t, base + i, 0, Operation::write(OpKind::WriteNA, eval_closed(h->args[i]))},
                               EventTag{PseudoKind::Alloc, ""}});
            auto [c, lab] = succ(Rule::Cons, value_cmd(base), evs);
            for (Loc i = 0; i < n; ++i)
                c.heap[base + i] = CellState::of(eval_closed(h->args[i]), true);
            c.threads.at(t).history.push_back(base);
            out.emplace_back(std::move(c), std::move(lab));
            return out;
        }
        case CmdKind::ReadNA: {
            Loc l = eval_closed(h->args[0]);
            auto cell = heap_at(l);
            if (!cell || !cell->has_value())
                return out;
            auto [c, lab] = succ(Rule::NARead, value_cmd(cell->value),
                                 {{Label{t, l, cell->value, Operation::read(OpKind::ReadNA)}, std::nullopt}});
            c.threads.at(t).history.push_back(cell->value);
            out.emplace_back(std::move(c), std::move(lab));
            return out;
        }
        case CmdKind::WriteNA: {
            Loc l = eval_closed(h->args[0]);
            auto cell = heap_at(l);
            if (!cell || !cell->has_value())
                return out;
            auto [c, lab] = succ(Rule::NAWriteStart, mk::write_in_progress(l, eval_closed(h->args[1])));
            c.heap[l] = CellState::reserved();
            c.threads.at(t).history.push_back(0);
            out.emplace_back(std::move(c), std::move(lab));
            return out;
        }
        case CmdKind::WriteNAInProgress: {
            Loc l = eval_closed(h->args[0]);
            Value v = eval_closed(h->args[1]);
            auto cell = heap_at(l);
            if (!cell || cell->has_value() || g.atomic.count(l))
                return out;
            auto [c, lab] =
                succ(Rule::NAWriteEnd, value_cmd(0), {{Label{t, l, 0, Operation::write(OpKind::WriteNA, v)}, std::nullopt}});
            c.heap[l] = CellState::of(v);
            c.threads.at(t).history.push_back(0);
            out.emplace_back(std::move(c), std::move(lab));
            return out;
        }
        case CmdKind::Free: {
            Loc l = eval_closed(h->args[0]);
            auto cell = heap_at(l);
            if (!cell || !cell->has_value())
                return out;
            auto [c, lab] = succ(Rule::Free, value_cmd(0),
                                 {{Label{t, l, 0, Operation::write(OpKind::WriteNA, 0)}, EventTag{PseudoKind::Free, ""}}});
            c.heap[l] = CellState::reserved();
            c.threads.at(t).history.push_back(0);
            out.emplace_back(std::move(c), std::move(lab));
            return out;
        }
        case CmdKind::BeginAtomic: {
            Loc l = eval_closed(h->args[0]);
            const AtomicSpec& s = p_.spec(h->name);
            auto cell = heap_at(l);
            if (!cell || !cell->has_value() || cell->value != s.v0)
                return out;
            if (begin_ == BeginMode::Strict && !cell->initial)
                return out;
            auto [c, lab] = succ(Rule::BeginAtomic, value_cmd(0),
                                 {{Label{t, l, s.v0, Operation::read(OpKind::ReadNA)}, EventTag{PseudoKind::BeginAtomic, h->name}},
                                  {Label{t, l, 0, Operation::write(OpKind::WriteNA, s.v0)},
                                   EventTag{PseudoKind::BeginAtomic, h->name}}});
            c.heap[l] = CellState::reserved();
            c.atomic[l] = AtomicCell{h->name, s.initial()};
            c.threads.at(t).history.push_back(0);
            out.emplace_back(std::move(c), std::move(lab));
            return out;
        }
        case CmdKind::EndAtomic: {
            Loc l = eval_closed(h->args[0]);
            if (!g.atomic.count(l))
                return out;
            for (Value v : end_values(g, t)) {
                auto [c, lab] =
                    succ(Rule::EndAtomic, value_cmd(0),
                         {{Label{t, l, v, Operation::read(OpKind::ReadNA)}, EventTag{PseudoKind::EndAtomic, ""}},
                          {Label{t, l, 0, Operation::write(OpKind::WriteNA, v)}, EventTag{PseudoKind::EndAtomic, ""}}});
                c.heap[l] = CellState::of(v);
                c.atomic.erase(l);
                c.threads.at(t).history.push_back(v);
                out.emplace_back(std::move(c), std::move(lab));
            }
            return out;
        }
        case CmdKind::Op: {
            Loc l = eval_closed(h->args[0]);
            Operation o = instantiate(h->op);
            auto ai = g.atomic.find(l);
            if (ai == g.atomic.end())
                return out;
            const AtomicSpec& s = p_.spec(ai->second.spec);
            if (!s.pre_of(o))
                return out;
            auto rest = consume_pre(s, ai->second.omega, t, o);
            if (!rest)
                return out;
            for (Value v : op_results(g, t, l, s, o, ai->second.omega)) {
                auto [c, lab] = succ(Rule::AtomicOp, value_cmd(v), {{Label{t, l, v, o}, std::nullopt}});
                c.atomic.at(l).omega = produce_post(s, *rest, t, o, v);
                c.threads.at(t).history.push_back(v);
                out.emplace_back(std::move(c), std::move(lab));
            }
            out.emplace_back(g, StepLabel{t, Rule::AtomicOpStutter, {}});
            return out;
        }
        }
        return out;
    }

    /// Head steps of every thread, plus Fork.
    std::vector<std::pair<Configuration, StepLabel>> step(const Configuration& g) const
    {
        std::vector<std::pair<Configuration, StepLabel>> out;
        for (auto& [t, ts] : g.threads) {
            const Cmd& h = head_of(ts.cmd);
            if (h->kind == CmdKind::Fork) {
                out.emplace_back(fork(g, t));
                continue;
            }
            for (auto& s : head_step(g, t))
                out.push_back(std::move(s));
        }
        return out;
    }

    /// Runs Let, If and Fork steps of t (and of the children it forks) until
    /// every affected thread sits at a memory command or is finished.
    void normalize(Configuration& g, ThreadId t, std::vector<StepLabel>* labels = nullptr) const
    {
        std::vector<ThreadId> work{t};
        while (!work.empty()) {
            ThreadId u = work.back();
            work.pop_back();
            for (;;) {
                const Cmd& h = head_of(g.threads.at(u).cmd);
                if (h->kind == CmdKind::Fork) {
                    auto [c, lab] = fork(g, u);
                    g = std::move(c);
                    ThreadId child = u * kForkFanout + g.threads.at(u).forks;
                    if (labels)
                        labels->push_back(lab);
                    work.push_back(child);
                    continue;
                }
                if (h->kind != CmdKind::Let && h->kind != CmdKind::If)
                    break;
                auto s = head_step(g, u);
                g = std::move(s.front().first);
                if (labels)
                    labels->push_back(std::move(s.front().second));
            }
        }
    }

    void normalize_all(Configuration& g) const
    {
        std::vector<ThreadId> ts;
        for (auto& [t, _] : g.threads)
            ts.push_back(t);
        for (ThreadId t : ts)
            normalize(g, t);
    }

    bool finished(const Configuration& g, ThreadId t) const { return as_value(g.threads.at(t).cmd).has_value(); }

private:
    std::pair<Configuration, StepLabel> fork(const Configuration& g, ThreadId t) const
    {
        const ThreadState& ts = g.threads.at(t);
        const Cmd& h = head_of(ts.cmd);
        Configuration c = g;
        ThreadState& s = c.threads.at(t);
        ++s.forks;
        if (s.forks >= kForkFanout)
            throw BoundExceeded("thread " + std::to_string(t) + " forks more than 9 children");
        ThreadId child = t * kForkFanout + s.forks;
        s.cmd = plug(ts.cmd, mk::ret(val(0)));
        c.threads[child] = ThreadState{h->c1, 0, 0, {}};
        return {std::move(c), StepLabel{t, Rule::Fork, {}}};
    }

    std::set<EventId> executed(const Configuration& g) const
    {
        std::set<EventId> ex;
        for (auto& [t, s] : g.threads)
            for (int i = 0; i < s.emitted; ++i)
                ex.insert(EventId{t, i});
        return ex;
    }

    std::vector<Value> op_results(const Configuration& g, ThreadId t, Loc l, const AtomicSpec& s, const Operation& o,
                                  const Omega& w) const
    {
        std::vector<Value> vs;
        if (witness_) {
            EventId e{t, g.threads.at(t).emitted};
            const auto& graph = witness_->graph();
            if (!graph.contains(e))
                return vs;
            const Label& le = graph.label(e);
            if (le.location != l || le.op != o || !s.enabled(o, le.result))
                return vs;
            if (witness_->holds(s, e, executed(g), w))
                vs.push_back(le.result);
            return vs;
        }
        const auto& ws = std::get<WitnessSearchOracle>(oracle_);
        for (Value v : ws.values) {
            if (!s.enabled(o, v))
                continue;
            auto key = std::tuple{&s, t, v, o, w};
            auto it = cache_.find(key);
            bool ok;
            if (it != cache_.end()) {
                ok = it->second;
            } else {
                ok = check_consistent_resource(s, t, v, o, w, ws.bound).consistent();
                cache_.emplace(key, ok);
            }
            if (ok)
                vs.push_back(v);
        }
        return vs;
    }

    std::vector<Value> end_values(const Configuration& g, ThreadId t) const
    {
        if (witness_) {
            EventId e{t, g.threads.at(t).emitted};
            const auto& graph = witness_->graph();
            auto tag = graph.tags.find(e);
            if (graph.contains(e) && tag != graph.tags.end() && tag->second.kind == PseudoKind::EndAtomic)
                return {graph.label(e).result};
            return {};
        }
        return std::get<WitnessSearchOracle>(oracle_).values;
    }

    const Program& p_;
    ConsistencyOracle oracle_;
    BeginMode begin_;
    std::optional<GraphWitness> witness_;
    mutable std::map<std::tuple<const AtomicSpec*, ThreadId, Value, Operation, Omega>, bool> cache_;
};

// ---------------------------------------------------------------------------
// Safety exploration

struct SafetyVerdict {
    bool safe = true;
    std::optional<std::vector<StepLabel>> stuck_trace;
    std::optional<ThreadId> stuck_thread;
    std::uint64_t blocked_count = 0;  // (configuration, thread) pairs where only stutter applies
    std::uint64_t states = 0;
    std::uint64_t four_state_violations = 0;
};

struct ExploreOptions {
    std::uint64_t max_states = 2'000'000;
    BeginMode begin = BeginMode::Permissive;
};

/// Depth-first search over all interleavings. Let, If and Fork run eagerly
/// after each memory step since they commute with every other thread and
/// cannot get stuck; stutter successors are not expanded.
inline SafetyVerdict explore_safety(const Program& p, const ConsistencyOracle& oracle, const ExploreOptions& opt = {})
{
    Opsem sem(p, oracle, opt.begin);
    SafetyVerdict res;
    struct Node {
        Configuration conf;
        int parent;
        std::vector<StepLabel> labels;
    };
    std::vector<Node> nodes;
    Configuration init = sem.initial();
    std::vector<StepLabel> init_labels;
    {
        std::vector<ThreadId> ts;
        for (auto& [t, _] : init.threads)
            ts.push_back(t);
        for (ThreadId t : ts)
            sem.normalize(init, t, &init_labels);
    }
    std::unordered_set<std::string> seen{init.key()};
    nodes.push_back({std::move(init), -1, std::move(init_labels)});
    std::vector<int> stack{0};
    auto trace_to = [&](int i) {
        std::vector<int> path;
        for (int j = i; j >= 0; j = nodes[j].parent)
            path.push_back(j);
        std::vector<StepLabel> tr;
        for (auto it = path.rbegin(); it != path.rend(); ++it)
            for (auto& l : nodes[*it].labels)
                tr.push_back(l);
        return tr;
    };
    while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        ++res.states;
        if (res.states > opt.max_states)
            throw BoundExceeded("opsem exploration exceeded " + std::to_string(opt.max_states) + " states");
        if (!four_state_ok(nodes[i].conf))
            ++res.four_state_violations;
        std::vector<ThreadId> ts;
        for (auto& [t, _] : nodes[i].conf.threads)
            ts.push_back(t);
        for (ThreadId t : ts) {
            if (sem.finished(nodes[i].conf, t))
                continue;
            auto succs = sem.head_step(nodes[i].conf, t);
            if (succs.empty()) {
                res.safe = false;
                res.stuck_thread = t;
                res.stuck_trace = trace_to(i);
                return res;
            }
            bool progressed = false;
            for (auto& [c, lab] : succs) {
                if (lab.rule == Rule::AtomicOpStutter)
                    continue;
                progressed = true;
                std::vector<StepLabel> labels{lab};
                sem.normalize(c, t, &labels);
                auto k = c.key();
                if (!seen.insert(k).second)
                    continue;
                nodes.push_back({std::move(c), i, std::move(labels)});
                stack.push_back(static_cast<int>(nodes.size()) - 1);
            }
            if (!progressed)
                ++res.blocked_count;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Replay of execution prefixes

/// Groups each graph event with the first event of the opsem step emitting it.
inline std::map<EventId, EventId> step_leaders(const Program& p, const ExecutionGraph& g)
{
    std::map<EventId, EventId> lead;
    std::vector<std::pair<ThreadId, Cmd>> work;
    for (std::size_t i = 0; i < p.threads.size(); ++i)
        work.emplace_back(static_cast<ThreadId>(i + 1), p.threads[i]);
    while (!work.empty()) {
        auto [t, c] = work.back();
        work.pop_back();
        ThreadCursor cur(t, c);
        for (;;) {
            auto st = cur.status();
            if (st.kind == ThreadCursorStatus::Kind::Done)
                break;
            EventId first{t, cur.emitted()};
            if (!g.contains(first))
                break;
            std::optional<Value> v;
            if (st.kind == ThreadCursorStatus::Kind::NeedsValue)
                v = g.label(first).result;
            auto evs = cur.step(v);
            for (int k = 0; k < static_cast<int>(evs.size()); ++k)
                lead[EventId{t, first.index + k}] = first;
        }
        const auto& forks = cur.forks();
        for (std::size_t k = 0; k < forks.size(); ++k)
            work.emplace_back(cur.child_id(k), forks[k].second);
    }
    return lead;
}

inline Configuration replay_from(const Opsem& sem, Configuration c, const ExecutionGraph& g,
                                 const std::vector<EventId>& order)
{
    auto labels_match = [&](const StepLabel& lab, ThreadId t, int from) {
        for (std::size_t k = 0; k < lab.events.size(); ++k) {
            EventId id{t, from + static_cast<int>(k)};
            if (!g.contains(id) || g.label(id) != lab.events[k].label)
                return false;
        }
        return true;
    };
    for (const EventId& e : order) {
        auto it = c.threads.find(e.thread);
        if (it == c.threads.end())
            throw ReplayStuck("thread of " + e.str() + " not started");
        int emitted = it->second.emitted;
        if (e.index < emitted)
            continue;
        if (e.index > emitted)
            throw ReplayStuck("event " + e.str() + " replayed before its po-predecessors");
        bool done = false;
        // an NA write takes two steps: Start and then End, which emits the event
        for (int round = 0; round < 2 && !done; ++round) {
            auto succs = sem.head_step(c, e.thread);
            std::optional<std::pair<Configuration, StepLabel>> pick;
            for (auto& s : succs) {
                if (s.second.rule == Rule::AtomicOpStutter)
                    continue;
                if (s.second.events.empty() || labels_match(s.second, e.thread, emitted)) {
                    pick = std::move(s);
                    break;
                }
            }
            if (!pick)
                throw ReplayStuck("no opsem step matches event " + e.str());
            done = !pick->second.events.empty();
            c = std::move(pick->first);
        }
        if (!done)
            throw ReplayStuck("event " + e.str() + " not emitted");
        sem.normalize(c, e.thread);
    }
    return c;
}

/// Executes the opsem steps of the events in `order`; a step emitting several
/// events runs at its first event, and later events of it are checked only.
inline Configuration replay_prefix(const Program& p, const ExecutionGraph& g, const std::vector<EventId>& order,
                                   BeginMode begin = BeginMode::Permissive)
{
    Opsem sem(p, GraphGuidedOracle{&g}, begin);
    Configuration c = sem.initial();
    sem.normalize_all(c);
    return replay_from(sem, c, g, order);
}

/// The hb-downsets of `prefix` (closed under step grouping) all reach a
/// single configuration whichever hb-consistent order is taken. Returns the
/// number of downsets checked; throws ReplayStuck when some order gets stuck
/// and returns -1 when two orders disagree.
inline long check_replay_determinism(const Program& p, const ExecutionGraph& g, const std::set<EventId>& prefix)
{
    auto lead = step_leaders(p, g);
    std::vector<EventId> units;
    std::map<EventId, int> unit_of;
    for (auto& e : prefix) {
        auto it = lead.find(e);
        EventId l = it == lead.end() ? e : it->second;
        if (!unit_of.count(l)) {
            unit_of[l] = static_cast<int>(units.size());
            units.push_back(l);
        }
        unit_of[e] = unit_of[l];
    }
    int n = static_cast<int>(units.size());
    if (n > 63)
        throw BoundExceeded("prefix has more than 63 steps");
    EventIndex ix(g);
    BitRel hb = ix.dense(derive_hb(g));
    std::vector<std::uint64_t> pred(n, 0);
    for (auto& a : prefix)
        for (auto& b : prefix)
            if (hb.test(ix[a], ix[b]) && unit_of[a] != unit_of[b])
                pred[unit_of[b]] |= std::uint64_t{1} << unit_of[a];
    Opsem sem(p, GraphGuidedOracle{&g});
    Configuration c0 = sem.initial();
    sem.normalize_all(c0);
    std::map<std::uint64_t, Configuration> layer{{0, c0}};
    long checked = 0;
    while (!layer.empty()) {
        std::map<std::uint64_t, Configuration> next;
        for (auto& [d, c] : layer) {
            ++checked;
            for (int a = 0; a < n; ++a) {
                std::uint64_t b = std::uint64_t{1} << a;
                if ((d & b) || (pred[a] & ~d))
                    continue;
                Configuration c2 = replay_from(sem, c, g, {units[a]});
                auto it = next.find(d | b);
                if (it == next.end())
                    next.emplace(d | b, std::move(c2));
                else if (!it->second.same_state(c2))
                    return -1;
            }
        }
        layer = std::move(next);
    }
    return checked;
}

/// hb-consistent order of `events` (EventId order breaks ties).
inline std::vector<EventId> hb_order(const ExecutionGraph& g, const std::set<EventId>& events)
{
    EventIndex ix(g);
    BitRel hb = ix.dense(derive_hb(g));
    std::vector<EventId> out;
    std::set<EventId> left = events;
    while (!left.empty()) {
        bool moved = false;
        for (auto it = left.begin(); it != left.end(); ++it) {
            bool minimal = true;
            for (auto& o : left)
                if (o != *it && hb.test(ix[o], ix[*it])) {
                    minimal = false;
                    break;
                }
            if (minimal) {
                out.push_back(*it);
                left.erase(it);
                moved = true;
                break;
            }
        }
        if (!moved)
            throw Error("hb is cyclic");
    }
    return out;
}

/// P ~ gamma: thread pool, race freedom, nonatomic heap and atomic heap all
/// agree with the prefix `P` of g.
inline bool config_corresponds(const Program& p, const ExecutionGraph& g, const std::set<EventId>& P,
                               const Configuration& c)
{
    ExecutionGraph sub = restrict(g, P);
    if (!find_data_races(sub).races.empty())
        return false;
    // thread pool
    std::map<ThreadId, Cmd> expect;
    std::vector<std::pair<ThreadId, Cmd>> work;
    for (std::size_t i = 0; i < p.threads.size(); ++i)
        work.emplace_back(static_cast<ThreadId>(i + 1), p.threads[i]);
    while (!work.empty()) {
        auto [t, cmd] = work.back();
        work.pop_back();
        ThreadCursor cur(t, cmd);
        for (;;) {
            auto st = cur.status();
            EventId next{t, cur.emitted()};
            if (st.kind == ThreadCursorStatus::Kind::Done || !P.count(next))
                break;
            std::optional<Value> v;
            if (st.kind == ThreadCursorStatus::Kind::NeedsValue)
                v = g.label(next).result;
            cur.step(v);
        }
        cur.status();
        expect[t] = cur.command();
        const auto& forks = cur.forks();
        for (std::size_t k = 0; k < forks.size(); ++k)
            work.emplace_back(cur.child_id(k), forks[k].second);
    }
    if (expect.size() != c.threads.size())
        return false;
    for (auto& [t, cmd] : expect) {
        auto it = c.threads.find(t);
        if (it == c.threads.end() || !equal(cmd, it->second.cmd))
            return false;
    }
    // heaps
    std::map<Loc, CellState> heap;
    std::map<Loc, AtomicCell> atomic;
    std::map<Loc, std::vector<EventId>> writes;
    for (auto& e : P)
        if (is_writelike(g.label(e).op.kind))
            writes[g.label(e).location].push_back(e);
    EventIndex ix(g);
    BitRel hb = ix.dense(derive_hb(g));
    for (auto& [l, ws] : writes) {
        // the mo-last write of the prefix decides the mode
        EventId last = ws.front();
        for (auto& w : ws)
            if (g.mo.count({last, w}))
                last = w;
        auto tag = g.tags.find(last);
        const Label& ll = g.label(last);
        if (tag != g.tags.end() && tag->second.kind == PseudoKind::Free) {
            heap[l] = CellState::reserved();
            continue;
        }
        if (!is_nonatomic(ll.op.kind) || (tag != g.tags.end() && tag->second.kind == PseudoKind::BeginAtomic)) {
            // atomic mode: find the begin_atomic write opening the era
            std::optional<EventId> begin;
            for (auto& w : ws) {
                auto tw = g.tags.find(w);
                if (tw != g.tags.end() && tw->second.kind == PseudoKind::BeginAtomic &&
                    (!begin || g.mo.count({*begin, w})))
                    begin = w;
            }
            if (!begin)
                return false;
            const std::string& name = g.tags.at(*begin).spec;
            const AtomicSpec& s = p.spec(name);
            std::vector<TracedOp> ops;
            for (auto& e : P) {
                const Label& le = g.label(e);
                if (le.location == l && !is_nonatomic(le.op.kind) && hb.test(ix[*begin], ix[e]))
                    ops.push_back({le.thread, le.op, le.result});
            }
            auto w = net_resource(s, ops);
            if (!w)
                return false;
            heap[l] = CellState::reserved();
            atomic[l] = AtomicCell{name, *w};
            continue;
        }
        bool initial = (tag != g.tags.end() && tag->second.kind == PseudoKind::Alloc) || last.is_init();
        heap[l] = CellState::of(ll.written(), initial);
    }
    return heap == c.heap && atomic == c.atomic;
}

} // namespace rmmlab

#endif
