// Execute / Re-Execute construction steps, bounded YC20 and XC20
// constructibility search, and groundedness of executions.
#ifndef RMMLAB_XMM_HPP_
#define RMMLAB_XMM_HPP_

#include <algorithm>
#include <bit>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmmlab/enumerate.hpp"
#include "rmmlab/graph_io.hpp"
#include "rmmlab/relations.hpp"
#include "rmmlab/tied.hpp"

namespace rmmlab {

/// YC20 works on high-level graphs and never splits an RMW; XC20 works on
/// low-level graphs.
enum class Model : std::uint8_t { YC20, XC20 };

struct ReExecutePlan {
    std::set<EventId> committed;
    std::set<EventId> determined;
    std::vector<EventId> addition_order;
};

inline bool po_related(const ExecutionGraph& g, const EventId& a, const EventId& b) { return g.po.count({a, b}) != 0; }

// ---------------------------------------------------------------------------
// Execute

inline bool validate_execute_step(const ExecutionGraph& g, const ExecutionGraph& g2)
{
    if (g2.size() != g.size() + 1)
        return false;
    std::optional<EventId> added;
    for (auto& [e, _] : g2.lab)
        if (!g.contains(e))
            added = e;
    if (!added)
        return false;
    for (auto& [e, _] : g.lab)
        if (!g2.contains(e))
            return false;
    if (!is_consistent(g) || !is_consistent(g2))
        return false;
    if (!(restrict(g2, event_set(g)) == g))
        return false;
    for (auto& [a, b] : g2.po)
        if (a == *added)
            return false;
    for (auto& [a, b] : g2.rf)
        if (a == *added)
            return false;
    return true;
}

// ---------------------------------------------------------------------------
// Guided steps

/// An order adding the events of target missing from start, each po-maximal
/// when added and either not a read, reading from an event already present,
/// or committed. Greedy is complete: every condition is monotone.
inline std::optional<std::vector<EventId>> guided_steps_reachable(const ExecutionGraph& start,
                                                                  const ExecutionGraph& target,
                                                                  const std::set<EventId>& committed)
{
    for (auto& [e, _] : start.lab)
        if (!target.contains(e))
            return std::nullopt;
    if (!(restrict(target, event_set(start)) == start))
        return std::nullopt;
    std::set<EventId> present = event_set(start);
    for (auto& [a, b] : target.po)
        if (!present.count(a) && present.count(b))
            return std::nullopt;
    std::map<EventId, EventId> src;
    for (auto& [w, r] : target.rf)
        src[r] = w;
    std::map<EventId, std::vector<EventId>> preds;
    for (auto& [a, b] : target.po)
        preds[b].push_back(a);
    std::vector<EventId> order;
    std::size_t missing = target.size() - present.size();
    while (order.size() < missing) {
        bool progress = false;
        for (auto& [e, l] : target.lab) {
            if (present.count(e))
                continue;
            bool ok = true;
            for (auto& p : preds[e])
                if (!present.count(p)) {
                    ok = false;
                    break;
                }
            if (ok && is_readlike(l.op.kind) && !committed.count(e)) {
                auto s = src.find(e);
                ok = s != src.end() && present.count(s->second);
            }
            if (!ok)
                continue;
            present.insert(e);
            order.push_back(e);
            progress = true;
            break;
        }
        if (!progress)
            return std::nullopt;
    }
    return order;
}

// ---------------------------------------------------------------------------
// Re-Execute

/// Immediate po-successors of e in g.
inline std::set<EventId> immediate_po_successors(const ExecutionGraph& g, const EventId& e)
{
    std::set<EventId> succ;
    for (auto& [a, b] : g.po)
        if (a == e)
            succ.insert(b);
    std::set<EventId> imm;
    for (auto& s : succ) {
        bool direct = true;
        for (auto& z : succ)
            if (z != s && g.po.count({z, s})) {
                direct = false;
                break;
            }
        if (direct)
            imm.insert(s);
    }
    return imm;
}

/// The largest D inside C that is po-prefix-closed in g and po-maximal in C.
inline std::set<EventId> maximal_determined(const ExecutionGraph& g, const std::set<EventId>& committed)
{
    std::set<EventId> d = committed;
    std::map<EventId, std::set<EventId>> imm;
    for (auto& e : committed)
        imm[e] = immediate_po_successors(g, e);
    for (bool changed = true; changed;) {
        changed = false;
        for (auto it = d.begin(); it != d.end();) {
            bool drop = false;
            for (auto& [a, b] : g.po)
                if (b == *it && !d.count(a)) {
                    drop = true;
                    break;
                }
            if (!drop)
                for (auto& s : imm[*it])
                    if (committed.count(s) && !d.count(s)) {
                        drop = true;
                        break;
                    }
            if (drop) {
                it = d.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }
    return d;
}

/// True iff C contains exactly one half of some rmw pair of g.
inline bool splits_rmw(const ExecutionGraph& g, const std::set<EventId>& c)
{
    for (auto& [r, w] : g.rmw)
        if (c.count(r) != c.count(w))
            return true;
    return false;
}

/// Committed, non-determined release events of a plan (must be empty for a
/// valid step).
inline std::vector<EventId> committed_release_violations(const ExecutionGraph& g2, const ReExecutePlan& plan)
{
    std::vector<EventId> out;
    for (auto& e : plan.committed)
        if (!plan.determined.count(e) && g2.contains(e) && is_release_event(g2.label(e)))
            out.push_back(e);
    return out;
}

inline bool validate_re_execute_step(const ExecutionGraph& g, const ExecutionGraph& g2, const ReExecutePlan& plan,
                                     Model model = Model::YC20)
{
    const auto& c = plan.committed;
    const auto& d = plan.determined;
    if (!is_consistent(g) || !is_consistent(g2))
        return false;
    for (auto& e : c)
        if (!g.contains(e) || !g2.contains(e))
            return false;
    if (!(restrict(g, c) == restrict(g2, c)))
        return false;
    for (auto& e : c)
        if (is_readlike(g.label(e).op.kind)) {
            auto s = g.rf_source(e);
            if (!s || !c.count(*s))
                return false;
        }
    if (model == Model::YC20 && (splits_rmw(g, c) || splits_rmw(g2, c)))
        return false;
    for (auto& e : d)
        if (!c.count(e))
            return false;
    for (auto& [a, b] : g.po)
        if (d.count(b) && !d.count(a))
            return false;
    for (auto& e : d)
        for (auto& s : immediate_po_successors(g, e))
            if (c.count(s) && !d.count(s))
                return false;
    for (auto& [a, b] : derive_rpo(g2))
        if (c.count(b) && !d.count(b) && !d.count(a))
            return false;
    ExecutionGraph start = restrict(g, d);
    if (plan.addition_order.empty() && start.size() != g2.size()) {
        return guided_steps_reachable(start, g2, c).has_value();
    }
    // replay the given order
    std::set<EventId> present = event_set(start);
    for (auto& [a, b] : g2.po)
        if (!present.count(a) && present.count(b))
            return false;
    for (auto& e : plan.addition_order) {
        if (!g2.contains(e) || present.count(e))
            return false;
        for (auto& [a, b] : g2.po)
            if (b == e && !present.count(a))
                return false;
        if (is_readlike(g2.label(e).op.kind) && !c.count(e)) {
            auto s = g2.rf_source(e);
            if (!s || !present.count(*s))
                return false;
        }
        present.insert(e);
    }
    return present.size() == g2.size();
}

namespace detail {

/// Bit-level plan search between two graphs.
class PlanFinder {
public:
    PlanFinder(const ExecutionGraph& g, const ExecutionGraph& g2, Model model) : g_(g), g2_(g2), ix_(g), ix2_(g2)
    {
        for (auto& [e, l] : g2.lab) {
            auto it = g.lab.find(e);
            if (it == g.lab.end() || it->second != l)
                continue;
            auto t1 = g.tags.find(e), t2 = g2.tags.find(e);
            if ((t1 == g.tags.end()) != (t2 == g2.tags.end()) ||
                (t1 != g.tags.end() && t1->second != t2->second))
                continue;
            common_.push_back(e);
        }
        m_ = static_cast<int>(common_.size());
        if (m_ > 24)
            throw BoundExceeded("too many common events for plan search");
        std::map<EventId, int> cix;
        for (int i = 0; i < m_; ++i)
            cix[common_[i]] = i;
        BitRel po1 = ix_.dense(g.po), rf1 = ix_.dense(g.rf), mo1 = ix_.dense(g.mo), rmw1 = ix_.dense(g.rmw);
        BitRel po2 = ix2_.dense(g2.po), rf2 = ix2_.dense(g2.rf), mo2 = ix2_.dense(g2.mo), rmw2 = ix2_.dense(g2.rmw);
        conflict_.assign(m_, 0);
        need_.assign(m_, 0);
        pair_.assign(m_, 0);
        forbidden_.assign(m_, 0);
        for (int a = 0; a < m_; ++a) {
            int a1 = ix_[common_[a]], a2 = ix2_[common_[a]];
            for (int b = 0; b < m_; ++b) {
                int b1 = ix_[common_[b]], b2 = ix2_[common_[b]];
                if (po1.test(a1, b1) != po2.test(a2, b2) || rf1.test(a1, b1) != rf2.test(a2, b2) ||
                    mo1.test(a1, b1) != mo2.test(a2, b2) || rmw1.test(a1, b1) != rmw2.test(a2, b2))
                    conflict_[a] |= bit(b);
                if (rmw1.test(a1, b1) || rmw1.test(b1, a1) || rmw2.test(a2, b2) || rmw2.test(b2, a2))
                    pair_[a] |= bit(b);
            }
            if (is_readlike(g.lab.at(common_[a]).op.kind)) {
                auto s = g.rf_source(common_[a]);
                if (!s || !cix.count(*s))
                    forbidden_[a] = 1;
                else
                    need_[a] = bit(cix.at(*s));
            }
            // a half whose partner is not common can never be committed in YC20
            if (model == Model::YC20)
                for (auto* gr : {&g, &g2})
                    for (auto& [r, w] : gr->rmw) {
                        const EventId& e = common_[a];
                        if ((r == e && !cix.count(w)) || (w == e && !cix.count(r)))
                            forbidden_[a] = 1;
                    }
        }
        model_ = model;
        // po predecessors in g, and immediate successors, over common indices
        preds_g_.assign(m_, 0);
        pred_outside_g_.assign(m_, 0);
        imm_g_.assign(m_, 0);
        for (int a = 0; a < m_; ++a) {
            int a1 = ix_[common_[a]];
            for (int x = 0; x < ix_.size(); ++x)
                if (po1.test(x, a1)) {
                    auto it = cix.find(ix_.ids[x]);
                    if (it == cix.end())
                        pred_outside_g_[a] = 1;
                    else
                        preds_g_[a] |= bit(it->second);
                }
            for (auto& s : immediate_po_successors(g, common_[a])) {
                auto it = cix.find(s);
                if (it != cix.end())
                    imm_g_[a] |= bit(it->second);
            }
        }
        // rpo of g2 restricted to targets that are common
        Relation rpo = derive_rpo(g2);
        rpo_preds_.assign(m_, 0);
        rpo_pred_outside_.assign(m_, 0);
        for (auto& [x, y] : rpo) {
            auto yi = cix.find(y);
            if (yi == cix.end())
                continue;
            auto xi = cix.find(x);
            if (xi == cix.end())
                rpo_pred_outside_[yi->second] = 1;
            else
                rpo_preds_[yi->second] |= bit(xi->second);
        }
        // g2 structure for the guided phase
        n2_ = ix2_.size();
        preds2_.assign(n2_, {});
        src2_.assign(n2_, -1);
        for (int x = 0; x < n2_; ++x)
            for (int y = 0; y < n2_; ++y)
                if (po2.test(y, x))
                    preds2_[x].push_back(y);
        for (auto& [w, r] : g2.rf)
            src2_[ix2_[r]] = ix2_[w];
        common2_.assign(m_, 0);
        for (int a = 0; a < m_; ++a)
            common2_[a] = ix2_[common_[a]];
    }

    std::optional<ReExecutePlan> find()
    {
        if (!is_consistent(g_) || !is_consistent(g2_))
            return std::nullopt;
        std::vector<std::uint32_t> masks;
        std::uint32_t full = m_ == 32 ? ~0u : ((1u << m_) - 1);
        for (std::uint64_t mask = 0; mask <= full; ++mask)
            masks.push_back(static_cast<std::uint32_t>(mask));
        std::stable_sort(masks.begin(), masks.end(),
                         [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) > std::popcount(b); });
        for (std::uint32_t c : masks) {
            if (!valid_committed(c))
                continue;
            std::uint32_t d = determined(c);
            if (!rpo_ok(c, d))
                continue;
            auto order = guided(c, d);
            if (!order)
                continue;
            ReExecutePlan plan;
            for (int a = 0; a < m_; ++a) {
                if (c & bit(a))
                    plan.committed.insert(common_[a]);
                if (d & bit(a))
                    plan.determined.insert(common_[a]);
            }
            plan.addition_order = *order;
            return plan;
        }
        return std::nullopt;
    }

private:
    static std::uint32_t bit(int i) { return 1u << i; }

    bool valid_committed(std::uint32_t c) const
    {
        for (int a = 0; a < m_; ++a) {
            if (!(c & bit(a)))
                continue;
            if (forbidden_[a] || (conflict_[a] & c) || (need_[a] & ~c))
                return false;
            if (model_ == Model::YC20 && (pair_[a] & ~c))
                return false;
        }
        return true;
    }

    std::uint32_t determined(std::uint32_t c) const
    {
        std::uint32_t d = c;
        for (bool changed = true; changed;) {
            changed = false;
            for (int a = 0; a < m_; ++a) {
                if (!(d & bit(a)))
                    continue;
                if (pred_outside_g_[a] || (preds_g_[a] & ~d) || (imm_g_[a] & c & ~d)) {
                    d &= ~bit(a);
                    changed = true;
                }
            }
        }
        return d;
    }

    bool rpo_ok(std::uint32_t c, std::uint32_t d) const
    {
        for (int a = 0; a < m_; ++a)
            if ((c & bit(a)) && !(d & bit(a)) && (rpo_pred_outside_[a] || (rpo_preds_[a] & ~d)))
                return false;
        return true;
    }

    std::optional<std::vector<EventId>> guided(std::uint32_t c, std::uint32_t d) const
    {
        std::vector<char> present(n2_, 0), committed(n2_, 0);
        for (int a = 0; a < m_; ++a) {
            if (d & bit(a))
                present[common2_[a]] = 1;
            if (c & bit(a))
                committed[common2_[a]] = 1;
        }
        for (int x = 0; x < n2_; ++x)
            if (present[x])
                for (int p : preds2_[x])
                    if (!present[p])
                        return std::nullopt;
        std::vector<EventId> order;
        int missing = n2_ - static_cast<int>(std::count(present.begin(), present.end(), 1));
        while (static_cast<int>(order.size()) < missing) {
            int pick = -1;
            for (int x = 0; x < n2_ && pick < 0; ++x) {
                if (present[x])
                    continue;
                bool ok = true;
                for (int p : preds2_[x])
                    if (!present[p]) {
                        ok = false;
                        break;
                    }
                if (ok && is_readlike(g2_.lab.at(ix2_.ids[x]).op.kind) && !committed[x])
                    ok = src2_[x] >= 0 && present[src2_[x]];
                if (ok)
                    pick = x;
            }
            if (pick < 0)
                return std::nullopt;
            present[pick] = 1;
            order.push_back(ix2_.ids[pick]);
        }
        return order;
    }

    const ExecutionGraph& g_;
    const ExecutionGraph& g2_;
    EventIndex ix_, ix2_;
    Model model_ = Model::YC20;
    std::vector<EventId> common_;
    int m_ = 0;
    std::vector<std::uint32_t> conflict_, need_, pair_, preds_g_, imm_g_, rpo_preds_;
    std::vector<char> forbidden_, pred_outside_g_, rpo_pred_outside_;
    int n2_ = 0;
    std::vector<std::vector<int>> preds2_;
    std::vector<int> src2_, common2_;
};

} // namespace detail

/// A Re-Execute plan from g to g2, trying committed sets largest first.
inline std::optional<ReExecutePlan> find_re_execute_plan(const ExecutionGraph& g, const ExecutionGraph& g2,
                                                         Model model = Model::YC20)
{
    return detail::PlanFinder(g, g2, model).find();
}

// ---------------------------------------------------------------------------
// Construction traces and bounded search

struct ConstructionStep {
    enum class Kind : std::uint8_t { Execute, ReExecute };
    Kind kind = Kind::Execute;
    EventId added;        // Execute
    ReExecutePlan plan;   // ReExecute
    ExecutionGraph graph; // graph after the step
};

struct ConstructionTrace {
    std::vector<ConstructionStep> steps;

    int re_executions() const
    {
        return static_cast<int>(std::count_if(steps.begin(), steps.end(), [](const ConstructionStep& s) {
            return s.kind == ConstructionStep::Kind::ReExecute;
        }));
    }
};

inline std::vector<std::string> id_list(const std::set<EventId>& s)
{
    std::vector<std::string> v;
    for (auto& e : s)
        v.push_back(e.str());
    return v;
}

inline nlohmann::json to_json(const ConstructionTrace& t)
{
    nlohmann::json steps = nlohmann::json::array();
    for (auto& s : t.steps) {
        nlohmann::json j;
        if (s.kind == ConstructionStep::Kind::Execute) {
            j["step"] = "execute";
            j["event"] = s.added.str();
        } else {
            j["step"] = "re-execute";
            j["committed"] = id_list(s.plan.committed);
            j["determined"] = id_list(s.plan.determined);
            std::vector<std::string> order;
            for (auto& e : s.plan.addition_order)
                order.push_back(e.str());
            j["addition_order"] = order;
        }
        j["graph"] = to_json(s.graph);
        steps.push_back(j);
    }
    return {{"format", "rmmlab-trace"}, {"version", 1}, {"steps", steps}};
}

/// Replays a trace from the empty graph.
inline bool validate_trace(const ConstructionTrace& t, Model model = Model::YC20)
{
    ExecutionGraph cur;
    for (auto& s : t.steps) {
        bool ok = s.kind == ConstructionStep::Kind::Execute ? validate_execute_step(cur, s.graph)
                                                            : validate_re_execute_step(cur, s.graph, s.plan, model);
        if (!ok)
            return false;
        cur = s.graph;
    }
    return true;
}

struct Reachability {
    bool constructible = false;
    ConstructionTrace trace;
    std::size_t universe = 0; // candidate graphs considered
    int layers = 0;           // Re-Execute layers explored
    std::vector<ReExecutePlan> plans; // every plan accepted during the search
};

namespace detail {

inline std::string graph_key(const ExecutionGraph& g) { return print_graph(g); }

/// Low-level forms of prefix executions, including the ones that stop
/// between the two halves of an RMW.
inline std::vector<ExecutionGraph> low_level_universe(const std::vector<ExecutionGraph>& high, std::size_t cap)
{
    std::map<std::string, ExecutionGraph> out;
    for (auto& g : high) {
        ExecutionGraph low = to_low_level(g);
        if (low.size() <= cap)
            out.emplace(graph_key(low), low);
        for (auto& [r, w] : low.rmw) {
            bool maximal = true;
            for (auto& [a, b] : low.po)
                if (a == w)
                    maximal = false;
            for (auto& [a, b] : low.rf)
                if (a == w)
                    maximal = false;
            if (!maximal)
                continue;
            std::set<EventId> keep = event_set(low);
            keep.erase(w);
            ExecutionGraph lone = restrict(low, keep);
            if (lone.size() <= cap && is_consistent(lone))
                out.emplace(graph_key(lone), lone);
        }
    }
    std::vector<ExecutionGraph> v;
    for (auto& [_, g] : out)
        v.push_back(std::move(g));
    return v;
}

inline Reachability search(std::vector<ExecutionGraph> universe, const ExecutionGraph& target, int max_re_exec,
                           Model model)
{
    Reachability res;
    std::stable_sort(universe.begin(), universe.end(),
                     [](const ExecutionGraph& a, const ExecutionGraph& b) { return a.size() < b.size(); });
    res.universe = universe.size();
    std::map<std::string, int> index;
    for (int i = 0; i < static_cast<int>(universe.size()); ++i)
        index.emplace(graph_key(universe[i]), i);
    auto tk = index.find(graph_key(target));
    if (tk == index.end())
        return res;
    int goal = tk->second;

    struct Origin {
        int parent = -1;
        ConstructionStep::Kind kind = ConstructionStep::Kind::Execute;
        EventId added;
        ReExecutePlan plan;
        int layer = 0;
    };
    std::map<int, Origin> reached;

    // the graph holding only the init writes
    int root = -1;
    for (int i = 0; i < static_cast<int>(universe.size()) && root < 0; ++i) {
        bool only_init = true;
        for (auto& [e, _] : universe[i].lab)
            if (!e.is_init())
                only_init = false;
        if (only_init)
            root = i;
    }
    if (root < 0)
        return res;
    reached[root] = Origin{};

    auto execute_closure = [&](int layer) {
        for (int i = 0; i < static_cast<int>(universe.size()); ++i) {
            if (reached.count(i))
                continue;
            const ExecutionGraph& g = universe[i];
            for (auto& e : porf_maximal(g)) {
                std::set<EventId> keep = event_set(g);
                keep.erase(e);
                auto it = index.find(graph_key(restrict(g, keep)));
                if (it == index.end() || !reached.count(it->second))
                    continue;
                Origin o;
                o.parent = it->second;
                o.added = e;
                o.layer = layer;
                reached[i] = o;
                break;
            }
        }
    };

    execute_closure(0);
    std::set<int> expanded;
    for (int layer = 1; layer <= max_re_exec && !reached.count(goal); ++layer) {
        res.layers = layer;
        std::vector<std::pair<int, Origin>> found;
        for (auto& [i, _] : reached) {
            if (expanded.count(i))
                continue;
            for (int j = 0; j < static_cast<int>(universe.size()); ++j) {
                if (reached.count(j) || j == i)
                    continue;
                auto plan = find_re_execute_plan(universe[i], universe[j], model);
                if (!plan)
                    continue;
                res.plans.push_back(*plan);
                bool dup = false;
                for (auto& [k, _o] : found)
                    if (k == j)
                        dup = true;
                if (dup)
                    continue;
                Origin o;
                o.parent = i;
                o.kind = ConstructionStep::Kind::ReExecute;
                o.plan = *plan;
                o.layer = layer;
                found.emplace_back(j, o);
            }
        }
        for (auto& [i, _] : reached)
            expanded.insert(i);
        for (auto& [j, o] : found)
            reached.emplace(j, o);
        execute_closure(layer);
    }
    if (!reached.count(goal))
        return res;

    // rebuild the trace
    std::vector<int> chain;
    for (int i = goal; i >= 0; i = reached.at(i).parent)
        chain.push_back(i);
    std::reverse(chain.begin(), chain.end());
    ExecutionGraph cur;
    for (auto& [e, _] : universe[root].lab) {
        ConstructionStep s;
        s.added = e;
        std::set<EventId> keep = event_set(cur);
        keep.insert(e);
        s.graph = restrict(universe[root], keep);
        cur = s.graph;
        res.trace.steps.push_back(s);
    }
    for (std::size_t k = 1; k < chain.size(); ++k) {
        const Origin& o = reached.at(chain[k]);
        ConstructionStep s;
        s.kind = o.kind;
        s.added = o.added;
        s.plan = o.plan;
        s.graph = universe[chain[k]];
        res.trace.steps.push_back(s);
    }
    res.constructible = true;
    return res;
}

inline std::vector<ExecutionGraph> prefix_universe(const Program& p, std::size_t target_size, const Bounds& b)
{
    EnumerateOptions opt;
    opt.prefixes = true;
    opt.prefix_cap = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(b.max_events), target_size + 2));
    std::vector<ExecutionGraph> u;
    for (auto& e : enumerate_executions(p, b, opt))
        u.push_back(std::move(e.graph));
    return u;
}

} // namespace detail

/// Bounded YC20 search: Execute steps and at most max_re_exec Re-Execute
/// steps over consistent prefix executions of p. Not constructible means
/// not found within these bounds.
inline Reachability ymm_reachable(const Program& p, const ExecutionGraph& target, const Bounds& b = {},
                                  int max_re_exec = 2)
{
    if (!target.is_high_level())
        throw NotHighLevel();
    return detail::search(detail::prefix_universe(p, target.size(), b), target, max_re_exec, Model::YC20);
}

/// Same over low-level graphs, where a committed set may split an RMW.
inline Reachability xmm_reachable(const Program& p, const ExecutionGraph& target, const Bounds& b = {},
                                  int max_re_exec = 2)
{
    ExecutionGraph low = target.has_rmw_events() ? to_low_level(target) : target;
    std::size_t cap = std::min<std::size_t>(static_cast<std::size_t>(b.max_events), low.size() + 2);
    Bounds hb = b;
    hb.max_events = std::max(b.max_events, static_cast<int>(cap));
    auto high = detail::prefix_universe(p, low.size(), hb);
    return detail::search(detail::low_level_universe(high, cap), low, max_re_exec, Model::XC20);
}

// ---------------------------------------------------------------------------
// Groundedness

enum class GroundingStatus : std::uint8_t { Grounded, NoBeginAtomic, AmbiguousBeginAtomic, UnknownSpec, NotEnabled };

inline const char* to_string(GroundingStatus s)
{
    switch (s) {
    case GroundingStatus::Grounded: return "Grounded";
    case GroundingStatus::NoBeginAtomic: return "NoBeginAtomic";
    case GroundingStatus::AmbiguousBeginAtomic: return "AmbiguousBeginAtomic";
    case GroundingStatus::UnknownSpec: return "UnknownSpec";
    case GroundingStatus::NotEnabled: return "NotEnabled";
    }
    return "?";
}

struct GroundingReport {
    std::map<EventId, GroundingStatus> events; // atomic events only
    bool grounded() const
    {
        return std::all_of(events.begin(), events.end(),
                           [](auto& p) { return p.second == GroundingStatus::Grounded; });
    }
};

/// Atomic events: non-nonatomic accesses and fences.
inline bool is_atomic_event(const Label& l) { return !is_nonatomic(l.op.kind); }

namespace detail {

inline std::vector<EventId> begin_events(const ExecutionGraph& g, Loc loc)
{
    std::vector<EventId> v;
    for (auto& [e, t] : g.tags)
        if (t.kind == PseudoKind::BeginAtomic && g.label(e).location == loc)
            v.push_back(e);
    return v;
}

/// e and its atomic rf+ predecessors are enabled under spec.
inline bool grounded_wrt(const ExecutionGraph& g, const EventId& e, const AtomicSpec& spec)
{
    std::set<EventId> seen;
    std::optional<EventId> cur = e;
    while (cur && seen.insert(*cur).second) {
        const Label& l = g.label(*cur);
        if (!is_atomic_event(l))
            break;
        if (!spec.enabled(l.op, l.result))
            return false;
        cur = is_readlike(l.op.kind) ? g.rf_source(*cur) : std::nullopt;
    }
    return true;
}

} // namespace detail

inline GroundingReport check_grounded(const ExecutionGraph& g, const SpecTable& specs)
{
    GroundingReport rep;
    Relation hb = derive_hb(g);
    for (auto& [e, l] : g.lab) {
        if (!is_atomic_event(l))
            continue;
        std::vector<EventId> before;
        for (auto& b : detail::begin_events(g, l.location))
            if (hb.count({b, e}))
                before.push_back(b);
        std::vector<EventId> maximal;
        for (auto& b : before) {
            bool dominated = false;
            for (auto& c : before)
                if (c != b && hb.count({b, c}))
                    dominated = true;
            if (!dominated)
                maximal.push_back(b);
        }
        GroundingStatus s;
        if (maximal.empty()) {
            s = GroundingStatus::NoBeginAtomic;
        } else if (maximal.size() > 1) {
            s = GroundingStatus::AmbiguousBeginAtomic;
        } else {
            auto it = specs.find(g.tags.at(maximal[0]).spec);
            if (it == specs.end())
                s = GroundingStatus::UnknownSpec;
            else
                s = detail::grounded_wrt(g, e, it->second) ? GroundingStatus::Grounded : GroundingStatus::NotEnabled;
        }
        rep.events[e] = s;
    }
    return rep;
}

struct WeakGroundingReport {
    bool order_ok = false; // total over the events and consistent with hb
    std::map<EventId, bool> events;
    bool weakly_grounded() const
    {
        return order_ok && std::all_of(events.begin(), events.end(), [](auto& p) { return p.second; });
    }
};

inline WeakGroundingReport check_weakly_grounded(const ExecutionGraph& g, const std::vector<EventId>& order,
                                                 const SpecTable& specs)
{
    WeakGroundingReport rep;
    std::map<EventId, int> pos;
    for (int i = 0; i < static_cast<int>(order.size()); ++i)
        pos[order[i]] = i;
    rep.order_ok = pos.size() == g.size() && order.size() == g.size();
    for (auto& e : order)
        if (!g.contains(e))
            rep.order_ok = false;
    if (!rep.order_ok)
        return rep;
    for (auto& [a, b] : derive_hb(g))
        if (pos.at(a) >= pos.at(b))
            rep.order_ok = false;
    if (!rep.order_ok)
        return rep;

    // rf+ predecessors of every event
    std::map<EventId, std::set<EventId>> rfplus;
    for (auto& [e, _] : g.lab) {
        std::set<EventId> acc;
        std::vector<EventId> work{e};
        while (!work.empty()) {
            EventId x = work.back();
            work.pop_back();
            if (auto s = g.rf_source(x); s && acc.insert(*s).second)
                work.push_back(*s);
        }
        rfplus[e] = std::move(acc);
    }
    std::map<EventId, bool> wg;
    for (int i = 0; i < static_cast<int>(order.size()); ++i) {
        const EventId& e = order[i];
        const Label& l = g.label(e);
        if (!is_atomic_event(l))
            continue;
        bool ok = false;
        // branch 1: the most recent preceding begin_atomic on the location
        for (int j = i - 1; j >= 0; --j) {
            auto t = g.tags.find(order[j]);
            if (t == g.tags.end() || t->second.kind != PseudoKind::BeginAtomic ||
                g.label(order[j]).location != l.location)
                continue;
            auto sp = specs.find(t->second.spec);
            ok = sp != specs.end() && detail::grounded_wrt(g, e, sp->second);
            break;
        }
        // branch 2
        if (!ok) {
            bool rel_ok = true;
            for (int j = 0; j <= i && rel_ok; ++j)
                for (auto& p : rfplus.at(order[j]))
                    if (is_release_event(g.label(p)) && pos.at(p) >= i) {
                        rel_ok = false;
                        break;
                    }
            bool src_ok = is_write(l.op.kind) || is_fence(l.op.kind);
            if (!src_ok) {
                auto s = g.rf_source(e);
                if (s && pos.at(*s) < i) {
                    const Label& ls = g.label(*s);
                    src_ok = !is_atomic_event(ls) || wg[*s];
                }
            }
            ok = rel_ok && src_ok;
        }
        wg[e] = ok;
        rep.events[e] = ok;
    }
    return rep;
}

} // namespace rmmlab

#endif
