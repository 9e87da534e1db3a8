// Cancellative commutative monoids, tied resources and atomic specifications.
#ifndef RMMLAB_TIED_HPP_
#define RMMLAB_TIED_HPP_

#include <concepts>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rmmlab/core.hpp"
#include "rmmlab/graph.hpp"

namespace rmmlab {

template <class M>
concept CancellativeMonoid = requires(const typename M::value_type& a, const typename M::value_type& b) {
    { M::unit() } -> std::convertible_to<typename M::value_type>;
    { M::compose(a, b) } -> std::convertible_to<typename M::value_type>;
    { M::subtract(a, b) } -> std::convertible_to<std::optional<typename M::value_type>>;
    { a == b } -> std::convertible_to<bool>;
};

/// (N, +, 0). Composition throws on overflow.
struct NatMonoid {
    using value_type = std::uint64_t;

    static value_type unit() { return 0; }
    static value_type compose(value_type a, value_type b)
    {
        value_type r;
        if (__builtin_add_overflow(a, b, &r))
            throw Error("natural resource overflow");
        return r;
    }
    /// c such that c + b = a
    static std::optional<value_type> subtract(value_type a, value_type b)
    {
        if (a < b)
            return std::nullopt;
        return a - b;
    }
    static std::string format(value_type a) { return std::to_string(a); }
};

template <CancellativeMonoid A, CancellativeMonoid B>
struct ProductMonoid {
    using value_type = std::pair<typename A::value_type, typename B::value_type>;

    static value_type unit() { return {A::unit(), B::unit()}; }
    static value_type compose(const value_type& x, const value_type& y)
    {
        return {A::compose(x.first, y.first), B::compose(x.second, y.second)};
    }
    static std::optional<value_type> subtract(const value_type& x, const value_type& y)
    {
        auto a = A::subtract(x.first, y.first);
        auto b = B::subtract(x.second, y.second);
        if (!a || !b)
            return std::nullopt;
        return value_type{*a, *b};
    }
};

/// Thread id -> element, pointwise. Unit entries are never stored.
template <CancellativeMonoid M>
struct ThreadBoundMonoid {
    using value_type = std::map<ThreadId, typename M::value_type>;

    static value_type unit() { return {}; }

    static typename M::value_type at(const value_type& m, ThreadId t)
    {
        auto it = m.find(t);
        return it == m.end() ? M::unit() : it->second;
    }
    static void put(value_type& m, ThreadId t, const typename M::value_type& v)
    {
        if (v == M::unit())
            m.erase(t);
        else
            m[t] = v;
    }
    static value_type single(ThreadId t, const typename M::value_type& v)
    {
        value_type m;
        put(m, t, v);
        return m;
    }
    static value_type compose(const value_type& x, const value_type& y)
    {
        value_type r = x;
        for (auto& [t, v] : y)
            put(r, t, M::compose(at(r, t), v));
        return r;
    }
    static std::optional<value_type> subtract(const value_type& x, const value_type& y)
    {
        value_type r = x;
        for (auto& [t, v] : y) {
            auto d = M::subtract(at(r, t), v);
            if (!d)
                return std::nullopt;
            put(r, t, *d);
        }
        return r;
    }
};

/// omega = (rho, Theta)
template <CancellativeMonoid MG, CancellativeMonoid ML>
struct TotalTiedMonoid {
    using Bound = ThreadBoundMonoid<ML>;
    struct value_type {
        typename MG::value_type global = MG::unit();
        typename Bound::value_type bound;

        auto operator<=>(const value_type&) const = default;
        bool operator==(const value_type&) const = default;
    };

    static value_type unit() { return {}; }
    static value_type compose(const value_type& x, const value_type& y)
    {
        return {MG::compose(x.global, y.global), Bound::compose(x.bound, y.bound)};
    }
    static std::optional<value_type> subtract(const value_type& x, const value_type& y)
    {
        auto g = MG::subtract(x.global, y.global);
        auto b = Bound::subtract(x.bound, y.bound);
        if (!g || !b)
            return std::nullopt;
        return value_type{*g, *b};
    }
    static value_type at_thread(const typename MG::value_type& g, ThreadId t, const typename ML::value_type& l)
    {
        return {g, Bound::single(t, l)};
    }
};

// ---------------------------------------------------------------------------
// Guards over the result value z

struct GuardAtom {
    enum class Cmp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };
    Cmp cmp = Cmp::Eq;
    Value k = 0;

    bool holds(Value z) const
    {
        switch (cmp) {
        case Cmp::Eq: return z == k;
        case Cmp::Ne: return z != k;
        case Cmp::Lt: return z < k;
        case Cmp::Le: return z <= k;
        case Cmp::Gt: return z > k;
        case Cmp::Ge: return z >= k;
        }
        return false;
    }

    auto operator<=>(const GuardAtom&) const = default;
};

inline const char* to_string(GuardAtom::Cmp c)
{
    switch (c) {
    case GuardAtom::Cmp::Eq: return "=";
    case GuardAtom::Cmp::Ne: return "!=";
    case GuardAtom::Cmp::Lt: return "<";
    case GuardAtom::Cmp::Le: return "<=";
    case GuardAtom::Cmp::Gt: return ">";
    case GuardAtom::Cmp::Ge: return ">=";
    }
    return "?";
}

/// Conjunction of comparisons; empty means always.
struct Guard {
    std::vector<GuardAtom> atoms;

    bool holds(Value z) const
    {
        for (auto& a : atoms)
            if (!a.holds(z))
                return false;
        return true;
    }

    auto operator<=>(const Guard&) const = default;
};

// ---------------------------------------------------------------------------
// Atomic specifications

template <CancellativeMonoid MG, CancellativeMonoid ML>
struct BasicAtomicSpec {
    using G = typename MG::value_type;
    using L = typename ML::value_type;
    using Total = TotalTiedMonoid<MG, ML>;
    using Omega = typename Total::value_type;
    using Global = MG;
    using Local = ML;

    struct PreEntry {
        Operation op;
        G global = MG::unit();
        L local = ML::unit();
        auto operator<=>(const PreEntry&) const = default;
    };

    /// post(op, z) = (global, local) for every z satisfying guard.
    struct PostRule {
        Operation op;
        Guard guard;
        G global = MG::unit();
        L local = ML::unit();
        auto operator<=>(const PostRule&) const = default;
    };

    std::string name;
    Value v0 = 0;
    std::string global_kind = "nat";
    std::string local_kind = "nat";
    G rho0 = MG::unit();
    std::vector<PreEntry> pre;
    std::vector<PostRule> post;

    const PreEntry* pre_of(const Operation& o) const
    {
        for (auto& p : pre)
            if (p.op == o)
                return &p;
        return nullptr;
    }

    const PostRule* post_of(const Operation& o, Value z) const
    {
        for (auto& p : post)
            if (p.op == o && p.guard.holds(z))
                return &p;
        return nullptr;
    }

    bool enabled_op(const Operation& o) const { return pre_of(o) != nullptr; }
    bool enabled(const Operation& o, Value z) const { return pre_of(o) && post_of(o, z); }

    std::vector<Operation> operations() const
    {
        std::vector<Operation> v;
        for (auto& p : pre)
            v.push_back(p.op);
        return v;
    }

    Omega initial() const { return Omega{rho0, {}}; }

    /// Problems that make this spec invalid; empty when valid.
    std::vector<std::string> validate() const
    {
        std::vector<std::string> errs;
        std::set<Operation> seen;
        for (auto& p : pre) {
            if (is_nonatomic(p.op.kind))
                errs.push_back("nonatomic operation enabled");
            if (!seen.insert(p.op).second)
                errs.push_back("operation has two preconditions");
        }
        for (auto& p : post)
            if (!pre_of(p.op))
                errs.push_back("postcondition for an operation without precondition");
        return errs;
    }

    auto operator<=>(const BasicAtomicSpec&) const = default;
    bool operator==(const BasicAtomicSpec&) const = default;
};

using AtomicSpec = BasicAtomicSpec<NatMonoid, NatMonoid>;
using Omega = AtomicSpec::Omega;
using SpecTable = std::map<std::string, AtomicSpec>;

inline Operation op_inc() { return Operation::rmw(OpKind::RmwRlx, UpdateFn::add(1)); }
inline Operation op_dec() { return Operation::rmw(OpKind::RmwRel, UpdateFn::add(-1)); }
inline Operation op_fence_acq() { return Operation::fence(OpKind::FenceAcq); }

/// The reference-counting spec: relaxed increments, release decrements and
/// the acquire fence of the last owner.
inline AtomicSpec arc_spec()
{
    using C = GuardAtom::Cmp;
    AtomicSpec s;
    s.name = "arc";
    s.v0 = 1;
    s.rho0 = 1;
    s.pre = {{op_inc(), 1, 0}, {op_dec(), 1, 0}, {op_fence_acq(), 0, 1}};
    s.post = {
        {op_inc(), Guard{{{C::Ge, 1}}}, 2, 0},
        {op_dec(), Guard{{{C::Ge, 2}}}, 0, 0},
        {op_dec(), Guard{{{C::Eq, 1}}}, 0, 1},
        {op_fence_acq(), Guard{{{C::Eq, 0}}}, 0, 1},
    };
    return s;
}

// ---------------------------------------------------------------------------
// Replay

struct TracedOp {
    ThreadId thread = 0;
    Operation op;
    Value result = 0;
    auto operator<=>(const TracedOp&) const = default;
};

template <class Spec>
std::optional<typename Spec::Omega> consume_pre(const Spec& s, const typename Spec::Omega& w, ThreadId t, const Operation& o)
{
    auto p = s.pre_of(o);
    if (!p)
        throw UnknownOperation("operation has no precondition");
    return Spec::Total::subtract(w, Spec::Total::at_thread(p->global, t, p->local));
}

template <class Spec>
typename Spec::Omega produce_post(const Spec& s, const typename Spec::Omega& w, ThreadId t, const Operation& o, Value z)
{
    auto q = s.post_of(o, z);
    if (!q)
        throw UnknownOperation("operation not enabled at result " + std::to_string(z));
    return Spec::Total::compose(w, Spec::Total::at_thread(q->global, t, q->local));
}

/// Replays `events` in the given order (indices into events) from (rho0, unit).
template <class Spec>
std::optional<typename Spec::Omega> replay_in_order(const Spec& s, const std::vector<TracedOp>& events,
                                                     const std::vector<int>& order)
{
    for (auto& e : events)
        if (!s.enabled(e.op, e.result))
            throw UnknownOperation("event not enabled by its atomic spec");
    auto w = s.initial();
    for (int i : order) {
        const TracedOp& e = events.at(i);
        auto c = consume_pre(s, w, e.thread, e.op);
        if (!c)
            return std::nullopt;
        w = produce_post(s, *c, e.thread, e.op, e.result);
    }
    return w;
}

template <class Spec>
std::optional<typename Spec::Omega> replay_in_order(const Spec& s, const std::vector<TracedOp>& events)
{
    std::vector<int> order(events.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = static_cast<int>(i);
    return replay_in_order(s, events, order);
}

/// All postconditions composed onto (rho0, unit), then all preconditions removed.
template <class Spec>
std::optional<typename Spec::Omega> net_resource(const Spec& s, const std::vector<TracedOp>& events)
{
    auto w = s.initial();
    for (auto& e : events)
        w = produce_post(s, w, e.thread, e.op, e.result);
    for (auto& e : events) {
        auto c = consume_pre(s, w, e.thread, e.op);
        if (!c)
            return std::nullopt;
        w = *c;
    }
    return w;
}

inline std::string format_omega(const Omega& w)
{
    std::string s = "(" + std::to_string(w.global) + ", {";
    bool first = true;
    for (auto& [t, v] : w.bound) {
        if (!first)
            s += ", ";
        first = false;
        s += std::to_string(t) + ":" + std::to_string(v);
    }
    return s + "})";
}

} // namespace rmmlab

#endif
