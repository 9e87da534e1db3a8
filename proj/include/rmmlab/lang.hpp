// The instrumented loop-free language: expressions, commands, programs,
// substitution, and per-thread symbolic unrolling.
#ifndef RMMLAB_LANG_HPP_
#define RMMLAB_LANG_HPP_

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rmmlab/core.hpp"
#include "rmmlab/graph.hpp"
#include "rmmlab/tied.hpp"

namespace rmmlab {

// ---------------------------------------------------------------------------
// Expressions

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    enum class Kind : std::uint8_t { Val, Var, Loc, Add, Eq };
    Kind kind = Kind::Val;
    Value value = 0;  // Val, and the address of a named location
    std::string name; // Var, Loc
    Expr lhs, rhs;
};

inline Expr val(Value v) { return std::make_shared<const ExprNode>(ExprNode{ExprNode::Kind::Val, v, {}, {}, {}}); }
inline Expr var(std::string x)
{
    return std::make_shared<const ExprNode>(ExprNode{ExprNode::Kind::Var, 0, std::move(x), {}, {}});
}
inline Expr loc_name(std::string x, Loc addr)
{
    return std::make_shared<const ExprNode>(ExprNode{ExprNode::Kind::Loc, addr, std::move(x), {}, {}});
}
inline Expr add(Expr a, Expr b)
{
    return std::make_shared<const ExprNode>(ExprNode{ExprNode::Kind::Add, 0, {}, std::move(a), std::move(b)});
}
inline Expr eq(Expr a, Expr b)
{
    return std::make_shared<const ExprNode>(ExprNode{ExprNode::Kind::Eq, 0, {}, std::move(a), std::move(b)});
}

inline bool equal(const Expr& a, const Expr& b)
{
    if (a == b)
        return true;
    if (!a || !b || a->kind != b->kind || a->value != b->value || a->name != b->name)
        return false;
    return equal(a->lhs, b->lhs) && equal(a->rhs, b->rhs);
}

/// Value of a closed expression; nullopt if a variable is free.
inline std::optional<Value> eval(const Expr& e)
{
    switch (e->kind) {
    case ExprNode::Kind::Val:
    case ExprNode::Kind::Loc:
        return e->value;
    case ExprNode::Kind::Var:
        return std::nullopt;
    case ExprNode::Kind::Add: {
        auto a = eval(e->lhs), b = eval(e->rhs);
        if (!a || !b)
            return std::nullopt;
        return wrapping_add(*a, *b);
    }
    case ExprNode::Kind::Eq: {
        auto a = eval(e->lhs), b = eval(e->rhs);
        if (!a || !b)
            return std::nullopt;
        return *a == *b ? 1 : 0;
    }
    }
    return std::nullopt;
}

inline Value eval_closed(const Expr& e)
{
    auto v = eval(e);
    if (!v)
        throw Error("expression has a free variable");
    return *v;
}

inline Expr substitute(const Expr& e, Value v, const std::string& x)
{
    switch (e->kind) {
    case ExprNode::Kind::Var:
        return e->name == x ? val(v) : e;
    case ExprNode::Kind::Add:
    case ExprNode::Kind::Eq: {
        Expr l = substitute(e->lhs, v, x), r = substitute(e->rhs, v, x);
        if (l == e->lhs && r == e->rhs)
            return e;
        return std::make_shared<const ExprNode>(ExprNode{e->kind, 0, {}, l, r});
    }
    default:
        return e;
    }
}

inline void free_vars(const Expr& e, std::set<std::string>& out)
{
    if (!e)
        return;
    if (e->kind == ExprNode::Kind::Var)
        out.insert(e->name);
    free_vars(e->lhs, out);
    free_vars(e->rhs, out);
}

// ---------------------------------------------------------------------------
// Operations with expression arguments

/// An operation as written in source; the argument is evaluated when the
/// command runs.
struct OpTemplate {
    OpKind kind = OpKind::ReadRlx;
    UpdateFn::Form form = UpdateFn::Form::Add; // RMWs
    Expr arg;                                  // written value, addend or stored value
    std::map<Value, Value> table;              // Table RMWs
    Value table_default = 0;
};

inline bool equal(const OpTemplate& a, const OpTemplate& b)
{
    if (a.kind != b.kind || a.form != b.form || a.table != b.table || a.table_default != b.table_default)
        return false;
    if (!a.arg || !b.arg)
        return !a.arg && !b.arg;
    return equal(a.arg, b.arg);
}

inline Operation instantiate(const OpTemplate& t)
{
    if (is_write(t.kind))
        return Operation::write(t.kind, eval_closed(t.arg));
    if (is_rmw(t.kind)) {
        switch (t.form) {
        case UpdateFn::Form::Add:
            return Operation::rmw(t.kind, UpdateFn::add(eval_closed(t.arg)));
        case UpdateFn::Form::Set:
            return Operation::rmw(t.kind, UpdateFn::set(eval_closed(t.arg)));
        case UpdateFn::Form::Table:
            return Operation::rmw(t.kind, UpdateFn::make_table(t.table, t.table_default));
        }
    }
    return Operation{t.kind, 0, std::nullopt};
}

// ---------------------------------------------------------------------------
// Commands

struct CmdNode;
using Cmd = std::shared_ptr<const CmdNode>;

enum class CmdKind : std::uint8_t {
    Ret, // an expression used as a command; a value once closed
    Cons,
    ReadNA,
    WriteNA,
    WriteNAInProgress, // runtime only: args are the location and the value
    Free,
    BeginAtomic,
    EndAtomic,
    Op,
    If,
    Let,
    Fork,
};

struct CmdNode {
    CmdKind kind = CmdKind::Ret;
    std::vector<Expr> args;
    std::string name; // Let binder, BeginAtomic spec
    OpTemplate op;
    Cmd c1, c2; // If body; Let bound and body; Fork body
};

namespace mk {

inline Cmd node(CmdNode n) { return std::make_shared<const CmdNode>(std::move(n)); }
inline Cmd ret(Expr e) { return node({CmdKind::Ret, {std::move(e)}, {}, {}, {}, {}}); }
inline Cmd cons(std::vector<Expr> es) { return node({CmdKind::Cons, std::move(es), {}, {}, {}, {}}); }
inline Cmd read_na(Expr l) { return node({CmdKind::ReadNA, {std::move(l)}, {}, {}, {}, {}}); }
inline Cmd write_na(Expr l, Expr v) { return node({CmdKind::WriteNA, {std::move(l), std::move(v)}, {}, {}, {}, {}}); }
inline Cmd write_in_progress(Loc l, Value v) { return node({CmdKind::WriteNAInProgress, {val(l), val(v)}, {}, {}, {}, {}}); }
inline Cmd free(Expr l) { return node({CmdKind::Free, {std::move(l)}, {}, {}, {}, {}}); }
inline Cmd begin_atomic(Expr l, std::string spec)
{
    return node({CmdKind::BeginAtomic, {std::move(l)}, std::move(spec), {}, {}, {}});
}
inline Cmd end_atomic(Expr l) { return node({CmdKind::EndAtomic, {std::move(l)}, {}, {}, {}, {}}); }
inline Cmd op(OpTemplate o, Expr l) { return node({CmdKind::Op, {std::move(l)}, {}, std::move(o), {}, {}}); }
inline Cmd if_(Expr e, Cmd c) { return node({CmdKind::If, {std::move(e)}, {}, {}, std::move(c), {}}); }
inline Cmd let(std::string x, Cmd c1, Cmd c2) { return node({CmdKind::Let, {}, std::move(x), {}, std::move(c1), std::move(c2)}); }
inline Cmd seq(Cmd c1, Cmd c2) { return let("_", std::move(c1), std::move(c2)); }
inline Cmd fork(Cmd c) { return node({CmdKind::Fork, {}, {}, {}, std::move(c), {}}); }

inline OpTemplate read_op(OpKind k) { return OpTemplate{k, UpdateFn::Form::Add, nullptr, {}, 0}; }
inline OpTemplate write_op(OpKind k, Expr v) { return OpTemplate{k, UpdateFn::Form::Add, std::move(v), {}, 0}; }
inline OpTemplate faa_op(OpKind k, Expr d) { return OpTemplate{k, UpdateFn::Form::Add, std::move(d), {}, 0}; }
inline OpTemplate xchg_op(OpKind k, Expr v) { return OpTemplate{k, UpdateFn::Form::Set, std::move(v), {}, 0}; }

} // namespace mk

inline bool equal(const Cmd& a, const Cmd& b)
{
    if (a == b)
        return true;
    if (!a || !b || a->kind != b->kind || a->name != b->name || a->args.size() != b->args.size())
        return false;
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!equal(a->args[i], b->args[i]))
            return false;
    if (a->kind == CmdKind::Op && !equal(a->op, b->op))
        return false;
    return equal(a->c1, b->c1) && equal(a->c2, b->c2);
}

namespace detail {

inline OpTemplate substitute_op(const OpTemplate& t, Value v, const std::string& x)
{
    OpTemplate r = t;
    if (r.arg)
        r.arg = substitute(r.arg, v, x);
    return r;
}

} // namespace detail

/// c[v/x]: replaces the free occurrences of x.
inline Cmd substitute(const Cmd& c, Value v, const std::string& x)
{
    if (!c)
        return c;
    CmdNode n = *c;
    for (auto& a : n.args)
        a = substitute(a, v, x);
    if (n.kind == CmdKind::Op)
        n.op = detail::substitute_op(n.op, v, x);
    n.c1 = substitute(n.c1, v, x);
    if (n.kind == CmdKind::Let && n.name == x)
        n.c2 = c->c2;
    else
        n.c2 = substitute(n.c2, v, x);
    return mk::node(std::move(n));
}

inline void free_vars(const Cmd& c, std::set<std::string>& out)
{
    if (!c)
        return;
    for (auto& a : c->args)
        free_vars(a, out);
    if (c->op.arg)
        free_vars(c->op.arg, out);
    free_vars(c->c1, out);
    if (c->kind == CmdKind::Let) {
        std::set<std::string> inner;
        free_vars(c->c2, inner);
        inner.erase(c->name);
        out.insert(inner.begin(), inner.end());
    } else {
        free_vars(c->c2, out);
    }
}

/// A closed Ret command: its value.
inline std::optional<Value> as_value(const Cmd& c)
{
    if (c->kind != CmdKind::Ret)
        return std::nullopt;
    return eval(c->args[0]);
}

/// The command in redex position: K ::= [] | let x = K in c. A Let whose
/// bound command is a value is itself the redex.
inline const Cmd& head_of(const Cmd& c)
{
    const Cmd* cur = &c;
    while ((*cur)->kind == CmdKind::Let && !as_value((*cur)->c1))
        cur = &(*cur)->c1;
    return *cur;
}

/// Replaces the redex of c by r.
inline Cmd plug(const Cmd& c, const Cmd& r)
{
    if (c->kind == CmdKind::Let && !as_value(c->c1)) {
        CmdNode n = *c;
        n.c1 = plug(c->c1, r);
        return mk::node(std::move(n));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Postconditions over registers

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
    enum class Kind : std::uint8_t { True, Atom, Not, And, Or };
    Kind kind = Kind::True;
    std::string reg; // "a" or "t:a"
    Value value = 0;
    Formula lhs, rhs;
};

inline Formula f_true() { return std::make_shared<const FormulaNode>(FormulaNode{}); }
inline Formula f_atom(std::string r, Value v)
{
    return std::make_shared<const FormulaNode>(FormulaNode{FormulaNode::Kind::Atom, std::move(r), v, {}, {}});
}
inline Formula f_not(Formula a)
{
    return std::make_shared<const FormulaNode>(FormulaNode{FormulaNode::Kind::Not, {}, 0, std::move(a), {}});
}
inline Formula f_and(Formula a, Formula b)
{
    return std::make_shared<const FormulaNode>(FormulaNode{FormulaNode::Kind::And, {}, 0, std::move(a), std::move(b)});
}
inline Formula f_or(Formula a, Formula b)
{
    return std::make_shared<const FormulaNode>(FormulaNode{FormulaNode::Kind::Or, {}, 0, std::move(a), std::move(b)});
}

inline bool equal(const Formula& a, const Formula& b)
{
    if (a == b)
        return true;
    if (!a || !b || a->kind != b->kind || a->reg != b->reg || a->value != b->value)
        return false;
    return equal(a->lhs, b->lhs) && equal(a->rhs, b->rhs);
}

/// Final register values per thread.
using Registers = std::map<ThreadId, std::map<std::string, Value>>;

inline std::optional<Value> lookup_register(const Registers& regs, const std::string& name)
{
    auto colon = name.find(':');
    if (colon != std::string::npos) {
        ThreadId t = std::stoll(name.substr(0, colon));
        auto it = regs.find(t);
        if (it == regs.end())
            return std::nullopt;
        auto r = it->second.find(name.substr(colon + 1));
        if (r == it->second.end())
            return std::nullopt;
        return r->second;
    }
    for (auto& [t, m] : regs) {
        auto r = m.find(name);
        if (r != m.end())
            return r->second;
    }
    return std::nullopt;
}

inline bool holds(const Formula& f, const Registers& regs)
{
    switch (f->kind) {
    case FormulaNode::Kind::True:
        return true;
    case FormulaNode::Kind::Atom: {
        auto v = lookup_register(regs, f->reg);
        return v && *v == f->value;
    }
    case FormulaNode::Kind::Not:
        return !holds(f->lhs, regs);
    case FormulaNode::Kind::And:
        return holds(f->lhs, regs) && holds(f->rhs, regs);
    case FormulaNode::Kind::Or:
        return holds(f->lhs, regs) || holds(f->rhs, regs);
    }
    return false;
}

// ---------------------------------------------------------------------------
// Programs

struct Program {
    std::vector<std::string> header; // leading comment lines, kept verbatim
    std::string name;
    std::vector<std::pair<std::string, Loc>> locations; // statically allocated, initialised to 0
    SpecTable specs;
    std::vector<std::string> spec_order; // declaration order, for printing
    std::vector<Cmd> threads;            // thread i+1 runs threads[i]
    Formula postcondition;               // null when absent

    std::set<Loc> static_locations() const
    {
        std::set<Loc> s;
        for (auto& [_, l] : locations)
            s.insert(l);
        return s;
    }
    const AtomicSpec& spec(const std::string& n) const
    {
        auto it = specs.find(n);
        if (it == specs.end())
            throw UnresolvedSpec(n);
        return it->second;
    }
};

inline bool equal(const Program& a, const Program& b)
{
    if (a.header != b.header || a.name != b.name || a.locations != b.locations || a.specs != b.specs ||
        a.spec_order != b.spec_order || a.threads.size() != b.threads.size())
        return false;
    for (std::size_t i = 0; i < a.threads.size(); ++i)
        if (!equal(a.threads[i], b.threads[i]))
            return false;
    if (!a.postcondition || !b.postcondition)
        return !a.postcondition && !b.postcondition;
    return equal(a.postcondition, b.postcondition);
}

/// First address of thread t's allocation region.
inline Loc alloc_base(ThreadId t) { return 1000 * t; }

// ---------------------------------------------------------------------------
// Symbolic unrolling

struct UnrolledEvent {
    Label label;
    std::optional<EventTag> tag;
};

/// What a thread needs next.
struct ThreadCursorStatus {
    enum class Kind : std::uint8_t { Done, NeedsValue, Emits };
    Kind kind = Kind::Done;
    Loc location = 0;  // NeedsValue: location read
    Operation op;      // NeedsValue: operation of the reading event
};

/// A thread being unrolled. Administrative steps (Let, If, Fork) run eagerly;
/// event-emitting commands are taken one at a time.
class ThreadCursor {
public:
    ThreadCursor(ThreadId t, Cmd c) : tid_(t), cmd_(std::move(c)), next_alloc_(alloc_base(t)) {}

    ThreadId thread() const { return tid_; }
    const Cmd& command() const { return cmd_; }
    int emitted() const { return emitted_; }
    const std::map<std::string, Value>& registers() const { return regs_; }
    /// Children forked so far as (events emitted before the fork, body).
    const std::vector<std::pair<int, Cmd>>& forks() const { return forks_; }

    ThreadId child_id(std::size_t ordinal) const { return tid_ * kForkFanout + static_cast<ThreadId>(ordinal) + 1; }

    /// Runs administrative steps and reports the next event-emitting redex.
    ThreadCursorStatus status()
    {
        normalize();
        const Cmd& h = head_of(cmd_);
        ThreadCursorStatus st;
        switch (h->kind) {
        case CmdKind::Ret:
            st.kind = ThreadCursorStatus::Kind::Done;
            return st;
        case CmdKind::ReadNA:
            st.kind = ThreadCursorStatus::Kind::NeedsValue;
            st.location = eval_closed(h->args[0]);
            st.op = Operation::read(OpKind::ReadNA);
            return st;
        case CmdKind::BeginAtomic:
        case CmdKind::EndAtomic:
            st.kind = ThreadCursorStatus::Kind::NeedsValue;
            st.location = eval_closed(h->args[0]);
            st.op = Operation::read(OpKind::ReadNA);
            return st;
        case CmdKind::Op: {
            Operation o = instantiate(h->op);
            if (is_readlike(o.kind)) {
                st.kind = ThreadCursorStatus::Kind::NeedsValue;
                st.location = eval_closed(h->args[0]);
                st.op = o;
                return st;
            }
            st.kind = ThreadCursorStatus::Kind::Emits;
            return st;
        }
        default:
            st.kind = ThreadCursorStatus::Kind::Emits;
            return st;
        }
    }

    /// Takes the pending event-emitting step. `value` is required exactly when
    /// status() reported NeedsValue.
    std::vector<UnrolledEvent> step(std::optional<Value> value = std::nullopt)
    {
        normalize();
        const Cmd h = head_of(cmd_);
        std::vector<UnrolledEvent> out;
        Value result = 0;
        auto emit = [&](Loc l, Value r, Operation o, std::optional<EventTag> tag = std::nullopt) {
            out.push_back({Label{tid_, l, r, std::move(o)}, std::move(tag)});
        };
        auto need = [&]() {
            if (!value)
                throw OracleExhausted();
            return *value;
        };
        switch (h->kind) {
        case CmdKind::Cons: {
            Loc base = next_alloc_;
            next_alloc_ += static_cast<Loc>(h->args.size());
            for (std::size_t i = 0; i < h->args.size(); ++i)
                emit(base + static_cast<Loc>(i), 0, Operation::write(OpKind::WriteNA, eval_closed(h->args[i])),
                     EventTag{PseudoKind::Alloc, ""});
            result = base;
            break;
        }
        case CmdKind::ReadNA:
            result = need();
            emit(eval_closed(h->args[0]), result, Operation::read(OpKind::ReadNA));
            break;
        case CmdKind::WriteNA:
        case CmdKind::WriteNAInProgress:
            emit(eval_closed(h->args[0]), 0, Operation::write(OpKind::WriteNA, eval_closed(h->args[1])));
            break;
        case CmdKind::Free:
            emit(eval_closed(h->args[0]), 0, Operation::write(OpKind::WriteNA, 0), EventTag{PseudoKind::Free, ""});
            break;
        case CmdKind::BeginAtomic:
        case CmdKind::EndAtomic: {
            Value v = need();
            Loc l = eval_closed(h->args[0]);
            EventTag tag{h->kind == CmdKind::BeginAtomic ? PseudoKind::BeginAtomic : PseudoKind::EndAtomic, ""};
            if (h->kind == CmdKind::BeginAtomic)
                tag.spec = h->name;
            emit(l, v, Operation::read(OpKind::ReadNA), tag);
            emit(l, 0, Operation::write(OpKind::WriteNA, v), tag);
            break;
        }
        case CmdKind::Op: {
            Operation o = instantiate(h->op);
            if (is_readlike(o.kind))
                result = need();
            emit(eval_closed(h->args[0]), result, o);
            break;
        }
        default:
            throw Error("no event-emitting redex");
        }
        emitted_ += static_cast<int>(out.size());
        cmd_ = plug(cmd_, mk::ret(val(result)));
        return out;
    }

    bool done()
    {
        normalize();
        return as_value(cmd_).has_value();
    }

private:
    void normalize()
    {
        for (;;) {
            const Cmd& h = head_of(cmd_);
            switch (h->kind) {
            case CmdKind::Let: {
                Value v = *as_value(h->c1);
                if (h->name != "_")
                    regs_[h->name] = v;
                cmd_ = plug(cmd_, substitute(h->c2, v, h->name));
                continue;
            }
            case CmdKind::If: {
                Value v = eval_closed(h->args[0]);
                cmd_ = plug(cmd_, v != 0 ? h->c1 : mk::ret(val(0)));
                continue;
            }
            case CmdKind::Fork:
                forks_.emplace_back(emitted_, h->c1);
                cmd_ = plug(cmd_, mk::ret(val(0)));
                continue;
            default:
                return;
            }
        }
    }

    ThreadId tid_;
    Cmd cmd_;
    Loc next_alloc_;
    int emitted_ = 0;
    std::map<std::string, Value> regs_;
    std::vector<std::pair<int, Cmd>> forks_;
};

struct ThreadTrace {
    std::vector<UnrolledEvent> events;
    std::vector<std::pair<int, Cmd>> forks;
    std::map<std::string, Value> registers;
};

/// Unrolls one thread, consuming one oracle value per read-like event.
inline ThreadTrace unroll_thread(const Cmd& c, const std::vector<Value>& oracle, ThreadId t = 1)
{
    ThreadCursor cur(t, c);
    std::size_t next = 0;
    ThreadTrace tr;
    for (;;) {
        auto st = cur.status();
        if (st.kind == ThreadCursorStatus::Kind::Done)
            break;
        std::optional<Value> v;
        if (st.kind == ThreadCursorStatus::Kind::NeedsValue) {
            if (next >= oracle.size())
                throw OracleExhausted();
            v = oracle[next++];
        }
        for (auto& e : cur.step(v))
            tr.events.push_back(std::move(e));
    }
    tr.forks = cur.forks();
    tr.registers = cur.registers();
    return tr;
}

} // namespace rmmlab

#endif
