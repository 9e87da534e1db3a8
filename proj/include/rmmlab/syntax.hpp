// Concrete syntax: parser and canonical printer for programs (litmus files)
// and atomic specifications.
//
//   file     ::= { '%' comment line } { item }
//   item     ::= 'name' IDENT | 'loc' IDENT ['=' INT] | spec
//              | 'thread' '{' cmd '}' | 'exists' ':' formula
//   spec     ::= 'spec' IDENT '{' { specitem ';' } '}'
//   specitem ::= 'v0' '=' INT | 'rG' '=' IDENT | 'rL' '=' IDENT | 'rho0' '=' INT
//              | 'pre' sop '=' '(' INT ',' INT ')'
//              | 'post' sop '@' guard '=' '(' INT ',' INT ')'
//   guard    ::= '*' | 'z' CMP INT { '&&' 'z' CMP INT }
//   sop      ::= OPNAME [ '(' SINT | table ')' ]
//   cmd      ::= simple [ ';' cmd ] | 'let' IDENT '=' cmd 'in' cmd
//   simple   ::= 'if' expr 'then' simple | 'fork' '(' cmd ')' | '(' cmd ')'
//              | 'cons' '(' [ expr { ',' expr } ] ')' | '[' expr ']' '_na'
//              | '[' expr ']' ':=' 'na' expr | 'free' '(' expr ')'
//              | 'begin_atomic' '(' expr ',' IDENT ')' | 'end_atomic' '(' expr ')'
//              | OPNAME '(' expr [ ',' expr | ',' table ] ')' | expr
//   expr     ::= sum [ '=' sum ]          sum ::= atom { '+' atom }
//   atom     ::= SINT | IDENT | '(' expr ')'
//   table    ::= '{' INT ':' SINT { ',' INT ':' SINT } ',' '_' ':' SINT '}'
//   formula  ::= conj { '\/' conj }       conj ::= unary { '/\' unary }
//   unary    ::= '~' unary | '(' formula ')' | 'true' | [ INT ':' ] IDENT '=' SINT
//
// OPNAME is R_rlx, R_acq, W_rlx, W_rel, fence_acq, fence_rel, or
// FAA_m / XCHG_m / RMW_m with m in rlx, rel, acq, acqrel. Specs also accept
// R_na and W_na so that invalid specs can be written down and rejected.
#ifndef RMMLAB_SYNTAX_HPP_
#define RMMLAB_SYNTAX_HPP_

#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rmmlab/lang.hpp"
#include "rmmlab/tied.hpp"

namespace rmmlab {

namespace syntax {

struct Token {
    enum class Kind : std::uint8_t { Ident, Int, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    Value value = 0;
    int line = 1;
    int col = 1;
};

struct Lexed {
    std::vector<std::string> header;
    std::vector<Token> tokens;
};

inline Lexed lex(const std::string& src)
{
    Lexed out;
    int line = 1, col = 1;
    std::size_t i = 0;
    bool leading = true;
    auto adv = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    static const char* multi[] = {":=", "==", "!=", "<=", ">=", "&&", "/\\", "\\/"};
    while (i < src.size()) {
        char c = src[i];
        if (c == '%') {
            std::size_t e = src.find('\n', i);
            if (e == std::string::npos)
                e = src.size();
            if (leading && col == 1)
                out.header.push_back(src.substr(i, e - i));
            adv(e - i);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            adv(1);
            continue;
        }
        leading = false;
        Token t;
        t.line = line;
        t.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            t.kind = Token::Kind::Ident;
            t.text = src.substr(i, j - i);
            adv(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j])))
                ++j;
            t.kind = Token::Kind::Int;
            t.text = src.substr(i, j - i);
            try {
                t.value = std::stoll(t.text);
            } catch (const std::exception&) {
                throw ParseError("integer out of range", t.line, t.col);
            }
            adv(j - i);
        } else {
            t.kind = Token::Kind::Punct;
            bool found = false;
            for (const char* m : multi)
                if (src.compare(i, 2, m) == 0) {
                    t.text = m;
                    adv(2);
                    found = true;
                    break;
                }
            if (!found) {
                if (std::string("{}()[],;=<>+:@*~-").find(c) == std::string::npos)
                    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
                t.text = std::string(1, c);
                adv(1);
            }
        }
        out.tokens.push_back(std::move(t));
    }
    Token end;
    end.line = line;
    end.col = col;
    out.tokens.push_back(end);
    return out;
}

struct OpName {
    OpKind kind;
    UpdateFn::Form form = UpdateFn::Form::Add;
};

inline std::optional<OpName> lookup_op(const std::string& s)
{
    static const std::pair<const char*, OpKind> plain[] = {
        {"R_na", OpKind::ReadNA},   {"R_rlx", OpKind::ReadRlx},      {"R_acq", OpKind::ReadAcq},
        {"W_na", OpKind::WriteNA},  {"W_rlx", OpKind::WriteRlx},     {"W_rel", OpKind::WriteRel},
        {"fence_acq", OpKind::FenceAcq}, {"fence_rel", OpKind::FenceRel},
    };
    for (auto& [n, k] : plain)
        if (s == n)
            return OpName{k};
    static const std::pair<const char*, OpKind> modes[] = {
        {"rlx", OpKind::RmwRlx}, {"rel", OpKind::RmwRel}, {"acq", OpKind::RmwAcq}, {"acqrel", OpKind::RmwAcqRel}};
    static const std::pair<const char*, UpdateFn::Form> forms[] = {
        {"FAA_", UpdateFn::Form::Add}, {"XCHG_", UpdateFn::Form::Set}, {"RMW_", UpdateFn::Form::Table}};
    for (auto& [prefix, form] : forms)
        for (auto& [m, k] : modes)
            if (s == std::string(prefix) + m)
                return OpName{k, form};
    return std::nullopt;
}

inline std::string op_name(OpKind k, UpdateFn::Form form = UpdateFn::Form::Add)
{
    switch (k) {
    case OpKind::ReadNA: return "R_na";
    case OpKind::ReadRlx: return "R_rlx";
    case OpKind::ReadAcq: return "R_acq";
    case OpKind::WriteNA: return "W_na";
    case OpKind::WriteRlx: return "W_rlx";
    case OpKind::WriteRel: return "W_rel";
    case OpKind::FenceAcq: return "fence_acq";
    case OpKind::FenceRel: return "fence_rel";
    default: break;
    }
    std::string prefix = form == UpdateFn::Form::Add ? "FAA_" : form == UpdateFn::Form::Set ? "XCHG_" : "RMW_";
    switch (k) {
    case OpKind::RmwRlx: return prefix + "rlx";
    case OpKind::RmwRel: return prefix + "rel";
    case OpKind::RmwAcq: return prefix + "acq";
    default: return prefix + "acqrel";
    }
}

inline std::string format_table(const std::map<Value, Value>& t, Value fallback)
{
    std::string s = "{";
    for (auto& [k, v] : t)
        s += std::to_string(k) + ": " + std::to_string(v) + ", ";
    return s + "_: " + std::to_string(fallback) + "}";
}

class Parser {
public:
    explicit Parser(const std::string& src) : lx_(lex(src)) {}

    Program program()
    {
        Program p;
        p.header = lx_.header;
        while (!at_end()) {
            const Token& t = peek();
            if (is_ident("name")) {
                next();
                p.name = ident();
            } else if (is_ident("loc")) {
                next();
                Token nt = peek();
                std::string n = ident();
                Loc addr = static_cast<Loc>(p.locations.size()) + 1;
                if (accept("="))
                    addr = integer();
                for (auto& [m, a] : p.locations)
                    if (m == n || a == addr)
                        throw ParseError("location '" + n + "' declared twice", nt.line, nt.col);
                if (addr <= 0 || addr >= alloc_base(1))
                    throw ParseError("static locations live in [1, 999]", nt.line, nt.col);
                p.locations.emplace_back(n, addr);
                locs_[n] = addr;
            } else if (is_ident("spec")) {
                AtomicSpec s = spec();
                if (p.specs.count(s.name))
                    throw ParseError("spec '" + s.name + "' declared twice", t.line, t.col);
                p.spec_order.push_back(s.name);
                p.specs.emplace(s.name, std::move(s));
            } else if (is_ident("thread")) {
                next();
                expect("{");
                p.threads.push_back(cmd());
                expect("}");
            } else if (is_ident("exists")) {
                next();
                expect(":");
                p.postcondition = formula();
            } else {
                fail("expected name, loc, spec, thread or exists");
            }
        }
        for (auto& [tok, n] : spec_uses_)
            if (!p.specs.count(n))
                throw UnresolvedSpec(n);
        if (p.threads.size() >= static_cast<std::size_t>(kForkFanout))
            throw ParseError("at most 9 top-level threads", 1, 1);
        return p;
    }

    std::vector<AtomicSpec> specs()
    {
        std::vector<AtomicSpec> out;
        while (!at_end()) {
            if (!is_ident("spec"))
                fail("expected spec");
            out.push_back(spec());
        }
        return out;
    }

    Cmd command_only()
    {
        Cmd c = cmd();
        if (!at_end())
            fail("trailing input");
        return c;
    }

    Formula formula_only()
    {
        Formula f = formula();
        if (!at_end())
            fail("trailing input");
        return f;
    }

private:
    // --- token helpers
    const Token& peek(std::size_t k = 0) const { return lx_.tokens[std::min(pos_ + k, lx_.tokens.size() - 1)]; }
    const Token& next() { return lx_.tokens[pos_ < lx_.tokens.size() - 1 ? pos_++ : pos_]; }
    bool at_end() const { return peek().kind == Token::Kind::End; }
    bool is(const char* p, std::size_t k = 0) const { return peek(k).kind == Token::Kind::Punct && peek(k).text == p; }
    bool is_ident(const char* s, std::size_t k = 0) const
    {
        return peek(k).kind == Token::Kind::Ident && peek(k).text == s;
    }
    bool accept(const char* p)
    {
        if (!is(p))
            return false;
        next();
        return true;
    }
    [[noreturn]] void fail(const std::string& m) const
    {
        const Token& t = peek();
        std::string got = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(m + " (got " + got + ")", t.line, t.col);
    }
    void expect(const char* p)
    {
        if (!accept(p))
            fail(std::string("expected '") + p + "'");
    }
    void expect_ident(const char* s)
    {
        if (!is_ident(s))
            fail(std::string("expected '") + s + "'");
        next();
    }
    std::string ident()
    {
        if (peek().kind != Token::Kind::Ident)
            fail("expected identifier");
        return next().text;
    }
    Value integer()
    {
        bool neg = accept("-");
        if (!neg)
            accept("+");
        if (peek().kind != Token::Kind::Int)
            fail("expected integer");
        Value v = next().value;
        return neg ? -v : v;
    }
    std::uint64_t natural()
    {
        if (peek().kind != Token::Kind::Int)
            fail("expected natural number");
        return static_cast<std::uint64_t>(next().value);
    }

    // --- specs
    AtomicSpec spec()
    {
        expect_ident("spec");
        AtomicSpec s;
        s.name = ident();
        expect("{");
        while (!accept("}")) {
            std::string key = ident();
            if (key == "v0") {
                expect("=");
                s.v0 = integer();
            } else if (key == "rG" || key == "rL") {
                expect("=");
                Token t = peek();
                std::string m = ident();
                if (m != "nat")
                    throw ParseError("only the nat monoid is built in", t.line, t.col);
                (key == "rG" ? s.global_kind : s.local_kind) = m;
            } else if (key == "rho0") {
                expect("=");
                s.rho0 = natural();
            } else if (key == "pre") {
                AtomicSpec::PreEntry e;
                e.op = spec_op();
                expect("=");
                std::tie(e.global, e.local) = pair();
                s.pre.push_back(e);
            } else if (key == "post") {
                AtomicSpec::PostRule r;
                r.op = spec_op();
                expect("@");
                r.guard = guard();
                expect("=");
                std::tie(r.global, r.local) = pair();
                s.post.push_back(r);
            } else {
                fail("unknown spec field '" + key + "'");
            }
            expect(";");
        }
        return s;
    }

    std::pair<std::uint64_t, std::uint64_t> pair()
    {
        expect("(");
        auto a = natural();
        expect(",");
        auto b = natural();
        expect(")");
        return {a, b};
    }

    Guard guard()
    {
        Guard g;
        if (accept("*"))
            return g;
        do {
            expect_ident("z");
            GuardAtom a;
            if (accept(">="))
                a.cmp = GuardAtom::Cmp::Ge;
            else if (accept("<="))
                a.cmp = GuardAtom::Cmp::Le;
            else if (accept("!="))
                a.cmp = GuardAtom::Cmp::Ne;
            else if (accept(">"))
                a.cmp = GuardAtom::Cmp::Gt;
            else if (accept("<"))
                a.cmp = GuardAtom::Cmp::Lt;
            else if (accept("=") || accept("=="))
                a.cmp = GuardAtom::Cmp::Eq;
            else
                fail("expected comparison");
            a.k = integer();
            g.atoms.push_back(a);
        } while (accept("&&"));
        return g;
    }

    std::pair<std::map<Value, Value>, Value> table()
    {
        expect("{");
        std::map<Value, Value> t;
        for (;;) {
            if (is_ident("_")) {
                next();
                expect(":");
                Value d = integer();
                expect("}");
                return {t, d};
            }
            Value k = integer();
            expect(":");
            t[k] = integer();
            expect(",");
        }
    }

    Operation spec_op()
    {
        Token t = peek();
        auto on = lookup_op(ident());
        if (!on)
            throw ParseError("unknown operation '" + t.text + "'", t.line, t.col);
        if (is_write(on->kind)) {
            expect("(");
            Value v = integer();
            expect(")");
            return Operation::write(on->kind, v);
        }
        if (is_rmw(on->kind)) {
            expect("(");
            Operation o;
            if (on->form == UpdateFn::Form::Table) {
                auto [tab, d] = table();
                o = Operation::rmw(on->kind, UpdateFn::make_table(tab, d));
            } else {
                Value v = integer();
                o = Operation::rmw(on->kind, on->form == UpdateFn::Form::Add ? UpdateFn::add(v) : UpdateFn::set(v));
            }
            expect(")");
            return o;
        }
        return Operation{on->kind, 0, std::nullopt};
    }

    // --- commands
    Cmd cmd()
    {
        if (is_ident("let")) {
            next();
            std::string x = ident();
            expect("=");
            Cmd c1 = cmd();
            expect_ident("in");
            scope_.push_back(x);
            Cmd c2 = cmd();
            scope_.pop_back();
            return mk::let(x, c1, c2);
        }
        Cmd c = simple();
        if (accept(";"))
            return mk::seq(c, cmd());
        return c;
    }

    bool at_cmd_end() const
    {
        return at_end() || is(";") || is(")") || is("}") || is_ident("in");
    }

    Cmd simple()
    {
        const Token t = peek();
        if (is_ident("if")) {
            next();
            Expr e = expr();
            expect_ident("then");
            return mk::if_(e, simple());
        }
        if (is_ident("fork")) {
            next();
            expect("(");
            Cmd c = cmd();
            expect(")");
            return mk::fork(c);
        }
        if (is("(")) {
            std::size_t save = pos_;
            try {
                Expr e = expr();
                if (at_cmd_end())
                    return mk::ret(e);
            } catch (const ParseError&) {
            }
            pos_ = save;
            next();
            Cmd c = cmd();
            expect(")");
            return c;
        }
        if (is_ident("cons")) {
            next();
            expect("(");
            std::vector<Expr> es;
            if (!is(")")) {
                es.push_back(expr());
                while (accept(","))
                    es.push_back(expr());
            }
            expect(")");
            if (es.empty())
                throw ParseError("cons needs at least one value", t.line, t.col);
            return mk::cons(es);
        }
        if (is("[")) {
            next();
            Expr l = expr();
            expect("]");
            if (is_ident("_na")) {
                next();
                return mk::read_na(l);
            }
            expect(":=");
            expect_ident("na");
            return mk::write_na(l, expr());
        }
        if (is_ident("free") || is_ident("end_atomic")) {
            bool fr = is_ident("free");
            next();
            expect("(");
            Expr l = expr();
            expect(")");
            return fr ? mk::free(l) : mk::end_atomic(l);
        }
        if (is_ident("begin_atomic")) {
            next();
            expect("(");
            Expr l = expr();
            expect(",");
            Token st = peek();
            std::string s = ident();
            spec_uses_.emplace_back(st, s);
            expect(")");
            return mk::begin_atomic(l, s);
        }
        if (peek().kind == Token::Kind::Ident && is("(", 1)) {
            if (auto on = lookup_op(peek().text)) {
                if (is_nonatomic(on->kind))
                    throw ParseError("use [e]_na and [e] :=na e for nonatomic accesses", t.line, t.col);
                next();
                expect("(");
                Expr l = expr();
                OpTemplate o;
                o.kind = on->kind;
                o.form = on->form;
                if (is_write(on->kind) || (is_rmw(on->kind) && on->form != UpdateFn::Form::Table)) {
                    expect(",");
                    o.arg = expr();
                } else if (is_rmw(on->kind)) {
                    expect(",");
                    std::tie(o.table, o.table_default) = table();
                }
                expect(")");
                return mk::op(o, l);
            }
        }
        return mk::ret(expr());
    }

    // --- expressions
    Expr expr()
    {
        Expr a = sum();
        if (accept("=") || accept("=="))
            return eq(a, sum());
        return a;
    }

    Expr sum()
    {
        Expr a = atom();
        while (accept("+"))
            a = add(a, atom());
        return a;
    }

    Expr atom()
    {
        if (accept("(")) {
            Expr e = expr();
            expect(")");
            return e;
        }
        if (peek().kind == Token::Kind::Int || is("-"))
            return val(integer());
        Token t = peek();
        std::string x = ident();
        for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
            if (*it == x)
                return var(x);
        auto l = locs_.find(x);
        if (l != locs_.end())
            return loc_name(x, l->second);
        throw ParseError("unbound name '" + x + "'", t.line, t.col);
    }

    // --- formulas
    Formula formula()
    {
        Formula f = conj();
        while (accept("\\/"))
            f = f_or(f, conj());
        return f;
    }

    Formula conj()
    {
        Formula f = unary();
        while (accept("/\\"))
            f = f_and(f, unary());
        return f;
    }

    Formula unary()
    {
        if (accept("~"))
            return f_not(unary());
        if (accept("(")) {
            Formula f = formula();
            expect(")");
            return f;
        }
        if (is_ident("true")) {
            next();
            return f_true();
        }
        std::string reg;
        if (peek().kind == Token::Kind::Int) {
            reg = next().text;
            expect(":");
            reg += ":" + ident();
        } else {
            reg = ident();
        }
        if (!accept("=") && !accept("=="))
            fail("expected '='");
        return f_atom(reg, integer());
    }

    Lexed lx_;
    std::size_t pos_ = 0;
    std::map<std::string, Loc> locs_;
    std::vector<std::string> scope_;
    std::vector<std::pair<Token, std::string>> spec_uses_;
};

// ---------------------------------------------------------------------------
// Printing

inline std::string print_expr(const Expr& e, int ctx = 0)
{
    // ctx: 0 top, 1 operand of '=', 2 right operand of '+'
    switch (e->kind) {
    case ExprNode::Kind::Val:
        return std::to_string(e->value);
    case ExprNode::Kind::Var:
    case ExprNode::Kind::Loc:
        return e->name;
    case ExprNode::Kind::Add: {
        std::string s = print_expr(e->lhs, 1) + " + " + print_expr(e->rhs, 2);
        return ctx == 2 ? "(" + s + ")" : s;
    }
    case ExprNode::Kind::Eq: {
        std::string s = print_expr(e->lhs, 1) + " = " + print_expr(e->rhs, 1);
        return ctx != 0 ? "(" + s + ")" : s;
    }
    }
    return "?";
}

inline std::string indent(int n) { return std::string(static_cast<std::size_t>(2 * n), ' '); }

inline std::string print_cmd(const Cmd& c, int ind);

inline bool is_compound(const Cmd& c) { return c->kind == CmdKind::Let; }

inline std::string print_simple(const Cmd& c, int ind)
{
    if (is_compound(c))
        return "(\n" + indent(ind + 1) + print_cmd(c, ind + 1) + "\n" + indent(ind) + ")";
    std::string s = print_cmd(c, ind);
    if (c->kind == CmdKind::Ret && c->args[0]->kind == ExprNode::Kind::Eq)
        return s; // already unambiguous
    return s;
}

inline std::string print_cmd(const Cmd& c, int ind)
{
    auto a = [&](std::size_t i) { return print_expr(c->args[i]); };
    switch (c->kind) {
    case CmdKind::Ret:
        return a(0);
    case CmdKind::Cons: {
        std::string s = "cons(";
        for (std::size_t i = 0; i < c->args.size(); ++i)
            s += (i ? ", " : "") + a(i);
        return s + ")";
    }
    case CmdKind::ReadNA:
        return "[" + a(0) + "]_na";
    case CmdKind::WriteNA:
        return "[" + a(0) + "] :=na " + a(1);
    case CmdKind::WriteNAInProgress:
        return "[" + a(0) + "] :='na " + a(1);
    case CmdKind::Free:
        return "free(" + a(0) + ")";
    case CmdKind::BeginAtomic:
        return "begin_atomic(" + a(0) + ", " + c->name + ")";
    case CmdKind::EndAtomic:
        return "end_atomic(" + a(0) + ")";
    case CmdKind::Op: {
        std::string s = op_name(c->op.kind, c->op.form) + "(" + a(0);
        if (c->op.arg)
            s += ", " + print_expr(c->op.arg);
        else if (is_rmw(c->op.kind))
            s += ", " + format_table(c->op.table, c->op.table_default);
        return s + ")";
    }
    case CmdKind::If:
        return "if " + a(0) + " then " + print_simple(c->c1, ind);
    case CmdKind::Fork:
        if (!is_compound(c->c1))
            return "fork(" + print_cmd(c->c1, ind) + ")";
        return "fork(\n" + indent(ind + 1) + print_cmd(c->c1, ind + 1) + "\n" + indent(ind) + ")";
    case CmdKind::Let:
        if (c->name == "_")
            return print_simple(c->c1, ind) + ";\n" + indent(ind) + print_cmd(c->c2, ind);
        return "let " + c->name + " = " + print_simple(c->c1, ind) + " in\n" + indent(ind) + print_cmd(c->c2, ind);
    }
    return "?";
}

inline std::string print_formula(const Formula& f, int ctx = 0)
{
    // ctx: 0 top/or, 1 inside and, 2 inside not
    switch (f->kind) {
    case FormulaNode::Kind::True:
        return "true";
    case FormulaNode::Kind::Atom:
        return f->reg + " = " + std::to_string(f->value);
    case FormulaNode::Kind::Not:
        return "~" + print_formula(f->lhs, 2);
    case FormulaNode::Kind::And: {
        std::string s = print_formula(f->lhs, 1) + " /\\ " + print_formula(f->rhs, 3);
        return ctx >= 2 ? "(" + s + ")" : s;
    }
    case FormulaNode::Kind::Or: {
        std::string s = print_formula(f->lhs, 0) + " \\/ " + print_formula(f->rhs, 3);
        return ctx >= 1 ? "(" + s + ")" : s;
    }
    }
    return "?";
}

inline std::string format_spec_op(const Operation& o)
{
    std::string s = op_name(o.kind, o.update ? o.update->form : UpdateFn::Form::Add);
    if (is_write(o.kind))
        return s + "(" + std::to_string(o.value) + ")";
    if (!o.update)
        return s;
    switch (o.update->form) {
    case UpdateFn::Form::Add:
        return s + "(" + (o.update->arg >= 0 ? "+" : "") + std::to_string(o.update->arg) + ")";
    case UpdateFn::Form::Set:
        return s + "(" + std::to_string(o.update->arg) + ")";
    case UpdateFn::Form::Table:
        return s + "(" + format_table(o.update->table, o.update->arg) + ")";
    }
    return s;
}

inline std::string format_guard(const Guard& g)
{
    if (g.atoms.empty())
        return "*";
    std::string s;
    for (std::size_t i = 0; i < g.atoms.size(); ++i)
        s += (i ? " && " : "") + std::string("z ") + to_string(g.atoms[i].cmp) + " " + std::to_string(g.atoms[i].k);
    return s;
}

} // namespace syntax

inline std::string print_spec(const AtomicSpec& s)
{
    using namespace syntax;
    std::string out = "spec " + s.name + " {\n";
    out += "  v0 = " + std::to_string(s.v0) + ";\n";
    out += "  rG = " + s.global_kind + ";\n";
    out += "  rL = " + s.local_kind + ";\n";
    out += "  rho0 = " + std::to_string(s.rho0) + ";\n";
    for (auto& p : s.pre)
        out += "  pre " + format_spec_op(p.op) + " = (" + std::to_string(p.global) + ", " + std::to_string(p.local) + ");\n";
    for (auto& p : s.post)
        out += "  post " + format_spec_op(p.op) + " @ " + format_guard(p.guard) + " = (" + std::to_string(p.global) +
               ", " + std::to_string(p.local) + ");\n";
    return out + "}\n";
}

inline std::string print_command(const Cmd& c) { return syntax::print_cmd(c, 0); }
inline std::string print_formula(const Formula& f) { return syntax::print_formula(f); }

inline std::string print_program(const Program& p)
{
    std::string out;
    for (auto& h : p.header)
        out += h + "\n";
    auto section = [&]() {
        if (!out.empty())
            out += "\n";
    };
    if (!p.name.empty())
        out += "name " + p.name + "\n";
    for (auto& [n, a] : p.locations)
        out += "loc " + n + " = " + std::to_string(a) + "\n";
    for (auto& n : p.spec_order) {
        section();
        out += print_spec(p.specs.at(n));
    }
    for (auto& t : p.threads) {
        section();
        out += "thread {\n  " + syntax::print_cmd(t, 1) + "\n}\n";
    }
    if (p.postcondition) {
        section();
        out += "exists: " + print_formula(p.postcondition) + "\n";
    }
    return out;
}

inline Program parse_program(const std::string& text) { return syntax::Parser(text).program(); }
inline std::vector<AtomicSpec> parse_specs(const std::string& text) { return syntax::Parser(text).specs(); }
inline Cmd parse_command(const std::string& text) { return syntax::Parser(text).command_only(); }
inline Formula parse_formula(const std::string& text) { return syntax::Parser(text).formula_only(); }

} // namespace rmmlab

#endif
