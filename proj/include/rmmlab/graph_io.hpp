// Line-oriented text and JSON serialisation of execution graphs.
//
//   event <thread> <index> <opkind> loc=<int> val=<int> [upd=...] [tag=...]
//   po|rf|mo|rmw <thread.index> <thread.index>
//
// upd is add:<k>, set:<v> or table:<a>><b>,...,*><default>.
// tag is alloc, free, begin:<spec> or end. Blank lines and lines starting
// with '#' are ignored.
#ifndef RMMLAB_GRAPH_IO_HPP_
#define RMMLAB_GRAPH_IO_HPP_

#include <charconv>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rmmlab/graph.hpp"

namespace rmmlab {

namespace detail {

inline std::vector<std::string> split_ws(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string w;
    while (in >> w)
        out.push_back(w);
    return out;
}

inline std::optional<std::int64_t> parse_int(std::string_view s)
{
    std::int64_t v = 0;
    if (!s.empty() && s[0] == '+')
        s.remove_prefix(1);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        return std::nullopt;
    return v;
}

} // namespace detail

inline std::string format_update(const UpdateFn& f)
{
    switch (f.form) {
    case UpdateFn::Form::Add:
        return "add:" + std::to_string(f.arg);
    case UpdateFn::Form::Set:
        return "set:" + std::to_string(f.arg);
    case UpdateFn::Form::Table: {
        std::string s = "table:";
        for (auto& [k, v] : f.table)
            s += std::to_string(k) + ">" + std::to_string(v) + ",";
        return s + "*>" + std::to_string(f.arg);
    }
    }
    return "";
}

inline std::optional<UpdateFn> parse_update(std::string_view s)
{
    auto colon = s.find(':');
    if (colon == std::string_view::npos)
        return std::nullopt;
    std::string_view form = s.substr(0, colon), rest = s.substr(colon + 1);
    if (form == "add" || form == "set") {
        auto v = detail::parse_int(rest);
        if (!v)
            return std::nullopt;
        return form == "add" ? UpdateFn::add(*v) : UpdateFn::set(*v);
    }
    if (form != "table")
        return std::nullopt;
    std::map<Value, Value> t;
    std::optional<Value> fallback;
    while (!rest.empty()) {
        auto comma = rest.find(',');
        std::string_view item = rest.substr(0, comma);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        auto gt = item.find('>');
        if (gt == std::string_view::npos)
            return std::nullopt;
        auto val = detail::parse_int(item.substr(gt + 1));
        if (!val)
            return std::nullopt;
        if (item.substr(0, gt) == "*") {
            fallback = *val;
            continue;
        }
        auto key = detail::parse_int(item.substr(0, gt));
        if (!key || fallback)
            return std::nullopt;
        t[*key] = *val;
    }
    if (!fallback)
        return std::nullopt;
    return UpdateFn::make_table(std::move(t), *fallback);
}

inline std::string format_tag(const EventTag& t)
{
    std::string s = to_string(t.kind);
    if (t.kind == PseudoKind::BeginAtomic)
        s += ":" + t.spec;
    return s;
}

inline std::optional<EventTag> parse_tag(std::string_view s)
{
    if (s == "alloc")
        return EventTag{PseudoKind::Alloc, ""};
    if (s == "free")
        return EventTag{PseudoKind::Free, ""};
    if (s == "end")
        return EventTag{PseudoKind::EndAtomic, ""};
    if (s.substr(0, 6) == "begin:" && s.size() > 6)
        return EventTag{PseudoKind::BeginAtomic, std::string(s.substr(6))};
    return std::nullopt;
}

inline std::string format_event_id(const EventId& e) { return e.str(); }

inline std::optional<EventId> parse_event_id(std::string_view s)
{
    auto dot = s.find('.');
    if (dot == std::string_view::npos)
        return std::nullopt;
    auto t = detail::parse_int(s.substr(0, dot));
    auto i = detail::parse_int(s.substr(dot + 1));
    if (!t || !i || *t < 0 || *i < 0)
        return std::nullopt;
    return EventId{*t, static_cast<int>(*i)};
}

inline std::string print_graph(const ExecutionGraph& g)
{
    std::string out;
    for (auto& [e, l] : g.lab) {
        out += "event " + std::to_string(e.thread) + " " + std::to_string(e.index) + " " + to_string(l.op.kind);
        out += " loc=" + std::to_string(l.location);
        out += " val=" + std::to_string(is_write(l.op.kind) ? l.op.value : l.result);
        if (l.op.update)
            out += " upd=" + format_update(*l.op.update);
        auto t = g.tags.find(e);
        if (t != g.tags.end())
            out += " tag=" + format_tag(t->second);
        out += "\n";
    }
    auto edges = [&](const char* name, const Relation& r) {
        for (auto& [a, b] : r)
            out += std::string(name) + " " + a.str() + " " + b.str() + "\n";
    };
    edges("po", g.po);
    edges("rf", g.rf);
    edges("mo", g.mo);
    edges("rmw", g.rmw);
    return out;
}

inline ExecutionGraph parse_graph(const std::string& text)
{
    ExecutionGraph g;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto w = detail::split_ws(line);
        if (w.empty() || w[0][0] == '#')
            continue;
        auto fail = [&](const std::string& msg) { throw ParseError(msg, lineno, 1); };
        if (w[0] == "event") {
            if (w.size() < 6)
                fail("event needs thread, index, kind, loc and val");
            auto t = detail::parse_int(w[1]);
            auto i = detail::parse_int(w[2]);
            auto k = parse_op_kind(w[3]);
            if (!t || !i || *t < 0 || *i < 0)
                fail("bad event id");
            if (!k)
                fail("unknown operation kind '" + w[3] + "'");
            if (w[4].rfind("loc=", 0) != 0 || w[5].rfind("val=", 0) != 0)
                fail("expected loc= and val=");
            auto loc = detail::parse_int(w[4].substr(4));
            auto val = detail::parse_int(w[5].substr(4));
            if (!loc || !val)
                fail("bad loc or val");
            EventId id{*t, static_cast<int>(*i)};
            Label l{*t, *loc, 0, Operation{*k, 0, std::nullopt}};
            if (is_write(*k))
                l.op.value = *val;
            else
                l.result = *val;
            for (std::size_t j = 6; j < w.size(); ++j) {
                if (w[j].rfind("upd=", 0) == 0) {
                    auto f = parse_update(w[j].substr(4));
                    if (!f)
                        fail("bad update '" + w[j] + "'");
                    l.op.update = *f;
                } else if (w[j].rfind("tag=", 0) == 0) {
                    auto tg = parse_tag(w[j].substr(4));
                    if (!tg)
                        fail("bad tag '" + w[j] + "'");
                    g.tags[id] = *tg;
                } else {
                    fail("unexpected field '" + w[j] + "'");
                }
            }
            if (is_rmw(*k) != l.op.update.has_value())
                fail("update present iff the event is an RMW");
            if (!g.lab.emplace(id, l).second)
                fail("duplicate event " + id.str());
            continue;
        }
        Relation* r = w[0] == "po" ? &g.po : w[0] == "rf" ? &g.rf : w[0] == "mo" ? &g.mo : w[0] == "rmw" ? &g.rmw : nullptr;
        if (!r)
            fail("unknown line kind '" + w[0] + "'");
        if (w.size() != 3)
            fail("edge needs two event ids");
        auto a = parse_event_id(w[1]);
        auto b = parse_event_id(w[2]);
        if (!a || !b)
            fail("bad event id in edge");
        r->emplace(*a, *b);
    }
    return g;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const Relation& r)
{
    nlohmann::json a = nlohmann::json::array();
    for (auto& [x, y] : r)
        a.push_back({x.str(), y.str()});
    return a;
}

inline nlohmann::json to_json(const ExecutionGraph& g)
{
    nlohmann::json j;
    j["format"] = "rmmlab-graph";
    j["version"] = 1;
    nlohmann::json evs = nlohmann::json::array();
    for (auto& [e, l] : g.lab) {
        nlohmann::json x;
        x["id"] = e.str();
        x["thread"] = e.thread;
        x["index"] = e.index;
        x["op"] = to_string(l.op.kind);
        x["loc"] = l.location;
        x["val"] = is_write(l.op.kind) ? l.op.value : l.result;
        if (l.op.update)
            x["upd"] = format_update(*l.op.update);
        auto t = g.tags.find(e);
        if (t != g.tags.end())
            x["tag"] = format_tag(t->second);
        evs.push_back(x);
    }
    j["events"] = evs;
    j["po"] = to_json(g.po);
    j["rf"] = to_json(g.rf);
    j["mo"] = to_json(g.mo);
    j["rmw"] = to_json(g.rmw);
    return j;
}

namespace detail {

inline ExecutionGraph graph_from_json_unchecked(const nlohmann::json& j)
{
    ExecutionGraph g;
    auto fail = [](const std::string& m) { throw ParseError(m, 0, 0); };
    if (!j.is_object() || !j.contains("events"))
        fail("graph json needs an events array");
    if (j.value("format", std::string("rmmlab-graph")) != "rmmlab-graph")
        fail("not an rmmlab-graph document");
    if (j.value("version", 1) != 1)
        fail("unsupported graph json version");
    for (auto& x : j.at("events")) {
        auto k = parse_op_kind(x.at("op").get<std::string>());
        if (!k)
            fail("unknown operation kind");
        EventId id{x.at("thread").get<ThreadId>(), x.at("index").get<int>()};
        Label l{id.thread, x.at("loc").get<Loc>(), 0, Operation{*k, 0, std::nullopt}};
        Value v = x.at("val").get<Value>();
        if (is_write(*k))
            l.op.value = v;
        else
            l.result = v;
        if (x.contains("upd")) {
            auto f = parse_update(x.at("upd").get<std::string>());
            if (!f)
                fail("bad update");
            l.op.update = *f;
        }
        if (x.contains("tag")) {
            auto t = parse_tag(x.at("tag").get<std::string>());
            if (!t)
                fail("bad tag");
            g.tags[id] = *t;
        }
        if (!g.lab.emplace(id, l).second)
            fail("duplicate event " + id.str());
    }
    auto edges = [&](const char* name, Relation& r) {
        if (!j.contains(name))
            return;
        for (auto& p : j.at(name)) {
            auto a = parse_event_id(p.at(0).get<std::string>());
            auto b = parse_event_id(p.at(1).get<std::string>());
            if (!a || !b)
                fail("bad edge");
            r.emplace(*a, *b);
        }
    };
    edges("po", g.po);
    edges("rf", g.rf);
    edges("mo", g.mo);
    edges("rmw", g.rmw);
    return g;
}

} // namespace detail

/// Malformed documents raise ParseError, never a json exception.
inline ExecutionGraph graph_from_json(const nlohmann::json& j)
{
    try {
        return detail::graph_from_json_unchecked(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("graph json: ") + e.what(), 0, 0);
    }
}

} // namespace rmmlab

#endif
