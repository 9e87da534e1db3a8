// rmmlab command-line front end.
//
// Exit codes: 0 verdict computed, 1 property violated, 2 usage or parse
// error, 3 bound exceeded.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rmmlab/arc.hpp"
#include "rmmlab/enumerate.hpp"
#include "rmmlab/graph_io.hpp"
#include "rmmlab/opsem.hpp"
#include "rmmlab/relations.hpp"
#include "rmmlab/syntax.hpp"
#include "rmmlab/xmm.hpp"

using namespace rmmlab;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kViolation = 1, kUsage = 2, kBound = 3;

struct Usage : Error {
    using Error::Error;
};

struct RunConfig {
    std::string model = "c20";
    int max_events = 16;
    int max_threads = 64;
    int max_value_iterations = 0;
    int max_re_exec = 2;
    std::string output = "text";
    std::string emit_graphs;
    int jobs = 1;
    bool max_events_given = false;

    Bounds bounds() const { return Bounds{max_events, max_value_iterations, max_threads}; }
    bool as_json() const { return output == "json"; }
};

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Usage("cannot read " + path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

json envelope(const std::string& command)
{
    return json{{"format", "rmmlab-result"}, {"version", 1}, {"command", command}};
}

json bounds_json(const RunConfig& c)
{
    return json{{"max_events", c.max_events}, {"max_threads", c.max_threads}, {"max_re_exec", c.max_re_exec}};
}

/// Writes graphs as <dir>/<prefix>-NNN.graph and returns the paths.
std::vector<std::string> emit(const RunConfig& c, const std::string& prefix, const std::vector<ExecutionGraph>& gs)
{
    std::vector<std::string> paths;
    if (c.emit_graphs.empty())
        return paths;
    fs::create_directories(c.emit_graphs);
    for (std::size_t i = 0; i < gs.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "%s-%03zu.graph", prefix.c_str(), i);
        fs::path p = fs::path(c.emit_graphs) / name;
        std::ofstream(p, std::ios::binary) << print_graph(gs[i]);
        paths.push_back(p.string());
    }
    return paths;
}

Model weak_model(const std::string& m) { return m == "xc20" ? Model::XC20 : Model::YC20; }

Reachability reach_under(const std::string& model, const Program& p, const ExecutionGraph& target, const RunConfig& c)
{
    return model == "xc20" ? xmm_reachable(p, target, c.bounds(), c.max_re_exec)
                           : ymm_reachable(p, target, c.bounds(), c.max_re_exec);
}

// ---------------------------------------------------------------------------

int cmd_check(const RunConfig& c, const std::string& file)
{
    Program p = parse_program(slurp(file));
    auto all = enumerate_executions(p, c.bounds());
    std::vector<ExecutionGraph> witnesses;
    std::size_t racy = 0;
    for (auto& e : all) {
        if (find_data_races(e.graph).racy())
            ++racy;
        if (!p.postcondition || holds(p.postcondition, e.registers))
            witnesses.push_back(e.graph);
    }
    std::string verdict = witnesses.empty() ? "unobservable" : "observable";
    int constructible = -1;
    if (c.model != "c20" && !witnesses.empty()) {
        constructible = 0;
        for (auto& w : witnesses)
            if (reach_under(c.model, p, w, c).constructible) {
                constructible = 1;
                break;
            }
        verdict = constructible ? "observable" : "unobservable(bounded)";
    }
    auto paths = emit(c, "witness", witnesses);
    int code = racy ? kViolation : kOk;
    if (c.as_json()) {
        json j = envelope("check");
        j["file"] = file;
        j["name"] = p.name;
        j["model"] = c.model;
        j["verdict"] = verdict;
        j["consistent_executions"] = all.size();
        j["c20_witnesses"] = witnesses.size();
        j["racy_executions"] = racy;
        j["bounds"] = bounds_json(c);
        if (!paths.empty())
            j["emitted"] = paths;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << file << ": " << verdict << "\n";
        std::cout << "  model " << c.model << ", " << all.size() << " consistent executions, " << witnesses.size()
                  << " c20 witnesses";
        if (c.model != "c20")
            std::cout << ", max_re_exec=" << c.max_re_exec << ", max_events=" << c.max_events;
        std::cout << "\n";
        if (racy)
            std::cout << "  racy: " << racy << " executions contain a data race\n";
    }
    return code;
}

int cmd_enumerate(const RunConfig& c, const std::string& file)
{
    Program p = parse_program(slurp(file));
    auto all = enumerate_executions(p, c.bounds());
    std::vector<ExecutionGraph> gs;
    for (auto& e : all)
        gs.push_back(e.graph);
    auto paths = emit(c, "exec", gs);
    if (c.as_json() || !c.emit_graphs.empty()) {
        json j = envelope("enumerate");
        j["file"] = file;
        j["executions"] = all.size();
        if (paths.empty()) {
            json arr = json::array();
            for (auto& g : gs)
                arr.push_back(to_json(g));
            j["graphs"] = arr;
        } else {
            j["emitted"] = paths;
        }
        std::cout << j.dump(2) << "\n";
    } else {
        for (std::size_t i = 0; i < gs.size(); ++i)
            std::cout << "# execution " << i << "\n" << print_graph(gs[i]) << "\n";
        std::cout << "# " << gs.size() << " consistent executions\n";
    }
    return kOk;
}

int cmd_reach(const RunConfig& c, const std::string& file, const std::string& target_file)
{
    Program p = parse_program(slurp(file));
    ExecutionGraph target = parse_graph(slurp(target_file));
    if (!check_well_formed(target).ok)
        throw Usage("target graph is not well formed");
    std::string model = c.model == "c20" ? "yc20" : c.model;
    auto r = reach_under(model, p, target, c);
    if (r.constructible && !validate_trace(r.trace, weak_model(model)))
        throw Error("internal: construction trace failed validation");
    if (c.as_json()) {
        json j = envelope("reach");
        j["file"] = file;
        j["model"] = model;
        j["verdict"] = r.constructible ? "constructible" : "NotWithinBounds";
        j["bounds"] = bounds_json(c);
        j["universe"] = r.universe;
        if (r.constructible)
            j["trace"] = to_json(r.trace);
        std::cout << j.dump(2) << "\n";
    } else if (r.constructible) {
        std::cout << "constructible under " << model << " with " << r.trace.re_executions() << " re-executions\n";
        for (auto& s : r.trace.steps) {
            if (s.kind == ConstructionStep::Kind::Execute) {
                std::cout << "  execute " << s.added.str() << "\n";
            } else {
                std::cout << "  re-execute keeping";
                for (auto& e : s.plan.committed)
                    std::cout << " " << e.str();
                std::cout << "\n";
            }
        }
    } else {
        std::cout << "NotWithinBounds under " << model << " (max_re_exec=" << c.max_re_exec
                  << ", max_events=" << c.max_events << ", " << r.universe << " candidate graphs)\n";
    }
    return kOk;
}

int cmd_opsem(const RunConfig& c, const std::string& file, int witness_bound)
{
    Program p = parse_program(slurp(file));
    WitnessSearchOracle oracle;
    oracle.bound = witness_bound;
    auto v = explore_safety(p, oracle);
    if (c.as_json()) {
        json j = envelope("opsem");
        j["file"] = file;
        j["safe"] = v.safe;
        j["states"] = v.states;
        j["blocked"] = v.blocked_count;
        j["four_state_violations"] = v.four_state_violations;
        if (v.stuck_thread) {
            j["stuck_thread"] = *v.stuck_thread;
            json steps = json::array();
            for (auto& s : *v.stuck_trace)
                steps.push_back(json{{"thread", s.thread}, {"rule", to_string(s.rule)}});
            j["trace"] = steps;
        }
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << file << ": " << (v.safe ? "safe" : "unsafe") << " (" << v.states << " configurations)\n";
        if (v.stuck_thread) {
            std::cout << "  thread " << *v.stuck_thread << " is stuck after:\n";
            for (auto& s : *v.stuck_trace)
                std::cout << "    " << s.thread << " " << to_string(s.rule) << "\n";
        }
    }
    return v.safe && v.four_state_violations == 0 ? kOk : kViolation;
}

int cmd_arc(const RunConfig& c, int clones)
{
    if (c.model == "xc20")
        throw Usage("arc runs under c20 or yc20");
    if (clones < 0 || clones > 3)
        throw Usage("--clones must be between 0 and 3");
    Bounds b = c.bounds();
    if (!c.max_events_given)
        b.max_events = 64;
    b.max_value_iterations = 4;
    auto sc = run_arc(clones, c.model == "yc20" ? ArcModel::YC20 : ArcModel::C20, b);
    if (c.as_json()) {
        json j = envelope("arc");
        j["clones"] = clones;
        j["model"] = c.model;
        j["executions"] = sc.executions;
        j["filtered"] = sc.filtered;
        j["race_free"] = sc.race_free;
        j["grounded"] = sc.grounded;
        j["one_decrement_reads_one"] = sc.one_decrement_reads_one;
        j["safe"] = sc.safe;
        j["payload_before_free"] = sc.payload_before_free;
        if (sc.sufficiency)
            j["sufficient"] = sc.sufficiency->holds();
        j["all_hold"] = sc.all_hold();
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "ARC" << clones << " under " << c.model << ": " << (sc.all_hold() ? "all checks hold" : "FAILED")
                  << "\n";
        std::cout << "  executions " << sc.executions << " (filtered " << sc.filtered << ")\n";
        std::cout << "  race-free " << sc.race_free << ", grounded " << sc.grounded << ", one decrement reads 1 "
                  << sc.one_decrement_reads_one << ", safe " << sc.safe << ", payload before free "
                  << sc.payload_before_free << "\n";
        if (sc.sufficiency)
            std::cout << "  sufficiency " << (sc.sufficiency->holds() ? "holds" : "fails") << " at bound "
                      << sc.sufficiency->result.bound << "\n";
    }
    return sc.all_hold() ? kOk : kViolation;
}

int cmd_graph(const RunConfig& c, const std::string& file, bool consistency)
{
    if (!consistency)
        throw Usage("graph needs --consistency");
    ExecutionGraph g = parse_graph(slurp(file));
    auto wf = check_well_formed(g);
    ConsistencyVerdict cv;
    bool porf = false, sw_empty = false;
    RaceReport races;
    if (wf.ok) {
        cv = check_consistent(g);
        porf = has_porf_cycle(g);
        sw_empty = derive_sw(g).empty();
        races = find_data_races(g);
    }
    bool ok = wf.ok && cv.consistent;
    if (c.as_json()) {
        json j = envelope("graph");
        j["file"] = file;
        j["well_formed"] = wf.ok;
        json wv = json::array();
        for (auto& v : wf.violations)
            wv.push_back(json{{"rule", to_string(v.rule)}, {"pair", {v.pair.first.str(), v.pair.second.str()}}});
        j["wf_violations"] = wv;
        if (wf.ok) {
            j["consistent"] = cv.consistent;
            json rs = json::array();
            for (auto& r : cv.reasons)
                rs.push_back(json{{"kind", to_string(r.kind)}, {"pair", {r.first.str(), r.second.str()}}});
            j["reasons"] = rs;
            j["porf_cycle"] = porf;
            j["sw_empty"] = sw_empty;
            j["racy"] = races.racy();
        }
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << file << ": " << (wf.ok ? "well formed" : "not well formed");
        if (wf.ok)
            std::cout << ", " << (cv.consistent ? "consistent" : "inconsistent");
        std::cout << "\n";
        for (auto& v : wf.violations)
            std::cout << "  " << to_string(v.rule) << " " << v.pair.first.str() << " " << v.pair.second.str() << "\n";
        for (auto& r : cv.reasons)
            std::cout << "  " << to_string(r.kind) << " " << r.first.str() << " " << r.second.str() << "\n";
        if (wf.ok)
            std::cout << "  porf cycle: " << (porf ? "yes" : "no") << ", sw empty: " << (sw_empty ? "yes" : "no")
                      << ", racy: " << (races.racy() ? "yes" : "no") << "\n";
    }
    return ok ? kOk : kViolation;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"rmmlab: bounded checks for a repaired C20 memory model"};
    app.require_subcommand(1);
    app.fallthrough();
    app.footer("Exit codes: 0 verdict computed, 1 property violated, 2 usage or parse error, 3 bound exceeded.\n"
               "RMMLAB_SEED seeds the randomized test harnesses.");
    RunConfig c;
    app.add_option("--model", c.model, "Memory model")->check(CLI::IsMember({"c20", "yc20", "xc20"}))->capture_default_str();
    auto* me = app.add_option("--max-events", c.max_events, "Event bound per execution")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--max-threads", c.max_threads, "Thread bound")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--max-value-iterations", c.max_value_iterations, "Value fixpoint rounds (0: max-events)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--max-re-exec", c.max_re_exec, "Re-Execute steps allowed in yc20/xc20 search")
        ->check(CLI::NonNegativeNumber)->capture_default_str();
    app.add_option("--output", c.output, "Output format")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
    app.add_option("--emit-graphs", c.emit_graphs, "Directory for witness graphs");
    app.add_option("--jobs", c.jobs, "Worker threads (accepted; the search runs on one thread)")->check(CLI::PositiveNumber);

    std::string file, target;
    int witness_bound = 4, clones = 1;
    bool consistency = false;
    auto* check = app.add_subcommand("check", "Litmus verdict under the chosen model");
    check->add_option("file", file, "Litmus file")->required();
    auto* enumerate = app.add_subcommand("enumerate", "All consistent executions");
    enumerate->add_option("file", file, "Litmus file")->required();
    auto* reach = app.add_subcommand("reach", "Construct a target graph step by step");
    reach->add_option("file", file, "Litmus file")->required();
    reach->add_option("--target", target, "Target graph file")->required();
    auto* opsem = app.add_subcommand("opsem", "Explore the operational semantics for stuck states");
    opsem->add_option("file", file, "Program file")->required();
    opsem->add_option("--witness-bound", witness_bound, "Trace bound of the consistency oracle")->capture_default_str();
    auto* arc = app.add_subcommand("arc", "ARC scorecard");
    arc->add_option("--clones", clones, "Number of clones (0..3)")->capture_default_str();
    auto* graph = app.add_subcommand("graph", "Check a serialized graph");
    graph->add_option("file", file, "Graph file")->required();
    graph->add_flag("--consistency", consistency, "Well-formedness and consistency verdicts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }
    c.max_events_given = me->count() > 0;

    try {
        if (*check)
            return cmd_check(c, file);
        if (*enumerate)
            return cmd_enumerate(c, file);
        if (*reach)
            return cmd_reach(c, file, target);
        if (*opsem)
            return cmd_opsem(c, file, witness_bound);
        if (*arc)
            return cmd_arc(c, clones);
        if (*graph)
            return cmd_graph(c, file, consistency);
    } catch (const BoundExceeded& e) {
        std::cerr << "bound exceeded: " << e.what() << "\n";
        return kBound;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kUsage;
    } catch (const Usage& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NotHighLevel& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return kUsage;
}
