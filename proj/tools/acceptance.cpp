// Acceptance runner: one PASS/FAIL line per criterion, exit 0 iff all pass.
// RMMLAB_CORPUS and RMMLAB_GOLDEN point at the bundled corpus and golden files.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "rmmlab/arc.hpp"
#include "rmmlab/enumerate.hpp"
#include "rmmlab/graph_io.hpp"
#include "rmmlab/opsem.hpp"
#include "rmmlab/syntax.hpp"
#include "rmmlab/tied.hpp"
#include "rmmlab/xmm.hpp"

#include "../tests/oracles.hpp"
#include "../tests/support.hpp"

using namespace rmmlab;
using namespace rmmlab::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream why;
    std::string note;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            if (!pass)
                why << "; ";
            why << what;
            pass = false;
        }
    }
};

Bounds litmus_bounds()
{
    Bounds b;
    b.max_events = 12;
    return b;
}

void litmus(Outcome& o)
{
    for (auto f : {"lb.lit", "lbf.lit", "lbd.lit"})
        o.require(check_litmus(parse_program(corpus(f))).observable, std::string(f) + " not observable under c20");
    for (auto f : {"lb.lit", "lbf.lit"}) {
        auto p = parse_program(corpus(f));
        auto target = check_litmus(p).witnesses.at(0).graph;
        o.require(target.size() <= 12, std::string(f) + " witness exceeds 12 events");
        auto r = ymm_reachable(p, target, litmus_bounds(), 1);
        o.require(r.constructible && validate_trace(r.trace, Model::YC20),
                  std::string(f) + " not constructible under yc20");
    }
    auto p = parse_program(corpus("lbd.lit"));
    auto target = check_litmus(p).witnesses.at(0).graph;
    o.require(!ymm_reachable(p, target, litmus_bounds(), 3).constructible, "lbd.lit constructible under yc20");
}

void fig2(Outcome& o)
{
    auto g = parse_graph(corpus("fig2.graph"));
    o.require(check_well_formed(g).ok, "not well formed");
    o.require(is_consistent(g), "not consistent");
    o.require(has_porf_cycle(g), "no porf cycle");
    o.require(derive_sw(g).empty(), "sw not empty");
}

void lemmas(Outcome& o)
{
    o.require(check_lemma_decrement(6).holds, "decrement lemma fails");
    o.require(check_lemma_fence(8).holds, "fence lemma fails");
    std::vector<Value> vals;
    for (Value v = -2; v <= 5; ++v)
        vals.push_back(v);
    o.require(check_arc_sufficiency(vals, 8).holds(), "sufficiency fails");
    auto relaxed = check_arc_sufficiency(vals, 8, arc_mutation::with_relaxed_decrement());
    o.require(!relaxed.result.sufficient && relaxed.result.counterexample.has_value(),
              "with_relaxed_decrement has no counterexample");
    auto zero = check_arc_sufficiency(vals, 8, arc_mutation::dec_pre_zero());
    o.require(!zero.result.sufficient && zero.result.counterexample.has_value(),
              "dec_pre_zero has no counterexample");
}

void arc(Outcome& o)
{
    for (int clones : {0, 1, 2}) {
        auto sc = run_arc(clones, ArcModel::C20);
        o.require(sc.all_hold(), "clones=" + std::to_string(clones) + " scorecard fails");
        o.require(sc.filtered == 0, "clones=" + std::to_string(clones) + " filtered executions");
    }
}

void properties(Outcome& o)
{
    // monoid laws
    {
        std::mt19937_64 rng(seed() + 100);
        auto nat = [&] { return std::uniform_int_distribution<std::uint64_t>(0, 6)(rng); };
        auto bound = [&] {
            ThreadBoundMonoid<NatMonoid>::value_type m;
            int n = std::uniform_int_distribution<int>(0, 3)(rng);
            for (int i = 0; i < n; ++i)
                ThreadBoundMonoid<NatMonoid>::put(m, std::uniform_int_distribution<ThreadId>(1, 4)(rng), nat());
            return m;
        };
        constexpr int kCases = 10000;
        int bad = monoid_law_failures<NatMonoid>(nat, kCases);
        bad += monoid_law_failures<ProductMonoid<NatMonoid, NatMonoid>>(
            [&] { return std::pair{nat(), nat()}; }, kCases);
        bad += monoid_law_failures<ThreadBoundMonoid<NatMonoid>>(bound, kCases);
        bad += monoid_law_failures<TotalTiedMonoid<NatMonoid, NatMonoid>>(
            [&] { return TotalTiedMonoid<NatMonoid, NatMonoid>::value_type{nat(), bound()}; }, kCases);
        o.require(bad == 0, std::to_string(bad) + " monoid law failures");
        o.note += std::to_string(4 * kCases) + " monoid cases";
    }
    // hb/eco against naive closures, low/high round trip
    {
        std::mt19937_64 rng(seed() + 101);
        int bad_rel = 0, bad_lh = 0;
        for (int i = 0; i < 2000; ++i) {
            auto g = random_wf_graph(rng);
            bad_rel += g.size() > 12 || derive_hb(g) != naive_hb(g) || derive_eco(g) != naive_eco(g);
            auto low = to_low_level(g);
            bad_lh += !check_well_formed(low).ok || to_high_level(low, natural_update_fns(g)) != g;
        }
        o.require(bad_rel == 0, std::to_string(bad_rel) + " hb/eco mismatches");
        o.require(bad_lh == 0, std::to_string(bad_lh) + " low/high round-trip failures");
        o.note += ", 2000 random graphs";
    }
    // replay determinism on ARC prefixes and the four-state lemma
    {
        std::mt19937_64 rng(seed() + 102);
        int bad_replay = 0, bad_four = 0;
        std::size_t prefixes = 0, configurations = 0;
        for (int clones : {0, 1}) {
            auto p = build_arc_program(ArcScenario{clones, 42});
            for (auto& e : enumerate_executions(p, Bounds{64, 4, 64})) {
                bad_replay += check_replay_determinism(p, e.graph, event_set(e.graph)) < 1;
                auto lead = step_leaders(p, e.graph);
                for (int round = 0; round < 5; ++round) {
                    std::set<EventId> P;
                    for (auto& x : random_linearisation(e.graph, rng)) {
                        P.insert(x);
                        if (!closed_under_steps(lead, P))
                            continue;
                        auto conf = replay_prefix(p, e.graph, hb_order(e.graph, P));
                        bad_replay += !config_corresponds(p, e.graph, P, conf);
                        bad_four += !four_state_ok(conf);
                        ++prefixes;
                    }
                }
                auto v = explore_safety(p, GraphGuidedOracle{&e.graph});
                bad_four += static_cast<int>(v.four_state_violations) + !v.safe;
                configurations += v.states;
            }
            auto w = explore_safety(p, WitnessSearchOracle{});
            bad_four += static_cast<int>(w.four_state_violations) + !w.safe;
            configurations += w.states;
        }
        o.require(prefixes > 0 && configurations > 0, "no ARC prefixes explored");
        o.note += ", " + std::to_string(prefixes) + " replayed prefixes, " + std::to_string(configurations) +
                  " configurations";
        o.require(bad_replay == 0, std::to_string(bad_replay) + " replay failures");
        o.require(bad_four == 0, std::to_string(bad_four) + " four-state failures");
    }
    // release check on every validated plan
    {
        int bad = 0;
        std::size_t plans = 0;
        for (auto f : {"lb.lit", "lbf.lit", "lbd.lit"}) {
            auto p = parse_program(corpus(f));
            auto target = check_litmus(p).witnesses.at(0).graph;
            for (int k : {1, 2, 3}) {
                auto r = ymm_reachable(p, target, litmus_bounds(), k);
                bad += release_check_failures(r, target);
                plans += r.plans.size();
            }
        }
        o.require(bad == 0 && plans > 0, std::to_string(bad) + " release check failures");
        o.note += ", " + std::to_string(plans) + " plans";
    }
}

std::vector<std::string> corpus_files(const std::string& ext)
{
    std::vector<std::string> out;
    for (auto& e : fs::directory_iterator(RMMLAB_CORPUS))
        if (e.path().extension() == ext)
            out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

std::string golden(const std::string& name) { return read_file(std::string(RMMLAB_GOLDEN) + "/" + name); }

void formats(Outcome& o)
{
    for (auto& f : corpus_files(".graph")) {
        auto text = corpus(f);
        auto g = parse_graph(text);
        o.require(print_graph(g) == text, f + " text round trip");
        o.require(to_json(g).dump(2) + "\n" == golden(f + ".json"), f + " json golden");
        o.require(graph_from_json(nlohmann::json::parse(to_json(g).dump())) == g, f + " json round trip");
    }
    for (auto& f : corpus_files(".lit")) {
        auto text = corpus(f);
        o.require(print_program(parse_program(text)) == text, f + " round trip");
    }
    for (auto& f : corpus_files(".spec")) {
        auto text = corpus(f);
        auto specs = parse_specs(text);
        std::string out;
        for (std::size_t i = 0; i < specs.size(); ++i)
            out += (i ? "\n" : "") + print_spec(specs[i]);
        o.require(out == text, f + " round trip");
    }
    for (auto f : {"lb.lit", "lbd.lit", "lbf.lit"}) {
        std::string all;
        for (auto& e : enumerate_executions(parse_program(corpus(f))))
            all += print_graph(e.graph) + "--\n";
        o.require(all == golden(std::string(f) + ".executions"), std::string(f) + " executions golden");
    }
}

} // namespace

int main()
{
    struct Criterion {
        int id;
        std::string name;
        double limit_s;
        std::function<void(Outcome&)> run;
    };
    std::vector<Criterion> all{
        {1, "litmus verdicts under c20 and yc20", 5, litmus},
        {2, "fig2 graph is consistent with a porf cycle and no sw", 1, fig2},
        {3, "lemmas, sufficiency and mutation counterexamples", 60, lemmas},
        {4, "ARC end to end for clones 0..2", 120, arc},
        {5, "property suites", 0, properties},
        {6, "format round trips and golden files", 0, formats},
    };
    bool ok = true;
    for (auto& c : all) {
        Outcome o;
        auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && s > c.limit_s)
            o.require(false, "took " + std::to_string(s) + "s, limit " + std::to_string(c.limit_s) + "s");
        std::string detail = o.pass ? o.note : o.why.str();
        std::printf("criterion %d: %s (%.2fs) %s%s%s\n", c.id, o.pass ? "PASS" : "FAIL", s, c.name.c_str(),
                    detail.empty() ? "" : ": ", detail.c_str());
        ok = ok && o.pass;
    }
    return ok ? 0 : 1;
}
