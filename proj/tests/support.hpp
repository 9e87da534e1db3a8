// Shared helpers for the test suites: corpus access, seeded randomness and a
// generator of random well-formed graphs.
#pragma once

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "rmmlab/graph.hpp"

namespace rmmlab::testing {

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::string corpus(const std::string& name) { return read_file(std::string(RMMLAB_CORPUS) + "/" + name); }

/// RMMLAB_SEED overrides the default seed of every randomized harness.
inline std::uint64_t seed()
{
    if (const char* s = std::getenv("RMMLAB_SEED"))
        return std::strtoull(s, nullptr, 10);
    return 20240521;
}

struct GraphShape {
    int max_events = 12; // including init writes
    int max_threads = 3;
    int locations = 2;
    bool rmws = true;
    bool fences = true;
};

/// Random well-formed high-level graph. rf and mo are arbitrary (the graph
/// need not be consistent); values are fixed up so rf carries them.
inline ExecutionGraph random_wf_graph(std::mt19937_64& rng, const GraphShape& s = {})
{
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    ExecutionGraph g;
    int nloc = pick(1, s.locations);
    for (int l = 0; l < nloc; ++l)
        g.lab[{kInitThread, l}] = Label{kInitThread, l + 1, 0, Operation::write(OpKind::WriteNA, 0)};
    int budget = pick(1, s.max_events - nloc);
    int nthreads = pick(1, s.max_threads);
    std::vector<int> len(nthreads, 0);
    static const OpKind reads[] = {OpKind::ReadNA, OpKind::ReadRlx, OpKind::ReadAcq};
    static const OpKind writes[] = {OpKind::WriteNA, OpKind::WriteRlx, OpKind::WriteRel};
    static const OpKind rmws[] = {OpKind::RmwRlx, OpKind::RmwRel, OpKind::RmwAcq, OpKind::RmwAcqRel};
    for (int i = 0; i < budget; ++i) {
        ThreadId t = pick(1, nthreads);
        Loc l = pick(1, nloc);
        int kind = pick(0, (s.rmws ? 3 : 2) + (s.fences ? 1 : 0));
        Label lab{t, l, 0, {}};
        if (kind == 0)
            lab.op = Operation::read(reads[pick(0, 2)]);
        else if (kind == 1)
            lab.op = Operation::write(writes[pick(0, 2)], pick(1, 3));
        else if (kind == 2 && s.rmws)
            lab.op = Operation::rmw(rmws[pick(0, 3)], pick(0, 1) ? UpdateFn::add(pick(1, 2)) : UpdateFn::set(pick(1, 3)));
        else if (s.fences)
            lab.op = Operation::fence(pick(0, 1) ? OpKind::FenceAcq : OpKind::FenceRel);
        else
            lab.op = Operation::read(OpKind::ReadRlx);
        g.lab[{t, len[t - 1]++}] = lab;
    }
    rebuild_po(g);
    // mo: init first, then a random order of the location's writes
    std::map<Loc, std::vector<EventId>> ws;
    for (auto& [e, l] : g.lab)
        if (is_writelike(l.op.kind) && !e.is_init())
            ws[l.location].push_back(e);
    for (auto& [loc, v] : ws) {
        std::shuffle(v.begin(), v.end(), rng);
        v.insert(v.begin(), EventId{kInitThread, static_cast<int>(loc - 1)});
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = i + 1; j < v.size(); ++j)
                g.mo.emplace(v[i], v[j]);
    }
    // rf: each reader picks any same-location writer other than itself and
    // not po-after it
    for (auto& [e, l] : g.lab) {
        if (!is_readlike(l.op.kind))
            continue;
        std::vector<EventId> cand{EventId{kInitThread, static_cast<int>(l.location - 1)}};
        for (auto& w : ws[l.location])
            if (w != e && !g.po.count({e, w}))
                cand.push_back(w);
        g.rf.emplace(cand[pick(0, static_cast<int>(cand.size()) - 1)], e);
    }
    // values: RMWs whose source value cannot be resolved fall back to set:
    std::map<EventId, EventId> src;
    for (auto& [w, r] : g.rf)
        src[r] = w;
    std::set<EventId> done;
    for (auto& [e, l] : g.lab)
        if (!is_rmw(l.op.kind))
            done.insert(e);
    for (bool progress = true; progress;) {
        progress = false;
        for (auto& [e, l] : g.lab)
            if (!done.count(e) && done.count(src.at(e))) {
                l.result = g.lab.at(src.at(e)).written();
                done.insert(e);
                progress = true;
            }
    }
    for (auto& [e, l] : g.lab)
        if (is_rmw(l.op.kind) && !done.count(e)) {
            l.op.update = UpdateFn::set(l.op.update->apply(0));
            done.insert(e);
        }
    for (auto& [e, l] : g.lab)
        if (is_readlike(l.op.kind))
            l.result = g.lab.at(src.at(e)).written();
    return g;
}

} // namespace rmmlab::testing
