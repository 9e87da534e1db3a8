#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "rmmlab/graph_io.hpp"
#include "rmmlab/relations.hpp"
#include "support.hpp"

using namespace rmmlab;
using namespace rmmlab::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

/// Runs the CLI from the corpus directory so relative paths stay stable.
Run cli(const std::string& args)
{
    std::string cmd = "cd '" + std::string(RMMLAB_CORPUS) + "' && '" + RMMLAB_CLI + "' " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p)
        return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0)
        r.out.append(buf.data(), n);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

void expect_golden(const std::string& name, const std::string& actual)
{
    fs::path p = fs::path(RMMLAB_GOLDEN) / name;
    if (const char* u = std::getenv("RMMLAB_UPDATE_GOLDEN"); u && std::string(u) == "1") {
        std::ofstream(p, std::ios::binary) << actual;
        return;
    }
    ASSERT_TRUE(fs::exists(p)) << p;
    EXPECT_EQ(read_file(p.string()), actual) << name;
}

} // namespace

TEST(Cli, LoadBufferingUnderEachModel)
{
    for (auto f : {"lb.lit", "lbf.lit", "lbd.lit"}) {
        auto r = cli(std::string("check ") + f + " --model c20");
        EXPECT_EQ(r.code, 0) << f;
        EXPECT_EQ(r.out.rfind(std::string(f) + ": observable\n", 0), 0u) << r.out;
    }
    for (auto f : {"lb.lit", "lbf.lit"}) {
        auto r = cli(std::string("check ") + f + " --model yc20");
        EXPECT_EQ(r.code, 0);
        EXPECT_EQ(r.out.rfind(std::string(f) + ": observable\n", 0), 0u) << r.out;
    }
    auto r = cli("check lbd.lit --model yc20");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("lbd.lit: unobservable(bounded)\n", 0), 0u) << r.out;
    r = cli("check lbd.lit --model xc20 --max-re-exec 3");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("unobservable(bounded)"), std::string::npos);
}

TEST(Cli, JsonOutputMatchesGolden)
{
    for (auto f : {"lb", "lbd", "lbf"})
        for (auto m : {"c20", "yc20"}) {
            auto r = cli(std::string("check ") + f + ".lit --model " + m + " --output json");
            ASSERT_EQ(r.code, 0);
            auto j = nlohmann::json::parse(r.out);
            EXPECT_EQ(j.at("format"), "rmmlab-result");
            EXPECT_EQ(j.at("version"), 1);
            expect_golden(std::string("cli-check-") + f + "-" + m + ".json", r.out);
        }
    auto g = cli("graph --consistency fig2.graph --output json");
    ASSERT_EQ(g.code, 0);
    expect_golden("cli-graph-fig2.json", g.out);
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(cli("check nosuch.lit").code, 2);
    EXPECT_EQ(cli("").code, 2);
    EXPECT_EQ(cli("check lb.lit --model c11").code, 2);
    EXPECT_EQ(cli("check fig2.graph").code, 2); // not a program
    EXPECT_EQ(cli("check lb.lit --max-events 3").code, 3);
    EXPECT_EQ(cli("arc --model xc20").code, 2);
    EXPECT_EQ(cli("arc --clones 9").code, 2);
    EXPECT_EQ(cli("--help").code, 0);
    EXPECT_EQ(cli("check lb.lit --jobs 4").code, 0);
}

TEST(Cli, GraphConsistency)
{
    auto r = cli("graph --consistency fig2.graph");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("well formed, consistent"), std::string::npos);
    EXPECT_NE(r.out.find("porf cycle: yes"), std::string::npos);
    EXPECT_NE(r.out.find("sw empty: yes"), std::string::npos);
    EXPECT_EQ(cli("graph fig2.graph").code, 2);

    fs::path bad = fs::temp_directory_path() / "rmmlab-cli-incoherent.graph";
    std::ofstream(bad) << "event 0 0 WriteNA loc=1 val=0\n"
                          "event 1 0 WriteRlx loc=1 val=1\n"
                          "event 1 1 ReadRlx loc=1 val=0\n"
                          "po 0.0 1.0\npo 0.0 1.1\npo 1.0 1.1\nrf 0.0 1.1\nmo 0.0 1.0\n";
    auto b = cli("graph --consistency " + bad.string());
    EXPECT_EQ(b.code, 1);
    EXPECT_NE(b.out.find("CoherenceViolation"), std::string::npos);
    fs::remove(bad);
}

TEST(Cli, EnumerateEmitsParsableGraphs)
{
    fs::path dir = fs::temp_directory_path() / "rmmlab-cli-emit";
    fs::remove_all(dir);
    auto r = cli("enumerate lb.lit --emit-graphs " + dir.string());
    ASSERT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j.at("executions"), 4);
    std::size_t n = 0;
    for (auto& e : fs::directory_iterator(dir)) {
        auto g = parse_graph(read_file(e.path().string()));
        EXPECT_TRUE(check_well_formed(g).ok);
        EXPECT_TRUE(is_consistent(g));
        ++n;
    }
    EXPECT_EQ(n, 4u);
    fs::remove_all(dir);
}

TEST(Cli, ReachReportsTraceOrBound)
{
    auto r = cli("reach lb.lit --target fig2.graph --output json");
    ASSERT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j.at("verdict"), "constructible");
    EXPECT_EQ(j.at("trace").at("format"), "rmmlab-trace");
    auto n = cli("reach lb.lit --target fig2.graph --max-re-exec 0");
    EXPECT_EQ(n.code, 0);
    EXPECT_EQ(n.out.rfind("NotWithinBounds", 0), 0u) << n.out;
}

TEST(Cli, OpsemAndArc)
{
    auto o = cli("opsem arc1.lit");
    EXPECT_EQ(o.code, 0);
    EXPECT_NE(o.out.find("safe"), std::string::npos);
    fs::path df = fs::temp_directory_path() / "rmmlab-cli-df.lit";
    std::ofstream(df) << "thread {\n  let a = cons(0) in\n  free(a);\n  free(a)\n}\n";
    auto u = cli("opsem " + df.string());
    EXPECT_EQ(u.code, 1);
    EXPECT_NE(u.out.find("unsafe"), std::string::npos);
    fs::remove(df);
    auto a = cli("arc --clones 1 --output json");
    ASSERT_EQ(a.code, 0);
    auto j = nlohmann::json::parse(a.out);
    EXPECT_EQ(j.at("all_hold"), true);
    EXPECT_EQ(j.at("executions"), 2);
}
