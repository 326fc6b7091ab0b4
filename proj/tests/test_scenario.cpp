#include <catch2/catch_amalgamated.hpp>

#include "hgfm/cli.hpp"
#include "hgfm/error.hpp"
#include "hgfm/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hgfm;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) { return std::string(HGFM_FIXTURE_DIR) + "/" + name; }

const std::vector<std::string> kFixtures = {"fig2.json",      "fig7-left.json",  "fig7-right.json",
                                            "fig8.json",      "hvdc-p2p.json",   "cond2-violation.json"};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ErrorCode code_of(const std::function<void()>& f, std::string* message = nullptr) {
    try {
        f();
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::DomainError;
}

nlohmann::json minimal() {
    return nlohmann::json::parse(R"({
        "nodes": [
            {"id": "G", "kind": "machine", "J": 5, "governor": {"T_g": 0.5, "k_g": 20}},
            {"id": "C1", "kind": "converter", "C": 0.02, "k_p": 0.001, "k_omega": 0.2},
            {"id": "C2", "kind": "converter", "C": 0.02, "k_p": 0.001, "k_omega": 0.2}
        ],
        "ac_edges": [{"from": "G", "to": "C1", "b": 10}, {"from": "G", "to": "C2", "b": 10}],
        "dc_edges": [{"from": "C1", "to": "C2", "g": 5}]
    })");
}

}  // namespace

TEST_CASE("fixtures survive a dump and reload unchanged", "[scenario]") {
    for (const auto& name : kFixtures) {
        INFO(name);
        const Scenario a = load_scenario(fixture(name));
        const std::string text = dump_scenario(a);
        const Scenario b = parse_scenario(text);
        CHECK(b.doc == a.doc);
        CHECK(dump_scenario(b) == text);
        CHECK_NOTHROW(build_run(b));
    }
}

TEST_CASE("defaults are filled in", "[scenario]") {
    const Scenario s = parse_scenario(minimal().dump());
    CHECK(s.name() == "unnamed");
    CHECK(s.doc["base"]["f_base_hz"] == 50.0);
    CHECK(s.doc["nodes"][1]["v_star"] == 1.0);
    CHECK(s.doc["nodes"][1]["cond2"] == "standard");
    CHECK(s.doc["simulation"]["h"] == 1e-3);
    const ScenarioRun run = build_run(s);
    CHECK(run.monitored == std::vector<std::string>{"G", "C1", "C2"});
    CHECK(run.gdc_scales == std::vector<double>{10.0, 100.0, 1000.0});
}

TEST_CASE("scenario errors name the offending field", "[scenario]") {
    auto j = minimal();
    j["nodes"][2].erase("k_omega");
    std::string msg;
    CHECK(code_of([&] { (void)parse_scenario(j.dump()); }, &msg) == ErrorCode::ValidationError);
    CHECK(msg.find("nodes[2].k_omega") != std::string::npos);

    j = minimal();
    j["nodes"][0]["inertia"] = 3;
    CHECK(code_of([&] { (void)parse_scenario(j.dump()); }, &msg) == ErrorCode::ValidationError);
    CHECK(msg.find("nodes[0].inertia") != std::string::npos);

    j = minimal();
    j["nodes"][1]["cond2"] = "loose";
    CHECK(code_of([&] { (void)parse_scenario(j.dump()); }) == ErrorCode::ValidationError);

    j = minimal();
    j["disturbances"] = {{{"time", 1.0}, {"node", "nowhere"}, {"dP", 0.1}}};
    const Scenario s = parse_scenario(j.dump());
    CHECK(code_of([&] { (void)build_run(s); }) != ErrorCode::ParseError);

    CHECK(code_of([] { (void)parse_scenario("{ not json"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { (void)load_scenario("/nonexistent/scenario.json"); }) == ErrorCode::ParseError);
}

TEST_CASE("fig2 topology", "[scenario]") {
    const ScenarioRun run = build_run(load_scenario(fixture("fig2.json")));
    const auto& g = run.system.graph;
    std::size_t pv = 0;
    for (const auto& [id, bus] : run.system.devices.buses) {
        if (std::holds_alternative<PvSource>(bus.source)) ++pv;
    }
    CHECK(pv == 5);
    const Decomposition dec = decompose_subnetworks(g);
    CHECK(dec.ac.size() == 4);
    // Converter-to-converter dc links: three HVDC links and the wind turbine back-to-back.
    // One HVDC link is embedded in AC2, the other two and the back-to-back join ac subnets.
    std::size_t links = 0, crossing = 0;
    for (const auto& e : g.dc_edges()) {
        if (g.node(e.from).kind == NodeKind::Converter && g.node(e.to).kind == NodeKind::Converter) {
            ++links;
            if (dec.ac_subnet_of[e.from] != dec.ac_subnet_of[e.to]) ++crossing;
        }
    }
    CHECK(links == 4);
    CHECK(crossing == 3);
}

TEST_CASE("gdc scale multiplies dc conductances", "[scenario]") {
    const Scenario s = load_scenario(fixture("hvdc-p2p.json"));
    const auto a = build_run(s, 1.0).system.graph.dc_edges();
    const auto b = build_run(s, 100.0).system.graph.dc_edges();
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k].weight == Catch::Approx(100.0 * a[k].weight));
    CHECK(code_of([&] { (void)build_run(s, 0.0); }) == ErrorCode::ValidationError);
}

TEST_CASE("reports and trajectories are deterministic", "[scenario][cli]") {
    const fs::path base = fs::temp_directory_path() / "hgfm_determinism";
    fs::remove_all(base);
    auto run_once = [&](const std::string& tag) {
        CliRequest req;
        req.scenario = fixture("fig8.json");
        req.out_dir = (base / tag).string();
        req.command = "report";
        req.t_end = 8.0;
        std::ostringstream out, err;
        const int code = run_cli(req, out, err);
        CHECK(code == 0);
        CHECK(err.str().empty());
        return base / tag;
    };
    const fs::path a = run_once("a");
    const fs::path b = run_once("b");
    for (const char* f : {"report.json", "trajectory.csv", "scenario.normalized.json"}) {
        INFO(f);
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    const auto normalized = load_scenario((a / "scenario.normalized.json").string());
    CHECK(normalized.doc == load_scenario(fixture("fig8.json")).doc);
    fs::remove_all(base);
}

TEST_CASE("cli exit codes", "[cli]") {
    const fs::path base = fs::temp_directory_path() / "hgfm_exit_codes";
    auto code = [&](const std::string& file, const std::string& command) {
        CliRequest req;
        req.scenario = file;
        req.out_dir = base.string();
        req.command = command;
        std::ostringstream out, err;
        return std::pair{run_cli(req, out, err), err.str()};
    };
    CHECK(code(fixture("fig7-left.json"), "check").first == 0);
    CHECK(code(fixture("fig7-right.json"), "check").first == 1);
    CHECK(code(fixture("cond2-violation.json"), "check").first == 1);
    const auto [rc, err] = code("/nonexistent.json", "check");
    CHECK(rc == 2);
    const auto j = nlohmann::json::parse(err);
    CHECK(j["error"] == "ParseError");
    fs::remove_all(base);
}
