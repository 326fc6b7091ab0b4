#pragma once

#include "hgfm/analysis.hpp"
#include "hgfm/assembly.hpp"
#include "hgfm/sim.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace hgfm {

// A scenario is kept as its normalized JSON document: defaults filled in, fields validated.
// Dumping and reloading a normalized document is the identity.
struct Scenario {
    nlohmann::json doc;

    [[nodiscard]] std::string name() const;
};

[[nodiscard]] Scenario parse_scenario(const std::string& text);
[[nodiscard]] Scenario load_scenario(const std::string& path);
[[nodiscard]] std::string dump_scenario(const Scenario& scenario);

struct ScenarioRun {
    HybridSystem system;
    AnalysisOptions analysis;
    std::vector<Disturbance> disturbances;
    SimOptions simulation;
    std::vector<std::string> monitored;
    double rocof_window = 0.3;
    std::vector<double> gdc_scales;
};

// Builds the hybrid system; dc conductances are multiplied by gdc_scale.
[[nodiscard]] ScenarioRun build_run(const Scenario& scenario, double gdc_scale = 1.0);

}  // namespace hgfm
