#pragma once

#include "hgfm/analysis.hpp"
#include "hgfm/scenario.hpp"
#include "hgfm/sim.hpp"

#include <json.hpp>

#include <optional>
#include <ostream>
#include <string>

namespace hgfm {

enum class OutputFormat { Text, Machine };

struct CliRequest {
    std::string scenario;
    std::string out_dir;          // empty: no files written
    std::string command = "check";  // check, eig, steady, simulate, report, dump
    bool n_minus_one = false;
    std::optional<double> gdc_scale;
    std::optional<double> step;
    std::optional<double> t_end;
    std::string model = "linear";  // linear or nonlinear
    OutputFormat format = OutputFormat::Text;
};

// Serialization of analysis results. Every document carries a "verdict" of PASS or FAIL.
[[nodiscard]] nlohmann::json to_json(const StabilityReport& report, const SystemModel& model);
[[nodiscard]] nlohmann::json spectrum_json(const SpectrumResult& s);
[[nodiscard]] nlohmann::json steady_json(const SystemModel& model, const Scenario& scenario,
                                         const ScenarioRun& run);
[[nodiscard]] nlohmann::json metrics_json(const std::vector<FrequencyMetrics>& m);
[[nodiscard]] nlohmann::json advisory_json(const SystemModel& model, double delta_omega_max = 0.01,
                                           double delta_v_max = 0.05);

// Human summary table for a report document produced by run_cli.
void write_summary(const nlohmann::json& doc, std::ostream& os);

// Runs one command. Returns 0 when every verdict is PASS, 1 on a FAIL verdict and 2 on an error;
// errors are written to err as one JSON record per line.
int run_cli(const CliRequest& request, std::ostream& out, std::ostream& err);

}  // namespace hgfm
