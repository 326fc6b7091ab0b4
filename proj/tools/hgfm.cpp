#include "hgfm/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Stability checks and simulation for hybrid ac/dc grids with dual-port grid-forming converters"};
    hgfm::CliRequest req;
    double gdc = 0.0, step = 0.0, t_end = 0.0;
    std::string format = "text";
    app.add_option("--scenario", req.scenario, "scenario file")->required()->check(CLI::ExistingFile);
    app.add_option("--out", req.out_dir, "output directory");
    app.add_option("--command", req.command, "command to run")
        ->check(CLI::IsMember({"check", "eig", "steady", "simulate", "report", "dump"}));
    app.add_flag("--n-minus-one", req.n_minus_one, "sweep single node and line removals");
    auto* gdc_opt = app.add_option("--gdc-scale", gdc, "factor applied to every dc conductance");
    auto* step_opt = app.add_option("--step", step, "integration step in seconds");
    auto* end_opt = app.add_option("--t-end", t_end, "simulation end time in seconds");
    app.add_option("--model", req.model, "simulation model")->check(CLI::IsMember({"linear", "nonlinear"}));
    app.add_option("--format", format, "stdout format")->check(CLI::IsMember({"text", "machine"}));
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    if (*gdc_opt) req.gdc_scale = gdc;
    if (*step_opt) req.step = step;
    if (*end_opt) req.t_end = t_end;
    req.format = format == "machine" ? hgfm::OutputFormat::Machine : hgfm::OutputFormat::Text;
    return hgfm::run_cli(req, std::cout, std::cerr);
}
