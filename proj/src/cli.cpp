#include "hgfm/cli.hpp"

#include "hgfm/control.hpp"
#include "hgfm/error.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace hgfm {

namespace {

using json = nlohmann::json;

const char* verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json syncac_json(const SyncAcResult& s) {
    json m = json::array();
    for (const auto& [k, l] : s.matches) m.push_back({k, l});
    return {{"pass", s.pass},
            {"witness", s.witness ? json(*s.witness) : json(nullptr)},
            {"failing", s.failing},
            {"matches", m}};
}

const char* relaxation_name(Cond1Relaxation r) {
    switch (r) {
        case Cond1Relaxation::None: return "none";
        case Cond1Relaxation::PointToPoint: return "point_to_point";
        case Cond1Relaxation::SingleCoupling: return "single_coupling";
    }
    return "none";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::ValidationError, "cannot write '" + path.string() + "'");
    f << content;
}

}  // namespace

json to_json(const StabilityReport& r, const SystemModel& model) {
    json c1 = json::array();
    for (const auto& s : r.cond1.subnets) {
        c1.push_back({{"dc_subnet", s.subnet},
                      {"converters", s.converters},
                      {"k_omega", s.k_omega},
                      {"equal", s.equal},
                      {"relaxation", relaxation_name(s.relaxation)},
                      {"pass", s.pass}});
    }
    json c2 = json::array();
    for (const auto& e : r.cond2.entries) {
        c2.push_back({{"converter", e.converter},
                      {"mode", to_string(e.mode)},
                      {"k_p", e.k_p},
                      {"bound", finite_or_null(e.bound)},
                      {"margin", e.margin},
                      {"pass", e.pass}});
    }
    json c5 = json::array();
    for (const auto& s : r.cond5.subnets) {
        json e = {{"ac_subnet", s.subnet}, {"nodes", s.nodes}, {"pass", s.pass}, {"via", s.via}};
        if (!s.shortcut.empty()) {
            e["shortcut"] = s.shortcut;
        } else {
            e["case_i"] = syncac_json(s.case_i);
            e["case_ii"] = syncac_json(s.case_ii);
        }
        c5.push_back(e);
    }
    json lemma = json::array();
    for (const auto& l : r.lemma1) {
        lemma.push_back({{"dc_subnet", l.subnet},
                         {"k_omega", l.k_omega},
                         {"four_k_omega", 4.0 * l.k_omega},
                         {"gershgorin", l.gershgorin},
                         {"spectral", l.spectral}});
    }
    json doc;
    doc["cond1"] = {{"verdict", verdict(r.cond1.pass)},
                    {"strict", verdict(r.cond1.strict_pass)},
                    {"subnets", c1},
                    {"witness", r.cond1.witness}};
    doc["cond2"] = {{"verdict", verdict(r.cond2.pass)}, {"entries", c2}, {"lemma", lemma}};
    doc["cond3"] = {{"verdict", verdict(r.cond3.pass)},
                    {"n_r", r.cond3.n_r},
                    {"n_pv", r.cond3.n_pv},
                    {"n_w", r.cond3.n_w}};
    doc["cond4_5"] = {{"verdict", verdict(r.cond5.pass)},
                      {"subnets", c5},
                      {"witness", r.cond5.witness ? json(*r.cond5.witness) : json(nullptr)}};
    bool pass = r.conditions_pass();
    if (r.lasalle.evaluated) {
        doc["lasalle"] = {{"verdict", verdict(r.lasalle.holds)},
                          {"min_eig_M", r.lasalle.min_eig_M},
                          {"max_eig_S", r.lasalle.max_eig_S},
                          {"max_sampled_rate", r.lasalle.max_sampled_rate}};
        pass = pass && r.lasalle.holds;
    } else {
        doc["lasalle"] = {{"verdict", "SKIPPED"}, {"reason", r.lasalle.reason}};
    }
    if (!r.n_minus_one.empty()) {
        json n1 = json::array();
        bool all = true;
        for (const auto& e : r.n_minus_one) {
            n1.push_back({{"removed", e.removed},
                          {"kind", e.kind},
                          {"pass", e.pass},
                          {"witness", e.witness ? json(*e.witness) : json(nullptr)}});
            all = all && e.pass;
        }
        doc["n_minus_one"] = {{"verdict", verdict(all)}, {"contingencies", n1}};
        pass = pass && all;
    }
    doc["spectrum"] = {{"max_real_restricted", r.spectrum.max_real_restricted},
                       {"stable", r.spectrum.stable}};
    doc["advisory"] = advisory_json(model);
    doc["verdict"] = verdict(pass);
    return doc;
}

json spectrum_json(const SpectrumResult& s) {
    auto list = [](const std::vector<std::complex<double>>& ev) {
        json a = json::array();
        for (const auto& z : ev) a.push_back({z.real(), z.imag()});
        return a;
    };
    return {{"verdict", verdict(s.stable)},
            {"max_real_restricted", s.max_real_restricted},
            {"cycle_dimension", s.cycle_dimension},
            {"zs_dimension", s.zs_dimension},
            {"restricted", list(s.restricted)},
            {"full", list(s.full)}};
}

json steady_json(const SystemModel& model, const Scenario& scenario, const ScenarioRun& run) {
    const Eigen::VectorXd p_d = disturbance_vector(model.system.graph, run.disturbances);
    const SteadyStateResult ss = steady_state(model, p_d);
    const DroopSummary droops = effective_droops(model);
    const double w_ref = quasi_sync_frequency(droops, p_d);
    const auto predicted = quasi_sync_node_frequencies(model, droops, w_ref);
    const auto actual = steady_frequencies(model, ss.x, p_d);

    json x = json::object();
    const auto& names = model.state_space.layout.names;
    for (std::size_t i = 0; i < names.size(); ++i) x[names[i]] = ss.x(static_cast<long>(i));
    json freq = json::array();
    double worst = 0.0;
    for (const auto& [node, w] : actual) {
        const double p = predicted.at(node);
        worst = std::max(worst, std::abs(w - p));
        freq.push_back({{"node", node}, {"steady", w}, {"quasi_sync", p}, {"difference", w - p}});
    }
    json kappa = json::array();
    for (const auto& e : droops.entries) kappa.push_back({{"node", e.node}, {"kind", e.kind}, {"kappa", e.kappa}});

    // Steady frequency of the reference node as the dc conductances grow.
    json sweep = json::array();
    std::string ref_node;
    if (!predicted.empty()) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [node, p] : predicted) {
            if (std::abs(p - w_ref) < best) {
                best = std::abs(p - w_ref);
                ref_node = node;
            }
        }
    }
    for (double s : run.gdc_scales) {
        const ScenarioRun scaled = build_run(scenario, s);
        const SystemModel sm = build_model(scaled.system);
        const Eigen::VectorXd pd = disturbance_vector(sm.system.graph, scaled.disturbances);
        const auto f = steady_frequencies(sm, steady_state(sm, pd).x, pd);
        sweep.push_back({{"gdc_scale", s}, {"node", ref_node}, {"steady", f.at(ref_node)},
                         {"error", f.at(ref_node) - w_ref}});
    }
    return {{"verdict", "PASS"},
            {"residual", ss.residual},
            {"x", x},
            {"D", droops.D},
            {"omega_ref", w_ref},
            {"kappa", kappa},
            {"frequencies", freq},
            {"max_quasi_sync_difference", worst},
            {"gdc_sweep", sweep}};
}

json metrics_json(const std::vector<FrequencyMetrics>& m) {
    json a = json::array();
    for (const auto& e : m) {
        a.push_back({{"node", e.node},
                     {"rocof", e.rocof},
                     {"nadir", e.nadir},
                     {"t_nadir", e.t_nadir},
                     {"settling", e.settling}});
    }
    return a;
}

json advisory_json(const SystemModel& model, double delta_omega_max, double delta_v_max) {
    json a = json::array();
    for (const auto& g : check_gain_bounds(model.system.gains, delta_omega_max, delta_v_max)) {
        if (g.exceeds) a.push_back({{"converter", g.converter}, {"k_omega", g.k_omega}, {"bound", g.bound}});
    }
    return {{"delta_omega_max", delta_omega_max},
            {"delta_v_max", delta_v_max},
            {"k_omega_max", k_omega_max(delta_omega_max, delta_v_max)},
            {"exceeding", a}};
}

void write_summary(const json& doc, std::ostream& os) {
    os << "scenario " << doc.value("scenario", std::string("?")) << "  command " << doc.value("command", std::string("?"))
       << "\n";
    auto row = [&](const std::string& name, const std::string& v, const std::string& detail) {
        os << "  " << std::left << std::setw(14) << name << std::setw(8) << v << detail << "\n";
    };
    if (doc.contains("check")) {
        const json& c = doc.at("check");
        {
            std::ostringstream d;
            d << c["cond1"]["subnets"].size() << " dc subnets, strict " << c["cond1"]["strict"].get<std::string>();
            row("cond1", c["cond1"]["verdict"], d.str());
        }
        {
            double margin = std::numeric_limits<double>::infinity();
            std::string who;
            for (const auto& e : c["cond2"]["entries"]) {
                if (e["margin"].get<double>() < margin) {
                    margin = e["margin"].get<double>();
                    who = e["converter"].get<std::string>();
                }
            }
            std::ostringstream d;
            if (!who.empty()) d << "smallest margin " << margin << " at " << who;
            row("cond2", c["cond2"]["verdict"], d.str());
        }
        {
            std::ostringstream d;
            d << "|N_r| " << c["cond3"]["n_r"] << ", |N_pv| " << c["cond3"]["n_pv"] << ", |N_w| " << c["cond3"]["n_w"];
            row("cond3", c["cond3"]["verdict"], d.str());
        }
        {
            std::string d;
            if (!c["cond4_5"]["witness"].is_null()) d = "witness " + c["cond4_5"]["witness"].get<std::string>();
            row("cond4/5", c["cond4_5"]["verdict"], d);
        }
        {
            const json& l = c["lasalle"];
            std::ostringstream d;
            if (l["verdict"] == "SKIPPED") {
                d << l["reason"].get<std::string>();
            } else {
                d << "max eig S " << l["max_eig_S"].get<double>();
            }
            row("lasalle", l["verdict"], d.str());
        }
        if (c.contains("n_minus_one")) {
            std::size_t failing = 0;
            for (const auto& e : c["n_minus_one"]["contingencies"]) failing += e["pass"].get<bool>() ? 0 : 1;
            row("n-1", c["n_minus_one"]["verdict"],
                std::to_string(failing) + " of " + std::to_string(c["n_minus_one"]["contingencies"].size()) +
                    " contingencies fail");
        }
        for (const auto& a : c["advisory"]["exceeding"]) {
            std::ostringstream d;
            d << a["converter"].get<std::string>() << " k_omega " << a["k_omega"].get<double>() << " > "
              << a["bound"].get<double>();
            row("advisory", "NOTE", d.str());
        }
    }
    if (doc.contains("eig")) {
        std::ostringstream d;
        d << "max Re " << doc["eig"]["max_real_restricted"].get<double>() << " over "
          << doc["eig"]["restricted"].size() << " modes";
        row("spectrum", doc["eig"]["verdict"], d.str());
    }
    if (doc.contains("steady")) {
        std::ostringstream d;
        d << "omega_ref " << doc["steady"]["omega_ref"].get<double>() << ", D " << doc["steady"]["D"].get<double>()
          << ", max quasi-sync difference " << doc["steady"]["max_quasi_sync_difference"].get<double>();
        row("steady", doc["steady"]["verdict"], d.str());
        for (const auto& s : doc["steady"]["gdc_sweep"]) {
            std::ostringstream e;
            e << "g_dc x" << s["gdc_scale"].get<double>() << ": " << s["steady"].get<double>() << " (error "
              << s["error"].get<double>() << ")";
            row("", "", e.str());
        }
    }
    if (doc.contains("simulate")) {
        row("simulate", doc["simulate"]["verdict"], doc["simulate"]["model"].get<std::string>() + " model");
        for (const auto& m : doc["simulate"]["metrics"]) {
            std::ostringstream e;
            e << m["node"].get<std::string>() << ": rocof " << m["rocof"].get<double>() << ", nadir "
              << m["nadir"].get<double>() << ", settling " << m["settling"].get<double>();
            row("", "", e.str());
        }
    }
    os << "verdict " << doc.value("verdict", std::string("?")) << "\n";
}

int run_cli(const CliRequest& req, std::ostream& out, std::ostream& err) {
    static const std::vector<std::string> commands{"check", "eig", "steady", "simulate", "report", "dump"};
    try {
        if (std::find(commands.begin(), commands.end(), req.command) == commands.end()) {
            throw Error(ErrorCode::ValidationError, "unknown command '" + req.command + "'");
        }
        if (req.model != "linear" && req.model != "nonlinear") {
            throw Error(ErrorCode::ValidationError, "unknown model '" + req.model + "'");
        }
        const Scenario scenario = load_scenario(req.scenario);
        ScenarioRun run = build_run(scenario, req.gdc_scale.value_or(1.0));
        if (req.n_minus_one) run.analysis.n_minus_one = true;
        if (req.step) run.simulation.h = *req.step;
        if (req.t_end) run.simulation.t_end = *req.t_end;
        if (!(run.simulation.h > 0.0) || !(run.simulation.t_end > 0.0)) {
            throw Error(ErrorCode::ValidationError, "step and end time must be positive");
        }
        const SystemModel model = build_model(run.system);

        std::filesystem::path dir;
        if (!req.out_dir.empty()) {
            dir = req.out_dir;
            std::filesystem::create_directories(dir);
            write_file(dir / "scenario.normalized.json", dump_scenario(scenario));
        }

        if (req.command == "dump") {
            const std::string text = dump_state_space(model.state_space);
            if (!dir.empty()) write_file(dir / "state_space.txt", text);
            out << text;
            return 0;
        }

        const bool all = req.command == "report";
        json doc;
        doc["scenario"] = scenario.name();
        doc["command"] = req.command;
        bool pass = true;
        if (all || req.command == "check") {
            doc["check"] = to_json(analyze(model, run.analysis), model);
            pass = pass && doc["check"]["verdict"] == "PASS";
        }
        if (all || req.command == "eig") {
            doc["eig"] = spectrum_json(spectrum(model));
            pass = pass && doc["eig"]["verdict"] == "PASS";
        }
        if (all || req.command == "steady") {
            doc["steady"] = steady_json(model, scenario, run);
        }
        if (all || req.command == "simulate") {
            const Trajectory traj = req.model == "linear"
                                        ? simulate_linear(model, run.disturbances, run.simulation)
                                        : simulate_nonlinear(model, run.disturbances, run.simulation);
            doc["simulate"] = {{"verdict", "PASS"},
                               {"model", req.model},
                               {"h", run.simulation.h},
                               {"t_end", run.simulation.t_end},
                               {"rocof_window", run.rocof_window},
                               {"metrics", metrics_json(metrics(traj, run.monitored, run.rocof_window))}};
            if (!dir.empty()) {
                std::ofstream f(dir / "trajectory.csv", std::ios::binary);
                write_csv(traj, f);
                doc["simulate"]["trajectory"] = "trajectory.csv";
            }
        }
        doc["verdict"] = verdict(pass);
        if (!dir.empty()) write_file(dir / "report.json", doc.dump(2) + "\n");
        if (req.format == OutputFormat::Machine) {
            out << doc.dump(2) << "\n";
        } else {
            write_summary(doc, out);
        }
        return pass ? 0 : 1;
    } catch (const Error& e) {
        err << json{{"error", to_string(e.code())}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }
}

}  // namespace hgfm
