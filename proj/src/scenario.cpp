#include "hgfm/scenario.hpp"

#include "hgfm/error.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace hgfm {

namespace {

using json = nlohmann::json;

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::ValidationError, path + ": " + what);
}

void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) invalid(path, "expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items()) {
        if (allowed.count(k) == 0) invalid(path + "." + k, "unknown field");
    }
}

double number(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) invalid(path + "." + key, "missing required number");
    const json& v = obj.at(key);
    if (!v.is_number()) invalid(path + "." + key, "expected a number");
    return v.get<double>();
}

double number_or(const json& obj, const char* key, const std::string& path, double fallback) {
    return obj.contains(key) ? number(obj, key, path) : fallback;
}

double positive(double v, const std::string& path) {
    if (!(v > 0.0)) invalid(path, "must be positive");
    return v;
}

double non_negative(double v, const std::string& path) {
    if (!(v >= 0.0)) invalid(path, "must be non-negative");
    return v;
}

double fraction(double v, const std::string& path) {
    if (!(v > 0.0 && v <= 1.0)) invalid(path, "must lie in (0, 1]");
    return v;
}

std::string text(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key) || !obj.at(key).is_string()) invalid(path + "." + key, "missing required string");
    return obj.at(key).get<std::string>();
}

std::string text_or(const json& obj, const char* key, const std::string& path, const std::string& fallback) {
    return obj.contains(key) ? text(obj, key, path) : fallback;
}

bool flag_or(const json& obj, const char* key, const std::string& path, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) invalid(path + "." + key, "expected true or false");
    return obj.at(key).get<bool>();
}

json normalize_governor(const json& in, const std::string& path) {
    only_keys(in, path, {"T_g", "k_g", "p_star"});
    return {{"T_g", positive(number(in, "T_g", path), path + ".T_g")},
            {"k_g", non_negative(number(in, "k_g", path), path + ".k_g")},
            {"p_star", number_or(in, "p_star", path, 0.0)}};
}

json normalize_wind(const json& in, const std::string& path) {
    only_keys(in, path, {"rho", "radius", "v_w", "omega_base", "cp", "pitch", "beta_star", "p_mpp",
                         "power_base_w", "curtailment", "omega_op"});
    const WtParams d;
    json out;
    out["rho"] = positive(number_or(in, "rho", path, d.rho), path + ".rho");
    out["radius"] = positive(number_or(in, "radius", path, d.radius), path + ".radius");
    out["v_w"] = positive(number_or(in, "v_w", path, d.v_w), path + ".v_w");
    out["omega_base"] = positive(number_or(in, "omega_base", path, d.omega_base), path + ".omega_base");
    json cp = json::array();
    if (in.contains("cp")) {
        if (!in.at("cp").is_array() || in.at("cp").size() != 6) invalid(path + ".cp", "expected six coefficients");
        for (const auto& c : in.at("cp")) {
            if (!c.is_number()) invalid(path + ".cp", "expected numbers");
            cp.push_back(c.get<double>());
        }
    } else {
        for (double c : d.cp.c) cp.push_back(c);
    }
    out["cp"] = cp;
    const json pitch = in.value("pitch", json::object());
    only_keys(pitch, path + ".pitch", {"T_g", "k_bp"});
    out["pitch"] = {{"T_g", positive(number_or(pitch, "T_g", path + ".pitch", d.pitch.T_g), path + ".pitch.T_g")},
                    {"k_bp", non_negative(number_or(pitch, "k_bp", path + ".pitch", 0.0), path + ".pitch.k_bp")}};
    out["beta_star"] = number_or(in, "beta_star", path, 0.0);
    if (in.contains("power_base_w") && in.contains("p_mpp")) invalid(path, "give either p_mpp or power_base_w");
    if (in.contains("power_base_w")) {
        out["power_base_w"] = positive(number(in, "power_base_w", path), path + ".power_base_w");
    } else {
        out["p_mpp"] = positive(number_or(in, "p_mpp", path, 0.75), path + ".p_mpp");
    }
    if (in.contains("omega_op") && in.contains("curtailment")) invalid(path, "give either curtailment or omega_op");
    if (in.contains("omega_op")) {
        out["omega_op"] = positive(number(in, "omega_op", path), path + ".omega_op");
    } else {
        out["curtailment"] = fraction(number_or(in, "curtailment", path, 1.0), path + ".curtailment");
    }
    return out;
}

json normalize_pv(const json& in, const std::string& path, double s_base_w) {
    only_keys(in, path, {"type", "module", "n_series", "n_parallel", "power_base_w", "curtailment"});
    const PvParams d;
    const json mod = in.value("module", json::object());
    const std::string mp = path + ".module";
    only_keys(mod, mp, {"i_L", "i_0", "v_t", "alpha", "R_s", "R_p"});
    json out;
    out["type"] = "pv";
    out["module"] = {{"i_L", non_negative(number_or(mod, "i_L", mp, d.i_L), mp + ".i_L")},
                     {"i_0", positive(number_or(mod, "i_0", mp, d.i_0), mp + ".i_0")},
                     {"v_t", positive(number_or(mod, "v_t", mp, d.v_t), mp + ".v_t")},
                     {"alpha", positive(number_or(mod, "alpha", mp, d.alpha), mp + ".alpha")},
                     {"R_s", non_negative(number_or(mod, "R_s", mp, d.R_s), mp + ".R_s")},
                     {"R_p", positive(number_or(mod, "R_p", mp, d.R_p), mp + ".R_p")}};
    out["n_series"] = positive(number_or(in, "n_series", path, 1.0), path + ".n_series");
    out["n_parallel"] = positive(number_or(in, "n_parallel", path, 1.0), path + ".n_parallel");
    out["power_base_w"] = positive(number_or(in, "power_base_w", path, s_base_w), path + ".power_base_w");
    out["curtailment"] = fraction(number_or(in, "curtailment", path, 1.0), path + ".curtailment");
    return out;
}

json normalize_node(const json& in, const std::string& path, double s_base_w) {
    const std::string kind = text(in, "kind", path);
    json out;
    out["id"] = text(in, "id", path);
    out["kind"] = kind;
    if (kind == "machine") {
        only_keys(in, path, {"id", "kind", "J", "omega_star", "governor", "wind"});
        out["J"] = positive(number(in, "J", path), path + ".J");
        if (in.contains("governor") && in.contains("wind")) invalid(path, "a machine has a governor or a wind drive");
        if (in.contains("wind")) {
            if (in.contains("omega_star")) invalid(path + ".omega_star", "derived from the wind operating point");
            out["wind"] = normalize_wind(in.at("wind"), path + ".wind");
        } else {
            out["omega_star"] = positive(number_or(in, "omega_star", path, 1.0), path + ".omega_star");
        }
        if (in.contains("governor")) out["governor"] = normalize_governor(in.at("governor"), path + ".governor");
    } else if (kind == "converter") {
        only_keys(in, path, {"id", "kind", "C", "v_star", "k_p", "k_omega", "delta_theta", "m_p", "cond2"});
        out["C"] = positive(number(in, "C", path), path + ".C");
        out["v_star"] = positive(number_or(in, "v_star", path, 1.0), path + ".v_star");
        out["k_p"] = non_negative(number(in, "k_p", path), path + ".k_p");
        out["k_omega"] = non_negative(number(in, "k_omega", path), path + ".k_omega");
        out["delta_theta"] = number_or(in, "delta_theta", path, 0.0);
        if (in.contains("m_p")) out["m_p"] = number(in, "m_p", path);
        const std::string mode = text_or(in, "cond2", path, "standard");
        (void)cond2_mode_from_string(mode);
        out["cond2"] = mode;
    } else if (kind == "dc") {
        only_keys(in, path, {"id", "kind", "C", "v_star", "source"});
        out["C"] = positive(number(in, "C", path), path + ".C");
        out["v_star"] = positive(number_or(in, "v_star", path, 1.0), path + ".v_star");
        if (in.contains("source")) {
            const json& src = in.at("source");
            const std::string sp = path + ".source";
            const std::string type = text(src, "type", sp);
            if (type == "controllable") {
                only_keys(src, sp, {"type", "T_g", "k_g", "p_star"});
                json s = normalize_governor(json{{"T_g", number(src, "T_g", sp)},
                                                 {"k_g", number(src, "k_g", sp)},
                                                 {"p_star", number_or(src, "p_star", sp, 0.0)}},
                                            sp);
                s["type"] = "controllable";
                out["source"] = s;
            } else if (type == "pv") {
                out["source"] = normalize_pv(src, sp, s_base_w);
            } else {
                invalid(sp + ".type", "expected controllable or pv");
            }
        }
    } else {
        invalid(path + ".kind", "expected machine, converter or dc");
    }
    return out;
}

json normalize_edges(const json& in, const char* weight, const std::string& path) {
    json out = json::array();
    if (in.is_null()) return out;
    if (!in.is_array()) invalid(path, "expected an array");
    for (std::size_t i = 0; i < in.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        only_keys(in[i], p, {"from", "to", weight});
        out.push_back({{"from", text(in[i], "from", p)},
                       {"to", text(in[i], "to", p)},
                       {weight, positive(number(in[i], weight, p), p + "." + weight)}});
    }
    return out;
}

json normalize(const json& in) {
    only_keys(in, "scenario", {"name", "base", "nodes", "buses", "ac_edges", "dc_edges", "disturbances",
                               "analysis", "simulation"});
    json out;
    out["name"] = text_or(in, "name", "scenario", "unnamed");
    const json base = in.value("base", json::object());
    only_keys(base, "base", {"s_base_mva", "f_base_hz"});
    out["base"] = {{"s_base_mva", positive(number_or(base, "s_base_mva", "base", 100.0), "base.s_base_mva")},
                   {"f_base_hz", positive(number_or(base, "f_base_hz", "base", 50.0), "base.f_base_hz")}};
    const double s_base_w = out["base"]["s_base_mva"].get<double>() * 1e6;

    if (!in.contains("nodes") || !in.at("nodes").is_array()) invalid("nodes", "expected an array of nodes");
    out["nodes"] = json::array();
    for (std::size_t i = 0; i < in.at("nodes").size(); ++i) {
        out["nodes"].push_back(normalize_node(in.at("nodes")[i], "nodes[" + std::to_string(i) + "]", s_base_w));
    }
    out["buses"] = json::array();
    if (in.contains("buses")) {
        for (std::size_t i = 0; i < in.at("buses").size(); ++i) {
            const std::string p = "buses[" + std::to_string(i) + "]";
            const json& b = in.at("buses")[i];
            only_keys(b, p, {"id", "network"});
            const std::string net = text(b, "network", p);
            if (net != "ac" && net != "dc") invalid(p + ".network", "expected ac or dc");
            out["buses"].push_back({{"id", text(b, "id", p)}, {"network", net}});
        }
    }
    out["ac_edges"] = normalize_edges(in.value("ac_edges", json()), "b", "ac_edges");
    out["dc_edges"] = normalize_edges(in.value("dc_edges", json()), "g", "dc_edges");

    out["disturbances"] = json::array();
    double last = 0.0;
    if (in.contains("disturbances")) {
        for (std::size_t i = 0; i < in.at("disturbances").size(); ++i) {
            const std::string p = "disturbances[" + std::to_string(i) + "]";
            const json& d = in.at("disturbances")[i];
            only_keys(d, p, {"time", "node", "terminal", "dP"});
            const double t = non_negative(number(d, "time", p), p + ".time");
            if (t < last) invalid(p + ".time", "disturbances must be sorted by time");
            last = t;
            const std::string term = text_or(d, "terminal", p, "ac");
            if (term != "ac" && term != "dc") invalid(p + ".terminal", "expected ac or dc");
            out["disturbances"].push_back({{"time", t}, {"node", text(d, "node", p)}, {"terminal", term},
                                           {"dP", number(d, "dP", p)}});
        }
    }

    const json an = in.value("analysis", json::object());
    only_keys(an, "analysis", {"cond1_relaxation", "n_minus_one", "gdc_scales", "lasalle_samples"});
    json scales = json::array();
    if (an.contains("gdc_scales")) {
        for (const auto& s : an.at("gdc_scales")) {
            if (!s.is_number() || !(s.get<double>() > 0.0)) invalid("analysis.gdc_scales", "expected positive numbers");
            scales.push_back(s.get<double>());
        }
    } else {
        scales = json::array({10.0, 100.0, 1000.0});
    }
    out["analysis"] = {{"cond1_relaxation", flag_or(an, "cond1_relaxation", "analysis", false)},
                       {"n_minus_one", flag_or(an, "n_minus_one", "analysis", false)},
                       {"gdc_scales", scales},
                       {"lasalle_samples", number_or(an, "lasalle_samples", "analysis", 1000.0)}};

    const json sim = in.value("simulation", json::object());
    only_keys(sim, "simulation", {"h", "t_end", "monitored", "rocof_window"});
    json monitored = json::array();
    if (sim.contains("monitored")) {
        for (const auto& id : sim.at("monitored")) {
            if (!id.is_string()) invalid("simulation.monitored", "expected node ids");
            monitored.push_back(id);
        }
    }
    out["simulation"] = {{"h", positive(number_or(sim, "h", "simulation", 1e-3), "simulation.h")},
                         {"t_end", positive(number_or(sim, "t_end", "simulation", 10.0), "simulation.t_end")},
                         {"monitored", monitored},
                         {"rocof_window", positive(number_or(sim, "rocof_window", "simulation", 0.3),
                                                   "simulation.rocof_window")}};
    return out;
}

}  // namespace

std::string Scenario::name() const { return doc.at("name").get<std::string>(); }

Scenario parse_scenario(const std::string& content) {
    json raw;
    try {
        raw = json::parse(content);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
    }
    try {
        return Scenario{normalize(raw)};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ValidationError, std::string("malformed scenario: ") + e.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string dump_scenario(const Scenario& s) { return s.doc.dump(2) + "\n"; }

ScenarioRun build_run(const Scenario& scenario, double gdc_scale) {
    if (!(gdc_scale > 0.0)) throw Error(ErrorCode::ValidationError, "gdc scale must be positive");
    const json& d = scenario.doc;
    ScenarioRun run;
    NetworkDescription net;
    DeviceSet& dev = run.system.devices;

    for (const auto& n : d.at("nodes")) {
        const std::string id = n.at("id").get<std::string>();
        const std::string kind = n.at("kind").get<std::string>();
        if (kind == "machine") {
            net.nodes.push_back({id, NodeKind::Machine});
            MachineParams m;
            m.J = n.at("J").get<double>();
            if (n.contains("governor")) {
                const auto& g = n.at("governor");
                m.governor = Governor{g.at("T_g").get<double>(), g.at("k_g").get<double>(), g.at("p_star").get<double>()};
            }
            if (n.contains("wind")) {
                const auto& w = n.at("wind");
                WindDrive wd;
                wd.params.rho = w.at("rho").get<double>();
                wd.params.radius = w.at("radius").get<double>();
                wd.params.v_w = w.at("v_w").get<double>();
                wd.params.omega_base = w.at("omega_base").get<double>();
                for (std::size_t k = 0; k < 6; ++k) wd.params.cp.c[k] = w.at("cp")[k].get<double>();
                wd.params.pitch.T_g = w.at("pitch").at("T_g").get<double>();
                wd.params.pitch.k_bp = w.at("pitch").at("k_bp").get<double>();
                wd.beta_star = w.at("beta_star").get<double>();
                if (w.contains("power_base_w")) {
                    wd.params.power_base = w.at("power_base_w").get<double>();
                } else {
                    wd.params = calibrate_wt_power_base(wd.params, w.at("p_mpp").get<double>());
                }
                m.omega_star = w.contains("omega_op") ? w.at("omega_op").get<double>()
                                                      : wt_operating_speed(wd.params, w.at("curtailment").get<double>());
                m.wind = wd;
            } else {
                m.omega_star = n.at("omega_star").get<double>();
            }
            dev.machines[id] = m;
        } else if (kind == "converter") {
            net.nodes.push_back({id, NodeKind::Converter});
            dev.buses[id] = DcBusParams{n.at("C").get<double>(), n.at("v_star").get<double>(), {}};
            ConverterGains gains;
            gains.k_p = n.at("k_p").get<double>();
            gains.k_omega = n.at("k_omega").get<double>();
            gains.delta_theta = n.at("delta_theta").get<double>();
            if (n.contains("m_p")) gains.m_p = n.at("m_p").get<double>();
            run.system.gains[id] = gains;
            run.analysis.cond2_modes[id] = cond2_mode_from_string(n.at("cond2").get<std::string>());
        } else {
            net.nodes.push_back({id, NodeKind::DcNode});
            DcBusParams bus{n.at("C").get<double>(), n.at("v_star").get<double>(), {}};
            if (n.contains("source")) {
                const auto& s = n.at("source");
                if (s.at("type") == "controllable") {
                    bus.source = ControllableDc{s.at("T_g").get<double>(), s.at("k_g").get<double>(),
                                                s.at("p_star").get<double>()};
                } else {
                    PvParams p;
                    const auto& mod = s.at("module");
                    p.i_L = mod.at("i_L").get<double>();
                    p.i_0 = mod.at("i_0").get<double>();
                    p.v_t = mod.at("v_t").get<double>();
                    p.alpha = mod.at("alpha").get<double>();
                    p.R_s = mod.at("R_s").get<double>();
                    p.R_p = mod.at("R_p").get<double>();
                    p.n_series = s.at("n_series").get<double>();
                    p.n_parallel = s.at("n_parallel").get<double>();
                    p.power_base = s.at("power_base_w").get<double>();
                    p.voltage_base = 1.0;
                    bus.source = PvSource{anchor_pv_voltage(p, s.at("curtailment").get<double>(), bus.v_star)};
                }
            }
            dev.buses[id] = bus;
        }
    }
    for (const auto& b : d.at("buses")) {
        net.passive_buses.push_back({b.at("id").get<std::string>(),
                                     b.at("network") == "ac" ? Terminal::Ac : Terminal::Dc});
    }
    for (const auto& e : d.at("ac_edges")) {
        net.ac_edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(), e.at("b").get<double>()});
    }
    for (const auto& e : d.at("dc_edges")) {
        net.dc_edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                                e.at("g").get<double>() * gdc_scale});
    }
    run.system.graph = build_graph(net);

    for (const auto& e : d.at("disturbances")) {
        run.disturbances.push_back(Disturbance{e.at("time").get<double>(), e.at("node").get<std::string>(),
                                               e.at("terminal") == "ac" ? Terminal::Ac : Terminal::Dc,
                                               e.at("dP").get<double>()});
    }
    // Fail early on disturbances at unknown nodes or missing terminals.
    (void)disturbance_vector(run.system.graph, run.disturbances);

    const auto& an = d.at("analysis");
    run.analysis.cond1_relaxation = an.at("cond1_relaxation").get<bool>();
    run.analysis.n_minus_one = an.at("n_minus_one").get<bool>();
    run.analysis.lasalle_samples = static_cast<std::size_t>(an.at("lasalle_samples").get<double>());
    for (const auto& s : an.at("gdc_scales")) run.gdc_scales.push_back(s.get<double>());

    const auto& sim = d.at("simulation");
    run.simulation.h = sim.at("h").get<double>();
    run.simulation.t_end = sim.at("t_end").get<double>();
    run.rocof_window = sim.at("rocof_window").get<double>();
    for (const auto& id : sim.at("monitored")) {
        const auto s = id.get<std::string>();
        const auto node = run.system.graph.find(s);
        if (!node || run.system.graph.node(*node).kind == NodeKind::DcNode) {
            invalid("simulation.monitored", "'" + s + "' is not a machine or converter");
        }
        run.monitored.push_back(s);
    }
    if (run.monitored.empty()) {
        for (std::size_t i : run.system.graph.ac_order()) run.monitored.push_back(run.system.graph.node(i).id);
    }
    return run;
}

}  // namespace hgfm
