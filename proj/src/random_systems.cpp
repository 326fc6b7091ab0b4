#include "hgfm/random_systems.hpp"

#include "hgfm/analysis.hpp"
#include "hgfm/error.hpp"

#include <set>

namespace hgfm {

namespace {

double uniform(std::mt19937_64& rng, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
}

bool chance(std::mt19937_64& rng, double p) { return uniform(rng, 0.0, 1.0) < p; }

bool ac_ok(NodeKind k) { return k != NodeKind::DcNode; }
bool dc_ok(NodeKind k) { return k != NodeKind::Machine; }

std::optional<HybridSystem> try_random_system(std::mt19937_64& rng, const RandomSystemOptions& o) {
    const auto n = static_cast<std::size_t>(
        std::uniform_int_distribution<std::size_t>(o.min_nodes, o.max_nodes)(rng));
    std::vector<Node> nodes;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = uniform(rng, 0.0, 1.0);
        const NodeKind kind = u < 0.35 ? NodeKind::Machine : (u < 0.75 ? NodeKind::Converter : NodeKind::DcNode);
        const char* prefix = kind == NodeKind::Machine ? "M" : (kind == NodeKind::Converter ? "C" : "D");
        nodes.push_back(Node{prefix + std::to_string(i), kind});
    }

    std::set<std::pair<std::size_t, std::size_t>> ac_pairs, dc_pairs;
    for (std::size_t i = 1; i < n; ++i) {
        std::vector<std::pair<std::size_t, bool>> options;  // (node, is_ac)
        for (std::size_t j = 0; j < i; ++j) {
            if (ac_ok(nodes[i].kind) && ac_ok(nodes[j].kind)) options.emplace_back(j, true);
            if (dc_ok(nodes[i].kind) && dc_ok(nodes[j].kind)) options.emplace_back(j, false);
        }
        if (options.empty()) return std::nullopt;
        const auto pick = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
        (pick.second ? ac_pairs : dc_pairs).insert({pick.first, i});
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (ac_ok(nodes[i].kind) && ac_ok(nodes[j].kind) && chance(rng, o.extra_edge_probability)) {
                ac_pairs.insert({i, j});
            }
            if (dc_ok(nodes[i].kind) && dc_ok(nodes[j].kind) && chance(rng, o.extra_edge_probability)) {
                dc_pairs.insert({i, j});
            }
        }
    }
    if (o.tuned) {
        for (std::size_t i = 0; i < n; ++i) {
            if (nodes[i].kind != NodeKind::Converter) continue;
            bool has_dc = false;
            for (const auto& [a, b] : dc_pairs) has_dc = has_dc || a == i || b == i;
            if (has_dc) continue;
            std::vector<std::size_t> cand;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i && dc_ok(nodes[j].kind)) cand.push_back(j);
            }
            if (cand.empty()) return std::nullopt;
            const std::size_t j = cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)];
            dc_pairs.insert({std::min(i, j), std::max(i, j)});
        }
    }

    std::vector<Edge> ac, dc;
    for (const auto& [a, b] : ac_pairs) ac.push_back(Edge{a, b, uniform(rng, 2.0, 20.0)});
    for (const auto& [a, b] : dc_pairs) dc.push_back(Edge{a, b, uniform(rng, 5.0, 50.0)});

    HybridSystem sys;
    sys.graph = SystemGraph(nodes, ac, dc);
    const SystemGraph& g = sys.graph;

    for (std::size_t i : g.machines()) {
        MachineParams m;
        m.J = uniform(rng, 1.0, 10.0);
        const double u = uniform(rng, 0.0, 1.0);
        if (u < 0.45) {
            m.governor = Governor{uniform(rng, 0.2, 2.0), chance(rng, 0.1) ? 0.0 : uniform(rng, 2.0, 20.0), 0.0};
        } else if (u < 0.65 && o.allow_wind) {
            WindDrive wd;
            wd.params.pitch.T_g = uniform(rng, 0.2, 1.0);
            wd.params.pitch.k_bp = chance(rng, 0.2) ? 0.0 : uniform(rng, 0.5, 5.0);
            wd.params = calibrate_wt_power_base(wd.params, 0.75);
            m.omega_star = wt_operating_speed(wd.params, uniform(rng, 0.85, 1.0));
            m.wind = wd;
        }
        sys.devices.machines[g.node(i).id] = m;
    }
    for (std::size_t i : g.dc_order()) {
        DcBusParams bus;
        bus.C = uniform(rng, 0.02, 0.2);
        if (g.node(i).kind == NodeKind::DcNode) {
            const double u = uniform(rng, 0.0, 1.0);
            if (u < 0.4) {
                bus.source = ControllableDc{uniform(rng, 0.2, 2.0),
                                            chance(rng, 0.1) ? 0.0 : uniform(rng, 1.0, 10.0), 0.0};
            } else if (u < 0.7 && o.allow_pv) {
                PvParams p;
                p.n_series = 20.0;
                p.n_parallel = std::floor(uniform(rng, 100.0, 400.0));
                p.power_base = 1e6;
                p.voltage_base = 1000.0;
                bus.source = PvSource{anchor_pv_voltage(p, uniform(rng, 0.85, 1.0), bus.v_star)};
            }
        }
        sys.devices.buses[g.node(i).id] = bus;
    }

    const Decomposition dec = decompose_subnetworks(g);
    std::vector<double> subnet_k(dec.dc.size());
    for (double& k : subnet_k) k = uniform(rng, 0.05, 0.5);
    for (std::size_t c : g.converters()) {
        ConverterGains gains;
        if (o.tuned) {
            gains.k_omega = subnet_k[*dec.dc_subnet_of[c]];
            double gsum = 0.0;
            for (const auto& e : g.dc_edges()) {
                if (e.from == c || e.to == c) gsum += e.weight;
            }
            const double cap = sys.devices.buses.at(g.node(c).id).C;
            gains.k_p = uniform(rng, 0.1, 0.9) * 2.0 * gains.k_omega * cap / gsum;
        } else {
            gains.k_omega = uniform(rng, 0.05, 0.5);
            gains.k_p = uniform(rng, 0.0005, 0.02);
        }
        sys.gains[g.node(c).id] = gains;
    }
    return sys;
}

}  // namespace

HybridSystem random_system(std::mt19937_64& rng, const RandomSystemOptions& options) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        if (auto sys = try_random_system(rng, options)) return std::move(*sys);
    }
    throw Error(ErrorCode::ValidationError, "could not draw a connected random system");
}

HybridSystem random_certified_system(std::mt19937_64& rng, const RandomSystemOptions& options) {
    RandomSystemOptions o = options;
    o.tuned = true;
    for (int attempt = 0; attempt < 10000; ++attempt) {
        HybridSystem sys = random_system(rng, o);
        const SystemModel model = build_model(sys);
        AnalysisOptions ao;
        const StabilityReport report = analyze(model, ao);
        if (report.cond1.strict_pass && report.cond2.pass && report.cond3.pass && report.cond5.pass) {
            return sys;
        }
    }
    throw Error(ErrorCode::ValidationError, "could not draw a certified random system");
}

}  // namespace hgfm
