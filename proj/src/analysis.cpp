#include "hgfm/analysis.hpp"

#include "hgfm/error.hpp"
#include "hgfm/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace hgfm {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index idx(std::size_t v) { return static_cast<Index>(v); }

constexpr double kGainTol = 1e-12;
constexpr double kLasalleTol = 1e-9;
constexpr double kStableTol = 1e-9;

std::vector<bool> mask_of(std::size_t n, const std::vector<std::size_t>& members) {
    std::vector<bool> m(n, false);
    for (std::size_t i : members) m[i] = true;
    return m;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
}

double incident_conductance(const SystemGraph& g, std::size_t node) {
    double s = 0.0;
    for (const auto& e : g.dc_edges()) {
        if (e.from == node || e.to == node) s += e.weight;
    }
    return s;
}

double capacitance(const SystemModel& m, std::size_t node) {
    const auto& bus = m.system.devices.buses.at(m.system.graph.node(node).id);
    return bus.C * bus.v_star;
}

const ConverterGains& gains_of(const SystemModel& m, std::size_t node) {
    const auto& id = m.system.graph.node(node).id;
    auto it = m.system.gains.find(id);
    if (it == m.system.gains.end()) throw Error(ErrorCode::MissingGains, "converter '" + id + "' has no gains");
    return it->second;
}

std::vector<std::size_t> subnet_converters(const SystemGraph& g, const Subnetwork& s) {
    std::vector<std::size_t> out;
    for (std::size_t n : s.nodes) {
        if (g.node(n).kind == NodeKind::Converter) out.push_back(n);
    }
    return out;
}

bool all_equal(const std::vector<double>& values) {
    for (double v : values) {
        if (std::abs(v - values.front()) > kGainTol * std::max(1.0, std::abs(values.front()))) return false;
    }
    return true;
}

// Orthonormal basis of range(B_ac^T), the subspace of eta reachable from node angles.
MatrixXd eta_range_basis(const MatrixXd& B_ac) {
    const Index nE = B_ac.cols();
    if (nE == 0) return MatrixXd::Zero(0, 0);
    Eigen::JacobiSVD<MatrixXd> svd(B_ac.transpose(), Eigen::ComputeFullU);
    const VectorXd& s = svd.singularValues();
    Index rank = 0;
    const double tol = 1e-10 * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > tol) ++rank;
    }
    return svd.matrixU().leftCols(rank);
}

std::vector<std::complex<double>> sorted_eigenvalues(const MatrixXd& M) {
    if (M.rows() == 0) return {};
    Eigen::EigenSolver<MatrixXd> es(M, false);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "eigenvalue solver failed");
    std::vector<std::complex<double>> out;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return out;
}

// Per-node flags used by the ac topology conditions.
struct TopologyFlags {
    std::vector<bool> responsive;  // N_ac^r for machines, N_cac^r for converters
    std::vector<bool> has_source;  // machines with a mechanical source
    std::vector<bool> sg;          // machines with k_g > 0
};

TopologyFlags topology_flags(const SystemGraph& g, const Decomposition& dec, const Classification& cls,
                             const SensitivityTable& sens) {
    const std::size_t n = g.size();
    TopologyFlags f{std::vector<bool>(n, false), std::vector<bool>(n, false), std::vector<bool>(n, false)};
    const auto r = mask_of(n, cls.r);
    const auto w = mask_of(n, cls.w);
    const auto pv = mask_of(n, cls.pv);
    std::vector<bool> dc_controlled(dec.dc.size(), false);
    for (std::size_t j = 0; j < dec.dc.size(); ++j) {
        for (std::size_t node : dec.dc[j].nodes) {
            if (g.node(node).kind == NodeKind::DcNode && (r[node] || pv[node])) dc_controlled[j] = true;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Node& node = g.node(i);
        if (node.kind == NodeKind::Machine) {
            f.responsive[i] = r[i] || w[i];
            f.sg[i] = r[i];
            const auto it = sens.find(node.id);
            f.has_source[i] = it != sens.end() && it->second.source != SourceKind::None;
        } else if (node.kind == NodeKind::Converter) {
            const auto j = dec.dc_subnet_of[i];
            f.responsive[i] = j && dc_controlled[*j];
        }
    }
    return f;
}

Cond5Subnet evaluate_ac_subnet(const SystemGraph& g, const Subnetwork& sub, std::size_t index,
                               const TopologyFlags& f) {
    Cond5Subnet out;
    out.subnet = index;
    std::vector<std::size_t> machines, converters;
    for (std::size_t n : sub.nodes) {
        out.nodes.push_back(g.node(n).id);
        (g.node(n).kind == NodeKind::Machine ? machines : converters).push_back(n);
    }
    const bool all_sg = std::all_of(machines.begin(), machines.end(), [&](std::size_t m) { return f.sg[m]; });
    if (converters.empty() && !machines.empty() && all_sg) {
        out.shortcut = "i";
    } else if (machines.empty()) {
        out.shortcut = "ii";
    } else if (all_sg) {
        out.shortcut = "iii";
    } else if (machines.size() == 1 && f.has_source[machines.front()]) {
        out.shortcut = "iv";
    } else if (machines.size() == 1) {
        out.shortcut = "v";
    }

    std::vector<std::size_t> n1, n2, n3;
    for (std::size_t n : sub.nodes) {
        (f.responsive[n] ? n1 : n2).push_back(n);
        if (!f.responsive[n] && g.node(n).kind == NodeKind::Machine) n3.push_back(n);
    }
    out.case_i = check_syncac(g, sub.edges, n1, n2, n3);
    out.case_ii = check_syncac(g, sub.edges, converters, machines, machines);

    if (!out.shortcut.empty()) {
        out.pass = true;
        out.via = "shortcut";
    } else if (out.case_i.pass) {
        out.pass = true;
        out.via = "case i";
    } else if (out.case_ii.pass) {
        out.pass = true;
        out.via = "case ii";
    }
    return out;
}

}  // namespace

const char* to_string(Cond2Mode mode) noexcept {
    switch (mode) {
        case Cond2Mode::Standard: return "standard";
        case Cond2Mode::PointToPoint: return "point_to_point";
        case Cond2Mode::Relaxed: return "relaxed";
        case Cond2Mode::DirectFed: return "direct_fed";
    }
    return "standard";
}

Cond2Mode cond2_mode_from_string(const std::string& s) {
    if (s == "standard") return Cond2Mode::Standard;
    if (s == "point_to_point") return Cond2Mode::PointToPoint;
    if (s == "relaxed") return Cond2Mode::Relaxed;
    if (s == "direct_fed") return Cond2Mode::DirectFed;
    throw Error(ErrorCode::ValidationError, "unknown cond2 mode '" + s + "'");
}

// ---------------------------------------------------------------------------
// Condition 1
// ---------------------------------------------------------------------------

Cond1Result check_cond1(const SystemModel& m, bool relaxation) {
    const auto& g = m.system.graph;
    const auto& dec = m.decomposition;
    Cond1Result out;
    for (std::size_t j = 0; j < dec.dc.size(); ++j) {
        Cond1Subnet s;
        s.subnet = j;
        const auto convs = subnet_converters(g, dec.dc[j]);
        for (std::size_t c : convs) {
            s.converters.push_back(g.node(c).id);
            s.k_omega.push_back(gains_of(m, c).k_omega);
        }
        s.equal = s.k_omega.empty() || all_equal(s.k_omega);
        s.pass = s.equal;
        if (!s.equal && relaxation) {
            if (convs.size() == 2 && dec.ac_subnet_of[convs[0]] != dec.ac_subnet_of[convs[1]]) {
                s.relaxation = Cond1Relaxation::PointToPoint;
                s.pass = true;
            } else {
                std::map<std::size_t, std::vector<double>> by_ac;
                for (std::size_t k = 0; k < convs.size(); ++k) {
                    by_ac[*dec.ac_subnet_of[convs[k]]].push_back(s.k_omega[k]);
                }
                bool groups_equal = true;
                for (const auto& [ac, ks] : by_ac) groups_equal = groups_equal && all_equal(ks);
                // Bipartite graph of ac and dc subnets joined by converters, without subnet j.
                const std::size_t na = dec.ac.size();
                std::vector<std::size_t> parent(na + dec.dc.size());
                std::iota(parent.begin(), parent.end(), 0);
                for (std::size_t c : g.converters()) {
                    const auto dj = dec.dc_subnet_of[c];
                    if (!dj || *dj == j) continue;
                    parent[find_root(parent, *dec.ac_subnet_of[c])] = find_root(parent, na + *dj);
                }
                std::set<std::size_t> roots;
                bool separated = true;
                for (const auto& [ac, ks] : by_ac) separated = separated && roots.insert(find_root(parent, ac)).second;
                if (groups_equal && separated) {
                    s.relaxation = Cond1Relaxation::SingleCoupling;
                    s.pass = true;
                }
            }
        }
        out.strict_pass = out.strict_pass && s.equal;
        if (!s.pass && out.pass) {
            out.pass = false;
            out.witness = s.converters;
        }
        out.subnets.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Condition 2 and the dc gain-bound quantities
// ---------------------------------------------------------------------------

Cond2Result check_cond2(const SystemModel& m, const std::map<std::string, Cond2Mode>& modes) {
    const auto& g = m.system.graph;
    Cond2Result out;
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t c : g.converters()) {
        const auto& id = g.node(c).id;
        Cond2Entry e;
        e.converter = id;
        const auto it = modes.find(id);
        e.mode = it == modes.end() ? Cond2Mode::Standard : it->second;
        const auto& gains = gains_of(m, c);
        e.k_p = gains.k_p;
        const double cap = capacitance(m, c);
        switch (e.mode) {
            case Cond2Mode::Standard:
            case Cond2Mode::PointToPoint: {
                const double gsum = incident_conductance(g, c);
                if (gsum <= 0.0) {
                    throw Error(ErrorCode::IsolatedDcNode,
                                "converter '" + id + "' has no dc line; choose a relaxed cond2 mode");
                }
                e.bound = 2.0 * gains.k_omega * cap / gsum;
                e.margin = e.bound - e.k_p;
                e.pass = e.k_p >= 0.0 && e.margin > 0.0;
                break;
            }
            case Cond2Mode::Relaxed:
                e.bound = inf;
                e.margin = e.k_p;
                e.pass = e.k_p > 0.0;
                break;
            case Cond2Mode::DirectFed: {
                double k_src = 0.0;
                for (const auto& edge : g.dc_edges()) {
                    if (edge.from != c && edge.to != c) continue;
                    const std::size_t other = edge.from == c ? edge.to : edge.from;
                    if (g.node(other).kind != NodeKind::DcNode) continue;
                    const auto& s = m.sensitivities.at(g.node(other).id);
                    k_src += s.k_g + s.k_pv;
                }
                if (k_src > 0.0) {
                    e.bound = 4.0 * cap / k_src;
                    e.margin = e.bound - e.k_p;
                    e.pass = e.k_p > 0.0 && e.margin > 0.0;
                } else {
                    e.bound = inf;
                    e.margin = e.k_p;
                    e.pass = e.k_p > 0.0;
                }
                break;
            }
        }
        out.pass = out.pass && e.pass;
        out.entries.push_back(e);
    }
    return out;
}

std::vector<Lemma1Entry> lemma1_quantities(const SystemModel& m) {
    const auto& g = m.system.graph;
    std::vector<Lemma1Entry> out;
    for (std::size_t j = 0; j < m.decomposition.dc.size(); ++j) {
        const auto convs = subnet_converters(g, m.decomposition.dc[j]);
        if (convs.empty()) continue;
        std::vector<double> ks;
        for (std::size_t c : convs) ks.push_back(gains_of(m, c).k_omega);
        if (!all_equal(ks)) continue;
        Lemma1Entry entry;
        entry.subnet = j;
        entry.k_omega = ks.front();
        std::map<std::size_t, std::size_t> pos;
        for (std::size_t k = 0; k < convs.size(); ++k) pos[convs[k]] = k;
        std::vector<double> e(convs.size());
        for (std::size_t k = 0; k < convs.size(); ++k) e[k] = gains_of(m, convs[k]).k_p / capacitance(m, convs[k]);
        MatrixXd Lcc = MatrixXd::Zero(idx(convs.size()), idx(convs.size()));
        std::vector<double> row(convs.size(), 0.0);
        for (std::size_t eidx : m.decomposition.dc[j].edges) {
            const auto& edge = g.dc_edges()[eidx];
            const auto a = pos.find(edge.from);
            const auto b = pos.find(edge.to);
            if (a != pos.end()) {
                Lcc(idx(a->second), idx(a->second)) += edge.weight;
                row[a->second] += edge.weight * e[a->second];
            }
            if (b != pos.end()) {
                Lcc(idx(b->second), idx(b->second)) += edge.weight;
                row[b->second] += edge.weight * e[b->second];
            }
            if (a != pos.end() && b != pos.end()) {
                Lcc(idx(a->second), idx(b->second)) -= edge.weight;
                Lcc(idx(b->second), idx(a->second)) -= edge.weight;
                const double cross = edge.weight * std::sqrt(e[a->second] * e[b->second]);
                row[a->second] += cross;
                row[b->second] += cross;
            }
        }
        entry.gershgorin = *std::max_element(row.begin(), row.end());
        VectorXd sq(idx(convs.size()));
        for (std::size_t k = 0; k < convs.size(); ++k) sq(idx(k)) = std::sqrt(e[k]);
        const MatrixXd scaled = sq.asDiagonal() * Lcc * sq.asDiagonal();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(scaled, Eigen::EigenvaluesOnly);
        entry.spectral = es.eigenvalues().maxCoeff();
        out.push_back(entry);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Conditions 3-5
// ---------------------------------------------------------------------------

Cond3Result check_cond3(const Classification& cls) {
    Cond3Result out;
    out.n_r = cls.r.size();
    out.n_pv = cls.pv.size();
    out.n_w = cls.w.size();
    out.pass = out.n_r + out.n_pv + out.n_w > 0;
    return out;
}

SyncAcResult check_syncac(const SystemGraph& g, const std::vector<std::size_t>& edges,
                          const std::vector<std::size_t>& n1, const std::vector<std::size_t>& n2,
                          const std::vector<std::size_t>& n3) {
    const auto in1 = mask_of(g.size(), n1);
    const auto in2 = mask_of(g.size(), n2);
    std::vector<std::size_t> degree(g.size(), 0);
    std::vector<std::vector<std::size_t>> nbr(g.size());
    for (std::size_t k : edges) {
        const auto& e = g.ac_edges().at(k);
        std::size_t a = e.from, b = e.to;
        if (in2[a] && in1[b]) std::swap(a, b);
        if (!(in1[a] && in2[b])) continue;
        ++degree[a];
        nbr[b].push_back(a);
    }
    SyncAcResult out;
    std::vector<std::size_t> order = n3;
    std::sort(order.begin(), order.end());
    for (std::size_t k : order) {
        std::optional<std::size_t> match;
        std::vector<std::size_t> cand = nbr[k];
        std::sort(cand.begin(), cand.end());
        for (std::size_t l : cand) {
            if (degree[l] == 1) {
                match = l;
                break;
            }
        }
        if (match) {
            out.matches.emplace_back(g.node(k).id, g.node(*match).id);
        } else {
            out.failing.push_back(g.node(k).id);
            if (!out.witness) out.witness = g.node(k).id;
            out.pass = false;
        }
    }
    return out;
}

Cond5Result check_cond5(const SystemGraph& g, const Decomposition& dec, const Classification& cls,
                        const SensitivityTable& sens) {
    const TopologyFlags flags = topology_flags(g, dec, cls, sens);
    Cond5Result out;
    for (std::size_t i = 0; i < dec.ac.size(); ++i) {
        Cond5Subnet s = evaluate_ac_subnet(g, dec.ac[i], i, flags);
        if (!s.pass && out.pass) {
            out.pass = false;
            out.witness = s.case_i.witness ? s.case_i.witness : s.case_ii.witness;
        }
        out.subnets.push_back(std::move(s));
    }
    return out;
}

Cond5Result check_cond5(const SystemModel& m) {
    return check_cond5(m.system.graph, m.decomposition, m.classification, m.sensitivities);
}

namespace {

struct Deletion {
    std::string label;
    std::string kind;
    std::optional<std::size_t> node;
    std::optional<std::size_t> ac_edge;
    std::optional<std::size_t> dc_edge;
};

std::vector<Deletion> deletions(const SystemGraph& g) {
    std::vector<Deletion> out;
    for (std::size_t i = 0; i < g.size(); ++i) out.push_back({g.node(i).id, "node", i, {}, {}});
    for (std::size_t k = 0; k < g.ac_edges().size(); ++k) {
        const auto& e = g.ac_edges()[k];
        out.push_back({g.node(e.from).id + "-" + g.node(e.to).id, "ac_edge", {}, k, {}});
    }
    for (std::size_t k = 0; k < g.dc_edges().size(); ++k) {
        const auto& e = g.dc_edges()[k];
        out.push_back({g.node(e.from).id + "-" + g.node(e.to).id, "dc_edge", {}, {}, k});
    }
    return out;
}

NMinusOneEntry evaluate_deletion(const SystemModel& m, const Deletion& d) {
    const auto& g = m.system.graph;
    std::vector<Node> nodes;
    std::vector<std::size_t> remap(g.size(), g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (d.node && *d.node == i) continue;
        remap[i] = nodes.size();
        nodes.push_back(g.node(i));
    }
    auto keep = [&](const std::vector<Edge>& edges, const std::optional<std::size_t>& drop) {
        std::vector<Edge> out;
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const auto& e = edges[k];
            if ((drop && *drop == k) || remap[e.from] == g.size() || remap[e.to] == g.size()) continue;
            out.push_back(Edge{remap[e.from], remap[e.to], e.weight});
        }
        return out;
    };
    SystemGraph reduced(std::move(nodes), keep(g.ac_edges(), d.ac_edge), keep(g.dc_edges(), d.dc_edge));
    const Decomposition dec = decompose_subnetworks(reduced);
    const Classification cls = classify_nodes(reduced, m.sensitivities);
    const Cond5Result r = check_cond5(reduced, dec, cls, m.sensitivities);
    return NMinusOneEntry{d.label, d.kind, r.pass, r.witness};
}

}  // namespace

std::vector<NMinusOneEntry> n_minus_one_serial(const SystemModel& m) {
    const auto list = deletions(m.system.graph);
    return map_serial<NMinusOneEntry>(list.size(), [&](std::size_t i) { return evaluate_deletion(m, list[i]); });
}

std::vector<NMinusOneEntry> n_minus_one(const SystemModel& m) {
    const auto list = deletions(m.system.graph);
    return map_parallel<NMinusOneEntry>(list.size(), [&](std::size_t i) { return evaluate_deletion(m, list[i]); });
}

// ---------------------------------------------------------------------------
// Lyapunov certificate
// ---------------------------------------------------------------------------

LyapunovMatrices lyapunov_matrices(const SystemModel& m) {
    const auto& ss = m.state_space;
    const auto& L = ss.layout;
    const auto& g = m.system.graph;
    const std::size_t n = L.size() - L.n_zs;
    const MatrixXd At = ss.T_inverse_A().topLeftCorner(idx(n), idx(n));

    std::vector<double> k_subnet(m.decomposition.dc.size(), 1.0);
    for (std::size_t j = 0; j < m.decomposition.dc.size(); ++j) {
        const auto convs = subnet_converters(g, m.decomposition.dc[j]);
        if (!convs.empty()) k_subnet[j] = gains_of(m, convs.front()).k_omega;
    }
    VectorXd diag(idx(n));
    for (std::size_t k = 0; k < L.n_eta; ++k) diag(idx(L.eta() + k)) = g.ac_edges()[k].weight;
    for (std::size_t k = 0; k < L.n_omega; ++k) diag(idx(L.omega() + k)) = ss.T(idx(L.omega() + k), idx(L.omega() + k));
    for (std::size_t k = 0; k < L.n_v; ++k) {
        const std::size_t node = g.dc_order()[k];
        const auto o = idx(L.v() + k);
        diag(o) = k_subnet[*m.decomposition.dc_subnet_of[node]] * ss.T(o, o);
    }
    for (std::size_t k = 0; k < L.n_r; ++k) {
        const std::size_t node = m.classification.r[k];
        const double kg = m.sensitivities.at(g.node(node).id).k_g;
        const double scale = g.node(node).kind == NodeKind::DcNode
                                 ? k_subnet[*m.decomposition.dc_subnet_of[node]] / kg
                                 : 1.0 / kg;
        const auto o = idx(L.r() + k);
        diag(o) = scale * ss.T(o, o);
    }
    LyapunovMatrices out;
    out.M = 0.5 * MatrixXd(diag.asDiagonal());
    out.S = out.M * At + At.transpose() * out.M;
    return out;
}

LyapunovResult evaluate_lasalle(const SystemModel& m, std::size_t samples, std::uint64_t seed) {
    LyapunovResult out;
    out.evaluated = true;
    const LyapunovMatrices lm = lyapunov_matrices(m);
    if (lm.M.rows() == 0) {
        out.holds = true;
        return out;
    }
    out.min_eig_M = lm.M.diagonal().minCoeff();
    const MatrixXd Ssym = 0.5 * (lm.S + lm.S.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Ssym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "symmetric eigenvalue solver failed");
    out.max_eig_S = es.eigenvalues().maxCoeff();
    const MatrixXd X = random_unit_states(lm.S.rows(), samples, seed);
    out.max_sampled_rate = samples > 0 ? max_quadratic_form(lm.S, X) : 0.0;
    out.holds = out.min_eig_M > 0.0 && out.max_eig_S <= kLasalleTol && out.max_sampled_rate <= kLasalleTol;
    return out;
}

LyapunovResult lasalle_certificate(const SystemModel& m, const AnalysisOptions& options) {
    const Cond1Result c1 = check_cond1(m, false);
    if (!c1.strict_pass) {
        LyapunovResult r;
        r.reason = "Cond. 1 does not hold in strict form";
        return r;
    }
    for (const auto& [id, mode] : options.cond2_modes) {
        if (mode != Cond2Mode::Standard && m.system.graph.find(id) &&
            m.system.graph.node(m.system.graph.index_of(id)).kind == NodeKind::Converter) {
            LyapunovResult r;
            r.reason = "converter '" + id + "' uses a relaxed Cond. 2 mode";
            return r;
        }
    }
    const Cond2Result c2 = check_cond2(m, {});
    if (!c2.pass) {
        LyapunovResult r;
        r.reason = "Cond. 2 does not hold";
        return r;
    }
    LyapunovResult r = evaluate_lasalle(m, options.lasalle_samples, options.seed);
    if (!r.holds) {
        throw Error(ErrorCode::CertificateViolated,
                    "LaSalle certificate violated: max eig S = " + std::to_string(r.max_eig_S));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Spectrum and steady state
// ---------------------------------------------------------------------------

SpectrumResult spectrum(const SystemModel& m) {
    const auto& ss = m.state_space;
    const auto& L = ss.layout;
    SpectrumResult out;
    const MatrixXd M = ss.T_inverse_A();
    out.full = sorted_eigenvalues(M);

    const MatrixXd U = eta_range_basis(m.matrices.B_ac);
    const Index r = U.cols();
    out.cycle_dimension = L.n_eta - static_cast<std::size_t>(r);
    out.zs_dimension = L.n_zs;
    const Index rest = idx(L.size() - L.n_eta - L.n_zs);
    MatrixXd Q = MatrixXd::Zero(M.rows(), r + rest);
    if (r > 0) Q.topLeftCorner(idx(L.n_eta), r) = U;
    Q.block(idx(L.n_eta), r, rest, rest) = MatrixXd::Identity(rest, rest);
    const MatrixXd R = Q.transpose() * M * Q;
    out.restricted = sorted_eigenvalues(R);
    out.max_real_restricted = out.restricted.empty() ? -std::numeric_limits<double>::infinity()
                                                     : out.restricted.front().real();
    out.stable = out.max_real_restricted < -kStableTol;
    return out;
}

SteadyStateResult steady_state(const SystemModel& m, const VectorXd& p_d) {
    const auto& ss = m.state_space;
    const auto& L = ss.layout;
    if (p_d.size() != ss.B.cols()) throw Error(ErrorCode::DimensionMismatch, "disturbance vector has the wrong size");
    const MatrixXd U = eta_range_basis(m.matrices.B_ac);
    const Index r = U.cols();
    const Index rest = idx(L.size() - L.n_eta);
    MatrixXd Q = MatrixXd::Zero(idx(L.size()), r + rest);
    if (r > 0) Q.topLeftCorner(idx(L.n_eta), r) = U;
    Q.block(idx(L.n_eta), r, rest, rest) = MatrixXd::Identity(rest, rest);
    const MatrixXd AQ = ss.A * Q;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(AQ);
    qr.setThreshold(1e-11);
    if (qr.rank() < AQ.cols()) {
        throw Error(ErrorCode::SingularA, "A is singular on the admissible subspace");
    }
    const VectorXd rhs = -ss.B * p_d;
    SteadyStateResult out;
    out.x = Q * qr.solve(rhs);
    out.residual = (ss.A * out.x - rhs).lpNorm<Eigen::Infinity>();
    if (!(out.residual <= 1e-10 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()))) {
        throw Error(ErrorCode::SingularA, "steady-state residual too large");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Quasi-synchronous steady state
// ---------------------------------------------------------------------------

DroopSummary effective_droops(const SystemModel& m) {
    const auto& g = m.system.graph;
    const auto& dec = m.decomposition;
    DroopSummary out;
    out.ac_scale.assign(dec.ac.size(), std::numeric_limits<double>::quiet_NaN());
    out.dc_scale.assign(dec.dc.size(), std::numeric_limits<double>::quiet_NaN());

    // Breadth-first over the bipartite graph of subnets, starting from the largest ac subnet.
    std::vector<std::pair<bool, std::size_t>> queue;  // (is_ac, subnet)
    if (!dec.ac.empty()) {
        std::size_t ref = 0;
        for (std::size_t i = 1; i < dec.ac.size(); ++i) {
            if (dec.ac[i].nodes.size() > dec.ac[ref].nodes.size()) ref = i;
        }
        out.reference_ac_subnet = ref;
        out.ac_scale[ref] = 1.0;
        queue.emplace_back(true, ref);
    } else if (!dec.dc.empty()) {
        out.dc_scale[0] = 1.0;
        queue.emplace_back(false, 0);
    }
    for (std::size_t q = 0; q < queue.size(); ++q) {
        const auto [is_ac, s] = queue[q];
        for (std::size_t c : g.converters()) {
            const auto a = dec.ac_subnet_of[c];
            const auto d = dec.dc_subnet_of[c];
            if (!a || !d) continue;
            const double k = gains_of(m, c).k_omega;
            if (is_ac && *a == s && std::isnan(out.dc_scale[*d])) {
                if (!(k > 0.0)) throw Error(ErrorCode::ZeroSensitivity, "converter '" + g.node(c).id + "' has k_omega = 0");
                out.dc_scale[*d] = out.ac_scale[s] / k;
                queue.emplace_back(false, *d);
            } else if (!is_ac && *d == s && std::isnan(out.ac_scale[*a])) {
                out.ac_scale[*a] = k * out.dc_scale[s];
                queue.emplace_back(true, *a);
            }
        }
    }

    const auto in_r = mask_of(g.size(), m.classification.r);
    const auto in_w = mask_of(g.size(), m.classification.w);
    const auto in_pv = mask_of(g.size(), m.classification.pv);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(in_r[i] || in_w[i] || in_pv[i])) continue;
        const auto& s = m.sensitivities.at(g.node(i).id);
        DroopEntry e;
        e.node = g.node(i).id;
        double inv = 0.0;
        if (g.node(i).kind == NodeKind::Machine) {
            e.kind = s.source == SourceKind::Wind ? "wind" : "governor";
            inv = (s.k_g + s.k_w) * out.ac_scale[*dec.ac_subnet_of[i]];
        } else {
            e.kind = s.source == SourceKind::Pv ? "pv" : "dc_source";
            inv = (s.k_g + s.k_pv) * out.dc_scale[*dec.dc_subnet_of[i]];
        }
        e.kappa = 1.0 / inv;
        out.D += inv;
        out.entries.push_back(e);
    }
    return out;
}

double quasi_sync_frequency(const DroopSummary& droops, const VectorXd& p_d) {
    if (!(std::abs(droops.D) > 0.0) || !std::isfinite(droops.D)) {
        throw Error(ErrorCode::ZeroD, "no frequency-responsive device: D = 0");
    }
    return -p_d.sum() / droops.D;
}

std::map<std::string, double> quasi_sync_node_frequencies(const SystemModel& m, const DroopSummary& droops,
                                                          double omega_ref) {
    const auto& g = m.system.graph;
    std::map<std::string, double> out;
    for (std::size_t i : g.machines()) {
        out[g.node(i).id] = droops.ac_scale[*m.decomposition.ac_subnet_of[i]] * omega_ref;
    }
    for (std::size_t c : g.converters()) {
        out[g.node(c).id] = gains_of(m, c).k_omega * droops.dc_scale[*m.decomposition.dc_subnet_of[c]] * omega_ref;
    }
    return out;
}

std::map<std::string, double> steady_frequencies(const SystemModel& m, const VectorXd& x, const VectorXd& p_d) {
    const auto& g = m.system.graph;
    const auto& ss = m.state_space;
    std::map<std::string, double> out;
    for (std::size_t k = 0; k < g.machines().size(); ++k) {
        out[g.node(g.machines()[k]).id] = x(idx(ss.layout.omega() + k));
    }
    const VectorXd y = ss.converter_frequencies(x, p_d);
    for (std::size_t k = 0; k < g.converters().size(); ++k) out[g.node(g.converters()[k]).id] = y(idx(k));
    return out;
}

// ---------------------------------------------------------------------------
// Aggregate
// ---------------------------------------------------------------------------

bool StabilityReport::conditions_pass() const {
    return cond1.pass && cond2.pass && cond3.pass && cond5.pass;
}

StabilityReport analyze(const SystemModel& m, const AnalysisOptions& options) {
    StabilityReport r;
    r.cond1 = check_cond1(m, options.cond1_relaxation);
    r.cond2 = check_cond2(m, options.cond2_modes);
    r.cond3 = check_cond3(m.classification);
    r.cond5 = check_cond5(m);
    r.lemma1 = lemma1_quantities(m);
    if (options.n_minus_one) r.n_minus_one = n_minus_one(m);
    bool relaxed_mode = false;
    for (const auto& e : r.cond2.entries) relaxed_mode = relaxed_mode || e.mode != Cond2Mode::Standard;
    if (!r.cond1.strict_pass) {
        r.lasalle.reason = "Cond. 1 does not hold in strict form";
    } else if (relaxed_mode) {
        r.lasalle.reason = "a converter uses a relaxed Cond. 2 mode";
    } else if (!r.cond2.pass) {
        r.lasalle.reason = "Cond. 2 does not hold";
    } else {
        r.lasalle = evaluate_lasalle(m, options.lasalle_samples, options.seed);
    }
    r.spectrum = spectrum(m);
    return r;
}

}  // namespace hgfm
