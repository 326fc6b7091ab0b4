#include "hgfm/network.hpp"

#include "hgfm/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <utility>

namespace hgfm {

const char* to_string(NodeKind kind) noexcept {
    switch (kind) {
        case NodeKind::Machine: return "machine";
        case NodeKind::Converter: return "converter";
        case NodeKind::DcNode: return "dc";
    }
    return "unknown";
}

namespace {

std::vector<Edge> normalize_edges(const std::vector<Edge>& edges,
                                  const std::vector<std::size_t>& remap) {
    std::map<std::pair<std::size_t, std::size_t>, double> merged;
    for (const auto& e : edges) {
        std::size_t a = remap.at(e.from);
        std::size_t b = remap.at(e.to);
        if (a == b) {
            throw Error(ErrorCode::ValidationError, "self-loop edge");
        }
        if (a > b) std::swap(a, b);
        merged[{a, b}] += e.weight;
    }
    std::vector<Edge> out;
    out.reserve(merged.size());
    for (const auto& [key, w] : merged) {
        out.push_back(Edge{key.first, key.second, w});
    }
    return out;
}

}  // namespace

SystemGraph::SystemGraph(std::vector<Node> nodes, std::vector<Edge> ac_edges,
                         std::vector<Edge> dc_edges) {
    std::vector<std::size_t> perm(nodes.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return nodes[a].id < nodes[b].id; });
    std::vector<std::size_t> remap(nodes.size());
    nodes_.reserve(nodes.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        remap[perm[i]] = i;
        nodes_.push_back(nodes[perm[i]]);
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!index_.emplace(nodes_[i].id, i).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate node id '" + nodes_[i].id + "'");
        }
    }
    ac_edges_ = normalize_edges(ac_edges, remap);
    dc_edges_ = normalize_edges(dc_edges, remap);

    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        switch (nodes_[i].kind) {
            case NodeKind::Machine: machines_.push_back(i); break;
            case NodeKind::Converter: converters_.push_back(i); break;
            case NodeKind::DcNode: dc_nodes_.push_back(i); break;
        }
    }
    ac_order_ = machines_;
    ac_order_.insert(ac_order_.end(), converters_.begin(), converters_.end());
    dc_order_ = converters_;
    dc_order_.insert(dc_order_.end(), dc_nodes_.begin(), dc_nodes_.end());
    ac_pos_.assign(nodes_.size(), std::nullopt);
    dc_pos_.assign(nodes_.size(), std::nullopt);
    for (std::size_t k = 0; k < ac_order_.size(); ++k) ac_pos_[ac_order_[k]] = k;
    for (std::size_t k = 0; k < dc_order_.size(); ++k) dc_pos_[dc_order_[k]] = k;

    for (const auto& e : ac_edges_) {
        if (!has_ac_terminal(e.from) || !has_ac_terminal(e.to)) {
            throw Error(ErrorCode::KindMismatch, "ac edge " + nodes_[e.from].id + "-" +
                                                     nodes_[e.to].id + " touches a dc node");
        }
        if (!(e.weight > 0.0)) {
            throw Error(ErrorCode::ValidationError, "ac edge weight must be positive");
        }
    }
    for (const auto& e : dc_edges_) {
        if (!has_dc_terminal(e.from) || !has_dc_terminal(e.to)) {
            throw Error(ErrorCode::KindMismatch, "dc edge " + nodes_[e.from].id + "-" +
                                                     nodes_[e.to].id + " touches a machine");
        }
        if (!(e.weight > 0.0)) {
            throw Error(ErrorCode::ValidationError, "dc edge weight must be positive");
        }
    }
}

std::optional<std::size_t> SystemGraph::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t SystemGraph::index_of(const std::string& id) const {
    auto idx = find(id);
    if (!idx) throw Error(ErrorCode::ValidationError, "unknown node id '" + id + "'");
    return *idx;
}

std::optional<std::size_t> SystemGraph::ac_position(std::size_t node) const {
    return ac_pos_.at(node);
}

std::optional<std::size_t> SystemGraph::dc_position(std::size_t node) const {
    return dc_pos_.at(node);
}

bool SystemGraph::has_ac_terminal(std::size_t node) const {
    return nodes_.at(node).kind != NodeKind::DcNode;
}

bool SystemGraph::has_dc_terminal(std::size_t node) const {
    return nodes_.at(node).kind != NodeKind::Machine;
}

Eigen::MatrixXd laplacian(std::size_t n, const std::vector<Edge>& edges) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
    for (const auto& e : edges) {
        const auto a = static_cast<Eigen::Index>(e.from);
        const auto b = static_cast<Eigen::Index>(e.to);
        L(a, a) += e.weight;
        L(b, b) += e.weight;
        L(a, b) -= e.weight;
        L(b, a) -= e.weight;
    }
    return L;
}

KronResult kron_reduce(const Eigen::MatrixXd& L, const std::vector<std::size_t>& retained,
                       const std::vector<std::size_t>& interior) {
    const auto nr = static_cast<Eigen::Index>(retained.size());
    const auto ni = static_cast<Eigen::Index>(interior.size());
    if (static_cast<Eigen::Index>(retained.size() + interior.size()) != L.rows() ||
        L.rows() != L.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "kron_reduce: partition does not match matrix");
    }
    Eigen::MatrixXd Lrr(nr, nr), Lri(nr, ni), Lii(ni, ni);
    for (Eigen::Index i = 0; i < nr; ++i) {
        for (Eigen::Index j = 0; j < nr; ++j) Lrr(i, j) = L(retained[i], retained[j]);
        for (Eigen::Index j = 0; j < ni; ++j) Lri(i, j) = L(retained[i], interior[j]);
    }
    for (Eigen::Index i = 0; i < ni; ++i) {
        for (Eigen::Index j = 0; j < ni; ++j) Lii(i, j) = L(interior[i], interior[j]);
    }
    KronResult out;
    if (ni == 0) {
        out.reduced = Lrr;
        out.disturbance = Eigen::MatrixXd::Zero(nr, 0);
        return out;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Lii);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
        throw Error(ErrorCode::SingularInteriorBlock,
                    "interior block is singular: a passive cluster has no retained neighbour");
    }
    const Eigen::MatrixXd X = lu.solve(Lri.transpose());  // L_II^{-1} L_IR
    out.reduced = Lrr - Lri * X;
    out.disturbance = -X.transpose();
    return out;
}

namespace {

struct TerminalGraph {
    std::vector<std::string> ids;
    std::vector<bool> passive;
    std::map<std::string, std::size_t> index;
};

// Reduce one network (ac or dc) over its device nodes and passive buses.
std::vector<EdgeSpec> reduce_network(const TerminalGraph& tg, const std::vector<EdgeSpec>& edges,
                                     const KronOptions& options,
                                     std::map<std::string, std::vector<std::pair<std::string, double>>>& loads) {
    std::vector<Edge> idx_edges;
    for (const auto& e : edges) {
        idx_edges.push_back(Edge{tg.index.at(e.from), tg.index.at(e.to), e.weight});
    }
    const std::size_t n = tg.ids.size();
    bool any_passive = std::find(tg.passive.begin(), tg.passive.end(), true) != tg.passive.end();
    if (!any_passive) return edges;

    const Eigen::MatrixXd L = laplacian(n, idx_edges);
    std::vector<std::size_t> retained, interior;
    for (std::size_t i = 0; i < n; ++i) (tg.passive[i] ? interior : retained).push_back(i);
    const KronResult kr = kron_reduce(L, retained, interior);

    double wmax = 0.0;
    for (Eigen::Index i = 0; i < kr.reduced.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < kr.reduced.cols(); ++j) {
            wmax = std::max(wmax, -kr.reduced(i, j));
        }
    }
    std::vector<EdgeSpec> out;
    for (Eigen::Index i = 0; i < kr.reduced.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < kr.reduced.cols(); ++j) {
            const double w = -kr.reduced(i, j);
            if (w > options.drop_tolerance * std::max(1.0, wmax)) {
                out.push_back(EdgeSpec{tg.ids[retained[i]], tg.ids[retained[j]], w});
            }
        }
    }
    for (std::size_t k = 0; k < interior.size(); ++k) {
        auto& shares = loads[tg.ids[interior[k]]];
        for (std::size_t i = 0; i < retained.size(); ++i) {
            const double f = kr.disturbance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
            if (std::abs(f) > options.drop_tolerance) shares.emplace_back(tg.ids[retained[i]], f);
        }
    }
    return out;
}

}  // namespace

SystemGraph build_graph(const NetworkDescription& d, const KronOptions& options) {
    std::map<std::string, NodeKind> device_kind;
    std::map<std::string, Terminal> passive_kind;
    for (const auto& n : d.nodes) {
        if (n.id.empty()) throw Error(ErrorCode::ValidationError, "empty node id");
        if (!device_kind.emplace(n.id, n.kind).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate node id '" + n.id + "'");
        }
    }
    for (const auto& p : d.passive_buses) {
        if (device_kind.count(p.id) != 0 || !passive_kind.emplace(p.id, p.network).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate node id '" + p.id + "'");
        }
    }

    auto check_edge = [&](const EdgeSpec& e, Terminal net) {
        for (const auto* end : {&e.from, &e.to}) {
            auto dk = device_kind.find(*end);
            auto pk = passive_kind.find(*end);
            if (dk == device_kind.end() && pk == passive_kind.end()) {
                throw Error(ErrorCode::DanglingEdge, "edge " + e.from + "-" + e.to +
                                                         " references unknown node '" + *end + "'");
            }
            bool ok = false;
            if (dk != device_kind.end()) {
                ok = net == Terminal::Ac ? dk->second != NodeKind::DcNode
                                         : dk->second != NodeKind::Machine;
            } else {
                ok = pk->second == net;
            }
            if (!ok) {
                throw Error(ErrorCode::KindMismatch,
                            std::string(net == Terminal::Ac ? "ac" : "dc") + " edge " + e.from +
                                "-" + e.to + " touches node '" + *end + "' without that terminal");
            }
        }
        if (e.from == e.to) throw Error(ErrorCode::ValidationError, "self-loop at '" + e.from + "'");
        if (!(e.weight > 0.0)) {
            throw Error(ErrorCode::ValidationError,
                        "edge " + e.from + "-" + e.to + " must have a positive weight");
        }
    };
    for (const auto& e : d.ac_edges) check_edge(e, Terminal::Ac);
    for (const auto& e : d.dc_edges) check_edge(e, Terminal::Dc);

    auto make_terminal_graph = [&](Terminal net) {
        TerminalGraph tg;
        for (const auto& [id, kind] : device_kind) {
            bool has = net == Terminal::Ac ? kind != NodeKind::DcNode : kind != NodeKind::Machine;
            if (has) {
                tg.index[id] = tg.ids.size();
                tg.ids.push_back(id);
                tg.passive.push_back(false);
            }
        }
        for (const auto& [id, kind] : passive_kind) {
            if (kind == net) {
                tg.index[id] = tg.ids.size();
                tg.ids.push_back(id);
                tg.passive.push_back(true);
            }
        }
        return tg;
    };

    std::map<std::string, std::vector<std::pair<std::string, double>>> ac_loads, dc_loads;
    const auto ac_reduced = reduce_network(make_terminal_graph(Terminal::Ac), d.ac_edges, options, ac_loads);
    const auto dc_reduced = reduce_network(make_terminal_graph(Terminal::Dc), d.dc_edges, options, dc_loads);

    std::vector<Node> nodes;
    std::map<std::string, std::size_t> local;
    for (const auto& n : d.nodes) {
        local[n.id] = nodes.size();
        nodes.push_back(Node{n.id, n.kind});
    }
    auto to_edges = [&](const std::vector<EdgeSpec>& specs) {
        std::vector<Edge> out;
        for (const auto& e : specs) out.push_back(Edge{local.at(e.from), local.at(e.to), e.weight});
        return out;
    };
    SystemGraph graph(std::move(nodes), to_edges(ac_reduced), to_edges(dc_reduced));

    // Connectivity over the union of ac and dc edges.
    const std::size_t n = graph.size();
    if (n == 0) throw Error(ErrorCode::ValidationError, "network has no device nodes");
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto* edges : {&graph.ac_edges(), &graph.dc_edges()}) {
        for (const auto& e : *edges) parent[root(e.from)] = root(e.to);
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (root(i) != root(0)) {
            throw Error(ErrorCode::Disconnected, "node '" + graph.node(i).id +
                                                     "' is not connected to '" + graph.node(0).id + "'");
        }
    }

    auto convert_loads = [&](const auto& raw, auto& target) {
        for (const auto& [bus, shares] : raw) {
            auto& vec = target[bus];
            for (const auto& [id, f] : shares) vec.push_back(LoadShare{graph.index_of(id), f});
        }
    };
    convert_loads(ac_loads, graph.passive_ac_loads);
    convert_loads(dc_loads, graph.passive_dc_loads);
    return graph;
}

Decomposition decompose_subnetworks(const SystemGraph& graph) {
    const std::size_t n = graph.size();
    Decomposition out;
    out.ac_subnet_of.assign(n, std::nullopt);
    out.dc_subnet_of.assign(n, std::nullopt);

    auto split = [&](const std::vector<Edge>& edges, bool ac, std::vector<Subnetwork>& subnets,
                     std::vector<std::optional<std::size_t>>& owner) {
        std::vector<std::vector<std::size_t>> adj(n);
        for (const auto& e : edges) {
            adj[e.from].push_back(e.to);
            adj[e.to].push_back(e.from);
        }
        for (std::size_t s = 0; s < n; ++s) {
            const bool has = ac ? graph.has_ac_terminal(s) : graph.has_dc_terminal(s);
            if (!has || owner[s]) continue;
            const std::size_t id = subnets.size();
            Subnetwork sub;
            std::vector<std::size_t> stack{s};
            owner[s] = id;
            while (!stack.empty()) {
                const std::size_t u = stack.back();
                stack.pop_back();
                sub.nodes.push_back(u);
                for (std::size_t v : adj[u]) {
                    if (!owner[v]) {
                        owner[v] = id;
                        stack.push_back(v);
                    }
                }
            }
            std::sort(sub.nodes.begin(), sub.nodes.end());
            subnets.push_back(std::move(sub));
        }
        for (std::size_t k = 0; k < edges.size(); ++k) {
            subnets[*owner[edges[k].from]].edges.push_back(k);
        }
    };
    split(graph.ac_edges(), true, out.ac, out.ac_subnet_of);
    split(graph.dc_edges(), false, out.dc, out.dc_subnet_of);
    return out;
}

}  // namespace hgfm
