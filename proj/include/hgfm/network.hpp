#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hgfm {

enum class NodeKind { Machine, Converter, DcNode };
enum class Terminal { Ac, Dc };

[[nodiscard]] const char* to_string(NodeKind kind) noexcept;

struct NodeSpec {
    std::string id;
    NodeKind kind = NodeKind::Machine;
};

// Passive bus eliminated by Kron reduction before the system is assembled.
struct PassiveBusSpec {
    std::string id;
    Terminal network = Terminal::Ac;
};

struct EdgeSpec {
    std::string from;
    std::string to;
    double weight = 0.0;  // b for ac lines, g for dc lines
};

struct NetworkDescription {
    std::vector<NodeSpec> nodes;
    std::vector<PassiveBusSpec> passive_buses;
    std::vector<EdgeSpec> ac_edges;
    std::vector<EdgeSpec> dc_edges;
};

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Machine;
};

// Edge endpoints are node indices with from < to, i.e. the lexicographically smaller id first.
struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    double weight = 0.0;
};

// Share of a power injection at an eliminated passive bus seen at each retained node.
struct LoadShare {
    std::size_t node = 0;
    double fraction = 0.0;
};

class SystemGraph {
public:
    SystemGraph() = default;
    SystemGraph(std::vector<Node> nodes, std::vector<Edge> ac_edges, std::vector<Edge> dc_edges);

    [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<Edge>& ac_edges() const noexcept { return ac_edges_; }
    [[nodiscard]] const std::vector<Edge>& dc_edges() const noexcept { return dc_edges_; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

    [[nodiscard]] std::optional<std::size_t> find(const std::string& id) const;
    [[nodiscard]] std::size_t index_of(const std::string& id) const;
    [[nodiscard]] const Node& node(std::size_t index) const { return nodes_.at(index); }

    // Node index lists sorted by id.
    [[nodiscard]] const std::vector<std::size_t>& machines() const noexcept { return machines_; }
    [[nodiscard]] const std::vector<std::size_t>& converters() const noexcept { return converters_; }
    [[nodiscard]] const std::vector<std::size_t>& dc_nodes() const noexcept { return dc_nodes_; }

    // Ac ordering is machines then converters; dc ordering is converters then dc nodes.
    [[nodiscard]] const std::vector<std::size_t>& ac_order() const noexcept { return ac_order_; }
    [[nodiscard]] const std::vector<std::size_t>& dc_order() const noexcept { return dc_order_; }
    [[nodiscard]] std::optional<std::size_t> ac_position(std::size_t node) const;
    [[nodiscard]] std::optional<std::size_t> dc_position(std::size_t node) const;

    [[nodiscard]] bool has_ac_terminal(std::size_t node) const;
    [[nodiscard]] bool has_dc_terminal(std::size_t node) const;

    // Passive buses removed during construction and where their injections go.
    std::map<std::string, std::vector<LoadShare>> passive_ac_loads;
    std::map<std::string, std::vector<LoadShare>> passive_dc_loads;

private:
    std::vector<Node> nodes_;
    std::vector<Edge> ac_edges_;
    std::vector<Edge> dc_edges_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::size_t> machines_;
    std::vector<std::size_t> converters_;
    std::vector<std::size_t> dc_nodes_;
    std::vector<std::size_t> ac_order_;
    std::vector<std::size_t> dc_order_;
    std::vector<std::optional<std::size_t>> ac_pos_;
    std::vector<std::optional<std::size_t>> dc_pos_;
};

struct KronOptions {
    double drop_tolerance = 1e-12;
};

struct KronResult {
    Eigen::MatrixXd reduced;      // L_RR - L_RI L_II^{-1} L_IR
    Eigen::MatrixXd disturbance;  // -L_RI L_II^{-1}, maps interior injections to retained nodes
};

[[nodiscard]] KronResult kron_reduce(const Eigen::MatrixXd& laplacian,
                                     const std::vector<std::size_t>& retained,
                                     const std::vector<std::size_t>& interior);

[[nodiscard]] SystemGraph build_graph(const NetworkDescription& description,
                                      const KronOptions& options = {});

struct Subnetwork {
    std::vector<std::size_t> nodes;  // node indices sorted
    std::vector<std::size_t> edges;  // indices into the ac or dc edge list
};

struct Decomposition {
    std::vector<Subnetwork> ac;
    std::vector<Subnetwork> dc;
    std::vector<std::optional<std::size_t>> ac_subnet_of;  // per node
    std::vector<std::optional<std::size_t>> dc_subnet_of;  // per node
};

[[nodiscard]] Decomposition decompose_subnetworks(const SystemGraph& graph);

// Weighted Laplacian of a node set with edges over node indices.
[[nodiscard]] Eigen::MatrixXd laplacian(std::size_t n, const std::vector<Edge>& edges);

}  // namespace hgfm
