#include "hgfm/matrices.hpp"

#include <functional>

namespace hgfm {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

Index idx(std::size_t v) { return static_cast<Index>(v); }

MatrixXd incidence(std::size_t rows, const std::vector<Edge>& edges,
                   const std::function<std::size_t(std::size_t)>& position) {
    MatrixXd B = MatrixXd::Zero(idx(rows), idx(edges.size()));
    for (std::size_t k = 0; k < edges.size(); ++k) {
        B(idx(position(edges[k].from)), idx(k)) = 1.0;
        B(idx(position(edges[k].to)), idx(k)) = -1.0;
    }
    return B;
}

MatrixXd weights(const std::vector<Edge>& edges) {
    MatrixXd W = MatrixXd::Zero(idx(edges.size()), idx(edges.size()));
    for (std::size_t k = 0; k < edges.size(); ++k) W(idx(k), idx(k)) = edges[k].weight;
    return W;
}

// Rows pick members of `set` among `columns` (matched by node index); members not in columns
// give an empty row.
MatrixXd selector(const std::vector<std::size_t>& set, const std::vector<std::size_t>& columns) {
    MatrixXd S = MatrixXd::Zero(idx(set.size()), idx(columns.size()));
    for (std::size_t r = 0; r < set.size(); ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c] == set[r]) S(idx(r), idx(c)) = 1.0;
        }
    }
    return S;
}

}  // namespace

NetworkMatrices network_matrices(const SystemGraph& g, const Classification& cls) {
    NetworkMatrices m;
    const auto& ac = g.ac_order();
    const auto& dc = g.dc_order();
    m.B_ac = incidence(ac.size(), g.ac_edges(), [&](std::size_t n) { return *g.ac_position(n); });
    m.B_dc = incidence(dc.size(), g.dc_edges(), [&](std::size_t n) { return *g.dc_position(n); });
    m.W_ac = weights(g.ac_edges());
    m.W_dc = weights(g.dc_edges());
    m.L_ac = m.B_ac * m.W_ac * m.B_ac.transpose();
    m.L_dc = m.B_dc * m.W_dc * m.B_dc.transpose();
    m.I_ac = selector(g.machines(), ac);
    m.I_cac = selector(g.converters(), ac);
    m.I_cdc = selector(g.converters(), dc);
    m.I_dc = selector(g.dc_nodes(), dc);
    m.I_r_ac = selector(cls.r, g.machines());
    m.I_r_dc = selector(cls.r, g.dc_nodes());
    m.I_zs_ac = selector(cls.zs, g.machines());
    m.I_zs_dc = selector(cls.zs, g.dc_nodes());
    m.I_w = selector(cls.w, g.machines());
    m.I_pv = selector(cls.pv, g.dc_nodes());
    return m;
}

}  // namespace hgfm
