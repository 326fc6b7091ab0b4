#pragma once

#include "hgfm/devices.hpp"
#include "hgfm/network.hpp"

#include <Eigen/Dense>

namespace hgfm {

// Incidence, weight, Laplacian and selector matrices in the canonical orderings:
// ac terminals = machines then converters, dc terminals = converters then dc nodes.
struct NetworkMatrices {
    Eigen::MatrixXd B_ac;   // |N_ac u N_c| x |E_ac|, +1 at the smaller id
    Eigen::MatrixXd W_ac;   // diag(b)
    Eigen::MatrixXd B_dc;   // |N_c u N_dc| x |E_dc|
    Eigen::MatrixXd W_dc;   // diag(g)
    Eigen::MatrixXd L_ac;
    Eigen::MatrixXd L_dc;
    Eigen::MatrixXd I_ac;   // machines within the ac ordering
    Eigen::MatrixXd I_cac;  // converters within the ac ordering
    Eigen::MatrixXd I_cdc;  // converters within the dc ordering
    Eigen::MatrixXd I_dc;   // dc nodes within the dc ordering
    Eigen::MatrixXd I_r_ac;   // |N_r| x |N_ac|
    Eigen::MatrixXd I_r_dc;   // |N_r| x |N_dc|
    Eigen::MatrixXd I_zs_ac;  // |N_zs| x |N_ac|
    Eigen::MatrixXd I_zs_dc;  // |N_zs| x |N_dc|
    Eigen::MatrixXd I_w;      // |N_w| x |N_ac|
    Eigen::MatrixXd I_pv;     // |N_pv| x |N_dc|
};

[[nodiscard]] NetworkMatrices network_matrices(const SystemGraph& graph,
                                               const Classification& classification);

}  // namespace hgfm
