#pragma once

#include "hgfm/control.hpp"
#include "hgfm/devices.hpp"
#include "hgfm/matrices.hpp"
#include "hgfm/network.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace hgfm {

struct HybridSystem {
    SystemGraph graph;
    DeviceSet devices;
    GainTable gains;
};

// State x = (eta, omega, v, P_r, P_zs):
// eta over ac edges, omega over machines, v over the dc ordering, then source states.
struct StateLayout {
    std::size_t n_eta = 0;
    std::size_t n_omega = 0;
    std::size_t n_v = 0;
    std::size_t n_r = 0;
    std::size_t n_zs = 0;

    [[nodiscard]] std::size_t eta() const noexcept { return 0; }
    [[nodiscard]] std::size_t omega() const noexcept { return n_eta; }
    [[nodiscard]] std::size_t v() const noexcept { return n_eta + n_omega; }
    [[nodiscard]] std::size_t r() const noexcept { return n_eta + n_omega + n_v; }
    [[nodiscard]] std::size_t zs() const noexcept { return n_eta + n_omega + n_v + n_r; }
    [[nodiscard]] std::size_t size() const noexcept { return zs() + n_zs; }

    std::vector<std::string> names;
};

// T xdot = A x + B P_d, converter frequencies y = F xdot + G x.
struct StateSpace {
    StateLayout layout;
    Eigen::MatrixXd T;
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd F;
    Eigen::MatrixXd G;
    std::vector<std::string> disturbance_names;  // ac terminals then dc terminals
    std::vector<std::string> output_names;       // converters

    [[nodiscard]] Eigen::VectorXd derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& p_d) const;
    [[nodiscard]] Eigen::VectorXd converter_frequencies(const Eigen::VectorXd& x,
                                                        const Eigen::VectorXd& p_d) const;
    [[nodiscard]] Eigen::MatrixXd T_inverse_A() const;
    [[nodiscard]] Eigen::MatrixXd T_inverse_B() const;
};

[[nodiscard]] StateSpace assemble_system(const SystemGraph& graph, const DeviceSet& devices,
                                         const GainTable& gains, const SensitivityTable& sensitivities,
                                         const Classification& classification,
                                         const NetworkMatrices& matrices);

// Everything derived from a hybrid system that the analysis and simulation layers need.
struct SystemModel {
    HybridSystem system;
    SensitivityTable sensitivities;
    Classification classification;
    Decomposition decomposition;
    NetworkMatrices matrices;
    StateSpace state_space;
};

[[nodiscard]] SystemModel build_model(HybridSystem system);

struct Disturbance {
    double time = 0.0;
    std::string node;
    Terminal terminal = Terminal::Ac;
    double dP = 0.0;
};

// Disturbance vector P_d (load convention: positive dP draws power).
[[nodiscard]] Eigen::VectorXd disturbance_vector(const SystemGraph& graph,
                                                 const std::vector<Disturbance>& disturbances);

[[nodiscard]] std::size_t disturbance_size(const SystemGraph& graph);

// Matrices as text with row and column labels.
[[nodiscard]] std::string dump_state_space(const StateSpace& ss);

}  // namespace hgfm
