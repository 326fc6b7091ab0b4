#pragma once

#include "hgfm/assembly.hpp"

#include <Eigen/Dense>

#include <ostream>
#include <string>
#include <vector>

namespace hgfm {

struct SimOptions {
    double h = 1e-3;
    double t_end = 10.0;
    std::size_t stride = 1;  // keep every stride-th step
};

// Samples are rows. States use the linear coordinates (eta, omega, v, P_r, P_zs) as deviations
// from the operating point for both the linear and the nonlinear model.
struct Trajectory {
    std::vector<double> t;
    Eigen::MatrixXd states;
    std::vector<std::string> state_names;
    Eigen::MatrixXd frequencies;  // machines then converters
    std::vector<std::string> frequency_names;

    [[nodiscard]] std::vector<double> frequency(const std::string& node) const;
    [[nodiscard]] std::vector<double> state(const std::string& name) const;
};

// Cumulative step disturbances evaluated right-continuously on the step grid.
class DisturbanceSchedule {
public:
    DisturbanceSchedule(const SystemGraph& graph, std::vector<Disturbance> events, double h);

    [[nodiscard]] const Eigen::VectorXd& at_step(std::size_t k);

private:
    std::vector<std::pair<std::size_t, Eigen::VectorXd>> steps_;
    Eigen::VectorXd current_;
    std::size_t next_ = 0;
};

[[nodiscard]] Trajectory simulate_linear(const SystemModel& model, const std::vector<Disturbance>& events,
                                         const SimOptions& options,
                                         const Eigen::VectorXd& x0 = Eigen::VectorXd());

// Nonlinear model with sinusoidal ac flows, bilinear dc flows and the PI form of the converter
// control. All dc setpoints must be 1 p.u.; the nominal point has equal angles and zero flows.
[[nodiscard]] Trajectory simulate_nonlinear(const SystemModel& model, const std::vector<Disturbance>& events,
                                            const SimOptions& options);

struct FrequencyMetrics {
    std::string node;
    double rocof = 0.0;
    double nadir = 0.0;
    double t_nadir = 0.0;
    double settling = 0.0;
};

[[nodiscard]] FrequencyMetrics frequency_metrics(const std::vector<double>& t, const std::vector<double>& w,
                                                 double window = 0.3);
[[nodiscard]] std::vector<FrequencyMetrics> metrics(const Trajectory& traj, const std::vector<std::string>& nodes,
                                                    double window = 0.3);

void write_csv(const Trajectory& traj, std::ostream& os);

}  // namespace hgfm
