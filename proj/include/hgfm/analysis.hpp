#pragma once

#include "hgfm/assembly.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hgfm {

enum class Cond2Mode { Standard, PointToPoint, Relaxed, DirectFed };

[[nodiscard]] const char* to_string(Cond2Mode mode) noexcept;
[[nodiscard]] Cond2Mode cond2_mode_from_string(const std::string& s);

struct AnalysisOptions {
    bool cond1_relaxation = false;
    std::map<std::string, Cond2Mode> cond2_modes;  // default Standard
    bool n_minus_one = false;
    std::size_t lasalle_samples = 1000;
    std::uint64_t seed = 20240611;
};

// ---------------------------------------------------------------------------
// Condition 1: equal k_omega within every dc subnetwork
// ---------------------------------------------------------------------------

enum class Cond1Relaxation { None, PointToPoint, SingleCoupling };

struct Cond1Subnet {
    std::size_t subnet = 0;
    std::vector<std::string> converters;
    std::vector<double> k_omega;
    bool equal = true;
    Cond1Relaxation relaxation = Cond1Relaxation::None;
    bool pass = true;
};

struct Cond1Result {
    bool strict_pass = true;
    bool pass = true;  // after relaxation when enabled
    std::vector<Cond1Subnet> subnets;
    std::vector<std::string> witness;  // converters of the first failing subnet
};

[[nodiscard]] Cond1Result check_cond1(const SystemModel& model, bool relaxation);

// ---------------------------------------------------------------------------
// Condition 2: k_p bound per converter
// ---------------------------------------------------------------------------

struct Cond2Entry {
    std::string converter;
    Cond2Mode mode = Cond2Mode::Standard;
    double k_p = 0.0;
    double bound = 0.0;   // upper bound on k_p (infinity when only k_p > 0 is required)
    double margin = 0.0;  // bound - k_p, or k_p for positivity-only modes
    bool pass = true;
};

struct Cond2Result {
    bool pass = true;
    std::vector<Cond2Entry> entries;
};

[[nodiscard]] Cond2Result check_cond2(const SystemModel& model, const std::map<std::string, Cond2Mode>& modes);

// Lemma-1 quantities for one dc subnet with a common k_omega:
// gershgorin = max_l (sum_E g e_l + sum_{E cap conv x conv} g sqrt(e_l e_k)),
// spectral = lambda_max(E^{1/2} L_cc E^{1/2}); both are compared with 4 k_omega.
struct Lemma1Entry {
    std::size_t subnet = 0;
    double k_omega = 0.0;
    double gershgorin = 0.0;
    double spectral = 0.0;
};

[[nodiscard]] std::vector<Lemma1Entry> lemma1_quantities(const SystemModel& model);

// ---------------------------------------------------------------------------
// Condition 3 and conditions 4/5
// ---------------------------------------------------------------------------

struct Cond3Result {
    bool pass = false;
    std::size_t n_r = 0;
    std::size_t n_pv = 0;
    std::size_t n_w = 0;
};

[[nodiscard]] Cond3Result check_cond3(const Classification& classification);

struct SyncAcResult {
    bool pass = true;
    std::optional<std::string> witness;                       // first node of N3 without a match
    std::vector<std::string> failing;                         // all such nodes
    std::vector<std::pair<std::string, std::string>> matches;  // (k in N3, degree-one neighbour in N1)
};

// Edge indices refer to graph.ac_edges(); node sets are node indices.
[[nodiscard]] SyncAcResult check_syncac(const SystemGraph& graph, const std::vector<std::size_t>& edges,
                                        const std::vector<std::size_t>& n1, const std::vector<std::size_t>& n2,
                                        const std::vector<std::size_t>& n3);

struct Cond5Subnet {
    std::size_t subnet = 0;
    std::vector<std::string> nodes;
    std::string shortcut;  // "i".."v" when a structural shortcut applies
    SyncAcResult case_i;
    SyncAcResult case_ii;
    bool pass = false;
    std::string via;  // "shortcut", "case i", "case ii" or ""
};

struct Cond5Result {
    bool pass = true;
    std::vector<Cond5Subnet> subnets;
    std::optional<std::string> witness;
};

[[nodiscard]] Cond5Result check_cond5(const SystemGraph& graph, const Decomposition& decomposition,
                                      const Classification& classification, const SensitivityTable& sens);
[[nodiscard]] Cond5Result check_cond5(const SystemModel& model);

struct NMinusOneEntry {
    std::string removed;
    std::string kind;  // "node", "ac_edge" or "dc_edge"
    bool pass = false;
    std::optional<std::string> witness;
};

[[nodiscard]] std::vector<NMinusOneEntry> n_minus_one_serial(const SystemModel& model);
[[nodiscard]] std::vector<NMinusOneEntry> n_minus_one(const SystemModel& model);

// ---------------------------------------------------------------------------
// Lyapunov certificate, spectrum, steady state
// ---------------------------------------------------------------------------

struct LyapunovResult {
    bool evaluated = false;
    std::string reason;
    double min_eig_M = 0.0;
    double max_eig_S = 0.0;
    double max_sampled_rate = 0.0;
    bool holds = false;
};

// Always evaluates; ignores the Cond.-1/2 preconditions.
[[nodiscard]] LyapunovResult evaluate_lasalle(const SystemModel& model, std::size_t samples, std::uint64_t seed);
// Checks preconditions, throws CertificateViolated when the certificate fails.
[[nodiscard]] LyapunovResult lasalle_certificate(const SystemModel& model, const AnalysisOptions& options);

// Lyapunov matrices on the state without P_zs: M and S = M T^{-1}A + (T^{-1}A)^T M.
struct LyapunovMatrices {
    Eigen::MatrixXd M;
    Eigen::MatrixXd S;
};
[[nodiscard]] LyapunovMatrices lyapunov_matrices(const SystemModel& model);

struct SpectrumResult {
    std::vector<std::complex<double>> full;        // eigenvalues of T^{-1}A
    std::vector<std::complex<double>> restricted;  // eta in range(B^T), P_zs removed
    double max_real_restricted = 0.0;
    std::size_t cycle_dimension = 0;
    std::size_t zs_dimension = 0;
    bool stable = false;
};

[[nodiscard]] SpectrumResult spectrum(const SystemModel& model);

struct SteadyStateResult {
    Eigen::VectorXd x;
    double residual = 0.0;
};

[[nodiscard]] SteadyStateResult steady_state(const SystemModel& model, const Eigen::VectorXd& p_d);

// ---------------------------------------------------------------------------
// Quasi-synchronous steady state
// ---------------------------------------------------------------------------

struct DroopEntry {
    std::string node;
    std::string kind;  // governor, wind, dc_source, pv
    double kappa = 0.0;
};

struct DroopSummary {
    std::vector<DroopEntry> entries;
    double D = 0.0;
    std::optional<std::size_t> reference_ac_subnet;
    std::vector<double> ac_scale;  // frequency of each ac subnet relative to the reference
    std::vector<double> dc_scale;  // voltage deviation of each dc subnet relative to the reference
};

[[nodiscard]] DroopSummary effective_droops(const SystemModel& model);
[[nodiscard]] double quasi_sync_frequency(const DroopSummary& droops, const Eigen::VectorXd& p_d);

// Predicted frequency at every machine and converter for the quasi-synchronous state.
[[nodiscard]] std::map<std::string, double> quasi_sync_node_frequencies(const SystemModel& model,
                                                                        const DroopSummary& droops,
                                                                        double omega_ref);

// Steady-state frequency of every machine and converter from a steady state x.
[[nodiscard]] std::map<std::string, double> steady_frequencies(const SystemModel& model, const Eigen::VectorXd& x,
                                                               const Eigen::VectorXd& p_d);

// ---------------------------------------------------------------------------
// Aggregate
// ---------------------------------------------------------------------------

struct StabilityReport {
    Cond1Result cond1;
    Cond2Result cond2;
    Cond3Result cond3;
    Cond5Result cond5;
    std::vector<Lemma1Entry> lemma1;
    std::vector<NMinusOneEntry> n_minus_one;
    LyapunovResult lasalle;
    SpectrumResult spectrum;

    [[nodiscard]] bool conditions_pass() const;
};

[[nodiscard]] StabilityReport analyze(const SystemModel& model, const AnalysisOptions& options);

}  // namespace hgfm
