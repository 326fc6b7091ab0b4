#include <catch2/catch_amalgamated.hpp>

#include "hgfm/assembly.hpp"
#include "hgfm/error.hpp"
#include "hgfm/random_systems.hpp"
#include "hgfm/sim.hpp"
#include "scalar_oracle.hpp"

#include <random>

using namespace hgfm;
using Catch::Approx;

namespace {

// SG - VSC over one ac line, VSC - dc node over one dc line.
HybridSystem two_area_system() {
    HybridSystem s;
    s.graph = SystemGraph({{"SG", NodeKind::Machine}, {"VSC", NodeKind::Converter}, {"DC", NodeKind::DcNode}},
                          {{0, 1, 8.0}}, {{1, 2, 25.0}});
    MachineParams m;
    m.J = 4.0;
    m.governor = Governor{0.5, 20.0, 0.0};
    s.devices.machines["SG"] = m;
    s.devices.buses["VSC"] = DcBusParams{0.1, 1.0, {}};
    s.devices.buses["DC"] = DcBusParams{0.05, 1.0, ControllableDc{0.3, 5.0, 0.0}};
    s.gains["VSC"] = ConverterGains{0.002, 0.2};
    return s;
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_CASE("assembled dimensions follow the node classification", "[assembly]") {
    const SystemModel m = build_model(two_area_system());
    const auto& L = m.state_space.layout;
    CHECK(L.n_eta == 1);
    CHECK(L.n_omega == 1);
    CHECK(L.n_v == 2);
    CHECK(L.n_r == 2);
    CHECK(L.n_zs == 0);
    CHECK(m.state_space.A.rows() == 6);
    CHECK(m.state_space.B.cols() == 2 + 2);
    CHECK(m.state_space.T(1, 1) == Approx(4.0));
    CHECK(m.state_space.T(2, 2) == Approx(0.1));
}

TEST_CASE("two-node entries match hand derivation", "[assembly]") {
    const SystemModel m = build_model(two_area_system());
    const auto& A = m.state_space.A;
    // eta = theta_SG - theta_VSC; deta/dt = omega - (k_p vdot + k_omega v)
    const double kp = 0.002, kw = 0.2, c = 0.1, b = 8.0, gdc = 25.0;
    CHECK(A(0, 0) == Approx(-kp / c * b));     // k_p/c * P_ac with P_ac = -b eta
    CHECK(A(0, 1) == Approx(1.0));
    CHECK(A(0, 2) == Approx(-kw + kp / c * gdc));
    CHECK(A(0, 3) == Approx(-kp / c * gdc));
    CHECK(A(1, 0) == Approx(-b));
    // sources are ordered by id: P_r = (DC, SG)
    CHECK(A(1, 5) == Approx(1.0));
    CHECK(A(2, 0) == Approx(b));               // converter receives +b eta
    CHECK(A(2, 2) == Approx(-gdc));
    CHECK(A(3, 4) == Approx(1.0));
    CHECK(A(5, 1) == Approx(-20.0));
    CHECK(A(4, 3) == Approx(-5.0));
}

TEST_CASE("every selector row has exactly one entry", "[assembly]") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const SystemModel m = build_model(random_system(rng));
        const auto& M = m.matrices;
        for (const Eigen::MatrixXd* sel : {&M.I_ac, &M.I_cac, &M.I_cdc, &M.I_dc, &M.I_w, &M.I_pv}) {
            for (Eigen::Index r = 0; r < sel->rows(); ++r) CHECK(sel->row(r).sum() == Approx(1.0));
        }
        Eigen::MatrixXd r(M.I_r_ac.rows(), M.I_r_ac.cols() + M.I_r_dc.cols());
        r << M.I_r_ac, M.I_r_dc;
        for (Eigen::Index k = 0; k < r.rows(); ++k) CHECK(r.row(k).sum() == Approx(1.0));
        CHECK((M.L_dc - M.L_dc.transpose()).norm() == Approx(0.0));
        CHECK(M.L_dc.rowwise().sum().norm() == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("assembled model reproduces the scalar node equations", "[assembly][oracle]") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const SystemModel m = build_model(random_system(rng));
        const oracle::ScalarOracle ref(m);
        std::normal_distribution<double> normal(0.0, 0.1);
        Eigen::VectorXd z(static_cast<long>(ref.size()));
        for (long i = 0; i < z.size(); ++i) z(i) = normal(rng);
        Eigen::VectorXd pd(m.state_space.B.cols());
        for (long i = 0; i < pd.size(); ++i) pd(i) = normal(rng);
        const Eigen::VectorXd x = ref.to_state(z);
        const Eigen::VectorXd via_matrix = m.state_space.derivative(x, pd);
        const Eigen::VectorXd via_oracle = ref.to_state(ref.derivative(z, pd));
        CHECK(max_abs_diff(via_matrix, via_oracle) < 1e-10);
    }
}

TEST_CASE("missing converter gains are reported", "[assembly]") {
    HybridSystem s = two_area_system();
    s.gains.clear();
    CHECK_THROWS_MATCHES(build_model(s), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::MissingGains; }));
}

TEST_CASE("disturbances map to terminals", "[assembly]") {
    const SystemModel m = build_model(two_area_system());
    const auto& g = m.system.graph;
    const Eigen::VectorXd p = disturbance_vector(g, {{0.0, "SG", Terminal::Ac, 0.1}, {0.0, "DC", Terminal::Dc, 0.2}});
    CHECK(p.sum() == Approx(0.3));
    CHECK(p(0) == Approx(0.1));
    CHECK(p(3) == Approx(0.2));
    CHECK_THROWS_AS(disturbance_vector(g, {{0.0, "SG", Terminal::Dc, 0.1}}), Error);
}
