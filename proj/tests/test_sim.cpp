#include <catch2/catch_amalgamated.hpp>

#include "hgfm/analysis.hpp"
#include "hgfm/error.hpp"
#include "hgfm/random_systems.hpp"
#include "hgfm/scenario.hpp"
#include "hgfm/sim.hpp"

#include "scalar_oracle.hpp"

#include <random>
#include <sstream>

using namespace hgfm;
using Catch::Approx;

namespace {

std::string fixture(const std::string& name) { return std::string(HGFM_FIXTURE_DIR) + "/" + name; }

std::vector<Disturbance> random_steps(std::mt19937_64& rng, const SystemGraph& g, int count, double t_max) {
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
    std::uniform_real_distribution<double> dp(-0.2, 0.2), t(0.0, t_max);
    std::vector<Disturbance> out;
    for (int k = 0; k < count; ++k) {
        const auto& node = g.node(pick(rng));
        Disturbance d;
        d.time = std::round(t(rng) * 100.0) / 100.0;
        d.node = node.id;
        d.terminal = node.kind == NodeKind::DcNode ? Terminal::Dc : Terminal::Ac;
        d.dP = dp(rng);
        out.push_back(d);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    return out;
}

Eigen::VectorXd final_state(const Trajectory& tr) { return tr.states.row(tr.states.rows() - 1).transpose(); }

// Step well inside the RK4 stability region.
double safe_step(const SystemModel& m, double cap) {
    const Eigen::MatrixXd A = m.state_space.T_inverse_A();
    const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
    return std::min(cap, 1.0 / rho);
}

double max_freq_gap(const Trajectory& a, const Trajectory& b) {
    REQUIRE(a.frequencies.rows() == b.frequencies.rows());
    return (a.frequencies - b.frequencies).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("RoCoF of a ramp is its slope", "[sim][metrics]") {
    std::vector<double> t, w;
    for (int k = 0; k <= 2000; ++k) {
        t.push_back(k * 1e-3);
        w.push_back(-0.004 * t.back() + 0.01);
    }
    const FrequencyMetrics m = frequency_metrics(t, w, 0.3);
    CHECK(m.rocof == Approx(0.004).epsilon(1e-12));
    CHECK(m.nadir == Approx(w.back()));
    CHECK(m.t_nadir == Approx(2.0));

    const std::vector<double> flat(t.size(), 0.02);
    const FrequencyMetrics c = frequency_metrics(t, flat, 0.3);
    CHECK(c.rocof == 0.0);
    CHECK(c.settling == Approx(0.02));

    try {
        (void)frequency_metrics(t, w, 2.5);
        FAIL("expected WindowTooLong");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::WindowTooLong);
    }
}

TEST_CASE("nadir and settling match a direct scan on fig8", "[sim][metrics]") {
    const ScenarioRun run = build_run(load_scenario(fixture("fig8.json")));
    const SystemModel model = build_model(run.system);
    SimOptions o = run.simulation;
    o.t_end = 20.0;
    const Trajectory tr = simulate_linear(model, run.disturbances, o);
    for (const auto& m : metrics(tr, run.monitored, run.rocof_window)) {
        const auto w = tr.frequency(m.node);
        double lo = w[0];
        std::size_t at = 0;
        for (std::size_t i = 1; i < w.size(); ++i) {
            if (w[i] < lo) {
                lo = w[i];
                at = i;
            }
        }
        CHECK(m.nadir == lo);
        CHECK(m.t_nadir == tr.t[at]);
        const std::size_t tail = w.size() / 20;
        double sum = 0.0;
        for (std::size_t i = w.size() - tail; i < w.size(); ++i) sum += w[i];
        CHECK(m.settling == Approx(sum / static_cast<double>(tail)).epsilon(1e-12));
        CHECK(m.nadir < 0.0);
        CHECK(m.rocof > 0.0);
    }
}

TEST_CASE("zero input keeps the linear model at rest", "[sim][linear]") {
    std::mt19937_64 rng(21);
    const SystemModel m = build_model(random_system(rng));
    const Trajectory tr = simulate_linear(m, {}, SimOptions{1e-3, 2.0, 10});
    CHECK(tr.states.cwiseAbs().maxCoeff() == 0.0);
    CHECK(tr.frequencies.cwiseAbs().maxCoeff() == 0.0);
    CHECK(tr.t.size() == 201);
}

TEST_CASE("linear trajectories agree with the scalar node equations", "[sim][linear][oracle]") {
    std::mt19937_64 rng(33);
    const double h = 1e-3;
    for (int trial = 0; trial < 10; ++trial) {
        const SystemModel m = build_model(random_certified_system(rng));
        const auto events = random_steps(rng, m.system.graph, 3, 2.0);
        const Trajectory tr = simulate_linear(m, events, SimOptions{h, 3.0, 1});

        const oracle::ScalarOracle ref(m);
        DisturbanceSchedule schedule(m.system.graph, events, h);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<long>(ref.size()));
        double worst = 0.0;
        for (std::size_t k = 0; k + 1 < tr.t.size(); ++k) {
            z = ref.rk4(z, schedule.at_step(k), h);
            const Eigen::VectorXd x = tr.states.row(static_cast<long>(k + 1)).transpose();
            worst = std::max(worst, (ref.to_state(z) - x).cwiseAbs().maxCoeff());
        }
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("linear integrator is fourth order", "[sim][linear]") {
    std::mt19937_64 rng(4);
    const SystemModel m = build_model(random_certified_system(rng));
    std::normal_distribution<double> normal(0.0, 0.05);
    Eigen::VectorXd x0(static_cast<long>(m.state_space.layout.size()));
    for (long i = 0; i < x0.size(); ++i) x0(i) = normal(rng);
    const double h = 0.1 * safe_step(m, 0.5);
    const double t_end = 200.0 * h;
    const auto end = [&](double step) {
        return final_state(simulate_linear(m, {}, SimOptions{step, t_end, 1}, x0));
    };
    const Eigen::VectorXd ref = end(h / 16.0);
    const double e1 = (end(h) - ref).norm();
    const double e2 = (end(h / 2.0) - ref).norm();
    CHECK(e1 > 0.0);
    CHECK(e1 / e2 == Approx(16.0).margin(2.0));
}

TEST_CASE("linear trajectories settle at the computed steady state", "[sim][linear]") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const SystemModel m = build_model(random_certified_system(rng));
        const auto events = random_steps(rng, m.system.graph, 2, 0.0);
        const Eigen::VectorXd pd = disturbance_vector(m.system.graph, events);
        const SpectrumResult sp = spectrum(m);
        REQUIRE(sp.stable);
        const double t_end = std::min(400.0, 40.0 / -sp.max_real_restricted);
        const Trajectory tr = simulate_linear(m, events, SimOptions{2e-3, std::ceil(t_end), 100});
        const SteadyStateResult ss = steady_state(m, pd);
        CHECK((final_state(tr) - ss.x).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("Lyapunov function does not increase along certified trajectories", "[sim][property]") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 20; ++trial) {
        const SystemModel m = build_model(random_certified_system(rng));
        const auto& L = m.state_space.layout;
        const LyapunovMatrices lm = lyapunov_matrices(m);
        const long n = lm.M.rows();
        std::normal_distribution<double> normal(0.0, 0.1);
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<long>(L.size()));
        for (long i = 0; i < n; ++i) x0(i) = normal(rng);
        const double h = safe_step(m, 1e-3);
        const Trajectory tr = simulate_linear(m, {}, SimOptions{h, 5000.0 * h, 1}, x0);
        const auto V = [&](long row) {
            const Eigen::VectorXd x = tr.states.row(row).head(n).transpose();
            return x.dot(lm.M * x);
        };
        const double v0 = V(0);
        double prev = v0;
        bool monotone = true;
        for (long r = 1; r < tr.states.rows(); ++r) {
            const double v = V(r);
            if (v > prev + 1e-12 * v0) monotone = false;
            prev = v;
        }
        CHECK(monotone);
        CHECK(prev <= v0);
    }
}

TEST_CASE("converter frequencies follow the output map", "[sim][linear]") {
    std::mt19937_64 rng(27);
    const SystemModel m = build_model(random_certified_system(rng));
    const auto& g = m.system.graph;
    const auto events = random_steps(rng, g, 2, 0.5);
    const Trajectory tr = simulate_linear(m, events, SimOptions{1e-3, 1.0, 50});
    DisturbanceSchedule schedule(g, events, 1e-3);
    const auto& L = m.state_space.layout;
    const Eigen::MatrixXd TA = m.state_space.T_inverse_A();
    const Eigen::MatrixXd TB = m.state_space.T_inverse_B();
    for (std::size_t r = 0; r < tr.t.size(); ++r) {
        const Eigen::VectorXd& p = schedule.at_step(r * 50);
        const Eigen::VectorXd x = tr.states.row(static_cast<long>(r)).transpose();
        const Eigen::VectorXd xd = TA * x + TB * p;
        for (std::size_t j = 0; j < g.converters().size(); ++j) {
            const auto& gains = m.system.gains.at(g.node(g.converters()[j]).id);
            const auto v = static_cast<long>(L.v() + j);
            const double expected = gains.k_p * xd(v) + gains.k_omega * x(v);
            CHECK(tr.frequencies(static_cast<long>(r), static_cast<long>(g.machines().size() + j)) ==
                  Approx(expected).margin(1e-12));
        }
    }
}

TEST_CASE("nonlinear model rests at its equilibrium", "[sim][nonlinear]") {
    const ScenarioRun run = build_run(load_scenario(fixture("fig8.json")));
    const SystemModel model = build_model(run.system);
    const Trajectory tr = simulate_nonlinear(model, {}, SimOptions{1e-3, 2.0, 10});
    CHECK(tr.states.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(tr.frequencies.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("nonlinear deviation from the linear model is second order", "[sim][nonlinear]") {
    const ScenarioRun run = build_run(load_scenario(fixture("fig8.json")));
    const SystemModel model = build_model(run.system);
    const SimOptions o{1e-3, 12.0, 10};
    auto gap = [&](double scale) {
        auto events = run.disturbances;
        for (auto& e : events) e.dP *= scale;
        return max_freq_gap(simulate_nonlinear(model, events, o), simulate_linear(model, events, o));
    };
    const double big = gap(1.0);
    const double small = gap(0.1);
    CHECK(big > 0.0);
    const double ratio = big / small;
    CHECK(ratio > 50.0);
    CHECK(ratio < 200.0);
}

TEST_CASE("trajectory csv is deterministic", "[sim]") {
    const ScenarioRun run = build_run(load_scenario(fixture("hvdc-p2p.json")));
    const SystemModel model = build_model(run.system);
    auto csv = [&] {
        std::ostringstream os;
        write_csv(simulate_linear(model, run.disturbances, SimOptions{1e-3, 1.5, 100}), os);
        return os.str();
    };
    const std::string a = csv();
    CHECK(a == csv());
    CHECK(a.rfind("t,", 0) == 0);
    CHECK(a.find("freq[VSC40]") != std::string::npos);
}
