#include <catch2/catch_amalgamated.hpp>

#include "hgfm/error.hpp"
#include "hgfm/network.hpp"

#include <numeric>
#include <random>

using namespace hgfm;
using Catch::Approx;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::ValidationError;
}

// Random spanning tree plus extra edges, positive weights.
Eigen::MatrixXd random_laplacian(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> w(0.5, 20.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    auto add = [&](int a, int b) {
        const double x = w(rng);
        L(a, b) -= x;
        L(b, a) -= x;
        L(a, a) += x;
        L(b, b) += x;
    };
    for (int i = 1; i < n; ++i) add(i, std::uniform_int_distribution<int>(0, i - 1)(rng));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (u(rng) < 0.2) add(i, j);
        }
    }
    return L;
}

}  // namespace

TEST_CASE("Kron reduction reproduces full-network solutions", "[network][oracle]") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = std::uniform_int_distribution<int>(3, 14)(rng);
        const Eigen::MatrixXd L = random_laplacian(rng, n);
        std::vector<std::size_t> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        const auto n_ret = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, n - 1)(rng));
        std::vector<std::size_t> retained(order.begin(), order.begin() + static_cast<long>(n_ret));
        std::vector<std::size_t> interior(order.begin() + static_cast<long>(n_ret), order.end());
        std::sort(retained.begin(), retained.end());
        std::sort(interior.begin(), interior.end());

        Eigen::VectorXd p = Eigen::VectorXd::Random(n);
        p.array() -= p.mean();

        // Full network: minimum-norm solve, compared up to a common offset.
        const Eigen::VectorXd x = L.completeOrthogonalDecomposition().solve(p);

        const KronResult k = kron_reduce(L, retained, interior);
        Eigen::VectorXd p_r(static_cast<long>(retained.size())), p_i(static_cast<long>(interior.size()));
        for (std::size_t a = 0; a < retained.size(); ++a) p_r(static_cast<long>(a)) = p(static_cast<long>(retained[a]));
        for (std::size_t a = 0; a < interior.size(); ++a) p_i(static_cast<long>(a)) = p(static_cast<long>(interior[a]));
        const Eigen::VectorXd rhs = p_r + k.disturbance * p_i;
        CHECK(std::abs(rhs.sum()) < 1e-10);
        const Eigen::VectorXd x_r = k.reduced.completeOrthogonalDecomposition().solve(rhs);

        Eigen::VectorXd ref(static_cast<long>(retained.size()));
        for (std::size_t a = 0; a < retained.size(); ++a) ref(static_cast<long>(a)) = x(static_cast<long>(retained[a]));
        const Eigen::VectorXd da = ref.array() - ref(0);
        const Eigen::VectorXd db = x_r.array() - x_r(0);
        const double scale = std::max(1.0, da.norm());
        CHECK((da - db).norm() / scale < 1e-10);

        // Reduced matrix is again a Laplacian.
        CHECK((k.reduced - k.reduced.transpose()).norm() < 1e-10);
        CHECK(k.reduced.rowwise().sum().norm() < 1e-10);
    }
}

TEST_CASE("singular interior block is rejected", "[network]") {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(3, 3);
    L(0, 0) = 1;
    L(0, 1) = L(1, 0) = -1;
    L(1, 1) = 1;
    CHECK(code_of([&] { (void)kron_reduce(L, {0, 1}, {2}); }) == ErrorCode::SingularInteriorBlock);
}

TEST_CASE("passive buses are eliminated and their loads shared", "[network]") {
    NetworkDescription d;
    d.nodes = {{"A", NodeKind::Machine}, {"B", NodeKind::Machine}, {"C", NodeKind::Converter}};
    d.passive_buses = {{"X", Terminal::Ac}};
    d.ac_edges = {{"A", "X", 2.0}, {"B", "X", 2.0}, {"C", "X", 4.0}};
    const SystemGraph g = build_graph(d);
    CHECK(g.size() == 3);
    CHECK(g.ac_edges().size() == 3);
    // Star of weights 2, 2, 4 reduces to a triangle with w_ij = w_i w_j / 8.
    for (const auto& e : g.ac_edges()) {
        const bool has_c = g.node(e.to).id == "C" || g.node(e.from).id == "C";
        CHECK(e.weight == Approx(has_c ? 1.0 : 0.5));
    }
    const auto& shares = g.passive_ac_loads.at("X");
    double total = 0.0;
    for (const auto& s : shares) {
        total += s.fraction;
        CHECK(s.fraction == Approx(g.node(s.node).id == "C" ? 0.5 : 0.25));
    }
    CHECK(total == Approx(1.0));
}

TEST_CASE("graph validation errors", "[network]") {
    NetworkDescription d;
    d.nodes = {{"A", NodeKind::Machine}, {"A", NodeKind::Converter}};
    CHECK(code_of([&] { (void)build_graph(d); }) == ErrorCode::DuplicateId);

    d.nodes = {{"A", NodeKind::Machine}, {"B", NodeKind::Converter}};
    d.ac_edges = {{"A", "Z", 1.0}};
    CHECK(code_of([&] { (void)build_graph(d); }) == ErrorCode::DanglingEdge);

    d.ac_edges = {{"A", "B", 1.0}};
    d.dc_edges = {{"A", "B", 1.0}};
    CHECK(code_of([&] { (void)build_graph(d); }) == ErrorCode::KindMismatch);

    d.dc_edges.clear();
    d.nodes.push_back({"D", NodeKind::DcNode});
    CHECK(code_of([&] { (void)build_graph(d); }) == ErrorCode::Disconnected);

    d.dc_edges = {{"B", "D", -1.0}};
    CHECK(code_of([&] { (void)build_graph(d); }) == ErrorCode::ValidationError);
}

TEST_CASE("parallel edges merge and orientation follows id order", "[network]") {
    NetworkDescription d;
    d.nodes = {{"Z", NodeKind::Machine}, {"A", NodeKind::Converter}, {"M", NodeKind::DcNode}};
    d.ac_edges = {{"Z", "A", 1.0}, {"A", "Z", 2.5}};
    d.dc_edges = {{"M", "A", 3.0}};
    const SystemGraph g = build_graph(d);
    REQUIRE(g.ac_edges().size() == 1);
    CHECK(g.ac_edges()[0].weight == Approx(3.5));
    CHECK(g.node(g.ac_edges()[0].from).id == "A");
    CHECK(g.node(0).id == "A");
    CHECK(g.ac_order().size() == 2);
    CHECK(g.node(g.ac_order()[0]).kind == NodeKind::Machine);
    CHECK(g.node(g.dc_order()[0]).kind == NodeKind::Converter);
}

TEST_CASE("subnetwork decomposition", "[network]") {
    // Two ac islands joined by a dc link.
    NetworkDescription d;
    d.nodes = {{"G1", NodeKind::Machine}, {"C1", NodeKind::Converter}, {"C2", NodeKind::Converter},
               {"G2", NodeKind::Machine}, {"C3", NodeKind::Converter}};
    d.ac_edges = {{"G1", "C1", 1.0}, {"G2", "C2", 1.0}, {"G2", "C3", 1.0}};
    d.dc_edges = {{"C1", "C2", 1.0}, {"C2", "C3", 1.0}};
    const SystemGraph g = build_graph(d);
    const Decomposition dec = decompose_subnetworks(g);
    CHECK(dec.ac.size() == 2);
    CHECK(dec.dc.size() == 1);
    CHECK(dec.dc[0].nodes.size() == 3);
    CHECK(dec.ac_subnet_of[g.index_of("C2")] == dec.ac_subnet_of[g.index_of("G2")]);
    CHECK(dec.ac_subnet_of[g.index_of("C1")] != dec.ac_subnet_of[g.index_of("C2")]);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(dec.ac_subnet_of[i].has_value());
        CHECK(dec.dc_subnet_of[i].has_value() == (g.node(i).kind != NodeKind::Machine));
    }
}
