#include <catch2/catch_amalgamated.hpp>

#include "hgfm/analysis.hpp"
#include "hgfm/parallel.hpp"
#include "hgfm/random_systems.hpp"

#include <random>

using namespace hgfm;

TEST_CASE("random unit states are reproducible and normalized", "[parallel]") {
    const Eigen::MatrixXd a = random_unit_states(7, 50, 42);
    const Eigen::MatrixXd b = random_unit_states(7, 50, 42);
    CHECK(a == b);
    CHECK(a != random_unit_states(7, 50, 43));
    for (Eigen::Index k = 0; k < a.cols(); ++k) CHECK(a.col(k).norm() == Catch::Approx(1.0));
}

TEST_CASE("parallel quadratic-form maximum equals the serial one", "[parallel]") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = std::uniform_int_distribution<Eigen::Index>(2, 30)(rng);
        Eigen::MatrixXd S = Eigen::MatrixXd::Random(n, n);
        S = (S + S.transpose()).eval();
        const Eigen::MatrixXd X = random_unit_states(n, 2000, rng());
        CHECK(max_quadratic_form(S, X) == max_quadratic_form_serial(S, X));
    }
}

TEST_CASE("parallel map keeps order", "[parallel]") {
    const std::function<double(std::size_t)> job = [](std::size_t i) { return std::sqrt(static_cast<double>(i)); };
    CHECK(map_parallel<double>(1000, job) == map_serial<double>(1000, job));
    CHECK(map_parallel<double>(0, job).empty());
    CHECK(worker_threads() >= 1);
}

TEST_CASE("parallel N-1 sweep equals the serial sweep", "[parallel]") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        const SystemModel m = build_model(random_certified_system(rng));
        const auto a = n_minus_one(m);
        const auto b = n_minus_one_serial(m);
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a[k].removed == b[k].removed);
            CHECK(a[k].kind == b[k].kind);
            CHECK(a[k].pass == b[k].pass);
            CHECK(a[k].witness == b[k].witness);
        }
    }
}
