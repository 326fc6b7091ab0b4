#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace hgfm {

// Number of worker threads the parallel kernels will use (1 without OpenMP).
[[nodiscard]] int worker_threads();

// Unit-norm random states as columns, reproducible for a given seed.
[[nodiscard]] Eigen::MatrixXd random_unit_states(Eigen::Index dimension, std::size_t count, std::uint64_t seed);

// max_k x_k^T S x_k over the columns of X.
[[nodiscard]] double max_quadratic_form_serial(const Eigen::MatrixXd& S, const Eigen::MatrixXd& X);
[[nodiscard]] double max_quadratic_form(const Eigen::MatrixXd& S, const Eigen::MatrixXd& X);

// Evaluates job(i) for i in [0, count) and stores results in order.
template <typename Result>
std::vector<Result> map_serial(std::size_t count, const std::function<Result(std::size_t)>& job) {
    std::vector<Result> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(job(i));
    return out;
}

template <typename Result>
std::vector<Result> map_parallel(std::size_t count, const std::function<Result(std::size_t)>& job) {
    std::vector<Result> out(count);
    const auto n = static_cast<long long>(count);
#ifdef HGFM_USE_OMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = job(static_cast<std::size_t>(i));
    return out;
}

}  // namespace hgfm
