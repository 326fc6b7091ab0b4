#include "hgfm/parallel.hpp"

#include <algorithm>
#include <limits>
#include <random>

#ifdef HGFM_USE_OMP
#include <omp.h>
#endif

namespace hgfm {

int worker_threads() {
#ifdef HGFM_USE_OMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

Eigen::MatrixXd random_unit_states(Eigen::Index dimension, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd X(dimension, static_cast<Eigen::Index>(count));
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        for (Eigen::Index r = 0; r < dimension; ++r) X(r, c) = normal(rng);
        const double nrm = X.col(c).norm();
        if (nrm > 0.0) X.col(c) /= nrm;
    }
    return X;
}

double max_quadratic_form_serial(const Eigen::MatrixXd& S, const Eigen::MatrixXd& X) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        best = std::max(best, X.col(c).dot(S * X.col(c)));
    }
    return best;
}

double max_quadratic_form(const Eigen::MatrixXd& S, const Eigen::MatrixXd& X) {
    double best = -std::numeric_limits<double>::infinity();
    const Eigen::Index n = X.cols();
#ifdef HGFM_USE_OMP
#pragma omp parallel for reduction(max : best)
#endif
    for (Eigen::Index c = 0; c < n; ++c) {
        best = std::max(best, X.col(c).dot(S * X.col(c)));
    }
    return best;
}

}  // namespace hgfm
