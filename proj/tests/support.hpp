// Shared helpers for the test binaries.
#pragma once

#include "hybridep/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace testing {

using hybridep::cplx;

// Min over permutations of max |a_i - b_π(i)|. Brute force, fine for n <= 8.
inline double multiset_distance(std::vector<cplx> a, std::vector<cplx> b) {
    if (a.size() != b.size()) return 1e300;
    std::vector<std::size_t> perm(b.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[perm[i]]));
        best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline std::vector<cplx> to_vec(const Eigen::VectorXcd& v) { return {v.data(), v.data() + v.size()}; }

// Faddeev–LeVerrier: coefficients c_0..c_n of det(λI - A), c_n = 1.
inline std::vector<cplx> charpoly(const Eigen::MatrixXcd& A) {
    const Eigen::Index n = A.rows();
    std::vector<cplx> c(static_cast<std::size_t>(n + 1));
    c[static_cast<std::size_t>(n)] = 1.0;
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index k = 1; k <= n; ++k) {
        M = A * M + c[static_cast<std::size_t>(n - k + 1)] * Eigen::MatrixXcd::Identity(n, n);
        c[static_cast<std::size_t>(n - k)] = -(A * M).trace() / static_cast<double>(k);
    }
    return c;
}

// Coefficients of ∏(λ - r_i), lowest order first.
inline std::vector<cplx> poly_from_roots(const std::vector<cplx>& roots) {
    std::vector<cplx> c{1.0};
    for (const cplx& r : roots) {
        std::vector<cplx> next(c.size() + 1, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            next[i + 1] += c[i];
            next[i] -= r * c[i];
        }
        c = next;
    }
    return c;
}

inline Eigen::MatrixXd random_matrix(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

}  // namespace testing
