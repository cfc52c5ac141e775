// spectral.cpp: Spectra, biorthogonal vectors, Jordan chains, symmetry operator.

#include "hybridep/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace hybridep {

namespace {

constexpr double kPi = std::numbers::pi;

bool less_complex(const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

struct BlockEigen {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;
};

BlockEigen solve_block(const Eigen::MatrixXd& hb, Block label) {
    const Eigen::Index n = hb.rows();
    Eigen::EigenSolver<Eigen::MatrixXd> right_solver(hb, true);
    Eigen::EigenSolver<Eigen::MatrixXd> left_solver(hb.transpose(), true);
    if (right_solver.info() != Eigen::Success || left_solver.info() != Eigen::Success)
        throw SpectralError(std::string("eigensolver did not converge in ") +
                            (label == Block::even ? "even" : "odd") + " block");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const Eigen::VectorXcd ev = right_solver.eigenvalues();
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return less_complex(ev(a), ev(b)); });

    BlockEigen out;
    out.values.resize(n);
    out.right.resize(n, n);
    out.left.resize(n, n);
    const Eigen::MatrixXcd rv = right_solver.eigenvectors();
    const Eigen::VectorXcd lv_vals = left_solver.eigenvalues();
    const Eigen::MatrixXcd lv = left_solver.eigenvectors();

    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        out.values(k) = ev(src);
        out.right.col(k) = rv.col(src) / rv.col(src).norm();
        // Left partner: closest unused eigenvalue of Hᵀ.
        Eigen::Index best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            const double d = std::abs(lv_vals(j) - ev(src));
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        out.left.col(k) = lv.col(best);
    }

    // Bilinear normalization l_iᵀ r_i = 1.
    for (Eigen::Index k = 0; k < n; ++k) {
        const cplx c = out.left.col(k).transpose() * out.right.col(k);
        if (std::abs(c) > 0.0) out.left.col(k) /= c;
    }

    // Degenerate eigenvalues of a diagonalizable block: the transpose problem
    // gives an arbitrary basis of each eigenspace, so fall back to R⁻ᵀ.
    const Eigen::MatrixXcd gram = out.left.transpose() * out.right;
    const double resid = (gram - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (!(resid < 1e-8)) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(out.right);
        const auto& sv = svd.singularValues();
        const double cond = sv(0) / std::max(sv(n - 1), std::numeric_limits<double>::min());
        if (cond < 1e8) out.left = out.right.inverse().transpose();
    }
    return out;
}

double principal_angle(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
    return std::acos(std::clamp(c, 0.0, 1.0));
}

Eigen::MatrixXcd matrix_power(const Eigen::MatrixXcd& m, int k) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    for (int i = 0; i < k; ++i) out = out * m;
    return out;
}

// Length-2 chain [v1, v2] with (A - E0) v1 = 0, (A - E0) v2 = v1.
std::pair<Eigen::VectorXcd, Eigen::VectorXcd> chain_vectors(const Eigen::MatrixXcd& a, cplx E0) {
    const Eigen::Index n = a.rows();
    const Eigen::MatrixXcd m = a - E0 * Eigen::MatrixXcd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd2(m * m, Eigen::ComputeFullV);
    const Eigen::MatrixXcd q = svd2.matrixV().rightCols(2);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd1(m * q, Eigen::ComputeFullV);
    const Eigen::VectorXcd v2 = q * svd1.matrixV().col(0);
    const Eigen::VectorXcd v1 = m * v2;
    return {v1, v2};
}

}  // namespace

CubicSpectralIntermediates cubic_intermediates(const ModelParams& p, Block block) {
    const DerivedParams dp = rotate_qubit_frame(p);
    const double g2 = dp.gamma * dp.gamma;
    const double a = p.asymmetry_alpha;
    CubicSpectralIntermediates c;
    c.block = block;
    c.d = (block == Block::even) ? dp.d_minus : dp.d_plus;
    c.A = -27.0 * g2 * (1.0 + a * a) + c.d * c.d * c.d - 9.0 * (1.0 - 2.0 * g2 * a) * c.d;
    c.C = 3.0 * (1.0 + 4.0 * g2 * a) + c.d * c.d;
    c.B = c.A * c.A - c.C * c.C * c.C;

    cplx z;
    if (c.B >= 0.0) {
        // Root of larger modulus avoids cancellation; the other choice
        // yields C/R and only relabels the energies.
        const double s = std::sqrt(c.B);
        z = (c.A < 0.0) ? cplx(c.A - s, 0.0) : cplx(c.A + s, 0.0);
    } else {
        z = cplx(c.A, std::sqrt(-c.B));
    }
    c.R_abs = std::cbrt(std::abs(z));
    c.theta_R = std::arg(z) / 3.0;
    c.R = std::polar(c.R_abs, c.theta_R);
    return c;
}

AnalyticSpectrum analytic_spectrum_n2(const ModelParams& p, Block block) {
    p.validate();
    if (p.ensemble_size_N != 2) throw SpectralError("analytic_spectrum_n2: unsupported N = " + std::to_string(p.ensemble_size_N));
    if (p.epsilon != 0.0) throw SpectralError("analytic_spectrum_n2: closed form requires epsilon = 0");

    AnalyticSpectrum out;
    out.intermediates = cubic_intermediates(p, block);
    const auto& c = out.intermediates;
    const double scale = std::max({1.0, std::abs(c.A), std::abs(c.C)});
    if (c.R_abs <= 1e-14 * std::cbrt(scale))
        throw SpectralError("analytic_spectrum_n2: |R| = 0 branch singularity; use numerical_spectrum");

    const cplx w = std::polar(1.0, 2.0 * kPi / 3.0);
    const cplx R = c.R;
    const cplx CR = c.C / R;
    const std::array<cplx, 3> roots{R + CR, w * w * R + w * CR, w * R + w * w * CR};
    for (std::size_t k = 0; k < 3; ++k)
        out.energies[k] = 0.5 * p.zero_field_D + (p.strain_E / 6.0) * (c.d - 2.0 * roots[k]);
    return out;
}

std::vector<AnalyticSpectrum> analytic_sweep_alpha(ModelParams p, Block block, const std::vector<double>& alphas) {
    std::vector<ModelParams> pts;
    for (double a : alphas) {
        p.asymmetry_alpha = a;
        pts.push_back(p);
    }
    return analytic_sweep(pts, block);
}

std::vector<AnalyticSpectrum> analytic_sweep(const std::vector<ModelParams>& points, Block block) {
    std::vector<AnalyticSpectrum> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        AnalyticSpectrum cur = analytic_spectrum_n2(p, block);
        if (!out.empty()) {
            const auto& prev = out.back().energies;
            std::array<std::size_t, 3> perm{0, 1, 2};
            std::array<std::size_t, 3> best = perm;
            double best_cost = std::numeric_limits<double>::infinity();
            do {
                double cost = 0.0;
                for (std::size_t k = 0; k < 3; ++k) cost += std::abs(cur.energies[perm[k]] - prev[k]);
                if (cost < best_cost) {
                    best_cost = cost;
                    best = perm;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
            const auto e = cur.energies;
            for (std::size_t k = 0; k < 3; ++k) cur.energies[k] = e[best[k]];
        }
        out.push_back(cur);
    }
    return out;
}

Eigen::VectorXcd block_eigenvalues(const HamiltonianMatrix& H, Block block) {
    for (const auto& b : H.blocks) {
        if (b.block != block) continue;
        Eigen::EigenSolver<Eigen::MatrixXd> solver(H.block_matrix(b), false);
        if (solver.info() != Eigen::Success) throw SpectralError("eigensolver did not converge");
        Eigen::VectorXcd v = solver.eigenvalues();
        std::sort(v.data(), v.data() + v.size(), less_complex);
        return v;
    }
    throw SpectralError("block not present in Hamiltonian");
}

SpectralData numerical_spectrum(const HamiltonianMatrix& H) {
    if (!H.entries.allFinite()) throw SpectralError("numerical_spectrum: non-finite matrix entries");
    const auto n = static_cast<Eigen::Index>(H.dim);
    SpectralData s;
    s.eigenvalues.resize(n);
    s.right_vectors = Eigen::MatrixXcd::Zero(n, n);
    s.left_vectors = Eigen::MatrixXcd::Zero(n, n);
    s.block_of.reserve(H.dim);

    for (const auto& b : H.blocks) {
        const BlockEigen be = solve_block(H.block_matrix(b), b.block);
        const auto start = static_cast<Eigen::Index>(b.start);
        const auto size = static_cast<Eigen::Index>(b.size);
        s.eigenvalues.segment(start, size) = be.values;
        s.right_vectors.block(start, start, size, size) = be.right;
        s.left_vectors.block(start, start, size, size) = be.left;
        for (Eigen::Index k = 0; k < size; ++k) s.block_of.push_back(b.block);
    }

    const Eigen::MatrixXcd gram = s.left_vectors.transpose() * s.right_vectors;
    s.biorthogonality_residual = (gram - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    s.ep_metric = coalescence_metric(s);

    for (Eigen::Index k = 0; k < n; ++k) s.jordan_blocks.push_back({s.eigenvalues(k), 1});
    if (H.parity_conserved && H.params.strain_E != 0.0) {
        if (auto cand = ep_candidate(s, EpThresholds::for_params(H.params))) {
            const cplx E0 = 0.5 * (s.eigenvalues(static_cast<Eigen::Index>(cand->i)) +
                                   s.eigenvalues(static_cast<Eigen::Index>(cand->j)));
            try {
                const auto chains = jordan_structure(H, E0);
                if (!chains.empty() && chains.front() >= 2) {
                    auto& jb = s.jordan_blocks;
                    jb.erase(jb.begin() + static_cast<std::ptrdiff_t>(std::max(cand->i, cand->j)));
                    jb[std::min(cand->i, cand->j)] = {E0, chains.front()};
                }
            } catch (const IndeterminateRank&) {
                // left as simple eigenvalues
            }
        }
    }
    return s;
}

CoalescenceMetric coalescence_metric(const SpectralData& s) {
    CoalescenceMetric m;
    m.gap = std::numeric_limits<double>::infinity();
    m.vector_angle = 0.5 * kPi;
    const auto n = s.eigenvalues.size();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double gap = std::abs(s.eigenvalues(i) - s.eigenvalues(j));
            if (gap < m.gap) {
                m.gap = gap;
                m.vector_angle = principal_angle(s.right_vectors.col(i), s.right_vectors.col(j));
                m.i = static_cast<std::size_t>(i);
                m.j = static_cast<std::size_t>(j);
            }
        }
    return m;
}

std::optional<CoalescenceMetric> ep_candidate(const SpectralData& s, const EpThresholds& thr) {
    std::optional<CoalescenceMetric> best;
    const auto n = s.eigenvalues.size();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (s.block_of[static_cast<std::size_t>(i)] != s.block_of[static_cast<std::size_t>(j)]) continue;
            const double gap = std::abs(s.eigenvalues(i) - s.eigenvalues(j));
            if (!(gap < thr.gap)) continue;
            const double angle = principal_angle(s.right_vectors.col(i), s.right_vectors.col(j));
            if (!(angle < thr.angle)) continue;
            if (!best || gap < best->gap)
                best = CoalescenceMetric{gap, angle, static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
        }
    return best;
}

double default_rank_tolerance(const HamiltonianMatrix& H) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H.entries);
    return 1e-8 * std::max(svd.singularValues()(0), std::numeric_limits<double>::min());
}

std::vector<int> jordan_structure(const HamiltonianMatrix& H, cplx E0, std::optional<double> tol) {
    const auto n = static_cast<Eigen::Index>(H.dim);
    const double t = tol.value_or(default_rank_tolerance(H));
    const Eigen::MatrixXcd m = H.complex() - E0 * Eigen::MatrixXcd::Identity(n, n);
    const double m_norm = Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()(0);

    std::vector<int> nullity{0};
    const int k_max = static_cast<int>(std::min<Eigen::Index>(n, 4));
    for (int k = 1; k <= k_max; ++k) {
        const double thr = t * std::max(1.0, std::pow(m_norm, k - 1));
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(matrix_power(m, k));
        const auto& sv = svd.singularValues();
        int null_k = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i) {
            if (sv(i) > 0.1 * thr && sv(i) < 10.0 * thr)
                throw IndeterminateRank("jordan_structure: singular value " + std::to_string(sv(i)) +
                                        " within 10x of threshold " + std::to_string(thr));
            if (sv(i) <= 0.1 * thr) ++null_k;
        }
        nullity.push_back(null_k);
        if (null_k == nullity[static_cast<std::size_t>(k - 1)]) break;
    }

    // at_least[k] = number of chains of length >= k
    std::vector<int> at_least;
    for (std::size_t k = 1; k < nullity.size(); ++k) at_least.push_back(nullity[k] - nullity[k - 1]);
    at_least.push_back(0);
    std::vector<int> chains;
    for (std::size_t k = 0; k + 1 < at_least.size(); ++k)
        for (int c = 0; c < at_least[k] - at_least[k + 1]; ++c) chains.push_back(static_cast<int>(k + 1));
    std::sort(chains.rbegin(), chains.rend());
    return chains;
}

SymmetryOperator symmetry_operator(const HamiltonianMatrix& H, const std::vector<JordanBlock>& chains) {
    const auto n = static_cast<Eigen::Index>(H.dim);
    const SpectralData s = numerical_spectrum(H);
    const Eigen::MatrixXcd h = H.complex();
    const Eigen::MatrixXcd ht = h.transpose();

    Eigen::MatrixXcd p_right(n, n);
    Eigen::MatrixXcd p_left(n, n);

    std::vector<JordanBlock> defective;
    for (const auto& c : chains)
        if (c.chain_length == 2) defective.push_back(c);
        else if (c.chain_length > 2) throw SpectralError("symmetry_operator: chains longer than 2 are not supported");

    if (defective.empty()) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s.right_vectors);
        const auto& sv = svd.singularValues();
        const double cond = sv(0) / std::max(sv(n - 1), std::numeric_limits<double>::min());
        const bool near_ep = ep_candidate(s, EpThresholds::for_params(H.params)).has_value();
        if (near_ep || s.biorthogonality_residual > 1e-6 || cond > 1e10)
            throw SpectralError("symmetry_operator: eigenvector matrix is rank deficient (exceptional point); "
                                "supply Jordan chain data");
        p_right = s.right_vectors;
        p_left = s.left_vectors;
    } else {
        // Drop the two eigenvalues closest to each chain eigenvalue, then append
        // the chain vectors of H and Hᵀ; both share the same Jordan matrix.
        std::vector<bool> taken(static_cast<std::size_t>(n), false);
        for (const auto& c : defective)
            for (int rep = 0; rep < 2; ++rep) {
                Eigen::Index best = -1;
                double best_d = std::numeric_limits<double>::infinity();
                for (Eigen::Index k = 0; k < n; ++k) {
                    if (taken[static_cast<std::size_t>(k)]) continue;
                    const double d = std::abs(s.eigenvalues(k) - c.eigenvalue);
                    if (d < best_d) {
                        best_d = d;
                        best = k;
                    }
                }
                taken[static_cast<std::size_t>(best)] = true;
            }
        Eigen::Index col = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (taken[static_cast<std::size_t>(k)]) continue;
            p_right.col(col) = s.right_vectors.col(k);
            p_left.col(col) = s.left_vectors.col(k);
            ++col;
        }
        for (const auto& c : defective) {
            const auto [r1, r2] = chain_vectors(h, c.eigenvalue);
            const auto [l1, l2] = chain_vectors(ht, c.eigenvalue);
            p_right.col(col) = r1;
            p_right.col(col + 1) = r2;
            p_left.col(col) = l1;
            p_left.col(col + 1) = l2;
            col += 2;
        }
    }

    SymmetryOperator out;
    out.S = p_right * p_left.inverse();
    const Eigen::MatrixXcd recon = out.S * ht * out.S.inverse();
    out.residual = (h - recon).norm() / std::max(h.norm(), std::numeric_limits<double>::min());
    return out;
}

}  // namespace hybridep
