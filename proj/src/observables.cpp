// observables.cpp

#include "hybridep/observables.hpp"
#include "hybridep/parallel.hpp"

#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_sf_coupling.h>

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hybridep {

namespace {

constexpr double kPi = std::numbers::pi;

// <j1 m1; j2 m2 | J M>, all arguments doubled.
double clebsch_gordan2(int tj1, int tm1, int tj2, int tm2, int tJ, int tM) {
    if (tm1 + tm2 != tM) return 0.0;
    const double w3j = gsl_sf_coupling_3j(tj1, tj2, tJ, tm1, tm2, -tM);
    const int ph2 = tj1 - tj2 + tM;  // even
    const double sign = ((ph2 / 2) % 2 == 0) ? 1.0 : -1.0;
    return sign * std::sqrt(tJ + 1.0) * w3j;
}

int spin_levels(const Eigen::MatrixXcd& rho) { return static_cast<int>(rho.rows()) - 1; }

}  // namespace

double survival_probability(const Eigen::VectorXcd& initial, const Eigen::VectorXcd& evolved) {
    return std::norm(initial.dot(evolved));
}

ReducedDensityMatrix reduce_density(const Eigen::VectorXcd& state, const std::vector<BasisIndex>& basis, int levels,
                                    Subsystem keep) {
    const Eigen::VectorXcd v = to_tensor_order(state, basis, levels) / state.norm();
    Eigen::MatrixXcd M(2, levels);
    for (int q = 0; q < 2; ++q)
        for (int k = 0; k < levels; ++k) M(q, k) = v(q * levels + k);

    ReducedDensityMatrix r;
    r.subsystem = keep;
    r.rho = (keep == Subsystem::nv) ? Eigen::MatrixXcd(M.transpose() * M.conjugate()) : Eigen::MatrixXcd(M * M.adjoint());
    r.purity = (r.rho * r.rho).trace().real();
    return r;
}

ReducedDensityMatrix reduce_density(const Eigen::VectorXcd& state, const HamiltonianMatrix& H, Subsystem keep) {
    return reduce_density(state, H.basis, H.levels, keep);
}

SpinMoments spin_moments(const Eigen::MatrixXcd& rho_nv) {
    const SpinOperatorSet ops = build_spin_operators(spin_levels(rho_nv));
    const double tr = rho_nv.trace().real();
    const std::array<const Eigen::MatrixXcd*, 3> S{&ops.Sx, &ops.Sy, &ops.Sz};
    SpinMoments m;
    for (int i = 0; i < 3; ++i) m.mean(i) = (rho_nv * *S[i]).trace().real() / tr;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const Eigen::MatrixXcd sym = 0.5 * (*S[i] * *S[j] + *S[j] * *S[i]);
            m.covariance(i, j) = (rho_nv * sym).trace().real() / tr - m.mean(i) * m.mean(j);
        }
    return m;
}

SqueezingReport squeezing(const Eigen::MatrixXcd& rho_nv, double rel_threshold) {
    const int N = spin_levels(rho_nv);
    const SpinMoments m = spin_moments(rho_nv);
    SqueezingReport r;
    r.mean_spin = m.mean;
    const double len = m.mean.norm();
    if (len < rel_threshold * 0.5 * N) return r;

    const Eigen::Vector3d nz = m.mean / len;
    // any unit vector orthogonal to nz
    Eigen::Vector3d seed = (std::abs(nz.x()) < 0.9) ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    Eigen::Vector3d e1 = (seed - seed.dot(nz) * nz).normalized();
    Eigen::Vector3d e2 = nz.cross(e1);
    Eigen::Matrix<double, 3, 2> basis2;
    basis2 << e1, e2;
    const Eigen::Matrix2d c2 = basis2.transpose() * m.covariance * basis2;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c2);
    const Eigen::Vector3d nx = basis2 * es.eigenvectors().col(0);
    const Eigen::Vector3d ny = nz.cross(nx);
    r.frame.col(0) = nx;
    r.frame.col(1) = ny;
    r.frame.col(2) = nz;
    r.zeta2_min = 2.0 * es.eigenvalues()(0) / len;
    r.zeta2_max = 2.0 * es.eigenvalues()(1) / len;
    r.degenerate = false;
    return r;
}

std::vector<std::vector<Eigen::MatrixXcd>> tensor_operators(int N) {
    const int d = N + 1;
    std::vector<std::vector<Eigen::MatrixXcd>> T(static_cast<std::size_t>(N + 1));
    // k runs 0..2S = 0..N; doubled quantum numbers: 2S = N, 2m = 2a - N.
    for (int k = 0; k <= N; ++k) {
        auto& row = T[static_cast<std::size_t>(k)];
        for (int q = -k; q <= k; ++q) {
            Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(d, d);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    const int tm = 2 * a - N, tmp = 2 * b - N;
                    // (-1)^{S - m'}
                    const double ph = (((N - tmp) / 2) % 2 == 0) ? 1.0 : -1.0;
                    t(a, b) = ph * clebsch_gordan2(N, tm, N, -tmp, 2 * k, 2 * q);
                }
            row.push_back(t);
        }
    }
    return T;
}

MultipoleSet multipoles(const Eigen::MatrixXcd& rho_nv) {
    const int N = spin_levels(rho_nv);
    const auto T = tensor_operators(N);
    MultipoleSet m(T.size());
    for (std::size_t k = 0; k < T.size(); ++k)
        for (const auto& t : T[k]) m[k].push_back((rho_nv * t.adjoint()).trace());
    return m;
}

Eigen::MatrixXcd from_multipoles(const MultipoleSet& m, int N) {
    const auto T = tensor_operators(N);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(N + 1, N + 1);
    for (std::size_t k = 0; k < T.size(); ++k)
        for (std::size_t i = 0; i < T[k].size(); ++i) rho += m[k][i] * T[k][i];
    return rho;
}

cplx spherical_harmonic(int l, int m, double theta, double phi) {
    const int am = std::abs(m);
    const cplx y = std::sph_legendre(static_cast<unsigned>(l), static_cast<unsigned>(am), theta) *
                   std::exp(cplx(0.0, am * phi));
    if (m >= 0) return y;
    return ((am % 2 == 0) ? 1.0 : -1.0) * std::conj(y);
}

double wigner_value(const MultipoleSet& m, double theta, double phi) {
    cplx w = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        const int kk = static_cast<int>(k);
        for (int q = -kk; q <= kk; ++q) w += m[k][static_cast<std::size_t>(q + kk)] * spherical_harmonic(kk, q, theta, phi);
    }
    return w.real();
}

double wigner_norm_constant(int N) { return std::sqrt(4.0 * kPi / (N + 1.0)); }

WignerGrid wigner(const Eigen::MatrixXcd& rho_nv, int n_theta, int n_phi, int workers) {
    if (n_theta < 32 || n_phi < 64)
        throw std::invalid_argument("wigner: grid must be at least 32 x 64 (theta x phi)");
    WignerGrid g;
    g.rho_kq = multipoles(rho_nv);
    g.theta = linspace(0.0, kPi, static_cast<std::size_t>(n_theta));
    for (int j = 0; j < n_phi; ++j) g.phi.push_back(2.0 * kPi * j / n_phi);
    const auto rows = parallel_map<std::vector<double>>(g.theta.size(), workers, [&](std::size_t i) {
        std::vector<double> r;
        for (double ph : g.phi) r.push_back(wigner_value(g.rho_kq, g.theta[i], ph));
        return r;
    });
    g.values.resize(n_theta, n_phi);
    for (int i = 0; i < n_theta; ++i)
        for (int j = 0; j < n_phi; ++j) g.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return g;
}

FringeReport equatorial_fringes(const Eigen::MatrixXcd& rho_nv, int n_phi) {
    const int N = spin_levels(rho_nv);
    const MultipoleSet m = multipoles(rho_nv);
    std::vector<double> w(static_cast<std::size_t>(n_phi));
    for (int j = 0; j < n_phi; ++j) w[static_cast<std::size_t>(j)] = wigner_value(m, 0.5 * kPi, 2.0 * kPi * j / n_phi);

    FringeReport r;
    double nonconst = 0.0, best = -1.0;
    for (int q = 0; q <= N; ++q) {
        cplx c = 0.0;
        for (int j = 0; j < n_phi; ++j) c += w[static_cast<std::size_t>(j)] * std::exp(cplx(0.0, -2.0 * kPi * q * j / n_phi));
        c /= static_cast<double>(n_phi);
        const double pw = std::norm(c);
        r.power.push_back(pw);
        if (q == 0) continue;
        nonconst += pw;
        if (pw > best) {
            best = pw;
            r.dominant_q = q;
        }
    }
    r.dominant_fraction = nonconst > 0.0 ? best / nonconst : 0.0;
    r.cat_fringes = (r.dominant_q == N) && r.dominant_fraction >= 0.5;
    return r;
}

namespace {

CatOverlapReport cat_weights(const Eigen::MatrixXcd& rho, double phi0) {
    const int N = spin_levels(rho);
    const Eigen::VectorXcd a = coherent_state(0.5 * kPi, phi0, N);
    const Eigen::VectorXcd b = coherent_state(0.5 * kPi, phi0 + kPi, N);
    std::vector<Eigen::VectorXcd> cand{a + b, a - b};
    Eigen::VectorXcd raised = Eigen::VectorXcd::Zero(N + 1);
    raised(1) = 1.0;  // S_+|0> normalized
    cand.push_back(raised);

    const double tr = rho.trace().real();
    std::vector<Eigen::VectorXcd> ortho;
    std::array<double, 3> w{};
    for (std::size_t i = 0; i < cand.size(); ++i) {
        Eigen::VectorXcd v = cand[i];
        for (const auto& u : ortho) v -= u.dot(v) * u;
        const double nv = v.norm();
        if (nv < 1e-10) continue;
        v /= nv;
        w[i] = (v.dot(rho * v)).real() / tr;
        ortho.push_back(v);
    }
    CatOverlapReport r;
    r.phi0 = phi0;
    r.even_cat = w[0];
    r.odd_cat = w[1];
    r.raised = w[2];
    r.combined = w[0] + w[1] + w[2];
    r.remainder = 1.0 - r.combined;
    return r;
}

}  // namespace

CatOverlapReport cat_overlap(const Eigen::MatrixXcd& rho_nv, std::optional<double> phi0) {
    if (phi0) return cat_weights(rho_nv, *phi0);
    constexpr int coarse = 180;
    int best = 0;
    double best_w = -1.0;
    for (int k = 0; k < coarse; ++k) {
        const double c = cat_weights(rho_nv, kPi * k / coarse).combined;
        if (c > best_w) {
            best_w = c;
            best = k;
        }
    }
    const double step = kPi / coarse;
    const auto res = boost::math::tools::brent_find_minima(
        [&](double ph) { return -cat_weights(rho_nv, ph).combined; }, step * (best - 1), step * (best + 1), 40);
    double ph = std::fmod(res.first, kPi);
    if (ph < 0) ph += kPi;
    return cat_weights(rho_nv, ph);
}

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    const Eigen::MatrixXcd d = a - b;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (d + d.adjoint()));
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

ObservableRow observe(const EvolvedState& e, const Eigen::VectorXcd& psi0, const HamiltonianMatrix& H,
                      Normalization norm) {
    ObservableRow r;
    r.t = e.t;
    r.p = survival_probability(psi0, norm == Normalization::unit ? e.unit_normalized : e.trace_normalized);
    const ReducedDensityMatrix nv = reduce_density(e.unit_normalized, H, Subsystem::nv);
    const ReducedDensityMatrix qb = reduce_density(e.unit_normalized, H, Subsystem::qubit);
    r.squeeze = squeezing(nv.rho);
    r.spin = r.squeeze.mean_spin;
    r.purity_nv = nv.purity;
    r.purity_qb = qb.purity;
    return r;
}

double populated_period(const SpectralData& s, const Eigen::VectorXcd& psi0, double weight_tol) {
    std::vector<cplx> pop;
    for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k)
        if (std::abs(s.left_vectors.col(k).dot(psi0.conjugate())) * s.right_vectors.col(k).norm() > weight_tol)
            pop.push_back(s.eigenvalues(k));
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pop.size(); ++i)
        for (std::size_t j = i + 1; j < pop.size(); ++j) {
            const double g = std::abs(pop[i].real() - pop[j].real());
            if (g > 1e-12) gap = std::min(gap, g);
        }
    return 2.0 * kPi / gap;
}

}  // namespace hybridep
