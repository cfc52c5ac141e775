// observables.hpp: Survival probability, reduced states, spin moments,
// Kitagawa–Ueda squeezing and the multipole SU(2) Wigner function.
#pragma once

#include "hybridep/dynamics.hpp"

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <vector>

namespace hybridep {

enum class Normalization { unit, trace };

enum class Subsystem { qubit, nv };

struct ReducedDensityMatrix {
    Subsystem subsystem{Subsystem::nv};
    Eigen::MatrixXcd rho;
    double purity{0.0};
};

// |<ψ0|ψ(t)>|². With a unit-norm ψ(t) the value lies in [0, 1].
double survival_probability(const Eigen::VectorXcd& initial, const Eigen::VectorXcd& evolved);

// Partial trace of |ψ><ψ|/<ψ|ψ> over the complementary factor.
ReducedDensityMatrix reduce_density(const Eigen::VectorXcd& state, const std::vector<BasisIndex>& basis, int levels,
                                    Subsystem keep);
ReducedDensityMatrix reduce_density(const Eigen::VectorXcd& state, const HamiltonianMatrix& H, Subsystem keep);

struct SpinMoments {
    Eigen::Vector3d mean;
    Eigen::Matrix3d covariance;  // ½<S_i S_j + S_j S_i> - <S_i><S_j>
};

SpinMoments spin_moments(const Eigen::MatrixXcd& rho_nv);

struct SqueezingReport {
    Eigen::Vector3d mean_spin{Eigen::Vector3d::Zero()};
    Eigen::Matrix3d frame{Eigen::Matrix3d::Identity()};  // columns n_x', n_y', n_z'
    double zeta2_min{std::numeric_limits<double>::infinity()};
    double zeta2_max{std::numeric_limits<double>::infinity()};
    bool degenerate{true};
};

// Degenerate when |<S>| < rel_threshold * N/2; ζ² is then +inf.
SqueezingReport squeezing(const Eigen::MatrixXcd& rho_nv, double rel_threshold = 1e-6);

// Irreducible tensor operators T_kq, k = 0..2S, q = -k..k, orthonormal under
// Tr(A†B). Index as [k][q + k].
using MultipoleSet = std::vector<std::vector<cplx>>;
std::vector<std::vector<Eigen::MatrixXcd>> tensor_operators(int N);
MultipoleSet multipoles(const Eigen::MatrixXcd& rho_nv);
Eigen::MatrixXcd from_multipoles(const MultipoleSet& m, int N);

// Y_lm with Condon–Shortley phase, ∫|Y|² dΩ = 1.
cplx spherical_harmonic(int l, int m, double theta, double phi);

double wigner_value(const MultipoleSet& m, double theta, double phi);

// ∫W dΩ for a unit-trace state: sqrt(4π/(2S+1)).
double wigner_norm_constant(int N);

struct WignerGrid {
    std::vector<double> theta;  // [0, π], endpoints included
    std::vector<double> phi;    // [0, 2π), periodic
    Eigen::MatrixXd values;     // theta × phi
    MultipoleSet rho_kq;
};

WignerGrid wigner(const Eigen::MatrixXcd& rho_nv, int n_theta = 32, int n_phi = 64, int workers = 1);

// Fourier content of W on the equator θ = π/2.
struct FringeReport {
    std::vector<double> power;  // |c_q|², q = 0..2S
    int dominant_q{0};          // argmax over q ≠ 0
    double dominant_fraction{0.0};
    bool cat_fringes{false};    // dominant_q == 2S and fraction >= 0.5
};

FringeReport equatorial_fringes(const Eigen::MatrixXcd& rho_nv, int n_phi = 256);

struct CatOverlapReport {
    double phi0{0.0};  // cat axis azimuth
    double even_cat{0.0};
    double odd_cat{0.0};
    double raised{0.0};  // normalized S_+|0>, after removing the cat span
    double combined{0.0};
    double remainder{0.0};
};

// Cat states |CSS(π/2, φ0)> ± |CSS(π/2, φ0 + π)>. Without phi0 the axis is
// chosen to maximize the combined weight.
CatOverlapReport cat_overlap(const Eigen::MatrixXcd& rho_nv, std::optional<double> phi0 = std::nullopt);

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

struct ObservableRow {
    double t{0.0};
    double p{0.0};
    Eigen::Vector3d spin{Eigen::Vector3d::Zero()};
    SqueezingReport squeeze;
    double purity_nv{0.0};
    double purity_qb{0.0};
};

ObservableRow observe(const EvolvedState& e, const Eigen::VectorXcd& psi0, const HamiltonianMatrix& H,
                      Normalization norm = Normalization::unit);

// Slowest beat 2π/gap_min among eigenvalue pairs populated by psi0 (weight
// |l_kᵀ ψ0| above weight_tol). Returns +inf when fewer than two are populated.
double populated_period(const SpectralData& s, const Eigen::VectorXcd& psi0, double weight_tol = 1e-6);

// Trapezoid average of f(t) over two periods from t0.
template <class F>
double two_period_average(F&& f, double t0, double period, int samples_per_period = 200) {
    const int n = 2 * samples_per_period;
    const double dt = 2.0 * period / n;
    double acc = 0.5 * (f(t0) + f(t0 + 2.0 * period));
    for (int i = 1; i < n; ++i) acc += f(t0 + i * dt);
    return acc / n;
}

}  // namespace hybridep
