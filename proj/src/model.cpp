// model.cpp: Hamiltonian assembly and state preparation.

#include "hybridep/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace hybridep {

namespace {

// Real ladder matrices for a spin S = N/2, lowest weight first.
Eigen::MatrixXd raising(int N) {
    const int d = N + 1;
    const double S = 0.5 * N;
    Eigen::MatrixXd sp = Eigen::MatrixXd::Zero(d, d);
    for (int k = 0; k + 1 < d; ++k) {
        const double m = k - S;
        sp(k + 1, k) = std::sqrt(S * (S + 1.0) - m * (m + 1.0));
    }
    return sp;
}

Eigen::MatrixXd spin_z(int N) {
    Eigen::VectorXd m(N + 1);
    for (int k = 0; k <= N; ++k) m(k) = k - 0.5 * N;
    return m.asDiagonal();
}

Eigen::MatrixXd boson_creation(int n_max) {
    const int d = n_max + 1;
    Eigen::MatrixXd bd = Eigen::MatrixXd::Zero(d, d);
    for (int n = 0; n + 1 < d; ++n) bd(n + 1, n) = std::sqrt(n + 1.0);
    return bd;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Qubit part + coupling, given the mode Hamiltonian and raising/lowering
// operators of the mode (spin or boson), in tensor order.
Eigen::MatrixXd assemble(const ModelParams& p, const Eigen::MatrixXd& h_mode,
                         const Eigen::MatrixXd& raise, const Eigen::MatrixXd& lower,
                         double coupling) {
    const DerivedParams dp = rotate_qubit_frame(p);
    const Eigen::Index L = h_mode.rows();
    Eigen::Matrix2d pauli_z;
    pauli_z << -1.0, 0.0, 0.0, 1.0;  // k_qb = 0 is the lower level
    Eigen::Matrix2d pauli_x;
    pauli_x << 0.0, 1.0, 1.0, 0.0;

    // cos β and sin β from ε and Δ directly so that cos β is exactly 0 at ε = 0.
    const double gap = 2.0 * dp.E_qb;
    const Eigen::Matrix2d qubit_dir = (p.epsilon / gap) * pauli_z - (p.delta / gap) * pauli_x;
    Eigen::MatrixXd h = kron(0.5 * dp.E_qb * pauli_z, Eigen::MatrixXd::Identity(L, L));
    h += kron(Eigen::Matrix2d::Identity(), h_mode);
    h += coupling * kron(qubit_dir, raise + p.asymmetry_alpha * lower);
    return h;
}

HamiltonianMatrix into_parity_order(const ModelParams& p, const Eigen::MatrixXd& tensor_h, int levels) {
    HamiltonianMatrix out;
    out.params = p;
    out.levels = levels;
    out.dim = static_cast<std::size_t>(2 * levels);
    out.basis = parity_basis(levels);
    out.parity_conserved = (p.epsilon == 0.0);

    const auto n = static_cast<Eigen::Index>(out.dim);
    out.entries.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& bi = out.basis[static_cast<std::size_t>(i)];
        const Eigen::Index ti = bi.k_qb * levels + bi.k_S;
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& bj = out.basis[static_cast<std::size_t>(j)];
            out.entries(i, j) = tensor_h(ti, bj.k_qb * levels + bj.k_S);
        }
    }

    if (out.parity_conserved) {
        const auto n_even = static_cast<std::size_t>(
            std::count_if(out.basis.begin(), out.basis.end(), [](const BasisIndex& b) { return b.parity > 0; }));
        out.blocks = {{Block::even, 0, n_even}, {Block::odd, n_even, out.dim - n_even}};
    } else {
        out.blocks = {{Block::even, 0, out.dim}};
    }
    return out;
}

}  // namespace

void ModelParams::validate() const {
    if (ensemble_size_N < 1) throw ModelError("ensemble_size_N must be >= 1, got " + std::to_string(ensemble_size_N));
    if (!(zero_field_D > 0.0)) throw ModelError("zero_field_D must be > 0");
    if (strain_E == 0.0) throw ModelError("strain_E must be non-zero");
    if (epsilon == 0.0 && delta == 0.0) throw ModelError("degenerate qubit: epsilon = delta = 0");
    for (double v : {epsilon, delta, zero_field_D, strain_E, coupling_g, asymmetry_alpha})
        if (!std::isfinite(v)) throw ModelError("model parameters must be finite");
}

DerivedParams rotate_qubit_frame(const ModelParams& p) {
    if (p.epsilon == 0.0 && p.delta == 0.0) throw ModelError("degenerate qubit: epsilon = delta = 0");
    DerivedParams d;
    const double gap = std::hypot(p.epsilon, p.delta);
    d.E_qb = 0.5 * gap;
    d.beta = std::atan2(-p.delta, p.epsilon);
    d.delta_ratio = p.delta / (2.0 * p.zero_field_D);
    d.gamma = p.coupling_g / p.strain_E;
    d.d_plus = (1.0 + d.delta_ratio) * p.zero_field_D / p.strain_E;
    d.d_minus = (1.0 - d.delta_ratio) * p.zero_field_D / p.strain_E;
    const double sqrtN = std::sqrt(static_cast<double>(p.ensemble_size_N));
    d.gamma_N = d.gamma / sqrtN;
    d.alpha_N = p.asymmetry_alpha / sqrtN;
    return d;
}

double delta_for_d_minus(double d_minus, double D, double E) {
    return 2.0 * D * (1.0 - d_minus * E / D);
}

SpinOperatorSet build_spin_operators(int N) {
    if (N < 1) throw ModelError("build_spin_operators: N must be >= 1");
    SpinOperatorSet ops;
    ops.N = N;
    const Eigen::MatrixXcd sp = raising(N).cast<cplx>();
    ops.Sp = sp;
    ops.Sm = sp.adjoint();
    ops.Sz = spin_z(N).cast<cplx>();
    ops.Sx = 0.5 * (ops.Sp + ops.Sm);
    ops.Sy = cplx(0.0, -0.5) * (ops.Sp - ops.Sm);
    ops.sx = Eigen::MatrixXcd::Zero(2, 2);
    ops.sy = Eigen::MatrixXcd::Zero(2, 2);
    ops.sz = Eigen::MatrixXcd::Zero(2, 2);
    ops.sx(0, 1) = ops.sx(1, 0) = 0.5;
    ops.sy(1, 0) = cplx(0.0, 0.5);
    ops.sy(0, 1) = cplx(0.0, -0.5);
    ops.sz(0, 0) = -0.5;
    ops.sz(1, 1) = 0.5;
    return ops;
}

int parity_of(const BasisIndex& index) { return parity_of(index.k_qb, index.k_S); }

std::vector<BasisIndex> parity_basis(int levels) {
    std::vector<BasisIndex> basis;
    basis.reserve(static_cast<std::size_t>(2 * levels));
    for (int want : {1, -1})
        for (int q = 0; q < 2; ++q)
            for (int k = 0; k < levels; ++k)
                if (parity_of(q, k) == want) basis.push_back({q, k, want, basis.size()});
    return basis;
}

HamiltonianMatrix HamiltonianMatrix::from_dense(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw ModelError("from_dense: matrix must be square");
    HamiltonianMatrix h;
    h.dim = static_cast<std::size_t>(m.rows());
    h.entries = m;
    h.blocks = {{Block::even, 0, h.dim}};
    h.parity_conserved = false;
    return h;
}

HamiltonianMatrix build_hamiltonian(const ModelParams& p) {
    p.validate();
    const int N = p.ensemble_size_N;
    const Eigen::MatrixXd sp = raising(N);
    const Eigen::MatrixXd sm = sp.transpose();
    const Eigen::MatrixXd sz = spin_z(N);
    // E (S_x² - S_y²) = (E/2)(S_+² + S_-²)
    const Eigen::MatrixXd h_spin = p.zero_field_D * sz * sz + 0.5 * p.strain_E * (sp * sp + sm * sm);
    return into_parity_order(p, assemble(p, h_spin, sp, sm, p.coupling_g), N + 1);
}

int default_hp_truncation(int N) { return std::min(N, 10); }

HamiltonianMatrix hp_hamiltonian(const ModelParams& p, int n_max) {
    p.validate();
    if (n_max < 2) throw ModelError("hp_hamiltonian: n_max must be >= 2, got " + std::to_string(n_max));
    const double N = p.ensemble_size_N;
    const Eigen::MatrixXd bd = boson_creation(n_max);
    const Eigen::MatrixXd b = bd.transpose();
    Eigen::VectorXd occ(n_max + 1);
    for (int n = 0; n <= n_max; ++n) occ(n) = (n - 0.5 * N) * (n - 0.5 * N);
    // S_+ ≈ √N b†: the E term picks up N, the coupling √N.
    const Eigen::MatrixXd h_mode =
        p.zero_field_D * Eigen::MatrixXd(occ.asDiagonal()) + 0.5 * N * p.strain_E * (bd * bd + b * b);
    return into_parity_order(p, assemble(p, h_mode, bd, b, std::sqrt(N) * p.coupling_g), n_max + 1);
}

Eigen::VectorXcd coherent_state(double theta, double phi, int N) {
    if (N < 1) throw ModelError("coherent_state: N must be >= 1");
    if (theta < 0.0 || theta > std::numbers::pi + 1e-12) throw ModelError("coherent_state: theta must lie in [0, pi]");
    // Column m' = -S of the rotation e^{-iφ S_z} e^{-iθ S_y}, written with
    // the binomial form of the Wigner d-function; the overall phase is fixed
    // so that θ = 0 gives (1, 0, ..., 0).
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    Eigen::VectorXcd v(N + 1);
    double log_binom = 0.0;
    for (int k = 0; k <= N; ++k) {
        if (k > 0) log_binom += std::log(static_cast<double>(N - k + 1)) - std::log(static_cast<double>(k));
        const double mag = std::exp(0.5 * log_binom) * std::pow(c, N - k) * std::pow(s, k);
        v(k) = mag * std::pow(-1.0, k) * std::polar(1.0, -k * phi);
    }
    return v / v.norm();
}

Eigen::VectorXcd to_tensor_order(const Eigen::VectorXcd& v, const std::vector<BasisIndex>& basis, int levels) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(2 * levels);
    for (std::size_t i = 0; i < basis.size(); ++i)
        out(basis[i].k_qb * levels + basis[i].k_S) = v(static_cast<Eigen::Index>(i));
    return out;
}

Eigen::VectorXcd from_tensor_order(const Eigen::VectorXcd& v, const std::vector<BasisIndex>& basis, int levels) {
    Eigen::VectorXcd out(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = v(basis[i].k_qb * levels + basis[i].k_S);
    return out;
}

Eigen::VectorXcd initial_product_state(int qubit_k, double theta, double phi, const ModelParams& p) {
    if (qubit_k != 0 && qubit_k != 1) throw ModelError("initial_product_state: qubit_k must be 0 or 1");
    const int N = p.ensemble_size_N;
    const Eigen::VectorXcd spin = coherent_state(theta, phi, N);
    Eigen::VectorXcd tensor = Eigen::VectorXcd::Zero(2 * (N + 1));
    tensor.segment(qubit_k * (N + 1), N + 1) = spin;
    return from_tensor_order(tensor, parity_basis(N + 1), N + 1);
}

}  // namespace hybridep
