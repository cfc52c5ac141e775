// model.hpp: Parameters, spin algebra, parity-ordered basis and the hybrid
// flux-qubit ⊗ NV-ensemble Hamiltonian (exact spin form and boson form).
//
// Units: energies in GHz read as angular frequencies (hbar = 1), times in ns.
//
// Conventions
//  * Collective spin S = N/2 is stored from the lowest weight up, so index
//    k_S = 0..N corresponds to m = k_S - N/2 and |k_S> ∝ S_+^{k_S} |0>.
//  * The qubit bias part uses spin-1/2 operators (eigenvalues ±1/2), giving
//    the ±Δ/4 diagonal at ε = 0. The qubit gap is therefore stored as
//    E_qb = sqrt(ε² + Δ²)/2, which equals Δ/2 at ε = 0.
//  * The qubit–ensemble coupling is g (cosβ σ_z + sinβ σ_x)(S_+ + α S_-)
//    with Pauli σ. This normalization (matrix element √2·g for N = 2) is the
//    one under which the closed-form N = 2 eigenvalues hold.
//  * Basis: even parity first, then odd; each block sorted by (k_qb, k_S).
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hybridep {

using cplx = std::complex<double>;

class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ModelParams {
    double epsilon{0.0};          // energy bias ε [GHz]
    double delta{2.0 * 2.88};     // tunnel splitting Δ [GHz]
    double zero_field_D{2.88};    // zero-field splitting D [GHz]
    double strain_E{0.026};       // strain splitting E [GHz]
    double coupling_g{0.02};      // qubit–ensemble coupling g [GHz]
    double asymmetry_alpha{1.0};  // asymmetry α (α = 1 is Hermitian)
    int ensemble_size_N{2};       // number of NV spins

    void validate() const;
};

struct DerivedParams {
    double E_qb{0.0};         // sqrt(ε² + Δ²)/2
    double beta{0.0};         // cos β = ε/sqrt(ε²+Δ²), sin β = -Δ/sqrt(ε²+Δ²)
    double delta_ratio{0.0};  // δ = Δ/(2D)
    double gamma{0.0};        // γ = g/E
    double d_plus{0.0};       // (1+δ) D/E
    double d_minus{0.0};      // (1-δ) D/E
    double gamma_N{0.0};      // γ/√N
    double alpha_N{0.0};      // α/√N
};

DerivedParams rotate_qubit_frame(const ModelParams& p);

// Δ that realizes a requested d_ = (1-δ)D/E at fixed D, E.
double delta_for_d_minus(double d_minus, double D, double E);

struct SpinOperatorSet {
    int N{0};
    Eigen::MatrixXcd Sx, Sy, Sz, Sp, Sm;  // (N+1)×(N+1)
    Eigen::MatrixXcd sx, sy, sz;          // qubit, spin-1/2 (= σ/2)
};

SpinOperatorSet build_spin_operators(int N);

struct BasisIndex {
    int k_qb{0};
    int k_S{0};
    int parity{1};
    std::size_t ordinal{0};
};

int parity_of(const BasisIndex& index);
inline int parity_of(int k_qb, int k_S) { return ((k_qb + k_S) % 2 == 0) ? 1 : -1; }

// Parity-sorted product basis for a qubit ⊗ (levels)-dimensional mode.
std::vector<BasisIndex> parity_basis(int levels);

enum class Block { even, odd };

struct BlockSlice {
    Block block{Block::even};
    std::size_t start{0};
    std::size_t size{0};
};

struct HamiltonianMatrix {
    std::size_t dim{0};
    Eigen::MatrixXd entries;          // real in the chosen basis
    std::vector<BlockSlice> blocks;   // one per parity (or a single block)
    std::vector<BasisIndex> basis;    // empty for raw test matrices
    ModelParams params;
    bool parity_conserved{true};
    int levels{0};                    // size of the spin/boson factor

    Eigen::MatrixXd block_matrix(const BlockSlice& b) const {
        const auto s = static_cast<Eigen::Index>(b.start);
        const auto n = static_cast<Eigen::Index>(b.size);
        return entries.block(s, s, n, n);
    }
    Eigen::MatrixXcd complex() const { return entries.cast<cplx>(); }

    // Wraps an arbitrary square real matrix as a single block.
    static HamiltonianMatrix from_dense(const Eigen::MatrixXd& m);
};

HamiltonianMatrix build_hamiltonian(const ModelParams& p);

// Leading-order Holstein–Primakoff form, boson truncated at n_max.
HamiltonianMatrix hp_hamiltonian(const ModelParams& p, int n_max);
int default_hp_truncation(int N);

// Lowest-weight eigenvector of S·n with n = (sinθ cosφ, sinθ sinφ, cosθ):
// (S·n) v = -(N/2) v. Built by rotating |0> so θ = π is regular.
Eigen::VectorXcd coherent_state(double theta, double phi, int N);

// |k_qb> ⊗ |CSS(θ, φ)> in the parity-sorted ordering.
Eigen::VectorXcd initial_product_state(int qubit_k, double theta, double phi, const ModelParams& p);

// Permutation helpers between the parity ordering and the tensor index
// k_qb * levels + k_S.
Eigen::VectorXcd to_tensor_order(const Eigen::VectorXcd& v, const std::vector<BasisIndex>& basis, int levels);
Eigen::VectorXcd from_tensor_order(const Eigen::VectorXcd& v, const std::vector<BasisIndex>& basis, int levels);

}  // namespace hybridep
