// spectral.hpp: Closed-form (N = 2) and numerical spectra, biorthogonal
// eigenvectors, coalescence diagnostics, Jordan chains and the symmetry
// operator S with H = S Hᵀ S⁻¹.
#pragma once

#include "hybridep/model.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

namespace hybridep {

class SpectralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a singular value sits too close to the rank threshold.
class IndeterminateRank : public SpectralError {
public:
    using SpectralError::SpectralError;
};

// Auxiliaries of the depressed cubic for one parity block. The even block
// carries d_ and the odd block d+.
struct CubicSpectralIntermediates {
    Block block{Block::even};
    double d{0.0};
    double A{0.0};
    double C{0.0};
    double B{0.0};  // A² - C³
    cplx R{0.0};    // cube root of A ± sqrt(B), |R| e^{iθ_R}
    double R_abs{0.0};
    double theta_R{0.0};
};

struct AnalyticSpectrum {
    std::array<cplx, 3> energies{};  // E1, E2, E3 [GHz]
    CubicSpectralIntermediates intermediates;
};

CubicSpectralIntermediates cubic_intermediates(const ModelParams& p, Block block);

// Closed form for N = 2. E1 and E2 are the pair that coalesces when B = 0
// with A < 0 (the branch used for the d_ = 0 working point).
AnalyticSpectrum analytic_spectrum_n2(const ModelParams& p, Block block);

// Sweeps with branch labels kept continuous: at each step the three
// energies are permuted to minimize the distance to the previous step.
std::vector<AnalyticSpectrum> analytic_sweep_alpha(ModelParams p, Block block, const std::vector<double>& alphas);
std::vector<AnalyticSpectrum> analytic_sweep(const std::vector<ModelParams>& points, Block block);

struct CoalescenceMetric {
    double gap{0.0};           // min |E_i - E_j| [GHz]
    double vector_angle{0.0};  // principal angle of the corresponding right vectors
    std::size_t i{0}, j{0};
};

struct JordanBlock {
    cplx eigenvalue;
    int chain_length{1};
};

struct SpectralData {
    Eigen::VectorXcd eigenvalues;    // grouped by block, each sorted by (Re, Im)
    std::vector<Block> block_of;     // block label per eigenvalue
    Eigen::MatrixXcd right_vectors;  // columns, embedded in the full space
    Eigen::MatrixXcd left_vectors;   // columns l_i with l_iᵀ H = E_i l_iᵀ, l_iᵀ r_j = δ_ij
    double biorthogonality_residual{0.0};
    std::vector<JordanBlock> jordan_blocks;
    CoalescenceMetric ep_metric;

    // Rank-one spectral projector r_i l_iᵀ.
    Eigen::MatrixXcd projector(std::size_t i) const {
        return right_vectors.col(static_cast<Eigen::Index>(i)) *
               left_vectors.col(static_cast<Eigen::Index>(i)).transpose();
    }
};

SpectralData numerical_spectrum(const HamiltonianMatrix& H);

// Eigenvalues of a single block, sorted by (Re, Im).
Eigen::VectorXcd block_eigenvalues(const HamiltonianMatrix& H, Block block);

CoalescenceMetric coalescence_metric(const SpectralData& s);

// EP candidate thresholds: gap < 1e-3·E and eigenvector angle < 1e-2 rad.
struct EpThresholds {
    double gap{0.0};
    double angle{1e-2};
    static EpThresholds for_params(const ModelParams& p) { return {1e-3 * std::abs(p.strain_E), 1e-2}; }
};

// Pair (i, j) in the same block passing both thresholds, if any.
std::optional<CoalescenceMetric> ep_candidate(const SpectralData& s, const EpThresholds& thr);

double default_rank_tolerance(const HamiltonianMatrix& H);

// Chain lengths at E0 from the nullities of (H - E0 I)^k (descending).
std::vector<int> jordan_structure(const HamiltonianMatrix& H, cplx E0, std::optional<double> tol = std::nullopt);

struct SymmetryOperator {
    Eigen::MatrixXcd S;
    double residual{0.0};  // ‖H - S Hᵀ S⁻¹‖_F / ‖H‖_F
};

// Diagonalizable case uses S = P̃ P̄⁻¹ from the biorthogonal eigenvectors.
// At an EP the length-2 chains must be supplied (eigenvalue per chain).
SymmetryOperator symmetry_operator(const HamiltonianMatrix& H, const std::vector<JordanBlock>& chains = {});

}  // namespace hybridep
