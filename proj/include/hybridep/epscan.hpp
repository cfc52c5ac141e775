// epscan.hpp: Exceptional-point loci in (α, γ, d_, N) and the steady
// cat-state locus.
#pragma once

#include "hybridep/spectral.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hybridep {

class NoRootError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SweepAxis { alpha, gamma, d_minus, N };

std::string to_string(SweepAxis a);

struct AxisRange {
    SweepAxis axis{SweepAxis::alpha};
    double min{0.0};
    double max{2.0};
    double step{2e-3};

    std::vector<double> values() const;  // min, min+step, ... <= max (+1e-9 step slack)
    void validate() const;
};

struct SweepGrid {
    ModelParams base;
    std::vector<AxisRange> axes;  // at most 2
    void validate() const;
    const AxisRange* find(SweepAxis a) const;
};

enum class EpMethod { discriminant, coalescence };

struct EPPoint {
    double alpha{0.0};
    double gamma{0.0};
    double d_minus{0.0};
    int N{2};
    cplx energy;
    Block block{Block::even};
    double metric{0.0};  // |B|/A² (discriminant) or eigenvalue gap in units of E (coalescence)
};

struct EPLocus {
    std::vector<EPPoint> points;
    EpMethod method{EpMethod::discriminant};
};

// B = A² - C³ for the N = 2 closed form.
double discriminant(const ModelParams& p, Block block);

struct EpRoot {
    double alpha{0.0};
    cplx energy;
    double residual{0.0};  // |B|/A² or gap/|E|
    EpMethod method{EpMethod::discriminant};
};

// Number of eigenvalues in the block with |Im E| > tol.
int complex_count(const HamiltonianMatrix& H, Block block, double tol = 1e-9);

// Refine the EP inside [lo, hi]. N = 2 at ε = 0 uses the discriminant sign,
// otherwise a change in complex_count. Throws NoRootError without a change.
EpRoot find_ep_alpha(ModelParams p, Block block, double lo, double hi);

// All roots on an α grid, ascending.
std::vector<EpRoot> scan_ep_alpha(const ModelParams& p, Block block, const std::vector<double>& alphas,
                                  std::optional<EpMethod> force = std::nullopt);

// Rows over γ (and optionally d_), α roots per row. Points are ordered by
// (d_, γ, α) regardless of worker count.
EPLocus trace_ep_curve(const SweepGrid& grid, Block block, int workers = 1);

struct InitialStateSpec {
    int qubit_k{0};
    double theta{0.0};
    double phi{0.0};
};

struct CatPoint {
    double gamma{0.0};
    double alpha{0.0};
    double steady_spin_norm{0.0};
    bool converged{false};
};

struct CatLocus {
    std::vector<CatPoint> points;  // accepted roots only
    std::vector<CatPoint> rejected;
    double steady_t{6000.0};
};

struct SteadyProbe {
    Eigen::Vector3d mean_spin;
    double drift{0.0};  // phase-insensitive change over the last window
    Eigen::VectorXcd state;
};

// Unit state at t and its distance to the state at t - window.
SteadyProbe steady_probe(const ModelParams& p, const InitialStateSpec& init, double t, double window = 100.0);

// Default steady-state tolerance on the drift.
inline constexpr double kSteadyTol = 1e-6;

CatLocus cat_locus(const SweepGrid& grid, const InitialStateSpec& init, double steady_t = 6000.0, int workers = 1);

// EP loci against N at fixed γ_N (g = γ_N E √N), α = α_N √N, both blocks.
EPLocus ep_vs_N(const ModelParams& base, double gamma_N, const std::vector<int>& Ns, const AxisRange& alpha_N,
                int workers = 1);

struct HpLevel {
    int manifold{0};  // dominant spin/boson excitation
    int level{0};     // index inside the manifold, by Re E
    cplx exact;
    cplx hp;
    double rel_dev{0.0};
};

// Exact spin levels against the boson form, matched by dominant excitation
// number n = 0 .. manifolds-1.
std::vector<HpLevel> compare_hp_levels(const ModelParams& p, int n_max, int manifolds = 3);

}  // namespace hybridep
