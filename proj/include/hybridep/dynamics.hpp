// dynamics.hpp: Evolution kernel F(t) = exp(-iHt) by three routes, the
// trace-normalized transition matrix P(t), state evolution and an ODE check.
//
// Growing modes overflow double precision near t ~ 700/Im(E_max), so every
// kernel is stored as F = exp(log_scale) * F_scaled and only F_scaled is kept.
#pragma once

#include "hybridep/spectral.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace hybridep {

class DynamicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class PropagatorMethod { spectral, jordan, exponential };

std::string to_string(PropagatorMethod m);

struct Propagator {
    double t{0.0};
    Eigen::MatrixXcd F_scaled;
    double log_scale{0.0};
    PropagatorMethod method{PropagatorMethod::exponential};
    bool rescale_flagged{false};  // |log_scale| beyond ~1e±300

    // exp(-iHt) itself; may overflow when rescale_flagged.
    Eigen::MatrixXcd kernel() const { return F_scaled * std::exp(log_scale); }
};

// Relative distance of two kernels, ‖F_a - F_b‖_F / ‖F_b‖_F, using the scales.
double kernel_distance(const Propagator& a, const Propagator& b);

// Eigenvectors whose condition number ‖r‖‖l‖ exceeds this are treated as
// part of a near-defective pair in the jordan path.
inline constexpr double kClusterCondition = 10.0;

Propagator propagator(const HamiltonianMatrix& H, double t, PropagatorMethod method);
Propagator propagator(const HamiltonianMatrix& H, const SpectralData& s, double t, PropagatorMethod method);

// Padé(13) scaling and squaring of a general complex matrix, returned as
// exp(A) = exp(log_scale) * X.
struct ScaledExp {
    Eigen::MatrixXcd X;
    double log_scale{0.0};
};
ScaledExp expm_scaled(const Eigen::MatrixXcd& A);

struct TransitionRecord {
    double t{0.0};
    Eigen::MatrixXcd P;        // F†F / Tr F†F
    double norm_factor{0.0};   // (Tr F†F)^(-1/2), 0 if it underflows
    double log_norm_factor{0.0};
};

TransitionRecord transition_record(const Propagator& F);
TransitionRecord transition_matrix(const HamiltonianMatrix& H, double t,
                                   PropagatorMethod method = PropagatorMethod::jordan);

struct EvolvedState {
    double t{0.0};
    Eigen::VectorXcd trace_normalized;  // N(t) F ψ0
    Eigen::VectorXcd unit_normalized;   // F ψ0 / ‖F ψ0‖
    double log_growth{0.0};             // log ‖F ψ0‖
};

EvolvedState evolve_with(const Propagator& F, const Eigen::VectorXcd& psi0);
EvolvedState evolve_state(const HamiltonianMatrix& H, const Eigen::VectorXcd& psi0, double t,
                          PropagatorMethod method = PropagatorMethod::jordan);

// States on a time grid sharing one spectral decomposition.
std::vector<EvolvedState> evolve_grid(const HamiltonianMatrix& H, const Eigen::VectorXcd& psi0,
                                      const std::vector<double>& t_grid, int workers = 1,
                                      PropagatorMethod method = PropagatorMethod::jordan);

struct OdeOptions {
    double rtol{1e-12};
    double atol{1e-14};
    double h_min_rel{1e-13};
    std::size_t max_steps{50'000'000};
};

struct OdeResult {
    std::vector<Eigen::VectorXcd> states;  // unit norm at each grid time
    std::vector<double> log_growth;        // accumulated log of the norm
    std::size_t steps{0};
};

// Dormand–Prince 5(4) on dψ/dt = -iHψ.
OdeResult ode_oracle(const HamiltonianMatrix& H, const Eigen::VectorXcd& psi0, const std::vector<double>& t_grid,
                     const OdeOptions& opt = {});

struct WitnessReport {
    bool applicable{false};
    std::string reason;
    std::size_t entry{0};            // diagonal index of P used as signal
    double rss_exponential{0.0};     // log s = a + b t
    double rss_polynomial{0.0};      // log s = a - log(1 + c t²)
    double ratio{0.0};               // rss_exponential / rss_polynomial
    double c{0.0};
};

WitnessReport nonexponential_witness(const HamiltonianMatrix& H, const std::vector<double>& t_grid);

// Same fits on a supplied positive signal.
WitnessReport fit_decay_models(const std::vector<double>& t, const std::vector<double>& signal);

std::vector<double> linspace(double a, double b, std::size_t n);

}  // namespace hybridep
