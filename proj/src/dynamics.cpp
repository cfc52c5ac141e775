// dynamics.cpp: Propagators, transition matrix, state evolution, ODE oracle.

#include "hybridep/dynamics.hpp"
#include "hybridep/parallel.hpp"

#include <boost/math/tools/minima.hpp>

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace hybridep {

namespace {

const cplx I1{0.0, 1.0};

double max_growth_rate(const Eigen::VectorXcd& ev) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < ev.size(); ++k) m = std::max(m, ev(k).imag());
    return m;
}

const BlockSlice& slice_for(const HamiltonianMatrix& H, Block b) {
    for (const auto& s : H.blocks)
        if (s.block == b) return s;
    throw DynamicsError("block not present in Hamiltonian");
}

Propagator spectral_path(const SpectralData& s, double t) {
    if (s.biorthogonality_residual > 1e-6)
        throw DynamicsError("spectral propagator: biorthogonality residual " + std::to_string(s.biorthogonality_residual) +
                            " exceeds 1e-6 (near an exceptional point); use the jordan or exponential method");
    for (const auto& jb : s.jordan_blocks)
        if (jb.chain_length > 1)
            throw DynamicsError("spectral propagator: Jordan chain detected (exceptional point); use the jordan or "
                                "exponential method");
    Propagator p;
    p.t = t;
    p.method = PropagatorMethod::spectral;
    p.log_scale = std::max(0.0, max_growth_rate(s.eigenvalues)) * t;
    const auto n = s.eigenvalues.size();
    p.F_scaled = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
        p.F_scaled += std::exp(-I1 * s.eigenvalues(k) * t - p.log_scale) *
                      (s.right_vectors.col(k) * s.left_vectors.col(k).transpose());
    return p;
}

Propagator jordan_path(const HamiltonianMatrix& H, const SpectralData& s, double t) {
    const auto n = s.eigenvalues.size();
    std::vector<double> kappa(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k)
        kappa[static_cast<std::size_t>(k)] = s.right_vectors.col(k).norm() * s.left_vectors.col(k).norm();

    // Pair every ill-conditioned eigenvector with its nearest partner in the block.
    std::vector<int> cluster(static_cast<std::size_t>(n), -1);
    std::vector<std::array<Eigen::Index, 2>> pairs;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (cluster[static_cast<std::size_t>(k)] >= 0 || kappa[static_cast<std::size_t>(k)] <= kClusterCondition) continue;
        Eigen::Index best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == k || cluster[static_cast<std::size_t>(j)] >= 0) continue;
            if (s.block_of[static_cast<std::size_t>(j)] != s.block_of[static_cast<std::size_t>(k)]) continue;
            const double d = std::abs(s.eigenvalues(j) - s.eigenvalues(k));
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best < 0) continue;
        cluster[static_cast<std::size_t>(k)] = cluster[static_cast<std::size_t>(best)] = static_cast<int>(pairs.size());
        pairs.push_back({k, best});
    }

    Propagator p;
    p.t = t;
    p.method = PropagatorMethod::jordan;
    p.log_scale = std::max(0.0, max_growth_rate(s.eigenvalues)) * t;
    p.F_scaled = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
        if (cluster[static_cast<std::size_t>(k)] < 0)
            p.F_scaled += std::exp(-I1 * s.eigenvalues(k) * t - p.log_scale) *
                          (s.right_vectors.col(k) * s.left_vectors.col(k).transpose());

    const Eigen::MatrixXcd h = H.complex();
    for (std::size_t c = 0; c < pairs.size(); ++c) {
        const auto [i, j] = pairs[c];
        const BlockSlice& b = slice_for(H, s.block_of[static_cast<std::size_t>(i)]);
        const auto st = static_cast<Eigen::Index>(b.start);
        const auto sz = static_cast<Eigen::Index>(b.size);
        // Projector onto the pair's invariant plane from the complement.
        Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(n, n);
        proj.block(st, st, sz, sz).setIdentity();
        for (Eigen::Index k = st; k < st + sz; ++k)
            if (k != i && k != j) proj -= s.right_vectors.col(k) * s.left_vectors.col(k).transpose();

        const cplx Ec = 0.5 * (s.eigenvalues(i) + s.eigenvalues(j));
        const Eigen::MatrixXcd nil = (h - Ec * Eigen::MatrixXcd::Identity(n, n)) * proj;
        // nil² = δ² proj on the plane (traceless 2×2 restriction).
        const cplx sq = std::sqrt(0.5 * (nil * nil).trace());
        const cplx u = -I1 * Ec * t - p.log_scale;
        const cplx ep = std::exp(u + I1 * sq * t);
        const cplx em = std::exp(u - I1 * sq * t);
        const cplx cos_part = 0.5 * (ep + em);
        const cplx z = sq * t;
        cplx sin_part;  // e^u sin(st)/s
        if (std::abs(z) < 1e-3)
            sin_part = std::exp(u) * t * (1.0 - z * z / 6.0 + z * z * z * z / 120.0);
        else
            sin_part = (ep - em) / (2.0 * I1 * sq);
        p.F_scaled += cos_part * proj - I1 * sin_part * nil;
    }
    return p;
}

}  // namespace

std::string to_string(PropagatorMethod m) {
    switch (m) {
        case PropagatorMethod::spectral: return "spectral";
        case PropagatorMethod::jordan: return "jordan";
        case PropagatorMethod::exponential: return "exponential";
    }
    return "?";
}

double kernel_distance(const Propagator& a, const Propagator& b) {
    const Eigen::MatrixXcd fa = a.F_scaled * std::exp(a.log_scale - b.log_scale);
    return (fa - b.F_scaled).norm() / b.F_scaled.norm();
}

ScaledExp expm_scaled(const Eigen::MatrixXcd& A0) {
    static constexpr std::array<double, 14> b{64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                              1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                              670442572800.0,      33522128640.0,       1323241920.0,
                                              40840800.0,          960960.0,            16380.0,
                                              182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;
    const auto n = A0.rows();
    const Eigen::MatrixXcd Id = Eigen::MatrixXcd::Identity(n, n);

    const cplx mu = A0.trace() / static_cast<double>(n);
    Eigen::MatrixXcd A = A0 - mu * Id;
    const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    A /= std::ldexp(1.0, squarings);

    const Eigen::MatrixXcd A2 = A * A;
    const Eigen::MatrixXcd A4 = A2 * A2;
    const Eigen::MatrixXcd A6 = A4 * A2;
    const Eigen::MatrixXcd U =
        A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * Id);
    const Eigen::MatrixXcd V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * Id;

    ScaledExp out;
    out.X = (V - U).partialPivLu().solve(V + U);
    double L = 0.0;
    for (int k = 0; k < squarings; ++k) {
        out.X = out.X * out.X;
        const double c = out.X.norm();
        out.X /= c;
        L = 2.0 * L + std::log(c);
    }
    out.X *= std::exp(cplx(0.0, mu.imag()));
    out.log_scale = L + mu.real();
    return out;
}

Propagator propagator(const HamiltonianMatrix& H, double t, PropagatorMethod method) {
    if (method == PropagatorMethod::exponential) {
        const SpectralData none;
        return propagator(H, none, t, method);
    }
    return propagator(H, numerical_spectrum(H), t, method);
}

Propagator propagator(const HamiltonianMatrix& H, const SpectralData& s, double t, PropagatorMethod method) {
    if (!(t >= 0.0)) throw DynamicsError("propagator: t must be >= 0");
    Propagator p;
    switch (method) {
        case PropagatorMethod::spectral: p = spectral_path(s, t); break;
        case PropagatorMethod::jordan: p = jordan_path(H, s, t); break;
        case PropagatorMethod::exponential: {
            const ScaledExp e = expm_scaled(-I1 * t * H.complex());
            p.t = t;
            p.method = method;
            p.F_scaled = e.X;
            p.log_scale = e.log_scale;
            break;
        }
    }
    p.rescale_flagged = std::abs(p.log_scale) > 690.0;
    if (!p.F_scaled.allFinite()) throw DynamicsError("propagator: non-finite kernel at t = " + std::to_string(t));
    return p;
}

TransitionRecord transition_record(const Propagator& F) {
    TransitionRecord r;
    r.t = F.t;
    const Eigen::MatrixXcd g = F.F_scaled.adjoint() * F.F_scaled;
    const double tr = g.trace().real();
    r.P = g / tr;
    r.log_norm_factor = -F.log_scale - 0.5 * std::log(tr);
    r.norm_factor = std::exp(r.log_norm_factor);
    return r;
}

TransitionRecord transition_matrix(const HamiltonianMatrix& H, double t, PropagatorMethod method) {
    return transition_record(propagator(H, t, method));
}

EvolvedState evolve_with(const Propagator& F, const Eigen::VectorXcd& psi0) {
    EvolvedState e;
    e.t = F.t;
    const Eigen::VectorXcd v = F.F_scaled * psi0;
    const double tr = (F.F_scaled.adjoint() * F.F_scaled).trace().real();
    e.trace_normalized = v / std::sqrt(tr);
    const double nv = v.norm();
    e.unit_normalized = v / nv;
    e.log_growth = F.log_scale + std::log(nv);
    return e;
}

EvolvedState evolve_state(const HamiltonianMatrix& H, const Eigen::VectorXcd& psi0, double t, PropagatorMethod method) {
    return evolve_with(propagator(H, t, method), psi0);
}

std::vector<EvolvedState> evolve_grid(const HamiltonianMatrix& H, const Eigen::VectorXcd& psi0,
                                      const std::vector<double>& t_grid, int workers, PropagatorMethod method) {
    const SpectralData s = (method == PropagatorMethod::exponential) ? SpectralData{} : numerical_spectrum(H);
    return parallel_map<EvolvedState>(t_grid.size(), workers, [&](std::size_t i) {
        return evolve_with(propagator(H, s, t_grid[i], method), psi0);
    });
}

OdeResult ode_oracle(const HamiltonianMatrix& H, const Eigen::VectorXcd& psi0, const std::vector<double>& t_grid,
                     const OdeOptions& opt) {
    // Dormand–Prince tableau
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;
    (void)c2, (void)c3, (void)c4, (void)c5;

    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw DynamicsError("ode_oracle: time grid must be strictly increasing");

    const Eigen::MatrixXcd A = -I1 * H.complex();
    auto f = [&](const Eigen::VectorXcd& y) -> Eigen::VectorXcd { return A * y; };

    OdeResult res;
    Eigen::VectorXcd y = psi0;
    double log_norm = std::log(y.norm());
    y /= y.norm();
    double t = t_grid.empty() ? 0.0 : std::min(0.0, t_grid.front());
    double h = 0.01 / std::max(1.0, A.cwiseAbs().rowwise().sum().maxCoeff());

    for (double target : t_grid) {
        while (t < target) {
            if (res.steps++ > opt.max_steps) throw DynamicsError("ode_oracle: step budget exhausted at t = " + std::to_string(t));
            const bool last = (t + h >= target);
            const double hh = last ? target - t : h;
            const Eigen::VectorXcd k1 = f(y);
            const Eigen::VectorXcd k2 = f(y + hh * (a21 * k1));
            const Eigen::VectorXcd k3 = f(y + hh * (a31 * k1 + a32 * k2));
            const Eigen::VectorXcd k4 = f(y + hh * (a41 * k1 + a42 * k2 + a43 * k3));
            const Eigen::VectorXcd k5 = f(y + hh * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            const Eigen::VectorXcd k6 = f(y + hh * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            const Eigen::VectorXcd y5 = y + hh * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const Eigen::VectorXcd k7 = f(y5);
            const Eigen::VectorXcd err = hh * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            double en = 0.0;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                const double sc = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs(y5(i)));
                en += std::norm(err(i) / sc);
            }
            en = std::sqrt(en / static_cast<double>(y.size()));

            if (en <= 1.0) {
                t = last ? target : t + hh;
                y = y5;
                const double ny = y.norm();
                if (ny > 1e50 || ny < 1e-50) {
                    y /= ny;
                    log_norm += std::log(ny);
                }
            }
            const double fac = (en == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            if (!(last && en <= 1.0)) h = hh * fac;
            if (h < opt.h_min_rel * std::max(1.0, std::abs(t)))
                throw DynamicsError("ode_oracle: step size collapse at t = " + std::to_string(t));
        }
        const double ny = y.norm();
        log_norm += std::log(ny);
        y /= ny;
        res.states.push_back(y);
        res.log_growth.push_back(log_norm);
    }
    return res;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = a;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

WitnessReport fit_decay_models(const std::vector<double>& t, const std::vector<double>& signal) {
    WitnessReport r;
    const std::size_t n = t.size();
    if (n < 4 || signal.size() != n) {
        r.reason = "too few samples";
        return r;
    }
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(signal[i] > 0.0)) {
            r.reason = "non-positive signal";
            return r;
        }
        y[i] = std::log(signal[i]);
    }

    const double tm = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(n);
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (t[i] - tm) * (t[i] - tm);
        sty += (t[i] - tm) * (y[i] - ym);
    }
    const double slope = sty / stt;
    double rss_lin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = y[i] - (ym + slope * (t[i] - tm));
        rss_lin += d * d;
    }

    auto rss_poly = [&](double log_c) {
        const double c = std::exp(log_c);
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = y[i] + std::log1p(c * t[i] * t[i]);
        const double a = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(n);
        double s = 0.0;
        for (double zi : z) s += (zi - a) * (zi - a);
        return s;
    };

    const double T = std::max(std::abs(t.back()), std::abs(t.front()));
    const double lo = std::log(1e-12 / (T * T)), hi = std::log(1e8 / (T * T));
    constexpr int coarse = 200;
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= coarse; ++k) {
        const double v = rss_poly(lo + (hi - lo) * k / coarse);
        if (v < best_val) {
            best_val = v;
            best = k;
        }
    }
    const double step = (hi - lo) / coarse;
    const auto m = boost::math::tools::brent_find_minima(rss_poly, lo + step * std::max(0, best - 1),
                                                         lo + step * std::min(coarse, best + 1), 52);

    r.applicable = true;
    r.rss_exponential = rss_lin;
    r.rss_polynomial = m.second;
    r.c = std::exp(m.first);
    r.ratio = rss_lin / std::max(m.second, std::numeric_limits<double>::min());
    return r;
}

WitnessReport nonexponential_witness(const HamiltonianMatrix& H, const std::vector<double>& t_grid) {
    const SpectralData s = numerical_spectrum(H);
    double max_im = 0.0;
    for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) max_im = std::max(max_im, std::abs(s.eigenvalues(k).imag()));
    const bool coalescing = ep_candidate(s, EpThresholds::for_params(H.params)).has_value();
    if (max_im < 1e-8 && !coalescing) {
        WitnessReport r;
        r.reason = "real diagonalizable spectrum: no decaying signal";
        return r;
    }

    std::vector<Eigen::VectorXd> diag;
    diag.reserve(t_grid.size());
    for (double t : t_grid) diag.push_back(transition_record(propagator(H, s, t, PropagatorMethod::jordan)).P.diagonal().real());

    std::optional<std::size_t> pick;
    for (std::size_t j = 0; j < H.dim; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double first = diag.front()(jj), last = diag.back()(jj);
        if (!(first > 0.0) || !(last < 0.1 * first) || !(last > 0.0)) continue;
        if (!pick || last > diag.back()(static_cast<Eigen::Index>(*pick))) pick = j;
    }
    if (!pick) {
        WitnessReport r;
        r.reason = "no decaying diagonal entry of P(t)";
        return r;
    }
    std::vector<double> sig(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) sig[i] = diag[i](static_cast<Eigen::Index>(*pick));
    WitnessReport r = fit_decay_models(t_grid, sig);
    r.entry = *pick;
    return r;
}

}  // namespace hybridep
