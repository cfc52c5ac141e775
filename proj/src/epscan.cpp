// epscan.cpp

#include "hybridep/epscan.hpp"
#include "hybridep/dynamics.hpp"
#include "hybridep/observables.hpp"
#include "hybridep/parallel.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hybridep {

namespace {

bool uses_discriminant(const ModelParams& p) { return p.ensemble_size_N == 2 && p.epsilon == 0.0; }

// Coalescing pair of the closed form: the two closest energies.
cplx coalescing_energy(const AnalyticSpectrum& a) {
    const auto& e = a.energies;
    const double d01 = std::abs(e[0] - e[1]), d12 = std::abs(e[1] - e[2]), d02 = std::abs(e[0] - e[2]);
    if (d01 <= d12 && d01 <= d02) return 0.5 * (e[0] + e[1]);
    if (d12 <= d02) return 0.5 * (e[1] + e[2]);
    return 0.5 * (e[0] + e[2]);
}

std::pair<cplx, double> closest_pair(const Eigen::VectorXcd& ev) {
    double best = std::numeric_limits<double>::infinity();
    cplx mid;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        for (Eigen::Index j = i + 1; j < ev.size(); ++j) {
            const double d = std::abs(ev(i) - ev(j));
            if (d < best) {
                best = d;
                mid = 0.5 * (ev(i) + ev(j));
            }
        }
    return {mid, best};
}

EpRoot refine_discriminant(ModelParams p, Block block, double lo, double hi) {
    auto f = [&](double a) {
        p.asymmetry_alpha = a;
        return discriminant(p, block);
    };
    const double flo = f(lo), fhi = f(hi);
    if (flo == 0.0 || fhi == 0.0) {
        const double a = (flo == 0.0) ? lo : hi;
        p.asymmetry_alpha = a;
        return {a, coalescing_energy(analytic_spectrum_n2(p, block)), 0.0, EpMethod::discriminant};
    }
    if ((flo > 0.0) == (fhi > 0.0))
        throw NoRootError("find_ep_alpha: discriminant has no sign change in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52),
                                                     iters);
    // Endpoint with the smaller |B|.
    const double a = (std::abs(f(r.first)) <= std::abs(f(r.second))) ? r.first : r.second;
    p.asymmetry_alpha = a;
    const auto ci = cubic_intermediates(p, block);
    EpRoot out;
    out.alpha = a;
    out.method = EpMethod::discriminant;
    out.residual = std::abs(ci.B) / (ci.A * ci.A);
    try {
        out.energy = coalescing_energy(analytic_spectrum_n2(p, block));
    } catch (const SpectralError&) {
        out.energy = closest_pair(block_eigenvalues(build_hamiltonian(p), block)).first;
    }
    return out;
}

EpRoot refine_count(ModelParams p, Block block, double lo, double hi) {
    auto count = [&](double a) {
        p.asymmetry_alpha = a;
        return complex_count(build_hamiltonian(p), block);
    };
    const int clo = count(lo), chi = count(hi);
    if (clo == chi)
        throw NoRootError("find_ep_alpha: complex eigenvalue count does not change in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    while (hi - lo > 1e-11 * std::max(1.0, std::abs(lo))) {
        const double mid = 0.5 * (lo + hi);
        if (count(mid) == clo)
            lo = mid;
        else
            hi = mid;
    }
    p.asymmetry_alpha = 0.5 * (lo + hi);
    const auto [E, gap] = closest_pair(block_eigenvalues(build_hamiltonian(p), block));
    return {p.asymmetry_alpha, E, gap / std::abs(p.strain_E), EpMethod::coalescence};
}

double indicator(ModelParams p, Block block, double a, EpMethod m) {
    p.asymmetry_alpha = a;
    if (m == EpMethod::discriminant) return discriminant(p, block);
    return complex_count(build_hamiltonian(p), block);
}

}  // namespace

std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::alpha: return "alpha";
        case SweepAxis::gamma: return "gamma";
        case SweepAxis::d_minus: return "d_minus";
        case SweepAxis::N: return "N";
    }
    return "?";
}

std::vector<double> AxisRange::values() const {
    validate();
    std::vector<double> v;
    const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) v.push_back(min + step * static_cast<double>(i));
    return v;
}

void AxisRange::validate() const {
    if (!(step > 0.0)) throw std::invalid_argument(to_string(axis) + " axis: step must be > 0");
    if (!(max >= min)) throw std::invalid_argument(to_string(axis) + " axis: bounds out of order");
    if (axis == SweepAxis::N && (min != std::floor(min) || step != std::floor(step)))
        throw std::invalid_argument("N axis takes integer values only");
}

void SweepGrid::validate() const {
    if (axes.size() > 2) throw std::invalid_argument("sweep grid: at most two axes");
    for (const auto& a : axes) a.validate();
    if (axes.size() == 2 && axes[0].axis == axes[1].axis) throw std::invalid_argument("sweep grid: repeated axis");
}

const AxisRange* SweepGrid::find(SweepAxis a) const {
    for (const auto& r : axes)
        if (r.axis == a) return &r;
    return nullptr;
}

double discriminant(const ModelParams& p, Block block) { return cubic_intermediates(p, block).B; }

int complex_count(const HamiltonianMatrix& H, Block block, double tol) {
    const Eigen::VectorXcd ev = block_eigenvalues(H, block);
    int c = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (std::abs(ev(i).imag()) > tol) ++c;
    return c;
}

EpRoot find_ep_alpha(ModelParams p, Block block, double lo, double hi) {
    if (!(hi > lo)) throw std::invalid_argument("find_ep_alpha: bracket must satisfy lo < hi");
    return uses_discriminant(p) ? refine_discriminant(p, block, lo, hi) : refine_count(p, block, lo, hi);
}

std::vector<EpRoot> scan_ep_alpha(const ModelParams& p, Block block, const std::vector<double>& alphas,
                                  std::optional<EpMethod> force) {
    const EpMethod m = force.value_or(uses_discriminant(p) ? EpMethod::discriminant : EpMethod::coalescence);
    if (m == EpMethod::discriminant && !uses_discriminant(p))
        throw std::invalid_argument("scan_ep_alpha: discriminant needs N = 2 and epsilon = 0");
    std::vector<EpRoot> roots;
    if (alphas.size() < 2) return roots;
    std::vector<double> f;
    f.reserve(alphas.size());
    for (double a : alphas) f.push_back(indicator(p, block, a, m));
    for (std::size_t i = 0; i + 1 < alphas.size(); ++i) {
        const bool change = (m == EpMethod::discriminant) ? ((f[i] >= 0.0) != (f[i + 1] >= 0.0)) : (f[i] != f[i + 1]);
        if (!change) continue;
        roots.push_back(m == EpMethod::discriminant ? refine_discriminant(p, block, alphas[i], alphas[i + 1])
                                                    : refine_count(p, block, alphas[i], alphas[i + 1]));
    }
    return roots;
}

EPLocus trace_ep_curve(const SweepGrid& grid, Block block, int workers) {
    grid.validate();
    const ModelParams& base = grid.base;
    const AxisRange alpha_axis = grid.find(SweepAxis::alpha) ? *grid.find(SweepAxis::alpha) : AxisRange{};
    const std::vector<double> gammas = grid.find(SweepAxis::gamma)
                                           ? grid.find(SweepAxis::gamma)->values()
                                           : std::vector<double>{base.coupling_g / base.strain_E};
    const std::vector<double> ds = grid.find(SweepAxis::d_minus) ? grid.find(SweepAxis::d_minus)->values()
                                                                 : std::vector<double>{rotate_qubit_frame(base).d_minus};
    const std::vector<double> alphas = alpha_axis.values();

    struct Row {
        double d, gamma;
    };
    std::vector<Row> rows;
    for (double d : ds)
        for (double g : gammas) rows.push_back({d, g});

    const auto found = parallel_map<std::vector<EPPoint>>(rows.size(), workers, [&](std::size_t i) {
        ModelParams p = base;
        p.coupling_g = rows[i].gamma * p.strain_E;
        if (grid.find(SweepAxis::d_minus)) p.delta = delta_for_d_minus(rows[i].d, p.zero_field_D, p.strain_E);
        std::vector<EPPoint> pts;
        for (const auto& r : scan_ep_alpha(p, block, alphas)) {
            EPPoint e;
            e.alpha = r.alpha;
            e.gamma = rows[i].gamma;
            e.d_minus = rotate_qubit_frame(p).d_minus;
            e.N = p.ensemble_size_N;
            e.energy = r.energy;
            e.block = block;
            e.metric = r.residual;
            pts.push_back(e);
        }
        return pts;
    });

    EPLocus locus;
    locus.method = uses_discriminant(base) ? EpMethod::discriminant : EpMethod::coalescence;
    for (const auto& v : found) locus.points.insert(locus.points.end(), v.begin(), v.end());
    return locus;
}

SteadyProbe steady_probe(const ModelParams& p, const InitialStateSpec& init, double t, double window) {
    const HamiltonianMatrix H = build_hamiltonian(p);
    const SpectralData s = numerical_spectrum(H);
    const Eigen::VectorXcd psi0 = initial_product_state(init.qubit_k, init.theta, init.phi, p);
    const EvolvedState a = evolve_with(propagator(H, s, t, PropagatorMethod::jordan), psi0);
    const EvolvedState b = evolve_with(propagator(H, s, std::max(0.0, t - window), PropagatorMethod::jordan), psi0);
    SteadyProbe out;
    out.state = a.unit_normalized;
    out.drift = std::sqrt(std::max(0.0, 2.0 - 2.0 * std::abs(b.unit_normalized.dot(a.unit_normalized))));
    out.mean_spin = spin_moments(reduce_density(a.unit_normalized, H, Subsystem::nv).rho).mean;
    return out;
}

CatLocus cat_locus(const SweepGrid& grid, const InitialStateSpec& init, double steady_t, int workers) {
    grid.validate();
    const ModelParams& base = grid.base;
    const AxisRange alpha_axis = grid.find(SweepAxis::alpha) ? *grid.find(SweepAxis::alpha) : AxisRange{};
    const std::vector<double> gammas = grid.find(SweepAxis::gamma)
                                           ? grid.find(SweepAxis::gamma)->values()
                                           : std::vector<double>{base.coupling_g / base.strain_E};
    const std::vector<double> alphas = alpha_axis.values();
    const double spin_tol = 1e-3 * 0.5 * base.ensemble_size_N;

    CatLocus locus;
    locus.steady_t = steady_t;
    for (double gamma : gammas) {
        ModelParams p = base;
        p.coupling_g = gamma * p.strain_E;
        auto probe = [&](double a) {
            ModelParams q = p;
            q.asymmetry_alpha = a;
            return steady_probe(q, init, steady_t);
        };
        const auto samples =
            parallel_map<Eigen::Vector3d>(alphas.size(), workers, [&](std::size_t i) { return probe(alphas[i]).mean_spin; });

        for (std::size_t i = 0; i + 1 < alphas.size(); ++i) {
            if (!(samples[i].dot(samples[i + 1]) < 0.0)) continue;
            const Eigen::Vector3d u = samples[i];
            auto f = [&](double a) { return probe(a).mean_spin.dot(u); };
            std::uintmax_t iters = 100;
            double a_root;
            try {
                const auto r = boost::math::tools::toms748_solve(f, alphas[i], alphas[i + 1],
                                                                 boost::math::tools::eps_tolerance<double>(40), iters);
                a_root = 0.5 * (r.first + r.second);
            } catch (const std::exception&) {
                continue;
            }
            const SteadyProbe sp = probe(a_root);
            CatPoint c{gamma, a_root, sp.mean_spin.norm(), sp.drift < kSteadyTol};
            if (c.converged && c.steady_spin_norm < spin_tol)
                locus.points.push_back(c);
            else
                locus.rejected.push_back(c);
        }
    }
    return locus;
}

EPLocus ep_vs_N(const ModelParams& base, double gamma_N, const std::vector<int>& Ns, const AxisRange& alpha_N, int workers) {
    struct Job {
        int N;
        Block block;
    };
    std::vector<Job> jobs;
    for (int N : Ns)
        for (Block b : {Block::even, Block::odd}) jobs.push_back({N, b});
    const std::vector<double> aN = alpha_N.values();

    const auto found = parallel_map<std::vector<EPPoint>>(jobs.size(), workers, [&](std::size_t i) {
        ModelParams p = base;
        p.ensemble_size_N = jobs[i].N;
        const double rootN = std::sqrt(static_cast<double>(jobs[i].N));
        p.coupling_g = gamma_N * p.strain_E * rootN;
        std::vector<double> alphas;
        for (double a : aN) alphas.push_back(a * rootN);
        std::vector<EPPoint> pts;
        for (const auto& r : scan_ep_alpha(p, jobs[i].block, alphas, EpMethod::coalescence)) {
            EPPoint e;
            e.alpha = r.alpha;
            e.gamma = gamma_N * rootN;
            e.d_minus = rotate_qubit_frame(p).d_minus;
            e.N = jobs[i].N;
            e.energy = r.energy;
            e.block = jobs[i].block;
            e.metric = r.residual;
            pts.push_back(e);
        }
        return pts;
    });

    EPLocus locus;
    locus.method = EpMethod::coalescence;
    for (const auto& v : found) locus.points.insert(locus.points.end(), v.begin(), v.end());
    return locus;
}

namespace {

std::vector<std::vector<cplx>> levels_by_manifold(const HamiltonianMatrix& H, int manifolds) {
    const SpectralData s = numerical_spectrum(H);
    std::vector<std::vector<cplx>> out(static_cast<std::size_t>(manifolds));
    for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
        const Eigen::VectorXcd v = to_tensor_order(s.right_vectors.col(k), H.basis, H.levels);
        Eigen::VectorXd w = Eigen::VectorXd::Zero(H.levels);
        for (int q = 0; q < 2; ++q)
            for (int n = 0; n < H.levels; ++n) w(n) += std::norm(v(q * H.levels + n));
        Eigen::Index dom;
        w.maxCoeff(&dom);
        if (dom < manifolds) out[static_cast<std::size_t>(dom)].push_back(s.eigenvalues(k));
    }
    for (auto& m : out) std::sort(m.begin(), m.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    return out;
}

}  // namespace

std::vector<HpLevel> compare_hp_levels(const ModelParams& p, int n_max, int manifolds) {
    const auto exact = levels_by_manifold(build_hamiltonian(p), manifolds);
    const auto hp = levels_by_manifold(hp_hamiltonian(p, n_max), manifolds);
    std::vector<HpLevel> rows;
    for (int n = 0; n < manifolds; ++n) {
        const auto& a = exact[static_cast<std::size_t>(n)];
        const auto& b = hp[static_cast<std::size_t>(n)];
        for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
            rows.push_back({n, static_cast<int>(i), a[i], b[i], std::abs(a[i] - b[i]) / std::abs(a[i])});
    }
    return rows;
}

}  // namespace hybridep
