// commands.cpp

#include "hybridep/commands.hpp"
#include "hybridep/parallel.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>

namespace hybridep {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
        if (!out_) throw ConfigError("cannot write output file " + path.string());
        line(header);
    }
    void line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
        ++rows_;
    }
    std::size_t data_rows() const { return rows_ - 1; }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
    std::ofstream out_;
    std::size_t rows_{0};
};

std::string num(double x) { return format_number(x); }

std::string block_name(const HamiltonianMatrix& H, Block b) {
    if (!H.parity_conserved) return "full";
    return b == Block::even ? "even" : "odd";
}

std::string block_name(Block b) { return b == Block::even ? "even" : "odd"; }

fs::path prepare_dir(const RunConfig& cfg) {
    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("output directory not writable: " + dir.string());
    return dir;
}

void write_manifest(const RunConfig& cfg, const CsvWriter& csv, Clock::time_point start, const json& summary = {}) {
    json m;
    m["command"] = cfg.command;
    m["output"] = csv.path().filename().string();
    m["rows"] = csv.data_rows();
    m["config"] = json::parse(cfg.echo());
    m["config_hash"] = cfg.hash();
    m["version"] = kVersion;
    m["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
    if (!summary.is_null()) m["summary"] = summary;
    const fs::path p = csv.path().string() + ".manifest.json";
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write manifest " + p.string());
    out << m.dump(2) << '\n';
}

ModelParams at_param(ModelParams p, SweepAxis axis, double v) {
    switch (axis) {
        case SweepAxis::alpha: p.asymmetry_alpha = v; break;
        case SweepAxis::gamma: p.coupling_g = v * p.strain_E; break;
        case SweepAxis::d_minus: p.delta = delta_for_d_minus(v, p.zero_field_D, p.strain_E); break;
        case SweepAxis::N: p.ensemble_size_N = static_cast<int>(v); break;
    }
    return p;
}

std::vector<double> sweep_values(double lo, double hi, double step) {
    return AxisRange{SweepAxis::alpha, lo, hi, step}.values();
}

}  // namespace

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", x);
}

OutputFiles cmd_spectrum(const RunConfig& cfg) {
    const auto start = Clock::now();
    const fs::path dir = prepare_dir(cfg);
    const auto& sc = cfg.spectrum;
    const std::vector<double> values = sweep_values(sc.min, sc.max, sc.step);
    std::vector<ModelParams> points;
    for (double v : values) points.push_back(at_param(cfg.model, sc.param, v));

    const auto numeric = parallel_map<HamiltonianMatrix>(points.size(), cfg.workers,
                                                         [&](std::size_t i) { return build_hamiltonian(points[i]); });

    // Closed form where it applies, branch-matched along the sweep.
    std::vector<std::vector<AnalyticSpectrum>> analytic;
    const bool closed_form = cfg.model.ensemble_size_N == 2 && cfg.model.epsilon == 0.0;
    if (closed_form) {
        for (Block b : {Block::even, Block::odd}) {
            try {
                analytic.push_back(analytic_sweep(points, b));
            } catch (const SpectralError&) {
                analytic.clear();
                break;
            }
        }
    }

    CsvWriter csv(dir / "spectrum.csv", {"param", "block", "re_E", "im_E", "method"});
    for (std::size_t i = 0; i < points.size(); ++i) {
        const HamiltonianMatrix& H = numeric[i];
        for (const auto& slice : H.blocks) {
            const Eigen::VectorXcd ev = block_eigenvalues(H, slice.block);
            for (Eigen::Index k = 0; k < ev.size(); ++k)
                csv.line({num(values[i]), block_name(H, slice.block), num(ev(k).real()), num(ev(k).imag()), "numerical"});
        }
        for (std::size_t b = 0; b < analytic.size(); ++b)
            for (const cplx& e : analytic[b][i].energies)
                csv.line({num(values[i]), b == 0 ? "even" : "odd", num(e.real()), num(e.imag()), "analytic"});
    }
    write_manifest(cfg, csv, start,
                   json{{"param", to_string(sc.param)}, {"points", values.size()}, {"analytic", !analytic.empty()}});
    return {csv.path()};
}

OutputFiles cmd_ep_scan(const RunConfig& cfg) {
    const auto start = Clock::now();
    const fs::path dir = prepare_dir(cfg);
    const auto& ec = cfg.ep_scan;

    if (ec.mode == EpScanMode::n_sweep) {
        const double gN = ec.gamma_N.value_or(cfg.model.coupling_g / cfg.model.strain_E /
                                              std::sqrt(static_cast<double>(cfg.model.ensemble_size_N)));
        const EPLocus locus = ep_vs_N(cfg.model, gN, ec.n_values, ec.alpha, cfg.workers);
        CsvWriter csv(dir / "ep_vs_N.csv", {"N", "gamma_N", "alpha_N", "alpha", "block", "re_E", "im_E", "metric"});
        for (const auto& p : locus.points)
            csv.line({std::to_string(p.N), num(gN), num(p.alpha / std::sqrt(static_cast<double>(p.N))), num(p.alpha),
                      block_name(p.block), num(p.energy.real()), num(p.energy.imag()), num(p.metric)});
        json per_n = json::object();
        for (int n : ec.n_values) {
            int c = 0;
            for (const auto& p : locus.points) c += (p.N == n);
            per_n[std::to_string(n)] = c;
        }
        write_manifest(cfg, csv, start, json{{"method", "coalescence"}, {"points_per_N", per_n}});
        return {csv.path()};
    }

    std::vector<ModelParams> bases;
    if (ec.d_minus.empty()) {
        bases.push_back(cfg.model);
    } else {
        for (double d : ec.d_minus) bases.push_back(at_param(cfg.model, SweepAxis::d_minus, d));
    }
    CsvWriter csv(dir / "ep_locus.csv", {"d_minus", "gamma", "alpha", "block", "re_E", "im_E", "metric"});
    std::string method;
    for (const auto& base : bases) {
        SweepGrid grid;
        grid.base = base;
        grid.axes.push_back(ec.alpha);
        if (ec.gamma) grid.axes.push_back(*ec.gamma);
        for (Block b : ec.blocks) {
            const EPLocus locus = trace_ep_curve(grid, b, cfg.workers);
            method = locus.method == EpMethod::discriminant ? "discriminant" : "coalescence";
            for (const auto& p : locus.points)
                csv.line({num(p.d_minus), num(p.gamma), num(p.alpha), block_name(p.block), num(p.energy.real()),
                          num(p.energy.imag()), num(p.metric)});
        }
    }
    write_manifest(cfg, csv, start, json{{"method", method}, {"points", csv.data_rows()}});
    return {csv.path()};
}

OutputFiles cmd_cat_locus(const RunConfig& cfg) {
    const auto start = Clock::now();
    const fs::path dir = prepare_dir(cfg);
    const auto& cc = cfg.cat_locus;
    SweepGrid grid;
    grid.base = cfg.model;
    grid.axes.push_back(cc.alpha);
    if (cc.gamma) grid.axes.push_back(*cc.gamma);
    const CatLocus locus = cat_locus(grid, cc.initial, cc.steady_t, cfg.workers);

    CsvWriter csv(dir / "cat_locus.csv", {"gamma", "alpha", "steady_spin_norm"});
    for (const auto& p : locus.points) csv.line({num(p.gamma), num(p.alpha), num(p.steady_spin_norm)});
    json rejected = json::array();
    for (const auto& p : locus.rejected)
        rejected.push_back({{"gamma", p.gamma}, {"alpha", p.alpha}, {"steady_spin_norm", p.steady_spin_norm},
                            {"converged", p.converged}});
    write_manifest(cfg, csv, start, json{{"steady_t", locus.steady_t}, {"rejected", rejected}});
    return {csv.path()};
}

OutputFiles cmd_evolve(const RunConfig& cfg) {
    const auto start = Clock::now();
    const fs::path dir = prepare_dir(cfg);
    const auto& ev = cfg.evolve;
    const HamiltonianMatrix H = build_hamiltonian(cfg.model);
    const Eigen::VectorXcd psi0 = initial_product_state(ev.initial.qubit_k, ev.initial.theta, ev.initial.phi, cfg.model);
    const SpectralData s = (ev.method == PropagatorMethod::exponential) ? SpectralData{} : numerical_spectrum(H);
    const std::vector<double> grid = ev.grid();

    struct Sample {
        TransitionRecord record;
        EvolvedState state;
        bool flagged{false};
    };
    const auto samples = parallel_map<Sample>(grid.size(), cfg.workers, [&](std::size_t i) {
        const Propagator F = propagator(H, s, grid[i], ev.method);
        return Sample{transition_record(F), evolve_with(F, psi0), F.rescale_flagged};
    });

    // Within-block entries of P, row-major, block by block. Off-diagonal
    // entries are written as moduli.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> entries;
    std::vector<std::string> header{"t_ns", "p_survival"};
    for (const auto& b : H.blocks) {
        const auto st = static_cast<Eigen::Index>(b.start), sz = static_cast<Eigen::Index>(b.size);
        for (Eigen::Index i = st; i < st + sz; ++i)
            for (Eigen::Index j = st; j < st + sz; ++j) {
                entries.emplace_back(i, j);
                header.push_back(fmt::format("P_{}_{}", i, j));
            }
    }
    header.push_back("norm_factor");

    CsvWriter ts(dir / "evolve_timeseries.csv", header);
    CsvWriter obs(dir / "observables.csv", {"t_ns", "p", "Sx", "Sy", "Sz", "zeta2_min", "zeta2_max", "degenerate",
                                            "purity_NV", "purity_qb"});
    bool any_flagged = false;
    for (const auto& smp : samples) {
        const ObservableRow row = observe(smp.state, psi0, H, cfg.normalization);
        std::vector<std::string> cells{num(smp.record.t), num(row.p)};
        for (const auto& [i, j] : entries)
            cells.push_back(num(i == j ? smp.record.P(i, j).real() : std::abs(smp.record.P(i, j))));
        cells.push_back(num(smp.record.norm_factor));
        ts.line(cells);
        obs.line({num(row.t), num(row.p), num(row.spin.x()), num(row.spin.y()), num(row.spin.z()),
                  num(row.squeeze.zeta2_min), num(row.squeeze.zeta2_max), row.squeeze.degenerate ? "1" : "0",
                  num(row.purity_nv), num(row.purity_qb)});
        any_flagged = any_flagged || smp.flagged;
    }
    const json summary{{"method", to_string(ev.method)},
                       {"normalization", cfg.normalization == Normalization::unit ? "unit" : "trace"},
                       {"rescale_flagged", any_flagged}};
    write_manifest(cfg, ts, start, summary);
    write_manifest(cfg, obs, start, summary);
    return {ts.path(), obs.path()};
}

OutputFiles cmd_wigner(const RunConfig& cfg) {
    const auto start = Clock::now();
    const fs::path dir = prepare_dir(cfg);
    const auto& wc = cfg.wigner;
    const HamiltonianMatrix H = build_hamiltonian(cfg.model);
    const Eigen::VectorXcd psi0 = initial_product_state(wc.initial.qubit_k, wc.initial.theta, wc.initial.phi, cfg.model);
    const EvolvedState e = evolve_state(H, psi0, wc.t);
    const ReducedDensityMatrix nv = reduce_density(e.unit_normalized, H, Subsystem::nv);
    const WignerGrid g = wigner(nv.rho, wc.n_theta, wc.n_phi, cfg.workers);

    CsvWriter csv(dir / "wigner.csv", {"theta", "phi", "W"});
    for (std::size_t i = 0; i < g.theta.size(); ++i)
        for (std::size_t j = 0; j < g.phi.size(); ++j)
            csv.line({num(g.theta[i]), num(g.phi[j]),
                      num(g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))});

    const FringeReport fr = equatorial_fringes(nv.rho);
    const CatOverlapReport co = cat_overlap(nv.rho);
    const SpinMoments sm = spin_moments(nv.rho);
    const json summary{{"mean_spin", {sm.mean.x(), sm.mean.y(), sm.mean.z()}},
                       {"fringe_power", fr.power},
                       {"fringe_dominant_q", fr.dominant_q},
                       {"cat_fringes", fr.cat_fringes},
                       {"cat_axis_phi0", co.phi0},
                       {"cat_even", co.even_cat},
                       {"cat_odd", co.odd_cat},
                       {"raised_state", co.raised},
                       {"cat_combined", co.combined},
                       {"norm_constant", wigner_norm_constant(cfg.model.ensemble_size_N)}};
    write_manifest(cfg, csv, start, summary);
    return {csv.path()};
}

OutputFiles cmd_hp_compare(const RunConfig& cfg) {
    const auto start = Clock::now();
    const fs::path dir = prepare_dir(cfg);
    const int n_max = cfg.hp_compare.n_max.value_or(default_hp_truncation(cfg.model.ensemble_size_N));
    const auto rows = compare_hp_levels(cfg.model, n_max, cfg.hp_compare.manifolds);
    CsvWriter csv(dir / "hp_compare.csv", {"manifold", "level", "exact_re", "exact_im", "hp_re", "hp_im", "rel_dev"});
    double worst = 0.0;
    for (const auto& r : rows) {
        csv.line({std::to_string(r.manifold), std::to_string(r.level), num(r.exact.real()), num(r.exact.imag()),
                  num(r.hp.real()), num(r.hp.imag()), num(r.rel_dev)});
        worst = std::max(worst, r.rel_dev);
    }
    write_manifest(cfg, csv, start, json{{"n_max", n_max}, {"max_rel_dev", worst}});
    return {csv.path()};
}

OutputFiles run_command(const RunConfig& cfg) {
    if (cfg.command == "spectrum") return cmd_spectrum(cfg);
    if (cfg.command == "ep_scan") return cmd_ep_scan(cfg);
    if (cfg.command == "cat_locus") return cmd_cat_locus(cfg);
    if (cfg.command == "evolve") return cmd_evolve(cfg);
    if (cfg.command == "wigner") return cmd_wigner(cfg);
    if (cfg.command == "hp_compare") return cmd_hp_compare(cfg);
    throw ConfigError("no subcommand section in config");
}

}  // namespace hybridep
