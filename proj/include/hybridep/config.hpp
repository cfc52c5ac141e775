// config.hpp: INI run configuration.
//
//   [model]       epsilon delta delta_ratio D E g alpha N
//   [spectrum]    param (alpha|gamma|d_minus) min max step
//   [ep_scan]     mode (alpha_gamma|n_sweep) block (even|odd|both)
//                 alpha_min alpha_max alpha_step gamma_min gamma_max gamma_step
//                 d_minus (comma list) n_values (comma list) gamma_N
//   [cat_locus]   alpha_min alpha_max alpha_step gamma_min gamma_max gamma_step
//                 qubit_k theta phi steady_t
//   [evolve]      qubit_k theta phi t_start t_end (required) steps method
//   [wigner]      qubit_k theta phi t (required) n_theta n_phi
//   [hp_compare]  n_max manifolds
//
// Exactly one subcommand section may appear. Angles in radians, times in ns.
#pragma once

#include "hybridep/dynamics.hpp"
#include "hybridep/epscan.hpp"
#include "hybridep/observables.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hybridep {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SpectrumConfig {
    SweepAxis param{SweepAxis::alpha};
    double min{0.0};
    double max{2.0};
    double step{1e-2};
};

enum class EpScanMode { alpha_gamma, n_sweep };

struct EpScanConfig {
    EpScanMode mode{EpScanMode::alpha_gamma};
    std::vector<Block> blocks{Block::even};
    AxisRange alpha{SweepAxis::alpha, 0.0, 2.0, 2e-3};
    std::optional<AxisRange> gamma;
    std::vector<double> d_minus;  // empty: the model's own d_
    std::vector<int> n_values{2, 3, 4, 5, 6, 8};
    std::optional<double> gamma_N;  // default: γ/√N of the model
};

struct CatLocusConfig {
    AxisRange alpha{SweepAxis::alpha, 0.0, 2.0, 2e-3};
    std::optional<AxisRange> gamma;
    InitialStateSpec initial{0, 1.5707963267948966, 0.0};
    double steady_t{6000.0};
};

struct EvolveConfig {
    InitialStateSpec initial{0, 1.5707963267948966, 0.0};
    double t_start{0.0};
    double t_end{0.0};
    int steps{601};
    PropagatorMethod method{PropagatorMethod::jordan};
    std::vector<double> grid() const;
};

struct WignerConfig {
    InitialStateSpec initial{0, 1.5707963267948966, 0.0};
    double t{0.0};
    int n_theta{64};
    int n_phi{128};
};

struct HpCompareConfig {
    std::optional<int> n_max;
    int manifolds{3};
};

struct RunConfig {
    ModelParams model;
    std::string command;  // section name, e.g. "ep_scan"
    SpectrumConfig spectrum;
    EpScanConfig ep_scan;
    CatLocusConfig cat_locus;
    EvolveConfig evolve;
    WignerConfig wigner;
    HpCompareConfig hp_compare;

    Normalization normalization{Normalization::unit};
    int workers{1};
    std::string out_dir{"."};

    // Canonical JSON echo of every resolved value; hashed into manifests.
    std::string echo() const;
    std::string hash() const;
};

// CLI subcommand (ep-scan) to section name (ep_scan).
std::string section_for_command(const std::string& subcommand);

// expected_section: the subcommand chosen on the command line; its section
// must be present.
RunConfig parse_config(const std::string& text, const std::optional<std::string>& expected_section = std::nullopt);

std::string fnv1a_hex(const std::string& s);

}  // namespace hybridep
