#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hybridep/commands.hpp"

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hybridep;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hybridep_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::runtime_error("no column " + name);
    }
    double num(std::size_t row, const std::string& name) const { return std::stod(rows[row][col(name)]); }
};

Csv read_csv(const fs::path& p) {
    std::ifstream in(p);
    Csv c;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) c.header = cells;
        else c.rows.push_back(cells);
        first = false;
    }
    return c;
}

RunConfig config(const std::string& text, const fs::path& out, int workers = 1) {
    RunConfig c = parse_config(text);
    c.out_dir = out.string();
    c.workers = workers;
    return c;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(HYBRIDEP_CLI) + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("config defaults and model keys") {
    RunConfig c = parse_config("[model]\n[hp_compare]\n");
    CHECK(c.model.zero_field_D == 2.88);
    CHECK(c.model.strain_E == 0.026);
    CHECK(c.model.coupling_g == 0.02);
    CHECK(c.model.epsilon == 0.0);
    CHECK(c.model.delta == doctest::Approx(2 * 2.88));
    CHECK(c.model.ensemble_size_N == 2);
    CHECK(c.command == "hp_compare");

    c = parse_config("[model]\nD = 3.0\ndelta_ratio = 1\n[hp_compare]\n");
    CHECK(c.model.delta == doctest::Approx(6.0));

    c = parse_config("[model]\n[evolve]\ntheta = pi/2\nphi = 3*pi/4\nt_end = 10\n");
    CHECK(c.evolve.initial.theta == doctest::Approx(1.5707963267948966));
    CHECK(c.evolve.initial.phi == doctest::Approx(2.356194490192345));
    CHECK(c.evolve.grid().size() == 601);

    CHECK(section_for_command("ep-scan") == "ep_scan");
    CHECK(section_for_command("hp-compare") == "hp_compare");
}

TEST_CASE("config errors name the offending key") {
    auto message = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("[model]\nN = -2\n[hp_compare]\n").find("ensemble_size_N") != std::string::npos);
    CHECK(message("[model]\nfoo = 1\n[hp_compare]\n").find("foo") != std::string::npos);
    const std::string missing = message("[model]\n[evolve]\ntheta = 0\n");
    CHECK(missing.find("t_end") != std::string::npos);
    CHECK(missing.find("evolve") != std::string::npos);
    CHECK(message("[model]\n[evolve]\nt_end = 1\n[wigner]\nt = 1\n") != "no error");
    CHECK(message("[model]\n") != "no error");
    CHECK(message("[model]\ndelta = 1\ndelta_ratio = 1\n[hp_compare]\n") != "no error");
    CHECK(message("[model]\n[spectrum]\nparam = beta\n") .find("param") != std::string::npos);
    CHECK(message("[model]\n[evolve]\nt_start = 5\nt_end = 1\n") != "no error");
    CHECK_THROWS_AS(parse_config("[model]\n[evolve]\nt_end = 1\n", std::string("wigner")), ConfigError);
}

TEST_CASE("config echo and hash") {
    const RunConfig a = parse_config("[model]\nalpha = 0.5\n[evolve]\nt_end = 100\n");
    RunConfig b = parse_config("[model]\nalpha=0.5\n\n[evolve]\nt_end=1e2\n");
    b.workers = 7;
    b.out_dir = "/elsewhere";
    CHECK(a.echo() == b.echo());
    CHECK(a.hash() == b.hash());
    const RunConfig c = parse_config("[model]\nalpha = 0.51\n[evolve]\nt_end = 100\n");
    CHECK(a.hash() != c.hash());
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("spectrum command") {
    const fs::path out = scratch("spectrum");
    const OutputFiles f = run_command(config("[model]\nalpha = 1\n[spectrum]\nparam = gamma\nmin = 0\nmax = 1\nstep = 0.25\n", out));
    REQUIRE(f.size() == 1);
    const Csv c = read_csv(f[0]);
    CHECK(c.header == std::vector<std::string>{"param", "block", "re_E", "im_E", "method"});
    CHECK(c.rows.size() == 5 * 12);
    for (std::size_t i = 0; i < c.rows.size(); ++i) CHECK(std::abs(c.num(i, "im_E")) < 1e-10);

    // γ = 0: constant decoupled levels, numerical and analytic rows agree.
    std::vector<double> num0, ana0;
    for (std::size_t i = 0; i < c.rows.size(); ++i)
        if (c.num(i, "param") == 0.0) (c.rows[i][c.col("method")] == "numerical" ? num0 : ana0).push_back(c.num(i, "re_E"));
    std::sort(num0.begin(), num0.end());
    std::sort(ana0.begin(), ana0.end());
    REQUIRE(num0.size() == 6);
    REQUIRE(ana0.size() == 6);
    const double D = 2.88, E = 0.026, q = 2 * 2.88 / 4;
    const std::vector<double> want{-q, q, D - q - E, D - q + E, D + q - E, D + q + E};
    std::vector<double> ws = want;
    std::sort(ws.begin(), ws.end());
    for (int i = 0; i < 6; ++i) {
        CHECK(num0[static_cast<std::size_t>(i)] == doctest::Approx(ws[static_cast<std::size_t>(i)]));
        CHECK(ana0[static_cast<std::size_t>(i)] == doctest::Approx(ws[static_cast<std::size_t>(i)]));
    }

    const auto manifest = nlohmann::json::parse(slurp(f[0].string() + ".manifest.json"));
    CHECK(manifest["version"] == kVersion);
    CHECK(manifest["command"] == "spectrum");
    CHECK(manifest.contains("wall_time_s"));
    CHECK(manifest["config_hash"] == parse_config("[model]\nalpha = 1\n[spectrum]\nparam = gamma\nmin = 0\nmax = 1\nstep = 0.25\n").hash());
}

TEST_CASE("ep-scan command") {
    const fs::path out = scratch("ep_scan");
    const OutputFiles f = run_command(config("[model]\n[ep_scan]\n", out, 4));
    const Csv c = read_csv(f[0]);
    CHECK(c.header == std::vector<std::string>{"d_minus", "gamma", "alpha", "block", "re_E", "im_E", "metric"});
    REQUIRE(c.rows.size() == 2);
    const double r1 = find_ep_alpha(ModelParams{}, Block::even, 0.8, 1.0).alpha;
    CHECK(c.num(0, "alpha") == doctest::Approx(r1).epsilon(1e-9));
    CHECK(std::abs(c.num(1, "alpha") - 1.24556) <= 1e-3);
    for (std::size_t i = 0; i < 2; ++i) CHECK(c.rows[i][c.col("block")] == "even");

    const fs::path out2 = scratch("ep_vs_n");
    const OutputFiles g = run_command(config("[model]\n[ep_scan]\nmode = n_sweep\nn_values = 2,3\n", out2, 2));
    const Csv n = read_csv(g[0]);
    CHECK(g[0].filename() == "ep_vs_N.csv");
    REQUIRE(n.rows.size() == 2);
    for (std::size_t i = 0; i < n.rows.size(); ++i) {
        CHECK(n.rows[i][0] == "2");
        CHECK(n.num(i, "alpha_N") == doctest::Approx(n.num(i, "alpha") / std::sqrt(2.0)));
    }
}

TEST_CASE("cat-locus command") {
    const fs::path out = scratch("cat");
    const OutputFiles f = run_command(config("[model]\n[cat_locus]\nalpha_min = 0.7\nalpha_max = 0.9\n", out));
    const Csv c = read_csv(f[0]);
    CHECK(c.header == std::vector<std::string>{"gamma", "alpha", "steady_spin_norm"});
    REQUIRE(c.rows.size() == 1);
    CHECK(std::abs(c.num(0, "alpha") - 0.82402) <= 1e-3);
}

TEST_CASE("evolve command") {
    const fs::path out = scratch("evolve");
    const std::string text = "[model]\nalpha = 1\n[evolve]\ntheta = pi/2\nt_end = 2000\nsteps = 401\n";
    const OutputFiles f = run_command(config(text, out, 3));
    REQUIRE(f.size() == 2);
    const Csv ts = read_csv(f[0]), obs = read_csv(f[1]);
    CHECK(ts.header.front() == "t_ns");
    CHECK(ts.header[1] == "p_survival");
    CHECK(ts.header.back() == "norm_factor");
    CHECK(ts.header.size() == 2 + 18 + 1);
    CHECK(obs.header == std::vector<std::string>{"t_ns", "p", "Sx", "Sy", "Sz", "zeta2_min", "zeta2_max", "degenerate",
                                                 "purity_NV", "purity_qb"});
    REQUIRE(ts.rows.size() == 401);
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < ts.rows.size(); ++i) {
        lo = std::min(lo, ts.num(i, "norm_factor"));
        hi = std::max(hi, ts.num(i, "norm_factor"));
        double trace = 0.0;
        for (const char* d : {"P_0_0", "P_1_1", "P_2_2", "P_3_3", "P_4_4", "P_5_5"}) trace += ts.num(i, d);
        CHECK(trace == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(hi - lo < 1e-10);

    // Deterministic across runs and worker counts.
    const fs::path again = scratch("evolve_again");
    const OutputFiles g = run_command(config(text, again, 1));
    CHECK(slurp(f[0]) == slurp(g[0]));
    CHECK(slurp(f[1]) == slurp(g[1]));

    // Non-decaying squeezing columns use the "inf" sentinel when degenerate.
    const fs::path cat = scratch("evolve_cat");
    const OutputFiles h = run_command(config("[model]\nalpha = 0.82442886\n[evolve]\ntheta = pi/2\nt_start = 6000\nt_end = 6001\nsteps = 2\n", cat));
    const Csv o = read_csv(h[1]);
    REQUIRE(o.rows.size() == 2);
    CHECK(o.rows[0][o.col("degenerate")] == "1");
    CHECK(o.rows[0][o.col("zeta2_min")] == "inf");
}

TEST_CASE("wigner and hp-compare commands") {
    const fs::path out = scratch("wigner");
    const OutputFiles f = run_command(config("[model]\n[wigner]\ntheta = pi/2\nt = 100\nn_theta = 32\nn_phi = 64\n", out));
    const Csv w = read_csv(f[0]);
    CHECK(w.header == std::vector<std::string>{"theta", "phi", "W"});
    CHECK(w.rows.size() == 32 * 64);
    const auto manifest = nlohmann::json::parse(slurp(f[0].string() + ".manifest.json"));
    CHECK(manifest["summary"].contains("cat_combined"));
    CHECK(manifest["summary"]["mean_spin"].size() == 3);

    const fs::path hp = scratch("hp");
    const OutputFiles g = run_command(config("[model]\nN = 20\n[hp_compare]\n", hp));
    const Csv h = read_csv(g[0]);
    CHECK(h.header == std::vector<std::string>{"manifold", "level", "exact_re", "exact_im", "hp_re", "hp_im", "rel_dev"});
    REQUIRE(h.rows.size() >= 3);
    for (std::size_t i = 0; i < h.rows.size(); ++i) CHECK(h.num(i, "rel_dev") < 0.02);
}

TEST_CASE("output directory must be writable") {
    const fs::path base = scratch("blocked");
    std::ofstream(base / "file") << "x";
    CHECK_THROWS_AS(run_command(config("[model]\n[hp_compare]\n", base / "file" / "sub")), ConfigError);
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("executable exit codes") {
    const fs::path dir = scratch("exe");
    std::ofstream(dir / "good.ini") << "[model]\n[hp_compare]\n";
    std::ofstream(dir / "bad.ini") << "[model]\nbogus = 1\n[hp_compare]\n";
    std::ofstream(dir / "wrong.ini") << "[model]\n[evolve]\nt_end = 1\n";
    const std::string out = " --out " + (dir / "o").string();
    CHECK(run_cli("hp-compare --config " + (dir / "good.ini").string() + out) == 0);
    CHECK(fs::exists(dir / "o" / "hp_compare.csv"));
    CHECK(run_cli("hp-compare --config " + (dir / "bad.ini").string() + out) == 2);
    CHECK(run_cli("hp-compare --config " + (dir / "wrong.ini").string() + out) == 2);
    CHECK(run_cli("hp-compare --config " + (dir / "missing.ini").string()) == 2);
    CHECK(run_cli("hp-compare --config " + (dir / "good.ini").string() + " --normalization other") == 2);
    CHECK(run_cli("frobnicate --config " + (dir / "good.ini").string()) == 2);
    CHECK(run_cli("hp-compare --config " + (dir / "good.ini").string() + " --workers 2 --normalization trace" + out) == 0);
}
