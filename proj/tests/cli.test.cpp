#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "qpburst/device.hpp"
#include "qpburst/model_fitting.hpp"
#include "qpburst/simulator.hpp"
#include "qpburst/trace_io.hpp"
#include "qpburst/units.hpp"

namespace fs = std::filesystem;
using namespace qpburst;
using doctest::Approx;

namespace
{
fs::path const work = fs::path(QPBURST_TEST_WORKDIR) / "cli_work";

struct Run
{
    int code{0};
    std::string err;
};

Run run(std::string const& args)
{
    fs::create_directories(work);
    auto const err_file = work / "stderr.txt";
    std::string const cmd = std::string(QPBURST_CLI) + " " + args + " > "
                            + (work / "stdout.txt").string() + " 2> "
                            + err_file.string();
    int const status = std::system(cmd.c_str());
    std::ifstream in(err_file);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

fs::path write_config(std::string const& name, std::string const& text)
{
    fs::create_directories(work);
    auto const path = work / name;
    std::ofstream(path) << text;
    return path;
}

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> read_csv(fs::path const& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line))
    {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
        {
            row.push_back(std::stod(cell));
        }
        rows.push_back(row);
    }
    return rows;
}

std::map<std::string, std::string> read_summary(fs::path const& p)
{
    std::ifstream in(p);
    return read_key_values(in);
}

std::string first_line(fs::path const& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}
}  // namespace

TEST_CASE("rates")
{
    auto const big = write_config(
        "big.ini", "[device]\npreset = big\n[rates]\n"
                   "temperatures = 0.06, 0.065, 0.07, 0.075, 0.08\n");
    REQUIRE(run("rates --config " + big.string() + " --out " + (work / "big").string())
                .code
            == 0);
    auto const rows = read_csv(work / "big" / "rates.csv");
    REQUIRE(rows.size() == 5);
    // ln Gamma1 falls with unit slope against (dDelta - h f_q) / k_B T
    auto const p = big_gap_preset();
    double const gap = p.device.d_delta - p.device.f_q;
    double const x0 = gap / units::thermal_energy(rows.front()[0]);
    double const x1 = gap / units::thermal_energy(rows.back()[0]);
    double const slope
        = (std::log(rows.back()[2]) - std::log(rows.front()[2])) / (x1 - x0);
    CHECK(slope == Approx(-1).epsilon(0.2));

    auto const cold = write_config(
        "cold.ini", "[device]\npreset = big\n[bath]\nx_ne = 0\n"
                    "[rates]\ntemperatures = 0.005, 0.006\n");
    REQUIRE(run("rates --config " + cold.string() + " --out "
                + (work / "cold").string())
                .code
            == 0);
    for (auto const& r : read_csv(work / "cold" / "rates.csv"))
    {
        for (std::size_t k = 1; k <= 4; ++k)
        {
            CHECK(r[k] < 1e-150);
        }
    }

    auto const flat = write_config(
        "flat.ini", "[device]\npreset = small\n[rates]\n"
                    "temperatures = 0.03, 0.045, 0.06, 0.075, 0.09\n");
    REQUIRE(run("rates --config " + flat.string() + " --out "
                + (work / "flat").string())
                .code
            == 0);
    double lo = INFINITY;
    double hi = 0;
    for (auto const& r : read_csv(work / "flat" / "rates.csv"))
    {
        lo = std::min(lo, r[3]);
        hi = std::max(hi, r[3]);
    }
    CHECK(hi / lo < 1.25);
}

TEST_CASE("simulate")
{
    auto const cfg = write_config(
        "sim.ini", "[device]\npreset = small\n[bursts]\narrival_rate = 20\n"
                   "[measurement]\nparity_readable = true\n"
                   "[simulation]\nduration = 2\ntraces = 2\n");
    auto const a = work / "sim_a";
    auto const b = work / "sim_b";
    REQUIRE(run("simulate --config " + cfg.string() + " --seed 5 --out " + a.string())
                .code
            == 0);
    REQUIRE(run("simulate --config " + cfg.string()
                + " --seed 5 --threads 2 --out " + b.string())
                .code
            == 0);
    for (char const* f : {"trace_0000.csv", "trace_0000.meta", "trace_0001.csv"})
    {
        CAPTURE(f);
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(first_line(a / "trace_0000.csv") == "index,level,parity,reset");
    CHECK_FALSE(fs::exists(a / "truth_0000.jsonl"));

    REQUIRE(run("simulate --config " + cfg.string() + " --seed 5 --truth --out "
                + (work / "sim_truth").string())
                .code
            == 0);
    CHECK(first_line(work / "sim_truth" / "trace_0000.csv")
          == "index,level,parity,reset,true_level,true_parity,in_burst");
    CHECK(fs::exists(work / "sim_truth" / "truth_0000.jsonl"));

    SUBCASE("record count of a 90 s trace")
    {
        auto const full = write_config(
            "full.ini", "[device]\npreset = small\n[simulation]\nduration = 90\n");
        auto const dir = work / "sim_full";
        REQUIRE(run("simulate --config " + full.string() + " --seed 1 --out "
                    + dir.string())
                    .code
                == 0);
        std::ifstream in(dir / "trace_0000.csv");
        std::size_t lines = 0;
        std::string line;
        while (std::getline(in, line))
        {
            ++lines;
        }
        CHECK(lines == 15789473 + 1);
        fs::remove_all(dir);
    }
    SUBCASE("seed is required")
    {
        auto const r = run("simulate --config " + cfg.string() + " --out "
                           + (work / "sim_noseed").string());
        CHECK(r.code == 2);
        auto const err = nlohmann::json::parse(r.err);
        CHECK(err["error"] == "config");
    }
}

TEST_CASE("detect")
{
    SUBCASE("burst-free trace")
    {
        auto const cfg = write_config(
            "quiet.ini", "[device]\npreset = small\n"
                         "[simulation]\nduration = 20\ndiscard_probability = 0\n");
        auto const sim = work / "quiet";
        REQUIRE(run("simulate --config " + cfg.string() + " --seed 3 --out "
                    + sim.string())
                    .code
                == 0);
        auto const out = work / "quiet_detect";
        REQUIRE(run("detect --config " + cfg.string() + " --out " + out.string()
                    + " " + (sim / "trace_0000.csv").string())
                    .code
                == 0);
        CHECK(fs::exists(out / "events.jsonl"));
        CHECK(fs::file_size(out / "events.jsonl") == 0);
        auto const s = read_summary(out / "summary.txt");
        CHECK(s.at("qp_bursts") == "0");
        CHECK(std::stod(s.at("burst_rate_ci95_upper")) > 0);
    }
    SUBCASE("pipeline recovers the QP decay time")
    {
        auto const p = small_gap_preset();
        double const x = peak_coefficient_for_rate(p.device, 0.09, 3e5,
                                                   100e3 * units::electron_volt)
                         * 100e3 * units::electron_volt;
        std::ostringstream sched;
        for (int k = 0; k < 200; ++k)
        {
            sched << (k ? ", " : "") << format_double(0.05 + 0.1 * k) << ':'
                  << format_double(x);
        }
        auto const cfg = write_config(
            "pipeline.ini",
            "[device]\npreset = small\n[bursts]\nscheduled = " + sched.str()
                + "\n[simulation]\nduration = 20\ntraces = 2\n"
                  "discard_probability = 0\n"
                  "[recovery]\nt_after = 8e-3\ngamma10_steady = "
                + format_double(1 / p.t1) + "\nfit_start = 3e-3\n");
        auto const sim = work / "pipeline";
        REQUIRE(run("simulate --config " + cfg.string() + " --seed 11 --out "
                    + sim.string())
                    .code
                == 0);
        auto const out = work / "pipeline_detect";
        REQUIRE(run("detect --config " + cfg.string() + " --out " + out.string()
                    + " " + (sim / "trace_0000.csv").string() + " "
                    + (sim / "trace_0001.csv").string())
                    .code
                == 0);
        auto const s = read_summary(out / "summary.txt");
        CHECK(std::stoi(s.at("qp_bursts")) >= 390);
        REQUIRE(s.count("recovery_tau") == 1);
        CHECK(std::stod(s.at("recovery_tau")) == Approx(0.7e-3).epsilon(0.1));
        CHECK(fs::exists(out / "recovery.csv"));
        fs::remove_all(sim);
    }
}

TEST_CASE("hmm-rate")
{
    auto const cfg = write_config(
        "parity.ini", "[device]\npreset = small\n[measurement]\n"
                      "parity_readable = true\nparity_error = 0.02\n"
                      "[simulation]\nduration = 2\ndiscard_probability = 0\n");
    auto const sim = work / "parity";
    REQUIRE(run("simulate --config " + cfg.string() + " --seed 2 --out " + sim.string())
                .code
            == 0);
    auto const out = work / "parity_fit";
    REQUIRE(run("hmm-rate --config " + cfg.string() + " --format jsonl --out "
                + out.string() + " " + (sim / "trace_0000.csv").string())
                .code
            == 0);
    std::ifstream in(out / "hmm.jsonl");
    std::string line;
    REQUIRE(std::getline(in, line));
    auto const row = nlohmann::json::parse(line);
    CHECK(row["trace"] == "trace_0000.csv");
    CHECK(row["switch_rate"].get<double>() > 0);
    CHECK(row["assign_error"].get<double>() == Approx(0.02).epsilon(0.5));
}

TEST_CASE("fit-temps")
{
    auto const p = medium_gap_preset();
    FitParams const truth{p.x_ne, p.device.delta, p.device.d_delta,
                          p.gamma0_ph, p.gamma1_ph};
    std::vector<double> temps;
    for (int i = 0; i < 10; ++i)
    {
        temps.push_back(0.03 + 0.1 * i / 9);
    }
    fs::create_directories(work);
    std::ofstream(work / "sweep.csv")
        << [&] {
               std::ostringstream os;
               write_sweep_csv(os, synthesize_sweep(p.device, truth, temps, 0, 1));
               return os.str();
           }();
    auto const cfg = write_config("medium.ini", "[device]\npreset = medium\n"
                                                "[fit]\nd_delta = 2\n");
    auto const out = work / "fit";
    REQUIRE(run("fit-temps --config " + cfg.string() + " --out " + out.string()
                + " " + (work / "sweep.csv").string())
                .code
            == 0);
    auto const r = read_summary(out / "fit.txt");
    CHECK(std::stod(r.at("d_delta")) == Approx(p.device.d_delta).epsilon(1e-6));
    CHECK(std::stod(r.at("x_ne")) == Approx(p.x_ne).epsilon(1e-6));
    CHECK(read_csv(out / "fit_model.csv").size() == 10);
}

TEST_CASE("debye")
{
    auto const cfg = write_config(
        "debye.ini", "[debye]\nprefactor = 0.23\nt_debye = 1000\n"
                     "energies_ev = 1e5, 1e6\n");
    REQUIRE(run("debye --config " + cfg.string() + " --out "
                + (work / "debye").string())
                .code
            == 0);
    auto const rows = read_csv(work / "debye" / "debye.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][1] == Approx(0.06).epsilon(0.1));
    CHECK(rows[1][1] == Approx(0.1).epsilon(0.1));
}

TEST_CASE("errors")
{
    auto const bad = write_config("bad.ini", "[device]\npreset = big\n"
                                             "[steady]\nt_one = 1e-4\n");
    auto const r = run("rates --config " + bad.string() + " --out "
                       + (work / "bad").string());
    CHECK(r.code == 2);
    auto const err = nlohmann::json::parse(r.err);
    CHECK(err["error"] == "parse");
    CHECK(err["line"] == 4);
    CHECK(err["message"].get<std::string>().find("t_one") != std::string::npos);

    CHECK(run("rates --config " + (work / "missing.ini").string()).code != 0);
    CHECK(run("frobnicate").code != 0);

    auto const bad_trace = work / "bad_trace.csv";
    std::ofstream(bad_trace) << "index,level,parity,reset\n0,1,e,0\n1,7,e,0\n";
    auto const t = run("detect --out " + (work / "bad_detect").string() + " "
                       + bad_trace.string());
    CHECK(t.code == 2);
    CHECK(nlohmann::json::parse(t.err)["error"] == "parse");
}
