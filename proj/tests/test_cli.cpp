#include <doctest.h>

#include "fixtures.hpp"
#include "study.hpp"
#include "wq/data.hpp"
#include "wq/decompose.hpp"
#include "wq/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using fixture::run_cli;
using json = nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

}  // namespace

TEST_CASE("simulate then fit recovers the chi-squared mixture index") {
    auto dir = fixture::scratch_dir("cli_sim");
    auto sim = run_cli({"simulate", "--n-dof", "3", "--beta0", "1", "--count", "1000000", "--seed", "7", "--out",
                       dir.string()});
    REQUIRE(sim.status == 0);
    auto fit = run_cli({"fit", "--input", (dir / "simulated.csv").string(), "--out", dir.string()});
    REQUIRE(fit.status == 0);
    auto j = load(dir / "simulated.fit.json");
    // q(3) = 1.5 and beta(3) = 2/3 from quadrature of the mixture.
    CHECK(std::abs(j["fit"]["q"].get<double>() - 1.5) <= 0.05);
    CHECK(std::abs(j["fit"]["beta"].get<double>() / (2.0 / 3.0) - 1.0) <= 0.10);
    CHECK(j["fit"]["n_samples"] == 1000000);
    auto s = load(dir / "simulated.json");
    CHECK(s["seed"] == 7);
    CHECK(s["marginal"]["q"].get<double>() == doctest::Approx(1.5));
}

TEST_CASE("clean removes a DO reading above the ceiling") {
    auto dir = fixture::scratch_dir("cli_clean");
    auto csv = fixture::site_csv({96, 4, false});
    // Row 10 of the fixture gets DO = 30 mg/L.
    std::istringstream in(csv);
    std::string line, edited;
    for (int i = -1; std::getline(in, line); ++i) {
        if (i == 10) {
            auto a = line.find(','), b = line.find(',', a + 1);
            line = line.substr(0, a + 1) + "30" + line.substr(b);
        }
        edited += line + '\n';
    }
    spit(dir / "in" / "T1.csv", edited);
    auto r = run_cli({"clean", "--input", (dir / "in" / "T1.csv").string(), "--out", dir.string()});
    REQUIRE(r.status == 0);
    auto rep = load(dir / "T1.clean_report.json");
    const auto& d = rep["report"]["indicators"]["DOO-MGL"];
    CHECK(d["removed"]["do_max"] == 1);
    CHECK(d["raw"] == 96);
    CHECK(d["surviving"] == 95);
    auto set = wq::data::read_grid_csv(slurp(dir / "T1.clean.csv"));
    CHECK_FALSE(set.at("DOO-MGL")[10].has_value());
}

TEST_CASE("compare ranks multiplicative EMD first on the generative fixture") {
    auto dir = fixture::scratch_dir("cli_compare");
    wq::data::SeriesSet set{{"DOO-MGL", fixture::multiplicative_fixture(1)}};
    spit(dir / "G1.clean.csv", wq::data::write_grid_csv(set));
    auto r = run_cli({"compare", "--input", (dir / "G1.clean.csv").string(), "--methods", "all", "--f", "6h", "--m", "3",
                     "--out", dir.string()});
    REQUIRE(r.status == 0);
    auto j = load(dir / "G1.compare.json");
    CHECK(j["best"] == "multiplicative_emd");
    CHECK(j["ranking"].size() == 4);
    CHECK(j["samples"] == 8192);
    CHECK(slurp(dir / "G1.compare.csv").rfind("method,rank,", 0) == 0);
}

TEST_CASE("usage errors exit with status 2") {
    CHECK(run_cli({}).status == 2);
    CHECK(run_cli({"frobnicate"}).status == 2);
    CHECK(run_cli({"simulate", "--no-such-flag"}).status == 2);
    CHECK(run_cli({"simulate", "--count", "many"}).status == 2);
    CHECK(run_cli({"detrend", "--input", "x.csv", "--method", "wavelet"}).status == 2);
    CHECK(run_cli({"fit"}).status == 2);
    auto dir = fixture::scratch_dir("cli_usage");
    spit(dir / "U.clean.csv", wq::data::write_grid_csv(fixture::periodic_series_set(600)));
    auto f = run_cli({"features", "--input", (dir / "U.clean.csv").string(), "--out", dir.string()});
    CHECK(f.status == 2);
    CHECK(f.err.find("--fft") != std::string::npos);
    CHECK(run_cli({"--help"}).status == 0);
}

TEST_CASE("data errors exit with status 1 and the library message") {
    auto dir = fixture::scratch_dir("cli_data");
    auto ts = fixture::multiplicative_fixture(2, 2048);
    const std::string text = wq::data::write_grid_csv({{"DOO-MGL", ts}});
    spit(dir / "E.clean.csv", text);

    auto series = wq::data::read_grid_csv(text).at("DOO-MGL");
    std::string expected;
    try {
        wq::decompose::emd_detrend(series, 99, wq::decompose::Mode::multiplicative);
    } catch (const wq::Error& e) {
        expected = e.what();
    }
    REQUIRE_FALSE(expected.empty());
    auto r = run_cli({"detrend", "--input", (dir / "E.clean.csv").string(), "--method", "emd", "--m", "99", "--out",
                     dir.string()});
    CHECK(r.status == 1);
    CHECK(r.err == "error: " + expected + "\n");

    CHECK(run_cli({"fit", "--input", (dir / "missing.csv").string()}).status == 1);
    auto reg = run_cli({"regress", "--input", (dir / "E.clean.csv").string(), "--target", "TEMP"});
    CHECK(reg.status == 1);
    CHECK(reg.err.find("DOO-MGL") != std::string::npos);
}

TEST_CASE("flags override the config file") {
    auto dir = fixture::scratch_dir("cli_config");
    spit(dir / "wq.toml", "seed = 5\n[simulate]\nn-dof = 5\ncount = 10\n");
    auto r = run_cli({"--config", (dir / "wq.toml").string(), "simulate", "--n-dof", "7", "--out", dir.string()});
    REQUIRE(r.status == 0);
    auto j = load(dir / "simulated.json");
    CHECK(j["n_dof"].get<double>() == 7.0);
    CHECK(j["count"] == 10);
    CHECK(j["seed"] == 5);

    auto sub = run_cli({"simulate", "--config", (dir / "wq.toml").string(), "--out", (dir / "b").string()});
    REQUIRE(sub.status == 0);
    CHECK(load(dir / "b" / "simulated.json")["n_dof"].get<double>() == 5.0);
}

TEST_CASE("seeded runs are reproducible") {
    auto dir = fixture::scratch_dir("cli_seed");
    auto run = [&](const char* seed, const char* sub) {
        REQUIRE(run_cli({"simulate", "--count", "500", "--seed", seed, "--out", (dir / sub).string()}).status == 0);
        return slurp(dir / sub / "simulated.csv");
    };
    auto a = run("3", "a"), b = run("3", "b"), c = run("4", "c");
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("report aggregates the study and refuses partial inputs") {
    auto dir = fixture::scratch_dir("cli_report");
    auto r = fixture::run_study(dir, 42);
    INFO(r.command, r.err);
    REQUIRE(r.status == 0);
    const auto out = dir / "out";
    auto rep = load(out / "report.json");
    CHECK(rep["header"]["seed"] == 42);
    CHECK(rep["header"]["sites"].size() == 3);
    CHECK(rep["fits"].size() == 12);
    CHECK(rep["spatial_regression"].size() == 4);
    CHECK(rep["forecast"].size() == 3);
    CHECK(load(out / "S1.clean_report.json")["report"]["indicators"]["DOO-MGL"]["removed"]["do_max"] == 1);

    fs::remove(out / "S2.forecast_metrics.json");
    fs::remove(out / "report.json");
    auto again = run_cli({"report", "--catalog", (dir / "inputs" / "sites.json").string(), "--out",
                         (out / "report.json").string()});
    CHECK(again.status == 1);
    CHECK(again.err.find("S2.forecast_metrics.json") != std::string::npos);
    CHECK_FALSE(fs::exists(out / "report.json"));
}
