#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace wq::cli {

namespace fs = std::filesystem;

/// Argument combinations CLI11 cannot express on its own. Exit status 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-invocation state. Every random draw of a run comes from `rng`.
struct Context {
    Context(std::ostream& o, std::ostream& e, std::uint64_t s) : out(o), err(e), seed(s), rng(s) {}

    std::ostream& out;
    std::ostream& err;
    std::uint64_t seed;
    std::mt19937_64 rng;

    std::uint64_t child_seed() { return rng(); }
};

struct SegmentOptions {
    std::string indicator = "DOO-MGL";
    std::size_t max_gap = 4;
    std::size_t min_segment = 384;
};

struct CleanOptions {
    std::string input;
    std::string schema;
    std::string rainfall;
    std::string site;
    fs::path out = ".";
    double do_max = 25.0;
    std::size_t spike_window = 97;
    double spike_k = 6.0;
    std::vector<std::string> spike_indicators;
    std::vector<std::string> drop_nonpositive;
    bool drop_nonpositive_set = false;
    std::vector<std::string> exclude;
    bool ec_autodetect = true;
    std::vector<std::string> declared_units;  // INDICATOR=UNIT
};

struct DetrendOptions {
    std::string input;
    std::string site;
    fs::path out = ".";
    std::string method = "emd";
    std::string mode = "multiplicative";
    std::string f = "6h";
    std::size_t m = 3;
    SegmentOptions seg;
};

struct FitOptions {
    std::string input;
    std::string column;
    fs::path out = ".";
    std::size_t bins = 100;
};

struct CompareOptions {
    std::string input;
    std::string site;
    fs::path out = ".";
    std::vector<std::string> methods{"all"};
    std::string f = "6h";
    std::size_t m = 3;
    SegmentOptions seg;
};

struct SimulateOptions {
    double n_dof = 3;
    double beta0 = 1;
    std::size_t count = 100000;
    std::size_t block_len = 1;
    fs::path out = ".";
};

struct FeaturesOptions {
    std::string input;
    std::string rainfall;
    std::string site;
    fs::path out = ".";
    bool fft = false;
    bool table = false;
    std::size_t top_k = 3;
    SegmentOptions seg;
};

struct ForecastOptions {
    std::string input;
    std::string rainfall;
    std::string site;
    fs::path out = ".";
    std::vector<std::string> models{"last", "repeat", "linear"};
    std::vector<std::size_t> inputs{48, 96, 192};
    std::vector<std::size_t> horizons{1, 12, 24, 48};
    std::size_t reps = 5;
    std::size_t batch_size = 32;
    std::string dump;  // "<input>_<horizon>", empty = first grid cell
};

struct RegressOptions {
    std::string input;
    std::string rainfall;
    std::string site;
    std::string target = "DOO-MGL";
    fs::path out = ".";
};

struct AttentionOptions {
    long lq = 96;
    long lk = 192;
    long d = 16;
    long u = 0;  // 0: ceil(5 ln L_Q) capped at L_Q
    fs::path out = ".";
};

struct ReportOptions {
    fs::path out = "report.json";
    std::string catalog;
    std::string artifacts;  // default: directory of `out`
};

void run_clean(const CleanOptions& o, Context& ctx);
void run_detrend(const DetrendOptions& o, Context& ctx);
void run_fit(const FitOptions& o, Context& ctx);
void run_compare(const CompareOptions& o, Context& ctx);
void run_simulate(const SimulateOptions& o, Context& ctx);
void run_features(const FeaturesOptions& o, Context& ctx);
void run_forecast(const ForecastOptions& o, Context& ctx);
void run_regress(const RegressOptions& o, Context& ctx);
void run_attention(const AttentionOptions& o, Context& ctx);
void run_report(const ReportOptions& o, Context& ctx);

}  // namespace wq::cli
