#include "wq/cli.hpp"

#include "commands.hpp"
#include "wq/error.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace wq::cli {

namespace {

void add_segment_options(CLI::App* sub, SegmentOptions& seg) {
    sub->add_option("--indicator", seg.indicator, "Indicator column to analyse")->capture_default_str();
    sub->add_option("--max-gap", seg.max_gap, "Longest gap (samples) bridged by linear interpolation")
        ->capture_default_str();
    sub->add_option("--min-segment", seg.min_segment, "Shortest contiguous run (samples) that is analysed")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Water-quality fluctuation analysis: cleaning, detrending, q-Gaussian fits, forecasting baselines",
                 "wq"};
    app.set_config("--config", "", "TOML/INI file with one section per subcommand; flags take precedence");
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Seed of the run's random generator")->capture_default_str();
    app.require_subcommand(1, 1);
    app.fallthrough();

    CleanOptions clean;
    auto* c = app.add_subcommand("clean", "Clean a raw sonde export onto the 15-minute grid");
    c->add_option("--input", clean.input, "Raw site CSV")->required();
    c->add_option("--schema", clean.schema, "JSON column/unit mapping");
    c->add_option("--rainfall", clean.rainfall, "Daily rainfall CSV to attach as RAINFALL");
    c->add_option("--site", clean.site, "Site code (default: input file stem)");
    c->add_option("--out", clean.out, "Output directory")->capture_default_str();
    c->add_option("--do-max", clean.do_max, "DO ceiling in mg/L")->capture_default_str();
    c->add_option("--spike-window", clean.spike_window, "Rolling median window (samples, odd)")->capture_default_str();
    c->add_option("--spike-k", clean.spike_k, "Spike threshold in rolling MADs")->capture_default_str();
    c->add_option("--spike-indicators", clean.spike_indicators, "Indicators to despike (default: all)")
        ->delimiter(',');
    auto* drop = c->add_option("--drop-nonpositive", clean.drop_nonpositive, "Indicators whose values must be > 0")
                     ->delimiter(',');
    c->add_option("--exclude", clean.exclude, "Exclusion window START..END (repeatable)");
    c->add_option("--ec-autodetect", clean.ec_autodetect, "Convert COND from mS/cm when its median is < 100")
        ->capture_default_str();
    c->add_option("--declared-unit", clean.declared_units, "INDICATOR=UNIT, e.g. COND=mS/cm (repeatable)");

    DetrendOptions detrend;
    auto* d = app.add_subcommand("detrend", "Split a cleaned series into trend and fluctuations");
    d->add_option("--input", detrend.input, "Cleaned grid CSV")->required();
    d->add_option("--site", detrend.site, "Site code (default: input file stem)");
    d->add_option("--out", detrend.out, "Output directory")->capture_default_str();
    d->add_option("--method", detrend.method, "seasonal or emd")
        ->capture_default_str()
        ->check(CLI::IsMember({"seasonal", "emd"}));
    d->add_option("--mode", detrend.mode, "additive or multiplicative")
        ->capture_default_str()
        ->check(CLI::IsMember({"additive", "multiplicative"}));
    d->add_option("--f", detrend.f, "Moving-average window, e.g. 6h")->capture_default_str();
    d->add_option("--m", detrend.m, "Number of fast IMFs kept as fluctuations")->capture_default_str();
    add_segment_options(d, detrend.seg);

    FitOptions fit;
    auto* f = app.add_subcommand("fit", "Maximum-likelihood q-Gaussian fit of a sample column");
    f->add_option("--input", fit.input, "CSV with a 'centered' or 'value' column")->required();
    f->add_option("--column", fit.column, "Column to fit (default: centered, then value)");
    f->add_option("--out", fit.out, "Output directory")->capture_default_str();
    f->add_option("--bins", fit.bins, "Histogram bins for the density export")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    CompareOptions compare;
    auto* cm = app.add_subcommand("compare", "Rank detrending methods by per-sample log-likelihood");
    cm->add_option("--input", compare.input, "Cleaned grid CSV")->required();
    cm->add_option("--site", compare.site, "Site code (default: input file stem)");
    cm->add_option("--out", compare.out, "Output directory")->capture_default_str();
    cm->add_option("--methods", compare.methods, "all, or labels such as multiplicative_emd")
        ->delimiter(',')
        ->capture_default_str();
    cm->add_option("--f", compare.f, "Moving-average window, e.g. 6h")->capture_default_str();
    cm->add_option("--m", compare.m, "Number of fast IMFs kept as fluctuations")->capture_default_str();
    add_segment_options(cm, compare.seg);

    SimulateOptions sim;
    auto* s = app.add_subcommand("simulate", "Draw chi-squared superstatistical samples");
    s->add_option("--n-dof", sim.n_dof, "Degrees of freedom of the chi-squared law")->capture_default_str();
    s->add_option("--beta0", sim.beta0, "Mean inverse variance")->capture_default_str();
    s->add_option("--count", sim.count, "Number of samples")->capture_default_str();
    s->add_option("--block-len", sim.block_len, "Samples sharing one beta draw")->capture_default_str();
    s->add_option("--out", sim.out, "Output directory")->capture_default_str();

    FeaturesOptions feat;
    auto* fe = app.add_subcommand("features", "Spectral peaks and the covariate table");
    fe->add_option("--input", feat.input, "Cleaned grid CSV")->required();
    fe->add_option("--rainfall", feat.rainfall, "Daily rainfall CSV (if the grid has no RAINFALL column)");
    fe->add_option("--site", feat.site, "Site code (default: input file stem)");
    fe->add_option("--out", feat.out, "Output directory")->capture_default_str();
    fe->add_flag("--fft", feat.fft, "Export the magnitude spectrum and dominant periods");
    fe->add_flag("--table", feat.table, "Export the 14-covariate feature table");
    fe->add_option("--top-k", feat.top_k, "Number of spectral peaks")->capture_default_str();
    add_segment_options(fe, feat.seg);

    ForecastOptions fcst;
    auto* fo = app.add_subcommand("forecast", "Evaluate baseline forecasters on the input/horizon grid");
    fo->add_option("--input", fcst.input, "Cleaned grid CSV")->required();
    fo->add_option("--rainfall", fcst.rainfall, "Daily rainfall CSV (if the grid has no RAINFALL column)");
    fo->add_option("--site", fcst.site, "Site code (default: input file stem)");
    fo->add_option("--out", fcst.out, "Output directory")->capture_default_str();
    fo->add_option("--models", fcst.models, "Comma-separated: last, repeat, linear")->delimiter(',')->capture_default_str();
    fo->add_option("--inputs", fcst.inputs, "Input lengths")->delimiter(',')->capture_default_str();
    fo->add_option("--horizons", fcst.horizons, "Forecast horizons")->delimiter(',')->capture_default_str();
    fo->add_option("--reps", fcst.reps, "Repetitions for stochastic models")->capture_default_str();
    fo->add_option("--batch-size", fcst.batch_size, "Window batch size")->capture_default_str();
    fo->add_option("--dump", fcst.dump, "Grid cell <input>_<horizon> for the prediction dump (default: first)");

    RegressOptions reg;
    auto* r = app.add_subcommand("regress", "Same-time linear regression of DO on the other covariates");
    r->add_option("--input", reg.input, "Cleaned grid CSV")->required();
    r->add_option("--rainfall", reg.rainfall, "Daily rainfall CSV (if the grid has no RAINFALL column)");
    r->add_option("--site", reg.site, "Site code (default: input file stem)");
    r->add_option("--target", reg.target, "Target indicator")->capture_default_str();
    r->add_option("--out", reg.out, "Output directory")->capture_default_str();

    AttentionOptions att;
    auto* a = app.add_subcommand("attention", "ProbSparse attention on random inputs with heatmap export");
    a->add_option("--lq", att.lq, "Query length")->capture_default_str();
    a->add_option("--lk", att.lk, "Key length")->capture_default_str();
    a->add_option("--d", att.d, "Model dimension")->capture_default_str();
    a->add_option("--u", att.u, "Active queries (0: ceil(5 ln L_Q))")->capture_default_str();
    a->add_option("--out", att.out, "Output directory")->capture_default_str();

    ReportOptions rep;
    auto* rp = app.add_subcommand("report", "Aggregate per-site artifacts into one JSON bundle");
    rp->add_option("--out", rep.out, "Report file")->capture_default_str();
    rp->add_option("--catalog", rep.catalog, "Site catalog JSON")->required();
    rp->add_option("--artifacts", rep.artifacts, "Directory holding per-site artifacts (default: that of --out)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    clean.drop_nonpositive_set = drop->count() > 0;

    Context ctx(out, err, seed);
    try {
        if (c->parsed()) run_clean(clean, ctx);
        else if (d->parsed()) run_detrend(detrend, ctx);
        else if (f->parsed()) run_fit(fit, ctx);
        else if (cm->parsed()) run_compare(compare, ctx);
        else if (s->parsed()) run_simulate(sim, ctx);
        else if (fe->parsed()) run_features(feat, ctx);
        else if (fo->parsed()) run_forecast(fcst, ctx);
        else if (r->parsed()) run_regress(reg, ctx);
        else if (a->parsed()) run_attention(att, ctx);
        else if (rp->parsed()) run_report(rep, ctx);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace wq::cli
