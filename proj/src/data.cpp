#include "wq/data.hpp"

#include "csv.hpp"
#include "wq/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace wq::data {

using nlohmann::json;

const std::vector<std::string>& standard_indicators() {
    static const std::vector<std::string> names = {indicator::kDO,        indicator::kTemp,
                                                   indicator::kCond,      indicator::kPH,
                                                   indicator::kAmmonium, indicator::kTurbidity};
    return names;
}

std::string default_unit(const std::string& name) {
    if (name == indicator::kDO || name == indicator::kAmmonium) return "mg/L";
    if (name == indicator::kTemp) return "degC";
    if (name == indicator::kCond) return "uS/cm";
    if (name == indicator::kPH) return "pH";
    if (name == indicator::kTurbidity) return "NTU";
    if (name == indicator::kRainfall) return "mm";
    return "";
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_millisiemens(std::string_view unit) {
    auto u = lower(unit);
    return u == "ms/cm" || u == "millisiemens/cm";
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

double median_of(std::vector<double> v) {
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (v.size() % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

struct Sample {
    Instant t;
    double v;
};

using SampleMap = std::map<std::string, std::vector<Sample>>;

Instant floor_to_step(Instant t, std::chrono::seconds step) {
    auto c = t.time_since_epoch().count();
    auto s = step.count();
    auto q = c / s;
    if (c % s != 0 && c < 0) --q;
    return Instant{std::chrono::seconds{q * s}};
}

/// Places samples on a regular grid; returns per-indicator collision counts.
std::map<std::string, std::size_t> regrid(const SampleMap& samples, Instant grid_start, std::size_t grid_length,
                                          std::chrono::seconds step, SeriesSet& out) {
    std::map<std::string, std::size_t> collisions;
    for (const auto& [name, list] : samples) {
        std::vector<std::optional<double>> values(grid_length);
        std::size_t clash = 0;
        for (const auto& s : list) {
            double offset = static_cast<double>((s.t - grid_start).count()) / static_cast<double>(step.count());
            auto idx = static_cast<std::size_t>(std::llround(offset));
            if (idx >= grid_length) continue;
            if (values[idx]) ++clash;
            values[idx] = s.v;  // later samples win
        }
        collisions[name] = clash;
        out.insert_or_assign(name, TimeSeries(name, grid_start, step, std::move(values), default_unit(name)));
    }
    return collisions;
}

std::vector<GapRun> gap_inventory(const TimeSeries& s) {
    std::vector<GapRun> gaps;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && !s[j]) ++j;
        gaps.push_back({s.time_at(i), j - i});
        i = j;
    }
    return gaps;
}

}  // namespace

Schema parse_schema_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("schema file is not valid JSON: ") + e.what());
    }
    Schema s;
    if (j.contains("timestamp")) s.timestamp_column = j.at("timestamp").get<std::string>();
    if (j.contains("columns")) s.columns = j.at("columns").get<std::map<std::string, std::string>>();
    if (j.contains("units")) s.units = j.at("units").get<std::map<std::string, std::string>>();
    return s;
}

ParseResult parse_site_csv(std::string_view text, const Schema& schema) {
    detail::LineReader reader(text);
    std::string_view line;
    bool have_header = false;
    while (reader.next(line)) {
        if (!detail::trim(line).empty()) {
            have_header = true;
            break;
        }
    }
    if (!have_header) throw EmptyInputError("input has no header row");
    const char delim = detail::detect_delimiter(line);
    auto header = detail::split_row(line, delim);

    std::optional<std::size_t> ts_col;
    std::vector<std::pair<std::size_t, std::string>> ind_cols;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name(detail::trim(header[i]));
        if (name == schema.timestamp_column) {
            ts_col = i;
            continue;
        }
        if (!schema.columns.empty()) {
            if (auto it = schema.columns.find(name); it != schema.columns.end()) ind_cols.emplace_back(i, it->second);
        } else if (schema.all_columns || contains(standard_indicators(), name)) {
            ind_cols.emplace_back(i, name);
        }
    }
    if (!ts_col) throw SchemaError("missing timestamp column '" + schema.timestamp_column + "'");

    ParseResult result;
    std::map<Instant, RawRecord> by_time;
    std::size_t rows = 0;
    while (reader.next(line)) {
        if (detail::trim(line).empty()) continue;
        ++rows;
        auto cells = detail::split_row(line, delim);
        Instant t;
        if (*ts_col >= cells.size() || !try_parse_instant(cells[*ts_col], t)) {
            ++result.malformed_rows;
            continue;
        }
        RawRecord rec{t, {}};
        for (const auto& [col, name] : ind_cols) {
            if (col >= cells.size()) continue;
            if (auto v = detail::parse_double(cells[col])) rec.values[name] = *v;
        }
        if (rec.values.empty()) {
            ++result.malformed_rows;
            continue;
        }
        auto [it, inserted] = by_time.insert_or_assign(t, std::move(rec));
        if (!inserted) ++result.duplicate_timestamps;
    }
    if (by_time.empty()) throw EmptyInputError("no parseable rows in input (" + std::to_string(rows) + " data rows)");
    result.records.reserve(by_time.size());
    for (auto& [t, rec] : by_time) result.records.push_back(std::move(rec));
    return result;
}

TimeWindow parse_time_window(std::string_view text) {
    std::size_t sep = text.find("..");
    std::size_t skip = 2;
    if (sep == std::string_view::npos) {
        sep = text.find('/');
        skip = 1;
    }
    if (sep == std::string_view::npos) throw ParameterError("time window must be START/END: '" + std::string(text) + "'");
    auto a = detail::trim(text.substr(0, sep));
    auto b = detail::trim(text.substr(sep + skip));
    TimeWindow w{parse_instant(a), parse_instant(b)};
    Date d;
    if (try_parse_date(b, d)) w.end = Instant{d + std::chrono::days{1}};
    if (w.end <= w.start) throw ParameterError("time window end precedes start: '" + std::string(text) + "'");
    return w;
}

void CleanConfig::validate() const {
    if (!(do_max > 0)) throw ParameterError("do_max must be positive");
    if (spike_window == 0 || spike_window % 2 == 0) throw ParameterError("spike_window must be odd");
    if (!(spike_k > 0)) throw ParameterError("spike_k must be positive");
    if (step.count() <= 0) throw ParameterError("grid step must be positive");
}

std::size_t IndicatorReport::removed_total() const {
    std::size_t n = 0;
    for (const auto& [rule, c] : removed) n += c;
    return n;
}

std::vector<std::size_t> detect_spikes(const std::vector<double>& values, std::size_t window, double k) {
    std::vector<std::size_t> flagged;
    const std::size_t n = values.size();
    const std::size_t half = window / 2;
    std::vector<double> buf;
    buf.reserve(window);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = i >= half ? i - half : 0;
        std::size_t hi = std::min(n, i + half + 1);
        if (hi - lo < 3) continue;
        buf.assign(values.begin() + static_cast<std::ptrdiff_t>(lo), values.begin() + static_cast<std::ptrdiff_t>(hi));
        double med = median_of(buf);
        for (auto& b : buf) b = std::abs(b - med);
        double mad = median_of(buf);
        if (mad > 0 && std::abs(values[i] - med) > k * mad) flagged.push_back(i);
    }
    return flagged;
}

CleanResult clean(const std::vector<RawRecord>& records, const CleanConfig& config) {
    config.validate();
    CleanResult result;
    auto& report = result.report;

    SampleMap samples;
    std::optional<Instant> first, last;
    for (const auto& rec : records) {
        if (rec.values.empty()) continue;
        if (!first || rec.timestamp < *first) first = rec.timestamp;
        if (!last || rec.timestamp > *last) last = rec.timestamp;
        for (const auto& [name, v] : rec.values) {
            auto& ir = report.indicators[name];
            ++ir.raw;
            if (!std::isfinite(v)) {
                ++ir.removed["non-finite"];
                continue;
            }
            samples[name].push_back({rec.timestamp, v});
        }
    }
    if (!first) throw EmptyInputError("no records to clean");
    for (auto& [name, list] : samples)
        std::stable_sort(list.begin(), list.end(), [](const Sample& a, const Sample& b) { return a.t < b.t; });

    auto remove_if = [&](const std::string& name, const char* rule, auto pred) {
        auto& list = samples[name];
        auto before = list.size();
        list.erase(std::remove_if(list.begin(), list.end(), pred), list.end());
        if (before != list.size()) report.indicators[name].removed[rule] += before - list.size();
    };

    for (auto& [name, list] : samples) {
        if (!config.exclusion_windows.empty()) {
            remove_if(name, rule::kExclusion, [&](const Sample& s) {
                return std::any_of(config.exclusion_windows.begin(), config.exclusion_windows.end(),
                                   [&](const TimeWindow& w) { return w.contains(s.t); });
            });
        }
        if (name == indicator::kDO) remove_if(name, rule::kDoMax, [&](const Sample& s) { return s.v > config.do_max; });
        if (contains(config.drop_nonpositive, name))
            remove_if(name, rule::kNonPositive, [](const Sample& s) { return s.v <= 0; });
    }

    if (auto it = samples.find(indicator::kCond); it != samples.end() && !it->second.empty()) {
        auto& list = it->second;
        bool convert = false;
        if (auto du = config.declared_units.find(indicator::kCond);
            du != config.declared_units.end() && is_millisiemens(du->second)) {
            convert = true;
        } else if (config.ec_unit_autodetect) {
            std::vector<double> pos;
            for (const auto& s : list)
                if (s.v > 0) pos.push_back(s.v);
            convert = !pos.empty() && median_of(pos) < 100.0;
        }
        if (convert) {
            for (auto& s : list) s.v *= 1000.0;
            report.indicators[indicator::kCond].converted = list.size();
        }
    }

    for (auto& [name, list] : samples) {
        if (!config.spike_indicators.empty() && !contains(config.spike_indicators, name)) continue;
        // Iterate to a fixed point so that cleaning is idempotent.
        for (int pass = 0; pass < 100; ++pass) {
            std::vector<double> v;
            v.reserve(list.size());
            for (const auto& s : list) v.push_back(s.v);
            auto flagged = detect_spikes(v, config.spike_window, config.spike_k);
            if (flagged.empty()) break;
            std::vector<bool> drop(list.size(), false);
            for (auto i : flagged) drop[i] = true;
            std::size_t w = 0;
            for (std::size_t i = 0; i < list.size(); ++i)
                if (!drop[i]) list[w++] = list[i];
            list.resize(w);
            report.indicators[name].removed[rule::kSpike] += flagged.size();
        }
    }

    report.grid_start = floor_to_step(*first, config.step);
    report.grid_length =
        static_cast<std::size_t>(std::llround(static_cast<double>((*last - report.grid_start).count()) /
                                              static_cast<double>(config.step.count()))) + 1;
    auto collisions = regrid(samples, report.grid_start, report.grid_length, config.step, result.series);
    for (auto& [name, ir] : report.indicators) {
        if (collisions[name] > 0) ir.removed[rule::kRegridCollision] += collisions[name];
        auto it = result.series.find(name);
        if (it == result.series.end()) {
            // Every sample was non-finite: keep an all-missing series.
            result.series.emplace(name, TimeSeries(name, report.grid_start, config.step,
                                                   std::vector<std::optional<double>>(report.grid_length),
                                                   default_unit(name)));
            it = result.series.find(name);
        }
        ir.surviving = it->second.present_count();
        ir.empty = ir.surviving == 0;
        ir.unit = it->second.unit();
        ir.gaps = gap_inventory(it->second);
    }
    return result;
}

std::vector<RawRecord> to_records(const SeriesSet& set) {
    std::map<Instant, RawRecord> rows;
    for (const auto& [name, s] : set) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s[i]) continue;
            auto t = s.time_at(i);
            auto& rec = rows[t];
            rec.timestamp = t;
            rec.values[name] = *s[i];
        }
    }
    std::vector<RawRecord> out;
    out.reserve(rows.size());
    for (auto& [t, rec] : rows) out.push_back(std::move(rec));
    return out;
}

RainfallTable parse_rainfall_csv(std::string_view text) {
    detail::LineReader reader(text);
    std::string_view line;
    if (!reader.next(line)) throw EmptyInputError("rainfall input is empty");
    const char delim = detail::detect_delimiter(line);
    auto header = detail::split_row(line, delim);
    std::optional<std::size_t> date_col, mm_col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        auto h = detail::trim(header[i]);
        if (h == "date") date_col = i;
        if (h == "rainfall_mm") mm_col = i;
    }
    if (!date_col || !mm_col) throw SchemaError("rainfall CSV needs 'date' and 'rainfall_mm' columns");
    RainfallTable out;
    while (reader.next(line)) {
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_row(line, delim);
        if (cells.size() <= std::max(*date_col, *mm_col)) continue;
        Date d;
        auto v = detail::parse_double(cells[*mm_col]);
        if (!try_parse_date(cells[*date_col], d) || !v) continue;
        out[d] = *v;
    }
    return out;
}

void attach_rainfall(SeriesSet& set, const RainfallTable& rainfall) {
    const TimeSeries* grid = nullptr;
    for (const auto& [name, s] : set) {
        if (name != indicator::kRainfall) {
            grid = &s;
            break;
        }
    }
    if (!grid) return;
    std::vector<std::optional<double>> values(grid->size());
    for (std::size_t i = 0; i < grid->size(); ++i) {
        auto day = std::chrono::floor<std::chrono::days>(grid->time_at(i));
        if (auto it = rainfall.find(day); it != rainfall.end()) values[i] = it->second;
    }
    set.insert_or_assign(indicator::kRainfall, TimeSeries(indicator::kRainfall, grid->start(), grid->step(),
                                                          std::move(values), default_unit(indicator::kRainfall)));
}

TimeSeries interpolate_short_gaps(const TimeSeries& series, std::size_t max_gap) {
    TimeSeries out = series;
    const std::size_t n = series.size();
    std::size_t i = 0;
    while (i < n && !series[i]) ++i;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && !series[j]) ++j;
        if (j >= n) break;
        std::size_t gap = j - i - 1;
        if (gap > 0 && gap <= max_gap) {
            double a = *series[i], b = *series[j];
            for (std::size_t g = 1; g <= gap; ++g) {
                double frac = static_cast<double>(g) / static_cast<double>(gap + 1);
                out.set(i + g, a + (b - a) * frac);
            }
        }
        i = j;
    }
    return out;
}

SegmentResult segment_contiguous(const TimeSeries& series, std::size_t max_gap) {
    SegmentResult result;
    auto filled = interpolate_short_gaps(series, max_gap);
    const std::size_t n = series.size();
    std::size_t i = 0;
    while (i < n) {
        if (!filled[i]) {
            ++result.dropped;
            ++i;
            continue;
        }
        std::size_t j = i;
        std::vector<double> vals;
        while (j < n && filled[j]) {
            vals.push_back(*filled[j]);
            if (series[j]) ++result.observed;
            else ++result.interpolated;
            ++j;
        }
        result.segments.push_back(
            TimeSeries::dense(series.indicator(), series.time_at(i), series.step(), vals, series.unit()));
        i = j;
    }
    return result;
}

std::vector<SiteMeta> parse_site_catalog(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("site catalog is not valid JSON: ") + e.what());
    }
    if (!j.is_array()) throw SchemaError("site catalog must be a JSON array");
    std::vector<SiteMeta> out;
    std::set<std::string> codes;
    for (const auto& e : j) {
        SiteMeta m;
        try {
            m.site_code = e.at("site_code").get<std::string>();
            m.name = e.value("name", m.site_code);
            m.latitude = e.value("lat", 0.0);
            m.longitude = e.value("lon", 0.0);
            m.dist_to_sea_km = e.at("dist_to_sea_km").get<double>();
            m.rainfall_station = e.value("rainfall_station", std::string{});
        } catch (const json::exception& ex) {
            throw SchemaError(std::string("bad site catalog entry: ") + ex.what());
        }
        if (m.dist_to_sea_km < 0) throw SchemaError("dist_to_sea_km must be >= 0 for site " + m.site_code);
        if (!codes.insert(m.site_code).second) throw SchemaError("duplicate site_code " + m.site_code);
        out.push_back(std::move(m));
    }
    return out;
}

std::string write_grid_csv(const SeriesSet& set) {
    if (set.empty()) return "timestamp\n";
    const auto& ref = set.begin()->second;
    std::string out = "timestamp";
    for (const auto& [name, s] : set) {
        if (s.size() != ref.size() || s.start() != ref.start() || s.step() != ref.step())
            throw ShapeError("series '" + name + "' is not on the shared grid");
        out += ',';
        out += name;
    }
    out += '\n';
    for (std::size_t i = 0; i < ref.size(); ++i) {
        out += format_instant(ref.time_at(i));
        for (const auto& [name, s] : set) {
            out += ',';
            if (s[i]) out += detail::format_double(*s[i]);
        }
        out += '\n';
    }
    return out;
}

SeriesSet read_grid_csv(std::string_view text, std::chrono::seconds step) {
    Schema schema;
    schema.all_columns = true;
    auto parsed = parse_site_csv(text, schema);
    SampleMap samples;
    for (const auto& rec : parsed.records)
        for (const auto& [name, v] : rec.values) samples[name].push_back({rec.timestamp, v});
    // Columns that never carry a value still get an (all-missing) series.
    {
        detail::LineReader reader(text);
        std::string_view line;
        reader.next(line);
        for (const auto& h : detail::split_row(line, detail::detect_delimiter(line))) {
            std::string name(detail::trim(h));
            if (name != schema.timestamp_column) samples[name];
        }
    }
    auto start = floor_to_step(parsed.records.front().timestamp, step);
    auto len = static_cast<std::size_t>(std::llround(
                   static_cast<double>((parsed.records.back().timestamp - start).count()) /
                   static_cast<double>(step.count()))) + 1;
    SeriesSet out;
    regrid(samples, start, len, step, out);
    return out;
}

std::string clean_report_json(const CleanReport& report, int indent) {
    json j;
    j["grid_start"] = format_instant(report.grid_start);
    j["grid_length"] = report.grid_length;
    json inds = json::object();
    for (const auto& [name, ir] : report.indicators) {
        json g = json::array();
        for (const auto& gap : ir.gaps) g.push_back({{"start", format_instant(gap.start)}, {"length", gap.length}});
        inds[name] = {{"raw", ir.raw},           {"removed", ir.removed}, {"converted", ir.converted},
                      {"surviving", ir.surviving}, {"empty", ir.empty},     {"unit", ir.unit},
                      {"gaps", g}};
    }
    j["indicators"] = inds;
    return j.dump(indent);
}

}  // namespace wq::data
