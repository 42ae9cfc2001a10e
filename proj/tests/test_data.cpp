#include <doctest.h>

#include "fixtures.hpp"

#include "wq/data.hpp"
#include "wq/error.hpp"
#include "wq/time.hpp"

#include <algorithm>
#include <cmath>

using namespace wq;
using namespace wq::data;
using namespace std::chrono;

namespace {

RawRecord rec(const std::string& ts, std::map<std::string, double> v) { return {parse_instant(ts), std::move(v)}; }

CleanConfig no_spikes() {
    CleanConfig c;
    c.spike_k = 1e9;
    return c;
}

bool same_series(const SeriesSet& a, const SeriesSet& b) {
    if (a.size() != b.size()) return false;
    for (const auto& [name, s] : a) {
        auto it = b.find(name);
        if (it == b.end()) return false;
        const auto& t = it->second;
        if (s.start() != t.start() || s.step() != t.step() || s.values() != t.values()) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("timestamp parsing") {
    auto t = parse_instant("2022-08-01T12:30:00Z");
    CHECK(format_instant(t) == "2022-08-01T12:30:00Z");
    CHECK(parse_instant("2022-08-01 12:30") == t);
    CHECK(parse_instant("2022-08-01T13:30:00+01:00") == t);
    CHECK(parse_instant("2022-08-01T12:30:00.000Z") == t);
    CHECK(parse_instant("2022-08-01") == parse_instant("2022-08-01T00:00:00Z"));
    CHECK_THROWS_AS(parse_instant("2022-13-01T00:00:00Z"), DataError);
    CHECK_THROWS_AS(parse_instant("yesterday"), DataError);
    Instant out;
    CHECK_FALSE(try_parse_instant("2022-02-30", out));
    CHECK(format_date(parse_date("2020-02-29")) == "2020-02-29");
}

TEST_CASE("duration parsing") {
    CHECK(parse_duration("900") == seconds(900));
    CHECK(parse_duration("900s") == seconds(900));
    CHECK(parse_duration("15min") == minutes(15));
    CHECK(parse_duration("6h") == hours(6));
    CHECK(parse_duration("1d") == hours(24));
    CHECK_THROWS_AS(parse_duration("6 parsecs"), ParameterError);
    CHECK_THROWS_AS(parse_duration(""), ParameterError);
}

TEST_CASE("site CSV parsing") {
    SUBCASE("valid rows pass through") {
        auto r = parse_site_csv("timestamp,DOO-MGL,PH\n"
                                "2022-01-01T00:00:00Z,9.1,7.2\n"
                                "2022-01-01T00:15:00Z,9.2,7.3\n"
                                "2022-01-01T00:30:00Z,9.3,7.4\n");
        REQUIRE(r.records.size() == 3);
        CHECK(r.records[2].values.at("PH") == 7.4);
        CHECK(r.malformed_rows == 0);
    }
    SUBCASE("duplicate timestamps keep the last row") {
        auto r = parse_site_csv("timestamp,DOO-MGL\n"
                                "2022-01-01T00:15:00Z,8.0\n"
                                "2022-01-01T00:00:00Z,9.0\n"
                                "2022-01-01T00:15:00Z,8.5\n");
        REQUIRE(r.records.size() == 2);
        CHECK(r.duplicate_timestamps == 1);
        CHECK(r.records[0].timestamp < r.records[1].timestamp);
        CHECK(r.records[1].values.at("DOO-MGL") == 8.5);
    }
    SUBCASE("a bad cell drops only that field") {
        auto r = parse_site_csv("timestamp,DOO-MGL,PH\n"
                                "2022-01-01T00:00:00Z,n/a,7.2\n");
        REQUIRE(r.records.size() == 1);
        CHECK(r.records[0].values.count("DOO-MGL") == 0);
        CHECK(r.records[0].values.at("PH") == 7.2);
    }
    SUBCASE("malformed rows are counted") {
        auto r = parse_site_csv("timestamp,DOO-MGL\n"
                                "garbage,1\n"
                                "2022-01-01T00:00:00Z,\n"
                                "2022-01-01T00:15:00Z,9\n");
        CHECK(r.records.size() == 1);
        CHECK(r.malformed_rows == 2);
    }
    SUBCASE("semicolons, quotes and CRLF") {
        auto r = parse_site_csv("\xEF\xBB\xBFtimestamp;\"DOO-MGL\"\r\n2022-01-01T00:00:00Z;\"9.5\"\r\n");
        REQUIRE(r.records.size() == 1);
        CHECK(r.records[0].values.at("DOO-MGL") == 9.5);
    }
    SUBCASE("schema maps columns") {
        auto schema = parse_schema_json(R"({"timestamp": "Time", "columns": {"Oxygen": "DOO-MGL"}, "units": {"COND": "mS/cm"}})");
        CHECK(schema.units.at("COND") == "mS/cm");
        auto r = parse_site_csv("Time,Oxygen,Other\n2022-01-01T00:00:00Z,9.5,3\n", schema);
        REQUIRE(r.records.size() == 1);
        CHECK(r.records[0].values.size() == 1);
        CHECK(r.records[0].values.at("DOO-MGL") == 9.5);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(parse_site_csv("time,DOO-MGL\n2022-01-01,1\n"), SchemaError);
        CHECK_THROWS_AS(parse_site_csv("timestamp,DOO-MGL\nx,y\n"), EmptyInputError);
        CHECK_THROWS_AS(parse_site_csv(""), EmptyInputError);
        CHECK_THROWS_AS(parse_schema_json("{"), SchemaError);
    }
}

TEST_CASE("cleaning rules") {
    std::vector<RawRecord> rs{
        rec("2022-07-31T23:45:00Z", {{"DOO-MGL", 9.0}, {"PH", 7.5}}),
        rec("2022-08-01T00:00:00Z", {{"DOO-MGL", 9.0}, {"PH", 7.5}}),
        rec("2022-09-01T00:00:00Z", {{"DOO-MGL", 26.1}, {"PH", -0.2}}),
        rec("2022-09-01T00:15:00Z", {{"DOO-MGL", 9.2}, {"PH", 7.6}, {"TEMP", -1.5}}),
    };
    auto cfg = no_spikes();
    cfg.exclusion_windows.push_back(parse_time_window("2022-08-01..2022-08-31"));
    auto out = clean(rs, cfg);
    const auto& dr = out.report.indicators.at("DOO-MGL");
    CHECK(dr.removed.at(rule::kDoMax) == 1);
    CHECK(dr.removed.at(rule::kExclusion) == 1);
    CHECK(out.report.indicators.at("PH").removed.at(rule::kNonPositive) == 1);
    // TEMP is not in the non-positive list.
    CHECK(out.report.indicators.at("TEMP").surviving == 1);
    CHECK(dr.surviving == 2);
    const auto& dos = out.series.at("DOO-MGL");
    CHECK(dos.step() == minutes(15));
    CHECK(dos.start() == parse_instant("2022-07-31T23:45:00Z"));
    CHECK(dos.size() == out.report.grid_length);
    CHECK(*dos[0] == 9.0);
    CHECK_FALSE(dos[1].has_value());
    CHECK(*dos.values().back() == 9.2);
}

TEST_CASE("exclusion windows are half-open and date ends cover the day") {
    auto w = parse_time_window("2022-08-01..2022-08-31");
    CHECK(w.contains(parse_instant("2022-08-01T00:00:00Z")));
    CHECK(w.contains(parse_instant("2022-08-31T23:45:00Z")));
    CHECK_FALSE(w.contains(parse_instant("2022-09-01T00:00:00Z")));
    auto v = parse_time_window("2022-08-01T06:00:00Z/2022-08-01T07:00:00Z");
    CHECK_FALSE(v.contains(parse_instant("2022-08-01T07:00:00Z")));
    CHECK_THROWS_AS(parse_time_window("2022-08-02/2022-08-01T00:00:00Z"), ParameterError);
    CHECK_THROWS_AS(parse_time_window("2022-08-02"), ParameterError);
}

TEST_CASE("EC unit conversion") {
    auto raw = parse_site_csv(fixture::site_csv({200, 1, true})).records;
    auto out = clean(raw, no_spikes());
    const auto& ec = out.series.at("COND");
    const auto& rep = out.report.indicators.at("COND");
    CHECK(rep.converted == 200);
    CHECK(rep.unit == "uS/cm");
    std::vector<double> v = ec.to_dense();
    std::nth_element(v.begin(), v.begin() + 100, v.end());
    CHECK(v[100] == doctest::Approx(650.0).epsilon(0.1));

    std::vector<RawRecord> one{rec("2022-01-01T00:00:00Z", {{"COND", 0.62}})};
    CHECK(*clean(one, no_spikes()).series.at("COND")[0] == doctest::Approx(620.0));

    auto cfg = no_spikes();
    cfg.ec_unit_autodetect = false;
    CHECK(*clean(one, cfg).series.at("COND")[0] == doctest::Approx(0.62));
    cfg.declared_units["COND"] = "mS/cm";
    CHECK(*clean(one, cfg).series.at("COND")[0] == doctest::Approx(620.0));

    auto us = clean(parse_site_csv(fixture::site_csv({200, 1, false})).records, no_spikes());
    CHECK(us.report.indicators.at("COND").converted == 0);
}

TEST_CASE("spike filter") {
    std::vector<double> v(300);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 8.0 + 0.1 * std::sin(static_cast<double>(i) / 5.0);
    v[150] = 14.0;
    v[151] = 2.0;
    auto flagged = detect_spikes(v, 97, 6.0);
    CHECK(flagged == std::vector<std::size_t>{150, 151});
    std::vector<double> flat(100, 3.0);
    flat[50] = 10.0;
    // MAD of zero disables the filter.
    CHECK(detect_spikes(flat, 97, 6.0).empty());
}

TEST_CASE("cleaning invariants") {
    auto raw = parse_site_csv(fixture::site_csv({96 * 5, 9, false})).records;
    raw[10].values["DOO-MGL"] = 31.0;
    raw[20].values["PH"] = 0.0;
    raw[30].values["TURBIDITY"] = -4.0;
    raw[40].values["DOO-MGL"] = 0.5;
    raw.erase(raw.begin() + 60, raw.begin() + 70);
    CleanConfig cfg;
    cfg.exclusion_windows.push_back(parse_time_window("2021-03-02T00:00:00Z/2021-03-02T03:00:00Z"));
    auto once = clean(raw, cfg);

    for (const auto& [name, ir] : once.report.indicators) {
        CAPTURE(name);
        CHECK(ir.removed_total() + ir.surviving == ir.raw);
        CHECK(ir.removed_total() <= ir.raw);
    }
    for (const auto& [name, s] : once.series) {
        for (const auto& v : s.values()) {
            if (!v) continue;
            if (name == "DOO-MGL") CHECK(*v <= cfg.do_max);
            if (std::find(cfg.drop_nonpositive.begin(), cfg.drop_nonpositive.end(), name) != cfg.drop_nonpositive.end())
                CHECK(*v > 0);
        }
    }
    CHECK(once.report.indicators.at("DOO-MGL").removed.at(rule::kSpike) >= 1);

    auto twice = clean(to_records(once.series), cfg);
    CHECK(same_series(once.series, twice.series));
    for (const auto& [name, ir] : twice.report.indicators) CHECK(ir.removed_total() == 0);
}

TEST_CASE("an indicator with every value removed is flagged, not fatal") {
    std::vector<RawRecord> rs{rec("2022-01-01T00:00:00Z", {{"DOO-MGL", 30.0}, {"TEMP", 10.0}}),
                              rec("2022-01-01T00:15:00Z", {{"DOO-MGL", 40.0}, {"TEMP", 11.0}})};
    auto out = clean(rs, no_spikes());
    CHECK(out.report.indicators.at("DOO-MGL").empty);
    CHECK(out.series.at("DOO-MGL").present_count() == 0);
    CHECK_FALSE(out.report.indicators.at("TEMP").empty);
    CHECK_THROWS_AS(clean({}, no_spikes()), EmptyInputError);
}

TEST_CASE("clean configuration validation") {
    CleanConfig c;
    c.do_max = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.spike_window = 96;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.spike_k = -1;
    CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("gap inventory and regridding of off-grid stamps") {
    std::vector<RawRecord> rs{rec("2022-01-01T00:00:00Z", {{"TEMP", 1}}), rec("2022-01-01T00:16:10Z", {{"TEMP", 2}}),
                              rec("2022-01-01T00:14:00Z", {{"TEMP", 3}}), rec("2022-01-01T01:15:00Z", {{"TEMP", 4}})};
    auto out = clean(rs, no_spikes());
    const auto& ir = out.report.indicators.at("TEMP");
    CHECK(ir.removed.at(rule::kRegridCollision) == 1);
    REQUIRE(ir.gaps.size() == 1);
    CHECK(ir.gaps[0].start == parse_instant("2022-01-01T00:30:00Z"));
    CHECK(ir.gaps[0].length == 3);
    auto json = clean_report_json(out.report);
    CHECK(json.find("regrid_collision") != std::string::npos);
}

TEST_CASE("rainfall attachment") {
    auto table = parse_rainfall_csv("date,rainfall_mm\n2022-03-01,4.2\n2022-03-03,0.0\n2022-03-04,7.5\n2022-03-05,\n");
    CHECK(table.size() == 3);
    SeriesSet set;
    std::vector<double> v(96 * 5, 1.0);
    set["TEMP"] = TimeSeries::dense("TEMP", parse_instant("2022-03-01T00:00:00Z"), kQuarterHour, v);
    attach_rainfall(set, table);
    const auto& r = set.at("RAINFALL");
    REQUIRE(r.size() == v.size());
    for (std::size_t i = 0; i < 96; ++i) CHECK(*r[i] == 4.2);
    for (std::size_t i = 96; i < 192; ++i) CHECK_FALSE(r[i].has_value());
    CHECK(*r[3 * 96 - 1] == 0.0);
    CHECK(*r[3 * 96] == 7.5);
    CHECK(r.time_at(3 * 96) == parse_instant("2022-03-04T00:00:00Z"));
    for (std::size_t i = 4 * 96; i < 5 * 96; ++i) CHECK_FALSE(r[i].has_value());
    CHECK_THROWS_AS(parse_rainfall_csv("day,mm\n"), SchemaError);
}

TEST_CASE("contiguous segmentation") {
    auto make = [](std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> gaps) {
        std::vector<std::optional<double>> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
        for (auto [at, len] : gaps)
            for (std::size_t k = 0; k < len; ++k) v[at + k].reset();
        return TimeSeries("DOO-MGL", parse_instant("2022-01-01T00:00:00Z"), kQuarterHour, v);
    };
    auto short_gap = segment_contiguous(make(100, {{40, 2}}), 4);
    REQUIRE(short_gap.segments.size() == 1);
    CHECK(short_gap.interpolated == 2);
    CHECK(*short_gap.segments[0][40] == doctest::Approx(40.0));
    CHECK(*short_gap.segments[0][41] == doctest::Approx(41.0));

    auto long_gap = segment_contiguous(make(1000, {{200, 500}}), 4);
    REQUIRE(long_gap.segments.size() == 2);
    CHECK(long_gap.segments[1].start() == parse_instant("2022-01-01T00:00:00Z") + kQuarterHour * 700);
    CHECK(long_gap.dropped == 500);

    // Gaps of 1, 5, 2, 6, 4 samples with max_gap 4: splits at the 5 and 6.
    auto scripted = make(300, {{20, 1}, {50, 5}, {90, 2}, {140, 6}, {200, 4}, {0, 3}, {296, 4}});
    auto seg = segment_contiguous(scripted, 4);
    REQUIRE(seg.segments.size() == 3);
    CHECK(seg.segments[0].start() == scripted.time_at(3));
    CHECK(seg.segments[0].end() == scripted.time_at(50));
    CHECK(seg.segments[1].start() == scripted.time_at(55));
    CHECK(seg.segments[1].end() == scripted.time_at(140));
    CHECK(seg.segments[2].start() == scripted.time_at(146));
    CHECK(seg.segments[2].end() == scripted.time_at(296));
    std::size_t total = 0;
    for (const auto& s : seg.segments) {
        CHECK(s.contiguous());
        total += s.size();
    }
    CHECK(total == seg.observed + seg.interpolated);
    CHECK(seg.observed + seg.interpolated + seg.dropped == scripted.size());
    CHECK(seg.interpolated == 1 + 2 + 4);

    auto filled = interpolate_short_gaps(scripted, 4);
    CHECK(filled.missing_count() == 3 + 5 + 6 + 4);
}

TEST_CASE("site catalog") {
    auto sites = parse_site_catalog(R"([
        {"site_code": "TBGP", "name": "Bablock Hythe", "lat": 51.7, "lon": -1.4, "dist_to_sea_km": 160.5, "rainfall_station": "R1"},
        {"site_code": "TEB", "name": "Teddington", "lat": 51.4, "lon": -0.3, "dist_to_sea_km": 80, "rainfall_station": "R2"}])");
    REQUIRE(sites.size() == 2);
    CHECK(sites[0].dist_to_sea_km == 160.5);
    CHECK(sites[1].rainfall_station == "R2");
    CHECK_THROWS_AS(parse_site_catalog(R"([{"site_code": "A", "name": "", "lat": 0, "lon": 0, "dist_to_sea_km": -1, "rainfall_station": ""}])"),
                    SchemaError);
    CHECK_THROWS_AS(parse_site_catalog(R"([{"site_code": "A", "name": "", "lat": 0, "lon": 0, "dist_to_sea_km": 1, "rainfall_station": ""},
                                          {"site_code": "A", "name": "", "lat": 0, "lon": 0, "dist_to_sea_km": 2, "rainfall_station": ""}])"),
                    SchemaError);
    CHECK_THROWS_AS(parse_site_catalog("{}"), SchemaError);
}

TEST_CASE("grid CSV round trip") {
    auto out = clean(parse_site_csv(fixture::site_csv({96, 2, false})).records, no_spikes());
    auto& dox = out.series.at("DOO-MGL");
    dox.set(5, std::nullopt);
    auto csv = write_grid_csv(out.series);
    auto back = read_grid_csv(csv);
    CHECK(same_series(out.series, back));
    CHECK(write_grid_csv(back) == csv);
}
