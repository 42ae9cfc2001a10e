#pragma once

// Ingestion and cleaning of multi-indicator sonde exports.

#include "wq/time.hpp"
#include "wq/timeseries.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wq::data {

namespace indicator {
inline constexpr const char* kDO = "DOO-MGL";
inline constexpr const char* kTemp = "TEMP";
inline constexpr const char* kCond = "COND";
inline constexpr const char* kPH = "PH";
inline constexpr const char* kAmmonium = "AMMONIUM";
inline constexpr const char* kTurbidity = "TURBIDITY";
inline constexpr const char* kRainfall = "RAINFALL";
}  // namespace indicator

/// The six sonde indicators in covariate order.
const std::vector<std::string>& standard_indicators();

/// Physical unit reported for a cleaned indicator ("mg/L", "uS/cm", ...).
std::string default_unit(const std::string& indicator);

/// All indicators of one site on a shared regular grid, keyed by name.
using SeriesSet = std::map<std::string, TimeSeries>;

struct RawRecord {
    Instant timestamp;
    std::map<std::string, double> values;
};

struct SiteMeta {
    std::string site_code;
    std::string name;
    double latitude = 0;
    double longitude = 0;
    double dist_to_sea_km = 0;
    std::string rainfall_station;
};

/// Column mapping for a site CSV. Maps CSV header names to indicator names;
/// an empty `columns` map means the header already uses indicator names.
struct Schema {
    std::string timestamp_column = "timestamp";
    std::map<std::string, std::string> columns;
    /// Declared units per indicator, e.g. {"COND": "mS/cm"}.
    std::map<std::string, std::string> units;
    /// Accept any non-timestamp column as an indicator (used when re-reading
    /// our own grid exports).
    bool all_columns = false;
};

/// Reads {"timestamp": "...", "columns": {...}, "units": {...}}.
Schema parse_schema_json(std::string_view text);

struct ParseResult {
    std::vector<RawRecord> records;
    std::size_t malformed_rows = 0;
    std::size_t duplicate_timestamps = 0;
};

/// Parses a delimited (',', ';' or tab) text table with a header row. Records
/// come back sorted by timestamp; duplicated timestamps keep the last row.
/// Unparseable cells are dropped from the record; rows without a valid
/// timestamp or without any indicator value are counted as malformed.
ParseResult parse_site_csv(std::string_view text, const Schema& schema = {});

struct TimeWindow {
    Instant start;
    Instant end;  // exclusive
    bool contains(Instant t) const { return t >= start && t < end; }
};

/// "START/END" or "START..END". A date-only END covers that whole day.
TimeWindow parse_time_window(std::string_view text);

struct CleanConfig {
    double do_max = 25.0;
    std::vector<std::string> drop_nonpositive = {indicator::kCond, indicator::kPH, indicator::kAmmonium,
                                                 indicator::kTurbidity, indicator::kDO};
    std::vector<TimeWindow> exclusion_windows;
    std::size_t spike_window = 97;
    double spike_k = 6.0;
    /// Indicators the spike filter runs on; empty means all.
    std::vector<std::string> spike_indicators;
    bool ec_unit_autodetect = true;
    /// Declared unit per indicator; "mS/cm" on COND forces the x1000 conversion.
    std::map<std::string, std::string> declared_units;
    std::chrono::seconds step = kQuarterHour;

    void validate() const;
};

struct GapRun {
    Instant start;
    std::size_t length = 0;
};

struct IndicatorReport {
    std::size_t raw = 0;
    std::map<std::string, std::size_t> removed;  // rule -> count
    std::size_t converted = 0;
    std::size_t surviving = 0;
    bool empty = false;
    std::string unit;
    std::vector<GapRun> gaps;

    std::size_t removed_total() const;
};

struct CleanReport {
    Instant grid_start{};
    std::size_t grid_length = 0;
    std::map<std::string, IndicatorReport> indicators;
};

struct CleanResult {
    SeriesSet series;
    CleanReport report;
};

namespace rule {
inline constexpr const char* kExclusion = "exclusion";
inline constexpr const char* kDoMax = "do_max";
inline constexpr const char* kNonPositive = "non-positive";
inline constexpr const char* kSpike = "spike";
inline constexpr const char* kRegridCollision = "regrid_collision";
}  // namespace rule

/// Applies the cleaning rules in order: exclusion windows, DO ceiling,
/// non-positive removal, EC mS/cm -> uS/cm conversion, rolling median/MAD
/// spike filter (iterated to a fixed point), then regridding.
CleanResult clean(const std::vector<RawRecord>& records, const CleanConfig& config);

/// Inverse of regridding: one record per grid slot that has any value.
std::vector<RawRecord> to_records(const SeriesSet& set);

/// Rolling median filter used by clean(). Returns the indices (into
/// `values`) flagged as spikes in a single pass.
std::vector<std::size_t> detect_spikes(const std::vector<double>& values, std::size_t window, double k);

/// Daily totals keyed by calendar day (UTC).
using RainfallTable = std::map<Date, double>;

/// Columns `date`, `rainfall_mm`. Rows with empty/unparseable totals are
/// skipped.
RainfallTable parse_rainfall_csv(std::string_view text);

/// Adds a RAINFALL series on the grid of `set`; every sample carries the
/// daily total of its calendar day, missing when the day is absent.
void attach_rainfall(SeriesSet& set, const RainfallTable& rainfall);

struct SegmentResult {
    std::vector<TimeSeries> segments;
    std::size_t observed = 0;      // present samples inside segments
    std::size_t interpolated = 0;  // filled samples inside segments
    std::size_t dropped = 0;       // missing samples not covered by any segment
};

/// Linearly fills interior gaps of at most `max_gap` samples and splits the
/// series at longer gaps. Leading/trailing missing samples are dropped.
SegmentResult segment_contiguous(const TimeSeries& series, std::size_t max_gap);

/// Fills interior gaps of at most `max_gap` samples in place of a copy,
/// leaving longer gaps missing.
TimeSeries interpolate_short_gaps(const TimeSeries& series, std::size_t max_gap);

/// JSON array of {site_code, name, lat, lon, dist_to_sea_km, rainfall_station}.
std::vector<SiteMeta> parse_site_catalog(std::string_view json_text);

/// Grid CSV: `timestamp` then one column per indicator, empty cell = missing.
std::string write_grid_csv(const SeriesSet& set);
/// Reads a grid CSV (e.g. a clean export) without applying any cleaning.
SeriesSet read_grid_csv(std::string_view text, std::chrono::seconds step = kQuarterHour);

std::string clean_report_json(const CleanReport& report, int indent = 2);

}  // namespace wq::data
