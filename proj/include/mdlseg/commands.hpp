#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdlseg/core.hpp"
#include "mdlseg/ga.hpp"
#include "mdlseg/mdl.hpp"
#include "mdlseg/simulate.hpp"
#include "mdlseg/station_io.hpp"

// Drivers behind the command-line subcommands.  Kept out of the binary so
// the ingest -> difference -> search -> report pipeline is testable without
// a process boundary.

namespace mdlseg {

// Manual single-value correction applied to the target before differencing.
struct Replacement {
    int t = 0;  // 1-based time index
    double value = 0.0;
};

struct SegmentOptions {
    std::string input;
    std::vector<std::string> refs;
    int period = 12;
    SearchConstraints constraints;
    std::uint64_t seed = 1;
    MdlVariant variant = MdlVariant::Standard;
    bool include_trend = true;
    int islands = 40;
    int population = 30;
    int max_migrations = 25;
    int threads = 0;
    std::vector<Replacement> replacements;
};

struct SegmentResult {
    StationSeries analyzed;        // after replacements and differencing
    FittedModel fit;
    MdlBreakdown breakdown;
    GaReport search;
    std::vector<double> shift_se;  // one per changepoint; NaN when degenerate
    double trend_se = 0.0;         // NaN when no trend column
    std::string report_text;       // human-readable summary
    std::string result_text;       // key=value lines plus CSV blocks
};

// Receives one formatted line (no trailing newline) per migration event.
using TraceSink = std::function<void(const std::string&)>;

// Searches a prepared series; start_year only labels the calendar output.
SegmentResult segment_series(const StationSeries& station, const SegmentOptions& opts,
                             const TraceSink& trace = {});

// Full pipeline: ingest the target, apply replacements, subtract the mean
// of the reference series, then search.
SegmentResult run_segment(const SegmentOptions& opts, const TraceSink& trace = {});

// Writes report.txt, result.txt, residuals.csv, acf.csv and periodogram.csv
// under `dir` (created when missing).
void write_segment_outputs(const std::string& dir, const SegmentResult& result);

// Study description as key=value lines (`#` starts a comment).  Unknown keys
// are rejected.
StudySpec parse_study_spec(const std::string& text);
StudySpec read_study_spec(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mdlseg
