#include "mdlseg/station_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mdlseg {

namespace {

// Strict field parsers: the whole field must be consumed.
bool parse_int(const std::string& field, int& out) {
    if (field.empty()) return false;
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(field.c_str(), &end, 10);
    if (errno != 0 || end != field.c_str() + field.size()) return false;
    out = static_cast<int>(v);
    return true;
}

bool parse_double(const std::string& field, double& out) {
    if (field.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(field.c_str(), &end);
    return errno == 0 && end == field.c_str() + field.size();
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

StationSeries parse_station_csv(const std::string& text, int period) {
    if (period < 1) throw Error("period must be >= 1");
    std::istringstream in(text);
    std::string line;
    long line_no = 0;

    if (!std::getline(in, line)) throw ParseError("missing header row", 1);
    ++line_no;
    {
        std::vector<std::string> head = split_fields(line);
        if (head.size() != 3 || head[0] != "year" || head[1] != "season" || head[2] != "value")
            throw ParseError("header must be exactly 'year,season,value'", line_no);
    }

    StationSeries station;
    bool first = true;
    int expect_year = 0;
    int expect_season = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields = split_fields(line);
        if (fields.size() != 3) throw ParseError("expected 3 comma-separated fields", line_no);
        int year = 0;
        int season = 0;
        double value = 0.0;
        if (!parse_int(fields[0], year)) throw ParseError("bad year field '" + fields[0] + "'", line_no);
        if (!parse_int(fields[1], season)) throw ParseError("bad season field '" + fields[1] + "'", line_no);
        if (!parse_double(fields[2], value)) throw ParseError("bad value field '" + fields[2] + "'", line_no);
        if (season < 1 || season > period)
            throw ParseError("season " + std::to_string(season) + " outside 1.." + std::to_string(period),
                             line_no);
        if (first) {
            if (season != 1) throw GapError("file must start at season 1", year, 1);
            station.start_year = year;
            expect_year = year;
            first = false;
        }
        if (year != expect_year || season != expect_season)
            throw GapError("missing or out-of-order row", expect_year, expect_season);
        station.series.values.push_back(value);
        if (++expect_season > period) {
            expect_season = 1;
            ++expect_year;
        }
    }
    if (expect_season != 1)
        throw NotFullCycles("file ends mid-cycle before season " + std::to_string(expect_season));
    station.series = validate_series(std::move(station.series.values), period);
    return station;
}

StationSeries read_station_csv(const std::string& path, int period) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_station_csv(buf.str(), period);
}

std::string station_csv(const StationSeries& station) {
    std::string out = "year,season,value\n";
    char buf[80];
    const int T = station.series.period;
    for (int t = 1; t <= station.series.length(); ++t) {
        const Calendar c = calendar_of(t, T, station.start_year);
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", c.year, c.season, station.series.at_time(t));
        out += buf;
    }
    return out;
}

void write_station_csv(const std::string& path, const StationSeries& station) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << station_csv(station);
}

PeriodicSeries difference_series(const PeriodicSeries& target,
                                 const std::vector<PeriodicSeries>& refs) {
    if (refs.empty()) throw Error("at least one reference series is required");
    for (const PeriodicSeries& ref : refs) {
        if (ref.period != target.period)
            throw AlignmentError("reference period differs from the target's");
        if (ref.length() != target.length())
            throw AlignmentError("reference length differs from the target's");
    }
    std::vector<double> diff(target.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        double ref_mean = 0.0;
        for (const PeriodicSeries& ref : refs) ref_mean += ref.values[i];
        ref_mean /= static_cast<double>(refs.size());
        diff[i] = target.values[i] - ref_mean;
    }
    return validate_series(std::move(diff), target.period);
}

StationSeries difference_station(const StationSeries& target,
                                 const std::vector<StationSeries>& refs) {
    std::vector<PeriodicSeries> plain;
    plain.reserve(refs.size());
    for (const StationSeries& ref : refs) {
        if (ref.start_year != target.start_year)
            throw AlignmentError("reference start year differs from the target's");
        plain.push_back(ref.series);
    }
    StationSeries out;
    out.start_year = target.start_year;
    out.series = difference_series(target.series, plain);
    return out;
}

}  // namespace mdlseg
