#pragma once

#include <string>
#include <vector>

#include "mdlseg/core.hpp"

// Station CSV ingest and emission.  The on-disk format is a header row
// `year,season,value` followed by one row per observation, sorted by year
// then season, covering complete cycles with no gaps.

namespace mdlseg {

struct StationSeries {
    PeriodicSeries series;
    int start_year = 0;
};

struct Calendar {
    int year = 0;
    int season = 0;
};

inline Calendar calendar_of(int t, int period, int start_year) {
    return {start_year + cycle_of(t, period), season_of(t, period)};
}
inline int time_of(const Calendar& c, int period, int start_year) {
    return (c.year - start_year) * period + c.season;
}

StationSeries read_station_csv(const std::string& path, int period);
StationSeries parse_station_csv(const std::string& text, int period);
void write_station_csv(const std::string& path, const StationSeries& station);
std::string station_csv(const StationSeries& station);

// Target minus the mean of the reference series, element-wise.  All series
// must share length and period; the station overload also requires a common
// start year.
PeriodicSeries difference_series(const PeriodicSeries& target,
                                 const std::vector<PeriodicSeries>& refs);
StationSeries difference_station(const StationSeries& target,
                                 const std::vector<StationSeries>& refs);

}  // namespace mdlseg
