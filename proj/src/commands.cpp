#include "mdlseg/commands.hpp"

#include <cerrno>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "mdlseg/diagnostics.hpp"
#include "mdlseg/regression.hpp"

namespace mdlseg {

namespace {

std::string strfmt(const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    int n = std::vsnprintf(buf, sizeof(buf), fmt, ap);
    va_end(ap);
    if (n < 0) return {};
    if (n >= static_cast<int>(sizeof(buf))) n = static_cast<int>(sizeof(buf)) - 1;
    return std::string(buf, buf + n);
}

std::string join_ints(const std::vector<int>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(xs[i]);
    }
    return out;
}

std::string trace_line(const MigrationEvent& ev) {
    return strfmt("migration=%d best_mdl=%.17g m=%d p=%d taus=", ev.migration, ev.best_mdl,
                  ev.best.num_changepoints(), ev.best.par_order) +
           join_ints(ev.best.changepoints);
}

// Standardized one-step prediction errors; white under a well-fitting model,
// unlike the raw error-process residuals.
std::vector<double> innovations(const StationSeries& st, const FittedModel& fit) {
    const std::vector<double>& x = st.series.values;
    std::vector<double> z(x.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (fit.pred_var[i] > 0.0) z[i] = (x[i] - fit.one_step_pred[i]) / std::sqrt(fit.pred_var[i]);
    }
    return z;
}

std::string render_report(const SegmentResult& r, const StationSeries& st,
                          const SegmentOptions& opts) {
    const PeriodicSeries& x = st.series;
    const FittedModel& fit = r.fit;
    const int m = fit.segmentation.num_changepoints();
    const int p = fit.segmentation.par_order;
    std::string out;
    out += strfmt("series: %d observations, period %d, %d cycles, years %d-%d\n", x.length(),
                  x.period, x.cycles, st.start_year, st.start_year + x.cycles - 1);
    out += strfmt("search: %d islands, %d migrations, %ld fits%s\n", opts.islands,
                  r.search.migrations, r.search.evaluations,
                  r.search.converged ? ", stopped on a stable best" : "");
    out += strfmt("variant: %s\n\n", variant_name(opts.variant).c_str());
    if (fit.degenerate) {
        out += "model: degenerate fit (zero innovation variance); scores are infinite\n";
        return out;
    }
    if (m == 0)
        out += strfmt("model: no changepoints, PAR(%d) errors\n", p);
    else
        out += strfmt("model: %d changepoint%s, PAR(%d) errors\n", m, m == 1 ? "" : "s", p);
    if (!fit.converged)
        out += "warning: coefficient iteration stopped at the cap before stabilizing\n";
    out += strfmt("objective: %.6f nats\n", fit.mdl_nats);
    out += strfmt("description length: %.3f model bits + %.3f residual bits\n",
                  r.breakdown.model_bits, r.breakdown.residual_bits);
    out += strfmt("  mean %.3f, error model %.3f, locations %.3f, counts %.3f\n",
                  r.breakdown.mean_bits, r.breakdown.par_bits, r.breakdown.changepoint_bits,
                  r.breakdown.order_bits);
    if (m > 0) {
        out += "\nchangepoints (tau = first index of the new regime):\n";
        for (int j = 0; j < m; ++j) {
            const int tau = fit.segmentation.changepoints[static_cast<std::size_t>(j)];
            const Calendar c = calendar_of(tau, x.period, st.start_year);
            out += strfmt("  tau=%-5d (%d, season %2d)  shift=%+.4f  se=%.4f\n", tau, c.year,
                          c.season, fit.mean.shifts[static_cast<std::size_t>(j)],
                          r.shift_se[static_cast<std::size_t>(j)]);
        }
    }
    if (opts.include_trend)
        out += strfmt("\ntrend: %+.6g per time step  (se %.3g)\n", fit.mean.trend, r.trend_se);
    out += "\nseasonal levels:\n";
    for (int nu = 1; nu <= x.period; ++nu)
        out += strfmt("  season %2d: %9.4f\n", nu,
                      fit.mean.seasonal_means[static_cast<std::size_t>(nu - 1)]);
    out += "\nerror model:\n";
    for (int nu = 1; nu <= x.period; ++nu) {
        std::string row = strfmt("  season %2d:", nu);
        for (int k = 1; k <= p; ++k) row += strfmt(" phi%d=%+.4f", k, fit.par.phi_at(nu, k));
        row += strfmt(" sigma2=%.4f\n", fit.par.sigma2[static_cast<std::size_t>(nu - 1)]);
        out += row;
    }
    return out;
}

std::string render_result(const SegmentResult& r, const StationSeries& st,
                          const SegmentOptions& opts) {
    const PeriodicSeries& x = st.series;
    const FittedModel& fit = r.fit;
    const int m = fit.segmentation.num_changepoints();
    const int p = fit.segmentation.par_order;
    std::string out;
    out += strfmt("n=%d\n", x.length());
    out += strfmt("period=%d\n", x.period);
    out += strfmt("cycles=%d\n", x.cycles);
    out += strfmt("start_year=%d\n", st.start_year);
    out += strfmt("variant=%s\n", variant_name(opts.variant).c_str());
    out += strfmt("seed=%llu\n", static_cast<unsigned long long>(opts.seed));
    out += strfmt("m=%d\n", m);
    out += strfmt("p=%d\n", p);
    out += strfmt("converged=%d\n", fit.converged ? 1 : 0);
    out += strfmt("degenerate=%d\n", fit.degenerate ? 1 : 0);
    out += strfmt("iterations=%d\n", fit.iterations);
    out += strfmt("migrations=%d\n", r.search.migrations);
    out += strfmt("evaluations=%ld\n", r.search.evaluations);
    out += strfmt("search_converged=%d\n", r.search.converged ? 1 : 0);
    out += strfmt("objective_nats=%.17g\n", r.breakdown.objective_nats);
    out += strfmt("mean_bits=%.17g\n", r.breakdown.mean_bits);
    out += strfmt("par_bits=%.17g\n", r.breakdown.par_bits);
    out += strfmt("changepoint_bits=%.17g\n", r.breakdown.changepoint_bits);
    out += strfmt("order_bits=%.17g\n", r.breakdown.order_bits);
    out += strfmt("model_bits=%.17g\n", r.breakdown.model_bits);
    out += strfmt("residual_bits=%.17g\n", r.breakdown.residual_bits);
    if (opts.include_trend) {
        out += strfmt("trend=%.17g\n", fit.mean.trend);
        out += strfmt("trend_se=%.17g\n", r.trend_se);
    }
    out += "\ntau,year,season,shift,se\n";
    for (int j = 0; j < m; ++j) {
        const int tau = fit.segmentation.changepoints[static_cast<std::size_t>(j)];
        const Calendar c = calendar_of(tau, x.period, st.start_year);
        out += strfmt("%d,%d,%d,%.17g,%.17g\n", tau, c.year, c.season,
                      fit.mean.shifts[static_cast<std::size_t>(j)],
                      r.shift_se[static_cast<std::size_t>(j)]);
    }
    out += "\nseason,mu,sigma2";
    for (int k = 1; k <= p; ++k) out += strfmt(",phi%d", k);
    out += "\n";
    for (int nu = 1; nu <= x.period; ++nu) {
        std::string row = strfmt("%d,%.17g,%.17g", nu,
                                 fit.mean.seasonal_means[static_cast<std::size_t>(nu - 1)],
                                 fit.par.sigma2[static_cast<std::size_t>(nu - 1)]);
        for (int k = 1; k <= p; ++k) row += strfmt(",%.17g", fit.par.phi_at(nu, k));
        out += row + "\n";
    }
    return out;
}

}  // namespace

SegmentResult segment_series(const StationSeries& station, const SegmentOptions& opts,
                             const TraceSink& trace) {
    const PeriodicSeries& x = station.series;
    GaConfig cfg;
    cfg.population = opts.population;
    cfg.islands = opts.islands;
    cfg.max_migrations = opts.max_migrations;
    cfg.constraints = opts.constraints;
    cfg.seed = opts.seed;
    cfg.variant = opts.variant;
    cfg.include_trend = opts.include_trend;
    cfg.threads = opts.threads;
    if (trace) cfg.on_migration = [&trace](const MigrationEvent& ev) { trace(trace_line(ev)); };

    SegmentResult out;
    out.analyzed = station;
    out.fit = run_ga(x, cfg, &out.search);
    out.breakdown = mdl_breakdown(out.fit, x.period, opts.variant);

    const int m = out.fit.segmentation.num_changepoints();
    out.shift_se.assign(static_cast<std::size_t>(m), std::numeric_limits<double>::quiet_NaN());
    out.trend_se = std::numeric_limits<double>::quiet_NaN();
    if (!out.fit.degenerate) {
        FitOptions fopts;
        fopts.include_trend = opts.include_trend;
        Eigen::MatrixXd cov;
        cochrane_orcutt(x, out.fit.segmentation, fopts, nullptr, &cov);
        const int base = x.period + (opts.include_trend ? 1 : 0);
        if (cov.rows() == base + m && cov.cols() == base + m) {
            for (int j = 0; j < m; ++j)
                out.shift_se[static_cast<std::size_t>(j)] =
                    std::sqrt(std::max(0.0, cov(base + j, base + j)));
            if (opts.include_trend) out.trend_se = std::sqrt(std::max(0.0, cov(x.period, x.period)));
        }
    }
    out.report_text = render_report(out, station, opts);
    out.result_text = render_result(out, station, opts);
    return out;
}

SegmentResult run_segment(const SegmentOptions& opts, const TraceSink& trace) {
    StationSeries target = read_station_csv(opts.input, opts.period);
    for (const Replacement& rep : opts.replacements) {
        if (rep.t < 1 || rep.t > target.series.length())
            throw Error("replacement index out of range: t=" + std::to_string(rep.t));
        target.series.values[static_cast<std::size_t>(rep.t - 1)] = rep.value;
    }
    target.series = validate_series(std::move(target.series.values), opts.period);
    std::vector<StationSeries> refs;
    refs.reserve(opts.refs.size());
    for (const std::string& path : opts.refs) refs.push_back(read_station_csv(path, opts.period));
    if (!refs.empty()) target = difference_station(target, refs);
    return segment_series(target, opts, trace);
}

void write_segment_outputs(const std::string& dir, const SegmentResult& result) {
    std::filesystem::create_directories(dir);
    const auto path = [&dir](const char* name) { return dir + "/" + name; };
    write_text_file(path("report.txt"), result.report_text);
    write_text_file(path("result.txt"), result.result_text);

    const StationSeries& st = result.analyzed;
    const std::vector<double> z = innovations(st, result.fit);
    std::string res = "t,year,season,residual,innovation\n";
    for (int t = 1; t <= st.series.length(); ++t) {
        const Calendar c = calendar_of(t, st.series.period, st.start_year);
        res += strfmt("%d,%d,%d,%.17g,%.17g\n", t, c.year, c.season,
                      result.fit.residuals[static_cast<std::size_t>(t - 1)],
                      z[static_cast<std::size_t>(t - 1)]);
    }
    write_text_file(path("residuals.csv"), res);

    if (!result.fit.degenerate) {
        const int h_max = std::min(60, st.series.length() - 1);
        write_text_file(path("acf.csv"), acf_csv(sample_acf(z, h_max)));
        write_text_file(path("periodogram.csv"), periodogram_csv(periodogram(z)));
    }
}

namespace {

std::string trim(std::string s) {
    const char* ws = " \t\r\n";
    const auto a = s.find_first_not_of(ws);
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

struct SpecEntry {
    std::string value;
    long line = 0;
};

long long spec_int(const SpecEntry& e, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(e.value.c_str(), &end, 10);
    if (errno != 0 || end != e.value.c_str() + e.value.size() || e.value.empty())
        throw Error("bad integer for " + key + " (line " + std::to_string(e.line) + ")");
    return v;
}

double spec_double(const SpecEntry& e, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (errno == ERANGE || end != e.value.c_str() + e.value.size() || e.value.empty() ||
        !std::isfinite(v))
        throw Error("bad number for " + key + " (line " + std::to_string(e.line) + ")");
    return v;
}

bool spec_bool(const SpecEntry& e, const std::string& key) {
    if (e.value == "1" || e.value == "true") return true;
    if (e.value == "0" || e.value == "false") return false;
    throw Error("bad flag for " + key + " (line " + std::to_string(e.line) + ")");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::vector<double> spec_doubles(const SpecEntry& e, const std::string& key) {
    std::vector<double> out;
    for (const std::string& f : split_list(e.value)) out.push_back(spec_double({f, e.line}, key));
    return out;
}

std::vector<int> spec_ints(const SpecEntry& e, const std::string& key) {
    std::vector<int> out;
    for (const std::string& f : split_list(e.value))
        out.push_back(static_cast<int>(spec_int({f, e.line}, key)));
    return out;
}

// Length-T vector from a list of length T or a single broadcast value.
std::vector<double> broadcast(std::vector<double> xs, int period, const std::string& key) {
    if (static_cast<int>(xs.size()) == period) return xs;
    if (xs.size() == 1) return std::vector<double>(static_cast<std::size_t>(period), xs[0]);
    throw Error(key + " needs 1 or " + std::to_string(period) + " values, got " +
                std::to_string(xs.size()));
}

}  // namespace

StudySpec parse_study_spec(const std::string& text) {
    std::map<std::string, SpecEntry> kv;
    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("expected key=value (line " + std::to_string(line_no) + ")");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw Error("expected key=value (line " + std::to_string(line_no) + ")");
        if (!kv.emplace(key, SpecEntry{value, line_no}).second)
            throw Error("duplicate key " + key + " (line " + std::to_string(line_no) + ")");
    }

    auto take = [&kv](const std::string& key) -> std::optional<SpecEntry> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        SpecEntry e = it->second;
        kv.erase(it);
        return e;
    };
    auto take_int = [&take](const std::string& key, int dflt, int lo) {
        const auto e = take(key);
        if (!e) return dflt;
        const long long v = spec_int(*e, key);
        if (v < lo || v > std::numeric_limits<int>::max())
            throw Error(key + " out of range (line " + std::to_string(e->line) + ")");
        return static_cast<int>(v);
    };
    auto take_double = [&take](const std::string& key, double dflt) {
        const auto e = take(key);
        return e ? spec_double(*e, key) : dflt;
    };
    auto take_bool = [&take](const std::string& key, bool dflt) {
        const auto e = take(key);
        return e ? spec_bool(*e, key) : dflt;
    };

    StudySpec spec;
    spec.period = take_int("period", 12, 1);
    spec.cycles = take_int("cycles", 100, 1);
    spec.replicates = take_int("replicates", 200, 1);
    spec.burn_in_cycles = take_int("burn_in", 100, 0);
    if (const auto e = take("seed")) {
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(e->value.c_str(), &end, 10);
        if (errno != 0 || end != e->value.c_str() + e->value.size())
            throw Error("bad integer for seed (line " + std::to_string(e->line) + ")");
        spec.seed = v;
    }

    if (take_bool("fast", false)) {
        spec.ga.islands = 8;
        spec.ga.max_migrations = 15;
    }
    spec.ga.population = take_int("population", spec.ga.population, 2);
    spec.ga.islands = take_int("islands", spec.ga.islands, 1);
    spec.ga.migration_interval = take_int("migration_interval", spec.ga.migration_interval, 1);
    spec.ga.migrants = take_int("migrants", spec.ga.migrants, 1);
    spec.ga.convergence_migrations =
        take_int("convergence_migrations", spec.ga.convergence_migrations, 1);
    spec.ga.max_migrations = take_int("max_migrations", spec.ga.max_migrations, 1);
    spec.ga.mutation_prob = take_double("mutation_prob", spec.ga.mutation_prob);
    spec.ga.crossover_prob = take_double("crossover_prob", spec.ga.crossover_prob);
    spec.ga.new_cp_prob = take_double("new_cp_prob", spec.ga.new_cp_prob);
    spec.ga.constraints.min_cycles_between =
        take_int("min_cycles_between", spec.ga.constraints.min_cycles_between, 1);
    spec.ga.constraints.max_par_order =
        take_int("max_par_order", spec.ga.constraints.max_par_order, 0);
    spec.ga.constraints.max_changepoints =
        take_int("max_changepoints", spec.ga.constraints.max_changepoints, -1);
    spec.ga.accept_only_better = take_bool("accept_only_better", spec.ga.accept_only_better);
    spec.ga.include_trend = take_bool("include_trend", spec.ga.include_trend);
    spec.ga.threads = take_int("threads", 0, 0);
    if (const auto e = take("variant")) spec.ga.variant = variant_from_name(e->value);

    if (const auto e = take("changepoints")) spec.changepoints = spec_ints(*e, "changepoints");
    spec.seasonal_means.assign(static_cast<std::size_t>(spec.period), 0.0);
    if (const auto e = take("means"))
        spec.seasonal_means = broadcast(spec_doubles(*e, "means"), spec.period, "means");
    spec.trend = take_double("trend", 0.0);
    spec.iid_mode = take_bool("iid", false);

    std::vector<std::vector<double>> phis;
    for (int k = 1;; ++k) {
        const auto e = take("phi" + std::to_string(k));
        if (!e) {
            if (take("phi" + std::to_string(k + 1)))
                throw Error("phi" + std::to_string(k + 1) + " requires phi" + std::to_string(k));
            break;
        }
        const std::string key = "phi" + std::to_string(k);
        phis.push_back(broadcast(spec_doubles(*e, key), spec.period, key));
    }
    const int order = static_cast<int>(phis.size());
    if (spec.iid_mode && order > 0) throw Error("iid mode uses independent errors; drop phi keys");
    spec.noise.order = order;
    spec.noise.period = spec.period;
    spec.noise.sigma2.assign(static_cast<std::size_t>(spec.period), 1.0);
    if (const auto e = take("sigma2"))
        spec.noise.sigma2 = broadcast(spec_doubles(*e, "sigma2"), spec.period, "sigma2");
    spec.noise.phi.assign(static_cast<std::size_t>(spec.period * order), 0.0);
    for (int nu = 1; nu <= spec.period; ++nu)
        for (int k = 1; k <= order; ++k)
            spec.noise.phi_at(nu, k) = phis[static_cast<std::size_t>(k - 1)]
                                           [static_cast<std::size_t>(nu - 1)];

    const auto kappa = take("kappa");
    const auto a = take("a");
    const auto levels = take("levels");
    if ((kappa && a) || (kappa && levels) || (a && levels))
        throw Error("kappa, a and levels are mutually exclusive");
    if (kappa || a) {
        spec.shifts.kind = ShiftSpec::Kind::ScaledWalk;
        spec.shifts.scale = kappa ? spec_double(*kappa, "kappa") : spec_double(*a, "a");
    } else if (levels) {
        spec.shifts.kind = ShiftSpec::Kind::FixedLevels;
        spec.shifts.levels = spec_doubles(*levels, "levels");
    }

    if (!kv.empty()) {
        const auto& bad = *kv.begin();
        throw Error("unknown key " + bad.first + " (line " + std::to_string(bad.second.line) + ")");
    }
    return spec;
}

StudySpec read_study_spec(const std::string& path) {
    return parse_study_spec(read_text_file(path));
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
    out.flush();
    if (!out) throw Error("failed writing " + path);
}

}  // namespace mdlseg
