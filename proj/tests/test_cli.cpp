#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <regex>
#include <string>
#include <vector>

#include "mdlseg/commands.hpp"
#include "mdlseg/mdl.hpp"
#include "mdlseg/rng.hpp"
#include "mdlseg/simulate.hpp"
#include "mdlseg/station_io.hpp"
#include "support.hpp"

using namespace mdlseg;
using testsupport::close;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("mdlseg_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// A short correlated series with one large level shift, written as the
// calendars the ingest layer expects.
StationSeries sample_station(unsigned seed = 3) {
    StudySpec spec;
    spec.period = 4;
    spec.cycles = 12;
    spec.changepoints = {25};
    spec.seasonal_means = {1.0, 2.0, 3.0, 4.0};
    PARModel par;
    par.order = 1;
    par.period = 4;
    par.phi = {0.5, -0.2, 0.3, 0.1};
    par.sigma2 = {1.0, 2.0, 0.5, 1.5};
    spec.noise = par;
    spec.shifts.kind = ShiftSpec::Kind::FixedLevels;
    spec.shifts.levels = {4.0};
    Rng rng(seed);
    StationSeries st;
    st.series = simulate_series(spec, rng);
    st.start_year = 1950;
    return st;
}

SegmentOptions quick_options() {
    SegmentOptions opts;
    opts.period = 4;
    opts.islands = 2;
    opts.population = 6;
    opts.max_migrations = 4;
    opts.constraints.max_par_order = 1;
    opts.constraints.max_changepoints = 2;
    opts.threads = 1;
    opts.seed = 5;
    return opts;
}

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

CliRun run_cli(const std::string& args, const fs::path& dir) {
    const std::string out_path = (dir / "stdout.txt").string();
    const std::string err_path = (dir / "stderr.txt").string();
    const std::string cmd =
        std::string(MDLSEG_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
    const int status = std::system(cmd.c_str());
    CliRun run;
    run.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    run.out = read_text_file(out_path);
    run.err = read_text_file(err_path);
    return run;
}

}  // namespace

TEST_CASE("station csv round-trips exactly") {
    StationSeries st;
    st.start_year = 1901;
    st.series = validate_series({0.1, 1.0 / 3.0, -2.5e-7, 123.456789012345678, 1e17, -0.0}, 2);

    std::string text = station_csv(st);
    CHECK(text.rfind("year,season,value\n1901,1,0.1", 0) == 0);
    CHECK(text.find("\n1903,2,") != std::string::npos);

    StationSeries back = parse_station_csv(text, 2);
    CHECK(back.start_year == 1901);
    CHECK(back.series.period == 2);
    CHECK(back.series.cycles == 3);
    CHECK(back.series.values == st.series.values);
}

TEST_CASE("station csv ingest rejects malformed input") {
    SUBCASE("missing header") {
        try {
            parse_station_csv("", 4);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line == 1);
        }
    }
    SUBCASE("wrong header") {
        CHECK_THROWS_AS(parse_station_csv("year,month,value\n", 4), ParseError);
        CHECK_THROWS_AS(parse_station_csv("year,season\n", 4), ParseError);
    }
    SUBCASE("bad fields carry their line number") {
        try {
            parse_station_csv("year,season,value\n19x1,1,0.5\n", 4);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line == 2);
            CHECK(std::string(e.what()).find("year") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_station_csv("year,season,value\n1901,one,0.5\n", 4), ParseError);
        CHECK_THROWS_AS(parse_station_csv("year,season,value\n1901,1,zz\n", 4), ParseError);
        CHECK_THROWS_AS(parse_station_csv("year,season,value\n1901,1\n", 4), ParseError);
    }
    SUBCASE("season outside the period") {
        CHECK_THROWS_AS(parse_station_csv("year,season,value\n1901,5,0.5\n", 4), ParseError);
        CHECK_THROWS_AS(parse_station_csv("year,season,value\n1901,0,0.5\n", 4), ParseError);
    }
    SUBCASE("must start at season 1") {
        try {
            parse_station_csv("year,season,value\n1901,2,0.5\n", 4);
            FAIL("expected a gap error");
        } catch (const GapError& e) {
            CHECK(e.year == 1901);
            CHECK(e.season == 1);
        }
    }
    SUBCASE("missing row") {
        const std::string text =
            "year,season,value\n1901,1,0.5\n1901,3,0.5\n1901,4,0.5\n1902,1,0.5\n";
        try {
            parse_station_csv(text, 4);
            FAIL("expected a gap error");
        } catch (const GapError& e) {
            CHECK(e.year == 1901);
            CHECK(e.season == 2);
        }
    }
    SUBCASE("mid-cycle end") {
        CHECK_THROWS_AS(parse_station_csv("year,season,value\n1901,1,0.5\n1901,2,0.5\n", 4),
                        NotFullCycles);
    }
    SUBCASE("non-finite value") {
        CHECK_THROWS_AS(parse_station_csv("year,season,value\n1901,1,nan\n1901,2,0.5\n", 2),
                        NonFinite);
    }
    SUBCASE("bad period") {
        CHECK_THROWS_AS(parse_station_csv("year,season,value\n", 0), Error);
    }
    SUBCASE("blank lines and CRLF are tolerated") {
        StationSeries st =
            parse_station_csv("year,season,value\r\n\r\n1901,1,1\n\n1901,2,2\r\n", 2);
        CHECK(st.series.values == std::vector<double>{1.0, 2.0});
    }
}

TEST_CASE("calendar labels and time indices are inverse maps") {
    CHECK(calendar_of(1, 12, 1900).year == 1900);
    CHECK(calendar_of(1, 12, 1900).season == 1);
    CHECK(calendar_of(12, 12, 1900).season == 12);
    CHECK(calendar_of(13, 12, 1900).year == 1901);
    for (int t = 1; t <= 48; ++t) {
        Calendar c = calendar_of(t, 4, 1899);
        CHECK(c.season >= 1);
        CHECK(c.season <= 4);
        CHECK(time_of(c, 4, 1899) == t);
    }
}

TEST_CASE("differencing subtracts the reference mean elementwise") {
    StationSeries target;
    target.start_year = 1980;
    target.series = validate_series(std::vector<double>(6, 4.0), 2);

    SUBCASE("a series minus itself is zero") {
        StationSeries diff = difference_station(target, {target});
        for (double v : diff.series.values) CHECK(v == 0.0);
        CHECK(diff.start_year == 1980);
    }
    SUBCASE("mean of several references") {
        auto constant = [](double v) {
            StationSeries st;
            st.start_year = 1980;
            st.series = validate_series(std::vector<double>(6, v), 2);
            return st;
        };
        StationSeries diff = difference_station(target, {constant(1), constant(2), constant(3)});
        for (double v : diff.series.values) CHECK(v == 2.0);
    }
    SUBCASE("alignment failures") {
        PeriodicSeries other_period = validate_series(std::vector<double>(6, 1.0), 3);
        CHECK_THROWS_AS(difference_series(target.series, {other_period}), AlignmentError);
        PeriodicSeries other_length = validate_series(std::vector<double>(8, 1.0), 2);
        CHECK_THROWS_AS(difference_series(target.series, {other_length}), AlignmentError);
        StationSeries shifted = target;
        shifted.start_year = 1981;
        CHECK_THROWS_AS(difference_station(target, {shifted}), AlignmentError);
        CHECK_THROWS_AS(difference_series(target.series, {}), Error);
    }
}

TEST_CASE("study description defaults") {
    StudySpec spec = parse_study_spec("");
    CHECK(spec.period == 12);
    CHECK(spec.cycles == 100);
    CHECK(spec.replicates == 200);
    CHECK(spec.seed == 1);
    CHECK(spec.burn_in_cycles == 100);
    CHECK(spec.trend == 0.0);
    CHECK_FALSE(spec.iid_mode);
    CHECK(spec.changepoints.empty());
    CHECK(spec.seasonal_means == std::vector<double>(12, 0.0));
    CHECK(spec.noise.order == 0);
    CHECK(spec.noise.period == 12);
    CHECK(spec.noise.sigma2 == std::vector<double>(12, 1.0));
    CHECK(spec.shifts.kind == ShiftSpec::Kind::None);
    CHECK(spec.ga.population == 30);
    CHECK(spec.ga.islands == 40);
    CHECK(spec.ga.max_migrations == 25);
}

TEST_CASE("study description parses every key") {
    const std::string text =
        "# synthetic shift study\n"
        "period = 4   # quarterly\n"
        "cycles = 12\n"
        "replicates = 10\n"
        "seed = 7\n"
        "burn_in = 120\n"
        "changepoints = 25, 37\n"
        "means = 1, 2, 3, 4\n"
        "trend = 0.05\n"
        "phi1 = 0.5, -0.2, 0.3, 0.1\n"
        "phi2 = 0.1\n"
        "sigma2 = 2\n"
        "kappa = 1.5\n"
        "\n"
        "population = 8\n"
        "islands = 2\n"
        "migration_interval = 3\n"
        "migrants = 2\n"
        "convergence_migrations = 4\n"
        "max_migrations = 9\n"
        "mutation_prob = 0.1\n"
        "crossover_prob = 0.8\n"
        "new_cp_prob = 0.02\n"
        "min_cycles_between = 2\n"
        "max_par_order = 1\n"
        "max_changepoints = 3\n"
        "accept_only_better = true\n"
        "include_trend = false\n"
        "threads = 1\n"
        "variant = single-mu\n";
    StudySpec spec = parse_study_spec(text);
    CHECK(spec.period == 4);
    CHECK(spec.cycles == 12);
    CHECK(spec.replicates == 10);
    CHECK(spec.seed == 7);
    CHECK(spec.burn_in_cycles == 120);
    CHECK(spec.changepoints == std::vector<int>{25, 37});
    CHECK(spec.seasonal_means == std::vector<double>{1.0, 2.0, 3.0, 4.0});
    CHECK(spec.trend == 0.05);
    CHECK(spec.noise.order == 2);
    CHECK(spec.noise.phi_at(1, 1) == 0.5);
    CHECK(spec.noise.phi_at(2, 1) == -0.2);
    CHECK(spec.noise.phi_at(3, 2) == 0.1);  // single value broadcast to all seasons
    CHECK(spec.noise.sigma2 == std::vector<double>(4, 2.0));
    CHECK(spec.shifts.kind == ShiftSpec::Kind::ScaledWalk);
    CHECK(spec.shifts.scale == 1.5);
    CHECK(spec.ga.population == 8);
    CHECK(spec.ga.islands == 2);
    CHECK(spec.ga.migration_interval == 3);
    CHECK(spec.ga.migrants == 2);
    CHECK(spec.ga.convergence_migrations == 4);
    CHECK(spec.ga.max_migrations == 9);
    CHECK(spec.ga.mutation_prob == 0.1);
    CHECK(spec.ga.crossover_prob == 0.8);
    CHECK(spec.ga.new_cp_prob == 0.02);
    CHECK(spec.ga.constraints.min_cycles_between == 2);
    CHECK(spec.ga.constraints.max_par_order == 1);
    CHECK(spec.ga.constraints.max_changepoints == 3);
    CHECK(spec.ga.accept_only_better);
    CHECK_FALSE(spec.ga.include_trend);
    CHECK(spec.ga.threads == 1);
    CHECK(spec.ga.variant == MdlVariant::SingleMu);
}

TEST_CASE("study description rejects inconsistent input") {
    auto error_contains = [](const std::string& text, const std::string& needle) {
        try {
            parse_study_spec(text);
            return false;
        } catch (const Error& e) {
            return std::string(e.what()).find(needle) != std::string::npos;
        }
    };
    CHECK(error_contains("bogus = 1\n", "unknown key bogus (line 1)"));
    CHECK(error_contains("period = 4\nperiod = 6\n", "duplicate key period (line 2)"));
    CHECK(error_contains("period\n", "key=value (line 1)"));
    CHECK(error_contains("cycles = ten\n", "cycles (line 1)"));
    CHECK(error_contains("trend = x\n", "trend (line 1)"));
    CHECK(error_contains("replicates = 0\n", "out of range"));
    CHECK(error_contains("period = 4\nmeans = 1, 2\n", "means needs 1 or 4 values"));
    CHECK(error_contains("phi2 = 0.5\n", "phi2 requires phi1"));
    CHECK(error_contains("phi1 = 0.5\nphi3 = 0.1\n", "phi3 requires phi2"));
    CHECK(error_contains("iid = 1\nphi1 = 0.5\n", "independent errors"));
    CHECK(error_contains("kappa = 1\na = 2\n", "mutually exclusive"));
    CHECK(error_contains("kappa = 1\nlevels = 2\n", "mutually exclusive"));
    CHECK(error_contains("variant = fancy\n", "fancy"));
    CHECK(error_contains("seed = 12x\n", "seed (line 1)"));
}

TEST_CASE("study description shorthand profiles") {
    StudySpec fast = parse_study_spec("fast = 1\n");
    CHECK(fast.ga.islands == 8);
    CHECK(fast.ga.max_migrations == 15);

    // Explicit keys beat the profile regardless of their order in the file.
    StudySpec mixed = parse_study_spec("islands = 3\nfast = 1\n");
    CHECK(mixed.ga.islands == 3);
    CHECK(mixed.ga.max_migrations == 15);

    StudySpec walk = parse_study_spec("a = 2.5\n");
    CHECK(walk.shifts.kind == ShiftSpec::Kind::ScaledWalk);
    CHECK(walk.shifts.scale == 2.5);

    StudySpec fixed = parse_study_spec("changepoints = 300\nlevels = 1.25\n");
    CHECK(fixed.shifts.kind == ShiftSpec::Kind::FixedLevels);
    CHECK(fixed.shifts.levels == std::vector<double>{1.25});

    StudySpec iid = parse_study_spec("iid = true\n");
    CHECK(iid.iid_mode);
}

TEST_CASE("segment search honors a changepoint cap of zero") {
    StationSeries st = sample_station();
    SegmentOptions opts = quick_options();
    opts.constraints.max_changepoints = 0;

    std::vector<std::string> lines;
    SegmentResult res = segment_series(st, opts, [&](const std::string& l) { lines.push_back(l); });

    CHECK(res.fit.segmentation.num_changepoints() == 0);
    CHECK(res.report_text.find("no changepoints") != std::string::npos);
    CHECK(res.result_text.find("m=0\n") != std::string::npos);
    CHECK(res.result_text.find("n=48\n") != std::string::npos);
    CHECK(res.shift_se.empty());
    CHECK(std::isfinite(res.trend_se));
    CHECK(close(res.breakdown.objective_nats, res.fit.mdl_nats, 1e-12));

    REQUIRE(static_cast<int>(lines.size()) == res.search.migrations);
    std::regex shape("migration=\\d+ best_mdl=[-+0-9.eE]+ m=\\d+ p=\\d+ taus=[0-9,]*");
    for (const std::string& line : lines) CHECK(std::regex_match(line, shape));
}

TEST_CASE("segment pipeline applies replacements and differencing") {
    fs::path dir = scratch_dir("pipeline");
    StationSeries st = sample_station();
    write_station_csv((dir / "target.csv").string(), st);

    SUBCASE("replacement rewrites one observation") {
        SegmentOptions opts = quick_options();
        opts.input = (dir / "target.csv").string();
        opts.replacements = {{5, -99.0}};
        SegmentResult res = run_segment(opts);
        CHECK(res.analyzed.series.values[4] == -99.0);
        CHECK(res.analyzed.series.values[3] == st.series.values[3]);
    }
    SUBCASE("replacement index must be in range") {
        SegmentOptions opts = quick_options();
        opts.input = (dir / "target.csv").string();
        opts.replacements = {{49, 0.0}};
        CHECK_THROWS_AS(run_segment(opts), Error);
    }
    SUBCASE("differencing against itself yields a degenerate fit") {
        SegmentOptions opts = quick_options();
        opts.input = (dir / "target.csv").string();
        opts.refs = {(dir / "target.csv").string()};
        SegmentResult res = run_segment(opts);
        CHECK(res.fit.degenerate);
        CHECK(res.report_text.find("degenerate") != std::string::npos);
        for (double v : res.analyzed.series.values) CHECK(v == 0.0);
    }
}

TEST_CASE("segment outputs land in the requested directory") {
    fs::path dir = scratch_dir("outputs");
    StationSeries st = sample_station();
    SegmentResult res = segment_series(st, quick_options());
    write_segment_outputs((dir / "run1").string(), res);

    CHECK(fs::exists(dir / "run1" / "report.txt"));
    CHECK(fs::exists(dir / "run1" / "result.txt"));
    CHECK(fs::exists(dir / "run1" / "acf.csv"));
    CHECK(fs::exists(dir / "run1" / "periodogram.csv"));

    std::string resid = read_text_file((dir / "run1" / "residuals.csv").string());
    CHECK(resid.rfind("t,year,season,residual,innovation\n", 0) == 0);
    CHECK(std::count(resid.begin(), resid.end(), '\n') == 49);
    std::string acf = read_text_file((dir / "run1" / "acf.csv").string());
    CHECK(acf.rfind("lag,acf,bound\n", 0) == 0);
}

TEST_CASE("command line: segment") {
    fs::path dir = scratch_dir("cli_segment");
    write_station_csv((dir / "target.csv").string(), sample_station());
    const std::string base = "segment --input " + (dir / "target.csv").string() +
                             " --period 4 --islands 2 --pop 6 --pmax 1 --seed 5";

    CliRun ok = run_cli(base, dir);
    CHECK(ok.code == 0);
    CHECK(ok.out.find("series: 48 observations, period 4, 12 cycles, years 1950-1961") !=
          std::string::npos);
    CHECK(ok.out.find("model:") != std::string::npos);
    CHECK(ok.out.find("seasonal levels:") != std::string::npos);

    CliRun traced = run_cli(base + " --trace --out " + (dir / "out").string(), dir);
    CHECK(traced.code == 0);
    std::regex shape("migration=\\d+ best_mdl=[-+0-9.eE]+ m=\\d+ p=\\d+ taus=[0-9,]*");
    CHECK(std::regex_search(traced.out, shape));
    CHECK(fs::exists(dir / "out" / "report.txt"));
    CHECK(fs::exists(dir / "out" / "result.txt"));

    CliRun replaced = run_cli(base + " --replace 5=0.25", dir);
    CHECK(replaced.code == 0);
}

TEST_CASE("command line: configuration errors exit with code 2") {
    fs::path dir = scratch_dir("cli_config");
    write_station_csv((dir / "target.csv").string(), sample_station());

    CHECK(run_cli("segment --bogus", dir).code == 2);
    CHECK(run_cli("segment", dir).code == 2);
    CHECK(run_cli("nosuchcommand", dir).code == 2);
    CHECK(run_cli("", dir).code == 2);

    CliRun missing = run_cli("segment --input " + (dir / "nope.csv").string() + " --period 4", dir);
    CHECK(missing.code == 2);
    CHECK(missing.err.find("cannot open") != std::string::npos);

    const std::string target = (dir / "target.csv").string();
    CHECK(run_cli("segment --input " + target + " --period 4 --variant fancy", dir).code == 2);
    CHECK(run_cli("segment --input " + target + " --period 4 --replace x=1", dir).code == 2);
    CHECK(run_cli("segment --input " + target + " --period 4 --replace 7=abc", dir).code == 2);
}

TEST_CASE("command line: data errors exit with code 3") {
    fs::path dir = scratch_dir("cli_data");
    write_text_file((dir / "gap.csv").string(),
                    "year,season,value\n1901,1,1\n1901,2,1\n1901,4,1\n");
    CliRun gap = run_cli("segment --input " + (dir / "gap.csv").string() + " --period 4", dir);
    CHECK(gap.code == 3);
    CHECK(gap.err.find("year 1901, season 3") != std::string::npos);

    write_text_file((dir / "head.csv").string(), "time,value\n");
    CHECK(run_cli("segment --input " + (dir / "head.csv").string() + " --period 4", dir).code == 3);

    write_station_csv((dir / "a.csv").string(), sample_station());
    StationSeries moved = sample_station();
    moved.start_year = 1960;
    write_station_csv((dir / "b.csv").string(), moved);
    CliRun diff = run_cli("diff --input " + (dir / "a.csv").string() + " --ref " +
                              (dir / "b.csv").string() + " --period 4",
                          dir);
    CHECK(diff.code == 3);
    CHECK(diff.err.find("start year") != std::string::npos);
}

TEST_CASE("command line: fit failures exit with code 4") {
    fs::path dir = scratch_dir("cli_fit");
    StationSeries flat;
    flat.start_year = 1901;
    flat.series = validate_series(std::vector<double>(16, 2.5), 4);
    write_station_csv((dir / "flat.csv").string(), flat);
    CliRun run = run_cli("diagnose --input " + (dir / "flat.csv").string() + " --period 4", dir);
    CHECK(run.code == 4);
    CHECK(run.err.find("zero variance") != std::string::npos);
}

TEST_CASE("command line: diff and diagnose") {
    fs::path dir = scratch_dir("cli_diff");
    StationSeries st = sample_station();
    write_station_csv((dir / "a.csv").string(), st);

    const std::string a = (dir / "a.csv").string();
    CliRun self = run_cli("diff --input " + a + " --ref " + a + " --period 4", dir);
    CHECK(self.code == 0);
    StationSeries zeros = parse_station_csv(self.out, 4);
    CHECK(zeros.start_year == 1950);
    for (double v : zeros.series.values) CHECK(v == 0.0);

    CliRun to_file = run_cli("diff --input " + a + " --ref " + a + " --period 4 --out " +
                                 (dir / "zero.csv").string(),
                             dir);
    CHECK(to_file.code == 0);
    CHECK(fs::exists(dir / "zero.csv"));

    CliRun diag = run_cli("diagnose --input " + a + " --period 4 --max-lag 5", dir);
    CHECK(diag.code == 0);
    CHECK(diag.out.rfind("lag,acf,bound\n", 0) == 0);
    CHECK(diag.out.find("\n\nfreq,ordinate\n") != std::string::npos);

    CliRun diag_dir = run_cli("diagnose --input " + a + " --period 4 --out " +
                                  (dir / "diag").string(),
                              dir);
    CHECK(diag_dir.code == 0);
    CHECK(fs::exists(dir / "diag" / "acf.csv"));
    CHECK(fs::exists(dir / "diag" / "periodogram.csv"));
}

TEST_CASE("command line: simulate") {
    fs::path dir = scratch_dir("cli_simulate");
    write_text_file((dir / "study.txt").string(),
                    "period = 4\n"
                    "cycles = 12\n"
                    "replicates = 5\n"
                    "changepoints = 25\n"
                    "levels = 4\n"
                    "means = 1, 2, 3, 4\n"
                    "population = 6\n"
                    "islands = 2\n"
                    "max_migrations = 3\n"
                    "convergence_migrations = 2\n"
                    "max_par_order = 1\n"
                    "max_changepoints = 2\n"
                    "threads = 1\n");

    const std::string base = "simulate --spec " + (dir / "study.txt").string();
    CliRun run = run_cli(base + " --replicates 2 --seed 9", dir);
    CHECK(run.code == 0);
    CHECK(run.out.rfind("m,count\n", 0) == 0);
    CHECK(run.out.find("\np,count\n") != std::string::npos);
    CHECK(run.out.find("\nt,count\n") != std::string::npos);
    CHECK(run.out.find("\"replicates\": 2") != std::string::npos);

    CliRun saved = run_cli(base + " --replicates 2 --out " + (dir / "res").string(), dir);
    CHECK(saved.code == 0);
    CHECK(saved.out.rfind("{\"replicates\": 2", 0) == 0);
    CHECK(fs::exists(dir / "res" / "study.csv"));
    std::string csv = read_text_file((dir / "res" / "study.csv").string());
    CHECK(csv.rfind("m,count\n", 0) == 0);

    CHECK(run_cli("simulate --spec " + (dir / "missing.txt").string(), dir).code == 2);
    write_text_file((dir / "bad.txt").string(), "bogus = 1\n");
    CliRun bad = run_cli("simulate --spec " + (dir / "bad.txt").string(), dir);
    CHECK(bad.code == 2);
    CHECK(bad.err.find("unknown key") != std::string::npos);
}
