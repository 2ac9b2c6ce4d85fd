#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mdlseg/commands.hpp"
#include "mdlseg/diagnostics.hpp"

// Exit codes: 0 success, 2 bad configuration, 3 bad data, 4 numerical
// failure while fitting.

namespace {

mdlseg::Replacement parse_replace(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
        throw mdlseg::Error("--replace wants t=VALUE, got '" + arg + "'");
    mdlseg::Replacement rep;
    try {
        std::size_t pos = 0;
        rep.t = std::stoi(arg.substr(0, eq), &pos);
        if (pos != eq) throw std::invalid_argument("trailing");
        const std::string val = arg.substr(eq + 1);
        rep.value = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
        throw mdlseg::Error("--replace wants t=VALUE, got '" + arg + "'");
    }
    return rep;
}

int cmd_segment(mdlseg::SegmentOptions opts, const std::vector<std::string>& replaces,
                const std::string& variant, const std::string& out_dir, bool trace) {
    opts.variant = mdlseg::variant_from_name(variant);
    for (const std::string& r : replaces) opts.replacements.push_back(parse_replace(r));
    mdlseg::TraceSink sink;
    if (trace) {
        sink = [](const std::string& line) {
            std::printf("%s\n", line.c_str());
            std::fflush(stdout);
        };
    }
    const mdlseg::SegmentResult result = mdlseg::run_segment(opts, sink);
    if (!out_dir.empty()) mdlseg::write_segment_outputs(out_dir, result);
    std::fputs(result.report_text.c_str(), stdout);
    return 0;
}

int cmd_simulate(const std::string& spec_path, int replicates, long long seed, bool fast,
                 const std::string& out_dir) {
    mdlseg::StudySpec spec = mdlseg::read_study_spec(spec_path);
    if (replicates > 0) spec.replicates = replicates;
    if (seed >= 0) spec.seed = static_cast<std::uint64_t>(seed);
    if (fast) {
        spec.ga.islands = 8;
        spec.ga.max_migrations = 15;
    }
    const auto progress = [](int done, int total) {
        std::fprintf(stderr, "\rreplicate %d/%d", done, total);
        if (done == total) std::fputc('\n', stderr);
        std::fflush(stderr);
    };
    const mdlseg::StudyResult result = mdlseg::run_study(spec, progress);
    const std::string csv = mdlseg::study_csv(result);
    if (out_dir.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        std::filesystem::create_directories(out_dir);
        mdlseg::write_text_file(out_dir + "/study.csv", csv);
        const auto nl = csv.rfind('\n', csv.size() - 2);
        std::fputs(csv.substr(nl == std::string::npos ? 0 : nl + 1).c_str(), stdout);
    }
    return 0;
}

int cmd_diff(const std::string& input, const std::vector<std::string>& ref_paths, int period,
             const std::string& out_file) {
    const mdlseg::StationSeries target = mdlseg::read_station_csv(input, period);
    std::vector<mdlseg::StationSeries> refs;
    refs.reserve(ref_paths.size());
    for (const std::string& p : ref_paths) refs.push_back(mdlseg::read_station_csv(p, period));
    const mdlseg::StationSeries diffed = mdlseg::difference_station(target, refs);
    if (out_file.empty())
        std::fputs(mdlseg::station_csv(diffed).c_str(), stdout);
    else
        mdlseg::write_station_csv(out_file, diffed);
    return 0;
}

int cmd_diagnose(const std::string& input, int period, int max_lag, const std::string& out_dir) {
    const mdlseg::StationSeries st = mdlseg::read_station_csv(input, period);
    if (max_lag <= 0) max_lag = std::min(60, st.series.length() - 1);
    const std::string acf = mdlseg::acf_csv(mdlseg::sample_acf(st.series.values, max_lag));
    const std::string gram = mdlseg::periodogram_csv(mdlseg::periodogram(st.series.values));
    if (out_dir.empty()) {
        std::fputs(acf.c_str(), stdout);
        std::fputc('\n', stdout);
        std::fputs(gram.c_str(), stdout);
    } else {
        std::filesystem::create_directories(out_dir);
        mdlseg::write_text_file(out_dir + "/acf.csv", acf);
        mdlseg::write_text_file(out_dir + "/periodogram.csv", gram);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-shift changepoint estimation for seasonal autocorrelated series"};
    app.require_subcommand(1);

    mdlseg::SegmentOptions seg_opts;
    std::vector<std::string> seg_replaces;
    std::string seg_variant = "standard";
    std::string seg_out;
    bool seg_trace = false;
    CLI::App* seg = app.add_subcommand("segment", "search one series for mean shifts");
    seg->add_option("--input", seg_opts.input, "station csv (year,season,value)")->required();
    seg->add_option("--period", seg_opts.period, "observations per cycle")->capture_default_str();
    seg->add_option("--ref", seg_opts.refs, "reference station csv; repeat to average several");
    seg->add_option("--mlmin", seg_opts.constraints.min_cycles_between,
                    "minimum cycles per regime")
        ->capture_default_str();
    seg->add_option("--pmax", seg_opts.constraints.max_par_order, "largest error-model order")
        ->capture_default_str();
    seg->add_option("--seed", seg_opts.seed, "random seed")->capture_default_str();
    seg->add_option("--variant", seg_variant, "standard | per-segment-trend | single-mu")
        ->capture_default_str();
    seg->add_option("--islands", seg_opts.islands, "island count")->capture_default_str();
    seg->add_option("--pop", seg_opts.population, "chromosomes per island")
        ->capture_default_str();
    seg->add_option("--out", seg_out, "directory for report, result and diagnostics files");
    seg->add_flag("--trace", seg_trace, "print one line per migration event");
    seg->add_option("--replace", seg_replaces,
                    "manual correction t=VALUE applied before differencing; repeatable");

    std::string sim_spec, sim_out;
    int sim_replicates = -1;
    long long sim_seed = -1;
    bool sim_fast = false;
    CLI::App* sim = app.add_subcommand("simulate", "replicated detection study");
    sim->add_option("--spec", sim_spec, "key=value study description file")->required();
    sim->add_option("--replicates", sim_replicates, "override the spec's replicate count");
    sim->add_option("--seed", sim_seed, "override the spec's seed");
    sim->add_flag("--fast", sim_fast, "small search profile (8 islands, 15 migrations)");
    sim->add_option("--out", sim_out, "directory for study.csv (default: print to stdout)");

    std::string diff_input, diff_out;
    std::vector<std::string> diff_refs;
    int diff_period = 12;
    CLI::App* diff = app.add_subcommand("diff", "target minus the mean of reference series");
    diff->add_option("--input", diff_input, "target station csv")->required();
    diff->add_option("--ref", diff_refs, "reference station csv; repeatable")->required();
    diff->add_option("--period", diff_period, "observations per cycle")->capture_default_str();
    diff->add_option("--out", diff_out, "output csv (default: stdout)");

    std::string diag_input, diag_out;
    int diag_period = 12;
    int diag_maxlag = 0;
    CLI::App* diag = app.add_subcommand("diagnose", "autocorrelations and periodogram");
    diag->add_option("--input", diag_input, "station csv")->required();
    diag->add_option("--period", diag_period, "observations per cycle")->capture_default_str();
    diag->add_option("--max-lag", diag_maxlag, "largest autocorrelation lag (default min(60, n-1))");
    diag->add_option("--out", diag_out, "directory for acf.csv and periodogram.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (seg->parsed()) return cmd_segment(seg_opts, seg_replaces, seg_variant, seg_out, seg_trace);
        if (sim->parsed()) return cmd_simulate(sim_spec, sim_replicates, sim_seed, sim_fast, sim_out);
        if (diff->parsed()) return cmd_diff(diff_input, diff_refs, diff_period, diff_out);
        if (diag->parsed()) return cmd_diagnose(diag_input, diag_period, diag_maxlag, diag_out);
    } catch (const mdlseg::FitError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const mdlseg::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const mdlseg::GapError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const mdlseg::NotFullCycles& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const mdlseg::NonFinite& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const mdlseg::EmptySeries& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const mdlseg::AlignmentError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const mdlseg::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
