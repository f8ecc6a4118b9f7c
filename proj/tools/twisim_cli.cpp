#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twisim/analytic.hpp"
#include "twisim/config.hpp"
#include "twisim/errors.hpp"
#include "twisim/experiments.hpp"
#include "twisim/twi.hpp"

namespace {

using namespace twisim;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;
constexpr int kExitInfeasible = 4;
constexpr int kExitIo = 5;

struct GridSpec {
    double lo = 0.0, hi = 0.0, step = 0.0;
};

GridSpec parse_grid(const std::string& text) {
    GridSpec g;
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw ConfigError("grid must be lo:hi:step, got '" + text + "'");
    try {
        g.lo = std::stod(text.substr(0, c1));
        g.hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        g.step = std::stod(text.substr(c2 + 1));
    } catch (const std::exception&) {
        throw ConfigError("grid must be numeric lo:hi:step, got '" + text + "'");
    }
    if (!(g.step > 0.0) || g.hi < g.lo)
        throw ConfigError("grid needs step > 0 and hi >= lo");
    return g;
}

std::vector<double> expand_grid(const GridSpec& g) {
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((g.hi - g.lo) / g.step + 1e-9));
    out.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out.push_back(g.lo + static_cast<double>(i) * g.step);
    return out;
}

std::filesystem::path resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("TWISIM_OUT_DIR"); env && *env) return env;
    return ".";
}

unsigned resolve_threads(unsigned flag_value) {
    if (flag_value != 0) return flag_value;
    if (const char* env = std::getenv("TWISIM_THREADS"); env && *env) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 0; // hardware concurrency
}

ClosedFormDist pick_gap(const ParsedConfig& cfg, const std::string& dist) {
    if (dist == "comp") return comp_gap_dist(cfg.scenario);
    if (dist == "prop") return prop_gap_dist(cfg.scenario);
    throw ConfigError("--dist must be comp or prop");
}

double rho2_of(const ParsedConfig& cfg) {
    if (cfg.scenario.sensor_count < 2)
        throw DomainError("violation probability needs at least 2 sensors");
    return derive_link(cfg.sensors[1], cfg.comm).rho;
}

std::ofstream open_file(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

int cmd_analytic(const std::string& config_path, const std::string& dist,
                 const std::string& query, std::optional<double> at,
                 const std::string& grid, const std::string& out_path) {
    const ParsedConfig cfg = parse_config_file(config_path);
    const ClosedFormDist gap = pick_gap(cfg, dist);

    std::vector<double> points;
    if (at) points.push_back(*at);
    if (!grid.empty()) {
        const auto g = expand_grid(parse_grid(grid));
        points.insert(points.end(), g.begin(), g.end());
    }
    if (points.empty())
        throw ConfigError("analytic: provide --at or --grid");

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_file(out_path);
        out = &file;
    }

    if (query == "cdf") {
        *out << "t_s,cdf\n";
        for (double t : points) *out << format_g9(t) << ',' << format_g9(gap.cdf(t)) << "\n";
    } else if (query == "pdf") {
        *out << "t_s,pdf\n";
        for (double t : points) *out << format_g9(t) << ',' << format_g9(gap.pdf(t)) << "\n";
    } else if (query == "psv") {
        const PsvCurve curve{rho2_of(cfg), gap};
        *out << "W_s,sigma\n";
        for (double w : points) *out << format_g9(w) << ',' << format_g9(curve(w)) << "\n";
    } else {
        throw ConfigError("--query must be cdf, pdf or psv");
    }
    return kExitOk;
}

int cmd_design_twi(const std::string& config_path, double target_sigma,
                   const std::string& dist, const std::string& out_dir_flag) {
    const ParsedConfig cfg = parse_config_file(config_path);
    const ClosedFormDist gap = pick_gap(cfg, dist);
    const double rho2 = rho2_of(cfg);
    const TwiDesign d = design_twi(target_sigma, rho2, gap, cfg.comm.frame_s);

    std::cout << "rho2 = " << format_g9(rho2) << "\n";
    std::cout << "W_star_s = " << format_g9(d.w_star) << "\n";
    std::cout << "W_frame_s = " << format_g9(d.w_frame) << "\n";
    std::cout << "sigma_at_W_star = " << format_g9(d.sigma_at_w_star) << "\n";
    std::cout << "sigma_at_W_frame = " << format_g9(d.sigma_at_w_frame) << "\n";

    if (!out_dir_flag.empty() || std::getenv("TWISIM_OUT_DIR")) {
        const auto dir = resolve_out_dir(out_dir_flag);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
        auto out = open_file(dir / "twi_design.csv");
        out << "target_sigma,rho2,W_star_s,W_frame_s,sigma_at_W_star,sigma_at_W_frame\n";
        out << format_g9(target_sigma) << ',' << format_g9(rho2) << ','
            << format_g9(d.w_star) << ',' << format_g9(d.w_frame) << ','
            << format_g9(d.sigma_at_w_star) << ',' << format_g9(d.sigma_at_w_frame)
            << "\n";
        write_config_echo(dir / "config_echo.txt", cfg);
    }
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, std::uint64_t replications,
                 std::uint64_t seed, const std::string& mode_name,
                 const std::string& dist, const std::string& w_grid_text,
                 const std::string& out_dir_flag, unsigned threads,
                 const std::string& trace_path) {
    const ParsedConfig cfg = parse_config_file(config_path);

    ChannelMode mode;
    if (mode_name == "statistical")
        mode = ChannelMode::statistical;
    else if (mode_name == "signal_level")
        mode = ChannelMode::signal_level;
    else
        throw ConfigError("--mode must be statistical or signal_level");

    const ClosedFormDist gap = pick_gap(cfg, dist);

    SweepSpec spec;
    spec.scenario = cfg.scenario;
    spec.comm = cfg.comm;
    spec.sensors = cfg.sensors;
    spec.sim_flags = cfg.sim_flags;
    spec.mode = mode;
    spec.replications = replications;
    spec.master_seed = seed;
    spec.threads = resolve_threads(threads);
    spec.w_grid = w_grid_text.empty() ? default_window_grid(gap, cfg.comm.frame_s)
                                      : expand_grid(parse_grid(w_grid_text));

    const auto dir = resolve_out_dir(out_dir_flag);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    write_config_echo(dir / "config_echo.txt", cfg);

    MonteCarloResult mc = run_monte_carlo(spec);
    const auto links = derive_links(cfg.sensors, cfg.comm);
    const double rho2 = cfg.scenario.sensor_count >= 2 ? links[1].rho : links[0].rho;

    write_psv_csv(dir / "psv.csv", mc, rho2, gap, cfg.comm.frame_s);

    {
        auto out = open_file(dir / "latency.csv");
        out << "W_s,mean_latency_s,std_latency_s,count\n";
        for (std::size_t w = 0; w < mc.w_grid.size(); ++w) {
            out << format_g9(mc.w_grid[w]) << ',' << format_g9(mc.mean_latency(w)) << ','
                << format_g9(mc.std_latency(w)) << ',' << mc.with_delivery << "\n";
        }
    }

    double ks = std::numeric_limits<double>::quiet_NaN();
    if (!mc.pdv_samples.empty()) {
        EmpiricalCdf emp(std::move(mc.pdv_samples));
        ks = ks_distance(emp, [&](double t) { return gap.cdf(t); });
        write_pdv_cdf_csv(dir / "pdv_cdf.csv", emp.sorted(), gap);
    }

    {
        auto out = open_file(dir / "summary.csv");
        out << "key,value\n";
        out << "replications," << mc.replications << "\n";
        out << "master_seed," << seed << "\n";
        out << "mode," << mode_name << "\n";
        out << "dist," << gap.label() << "\n";
        out << "with_delivery," << mc.with_delivery << "\n";
        out << "with_anchor_delivered," << mc.with_anchor_delivered << "\n";
        out << "with_two_survivors," << mc.with_two_survivors << "\n";
        out << "ks_distance," << format_g9(ks) << "\n";
        out << "violation_convention,anchored-on-sensor1-delivery;"
               "first-two-received-gap-or-partner-drop;gap-equal-W-inside\n";
        for (std::size_t i = 0; i < links.size(); ++i) {
            const auto tag = "sensor" + std::to_string(i + 1);
            out << tag << "_gamma," << format_g9(links[i].gamma) << "\n";
            out << tag << "_zeta," << format_g9(links[i].zeta) << "\n";
            out << tag << "_epsilon," << format_g9(links[i].epsilon) << "\n";
            out << tag << "_rho_analytic," << format_g9(links[i].rho) << "\n";
            out << tag << "_sr_false_alarm_rate,"
                << format_g9(sr_false_alarm_rate(links[i].eta)) << "\n";
            out << tag << "_drops," << mc.drop_counts[i] << "\n";
            out << tag << "_drop_rate_empirical,"
                << format_g9(static_cast<double>(mc.drop_counts[i]) /
                             static_cast<double>(mc.replications))
                << "\n";
        }
    }

    if (!trace_path.empty()) {
        std::vector<TraceRow> trace;
        run_replication(cfg.scenario, cfg.comm, links, mode, SeedSpec{seed, 0},
                        cfg.sim_flags, &trace);
        auto out = open_file(trace_path);
        out << "frame,sensor_id,event\n";
        for (const auto& row : trace)
            out << row.frame << ',' << row.sensor_id << ',' << row.event << "\n";
    }

    std::cout << "wrote " << (dir / "summary.csv").string() << "\n";
    return kExitOk;
}

int cmd_reproduce(const std::string& name, const std::string& out_dir_flag,
                  std::optional<std::uint64_t> replications,
                  std::optional<std::uint64_t> seed, unsigned threads) {
    const auto id = figure_from_name(name);
    if (!id) {
        std::string valid;
        for (const auto& n : figure_names()) valid += " " + n;
        throw ConfigError("unknown figure '" + name + "'; valid names:" + valid);
    }
    ReproduceOptions opt;
    opt.replications = replications;
    opt.seed = seed;
    opt.threads = resolve_threads(threads);
    reproduce_figure(*id, resolve_out_dir(out_dir_flag), opt);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal-window-of-integration designer and link-level simulator "
                 "for event-driven sensor status updates"};
    app.require_subcommand(1);

    std::string config_path, dist = "comp", query = "cdf", grid, out_path, out_dir;
    std::string mode_name = "statistical", w_grid_text, trace_path, figure;
    std::optional<double> at;
    double target_sigma = 1e-3;
    std::uint64_t replications = 1'000'000, seed = 1;
    std::optional<std::uint64_t> rep_override, seed_override;
    unsigned threads = 0;

    auto* analytic = app.add_subcommand("analytic", "evaluate closed-form curves");
    analytic->add_option("--config", config_path, "config file")->required();
    analytic->add_option("--dist", dist, "comp|prop");
    analytic->add_option("--query", query, "cdf|pdf|psv");
    analytic->add_option("--at", at, "single evaluation point (s)");
    analytic->add_option("--grid", grid, "lo:hi:step (s)");
    analytic->add_option("--out", out_path, "write CSV here instead of stdout");

    auto* design = app.add_subcommand("design-twi", "invert the violation curve");
    design->add_option("--config", config_path, "config file")->required();
    design->add_option("--target-sigma", target_sigma, "target violation probability")
        ->required();
    design->add_option("--dist", dist, "comp|prop");
    design->add_option("--out-dir", out_dir, "also write twi_design.csv here");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo over one scenario");
    simulate->add_option("--config", config_path, "config file")->required();
    simulate->add_option("--replications", replications, "number of events");
    simulate->add_option("--seed", seed, "master seed");
    simulate->add_option("--mode", mode_name, "statistical|signal_level");
    simulate->add_option("--dist", dist, "analytic overlay: comp|prop");
    simulate->add_option("--w-grid", w_grid_text, "lo:hi:step (s), default from support");
    simulate->add_option("--out-dir", out_dir, "output directory");
    simulate->add_option("--threads", threads, "worker threads (0 = hardware)");
    simulate->add_option("--trace-file", trace_path, "frame trace of replication 0");

    auto* reproduce = app.add_subcommand("reproduce", "rebuild a named figure dataset");
    reproduce->add_option("name", figure, "figure name")->required();
    reproduce->add_option("--out-dir", out_dir, "output directory");
    reproduce->add_option("--replications", rep_override, "override replication count");
    reproduce->add_option("--seed", seed_override, "override master seed");
    reproduce->add_option("--threads", threads, "worker threads (0 = hardware)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (*analytic) return cmd_analytic(config_path, dist, query, at, grid, out_path);
        if (*design) return cmd_design_twi(config_path, target_sigma, dist, out_dir);
        if (*simulate)
            return cmd_simulate(config_path, replications, seed, mode_name, dist,
                                w_grid_text, out_dir, threads, trace_path);
        if (*reproduce)
            return cmd_reproduce(figure, out_dir, rep_override, seed_override, threads);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitOk;
}
