#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "twisim/analytic.hpp"
#include "twisim/errors.hpp"
#include "twisim/experiments.hpp"
#include "twisim/twi.hpp"

using namespace twisim;

namespace {

std::filesystem::path fresh_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("twisim_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

SweepSpec lossy_spec(std::uint64_t replications, std::uint64_t seed) {
    SweepSpec spec = named_sweep(FigureId::fig3a);
    spec.comm.max_sr_attempts = 2;
    spec.comm.max_pt_attempts = 2;
    spec.replications = replications;
    spec.master_seed = seed;
    spec.w_grid = {0.0, 0.05, 0.1, 0.2, 0.3, 0.45, 0.6};
    return spec;
}

} // namespace

TEST_CASE("empirical cdf is a right-continuous step function") {
    EmpiricalCdf cdf({3.0, 1.0, 2.0, 2.0});
    CHECK(cdf(0.9) == 0.0);
    CHECK(cdf(1.0) == doctest::Approx(0.25));
    CHECK(cdf(1.5) == doctest::Approx(0.25));
    CHECK(cdf(2.0) == doctest::Approx(0.75));
    CHECK(cdf(2.5) == doctest::Approx(0.75));
    CHECK(cdf(3.0) == 1.0);
    CHECK(cdf(9.0) == 1.0);
    CHECK_THROWS_AS(EmpiricalCdf({}), DomainError);
}

TEST_CASE("ks_distance reference cases") {
    SUBCASE("samples at the cdf's own quantiles") {
        const int n = 1000;
        std::vector<double> samples;
        for (int k = 1; k <= n; ++k) samples.push_back(static_cast<double>(k) / n);
        EmpiricalCdf emp(std::move(samples));
        const double ks =
            ks_distance(emp, [](double x) { return std::clamp(x, 0.0, 1.0); });
        CHECK(ks <= 1.0 / n + 1e-12);
    }
    SUBCASE("constant-zero cdf is maximally distant") {
        EmpiricalCdf emp({0.5, 0.7});
        CHECK(ks_distance(emp, [](double) { return 0.0; }) == 1.0);
    }
    SUBCASE("large uniform sample stays under the KS band") {
        Rng rng(SeedSpec{81, 0});
        std::vector<double> samples(1000000);
        for (auto& s : samples) s = rng.uniform();
        EmpiricalCdf emp(std::move(samples));
        const double ks =
            ks_distance(emp, [](double x) { return std::clamp(x, 0.0, 1.0); });
        CHECK(ks < 0.002); // 1.36/sqrt(n) at 5%, with slack
    }
}

TEST_CASE("total_variation") {
    CHECK(total_variation(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}) ==
          0.0);
    CHECK(total_variation(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}) ==
          1.0);
    CHECK(total_variation(std::vector<double>{0.6, 0.4}, std::vector<double>{0.5, 0.5}) ==
          doctest::Approx(0.1));
    CHECK(total_variation(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}) ==
          doctest::Approx(0.5));
}

TEST_CASE("wilson interval brackets the point estimate") {
    const auto ci = wilson_ci(7, 10000);
    CHECK(ci.low > 0.0);
    CHECK(ci.low < 7e-4);
    CHECK(ci.high > 7e-4);
    CHECK(ci.high < 1.0);
    const auto zero = wilson_ci(0, 100);
    CHECK(zero.low == 0.0);
    CHECK(zero.high > 0.0);
}

TEST_CASE("empirical_psv basics") {
    std::vector<EventSummary> events;
    // four clean events with gaps 0.01..0.04, one partner-drop, one where the
    // reference sensor itself dropped (excluded), one with nothing delivered
    for (int k = 1; k <= 4; ++k)
        events.push_back(EventSummary{true, 2, 0.01 * k});
    events.push_back(EventSummary{true, 1, 0.0});
    events.push_back(EventSummary{false, 1, 0.0});
    events.push_back(EventSummary{false, 0, 0.0});

    SUBCASE("zero window violates everything delivered") {
        const auto s = empirical_psv(events, std::vector<double>{0.0});
        CHECK(s[0] == doctest::Approx(1.0));
    }
    SUBCASE("window beyond the largest gap leaves only the drop floor") {
        const auto s = empirical_psv(events, std::vector<double>{0.05});
        CHECK(s[0] == doctest::Approx(0.2)); // 1 of 5 delivered events
    }
    SUBCASE("no drops and exhausted gaps reach zero") {
        std::vector<EventSummary> clean(events.begin(), events.begin() + 4);
        const auto s = empirical_psv(clean, std::vector<double>{0.05});
        CHECK(s[0] == 0.0);
    }
    SUBCASE("a gap equal to the window does not violate") {
        const auto s = empirical_psv(events, std::vector<double>{0.04});
        CHECK(s[0] == doctest::Approx(0.2));
    }
    SUBCASE("monotone nonincreasing in the window") {
        std::vector<double> grid;
        for (int i = 0; i <= 50; ++i) grid.push_back(0.001 * i);
        const auto s = empirical_psv(events, grid);
        for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] <= s[i - 1]);
    }
}

TEST_CASE("monte carlo with a single replication is the replication itself") {
    SweepSpec spec = lossy_spec(1, 7);
    const auto mc = run_monte_carlo(spec);
    CHECK(mc.replications == 1);
    const auto outcomes =
        run_replication(spec.scenario, spec.comm, derive_links(spec.sensors, spec.comm),
                        spec.mode, SeedSpec{7, 0}, spec.sim_flags);
    const auto gap = pdv(outcomes);
    if (gap) {
        REQUIRE(mc.pdv_samples.size() == 1);
        CHECK(mc.pdv_samples[0] == *gap);
    } else {
        CHECK(mc.pdv_samples.empty());
    }
}

TEST_CASE("monte carlo aggregates are independent of the thread count") {
    SweepSpec one = lossy_spec(50000, 11);
    one.threads = 1;
    SweepSpec many = lossy_spec(50000, 11);
    many.threads = 4;
    const auto a = run_monte_carlo(one);
    const auto b = run_monte_carlo(many);
    CHECK(a.with_delivery == b.with_delivery);
    CHECK(a.with_two_survivors == b.with_two_survivors);
    CHECK(a.drop_counts == b.drop_counts);
    REQUIRE(a.pdv_samples.size() == b.pdv_samples.size());
    CHECK(a.pdv_samples == b.pdv_samples);
    for (std::size_t w = 0; w < a.per_window.size(); ++w) {
        CHECK(a.per_window[w].violations == b.per_window[w].violations);
        CHECK(a.per_window[w].latency_sum == b.per_window[w].latency_sum);
        CHECK(a.per_window[w].latency_sumsq == b.per_window[w].latency_sumsq);
    }
}

TEST_CASE("monte carlo window statistics match the buffer mechanism") {
    SweepSpec spec = lossy_spec(20000, 13);
    const auto mc = run_monte_carlo(spec);
    const auto links = derive_links(spec.sensors, spec.comm);

    std::vector<std::uint64_t> violations(spec.w_grid.size(), 0);
    std::vector<double> latency_sum(spec.w_grid.size(), 0.0);
    std::uint64_t with_delivery = 0;
    std::uint64_t with_anchor = 0;
    for (std::uint64_t r = 0; r < spec.replications; ++r) {
        const auto outcomes = run_replication(spec.scenario, spec.comm, links,
                                              spec.mode, SeedSpec{13, r}, spec.sim_flags);
        bool any = false;
        for (const auto& o : outcomes) any = any || !o.dropped;
        if (!any) continue;
        ++with_delivery;
        const bool anchored = !outcomes[0].dropped;
        if (anchored) ++with_anchor;
        for (std::size_t w = 0; w < spec.w_grid.size(); ++w) {
            if (spec.w_grid[w] <= 0.0) {
                // the buffer needs W > 0; W = 0 is the degenerate edge the
                // summary predicate handles directly
                continue;
            }
            const auto res = ingest(outcomes, spec.w_grid[w], 2, spec.scenario.t0);
            if (anchored) violations[w] += res.violation;
            latency_sum[w] += *res.latency_s;
        }
    }
    CHECK(with_delivery == mc.with_delivery);
    CHECK(with_anchor == mc.with_anchor_delivered);
    for (std::size_t w = 0; w < spec.w_grid.size(); ++w) {
        if (spec.w_grid[w] <= 0.0) continue;
        CHECK(violations[w] == mc.per_window[w].violations);
        CHECK(latency_sum[w] ==
              doctest::Approx(mc.per_window[w].latency_sum).epsilon(1e-12));
    }
}

TEST_CASE("sigma-hat dominates the partner drop fraction and tracks the floor") {
    SweepSpec spec = lossy_spec(200000, 19);
    // a window safely beyond any possible gap: alignment spread plus the
    // worst attempt-count difference
    spec.w_grid.push_back(1.0);
    const auto mc = run_monte_carlo(spec);

    // partner drops seen by the included (sensor-1-delivered) events are a
    // hard lower bound at every window
    const auto links = derive_links(spec.sensors, spec.comm);
    const double rho2 = links[1].rho;
    for (std::size_t w = 0; w < spec.w_grid.size(); ++w) {
        if (w > 0) CHECK(mc.sigma_hat(w) <= mc.sigma_hat(w - 1));
    }

    // beyond every gap the estimator sits on the partner drop-rate floor
    const double floor_hat = mc.sigma_hat(spec.w_grid.size() - 1);
    const double sigma =
        std::sqrt(rho2 * (1.0 - rho2) /
                  static_cast<double>(mc.with_anchor_delivered));
    CHECK(floor_hat >= rho2 - 4.0 * sigma);
    CHECK(floor_hat <= rho2 + 4.0 * sigma);
}

TEST_CASE("large windows settle on the analytic drop-rate floor") {
    // the regime where the floor is visible on a log axis
    SweepSpec spec = named_sweep(FigureId::fig4a);
    spec.replications = 200000;
    spec.master_seed = 29;
    spec.keep_pdv_samples = false;
    spec.w_grid = {0.6}; // beyond the largest reachable gap (0.57)
    const auto mc = run_monte_carlo(spec);

    const auto links = derive_links(spec.sensors, spec.comm);
    const double rho2 = links[1].rho; // ~4.5e-3 at M=N=5, gamma=4
    const double sigma =
        std::sqrt(rho2 * (1.0 - rho2) /
                  static_cast<double>(mc.with_anchor_delivered));
    CHECK(std::abs(mc.sigma_hat(0) - rho2) < 4.0 * sigma);
}

TEST_CASE("mean windowed gap stays below the window") {
    SweepSpec spec = lossy_spec(50000, 23);
    const auto links = derive_links(spec.sensors, spec.comm);
    const double w = 0.2;
    double acc = 0.0;
    std::uint64_t count = 0, below = 0;
    for (std::uint64_t r = 0; r < spec.replications; ++r) {
        const auto outcomes = run_replication(spec.scenario, spec.comm, links,
                                              spec.mode, SeedSpec{23, r}, spec.sim_flags);
        const auto gap = pdv(outcomes);
        bool any = false;
        for (const auto& o : outcomes) any = any || !o.dropped;
        if (!any) continue;
        ++count;
        const double g = gap ? *gap : std::numeric_limits<double>::infinity();
        acc += std::min(g, w);
        if (g < w) ++below;
    }
    CHECK(below > 0);
    CHECK(acc / static_cast<double>(count) < w);
}

TEST_CASE("named sweeps carry the caption parameters") {
    const auto f3a = named_sweep(FigureId::fig3a);
    CHECK(f3a.scenario.d_max == 100.0);
    CHECK(f3a.scenario.v == 3.0e8);
    CHECK(f3a.scenario.c_min == doctest::Approx(0.010));
    CHECK(f3a.scenario.c_max == doctest::Approx(0.500));
    CHECK(f3a.comm.frame_s == doctest::Approx(0.010));
    CHECK(f3a.comm.max_sr_attempts == 5);
    CHECK(f3a.comm.max_pt_attempts == 5);
    CHECK(*f3a.comm.gamma_th_override == 1.0);
    CHECK(*f3a.sensors[1].gamma_override == 1.0);

    const auto f3b = named_sweep(FigureId::fig3b);
    CHECK(f3b.scenario.v == 300.0);
    CHECK(f3b.scenario.c_max == doctest::Approx(0.100));

    const auto f4b = named_sweep(FigureId::fig4b);
    CHECK(f4b.scenario.c_min == 0.0);
    CHECK(f4b.scenario.c_max == doctest::Approx(0.010));
    CHECK(*f4b.sensors[1].gamma_override == 4.0);

    const auto f5a = named_sweep(FigureId::fig5a);
    CHECK(f5a.comm.max_sr_attempts == 9);
    CHECK(f5a.comm.max_pt_attempts == 7);
    CHECK(*f5a.target_sigma == doctest::Approx(1e-3));

    CHECK(figure_from_name("fig4a").has_value());
    CHECK(!figure_from_name("fig9z").has_value());
}

TEST_CASE("reproduce fig3a writes the documented files") {
    const auto dir = fresh_dir("fig3a");
    ReproduceOptions opt;
    opt.replications = 20000;
    opt.seed = 3;
    opt.threads = 2;
    reproduce_figure(FigureId::fig3a, dir, opt);

    const std::string pdv_csv = slurp(dir / "pdv_fig3a.csv");
    CHECK(pdv_csv.rfind("t_s,cdf_analytic,cdf_empirical\n", 0) == 0);
    const std::string summary = slurp(dir / "summary_fig3a.csv");
    CHECK(summary.find("ks_distance,") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "plot_fig3a.gp"));
    CHECK(std::filesystem::exists(dir / "config_fig3a.txt"));
}

TEST_CASE("reproduce fig4a writes one psv table per comm setup") {
    const auto dir = fresh_dir("fig4a");
    ReproduceOptions opt;
    opt.replications = 5000;
    opt.seed = 5;
    opt.threads = 2;
    reproduce_figure(FigureId::fig4a, dir, opt);

    for (const std::string suffix : {"m1_n1", "m3_n3", "m5_n5", "m9_n7"}) {
        const std::string text = slurp(dir / ("psv_fig4a_" + suffix + ".csv"));
        CHECK(text.rfind(
                  "W_s,sigma_analytic,sigma_frame_sampled,sigma_empirical,ci_low,ci_high\n",
                  0) == 0);
    }
    CHECK(std::filesystem::exists(dir / "plot_fig4a.gp"));
}

TEST_CASE("reproduce fig5b writes the design table") {
    const auto dir = fresh_dir("fig5b");
    ReproduceOptions opt;
    opt.replications = 2000;
    opt.seed = 9;
    opt.threads = 2;
    reproduce_figure(FigureId::fig5b, dir, opt);

    const std::string table = slurp(dir / "twi_design_fig5b.csv");
    CHECK(table.rfind("setup_id,W_star_s,W_frame_s,mean_latency_s,std_latency_s\n", 0) ==
          0);
    // header + five setups
    CHECK(std::count(table.begin(), table.end(), '\n') == 6);
    CHECK(std::filesystem::exists(dir / "setups_fig5b.csv"));
}
