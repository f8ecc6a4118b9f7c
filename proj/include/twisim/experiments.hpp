#ifndef TWISIM_EXPERIMENTS_HPP
#define TWISIM_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "twisim/analytic.hpp"
#include "twisim/params.hpp"
#include "twisim/sim.hpp"

namespace twisim {

// Right-continuous step function over a sorted sample: cdf(x) = #{s <= x}/n.
class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::vector<double> samples);

    double operator()(double x) const;
    std::size_t size() const { return samples_.size(); }
    const std::vector<double>& sorted() const { return samples_; }

private:
    std::vector<double> samples_;
};

// sup over sample points of |emp - cdf|, both step sides.
double ks_distance(const EmpiricalCdf& emp, const std::function<double(double)>& cdf);

// 0.5 * sum |p_i - q_i|; the shorter vector is zero-padded.
double total_variation(std::span<const double> p, std::span<const double> q);

struct BinomialCi {
    double low = 0.0;
    double high = 1.0;
};

// Wilson score interval (default z for 95%).
BinomialCi wilson_ci(std::uint64_t successes, std::uint64_t trials,
                     double z = 1.959963984540054);

// Per-event outcome reduced to what the window statistics need: whether the
// reference sensor (sensor 1) delivered, how many packets survived, and the
// gap between the first two received.
struct EventSummary {
    bool anchor_delivered = false;
    std::uint32_t survivors = 0;
    double gap_s = std::numeric_limits<double>::infinity();
};

// The violation indicator for an included event at window W: no second
// packet arrived at all, or the first two received packets are more than W
// apart (a gap of exactly W stays inside the window). Packets beyond the
// first two received are ignored.
bool violates(const EventSummary& ev, double window_s);

// Violation fraction per window. The estimator is anchored on the reference
// sensor: only events where sensor 1 delivered enter numerator and
// denominator, which makes it estimate 1 - (1-rho2) F(W) regardless of the
// reference sensor's own loss rate.
std::vector<double> empirical_psv(std::span<const EventSummary> events,
                                  std::span<const double> w_grid);

struct SweepSpec {
    ScenarioConfig scenario;
    CommConfig comm;
    std::vector<SensorLink> sensors;
    ChannelMode mode = ChannelMode::statistical;
    std::uint64_t replications = 1'000'000;
    std::uint64_t master_seed = 1;
    std::vector<double> w_grid; // seconds
    std::optional<double> target_sigma;
    unsigned threads = 0; // 0 = hardware concurrency
    bool keep_pdv_samples = true;
    SimFlags sim_flags{};
};

struct WindowStats {
    std::uint64_t violations = 0;
    double latency_sum = 0.0;
    double latency_sumsq = 0.0;
};

struct MonteCarloResult {
    std::uint64_t replications = 0;
    std::uint64_t with_delivery = 0;       // >= 1 survivor (latency denominator)
    std::uint64_t with_anchor_delivered = 0; // sensor 1 delivered (psv denominator)
    std::uint64_t with_two_survivors = 0;
    std::vector<std::uint64_t> drop_counts; // per sensor
    std::vector<double> pdv_samples;        // replication order, survivors >= 2 only
    std::vector<double> w_grid;
    std::vector<WindowStats> per_window;

    double sigma_hat(std::size_t w_index) const;
    double mean_latency(std::size_t w_index) const;
    double std_latency(std::size_t w_index) const;
};

// Seed-indexed replications aggregated over a fixed chunk grid, so results
// are identical for any worker-thread count.
MonteCarloResult run_monte_carlo(const SweepSpec& spec);

enum class FigureId { fig3a, fig3b, fig4a, fig4b, fig5a, fig5b };

std::optional<FigureId> figure_from_name(std::string_view name);
std::string figure_name(FigureId id);
const std::vector<std::string>& figure_names();

// Caption parameters for the named scenarios.
SweepSpec named_sweep(FigureId id);

struct ReproduceOptions {
    std::optional<std::uint64_t> replications;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

// Writes the figure's CSV data files, a config echo per run, and a
// gnuplot-compatible plot script into out_dir.
void reproduce_figure(FigureId id, const std::filesystem::path& out_dir,
                      const ReproduceOptions& options = {});

// Locale-independent CSV number formats: 9 significant digits for data,
// 17 for values meant to round-trip exactly.
std::string format_g9(double value);
std::string format_g17(double value);

// `t_s,cdf_analytic,cdf_empirical` at evenly spaced quantile indices of the
// sorted sample (at most max_rows rows).
void write_pdv_cdf_csv(const std::filesystem::path& path,
                       const std::vector<double>& sorted_pdv,
                       const ClosedFormDist& gap, std::size_t max_rows = 1001);

// `W_s,sigma_analytic,sigma_frame_sampled,sigma_empirical,ci_low,ci_high`.
// The frame-sampled column is the analytic curve at the largest frame
// multiple within W (the achievable frame-aligned window).
void write_psv_csv(const std::filesystem::path& path, const MonteCarloResult& mc,
                   double rho2, const ClosedFormDist& gap, double frame_s);

// Frame-fifth steps from 0 to 120% of the gap support, frame-aligned top.
std::vector<double> default_window_grid(const ClosedFormDist& gap, double frame_s);

} // namespace twisim

#endif
