#ifndef TWISIM_ANALYTIC_HPP
#define TWISIM_ANALYTIC_HPP

#include <functional>
#include <string>
#include <vector>

#include "twisim/params.hpp"

namespace twisim {

enum class DistKind { comp, prop, point_mass, numeric };

// Distribution of the delay gap between two status updates, with closed-form
// pdf/cdf on a bounded support [lo, hi] and quantile inversion by bisection.
class ClosedFormDist {
public:
    DistKind kind() const { return kind_; }
    const std::string& label() const { return label_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    double pdf(double t) const;
    double cdf(double t) const;

    // Smallest t with cdf(t) >= p. Bisection; terminates at 1e-12 relative
    // interval width on the support.
    double quantile(double p) const;

    // Gap when the computation delay dominates: |C1 - C2| with C uniform on
    // [c_min, c_max]. Support [0, c_max - c_min].
    static ClosedFormDist comp_gap(double c_min, double c_max);

    // Degenerate c_min == c_max: unit mass at 0, cdf(t) = 1 for t >= 0.
    static ClosedFormDist comp_point_mass();

    // Gap when the propagation delay dominates: |D1 - D2| / v with D drawn
    // from the radial density 2d/d_max^2. Support [0, d_max / v].
    static ClosedFormDist prop_gap(double d_max, double v);

    // Tabulated pdf/cdf on a uniform grid over [lo, hi]; evaluation by
    // linear interpolation.
    static ClosedFormDist tabulated(double lo, double hi, std::vector<double> pdf,
                                    std::vector<double> cdf, std::string label);

private:
    ClosedFormDist() = default;

    DistKind kind_ = DistKind::comp;
    double lo_ = 0.0;
    double hi_ = 0.0;
    double p1_ = 0.0; // comp: a = c_max - c_min; prop: d_max
    double p2_ = 0.0; // prop: v
    std::vector<double> grid_pdf_;
    std::vector<double> grid_cdf_;
    std::string label_;
};

// Radial distance density 2d/d_max^2 on [0, d_max], 0 outside.
double distance_pdf(double d, double d_max);

// Density of the event action time t0 + D/v: 2v^2(t-t0)/d_max^2 on
// [t0, t0 + d_max/v], 0 outside.
double action_time_pdf(double t, double t0, double v, double d_max);

// Convenience factories resolving the scenario's degenerate-bounds flag.
ClosedFormDist comp_gap_dist(const ScenarioConfig& scenario);
ClosedFormDist prop_gap_dist(const ScenarioConfig& scenario);

// Attempt-count law conditioned on success within max_attempts:
// pmf(k) = fail^{k-1} (1-fail) / (1 - fail^max), k in 1..max_attempts.
struct TruncGeomPmf {
    double fail = 0.0;
    int max_attempts = 1;

    double operator()(int k) const;
    double mean() const;
};

double trunc_geom_pmf(double fail, int k, int max_attempts);

// Law of the total access delay T_SR + T_PT on {min_frames*T_f, ...}:
// exact discrete convolution of the two truncated-geometric attempt laws.
struct AccessDelayPmf {
    double frame_s = 0.0;
    int min_frames = 2; // both first attempts succeed
    std::vector<double> prob; // prob[i] = P{delay = (min_frames + i) * frame_s}

    double at_frames(int k) const; // P{delay = k * frame_s}
    double total() const;
};

AccessDelayPmf access_delay_pmf(double zeta, double epsilon, int max_sr_attempts,
                                int max_pt_attempts, double frame_s);

// sigma(W) = 1 - (1 - rho2) * F_gap(W), the probability that two updates from
// one event are split across deliveries when the window is W.
double psv(double window_s, double rho2, const ClosedFormDist& gap);

// Curve object bundling the drop rate with the gap CDF in use.
struct PsvCurve {
    double rho2 = 0.0;
    ClosedFormDist gap;

    double operator()(double window_s) const { return psv(window_s, rho2, gap); }
};

struct TwiDesign {
    double w_star = 0.0;         // exact window meeting the target
    double w_frame = 0.0;        // smallest frame multiple meeting it
    double sigma_at_w_star = 0.0;
    double sigma_at_w_frame = 0.0;
};

// Invert sigma(W) = target. Closed-form root for the comp gap, bisection on
// the support otherwise. Throws InfeasibleError if target < rho2 (the floor),
// DomainError if target >= 1 or < 0.
TwiDesign design_twi(double target_sigma, double rho2, const ClosedFormDist& gap,
                     double frame_s);

// Numerical law of |X1 - X2| for X ~ pdf on [lo, hi], by trapezoid quadrature
// of the cdf-method integrals on a uniform grid. Independent oracle for the
// closed-form gap distributions. Throws DomainError if the input pdf does not
// integrate to 1 within 1e-6.
ClosedFormDist abs_diff_oracle(const std::function<double(double)>& pdf, double lo,
                               double hi, int grid_n);

} // namespace twisim

#endif
