#include "twisim/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "twisim/errors.hpp"

namespace twisim {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

double lerp_on_grid(const std::vector<double>& ys, double lo, double hi, double t) {
    const std::size_t n = ys.size() - 1; // interval count
    const double h = (hi - lo) / static_cast<double>(n);
    const double pos = (t - lo) / h;
    const auto i = static_cast<std::size_t>(std::min(pos, static_cast<double>(n - 1)));
    const double frac = pos - static_cast<double>(i);
    return ys[i] + (ys[i + 1] - ys[i]) * frac;
}

} // namespace

double ClosedFormDist::pdf(double t) const {
    if (kind_ == DistKind::point_mass) return 0.0; // unit mass at 0 lives in cdf
    if (t < lo_ || t > hi_) return 0.0;
    switch (kind_) {
        case DistKind::comp: {
            const double a = p1_;
            return 2.0 * (a - t) / (a * a);
        }
        case DistKind::prop: {
            const double d = p1_, v = p2_;
            const double c = 2.0 * std::pow(v, 4) / (3.0 * std::pow(d, 4));
            return c * (2.0 * t * t * t - 6.0 * d * d / (v * v) * t +
                        4.0 * d * d * d / (v * v * v));
        }
        case DistKind::numeric:
            return lerp_on_grid(grid_pdf_, lo_, hi_, t);
        default:
            return 0.0;
    }
}

double ClosedFormDist::cdf(double t) const {
    if (kind_ == DistKind::point_mass) return t >= 0.0 ? 1.0 : 0.0;
    if (t < lo_) return 0.0;
    if (t >= hi_) return 1.0;
    switch (kind_) {
        case DistKind::comp: {
            const double a = p1_;
            return (2.0 * a * t - t * t) / (a * a);
        }
        case DistKind::prop: {
            const double d = p1_, v = p2_;
            const double c = 2.0 * std::pow(v, 4) / (3.0 * std::pow(d, 4));
            return c * (0.5 * t * t * t * t - 3.0 * d * d / (v * v) * t * t +
                        4.0 * d * d * d / (v * v * v) * t);
        }
        case DistKind::numeric:
            return std::min(1.0, lerp_on_grid(grid_cdf_, lo_, hi_, t));
        default:
            return 0.0;
    }
}

double ClosedFormDist::quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p must be in [0,1]");
    if (kind_ == DistKind::point_mass) return 0.0;
    if (p <= 0.0) return lo_;
    if (p >= 1.0) return hi_;
    double a = lo_, b = hi_;
    const double width_tol = 1e-12 * (hi_ - lo_);
    while (b - a > width_tol) {
        const double mid = 0.5 * (a + b);
        if (cdf(mid) >= p)
            b = mid;
        else
            a = mid;
    }
    return 0.5 * (a + b);
}

ClosedFormDist ClosedFormDist::comp_gap(double c_min, double c_max) {
    if (!(c_min >= 0.0) || !(c_max > c_min))
        throw DomainError("comp_gap: need 0 <= c_min < c_max");
    ClosedFormDist d;
    d.kind_ = DistKind::comp;
    d.lo_ = 0.0;
    d.hi_ = c_max - c_min;
    d.p1_ = c_max - c_min;
    d.label_ = "comp-gap";
    return d;
}

ClosedFormDist ClosedFormDist::comp_point_mass() {
    ClosedFormDist d;
    d.kind_ = DistKind::point_mass;
    d.lo_ = 0.0;
    d.hi_ = 0.0;
    d.label_ = "comp-gap-degenerate";
    return d;
}

ClosedFormDist ClosedFormDist::prop_gap(double d_max, double v) {
    if (!(d_max > 0.0)) throw DomainError("prop_gap: d_max must be > 0");
    if (!(v > 0.0)) throw DomainError("prop_gap: v must be > 0");
    ClosedFormDist d;
    d.kind_ = DistKind::prop;
    d.lo_ = 0.0;
    d.hi_ = d_max / v;
    d.p1_ = d_max;
    d.p2_ = v;
    d.label_ = "prop-gap";
    return d;
}

ClosedFormDist ClosedFormDist::tabulated(double lo, double hi, std::vector<double> pdf,
                                         std::vector<double> cdf, std::string label) {
    if (pdf.size() != cdf.size() || pdf.size() < 2)
        throw DomainError("tabulated: pdf/cdf grids must match and have >= 2 points");
    ClosedFormDist d;
    d.kind_ = DistKind::numeric;
    d.lo_ = lo;
    d.hi_ = hi;
    d.grid_pdf_ = std::move(pdf);
    d.grid_cdf_ = std::move(cdf);
    d.label_ = std::move(label);
    return d;
}

double distance_pdf(double d, double d_max) {
    if (!(d_max > 0.0)) throw DomainError("distance_pdf: d_max must be > 0");
    if (d < 0.0 || d > d_max) return 0.0;
    return 2.0 * d / (d_max * d_max);
}

double action_time_pdf(double t, double t0, double v, double d_max) {
    if (!(v > 0.0)) throw DomainError("action_time_pdf: v must be > 0");
    if (!(d_max > 0.0)) throw DomainError("action_time_pdf: d_max must be > 0");
    if (t < t0 || t > t0 + d_max / v) return 0.0;
    return 2.0 * v * v * (t - t0) / (d_max * d_max);
}

ClosedFormDist comp_gap_dist(const ScenarioConfig& scenario) {
    if (scenario.c_max == scenario.c_min) {
        if (!scenario.allow_equal_comp_bounds)
            throw DomainError("comp gap undefined for c_min == c_max "
                              "(set allow_equal_comp_bounds for a point mass)");
        return ClosedFormDist::comp_point_mass();
    }
    return ClosedFormDist::comp_gap(scenario.c_min, scenario.c_max);
}

ClosedFormDist prop_gap_dist(const ScenarioConfig& scenario) {
    return ClosedFormDist::prop_gap(scenario.d_max, scenario.v);
}

double TruncGeomPmf::operator()(int k) const {
    return trunc_geom_pmf(fail, k, max_attempts);
}

double TruncGeomPmf::mean() const {
    double m = 0.0;
    for (int k = 1; k <= max_attempts; ++k) m += k * trunc_geom_pmf(fail, k, max_attempts);
    return m;
}

double trunc_geom_pmf(double fail, int k, int max_attempts) {
    if (!(fail >= 0.0 && fail < 1.0))
        throw DomainError("trunc_geom_pmf: fail must be in [0,1)");
    if (max_attempts < 1) throw DomainError("trunc_geom_pmf: max_attempts must be >= 1");
    if (k < 1 || k > max_attempts)
        throw DomainError("trunc_geom_pmf: k out of 1..max_attempts");
    if (fail == 0.0) return k == 1 ? 1.0 : 0.0;
    return std::pow(fail, k - 1) * (1.0 - fail) / (1.0 - std::pow(fail, max_attempts));
}

double AccessDelayPmf::at_frames(int k) const {
    const int i = k - min_frames;
    if (i < 0 || i >= static_cast<int>(prob.size())) return 0.0;
    return prob[static_cast<std::size_t>(i)];
}

double AccessDelayPmf::total() const {
    double s = 0.0;
    for (double p : prob) s += p;
    return s;
}

AccessDelayPmf access_delay_pmf(double zeta, double epsilon, int max_sr_attempts,
                                int max_pt_attempts, double frame_s) {
    if (!(frame_s > 0.0)) throw DomainError("access_delay_pmf: frame_s must be > 0");
    AccessDelayPmf out;
    out.frame_s = frame_s;
    out.min_frames = 2;
    out.prob.assign(static_cast<std::size_t>(max_sr_attempts + max_pt_attempts - 1), 0.0);
    for (int m = 1; m <= max_sr_attempts; ++m) {
        const double pm = trunc_geom_pmf(zeta, m, max_sr_attempts);
        for (int n = 1; n <= max_pt_attempts; ++n) {
            out.prob[static_cast<std::size_t>(m + n - 2)] +=
                pm * trunc_geom_pmf(epsilon, n, max_pt_attempts);
        }
    }
    return out;
}

double psv(double window_s, double rho2, const ClosedFormDist& gap) {
    if (!(window_s >= 0.0)) throw DomainError("psv: window must be >= 0");
    if (!(rho2 >= 0.0 && rho2 < 1.0)) throw DomainError("psv: rho2 must be in [0,1)");
    // algebraically 1 - (1-rho2) F; this form hits the rho2 floor exactly at F = 1
    const double f = gap.cdf(window_s);
    return (1.0 - f) + rho2 * f;
}

TwiDesign design_twi(double target_sigma, double rho2, const ClosedFormDist& gap,
                     double frame_s) {
    if (!(frame_s > 0.0)) throw DomainError("design_twi: frame_s must be > 0");
    if (!(rho2 >= 0.0 && rho2 < 1.0))
        throw DomainError("design_twi: rho2 must be in [0,1)");
    if (!(target_sigma > 0.0 && target_sigma < 1.0))
        throw DomainError("design_twi: target_sigma must be in (0,1)");
    if (target_sigma < rho2) {
        throw InfeasibleError("design_twi: target " + num(target_sigma) +
                                  " is below the drop-rate floor rho2 = " + num(rho2),
                              rho2);
    }

    // Target gap-CDF level: sigma(W) = 1 - (1-rho2) F(W) = target.
    const double f_star = (1.0 - target_sigma) / (1.0 - rho2);

    TwiDesign d;
    if (gap.kind() == DistKind::comp) {
        // (2aW - W^2)/a^2 = F*  =>  W = a (1 - sqrt(1 - F*))
        const double a = gap.hi();
        d.w_star = a * (1.0 - std::sqrt(1.0 - f_star));
    } else {
        d.w_star = gap.quantile(f_star);
    }
    d.sigma_at_w_star = psv(d.w_star, rho2, gap);

    // Smallest frame multiple still meeting the target. Start from the
    // floor of W*/T_f to absorb upward rounding of an exact multiple; past
    // the support top psv sits at the rho2 floor, which is <= target here.
    auto k = static_cast<long long>(std::floor(d.w_star / frame_s));
    if (k < 0) k = 0;
    const auto k_top = static_cast<long long>(std::ceil(gap.hi() / frame_s)) + 1;
    while (k < k_top && psv(static_cast<double>(k) * frame_s, rho2, gap) > target_sigma)
        ++k;
    d.w_frame = static_cast<double>(k) * frame_s;
    d.sigma_at_w_frame = psv(d.w_frame, rho2, gap);
    return d;
}

ClosedFormDist abs_diff_oracle(const std::function<double(double)>& pdf, double lo,
                               double hi, int grid_n) {
    if (!(hi > lo)) throw DomainError("abs_diff_oracle: need hi > lo");
    if (grid_n < 1000) throw DomainError("abs_diff_oracle: grid_n must be >= 1000");

    const auto n = static_cast<std::size_t>(grid_n);
    const double h = (hi - lo) / static_cast<double>(n);

    std::vector<double> f(n + 1);
    for (std::size_t i = 0; i <= n; ++i) f[i] = pdf(lo + static_cast<double>(i) * h);

    // Cumulative trapezoid of the input density; also validates normalization.
    std::vector<double> F(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) F[i] = F[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    if (std::abs(F[n] - 1.0) > 1e-6)
        throw DomainError("abs_diff_oracle: input pdf integrates to " + num(F[n]) +
                          ", not 1");

    // Output grids share the step h, so x_i +/- y_j lands on grid nodes and
    // no interpolation of F is needed inside the quadrature.
    std::vector<double> cdf_y(n + 1, 0.0);
    std::vector<double> pdf_y(n + 1, 0.0);
    for (std::size_t j = 0; j <= n; ++j) {
        // F_Y(y) = int f(x) [F(x+y) - F(x-y)] dx over the support
        double acc_cdf = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            const std::size_t up = std::min(i + j, n);
            const std::size_t down = i >= j ? i - j : 0;
            const double w = (i == 0 || i == n) ? 0.5 : 1.0;
            acc_cdf += w * f[i] * (F[up] - F[down]);
        }
        cdf_y[j] = acc_cdf * h;

        // f_Y(y) = int f(x) [f(x+y) + f(x-y)] dx; the two terms integrate to
        // the same value. The product is smooth only inside the shifted
        // overlap, so integrate there; its edges land on grid nodes.
        double acc_pdf = 0.0;
        if (j < n) {
            const std::size_t m = n - j; // overlap spans m cells
            for (std::size_t i = 0; i <= m; ++i) {
                const double w = (i == 0 || i == m) ? 0.5 : 1.0;
                acc_pdf += w * f[i] * f[i + j];
            }
            acc_pdf *= 2.0;
        }
        pdf_y[j] = acc_pdf * h;
    }
    cdf_y[0] = 0.0;

    return ClosedFormDist::tabulated(0.0, hi - lo, std::move(pdf_y), std::move(cdf_y),
                                     "abs-diff-oracle");
}

} // namespace twisim
