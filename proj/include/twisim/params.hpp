#ifndef TWISIM_PARAMS_HPP
#define TWISIM_PARAMS_HPP

#include <optional>
#include <vector>

namespace twisim {

// All quantities are SI internally (seconds, meters, watts, hertz).

struct ScenarioConfig {
    double t0 = 0.0;                 // event time (s)
    double v = 3.0e8;                // propagation speed (m/s)
    double d_max = 100.0;            // deployment radius (m)
    int sensor_count = 2;            // I
    double c_min = 0.0;              // computation delay bounds (s)
    double c_max = 0.0;
    bool allow_equal_comp_bounds = false; // permit c_min == c_max (deterministic tests)

    void validate() const; // throws ConfigError
};

struct CommConfig {
    std::optional<double> bandwidth_hz;      // B
    double frame_s = 0.010;                  // T_f
    std::optional<double> pt_subframe_s;     // T_p, 0 < T_p < T_f
    std::optional<double> packet_bits;       // b
    std::optional<double> noise_density;     // N0 (W/Hz)
    int max_sr_attempts = 1;                 // M_max, includes the first attempt
    int max_pt_attempts = 1;                 // N_max
    int preamble_length = 2;                 // S >= I
    std::optional<double> gamma_th_override; // direct SNR threshold

    void validate(int sensor_count) const;
};

// Per-sensor link inputs. Either gamma directly or (P, beta) with the
// comm-level (N0, B); direct values take precedence.
struct SensorLink {
    std::optional<double> tx_power_w;   // P
    std::optional<double> fading_gain;  // beta (large-scale, unitless mean of |h|^2)
    std::optional<double> gamma_override;
    bool perfect_detection = false;     // force zeta = 0 (test flag)
    bool perfect_transmission = false;  // force epsilon = 0 (test flag)
};

// Link quantities resolved against a CommConfig.
struct DerivedLink {
    double gamma = 0.0;   // average received SNR
    double eta = 0.0;     // SR detection threshold
    double zeta = 0.0;    // SR miss probability
    double epsilon = 0.0; // PT outage probability
    double rho = 0.0;     // packet drop rate
    bool perfect_detection = false;
    bool perfect_transmission = false;
};

// gamma = P*beta/(N0*B), or the override when set.
double average_snr(const SensorLink& link, const CommConfig& comm);

// gamma_TH = 2^{b/(T_p*B)} - 1, or the override when set.
double gamma_threshold(const CommConfig& comm);

// eta = (1 + 1/gamma) * ln(1 + gamma)
double detection_threshold(double gamma);

// zeta = 1 - (1 + gamma)^{-1/gamma}
double sr_miss_probability(double gamma);

// epsilon = 1 - exp(-gamma_th/gamma)
double outage_probability(double gamma, double gamma_th);

// rho = zeta^M + eps^N - zeta^M * eps^N
double packet_drop_rate(double zeta, double epsilon, int max_sr_attempts,
                        int max_pt_attempts);

// Rate at which a silent sensor's noise-only statistic crosses eta. Not
// simulated (a crossing has no protocol consequence); exposed for run logs.
double sr_false_alarm_rate(double eta);

DerivedLink derive_link(const SensorLink& link, const CommConfig& comm);

std::vector<DerivedLink> derive_links(const std::vector<SensorLink>& links,
                                      const CommConfig& comm);

} // namespace twisim

#endif
