#include "twisim/params.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "twisim/errors.hpp"

namespace twisim {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

} // namespace

void ScenarioConfig::validate() const {
    require(std::isfinite(v) && v > 0.0, "scenario: v must be > 0");
    require(std::isfinite(d_max) && d_max > 0.0, "scenario: d_max_m must be > 0");
    require(sensor_count >= 1, "scenario: sensors must be >= 1");
    require(std::isfinite(c_min) && c_min >= 0.0, "scenario: c_min_s must be >= 0");
    require(std::isfinite(c_max) && c_max >= c_min,
            "scenario: c_max_s must be >= c_min_s");
    if (c_max == c_min && !allow_equal_comp_bounds) {
        throw ConfigError(
            "scenario: c_min_s == c_max_s requires allow_equal_comp_bounds=true");
    }
    require(std::isfinite(t0) && t0 >= 0.0, "scenario: t0_s must be >= 0");
}

void CommConfig::validate(int sensor_count) const {
    require(std::isfinite(frame_s) && frame_s > 0.0, "comm: t_f_s must be > 0");
    if (pt_subframe_s) {
        require(*pt_subframe_s > 0.0 && *pt_subframe_s < frame_s,
                "comm: t_p_s must satisfy 0 < t_p_s < t_f_s");
    }
    require(max_sr_attempts >= 1, "comm: m_max must be >= 1");
    require(max_pt_attempts >= 1, "comm: n_max must be >= 1");
    require(preamble_length >= sensor_count,
            "comm: preamble_length must be >= sensors");
    if (!gamma_th_override) {
        require(bandwidth_hz.has_value(), "comm: bandwidth_hz missing (no gamma_th)");
        require(pt_subframe_s.has_value(), "comm: t_p_s missing (no gamma_th)");
        require(packet_bits.has_value(), "comm: packet_bits missing (no gamma_th)");
    }
}

double average_snr(const SensorLink& link, const CommConfig& comm) {
    if (link.gamma_override) {
        if (!(*link.gamma_override > 0.0))
            throw ConfigError("sensor: gamma must be > 0");
        return *link.gamma_override;
    }
    if (!link.tx_power_w) throw ConfigError("sensor: power_w missing and no gamma set");
    if (!link.fading_gain) throw ConfigError("sensor: beta missing and no gamma set");
    if (!comm.noise_density) throw ConfigError("comm: n0 missing and no sensor gamma set");
    if (!comm.bandwidth_hz)
        throw ConfigError("comm: bandwidth_hz missing and no sensor gamma set");
    if (!(*link.tx_power_w > 0.0)) throw ConfigError("sensor: power_w must be > 0");
    if (!(*link.fading_gain > 0.0)) throw ConfigError("sensor: beta must be > 0");
    if (!(*comm.noise_density > 0.0)) throw ConfigError("comm: n0 must be > 0");
    if (!(*comm.bandwidth_hz > 0.0)) throw ConfigError("comm: bandwidth_hz must be > 0");
    return *link.tx_power_w * *link.fading_gain /
           (*comm.noise_density * *comm.bandwidth_hz);
}

double gamma_threshold(const CommConfig& comm) {
    if (comm.gamma_th_override) {
        if (!(*comm.gamma_th_override > 0.0))
            throw ConfigError("comm: gamma_th must be > 0");
        return *comm.gamma_th_override;
    }
    if (!comm.packet_bits || !(*comm.packet_bits > 0.0))
        throw ConfigError("comm: packet_bits must be set and > 0");
    if (!comm.pt_subframe_s || !(*comm.pt_subframe_s > 0.0))
        throw ConfigError("comm: t_p_s must be set and > 0");
    if (!comm.bandwidth_hz || !(*comm.bandwidth_hz > 0.0))
        throw ConfigError("comm: bandwidth_hz must be set and > 0");
    return std::exp2(*comm.packet_bits / (*comm.pt_subframe_s * *comm.bandwidth_hz)) -
           1.0;
}

double detection_threshold(double gamma) {
    if (!(gamma > 0.0)) throw DomainError("detection_threshold: gamma must be > 0");
    return (1.0 + 1.0 / gamma) * std::log1p(gamma);
}

double sr_miss_probability(double gamma) {
    if (!(gamma > 0.0)) throw DomainError("sr_miss_probability: gamma must be > 0");
    // 1 - (1+gamma)^{-1/gamma}, via expm1 for small-gamma accuracy
    return -std::expm1(-std::log1p(gamma) / gamma);
}

double outage_probability(double gamma, double gamma_th) {
    if (!(gamma > 0.0)) throw DomainError("outage_probability: gamma must be > 0");
    if (!(gamma_th > 0.0)) throw DomainError("outage_probability: gamma_th must be > 0");
    return -std::expm1(-gamma_th / gamma);
}

double packet_drop_rate(double zeta, double epsilon, int max_sr_attempts,
                        int max_pt_attempts) {
    if (!(zeta >= 0.0 && zeta < 1.0))
        throw DomainError("packet_drop_rate: zeta must be in [0,1)");
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw DomainError("packet_drop_rate: epsilon must be in [0,1)");
    if (max_sr_attempts < 1 || max_pt_attempts < 1)
        throw DomainError("packet_drop_rate: attempt caps must be >= 1");
    const double sr_fail = std::pow(zeta, max_sr_attempts);
    const double pt_fail = std::pow(epsilon, max_pt_attempts);
    return sr_fail + pt_fail - sr_fail * pt_fail;
}

double sr_false_alarm_rate(double eta) {
    return std::exp(-eta);
}

DerivedLink derive_link(const SensorLink& link, const CommConfig& comm) {
    DerivedLink d;
    d.perfect_detection = link.perfect_detection;
    d.perfect_transmission = link.perfect_transmission;
    d.gamma = average_snr(link, comm);
    d.eta = detection_threshold(d.gamma);
    d.zeta = link.perfect_detection ? 0.0 : sr_miss_probability(d.gamma);
    d.epsilon = link.perfect_transmission
                    ? 0.0
                    : outage_probability(d.gamma, gamma_threshold(comm));
    if (d.epsilon >= 1.0)
        throw ConfigError("sensor: SNR so far below gamma_th that the outage "
                          "probability rounds to 1; the link cannot deliver");
    d.rho = packet_drop_rate(d.zeta, d.epsilon, comm.max_sr_attempts,
                             comm.max_pt_attempts);
    return d;
}

std::vector<DerivedLink> derive_links(const std::vector<SensorLink>& links,
                                      const CommConfig& comm) {
    std::vector<DerivedLink> out;
    out.reserve(links.size());
    for (const auto& l : links) out.push_back(derive_link(l, comm));
    return out;
}

} // namespace twisim
