#include "twisim/sim.hpp"

#include <algorithm>
#include <cmath>

#include "twisim/errors.hpp"

namespace twisim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_seed(SeedSpec spec) {
    std::uint64_t s = spec.master_seed;
    const std::uint64_t a = splitmix64(s);
    s ^= spec.replication_index * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL;
    const std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
}

} // namespace

Rng::Rng(SeedSpec spec) : eng_(mix_seed(spec)) {}

double Rng::uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal(double mean, double stddev) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return mean + stddev * r * std::cos(kTwoPi * u2);
}

double Rng::exponential(double mean) {
    return -mean * std::log1p(-uniform());
}

double sample_distance(Rng& rng, double d_max) {
    if (!(d_max > 0.0)) throw DomainError("sample_distance: d_max must be > 0");
    return d_max * std::sqrt(rng.uniform());
}

double event_action_time(double t0, double distance_m, double v) {
    if (!(v > 0.0)) throw DomainError("event_action_time: v must be > 0");
    return t0 + distance_m / v;
}

bool sr_attempt(const DerivedLink& link, ChannelMode mode, Rng& rng) {
    if (link.perfect_detection) return true;
    if (mode == ChannelMode::statistical) return rng.uniform() >= link.zeta;
    // y projected on the preamble: h sqrt(P) + correlated noise, normalized so
    // the statistic is Exp(mean 1 + gamma) under transmission. Only gamma
    // matters, so draw with P = 1, beta = gamma, N0*B = 1.
    const double sd_h = std::sqrt(0.5 * link.gamma);
    const double re = rng.normal(0.0, sd_h) + rng.normal(0.0, std::sqrt(0.5));
    const double im = rng.normal(0.0, sd_h) + rng.normal(0.0, std::sqrt(0.5));
    return re * re + im * im >= link.eta;
}

bool pt_attempt(const DerivedLink& link, double gamma_th, ChannelMode mode, Rng& rng) {
    if (link.perfect_transmission) return true;
    if (mode == ChannelMode::statistical) return rng.uniform() >= link.epsilon;
    // instantaneous SNR = gamma * |h|^2 / beta ~ Exp(mean gamma)
    return rng.exponential(link.gamma) >= gamma_th;
}

namespace {

struct SensorState {
    long long align_frame = 0; // first SR happens in this frame
    int sr_done = 0;
    int pt_done = 0;
    bool granted = false;
    long long pt_ready_frame = 0; // earliest frame a PT attempt may occur
    bool finished = false;
};

void push_trace(std::vector<TraceRow>* trace, long long frame, int sensor_id,
                std::string_view event) {
    if (trace) trace->push_back(TraceRow{frame, sensor_id, event});
}

std::vector<PacketOutcome> simulate_event(const ScenarioConfig& scenario,
                                          const CommConfig& comm,
                                          const std::vector<DerivedLink>& links,
                                          ChannelMode mode, Rng& rng,
                                          std::span<const double> distances,
                                          std::span<const double> comp_delays,
                                          const SimFlags& flags,
                                          std::vector<TraceRow>* trace) {
    const auto count = static_cast<std::size_t>(scenario.sensor_count);
    if (links.size() != count)
        throw ConfigError("run_replication: links size must equal sensors");

    const double frame = comm.frame_s;
    bool need_gamma_th = false;
    for (const auto& l : links)
        if (!l.perfect_transmission && mode == ChannelMode::signal_level)
            need_gamma_th = true;
    const double gamma_th = need_gamma_th ? gamma_threshold(comm) : 0.0;

    std::vector<PacketOutcome> out(count);
    std::vector<SensorState> st(count);
    long long first_frame = 0;
    for (std::size_t i = 0; i < count; ++i) {
        auto& o = out[i];
        o.sensor_id = static_cast<int>(i) + 1;
        o.distance_m = distances[i];
        o.action_time_s = event_action_time(scenario.t0, o.distance_m, scenario.v);
        o.comp_delay_s = comp_delays[i];
        st[i].align_frame =
            static_cast<long long>(std::ceil((o.action_time_s + o.comp_delay_s) / frame));
        if (i == 0 || st[i].align_frame < first_frame) first_frame = st[i].align_frame;
    }

    std::size_t active = count;
    std::size_t rr_next = 0; // round-robin pointer for serialized grants
    for (long long j = first_frame; active > 0; ++j) {
        // SR sub-frame: orthogonal preambles, detection independent per sensor
        for (std::size_t i = 0; i < count; ++i) {
            auto& s = st[i];
            if (s.finished || s.granted || j < s.align_frame) continue;
            ++s.sr_done;
            if (sr_attempt(links[i], mode, rng)) {
                push_trace(trace, j, out[i].sensor_id, "sr_ok");
                s.granted = true;
                s.pt_ready_frame = j + 1;
            } else if (s.sr_done >= comm.max_sr_attempts) {
                push_trace(trace, j, out[i].sensor_id, "drop_sr");
                s.finished = true;
                out[i].sr_exhausted = true;
                out[i].dropped = true;
                --active;
            } else {
                push_trace(trace, j, out[i].sensor_id, "sr_miss");
            }
        }

        // PT sub-frame
        std::size_t served = 0;
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t i = flags.serialize_grants ? (rr_next + k) % count : k;
            auto& s = st[i];
            if (s.finished || !s.granted || j < s.pt_ready_frame) continue;
            if (flags.serialize_grants && served > 0) {
                s.pt_ready_frame = j + 1; // deferred to a later frame
                continue;
            }
            ++served;
            if (flags.serialize_grants) rr_next = (i + 1) % count;
            ++s.pt_done;
            if (pt_attempt(links[i], gamma_th, mode, rng)) {
                push_trace(trace, j, out[i].sensor_id, "pt_ok");
                s.finished = true;
                out[i].arrival_time_s = static_cast<double>(j + 1) * frame;
                push_trace(trace, j, out[i].sensor_id, "arrival");
                --active;
            } else if (s.pt_done >= comm.max_pt_attempts) {
                push_trace(trace, j, out[i].sensor_id, "drop_pt");
                s.finished = true;
                out[i].pt_exhausted = true;
                out[i].dropped = true;
                --active;
            } else {
                push_trace(trace, j, out[i].sensor_id, "pt_outage");
                s.pt_ready_frame = j + 1; // new grant, retry next frame
            }
        }
    }

    for (std::size_t i = 0; i < count; ++i) {
        out[i].sr_attempts = st[i].sr_done;
        out[i].pt_attempts = st[i].pt_done;
    }
    return out;
}

} // namespace

std::vector<PacketOutcome> run_replication(const ScenarioConfig& scenario,
                                           const CommConfig& comm,
                                           const std::vector<DerivedLink>& links,
                                           ChannelMode mode, SeedSpec seed,
                                           const SimFlags& flags,
                                           std::vector<TraceRow>* trace) {
    Rng rng(seed);
    const auto count = static_cast<std::size_t>(scenario.sensor_count);
    std::vector<double> distances(count);
    std::vector<double> comps(count);
    for (std::size_t i = 0; i < count; ++i) {
        distances[i] = sample_distance(rng, scenario.d_max);
        comps[i] = scenario.c_max > scenario.c_min
                       ? rng.uniform(scenario.c_min, scenario.c_max)
                       : scenario.c_min;
    }
    return simulate_event(scenario, comm, links, mode, rng, distances, comps, flags,
                          trace);
}

std::vector<PacketOutcome> run_replication_forced(
    const ScenarioConfig& scenario, const CommConfig& comm,
    const std::vector<DerivedLink>& links, ChannelMode mode, Rng& rng,
    std::span<const double> distances, std::span<const double> comp_delays,
    const SimFlags& flags, std::vector<TraceRow>* trace) {
    if (distances.size() != static_cast<std::size_t>(scenario.sensor_count) ||
        comp_delays.size() != static_cast<std::size_t>(scenario.sensor_count))
        throw ConfigError("run_replication_forced: need one distance and one comp "
                          "delay per sensor");
    return simulate_event(scenario, comm, links, mode, rng, distances, comp_delays,
                          flags, trace);
}

} // namespace twisim
