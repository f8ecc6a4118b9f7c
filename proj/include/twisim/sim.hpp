#ifndef TWISIM_SIM_HPP
#define TWISIM_SIM_HPP

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "twisim/params.hpp"

namespace twisim {

// statistical: SR/PT successes are coin flips with probabilities 1-zeta, 1-eps.
// signal_level: fading and noise are drawn and the eta / gamma_th tests applied.
enum class ChannelMode { statistical, signal_level };

// (master_seed, replication_index) fully determines every draw in a
// replication; distinct indices give independent streams.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t replication_index = 0;
};

// Deterministic per-replication stream: mt19937_64 seeded through a
// splitmix64 mix of the SeedSpec, with fixed bit-to-double mappings so the
// sequence does not depend on the standard library's distribution internals.
class Rng {
public:
    explicit Rng(SeedSpec spec);

    std::uint64_t next_u64() { return eng_(); }
    double uniform();                         // [0, 1)
    double uniform(double lo, double hi);
    double normal(double mean, double stddev); // Box-Muller, cached spare
    double exponential(double mean);

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct PacketOutcome {
    int sensor_id = 0;          // 1-based
    double distance_m = 0.0;    // D
    double action_time_s = 0.0; // t0 + D/v
    double comp_delay_s = 0.0;  // C
    int sr_attempts = 0;        // attempts made, <= M_max
    int pt_attempts = 0;        // attempts made, <= N_max (0 if never granted)
    bool sr_exhausted = false;
    bool pt_exhausted = false;
    bool dropped = false;
    double arrival_time_s = std::numeric_limits<double>::infinity();
};

struct SimFlags {
    // Default: every granted sensor transmits in the same frame's PT
    // sub-frame with independent outage draws. When set, one packet
    // transmission per frame, granted sensors served round-robin.
    bool serialize_grants = false;
};

// One frame-level event, for optional debugging traces.
struct TraceRow {
    long long frame = 0;
    int sensor_id = 0;
    std::string_view event; // sr_ok | sr_miss | pt_ok | pt_outage | drop_sr | drop_pt | arrival
};

// D = d_max * sqrt(U), the radial law 2d/d_max^2.
double sample_distance(Rng& rng, double d_max);

// t0 + D/v
double event_action_time(double t0, double distance_m, double v);

bool sr_attempt(const DerivedLink& link, ChannelMode mode, Rng& rng);
bool pt_attempt(const DerivedLink& link, double gamma_th, ChannelMode mode, Rng& rng);

// One physical event through propagation, computation and the frame-based
// SR/grant/PT protocol. The first frame starts at t = 0; a sensor aligned to
// frame k makes SR attempt m in frame k+m-1 and, once granted, PT attempt n
// in the n-th frame after the grant, so a non-dropped arrival lands at
// (k + m + n) * T_f.
std::vector<PacketOutcome> run_replication(const ScenarioConfig& scenario,
                                           const CommConfig& comm,
                                           const std::vector<DerivedLink>& links,
                                           ChannelMode mode, SeedSpec seed,
                                           const SimFlags& flags = {},
                                           std::vector<TraceRow>* trace = nullptr);

// Same protocol with pre-chosen distances and computation delays, for
// deterministic tests.
std::vector<PacketOutcome> run_replication_forced(
    const ScenarioConfig& scenario, const CommConfig& comm,
    const std::vector<DerivedLink>& links, ChannelMode mode, Rng& rng,
    std::span<const double> distances, std::span<const double> comp_delays,
    const SimFlags& flags = {}, std::vector<TraceRow>* trace = nullptr);

} // namespace twisim

#endif
