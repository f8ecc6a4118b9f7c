#ifndef TWISIM_TWI_HPP
#define TWISIM_TWI_HPP

#include <optional>
#include <vector>

#include "twisim/sim.hpp"

namespace twisim {

struct DeliveryRecord {
    double delivery_time_s = 0.0;
    std::vector<int> delivered_ids;
    bool violation = false;                // verdict for the whole event
    std::optional<double> latency_s;       // set on the first delivery only
};

struct IngestResult {
    std::vector<DeliveryRecord> deliveries;
    bool violation = false;
    std::optional<double> latency_s; // first delivery time minus t0
    std::optional<double> pdv_s;     // arrival range over survivors (>= 2)
};

// Base-station buffer. Stores arrivals; delivers and clears either when all
// expected updates are present, or when the window has been open for W
// seconds. An arrival exactly at the window close lands inside it.
class TwiBuffer {
public:
    TwiBuffer(double window_s, int expected_count); // throws ConfigError on W <= 0

    // Offer the next arrival in time order; any delivery whose window closes
    // strictly before this arrival fires first.
    void offer(int sensor_id, double arrival_time_s, std::vector<DeliveryRecord>& out);

    // Fire the pending window, if any.
    void flush(std::vector<DeliveryRecord>& out);

    double window_s() const { return window_s_; }

private:
    void deliver(double at, std::vector<DeliveryRecord>& out);

    double window_s_;
    int expected_count_;
    std::vector<std::pair<int, double>> stored_; // (sensor_id, arrival)
    double window_start_ = 0.0;
    bool open_ = false;
};

// Run one event's arrivals through the buffer. Dropped packets never enter
// it; they make the event a violation if anything else was delivered. An
// event where every packet is dropped produces no record and no violation.
// The event counts as a violation iff its updates are split across two or
// more deliveries, or at least one update was delivered while another
// sensor dropped its packet.
IngestResult ingest(const std::vector<PacketOutcome>& arrivals, double window_s,
                    int expected_count, double t0_s = 0.0);

// L = t_first + min(gap, W) - t0. A dropped partner (gap = +inf) pins the
// delivery to the window close.
double latency(double first_arrival_s, double gap_s, double window_s, double t0_s);

// Arrival range over non-dropped packets; absent below two survivors.
std::optional<double> pdv(const std::vector<PacketOutcome>& arrivals);

} // namespace twisim

#endif
