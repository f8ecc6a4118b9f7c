#include "twisim/twi.hpp"

#include <algorithm>
#include <cmath>

#include "twisim/errors.hpp"

namespace twisim {

TwiBuffer::TwiBuffer(double window_s, int expected_count)
    : window_s_(window_s), expected_count_(expected_count) {
    if (!(window_s > 0.0)) throw ConfigError("twi: window W must be > 0");
    if (expected_count < 1) throw ConfigError("twi: expected update count must be >= 1");
}

void TwiBuffer::deliver(double at, std::vector<DeliveryRecord>& out) {
    DeliveryRecord rec;
    rec.delivery_time_s = at;
    rec.delivered_ids.reserve(stored_.size());
    for (const auto& [id, t] : stored_) rec.delivered_ids.push_back(id);
    out.push_back(std::move(rec));
    stored_.clear();
    open_ = false;
}

void TwiBuffer::offer(int sensor_id, double arrival_time_s,
                      std::vector<DeliveryRecord>& out) {
    // gap-form comparison, so a gap of exactly W stays inside the window and
    // the verdict matches the arrival-range predicate bit for bit
    if (open_ && arrival_time_s - window_start_ > window_s_)
        deliver(window_start_ + window_s_, out);
    if (!open_) {
        open_ = true;
        window_start_ = arrival_time_s;
    }
    stored_.emplace_back(sensor_id, arrival_time_s);
    if (static_cast<int>(stored_.size()) >= expected_count_)
        deliver(arrival_time_s, out);
}

void TwiBuffer::flush(std::vector<DeliveryRecord>& out) {
    if (open_) deliver(window_start_ + window_s_, out);
}

IngestResult ingest(const std::vector<PacketOutcome>& arrivals, double window_s,
                    int expected_count, double t0_s) {
    TwiBuffer buffer(window_s, expected_count);

    std::vector<std::pair<double, int>> received; // (arrival, sensor_id)
    int drops = 0;
    for (const auto& a : arrivals) {
        if (a.dropped || std::isinf(a.arrival_time_s))
            ++drops;
        else
            received.emplace_back(a.arrival_time_s, a.sensor_id);
    }
    std::sort(received.begin(), received.end());

    IngestResult res;
    for (const auto& [t, id] : received) buffer.offer(id, t, res.deliveries);
    buffer.flush(res.deliveries);

    if (!res.deliveries.empty()) {
        res.violation = res.deliveries.size() > 1 || drops > 0;
        res.latency_s = res.deliveries.front().delivery_time_s - t0_s;
        res.deliveries.front().latency_s = res.latency_s;
        for (auto& d : res.deliveries) d.violation = res.violation;
    }
    if (received.size() >= 2)
        res.pdv_s = received.back().first - received.front().first;
    return res;
}

double latency(double first_arrival_s, double gap_s, double window_s, double t0_s) {
    if (!std::isfinite(first_arrival_s))
        throw DomainError("latency: first arrival must be finite");
    return first_arrival_s + std::min(gap_s, window_s) - t0_s;
}

std::optional<double> pdv(const std::vector<PacketOutcome>& arrivals) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    int survivors = 0;
    for (const auto& a : arrivals) {
        if (a.dropped || std::isinf(a.arrival_time_s)) continue;
        ++survivors;
        lo = std::min(lo, a.arrival_time_s);
        hi = std::max(hi, a.arrival_time_s);
    }
    if (survivors < 2) return std::nullopt;
    return hi - lo;
}

} // namespace twisim
