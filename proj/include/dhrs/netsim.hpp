#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhrs/random.hpp"

namespace dhrs {

struct LinkConfig {
    double one_way_delay_ms = 0.0;
    double jitter_ms = 0.0;
    double loss_prob = 0.0;
    double bandwidth_bps = 0.0;  // 0 = unlimited
    std::uint64_t seed = 1;

    void validate() const {
        if (!(one_way_delay_ms >= 0.0)) throw std::invalid_argument("one_way_delay_ms must be >= 0");
        if (!(jitter_ms >= 0.0)) throw std::invalid_argument("jitter_ms must be >= 0");
        if (!(loss_prob >= 0.0 && loss_prob <= 1.0))
            throw std::invalid_argument("loss_prob must be in [0, 1]");
        if (!(bandwidth_bps >= 0.0)) throw std::invalid_argument("bandwidth_bps must be >= 0 (0 = unlimited)");
    }
};

/// Delivery ledger; the single source of truth for bandwidth accounting.
struct ChannelStats {
    std::uint64_t sent_packets = 0;
    std::uint64_t lost_packets = 0;
    std::uint64_t delivered_packets = 0;
    std::uint64_t sent_bytes = 0;
    std::uint64_t delivered_bytes = 0;
};

/// Simulated one-way datagram link on a millisecond virtual clock.
template <typename Message>
class Channel {
public:
    struct Delivery {
        double deliver_at;
        std::uint64_t sequence;
        std::size_t size;
        Message message;
    };

    explicit Channel(LinkConfig cfg = {}) : cfg_(cfg), rng_(mix64(cfg.seed ^ 0x6e657473696dULL)) { cfg_.validate(); }

    /// Replaces delay + jitter with delays sampled uniformly from `trace_ms`.
    void replay_latency_trace(std::vector<double> trace_ms) {
        if (trace_ms.empty()) throw std::invalid_argument("latency trace is empty");
        for (double v : trace_ms)
            if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("latency trace values must be finite and >= 0");
        trace_ = std::move(trace_ms);
    }

    void send(Message msg, std::size_t size_bytes, double now_ms) {
        if (now_ms < last_now_) throw std::invalid_argument("channel clock went backwards");
        last_now_ = now_ms;
        ++stats_.sent_packets;
        stats_.sent_bytes += size_bytes;
        // Fixed draw count per packet keeps the schedule a pure function of the inputs.
        const double u_loss = rng_.uniform();
        const double u_delay = rng_.uniform();
        if (u_loss < cfg_.loss_prob) {
            ++stats_.lost_packets;
            return;
        }
        double start = now_ms;
        if (cfg_.bandwidth_bps > 0.0) {
            start = std::max(now_ms, link_free_);
            link_free_ = start + static_cast<double>(size_bytes) * 8.0 * 1000.0 / cfg_.bandwidth_bps;
            start = link_free_;
        }
        double delay;
        if (!trace_.empty()) {
            const auto k = std::min(trace_.size() - 1, static_cast<std::size_t>(u_delay * static_cast<double>(trace_.size())));
            delay = trace_[k];
        } else {
            delay = cfg_.one_way_delay_ms + cfg_.jitter_ms * u_delay;
        }
        queue_.push({start + delay, next_sequence_++, size_bytes, std::move(msg)});
    }

    /// Every message due at or before now_ms, in (deliver_at, send order).
    std::vector<Message> poll(double now_ms) {
        std::vector<Message> out;
        for (auto& d : poll_deliveries(now_ms)) out.push_back(std::move(d.message));
        return out;
    }

    std::vector<Delivery> poll_deliveries(double now_ms) {
        std::vector<Delivery> out;
        while (!queue_.empty() && queue_.top().deliver_at <= now_ms) {
            out.push_back(queue_.top());
            queue_.pop();
            ++stats_.delivered_packets;
            stats_.delivered_bytes += out.back().size;
        }
        return out;
    }

    std::size_t in_flight() const { return queue_.size(); }
    const ChannelStats& stats() const { return stats_; }
    const LinkConfig& config() const { return cfg_; }

private:
    struct Later {
        bool operator()(const Delivery& a, const Delivery& b) const {
            return a.deliver_at != b.deliver_at ? a.deliver_at > b.deliver_at : a.sequence > b.sequence;
        }
    };

    LinkConfig cfg_;
    SplitMix rng_;
    std::vector<double> trace_;
    std::priority_queue<Delivery, std::vector<Delivery>, Later> queue_;
    double link_free_ = 0.0;
    double last_now_ = 0.0;
    std::uint64_t next_sequence_ = 0;
    ChannelStats stats_;
};

/// One float (milliseconds) per line; blank lines and `#` comments ignored.
inline std::vector<double> parse_latency_trace(std::istream& in) {
    std::vector<double> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        double v;
        if (!(ss >> v)) {
            std::string rest;
            if (std::istringstream(line) >> rest) throw std::invalid_argument("latency trace line " + std::to_string(lineno) + ": not a number");
            continue;
        }
        std::string extra;
        if (ss >> extra) throw std::invalid_argument("latency trace line " + std::to_string(lineno) + ": expected one value");
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("latency trace line " + std::to_string(lineno) + ": value must be >= 0");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("latency trace is empty");
    return out;
}

inline std::vector<double> load_latency_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open latency trace " + path);
    return parse_latency_trace(in);
}

}  // namespace dhrs
