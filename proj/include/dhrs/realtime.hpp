#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <thread>

#include "dhrs/pipeline.hpp"
#include "dhrs/udp.hpp"

namespace dhrs {

// Socket mode: the same wire format and client logic as the simulator, on
// wall-clock time over UDP.

struct ServeStats {
    std::uint64_t frames = 0;
    std::uint64_t datagrams = 0;
    std::uint64_t bytes = 0;
    std::uint64_t malformed = 0;
};

/// Serves camera messages until the last trajectory frame was answered or
/// nothing arrived for net.timeout_ms. `ready` is set once the socket is bound.
inline ServeStats run_udp_server(const Config& cfg, std::atomic<bool>* ready = nullptr,
                                 std::atomic<bool>* stop = nullptr) {
    const World world(load_scene(cfg.scene));
    ServerRenderer server(world, cfg);
    UdpSocket sock;
    sock.bind(cfg.net.server_host, static_cast<std::uint16_t>(cfg.net.server_port));
    if (ready) ready->store(true);
    const Camera base = cfg.trajectory.camera_at(0, cfg.fov_rad(), cfg.render.width, cfg.render.height);
    ServeStats stats;
    std::optional<std::uint32_t> last;
    auto idle_since = std::chrono::steady_clock::now();
    const auto timeout = std::chrono::duration<double, std::milli>(cfg.net.timeout_ms);
    while (!(stop && stop->load())) {
        auto got = sock.receive(std::chrono::milliseconds(20));
        if (!got) {
            if (std::chrono::steady_clock::now() - idle_since > timeout) break;
            continue;
        }
        idle_since = std::chrono::steady_clock::now();
        CameraMessage m;
        try {
            m = parse_camera_message(got->bytes, base);
        } catch (const DecodeError&) {
            ++stats.malformed;
            continue;
        }
        if (last && m.frame_id <= *last) continue;
        last = m.frame_id;
        const ServerFrame f = server.render({m.frame_id, m.camera});
        for (const EncodedFrame& ef : encode_server_frame(server, f, cfg)) {
            for (const auto& d : packetize(ef, static_cast<std::size_t>(cfg.transport.payload_capacity))) {
                const auto bytes = serialize_datagram(d);
                sock.send_to(got->from, bytes);
                ++stats.datagrams;
                stats.bytes += bytes.size();
            }
            ++stats.frames;
        }
        if (m.frame_id + 1 >= cfg.trajectory.ticks) break;
    }
    return stats;
}

/// Plays the trajectory in real time against a server, displaying through the
/// same prediction and composition path as the simulator.
inline RunResult run_udp_client(const Config& cfg, const RunOptions& opt = {}) {
    const World world(load_scene(cfg.scene));
    ClientDisplay client(world, cfg);
    Assembler assembler({cfg.transport.expiry_ms});
    UdpSocket sock;
    sock.bind(cfg.net.client_host, static_cast<std::uint16_t>(cfg.net.client_port));
    const UdpEndpoint server = UdpEndpoint::resolve(cfg.net.server_host, static_cast<std::uint16_t>(cfg.net.server_port));
    RunResult res;
    res.record.name = "udp-client";
    res.record.ticks = cfg.trajectory.ticks;
    res.record.duration_s = cfg.trajectory.ticks / cfg.trajectory.tick_rate;
    std::map<std::pair<int, std::uint32_t>, std::size_t> row_of;
    std::map<int, double> last_arrival;
    const auto start = std::chrono::steady_clock::now();
    auto now_ms = [&] { return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count(); };

    for (std::uint32_t t = 0; t < cfg.trajectory.ticks; ++t) {
        const CameraPose pose = detail::pose_at(cfg, t);
        sock.send_to(server, serialize_camera_message({t, pose.camera, static_cast<std::uint32_t>(std::lround(now_ms()))}));
        const double deadline = cfg.trajectory.time_ms(t + 1);
        while (true) {
            const double remaining = deadline - now_ms();
            if (remaining <= 0) break;
            auto got = sock.receive(std::chrono::milliseconds(static_cast<long>(std::ceil(remaining))));
            if (!got) continue;
            const double at = now_ms();
            res.downlink.delivered_packets++;
            res.downlink.delivered_bytes += got->bytes.size();
            Datagram d;
            try {
                d = parse_datagram(got->bytes);
            } catch (const DecodeError&) {
                continue;
            }
            const std::pair<int, std::uint32_t> key{static_cast<int>(d.pass), d.frame_id};
            auto it = row_of.find(key);
            if (it == row_of.end()) {
                FrameRow row;
                row.frame_id = d.frame_id;
                row.pass = d.pass;
                row.packets = d.packet_count;
                it = row_of.emplace(key, res.record.rows.size()).first;
                res.record.rows.push_back(row);
            }
            FrameRow& row = res.record.rows[it->second];
            row.delivered_wire_bytes += got->bytes.size();
            if (d.header) {
                row.raw_bytes = d.header->raw_size;
                row.compressed_bytes = d.header->compressed_size;
            }
            for (auto& ev : assembler.ingest(d, at)) {
                if (ev.status != FrameStatus::complete) continue;
                FrameRow& done = res.record.rows[row_of.at({static_cast<int>(ev.pass), ev.frame_id})];
                done.delivered = true;
                done.end_to_end_ms = at - cfg.trajectory.time_ms(ev.frame_id);
                const int pk = static_cast<int>(ev.pass);
                if (auto la = last_arrival.find(pk); la != last_arrival.end()) done.frame_time_ms = at - la->second;
                last_arrival[pk] = at;
                try {
                    client.receive(decode_frame(*ev.frame));
                } catch (const DecodeError&) {
                    done.delivered = false;
                }
            }
        }
        assembler.expire(now_ms());
        detail::finish_tick(res, opt, t, client.present(pose));
    }
    res.record.channel_delivered_bytes = res.downlink.delivered_bytes;
    res.record.wall_seconds = now_ms() / 1000.0;
    return res;
}

}  // namespace dhrs
