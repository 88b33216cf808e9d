#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "rcnn/binio.hpp"
#include "rcnn/config.hpp"
#include "rcnn/params.hpp"

namespace rcnn {

// Checkpoint layout (all little-endian):
//   "RCNN"                     4 bytes magic
//   version                    u16 (currently 1)
//   config                     24 x u32: cliques, max_frames, min_frames,
//                              classes, frame_h, frame_w, channels,
//                              conv1_kernels, conv2_kernels, conv3_kernels,
//                              conv1.h/.w/.t, conv2.h/.w/.t, conv3.h/.w,
//                              pool1.h/.w, pool2.h/.w, hidden_units,
//                              anchor_frames
//   parameters                 f32 each, canonical traversal order
//   checksum                   u32 CRC-32 of everything after the magic
inline constexpr std::uint16_t kCheckpointVersion = 1;

namespace detail {

inline std::vector<int> config_fields(const ModelConfig& c) {
    return {c.cliques,  c.max_frames, c.min_frames, c.classes,  c.frame_h,  c.frame_w,
            c.channels, c.conv1_kernels, c.conv2_kernels, c.conv3_kernels,
            c.conv1.h,  c.conv1.w,   c.conv1.t,    c.conv2.h,  c.conv2.w,  c.conv2.t,
            c.conv3.h,  c.conv3.w,   c.pool1.h,    c.pool1.w,  c.pool2.h,  c.pool2.w,
            c.hidden_units, c.anchor_frames};
}

inline ModelConfig config_from_fields(const std::vector<std::uint32_t>& f) {
    ModelConfig c;
    int i = 0;
    auto next = [&f, &i] { return static_cast<int>(f[static_cast<std::size_t>(i++)]); };
    c.cliques = next();
    c.max_frames = next();
    c.min_frames = next();
    c.classes = next();
    c.frame_h = next();
    c.frame_w = next();
    c.channels = next();
    c.conv1_kernels = next();
    c.conv2_kernels = next();
    c.conv3_kernels = next();
    c.conv1.h = next();
    c.conv1.w = next();
    c.conv1.t = next();
    c.conv2.h = next();
    c.conv2.w = next();
    c.conv2.t = next();
    c.conv3.h = next();
    c.conv3.w = next();
    c.pool1.h = next();
    c.pool1.w = next();
    c.pool2.h = next();
    c.pool2.w = next();
    c.hidden_units = next();
    c.anchor_frames = next();
    return c;
}

inline void push_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(std::uint8_t(v));
    b.push_back(std::uint8_t(v >> 8));
}
inline void push_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(std::uint8_t(v));
    b.push_back(std::uint8_t(v >> 8));
    b.push_back(std::uint8_t(v >> 16));
    b.push_back(std::uint8_t(v >> 24));
}

}  // namespace detail

inline void save_checkpoint(const Parameters<float>& params, const ModelConfig& config,
                            const std::string& path) {
    std::vector<std::uint8_t> payload;
    payload.reserve(2 + 24 * 4 + static_cast<std::size_t>(parameter_count(params)) * 4);
    detail::push_u16(payload, kCheckpointVersion);
    for (int v : detail::config_fields(config)) detail::push_u32(payload, std::uint32_t(v));
    for_each_param_span(params, [&payload](const float* p, std::int64_t n) {
        for (std::int64_t i = 0; i < n; ++i) {
            std::uint32_t bits;
            std::memcpy(&bits, p + i, 4);
            detail::push_u32(payload, bits);
        }
    });

    BinWriter w(path);
    w.bytes("RCNN", 4);
    w.bytes(payload.data(), payload.size());
    w.u32(crc32(payload.data(), payload.size()));
    w.close();
}

inline std::pair<Parameters<float>, ModelConfig> load_checkpoint(const std::string& path) {
    BinReader r(path);
    if (r.remaining() < 4 + 2 + 24 * 4 + 4)
        throw FormatError("checkpoint too small to hold header", r.remaining());
    const std::uint8_t* magic = r.raw(4);
    if (std::memcmp(magic, "RCNN", 4) != 0)
        throw FormatError("bad checkpoint magic", 0);

    // Checksum covers everything between the magic and the final u32.
    const std::size_t payload_len = r.remaining() - 4;
    const std::uint32_t want = crc32(r.raw(payload_len), payload_len);
    const std::uint32_t got = r.u32();
    if (want != got)
        throw FormatError("checkpoint checksum mismatch", 4 + payload_len);

    BinReader body(path);
    body.raw(4);
    const std::uint16_t version = body.u16();
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
    std::vector<std::uint32_t> fields(24);
    for (auto& f : fields) f = body.u32();
    ModelConfig config = detail::config_from_fields(fields);
    config.validate();

    const std::int64_t expect = parameter_count(config);
    if (body.remaining() != static_cast<std::size_t>(expect) * 4 + 4)
        throw FormatError("checkpoint parameter payload is " +
                              std::to_string(body.remaining() - 4) + " bytes, config needs " +
                              std::to_string(expect * 4),
                          body.offset());

    // Structure obtained via init, then overwritten value-for-value.
    Parameters<float> params = init_parameters<float>(config, 0);
    for_each_param_span(params, [&body](float* p, std::int64_t n) {
        for (std::int64_t i = 0; i < n; ++i) p[i] = body.f32();
    });
    return {std::move(params), config};
}

}  // namespace rcnn
