#pragma once

#include <cstdint>
#include <string>

#include "rcnn/errors.hpp"
#include "rcnn/tensor.hpp"

namespace rcnn {

struct Kernel3Spec {
    int h = 1, w = 1, t = 1;
};
struct Kernel2Spec {
    int h = 1, w = 1;
};
struct PoolSpec {
    int h = 1, w = 1;
};

// Architecture hyperparameters. The network is `cliques` identical-structure
// subnetworks (independent weights), each conv3d -> pool -> conv3d -> pool ->
// conv2d over one temporal segment of the anchor frames, merged by two shared
// full-connection layers.
struct ModelConfig {
    int cliques = 4;        // segments / subnetworks
    int max_frames = 9;     // most frames a clique accepts
    int min_frames = 5;     // fewest frames a clique accepts
    int classes = 10;
    int frame_h = 60;
    int frame_w = 80;
    int channels = 2;       // gray(+depth)
    int conv1_kernels = 7;
    int conv2_kernels = 5;  // per first-layer set
    int conv3_kernels = 4;  // per second-layer set
    Kernel3Spec conv1{7, 9, 3};
    Kernel3Spec conv2{7, 7, 3};
    Kernel2Spec conv3{4, 6};
    PoolSpec pool1{3, 3};
    PoolSpec pool2{3, 3};
    int hidden_units = 64;
    int anchor_frames = 30;

    static ModelConfig defaults(int classes) {
        ModelConfig c;
        c.classes = classes;
        return c;
    }

    // Same architecture at half spatial resolution (kernels halved, rounded
    // up), for desk-scale experiments. Feature lengths match the full config.
    static ModelConfig reduced(int classes) {
        ModelConfig c;
        c.classes = classes;
        c.frame_h = 30;
        c.frame_w = 40;
        c.conv1 = {4, 5, 3};
        c.conv2 = {4, 4, 3};
        c.conv3 = {2, 3};
        return c;
    }

    // Small enough for exhaustive finite-difference checks in 64-bit.
    static ModelConfig tiny() {
        ModelConfig c;
        c.cliques = 2;
        c.max_frames = 3;
        c.min_frames = 2;
        c.classes = 2;
        c.frame_h = 8;
        c.frame_w = 8;
        c.channels = 2;
        c.conv1_kernels = 2;
        c.conv2_kernels = 2;
        c.conv3_kernels = 1;
        c.conv1 = {3, 3, 2};
        c.conv2 = {2, 2, 1};
        c.conv3 = {1, 1};
        c.pool1 = {2, 2};
        c.pool2 = {2, 2};
        c.hidden_units = 6;
        c.anchor_frames = 8;
        return c;
    }

    // Temporal maps lost across the two 3D convolutions.
    int temporal_shrink() const { return (conv1.t - 1) + (conv2.t - 1); }

    // Temporal feature maps surviving after stage `stage` (1 or 2) for a
    // segment of `frames` input frames.
    int valid_maps(int stage, int frames) const {
        return frames - (stage >= 1 ? conv1.t - 1 : 0) - (stage >= 2 ? conv2.t - 1 : 0);
    }

    int slots_per_chain() const { return max_frames - temporal_shrink(); }
    int chain_count() const { return conv1_kernels * conv2_kernels * conv3_kernels; }

    struct StageShapes {
        int conv1_h, conv1_w;
        int pool1_h, pool1_w;
        int conv2_h, conv2_w;
        int pool2_h, pool2_w;
        int conv3_h, conv3_w;
    };

    static int pooled_extent(int in, int window) { return (in + window - 1) / window; }

    StageShapes stage_shapes() const {
        StageShapes s{};
        s.conv1_h = frame_h - conv1.h + 1;
        s.conv1_w = frame_w - conv1.w + 1;
        s.pool1_h = pooled_extent(s.conv1_h, pool1.h);
        s.pool1_w = pooled_extent(s.conv1_w, pool1.w);
        s.conv2_h = s.pool1_h - conv2.h + 1;
        s.conv2_w = s.pool1_w - conv2.w + 1;
        s.pool2_h = pooled_extent(s.conv2_h, pool2.h);
        s.pool2_w = pooled_extent(s.conv2_w, pool2.w);
        s.conv3_h = s.pool2_h - conv3.h + 1;
        s.conv3_w = s.pool2_w - conv3.w + 1;
        return s;
    }

    std::int64_t map_cells() const {
        StageShapes s = stage_shapes();
        return static_cast<std::int64_t>(s.conv3_h) * s.conv3_w;
    }

    // Per-clique feature vector length, laid out as if every segment had
    // max_frames frames (shorter segments zero-fill the trailing slots).
    std::int64_t clique_feature_len() const {
        return chain_count() * static_cast<std::int64_t>(slots_per_chain()) * map_cells();
    }

    std::int64_t concat_len() const { return clique_feature_len() * cliques; }

    void validate() const {
        auto positive = [](int v, const char* name) {
            if (v < 1) throw ArgumentError(std::string("config: ") + name + " must be >= 1");
        };
        positive(cliques, "cliques");
        positive(max_frames, "max_frames");
        positive(min_frames, "min_frames");
        if (classes < 2) throw ArgumentError("config: classes must be >= 2");
        positive(frame_h, "frame_h");
        positive(frame_w, "frame_w");
        if (channels != 1 && channels != 2)
            throw ArgumentError("config: channels must be 1 or 2");
        positive(conv1_kernels, "conv1_kernels");
        positive(conv2_kernels, "conv2_kernels");
        positive(conv3_kernels, "conv3_kernels");
        positive(hidden_units, "hidden_units");
        positive(anchor_frames, "anchor_frames");
        if (min_frames > max_frames)
            throw ArgumentError("config: min_frames > max_frames");
        // A minimal segment must still yield at least one temporal map after
        // the second 3D convolution.
        if (min_frames < temporal_shrink() + 1)
            throw ArgumentError("config: min_frames " + std::to_string(min_frames) +
                                " < temporal shrink + 1 = " +
                                std::to_string(temporal_shrink() + 1));
        if (max_frames > anchor_frames)
            throw ArgumentError("config: max_frames exceeds anchor_frames");
        StageShapes s = stage_shapes();
        if (s.conv1_h < 1 || s.conv1_w < 1 || s.conv2_h < 1 || s.conv2_w < 1 ||
            s.conv3_h < 1 || s.conv3_w < 1)
            throw ArgumentError("config: a kernel exceeds its input extent somewhere in the "
                                "conv1->pool->conv2->pool->conv3 pipeline");
    }

    bool same_architecture_except_channels(const ModelConfig& o) const {
        ModelConfig a = *this, b = o;
        a.channels = b.channels = 2;
        return a.cliques == b.cliques && a.max_frames == b.max_frames &&
               a.min_frames == b.min_frames && a.classes == b.classes &&
               a.frame_h == b.frame_h && a.frame_w == b.frame_w &&
               a.conv1_kernels == b.conv1_kernels && a.conv2_kernels == b.conv2_kernels &&
               a.conv3_kernels == b.conv3_kernels && a.conv1.h == b.conv1.h &&
               a.conv1.w == b.conv1.w && a.conv1.t == b.conv1.t && a.conv2.h == b.conv2.h &&
               a.conv2.w == b.conv2.w && a.conv2.t == b.conv2.t && a.conv3.h == b.conv3.h &&
               a.conv3.w == b.conv3.w && a.pool1.h == b.pool1.h && a.pool1.w == b.pool1.w &&
               a.pool2.h == b.pool2.h && a.pool2.w == b.pool2.w &&
               a.hidden_units == b.hidden_units && a.anchor_frames == b.anchor_frames;
    }

    bool operator==(const ModelConfig& o) const {
        return same_architecture_except_channels(o) && channels == o.channels;
    }
};

}  // namespace rcnn
