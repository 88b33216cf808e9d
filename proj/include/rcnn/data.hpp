#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rcnn/binio.hpp"
#include "rcnn/config.hpp"
#include "rcnn/latent.hpp"
#include "rcnn/rng.hpp"
#include "rcnn/tensor.hpp"

namespace rcnn {

inline constexpr std::uint16_t kSampleVersion = 1;

// One preprocessed activity video: anchor frames as (channels, A, H, W)
// with pixel values in [0,1]. Two channels (gray, depth) for recognition
// samples; one channel (gray) for pretraining samples.
template <class Scalar>
struct VideoSampleT {
    Tensor<Scalar> frames;
    int label = 0;    // 1-based class index
    int subject = 0;  // used for subject-wise fold splitting
};
using VideoSample = VideoSampleT<float>;

template <class Target, class Scalar>
VideoSampleT<Target> sample_cast(const VideoSampleT<Scalar>& s) {
    return {s.frames.template cast<Target>(), s.label, s.subject};
}

struct ManifestEntry {
    std::string path;
    int label = 0;
    int subject = 0;
    int fold = 0;  // 0 = unassigned
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::vector<std::string> class_names;
    int anchors = 0, frame_h = 0, frame_w = 0, channels = 0;
};

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

namespace detail {
// Mean absolute gray difference between two frames of a (ch,T,H,W) tensor.
template <class Scalar>
double gray_mad(const Tensor<Scalar>& frames, int a, int b) {
    const Shape& s = frames.shape();
    const std::int64_t plane = std::int64_t(s[2]) * s[3];
    ConstArrayMap<Scalar> fa(&frames(0, a, 0, 0), plane);
    ConstArrayMap<Scalar> fb(&frames(0, b, 0, 0), plane);
    return double((fa - fb).abs().sum()) / double(plane);
}
}  // namespace detail

// Brings a video to exactly `target` frames. Long videos lose, one at a
// time, the frame whose gray plane differs least (mean absolute difference)
// from its current predecessor; neighbor differences are recomputed after
// each removal and the first frame is never removed. Short videos repeat
// the last frame.
template <class Scalar>
Tensor<Scalar> normalize_frames(const Tensor<Scalar>& raw, int target = 120) {
    const Shape& s = raw.shape();
    if (s.rank() != 4)
        throw DimensionError("normalize_frames: need (channels,T,H,W), got " + s.str());
    const int t_raw = s[1];
    if (t_raw == target) return raw;

    std::vector<int> kept;
    if (t_raw < target) {
        for (int i = 0; i < t_raw; ++i) kept.push_back(i);
        while (static_cast<int>(kept.size()) < target) kept.push_back(t_raw - 1);
    } else {
        kept.resize(static_cast<std::size_t>(t_raw));
        for (int i = 0; i < t_raw; ++i) kept[static_cast<std::size_t>(i)] = i;
        std::vector<double> diff(static_cast<std::size_t>(t_raw), 0.0);
        for (int i = 1; i < t_raw; ++i)
            diff[static_cast<std::size_t>(i)] = detail::gray_mad(raw, kept[i], kept[i - 1]);
        while (static_cast<int>(kept.size()) > target) {
            std::size_t drop = 1;
            for (std::size_t i = 2; i < kept.size(); ++i)
                if (diff[i] < diff[drop]) drop = i;
            kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(drop));
            diff.erase(diff.begin() + static_cast<std::ptrdiff_t>(drop));
            if (drop < kept.size())
                diff[drop] = detail::gray_mad(raw, kept[drop], kept[drop - 1]);
        }
    }

    Tensor<Scalar> out(Shape{s[0], target, s[2], s[3]});
    const std::int64_t plane = std::int64_t(s[2]) * s[3];
    for (int c = 0; c < s[0]; ++c)
        for (int i = 0; i < target; ++i)
            std::copy(&raw(c, kept[static_cast<std::size_t>(i)], 0, 0),
                      &raw(c, kept[static_cast<std::size_t>(i)], 0, 0) + plane,
                      &out(c, i, 0, 0));
    return out;
}

// 30 anchor frames out of 120 at stride 4: 1-based indices 1, 5, ..., 117.
template <class Scalar>
Tensor<Scalar> select_anchors(const Tensor<Scalar>& frames) {
    const Shape& s = frames.shape();
    if (s.rank() != 4)
        throw DimensionError("select_anchors: need (channels,T,H,W), got " + s.str());
    if (s[1] != 120)
        throw ArgumentError("select_anchors: expected 120 frames, got " + std::to_string(s[1]));
    Tensor<Scalar> out(Shape{s[0], 30, s[2], s[3]});
    const std::int64_t plane = std::int64_t(s[2]) * s[3];
    for (int c = 0; c < s[0]; ++c)
        for (int k = 0; k < 30; ++k)
            std::copy(&frames(c, 4 * k, 0, 0), &frames(c, 4 * k, 0, 0) + plane,
                      &out(c, k, 0, 0));
    return out;
}

// Bilinear resize of one (H,W) plane; half-pixel centers, edge clamped.
// Pass-through (bit-exact) when the size already matches.
template <class Scalar>
Tensor<Scalar> resize(const Tensor<Scalar>& frame, int out_h = 60, int out_w = 80) {
    const Shape& s = frame.shape();
    if (s.rank() != 2)
        throw DimensionError("resize: need (H,W), got " + s.str());
    const int h = s[0], w = s[1];
    if (h == out_h && w == out_w) return frame;
    Tensor<Scalar> out(Shape{out_h, out_w});
    const double sy = double(h) / out_h;
    const double sx = double(w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::min(std::max(fy, 0.0), double(h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::min(std::max(fx, 0.0), double(w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            const double v = (1 - wy) * ((1 - wx) * frame(y0, x0) + wx * frame(y0, x1)) +
                             wy * ((1 - wx) * frame(y1, x0) + wx * frame(y1, x1));
            out(y, x) = static_cast<Scalar>(v);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sample container: "RGBD", version u16, channels u8, A u8, H u16, W u16,
// label u16, subject u16, then channel-major planes as little-endian f32.
// ---------------------------------------------------------------------------

inline void save_sample(const VideoSample& sample, const std::string& path) {
    const Shape& s = sample.frames.shape();
    if (s.rank() != 4)
        throw DimensionError("save_sample: frames must be (channels,A,H,W), got " + s.str());
    if (s[1] > 255)
        throw ArgumentError("save_sample: anchor count " + std::to_string(s[1]) + " > 255");
    BinWriter w(path);
    w.bytes("RGBD", 4);
    w.u16(kSampleVersion);
    w.u8(std::uint8_t(s[0]));
    w.u8(std::uint8_t(s[1]));
    w.u16(std::uint16_t(s[2]));
    w.u16(std::uint16_t(s[3]));
    w.u16(std::uint16_t(sample.label));
    w.u16(std::uint16_t(sample.subject));
    for (std::int64_t i = 0; i < sample.frames.size(); ++i) w.f32(sample.frames[i]);
    w.close();
}

inline VideoSample load_sample(const std::string& path) {
    BinReader r(path);
    if (r.remaining() < 14) throw FormatError("sample container too small", r.remaining());
    if (std::memcmp(r.raw(4), "RGBD", 4) != 0) throw FormatError("bad sample magic", 0);
    const std::uint16_t version = r.u16();
    if (version != kSampleVersion)
        throw FormatError("unsupported sample version " + std::to_string(version), 4);
    const int channels = r.u8();
    const int anchors = r.u8();
    const int h = r.u16();
    const int w = r.u16();
    VideoSample sample;
    sample.label = r.u16();
    sample.subject = r.u16();
    if (channels < 1 || anchors < 1 || h < 1 || w < 1)
        throw FormatError("sample header has zero extent", 6);
    const std::int64_t n = std::int64_t(channels) * anchors * h * w;
    if (r.remaining() != static_cast<std::size_t>(n) * 4)
        throw FormatError("sample payload is " + std::to_string(r.remaining()) +
                              " bytes, header needs " + std::to_string(n * 4),
                          r.offset());
    sample.frames = Tensor<float>(Shape{channels, anchors, h, w});
    for (std::int64_t i = 0; i < n; ++i) sample.frames[i] = r.f32();
    return sample;
}

// ---------------------------------------------------------------------------
// Manifest: comma-separated with header `path,label,subject,fold`; class
// names and the config echo ride along as '#' comment lines.
// ---------------------------------------------------------------------------

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "# anchors=" << m.anchors << " frame_h=" << m.frame_h << " frame_w=" << m.frame_w
        << " channels=" << m.channels << "\n";
    if (!m.class_names.empty()) {
        out << "# classes=";
        for (std::size_t i = 0; i < m.class_names.size(); ++i)
            out << (i ? "," : "") << m.class_names[i];
        out << "\n";
    }
    out << "path,label,subject,fold\n";
    for (const auto& e : m.entries)
        out << e.path << "," << e.label << "," << e.subject << "," << e.fold << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    DatasetManifest m;
    std::string line;
    bool saw_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream is(line.substr(1));
            std::string tok;
            while (is >> tok) {
                auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                const std::string val = tok.substr(eq + 1);
                if (key == "anchors") m.anchors = std::stoi(val);
                else if (key == "frame_h") m.frame_h = std::stoi(val);
                else if (key == "frame_w") m.frame_w = std::stoi(val);
                else if (key == "channels") m.channels = std::stoi(val);
                else if (key == "classes") {
                    std::istringstream cs(val);
                    std::string name;
                    while (std::getline(cs, name, ',')) m.class_names.push_back(name);
                }
            }
            continue;
        }
        if (!saw_header) {
            if (line != "path,label,subject,fold")
                throw FormatError("manifest line " + std::to_string(line_no) +
                                      ": expected header path,label,subject,fold",
                                  0);
            saw_header = true;
            continue;
        }
        std::istringstream is(line);
        ManifestEntry e;
        std::string tok;
        if (!std::getline(is, e.path, ',') || !std::getline(is, tok, ','))
            throw FormatError("manifest line " + std::to_string(line_no) + ": too few fields", 0);
        e.label = std::stoi(tok);
        if (!std::getline(is, tok, ','))
            throw FormatError("manifest line " + std::to_string(line_no) + ": too few fields", 0);
        e.subject = std::stoi(tok);
        if (!std::getline(is, tok, ','))
            throw FormatError("manifest line " + std::to_string(line_no) + ": too few fields", 0);
        e.fold = std::stoi(tok);
        m.entries.push_back(std::move(e));
    }
    if (!saw_header) throw FormatError("manifest has no header line", 0);
    return m;
}

inline std::vector<VideoSample> load_dataset(const DatasetManifest& m,
                                             const std::string& base_dir) {
    std::vector<VideoSample> samples;
    samples.reserve(m.entries.size());
    for (const auto& e : m.entries) {
        VideoSample s = load_sample((std::filesystem::path(base_dir) / e.path).string());
        if (s.label != e.label || s.subject != e.subject)
            throw FormatError("sample " + e.path + " disagrees with manifest (label " +
                                  std::to_string(s.label) + " vs " + std::to_string(e.label) +
                                  ")",
                              0);
        samples.push_back(std::move(s));
    }
    return samples;
}

// Subjects partitioned into `folds` seeded groups of near-equal size; every
// sample inherits its subject's fold.
inline DatasetManifest fold_split(DatasetManifest m, int folds, std::uint64_t seed) {
    if (folds < 1) throw ArgumentError("fold_split: folds must be >= 1");
    std::vector<int> subjects;
    for (const auto& e : m.entries)
        if (std::find(subjects.begin(), subjects.end(), e.subject) == subjects.end())
            subjects.push_back(e.subject);
    std::sort(subjects.begin(), subjects.end());
    if (static_cast<int>(subjects.size()) < folds)
        throw ArgumentError("fold_split: " + std::to_string(subjects.size()) +
                            " subjects for " + std::to_string(folds) + " folds");
    SeededRng rng(seed);
    rng.shuffle(subjects);
    std::vector<std::pair<int, int>> fold_of;  // (subject, fold)
    for (std::size_t i = 0; i < subjects.size(); ++i)
        fold_of.emplace_back(subjects[i], static_cast<int>(i % folds) + 1);
    for (auto& e : m.entries)
        for (const auto& [subj, fold] : fold_of)
            if (e.subject == subj) e.fold = fold;
    return m;
}

// ---------------------------------------------------------------------------
// Synthetic activity generator. Each class is a fixed ordered sequence of
// `cliques` motion motifs; a motif is a bright Gaussian blob crossing the
// frame along a motif-specific direction, with a motif-specific depth-plane
// intensity. Classes are cyclic shifts of one shared motif set, so the class
// evidence is the temporal order. Per sample the segment boundaries inside
// the anchors are drawn at random (recorded as ground truth); between
// segments the blob rests. Gaussian pixel noise on both channels, clamped
// to [0,1].
// ---------------------------------------------------------------------------

struct SynthOptions {
    std::uint64_t seed = 1;
    int classes = 3;
    int per_class = 10;
    int subjects = 4;
    float noise_sigma = 0.05f;
};

struct SynthDataset {
    std::vector<VideoSample> samples;
    DatasetManifest manifest;        // paths filled in when written to disk
    std::vector<LatentVars> truth;   // planted segmentation per sample
};

namespace detail {

struct Motif {
    double angle;  // blob travel direction
    double depth;  // depth-plane blob amplitude
};

inline Motif motif_for(int cls, int slot, int cliques) {
    const int id = (cls - 1 + slot) % cliques;  // cyclic shift per class
    Motif m;
    m.angle = 2.0 * M_PI * id / cliques;
    m.depth = cliques > 1 ? 0.35 + 0.6 * id / (cliques - 1) : 0.7;
    return m;
}

template <class Scalar>
void render_blob(Tensor<Scalar>& frames, int channel, int frame, double cx, double cy,
                 double amplitude, double sigma) {
    const int h = frames.shape()[2], w = frames.shape()[3];
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            frames(channel, frame, y, x) += static_cast<Scalar>(amplitude * std::exp(-d2 * inv));
        }
}

inline LatentVars draw_boundaries(int anchors, int cliques, int min_frames, int max_frames,
                                  SeededRng& rng) {
    LatentVars h;
    int used = 0;
    for (int i = 0; i < cliques; ++i) {
        const int room = anchors - used - (cliques - 1 - i) * min_frames;
        const int hi = std::min(max_frames, room);
        h.lengths.push_back(min_frames + static_cast<int>(rng.integer(
                                              static_cast<std::uint64_t>(hi - min_frames + 1))));
        used += h.lengths.back();
    }
    std::vector<int> gaps(static_cast<std::size_t>(cliques) + 1, 0);
    for (int slack = anchors - used; slack > 0; --slack)
        ++gaps[static_cast<std::size_t>(rng.integer(gaps.size()))];
    h.starts.resize(static_cast<std::size_t>(cliques));
    int at = 1 + gaps[0];
    for (int i = 0; i < cliques; ++i) {
        h.starts[static_cast<std::size_t>(i)] = at;
        at += h.lengths[static_cast<std::size_t>(i)] + gaps[static_cast<std::size_t>(i) + 1];
    }
    return h;
}

}  // namespace detail

inline SynthDataset synth_generate(const SynthOptions& opt, const ModelConfig& config) {
    if (opt.classes < 2) throw ArgumentError("synth_generate: need at least 2 classes");
    if (opt.per_class < 1 || opt.subjects < 1)
        throw ArgumentError("synth_generate: per_class and subjects must be >= 1");
    config.validate();

    const int anchors = config.anchor_frames;
    const int h = config.frame_h, w = config.frame_w;
    const int channels = config.channels;
    const double travel = 0.33 * std::min(h, w);
    const double blob_sigma = 0.11 * std::min(h, w);
    const double cx0 = (w - 1) / 2.0, cy0 = (h - 1) / 2.0;

    SeededRng rng(opt.seed);
    SynthDataset out;
    out.manifest.anchors = anchors;
    out.manifest.frame_h = h;
    out.manifest.frame_w = w;
    out.manifest.channels = channels;
    for (int k = 1; k <= opt.classes; ++k) {
        char name[16];
        std::snprintf(name, sizeof name, "class%02d", k);
        out.manifest.class_names.emplace_back(name);
    }

    int sample_index = 0;
    for (int cls = 1; cls <= opt.classes; ++cls) {
        for (int rep = 0; rep < opt.per_class; ++rep, ++sample_index) {
            LatentVars truth = detail::draw_boundaries(anchors, config.cliques,
                                                       config.min_frames, config.max_frames, rng);
            LatentCheck chk = validate(truth, anchors, config.cliques, config.min_frames,
                                       config.max_frames);
            if (!chk.ok)
                throw NumericError("synth_generate: drew invalid boundaries: " + chk.violation);

            VideoSample sample;
            sample.frames = Tensor<float>(Shape{channels, anchors, h, w});
            sample.label = cls;
            sample.subject = sample_index % opt.subjects + 1;

            // Blob positions per anchor frame: motif paths inside segments,
            // resting in the gaps.
            std::vector<double> px(static_cast<std::size_t>(anchors)),
                py(static_cast<std::size_t>(anchors));
            std::vector<double> pz(static_cast<std::size_t>(anchors), 0.5);
            {
                detail::Motif first = detail::motif_for(cls, 0, config.cliques);
                double holdx = cx0 - travel * std::cos(first.angle);
                double holdy = cy0 - travel * std::sin(first.angle);
                double holdz = first.depth;
                int seg = 0;
                for (int f = 0; f < anchors; ++f) {
                    while (seg < config.cliques &&
                           f + 1 >= truth.starts[static_cast<std::size_t>(seg)] +
                                        truth.lengths[static_cast<std::size_t>(seg)])
                        ++seg;
                    if (seg < config.cliques && f + 1 >= truth.starts[static_cast<std::size_t>(seg)]) {
                        const detail::Motif m = detail::motif_for(cls, seg, config.cliques);
                        const int t = truth.lengths[static_cast<std::size_t>(seg)];
                        const int r = f + 1 - truth.starts[static_cast<std::size_t>(seg)];
                        const double a = t > 1 ? double(r) / (t - 1) : 0.5;
                        holdx = cx0 + travel * (2.0 * a - 1.0) * std::cos(m.angle);
                        holdy = cy0 + travel * (2.0 * a - 1.0) * std::sin(m.angle);
                        holdz = m.depth;
                    }
                    px[static_cast<std::size_t>(f)] = holdx;
                    py[static_cast<std::size_t>(f)] = holdy;
                    pz[static_cast<std::size_t>(f)] = holdz;
                }
            }

            for (int f = 0; f < anchors; ++f) {
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) sample.frames(0, f, y, x) = 0.08f;
                detail::render_blob(sample.frames, 0, f, px[static_cast<std::size_t>(f)],
                                    py[static_cast<std::size_t>(f)], 0.85, blob_sigma);
                if (channels == 2) {
                    for (int y = 0; y < h; ++y)
                        for (int x = 0; x < w; ++x) sample.frames(1, f, y, x) = 0.12f;
                    detail::render_blob(sample.frames, 1, f, px[static_cast<std::size_t>(f)],
                                        py[static_cast<std::size_t>(f)],
                                        pz[static_cast<std::size_t>(f)], blob_sigma);
                }
            }
            if (opt.noise_sigma > 0) {
                for (std::int64_t i = 0; i < sample.frames.size(); ++i)
                    sample.frames[i] += static_cast<float>(opt.noise_sigma * rng.normal());
            }
            for (std::int64_t i = 0; i < sample.frames.size(); ++i)
                sample.frames[i] = std::min(std::max(sample.frames[i], 0.0f), 1.0f);

            char path[32];
            std::snprintf(path, sizeof path, "sample%04d.rgbd", sample_index);
            out.manifest.entries.push_back({path, cls, sample.subject, 0});
            out.samples.push_back(std::move(sample));
            out.truth.push_back(std::move(truth));
        }
    }
    return out;
}

inline void save_synth_dataset(const SynthDataset& ds, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        save_sample(ds.samples[i],
                    (std::filesystem::path(dir) / ds.manifest.entries[i].path).string());
    save_manifest(ds.manifest, (std::filesystem::path(dir) / "manifest.csv").string());
}

// ---------------------------------------------------------------------------
// Raw ingestion: a video directory holds frame_NNNN.gray / frame_NNNN.depth
// plane files, each `u16 width, u16 height` (little-endian) followed by
// row-major pixels: u8 for gray, u16 little-endian for depth. Gray maps to
// [0,1] by /255; depth by the sample's own maximum.
// ---------------------------------------------------------------------------

inline Tensor<float> load_raw_video(const std::string& dir, int channels) {
    std::vector<std::filesystem::path> gray_files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".gray") gray_files.push_back(e.path());
    std::sort(gray_files.begin(), gray_files.end());
    if (gray_files.empty()) throw IoError("no .gray frame planes in " + dir);

    int h = 0, w = 0;
    const int t = static_cast<int>(gray_files.size());
    Tensor<float> frames;
    float depth_max = 0.0f;
    for (int f = 0; f < t; ++f) {
        BinReader r(gray_files[static_cast<std::size_t>(f)].string());
        const int fw = r.u16();
        const int fh = r.u16();
        if (f == 0) {
            h = fh;
            w = fw;
            frames = Tensor<float>(Shape{channels, t, h, w});
        } else if (fh != h || fw != w) {
            throw FormatError("frame plane size changed mid-video in " + dir, 0);
        }
        if (r.remaining() != static_cast<std::size_t>(h) * w)
            throw FormatError("gray plane payload mismatch in " +
                                  gray_files[static_cast<std::size_t>(f)].string(),
                              r.offset());
        const std::uint8_t* px = r.raw(static_cast<std::size_t>(h) * w);
        for (int i = 0; i < h * w; ++i)
            frames[((std::int64_t(0) * t + f) * h * w) + i] = float(px[i]) / 255.0f;

        if (channels == 2) {
            std::filesystem::path dp = gray_files[static_cast<std::size_t>(f)];
            dp.replace_extension(".depth");
            BinReader dr(dp.string());
            const int dw = dr.u16();
            const int dh = dr.u16();
            if (dh != h || dw != w)
                throw FormatError("depth plane size differs from gray in " + dp.string(), 0);
            if (dr.remaining() != static_cast<std::size_t>(h) * w * 2)
                throw FormatError("depth plane payload mismatch in " + dp.string(), dr.offset());
            for (int i = 0; i < h * w; ++i) {
                const float v = float(dr.u16());
                frames[((std::int64_t(1) * t + f) * h * w) + i] = v;
                depth_max = std::max(depth_max, v);
            }
        }
    }
    if (channels == 2 && depth_max > 0.0f) {
        const std::int64_t plane_block = std::int64_t(t) * h * w;
        for (std::int64_t i = 0; i < plane_block; ++i) frames[plane_block + i] /= depth_max;
    }
    return frames;
}

// Full preprocessing pipeline: temporal normalization to 120 frames, anchor
// selection (stride 4, 30 frames), bilinear resize to the config frame size.
template <class Scalar>
Tensor<Scalar> preprocess_video(const Tensor<Scalar>& raw, const ModelConfig& config) {
    if (config.anchor_frames != 30)
        throw ArgumentError("preprocess_video: the 120->30 anchor pipeline requires "
                            "anchor_frames=30");
    Tensor<Scalar> norm = normalize_frames(raw, 120);
    Tensor<Scalar> anchors = select_anchors(norm);
    const Shape& s = anchors.shape();
    Tensor<Scalar> out(Shape{s[0], s[1], config.frame_h, config.frame_w});
    const std::int64_t in_plane = std::int64_t(s[2]) * s[3];
    const std::int64_t out_plane = std::int64_t(config.frame_h) * config.frame_w;
    for (int c = 0; c < s[0]; ++c)
        for (int f = 0; f < s[1]; ++f) {
            Tensor<Scalar> plane(Shape{s[2], s[3]});
            std::copy(&anchors(c, f, 0, 0), &anchors(c, f, 0, 0) + in_plane, plane.data());
            Tensor<Scalar> r = resize(plane, config.frame_h, config.frame_w);
            std::copy(r.data(), r.data() + out_plane, &out(c, f, 0, 0));
        }
    return out;
}

}  // namespace rcnn
