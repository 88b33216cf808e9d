#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "rcnn/errors.hpp"

namespace rcnn {

// Per-sample segmentation: clique i reads anchor frames
// [starts[i], starts[i]+lengths[i]-1], 1-based. Constraints:
//   starts[0] >= 1
//   min_frames <= lengths[i] <= max_frames
//   starts[i] + lengths[i] <= starts[i+1]      (windows may touch, not overlap)
//   starts[M-1] + lengths[M-1] - 1 <= anchors  (last window inside the video)
struct LatentVars {
    std::vector<int> starts;
    std::vector<int> lengths;

    int cliques() const { return static_cast<int>(starts.size()); }

    bool operator==(const LatentVars& o) const {
        return starts == o.starts && lengths == o.lengths;
    }
    bool operator!=(const LatentVars& o) const { return !(*this == o); }

    // Lexicographic on (s1, t1, s2, t2, ...); the enumeration emits in this
    // order, so the emission index doubles as the tie-break key.
    bool lex_less(const LatentVars& o) const {
        for (int i = 0; i < cliques(); ++i) {
            if (starts[i] != o.starts[i]) return starts[i] < o.starts[i];
            if (lengths[i] != o.lengths[i]) return lengths[i] < o.lengths[i];
        }
        return false;
    }

    std::string str() const {
        std::string s = "[";
        for (int i = 0; i < cliques(); ++i) {
            if (i) s += " ";
            s += "s" + std::to_string(i + 1) + "=" + std::to_string(starts[i]) + ",t" +
                 std::to_string(i + 1) + "=" + std::to_string(lengths[i]);
        }
        return s + "]";
    }
};

struct LatentCheck {
    bool ok = true;
    std::string violation;  // first violated constraint, empty when ok
};

inline LatentCheck validate(const LatentVars& h, int anchors, int cliques, int min_frames,
                            int max_frames) {
    if (h.cliques() != cliques || static_cast<int>(h.lengths.size()) != cliques)
        return {false, "clique count: expected " + std::to_string(cliques) + " windows"};
    if (cliques > 0 && h.starts[0] < 1)
        return {false, "start bound: s1 = " + std::to_string(h.starts[0]) + " < 1"};
    for (int i = 0; i < cliques; ++i) {
        if (h.lengths[i] < min_frames || h.lengths[i] > max_frames)
            return {false, "length bound: t" + std::to_string(i + 1) + " = " +
                               std::to_string(h.lengths[i]) + " outside [" +
                               std::to_string(min_frames) + "," + std::to_string(max_frames) + "]"};
    }
    for (int i = 0; i + 1 < cliques; ++i) {
        if (h.starts[i] + h.lengths[i] > h.starts[i + 1])
            return {false, "overlap: s" + std::to_string(i + 1) + " + t" + std::to_string(i + 1) +
                               " > s" + std::to_string(i + 2)};
    }
    if (cliques > 0 && h.starts[cliques - 1] + h.lengths[cliques - 1] - 1 > anchors)
        return {false, "video bound: last window ends at " +
                           std::to_string(h.starts[cliques - 1] + h.lengths[cliques - 1] - 1) +
                           " > " + std::to_string(anchors)};
    return {};
}

namespace detail {
inline std::atomic<std::uint64_t>& enumeration_counter_ref() {
    static std::atomic<std::uint64_t> counter{0};
    return counter;
}
}  // namespace detail

// Instrumentation: how many enumerations have been started. Lets tests pin
// down that the pretraining path never touches the latent search.
inline std::uint64_t enumeration_count() { return detail::enumeration_counter_ref().load(); }
inline void reset_enumeration_count() { detail::enumeration_counter_ref().store(0); }

// Streams every valid segmentation exactly once, in lexicographic order on
// (s1, t1, ..., sM, tM). O(cliques) state.
class LatentEnumerator {
public:
    LatentEnumerator(int anchors, int cliques, int min_frames, int max_frames)
        : anchors_(anchors), cliques_(cliques), min_(min_frames), max_(max_frames) {
        detail::enumeration_counter_ref().fetch_add(1);
        current_.starts.assign(static_cast<std::size_t>(cliques_), 0);
        current_.lengths.assign(static_cast<std::size_t>(cliques_), 0);
        exhausted_ = cliques_ < 1 || min_ > max_ || !descend(0, 1);
    }

    // Writes the next segmentation into `out`; false once the stream ends.
    bool next(LatentVars& out) {
        if (exhausted_) return false;
        out = current_;
        ++emitted_;
        exhausted_ = !advance(cliques_ - 1);
        return true;
    }

    std::int64_t emitted() const { return emitted_; }

private:
    // Later cliques each need at least min_ frames.
    int max_start(int i) const { return anchors_ + 1 - (cliques_ - i) * min_; }
    int max_length(int i) const {
        int room = anchors_ + 1 - current_.starts[static_cast<std::size_t>(i)] -
                   (cliques_ - 1 - i) * min_;
        return room < max_ ? room : max_;
    }

    // Fills cliques [i, M) with their smallest feasible windows.
    bool descend(int i, int start_min) {
        for (; i < cliques_; ++i) {
            if (start_min > max_start(i)) return false;
            current_.starts[static_cast<std::size_t>(i)] = start_min;
            if (max_length(i) < min_) return false;
            current_.lengths[static_cast<std::size_t>(i)] = min_;
            start_min += min_;
        }
        return true;
    }

    // Odometer step: bump the deepest field that still has room, then reset
    // everything after it to minimal values.
    bool advance(int i) {
        for (; i >= 0; --i) {
            auto ui = static_cast<std::size_t>(i);
            if (current_.lengths[ui] < max_length(i)) {
                ++current_.lengths[ui];
                if (descend(i + 1, current_.starts[ui] + current_.lengths[ui])) return true;
                // Longer window left no room downstream; fall through to the
                // next start (larger lengths only shrink the room further).
            }
            while (current_.starts[ui] < max_start(i)) {
                ++current_.starts[ui];
                current_.lengths[ui] = min_;
                if (descend(i + 1, current_.starts[ui] + min_)) return true;
            }
        }
        return false;
    }

    int anchors_, cliques_, min_, max_;
    LatentVars current_;
    bool exhausted_ = false;
    std::int64_t emitted_ = 0;
};

inline std::int64_t count_latents(int anchors, int cliques, int min_frames, int max_frames) {
    LatentEnumerator e(anchors, cliques, min_frames, max_frames);
    LatentVars h;
    std::int64_t n = 0;
    while (e.next(h)) ++n;
    return n;
}

// Fixed even segmentation used by pretraining and the non-latent baseline:
// window i starts at 1 + (i-1)*ceil(A/M) with length min(max_frames,
// remaining, ceil(A/M)). Throws if the result violates the constraints.
inline LatentVars even_split(int anchors, int cliques, int min_frames, int max_frames) {
    const int step = (anchors + cliques - 1) / cliques;
    LatentVars h;
    for (int i = 0; i < cliques; ++i) {
        const int s = 1 + i * step;
        int len = anchors - s + 1;
        if (len > step) len = step;
        if (len > max_frames) len = max_frames;
        h.starts.push_back(s);
        h.lengths.push_back(len);
    }
    LatentCheck chk = validate(h, anchors, cliques, min_frames, max_frames);
    if (!chk.ok)
        throw ArgumentError("even_split: " + h.str() + " invalid: " + chk.violation);
    return h;
}

}  // namespace rcnn
