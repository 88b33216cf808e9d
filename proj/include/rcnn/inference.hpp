#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "rcnn/network.hpp"
#include "rcnn/parallel.hpp"

namespace rcnn {

// Per-sample memo for the brute search over segmentations. The convolution
// stack is translation-equivariant along time, so one full-video pass per
// clique yields every window's chain maps: window (s, t) owns the temporal
// offsets s-1 .. s-1 + (t - shrink) - 1 of the full maps, with sums identical
// (order and all) to running the clique on the window alone. On top of that
// the first-dense partial projection of every reachable window is cached, so
// scoring a candidate H is a few vector adds plus the head.
template <class Scalar>
class WindowScoreCache {
public:
    WindowScoreCache(const Tensor<Scalar>& frames, const Parameters<Scalar>& params,
                     const ModelConfig& config, int threads = 1)
        : config_(config), tspan_(config.max_frames - config.min_frames + 1) {
        partials_.resize(static_cast<std::size_t>(config.cliques));
        parallel_for(config.cliques, threads, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t i = begin; i < end; ++i) build_clique(static_cast<int>(i), frames, params);
        });
    }

    const Tensor<Scalar>& partial(int clique, int start, int length) const {
        return partials_[static_cast<std::size_t>(clique)]
                        [static_cast<std::size_t>((start - 1) * tspan_ + length - config_.min_frames)];
    }

private:
    void build_clique(int i, const Tensor<Scalar>& frames, const Parameters<Scalar>& params) {
        const int anchors = config_.anchor_frames;
        const int cliques = config_.cliques;
        const int tmin = config_.min_frames;
        auto& slot = partials_[static_cast<std::size_t>(i)];
        slot.resize(static_cast<std::size_t>(anchors) * tspan_);

        std::vector<Tensor<Scalar>> chains =
            clique_pipeline(frames, params.cliques[i], config_);
        const int s_lo = 1 + i * tmin;
        const int s_hi = anchors + 1 - (cliques - i) * tmin;
        for (int s = s_lo; s <= s_hi; ++s) {
            const int t_hi =
                std::min(config_.max_frames, anchors + 1 - s - (cliques - 1 - i) * tmin);
            for (int t = tmin; t <= t_hi; ++t) {
                Tensor<Scalar> features = assemble_clique_features(
                    chains, s - 1, t - config_.temporal_shrink(), config_);
                slot[static_cast<std::size_t>((s - 1) * tspan_ + t - tmin)] =
                    clique_partial_projection(params.fc1, i, features, config_);
            }
        }
    }

    ModelConfig config_;
    int tspan_;
    std::vector<std::vector<Tensor<Scalar>>> partials_;
};

template <class Scalar>
struct Candidate {
    double score = -std::numeric_limits<double>::infinity();
    int label = std::numeric_limits<int>::max();        // 1-based
    std::int64_t rank = std::numeric_limits<std::int64_t>::max();  // enumeration index
    LatentVars latent;
    Tensor<Scalar> probs;

    // Total order: higher score, then smaller label, then lexicographically
    // smaller H (= smaller enumeration rank). Makes the parallel reduction
    // associative, commutative, and schedule-independent.
    bool beats(const Candidate& o) const {
        if (score != o.score) return score > o.score;
        if (label != o.label) return label < o.label;
        return rank < o.rank;
    }
};

namespace detail {

// Evaluates every valid H; fixed_label > 0 scores F_label only, otherwise
// all labels compete. Threads split the candidate stream by rank modulo.
template <class Scalar>
Candidate<Scalar> scan_candidates(const WindowScoreCache<Scalar>& cache,
                                  const Parameters<Scalar>& params, const ModelConfig& config,
                                  int fixed_label, int threads) {
    const int nthreads = std::max(1, effective_threads(threads));
    std::vector<Candidate<Scalar>> best(static_cast<std::size_t>(nthreads));

    auto worker = [&](int tid) {
        LatentEnumerator en(config.anchor_frames, config.cliques, config.min_frames,
                            config.max_frames);
        LatentVars h;
        Candidate<Scalar>& local = best[static_cast<std::size_t>(tid)];
        std::vector<const Tensor<Scalar>*> partials(static_cast<std::size_t>(config.cliques));
        for (std::int64_t rank = 0; en.next(h); ++rank) {
            if (nthreads > 1 && rank % nthreads != tid) continue;
            for (int i = 0; i < config.cliques; ++i)
                partials[static_cast<std::size_t>(i)] = &cache.partial(i, h.starts[i], h.lengths[i]);
            HeadResult<Scalar> head = head_forward_ptrs(partials, params);
            if (fixed_label > 0) {
                Candidate<Scalar> c;
                c.score = double(head.probs[fixed_label - 1]);
                c.label = fixed_label;
                c.rank = rank;
                if (c.beats(local)) {
                    c.latent = h;
                    c.probs = std::move(head.probs);
                    local = std::move(c);
                }
            } else {
                for (int y = 1; y <= config.classes; ++y) {
                    Candidate<Scalar> c;
                    c.score = double(head.probs[y - 1]);
                    c.label = y;
                    c.rank = rank;
                    if (c.beats(local)) {
                        c.latent = h;
                        c.probs = head.probs;
                        local = std::move(c);
                    }
                }
            }
        }
    };

    if (nthreads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }

    Candidate<Scalar> winner;
    for (auto& c : best)
        if (c.rank != std::numeric_limits<std::int64_t>::max() && c.beats(winner))
            winner = std::move(c);
    if (winner.rank == std::numeric_limits<std::int64_t>::max())
        throw ArgumentError("latent search: no valid segmentation for anchors=" +
                            std::to_string(config.anchor_frames) + " cliques=" +
                            std::to_string(config.cliques) + " frames in [" +
                            std::to_string(config.min_frames) + "," +
                            std::to_string(config.max_frames) + "]");
    return winner;
}

}  // namespace detail

template <class Scalar>
struct EstepResult {
    LatentVars latent;
    Tensor<Scalar> probs;  // F(X, w, H*) at the chosen segmentation
};

// E-step assignment: H* = argmax_H F_y(X, w, H) over the exhaustive
// enumeration; ties resolve to the lexicographically smallest H. The result
// is independent of evaluation order and thread count.
template <class Scalar>
EstepResult<Scalar> estep_assign_full(const Tensor<Scalar>& frames, int label,
                                      const Parameters<Scalar>& params,
                                      const ModelConfig& config, int threads = 1) {
    if (label < 1 || label > config.classes)
        throw ArgumentError("estep_assign: label " + std::to_string(label) + " outside 1.." +
                            std::to_string(config.classes));
    WindowScoreCache<Scalar> cache(frames, params, config, threads);
    Candidate<Scalar> c = detail::scan_candidates(cache, params, config, label, threads);
    return {std::move(c.latent), std::move(c.probs)};
}

template <class Scalar>
LatentVars estep_assign(const Tensor<Scalar>& frames, int label, const Parameters<Scalar>& params,
                        const ModelConfig& config, int threads = 1) {
    return estep_assign_full(frames, label, params, config, threads).latent;
}

template <class Scalar>
struct InferResult {
    int label = 0;  // 1-based
    LatentVars latent;
    double probability = 0.0;
};

// Brute-search inference: (y*, H*) = argmax over labels and valid
// segmentations of F_y(X, w, H); ties prefer the smaller label, then the
// lexicographically smaller H. Deterministic under any parallel schedule.
template <class Scalar>
InferResult<Scalar> infer(const Tensor<Scalar>& frames, const Parameters<Scalar>& params,
                          const ModelConfig& config, int threads = 1) {
    WindowScoreCache<Scalar> cache(frames, params, config, threads);
    Candidate<Scalar> c = detail::scan_candidates(cache, params, config, 0, threads);
    return {c.label, std::move(c.latent), c.score};
}

}  // namespace rcnn
