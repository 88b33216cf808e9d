#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "rcnn/data.hpp"
#include "rcnn/inference.hpp"
#include "rcnn/network.hpp"
#include "rcnn/parallel.hpp"

namespace rcnn {

enum class TrainMode { kLsbp, kFixedEven, kPretrain2D };

inline const char* train_mode_name(TrainMode m) {
    switch (m) {
        case TrainMode::kLsbp: return "lsbp";
        case TrainMode::kFixedEven: return "fixed_even";
        case TrainMode::kPretrain2D: return "pretrain_2d";
    }
    return "?";
}

struct TrainConfig {
    double learning_rate = 0.002;
    double reg_lambda = 1e-4;  // weight on ||w||^2; set to 1 for the literal unweighted form
    int max_iterations = 200;
    double convergence_tol = 1e-3;  // relative cost decrease between full iterations
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::kLsbp;
    int threads = 1;
};

template <class Scalar>
struct TrainState {
    Parameters<Scalar> params;
    std::vector<LatentVars> latent;
    std::vector<double> cost_history;  // after each half-step
    int iterations = 0;
    bool converged = false;
    // Data term at fixed parameters before/after each E-step; the monotone
    // decrease of this pair is the latent-assignment sanity measure.
    std::vector<std::pair<double, double>> estep_data_terms;
};

struct CostBreakdown {
    double total = 0.0, data_term = 0.0, reg_term = 0.0;
};

// J = -(1/N) sum_i sum_k [1(y=k) log F_k + (1-1(y=k)) log(1-F_k)]
//     + reg_lambda * ||w||^2
// Per-sample losses are computed in parallel and reduced in index order, so
// the value is independent of the thread count.
template <class Scalar>
CostBreakdown cost_breakdown(const std::vector<VideoSampleT<Scalar>>& dataset,
                             const Parameters<Scalar>& params,
                             const std::vector<LatentVars>& latent, double reg_lambda,
                             const ModelConfig& config, int threads = 1) {
    if (dataset.size() != latent.size())
        throw ArgumentError("cost: need one latent assignment per sample");
    std::vector<double> losses(dataset.size(), 0.0);
    parallel_for(static_cast<std::int64_t>(dataset.size()), threads,
                 [&](std::int64_t begin, std::int64_t end) {
                     for (std::int64_t i = begin; i < end; ++i) {
                         auto ui = static_cast<std::size_t>(i);
                         Tensor<Scalar> probs = network_forward(
                             dataset[ui].frames, params, latent[ui], config);
                         losses[ui] = sample_loss(probs, dataset[ui].label);
                     }
                 });
    CostBreakdown c;
    for (double l : losses) c.data_term += l;
    c.data_term /= static_cast<double>(dataset.size());
    c.reg_term = reg_lambda * squared_norm(params);
    c.total = c.data_term + c.reg_term;
    return c;
}

template <class Scalar>
double cost(const std::vector<VideoSampleT<Scalar>>& dataset, const Parameters<Scalar>& params,
            const std::vector<LatentVars>& latent, double reg_lambda, const ModelConfig& config,
            int threads = 1) {
    return cost_breakdown(dataset, params, latent, reg_lambda, config, threads).total;
}

// One stochastic pass over the dataset at fixed latent assignments: seeded
// shuffle, then per sample w <- w - lr * (grad loss_i + 2*reg_lambda*w/N).
template <class Scalar>
Parameters<Scalar> sgd_epoch(const std::vector<VideoSampleT<Scalar>>& dataset,
                             const std::vector<LatentVars>& latent, Parameters<Scalar> params,
                             const TrainConfig& tc, const ModelConfig& config,
                             std::uint64_t epoch_seed) {
    if (dataset.empty()) throw ArgumentError("sgd_epoch: empty dataset");
    if (dataset.size() != latent.size())
        throw ArgumentError("sgd_epoch: need one latent assignment per sample");
    const auto n = static_cast<std::int64_t>(dataset.size());
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    SeededRng rng(epoch_seed);
    rng.shuffle(order);

    const auto lr = static_cast<Scalar>(tc.learning_rate);
    const auto reg_pull = static_cast<Scalar>(2.0 * tc.reg_lambda / double(n));
    Parameters<Scalar> grads = zero_like(params);
    for (std::size_t idx : order) {
        const auto& sample = dataset[idx];
        NetworkCache<Scalar> cache;
        network_forward(sample.frames, params, latent[idx], config, &cache);
        for_each_param_span(grads, [](Scalar* p, std::int64_t c) {
            std::fill(p, p + c, Scalar(0));
        });
        network_backward(cache, params, sample.label, config, grads);

        bool finite = true;
        for_each_param_span(grads, [&finite](const Scalar* p, std::int64_t c) {
            for (std::int64_t i = 0; i < c; ++i)
                if (!std::isfinite(double(p[i]))) finite = false;
        });
        if (!finite)
            throw NumericError("sgd_epoch: non-finite gradient at sample " +
                               std::to_string(idx));

        for_each_param_pair(params, grads,
                            [lr, reg_pull](Scalar* w, const Scalar* g, std::int64_t c) {
                                ArrayMap<Scalar> wv(w, c);
                                ConstArrayMap<Scalar> gv(g, c);
                                wv -= lr * (gv + reg_pull * wv);
                            });
    }
    return params;
}

namespace detail {
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}
}  // namespace detail

// The two-step training loop: E-step re-assigns each sample's segmentation
// by exhaustive search at fixed parameters (skipped in the fixed_even and
// pretrain modes), M-step is one stochastic pass of backpropagation at fixed
// segmentations. Stops when the relative cost decrease between consecutive
// iterations falls inside [0, convergence_tol), or at max_iterations.
template <class Scalar>
TrainState<Scalar> lsbp_train(const std::vector<VideoSampleT<Scalar>>& dataset,
                              Parameters<Scalar> init_params, const TrainConfig& tc,
                              const ModelConfig& config, std::ostream* log = nullptr) {
    if (dataset.empty()) throw ArgumentError("lsbp_train: empty dataset");
    if (parameter_count(init_params) != parameter_count(config))
        throw ArgumentError("lsbp_train: parameters do not match config (" +
                            std::to_string(parameter_count(init_params)) + " vs " +
                            std::to_string(parameter_count(config)) + ")");
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset[i].label < 1 || dataset[i].label > config.classes)
            throw ArgumentError("lsbp_train: sample " + std::to_string(i) + " label " +
                                std::to_string(dataset[i].label) + " outside 1.." +
                                std::to_string(config.classes));
        if (dataset[i].frames.shape()[0] != config.channels)
            throw ArgumentError("lsbp_train: sample " + std::to_string(i) + " has " +
                                std::to_string(dataset[i].frames.shape()[0]) +
                                " channels, config expects " + std::to_string(config.channels));
    }

    using Clock = std::chrono::steady_clock;
    auto ms_since = [](Clock::time_point t0) {
        return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
    };

    TrainState<Scalar> state;
    state.params = std::move(init_params);
    state.latent.assign(dataset.size(), even_split(config.anchor_frames, config.cliques,
                                                   config.min_frames, config.max_frames));
    if (log) *log << "iter,phase,J,data_term,reg_term,wall_ms\n";

    double prev_total = 0.0;
    bool have_prev = false;
    for (int iter = 1; iter <= tc.max_iterations; ++iter) {
        state.iterations = iter;
        if (tc.mode == TrainMode::kLsbp) {
            auto t0 = Clock::now();
            CostBreakdown before =
                cost_breakdown(dataset, state.params, state.latent, 0.0, config, tc.threads);
            std::vector<double> losses(dataset.size(), 0.0);
            parallel_for(static_cast<std::int64_t>(dataset.size()), tc.threads,
                         [&](std::int64_t begin, std::int64_t end) {
                             for (std::int64_t i = begin; i < end; ++i) {
                                 auto ui = static_cast<std::size_t>(i);
                                 EstepResult<Scalar> r = estep_assign_full(
                                     dataset[ui].frames, dataset[ui].label, state.params,
                                     config, 1);
                                 state.latent[ui] = std::move(r.latent);
                                 losses[ui] = sample_loss(r.probs, dataset[ui].label);
                             }
                         });
            double data_after = 0.0;
            for (double l : losses) data_after += l;
            data_after /= static_cast<double>(dataset.size());
            const double reg = tc.reg_lambda * squared_norm(state.params);
            state.estep_data_terms.emplace_back(before.data_term, data_after);
            state.cost_history.push_back(data_after + reg);
            if (log)
                *log << iter << ",E," << data_after + reg << "," << data_after << "," << reg
                     << "," << ms_since(t0) << "\n";
        }

        auto t1 = Clock::now();
        state.params = sgd_epoch(dataset, state.latent, std::move(state.params), tc, config,
                                 detail::mix_seed(tc.seed, static_cast<std::uint64_t>(iter)));
        CostBreakdown after = cost_breakdown(dataset, state.params, state.latent, tc.reg_lambda,
                                             config, tc.threads);
        state.cost_history.push_back(after.total);
        if (log)
            *log << iter << ",M," << after.total << "," << after.data_term << ","
                 << after.reg_term << "," << ms_since(t1) << "\n";

        if (have_prev && prev_total != 0.0) {
            const double rel = (prev_total - after.total) / std::abs(prev_total);
            if (rel >= 0.0 && rel < tc.convergence_tol) {
                state.converged = true;
                break;
            }
        }
        prev_total = after.total;
        have_prev = true;
    }
    return state;
}

// Supervised pretraining on single-channel data: fixed even segmentation,
// plain backpropagation epochs, no latent search at all.
template <class Scalar>
Parameters<Scalar> pretrain(const std::vector<VideoSampleT<Scalar>>& dataset,
                            const ModelConfig& config_gray, const TrainConfig& tc,
                            std::ostream* log = nullptr) {
    if (config_gray.channels != 1)
        throw ArgumentError("pretrain: config must be single-channel");
    for (std::size_t i = 0; i < dataset.size(); ++i)
        if (dataset[i].frames.shape()[0] != 1)
            throw ArgumentError("pretrain: sample " + std::to_string(i) +
                                " is not single-channel");
    Parameters<Scalar> init = init_parameters<Scalar>(config_gray, tc.seed);
    if (tc.max_iterations == 0) return init;
    TrainConfig ptc = tc;
    ptc.mode = TrainMode::kPretrain2D;
    return lsbp_train(dataset, std::move(init), ptc, config_gray, log).params;
}

}  // namespace rcnn
