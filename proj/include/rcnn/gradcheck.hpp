#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rcnn/data.hpp"
#include "rcnn/network.hpp"
#include "rcnn/training.hpp"

namespace rcnn {

// Full-cost gradient verification: the analytic gradient (averaged data term
// plus 2*lambda*w) of every parameter against central finite differences of
// the cost at step h, in the caller's precision (use double).
//
// Comparison rule per parameter: an absolute gap <= abs_floor passes outright
// (central differences at h = 1e-5 on an O(1) cost carry ~1e-9 rounding
// noise, which would swamp the relative error of near-zero gradients);
// otherwise |a - f| / max(|a|, |f|) is the reported relative error.
struct GradCheckReport {
    double max_rel_err = 0.0;
    std::int64_t checked = 0;
    std::int64_t worst_index = -1;
    double worst_analytic = 0.0;
    double worst_fd = 0.0;
};

template <class Scalar>
GradCheckReport gradient_check(const std::vector<VideoSampleT<Scalar>>& dataset,
                               Parameters<Scalar> params, const std::vector<LatentVars>& latent,
                               double reg_lambda, const ModelConfig& config,
                               double h = 1e-5, double abs_floor = 1e-8) {
    const auto n = static_cast<double>(dataset.size());

    // Analytic: (1/N) sum_i grad loss_i + 2*lambda*w.
    Parameters<Scalar> acc = zero_like(params);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        NetworkCache<Scalar> cache;
        network_forward(dataset[i].frames, params, latent[i], config, &cache);
        network_backward(cache, params, dataset[i].label, config, acc);
    }
    std::vector<double> analytic;
    analytic.reserve(static_cast<std::size_t>(parameter_count(params)));
    for_each_param_pair(acc, params, [&](Scalar* g, const Scalar* w, std::int64_t c) {
        for (std::int64_t i = 0; i < c; ++i)
            analytic.push_back(double(g[i]) / n + 2.0 * reg_lambda * double(w[i]));
    });

    // Central finite differences through the full cost.
    GradCheckReport report;
    std::size_t flat = 0;
    for_each_param_span(params, [&](Scalar* ptr, std::int64_t c) {
        for (std::int64_t i = 0; i < c; ++i, ++flat) {
            const Scalar saved = ptr[i];
            ptr[i] = saved + static_cast<Scalar>(h);
            const double jp = cost(dataset, params, latent, reg_lambda, config);
            ptr[i] = saved - static_cast<Scalar>(h);
            const double jm = cost(dataset, params, latent, reg_lambda, config);
            ptr[i] = saved;
            const double fd = (jp - jm) / (2.0 * h);
            const double a = analytic[flat];
            const double gap = std::abs(a - fd);
            double rel = 0.0;
            if (gap > abs_floor) rel = gap / std::max(std::abs(a), std::abs(fd));
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_index = static_cast<std::int64_t>(flat);
                report.worst_analytic = a;
                report.worst_fd = fd;
            }
            ++report.checked;
        }
    });
    return report;
}

}  // namespace rcnn
