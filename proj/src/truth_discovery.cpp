#include "tdpoison/truth_discovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tdpoison {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Floor term for per-worker distance sums in the CRH weight update. Keeps
// log() finite when a worker (or everyone) exactly matches the aggregates.
constexpr double kDistanceEpsilon = 1e-12;

std::vector<double> expand_initial(double scalar, const std::vector<double>& per_worker,
                                   int num_workers) {
    std::vector<double> out(static_cast<std::size_t>(num_workers), scalar);
    for (std::size_t u = 0; u < per_worker.size() && u < out.size(); ++u) {
        out[u] = per_worker[u];
    }
    return out;
}

// Max |a-b| over slots where both are defined.
double max_value_change(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        if (std::isfinite(a[i]) && std::isfinite(b[i])) {
            worst = std::max(worst, std::abs(a[i] - b[i]));
        }
    }
    return worst;
}

}  // namespace

std::vector<double> crh_update_values(const ObservationSet& obs,
                                      std::span<const double> weights) {
    std::vector<double> values(static_cast<std::size_t>(obs.num_items()), kNaN);
    for (std::int32_t i = 0; i < obs.num_items(); ++i) {
        auto span = obs.item_entries(ItemId{i});
        if (span.empty()) continue;
        double num = 0.0;
        double den = 0.0;
        for (std::uint32_t idx : span) {
            const auto& e = obs.entry(idx);
            const double w = weights[e.worker.value];
            num += w * e.value;
            den += w;
        }
        if (den == 0.0) {
            throw std::runtime_error("degenerate item " + std::to_string(i) +
                                     ": observer weights sum to zero");
        }
        values[i] = num / den;
    }
    return values;
}

std::vector<double> crh_update_weights(const ObservationSet& obs,
                                       std::span<const double> values) {
    std::vector<double> dist(static_cast<std::size_t>(obs.num_workers()), kNaN);
    std::vector<std::int32_t> active;
    for (std::int32_t u = 0; u < obs.num_workers(); ++u) {
        auto span = obs.worker_entries(WorkerId{u});
        if (span.empty()) continue;
        double sum = 0.0;
        for (std::uint32_t idx : span) {
            const auto& e = obs.entry(idx);
            sum += squared_distance(e.value, values[e.item.value]);
        }
        dist[u] = sum + kDistanceEpsilon;
        active.push_back(u);
    }
    // w_u = log(total / dist_u) evaluated as log1p(others_u / dist_u), with
    // others_u summed exactly via prefix/suffix sums. The direct quotient
    // rounds to 1 when one worker dominates the total (extreme outliers),
    // collapsing that weight to 0; this form keeps it strictly positive
    // whenever another worker exists.
    std::vector<double> prefix(active.size() + 1, 0.0);
    for (std::size_t j = 0; j < active.size(); ++j) {
        prefix[j + 1] = prefix[j] + dist[active[j]];
    }
    std::vector<double> suffix(active.size() + 1, 0.0);
    for (std::size_t j = active.size(); j-- > 0;) {
        suffix[j] = suffix[j + 1] + dist[active[j]];
    }
    std::vector<double> weights(dist.size(), kNaN);
    for (std::size_t j = 0; j < active.size(); ++j) {
        const double others = prefix[j] + suffix[j + 1];
        weights[active[j]] = std::log1p(others / dist[active[j]]);
    }
    return weights;
}

double crh_objective(const ObservationSet& obs, const AggregationState& state) {
    double objective = 0.0;
    for (std::int32_t u = 0; u < obs.num_workers(); ++u) {
        auto span = obs.worker_entries(WorkerId{u});
        if (span.empty()) continue;
        double sum = 0.0;
        for (std::uint32_t idx : span) {
            const auto& e = obs.entry(idx);
            sum += squared_distance(e.value, state.values[e.item.value]);
        }
        objective += state.reliability[u] * sum;
    }
    return objective;
}

AggregationState run_crh(const ObservationSet& obs, const CrhConfig& cfg) {
    if (obs.empty()) throw std::invalid_argument("run_crh: empty observation set");
    if (cfg.max_iterations < 1 || cfg.tolerance <= 0.0) {
        throw std::invalid_argument("run_crh: invalid convergence configuration");
    }
    std::vector<double> weights =
        expand_initial(cfg.initial_weight, cfg.initial_weights, obs.num_workers());
    const bool lone_worker = obs.observed_workers().size() == 1;
    std::vector<double> values;
    std::vector<double> prev;
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        values = crh_update_values(obs, weights);
        weights = crh_update_weights(obs, values);
        // a lone worker is its own fixed point, and the log-ratio update pins
        // its weight at exactly 0, which the next value step cannot use
        if (lone_worker) break;
        if (!prev.empty() && max_value_change(values, prev) < cfg.tolerance) break;
        prev = values;
    }
    return AggregationState{ModelKind::kCrh, std::move(values), std::move(weights)};
}

std::vector<double> NormalizedObservations::denormalize(std::span<const double> values) const {
    std::vector<double> out(values.begin(), values.end());
    for (std::size_t i = 0; i < out.size() && i < scaling.size(); ++i) {
        if (std::isfinite(out[i])) out[i] = scaling[i].mean + scaling[i].scale * out[i];
    }
    return out;
}

NormalizedObservations gtm_normalize(const ObservationSet& obs) {
    if (obs.empty()) throw std::invalid_argument("gtm_normalize: empty observation set");
    NormalizedObservations result;
    result.scaling.assign(static_cast<std::size_t>(obs.num_items()), ItemScaling{});
    std::vector<Observation> entries = obs.entries();
    for (std::int32_t i = 0; i < obs.num_items(); ++i) {
        auto span = obs.item_entries(ItemId{i});
        if (span.empty()) continue;
        const std::size_t n = span.size();
        double mean = 0.0;
        for (std::uint32_t idx : span) mean += obs.entry(idx).value;
        mean /= static_cast<double>(n);
        double var = 0.0;
        if (n > 1) {
            for (std::uint32_t idx : span) {
                const double d = obs.entry(idx).value - mean;
                var += d * d;
            }
            var /= static_cast<double>(n - 1);
        }
        const double sd = std::sqrt(var);
        if (sd == 0.0) {
            result.zero_spread_items.push_back(ItemId{i});
            continue;  // identity transform
        }
        result.scaling[i] = ItemScaling{mean, sd};
        for (std::uint32_t idx : span) {
            // entries_ is shared index space with obs (same canonical order)
            entries[idx].value = (entries[idx].value - mean) / sd;
        }
    }
    result.observations = ObservationSet(std::move(entries));
    return result;
}

std::vector<double> gtm_update_values(const ObservationSet& obs,
                                      std::span<const double> variances,
                                      const GtmConfig& cfg) {
    if (cfg.prior_variance <= 0.0) {
        throw std::invalid_argument("gtm_update_values: prior variance must be positive");
    }
    std::vector<double> values(static_cast<std::size_t>(obs.num_items()), kNaN);
    for (std::int32_t i = 0; i < obs.num_items(); ++i) {
        auto span = obs.item_entries(ItemId{i});
        if (span.empty()) continue;
        double num = cfg.prior_mean / cfg.prior_variance;
        double den = 1.0 / cfg.prior_variance;
        for (std::uint32_t idx : span) {
            const auto& e = obs.entry(idx);
            const double var = variances[e.worker.value];
            if (!(var > 0.0)) {
                throw std::invalid_argument("gtm_update_values: nonpositive variance for worker " +
                                            std::to_string(e.worker.value));
            }
            num += e.value / var;
            den += 1.0 / var;
        }
        values[i] = num / den;
    }
    return values;
}

std::vector<double> gtm_update_variances(const ObservationSet& obs,
                                         std::span<const double> values,
                                         const GtmConfig& cfg) {
    if (cfg.beta <= 0.0) {
        throw std::invalid_argument("gtm_update_variances: beta must be positive");
    }
    std::vector<double> variances(static_cast<std::size_t>(obs.num_workers()), kNaN);
    for (std::int32_t u = 0; u < obs.num_workers(); ++u) {
        auto span = obs.worker_entries(WorkerId{u});
        if (span.empty()) continue;
        double residual = 0.0;
        for (std::uint32_t idx : span) {
            const auto& e = obs.entry(idx);
            residual += squared_distance(e.value, values[e.item.value]);
        }
        variances[u] = (2.0 * cfg.beta + residual) /
                       (2.0 * (cfg.alpha + 1.0) + static_cast<double>(span.size()));
    }
    return variances;
}

AggregationState run_gtm(const ObservationSet& obs, const GtmConfig& cfg) {
    if (obs.empty()) throw std::invalid_argument("run_gtm: empty observation set");
    if (cfg.max_iterations < 1 || cfg.tolerance <= 0.0 || cfg.initial_variance <= 0.0) {
        throw std::invalid_argument("run_gtm: invalid configuration");
    }
    NormalizedObservations norm;
    const ObservationSet* work = &obs;
    if (cfg.normalize) {
        norm = gtm_normalize(obs);
        work = &norm.observations;
    }
    std::vector<double> variances =
        expand_initial(cfg.initial_variance, cfg.initial_variances, work->num_workers());
    for (double v : variances) {
        if (!(v > 0.0)) throw std::invalid_argument("run_gtm: nonpositive initial variance");
    }
    std::vector<double> values;
    std::vector<double> prev;
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        values = gtm_update_values(*work, variances, cfg);
        variances = gtm_update_variances(*work, values, cfg);
        if (!prev.empty() && max_value_change(values, prev) < cfg.tolerance) break;
        prev = values;
    }
    if (cfg.normalize) values = norm.denormalize(values);
    return AggregationState{ModelKind::kGtm, std::move(values), std::move(variances)};
}

ModelKind engine_model(const EngineConfig& cfg) {
    return std::holds_alternative<CrhConfig>(cfg) ? ModelKind::kCrh : ModelKind::kGtm;
}

AggregationState run_engine(const ObservationSet& obs, const EngineConfig& cfg) {
    if (const auto* crh = std::get_if<CrhConfig>(&cfg)) return run_crh(obs, *crh);
    return run_gtm(obs, std::get<GtmConfig>(cfg));
}

std::vector<double> initial_reliabilities(const EngineConfig& cfg, int num_workers) {
    if (const auto* crh = std::get_if<CrhConfig>(&cfg)) {
        return expand_initial(crh->initial_weight, crh->initial_weights, num_workers);
    }
    const auto& gtm = std::get<GtmConfig>(cfg);
    return expand_initial(gtm.initial_variance, gtm.initial_variances, num_workers);
}

}  // namespace tdpoison
