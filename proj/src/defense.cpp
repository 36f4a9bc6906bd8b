#include "tdpoison/defense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tdpoison {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RatedObserver {
    double value;
    WorkerId worker;
    double weight;
};

double influence_with_base(const ObservationSet& obs, const AggregationState& base,
                           WorkerId u, const CrhConfig& engine, InfluenceDomain domain) {
    const auto rated = obs.worker_entries(u);
    if (rated.empty()) {
        throw std::invalid_argument("worker_influence: worker " + std::to_string(u.value) +
                                    " has no observations");
    }
    const WorkerId removed[] = {u};
    const ObservationSet reduced_obs = obs.without_workers(removed);
    if (reduced_obs.empty()) return 0.0;
    const AggregationState reduced = run_crh(reduced_obs, engine);

    double sum = 0.0;
    auto add_item = [&](ItemId i) {
        // items that lose their only observer have no counterfactual estimate
        if (base.has_value(i) && reduced.has_value(i)) {
            sum += squared_distance(base.values[i.value], reduced.values[i.value]);
        }
    };
    if (domain == InfluenceDomain::kAllItems) {
        for (std::int32_t i = 0; i < obs.num_items(); ++i) {
            if (obs.has_item(ItemId{i})) add_item(ItemId{i});
        }
    } else {
        for (std::uint32_t idx : rated) add_item(obs.entry(idx).item);
    }
    return sum / static_cast<double>(rated.size());
}

// All observed workers scored and ordered by (influence desc, id asc).
std::vector<std::pair<WorkerId, double>> ranked_influence(const ObservationSet& obs,
                                                          const CrhConfig& engine,
                                                          InfluenceDomain domain) {
    const AggregationState base = run_crh(obs, engine);
    std::vector<std::pair<WorkerId, double>> scored;
    for (WorkerId u : obs.observed_workers()) {
        scored.emplace_back(u, influence_with_base(obs, base, u, engine, domain));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return scored;
}

}  // namespace

std::vector<double> mwa_update_values(const ObservationSet& obs,
                                      std::span<const double> weights, int num_groups) {
    if (num_groups < 1) throw std::invalid_argument("mwa_update_values: num_groups < 1");
    std::vector<double> values(static_cast<std::size_t>(obs.num_items()), kNaN);
    std::vector<RatedObserver> sorted;
    std::vector<double> group_means;
    for (std::int32_t i = 0; i < obs.num_items(); ++i) {
        auto span = obs.item_entries(ItemId{i});
        if (span.empty()) continue;
        const int groups = std::min<int>(num_groups, static_cast<int>(span.size()));
        if (groups == 1) {
            // same accumulation as crh_update_values so L=1 matches it exactly
            double num = 0.0;
            double den = 0.0;
            for (std::uint32_t idx : span) {
                const auto& e = obs.entry(idx);
                num += weights[e.worker.value] * e.value;
                den += weights[e.worker.value];
            }
            if (den == 0.0) {
                throw std::runtime_error("degenerate item " + std::to_string(i) +
                                         ": observer weights sum to zero");
            }
            values[i] = num / den;
            continue;
        }

        sorted.clear();
        for (std::uint32_t idx : span) {
            const auto& e = obs.entry(idx);
            sorted.push_back({e.value, e.worker, weights[e.worker.value]});
        }
        std::sort(sorted.begin(), sorted.end(), [](const RatedObserver& a, const RatedObserver& b) {
            if (a.value != b.value) return a.value < b.value;
            return a.worker < b.worker;
        });

        group_means.clear();
        const std::size_t n = sorted.size();
        const std::size_t base = n / static_cast<std::size_t>(groups);
        const std::size_t remainder = n % static_cast<std::size_t>(groups);
        std::size_t pos = 0;
        for (int g = 0; g < groups; ++g) {
            const std::size_t len = base + (static_cast<std::size_t>(g) < remainder ? 1 : 0);
            double num = 0.0;
            double den = 0.0;
            for (std::size_t j = pos; j < pos + len; ++j) {
                num += sorted[j].weight * sorted[j].value;
                den += sorted[j].weight;
            }
            if (den == 0.0) {
                throw std::runtime_error("mwa_update_values: zero weight sum in group " +
                                         std::to_string(g) + " of item " + std::to_string(i));
            }
            group_means.push_back(num / den);
            pos += len;
        }
        std::sort(group_means.begin(), group_means.end());
        const std::size_t mid = group_means.size() / 2;
        values[i] = (group_means.size() % 2 == 1)
                        ? group_means[mid]
                        : 0.5 * (group_means[mid - 1] + group_means[mid]);
    }
    return values;
}

AggregationState run_mwa(const ObservationSet& obs, const MwaConfig& cfg) {
    if (obs.empty()) throw std::invalid_argument("run_mwa: empty observation set");
    if (cfg.num_groups < 1) throw std::invalid_argument("run_mwa: num_groups < 1");
    std::vector<double> weights(static_cast<std::size_t>(obs.num_workers()),
                                cfg.engine.initial_weight);
    for (std::size_t u = 0; u < cfg.engine.initial_weights.size() && u < weights.size(); ++u) {
        weights[u] = cfg.engine.initial_weights[u];
    }
    const bool lone_worker = obs.observed_workers().size() == 1;
    std::vector<double> values;
    std::vector<double> prev;
    for (int iter = 0; iter < cfg.engine.max_iterations; ++iter) {
        values = mwa_update_values(obs, weights, cfg.num_groups);
        weights = crh_update_weights(obs, values);
        if (lone_worker) break;
        if (!prev.empty()) {
            double worst = 0.0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (std::isfinite(values[i]) && std::isfinite(prev[i])) {
                    worst = std::max(worst, std::abs(values[i] - prev[i]));
                }
            }
            if (worst < cfg.engine.tolerance) break;
        }
        prev = values;
    }
    return AggregationState{ModelKind::kCrh, std::move(values), std::move(weights)};
}

double worker_influence(const ObservationSet& obs, WorkerId u, const CrhConfig& engine,
                        InfluenceDomain domain) {
    const AggregationState base = run_crh(obs, engine);
    return influence_with_base(obs, base, u, engine, domain);
}

double set_influence(const ObservationSet& obs, std::span<const WorkerId> workers,
                     const CrhConfig& engine, InfluenceDomain domain) {
    if (workers.empty()) return 0.0;
    const AggregationState base = run_crh(obs, engine);
    double total = 0.0;
    for (WorkerId u : workers) total += influence_with_base(obs, base, u, engine, domain);
    return total;
}

std::vector<WorkerId> select_influential_workers(const ObservationSet& obs, int k,
                                                 const CrhConfig& engine,
                                                 InfluenceDomain domain) {
    if (k < 0) throw std::invalid_argument("select_influential_workers: k < 0");
    const auto workers = obs.observed_workers();
    if (static_cast<std::size_t>(k) > workers.size()) {
        throw std::invalid_argument("select_influential_workers: k exceeds worker count");
    }
    if (k == 0) return {};
    const auto ranked = ranked_influence(obs, engine, domain);
    std::vector<WorkerId> selected;
    selected.reserve(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) selected.push_back(ranked[j].first);
    std::sort(selected.begin(), selected.end());
    return selected;
}

MieResult run_mie(const ObservationSet& obs, const MieConfig& cfg) {
    if (obs.empty()) throw std::invalid_argument("run_mie: empty observation set");
    if (cfg.assumed_attack_fraction < 0.0 || cfg.assumed_attack_fraction >= 0.5) {
        throw std::invalid_argument("run_mie: assumed attack fraction must lie in [0, 0.5)");
    }
    const std::size_t num_workers = obs.observed_workers().size();
    const std::size_t k = static_cast<std::size_t>(
        std::floor(cfg.assumed_attack_fraction * static_cast<double>(num_workers) + 1e-9));

    MieResult result;
    ObservationSet remaining = obs;
    if (k > 0) {
        const auto ranked = ranked_influence(obs, cfg.engine, cfg.influence_domain);
        std::vector<WorkerId> removed_ids;
        for (std::size_t j = 0; j < k; ++j) {
            result.removed.push_back(ranked[j]);
            removed_ids.push_back(ranked[j].first);
        }
        std::sort(result.removed.begin(), result.removed.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        remaining = obs.without_workers(removed_ids);
    }
    result.state = run_crh(remaining, cfg.engine);
    for (ItemId i : obs.observed_items()) {
        if (!remaining.has_item(i)) result.unestimable_items.push_back(i);
    }
    return result;
}

}  // namespace tdpoison
