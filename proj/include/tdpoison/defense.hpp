#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tdpoison/core.hpp"
#include "tdpoison/truth_discovery.hpp"

namespace tdpoison {

struct MwaConfig {
    int num_groups = 5;
    CrhConfig engine;
};

// The influence formula normalizes by the worker's rated-item count but sums
// shifts over every item; kRatedItems restricts the sum to the items the
// worker actually rated.
enum class InfluenceDomain { kAllItems, kRatedItems };

struct MieConfig {
    double assumed_attack_fraction = 0.0;  // the server's known alpha, in [0, 0.5)
    CrhConfig engine;
    InfluenceDomain influence_domain = InfluenceDomain::kAllItems;
};

// Robust value step: per item, observers are sorted by value, split into
// num_groups contiguous groups (as equal as possible, earlier groups take
// the remainder; items with fewer observers use that many groups), and the
// median of the groups' weighted averages is returned. A single group
// reduces to the plain CRH value step, bit for bit.
std::vector<double> mwa_update_values(const ObservationSet& obs,
                                      std::span<const double> weights, int num_groups);

// Alternates the median-of-groups value step with CRH weight updates. No
// worker is excluded; the server does not assume an attack is under way.
AggregationState run_mwa(const ObservationSet& obs, const MwaConfig& cfg = {});

// Mean squared shift of the aggregated values when `u` is removed and CRH is
// re-run, normalized by the number of items u rated. Items left with no
// observers after removal are skipped.
double worker_influence(const ObservationSet& obs, WorkerId u, const CrhConfig& engine = {},
                        InfluenceDomain domain = InfluenceDomain::kAllItems);

// Additive set influence: sum of the members' individual influences.
double set_influence(const ObservationSet& obs, std::span<const WorkerId> workers,
                     const CrhConfig& engine = {},
                     InfluenceDomain domain = InfluenceDomain::kAllItems);

// Greedy selection under the additive objective, i.e. the top-k workers by
// influence; ties break toward the smaller worker id.
std::vector<WorkerId> select_influential_workers(const ObservationSet& obs, int k,
                                                 const CrhConfig& engine = {},
                                                 InfluenceDomain domain =
                                                     InfluenceDomain::kAllItems);

struct MieResult {
    AggregationState state;
    std::vector<std::pair<WorkerId, double>> removed;  // with influence scores
    std::vector<ItemId> unestimable_items;             // lost every observer
};

// Removes the floor(alpha * |workers|) most influential workers, then runs
// plain CRH on the remainder.
MieResult run_mie(const ObservationSet& obs, const MieConfig& cfg = {});

}  // namespace tdpoison
