#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tdpoison/core.hpp"
#include "tdpoison/truth_discovery.hpp"

namespace tdpoison {

// Targeted items must have at least this many normal observers.
inline constexpr int kMinTargetObservers = 10;

struct Bounds {
    double min = 0.0;
    double max = 0.0;
    double range() const { return max - min; }
};

// Who attacks what, and within which value range. The malicious pool is
// sized floor(alpha*|U|/(1-alpha)) and its ids are appended after the normal
// worker id range; per-target attacker subsets are drawn from the pool and
// sized so normal observers always outnumber them (alpha < 0.5).
struct AttackPlan {
    double attack_fraction = 0.0;
    std::uint64_t rng_seed = 0;
    std::vector<ItemId> targets;                   // ascending
    std::vector<WorkerId> malicious_pool;
    std::vector<std::vector<WorkerId>> attackers;  // per target index, ascending
    std::vector<Bounds> bounds;                    // per target index

    int target_index(ItemId item) const;  // -1 when item is not targeted
    std::size_t num_assignments() const;
};

// The attacker's decision variables: one value per (attacker, target)
// assignment of the plan, laid out in plan order (targets outer loop).
struct MaliciousValues {
    std::vector<Observation> entries;

    bool empty() const { return entries.empty(); }
    // (worker, value) pairs of attackers assigned to `item`.
    std::vector<std::pair<WorkerId, double>> for_item(ItemId item) const;
};

// Defaults sized so single attackers can traverse a full bound range under
// the 1/sqrt(r) decay; with 0.1 * range and 50 rounds the ascent stalls short
// of the optimum and loses to the plain maximum baseline at small attack
// fractions.
struct GradientAscentConfig {
    double step_scale = 0.3;        // eta_0 = step_scale * bound range, per item
    int max_outer_iterations = 150;
    double loss_tolerance = 1e-4;   // relative change in loss between rounds
};

struct PartialKnowledgeConfig {
    double knowledge_fraction = 1.0;  // share of each target's observers seen
    int bootstrap_rounds = 500;
    bool use_bootstrap = true;        // false = estimate from all observed values at once
    std::uint64_t rng_seed = 0;
};

// Samples targets among items with >= kMinTargetObservers observers, sizes
// the malicious pool and per-target attacker subsets, and records per-target
// value bounds from the normal workers' values.
AttackPlan build_attack_plan(const ObservationSet& obs, double attack_fraction,
                             int num_targets, std::uint64_t seed);

// Aggregated value of one item when the assigned attackers' values join the
// normal observers. `weights`/`variances` must cover both id ranges.
double attacked_aggregate_crh(const ObservationSet& obs, const MaliciousValues& mal,
                              std::span<const double> weights, ItemId item);
double attacked_aggregate_gtm(const ObservationSet& obs, const MaliciousValues& mal,
                              std::span<const double> variances, const GtmConfig& cfg,
                              ItemId item);

// Sum over targets of squared deviation from the before-attack values.
double attack_loss(const AggregationState& before, std::span<const double> after_values,
                   std::span<const ItemId> targets);

// d loss / d (attacker's value on item): 2*(after - before) times the
// model-specific share of the attacker in the item's aggregate. Cross-item
// partials are zero, so only the item's own term appears. For GTM the prior
// precision comes from `gtm_cfg`.
double attack_gradient(const ObservationSet& obs, const AttackPlan& plan,
                       const AggregationState& state, const AggregationState& before,
                       WorkerId attacker, ItemId item, const GtmConfig& gtm_cfg = {});

double projected_step(double value, double gradient, double eta, Bounds bounds);

// Alternates (1) a full truth-discovery run over normal + malicious values
// and (2) a projected gradient step on every assignment, until the loss
// stabilizes. The attacker's simulated server sees only the targeted items;
// its GTM runs in raw units so the gradient expressions stay exact.
MaliciousValues run_full_knowledge_attack(const ObservationSet& obs, const AttackPlan& plan,
                                          const EngineConfig& engine,
                                          const GradientAscentConfig& ga = {});

// Baselines: uniform draw within bounds / the per-item maximum.
MaliciousValues random_attack(const AttackPlan& plan, std::uint64_t seed);
MaliciousValues maximum_attack(const AttackPlan& plan);

// Mean of `rounds` with-replacement resampled aggregates of one item's
// worker values (weighted mean for CRH, precision-weighted with prior for
// GTM). `reliabilities` parallels `values`.
double bootstrap_estimate(std::span<const double> values, std::span<const double> reliabilities,
                          ModelKind model, const GtmConfig& gtm_cfg, int rounds,
                          std::uint64_t seed);

// Phase 1 estimates each target's before-attack value from the observed
// subset (bootstrapped or direct), iterating value estimates against
// reliability updates; phase 2 is the full-knowledge ascent restricted to
// the observed values.
MaliciousValues run_partial_knowledge_attack(const ObservationSet& obs, const AttackPlan& plan,
                                             const PartialKnowledgeConfig& pk,
                                             const EngineConfig& engine,
                                             const GradientAscentConfig& ga = {});

}  // namespace tdpoison
