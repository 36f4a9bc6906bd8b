#include "tdpoison/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace tdpoison {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t sized_floor(double x) {
    // guards against 125.0 landing at 124.999... after the fraction arithmetic
    return static_cast<std::size_t>(std::floor(x + 1e-9));
}

template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k,
                                          std::mt19937_64& rng) {
    if (k > pool.size()) throw std::invalid_argument("sample larger than population");
    for (std::size_t j = 0; j < k; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
        std::swap(pool[j], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}

// Start at the attacker's before-attack estimate, nudged 10% of the bound
// range toward the farther bound (max wins ties) so the first gradient is
// nonzero and the direction deterministic.
double initial_malicious_value(double before, Bounds b) {
    const double toward_max = b.max - before;
    const double toward_min = before - b.min;
    const double step = 0.1 * b.range();
    const double v = (toward_max >= toward_min) ? before + step : before - step;
    return std::clamp(v, b.min, b.max);
}

// The gradient and bound constraints are written in raw units, so the
// attacker's simulated GTM server never z-scores.
EngineConfig raw_engine(EngineConfig cfg) {
    if (auto* gtm = std::get_if<GtmConfig>(&cfg)) gtm->normalize = false;
    return cfg;
}

const GtmConfig& gtm_config_of(const EngineConfig& cfg) {
    static const GtmConfig kDefault{};
    if (const auto* gtm = std::get_if<GtmConfig>(&cfg)) return *gtm;
    return kDefault;
}

double engine_tolerance(const EngineConfig& cfg) {
    if (const auto* crh = std::get_if<CrhConfig>(&cfg)) return crh->tolerance;
    return std::get<GtmConfig>(cfg).tolerance;
}

int engine_max_iterations(const EngineConfig& cfg) {
    if (const auto* crh = std::get_if<CrhConfig>(&cfg)) return crh->max_iterations;
    return std::get<GtmConfig>(cfg).max_iterations;
}

double bootstrap_estimate_impl(std::span<const double> values,
                               std::span<const double> reliabilities, ModelKind model,
                               const GtmConfig& gtm_cfg, int rounds, std::mt19937_64& rng) {
    if (values.empty()) throw std::invalid_argument("bootstrap_estimate: empty worker set");
    if (values.size() != reliabilities.size()) {
        throw std::invalid_argument("bootstrap_estimate: values/reliabilities size mismatch");
    }
    if (rounds < 1) throw std::invalid_argument("bootstrap_estimate: rounds must be >= 1");
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    double acc = 0.0;
    for (int b = 0; b < rounds; ++b) {
        double num = 0.0;
        double den = 0.0;
        if (model == ModelKind::kGtm) {
            num = gtm_cfg.prior_mean / gtm_cfg.prior_variance;
            den = 1.0 / gtm_cfg.prior_variance;
        }
        for (std::size_t j = 0; j < values.size(); ++j) {
            const std::size_t k = pick(rng);
            if (model == ModelKind::kCrh) {
                num += reliabilities[k] * values[k];
                den += reliabilities[k];
            } else {
                num += values[k] / reliabilities[k];
                den += 1.0 / reliabilities[k];
            }
        }
        if (den == 0.0) throw std::runtime_error("bootstrap_estimate: zero reliability sum");
        acc += num / den;
    }
    return acc / static_cast<double>(rounds);
}

// Shared gradient-ascent loop. `known` is whatever slice of the data the
// attacker can see (targeted items only); `before_values` are its estimates
// of the pre-attack aggregates.
MaliciousValues ascend_malicious_values(const ObservationSet& known, const AttackPlan& plan,
                                        std::vector<double> before_values,
                                        const EngineConfig& engine,
                                        const GradientAscentConfig& ga) {
    MaliciousValues mal;
    for (std::size_t ti = 0; ti < plan.targets.size(); ++ti) {
        const ItemId t = plan.targets[ti];
        const double base = before_values[t.value];
        for (WorkerId a : plan.attackers[ti]) {
            mal.entries.push_back({a, t, initial_malicious_value(base, plan.bounds[ti])});
        }
    }
    if (mal.entries.empty()) return mal;

    AggregationState before{engine_model(engine), std::move(before_values), {}};
    double prev_loss = kNaN;
    for (int r = 1; r <= ga.max_outer_iterations; ++r) {
        const ObservationSet merged = known.merged_with(mal.entries);
        const AggregationState state = run_engine(merged, engine);
        const double loss = attack_loss(before, state.values, plan.targets);
        if (r > 1 &&
            std::abs(loss - prev_loss) <= ga.loss_tolerance * std::max(std::abs(prev_loss), 1e-12)) {
            break;
        }
        prev_loss = loss;

        std::size_t k = 0;
        for (std::size_t ti = 0; ti < plan.targets.size(); ++ti) {
            const ItemId t = plan.targets[ti];
            const double eta =
                ga.step_scale * plan.bounds[ti].range() / std::sqrt(static_cast<double>(r));
            for (WorkerId a : plan.attackers[ti]) {
                const double g =
                    attack_gradient(known, plan, state, before, a, t, gtm_config_of(engine));
                mal.entries[k].value =
                    projected_step(mal.entries[k].value, g, eta, plan.bounds[ti]);
                ++k;
            }
        }
    }
    return mal;
}

}  // namespace

int AttackPlan::target_index(ItemId item) const {
    auto it = std::lower_bound(targets.begin(), targets.end(), item);
    if (it == targets.end() || *it != item) return -1;
    return static_cast<int>(it - targets.begin());
}

std::size_t AttackPlan::num_assignments() const {
    std::size_t n = 0;
    for (const auto& a : attackers) n += a.size();
    return n;
}

std::vector<std::pair<WorkerId, double>> MaliciousValues::for_item(ItemId item) const {
    std::vector<std::pair<WorkerId, double>> out;
    for (const auto& e : entries) {
        if (e.item == item) out.emplace_back(e.worker, e.value);
    }
    return out;
}

AttackPlan build_attack_plan(const ObservationSet& obs, double attack_fraction,
                             int num_targets, std::uint64_t seed) {
    if (obs.empty()) throw std::invalid_argument("build_attack_plan: empty observation set");
    if (!(attack_fraction > 0.0) || attack_fraction >= 0.5) {
        throw std::invalid_argument(
            "build_attack_plan: attack fraction must lie in (0, 0.5) so normal workers "
            "keep the per-item majority");
    }
    if (num_targets < 1) throw std::invalid_argument("build_attack_plan: num_targets < 1");

    std::vector<ItemId> eligible;
    for (ItemId i : obs.observed_items()) {
        if (obs.item_entries(i).size() >= static_cast<std::size_t>(kMinTargetObservers)) {
            eligible.push_back(i);
        }
    }
    if (static_cast<int>(eligible.size()) < num_targets) {
        throw std::runtime_error("build_attack_plan: only " + std::to_string(eligible.size()) +
                                 " items have >= " + std::to_string(kMinTargetObservers) +
                                 " observers; cannot pick " + std::to_string(num_targets) +
                                 " targets");
    }

    std::mt19937_64 rng(seed);
    AttackPlan plan;
    plan.attack_fraction = attack_fraction;
    plan.rng_seed = seed;
    plan.targets = sample_without_replacement(std::move(eligible),
                                              static_cast<std::size_t>(num_targets), rng);
    std::sort(plan.targets.begin(), plan.targets.end());

    const std::size_t num_normal = obs.observed_workers().size();
    const double ratio = attack_fraction / (1.0 - attack_fraction);
    const std::size_t pool_size = sized_floor(ratio * static_cast<double>(num_normal));
    const std::int32_t base_id = obs.num_workers();
    for (std::size_t k = 0; k < pool_size; ++k) {
        plan.malicious_pool.push_back(WorkerId{base_id + static_cast<std::int32_t>(k)});
    }

    plan.attackers.reserve(plan.targets.size());
    plan.bounds.reserve(plan.targets.size());
    for (ItemId t : plan.targets) {
        auto span = obs.item_entries(t);
        const std::size_t per_item = sized_floor(ratio * static_cast<double>(span.size()));
        auto subset = sample_without_replacement(plan.malicious_pool, per_item, rng);
        std::sort(subset.begin(), subset.end());
        plan.attackers.push_back(std::move(subset));

        Bounds b{obs.entry(span.front()).value, obs.entry(span.front()).value};
        for (std::uint32_t idx : span) {
            b.min = std::min(b.min, obs.entry(idx).value);
            b.max = std::max(b.max, obs.entry(idx).value);
        }
        plan.bounds.push_back(b);
    }
    return plan;
}

double attacked_aggregate_crh(const ObservationSet& obs, const MaliciousValues& mal,
                              std::span<const double> weights, ItemId item) {
    double num = 0.0;
    double den = 0.0;
    std::size_t observers = 0;
    for (std::uint32_t idx : obs.item_entries(item)) {
        const auto& e = obs.entry(idx);
        num += weights[e.worker.value] * e.value;
        den += weights[e.worker.value];
        ++observers;
    }
    for (const auto& [worker, value] : mal.for_item(item)) {
        num += weights[worker.value] * value;
        den += weights[worker.value];
        ++observers;
    }
    if (observers == 0) {
        throw std::invalid_argument("attacked_aggregate_crh: item " + std::to_string(item.value) +
                                    " has no observers");
    }
    if (den == 0.0) {
        throw std::runtime_error("attacked_aggregate_crh: zero weight sum on item " +
                                 std::to_string(item.value));
    }
    return num / den;
}

double attacked_aggregate_gtm(const ObservationSet& obs, const MaliciousValues& mal,
                              std::span<const double> variances, const GtmConfig& cfg,
                              ItemId item) {
    double num = cfg.prior_mean / cfg.prior_variance;
    double den = 1.0 / cfg.prior_variance;
    auto add = [&](WorkerId worker, double value) {
        const double var = variances[worker.value];
        if (!(var > 0.0)) {
            throw std::invalid_argument("attacked_aggregate_gtm: nonpositive variance for worker " +
                                        std::to_string(worker.value));
        }
        num += value / var;
        den += 1.0 / var;
    };
    for (std::uint32_t idx : obs.item_entries(item)) {
        add(obs.entry(idx).worker, obs.entry(idx).value);
    }
    for (const auto& [worker, value] : mal.for_item(item)) add(worker, value);
    return num / den;
}

double attack_loss(const AggregationState& before, std::span<const double> after_values,
                   std::span<const ItemId> targets) {
    double loss = 0.0;
    for (ItemId t : targets) {
        const double after = after_values[t.value];
        loss += squared_distance(after, before.value(t));
    }
    return loss;
}

double attack_gradient(const ObservationSet& obs, const AttackPlan& plan,
                       const AggregationState& state, const AggregationState& before,
                       WorkerId attacker, ItemId item, const GtmConfig& gtm_cfg) {
    const int ti = plan.target_index(item);
    if (ti < 0) {
        throw std::invalid_argument("attack_gradient: item " + std::to_string(item.value) +
                                    " is not targeted");
    }
    const auto& assigned = plan.attackers[ti];
    if (!std::binary_search(assigned.begin(), assigned.end(), attacker)) {
        throw std::invalid_argument("attack_gradient: worker " + std::to_string(attacker.value) +
                                    " is not assigned to item " + std::to_string(item.value));
    }
    const double residual = state.value(item) - before.value(item);

    double partial = 0.0;
    if (state.model_kind == ModelKind::kCrh) {
        double weight_sum = 0.0;
        for (std::uint32_t idx : obs.item_entries(item)) {
            weight_sum += state.reliability[obs.entry(idx).worker.value];
        }
        for (WorkerId a : assigned) weight_sum += state.reliability[a.value];
        partial = state.reliability[attacker.value] / weight_sum;
    } else {
        double precision_sum = 1.0 / gtm_cfg.prior_variance;
        for (std::uint32_t idx : obs.item_entries(item)) {
            precision_sum += 1.0 / state.reliability[obs.entry(idx).worker.value];
        }
        for (WorkerId a : assigned) precision_sum += 1.0 / state.reliability[a.value];
        partial = 1.0 / (state.reliability[attacker.value] * precision_sum);
    }
    return 2.0 * residual * partial;
}

double projected_step(double value, double gradient, double eta, Bounds bounds) {
    if (!(bounds.min <= bounds.max)) {
        throw std::invalid_argument("projected_step: invalid bounds");
    }
    return std::clamp(value + eta * gradient, bounds.min, bounds.max);
}

MaliciousValues run_full_knowledge_attack(const ObservationSet& obs, const AttackPlan& plan,
                                          const EngineConfig& engine,
                                          const GradientAscentConfig& ga) {
    for (ItemId t : plan.targets) {
        if (!obs.has_item(t)) {
            throw std::invalid_argument("run_full_knowledge_attack: target item " +
                                        std::to_string(t.value) + " has no observations");
        }
    }
    const EngineConfig raw = raw_engine(engine);
    const ObservationSet known = obs.restricted_to_items(plan.targets);
    if (plan.num_assignments() == 0) return {};
    const AggregationState before = run_engine(known, raw);
    return ascend_malicious_values(known, plan, before.values, raw, ga);
}

MaliciousValues random_attack(const AttackPlan& plan, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    MaliciousValues mal;
    for (std::size_t ti = 0; ti < plan.targets.size(); ++ti) {
        const Bounds b = plan.bounds[ti];
        for (WorkerId a : plan.attackers[ti]) {
            double v = b.min;
            if (b.max > b.min) {
                std::uniform_real_distribution<double> draw(b.min, b.max);
                v = draw(rng);
            }
            mal.entries.push_back({a, plan.targets[ti], v});
        }
    }
    return mal;
}

MaliciousValues maximum_attack(const AttackPlan& plan) {
    MaliciousValues mal;
    for (std::size_t ti = 0; ti < plan.targets.size(); ++ti) {
        for (WorkerId a : plan.attackers[ti]) {
            mal.entries.push_back({a, plan.targets[ti], plan.bounds[ti].max});
        }
    }
    return mal;
}

double bootstrap_estimate(std::span<const double> values, std::span<const double> reliabilities,
                          ModelKind model, const GtmConfig& gtm_cfg, int rounds,
                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return bootstrap_estimate_impl(values, reliabilities, model, gtm_cfg, rounds, rng);
}

MaliciousValues run_partial_knowledge_attack(const ObservationSet& obs, const AttackPlan& plan,
                                             const PartialKnowledgeConfig& pk,
                                             const EngineConfig& engine,
                                             const GradientAscentConfig& ga) {
    if (!(pk.knowledge_fraction > 0.0) || pk.knowledge_fraction > 1.0) {
        throw std::invalid_argument("run_partial_knowledge_attack: knowledge fraction "
                                    "must lie in (0, 1]");
    }
    if (pk.bootstrap_rounds < 1) {
        throw std::invalid_argument("run_partial_knowledge_attack: bootstrap_rounds < 1");
    }
    if (plan.num_assignments() == 0) return {};
    const EngineConfig raw = raw_engine(engine);
    const ObservationSet restricted = obs.restricted_to_items(plan.targets);
    std::mt19937_64 rng(pk.rng_seed);

    // The observed subset S_t of each target's normal observers.
    std::vector<Observation> seen;
    for (ItemId t : plan.targets) {
        auto span = restricted.item_entries(t);
        std::vector<Observation> pool;
        pool.reserve(span.size());
        for (std::uint32_t idx : span) pool.push_back(restricted.entry(idx));
        const std::size_t k =
            sized_floor(pk.knowledge_fraction * static_cast<double>(pool.size()));
        if (k == 0) {
            throw std::runtime_error("run_partial_knowledge_attack: observed subset is empty "
                                     "for item " + std::to_string(t.value));
        }
        auto chosen = sample_without_replacement(std::move(pool), std::min(k, span.size()), rng);
        seen.insert(seen.end(), chosen.begin(), chosen.end());
    }
    const ObservationSet knowledge{std::move(seen)};

    std::vector<double> before_values;
    if (!pk.use_bootstrap) {
        before_values = run_engine(knowledge, raw).values;
    } else {
        // Alternate bootstrapped value estimates with reliability updates on
        // the observed values, stopping when the estimates settle (resampling
        // noise usually means the iteration cap decides).
        const ModelKind model = engine_model(raw);
        const GtmConfig& gtm_cfg = gtm_config_of(raw);
        std::vector<double> reliab = initial_reliabilities(raw, knowledge.num_workers());
        std::vector<double> est(static_cast<std::size_t>(knowledge.num_items()),
                                std::numeric_limits<double>::quiet_NaN());
        std::vector<double> prev;
        const double tol = engine_tolerance(raw);
        const int max_iter = engine_max_iterations(raw);
        for (int iter = 0; iter < max_iter; ++iter) {
            for (ItemId t : plan.targets) {
                auto span = knowledge.item_entries(t);
                std::vector<double> vals;
                std::vector<double> rels;
                vals.reserve(span.size());
                rels.reserve(span.size());
                for (std::uint32_t idx : span) {
                    vals.push_back(knowledge.entry(idx).value);
                    rels.push_back(reliab[knowledge.entry(idx).worker.value]);
                }
                est[t.value] = bootstrap_estimate_impl(vals, rels, model, gtm_cfg,
                                                       pk.bootstrap_rounds, rng);
            }
            if (!prev.empty()) {
                double worst = 0.0;
                for (ItemId t : plan.targets) {
                    worst = std::max(worst, std::abs(est[t.value] - prev[t.value]));
                }
                if (worst < tol) break;
            }
            prev = est;
            reliab = model == ModelKind::kCrh ? crh_update_weights(knowledge, est)
                                              : gtm_update_variances(knowledge, est, gtm_cfg);
        }
        before_values = std::move(est);
    }
    return ascend_malicious_values(knowledge, plan, std::move(before_values), raw, ga);
}

}  // namespace tdpoison
