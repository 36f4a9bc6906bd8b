#pragma once

#include <span>
#include <variant>
#include <vector>

#include "tdpoison/core.hpp"

namespace tdpoison {

// Both engines iterate value/reliability updates until the largest absolute
// change in aggregated values drops below `tolerance` or `max_iterations`
// full rounds have run. Initial reliabilities are the scalar default,
// overridable per worker id through the vector (ids past its end fall back
// to the scalar).
struct CrhConfig {
    int max_iterations = 100;
    double tolerance = 1e-6;
    double initial_weight = 1.0;
    std::vector<double> initial_weights;
};

struct GtmConfig {
    double prior_mean = 0.0;      // mu0
    double prior_variance = 1.0;  // sigma0^2
    double alpha = 1.0;           // inverse-gamma hyperparameters on worker variance
    double beta = 1.0;
    int max_iterations = 100;
    double tolerance = 1e-6;
    double initial_variance = 1.0;
    std::vector<double> initial_variances;
    bool normalize = true;  // per-item z-score preprocessing
};

// CRH value step: per-item weighted mean over its observers.
// Throws when an item's observer weights sum to zero (names the item).
std::vector<double> crh_update_values(const ObservationSet& obs,
                                      std::span<const double> weights);

// CRH weight step: w_u = log(total distance sum / worker u's distance sum).
// Every per-worker sum gets a 1e-12 floor term (and the total is the sum of
// the floored per-worker sums) so exact-consensus fixtures stay finite.
// Unobserved worker ids get NaN.
std::vector<double> crh_update_weights(const ObservationSet& obs,
                                       std::span<const double> values);

// Weighted sum of squared residuals; diagnostic only.
double crh_objective(const ObservationSet& obs, const AggregationState& state);

AggregationState run_crh(const ObservationSet& obs, const CrhConfig& cfg = {});

// Affine per-item transform: raw = mean + scale * z.
struct ItemScaling {
    double mean = 0.0;
    double scale = 1.0;
};

struct NormalizedObservations {
    ObservationSet observations;
    std::vector<ItemScaling> scaling;      // by item id
    std::vector<ItemId> zero_spread_items;  // passed through unchanged

    // Maps values in z-score space back to raw units; NaN slots pass through.
    std::vector<double> denormalize(std::span<const double> values) const;
};

// Per-item z-scores with the sample (n-1) standard deviation. Items with a
// single observation or zero spread keep their raw values and are flagged.
NormalizedObservations gtm_normalize(const ObservationSet& obs);

// GTM E-step: precision-weighted mean of prior and observations.
std::vector<double> gtm_update_values(const ObservationSet& obs,
                                      std::span<const double> variances,
                                      const GtmConfig& cfg);

// GTM M-step: sigma_u^2 = (2*beta + residual sum) / (2*(alpha+1) + |I_u|).
std::vector<double> gtm_update_variances(const ObservationSet& obs,
                                         std::span<const double> values,
                                         const GtmConfig& cfg);

AggregationState run_gtm(const ObservationSet& obs, const GtmConfig& cfg = {});

using EngineConfig = std::variant<CrhConfig, GtmConfig>;

ModelKind engine_model(const EngineConfig& cfg);
AggregationState run_engine(const ObservationSet& obs, const EngineConfig& cfg);

// Reliability vector an engine starts from, sized to cover `num_workers`.
std::vector<double> initial_reliabilities(const EngineConfig& cfg, int num_workers);

}  // namespace tdpoison
