#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdpoison/attack.hpp"
#include "tdpoison/core.hpp"
#include "tdpoison/data.hpp"
#include "tdpoison/defense.hpp"
#include "tdpoison/truth_discovery.hpp"

namespace tdpoison {

enum class AttackKind { kNone, kRandom, kMaximum, kFullKnowledge, kPartialKnowledge };
enum class DefenseKind { kNone, kMwa, kMie };

const char* attack_name(AttackKind kind);
const char* defense_name(DefenseKind kind);
AttackKind attack_from_name(const std::string& name);
DefenseKind defense_from_name(const std::string& name);

// One sweep: dataset x model x attack x defense, over attack fractions (and
// knowledge fractions for the partial-knowledge attack), `trials` repetitions
// each. Trial seeds are base_seed + trial, so a config replays exactly.
struct ExperimentConfig {
    std::optional<SyntheticConfig> synthetic = SyntheticConfig{};
    std::string dataset_path;  // non-empty overrides synthetic
    DatasetSchema schema = DatasetSchema::kGeneric;

    ModelKind model = ModelKind::kCrh;
    AttackKind attack = AttackKind::kNone;
    DefenseKind defense = DefenseKind::kNone;

    std::vector<double> attack_fractions = {0.2};
    std::vector<double> knowledge_fractions = {1.0};
    int num_targets = 400;
    int trials = 50;
    std::uint64_t base_seed = 1;
    int jobs = 1;

    CrhConfig server_crh;
    GtmConfig server_gtm;
    CrhConfig attacker_crh;
    GtmConfig attacker_gtm;
    GradientAscentConfig ascent;

    int bootstrap_rounds = 500;
    bool use_bootstrap = true;

    int mwa_groups = 5;
    std::optional<double> mie_assumed_alpha;  // unset: use the sweep point's alpha
    InfluenceDomain influence_domain = InfluenceDomain::kAllItems;

    // When high > low, per-worker initial reliabilities are drawn from
    // Uniform(low, high) each trial instead of the constant defaults.
    double server_init_low = 0.0, server_init_high = 0.0;
    double attacker_init_low = 0.0, attacker_init_high = 0.0;
};

struct TrialRow {
    double attack_fraction = 0.0;
    double knowledge_fraction = 1.0;
    int trial = 0;
    double average_error = 0.0;
    double error_std = 0.0;  // spread of per-item errors within the trial
    bool ok = true;
    std::string message;
};

struct SweepAggregate {
    double attack_fraction = 0.0;
    double knowledge_fraction = 1.0;
    int trials_ok = 0;
    double mean_error = 0.0;
    double std_error = 0.0;  // across trials
};

struct SweepResult {
    std::string config_json;  // echo of the driving configuration
    std::vector<TrialRow> rows;
    std::vector<SweepAggregate> aggregated;

    bool all_ok() const;
};

SweepResult run_experiment(const ExperimentConfig& cfg);

std::string experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const std::string& text);

std::string sweep_to_json(const SweepResult& result);
std::string sweep_to_csv(const SweepResult& result);
SweepResult sweep_from_json(const std::string& text);
SweepResult sweep_from_csv(const std::string& text);

// format is "csv" or "json"; the result must hold at least one row.
void emit_report(const SweepResult& result, const std::string& format, const std::string& path);
SweepResult load_report(const std::string& path);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace tdpoison
