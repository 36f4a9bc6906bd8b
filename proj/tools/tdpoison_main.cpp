// Command-line front end: dataset generation, aggregation, attacks, defenses,
// evaluation, and reproducible sweep experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tdpoison/attack.hpp"
#include "tdpoison/core.hpp"
#include "tdpoison/data.hpp"
#include "tdpoison/defense.hpp"
#include "tdpoison/experiment.hpp"
#include "tdpoison/truth_discovery.hpp"

namespace {

using nlohmann::ordered_json;
using namespace tdpoison;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ordered_json state_to_json(const AggregationState& state) {
    ordered_json j;
    j["model"] = model_name(state.model_kind);
    ordered_json values = ordered_json::object();
    for (std::size_t i = 0; i < state.values.size(); ++i) {
        if (std::isfinite(state.values[i])) values[std::to_string(i)] = state.values[i];
    }
    j["values"] = std::move(values);
    ordered_json reliability = ordered_json::object();
    for (std::size_t u = 0; u < state.reliability.size(); ++u) {
        if (std::isfinite(state.reliability[u])) {
            reliability[std::to_string(u)] = state.reliability[u];
        }
    }
    j["reliability"] = std::move(reliability);
    return j;
}

AggregationState state_from_json(const ordered_json& j) {
    AggregationState state;
    const auto model = j.at("model").get<std::string>();
    state.model_kind = model == "gtm" ? ModelKind::kGtm : ModelKind::kCrh;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [key, value] : j.at("values").items()) {
        const auto id = static_cast<std::size_t>(std::stoul(key));
        if (id >= state.values.size()) state.values.resize(id + 1, nan);
        state.values[id] = value.get<double>();
    }
    for (const auto& [key, value] : j.at("reliability").items()) {
        const auto id = static_cast<std::size_t>(std::stoul(key));
        if (id >= state.reliability.size()) state.reliability.resize(id + 1, nan);
        state.reliability[id] = value.get<double>();
    }
    return state;
}

ordered_json plan_to_json(const AttackPlan& plan) {
    ordered_json j;
    j["attack_fraction"] = plan.attack_fraction;
    j["rng_seed"] = plan.rng_seed;
    ordered_json targets = ordered_json::array();
    for (ItemId t : plan.targets) targets.push_back(t.value);
    j["targets"] = std::move(targets);
    ordered_json pool = ordered_json::array();
    for (WorkerId u : plan.malicious_pool) pool.push_back(u.value);
    j["malicious_pool"] = std::move(pool);
    ordered_json attackers = ordered_json::object();
    ordered_json bounds = ordered_json::object();
    for (std::size_t ti = 0; ti < plan.targets.size(); ++ti) {
        ordered_json ids = ordered_json::array();
        for (WorkerId u : plan.attackers[ti]) ids.push_back(u.value);
        attackers[std::to_string(plan.targets[ti].value)] = std::move(ids);
        bounds[std::to_string(plan.targets[ti].value)] =
            ordered_json::array({plan.bounds[ti].min, plan.bounds[ti].max});
    }
    j["attackers"] = std::move(attackers);
    j["bounds"] = std::move(bounds);
    return j;
}

std::vector<ItemId> targets_from_plan_file(const std::string& path) {
    const auto j = ordered_json::parse(read_text(path));
    std::vector<ItemId> targets;
    for (const auto& t : j.at("targets")) targets.push_back(ItemId{t.get<std::int32_t>()});
    return targets;
}

EngineConfig make_engine(ModelKind model, const CrhConfig& crh, const GtmConfig& gtm) {
    if (model == ModelKind::kCrh) return crh;
    return gtm;
}

int cmd_generate(const SyntheticConfig& cfg, const std::string& out,
                 const std::string& truth_out, const std::string& sigma_out) {
    const auto [obs, truth] = generate_synthetic(cfg);
    export_observations(obs, out);
    if (!truth_out.empty() && !sigma_out.empty()) {
        export_ground_truth(truth, truth_out, sigma_out);
    }
    std::cout << "wrote " << obs.size() << " observations from "
              << obs.observed_workers().size() << " workers on "
              << obs.observed_items().size() << " items to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"data poisoning attacks and defenses for continuous-label truth discovery"};
    app.require_subcommand(1);

    // shared engine knobs
    std::string model_str = "crh";
    int max_iterations = 100;
    double tolerance = 1e-6;
    double initial_weight = 1.0;
    GtmConfig gtm_defaults;
    bool gtm_raw = false;

    auto add_engine_options = [&](CLI::App* sub) {
        sub->add_option("--model", model_str, "truth discovery model: crh or gtm")
            ->check(CLI::IsMember({"crh", "gtm"}));
        sub->add_option("--max-iterations", max_iterations, "engine iteration cap");
        sub->add_option("--tolerance", tolerance, "engine convergence threshold");
        sub->add_option("--initial-weight", initial_weight, "CRH initial worker weight");
        sub->add_option("--prior-mean", gtm_defaults.prior_mean, "GTM prior mean");
        sub->add_option("--prior-variance", gtm_defaults.prior_variance, "GTM prior variance");
        sub->add_option("--gtm-alpha", gtm_defaults.alpha, "GTM variance hyperparameter alpha");
        sub->add_option("--gtm-beta", gtm_defaults.beta, "GTM variance hyperparameter beta");
        sub->add_option("--initial-variance", gtm_defaults.initial_variance,
                        "GTM initial worker variance");
        sub->add_flag("--raw", gtm_raw, "skip GTM z-score normalization");
    };
    auto build_crh = [&] {
        CrhConfig crh;
        crh.max_iterations = max_iterations;
        crh.tolerance = tolerance;
        crh.initial_weight = initial_weight;
        return crh;
    };
    auto build_gtm = [&] {
        GtmConfig gtm = gtm_defaults;
        gtm.max_iterations = max_iterations;
        gtm.tolerance = tolerance;
        gtm.normalize = !gtm_raw;
        return gtm;
    };

    // generate
    SyntheticConfig synth;
    std::string out_path = "observations.csv";
    std::string truth_out;
    std::string sigma_out;
    auto* generate = app.add_subcommand("generate", "generate a synthetic dataset");
    generate->add_option("--workers", synth.num_workers, "number of workers");
    generate->add_option("--items", synth.num_items, "number of items");
    generate->add_option("--values", synth.num_values, "number of observations");
    generate->add_option("--truth-low", synth.truth_low, "item truth range low");
    generate->add_option("--truth-high", synth.truth_high, "item truth range high");
    generate->add_option("--sigma-low", synth.sigma_low, "worker sigma range low");
    generate->add_option("--sigma-high", synth.sigma_high, "worker sigma range high");
    generate->add_option("--seed", synth.seed, "generation seed");
    generate->add_option("--out", out_path, "observation CSV path");
    generate->add_option("--truth-out", truth_out, "item ground-truth CSV path");
    generate->add_option("--sigma-out", sigma_out, "worker sigma CSV path");

    // aggregate
    std::string input_path;
    std::string schema_str = "generic";
    std::string state_out = "state.json";
    auto* aggregate = app.add_subcommand("aggregate", "run CRH or GTM on a dataset");
    aggregate->add_option("--input", input_path, "observation CSV")->required();
    aggregate->add_option("--schema", schema_str, "generic, emotion, or weather")
        ->check(CLI::IsMember({"generic", "emotion", "weather"}));
    aggregate->add_option("--out", state_out, "aggregation state JSON path");
    add_engine_options(aggregate);

    // attack
    std::string attack_str = "full_knowledge";
    double alpha = 0.1;
    int num_targets = 400;
    std::uint64_t seed = 1;
    PartialKnowledgeConfig pk;
    bool no_bootstrap = false;
    GradientAscentConfig ascent;
    std::string malicious_out = "malicious_values.csv";
    std::string plan_out = "plan.json";
    std::string combined_out;
    auto* attack = app.add_subcommand("attack", "craft malicious worker values");
    attack->add_option("--input", input_path, "observation CSV")->required();
    attack->add_option("--schema", schema_str)->check(CLI::IsMember({"generic", "emotion", "weather"}));
    attack->add_option("--attack", attack_str, "random, maximum, full_knowledge, partial_knowledge")
        ->check(CLI::IsMember({"random", "maximum", "full_knowledge", "partial_knowledge"}));
    attack->add_option("--alpha", alpha, "attack fraction in (0, 0.5)");
    attack->add_option("--num-targets", num_targets, "number of targeted items");
    attack->add_option("--seed", seed, "plan and attack seed");
    attack->add_option("--knowledge-fraction", pk.knowledge_fraction,
                       "observed share per target (partial knowledge)");
    attack->add_option("--bootstrap-rounds", pk.bootstrap_rounds, "bootstrap resamples B");
    attack->add_flag("--no-bootstrap", no_bootstrap, "estimate from observed values directly");
    attack->add_option("--step-scale", ascent.step_scale, "eta0 as a share of the bound range");
    attack->add_option("--outer-iterations", ascent.max_outer_iterations, "ascent iteration cap");
    attack->add_option("--loss-tolerance", ascent.loss_tolerance, "relative loss change cutoff");
    attack->add_option("--out", malicious_out, "malicious values CSV");
    attack->add_option("--plan-out", plan_out, "attack plan JSON");
    attack->add_option("--combined-out", combined_out, "normal+malicious CSV for the server");
    add_engine_options(attack);

    // defend
    std::string defense_str = "mwa";
    int groups = 5;
    double assumed_alpha = 0.1;
    std::string influence_domain_str = "all_items";
    std::string removed_out;
    auto* defend = app.add_subcommand("defend", "aggregate with MWA or MIE");
    defend->add_option("--input", input_path, "observation CSV (normal plus malicious)")
        ->required();
    defend->add_option("--schema", schema_str)->check(CLI::IsMember({"generic", "emotion", "weather"}));
    defend->add_option("--defense", defense_str, "mwa or mie")
        ->check(CLI::IsMember({"mwa", "mie"}));
    defend->add_option("--groups", groups, "MWA group count L");
    defend->add_option("--assumed-alpha", assumed_alpha, "MIE known attack fraction");
    defend->add_option("--influence-domain", influence_domain_str,
                       "items entering the influence sum")
        ->check(CLI::IsMember({"all_items", "rated_items"}));
    defend->add_option("--out", state_out, "aggregation state JSON path");
    defend->add_option("--removed-out", removed_out, "removed-worker CSV (MIE)");
    add_engine_options(defend);

    // evaluate
    std::string before_path;
    std::string after_path;
    std::string plan_path;
    std::string targets_str;
    std::string report_json;
    std::string report_csv;
    RunMetadata metadata;
    auto* evaluate = app.add_subcommand("evaluate", "average estimation error between two states");
    evaluate->add_option("--before", before_path, "before-attack state JSON")->required();
    evaluate->add_option("--after", after_path, "after state JSON")->required();
    evaluate->add_option("--plan", plan_path, "plan JSON supplying the targets");
    evaluate->add_option("--targets", targets_str, "comma-separated item ids");
    evaluate->add_option("--out-json", report_json, "evaluation report JSON path");
    evaluate->add_option("--out-csv", report_csv, "evaluation report CSV path");
    evaluate->add_option("--attack-name", metadata.attack, "metadata: attack name");
    evaluate->add_option("--defense-name", metadata.defense, "metadata: defense name");
    evaluate->add_option("--alpha", metadata.attack_fraction, "metadata: attack fraction");
    evaluate->add_option("--knowledge-fraction", metadata.knowledge_fraction,
                         "metadata: knowledge fraction");
    evaluate->add_option("--trial-seed", metadata.trial_seed, "metadata: trial seed");

    // sweep
    std::string config_path;
    std::string output_dir = ".";
    std::optional<std::string> override_model;
    std::optional<std::string> override_attack;
    std::optional<std::string> override_defense;
    std::optional<int> override_trials;
    std::optional<int> override_jobs;
    std::optional<std::uint64_t> override_seed;
    std::optional<int> override_targets;
    auto* sweep = app.add_subcommand("sweep", "run a configured experiment sweep");
    sweep->add_option("--config", config_path, "experiment configuration JSON")->required();
    sweep->add_option("--output-dir", output_dir, "directory for result.csv / result.json");
    sweep->add_option("--model", override_model, "override: crh or gtm");
    sweep->add_option("--attack", override_attack, "override: attack kind");
    sweep->add_option("--defense", override_defense, "override: defense kind");
    sweep->add_option("--trials", override_trials, "override: trials per sweep point");
    sweep->add_option("--jobs", override_jobs, "override: parallel trial bound");
    sweep->add_option("--base-seed", override_seed, "override: base seed");
    sweep->add_option("--num-targets", override_targets, "override: targeted item count");

    // report
    std::string report_in;
    std::string report_format = "csv";
    std::string report_out = "result.csv";
    auto* report = app.add_subcommand("report", "convert a sweep result between csv and json");
    report->add_option("--input", report_in, "result file (csv or json)")->required();
    report->add_option("--format", report_format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    report->add_option("--out", report_out, "output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) {
            return cmd_generate(synth, out_path, truth_out, sigma_out);
        }

        if (*aggregate) {
            const auto obs = load_observations(input_path, schema_from_name(schema_str));
            const ModelKind model = model_str == "gtm" ? ModelKind::kGtm : ModelKind::kCrh;
            const auto state = run_engine(obs, make_engine(model, build_crh(), build_gtm()));
            write_text(state_out, state_to_json(state).dump(2) + "\n");
            std::cout << "aggregated " << obs.size() << " observations with " << model_str
                      << "; state written to " << state_out << "\n";
            return 0;
        }

        if (*attack) {
            const auto obs = load_observations(input_path, schema_from_name(schema_str));
            const ModelKind model = model_str == "gtm" ? ModelKind::kGtm : ModelKind::kCrh;
            const auto engine = make_engine(model, build_crh(), build_gtm());
            const auto plan = build_attack_plan(obs, alpha, num_targets, seed);

            MaliciousValues mal;
            if (attack_str == "random") {
                mal = random_attack(plan, derive_seed(seed, 1));
            } else if (attack_str == "maximum") {
                mal = maximum_attack(plan);
            } else if (attack_str == "full_knowledge") {
                mal = run_full_knowledge_attack(obs, plan, engine, ascent);
            } else {
                pk.use_bootstrap = !no_bootstrap;
                pk.rng_seed = derive_seed(seed, 2);
                mal = run_partial_knowledge_attack(obs, plan, pk, engine, ascent);
            }

            export_combined(ObservationSet{}, mal, malicious_out);
            write_text(plan_out, plan_to_json(plan).dump(2) + "\n");
            if (!combined_out.empty()) export_combined(obs, mal, combined_out);
            std::cout << attack_str << " attack wrote " << mal.entries.size()
                      << " malicious values for " << plan.targets.size() << " targets\n";
            return 0;
        }

        if (*defend) {
            const auto obs = load_observations(input_path, schema_from_name(schema_str));
            AggregationState state;
            if (defense_str == "mwa") {
                MwaConfig cfg;
                cfg.num_groups = groups;
                cfg.engine = build_crh();
                state = run_mwa(obs, cfg);
            } else {
                MieConfig cfg;
                cfg.assumed_attack_fraction = assumed_alpha;
                cfg.engine = build_crh();
                cfg.influence_domain = influence_domain_str == "rated_items"
                                           ? InfluenceDomain::kRatedItems
                                           : InfluenceDomain::kAllItems;
                auto mie = run_mie(obs, cfg);
                state = std::move(mie.state);
                if (!removed_out.empty()) {
                    std::string csv = "worker_id,influence\n";
                    for (const auto& [worker, score] : mie.removed) {
                        csv += std::to_string(worker.value) + ',' + format_double(score) + '\n';
                    }
                    write_text(removed_out, csv);
                }
                if (!mie.unestimable_items.empty()) {
                    std::cerr << "warning: " << mie.unestimable_items.size()
                              << " items lost every observer\n";
                }
            }
            write_text(state_out, state_to_json(state).dump(2) + "\n");
            std::cout << defense_str << " state written to " << state_out << "\n";
            return 0;
        }

        if (*evaluate) {
            const auto before = state_from_json(ordered_json::parse(read_text(before_path)));
            const auto after = state_from_json(ordered_json::parse(read_text(after_path)));
            std::vector<ItemId> targets;
            if (!plan_path.empty()) {
                targets = targets_from_plan_file(plan_path);
            } else if (!targets_str.empty()) {
                std::stringstream ss(targets_str);
                std::string token;
                while (std::getline(ss, token, ',')) {
                    targets.push_back(ItemId{static_cast<std::int32_t>(std::stol(token))});
                }
            } else {
                throw std::runtime_error("evaluate needs --plan or --targets");
            }
            const auto rep = average_estimation_error(before, after, targets, metadata);
            if (!report_json.empty()) write_text(report_json, rep.to_json_string() + "\n");
            if (!report_csv.empty()) {
                write_text(report_csv, EvaluationReport::csv_header() + "\n" + rep.to_csv_row() +
                                           "\n");
            }
            std::cout << "average_error " << format_double(rep.average_error) << " over "
                      << targets.size() << " targets\n";
            return 0;
        }

        if (*sweep) {
            auto cfg = experiment_config_from_json(read_text(config_path));
            if (override_model) {
                cfg.model = *override_model == "gtm" ? ModelKind::kGtm : ModelKind::kCrh;
            }
            if (override_attack) cfg.attack = attack_from_name(*override_attack);
            if (override_defense) cfg.defense = defense_from_name(*override_defense);
            if (override_trials) cfg.trials = *override_trials;
            if (override_jobs) cfg.jobs = *override_jobs;
            if (override_seed) cfg.base_seed = *override_seed;
            if (override_targets) cfg.num_targets = *override_targets;

            const auto result = run_experiment(cfg);
            std::filesystem::create_directories(output_dir);
            emit_report(result, "csv", output_dir + "/result.csv");
            emit_report(result, "json", output_dir + "/result.json");
            int failures = 0;
            for (const auto& row : result.rows) {
                if (!row.ok) ++failures;
            }
            for (const auto& agg : result.aggregated) {
                std::cout << "alpha " << agg.attack_fraction << " knowledge "
                          << agg.knowledge_fraction << ": mean error " << agg.mean_error
                          << " (std " << agg.std_error << ", " << agg.trials_ok << " trials)\n";
            }
            std::cout << "results written to " << output_dir << "/result.{csv,json}\n";
            if (failures > 0) {
                std::cerr << failures << " of " << result.rows.size() << " trials failed\n";
                return 2;
            }
            return 0;
        }

        if (*report) {
            emit_report(load_report(report_in), report_format, report_out);
            std::cout << "wrote " << report_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
