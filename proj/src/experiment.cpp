#include "tdpoison/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tdpoison {

namespace {

using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double sample_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

std::vector<double> uniform_initials(double low, double high, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> draw(low, high);
    std::vector<double> out(static_cast<std::size_t>(count));
    for (auto& v : out) v = draw(rng);
    return out;
}

struct SweepPoint {
    double attack_fraction;
    double knowledge_fraction;
};

// The server pipeline (model + optional defense) applied to one dataset.
// Evaluations compare this pipeline on attacked data against the same
// pipeline on clean data, so a defense is charged only for attack-induced
// shift, not for disagreeing with plain CRH on clean input.
AggregationState run_pipeline(const ExperimentConfig& cfg, const EngineConfig& server,
                              const ObservationSet& data, double alpha) {
    switch (cfg.defense) {
        case DefenseKind::kMwa: {
            MwaConfig mwa;
            mwa.num_groups = cfg.mwa_groups;
            mwa.engine = cfg.server_crh;
            if (const auto* crh = std::get_if<CrhConfig>(&server)) mwa.engine = *crh;
            return run_mwa(data, mwa);
        }
        case DefenseKind::kMie: {
            MieConfig mie;
            mie.assumed_attack_fraction = cfg.mie_assumed_alpha.value_or(alpha);
            mie.engine = cfg.server_crh;
            if (const auto* crh = std::get_if<CrhConfig>(&server)) mie.engine = *crh;
            mie.influence_domain = cfg.influence_domain;
            return run_mie(data, mie).state;
        }
        case DefenseKind::kNone:
            break;
    }
    return run_engine(data, server);
}

TrialRow run_trial(const ExperimentConfig& cfg, const ObservationSet& obs,
                   const AggregationState& before, SweepPoint point, int trial) {
    TrialRow row;
    row.attack_fraction = point.attack_fraction;
    row.knowledge_fraction = point.knowledge_fraction;
    row.trial = trial;
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
    try {
        const AttackPlan plan =
            build_attack_plan(obs, point.attack_fraction, cfg.num_targets, seed);

        EngineConfig server = cfg.model == ModelKind::kCrh ? EngineConfig{cfg.server_crh}
                                                           : EngineConfig{cfg.server_gtm};
        EngineConfig attacker = cfg.model == ModelKind::kCrh ? EngineConfig{cfg.attacker_crh}
                                                             : EngineConfig{cfg.attacker_gtm};
        const int universe = obs.num_workers() + static_cast<int>(plan.malicious_pool.size());
        auto apply_uniform_init = [&](EngineConfig& engine, double low, double high,
                                      std::uint64_t salt) {
            if (!(high > low)) return;
            auto inits = uniform_initials(low, high, universe, derive_seed(seed, salt));
            if (auto* crh = std::get_if<CrhConfig>(&engine)) {
                crh->initial_weights = std::move(inits);
            } else {
                std::get<GtmConfig>(engine).initial_variances = std::move(inits);
            }
        };
        apply_uniform_init(server, cfg.server_init_low, cfg.server_init_high, 3);
        apply_uniform_init(attacker, cfg.attacker_init_low, cfg.attacker_init_high, 4);

        MaliciousValues mal;
        switch (cfg.attack) {
            case AttackKind::kNone:
                break;
            case AttackKind::kRandom:
                mal = random_attack(plan, derive_seed(seed, 1));
                break;
            case AttackKind::kMaximum:
                mal = maximum_attack(plan);
                break;
            case AttackKind::kFullKnowledge:
                mal = run_full_knowledge_attack(obs, plan, attacker, cfg.ascent);
                break;
            case AttackKind::kPartialKnowledge: {
                PartialKnowledgeConfig pk;
                pk.knowledge_fraction = point.knowledge_fraction;
                pk.bootstrap_rounds = cfg.bootstrap_rounds;
                pk.use_bootstrap = cfg.use_bootstrap;
                pk.rng_seed = derive_seed(seed, 2);
                mal = run_partial_knowledge_attack(obs, plan, pk, attacker, cfg.ascent);
                break;
            }
        }

        const ObservationSet combined =
            mal.empty() ? obs : obs.merged_with(mal.entries);
        const AggregationState after =
            run_pipeline(cfg, server, combined, point.attack_fraction);

        RunMetadata meta;
        meta.attack = attack_name(cfg.attack);
        meta.defense = defense_name(cfg.defense);
        meta.attack_fraction = point.attack_fraction;
        meta.knowledge_fraction = point.knowledge_fraction;
        meta.trial_seed = seed;
        const EvaluationReport report =
            average_estimation_error(before, after, plan.targets, std::move(meta));

        std::vector<double> per_item;
        per_item.reserve(report.per_item_error.size());
        for (const auto& [item, err] : report.per_item_error) per_item.push_back(err);
        row.average_error = report.average_error;
        row.error_std = sample_std(per_item, report.average_error);
    } catch (const std::exception& e) {
        row.ok = false;
        row.message = e.what();
        row.average_error = std::numeric_limits<double>::quiet_NaN();
        row.error_std = std::numeric_limits<double>::quiet_NaN();
    }
    return row;
}

}  // namespace

const char* attack_name(AttackKind kind) {
    switch (kind) {
        case AttackKind::kNone: return "none";
        case AttackKind::kRandom: return "random";
        case AttackKind::kMaximum: return "maximum";
        case AttackKind::kFullKnowledge: return "full_knowledge";
        case AttackKind::kPartialKnowledge: return "partial_knowledge";
    }
    return "none";
}

const char* defense_name(DefenseKind kind) {
    switch (kind) {
        case DefenseKind::kNone: return "none";
        case DefenseKind::kMwa: return "mwa";
        case DefenseKind::kMie: return "mie";
    }
    return "none";
}

AttackKind attack_from_name(const std::string& name) {
    if (name == "none") return AttackKind::kNone;
    if (name == "random") return AttackKind::kRandom;
    if (name == "maximum") return AttackKind::kMaximum;
    if (name == "full_knowledge") return AttackKind::kFullKnowledge;
    if (name == "partial_knowledge") return AttackKind::kPartialKnowledge;
    throw std::invalid_argument("unknown attack '" + name + "'");
}

DefenseKind defense_from_name(const std::string& name) {
    if (name == "none") return DefenseKind::kNone;
    if (name == "mwa") return DefenseKind::kMwa;
    if (name == "mie") return DefenseKind::kMie;
    throw std::invalid_argument("unknown defense '" + name + "'");
}

bool SweepResult::all_ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const TrialRow& r) { return r.ok; });
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

SweepResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("run_experiment: trials < 1");
    if (cfg.num_targets < 1) throw std::invalid_argument("run_experiment: num_targets < 1");
    if (cfg.jobs < 1) throw std::invalid_argument("run_experiment: jobs < 1");
    if (cfg.attack_fractions.empty()) {
        throw std::invalid_argument("run_experiment: no attack fractions");
    }
    for (double a : cfg.attack_fractions) {
        if (!(a > 0.0) || a >= 0.5) {
            throw std::invalid_argument("run_experiment: attack fractions must lie in (0, 0.5)");
        }
    }
    const bool partial = cfg.attack == AttackKind::kPartialKnowledge;
    std::vector<double> knowledge = partial ? cfg.knowledge_fractions : std::vector<double>{1.0};
    if (knowledge.empty()) {
        throw std::invalid_argument("run_experiment: no knowledge fractions");
    }
    for (double k : knowledge) {
        if (!(k > 0.0) || k > 1.0) {
            throw std::invalid_argument("run_experiment: knowledge fractions must lie in (0, 1]");
        }
    }

    ObservationSet obs;
    if (!cfg.dataset_path.empty()) {
        obs = load_observations(cfg.dataset_path, cfg.schema);
    } else if (cfg.synthetic) {
        obs = generate_synthetic(*cfg.synthetic).first;
    } else {
        throw std::invalid_argument("run_experiment: no dataset configured");
    }

    const EngineConfig server = cfg.model == ModelKind::kCrh ? EngineConfig{cfg.server_crh}
                                                             : EngineConfig{cfg.server_gtm};

    std::vector<SweepPoint> points;
    for (double a : cfg.attack_fractions) {
        for (double k : knowledge) points.push_back({a, k});
    }

    SweepResult result;
    result.config_json = experiment_config_to_json(cfg);
    result.rows.resize(points.size() * static_cast<std::size_t>(cfg.trials));

    for (std::size_t p = 0; p < points.size(); ++p) {
        const SweepPoint point = points[p];
        // MIE's clean baseline depends on the assumed alpha, so the
        // before-state is resolved per sweep point
        const AggregationState before =
            run_pipeline(cfg, server, obs, point.attack_fraction);
        std::size_t next = 0;
        while (next < static_cast<std::size_t>(cfg.trials)) {
            const std::size_t batch =
                std::min<std::size_t>(cfg.jobs, static_cast<std::size_t>(cfg.trials) - next);
            std::vector<std::future<TrialRow>> futures;
            futures.reserve(batch);
            for (std::size_t b = 0; b < batch; ++b) {
                const int trial = static_cast<int>(next + b);
                futures.push_back(std::async(std::launch::async, [&, point, trial] {
                    return run_trial(cfg, obs, before, point, trial);
                }));
            }
            for (std::size_t b = 0; b < batch; ++b) {
                result.rows[p * cfg.trials + next + b] = futures[b].get();
            }
            next += batch;
        }

        SweepAggregate agg;
        agg.attack_fraction = point.attack_fraction;
        agg.knowledge_fraction = point.knowledge_fraction;
        std::vector<double> errors;
        for (std::size_t t = 0; t < static_cast<std::size_t>(cfg.trials); ++t) {
            const TrialRow& row = result.rows[p * cfg.trials + t];
            if (row.ok) errors.push_back(row.average_error);
        }
        agg.trials_ok = static_cast<int>(errors.size());
        if (!errors.empty()) {
            double sum = 0.0;
            for (double e : errors) sum += e;
            agg.mean_error = sum / static_cast<double>(errors.size());
            agg.std_error = sample_std(errors, agg.mean_error);
        }
        result.aggregated.push_back(agg);
    }
    return result;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    ordered_json j;
    if (!cfg.dataset_path.empty()) {
        j["dataset_path"] = cfg.dataset_path;
        j["dataset_schema"] = cfg.schema == DatasetSchema::kGeneric  ? "generic"
                              : cfg.schema == DatasetSchema::kEmotion ? "emotion"
                                                                       : "weather";
    } else if (cfg.synthetic) {
        j["synthetic_workers"] = cfg.synthetic->num_workers;
        j["synthetic_items"] = cfg.synthetic->num_items;
        j["synthetic_values"] = cfg.synthetic->num_values;
        j["synthetic_truth_low"] = cfg.synthetic->truth_low;
        j["synthetic_truth_high"] = cfg.synthetic->truth_high;
        j["synthetic_sigma_low"] = cfg.synthetic->sigma_low;
        j["synthetic_sigma_high"] = cfg.synthetic->sigma_high;
        j["synthetic_seed"] = cfg.synthetic->seed;
    }
    j["model"] = model_name(cfg.model);
    j["attack"] = attack_name(cfg.attack);
    j["defense"] = defense_name(cfg.defense);
    j["attack_fractions"] = cfg.attack_fractions;
    j["knowledge_fractions"] = cfg.knowledge_fractions;
    j["num_targets"] = cfg.num_targets;
    j["trials"] = cfg.trials;
    j["base_seed"] = cfg.base_seed;
    j["jobs"] = cfg.jobs;
    j["engine_max_iterations"] = cfg.server_crh.max_iterations;
    j["engine_tolerance"] = cfg.server_crh.tolerance;
    j["attacker_max_iterations"] = cfg.attacker_crh.max_iterations;
    j["crh_initial_weight"] = cfg.server_crh.initial_weight;
    j["gtm_prior_mean"] = cfg.server_gtm.prior_mean;
    j["gtm_prior_variance"] = cfg.server_gtm.prior_variance;
    j["gtm_alpha"] = cfg.server_gtm.alpha;
    j["gtm_beta"] = cfg.server_gtm.beta;
    j["gtm_initial_variance"] = cfg.server_gtm.initial_variance;
    j["gtm_normalize"] = cfg.server_gtm.normalize;
    j["ascent_step_scale"] = cfg.ascent.step_scale;
    j["ascent_max_outer_iterations"] = cfg.ascent.max_outer_iterations;
    j["ascent_loss_tolerance"] = cfg.ascent.loss_tolerance;
    j["bootstrap_rounds"] = cfg.bootstrap_rounds;
    j["use_bootstrap"] = cfg.use_bootstrap;
    j["mwa_groups"] = cfg.mwa_groups;
    if (cfg.mie_assumed_alpha) {
        j["mie_assumed_alpha"] = *cfg.mie_assumed_alpha;
    } else {
        j["mie_assumed_alpha"] = nullptr;
    }
    j["influence_domain"] =
        cfg.influence_domain == InfluenceDomain::kAllItems ? "all_items" : "rated_items";
    j["server_init_low"] = cfg.server_init_low;
    j["server_init_high"] = cfg.server_init_high;
    j["attacker_init_low"] = cfg.attacker_init_low;
    j["attacker_init_high"] = cfg.attacker_init_high;
    return j.dump();
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    const auto j = ordered_json::parse(text);
    ExperimentConfig cfg;
    if (j.contains("dataset_path")) {
        cfg.dataset_path = j.at("dataset_path").get<std::string>();
        cfg.synthetic.reset();
        if (j.contains("dataset_schema")) {
            cfg.schema = schema_from_name(j.at("dataset_schema").get<std::string>());
        }
    } else {
        SyntheticConfig synth;
        auto get = [&](const char* key, auto& out) {
            if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
        };
        get("synthetic_workers", synth.num_workers);
        get("synthetic_items", synth.num_items);
        get("synthetic_values", synth.num_values);
        get("synthetic_truth_low", synth.truth_low);
        get("synthetic_truth_high", synth.truth_high);
        get("synthetic_sigma_low", synth.sigma_low);
        get("synthetic_sigma_high", synth.sigma_high);
        get("synthetic_seed", synth.seed);
        cfg.synthetic = synth;
    }
    auto get = [&](const char* key, auto& out) {
        if (j.contains(key) && !j.at(key).is_null()) {
            out = j.at(key).get<std::decay_t<decltype(out)>>();
        }
    };
    std::string name;
    if (j.contains("model")) {
        name = j.at("model").get<std::string>();
        if (name != "crh" && name != "gtm") throw std::invalid_argument("unknown model " + name);
        cfg.model = name == "crh" ? ModelKind::kCrh : ModelKind::kGtm;
    }
    if (j.contains("attack")) cfg.attack = attack_from_name(j.at("attack").get<std::string>());
    if (j.contains("defense")) cfg.defense = defense_from_name(j.at("defense").get<std::string>());
    get("attack_fractions", cfg.attack_fractions);
    get("knowledge_fractions", cfg.knowledge_fractions);
    get("num_targets", cfg.num_targets);
    get("trials", cfg.trials);
    get("base_seed", cfg.base_seed);
    get("jobs", cfg.jobs);
    int engine_iters = cfg.server_crh.max_iterations;
    double engine_tol = cfg.server_crh.tolerance;
    get("engine_max_iterations", engine_iters);
    get("engine_tolerance", engine_tol);
    cfg.server_crh.max_iterations = cfg.server_gtm.max_iterations = engine_iters;
    cfg.server_crh.tolerance = cfg.server_gtm.tolerance = engine_tol;
    cfg.attacker_crh.max_iterations = cfg.attacker_gtm.max_iterations = engine_iters;
    cfg.attacker_crh.tolerance = cfg.attacker_gtm.tolerance = engine_tol;
    int attacker_iters = 0;
    get("attacker_max_iterations", attacker_iters);
    if (attacker_iters > 0) {
        cfg.attacker_crh.max_iterations = cfg.attacker_gtm.max_iterations = attacker_iters;
    }
    get("crh_initial_weight", cfg.server_crh.initial_weight);
    cfg.attacker_crh.initial_weight = cfg.server_crh.initial_weight;
    get("gtm_prior_mean", cfg.server_gtm.prior_mean);
    get("gtm_prior_variance", cfg.server_gtm.prior_variance);
    get("gtm_alpha", cfg.server_gtm.alpha);
    get("gtm_beta", cfg.server_gtm.beta);
    get("gtm_initial_variance", cfg.server_gtm.initial_variance);
    get("gtm_normalize", cfg.server_gtm.normalize);
    cfg.attacker_gtm = cfg.server_gtm;
    get("ascent_step_scale", cfg.ascent.step_scale);
    get("ascent_max_outer_iterations", cfg.ascent.max_outer_iterations);
    get("ascent_loss_tolerance", cfg.ascent.loss_tolerance);
    if (attacker_iters > 0) {
        cfg.attacker_crh.max_iterations = cfg.attacker_gtm.max_iterations = attacker_iters;
    }
    get("bootstrap_rounds", cfg.bootstrap_rounds);
    get("use_bootstrap", cfg.use_bootstrap);
    get("mwa_groups", cfg.mwa_groups);
    if (j.contains("mie_assumed_alpha") && !j.at("mie_assumed_alpha").is_null()) {
        cfg.mie_assumed_alpha = j.at("mie_assumed_alpha").get<double>();
    }
    if (j.contains("influence_domain")) {
        name = j.at("influence_domain").get<std::string>();
        if (name == "all_items") {
            cfg.influence_domain = InfluenceDomain::kAllItems;
        } else if (name == "rated_items") {
            cfg.influence_domain = InfluenceDomain::kRatedItems;
        } else {
            throw std::invalid_argument("unknown influence_domain " + name);
        }
    }
    get("server_init_low", cfg.server_init_low);
    get("server_init_high", cfg.server_init_high);
    get("attacker_init_low", cfg.attacker_init_low);
    get("attacker_init_high", cfg.attacker_init_high);
    return cfg;
}

std::string sweep_to_json(const SweepResult& result) {
    ordered_json j;
    j["metadata"] = ordered_json::parse(result.config_json.empty() ? "{}" : result.config_json);
    ordered_json trials = ordered_json::array();
    for (const TrialRow& row : result.rows) {
        trials.push_back({{"attack_fraction", row.attack_fraction},
                          {"knowledge_fraction", row.knowledge_fraction},
                          {"trial", row.trial},
                          {"average_error", row.ok ? ordered_json(row.average_error)
                                                   : ordered_json(nullptr)},
                          {"error_std", row.ok ? ordered_json(row.error_std)
                                               : ordered_json(nullptr)},
                          {"ok", row.ok},
                          {"message", row.message}});
    }
    j["trials"] = std::move(trials);
    ordered_json aggs = ordered_json::array();
    for (const SweepAggregate& agg : result.aggregated) {
        aggs.push_back({{"attack_fraction", agg.attack_fraction},
                        {"knowledge_fraction", agg.knowledge_fraction},
                        {"trials_ok", agg.trials_ok},
                        {"mean_error", agg.mean_error},
                        {"std_error", agg.std_error}});
    }
    j["aggregates"] = std::move(aggs);
    return j.dump(2) + "\n";
}

SweepResult sweep_from_json(const std::string& text) {
    const auto j = ordered_json::parse(text);
    SweepResult result;
    if (j.contains("metadata")) result.config_json = j.at("metadata").dump();
    for (const auto& t : j.at("trials")) {
        TrialRow row;
        row.attack_fraction = t.at("attack_fraction").get<double>();
        row.knowledge_fraction = t.at("knowledge_fraction").get<double>();
        row.trial = t.at("trial").get<int>();
        row.ok = t.at("ok").get<bool>();
        row.message = t.at("message").get<std::string>();
        row.average_error = row.ok ? t.at("average_error").get<double>()
                                   : std::numeric_limits<double>::quiet_NaN();
        row.error_std = row.ok ? t.at("error_std").get<double>()
                               : std::numeric_limits<double>::quiet_NaN();
        result.rows.push_back(std::move(row));
    }
    for (const auto& a : j.at("aggregates")) {
        SweepAggregate agg;
        agg.attack_fraction = a.at("attack_fraction").get<double>();
        agg.knowledge_fraction = a.at("knowledge_fraction").get<double>();
        agg.trials_ok = a.at("trials_ok").get<int>();
        agg.mean_error = a.at("mean_error").get<double>();
        agg.std_error = a.at("std_error").get<double>();
        result.aggregated.push_back(agg);
    }
    return result;
}

std::string sweep_to_csv(const SweepResult& result) {
    std::string out = "# config ";
    out += result.config_json.empty() ? "{}" : result.config_json;
    out += "\nkind,attack_fraction,knowledge_fraction,trial,average_error,error_std,status,message\n";
    auto sanitize = [](std::string s) {
        for (char& c : s) {
            if (c == ',' || c == '\n' || c == '\r') c = ';';
        }
        return s;
    };
    for (const TrialRow& row : result.rows) {
        out += "trial," + format_double(row.attack_fraction) + ',' +
               format_double(row.knowledge_fraction) + ',' + std::to_string(row.trial) + ',' +
               (row.ok ? format_double(row.average_error) : "") + ',' +
               (row.ok ? format_double(row.error_std) : "") + ',' +
               (row.ok ? "ok" : "failed") + ',' + sanitize(row.message) + '\n';
    }
    for (const SweepAggregate& agg : result.aggregated) {
        out += "aggregate," + format_double(agg.attack_fraction) + ',' +
               format_double(agg.knowledge_fraction) + ',' + std::to_string(agg.trials_ok) + ',' +
               format_double(agg.mean_error) + ',' + format_double(agg.std_error) + ",ok,\n";
    }
    return out;
}

SweepResult sweep_from_csv(const std::string& text) {
    SweepResult result;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# config ", 0) == 0) {
            result.config_json = line.substr(9);
            continue;
        }
        if (line.rfind("kind,", 0) == 0) continue;
        std::vector<std::string> fields;
        std::string field;
        for (char c : line) {
            if (c == ',') {
                fields.push_back(field);
                field.clear();
            } else if (c != '\r') {
                field += c;
            }
        }
        fields.push_back(field);
        if (fields.size() != 8) {
            throw std::runtime_error("sweep_from_csv: malformed row '" + line + "'");
        }
        if (fields[0] == "trial") {
            TrialRow row;
            row.attack_fraction = std::stod(fields[1]);
            row.knowledge_fraction = std::stod(fields[2]);
            row.trial = std::stoi(fields[3]);
            row.ok = fields[6] == "ok";
            row.average_error = row.ok ? std::stod(fields[4])
                                       : std::numeric_limits<double>::quiet_NaN();
            row.error_std = row.ok ? std::stod(fields[5])
                                   : std::numeric_limits<double>::quiet_NaN();
            row.message = fields[7];
            result.rows.push_back(std::move(row));
        } else if (fields[0] == "aggregate") {
            SweepAggregate agg;
            agg.attack_fraction = std::stod(fields[1]);
            agg.knowledge_fraction = std::stod(fields[2]);
            agg.trials_ok = std::stoi(fields[3]);
            agg.mean_error = std::stod(fields[4]);
            agg.std_error = std::stod(fields[5]);
            result.aggregated.push_back(agg);
        } else {
            throw std::runtime_error("sweep_from_csv: unknown row kind '" + fields[0] + "'");
        }
    }
    return result;
}

void emit_report(const SweepResult& result, const std::string& format, const std::string& path) {
    if (result.rows.empty()) throw std::invalid_argument("emit_report: empty result");
    std::string payload;
    if (format == "json") {
        payload = sweep_to_json(result);
    } else if (format == "csv") {
        payload = sweep_to_csv(result);
    } else {
        throw std::invalid_argument("emit_report: unknown format '" + format + "'");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << payload;
    if (!out) throw std::runtime_error("write failed for " + path);
}

SweepResult load_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    for (char c : text) {
        if (c == ' ' || c == '\n' || c == '\t') continue;
        return c == '{' ? sweep_from_json(text) : sweep_from_csv(text);
    }
    throw std::runtime_error(path + ": empty report");
}

}  // namespace tdpoison
