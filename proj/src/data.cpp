#include "tdpoison/data.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace tdpoison {

namespace {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
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
    return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": non-numeric value '" + s + "'");
    }
    return v;
}

std::int32_t parse_id(const std::string& s, std::size_t line_no, const char* what) {
    if (s.empty()) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": empty " + what);
    }
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || v < 0 || v > 0x7fffffff) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": " + what +
                                 " '" + s + "' is not a non-negative integer");
    }
    return static_cast<std::int32_t>(v);
}

// first-appearance-order symbol table for string ids
std::int32_t intern(std::unordered_map<std::string, std::int32_t>& table,
                    std::vector<std::string>& names, const std::string& key) {
    auto [it, inserted] = table.emplace(key, static_cast<std::int32_t>(names.size()));
    if (inserted) names.push_back(key);
    return it->second;
}

}  // namespace

std::pair<ObservationSet, GroundTruth> generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.num_workers < 1 || cfg.num_items < 1) {
        throw std::invalid_argument("generate_synthetic: need at least one worker and item");
    }
    if (cfg.truth_low > cfg.truth_high || cfg.sigma_low > cfg.sigma_high || cfg.sigma_low < 0.0) {
        throw std::invalid_argument("generate_synthetic: invalid truth or sigma range");
    }
    const long long pair_space =
        static_cast<long long>(cfg.num_workers) * static_cast<long long>(cfg.num_items);
    if (cfg.num_values < 1 || cfg.num_values > pair_space) {
        throw std::invalid_argument("generate_synthetic: num_values must lie in [1, workers*items]");
    }

    std::mt19937_64 rng(cfg.seed);
    GroundTruth truth;
    truth.item_truth.resize(static_cast<std::size_t>(cfg.num_items));
    truth.worker_sigma.resize(static_cast<std::size_t>(cfg.num_workers));
    {
        std::uniform_real_distribution<double> draw(cfg.truth_low, cfg.truth_high);
        for (auto& mu : truth.item_truth) mu = draw(rng);
    }
    {
        std::uniform_real_distribution<double> draw(cfg.sigma_low, cfg.sigma_high);
        for (auto& sigma : truth.worker_sigma) sigma = draw(rng);
    }

    // reservoir sample of num_values pair indexes from [0, workers*items)
    std::vector<long long> chosen(static_cast<std::size_t>(cfg.num_values));
    for (long long j = 0; j < cfg.num_values; ++j) chosen[j] = j;
    for (long long j = cfg.num_values; j < pair_space; ++j) {
        std::uniform_int_distribution<long long> pick(0, j);
        const long long slot = pick(rng);
        if (slot < cfg.num_values) chosen[slot] = j;
    }
    std::sort(chosen.begin(), chosen.end());

    std::vector<Observation> entries;
    entries.reserve(chosen.size());
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    for (long long pair : chosen) {
        const auto u = static_cast<std::int32_t>(pair / cfg.num_items);
        const auto i = static_cast<std::int32_t>(pair % cfg.num_items);
        const double value = truth.item_truth[i] + truth.worker_sigma[u] * unit_normal(rng);
        entries.push_back({WorkerId{u}, ItemId{i}, value});
    }
    return {ObservationSet(std::move(entries)), std::move(truth)};
}

DatasetSchema schema_from_name(const std::string& name) {
    if (name == "generic") return DatasetSchema::kGeneric;
    if (name == "emotion") return DatasetSchema::kEmotion;
    if (name == "weather") return DatasetSchema::kWeather;
    throw std::invalid_argument("unknown dataset schema '" + name + "'");
}

ObservationSet load_observations(const std::string& path, DatasetSchema schema,
                                 LoadReport* report) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": empty file");
    }
    ++line_no;  // header

    const bool string_ids = schema != DatasetSchema::kGeneric;
    std::unordered_map<std::string, std::int32_t> worker_table;
    std::unordered_map<std::string, std::int32_t> item_table;
    LoadReport local;
    LoadReport& rep = report ? *report : local;

    std::vector<Observation> entries;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3 && fields.size() != 4) {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": expected 3 or 4 fields, got " +
                                     std::to_string(fields.size()));
        }
        std::int32_t worker;
        std::int32_t item;
        if (string_ids) {
            worker = intern(worker_table, rep.worker_names, fields[0]);
            item = intern(item_table, rep.item_names, fields[1]);
        } else {
            worker = parse_id(fields[0], line_no, "worker id");
            item = parse_id(fields[1], line_no, "item id");
        }
        const double value = parse_double(fields[2], line_no);
        if (fields.size() == 4 && fields[3] != "0" && fields[3] != "1") {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": is_malicious must be 0 or 1");
        }
        entries.push_back({WorkerId{worker}, ItemId{item}, value});
    }
    if (entries.empty()) {
        throw std::runtime_error(path + ": no observation rows");
    }

    ObservationSet obs;
    try {
        obs = ObservationSet(std::move(entries));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    rep.rows = obs.size();
    rep.workers = obs.observed_workers().size();
    rep.items = obs.observed_items().size();
    return obs;
}

void export_observations(const ObservationSet& obs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "worker_id,item_id,value\n";
    for (const auto& e : obs.entries()) {
        out << e.worker.value << ',' << e.item.value << ',' << format_value(e.value) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

void export_combined(const ObservationSet& obs, const MaliciousValues& mal,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "worker_id,item_id,value,is_malicious\n";
    for (const auto& e : obs.entries()) {
        out << e.worker.value << ',' << e.item.value << ',' << format_value(e.value) << ",0\n";
    }
    std::vector<Observation> rows = mal.entries;
    std::sort(rows.begin(), rows.end());
    for (const auto& e : rows) {
        out << e.worker.value << ',' << e.item.value << ',' << format_value(e.value) << ",1\n";
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

void export_ground_truth(const GroundTruth& truth, const std::string& truth_path,
                         const std::string& sigma_path) {
    {
        std::ofstream out(truth_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + truth_path);
        out << "item_id,truth\n";
        for (std::size_t i = 0; i < truth.item_truth.size(); ++i) {
            out << i << ',' << format_value(truth.item_truth[i]) << '\n';
        }
    }
    {
        std::ofstream out(sigma_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + sigma_path);
        out << "worker_id,sigma\n";
        for (std::size_t u = 0; u < truth.worker_sigma.size(); ++u) {
            out << u << ',' << format_value(truth.worker_sigma[u]) << '\n';
        }
    }
}

GroundTruth load_ground_truth(const std::string& truth_path, const std::string& sigma_path) {
    GroundTruth truth;
    auto load_column = [](const std::string& path, std::vector<double>& out) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        std::string line;
        std::size_t line_no = 0;
        std::getline(in, line);
        ++line_no;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            if (fields.size() != 2) {
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": expected 2 fields");
            }
            const auto id = parse_id(fields[0], line_no, "id");
            const double v = parse_double(fields[1], line_no);
            if (static_cast<std::size_t>(id) >= out.size()) out.resize(id + 1, 0.0);
            out[id] = v;
        }
    };
    load_column(truth_path, truth.item_truth);
    load_column(sigma_path, truth.worker_sigma);
    return truth;
}

}  // namespace tdpoison
