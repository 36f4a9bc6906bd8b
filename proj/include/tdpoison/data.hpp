#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tdpoison/attack.hpp"
#include "tdpoison/core.hpp"

namespace tdpoison {

struct SyntheticConfig {
    int num_workers = 500;
    int num_items = 4000;
    long long num_values = 50000;
    double truth_low = 20.0;
    double truth_high = 30.0;
    double sigma_low = 0.0;
    double sigma_high = 30.0;
    std::uint64_t seed = 0;
};

struct GroundTruth {
    std::vector<double> item_truth;   // by item id
    std::vector<double> worker_sigma; // by worker id
};

// Item truths and worker noise levels from uniform ranges; (worker, item)
// pairs drawn uniformly without replacement; each value normal around the
// item's truth with the worker's sigma. Fully determined by the seed.
std::pair<ObservationSet, GroundTruth> generate_synthetic(const SyntheticConfig& cfg);

enum class DatasetSchema { kGeneric, kEmotion, kWeather };

DatasetSchema schema_from_name(const std::string& name);

struct LoadReport {
    std::size_t rows = 0;
    std::size_t workers = 0;
    std::size_t items = 0;
    // id -> external name, for schemas whose ids are arbitrary strings
    std::vector<std::string> worker_names;
    std::vector<std::string> item_names;
};

// CSV with header worker_id,item_id,value[,is_malicious]. The generic schema
// requires non-negative integer ids used directly; the emotion/weather
// schemas accept arbitrary string ids mapped densely in first-appearance
// order (the mapping lands in `report`). Malformed rows and duplicate
// (worker, item) pairs are rejected with their line number.
ObservationSet load_observations(const std::string& path, DatasetSchema schema = DatasetSchema::kGeneric,
                                 LoadReport* report = nullptr);

// Lossless round trip: values are written with 17 significant digits and
// rows in canonical (worker, item) order.
void export_observations(const ObservationSet& obs, const std::string& path);

// Same schema plus the is_malicious flag column; malicious rows follow the
// normal ones.
void export_combined(const ObservationSet& obs, const MaliciousValues& mal,
                     const std::string& path);

void export_ground_truth(const GroundTruth& truth, const std::string& truth_path,
                         const std::string& sigma_path);
GroundTruth load_ground_truth(const std::string& truth_path, const std::string& sigma_path);

}  // namespace tdpoison
