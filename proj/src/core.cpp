#include "tdpoison/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace tdpoison {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ObservationSet::ObservationSet(std::vector<Observation> entries)
    : entries_(std::move(entries)) {
    for (const auto& e : entries_) {
        if (e.worker.value < 0 || e.item.value < 0) {
            throw std::invalid_argument("observation has negative worker or item id");
        }
        if (!std::isfinite(e.value)) {
            throw std::invalid_argument("observation value is not finite (worker " +
                                        std::to_string(e.worker.value) + ", item " +
                                        std::to_string(e.item.value) + ")");
        }
    }
    std::sort(entries_.begin(), entries_.end());
    for (std::size_t k = 1; k < entries_.size(); ++k) {
        if (entries_[k].worker == entries_[k - 1].worker &&
            entries_[k].item == entries_[k - 1].item) {
            throw std::invalid_argument("duplicate observation for worker " +
                                        std::to_string(entries_[k].worker.value) + ", item " +
                                        std::to_string(entries_[k].item.value));
        }
    }
    build_indexes();
}

void ObservationSet::build_indexes() {
    std::int32_t max_worker = -1;
    std::int32_t max_item = -1;
    for (const auto& e : entries_) {
        max_worker = std::max(max_worker, e.worker.value);
        max_item = std::max(max_item, e.item.value);
    }
    by_worker_.assign(static_cast<std::size_t>(max_worker + 1), {});
    by_item_.assign(static_cast<std::size_t>(max_item + 1), {});
    for (std::uint32_t idx = 0; idx < entries_.size(); ++idx) {
        by_worker_[entries_[idx].worker.value].push_back(idx);
        by_item_[entries_[idx].item.value].push_back(idx);
    }
}

std::span<const std::uint32_t> ObservationSet::worker_entries(WorkerId u) const {
    if (u.value < 0 || u.value >= num_workers()) return {};
    return by_worker_[u.value];
}

std::span<const std::uint32_t> ObservationSet::item_entries(ItemId i) const {
    if (i.value < 0 || i.value >= num_items()) return {};
    return by_item_[i.value];
}

std::vector<WorkerId> ObservationSet::observed_workers() const {
    std::vector<WorkerId> out;
    for (std::int32_t u = 0; u < num_workers(); ++u) {
        if (!by_worker_[u].empty()) out.push_back(WorkerId{u});
    }
    return out;
}

std::vector<ItemId> ObservationSet::observed_items() const {
    std::vector<ItemId> out;
    for (std::int32_t i = 0; i < num_items(); ++i) {
        if (!by_item_[i].empty()) out.push_back(ItemId{i});
    }
    return out;
}

ObservationSet ObservationSet::restricted_to_items(std::span<const ItemId> items) const {
    std::vector<Observation> kept;
    for (ItemId i : items) {
        for (std::uint32_t idx : item_entries(i)) kept.push_back(entries_[idx]);
    }
    return ObservationSet(std::move(kept));
}

ObservationSet ObservationSet::without_workers(std::span<const WorkerId> removed) const {
    std::vector<bool> drop(by_worker_.size(), false);
    for (WorkerId u : removed) {
        if (u.value >= 0 && u.value < num_workers()) drop[u.value] = true;
    }
    std::vector<Observation> kept;
    kept.reserve(entries_.size());
    for (const auto& e : entries_) {
        if (!drop[e.worker.value]) kept.push_back(e);
    }
    return ObservationSet(std::move(kept));
}

ObservationSet ObservationSet::merged_with(std::span<const Observation> extra) const {
    std::vector<Observation> all = entries_;
    all.insert(all.end(), extra.begin(), extra.end());
    return ObservationSet(std::move(all));
}

const char* model_name(ModelKind kind) {
    return kind == ModelKind::kCrh ? "crh" : "gtm";
}

bool AggregationState::has_value(ItemId i) const {
    return i.value >= 0 && i.value < static_cast<std::int32_t>(values.size()) &&
           std::isfinite(values[i.value]);
}

double AggregationState::value(ItemId i) const {
    if (!has_value(i)) {
        throw std::runtime_error("no aggregated value for item " + std::to_string(i.value));
    }
    return values[i.value];
}

double squared_distance(double a, double b) {
    const double d = a - b;
    return d * d;
}

EvaluationReport average_estimation_error(const AggregationState& before,
                                          const AggregationState& after,
                                          std::span<const ItemId> targets,
                                          RunMetadata metadata) {
    if (targets.empty()) {
        throw std::invalid_argument("average_estimation_error: empty target set");
    }
    EvaluationReport report;
    report.metadata = std::move(metadata);
    double sum = 0.0;
    for (ItemId t : targets) {
        if (!before.has_value(t)) {
            throw std::runtime_error("before state has no value for target item " +
                                     std::to_string(t.value));
        }
        if (!after.has_value(t)) {
            throw std::runtime_error("after state has no value for target item " +
                                     std::to_string(t.value));
        }
        const double err = squared_distance(after.value(t), before.value(t));
        report.per_item_error[t] = err;
        sum += err;
    }
    report.average_error = sum / static_cast<double>(report.per_item_error.size());
    return report;
}

std::string EvaluationReport::to_json_string() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json errors = nlohmann::ordered_json::object();
    for (const auto& [item, err] : per_item_error) {
        errors[std::to_string(item.value)] = err;
    }
    j["per_item_error"] = std::move(errors);
    j["average_error"] = average_error;
    j["metadata"] = {{"attack", metadata.attack},
                     {"defense", metadata.defense},
                     {"attack_fraction", metadata.attack_fraction},
                     {"knowledge_fraction", metadata.knowledge_fraction},
                     {"trial_seed", metadata.trial_seed}};
    return j.dump(2);
}

std::string EvaluationReport::csv_header() {
    return "average_error,attack,defense,attack_fraction,knowledge_fraction,trial_seed";
}

std::string EvaluationReport::to_csv_row() const {
    std::string row = format_double(average_error);
    row += ',' + metadata.attack;
    row += ',' + metadata.defense;
    row += ',' + format_double(metadata.attack_fraction);
    row += ',' + format_double(metadata.knowledge_fraction);
    row += ',' + std::to_string(metadata.trial_seed);
    return row;
}

}  // namespace tdpoison
