#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tdpoison {

// Dense integer identifiers. Kept as distinct types so a worker index can
// never be passed where an item index is expected.
struct WorkerId {
    std::int32_t value = -1;
    friend constexpr auto operator<=>(WorkerId, WorkerId) = default;
};

struct ItemId {
    std::int32_t value = -1;
    friend constexpr auto operator<=>(ItemId, ItemId) = default;
};

struct Observation {
    WorkerId worker;
    ItemId item;
    double value = 0.0;
    friend constexpr auto operator<=>(const Observation&, const Observation&) = default;
};

// Sparse (worker, item) -> value collection with per-worker and per-item
// indexes. Immutable after construction; the derived sets (restricted,
// merged, with workers removed) are new values built from the entries.
//
// Identifiers need not be contiguous: num_workers()/num_items() are
// max-id+1, and ids without observations simply have empty entry lists.
class ObservationSet {
  public:
    ObservationSet() = default;
    // Validates finiteness and (worker, item) uniqueness; entries are kept
    // in canonical (worker, item) order regardless of input order.
    explicit ObservationSet(std::vector<Observation> entries);

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    int num_workers() const { return static_cast<int>(by_worker_.size()); }
    int num_items() const { return static_cast<int>(by_item_.size()); }
    const std::vector<Observation>& entries() const { return entries_; }
    const Observation& entry(std::uint32_t idx) const { return entries_[idx]; }

    // Entry indexes for one worker/item, sorted; empty for unknown ids.
    std::span<const std::uint32_t> worker_entries(WorkerId u) const;
    std::span<const std::uint32_t> item_entries(ItemId i) const;
    bool has_worker(WorkerId u) const { return !worker_entries(u).empty(); }
    bool has_item(ItemId i) const { return !item_entries(i).empty(); }

    // Ids that carry at least one observation, ascending.
    std::vector<WorkerId> observed_workers() const;
    std::vector<ItemId> observed_items() const;

    // Derived sets. Ids keep their original meaning (no re-densification),
    // so reliability vectors indexed by id stay compatible across them.
    ObservationSet restricted_to_items(std::span<const ItemId> items) const;
    ObservationSet without_workers(std::span<const WorkerId> removed) const;
    ObservationSet merged_with(std::span<const Observation> extra) const;

    friend bool operator==(const ObservationSet& a, const ObservationSet& b) {
        return a.entries_ == b.entries_;
    }

  private:
    void build_indexes();

    std::vector<Observation> entries_;  // sorted by (worker, item)
    std::vector<std::vector<std::uint32_t>> by_worker_;
    std::vector<std::vector<std::uint32_t>> by_item_;
};

enum class ModelKind { kCrh, kGtm };

const char* model_name(ModelKind kind);

// Output of a truth-discovery run: one aggregated value per observed item
// and one reliability per observed worker (weight for CRH, variance for
// GTM). Both vectors are indexed by dense id; unobserved slots hold NaN.
struct AggregationState {
    ModelKind model_kind = ModelKind::kCrh;
    std::vector<double> values;
    std::vector<double> reliability;

    bool has_value(ItemId i) const;
    double value(ItemId i) const;  // throws when the item has no estimate
};

struct RunMetadata {
    std::string attack = "none";
    std::string defense = "none";
    double attack_fraction = 0.0;
    double knowledge_fraction = 1.0;
    std::uint64_t trial_seed = 0;
};

struct EvaluationReport {
    std::map<ItemId, double> per_item_error;
    double average_error = 0.0;
    RunMetadata metadata;

    std::string to_json_string() const;
    // Flat scalar fields only; per-item errors live in the JSON form.
    static std::string csv_header();
    std::string to_csv_row() const;
};

double squared_distance(double a, double b);

// Average of squared per-item deviations between two states over the
// targeted items. Throws when targets is empty or either state lacks an
// estimate for a target (the message names the item).
EvaluationReport average_estimation_error(const AggregationState& before,
                                          const AggregationState& after,
                                          std::span<const ItemId> targets,
                                          RunMetadata metadata = {});

}  // namespace tdpoison

template <>
struct std::hash<tdpoison::WorkerId> {
    std::size_t operator()(tdpoison::WorkerId id) const noexcept {
        return std::hash<std::int32_t>{}(id.value);
    }
};

template <>
struct std::hash<tdpoison::ItemId> {
    std::size_t operator()(tdpoison::ItemId id) const noexcept {
        return std::hash<std::int32_t>{}(id.value);
    }
};
