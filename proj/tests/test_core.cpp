#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tdpoison/core.hpp"

using namespace tdpoison;

namespace {

AggregationState state_with(std::vector<double> values) {
    AggregationState s;
    s.model_kind = ModelKind::kCrh;
    s.values = std::move(values);
    return s;
}

}  // namespace

TEST_CASE("squared_distance basics") {
    CHECK(squared_distance(3.0, 3.0) == 0.0);
    CHECK(squared_distance(-1.0, 2.0) == 9.0);
    CHECK(squared_distance(93.69, 0.0) == doctest::Approx(8777.8161).epsilon(1e-12));
}

TEST_CASE("average_estimation_error on identical states is zero") {
    const auto s = state_with({1.0, 2.0, 3.0});
    const std::vector<ItemId> targets{ItemId{0}, ItemId{2}};
    const auto report = average_estimation_error(s, s, targets);
    CHECK(report.average_error == 0.0);
    CHECK(report.per_item_error.size() == 2);
}

TEST_CASE("average_estimation_error single and multi target") {
    const auto before = state_with({1.0});
    const auto after = state_with({3.0});
    const std::vector<ItemId> one{ItemId{0}};
    CHECK(average_estimation_error(before, after, one).average_error == doctest::Approx(4.0));

    const auto b2 = state_with({0.0, 0.0});
    const auto a2 = state_with({1.0, 3.0});
    const std::vector<ItemId> two{ItemId{0}, ItemId{1}};
    // hand mean of {1, 9}
    CHECK(average_estimation_error(b2, a2, two).average_error == doctest::Approx(5.0));
}

TEST_CASE("average_estimation_error error paths") {
    const auto s = state_with({1.0});
    const std::vector<ItemId> empty;
    CHECK_THROWS_AS(average_estimation_error(s, s, empty), std::invalid_argument);

    const auto longer = state_with({1.0, 2.0});
    const std::vector<ItemId> missing{ItemId{1}};
    CHECK_THROWS_WITH_AS(average_estimation_error(s, longer, missing),
                         doctest::Contains("item 1"), std::runtime_error);

    const auto gap = state_with({1.0, std::numeric_limits<double>::quiet_NaN()});
    CHECK_THROWS_AS(average_estimation_error(longer, gap, missing), std::runtime_error);
}

TEST_CASE("metric symmetry, permutation invariance, zero iff equal") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> draw(-50.0, 50.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> b(8);
        std::vector<double> a(8);
        for (auto& v : b) v = draw(rng);
        for (auto& v : a) v = draw(rng);
        std::vector<ItemId> targets;
        for (int i = 0; i < 8; ++i) targets.push_back(ItemId{i});

        const auto before = state_with(b);
        const auto after = state_with(a);
        const double forward = average_estimation_error(before, after, targets).average_error;
        const double backward = average_estimation_error(after, before, targets).average_error;
        CHECK(forward == doctest::Approx(backward).epsilon(1e-14));

        auto shuffled = targets;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const double permuted = average_estimation_error(before, after, shuffled).average_error;
        CHECK(forward == doctest::Approx(permuted).epsilon(1e-14));

        CHECK(average_estimation_error(before, before, targets).average_error == 0.0);
        if (forward == 0.0) {
            for (ItemId t : targets) CHECK(b[t.value] == a[t.value]);
        }
    }
}

TEST_CASE("evaluation report serialization carries metadata") {
    auto before = state_with({0.0});
    auto after = state_with({2.0});
    RunMetadata meta;
    meta.attack = "maximum";
    meta.attack_fraction = 0.2;
    meta.trial_seed = 7;
    const auto report =
        average_estimation_error(before, after, std::vector<ItemId>{ItemId{0}}, meta);
    const auto json = report.to_json_string();
    CHECK(json.find("\"maximum\"") != std::string::npos);
    CHECK(json.find("\"average_error\": 4") != std::string::npos);
    const auto row = report.to_csv_row();
    CHECK(row.rfind("4,maximum,none,", 0) == 0);
}

TEST_CASE("observation set validates and indexes") {
    std::vector<Observation> entries{
        {WorkerId{1}, ItemId{0}, 2.0},
        {WorkerId{0}, ItemId{1}, 3.0},
        {WorkerId{0}, ItemId{0}, 1.0},
    };
    const ObservationSet obs(entries);
    CHECK(obs.size() == 3);
    CHECK(obs.num_workers() == 2);
    CHECK(obs.num_items() == 2);
    // canonical order regardless of insertion order
    CHECK(obs.entries()[0].worker == WorkerId{0});
    CHECK(obs.entries()[0].item == ItemId{0});

    CHECK(obs.worker_entries(WorkerId{0}).size() == 2);
    CHECK(obs.item_entries(ItemId{0}).size() == 2);
    CHECK(obs.worker_entries(WorkerId{9}).empty());

    // inverse index property: every entry is reachable from both sides
    for (std::uint32_t idx = 0; idx < obs.size(); ++idx) {
        const auto& e = obs.entry(idx);
        auto ws = obs.worker_entries(e.worker);
        auto is = obs.item_entries(e.item);
        CHECK(std::count(ws.begin(), ws.end(), idx) == 1);
        CHECK(std::count(is.begin(), is.end(), idx) == 1);
    }
}

TEST_CASE("observation set rejects duplicates and non-finite values") {
    std::vector<Observation> dup{
        {WorkerId{0}, ItemId{0}, 1.0},
        {WorkerId{0}, ItemId{0}, 2.0},
    };
    CHECK_THROWS_AS(ObservationSet{dup}, std::invalid_argument);

    std::vector<Observation> inf{
        {WorkerId{0}, ItemId{0}, std::numeric_limits<double>::infinity()},
    };
    CHECK_THROWS_AS(ObservationSet{inf}, std::invalid_argument);
}

TEST_CASE("observation set derived views") {
    std::vector<Observation> entries;
    for (int u = 0; u < 4; ++u) {
        for (int i = 0; i < 3; ++i) {
            entries.push_back({WorkerId{u}, ItemId{i}, double(10 * u + i)});
        }
    }
    const ObservationSet obs(entries);

    const std::vector<ItemId> keep{ItemId{1}};
    const auto restricted = obs.restricted_to_items(keep);
    CHECK(restricted.size() == 4);
    CHECK(restricted.has_item(ItemId{1}));
    CHECK_FALSE(restricted.has_item(ItemId{0}));
    // ids keep their global meaning
    CHECK(restricted.worker_entries(WorkerId{3}).size() == 1);

    const std::vector<WorkerId> removed{WorkerId{0}, WorkerId{2}};
    const auto reduced = obs.without_workers(removed);
    CHECK(reduced.size() == 6);
    CHECK_FALSE(reduced.has_worker(WorkerId{0}));
    CHECK(reduced.has_worker(WorkerId{3}));

    const std::vector<Observation> extra{{WorkerId{9}, ItemId{0}, 5.0}};
    const auto merged = obs.merged_with(extra);
    CHECK(merged.size() == 13);
    CHECK(merged.num_workers() == 10);
}
