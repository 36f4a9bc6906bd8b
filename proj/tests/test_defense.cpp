#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "tdpoison/attack.hpp"
#include "tdpoison/data.hpp"
#include "tdpoison/defense.hpp"

using namespace tdpoison;

namespace {

ObservationSet make_obs(std::initializer_list<Observation> entries) {
    return ObservationSet(std::vector<Observation>(entries));
}

ObservationSet single_item(const std::vector<double>& values) {
    std::vector<Observation> entries;
    for (std::size_t u = 0; u < values.size(); ++u) {
        entries.push_back({WorkerId{static_cast<std::int32_t>(u)}, ItemId{0}, values[u]});
    }
    return ObservationSet(std::move(entries));
}

ObservationSet random_fixture(std::mt19937_64& rng, int workers, int items) {
    std::uniform_real_distribution<double> draw(-10.0, 10.0);
    std::uniform_int_distribution<int> coin(0, 4);
    std::vector<Observation> entries;
    for (int u = 0; u < workers; ++u) {
        bool any = false;
        for (int i = 0; i < items; ++i) {
            if (coin(rng) == 0 && !(u == 0 && i == items - 1)) continue;  // sparse-ish
            entries.push_back({WorkerId{u}, ItemId{i}, draw(rng)});
            any = true;
        }
        if (!any) entries.push_back({WorkerId{u}, ItemId{0}, draw(rng)});
    }
    return ObservationSet(std::move(entries));
}

}  // namespace

TEST_CASE("mwa value step with one group equals the CRH value step bit for bit") {
    std::mt19937_64 rng(71);
    for (int rep = 0; rep < 10; ++rep) {
        const auto obs = random_fixture(rng, 7, 5);
        std::uniform_real_distribution<double> wdraw(0.1, 4.0);
        std::vector<double> weights(7);
        for (auto& w : weights) w = wdraw(rng);
        const auto mwa = mwa_update_values(obs, weights, 1);
        const auto crh = crh_update_values(obs, weights);
        REQUIRE(mwa.size() == crh.size());
        for (std::size_t i = 0; i < mwa.size(); ++i) {
            if (std::isnan(crh[i])) {
                CHECK(std::isnan(mwa[i]));
            } else {
                CHECK(mwa[i] == crh[i]);
            }
        }
    }
}

TEST_CASE("mwa value step medians out the extreme group") {
    // equal weights, singleton groups {0}, {5}, {100} -> median 5
    const auto obs = single_item({0.0, 5.0, 100.0});
    const std::vector<double> w{1.0, 1.0, 1.0};
    CHECK(mwa_update_values(obs, w, 3)[0] == doctest::Approx(5.0));

    // 4 observers, L=2: groups {0,2} and {4,100} -> means {1, 52} -> 26.5
    const auto four = single_item({0.0, 2.0, 4.0, 100.0});
    const std::vector<double> w4{1.0, 1.0, 1.0, 1.0};
    CHECK(mwa_update_values(four, w4, 2)[0] == doctest::Approx(26.5));

    // fewer observers than groups: L' = n
    const auto two = single_item({2.0, 8.0});
    const std::vector<double> w2{1.0, 1.0};
    CHECK(mwa_update_values(two, w2, 5)[0] == doctest::Approx(5.0));
}

TEST_CASE("mwa median stays within the observed value range") {
    std::mt19937_64 rng(73);
    for (int rep = 0; rep < 20; ++rep) {
        const auto obs = random_fixture(rng, 9, 4);
        std::uniform_real_distribution<double> wdraw(0.1, 4.0);
        std::vector<double> weights(9);
        for (auto& w : weights) w = wdraw(rng);
        std::uniform_int_distribution<int> ldraw(1, 6);
        const auto values = mwa_update_values(obs, weights, ldraw(rng));
        for (ItemId i : obs.observed_items()) {
            double lo = 1e300, hi = -1e300;
            for (auto idx : obs.item_entries(i)) {
                lo = std::min(lo, obs.entry(idx).value);
                hi = std::max(hi, obs.entry(idx).value);
            }
            CHECK(values[i.value] >= lo - 1e-12);
            CHECK(values[i.value] <= hi + 1e-12);
        }
    }
}

TEST_CASE("run_mwa with one group reduces to run_crh exactly") {
    std::mt19937_64 rng(79);
    const auto obs = random_fixture(rng, 8, 5);
    MwaConfig cfg;
    cfg.num_groups = 1;
    const auto mwa = run_mwa(obs, cfg);
    const auto crh = run_crh(obs, cfg.engine);
    CHECK(mwa.values == crh.values);
    CHECK(mwa.reliability == crh.reliability);
}

TEST_CASE("run_mwa ignores the magnitude of a lone outlier") {
    const auto mild = single_item({1.0, 2.0, 3.0, 1000.0});
    const auto wild = single_item({1.0, 2.0, 3.0, 1e9});
    MwaConfig cfg;
    cfg.num_groups = 3;
    const auto a = run_mwa(mild, cfg);
    const auto b = run_mwa(wild, cfg);
    CHECK(a.values[0] == b.values[0]);
    CHECK(a.values[0] == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("run_mwa cuts the error of a maximum attack versus plain CRH") {
    SyntheticConfig synth;
    synth.num_workers = 50;
    synth.num_items = 80;
    synth.num_values = 2000;
    synth.seed = 91;
    const auto [obs, truth] = generate_synthetic(synth);
    const auto before = run_crh(obs);

    double undefended = 0.0;
    double defended = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        const auto plan = build_attack_plan(obs, 0.2, 12, 300 + trial);
        const auto mal = maximum_attack(plan);
        const auto combined = obs.merged_with(mal.entries);
        undefended += average_estimation_error(before, run_crh(combined), plan.targets)
                          .average_error;
        MwaConfig cfg;
        cfg.num_groups = 5;
        defended += average_estimation_error(before, run_mwa(combined, cfg), plan.targets)
                        .average_error;
    }
    CHECK(defended < undefended);
}

TEST_CASE("worker influence is zero when removal changes nothing") {
    // three workers in perfect agreement: estimates never move
    const auto obs = make_obs({
        {WorkerId{0}, ItemId{0}, 4.0}, {WorkerId{1}, ItemId{0}, 4.0},
        {WorkerId{2}, ItemId{0}, 4.0},
        {WorkerId{0}, ItemId{1}, 1.0}, {WorkerId{1}, ItemId{1}, 1.0},
        {WorkerId{2}, ItemId{1}, 1.0},
    });
    CHECK(worker_influence(obs, WorkerId{1}) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("worker influence on a 2-worker 1-item fixture matches explicit runs") {
    const auto obs = single_item({0.0, 10.0});
    // full run: symmetric, value 5; removing worker 1 leaves value 0
    const auto base = run_crh(obs);
    const WorkerId removed[] = {WorkerId{1}};
    const auto reduced = run_crh(obs.without_workers(removed));
    const double expected = squared_distance(base.values[0], reduced.values[0]) / 1.0;
    CHECK(worker_influence(obs, WorkerId{1}) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(25.0).epsilon(1e-9));
}

TEST_CASE("worker influence errors on unknown workers") {
    const auto obs = single_item({0.0, 1.0});
    CHECK_THROWS_AS(worker_influence(obs, WorkerId{9}), std::invalid_argument);
}

TEST_CASE("malicious workers under maximum attack carry more influence") {
    SyntheticConfig synth;
    synth.num_workers = 30;
    synth.num_items = 40;
    synth.num_values = 900;
    synth.seed = 17;
    const auto [obs, truth] = generate_synthetic(synth);
    const auto plan = build_attack_plan(obs, 0.2, 10, 4);
    const auto mal = maximum_attack(plan);
    const auto combined = obs.merged_with(mal.entries);

    double normal_sum = 0.0;
    int normal_count = 0;
    double malicious_sum = 0.0;
    int malicious_count = 0;
    for (WorkerId u : combined.observed_workers()) {
        const double phi = worker_influence(combined, u);
        if (u.value >= obs.num_workers()) {
            malicious_sum += phi;
            ++malicious_count;
        } else {
            normal_sum += phi;
            ++normal_count;
        }
    }
    REQUIRE(malicious_count > 0);
    CHECK(malicious_sum / malicious_count > normal_sum / normal_count);
}

TEST_CASE("set influence is normalized, additive, and monotone") {
    std::mt19937_64 rng(83);
    for (int rep = 0; rep < 5; ++rep) {
        const auto obs = random_fixture(rng, 6, 4);
        const auto workers = obs.observed_workers();
        CHECK(set_influence(obs, {}) == 0.0);

        const std::vector<WorkerId> solo{workers[0]};
        CHECK(set_influence(obs, solo) ==
              doctest::Approx(worker_influence(obs, workers[0])).epsilon(1e-12));

        const std::vector<WorkerId> a{workers[0], workers[1]};
        const std::vector<WorkerId> b{workers[2], workers[3]};
        std::vector<WorkerId> ab = a;
        ab.insert(ab.end(), b.begin(), b.end());
        CHECK(set_influence(obs, ab) ==
              doctest::Approx(set_influence(obs, a) + set_influence(obs, b)).epsilon(1e-12));

        // monotone under inclusion
        CHECK(set_influence(obs, ab) >= set_influence(obs, a) - 1e-15);
    }
}

TEST_CASE("greedy selection equals the exhaustive optimum on small instances") {
    std::mt19937_64 rng(89);
    for (int rep = 0; rep < 6; ++rep) {
        std::uniform_int_distribution<int> wdraw(4, 9);
        const int workers = wdraw(rng);
        const auto obs = random_fixture(rng, workers, 4);
        const auto ids = obs.observed_workers();
        std::uniform_int_distribution<int> kdraw(1, static_cast<int>(ids.size()));
        const int k = kdraw(rng);

        const auto selected = select_influential_workers(obs, k);
        REQUIRE(selected.size() == static_cast<std::size_t>(k));
        const double greedy_value = set_influence(obs, selected);

        // brute force over all k-subsets
        std::vector<double> phi(ids.size());
        for (std::size_t j = 0; j < ids.size(); ++j) phi[j] = worker_influence(obs, ids[j]);
        double best = -1.0;
        std::vector<int> pick(ids.size(), 0);
        std::fill(pick.begin(), pick.begin() + k, 1);
        std::sort(pick.begin(), pick.end());
        do {
            double total = 0.0;
            for (std::size_t j = 0; j < ids.size(); ++j) {
                if (pick[j]) total += phi[j];
            }
            best = std::max(best, total);
        } while (std::next_permutation(pick.begin(), pick.end()));

        CHECK(greedy_value == doctest::Approx(best).epsilon(1e-12));
        CHECK(greedy_value >= (1.0 - 1.0 / std::exp(1.0)) * best - 1e-12);
    }
}

TEST_CASE("greedy selection edge cases and tie-break") {
    const auto obs = single_item({0.0, 10.0});
    CHECK(select_influential_workers(obs, 0).empty());
    const auto all = select_influential_workers(obs, 2);
    CHECK(all.size() == 2);
    CHECK_THROWS_AS(select_influential_workers(obs, 3), std::invalid_argument);

    // symmetric fixture: both influences are exactly 25; the smaller id wins
    const auto one = select_influential_workers(obs, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == WorkerId{0});
}

TEST_CASE("selection is independent of entry enumeration order") {
    std::mt19937_64 rng(97);
    const auto obs = random_fixture(rng, 7, 4);
    auto entries = obs.entries();
    std::shuffle(entries.begin(), entries.end(), rng);
    const ObservationSet shuffled(entries);
    CHECK(select_influential_workers(obs, 3) == select_influential_workers(shuffled, 3));
}

TEST_CASE("run_mie with assumed alpha zero is exactly run_crh") {
    std::mt19937_64 rng(101);
    const auto obs = random_fixture(rng, 8, 5);
    MieConfig cfg;
    cfg.assumed_attack_fraction = 0.0;
    const auto mie = run_mie(obs, cfg);
    const auto crh = run_crh(obs, cfg.engine);
    CHECK(mie.state.values == crh.values);
    CHECK(mie.state.reliability == crh.reliability);
    CHECK(mie.removed.empty());
    CHECK(mie.unestimable_items.empty());
}

TEST_CASE("run_mie removes the malicious workers under a maximum attack") {
    SyntheticConfig synth;
    synth.num_workers = 30;
    synth.num_items = 40;
    synth.num_values = 900;
    synth.seed = 23;
    const auto [obs, truth] = generate_synthetic(synth);
    const auto before = run_crh(obs);
    const auto plan = build_attack_plan(obs, 0.2, 10, 5);
    const auto mal = maximum_attack(plan);
    const auto combined = obs.merged_with(mal.entries);

    MieConfig cfg;
    cfg.assumed_attack_fraction = 0.2;
    const auto mie = run_mie(combined, cfg);
    const std::size_t all_workers = combined.observed_workers().size();
    CHECK(mie.removed.size() == static_cast<std::size_t>(0.2 * all_workers));

    MwaConfig mwa_cfg;
    mwa_cfg.num_groups = 5;
    const double mie_err =
        average_estimation_error(before, mie.state, plan.targets).average_error;
    const double mwa_err =
        average_estimation_error(before, run_mwa(combined, mwa_cfg), plan.targets).average_error;
    CHECK(mie_err < mwa_err);
}

TEST_CASE("run_mie on clean data reports its collateral damage") {
    SyntheticConfig synth;
    synth.num_workers = 25;
    synth.num_items = 30;
    synth.num_values = 600;
    synth.seed = 29;
    const auto [obs, truth] = generate_synthetic(synth);
    MieConfig cfg;
    cfg.assumed_attack_fraction = 0.1;
    const auto mie = run_mie(obs, cfg);
    CHECK(mie.removed.size() == static_cast<std::size_t>(0.1 * obs.observed_workers().size()));

    // honest workers were removed; the resulting shift is measurable, not hidden
    const auto clean = run_crh(obs, cfg.engine);
    std::vector<ItemId> targets;
    for (ItemId i : obs.observed_items()) {
        if (mie.state.has_value(i)) targets.push_back(i);
    }
    const auto report = average_estimation_error(clean, mie.state, targets);
    CHECK(report.average_error >= 0.0);
    for (const auto& [worker, score] : mie.removed) CHECK(score >= 0.0);
}

TEST_CASE("run_mie flags items that lose every observer") {
    // worker 2 is the sole observer of item 1, and on item 0 it anchors one
    // side of a split vote, so removing it swings that estimate hard; the
    // other workers sit in exact consensus elsewhere and barely matter
    const auto obs = make_obs({
        {WorkerId{0}, ItemId{0}, 0.0},
        {WorkerId{1}, ItemId{0}, 10.0},
        {WorkerId{2}, ItemId{0}, 0.0},
        {WorkerId{2}, ItemId{1}, 7.0},
        {WorkerId{0}, ItemId{2}, 5.0}, {WorkerId{3}, ItemId{2}, 5.0}, {WorkerId{4}, ItemId{2}, 5.0},
        {WorkerId{0}, ItemId{3}, 5.0}, {WorkerId{3}, ItemId{3}, 5.0}, {WorkerId{4}, ItemId{3}, 5.0},
        {WorkerId{0}, ItemId{4}, 5.0}, {WorkerId{3}, ItemId{4}, 5.0}, {WorkerId{4}, ItemId{4}, 5.0},
    });
    MieConfig cfg;
    cfg.assumed_attack_fraction = 0.2;  // floor(0.2 * 5) = 1 removal
    const auto mie = run_mie(obs, cfg);
    REQUIRE(mie.removed.size() == 1);
    CHECK(mie.removed[0].first == WorkerId{2});
    REQUIRE(mie.unestimable_items.size() == 1);
    CHECK(mie.unestimable_items[0] == ItemId{1});
    CHECK_FALSE(mie.state.has_value(ItemId{1}));
}
