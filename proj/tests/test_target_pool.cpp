#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ancl/rng.hpp"
#include "ancl/target_pool.hpp"

using namespace ancl;

namespace {
Vec unit(int k, int axis) {
    Vec v = Vec::Zero(k);
    v(axis) = 1.0;
    return v;
}

Vec random_unit(int k, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec v(k);
    for (int i = 0; i < k; ++i) v(i) = gauss(rng);
    return v / v.norm();
}
}  // namespace

TEST_SUITE_BEGIN("target_pool");

TEST_CASE("class-agnostic queue keeps the newest entries (FIFO eviction)") {
    TargetPool pool(PoolVariant::kClassAgnostic, 2, 3, 2);
    pool.push(unit(3, 0), 0);
    pool.push(unit(3, 1), 1);
    pool.push(unit(3, 2), 0);  // evicts the first
    CHECK(pool.size() == 2);
    Mat entries = pool.entries();
    std::multiset<double> firsts;
    for (Eigen::Index i = 0; i < entries.rows(); ++i)
        firsts.insert(entries.row(i).maxCoeff() * entries.row(i).sum());
    // items 2 and 3 remain: axes 1 and 2
    CHECK(entries.rowwise().maxCoeff().sum() == doctest::Approx(2.0));
    std::vector<std::int32_t> labs = pool.labels();
    CHECK(std::count(labs.begin(), labs.end(), 0) == 1);
    CHECK(std::count(labs.begin(), labs.end(), 1) == 1);
    Vec s = *pool.sample_supervised_target(1, kSampleAll, nullptr);
    CHECK((s - unit(3, 1)).norm() == 0.0);
}

TEST_CASE("class-wise queue with capacity 1 keeps the newer item") {
    TargetPool pool(PoolVariant::kClassWise, 2, 3, 1);
    pool.push(unit(3, 0), 0);
    pool.push(unit(3, 1), 0);
    CHECK(pool.class_count(0) == 1);
    Vec s = *pool.sample_supervised_target(0, kSampleAll, nullptr);
    CHECK((s - unit(3, 1)).norm() == 0.0);
}

TEST_CASE("prototype with ema_rate 0 tracks the last push") {
    TargetPool pool(PoolVariant::kLearnablePrototypes, 2, 3, 0, /*ema_rate=*/0.0);
    pool.push(unit(3, 0), 1);
    pool.push(unit(3, 2), 1);
    Vec s = *pool.sample_supervised_target(1, kSampleAll, nullptr);
    CHECK((s - unit(3, 2)).norm() < 1e-15);
}

TEST_CASE("prototype read renormalizes the EMA") {
    auto rng = make_rng(3);
    TargetPool pool(PoolVariant::kLearnablePrototypes, 1, 8, 0, 0.5);
    for (int i = 0; i < 20; ++i) pool.push(random_unit(8, rng), 0);
    Vec s = *pool.sample_supervised_target(0, kSampleAll, nullptr);
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);
}

TEST_CASE("push rejects non-unit features and bad labels") {
    TargetPool pool(PoolVariant::kClassAgnostic, 2, 3, 4);
    CHECK_THROWS_AS(pool.push(Vec(2.0 * unit(3, 0)), 0), ContractError);
    CHECK_THROWS_AS(pool.push(unit(3, 0), 2), ContractError);
}

TEST_CASE("sampling an absent class returns nothing") {
    TargetPool pool(PoolVariant::kClassAgnostic, 3, 4, 8);
    pool.push(unit(4, 0), 0);
    CHECK_FALSE(pool.sample_supervised_target(1, kSampleAll, nullptr).has_value());
    CHECK(pool.sample_supervised_target(0, 1, nullptr).has_value());
    CHECK_THROWS_AS(pool.sample_supervised_target(0, 0, nullptr), ContractError);
}

TEST_CASE("single matching entry with M=1 is returned exactly") {
    TargetPool pool(PoolVariant::kClassAgnostic, 2, 4, 8);
    auto rng = make_rng(4);
    Vec v = random_unit(4, rng);
    pool.push(v, 1);
    auto draw = make_rng(5);
    Vec s = *pool.sample_supervised_target(1, 1, &draw);
    CHECK((s - v).norm() == 0.0);
}

TEST_CASE("antipodal unit entries average to zero") {
    TargetPool pool(PoolVariant::kClassAgnostic, 1, 4, 8);
    auto rng = make_rng(6);
    Vec v = random_unit(4, rng);
    pool.push(v, 0);
    pool.push(Vec(-v), 0);
    Vec s = *pool.sample_supervised_target(0, kSampleAll, nullptr);
    CHECK(s.norm() < 1e-15);
}

TEST_CASE("averaging all entries matches the columnwise mean, norm <= 1") {
    auto rng = make_rng(7);
    TargetPool pool(PoolVariant::kClassAgnostic, 2, 6, 128);
    Mat stored(50, 6);
    for (int i = 0; i < 50; ++i) {
        Vec v = random_unit(6, rng);
        stored.row(i) = v.transpose();
        pool.push(v, 1);
    }
    Vec s = *pool.sample_supervised_target(1, kSampleAll, nullptr);
    Vec expected = stored.colwise().mean().transpose();
    CHECK((s - expected).norm() < 1e-14);
    CHECK(s.norm() <= 1.0 + 1e-12);
    // deterministic: no RNG involved for M=all
    Vec s2 = *pool.sample_supervised_target(1, kSampleAll, nullptr);
    CHECK(s == s2);
}

TEST_CASE("finite-M draws are averages of distinct stored entries") {
    TargetPool pool(PoolVariant::kClassWise, 1, 3, 8);
    pool.push(unit(3, 0), 0);
    pool.push(unit(3, 1), 0);
    pool.push(unit(3, 2), 0);
    auto rng = make_rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        Vec s = *pool.sample_supervised_target(0, 2, &rng);
        // mean of two distinct axes: exactly two coordinates at 1/2
        int halves = 0;
        for (int i = 0; i < 3; ++i)
            if (s(i) == doctest::Approx(0.5)) ++halves;
        CHECK(halves == 2);
    }
}

TEST_CASE("capacity is never exceeded under random push sequences") {
    auto rng = make_rng(9);
    std::uniform_int_distribution<int> label(0, 2);
    TargetPool agnostic(PoolVariant::kClassAgnostic, 3, 4, 37);
    TargetPool classwise(PoolVariant::kClassWise, 3, 4, 11);
    for (int i = 0; i < 10000; ++i) {
        Vec v = random_unit(4, rng);
        const int y = label(rng);
        agnostic.push(v, y);
        classwise.push(v, y);
        CHECK(agnostic.size() <= 37);
        for (int c = 0; c < 3; ++c) CHECK(classwise.class_count(c) <= 11);
    }
    CHECK(agnostic.size() == 37);
}

TEST_CASE("balanced class-wise pool holds the same multiset as class-agnostic") {
    // per_class_capacity * C == |Q| and perfectly interleaved pushes
    const int cap = 4, C = 3;
    TargetPool agnostic(PoolVariant::kClassAgnostic, C, 2, cap * C);
    TargetPool classwise(PoolVariant::kClassWise, C, 2, cap);
    auto rng = make_rng(10);
    std::vector<std::pair<double, int>> pushed;
    for (int round = 0; round < 9; ++round) {
        for (int c = 0; c < C; ++c) {
            Vec v = random_unit(2, rng);
            agnostic.push(v, c);
            classwise.push(v, c);
        }
    }
    auto key = [](const Mat& entries, const std::vector<std::int32_t>& labels) {
        std::multiset<std::pair<int, double>> s;
        for (Eigen::Index i = 0; i < entries.rows(); ++i)
            s.insert({labels[i], entries(i, 0)});
        return s;
    };
    CHECK(key(agnostic.entries(), agnostic.labels()) ==
          key(classwise.entries(), classwise.labels()));
}

TEST_SUITE_END();
