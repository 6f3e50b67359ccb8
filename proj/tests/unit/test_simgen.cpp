#include "helpers.hpp"

#include "irrnn/error.hpp"
#include "irrnn/simgen.hpp"

#include <doctest.h>

#include <set>

using namespace irrnn;

TEST_CASE("sphere profile endpoints") {
    CHECK(sphere_profile(0.0, 3.0, 1.2) == 1.2);
    CHECK(sphere_profile(1.5, 2.0, 2.0) == doctest::Approx(2.0 * (1.0 - 0.5625)));
    CHECK(sphere_profile(3.0, 3.0, 1.2) == 0.0);
    CHECK(sphere_profile(5.0, 3.0, -0.7) == 0.0);
}

TEST_CASE("main effect: empty top-left block and sparse support") {
    const auto grid = make_grid({16, 16, 8});
    double support_total = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const auto f = gen_main_effect(grid, rng);
        for (Index v = 0; v < grid.size(); ++v) {
            const auto p = grid.lattice_index(v);
            if (p[0] < 8 && p[1] < 8) {
                REQUIRE(f.values(v) == 0.0);
            }
            REQUIRE(f.support(v, 0) == (f.values(v) != 0.0 ? 1 : 0));
        }
        const double frac = f.support.cast<double>().mean();
        CHECK(frac < 0.5);
        CHECK(frac > 0.0);
        support_total += frac;
    }
    MESSAGE("mean support fraction " << support_total / 100.0);
}

TEST_CASE("main effect needs two axes") {
    Rng rng(1);
    CHECK_THROWS_AS((void)gen_main_effect(make_grid({8}), rng), InvalidArgument);
}

TEST_CASE("deviation is a cone around one voxel") {
    const auto grid = make_grid({10, 12, 4});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const Vector a = gen_individual_deviation(grid, rng);
        Index center = 0;
        a.cwiseAbs().maxCoeff(&center);
        const double peak = a(center);
        CHECK(std::abs(peak) >= 0.5);
        CHECK(std::abs(peak) <= 1.5);
        const auto c = grid.lattice_index(center);
        std::vector<std::pair<double, double>> by_distance;
        for (Index v = 0; v < grid.size(); ++v) {
            const auto p = grid.lattice_index(v);
            double r2 = 0.0;
            for (std::size_t k = 0; k < p.size(); ++k) {
                r2 += double(p[k] - c[k]) * (p[k] - c[k]);
            }
            by_distance.emplace_back(std::sqrt(r2), a(v) * (peak > 0 ? 1.0 : -1.0));
            CHECK(a(v) * peak >= 0.0);
        }
        std::sort(by_distance.begin(), by_distance.end());
        for (std::size_t k = 1; k < by_distance.size(); ++k) {
            if (by_distance[k].first > by_distance[k - 1].first) {
                CHECK(by_distance[k].second <= by_distance[k - 1].second + 1e-15);
            }
        }
    }
}

TEST_CASE("deviation centers rarely collide") {
    const auto grid = make_grid({16, 16, 8});
    int collisions = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        Index c1 = 0;
        Index c2 = 0;
        gen_individual_deviation(grid, rng).cwiseAbs().maxCoeff(&c1);
        gen_individual_deviation(grid, rng).cwiseAbs().maxCoeff(&c2);
        collisions += c1 == c2;
    }
    CHECK(collisions <= 2);
}

TEST_CASE("noise variance is positive and varies") {
    const auto grid = make_grid({16, 16, 8});
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const Vector s2 = gen_noise_variance(grid, rng);
        CHECK(s2.minCoeff() > 0.0);
        CHECK(s2.maxCoeff() - s2.minCoeff() > 0.1);
    }
    Rng rng(1);
    const Vector one = gen_noise_variance(make_grid({1, 1, 1}), rng);
    REQUIRE(one.size() == 1);
    CHECK(one(0) > 0.0);
}

TEST_CASE("standardized chi-square noise") {
    Rng rng(2);
    const int n = 1000000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = draw_noise(NoiseKind::chisq3, rng);
        sum += e;
        sq += e * e;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.1);
    CHECK(parse_noise("chisq3") == NoiseKind::chisq3);
    CHECK_THROWS_AS(parse_noise("cauchy"), InvalidArgument);
}

TEST_CASE("generate: sizes, identity and calibration") {
    SimConfig cfg;
    CHECK(make_grid(cfg.dims).size() == 2048);
    CHECK(make_grid({128, 128, 8}).size() == 131072);

    cfg.dims = {32, 32, 8};
    cfg.subjects = 50;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        cfg.seed = seed;
        const auto sim = generate(cfg);
        const auto& t = sim.truth;
        CHECK_NOTHROW(sim.data.validate());
        CHECK_NOTHROW(t.validate(50, 8192));
        const Matrix recomposed = sim.data.X * t.beta + t.alpha + t.noise;
        CHECK((recomposed - sim.data.Y).cwiseAbs().maxCoeff() < 1e-12);
        const auto v = component_variances(sim.data, t);
        CHECK(v[0] == doctest::Approx(0.2).epsilon(0.10));
        CHECK(v[1] == doctest::Approx(0.5).epsilon(0.10));
        CHECK(v[2] == doctest::Approx(1.0).epsilon(0.10));
        CHECK(t.support == (t.beta.array() != 0.0).cast<std::uint8_t>().matrix());
    }
}

TEST_CASE("generate is reproducible") {
    SimConfig cfg;
    cfg.dims = {8, 8, 2};
    cfg.noise = NoiseKind::chisq3;
    cfg.seed = 5;
    const auto a = generate(cfg);
    const auto b = generate(cfg);
    CHECK(a.data == b.data);
    CHECK(a.truth.beta == b.truth.beta);
    CHECK(a.truth.alpha == b.truth.alpha);
    CHECK(a.truth.sigma2 == b.truth.sigma2);
    CHECK(a.truth.noise == b.truth.noise);
    cfg.seed = 6;
    CHECK_FALSE(generate(cfg).data == a.data);
}

TEST_CASE("held-out subjects share the truth") {
    SimConfig cfg;
    cfg.dims = {8, 8, 2};
    cfg.seed = 1;
    const auto sim = generate(cfg);
    const auto test = generate_subjects(cfg, sim.truth, 7, 99);
    CHECK(test.data.subjects() == 7);
    CHECK(test.truth.beta == sim.truth.beta);
    CHECK(test.truth.sigma2 == sim.truth.sigma2);
    const Matrix recomposed = test.data.X * test.truth.beta + test.truth.alpha + test.truth.noise;
    CHECK((recomposed - test.data.Y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("SimConfig validation") {
    SimConfig cfg;
    cfg.dims = {0, 4};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = SimConfig{};
    cfg.subjects = 1;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = SimConfig{};
    cfg.variance_ratio = {0.2, -0.5, 1.0};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = SimConfig{};
    cfg.dims = {16};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
