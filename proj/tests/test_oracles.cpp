#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "invfem/oracles.hpp"

using namespace invfem;

TEST_CASE("oracle energies", "[oracles]") {
    CHECK(oracle_energy({0.0, 1.0, 1.0, ShearKind::Simple}) == 0.0);
    CHECK(oracle_energy({0.5, 1.0, 1.0, ShearKind::Simple}) == Catch::Approx(0.5));
    CHECK(oracle_energy({0.5, 1.0, 1.0, ShearKind::Generalized}) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("oracle Cauchy stresses", "[oracles]") {
    const Mat3d simple = oracle_cauchy({0.5, 1.0, 1.0, ShearKind::Simple});
    CHECK(simple(0, 0) == Catch::Approx(0.5));
    CHECK(simple(1, 1) == Catch::Approx(-0.5));
    CHECK(simple(2, 2) == 0.0);
    CHECK(simple(0, 1) == Catch::Approx(2.0));
    CHECK(simple(0, 2) == 0.0);
    CHECK(simple(1, 2) == 0.0);

    const Mat3d gen = oracle_cauchy({0.5, 1.0, 1.0, ShearKind::Generalized});
    CHECK(gen(0, 0) == Catch::Approx(2.0 / 3.0));
    CHECK(gen(1, 1) == Catch::Approx(-2.0 / 3.0));
    CHECK(gen(2, 2) == 0.0);
    CHECK(gen(0, 1) == Catch::Approx(2.0));

    const Mat3d zero = oracle_cauchy({0.0, 1.0, 2.0, ShearKind::Generalized});
    CHECK(frobenius_norm(zero) == 0.0);
}

TEST_CASE("oracle stress trace vanishes identically", "[oracles]") {
    std::mt19937 rng(51);
    std::uniform_real_distribution<double> dist(0.1, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const ShearOracle o{dist(rng), dist(rng), dist(rng), ShearKind::Simple};
        const Mat3d s = oracle_cauchy(o);
        CHECK(std::abs(trace(s)) < 1e-13 * frobenius_norm(s));
    }
}

TEST_CASE("generalized oracle at fixed height equals simple shear with 2ky", "[oracles]") {
    std::mt19937 rng(52);
    std::uniform_real_distribution<double> dist(0.05, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const double k = dist(rng), c1 = dist(rng), c2 = dist(rng), y = dist(rng);
        const Mat3d gen = oracle_cauchy({k, c1, c2, ShearKind::Generalized}, y);
        const Mat3d simple = oracle_cauchy({2.0 * k * y, c1, c2, ShearKind::Simple});
        REQUIRE(frobenius_norm(gen - simple) < 1e-14 * std::max(1.0, frobenius_norm(simple)));
        REQUIRE(oracle_energy_pointwise({k, c1, c2, ShearKind::Generalized}, y) ==
                Catch::Approx(oracle_energy({2.0 * k * y, c1, c2, ShearKind::Simple})));
    }
}

TEST_CASE("field relative error", "[oracles]") {
    const std::vector<double> weights = {0.2, 0.3, 0.5};
    const std::vector<double> oracle = {1.0, -2.0, 0.5};

    const RelativeError zero = field_relative_error(oracle, oracle, weights);
    CHECK(zero.value == 0.0);
    CHECK(!zero.absolute);

    std::vector<double> scaled = oracle;
    for (double& v : scaled) v *= 1.01;
    const RelativeError one_percent = field_relative_error(scaled, oracle, weights);
    CHECK(one_percent.value == Catch::Approx(0.01).epsilon(1e-12));

    const std::vector<double> zeros = {0.0, 0.0, 0.0};
    const std::vector<double> small = {1e-3, 0.0, 0.0};
    const RelativeError absolute = field_relative_error(small, zeros, weights);
    CHECK(absolute.absolute);
    CHECK(absolute.value == Catch::Approx(1e-3 * std::sqrt(0.2)));

    CHECK_THROWS_AS(field_relative_error(std::vector<double>{1.0}, oracle, weights),
                    InvalidArgument);
}
