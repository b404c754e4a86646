#include <catch2/catch_amalgamated.hpp>

#include "swapcert/scalars.hpp"

using swapcert::ExactScalar;

TEST_CASE("exact scalar arithmetic stays normalized") {
    const ExactScalar half = ExactScalar::half();
    const ExactScalar one(1);
    CHECK(half + half == one);
    CHECK(one - half == half);
    CHECK(half * ExactScalar(2) == one);

    // (1/sqrt(2))^2 = 1/2 exercises the sqrt(2) cross term.
    const ExactScalar is2 = ExactScalar::inv_sqrt2();
    CHECK(is2 * is2 == half);
    CHECK(ExactScalar::sqrt2() * is2 == one);

    CHECK((one - one).is_zero());
    CHECK(-half + half == ExactScalar(0));
}

TEST_CASE("exact scalar matches double arithmetic") {
    const ExactScalar v = ExactScalar::half() * ExactScalar::sqrt2() + ExactScalar(3);
    CHECK(v.to_double() == Catch::Approx(3.0 + std::sqrt(2.0) / 2.0).epsilon(1e-15));

    ExactScalar acc(0);
    double ref = 0.0;
    ExactScalar term = ExactScalar::inv_sqrt2();
    double term_d = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < 20; ++i) {
        acc = acc + term;
        ref += term_d;
        term = term * ExactScalar::half();
        term_d /= 2.0;
    }
    CHECK(acc.to_double() == Catch::Approx(ref).epsilon(1e-14));
}

TEST_CASE("exact scalar rejects overflow instead of wrapping") {
    const ExactScalar big(std::int64_t{1} << 62);
    CHECK_THROWS_AS(big * ExactScalar(8), std::overflow_error);
    CHECK_THROWS_AS(big + big + big, std::overflow_error);
}

TEST_CASE("denominator exponent normalizes away") {
    // (2 + 0 sqrt2)/2 must compare equal to 1.
    const ExactScalar a(2, 0, 1);
    CHECK(a == ExactScalar(1));
    CHECK(a.to_string() == "1");
    CHECK_THROWS_AS(ExactScalar(1, 0, -1), std::invalid_argument);
}
