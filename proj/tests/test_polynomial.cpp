#include <catch2/catch_amalgamated.hpp>

#include "swapcert/polynomial.hpp"
#include "swapcert/qubit.hpp"

using namespace swapcert;

TEST_CASE("polynomial product is the noncommutative convolution") {
    // With x = A1 and z = A0: (x - xz)^2 = 1 - z - xzx + xzxz.
    const ExactPolynomial x = ExactPolynomial::letter(0, 1);
    const ExactPolynomial z = ExactPolynomial::letter(0, 0);
    const ExactPolynomial p = x - x * z;
    const ExactPolynomial sq = p * p;

    ExactPolynomial expect = ExactPolynomial::constant(ExactScalar(1));
    expect = expect - z;
    expect = expect - ExactPolynomial::term(Monomial::parse("A1 A0 A1"), ExactScalar(1));
    expect = expect + ExactPolynomial::term(Monomial::parse("A1 A0 A1 A0"), ExactScalar(1));
    CHECK((sq - expect).is_zero());
}

TEST_CASE("symbolic expansion agrees with matrix arithmetic") {
    // Realize A-party words as 2x2 products and compare against the symbolic
    // square on a dense matrix, entry by entry.
    const auto realize = [](const ExactPolynomial& poly) {
        Matrix2c acc = Matrix2c::Zero();
        for (const auto& [mono, coef] : poly.terms()) {
            Matrix2c word = Matrix2c::Identity();
            for (const auto& l : mono.letters())
                word = word * (l.meas == 0 ? pauli_z() : l.meas == 1 ? pauli_x() : obs_diag());
            acc += coef.to_double() * word;
        }
        return acc;
    };
    const ExactPolynomial x = ExactPolynomial::letter(0, 1);
    const ExactPolynomial z = ExactPolynomial::letter(0, 0);
    const ExactPolynomial p = x - x * z;
    const Matrix2c direct = realize(p) * realize(p);
    CHECK((realize(p * p) - direct).norm() < 1e-12);

    const ExactPolynomial d = ExactPolynomial::letter(0, 2);
    const ExactPolynomial q = d * z - z * d + x;
    CHECK((realize(q * q * q) - realize(q) * realize(q) * realize(q)).norm() < 1e-12);
}

TEST_CASE("zero coefficients are dropped") {
    RealPolynomial p = RealPolynomial::letter(0, 0);
    p = p - RealPolynomial::letter(0, 0);
    CHECK(p.is_zero());
    CHECK(p.size() == 0);

    RealPolynomial q = RealPolynomial::letter(1, 2).scaled(0.0);
    CHECK(q.is_zero());
}

TEST_CASE("adjoint distributes over terms and reverses words") {
    RealPolynomial p = RealPolynomial::term(Monomial::parse("A0 A1"), 2.0) +
                       RealPolynomial::term(Monomial::parse("B2"), -1.0);
    const RealPolynomial a = adjoint(p);
    CHECK(a.coefficient(Monomial::parse("A1 A0")) == 2.0);
    CHECK(a.coefficient(Monomial::parse("B2")) == -1.0);
    CHECK(a.coefficient(Monomial::parse("A0 A1")) == 0.0);
}

TEST_CASE("permutation action and group averaging") {
    const RealPolynomial p = RealPolynomial::letter(0, 0);
    const RealPolynomial avg = RealPolynomial::group_average(PermutationGroup::symmetric(3), p);
    CHECK(avg.size() == 3);
    CHECK(avg.coefficient(Monomial::single(0, 0)) == Catch::Approx(1.0 / 3.0));
    CHECK(avg.coefficient(Monomial::single(1, 0)) == Catch::Approx(1.0 / 3.0));
    CHECK(avg.coefficient(Monomial::single(2, 0)) == Catch::Approx(1.0 / 3.0));

    // Averaging an invariant polynomial leaves it untouched.
    const RealPolynomial again = RealPolynomial::group_average(PermutationGroup::symmetric(3), avg);
    REQUIRE(again.size() == avg.size());
    for (const auto& [mono, coef] : avg.terms())
        CHECK(again.coefficient(mono) == Catch::Approx(coef).margin(1e-15));
}

TEST_CASE("exact scalar polynomials convert to double polynomials") {
    const ExactPolynomial p = ExactPolynomial::term(Monomial::parse("A0"), ExactScalar::half());
    const RealPolynomial d = p.to_double();
    CHECK(d.coefficient(Monomial::parse("A0")) == 0.5);
}
