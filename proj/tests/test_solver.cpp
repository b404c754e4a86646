#include <catch2/catch_amalgamated.hpp>

#include "swapcert/sdp.hpp"
#include "swapcert/solver.hpp"

using namespace swapcert;

namespace {

SolveOptions tight() {
    SolveOptions o;
    o.tol_gap = 1e-11;
    o.tol_feas = 1e-11;
    return o;
}

} // namespace

TEST_CASE("min x over [x] >= 0 is 0") {
    AffineBlock blk("x", 1);
    blk.at(0, 0).add(0, 1.0);
    LinearExpr obj;
    obj.add(0, 1.0);
    const SdpProblem p = assemble({blk}, {}, obj, {}, {"x"});
    const SdpSolution s = solve(p, tight());
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(std::abs(s.primal_value) <= 1e-9);
    CHECK(std::abs(s.dual_value) <= 1e-9);
    const CertificateReport rep = verify_certificate(p, s);
    CHECK(rep.ok);
}

TEST_CASE("min x1 + x2 over [[x1, 1], [1, x2]] >= 0 is 2") {
    AffineBlock blk("arrow", 2);
    blk.at(0, 0).add(0, 1.0);
    blk.at(1, 1).add(1, 1.0);
    blk.at(0, 1).constant = 1.0;
    blk.at(1, 0).constant = 1.0;
    LinearExpr obj;
    obj.add(0, 1.0);
    obj.add(1, 1.0);
    const SdpProblem p = assemble({blk}, {}, obj, {}, {"x1", "x2"});
    const SdpSolution s = solve(p, tight());
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.primal_value == Catch::Approx(2.0).margin(1e-9));
    CHECK(s.dual_value == Catch::Approx(2.0).margin(1e-9));
    CHECK(s.dual_value <= s.primal_value + 1e-12); // weak duality
    CHECK(verify_certificate(p, s).ok);
}

TEST_CASE("equality pins the variable and yields its multiplier") {
    AffineBlock blk("x", 1);
    blk.at(0, 0).add(0, 1.0);
    LinearConstraint eq;
    eq.coefficients = {{0, 1.0}};
    eq.rhs = 3.0;
    eq.label = "pin";
    LinearExpr obj;
    obj.add(0, 1.0);
    const SdpProblem p = assemble({blk}, {eq}, obj, {}, {"x"});
    const SdpSolution s = solve(p, tight());
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.primal_value == Catch::Approx(3.0).margin(1e-9));
    CHECK(s.x(0) == Catch::Approx(3.0).margin(1e-9));
    // Stationarity 1 - Y - mu = 0 with complementary Y = 0.
    CHECK(s.eq_multipliers(0) == Catch::Approx(1.0).margin(1e-7));
    CHECK(verify_certificate(p, s).ok);
}

TEST_CASE("duplicate equality rows are dropped, conflicting ones refused") {
    AffineBlock blk("x", 1);
    blk.at(0, 0).add(0, 1.0);
    LinearConstraint eq;
    eq.coefficients = {{0, 1.0}};
    eq.rhs = 3.0;
    eq.label = "pin";
    LinearConstraint dup = eq;
    dup.rhs = 3.0 + 1e-12; // same row within tolerance: merged
    LinearExpr obj;
    obj.add(0, 1.0);
    const SdpProblem p = assemble({blk}, {eq, dup}, obj, {}, {"x"});
    CHECK(p.b.size() == 1);
    CHECK(p.eq_merged[0] == 2);

    LinearConstraint clash = eq;
    clash.rhs = 2.0;
    CHECK_THROWS_AS(assemble({blk}, {eq, clash}, obj, {}, {"x"}), std::invalid_argument);

    // A scaled copy is not textually identical: the solver's rank filter
    // must drop it instead.
    LinearConstraint scaled;
    scaled.coefficients = {{0, 2.0}};
    scaled.rhs = 6.0;
    scaled.label = "pin-scaled";
    const SdpProblem p2 = assemble({blk}, {eq, scaled}, obj, {}, {"x"});
    REQUIRE(p2.b.size() == 2);
    const SdpSolution s2 = solve(p2, tight());
    REQUIRE(s2.status == SolveStatus::optimal);
    CHECK(s2.primal_value == Catch::Approx(3.0).margin(1e-9));
}

TEST_CASE("PSD-infeasible equality is detected through the shift variable") {
    AffineBlock blk("x", 1);
    blk.at(0, 0).add(0, 1.0);
    LinearConstraint eq;
    eq.coefficients = {{0, 1.0}};
    eq.rhs = -2.0;
    eq.label = "pin";
    LinearExpr obj;
    obj.add(0, 1.0);
    const SdpProblem p = assemble({blk}, {eq}, obj, {}, {"x"});
    const SdpSolution s = solve(p);
    CHECK(s.status == SolveStatus::infeasible_detected);
    CHECK(s.shift > 1e-5);
}

TEST_CASE("maximization flips the internal objective") {
    AffineBlock blk("corr", 2);
    blk.at(0, 0).constant = 1.0;
    blk.at(1, 1).constant = 1.0;
    blk.at(0, 1).add(0, 1.0);
    blk.at(1, 0).add(0, 1.0);
    LinearExpr obj;
    obj.add(0, 1.0);
    const SdpProblem p = assemble({blk}, {}, obj, {}, {"x"}, /*maximize=*/true);
    const SdpSolution s = solve(p, tight());
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(-s.primal_value == Catch::Approx(1.0).margin(1e-9)); // max x = 1
    CHECK(verify_certificate(p, s).ok);
}

TEST_CASE("fixed variables fold into constants at assembly") {
    // Moment-style: fixed identity 1 on the diagonal, behavior value fixed.
    AffineBlock blk("gamma", 2);
    blk.at(0, 0).add(7, 1.0); // id 7 plays the fixed identity
    blk.at(1, 1).add(7, 1.0);
    blk.at(0, 1).add(3, 1.0);
    blk.at(1, 0).add(3, 1.0);
    LinearExpr obj;
    obj.add(3, 1.0);
    const std::map<int, double> fixed{{7, 1.0}};
    const SdpProblem p = assemble({blk}, {}, obj, fixed, {});
    CHECK(p.num_vars == 1);
    CHECK(p.blocks[0].F0(0, 0) == 1.0);
    const SdpSolution s = solve(p, tight());
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.primal_value == Catch::Approx(-1.0).margin(1e-9));
}

TEST_CASE("diagonal-only problems behave as linear programs") {
    // min 2a + 3b  s.t. a + b = 1, a >= 0, b >= 0  ->  2 at (1, 0).
    AffineBlock pa("a", 1), pb("b", 1);
    pa.at(0, 0).add(0, 1.0);
    pb.at(0, 0).add(1, 1.0);
    LinearConstraint sum;
    sum.coefficients = {{0, 1.0}, {1, 1.0}};
    sum.rhs = 1.0;
    sum.label = "mass";
    LinearExpr obj;
    obj.add(0, 2.0);
    obj.add(1, 3.0);
    const SdpProblem p = assemble({pa, pb}, {sum}, obj, {}, {"a", "b"});
    const SdpSolution s = solve(p, tight());
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.primal_value == Catch::Approx(2.0).margin(1e-8));
    CHECK(s.x(0) == Catch::Approx(1.0).margin(1e-7));
    CHECK(verify_certificate(p, s).ok);
}
