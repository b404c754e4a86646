#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <random>

#include "swapcert/basis.hpp"
#include "swapcert/constraints.hpp"
#include "swapcert/fidelity.hpp"
#include "swapcert/moment.hpp"
#include "swapcert/qubit.hpp"

using namespace swapcert;

namespace {

std::vector<ExactPolynomial> letter_slots(int parties, int meas) {
    std::vector<ExactPolynomial> out;
    for (int p = 0; p < parties; ++p) out.push_back(ExactPolynomial::letter(p, meas));
    return out;
}

// Moment values of the ideal realization: var id -> Re<w>.
std::vector<double> ideal_moments(const MomentStructure& ms, const PureState& state,
                                  const QubitRealization& r) {
    std::vector<double> vals(ms.num_vars());
    for (int k = 0; k < ms.num_vars(); ++k)
        vals[k] = correlator_complex(state, ms.var_words[k], r).real();
    return vals;
}

std::pair<std::vector<Matrix2c>, std::vector<Matrix2c>> zx_ops(const QubitRealization& r) {
    std::vector<Matrix2c> z, x;
    for (const auto& party : r.ops) {
        z.push_back(party[0]);
        x.push_back(party[1]);
    }
    return {z, x};
}

} // namespace

TEST_CASE("default_basis: one party, one measurement gives {1, Z}") {
    const Scenario sc{1, 1};
    const MonomialBasis b = default_basis(sc, {});
    REQUIRE(b.size() == 2);
    CHECK(b.monomials[0] == Monomial::identity());
    CHECK(b.monomials[1] == Monomial::single(0, 0));
    CHECK(b.augmented.empty());
}

TEST_CASE("default_basis: W3 fidelity augmentation lands on 125 words") {
    const Scenario sc{3, 3};
    const PureState w3 = make_w_state(3);
    const RealPolynomial f =
        swap_fidelity_polynomial(w3, letter_slots(3, 0), letter_slots(3, 1));
    const std::set<Monomial> mono = polynomial_monomials(f);
    const PermutationGroup s3 = PermutationGroup::symmetric(3);
    const MonomialBasis b = default_basis(sc, mono, s3);
    CHECK(b.size() == 125);
    CHECK(b.monomials[0] == Monomial::identity());
    CHECK(b.provenance == "cross-product");

    // Every fidelity monomial is an entry adjoint(u) v of the basis.
    const std::set<Monomial> s = b.as_set();
    for (const Monomial& w : mono) {
        bool found = false;
        for (const Monomial& u : s)
            if (s.count(multiply(u, w))) {
                found = true;
                break;
            }
        CHECK(found);
    }

    // Deterministic.
    const MonomialBasis again = default_basis(sc, mono, s3);
    CHECK(again.monomials == b.monomials);

    // Closed under the symmetry group.
    for (const Monomial& w : b.monomials)
        for (const auto& g : s3.elements()) CHECK(s.count(apply_permutation(g, w)) == 1);
}

TEST_CASE("default_basis: cap forces the pruned two-body core shape") {
    const Scenario sc{4, 3};
    const PureState w4 = make_w_state(4);
    const RealPolynomial f =
        swap_fidelity_polynomial(w4, letter_slots(4, 0), letter_slots(4, 1));
    const std::set<Monomial> mono = polynomial_monomials(f);
    const PermutationGroup s4 = PermutationGroup::symmetric(4);
    const MonomialBasis b = default_basis(sc, mono, s4, 200);
    CHECK(b.provenance == "two-body-core+splits");
    CHECK(b.size() <= 200);
    CHECK(b.size() > 67); // strictly more than the two-body core

    const std::set<Monomial> s = b.as_set();
    for (const Monomial& w : mono) {
        bool found = false;
        for (const Monomial& u : s)
            if (s.count(multiply(u, w))) {
                found = true;
                break;
            }
        REQUIRE(found);
    }
    // All behavior words up to 3 bodies are moment-matrix entries.
    const MomentStructure ms = build_moment_structure(b, s4);
    const Behavior beh = w4_behavior(3);
    for (const auto& [w, v] : beh.values) CHECK(ms.has_var(w));
}

TEST_CASE("moment structure on tiny bases matches the worked examples") {
    const Scenario sc{1, 2};
    MonomialBasis b;
    b.scenario = sc;
    b.monomials = {Monomial::identity(), Monomial::single(0, 0)};
    const MomentStructure ms = build_moment_structure(b);
    REQUIRE(ms.num_vars() == 2);
    CHECK(ms.entry(0, 0) == 0);
    CHECK(ms.entry(1, 1) == 0);
    CHECK(ms.entry(0, 1) == ms.entry(1, 0));
    CHECK(ms.fixed.at(0) == 1.0);
    CHECK(ms.var_words[ms.entry(0, 1)] == Monomial::single(0, 0));

    // {1, Z, X}: entry (Z, X) and (X, Z) share one variable after the
    // adjoint merge.
    MonomialBasis b2;
    b2.scenario = sc;
    b2.monomials = {Monomial::identity(), Monomial::single(0, 0), Monomial::single(0, 1)};
    const MomentStructure ms2 = build_moment_structure(b2);
    CHECK(ms2.entry(1, 2) == ms2.entry(2, 1));
    const Monomial zx = multiply(Monomial::single(0, 0), Monomial::single(0, 1));
    CHECK(ms2.var_for(zx) == ms2.entry(1, 2));
    CHECK(ms2.var_for(adjoint(zx)) == ms2.entry(1, 2));
}

TEST_CASE("W3 moment matrix is PSD at the ideal realization") {
    const Scenario sc{3, 3};
    const PureState w3 = make_w_state(3);
    const QubitRealization r = ideal_zxd_realization(3);
    const RealPolynomial f =
        swap_fidelity_polynomial(w3, letter_slots(3, 0), letter_slots(3, 1));
    const MonomialBasis b = default_basis(sc, polynomial_monomials(f));
    const MomentStructure ms = build_moment_structure(b);

    // Variable count equals an independent enumeration of reduced words.
    std::set<Monomial> reps;
    for (int i = 0; i < b.size(); ++i)
        for (int j = i; j < b.size(); ++j)
            reps.insert(ms.representative(multiply(adjoint(b.monomials[i]), b.monomials[j])));
    CHECK(static_cast<int>(reps.size()) == ms.num_vars());
    CHECK(ms.num_vars() < b.size() * (b.size() + 1) / 2);

    const std::vector<double> vals = ideal_moments(ms, w3, r);
    Eigen::MatrixXd gamma(b.size(), b.size());
    for (int i = 0; i < b.size(); ++i)
        for (int j = 0; j < b.size(); ++j) gamma(i, j) = vals[ms.entry(i, j)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()(0) >= -1e-8);
}

TEST_CASE("symmetrize merges orbit variables and guards fixed values") {
    const Scenario sc{3, 3};
    const PureState w3 = make_w_state(3);
    const RealPolynomial f =
        swap_fidelity_polynomial(w3, letter_slots(3, 0), letter_slots(3, 1));
    const PermutationGroup s3 = PermutationGroup::symmetric(3);
    const MonomialBasis b = default_basis(sc, polynomial_monomials(f), s3);
    const MomentStructure ms = build_moment_structure(b);

    const MomentStructure sym = symmetrize(ms, s3);
    CHECK(sym.num_vars() < ms.num_vars());
    const int za = sym.var_for(Monomial::single(0, 0));
    CHECK(sym.var_for(Monomial::single(1, 0)) == za);
    CHECK(sym.var_for(Monomial::single(2, 0)) == za);
    CHECK(ms.var_for(Monomial::single(1, 0)) != ms.var_for(Monomial::single(0, 0)));

    // Same word set, so the trivial symmetrization changes nothing.
    const MomentStructure same = symmetrize(ms, PermutationGroup::trivial(3));
    CHECK(same.num_vars() == ms.num_vars());

    MomentStructure tainted = ms;
    tainted.set_fixed(Monomial::single(0, 0), 0.25);
    tainted.set_fixed(Monomial::single(1, 0), -0.5);
    CHECK_THROWS_AS(symmetrize(tainted, s3), std::runtime_error);

    MomentStructure consistent = ms;
    consistent.set_fixed(Monomial::single(0, 0), 0.25);
    consistent.set_fixed(Monomial::single(1, 0), 0.25);
    const MomentStructure merged = symmetrize(consistent, s3);
    CHECK(merged.fixed.at(za) == 0.25);
}

TEST_CASE("fidelity functional: ideal evaluation is 1, constant term is the mixed-state overlap") {
    const Scenario sc{3, 3};
    const PureState w3 = make_w_state(3);
    const QubitRealization r = ideal_zxd_realization(3);
    const RealPolynomial f =
        swap_fidelity_polynomial(w3, letter_slots(3, 0), letter_slots(3, 1));
    const MonomialBasis b = default_basis(sc, polynomial_monomials(f));
    const MomentStructure ms = build_moment_structure(b);
    const FidelityFunctional func = map_to_variables(f, ms, "w3");

    std::vector<double> vals = ideal_moments(ms, w3, r);
    CHECK(func.evaluate(vals) == Catch::Approx(1.0).margin(1e-9));

    // Constant term = overlap of the extracted state with the target when
    // the input is maximally mixed = average circuit fidelity over the
    // computational basis states.
    double mixed = 0.0;
    const auto [zops, xops] = zx_ops(r);
    for (int s = 0; s < 8; ++s) {
        Eigen::VectorXcd a = Eigen::VectorXcd::Zero(8);
        a(s) = 1.0;
        mixed += swap_circuit_reference(PureState(3, a), zops, xops, w3) / 8.0;
    }
    CHECK(func.constant == Catch::Approx(mixed).margin(1e-12));

    // A word outside the structure is reported as such.
    RealPolynomial big;
    Monomial w = Monomial::parse("A0 A1 A0 A1 A0 A1");
    big.add_term(w, 1.0);
    CHECK_THROWS_AS(map_to_variables(big, ms, "too-big"), std::out_of_range);
}

TEST_CASE("fidelity functional matches the circuit oracle on random involutions") {
    std::mt19937 rng(941);
    std::uniform_real_distribution<double> angle(-3.1, 3.1);
    const Scenario sc{3, 3};
    const PureState w3 = make_w_state(3);
    const RealPolynomial f =
        swap_fidelity_polynomial(w3, letter_slots(3, 0), letter_slots(3, 1));
    const MonomialBasis b = default_basis(sc, polynomial_monomials(f));
    const MomentStructure ms = build_moment_structure(b);
    const FidelityFunctional func = map_to_variables(f, ms, "w3");

    for (int trial = 0; trial < 25; ++trial) {
        QubitRealization r;
        r.ops.resize(3);
        for (int p = 0; p < 3; ++p)
            for (int m = 0; m < 3; ++m) r.ops[p].push_back(obs_angle(angle(rng)));
        // Random real 3-qubit state.
        Eigen::VectorXcd amp(8);
        for (int s = 0; s < 8; ++s) amp(s) = std::uniform_real_distribution<double>(-1, 1)(rng);
        amp.normalize();
        const PureState state(3, amp);

        const std::vector<double> vals = ideal_moments(ms, state, r);
        const double via_moments = func.evaluate(vals);
        const auto [zops, xops] = zx_ops(r);
        const double via_circuit = swap_circuit_reference(state, zops, xops, w3);
        CHECK(via_moments == Catch::Approx(via_circuit).margin(1e-9));
    }
}

TEST_CASE("localizing blocks: trivial shapes match the moment matrix") {
    const Scenario sc{1, 3};
    MonomialBasis b;
    b.scenario = sc;
    b.monomials = {Monomial::identity(), Monomial::single(0, 0), Monomial::single(0, 1),
                   Monomial::single(0, 2),
                   multiply(Monomial::single(0, 2), Monomial::single(0, 0)),
                   multiply(Monomial::single(0, 2), Monomial::single(0, 1))};
    std::sort(b.monomials.begin(), b.monomials.end());
    const MomentStructure ms = build_moment_structure(b);

    // P over loc basis {1} is the plain linear combination of its words.
    const double phi = 0.7;
    RealPolynomial p;
    p.add_term(multiply(Monomial::single(0, 2), Monomial::single(0, 0)), 1.0 / std::sin(phi));
    p.add_term(multiply(Monomial::single(0, 2), Monomial::single(0, 1)),
               -std::cos(phi) / std::sin(phi));
    const AffineBlock one = localizing_block(p, {Monomial::identity()}, ms, "loc");
    REQUIRE(one.size == 1);
    CHECK(one.at(0, 0).coef.size() == 2);
    CHECK(one.at(0, 0).coef.at(ms.var_for(multiply(Monomial::single(0, 2), Monomial::single(0, 0)))) ==
          Catch::Approx(1.0 / std::sin(phi)));

    // P = identity over {1, M1} reproduces the principal submatrix of the
    // moment matrix.
    RealPolynomial ident;
    ident.add_term(Monomial::identity(), 1.0);
    const AffineBlock sub =
        localizing_block(ident, {Monomial::identity(), Monomial::single(0, 1)}, ms, "loc");
    CHECK(sub.at(0, 0).constant == 1.0);
    CHECK(sub.at(1, 1).constant == 1.0);
    CHECK(sub.at(0, 1).coef.count(ms.var_for(Monomial::single(0, 1))) == 1);
}
