#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "swapcert/monomial.hpp"

using namespace swapcert;

namespace {
Letter L(int p, int m) {
    return Letter{static_cast<std::int8_t>(p), static_cast<std::int8_t>(m)};
}
} // namespace

TEST_CASE("canonical form sorts parties and cancels involutions") {
    // Letters of distinct parties commute; within a party order is kept.
    const Monomial w = Monomial::from_letters({L(1, 0), L(0, 1), L(1, 2)});
    CHECK(w.to_string() == "A1 B0 B2");

    CHECK(Monomial::from_letters({L(0, 0), L(0, 0)}).is_identity());
    CHECK(Monomial::from_letters({L(0, 1), L(0, 0), L(0, 0), L(0, 1)}).is_identity());
    // Cancellation cascades only through adjacency after sorting.
    const Monomial v = Monomial::from_letters({L(0, 1), L(1, 0), L(0, 1)});
    CHECK(v.to_string() == "B0");
    const Monomial u = Monomial::from_letters({L(0, 1), L(0, 0), L(0, 1)});
    CHECK(u.degree() == 3);
}

TEST_CASE("string round trip") {
    CHECK(Monomial::identity().to_string() == "1");
    CHECK(Monomial::parse("1").is_identity());
    const Monomial w = Monomial::parse("A0 A1 B2 C0");
    CHECK(w.to_string() == "A0 A1 B2 C0");
    CHECK(Monomial::parse(w.to_string()) == w);
    CHECK_THROWS_AS(Monomial::parse("A9x"), std::invalid_argument);
}

TEST_CASE("randomized confluence of the rewriting system") {
    std::mt19937 rng(20260816);
    std::uniform_int_distribution<int> party(0, 3), meas(0, 2), len(0, 10);
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<Letter> raw(len(rng));
        for (auto& l : raw) l = L(party(rng), meas(rng));
        const Monomial base = Monomial::from_letters(raw);

        // Random valid rewrites must not change the canonical form:
        // commute adjacent letters of different parties, or insert l*l.
        std::vector<Letter> mutated = raw;
        for (int k = 0; k < 8; ++k) {
            if (!mutated.empty() && rng() % 2 == 0) {
                std::uniform_int_distribution<size_t> pos(0, mutated.size() - 1);
                size_t i = pos(rng);
                if (i + 1 < mutated.size() && mutated[i].party != mutated[i + 1].party)
                    std::swap(mutated[i], mutated[i + 1]);
            } else {
                std::uniform_int_distribution<size_t> pos(0, mutated.size());
                size_t i = pos(rng);
                const Letter l = L(party(rng), meas(rng));
                mutated.insert(mutated.begin() + i, {l, l});
            }
        }
        REQUIRE(Monomial::from_letters(mutated) == base);

        // Idempotence: canonical input is a fixed point.
        REQUIRE(Monomial::from_letters(base.letters()) == base);
    }
}

TEST_CASE("adjoint is an involutive anti-homomorphism") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> party(0, 2), meas(0, 2), len(0, 6);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<Letter> a(len(rng)), b(len(rng));
        for (auto& l : a) l = L(party(rng), meas(rng));
        for (auto& l : b) l = L(party(rng), meas(rng));
        const Monomial u = Monomial::from_letters(a), v = Monomial::from_letters(b);
        REQUIRE(adjoint(adjoint(u)) == u);
        REQUIRE(adjoint(multiply(u, v)) == multiply(adjoint(v), adjoint(u)));
    }
    // Marginal words are self-adjoint, words with repeated-party letters not.
    CHECK(adjoint(Monomial::parse("A0 B1 C2")) == Monomial::parse("A0 B1 C2"));
    CHECK(adjoint(Monomial::parse("A0 A1")) == Monomial::parse("A1 A0"));
}

TEST_CASE("ordering is by degree then lexicographic") {
    CHECK(Monomial::identity() < Monomial::single(0, 0));
    CHECK(Monomial::single(0, 0) < Monomial::single(0, 1));
    CHECK(Monomial::single(2, 2) < Monomial::parse("A0 A1"));
    CHECK(Monomial::parse("C2") < Monomial::parse("A0 B0"));
}

TEST_CASE("monomial measures") {
    const Monomial w = Monomial::parse("A0 A1 A0 B2");
    CHECK(w.degree() == 4);
    CHECK(w.body_count() == 2);
    CHECK(w.max_party_degree() == 3);
    CHECK(w.party_block(0).size() == 3);
    CHECK(w.party_block(2).empty());
    CHECK(w.max_party() == 1);
}

TEST_CASE("permutations act on the party label from the left") {
    // sigma maps party q to sigma[q]; measurement labels ride along.
    const PartyPermutation swap01{1, 0, 2};
    CHECK(apply_permutation(swap01, Monomial::parse("A0 B1 C2")).to_string() == "A1 B0 C2");

    // Composition: apply(g o h, w) = apply(g, apply(h, w)).
    std::mt19937 rng(99);
    const std::vector<PartyPermutation> perms = PermutationGroup::symmetric(3).elements();
    std::uniform_int_distribution<int> pick(0, static_cast<int>(perms.size()) - 1);
    std::uniform_int_distribution<int> party(0, 2), meas(0, 2), len(0, 5);
    for (int trial = 0; trial < 2000; ++trial) {
        const PartyPermutation g = perms[pick(rng)], h = perms[pick(rng)];
        std::vector<Letter> a(len(rng));
        for (auto& l : a) l = L(party(rng), meas(rng));
        const Monomial w = Monomial::from_letters(a);
        REQUIRE(apply_permutation(perm_compose(g, h), w) ==
                apply_permutation(g, apply_permutation(h, w)));
    }
}

TEST_CASE("cyclic generator realizes the B-to-A relabeling convention") {
    // The cycle sends each party's letters one slot up: B's letters become
    // A's, C's become B's, A's become C's. On [Z_A X_B D_C] this produces
    // [X_A D_B Z_C].
    const auto cyc = PermutationGroup::cyclic(3);
    CHECK(cyc.size() == 3);
    PartyPermutation gen{2, 0, 1}; // party q relabels to q+2 mod 3
    bool found = false;
    for (const auto& e : cyc.elements()) found = found || e == gen;
    CHECK(found);
    CHECK(apply_permutation(gen, Monomial::parse("A0 B1 C2")).to_string() == "A1 B2 C0");
    CHECK(apply_permutation(gen, Monomial::parse("A0")).to_string() == "C0");
}

TEST_CASE("permutation groups verify closure") {
    CHECK(PermutationGroup::symmetric(3).size() == 6);
    CHECK(PermutationGroup::symmetric(4, 2).size() == 2);
    CHECK(PermutationGroup::pair_swap(4, 1, 3).size() == 2);
    CHECK(PermutationGroup::trivial(5).is_trivial());
    // {identity, one 3-cycle} is not closed.
    CHECK_THROWS_AS(PermutationGroup({PartyPermutation{0, 1, 2}, PartyPermutation{2, 0, 1}}),
                    std::invalid_argument);
}
