#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "swapcert/monomial.hpp"

namespace swapcert {

struct Scenario {
    int parties = 0;
    int num_meas = 0;
};

/// Ordered monomial basis for a moment matrix: identity first, canonical
/// order, no duplicates. `augmented` lists the words beyond local level one.
struct MonomialBasis {
    Scenario scenario;
    std::vector<Monomial> monomials;
    std::vector<Monomial> augmented;
    std::string provenance;

    int size() const { return static_cast<int>(monomials.size()); }

    std::set<Monomial> as_set() const {
        return std::set<Monomial>(monomials.begin(), monomials.end());
    }
};

namespace detail {

/// All products with at most one letter per party, bodies <= max_bodies.
inline std::set<Monomial> level_one_words(const Scenario& sc, int max_bodies) {
    std::set<Monomial> out;
    std::vector<int> assign(sc.parties, -1);
    long total = 1;
    for (int p = 0; p < sc.parties; ++p) total *= (sc.num_meas + 1);
    for (long code = 0; code < total; ++code) {
        long c = code;
        int bodies = 0;
        std::vector<Letter> ls;
        for (int p = 0; p < sc.parties; ++p) {
            const int m = static_cast<int>(c % (sc.num_meas + 1)) - 1;
            c /= (sc.num_meas + 1);
            if (m >= 0) {
                ++bodies;
                ls.push_back(Letter{static_cast<std::int8_t>(p), static_cast<std::int8_t>(m)});
            }
        }
        if (bodies <= max_bodies) out.insert(Monomial::from_letters(std::move(ls)));
    }
    return out;
}

/// Words form a group (letters are involutions), so w = adjoint(u) v with
/// u, v in S iff some u in S has u*w in S.
inline bool expressible(const std::set<Monomial>& s, const Monomial& w) {
    for (const Monomial& u : s)
        if (s.count(multiply(u, w))) return true;
    return false;
}

/// Halving split of a word along party blocks: u collects the reversed first
/// half of every block, v the rest, so that adjoint(u) v = w.
inline std::pair<Monomial, Monomial> halving_split(const Monomial& w, int parties) {
    std::vector<Letter> ul, vl;
    for (int p = 0; p < parties; ++p) {
        const std::vector<Letter> block = w.party_block(p);
        const size_t h = block.size() / 2;
        for (size_t k = h; k-- > 0;) ul.push_back(block[k]);
        for (size_t k = h; k < block.size(); ++k) vl.push_back(block[k]);
    }
    return {Monomial::from_letters(std::move(ul)), Monomial::from_letters(std::move(vl))};
}

inline void insert_orbit(std::set<Monomial>& s, const Monomial& w, const PermutationGroup& g) {
    for (const auto& e : g.elements()) s.insert(apply_permutation(e, w));
}

} // namespace detail

/// Builds the moment-matrix basis for a scenario: local level one augmented
/// until every fidelity monomial w factors as adjoint(u) v with u, v in the
/// basis. Two deterministic shapes:
///  - unconstrained (or fitting under `cap`): the cross product of per-party
///    alphabets {identity, letters, per-party augmentation blocks}, where the
///    augmentation blocks are the degree >= 2 halves of the fidelity
///    monomials' halving splits;
///  - otherwise: level-one words with at most two bodies plus the specific
///    split halves of each inexpressible fidelity monomial, in canonical
///    order.
/// The result is closed under `group` and capped at `cap` words (0 = no cap).
inline MonomialBasis default_basis(const Scenario& sc,
                                   const std::set<Monomial>& fidelity_monomials,
                                   const PermutationGroup& group, int cap = 0) {
    if (group.num_parties() != sc.parties)
        throw std::invalid_argument("default_basis: group party count mismatch");
    for (const Monomial& w : fidelity_monomials)
        if (w.max_party() >= sc.parties)
            throw std::invalid_argument("default_basis: fidelity monomial outside scenario");

    // Per-party augmentation alphabet from the halving splits.
    std::vector<std::set<Monomial>> aug(sc.parties);
    for (const Monomial& w : fidelity_monomials) {
        const auto [u, v] = detail::halving_split(w, sc.parties);
        for (const Monomial& part : {u, v})
            for (int p = 0; p < sc.parties; ++p) {
                const std::vector<Letter> block = part.party_block(p);
                if (block.size() >= 2) {
                    Monomial pw = Monomial::from_letters(block);
                    // Close the alphabets under the group so the cross
                    // product is group-closed.
                    for (const auto& e : group.elements()) {
                        const Monomial img = apply_permutation(e, pw);
                        aug[img.letters().front().party].insert(img);
                    }
                }
            }
    }

    long cross_size = 1;
    for (int p = 0; p < sc.parties; ++p) {
        cross_size *= static_cast<long>(1 + sc.num_meas + aug[p].size());
        if (cross_size > 100000) break;
    }

    std::set<Monomial> words;
    std::string provenance;
    if (cap == 0 || cross_size <= cap) {
        provenance = "cross-product";
        // Cross product of per-party alphabets.
        std::vector<std::vector<Monomial>> alphabet(sc.parties);
        for (int p = 0; p < sc.parties; ++p) {
            alphabet[p].push_back(Monomial::identity());
            for (int m = 0; m < sc.num_meas; ++m) alphabet[p].push_back(Monomial::single(p, m));
            for (const Monomial& a : aug[p]) alphabet[p].push_back(a);
        }
        std::vector<Monomial> acc{Monomial::identity()};
        for (int p = 0; p < sc.parties; ++p) {
            std::vector<Monomial> next;
            for (const Monomial& base : acc)
                for (const Monomial& a : alphabet[p]) next.push_back(multiply(base, a));
            acc.swap(next);
        }
        words.insert(acc.begin(), acc.end());
    } else {
        provenance = "two-body-core+splits";
        words = detail::level_one_words(sc, 2);
        std::vector<Monomial> targets(fidelity_monomials.begin(), fidelity_monomials.end());
        std::sort(targets.begin(), targets.end());
        for (const Monomial& w : targets) {
            if (detail::expressible(words, w)) continue;
            const auto [u, v] = detail::halving_split(w, sc.parties);
            detail::insert_orbit(words, u, group);
            detail::insert_orbit(words, v, group);
        }
    }

    // Group closure (cheap no-op when already closed).
    {
        std::set<Monomial> closed;
        for (const Monomial& w : words) detail::insert_orbit(closed, w, group);
        words.swap(closed);
    }

    for (const Monomial& w : fidelity_monomials)
        if (!detail::expressible(words, w))
            throw std::logic_error("default_basis: monomial not expressible: " + w.to_string());
    if (cap > 0 && static_cast<int>(words.size()) > cap)
        throw std::runtime_error("default_basis: basis size " + std::to_string(words.size()) +
                                 " exceeds cap " + std::to_string(cap));

    MonomialBasis basis;
    basis.scenario = sc;
    basis.provenance = provenance;
    basis.monomials.assign(words.begin(), words.end());
    std::sort(basis.monomials.begin(), basis.monomials.end());
    const std::set<Monomial> level_one = detail::level_one_words(sc, sc.parties);
    for (const Monomial& w : basis.monomials)
        if (!level_one.count(w)) basis.augmented.push_back(w);
    return basis;
}

inline MonomialBasis default_basis(const Scenario& sc,
                                   const std::set<Monomial>& fidelity_monomials,
                                   int cap = 0) {
    return default_basis(sc, fidelity_monomials, PermutationGroup::trivial(sc.parties), cap);
}

} // namespace swapcert
