#pragma once

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "swapcert/monomial.hpp"
#include "swapcert/qubit.hpp"

namespace swapcert {

/// Marginal correlation table: one value per word with at most one letter per
/// party and at most `max_bodies` parties touched. These are the only
/// quantities the certification pipeline is allowed to consume about a state.
struct Behavior {
    int parties = 0;
    int num_meas = 0;
    int max_bodies = 0;
    std::map<Monomial, double> values;

    bool contains(const Monomial& m) const { return values.count(m) != 0; }

    double at(const Monomial& m) const {
        auto it = values.find(m);
        if (it == values.end())
            throw std::out_of_range("Behavior: no value recorded for " + m.to_string());
        return it->second;
    }
};

namespace detail {

/// Enumerates all marginal assignments: per party one of {identity, 0..m-1},
/// keeping 1..max_bodies parties non-identity.
template <typename Fn>
void for_each_marginal(int parties, int num_meas, int max_bodies, Fn&& fn) {
    std::vector<int> assign(parties, -1);
    const long combos = 1;
    long total = 1;
    for (int p = 0; p < parties; ++p) total *= (num_meas + 1);
    (void)combos;
    for (long code = 1; code < total; ++code) {
        long c = code;
        int bodies = 0;
        for (int p = 0; p < parties; ++p) {
            assign[p] = static_cast<int>(c % (num_meas + 1)) - 1;
            if (assign[p] >= 0) ++bodies;
            c /= (num_meas + 1);
        }
        if (bodies >= 1 && bodies <= max_bodies) fn(assign);
    }
}

inline Monomial assignment_word(const std::vector<int>& assign) {
    std::vector<Letter> ls;
    for (int p = 0; p < static_cast<int>(assign.size()); ++p)
        if (assign[p] >= 0)
            ls.push_back(Letter{static_cast<std::int8_t>(p),
                                static_cast<std::int8_t>(assign[p])});
    return Monomial::from_letters(std::move(ls));
}

} // namespace detail

/// Oracle-backed behavior: correlators of the given state and realization.
inline Behavior behavior_from_state(const PureState& state, const QubitRealization& realization,
                                    int num_meas, int max_bodies) {
    Behavior b;
    b.parties = state.parties;
    b.num_meas = num_meas;
    b.max_bodies = max_bodies;
    detail::for_each_marginal(state.parties, num_meas, max_bodies,
                              [&](const std::vector<int>& assign) {
                                  const Monomial w = detail::assignment_word(assign);
                                  b.values[w] = correlator(state, assign, realization);
                              });
    return b;
}

namespace closed_form {

// Hand-derived marginal values for the measurement set {Z, X, D} with
// D = (Z + X)/sqrt(2). The D entries are resolved by linearity, so only the
// Z/X base patterns are tabulated. Indices: meas 0 = Z, 1 = X, 2 = D.

/// W_3 base pattern value as a function of (#Z, #X); permutation symmetric.
inline double w3_base(int nz, int nx) {
    static const double t[4][4] = {
        // nx:     0       1       2       3
        {1.0, 0.0, 2.0 / 3.0, 0.0},          // nz = 0
        {1.0 / 3.0, 0.0, 2.0 / 3.0, 0.0},    // nz = 1
        {-1.0 / 3.0, 0.0, 0.0, 0.0},         // nz = 2
        {-1.0, 0.0, 0.0, 0.0},               // nz = 3
    };
    if (nz < 0 || nx < 0 || nz + nx > 3) throw std::invalid_argument("w3_base: bad pattern");
    return t[nz][nx];
}

/// W_4 base pattern value for up to three bodies; permutation symmetric.
inline double w4_base(int nz, int nx) {
    static const double t[4][4] = {
        {1.0, 0.0, 0.5, 0.0},   // nz = 0
        {0.5, 0.0, 0.5, 0.0},   // nz = 1
        {0.0, 0.0, 0.0, 0.0},   // nz = 2
        {-0.5, 0.0, 0.0, 0.0},  // nz = 3
    };
    if (nz < 0 || nx < 0 || nz + nx > 3) throw std::invalid_argument("w4_base: bad pattern");
    return t[nz][nx];
}

/// psi_lambda base pattern: parties A, B carry the unit amplitudes, C the
/// lambda amplitude; only symmetric under swapping A and B. zs/xs are the
/// party sets measured in Z and in X.
inline double psi_lambda_base(double lambda, const std::set<int>& zs, const std::set<int>& xs) {
    const double s = lambda * lambda + 2.0;
    const auto has = [](const std::set<int>& set, int p) { return set.count(p) != 0; };
    if (xs.empty()) {
        if (zs.empty()) return 1.0;
        if (zs.size() == 1) return has(zs, 2) ? (2.0 - lambda * lambda) / s
                                              : lambda * lambda / s;
        if (zs.size() == 2) return has(zs, 2) ? -lambda * lambda / s
                                              : (lambda * lambda - 2.0) / s;
        return -1.0; // <ZZZ> = -1 for every lambda
    }
    if (xs.size() == 2) {
        // Any leftover Z slot leaves the value unchanged: the paired flips
        // land back on the support, where that party's bit is 0.
        return has(xs, 2) ? 2.0 * lambda / s : 2.0 / s;
    }
    return 0.0; // an odd number of X flips leaves the support
}

/// Expands D slots by linearity and evaluates the base pattern.
template <typename BaseFn>
double expand_diag(const std::vector<int>& pattern, BaseFn&& base) {
    for (int p = 0; p < static_cast<int>(pattern.size()); ++p) {
        if (pattern[p] == 2) {
            std::vector<int> as_z = pattern, as_x = pattern;
            as_z[p] = 0;
            as_x[p] = 1;
            return (expand_diag(as_z, base) + expand_diag(as_x, base)) / std::sqrt(2.0);
        }
    }
    return base(pattern);
}

inline std::vector<int> word_pattern(const Monomial& word, int parties) {
    std::vector<int> pattern(parties, -1);
    for (const auto& l : word.letters()) {
        if (l.party >= parties)
            throw std::invalid_argument("word_pattern: party out of range");
        if (pattern[l.party] != -1)
            throw std::invalid_argument("word_pattern: not a marginal word: " + word.to_string());
        pattern[l.party] = l.meas;
    }
    return pattern;
}

inline double w3_marginal(const Monomial& word) {
    return expand_diag(word_pattern(word, 3), [](const std::vector<int>& pat) {
        int nz = 0, nx = 0;
        for (int v : pat) { nz += (v == 0); nx += (v == 1); }
        return w3_base(nz, nx);
    });
}

inline double w4_marginal(const Monomial& word) {
    return expand_diag(word_pattern(word, 4), [](const std::vector<int>& pat) {
        int nz = 0, nx = 0;
        for (int v : pat) { nz += (v == 0); nx += (v == 1); }
        return w4_base(nz, nx);
    });
}

inline double psi_lambda_marginal(double lambda, const Monomial& word) {
    return expand_diag(word_pattern(word, 3), [lambda](const std::vector<int>& pat) {
        std::set<int> zs, xs;
        for (int p = 0; p < 3; ++p) {
            if (pat[p] == 0) zs.insert(p);
            if (pat[p] == 1) xs.insert(p);
        }
        return psi_lambda_base(lambda, zs, xs);
    });
}

} // namespace closed_form

/// Closed-form W_3 behavior over {Z, X, D}.
inline Behavior w3_behavior(int max_bodies = 2) {
    Behavior b;
    b.parties = 3;
    b.num_meas = 3;
    b.max_bodies = max_bodies;
    detail::for_each_marginal(3, 3, max_bodies, [&](const std::vector<int>& assign) {
        const Monomial w = detail::assignment_word(assign);
        b.values[w] = closed_form::w3_marginal(w);
    });
    return b;
}

/// Closed-form psi_lambda behavior over {Z, X, D}.
inline Behavior psi_lambda_behavior(double lambda, int max_bodies = 2) {
    Behavior b;
    b.parties = 3;
    b.num_meas = 3;
    b.max_bodies = max_bodies;
    detail::for_each_marginal(3, 3, max_bodies, [&](const std::vector<int>& assign) {
        const Monomial w = detail::assignment_word(assign);
        b.values[w] = closed_form::psi_lambda_marginal(lambda, w);
    });
    return b;
}

/// Closed-form W_4 behavior over {Z, X, D}, up to three-body marginals.
inline Behavior w4_behavior(int max_bodies = 3) {
    if (max_bodies > 3)
        throw std::invalid_argument("w4_behavior: table covers at most three bodies");
    Behavior b;
    b.parties = 4;
    b.num_meas = 3;
    b.max_bodies = max_bodies;
    detail::for_each_marginal(4, 3, max_bodies, [&](const std::vector<int>& assign) {
        const Monomial w = detail::assignment_word(assign);
        b.values[w] = closed_form::w4_marginal(w);
    });
    return b;
}

} // namespace swapcert
