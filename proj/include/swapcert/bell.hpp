#pragma once

#include <stdexcept>
#include <vector>

#include "swapcert/polynomial.hpp"

namespace swapcert {

/// Coefficients of a correlator Bell expression built from single-party sums
/// S_i = sum_p <M_i^p> and two-party sums T_ij. The pair-term convention is
/// set by `symmetry`:
///  - permutation: T_ij sums every ordered pair of distinct parties for
///    i != j (6 terms on 3 parties) and every unordered pair for i == j
///    (3 terms); only the upper triangle of `pairs` is read.
///  - translation: T_ij = <M_i^A M_j^B> + <M_i^B M_j^C> + <M_i^C M_j^A>
///    (3 cyclic terms); the full `pairs` matrix is read and T_ij != T_ji
///    is meaningful.
struct BellCoefficients {
    enum class Symmetry { permutation, translation };

    int num_parties = 3;
    int num_meas = 2;
    Symmetry symmetry = Symmetry::translation;
    std::vector<double> singles;              // singles[i] weights S_i
    std::vector<std::vector<double>> pairs;   // pairs[i][j] weights T_ij

    /// The unique nontrivial translation-invariant three-party expression on
    /// one- and two-body correlators with two dichotomic measurements:
    ///   B = S0 + 3 S1 + T00 - 3 T11 - T01 - 2 T10.
    /// The sign convention is fixed by the requirements that the deterministic
    /// bound be 9 and the quantum maximum (about 10.017, at shared ZX-plane
    /// angles near (-1.1946, 0.0957)) exceed it from above.
    static BellCoefficients three_party_chain() {
        BellCoefficients c;
        c.num_parties = 3;
        c.num_meas = 2;
        c.symmetry = Symmetry::translation;
        c.singles = {1.0, 3.0};
        c.pairs = {{1.0, -1.0}, {-2.0, -3.0}};
        return c;
    }

    bool is_zero() const {
        for (double s : singles)
            if (s != 0.0) return false;
        for (const auto& row : pairs)
            for (double v : row)
                if (v != 0.0) return false;
        return true;
    }
};

/// Expands the Bell expression into a polynomial over measurement words.
inline RealPolynomial bell_polynomial(const BellCoefficients& c) {
    if (static_cast<int>(c.singles.size()) != c.num_meas ||
        static_cast<int>(c.pairs.size()) != c.num_meas)
        throw std::invalid_argument("bell_polynomial: coefficient shape mismatch");
    RealPolynomial p;
    for (int i = 0; i < c.num_meas; ++i)
        if (c.singles[i] != 0.0)
            for (int party = 0; party < c.num_parties; ++party)
                p.add_term(Monomial::single(party, i), c.singles[i]);

    if (c.symmetry == BellCoefficients::Symmetry::translation) {
        for (int i = 0; i < c.num_meas; ++i)
            for (int j = 0; j < c.num_meas; ++j) {
                double w = c.pairs[i][j];
                if (w == 0.0) continue;
                for (int party = 0; party < c.num_parties; ++party) {
                    int q = (party + 1) % c.num_parties;
                    p.add_term(multiply(Monomial::single(party, i), Monomial::single(q, j)), w);
                }
            }
    } else {
        for (int i = 0; i < c.num_meas; ++i)
            for (int j = i; j < c.num_meas; ++j) {
                double w = c.pairs[i][j];
                if (w == 0.0) continue;
                for (int m = 0; m < c.num_parties; ++m)
                    for (int n = 0; n < c.num_parties; ++n) {
                        if (m == n) continue;
                        if (i == j && m > n) continue;
                        p.add_term(multiply(Monomial::single(m, i), Monomial::single(n, j)), w);
                    }
            }
    }
    return p;
}

/// Exact maximum of the expression over local deterministic strategies: each
/// party assigns +-1 to each measurement independently. Products of +-1 keep
/// integer-valued coefficients exact in double arithmetic.
inline double bell_local_bound(const BellCoefficients& c) {
    const RealPolynomial poly = bell_polynomial(c);
    const int strategies_per_party = 1 << c.num_meas;
    std::vector<int> strat(c.num_parties, 0);
    double best = 0.0;
    bool first = true;
    while (true) {
        double value = 0.0;
        for (const auto& [mono, coef] : poly.terms()) {
            double prod = 1.0;
            for (const Letter& l : mono.letters())
                prod *= ((strat[l.party] >> l.meas) & 1) ? -1.0 : 1.0;
            value += coef * prod;
        }
        if (first || value > best) best = value;
        first = false;
        int p = 0;
        while (p < c.num_parties && ++strat[p] == strategies_per_party) strat[p++] = 0;
        if (p == c.num_parties) break;
    }
    return best;
}

} // namespace swapcert
