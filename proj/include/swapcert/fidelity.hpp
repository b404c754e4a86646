#pragma once

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "swapcert/moment.hpp"
#include "swapcert/polynomial.hpp"
#include "swapcert/qubit.hpp"

namespace swapcert {

/// Kraus operators of the single-party extraction circuit (ancilla |0>,
/// then H, controlled-Z, H, controlled-X on the ancilla):
///   K_0 = (1 + z) / 2,  K_1 = x (1 - z) / 2,
/// where z and x are the party's operators filling the two circuit slots.
inline ExactPolynomial swap_kraus(const ExactPolynomial& z, const ExactPolynomial& x, int bit) {
    const ExactPolynomial one = ExactPolynomial::constant(ExactScalar(1));
    if (bit == 0) return (one + z) * ExactPolynomial::constant(ExactScalar::half());
    return x * (one - z) * ExactPolynomial::constant(ExactScalar::half());
}

/// Transfer polynomial T(a, b) = adjoint(K_b) K_a: the operator whose
/// expectation is the (|a><b|) matrix element of the extracted state.
inline ExactPolynomial swap_transfer(const ExactPolynomial& z, const ExactPolynomial& x,
                                     int ket_bit, int bra_bit) {
    return adjoint(swap_kraus(z, x, bra_bit)) * swap_kraus(z, x, ket_bit);
}

/// Fidelity of the extracted state with `target` as an operator polynomial:
///   f = sum_{i,j} a_i a_j < prod_p T_p(i_p, j_p) >
/// over bitstrings i, j in the target's support (amplitudes must be real).
/// z_slots[p] / x_slots[p] fill the two circuit slots of party p.
inline RealPolynomial swap_fidelity_polynomial(const PureState& target,
                                               const std::vector<ExactPolynomial>& z_slots,
                                               const std::vector<ExactPolynomial>& x_slots) {
    const int n = target.parties;
    if (static_cast<int>(z_slots.size()) != n || static_cast<int>(x_slots.size()) != n)
        throw std::invalid_argument("swap_fidelity_polynomial: slot count mismatch");

    std::vector<int> support;
    std::vector<double> amp;
    for (int s = 0; s < (1 << n); ++s) {
        const std::complex<double> a = target.amp(s);
        if (std::abs(a) < 1e-15) continue;
        if (std::abs(a.imag()) > 1e-12)
            throw std::invalid_argument("swap_fidelity_polynomial: complex amplitude");
        support.push_back(s);
        amp.push_back(a.real());
    }

    // Per-party transfer table, 4 entries (ket, bra).
    std::vector<std::vector<ExactPolynomial>> table(n);
    for (int p = 0; p < n; ++p)
        for (int kb = 0; kb < 4; ++kb)
            table[p].push_back(swap_transfer(z_slots[p], x_slots[p], kb & 1, kb >> 1));

    RealPolynomial f;
    for (size_t ii = 0; ii < support.size(); ++ii)
        for (size_t jj = 0; jj < support.size(); ++jj) {
            ExactPolynomial prod = ExactPolynomial::constant(ExactScalar(1));
            for (int p = 0; p < n; ++p) {
                const int ket = (support[ii] >> (n - 1 - p)) & 1;
                const int bra = (support[jj] >> (n - 1 - p)) & 1;
                prod = prod * table[p][(bra << 1) | ket];
            }
            f = f + prod.to_double().scaled(amp[ii] * amp[jj]);
        }
    return f;
}

inline std::set<Monomial> polynomial_monomials(const RealPolynomial& p) {
    std::set<Monomial> out;
    for (const auto& [m, c] : p.terms())
        if (c != 0.0) out.insert(m);
    return out;
}

/// Fidelity as an affine function of moment variables.
struct FidelityFunctional {
    double constant = 0.0;
    std::map<int, double> coefficients;
    std::string target_desc;

    double evaluate(const std::vector<double>& var_values) const {
        double v = constant;
        for (const auto& [id, c] : coefficients) v += c * var_values.at(id);
        return v;
    }
};

/// Maps a fidelity polynomial onto the moment variables of `ms`. Hermitian
/// conjugate monomial pairs share a variable; their (equal, real)
/// coefficients accumulate. Throws if a monomial has no moment variable.
inline FidelityFunctional map_to_variables(const RealPolynomial& poly, const MomentStructure& ms,
                                           std::string target_desc) {
    FidelityFunctional f;
    f.target_desc = std::move(target_desc);
    for (const auto& [m, c] : poly.terms()) {
        if (c == 0.0) continue;
        if (m.is_identity()) {
            f.constant += c;
            continue;
        }
        int id = 0;
        try {
            id = ms.var_for(m);
        } catch (const std::out_of_range&) {
            throw std::out_of_range("fidelity monomial " + m.to_string() +
                                    " absent from the moment structure (basis too small)");
        }
        f.coefficients[id] += c;
        if (f.coefficients[id] == 0.0) f.coefficients.erase(id);
    }
    return f;
}

inline FidelityFunctional swap_fidelity(const PureState& target, const MomentStructure& ms,
                                        const std::vector<ExactPolynomial>& z_slots,
                                        const std::vector<ExactPolynomial>& x_slots,
                                        std::string target_desc) {
    return map_to_variables(swap_fidelity_polynomial(target, z_slots, x_slots), ms,
                            std::move(target_desc));
}

} // namespace swapcert
