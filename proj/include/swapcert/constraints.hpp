#pragma once

#include <string>
#include <vector>

#include "swapcert/behavior.hpp"
#include "swapcert/bell.hpp"
#include "swapcert/sdp.hpp"

namespace swapcert {

/// Family label of a marginal word, used to aggregate dual multipliers:
/// one-body words by measurement index, two-body words by the unordered
/// measurement index pair, everything else by its canonical string.
inline std::string marginal_family(const Monomial& w) {
    if (w.body_count() == 1) return "single:" + std::to_string(w.letters()[0].meas);
    if (w.body_count() == 2 && w.letters().size() == 2) {
        int a = w.letters()[0].meas, b = w.letters()[1].meas;
        if (a > b) std::swap(a, b);
        return "pair:" + std::to_string(a) + ":" + std::to_string(b);
    }
    return "word:" + w.to_string();
}

/// One equality per behavior entry: <w> = (1 - eps) * observed value.
/// Orbit-equal rows collapse later in assemble, accumulating merged_count.
inline std::vector<LinearConstraint> behavior_constraints(const Behavior& behavior, double eps,
                                                          const MomentStructure& ms) {
    std::vector<LinearConstraint> out;
    for (const auto& [w, value] : behavior.values) {
        LinearConstraint c;
        c.coefficients = {{ms.var_for(w), 1.0}};
        c.rhs = (1.0 - eps) * value;
        c.label = marginal_family(w);
        out.push_back(std::move(c));
    }
    return out;
}

/// Single equality pinning the Bell expression's moment value.
inline LinearConstraint bell_value_constraint(const BellCoefficients& coeffs, double value,
                                              const MomentStructure& ms) {
    LinearConstraint c;
    c.rhs = value;
    c.label = "bell-value";
    const RealPolynomial poly = bell_polynomial(coeffs);
    for (const auto& [m, w] : poly.terms()) {
        const int id = ms.var_for(m);
        c.coefficients[id] += w;
        if (c.coefficients[id] == 0.0) c.coefficients.erase(id);
    }
    return c;
}

/// Localizing block for a polynomial constraint P >= 0: entry (i, j) is the
/// moment of adjoint(u_i) P u_j over the localizing basis words u_k. Every
/// word the expansion needs must already be a moment variable.
inline AffineBlock localizing_block(const RealPolynomial& constraint_poly,
                                    const std::vector<Monomial>& loc_basis,
                                    const MomentStructure& ms, const std::string& label) {
    const int n = static_cast<int>(loc_basis.size());
    AffineBlock block(label, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            LinearExpr& e = block.at(i, j);
            for (const auto& [m, c] : constraint_poly.terms()) {
                const Monomial w = multiply(multiply(adjoint(loc_basis[i]), m), loc_basis[j]);
                const int id = ms.var_for(w);
                const auto fx = ms.fixed.find(id);
                if (fx != ms.fixed.end())
                    e.constant += c * fx->second;
                else
                    e.add(id, c);
            }
        }
    return block;
}

} // namespace swapcert
