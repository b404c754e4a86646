#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "swapcert/monomial.hpp"
#include "swapcert/scalars.hpp"

namespace swapcert {

inline bool scalar_is_zero(double x) { return x == 0.0; }
inline bool scalar_is_zero(const ExactScalar& s) { return s.is_zero(); }
inline double scalar_to_double(double x) { return x; }
inline double scalar_to_double(const ExactScalar& s) { return s.to_double(); }

/// Finite linear combination of canonical Monomials. The coefficient type is
/// either ExactScalar (symbolic expansions, exact cancellation) or double
/// (numeric weights such as Bell coefficients or localizing angles).
template <typename Scalar>
class OperatorPolynomial {
public:
    using Terms = std::map<Monomial, Scalar>;

    OperatorPolynomial() = default;

    static OperatorPolynomial zero() { return OperatorPolynomial(); }

    static OperatorPolynomial constant(Scalar c) {
        OperatorPolynomial p;
        p.add_term(Monomial::identity(), c);
        return p;
    }

    static OperatorPolynomial term(Monomial m, Scalar c) {
        OperatorPolynomial p;
        p.add_term(std::move(m), c);
        return p;
    }

    static OperatorPolynomial letter(int party, int meas, Scalar c = Scalar(1)) {
        return term(Monomial::single(party, meas), c);
    }

    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    void add_term(Monomial m, Scalar c) {
        if (scalar_is_zero(c)) return;
        auto [it, inserted] = terms_.emplace(std::move(m), c);
        if (!inserted) {
            it->second += c;
            if (scalar_is_zero(it->second)) terms_.erase(it);
        }
    }

    Scalar coefficient(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? Scalar(0) : it->second;
    }

    OperatorPolynomial operator+(const OperatorPolynomial& o) const {
        OperatorPolynomial r = *this;
        for (const auto& [m, c] : o.terms_) r.add_term(m, c);
        return r;
    }

    OperatorPolynomial operator-(const OperatorPolynomial& o) const {
        OperatorPolynomial r = *this;
        for (const auto& [m, c] : o.terms_) r.add_term(m, Scalar(0) - c);
        return r;
    }

    OperatorPolynomial operator*(const OperatorPolynomial& o) const {
        OperatorPolynomial r;
        for (const auto& [mu, cu] : terms_)
            for (const auto& [mv, cv] : o.terms_)
                r.add_term(multiply(mu, mv), cu * cv);
        return r;
    }

    OperatorPolynomial scaled(Scalar c) const {
        OperatorPolynomial r;
        for (const auto& [m, coef] : terms_) r.add_term(m, coef * c);
        return r;
    }

    friend OperatorPolynomial adjoint(const OperatorPolynomial& p) {
        OperatorPolynomial r;
        for (const auto& [m, c] : p.terms_) r.add_term(adjoint(m), c);
        return r;
    }

    friend OperatorPolynomial apply_permutation(const PartyPermutation& g,
                                                const OperatorPolynomial& p) {
        OperatorPolynomial r;
        for (const auto& [m, c] : p.terms_) r.add_term(apply_permutation(g, m), c);
        return r;
    }

    /// (1/|G|) sum of all group images.
    static OperatorPolynomial group_average(const PermutationGroup& group,
                                            const OperatorPolynomial<double>& p) {
        OperatorPolynomial<double> r;
        const double w = 1.0 / static_cast<double>(group.size());
        for (const auto& g : group.elements())
            for (const auto& [m, c] : p.terms())
                r.add_term(apply_permutation(g, m), c * w);
        return r;
    }

    OperatorPolynomial<double> to_double() const {
        OperatorPolynomial<double> r;
        for (const auto& [m, c] : terms_) r.add_term(m, scalar_to_double(c));
        return r;
    }

    std::string to_string() const {
        if (terms_.empty()) return "0";
        std::string s;
        for (const auto& [m, c] : terms_) {
            if (!s.empty()) s += " + ";
            if constexpr (std::is_same_v<Scalar, ExactScalar>)
                s += c.to_string();
            else
                s += std::to_string(c);
            s += "*[" + m.to_string() + "]";
        }
        return s;
    }

private:
    Terms terms_;
};

using ExactPolynomial = OperatorPolynomial<ExactScalar>;
using RealPolynomial = OperatorPolynomial<double>;

} // namespace swapcert
