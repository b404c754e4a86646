#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "swapcert/basis.hpp"
#include "swapcert/monomial.hpp"

namespace swapcert {

/// Symbolic moment matrix over a monomial basis. Entry (i, j) holds the id of
/// the moment variable for adjoint(u_i) u_j after canonicalization:
/// representative(w) is the minimum over the symmetry group of
/// min(canon(g w), canon(adjoint(g w))), which folds Hermitian conjugates
/// (real symmetrization) and symmetry orbits onto one variable.
/// `fixed` pins variables to known values; the identity is always fixed to 1.
class MomentStructure {
public:
    MonomialBasis basis;
    PermutationGroup group = PermutationGroup::trivial(1);
    std::vector<Monomial> var_words;
    std::map<Monomial, int> var_ids;
    Eigen::MatrixXi entry;
    std::map<int, double> fixed;

    int num_vars() const { return static_cast<int>(var_words.size()); }

    Monomial representative(const Monomial& w) const {
        bool first = true;
        Monomial best;
        for (const auto& g : group.elements()) {
            Monomial img = apply_permutation(g, w);
            Monomial adj = adjoint(img);
            if (adj < img) img = adj;
            if (first || img < best) {
                best = img;
                first = false;
            }
        }
        return best;
    }

    /// Variable id of a word, canonicalizing first. Throws if the word is not
    /// an entry of the moment matrix (basis too small for the request).
    int var_for(const Monomial& w) const {
        const auto it = var_ids.find(representative(w));
        if (it == var_ids.end())
            throw std::out_of_range("MomentStructure: no moment variable for " + w.to_string() +
                                    " (basis too small)");
        return it->second;
    }

    bool has_var(const Monomial& w) const { return var_ids.count(representative(w)) != 0; }

    void set_fixed(const Monomial& w, double value) {
        const int id = var_for(w);
        const auto it = fixed.find(id);
        if (it != fixed.end() && std::abs(it->second - value) > 1e-12)
            throw std::runtime_error("MomentStructure: conflicting fixed values for " +
                                     var_words[id].to_string());
        fixed[id] = value;
    }
};

inline MomentStructure build_moment_structure(const MonomialBasis& basis,
                                              const PermutationGroup& group) {
    if (group.num_parties() != basis.scenario.parties)
        throw std::invalid_argument("build_moment_structure: group party count mismatch");
    const std::set<Monomial> in_basis = basis.as_set();
    for (const Monomial& w : basis.monomials)
        for (const auto& g : group.elements())
            if (!in_basis.count(apply_permutation(g, w)))
                throw std::invalid_argument("build_moment_structure: basis not closed under group");

    MomentStructure ms;
    ms.basis = basis;
    ms.group = group;
    const int n = basis.size();

    std::vector<std::vector<Monomial>> reps(n, std::vector<Monomial>(n));
    std::set<Monomial> pool;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const Monomial w = multiply(adjoint(basis.monomials[i]), basis.monomials[j]);
            reps[i][j] = ms.representative(w);
            pool.insert(reps[i][j]);
        }

    ms.var_words.assign(pool.begin(), pool.end());
    std::sort(ms.var_words.begin(), ms.var_words.end());
    for (int k = 0; k < static_cast<int>(ms.var_words.size()); ++k)
        ms.var_ids[ms.var_words[k]] = k;
    if (ms.var_words.empty() || !(ms.var_words[0] == Monomial::identity()))
        throw std::logic_error("build_moment_structure: identity variable missing");

    ms.entry.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const int id = ms.var_ids.at(reps[i][j]);
            ms.entry(i, j) = id;
            ms.entry(j, i) = id;
        }
    ms.fixed = {{0, 1.0}};
    return ms;
}

inline MomentStructure build_moment_structure(const MonomialBasis& basis) {
    return build_moment_structure(basis, PermutationGroup::trivial(basis.scenario.parties));
}

/// Re-interns the structure under a larger symmetry group, merging variables
/// along orbits. Fixed values migrate with the merge; two fixed variables
/// landing in one orbit with different values is a hard error.
inline MomentStructure symmetrize(const MomentStructure& ms, const PermutationGroup& group) {
    MomentStructure out = build_moment_structure(ms.basis, group);
    for (const auto& [id, value] : ms.fixed) {
        const int nid = out.var_for(ms.var_words[id]);
        const auto it = out.fixed.find(nid);
        if (it != out.fixed.end() && std::abs(it->second - value) > 1e-12)
            throw std::runtime_error("symmetrize: inconsistent fixed values within one orbit (" +
                                     ms.var_words[id].to_string() + ")");
        out.fixed[nid] = value;
    }
    return out;
}

} // namespace swapcert
