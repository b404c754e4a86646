#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "swapcert/fidelity.hpp"
#include "swapcert/moment.hpp"

namespace swapcert {

/// Affine expression in moment-variable ids: constant + sum coef[v] * y_v.
struct LinearExpr {
    double constant = 0.0;
    std::map<int, double> coef;

    void add(int var, double c) {
        if (c == 0.0) return;
        coef[var] += c;
        if (coef[var] == 0.0) coef.erase(var);
    }
};

/// Symmetric matrix of affine expressions, required PSD.
struct AffineBlock {
    std::string label;
    int size = 0;
    std::vector<LinearExpr> entries; // row-major, size*size

    explicit AffineBlock(std::string lbl, int n)
        : label(std::move(lbl)), size(n), entries(static_cast<size_t>(n) * n) {}

    LinearExpr& at(int i, int j) { return entries[static_cast<size_t>(i) * size + j]; }
    const LinearExpr& at(int i, int j) const {
        return entries[static_cast<size_t>(i) * size + j];
    }
};

/// Equality sum coef[v] * y_v = rhs. `label` names the constraint family for
/// dual extraction; `merged_count` counts raw entries merged into this row.
struct LinearConstraint {
    std::map<int, double> coefficients;
    double rhs = 0.0;
    std::string label;
    int merged_count = 1;
};

/// The moment matrix as an affine PSD block (fixed variables substituted).
inline AffineBlock moment_block(const MomentStructure& ms, const std::string& label = "moment") {
    const int n = ms.basis.size();
    AffineBlock block(label, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const int id = ms.entry(i, j);
            const auto fx = ms.fixed.find(id);
            if (fx != ms.fixed.end())
                block.at(i, j).constant += fx->second;
            else
                block.at(i, j).add(id, 1.0);
        }
    return block;
}

/// Solver-facing block data: S_b(y) = F0 + sum_i y_i F_i must be PSD.
struct SdpBlockData {
    std::string label;
    int size = 0;
    Eigen::MatrixXd F0;
    std::vector<std::vector<std::tuple<int, int, double>>> coef; // per var, (i, j<=i, value)
};

/// min c.y + constant  s.t.  every block PSD  and  A y = b.
struct SdpProblem {
    int num_vars = 0;
    std::vector<SdpBlockData> blocks;
    Eigen::VectorXd c;
    double objective_constant = 0.0;
    bool maximize = false; // objective was negated for an internal min
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    std::vector<std::string> eq_labels;
    std::vector<int> eq_merged;
    std::vector<std::string> var_names;
    std::vector<int> var_origin; // compacted id -> caller's id

    Eigen::MatrixXd block_value(int bi, const Eigen::VectorXd& y) const {
        const SdpBlockData& blk = blocks[bi];
        Eigen::MatrixXd s = blk.F0;
        for (int v = 0; v < num_vars; ++v)
            for (const auto& [i, j, val] : blk.coef[v]) {
                s(i, j) += y(v) * val;
                if (i != j) s(j, i) += y(v) * val;
            }
        return s;
    }
};

/// Flattens affine blocks, equalities and an objective over moment-variable
/// ids into solver form: substitutes fixed values, compacts the surviving
/// variable ids, detects duplicate equality rows (identical coefficients)
/// and rejects contradictory right-hand sides.
inline SdpProblem assemble(const std::vector<AffineBlock>& blocks,
                           const std::vector<LinearConstraint>& equalities,
                           const LinearExpr& objective, const std::map<int, double>& fixed,
                           const std::vector<std::string>& names, bool maximize = false) {
    std::map<int, int> compact;
    auto touch = [&](int id) {
        if (!fixed.count(id)) compact.emplace(id, 0);
    };
    for (const AffineBlock& blk : blocks)
        for (const LinearExpr& e : blk.entries)
            for (const auto& [id, c] : e.coef) touch(id);
    for (const LinearConstraint& eq : equalities)
        for (const auto& [id, c] : eq.coefficients) touch(id);
    for (const auto& [id, c] : objective.coef) touch(id);

    SdpProblem p;
    p.maximize = maximize;
    int next = 0;
    for (auto& [id, slot] : compact) slot = next++;
    p.num_vars = next;
    p.var_names.resize(next);
    p.var_origin.resize(next);
    for (const auto& [id, slot] : compact) {
        p.var_origin[slot] = id;
        p.var_names[slot] =
            (id >= 0 && id < static_cast<int>(names.size())) ? names[id] : "var" + std::to_string(id);
    }

    auto resolve = [&](const LinearExpr& e) {
        // (constant with fixed folded in, compacted coefficient list)
        std::pair<double, std::vector<std::pair<int, double>>> out{e.constant, {}};
        for (const auto& [id, c] : e.coef) {
            const auto fx = fixed.find(id);
            if (fx != fixed.end())
                out.first += c * fx->second;
            else
                out.second.emplace_back(compact.at(id), c);
        }
        return out;
    };

    for (const AffineBlock& blk : blocks) {
        SdpBlockData data;
        data.label = blk.label;
        data.size = blk.size;
        data.F0 = Eigen::MatrixXd::Zero(blk.size, blk.size);
        data.coef.resize(next);
        for (int i = 0; i < blk.size; ++i)
            for (int j = 0; j <= i; ++j) {
                const auto low = resolve(blk.at(i, j));
                const auto up = resolve(blk.at(j, i));
                if (std::abs(low.first - up.first) > 1e-12 || low.second != up.second)
                    throw std::invalid_argument("assemble: block " + blk.label +
                                                " is not symmetric");
                data.F0(i, j) = low.first;
                data.F0(j, i) = low.first;
                for (const auto& [v, c] : low.second) data.coef[v].emplace_back(i, j, c);
            }
        p.blocks.push_back(std::move(data));
    }

    // Deduplicate equality rows with identical coefficient signatures.
    std::map<std::vector<std::pair<int, double>>, int> seen;
    std::vector<std::vector<std::pair<int, double>>> rows;
    std::vector<double> rhs;
    for (const LinearConstraint& eq : equalities) {
        LinearExpr e;
        e.coef = eq.coefficients;
        auto [shift, coefs] = resolve(e);
        const double r = eq.rhs - shift;
        if (coefs.empty()) {
            if (std::abs(r) > 1e-9)
                throw std::invalid_argument("assemble: constraint " + eq.label +
                                            " fixes nothing but rhs != 0");
            continue;
        }
        const auto it = seen.find(coefs);
        if (it != seen.end()) {
            if (std::abs(rhs[it->second] - r) > 1e-9)
                throw std::invalid_argument("assemble: conflicting right-hand sides for " +
                                            eq.label);
            p.eq_merged[it->second] += eq.merged_count;
            continue;
        }
        seen.emplace(coefs, static_cast<int>(rows.size()));
        rows.push_back(std::move(coefs));
        rhs.push_back(r);
        p.eq_labels.push_back(eq.label);
        p.eq_merged.push_back(eq.merged_count);
    }
    p.A = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), next);
    p.b = Eigen::VectorXd::Zero(static_cast<int>(rows.size()));
    for (size_t k = 0; k < rows.size(); ++k) {
        for (const auto& [v, c] : rows[k]) p.A(static_cast<int>(k), v) = c;
        p.b(static_cast<int>(k)) = rhs[k];
    }

    const auto obj = resolve(objective);
    p.objective_constant = obj.first;
    p.c = Eigen::VectorXd::Zero(next);
    for (const auto& [v, c] : obj.second) p.c(v) = c;
    if (maximize) {
        p.c = -p.c;
        p.objective_constant = -p.objective_constant;
    }
    return p;
}

inline LinearExpr objective_from_functional(const FidelityFunctional& f) {
    LinearExpr e;
    e.constant = f.constant;
    for (const auto& [id, c] : f.coefficients) e.add(id, c);
    return e;
}

} // namespace swapcert
