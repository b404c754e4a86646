#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <type_traits>
#include <vector>

#include "swapcert/bell.hpp"
#include "swapcert/sdp.hpp"

namespace swapcert {

struct SolveOptions {
    double tol_gap = 1e-7;  // relative complementarity gap
    double tol_feas = 1e-8; // relative primal/dual residuals
    int max_iters = 200;
    bool mehrotra = true;
    // Weight of the feasibility shift variable. Must dominate the dual trace
    // of the problem, which reaches 1e5..1e6 for exactly-pinned marginal
    // problems (their feasible set has no interior, so the dual norm grows
    // as the shift shrinks); a weight below that leaves the shift parked at
    // a positive equilibrium. Escalated automatically when the shift
    // diverges or stalls positive.
    double big_m = 1e6;
    int big_m_escalations = 3;
    bool verbose = false;
};

enum class SolveStatus { optimal, max_iterations, infeasible_detected, numerical_trouble };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::max_iterations: return "max-iterations";
        case SolveStatus::infeasible_detected: return "infeasible-detected";
        default: return "numerical-trouble";
    }
}

struct SdpSolution {
    SolveStatus status = SolveStatus::numerical_trouble;
    Eigen::VectorXd x;
    double primal_value = 0.0; // c.x + constant, in the problem's min sense
    double dual_value = 0.0;   // b.mu - sum <F0, Y> + constant: the certified bound
    double gap = 0.0;          // relative
    std::vector<Eigen::MatrixXd> dual_blocks; // Y per problem block
    Eigen::VectorXd eq_multipliers;           // per equality row (dropped rows get 0)
    double shift = 0.0;                       // final feasibility shift (tau)
    int iterations = 0;
    std::string message;
};

namespace detail {

template <class T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// tr(F M) for sparse symmetric F given by lower-triangle triplets.
inline double sparse_trace_dot(const std::vector<std::tuple<int, int, double>>& f,
                               const Eigen::MatrixXd& m) {
    double s = 0.0;
    for (const auto& [i, j, v] : f) s += v * (i == j ? m(i, i) : m(i, j) + m(j, i));
    return s;
}

template <class T>
T trace_dot(const std::vector<std::tuple<int, int, double>>& f, const MatT<T>& m) {
    T s = T(0);
    for (const auto& [i, j, v] : f) s += T(v) * (i == j ? m(i, i) : m(i, j) + m(j, i));
    return s;
}

// Largest step alpha in [0, 1] with S + alpha * dS staying PSD, damped by frac.
template <class T>
double max_psd_step(const Eigen::LLT<MatT<T>>& chol, const MatT<T>& ds, double frac) {
    const MatT<T> l = chol.matrixL();
    MatT<T> g = l.template triangularView<Eigen::Lower>().solve(ds);
    g = l.template triangularView<Eigen::Lower>().solve(g.transpose().eval());
    g = T(0.5) * (g + g.transpose().eval());
    Eigen::SelfAdjointEigenSolver<MatT<T>> es(g, Eigen::EigenvaluesOnly);
    const double lmin = static_cast<double>(es.eigenvalues()(0));
    if (lmin >= -1e-14) return 1.0;
    return std::min(1.0, frac / (-lmin));
}

// One symmetric sparse matrix as directed entries, for entrywise traces.
struct DirEntry {
    int r, c;
    double v;
};

inline std::vector<DirEntry> directed(const std::vector<std::tuple<int, int, double>>& f) {
    std::vector<DirEntry> d;
    d.reserve(2 * f.size());
    for (const auto& [i, j, v] : f) {
        d.push_back({i, j, v});
        if (i != j) d.push_back({j, i, v});
    }
    return d;
}

// Extended problem state: original variables plus a trailing shift variable
// tau that pads every PSD block with tau * I, plus a 1x1 [tau] block. Any
// equality-feasible y becomes strictly block-feasible for large enough tau,
// giving the interior-point method a feasible start; the objective pays
// big_m * tau, so tau is driven back to 0 whenever the problem is feasible.
struct Extended {
    const SdpProblem* p = nullptr;
    int n = 0;    // original variable count
    int rows = 0; // kept equality rows
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd c; // length n + 1, c(n) = big_m
    std::vector<int> kept_rows;

    int num_blocks() const { return static_cast<int>(p->blocks.size()) + 1; }
    int block_size(int bi) const {
        return bi < static_cast<int>(p->blocks.size()) ? p->blocks[bi].size : 1;
    }

    // `baked` is shift already folded permanently into the constant term.
    Eigen::MatrixXd block_value(int bi, const Eigen::VectorXd& y, double baked = 0.0) const {
        const int nb = static_cast<int>(p->blocks.size());
        if (bi == nb) {
            Eigen::MatrixXd s(1, 1);
            s(0, 0) = y(n);
            return s;
        }
        Eigen::MatrixXd s = p->blocks[bi].F0;
        for (int v = 0; v < n; ++v)
            for (const auto& [i, j, val] : p->blocks[bi].coef[v]) {
                s(i, j) += y(v) * val;
                if (i != j) s(j, i) += y(v) * val;
            }
        s.diagonal().array() += y(n) + baked;
        return s;
    }

    // dS for a direction dy (same affine map without F0).
    template <class T>
    MatT<T> block_delta(int bi, const VecT<T>& dy) const {
        const int nb = static_cast<int>(p->blocks.size());
        if (bi == nb) {
            MatT<T> s(1, 1);
            s(0, 0) = dy(n);
            return s;
        }
        MatT<T> s = MatT<T>::Zero(p->blocks[bi].size, p->blocks[bi].size);
        for (int v = 0; v < n; ++v)
            for (const auto& [i, j, val] : p->blocks[bi].coef[v]) {
                s(i, j) += dy(v) * T(val);
                if (i != j) s(j, i) += dy(v) * T(val);
            }
        s.diagonal().array() += dy(n);
        return s;
    }

    // tr(F_v M) for extended variable v on block bi.
    template <class T>
    T coef_dot(int bi, int v, const MatT<T>& m) const {
        const int nb = static_cast<int>(p->blocks.size());
        if (v == n) return m.trace(); // F_tau = I on every block
        if (bi == nb) return T(0);
        return trace_dot<T>(p->blocks[bi].coef[v], m);
    }
};

// Iterate shared between precision phases; values are kept in double and the
// Newton algebra is done in the phase's scalar type.
struct IterState {
    Eigen::VectorXd y;
    std::vector<Eigen::MatrixXd> Y;
    Eigen::VectorXd mu;
    bool frozen = false;   // shift variable retired from the Newton system
    double baked = 0.0;    // shift folded into the blocks' constant term
    bool xp_latch = false; // stay in extended precision once double stalls
    int rescues = 0;
    bool have_prev = false;
    Eigen::VectorXd y_prev, mu_prev;
    std::vector<Eigen::MatrixXd> Y_prev;
    double rel_gap = std::numeric_limits<double>::infinity();
};

enum class StepOutcome { stepped, converged, escalate, trouble, need_xp };

template <class T>
StepOutcome newton_step(const Extended& ext, const SolveOptions& opts, double big_m, double cmax,
                        int total_dim, double tau_init, int it, IterState& st,
                        std::string& trouble) {
    using Mat = MatT<T>;
    using Vec = VecT<T>;
    const int n = ext.n;
    const int rows = ext.rows;
    const int nb = ext.num_blocks();
    Eigen::VectorXd& y = st.y;

    // Once the shift is negligible, retire it: its Newton row carries scales
    // like big_m / tau and would wreck the conditioning of everything after
    // this point. Preferred exit is tau = 0 exactly (no perturbation). When
    // the original blocks cannot stand on their own, the leftover tau is
    // folded into the constant term instead: S is unchanged (so stays PD)
    // and the blocks are relaxed by tau * I. Waiting for positive
    // definiteness at tau = 0 would never end: pinned-marginal problems have
    // singular optima. The threshold is absolute and tight because the
    // optimum of an exactly-pinned problem moves with the relaxation times
    // the dual trace, which reaches 1e3..1e4 when the pins leave the
    // feasible set with no interior.
    if (!st.frozen && y(n) < 1e-10) {
        const double tau_left = y(n);
        y(n) = 0.0;
        bool pd0 = true;
        for (int bi = 0; bi + 1 < nb; ++bi)
            if (Eigen::LLT<Eigen::MatrixXd>(ext.block_value(bi, y, st.baked)).info() !=
                Eigen::Success) {
                pd0 = false;
                break;
            }
        if (!pd0) st.baked += tau_left;
        st.frozen = true;
    }
    const int nba = st.frozen ? nb - 1 : nb; // active blocks
    const int nv = st.frozen ? n : n + 1;    // active variables
    const int tdim = st.frozen ? total_dim - 1 : total_dim;

    const Mat a = ext.a.leftCols(nv).cast<T>();
    const Vec b = ext.b.cast<T>();
    const Vec c = ext.c.head(nv).cast<T>();
    const Vec mu = st.mu.cast<T>();
    const Vec yv = y.head(nv).cast<T>();
    std::vector<Mat> Y(nb);
    for (int bi = 0; bi < nba; ++bi) Y[bi] = st.Y[bi].cast<T>();

    // Factor the blocks; a failed factorization means the line search let an
    // eigenvalue reach 0 numerically.
    std::vector<Mat> S(nb);
    std::vector<Eigen::LLT<Mat>> chol(nb);
    bool pd = true;
    for (int bi = 0; bi < nba; ++bi) {
        S[bi] = ext.block_value(bi, y, st.baked).cast<T>();
        chol[bi].compute(S[bi]);
        if (chol[bi].info() != Eigen::Success) pd = false;
    }
    if (!pd) {
        if (st.frozen) {
            // Back out of the last step and retry more cautiously.
            if (st.have_prev && st.rescues < 3) {
                st.y = st.y_prev;
                st.Y = st.Y_prev;
                st.mu = st.mu_prev;
                ++st.rescues;
                return StepOutcome::stepped;
            }
            trouble = "block lost positive definiteness after the shift froze";
            return StepOutcome::trouble;
        }
        y(n) += std::max(1.0, 2.0 * std::abs(y(n)));
        return StepOutcome::stepped;
    }

    // At a degenerate optimum the dual blocks ride within rounding error of
    // the cone boundary, so every positive definiteness test on them gets a
    // slack proportional to the block's scale. Rewriting Y for such rounding
    // noise would feed the rewrite straight into the dual residual, every
    // iteration; repair only a block that is genuinely indefinite.
    std::vector<double> ridge(nba);
    for (int bi = 0; bi < nba; ++bi) {
        ridge[bi] = 1e-13 * (1.0 + st.Y[bi].diagonal().cwiseAbs().maxCoeff());
        if (Eigen::LLT<Eigen::MatrixXd>(st.Y[bi]).info() != Eigen::Success) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(st.Y[bi]);
            if (es.eigenvalues()(0) < -1e3 * ridge[bi]) {
                st.Y[bi] = es.eigenvectors() * es.eigenvalues().cwiseMax(ridge[bi]).asDiagonal() *
                           es.eigenvectors().transpose();
                Y[bi] = st.Y[bi].cast<T>();
            }
        }
    }

    T comp = T(0);
    for (int bi = 0; bi < nba; ++bi) comp += (S[bi] * Y[bi]).trace();
    const T mu_bar = comp / T(tdim);

    std::vector<Mat> Sinv(nb);
    for (int bi = 0; bi < nba; ++bi)
        Sinv[bi] = chol[bi].solve(Mat::Identity(S[bi].rows(), S[bi].cols()));

    Vec g = Vec::Zero(nv), h = Vec::Zero(nv);
    for (int v = 0; v < nv; ++v)
        for (int bi = 0; bi < nba; ++bi) {
            g(v) += ext.coef_dot<T>(bi, v, Y[bi]);
            h(v) += ext.coef_dot<T>(bi, v, Sinv[bi]);
        }
    const Vec rd = c - g - a.transpose() * mu;
    const Vec rp = b - a * yv;

    const double pobj = static_cast<double>(c.dot(yv));
    double f0y = 0.0;
    for (int bi = 0; bi + 1 < nb; ++bi)
        f0y += (ext.p->blocks[bi].F0.array() * st.Y[bi].array()).sum();
    const double dobj = (rows > 0 ? ext.b.dot(st.mu) : 0.0) - f0y;
    const double scale = 1.0 + std::abs(pobj) + std::abs(dobj);
    st.rel_gap = static_cast<double>(comp) / scale;
    const double rp_norm =
        rows > 0
            ? static_cast<double>(rp.cwiseAbs().maxCoeff()) / (1.0 + ext.b.cwiseAbs().maxCoeff())
            : 0.0;
    // The shift row of the dual residual scales with big_m and does not
    // enter the reported certificate; stop on the original rows.
    const double rd_norm =
        n > 0 ? static_cast<double>(rd.head(n).cwiseAbs().maxCoeff()) / (1.0 + cmax)
              : (st.frozen ? 0.0 : static_cast<double>(std::abs(rd(0))) / (1.0 + big_m));
    if (opts.verbose) {
        std::printf("  it %3d  gap %9.2e  rp %9.2e  rd %9.2e  tau %9.2e%s\n", it, st.rel_gap,
                    rp_norm, rd_norm, y(n), sizeof(T) > sizeof(double) ? "  xp" : "");
    }
    if (st.rel_gap <= opts.tol_gap && rp_norm <= opts.tol_feas && rd_norm <= opts.tol_feas)
        return StepOutcome::converged;

    // Promote to extended precision before stepping from a small-gap state,
    // not one iteration later: a double step here plants a dual residual the
    // endgame cannot repair. Every endgame runs promoted: the gap region
    // below ~1e-5 is where the Newton systems of degenerate problems turn
    // too ill-conditioned for double, and for the small well-conditioned
    // ones the extra cost is noise. Promotion also latches early when the
    // dual residual sits far above a small gap: that shape means each double
    // solve re-plants its own error faster than the steps remove it.
    if (std::is_same_v<T, double>) {
        const bool tight_tol =
            (opts.tol_gap < 1e-9 || opts.tol_feas < 1e-9) && st.rel_gap < 1e-4;
        const bool endgame = st.rel_gap < 3e-5;
        const bool stuck = st.rel_gap < 1e-2 &&
                           rd_norm > std::max(1e2 * opts.tol_feas, 10.0 * st.rel_gap);
        if (endgame || stuck) st.xp_latch = true;
        if (tight_tol || endgame || stuck) return StepOutcome::need_xp;
    }

    // Schur complement of the Newton system
    //   H dy - A^T dmu = nu h - c + A^T mu - k,   A dy = rp,
    // with H_uv = sum_b tr(F_u S^-1 F_v Y), accumulated entrywise through
    // tr(E_ab S^-1 E_cd Y) = Sinv(b, c) Y(d, a).
    Mat H = Mat::Zero(nv, nv);
    for (int bi = 0; bi < nba; ++bi) {
        const int sz = ext.block_size(bi);
        const bool tau_block = (bi + 1 == nb);
        // Variables with entries in this block (the shift always has).
        std::vector<int> active;
        if (!tau_block)
            for (int v = 0; v < n; ++v)
                if (!ext.p->blocks[bi].coef[v].empty()) active.push_back(v);
        if (!st.frozen) active.push_back(n);

        std::vector<std::vector<DirEntry>> dir(active.size());
        for (size_t k = 0; k < active.size(); ++k) {
            if (active[k] == n) {
                dir[k].reserve(sz);
                for (int d = 0; d < sz; ++d) dir[k].push_back({d, d, 1.0});
            } else {
                dir[k] = directed(ext.p->blocks[bi].coef[active[k]]);
            }
        }
        const Mat& si = Sinv[bi];
        const Mat& yb = Y[bi];
        for (size_t ui = 0; ui < active.size(); ++ui)
            for (size_t vi = ui; vi < active.size(); ++vi) {
                T s = T(0);
                for (const DirEntry& e : dir[ui])
                    for (const DirEntry& f : dir[vi])
                        s += T(e.v * f.v) * si(e.c, f.r) * yb(f.c, e.r);
                H(active[ui], active[vi]) += s;
                if (ui != vi) H(active[vi], active[ui]) += s;
            }
    }
    H = T(0.5) * (H + H.transpose().eval());
    // Per-row relative regularization: H mixes scales as wildly as
    // big_m / tau, and a perturbation sized by the largest diagonal would
    // wreck the well-scaled rows' Newton residuals.
    const T reg = T(1e4) * std::numeric_limits<T>::epsilon();
    H.diagonal().array() += reg * (T(1) + H.diagonal().array().abs());

    // Jacobi equilibration before factoring, for the same reason: a plain
    // Cholesky of the raw matrix loses the well-scaled rows' digits to the
    // dominant ones. The symmetric rescale costs nothing and leaves the
    // refinement residuals (taken against the raw H) meaningful.
    Vec hd = H.diagonal().cwiseMax(T(0)).cwiseSqrt();
    for (int i = 0; i < nv; ++i)
        if (!(hd(i) > T(0))) hd(i) = T(1);
    const Vec hdi = hd.cwiseInverse();
    Eigen::LLT<Mat> hfac(Mat(hdi.asDiagonal() * H * hdi.asDiagonal()));
    if (hfac.info() != Eigen::Success) {
        trouble = "Schur matrix not positive definite";
        return StepOutcome::trouble;
    }
    auto hsolve = [&](const Vec& r) { return Vec(hdi.cwiseProduct(hfac.solve(hdi.cwiseProduct(r)))); };

    Mat hia(nv, rows);
    Eigen::LLT<Mat> mfac;
    Vec mdi;
    if (rows > 0) {
        hia = hdi.asDiagonal() * Mat(hfac.solve(Mat(hdi.asDiagonal() * a.transpose())));
        Mat m = a * hia;
        m = T(0.5) * (m + m.transpose().eval());
        m.diagonal().array() += reg * (T(1) + m.diagonal().array().abs());
        Vec md = m.diagonal().cwiseMax(T(0)).cwiseSqrt();
        for (int i = 0; i < rows; ++i)
            if (!(md(i) > T(0))) md(i) = T(1);
        mdi = md.cwiseInverse();
        mfac.compute(Mat(mdi.asDiagonal() * m * mdi.asDiagonal()));
        if (mfac.info() != Eigen::Success) {
            trouble = "equality Schur complement not positive definite";
            return StepOutcome::trouble;
        }
    }
    auto msolve = [&](const Vec& r) { return Vec(mdi.cwiseProduct(mfac.solve(mdi.cwiseProduct(r)))); };

    // Two refinement passes: the Newton residual of this solve feeds
    // straight into the next dual residual, so polish it well below the
    // conditioning floor of a single factored solve.
    auto kkt_solve = [&](const Vec& r1, const Vec& r2, Vec& dy, Vec& dmu) {
        if (rows > 0) {
            dmu = msolve(r2 - hia.transpose() * r1);
            dy = hsolve(r1 + a.transpose() * dmu);
            for (int pass = 0; pass < 2; ++pass) {
                const Vec e1 = r1 - (H * dy - a.transpose() * dmu);
                const Vec e2 = r2 - a * dy;
                const Vec cm = msolve(e2 - hia.transpose() * e1);
                const Vec cd = hsolve(e1 + a.transpose() * cm);
                dmu += cm;
                dy += cd;
            }
        } else {
            dmu = Vec(0);
            dy = hsolve(r1);
            for (int pass = 0; pass < 2; ++pass) dy += hsolve(r1 - H * dy);
        }
    };

    auto pad = [&](const Vec& dy) {
        Vec full = Vec::Zero(n + 1);
        full.head(nv) = dy;
        return full;
    };

    auto dY_from = [&](T nuv, const Vec& dyf, const std::vector<Mat>* cs,
                       const std::vector<Mat>* cy, double cscale, int bi) {
        const Mat ds = ext.block_delta<T>(bi, dyf);
        Mat rhs = -S[bi] * Y[bi] - ds * Y[bi];
        rhs.diagonal().array() += nuv;
        if (cs && cy) rhs -= T(cscale) * ((*cs)[bi] * (*cy)[bi]);
        Mat dYb = chol[bi].solve(rhs);
        return Mat(T(0.5) * (dYb + dYb.transpose().eval()));
    };

    double sigma = opts.mehrotra ? 0.0 : 0.3;
    double damp = 1.0; // corrector scale: the affine step actually achievable
    std::vector<Mat> dY_aff(nb), dS_aff(nb);
    if (opts.mehrotra) {
        const Vec r1a = -c + a.transpose() * mu; // nu = 0
        Vec dy_aff, dmu_aff;
        kkt_solve(r1a, rp, dy_aff, dmu_aff);
        const Vec dyf_aff = pad(dy_aff);
        double ap = 1.0, ad = 1.0;
        for (int bi = 0; bi < nba; ++bi) {
            dS_aff[bi] = ext.block_delta<T>(bi, dyf_aff);
            dY_aff[bi] = dY_from(T(0), dyf_aff, nullptr, nullptr, 0.0, bi);
            Eigen::LLT<Mat> ychol(Mat(Y[bi] + T(ridge[bi]) * Mat::Identity(Y[bi].rows(), Y[bi].cols())));
            ap = std::min(ap, max_psd_step<T>(chol[bi], dS_aff[bi], 1.0));
            if (ychol.info() == Eigen::Success)
                ad = std::min(ad, max_psd_step<T>(ychol, dY_aff[bi], 1.0));
        }
        T comp_aff = T(0);
        for (int bi = 0; bi < nba; ++bi)
            comp_aff += ((S[bi] + T(ap) * dS_aff[bi]) * (Y[bi] + T(ad) * dY_aff[bi])).trace();
        const double ratio = std::max(0.0, static_cast<double>(comp_aff / comp));
        sigma = std::min(1.0, std::max(1e-8, ratio * ratio * ratio));
        // Keep the gap from collapsing orders of magnitude below the target:
        // the Newton systems down there are too ill-conditioned even for the
        // refinement passes, and the dual residual still needs clean steps.
        // Both floors cap below 1: a full-centering sigma would stall the
        // gap entirely when the residual they watch cannot improve.
        const double sigma_floor = 0.2 * opts.tol_gap / std::max(st.rel_gap, 1e-300);
        if (sigma_floor > sigma) sigma = std::min(0.999, sigma_floor);
        // Never let the gap outrun the dual residual: repairing dual
        // infeasibility needs cone slack proportional to mu, and a gap far
        // below rd strands the iterate against the boundary. The cap must
        // sit close to 1: at 0.95 a hundred capped iterations still shrink
        // the gap by 5e-3 and the runaway happens anyway, just slowly.
        // Suspended while the shift hovers just above its freeze threshold:
        // the live shift row is itself what pollutes the dual residual, and
        // holding the gap would pin the shift there forever (it tracks mu).
        const bool rd_hold = st.frozen || y(n) > 1e-9;
        const double sigma_rd = 0.3 * rd_norm / std::max(st.rel_gap, 1e-300);
        if (rd_hold && sigma_rd > sigma) sigma = std::min(0.999, sigma_rd);
        // A blocked affine step means the full product dS_aff dY_aff
        // overstates the second-order term; scale the corrector to the step
        // that survives the boundary.
        damp = std::min(1.0, ap * ad);
    }

    const T nu = T(sigma) * mu_bar;
    Vec k = Vec::Zero(nv);
    if (opts.mehrotra && damp > 0.0) {
        for (int bi = 0; bi < nba; ++bi) {
            const Mat v = chol[bi].solve(Mat(dS_aff[bi] * dY_aff[bi]));
            for (int u = 0; u < nv; ++u) k(u) += T(damp) * ext.coef_dot<T>(bi, u, v);
        }
    }
    const Vec r1 = nu * h - c + a.transpose() * mu - k;
    Vec dy, dmu;
    kkt_solve(r1, rp, dy, dmu);
    const Vec dyf = pad(dy);

    // Lengthen steps once the gap is small: the time spent near the boundary
    // is what erodes the attainable dual accuracy.
    double frac = st.rel_gap < 1e-8 ? 0.999 : (st.rel_gap < 1e-5 ? 0.995 : 0.98);
    if (st.rescues > 0) frac = std::min(frac, 0.9);

    std::vector<Mat> dY(nb);
    for (int bi = 0; bi < nba; ++bi)
        dY[bi] = dY_from(nu, dyf, opts.mehrotra ? &dS_aff : nullptr,
                         opts.mehrotra ? &dY_aff : nullptr, damp, bi);

    // The dual step comes back through S^-1, and at a degenerate optimum
    // cond(S) ~ ||Y|| / mu eats most of the mantissa: the delivered trace map
    // tr(F_v dY) then misses its Newton target by enough to park the dual
    // residual orders of magnitude above tolerance, no matter how clean the
    // Schur solve was. The target is known exactly (the dual residual minus
    // the equality pullback), the delivered map is cheap to measure, and a
    // correction along the same operator family shrinks its own injection by
    // the size of the miss, so a few passes steer the map onto the target.
    if (nv > 0) {
        Vec tstar = rd;
        if (rows > 0) tstar -= a.transpose() * dmu;
        const T tscale = T(1) + tstar.cwiseAbs().maxCoeff();
        for (int pass = 0; pass < 40; ++pass) {
            Vec t = Vec::Zero(nv);
            for (int bi = 0; bi < nba; ++bi)
                for (int u = 0; u < nv; ++u) t(u) += ext.coef_dot<T>(bi, u, dY[bi]);
            const Vec d = t - tstar;
            if (pass == 39 || d.cwiseAbs().maxCoeff() < T(1e-13) * tscale) break;
            const Vec w = pad(hsolve(d));
            for (int bi = 0; bi < nba; ++bi) {
                const Mat corr = chol[bi].solve(Mat(ext.block_delta<T>(bi, w) * Y[bi]));
                dY[bi] -= T(0.5) * (corr + corr.transpose().eval());
            }
        }
    }

    double ap = 1.0, ad = 1.0;
    for (int bi = 0; bi < nba; ++bi) {
        ap = std::min(ap, max_psd_step<T>(chol[bi], ext.block_delta<T>(bi, dyf), frac));
        Eigen::LLT<Mat> ychol(Mat(Y[bi] + T(ridge[bi]) * Mat::Identity(Y[bi].rows(), Y[bi].cols())));
        if (ychol.info() == Eigen::Success)
            ad = std::min(ad, max_psd_step<T>(ychol, dY[bi], frac));
    }

    // Verify the ratio-test lengths by factoring the stepped blocks, and
    // back off until both sides are strictly PD: an overshoot here is what
    // lets an iterate slip out of the cone.
    const auto primal_pd_at = [&](double alpha) {
        Eigen::VectorXd y_try = y + alpha * dyf.template cast<double>();
        for (int bi = 0; bi < nba; ++bi)
            if (Eigen::LLT<Eigen::MatrixXd>(ext.block_value(bi, y_try, st.baked)).info() !=
                Eigen::Success)
                return false;
        return true;
    };
    const auto dual_pd_at = [&](double alpha) {
        for (int bi = 0; bi < nba; ++bi) {
            Eigen::MatrixXd y_try = st.Y[bi] + alpha * dY[bi].template cast<double>();
            y_try.diagonal().array() += ridge[bi];
            if (Eigen::LLT<Eigen::MatrixXd>(y_try).info() != Eigen::Success) return false;
        }
        return true;
    };
    for (int guard = 0; ap > 1e-12 && !primal_pd_at(ap) && guard < 60; ++guard) ap *= 0.7;
    for (int guard = 0; ad > 1e-12 && !dual_pd_at(ad) && guard < 60; ++guard) ad *= 0.7;
    if (ap < 1e-10 && ad < 1e-10) {
        trouble = "step length collapsed";
        return StepOutcome::trouble;
    }
    st.y_prev = y;
    st.Y_prev = st.Y;
    st.mu_prev = st.mu;
    st.have_prev = true;
    y += ap * dyf.template cast<double>();
    if (rows > 0) st.mu += ad * dmu.template cast<double>();
    for (int bi = 0; bi < nba; ++bi) st.Y[bi] += ad * dY[bi].template cast<double>();

    // A diverging shift means the penalty weight lost to the objective:
    // retry with a heavier weight.
    if (!st.frozen && y(n) > 1e4 * (1.0 + tau_init)) return StepOutcome::escalate;
    return StepOutcome::stepped;
}

} // namespace detail

/// Primal-dual interior-point solver (HKM direction, Mehrotra
/// predictor-corrector) for min c.y s.t. affine blocks PSD and A y = b.
/// Equality rows that pin a single variable are substituted out up front;
/// remaining dependent rows are dropped by rank-revealing QR. Infeasibility
/// of the PSD constraints is detected through the feasibility shift variable.
/// Tolerances below 1e-9 switch the final iterations to extended precision.
inline SdpSolution solve(const SdpProblem& prob, const SolveOptions& opts = {}) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    SdpSolution sol;
    const int n_all = prob.num_vars;
    const int all_rows = static_cast<int>(prob.b.size());

    // Substitute out pinned variables. Rows left with a single variable fix
    // it outright, and a row that becomes single-variable after earlier pins
    // is itself a pin; iterate to closure. Marginal data enters moment
    // problems entirely through such rows, and carrying them as a KKT
    // equality block needlessly amplifies the Newton solve error near their
    // (typically singular) optima. The eliminated rows' multipliers are
    // recovered exactly from stationarity once the dual blocks are known.
    std::vector<int> pin_rows, pin_vars; // in elimination order
    std::vector<char> row_live(all_rows, 1), var_free(n_all, 1);
    VectorXd pin_val = VectorXd::Zero(n_all);
    VectorXd b_eff = prob.b;
    const double b_scale = 1.0 + (all_rows > 0 ? prob.b.cwiseAbs().maxCoeff() : 0.0);
    for (bool again = all_rows > 0; again;) {
        again = false;
        for (int r = 0; r < all_rows; ++r) {
            if (!row_live[r]) continue;
            int var = -1, cnt = 0;
            for (int v = 0; v < n_all && cnt < 2; ++v)
                if (var_free[v] && prob.A(r, v) != 0.0) {
                    var = v;
                    ++cnt;
                }
            if (cnt == 1) {
                pin_rows.push_back(r);
                pin_vars.push_back(var);
                pin_val(var) = b_eff(r) / prob.A(r, var);
                var_free[var] = 0;
                row_live[r] = 0;
                for (int r2 = 0; r2 < all_rows; ++r2)
                    if (row_live[r2] && prob.A(r2, var) != 0.0)
                        b_eff(r2) -= prob.A(r2, var) * pin_val(var);
                again = true;
            } else if (cnt == 0) {
                // Emptied by the pins: either redundant or contradictory.
                if (std::abs(b_eff(r)) > 1e-7 * b_scale) {
                    sol.status = SolveStatus::infeasible_detected;
                    sol.message = "equality system inconsistent (residual " +
                                  std::to_string(std::abs(b_eff(r))) + ")";
                    sol.x = VectorXd::Zero(n_all);
                    sol.eq_multipliers = VectorXd::Zero(all_rows);
                    return sol;
                }
                row_live[r] = 0;
            }
        }
    }
    std::vector<int> free_ids, live_rows;
    for (int v = 0; v < n_all; ++v)
        if (var_free[v]) free_ids.push_back(v);
    for (int r = 0; r < all_rows; ++r)
        if (row_live[r]) live_rows.push_back(r);

    // The problem the interior-point method actually sees: pinned variables
    // folded into the constant matrices, their rows gone.
    SdpProblem red;
    red.num_vars = static_cast<int>(free_ids.size());
    red.c = VectorXd::Zero(red.num_vars);
    for (int k = 0; k < red.num_vars; ++k) red.c(k) = prob.c(free_ids[k]);
    for (const SdpBlockData& blk : prob.blocks) {
        SdpBlockData rb;
        rb.label = blk.label;
        rb.size = blk.size;
        rb.F0 = blk.F0;
        for (const int v : pin_vars) {
            const double val = pin_val(v);
            if (val == 0.0) continue;
            for (const auto& [i, j, w] : blk.coef[v]) {
                rb.F0(i, j) += val * w;
                if (i != j) rb.F0(j, i) += val * w;
            }
        }
        rb.coef.reserve(free_ids.size());
        for (const int v : free_ids) rb.coef.push_back(blk.coef[v]);
        red.blocks.push_back(std::move(rb));
    }
    red.A.resize(static_cast<int>(live_rows.size()), red.num_vars);
    red.b.resize(static_cast<int>(live_rows.size()));
    for (size_t k = 0; k < live_rows.size(); ++k) {
        for (size_t j = 0; j < free_ids.size(); ++j)
            red.A(static_cast<int>(k), static_cast<int>(j)) = prob.A(live_rows[k], free_ids[j]);
        red.b(static_cast<int>(k)) = b_eff(live_rows[k]);
    }

    const int n = red.num_vars;
    const int red_rows = static_cast<int>(red.b.size());

    // Rank-revealing row selection on the remaining equality system.
    std::vector<int> kept;
    if (red_rows > 0) {
        Eigen::ColPivHouseholderQR<MatrixXd> qr(red.A.transpose());
        qr.setThreshold(1e-10);
        const int rank = static_cast<int>(qr.rank());
        for (int k = 0; k < rank; ++k) kept.push_back(qr.colsPermutation().indices()(k));
        std::sort(kept.begin(), kept.end());
        // Consistency of dropped rows: the least-squares solution of the kept
        // system must satisfy every original row.
        MatrixXd ak(static_cast<int>(kept.size()), n);
        VectorXd bk(static_cast<int>(kept.size()));
        for (size_t k = 0; k < kept.size(); ++k) {
            ak.row(static_cast<int>(k)) = red.A.row(kept[k]);
            bk(static_cast<int>(k)) = red.b(kept[k]);
        }
        const VectorXd y_ls = ak.completeOrthogonalDecomposition().solve(bk);
        const double resid = (red.A * y_ls - red.b).cwiseAbs().maxCoeff();
        if (resid > 1e-7 * (1.0 + red.b.cwiseAbs().maxCoeff())) {
            sol.status = SolveStatus::infeasible_detected;
            sol.message = "equality system inconsistent (residual " + std::to_string(resid) + ")";
            sol.x = VectorXd::Zero(n_all);
            sol.eq_multipliers = VectorXd::Zero(all_rows);
            return sol;
        }
    }
    const int rows = static_cast<int>(kept.size());

    detail::Extended ext;
    ext.p = &red;
    ext.n = n;
    ext.rows = rows;
    ext.kept_rows = kept;
    ext.a = MatrixXd::Zero(rows, n + 1);
    ext.b = VectorXd::Zero(rows);
    for (int k = 0; k < rows; ++k) {
        ext.a.row(k).head(n) = red.A.row(kept[k]);
        ext.b(k) = red.b(kept[k]);
    }

    const int nb = ext.num_blocks();
    int total_dim = 0;
    for (int bi = 0; bi < nb; ++bi) total_dim += ext.block_size(bi);

    double big_m = opts.big_m;
    const double cmax = (n > 0 && red.c.size() > 0) ? red.c.cwiseAbs().maxCoeff() : 0.0;
    big_m = std::max(big_m, 1e3 * (1.0 + cmax));

    // Ask for the extended-precision endgame only when the tolerances are
    // beyond what double Newton systems deliver on degenerate problems.
    const bool want_xp = opts.tol_gap < 1e-9 || opts.tol_feas < 1e-9;

    // Converged shift of the previous attempt; a shift that survives a 100x
    // raise of big_m is a genuine infeasibility certificate, not a weight
    // problem.
    double prev_shift = -1.0;

    for (int attempt = 0; attempt <= opts.big_m_escalations; ++attempt) {
        ext.c = VectorXd::Zero(n + 1);
        ext.c.head(n) = red.c;
        ext.c(n) = big_m;

        // Feasible start: min-norm equality solution, then lift tau.
        detail::IterState st;
        st.y = VectorXd::Zero(n + 1);
        if (rows > 0) {
            MatrixXd ak = ext.a.leftCols(n);
            st.y.head(n) = ak.completeOrthogonalDecomposition().solve(ext.b);
        }
        double worst = 0.0;
        for (int bi = 0; bi + 1 < nb; ++bi) {
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(ext.block_value(bi, st.y),
                                                       Eigen::EigenvaluesOnly);
            worst = std::max(worst, -es.eigenvalues()(0));
        }
        st.y(n) = std::max(1.0, 1.5 * worst + 0.1);
        const double tau_init = st.y(n);

        st.Y.resize(nb);
        for (int bi = 0; bi < nb; ++bi)
            st.Y[bi] = MatrixXd::Identity(ext.block_size(bi), ext.block_size(bi));
        // Start the shift row of the dual residual at exactly zero: the
        // stationarity row for tau reads big_m = sum_b tr(Y_b) + Y_tau, and a
        // residual there would be O(big_m), wrecking the Newton directions.
        st.Y[nb - 1](0, 0) = std::max(1.0, big_m - (total_dim - 1));
        st.mu = VectorXd::Zero(rows);

        bool escalate = false;
        bool converged = false;
        std::string trouble;
        int iters = 0;

        for (int it = 0; it < opts.max_iters; ++it) {
            iters = it + 1;
            const bool xp = st.xp_latch || (want_xp && st.rel_gap < 1e-4);
            detail::StepOutcome out =
                xp ? detail::newton_step<long double>(ext, opts, big_m, cmax, total_dim, tau_init,
                                                      it, st, trouble)
                   : detail::newton_step<double>(ext, opts, big_m, cmax, total_dim, tau_init, it,
                                                 st, trouble);
            if (out == detail::StepOutcome::need_xp)
                out = detail::newton_step<long double>(ext, opts, big_m, cmax, total_dim, tau_init,
                                                       it, st, trouble);
            if (out == detail::StepOutcome::converged) {
                converged = true;
                break;
            }
            if (out == detail::StepOutcome::trouble) break;
            if (out == detail::StepOutcome::escalate) {
                escalate = true;
                break;
            }
        }

        if (escalate && attempt < opts.big_m_escalations) {
            big_m *= 100.0;
            continue;
        }
        // Iteration budget gone with the shift still live and positive: the
        // weight lost to the objective at an interior equilibrium, the same
        // failure as divergence, only quieter.
        if (!converged && trouble.empty() && !escalate && !st.frozen && st.y(n) > 1e-4 &&
            attempt < opts.big_m_escalations) {
            big_m *= 100.0;
            continue;
        }

        // The dual blocks finish within rounding error of the cone boundary;
        // project them onto it once so the certificate they feed is clean.
        for (int bi = 0; bi + 1 < nb; ++bi) {
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(st.Y[bi]);
            if (es.eigenvalues()(0) < 0.0)
                st.Y[bi] = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                           es.eigenvectors().transpose();
        }

        sol.x = VectorXd::Zero(n_all);
        for (int k = 0; k < n; ++k) sol.x(free_ids[k]) = st.y(k);
        for (const int v : pin_vars) sol.x(v) = pin_val(v);
        sol.shift = st.y(n) + st.baked;
        sol.iterations = iters;
        sol.dual_blocks.assign(st.Y.begin(), st.Y.end() - 1);
        sol.eq_multipliers = VectorXd::Zero(all_rows);
        for (int kk = 0; kk < rows; ++kk) sol.eq_multipliers(live_rows[kept[kk]]) = st.mu(kk);
        // Eliminated rows get the multiplier that zeroes their variable's
        // stationarity row. A pin row never touches variables pinned after
        // it, so walking the pins backwards is an exact triangular solve.
        for (int k = static_cast<int>(pin_rows.size()) - 1; k >= 0; --k) {
            const int v = pin_vars[k];
            double rhs = prob.c(v);
            for (size_t bi = 0; bi < prob.blocks.size(); ++bi)
                rhs -= detail::sparse_trace_dot(prob.blocks[bi].coef[v],
                                                st.Y[static_cast<int>(bi)]);
            for (int r = 0; r < all_rows; ++r)
                if (r != pin_rows[k] && prob.A(r, v) != 0.0)
                    rhs -= prob.A(r, v) * sol.eq_multipliers(r);
            sol.eq_multipliers(pin_rows[k]) = rhs / prob.A(pin_rows[k], v);
        }
        sol.primal_value = prob.c.dot(sol.x) + prob.objective_constant;
        // The pair (x, Y) certifies the problem with the residual shift still
        // folded into the cone, so charge the dual value for it: subtracting
        // shift * tr(Y) restores weak duality against the primal value above
        // and stays a valid (slightly conservative) bound for the unshifted
        // problem, since relaxing the cone can only lower the minimum.
        double f0y = 0.0, ytr = 0.0;
        for (int bi = 0; bi + 1 < nb; ++bi) {
            f0y += (prob.blocks[bi].F0.array() * st.Y[bi].array()).sum();
            ytr += st.Y[bi].trace();
        }
        sol.dual_value =
            prob.b.dot(sol.eq_multipliers) - f0y - sol.shift * ytr + prob.objective_constant;
        sol.gap = std::abs(sol.primal_value - sol.dual_value) /
                  (1.0 + std::abs(sol.primal_value) + std::abs(sol.dual_value));

        if (!trouble.empty()) {
            sol.status = SolveStatus::numerical_trouble;
            sol.message = trouble;
        } else if (escalate) {
            sol.status = SolveStatus::numerical_trouble;
            sol.message = "feasibility shift diverged at every big-M weight";
        } else if (!converged) {
            sol.status = SolveStatus::max_iterations;
            sol.message = "iteration limit reached";
        } else if (sol.shift > 1e-5) {
            // A converged positive shift is either infeasibility or a big_m
            // that lost to the objective; only a shift that survives a 100x
            // weight raise certifies the former.
            const bool shrinking = prev_shift >= 0.0 && sol.shift <= 0.5 * prev_shift;
            if ((prev_shift < 0.0 || shrinking) && attempt < opts.big_m_escalations) {
                prev_shift = sol.shift;
                big_m *= 100.0;
                continue;
            }
            if (shrinking) {
                sol.status = SolveStatus::numerical_trouble;
                sol.message = "feasibility shift kept shrinking with big_m; raise big_m";
            } else {
                sol.status = SolveStatus::infeasible_detected;
                sol.message =
                    "feasibility shift stays positive (tau = " + std::to_string(sol.shift) + ")";
            }
        } else {
            sol.status = SolveStatus::optimal;
        }
        return sol;
    }
    return sol; // unreachable
}

/// Independent certificate check from problem data and a solution: primal
/// block eigenvalues, equality residual, dual PSD, stationarity, weak
/// duality. Does not rerun the solver.
struct CertificateReport {
    double min_eig_primal = 0.0;
    double eq_residual = 0.0;
    double min_eig_dual = 0.0;
    double stationarity = 0.0;
    double primal_value = 0.0;
    double dual_value = 0.0;
    double gap_abs = 0.0;
    bool ok = false;
};

inline CertificateReport verify_certificate(const SdpProblem& prob, const SdpSolution& sol,
                                            double feas_tol = 1e-6) {
    CertificateReport r;
    r.min_eig_primal = std::numeric_limits<double>::infinity();
    r.min_eig_dual = std::numeric_limits<double>::infinity();
    for (size_t bi = 0; bi < prob.blocks.size(); ++bi) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            prob.block_value(static_cast<int>(bi), sol.x), Eigen::EigenvaluesOnly);
        r.min_eig_primal = std::min(r.min_eig_primal, es.eigenvalues()(0));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ed(sol.dual_blocks[bi],
                                                          Eigen::EigenvaluesOnly);
        r.min_eig_dual = std::min(r.min_eig_dual, ed.eigenvalues()(0));
    }
    r.eq_residual = prob.b.size() > 0 ? (prob.A * sol.x - prob.b).cwiseAbs().maxCoeff() : 0.0;

    Eigen::VectorXd station = prob.c;
    if (prob.b.size() > 0) station -= prob.A.transpose() * sol.eq_multipliers;
    for (size_t bi = 0; bi < prob.blocks.size(); ++bi)
        for (int v = 0; v < prob.num_vars; ++v)
            station(v) -= detail::sparse_trace_dot(prob.blocks[bi].coef[v], sol.dual_blocks[bi]);
    r.stationarity = prob.num_vars > 0 ? station.cwiseAbs().maxCoeff() : 0.0;

    r.primal_value = prob.c.dot(sol.x) + prob.objective_constant;
    // Same shift charge as the solver's own dual value: the certificate holds
    // for the cone the iterate was actually solved in.
    double f0y = 0.0, ytr = 0.0;
    for (size_t bi = 0; bi < prob.blocks.size(); ++bi) {
        f0y += (prob.blocks[bi].F0.array() * sol.dual_blocks[bi].array()).sum();
        ytr += sol.dual_blocks[bi].trace();
    }
    r.dual_value =
        prob.b.dot(sol.eq_multipliers) - f0y - sol.shift * ytr + prob.objective_constant;
    r.gap_abs = std::abs(r.primal_value - r.dual_value);

    const double scale = 1.0 + std::abs(r.primal_value) + std::abs(r.dual_value);
    r.ok = r.min_eig_primal >= -(feas_tol + sol.shift) && r.eq_residual <= feas_tol * scale &&
           r.min_eig_dual >= -1e-8 * (1.0 + std::abs(r.min_eig_dual)) &&
           r.stationarity <= 1e-5 * (1.0 + prob.c.cwiseAbs().maxCoeff()) &&
           r.gap_abs <= 1e-4 * scale;
    return r;
}

/// Reads a permutation-invariant Bell inequality off the dual multipliers of
/// the behavior equalities: multipliers are summed per constraint family and
/// divided by the family's term count in the S_i / T_ij conventions
/// (singles: n, diagonal pairs: n(n-1)/2, off-diagonal: n(n-1)). The result
/// is normalized to a positive leading singles coefficient; only coefficient
/// ratios are meaningful.
inline BellCoefficients extract_dual_inequality(const SdpProblem& prob, const SdpSolution& sol,
                                                int num_parties, int num_meas) {
    BellCoefficients c;
    c.num_parties = num_parties;
    c.num_meas = num_meas;
    c.symmetry = BellCoefficients::Symmetry::permutation;
    c.singles.assign(num_meas, 0.0);
    c.pairs.assign(num_meas, std::vector<double>(num_meas, 0.0));

    for (size_t row = 0; row < prob.eq_labels.size(); ++row) {
        const std::string& label = prob.eq_labels[row];
        const double mu = sol.eq_multipliers(static_cast<int>(row));
        if (label.rfind("single:", 0) == 0) {
            const int m = std::stoi(label.substr(7));
            c.singles[m] += mu / num_parties;
        } else if (label.rfind("pair:", 0) == 0) {
            const auto colon = label.find(':', 5);
            const int i = std::stoi(label.substr(5, colon - 5));
            const int j = std::stoi(label.substr(colon + 1));
            const double family = (i == j) ? num_parties * (num_parties - 1) / 2.0
                                           : num_parties * (num_parties - 1.0);
            c.pairs[i][j] += mu / family;
        }
    }
    double lead = 0.0;
    for (double s : c.singles)
        if (std::abs(s) > std::abs(lead)) lead = s;
    if (lead < 0.0) {
        for (double& s : c.singles) s = -s;
        for (auto& rowv : c.pairs)
            for (double& v : rowv) v = -v;
    }
    return c;
}

} // namespace swapcert
