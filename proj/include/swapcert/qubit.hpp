#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "swapcert/bell.hpp"
#include "swapcert/polynomial.hpp"

namespace swapcert {

using Matrix2c = Eigen::Matrix2cd;
using complexd = std::complex<double>;

inline Matrix2c pauli_z() {
    Matrix2c m;
    m << 1, 0, 0, -1;
    return m;
}

inline Matrix2c pauli_x() {
    Matrix2c m;
    m << 0, 1, 1, 0;
    return m;
}

/// cos(theta) sigma_z + sin(theta) sigma_x: the general real dichotomic qubit
/// observable in the ZX plane.
inline Matrix2c obs_angle(double theta) {
    return std::cos(theta) * pauli_z() + std::sin(theta) * pauli_x();
}

/// (sigma_z + sigma_x)/sqrt(2), the diagonal observable.
inline Matrix2c obs_diag() { return obs_angle(M_PI / 4.0); }

inline bool is_involution(const Matrix2c& o, double tol = 1e-9) {
    return (o * o - Matrix2c::Identity()).norm() <= tol &&
           (o - o.adjoint()).norm() <= tol;
}

/// Pure n-qubit state. Basis index convention: party 0 owns the most
/// significant bit, so |001> on three parties is index 1.
struct PureState {
    int parties = 0;
    Eigen::VectorXcd amp;

    PureState() = default;
    PureState(int n, Eigen::VectorXcd a) : parties(n), amp(std::move(a)) {
        if (amp.size() != (1L << parties))
            throw std::invalid_argument("PureState: amplitude count != 2^parties");
        if (std::abs(amp.norm() - 1.0) > 1e-12)
            throw std::invalid_argument("PureState: not normalized");
    }

    static int bit_of(long index, int party, int parties) {
        return static_cast<int>((index >> (parties - 1 - party)) & 1);
    }
};

/// |W_n> = (|0..01> + |0..10> + ... + |10..0>)/sqrt(n).
inline PureState make_w_state(int n) {
    if (n < 2) throw std::invalid_argument("make_w_state: need at least 2 parties");
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(1L << n);
    for (int p = 0; p < n; ++p) a[1L << p] = 1.0 / std::sqrt(static_cast<double>(n));
    return PureState(n, a);
}

/// |psi_lambda> = (|100> + |010> + lambda |001>)/sqrt(2 + lambda^2); the
/// weighted amplitude sits on party C's excitation. lambda = 1 gives exactly
/// the three-party W state.
inline PureState make_psi_lambda(double lambda) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("make_psi_lambda: lambda must be positive");
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(8);
    const double norm = std::sqrt(2.0 + lambda * lambda);
    a[4] = 1.0 / norm;       // |100>
    a[2] = 1.0 / norm;       // |010>
    a[1] = lambda / norm;    // |001>
    return PureState(3, a);
}

/// Measurement matrices per party: realization[p][i] realizes letter (p, i).
struct QubitRealization {
    std::vector<std::vector<Matrix2c>> ops;

    int parties() const { return static_cast<int>(ops.size()); }

    const Matrix2c& at(const Letter& l) const {
        if (l.party < 0 || l.party >= parties() ||
            l.meas < 0 || l.meas >= static_cast<int>(ops[l.party].size()))
            throw std::invalid_argument("QubitRealization: letter outside realization");
        return ops[l.party][l.meas];
    }

    void require_involutions(double tol = 1e-9) const {
        for (const auto& party : ops)
            for (const auto& o : party)
                if (!is_involution(o, tol))
                    throw std::invalid_argument("QubitRealization: operator is not a Hermitian involution");
    }
};

/// Z, X, D on every party.
inline QubitRealization ideal_zxd_realization(int parties) {
    QubitRealization r;
    r.ops.assign(parties, {pauli_z(), pauli_x(), obs_diag()});
    return r;
}

/// Same angles (theta_0, theta_1) on every party plus, as measurement 2, the
/// unit observable orthogonal to M_1 in the ZX plane:
///   M_2 = -sin(theta_1) sigma_z + cos(theta_1) sigma_x
///       = (M_0 - cos(theta_0 - theta_1) M_1)/sin(theta_0 - theta_1).
inline QubitRealization chain_realization(int parties, double theta0, double theta1) {
    Matrix2c m2 = -std::sin(theta1) * pauli_z() + std::cos(theta1) * pauli_x();
    QubitRealization r;
    r.ops.assign(parties, {obs_angle(theta0), obs_angle(theta1), m2});
    return r;
}

namespace detail {

/// Applies a 2x2 operator to one qubit of a state vector over `total` qubits;
/// qubit 0 is the most significant bit.
inline void apply_single(Eigen::VectorXcd& v, int total, int qubit, const Matrix2c& u) {
    const long mask = 1L << (total - 1 - qubit);
    for (long i = 0; i < v.size(); ++i) {
        if (i & mask) continue;
        const complexd a0 = v[i], a1 = v[i | mask];
        v[i] = u(0, 0) * a0 + u(0, 1) * a1;
        v[i | mask] = u(1, 0) * a0 + u(1, 1) * a1;
    }
}

/// Applies u to `target` on the subspace where `control` is |1>.
inline void apply_controlled(Eigen::VectorXcd& v, int total, int control, int target,
                             const Matrix2c& u) {
    const long cmask = 1L << (total - 1 - control);
    const long tmask = 1L << (total - 1 - target);
    for (long i = 0; i < v.size(); ++i) {
        if (!(i & cmask) || (i & tmask)) continue;
        const complexd a0 = v[i], a1 = v[i | tmask];
        v[i] = u(0, 0) * a0 + u(0, 1) * a1;
        v[i | tmask] = u(1, 0) * a0 + u(1, 1) * a1;
    }
}

} // namespace detail

/// <psi| (word realized as a matrix product) |psi>, applying letters right to
/// left without forming the 2^n x 2^n product.
inline complexd correlator_complex(const PureState& state, const Monomial& word,
                                   const QubitRealization& realization) {
    Eigen::VectorXcd v = state.amp;
    const auto& letters = word.letters();
    for (auto it = letters.rbegin(); it != letters.rend(); ++it)
        detail::apply_single(v, state.parties, it->party, realization.at(*it));
    return state.amp.dot(v); // Eigen's dot conjugates the left argument
}

/// Real correlator of a single assignment (at most one observable per party;
/// -1 marks identity). Asserts the imaginary part is negligible, which holds
/// for the real-symmetric observables used throughout.
inline double correlator(const PureState& state, const std::vector<int>& assignment,
                         const QubitRealization& realization) {
    if (static_cast<int>(assignment.size()) != state.parties)
        throw std::invalid_argument("correlator: assignment size != parties");
    std::vector<Letter> letters;
    for (int p = 0; p < state.parties; ++p)
        if (assignment[p] >= 0)
            letters.push_back(Letter{static_cast<std::int8_t>(p),
                                     static_cast<std::int8_t>(assignment[p])});
    complexd c = correlator_complex(state, Monomial::from_letters(std::move(letters)), realization);
    if (std::abs(c.imag()) > 1e-9)
        throw std::logic_error("correlator: unexpectedly complex expectation");
    return c.real();
}

/// Evaluates an operator polynomial on a state under a realization.
template <typename Scalar>
complexd evaluate_poly(const OperatorPolynomial<Scalar>& poly, const PureState& state,
                       const QubitRealization& realization) {
    complexd total = 0.0;
    for (const auto& [mono, coef] : poly.terms())
        total += scalar_to_double(coef) * correlator_complex(state, mono, realization);
    return total;
}

/// Reference simulation of the extraction circuit: one ancilla per party
/// prepared in |0>, then per party H, controlled-Z_p, H, controlled-X_p with
/// the ancilla as control. Returns <target| rho_anc |target> where rho_anc is
/// the reduced state of the ancillas. Operators must be Hermitian involutions.
inline double swap_circuit_reference(const PureState& state,
                                     const std::vector<Matrix2c>& z_ops,
                                     const std::vector<Matrix2c>& x_ops,
                                     const PureState& target) {
    const int n = state.parties;
    if (static_cast<int>(z_ops.size()) != n || static_cast<int>(x_ops.size()) != n)
        throw std::invalid_argument("swap_circuit_reference: operator count != parties");
    if (target.parties != n)
        throw std::invalid_argument("swap_circuit_reference: target party count mismatch");
    for (int p = 0; p < n; ++p)
        if (!is_involution(z_ops[p]) || !is_involution(x_ops[p]))
            throw std::invalid_argument("swap_circuit_reference: non-involutive operator");

    const int total = 2 * n; // system qubits 0..n-1, ancilla qubits n..2n-1
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1L << total);
    const long anc_dim = 1L << n;
    for (long s = 0; s < state.amp.size(); ++s) v[s * anc_dim] = state.amp[s];

    Matrix2c h;
    h << 1, 1, 1, -1;
    h /= std::sqrt(2.0);
    for (int p = 0; p < n; ++p) {
        detail::apply_single(v, total, n + p, h);
        detail::apply_controlled(v, total, n + p, p, z_ops[p]);
        detail::apply_single(v, total, n + p, h);
        detail::apply_controlled(v, total, n + p, p, x_ops[p]);
    }

    double fidelity = 0.0;
    for (long s = 0; s < (1L << n); ++s) {
        complexd overlap = 0.0;
        for (long a = 0; a < anc_dim; ++a)
            overlap += std::conj(target.amp[a]) * v[s * anc_dim + a];
        fidelity += std::norm(overlap);
    }
    return fidelity;
}

/// The state the extraction circuit would place on the ancillas if the
/// isometry were exact: per party w_p = |0><z+| + s_p |1><z-| with
/// s_p = <z+|x|z-|>, applied to the input state. Exact when each (z, x) pair
/// anticommutes; the result is normalized and that is checked.
inline PureState swap_frame_target(const PureState& state,
                                   const std::vector<Matrix2c>& z_ops,
                                   const std::vector<Matrix2c>& x_ops) {
    const int n = state.parties;
    Eigen::VectorXcd v = state.amp;
    for (int p = 0; p < n; ++p) {
        Eigen::SelfAdjointEigenSolver<Matrix2c> es(z_ops[p]);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("swap_frame_target: eigensolver failure");
        const Eigen::Vector2cd zminus = es.eigenvectors().col(0); // eigenvalue -1
        const Eigen::Vector2cd zplus = es.eigenvectors().col(1);  // eigenvalue +1
        const complexd s = zplus.dot(x_ops[p] * zminus);
        Matrix2c w;
        w.row(0) = zplus.adjoint();
        w.row(1) = s * zminus.adjoint();
        detail::apply_single(v, n, p, w);
    }
    const double nv = v.norm();
    if (std::abs(nv - 1.0) > 1e-9)
        throw std::invalid_argument("swap_frame_target: z/x pair does not anticommute");
    return PureState(n, v / nv);
}

/// Dense Bell operator with the same two angles on every party.
inline Eigen::MatrixXcd bell_operator(const BellCoefficients& coeffs, double theta0,
                                      double theta1) {
    QubitRealization r;
    r.ops.assign(coeffs.num_parties, {obs_angle(theta0), obs_angle(theta1)});
    const long dim = 1L << coeffs.num_parties;
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(dim, dim);
    const RealPolynomial poly = bell_polynomial(coeffs);
    for (const auto& [mono, coef] : poly.terms()) {
        Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(dim, dim);
        // Column c of the realized word: apply letters right-to-left to e_c.
        for (long c = 0; c < dim; ++c) {
            Eigen::VectorXcd col = Eigen::VectorXcd::Zero(dim);
            col[c] = 1.0;
            const auto& letters = mono.letters();
            for (auto it = letters.rbegin(); it != letters.rend(); ++it)
                detail::apply_single(col, coeffs.num_parties, it->party, r.at(*it));
            term.col(c) = col;
        }
        b += coef * term;
    }
    return b;
}

struct BellOptimum {
    double value = 0.0;
    double theta0 = 0.0;
    double theta1 = 0.0;
    bool degenerate_top = false;   // top eigenvalue gap below 1e-9
    double lift_gain = 0.0;        // improvement from per-party angles, if probed
    double local_bound = 0.0;
};

namespace detail {

/// Deterministic Nelder-Mead minimization. Returns the best vertex.
inline Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                   Eigen::VectorXd start, double scale, double tol,
                                   int max_iters = 2000) {
    const int dim = static_cast<int>(start.size());
    std::vector<Eigen::VectorXd> xs(dim + 1, start);
    for (int i = 0; i < dim; ++i) xs[i + 1][i] += scale;
    std::vector<double> fs(dim + 1);
    for (int i = 0; i <= dim; ++i) fs[i] = f(xs[i]);

    for (int iter = 0; iter < max_iters; ++iter) {
        std::vector<int> order(dim + 1);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return fs[a] < fs[b]; });
        std::vector<Eigen::VectorXd> xs2(dim + 1);
        std::vector<double> fs2(dim + 1);
        for (int i = 0; i <= dim; ++i) { xs2[i] = xs[order[i]]; fs2[i] = fs[order[i]]; }
        xs.swap(xs2);
        fs.swap(fs2);

        double spread = 0.0;
        for (int i = 1; i <= dim; ++i) spread = std::max(spread, (xs[i] - xs[0]).norm());
        if (spread < tol && std::abs(fs[dim] - fs[0]) < tol) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (int i = 0; i < dim; ++i) centroid += xs[i];
        centroid /= dim;

        const Eigen::VectorXd xr = centroid + (centroid - xs[dim]);
        const double fr = f(xr);
        if (fr < fs[0]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[dim]);
            const double fe = f(xe);
            if (fe < fr) { xs[dim] = xe; fs[dim] = fe; }
            else { xs[dim] = xr; fs[dim] = fr; }
        } else if (fr < fs[dim - 1]) {
            xs[dim] = xr;
            fs[dim] = fr;
        } else {
            const Eigen::VectorXd xc = centroid + 0.5 * (xs[dim] - centroid);
            const double fc = f(xc);
            if (fc < fs[dim]) { xs[dim] = xc; fs[dim] = fc; }
            else {
                for (int i = 1; i <= dim; ++i) {
                    xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
                    fs[i] = f(xs[i]);
                }
            }
        }
    }
    int best = 0;
    for (int i = 1; i <= dim; ++i)
        if (fs[i] < fs[best]) best = i;
    return xs[best];
}

inline double bell_eigmax(const BellCoefficients& coeffs, double t0, double t1) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bell_operator(coeffs, t0, t1));
    return es.eigenvalues().maxCoeff();
}

inline double bell_eigmax_per_party(const BellCoefficients& coeffs,
                                    const Eigen::VectorXd& angles) {
    QubitRealization r;
    r.ops.resize(coeffs.num_parties);
    for (int p = 0; p < coeffs.num_parties; ++p)
        r.ops[p] = {obs_angle(angles[2 * p]), obs_angle(angles[2 * p + 1])};
    const long dim = 1L << coeffs.num_parties;
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(dim, dim);
    const RealPolynomial poly = bell_polynomial(coeffs);
    for (const auto& [mono, coef] : poly.terms()) {
        for (long c = 0; c < dim; ++c) {
            Eigen::VectorXcd col = Eigen::VectorXcd::Zero(dim);
            col[c] = 1.0;
            const auto& letters = mono.letters();
            for (auto it = letters.rbegin(); it != letters.rend(); ++it)
                apply_single(col, coeffs.num_parties, it->party, r.at(*it));
            b.col(c) += coef * col;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(b);
    return es.eigenvalues().maxCoeff();
}

} // namespace detail

namespace detail {

/// Signed gap between the first and last amplitude of the phase-fixed top
/// eigenvector at angles (delta + phi, phi).
inline double gauge_end_gap(const BellCoefficients& coeffs, double delta, double phi,
                            double* ends_min = nullptr) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        bell_operator(coeffs, delta + phi, phi));
    Eigen::VectorXcd v = es.eigenvectors().col(es.eigenvalues().size() - 1);
    long imax = 0;
    for (long i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
    v *= std::abs(v[imax]) / v[imax];
    const double a0 = v[0].real(), a1 = v[v.size() - 1].real();
    if (ends_min) *ends_min = std::min(a0, a1);
    return a0 - a1;
}

} // namespace detail

/// Largest quantum value of the Bell expression over shared ZX-plane angles.
/// Conjugating every party by the same plane rotation shifts both angles
/// equally while preserving the spectrum, so the value depends only on
/// theta0 - theta1; that difference is optimized on a grid plus
/// derivative-free refinement. The leftover shared rotation is pinned the
/// way the reference angles are quoted: the phase-fixed top eigenvector
/// carries equal positive amplitude on |0..0> and |1..1>. When no such gauge
/// exists the fallback is theta1 = 0 with theta0 <= 0. Setting
/// `probe_per_party_lift` rechecks the optimum against independent per-party
/// angles and records the gain.
inline BellOptimum maximize_violation(const BellCoefficients& coeffs,
                                      bool probe_per_party_lift = true) {
    if (coeffs.is_zero())
        throw std::invalid_argument("maximize_violation: zero Bell expression");

    const int grid = 720;
    double best = -1e300, bdelta = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double d = -M_PI + 2.0 * M_PI * (i + 0.5) / grid;
        const double v = detail::bell_eigmax(coeffs, d, 0.0);
        if (v > best) { best = v; bdelta = d; }
    }
    Eigen::VectorXd start(1);
    start << bdelta;
    const auto neg = [&](const Eigen::VectorXd& x) {
        return -detail::bell_eigmax(coeffs, x[0], 0.0);
    };
    double delta = detail::nelder_mead(neg, start, 0.01, 1e-10)[0];
    // Global spin flip about z negates both angles and keeps the spectrum, so
    // the difference can be taken nonpositive.
    if (delta > 0.0) delta = -delta;

    // Gauge fixing: scan the window keeping both angles in [-pi/2, pi/2] for
    // a sign change of the end-amplitude gap with positive ends, and bisect.
    const double lo = std::max(-M_PI_2, -M_PI_2 - delta);
    const double hi = std::min(M_PI_2, M_PI_2 - delta);
    bool fixed = false;
    double phi_fix = 0.0;
    const int scan = 720;
    double prev_gap = detail::gauge_end_gap(coeffs, delta, lo);
    for (int i = 1; i <= scan && !fixed; ++i) {
        const double phi = lo + (hi - lo) * i / scan;
        const double gap = detail::gauge_end_gap(coeffs, delta, phi);
        if (prev_gap == 0.0 || gap * prev_gap < 0.0) {
            double a = lo + (hi - lo) * (i - 1) / scan, b = phi;
            double ga = prev_gap;
            for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
                const double m = 0.5 * (a + b);
                const double gm = detail::gauge_end_gap(coeffs, delta, m);
                if (gm == 0.0 || gm * ga < 0.0) b = m;
                else { a = m; ga = gm; }
            }
            const double root = 0.5 * (a + b);
            double ends_min = 0.0;
            const double residual = detail::gauge_end_gap(coeffs, delta, root, &ends_min);
            // A genuine root (not a phase-convention jump) with positive ends.
            if (std::abs(residual) < 1e-6 && ends_min > 1e-6) {
                phi_fix = root;
                fixed = true;
            }
        }
        prev_gap = gap;
    }

    BellOptimum out;
    if (fixed) {
        out.theta0 = delta + phi_fix;
        out.theta1 = phi_fix;
    } else {
        out.theta0 = delta;
        out.theta1 = 0.0;
        if (out.theta0 > 0.0) { out.theta0 = -out.theta0; out.theta1 = -out.theta1; }
    }
    out.value = detail::bell_eigmax(coeffs, out.theta0, out.theta1);
    out.local_bound = bell_local_bound(coeffs);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        bell_operator(coeffs, out.theta0, out.theta1));
    const auto& ev = es.eigenvalues();
    out.degenerate_top = (ev[ev.size() - 1] - ev[ev.size() - 2]) < 1e-9;

    if (probe_per_party_lift) {
        Eigen::VectorXd full(2 * coeffs.num_parties);
        for (int p = 0; p < coeffs.num_parties; ++p) {
            full[2 * p] = out.theta0;
            full[2 * p + 1] = out.theta1;
        }
        const auto neg6 = [&](const Eigen::VectorXd& x) {
            return -detail::bell_eigmax_per_party(coeffs, x);
        };
        Eigen::VectorXd lifted = detail::nelder_mead(neg6, full, 0.02, 1e-9);
        out.lift_gain = std::max(0.0, detail::bell_eigmax_per_party(coeffs, lifted) - out.value);
    }
    return out;
}

/// Top eigenvector of the Bell operator at the given angles. The sign is
/// fixed by making the largest-magnitude amplitude positive; `degenerate`
/// reports a top eigenvalue gap under 1e-9.
inline PureState make_bell_eigenstate(const BellCoefficients& coeffs, double theta0,
                                      double theta1, bool* degenerate = nullptr) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bell_operator(coeffs, theta0, theta1));
    const long dim = es.eigenvalues().size();
    if (degenerate)
        *degenerate = (es.eigenvalues()[dim - 1] - es.eigenvalues()[dim - 2]) < 1e-9;
    Eigen::VectorXcd v = es.eigenvectors().col(dim - 1);
    long imax = 0;
    for (long i = 1; i < dim; ++i)
        if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
    v *= std::abs(v[imax]) / v[imax];
    return PureState(coeffs.num_parties, v / v.norm());
}

} // namespace swapcert
