// solvers.hpp — Steady-state computation. Two independent routes: adaptive
// Runge-Kutta integration of d rho/dt = L[rho] to the residual criterion, and
// a trace-constrained sparse null-space solve of the vectorized Lindbladian.
// A uniqueness diagnostic estimates the k smallest-|lambda| Liouvillian
// eigenvalues (dense for small N, shift-invert Arnoldi otherwise).

#pragma once

#include <chrono>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "lindsteady/errors.hpp"
#include "lindsteady/lindblad.hpp"

namespace lindsteady {

enum class SteadyStateMethod { evolution, nullspace };

inline const char* to_string(SteadyStateMethod m) {
    return m == SteadyStateMethod::evolution ? "evolution" : "nullspace";
}

enum class InitialState { maximally_mixed, site_localized, custom };

struct EvolutionConfig {
    InitialState initial_state{InitialState::maximally_mixed};
    int localized_site{0};                        // 0-based, for site_localized
    std::optional<Eigen::MatrixXcd> custom_initial;
    double rel_tol{1e-8};
    double abs_tol{1e-10};
    double residual_tol{1e-9};
    double max_integration_time{1e6};
    int resymmetrize_every{100};

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(residual_tol > 0.0)) {
            throw ParameterError("EvolutionConfig: tolerances must be > 0");
        }
        if (!(max_integration_time > 0.0)) {
            throw ParameterError("EvolutionConfig: max_integration_time must be > 0");
        }
        if (resymmetrize_every < 1) {
            throw ParameterError("EvolutionConfig: resymmetrize_every must be >= 1");
        }
    }

    Eigen::MatrixXcd make_initial(int N) const {
        switch (initial_state) {
            case InitialState::maximally_mixed:
                return DensityMatrix::maximally_mixed(N).rho;
            case InitialState::site_localized:
                return DensityMatrix::site_localized(N, localized_site).rho;
            case InitialState::custom:
                if (!custom_initial || custom_initial->rows() != N ||
                    custom_initial->cols() != N) {
                    throw StructuralError("EvolutionConfig: custom initial state missing or wrong size");
                }
                return *custom_initial;
        }
        throw ParameterError("EvolutionConfig: unknown initial state");
    }
};

struct SteadyStateResult {
    DensityMatrix rho_ss;
    double residual{0.0};                 // ||L[rho_ss]||_F against the full generator
    SteadyStateMethod method{SteadyStateMethod::nullspace};
    long steps{0};                        // accepted steps (evolution) or matrix dim (nullspace)
    double min_eigenvalue_of_rho{0.0};
    double wall_time{0.0};                // seconds
    double max_trace_drift{0.0};          // max |Tr rho(t) - 1| along the trajectory
    std::vector<double> residual_tail;    // residuals at the last accepted steps, oldest first
};

// ------------------------------ Evolution solver -----------------------------

namespace detail {

// Dormand-Prince 5(4) tableau
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // error weights b_i - b*_i
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
    static constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
    static constexpr double e4 = 125.0 / 192 - 393.0 / 640;
    static constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
    static constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
    static constexpr double e7 = -1.0 / 40;
};

class ResidualTail {
public:
    explicit ResidualTail(size_t cap = 32) : cap_(cap) {}
    void push(double r) {
        buf_.push_back(r);
        if (buf_.size() > cap_) buf_.erase(buf_.begin());
    }
    const std::vector<double>& values() const { return buf_; }

private:
    size_t cap_;
    std::vector<double> buf_;
};

} // namespace detail

inline SteadyStateResult steady_state_by_evolution(const LindbladGenerator& gen,
                                                   const EvolutionConfig& cfg) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    const int N = gen.dim();
    using Mat = Eigen::MatrixXcd;
    using D = detail::Dopri5;

    Mat rho = cfg.make_initial(N);
    Mat k1 = gen.apply(rho);
    double residual = k1.norm();

    double t = 0.0;
    double h = 1e-3;
    // initial step from the magnitude of the first derivative
    if (residual > 0.0) h = std::min(0.1, 0.01 * std::max(1.0, rho.norm()) / residual);

    long accepted = 0;
    int since_resym = 0;
    double max_trace_drift = std::abs(rho.trace().real() - 1.0);
    detail::ResidualTail tail;
    tail.push(residual);

    Mat k2(N, N), k3(N, N), k4(N, N), k5(N, N), k6(N, N), k7(N, N), rho_new(N, N), err(N, N);

    while (residual > cfg.residual_tol) {
        if (t >= cfg.max_integration_time) {
            throw SlowGapError("steady_state_by_evolution: residual " + detail::sci(residual) +
                                   " above tolerance at t = " + detail::sci(t),
                               residual);
        }
        h = std::min(h, cfg.max_integration_time - t);

        k2 = gen.apply(rho + h * (D::a21 * k1));
        k3 = gen.apply(rho + h * (D::a31 * k1 + D::a32 * k2));
        k4 = gen.apply(rho + h * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3));
        k5 = gen.apply(rho + h * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4));
        k6 = gen.apply(rho + h * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 +
                                  D::a65 * k5));
        rho_new = rho + h * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
        k7 = gen.apply(rho_new);   // FSAL stage

        err = h * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 + D::e6 * k6 + D::e7 * k7);
        // Tighten the step-error budget as the residual target nears, else the
        // per-step truncation error floors the achievable ||L[rho]||.
        double scale = cfg.abs_tol + cfg.rel_tol * std::max(rho.norm(), rho_new.norm());
        scale = std::min(scale, std::max(0.05 * residual, 0.02 * cfg.residual_tol));
        const double err_norm = err.norm() / scale;

        if (err_norm <= 1.0) {
            t += h;
            rho.swap(rho_new);
            k1.swap(k7);
            ++accepted;
            ++since_resym;
            max_trace_drift = std::max(max_trace_drift, std::abs(rho.trace().real() - 1.0));
            if (since_resym >= cfg.resymmetrize_every) {
                rho = 0.5 * (rho + rho.adjoint()).eval();
                rho /= rho.trace().real();
                k1 = gen.apply(rho);
                since_resym = 0;
            }
            residual = k1.norm();
            tail.push(residual);
        }

        const double grow = err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
        h *= std::clamp(grow, 0.2, 5.0);
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw SlowGapError("steady_state_by_evolution: step size underflow", residual);
        }
    }

    Mat rho_sym = 0.5 * (rho + rho.adjoint());
    rho_sym /= rho_sym.trace().real();

    SteadyStateResult out;
    out.rho_ss = DensityMatrix::from_matrix(rho_sym);
    out.residual = gen.apply(rho_sym).norm();
    out.method = SteadyStateMethod::evolution;
    out.steps = accepted;
    out.min_eigenvalue_of_rho = out.rho_ss.min_eigenvalue();
    out.max_trace_drift = max_trace_drift;
    out.residual_tail = tail.values();
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

// ------------------------------ Null-space solver -----------------------------

// Solve L x = 0 with Tr rho = 1 by replacing the row of L whose diagonal entry
// has the smallest magnitude with vec(I)† and setting that entry of the right
// hand side to 1. The replaced system is square and nonsingular whenever the
// steady state is unique.
inline SteadyStateResult steady_state_by_nullspace(const SuperoperatorMatrix& superop) {
    const auto t_start = std::chrono::steady_clock::now();
    const int N = superop.N;
    const auto NN = static_cast<Eigen::Index>(N) * N;
    if (superop.L.rows() != NN) throw StructuralError("steady_state_by_nullspace: bad superoperator");

    // Row with the smallest-|diagonal| entry
    Eigen::Index replace_row = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < NN; ++i) {
        const double d = std::abs(superop.L.coeff(i, i));
        if (d < best) {
            best = d;
            replace_row = i;
        }
    }

    // Rebuild with the replaced row; vec(I)† has ones at the diagonal positions
    std::vector<Eigen::Triplet<complexd>> trip;
    trip.reserve(static_cast<size_t>(superop.L.nonZeros()) + static_cast<size_t>(N));
    for (int col = 0; col < superop.L.outerSize(); ++col) {
        for (SparseCd::InnerIterator it(superop.L, col); it; ++it) {
            if (it.row() == replace_row) continue;
            trip.emplace_back(it.row(), it.col(), it.value());
        }
    }
    for (int j = 0; j < N; ++j) {
        trip.emplace_back(replace_row, static_cast<Eigen::Index>(j) * (N + 1), complexd(1.0, 0.0));
    }
    SparseCd A(NN, NN);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();

    Eigen::SparseLU<SparseCd> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) {
        throw DegeneracyError("steady_state_by_nullspace: constrained system is singular; "
                              "steady-state manifold may be degenerate (see check_uniqueness)");
    }
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(NN);
    b(replace_row) = 1.0;
    Eigen::VectorXcd x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite()) {
        throw DegeneracyError("steady_state_by_nullspace: solve failed; "
                              "steady-state manifold may be degenerate (see check_uniqueness)");
    }

    Eigen::MatrixXcd rho = devectorize(x);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const double tr = rho.trace().real();
    if (!std::isfinite(tr) || std::abs(tr) < 1e-12) {
        throw DegeneracyError("steady_state_by_nullspace: degenerate trace normalization");
    }
    rho /= tr;

    SteadyStateResult out;
    out.rho_ss = DensityMatrix::from_matrix(rho);
    out.residual = (superop.L * vectorize(rho)).norm();   // residual against the original L
    out.method = SteadyStateMethod::nullspace;
    out.steps = NN;
    out.min_eigenvalue_of_rho = out.rho_ss.min_eigenvalue();
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

// Convenience: build the superoperator and solve
inline SteadyStateResult steady_state_by_nullspace(const LindbladGenerator& gen) {
    return steady_state_by_nullspace(assemble_superoperator(gen));
}

// ---------------------------- Uniqueness diagnostic ---------------------------

struct UniquenessReport {
    std::vector<complexd> eigenvalues;   // k smallest |lambda|, sorted by magnitude
    double gap{0.0};                     // |lambda_1| - |lambda_0|
    bool unique{false};                  // |l0| <= 1e-9 and |l1| >= 10 |l0| + 1e-9
};

namespace detail {

// Shift-invert Arnoldi around a small positive real shift. The Lindblad
// spectrum lies in the closed left half-plane, so sigma > 0 is never an
// eigenvalue and (L - sigma I) is safely invertible.
inline std::vector<complexd> arnoldi_smallest(const SparseCd& L, int k, double sigma) {
    const Eigen::Index n = L.rows();
    SparseCd A = L;
    for (Eigen::Index i = 0; i < n; ++i) A.coeffRef(i, i) -= complexd(sigma, 0.0);
    A.makeCompressed();

    Eigen::SparseLU<SparseCd> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
        throw EigensolverError("check_uniqueness: shift-invert factorization failed");
    }

    const int m = std::min<Eigen::Index>(n, std::max(40, 6 * k));
    Eigen::MatrixXcd V(n, m + 1);
    Eigen::MatrixXcd Hm = Eigen::MatrixXcd::Zero(m + 1, m);

    // Deterministic start vector: vec(I) normalized (overlaps the null space)
    Eigen::VectorXcd v0 = Eigen::VectorXcd::Zero(n);
    const auto N = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
    for (Eigen::Index j = 0; j < N; ++j) v0(j * (N + 1)) = 1.0;
    v0.normalize();
    V.col(0) = v0;

    int built = 0;
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXcd w = lu.solve(V.col(j));
        if (lu.info() != Eigen::Success || !w.allFinite()) {
            throw EigensolverError("check_uniqueness: shift-invert solve failed");
        }
        for (int i = 0; i <= j; ++i) {          // modified Gram-Schmidt, one refinement pass
            const complexd hij = V.col(i).dot(w);
            Hm(i, j) += hij;
            w -= hij * V.col(i);
        }
        for (int i = 0; i <= j; ++i) {
            const complexd corr = V.col(i).dot(w);
            Hm(i, j) += corr;
            w -= corr * V.col(i);
        }
        const double beta = w.norm();
        Hm(j + 1, j) = beta;
        built = j + 1;
        if (beta < 1e-13) break;               // invariant subspace found
        V.col(j + 1) = w / beta;
    }

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Hm.topLeftCorner(built, built));
    if (es.info() != Eigen::Success) {
        throw EigensolverError("check_uniqueness: Hessenberg eigensolve failed");
    }
    std::vector<complexd> mu(es.eigenvalues().data(), es.eigenvalues().data() + built);
    std::vector<complexd> lambda;
    lambda.reserve(mu.size());
    for (const complexd& m_i : mu) {
        if (std::abs(m_i) < 1e-300) continue;  // spurious
        lambda.push_back(complexd(sigma, 0.0) + 1.0 / m_i);
    }
    std::sort(lambda.begin(), lambda.end(),
              [](const complexd& a, const complexd& b) { return std::abs(a) < std::abs(b); });
    if (static_cast<int>(lambda.size()) > k) lambda.resize(static_cast<size_t>(k));
    return lambda;
}

} // namespace detail

inline UniquenessReport check_uniqueness(const SuperoperatorMatrix& superop, int k = 4) {
    if (k < 2) throw ParameterError("check_uniqueness: k must be >= 2");
    const Eigen::Index n = superop.L.rows();
    std::vector<complexd> lam;
    if (n <= 1100) {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(superop.L));
        if (es.info() != Eigen::Success) {
            throw EigensolverError("check_uniqueness: dense eigensolve failed");
        }
        lam.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
        std::sort(lam.begin(), lam.end(),
                  [](const complexd& a, const complexd& b) { return std::abs(a) < std::abs(b); });
        if (static_cast<Eigen::Index>(k) < n) lam.resize(static_cast<size_t>(k));
    } else {
        lam = detail::arnoldi_smallest(superop.L, k, 1e-4);
    }
    UniquenessReport report;
    report.eigenvalues = lam;
    if (lam.size() >= 2) {
        const double l0 = std::abs(lam[0]);
        const double l1 = std::abs(lam[1]);
        report.gap = l1 - l0;
        report.unique = l0 <= 1e-9 && l1 >= 10.0 * l0 + 1e-9;
    }
    return report;
}

// ------------------------------ Method dispatch -------------------------------

inline SteadyStateResult solve_steady_state(const LindbladGenerator& gen, SteadyStateMethod method,
                                            const EvolutionConfig& cfg = {}) {
    if (method == SteadyStateMethod::evolution) return steady_state_by_evolution(gen, cfg);
    return steady_state_by_nullspace(gen);
}

} // namespace lindsteady
