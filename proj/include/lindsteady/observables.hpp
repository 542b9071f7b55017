// observables.hpp — Hamiltonian eigenbasis (momentum or real-symmetric gauge),
// transforms of the state into it, and the steady-state measures: relative
// entropy of coherence, purity, participation ratio, and basis populations.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lindsteady/errors.hpp"
#include "lindsteady/lindblad.hpp"
#include "lindsteady/model.hpp"

namespace lindsteady {

enum class Gauge { momentum, real_symmetric };

inline const char* to_string(Gauge g) {
    return g == Gauge::momentum ? "momentum" : "real_symmetric";
}

enum class LogBase { e, two };

inline const char* to_string(LogBase b) { return b == LogBase::e ? "e" : "2"; }

// -------------------------------- Eigenbasis ---------------------------------

struct EigenBasis {
    Eigen::VectorXd energies;   // ascending
    Eigen::MatrixXcd vectors;   // orthonormal columns, column p = |p>
    Gauge gauge{Gauge::momentum};

    int dim() const { return static_cast<int>(energies.size()); }
};

namespace detail {

// Deterministic numerical gauge: order degenerate vectors by the index of
// their largest-magnitude component, and rotate the global phase so that
// component is positive real.
inline void fix_numerical_gauge(Eigen::VectorXd& energies, Eigen::MatrixXcd& vectors) {
    const int N = static_cast<int>(energies.size());
    std::vector<int> order(static_cast<size_t>(N));
    std::vector<Eigen::Index> peak(static_cast<size_t>(N));
    for (int p = 0; p < N; ++p) {
        order[static_cast<size_t>(p)] = p;
        Eigen::Index arg = 0;
        vectors.col(p).cwiseAbs().maxCoeff(&arg);
        peak[static_cast<size_t>(p)] = arg;
    }
    const double degeneracy_tol = 1e-9;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (energies(a) < energies(b) - degeneracy_tol) return true;
        if (energies(b) < energies(a) - degeneracy_tol) return false;
        return peak[static_cast<size_t>(a)] < peak[static_cast<size_t>(b)];
    });
    Eigen::VectorXd e2(N);
    Eigen::MatrixXcd v2(N, N);
    for (int p = 0; p < N; ++p) {
        const int src = order[static_cast<size_t>(p)];
        e2(p) = energies(src);
        Eigen::VectorXcd col = vectors.col(src);
        const complexd top = col(peak[static_cast<size_t>(src)]);
        if (std::abs(top) > 0.0) col *= std::conj(top) / std::abs(top);
        v2.col(p) = col;
    }
    energies = e2;
    vectors = v2;
}

} // namespace detail

// Momentum gauge: plane waves <n|k_m> = e^{i k_m n} / sqrt(N) at site n = 1..N,
// ordered by (energy, k). Requires periodic boundary. The real_symmetric gauge
// diagonalizes H numerically with a deterministic ordering inside degenerate
// subspaces.
inline EigenBasis eigenbasis(const LatticeSpec& spec, Gauge gauge) {
    spec.validate();
    EigenBasis basis;
    basis.gauge = gauge;
    const int N = spec.N;
    if (gauge == Gauge::momentum) {
        if (spec.boundary != Boundary::periodic) {
            throw ParameterError("eigenbasis: momentum gauge requires periodic boundary");
        }
        const auto levels = momentum_levels(spec);
        basis.energies.resize(N);
        basis.vectors.resize(N, N);
        const double norm = 1.0 / std::sqrt(static_cast<double>(N));
        for (int p = 0; p < N; ++p) {
            basis.energies(p) = levels[static_cast<size_t>(p)].energy;
            const double k = levels[static_cast<size_t>(p)].k;
            for (int n = 0; n < N; ++n) {
                basis.vectors(n, p) = std::polar(norm, k * (n + 1));
            }
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(build_hamiltonian(spec));
        if (es.info() != Eigen::Success) {
            throw EigensolverError("eigenbasis: dense eigensolver failed");
        }
        basis.energies = es.eigenvalues();
        basis.vectors = es.eigenvectors().cast<complexd>();
        detail::fix_numerical_gauge(basis.energies, basis.vectors);
    }
    return basis;
}

// rho_pq = <p| rho |q>
inline Eigen::MatrixXcd to_eigenbasis(const Eigen::MatrixXcd& rho, const EigenBasis& basis) {
    if (rho.rows() != basis.dim() || rho.cols() != basis.dim()) {
        throw StructuralError("to_eigenbasis: dimension mismatch");
    }
    return basis.vectors.adjoint() * rho * basis.vectors;
}

inline Eigen::MatrixXcd from_eigenbasis(const Eigen::MatrixXcd& rho_pq, const EigenBasis& basis) {
    if (rho_pq.rows() != basis.dim() || rho_pq.cols() != basis.dim()) {
        throw StructuralError("from_eigenbasis: dimension mismatch");
    }
    return basis.vectors * rho_pq * basis.vectors.adjoint();
}

// ------------------------------ Scalar measures ------------------------------

namespace detail {

inline double log_in_base(double x, LogBase base) {
    return base == LogBase::e ? std::log(x) : std::log2(x);
}

// Entropy from an eigenvalue list; clamps round-off negatives, rejects worse.
inline double entropy_from_eigenvalues(const Eigen::VectorXd& lam, LogBase base) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        double l = lam(i);
        if (l < -1e-8) {
            throw InvalidStateError("entropy: eigenvalue " + lindsteady::detail::sci(l) +
                                    " is negative beyond tolerance");
        }
        if (l < 1e-14) continue;
        s -= l * log_in_base(l, base);
    }
    return s;
}

} // namespace detail

inline double von_neumann_entropy(const Eigen::MatrixXcd& rho, LogBase base = LogBase::e) {
    if (rho.rows() != rho.cols()) throw StructuralError("von_neumann_entropy: matrix not square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho + rho.adjoint()),
                                                       Eigen::EigenvaluesOnly);
    return detail::entropy_from_eigenvalues(es.eigenvalues(), base);
}

// C_re = S(diag rho_pq) - S(rho_pq), evaluated in the Hamiltonian eigenbasis
inline double relative_entropy_coherence(const Eigen::MatrixXcd& rho, const EigenBasis& basis,
                                         LogBase base = LogBase::e) {
    const Eigen::MatrixXcd rho_pq = to_eigenbasis(rho, basis);
    const Eigen::VectorXd diag = rho_pq.diagonal().real();
    return detail::entropy_from_eigenvalues(diag, base) - von_neumann_entropy(rho_pq, base);
}

inline double purity(const Eigen::MatrixXcd& rho) {
    if (rho.rows() != rho.cols()) throw StructuralError("purity: matrix not square");
    return (rho * rho).trace().real();
}

inline Eigen::VectorXd site_populations(const Eigen::MatrixXcd& rho) {
    if (rho.rows() != rho.cols()) throw StructuralError("site_populations: matrix not square");
    return rho.diagonal().real();
}

inline Eigen::VectorXd eigen_populations(const Eigen::MatrixXcd& rho, const EigenBasis& basis) {
    return to_eigenbasis(rho, basis).diagonal().real();
}

// PR = 1 / sum_n rho_nn^2, site basis
inline double participation_ratio(const Eigen::MatrixXcd& rho) {
    const Eigen::VectorXd pops = site_populations(rho);
    const double denom = pops.squaredNorm();
    if (denom <= 0.0) throw InvalidStateError("participation_ratio: zero population vector");
    return 1.0 / denom;
}

// ------------------------------- Observable set ------------------------------

struct ObservableSet {
    double c_re{0.0};
    double purity{0.0};
    double pr{0.0};
    Eigen::VectorXd rho_nn;
    Eigen::VectorXd rho_pp;
    Eigen::MatrixXcd rho_pq;   // populated only when requested
    Gauge gauge{Gauge::momentum};
    LogBase log_base{LogBase::e};
};

inline ObservableSet compute_observables(const Eigen::MatrixXcd& rho, const EigenBasis& basis,
                                         LogBase base = LogBase::e, bool keep_rho_pq = false) {
    ObservableSet out;
    out.gauge = basis.gauge;
    out.log_base = base;
    const Eigen::MatrixXcd rho_pq = to_eigenbasis(rho, basis);
    out.rho_nn = site_populations(rho);
    out.rho_pp = rho_pq.diagonal().real();
    out.purity = purity(rho);
    out.pr = participation_ratio(rho);
    out.c_re = detail::entropy_from_eigenvalues(out.rho_pp, base) -
               von_neumann_entropy(rho_pq, base);
    if (keep_rho_pq) out.rho_pq = rho_pq;
    return out;
}

} // namespace lindsteady
