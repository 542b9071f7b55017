// lindblad.hpp — Density matrices, the structure-exploiting Lindblad generator
// (O(N^2) per application), and the explicit sparse superoperator under the
// column-stacking vectorization vec(rho)[i + N j] = rho(i, j).

#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "lindsteady/errors.hpp"
#include "lindsteady/model.hpp"

namespace lindsteady {

using SparseCd = Eigen::SparseMatrix<complexd>;

// -------------------------------- DensityMatrix ------------------------------

// N x N complex state. Hermiticity and unit trace are enforced at construction
// within tolerance; positivity is measured by callers, never silently repaired.
struct DensityMatrix {
    Eigen::MatrixXcd rho;

    int dim() const { return static_cast<int>(rho.rows()); }

    static constexpr double hermiticity_tol = 1e-10;
    static constexpr double trace_tol = 1e-10;

    static DensityMatrix from_matrix(const Eigen::MatrixXcd& m) {
        if (m.rows() != m.cols() || m.rows() < 1) {
            throw StructuralError("DensityMatrix: matrix must be square and nonempty");
        }
        const double herm = (m - m.adjoint()).norm();
        if (herm > hermiticity_tol) {
            throw InvalidStateError("DensityMatrix: not Hermitian, ||rho - rho†||_F = " +
                                    detail::sci(herm));
        }
        const double tr_err = std::abs(m.trace() - complexd(1.0, 0.0));
        if (tr_err > trace_tol) {
            throw InvalidStateError("DensityMatrix: trace deviates from 1 by " +
                                    detail::sci(tr_err));
        }
        return DensityMatrix{m};
    }

    static DensityMatrix maximally_mixed(int N) {
        return DensityMatrix{Eigen::MatrixXcd::Identity(N, N) / static_cast<double>(N)};
    }

    static DensityMatrix site_localized(int N, int site /* 0-based */) {
        if (site < 0 || site >= N) throw ParameterError("site_localized: site out of range");
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(N, N);
        m(site, site) = 1.0;
        return DensityMatrix{m};
    }

    static DensityMatrix pure(const Eigen::VectorXcd& psi) {
        const double n2 = psi.squaredNorm();
        if (n2 <= 0.0) throw ParameterError("pure: zero vector");
        return DensityMatrix{(psi * psi.adjoint()) / n2};
    }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho + rho.adjoint()),
                                                           Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }
};

// ---------------------------- Lindblad generator -----------------------------

// Holds the chain geometry, the jump set as (site pair, phase) records, and
// the precomputed damping matrix K = gamma sum_n M_n† M_n = 2 gamma sum_n v_n v_n†
// (tridiagonal plus corners). All apply_* methods cost O(N^2) and are pure.
class LindbladGenerator {
public:
    LindbladGenerator(const LatticeSpec& lattice, const DissipationSpec& dissipation)
        : lattice_(lattice), dissipation_(dissipation) {
        lattice_.validate();
        dissipation_.validate();
        profile_ = build_phase_profile(dissipation_, lattice_.N);
        jumps_ = build_jump_operators(profile_, lattice_.N, dissipation_.boundary);
        build_damping();
    }

    int dim() const { return lattice_.N; }
    const LatticeSpec& lattice() const { return lattice_; }
    const DissipationSpec& dissipation() const { return dissipation_; }
    const PhaseProfile& phase_profile() const { return profile_; }
    const std::vector<JumpOperator>& jumps() const { return jumps_; }

    // K = gamma sum_n M_n† M_n as a dense matrix (banded content)
    Eigen::MatrixXcd damping_matrix() const {
        const int N = dim();
        Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(N, N);
        for (int i = 0; i < N; ++i) K(i, i) = k_diag_[static_cast<size_t>(i)];
        for (const auto& j : jumps_) {
            const complexd w = -2.0 * dissipation_.gamma * std::conj(j.phase());
            K(j.site_a, j.site_b) += w;
            K(j.site_b, j.site_a) += std::conj(w);
        }
        return K;
    }

    // -i [H, rho]
    Eigen::MatrixXcd apply_hamiltonian_part(const Eigen::MatrixXcd& rho) const {
        check_dims(rho, "apply_hamiltonian_part");
        const int N = dim();
        Eigen::MatrixXcd comm = Eigen::MatrixXcd::Zero(N, N);
        hop_left(rho, comm, 1.0);    // + H rho
        hop_right(rho, comm, -1.0);  // - rho H
        return complexd(0.0, -1.0) * comm;
    }

    // gamma sum_n ( M_n rho M_n† - 1/2 {M_n† M_n, rho} )
    Eigen::MatrixXcd apply_dissipator(const Eigen::MatrixXcd& rho) const {
        check_dims(rho, "apply_dissipator");
        const int N = dim();
        const double g = dissipation_.gamma;
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(N, N);

        // Jump terms: M rho M† = (v† rho v) u u†, four entries per channel
        for (const auto& j : jumps_) {
            const int a = j.site_a;
            const int b = j.site_b;
            const complexd p = j.phase();
            const complexd s =
                rho(a, a) - p * rho(a, b) - std::conj(p) * rho(b, a) + rho(b, b);
            const complexd gs = g * s;
            out(a, a) += gs;
            out(a, b) += gs * std::conj(p);
            out(b, a) += gs * p;
            out(b, b) += gs;
        }

        // Anticommutator: -1/2 (K rho + rho K) using the banded structure of K
        damp_both(rho, out);
        return out;
    }

    // Full generator L[rho]
    Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const {
        Eigen::MatrixXcd out = apply_hamiltonian_part(rho);
        out += apply_dissipator(rho);
        return out;
    }

private:
    LatticeSpec lattice_;
    DissipationSpec dissipation_;
    PhaseProfile profile_;
    std::vector<JumpOperator> jumps_;

    std::vector<double> k_diag_;                       // diagonal of K (real)
    struct Coupling { int i, j; complexd w; };         // K(i,j) = w for i != j
    std::vector<Coupling> k_off_;

    void build_damping() {
        const int N = dim();
        k_diag_.assign(static_cast<size_t>(N), 0.0);
        k_off_.clear();
        const double g2 = 2.0 * dissipation_.gamma;
        for (const auto& j : jumps_) {
            k_diag_[static_cast<size_t>(j.site_a)] += g2;
            k_diag_[static_cast<size_t>(j.site_b)] += g2;
            const complexd w = -g2 * std::conj(j.phase());
            k_off_.push_back({j.site_a, j.site_b, w});
            k_off_.push_back({j.site_b, j.site_a, std::conj(w)});
        }
    }

    void check_dims(const Eigen::MatrixXcd& rho, const char* where) const {
        if (rho.rows() != dim() || rho.cols() != dim()) {
            throw StructuralError(std::string(where) + ": dimension mismatch, expected " +
                                  std::to_string(dim()));
        }
    }

    // out += s * H rho, with H = t (shift by one site, plus corners if periodic)
    void hop_left(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out, double s) const {
        const int N = dim();
        const double st = s * lattice_.t;
        out.topRows(N - 1) += st * rho.bottomRows(N - 1);
        out.bottomRows(N - 1) += st * rho.topRows(N - 1);
        if (lattice_.boundary == Boundary::periodic) {
            out.row(0) += st * rho.row(N - 1);
            out.row(N - 1) += st * rho.row(0);
        }
    }

    // out += s * rho H
    void hop_right(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out, double s) const {
        const int N = dim();
        const double st = s * lattice_.t;
        out.leftCols(N - 1) += st * rho.rightCols(N - 1);
        out.rightCols(N - 1) += st * rho.leftCols(N - 1);
        if (lattice_.boundary == Boundary::periodic) {
            out.col(0) += st * rho.col(N - 1);
            out.col(N - 1) += st * rho.col(0);
        }
    }

    // out -= 1/2 (K rho + rho K)
    void damp_both(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const {
        const int N = dim();
        for (int r = 0; r < N; ++r) {
            out.row(r) -= 0.5 * k_diag_[static_cast<size_t>(r)] * rho.row(r);
        }
        for (int c = 0; c < N; ++c) {
            out.col(c) -= 0.5 * k_diag_[static_cast<size_t>(c)] * rho.col(c);
        }
        for (const auto& cp : k_off_) {
            out.row(cp.i) -= 0.5 * cp.w * rho.row(cp.j);   // K rho
            out.col(cp.j) -= 0.5 * cp.w * rho.col(cp.i);   // rho K
        }
    }
};

// ------------------------------- Vectorization -------------------------------

// Column stacking: vec(rho)[i + N j] = rho(i, j)
inline Eigen::VectorXcd vectorize(const Eigen::MatrixXcd& rho) {
    if (rho.rows() != rho.cols()) throw StructuralError("vectorize: matrix must be square");
    return Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
}

inline Eigen::MatrixXcd devectorize(const Eigen::VectorXcd& v) {
    const auto len = v.size();
    const auto N = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(len))));
    if (N * N != len) {
        throw StructuralError("devectorize: length " + std::to_string(len) +
                              " is not a perfect square");
    }
    return Eigen::Map<const Eigen::MatrixXcd>(v.data(), N, N);
}

// ---------------------------- Sparse superoperator ---------------------------

struct SuperoperatorMatrix {
    int N{0};
    SparseCd L;   // N^2 x N^2, column-stacking convention

    Eigen::Index nonzeros() const { return L.nonZeros(); }
};

// L = -i (I kron H - H^T kron I)
//     + gamma sum_n [ conj(M_n) kron M_n - 1/2 I kron (M_n† M_n)
//                                        - 1/2 (M_n† M_n)^T kron I ]
// Size guard: the dense factors never materialize; the practical limit is the
// sparse solver, so anything beyond N = 1024 is rejected up front.
inline SuperoperatorMatrix assemble_superoperator(const LindbladGenerator& gen) {
    const int N = gen.dim();
    if (N > 1024) {
        throw ResourceError("assemble_superoperator: N = " + std::to_string(N) +
                            " exceeds the sparse-storage budget (N <= 1024)");
    }
    const auto NN = static_cast<Eigen::Index>(N) * N;
    const complexd mi(0.0, -1.0);

    std::vector<Eigen::Triplet<complexd>> trip;
    trip.reserve(static_cast<size_t>(12) * static_cast<size_t>(NN));

    const auto idx = [N](int i, int j) {
        return static_cast<Eigen::Index>(i) + static_cast<Eigen::Index>(N) * j;
    };

    // Hopping bonds of H (value t each)
    std::vector<std::pair<int, int>> hop;
    for (int n = 0; n + 1 < N; ++n) hop.push_back({n, n + 1});
    if (gen.lattice().boundary == Boundary::periodic) hop.push_back({N - 1, 0});
    const double t = gen.lattice().t;

    // -i (I kron H): entry ((i,j),(k,j)) = -i H(i,k)
    // +i (H^T kron I): entry ((i,j),(i,l)) = +i H(l,j) ... folded as -i * (-H(l,j))
    for (const auto& [a, b] : hop) {
        for (int j = 0; j < N; ++j) {
            trip.emplace_back(idx(a, j), idx(b, j), mi * t);
            trip.emplace_back(idx(b, j), idx(a, j), mi * t);
        }
        for (int i = 0; i < N; ++i) {
            trip.emplace_back(idx(i, b), idx(i, a), -mi * t);
            trip.emplace_back(idx(i, a), idx(i, b), -mi * t);
        }
    }

    const double g = gen.dissipation().gamma;
    for (const auto& jop : gen.jumps()) {
        const Eigen::MatrixXcd M = jump_matrix(jop, N);
        const int a = jop.site_a;
        const int b = jop.site_b;
        const int sites[2] = {a, b};
        // gamma conj(M) kron M: entry ((i,j),(k,l)) = gamma conj(M(j,l)) M(i,k)
        for (int j : sites)
            for (int l : sites)
                for (int i : sites)
                    for (int k : sites) {
                        const complexd v = g * std::conj(M(j, l)) * M(i, k);
                        if (v != complexd(0.0, 0.0)) trip.emplace_back(idx(i, j), idx(k, l), v);
                    }
        // M† M = 2 v v† with v = e_a - p e_b
        const complexd p = jop.phase();
        Eigen::Matrix2cd MM;
        MM << 2.0, -2.0 * std::conj(p), -2.0 * p, 2.0;
        // -gamma/2 I kron (M†M): entry ((i,j),(k,j)) = -g/2 MM(i,k)
        for (int j = 0; j < N; ++j)
            for (int ii = 0; ii < 2; ++ii)
                for (int kk = 0; kk < 2; ++kk)
                    trip.emplace_back(idx(sites[ii], j), idx(sites[kk], j),
                                      -0.5 * g * MM(ii, kk));
        // -gamma/2 (M†M)^T kron I: entry ((i,j),(i,l)) = -g/2 MM(l,j)
        for (int i = 0; i < N; ++i)
            for (int jj = 0; jj < 2; ++jj)
                for (int ll = 0; ll < 2; ++ll)
                    trip.emplace_back(idx(i, sites[jj]), idx(i, sites[ll]),
                                      -0.5 * g * MM(ll, jj));
    }

    SuperoperatorMatrix out;
    out.N = N;
    out.L.resize(NN, NN);
    out.L.setFromTriplets(trip.begin(), trip.end());
    out.L.makeCompressed();
    return out;
}

} // namespace lindsteady
