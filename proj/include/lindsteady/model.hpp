// model.hpp — Tight-binding chain, phase-modulated bond dissipators, and the
// analytic plane-wave spectrum. Sites are 1-based (1..N); dissipation channel
// n couples sites (n, n+1), with channel N wrapping to site 1 under periodic
// boundary conditions. The channel phase is evaluated at the bond index n.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lindsteady/errors.hpp"

namespace lindsteady {

using complexd = std::complex<double>;

enum class Boundary { periodic, open };

inline const char* to_string(Boundary b) {
    return b == Boundary::periodic ? "periodic" : "open";
}

// Inverse golden ratio at full double precision
inline double inverse_golden_ratio() {
    return (std::sqrt(5.0) - 1.0) / 2.0;
}

// ------------------------------ Parameter specs ------------------------------

struct LatticeSpec {
    int N{2};
    double t{1.0};
    Boundary boundary{Boundary::periodic};

    void validate() const {
        if (N < 2) throw ParameterError("LatticeSpec: N must be >= 2");
        if (!std::isfinite(t)) throw ParameterError("LatticeSpec: t must be finite");
    }
};

// Channel layout defaults follow the reference data this project reproduces:
// bonds (n, n+1) for n = 0..N-2 (no wraparound channel even on a ring), with
// the modulation phase evaluated at the 0-based bond index. Both choices are
// switchable: boundary = periodic adds the (N, 1) channel, index_origin = 1
// evaluates the phase at 1-based bond positions.
struct DissipationSpec {
    double gamma{1.0};
    double alpha0{0.0};
    double alpha1{0.0};
    double beta{0.6180339887498949}; // (sqrt(5)-1)/2
    double nu{0.1};
    Boundary boundary{Boundary::open};
    int index_origin{0};

    void validate() const {
        if (!(gamma >= 0.0)) throw ParameterError("DissipationSpec: gamma must be >= 0");
        for (double x : {gamma, alpha0, alpha1, beta, nu}) {
            if (!std::isfinite(x)) throw ParameterError("DissipationSpec: all fields must be finite");
        }
        if (nu < 0.0) throw ParameterError("DissipationSpec: nu must be >= 0");
        if (index_origin != 0 && index_origin != 1) {
            throw ParameterError("DissipationSpec: index_origin must be 0 or 1");
        }
    }
};

inline int channel_count(Boundary b, int N) {
    return b == Boundary::periodic ? N : N - 1;
}

// ------------------------------- Phase profile -------------------------------

// alpha_n = alpha0 + alpha1 cos(2 pi beta n^nu), one entry per channel
struct PhaseProfile {
    std::vector<double> values;

    int size() const { return static_cast<int>(values.size()); }
};

// values[j] = alpha0 + alpha1 cos(2 pi beta n^nu) at n = j + index_origin for
// channel j = 0..channels-1. n^nu is evaluated literally (pow), so nu = 0
// yields a uniform profile and index_origin = 0 puts cos(0) on the first bond.
inline PhaseProfile build_phase_profile(const DissipationSpec& dspec, int N) {
    dspec.validate();
    if (N < 2) throw ParameterError("build_phase_profile: N must be >= 2");
    const int channels = channel_count(dspec.boundary, N);
    PhaseProfile profile;
    profile.values.reserve(channels);
    for (int j = 0; j < channels; ++j) {
        const double n = static_cast<double>(j + dspec.index_origin);
        const double arg = 2.0 * M_PI * dspec.beta * std::pow(n, dspec.nu);
        profile.values.push_back(dspec.alpha0 + dspec.alpha1 * std::cos(arg));
    }
    return profile;
}

// -------------------------------- Jump operators -----------------------------

// Rank-1 two-site operator M_n = u v† with u = e_n + e^{i a} e_{n+1} and
// v = e_n - e^{i a} e_{n+1}. Only the site pair and the phase are stored;
// the dense realization is test/oracle plumbing.
struct JumpOperator {
    int site_a{0};      // 0-based index of site n
    int site_b{1};      // 0-based index of site n+1 (wraps under PBC)
    double alpha{0.0};  // phase alpha_n of this channel

    complexd phase() const { return std::polar(1.0, alpha); }
};

inline std::vector<JumpOperator> build_jump_operators(const PhaseProfile& profile, int N,
                                                      Boundary boundary) {
    const int channels = channel_count(boundary, N);
    if (profile.size() != channels) {
        throw StructuralError("build_jump_operators: profile length " +
                              std::to_string(profile.size()) + " does not match channel count " +
                              std::to_string(channels));
    }
    std::vector<JumpOperator> ops;
    ops.reserve(channels);
    for (int b = 0; b < channels; ++b) {
        ops.push_back({b, (b + 1) % N, profile.values[static_cast<size_t>(b)]});
    }
    return ops;
}

// Dense N x N realization u v†; exactly four nonzero entries.
inline Eigen::MatrixXcd jump_matrix(const JumpOperator& op, int N) {
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(N, N);
    const complexd p = op.phase();
    const int i = op.site_a;
    const int j = op.site_b;
    // u = e_i + p e_j, v = e_i - p e_j, M = u v†
    M(i, i) = 1.0;
    M(i, j) = -std::conj(p);
    M(j, i) = p;
    M(j, j) = -1.0;
    return M;
}

// --------------------------------- Hamiltonian -------------------------------

inline Eigen::MatrixXd build_hamiltonian(const LatticeSpec& spec) {
    spec.validate();
    const int N = spec.N;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N, N);
    for (int n = 0; n + 1 < N; ++n) {
        H(n, n + 1) = spec.t;
        H(n + 1, n) = spec.t;
    }
    if (spec.boundary == Boundary::periodic) {
        H(0, N - 1) += spec.t;
        H(N - 1, 0) += spec.t;
    }
    return H;
}

// Plane-wave energies 2t cos(2 pi m / N), N distinct momenta, sorted ascending.
// Only defined under periodic boundary conditions.
inline std::vector<double> analytic_spectrum(const LatticeSpec& spec) {
    spec.validate();
    if (spec.boundary != Boundary::periodic) {
        throw ParameterError("analytic_spectrum: requires periodic boundary");
    }
    const int N = spec.N;
    std::vector<double> energies;
    energies.reserve(N);
    // m = -ceil(N/2)+1 .. floor(N/2) gives exactly N distinct momenta
    const int m_lo = -((N - 1) / 2);
    const int m_hi = N / 2;
    for (int m = m_lo; m <= m_hi; ++m) {
        energies.push_back(2.0 * spec.t * std::cos(2.0 * M_PI * m / N));
    }
    std::sort(energies.begin(), energies.end());
    return energies;
}

// Allowed momenta paired with energies, ordered by (energy, k). This fixes the
// momentum-gauge eigenbasis ordering used downstream.
struct MomentumLevel {
    int m;        // integer momentum index, k = 2 pi m / N
    double k;
    double energy;
};

inline std::vector<MomentumLevel> momentum_levels(const LatticeSpec& spec) {
    spec.validate();
    if (spec.boundary != Boundary::periodic) {
        throw ParameterError("momentum_levels: requires periodic boundary");
    }
    const int N = spec.N;
    std::vector<MomentumLevel> levels;
    levels.reserve(N);
    const int m_lo = -((N - 1) / 2);
    const int m_hi = N / 2;
    for (int m = m_lo; m <= m_hi; ++m) {
        const double k = 2.0 * M_PI * m / N;
        levels.push_back({m, k, 2.0 * spec.t * std::cos(k)});
    }
    std::sort(levels.begin(), levels.end(), [](const MomentumLevel& a, const MomentumLevel& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        return a.k < b.k;
    });
    return levels;
}

} // namespace lindsteady
