#pragma once

#include "filmflow/geometry.hpp"
#include "filmflow/grid.hpp"

#include <memory>
#include <optional>

namespace filmflow {

/// Weak-form discretization of the Laplace-Beltrami operator on the graph of
/// a base profile, pulled back to the flat grid:
///
///     <L v, phi> = int_Q (A Dv) . Dphi dx,   A = (Id - Dh (x) Dh / J^2) J.
///
/// A is symmetric with eigenvalues in [1/J, J], so L is SPD on the mean-zero
/// subspace.  The spectral backend applies L matrix-free through FFTs; since
/// the spectral first derivative zeroes the Nyquist modes, those modes get
/// flat-coefficient stiffness instead (exact on a flat base, invisible to
/// band-limited fields).  The fd2 backend assembles P1/Q1 stiffness with the
/// averaged nodal coefficient.  Solves use preconditioned conjugate gradients
/// on the mean-zero subspace: Fourier-diagonal preconditioning for spectral,
/// Jacobi for fd2.
class MetricOperator {
public:
    MetricOperator(const Profile& base, DiffBackend be = DiffBackend::spectral);

    int m() const { return m_; }
    int n() const { return n_; }
    double b() const { return b_; }
    double cell() const { return cell_; }
    DiffBackend backend() const { return be_; }

    /// Coefficient fields: m == 1 -> {A11}; m == 2 -> {A11, A12, A22}.
    const std::vector<std::vector<double>>& coefficient() const { return A_; }
    const std::vector<double>& area_element() const { return J_; }

    /// y = L v.
    std::vector<double> apply(std::span<const double> v) const;

    /// Solves L v = f for mean-zero f by PCG.  `warm` (optional) is both the
    /// starting guess and, on return, the solution for reuse.  Throws on
    /// missing convergence within max_iterations.
    std::vector<double> solve(std::span<const double> f,
                              double rel_tol = 1e-10,
                              std::vector<double>* warm = nullptr,
                              int* iterations = nullptr) const;

    /// <L v, v> * cell  (the discrete Dirichlet energy int |D_G v|^2 dH).
    double dirichlet_energy(std::span<const double> v) const;

    int max_iterations() const { return 10 * n_ * n_; }

private:
    int m_, n_;
    double b_, cell_;
    DiffBackend be_;
    std::vector<std::vector<double>> A_;
    std::vector<double> J_;
    // spectral path
    std::vector<double> stab_sigma_;   // per-axis Nyquist stiffness
    double precond_scale_ = 1.0;
    // fd2 path: CSR stiffness (already divided by cell) + Jacobi diagonal
    std::vector<int> csr_row_, csr_col_;
    std::vector<double> csr_val_, jacobi_;

    std::vector<double> apply_spectral(std::span<const double> v) const;
    std::vector<double> apply_csr(std::span<const double> v) const;
    std::vector<double> precondition(std::span<const double> r) const;
};

/// Solves Delta_Gamma v = rhs on the graph of `base`, where `rhs` is the
/// surface function sampled per node (already in divided form, i.e. the weak
/// right-hand side is int rhs * phi * J dx).  Requires the surface mean of
/// rhs to vanish (|int rhs J dx| <= 1e-10 relative); the result carries
/// J-weighted mean zero (int_Gamma v dH = 0).
std::vector<double> laplace_beltrami_solve(const Profile& base,
                                           std::span<const double> rhs,
                                           DiffBackend be = DiffBackend::spectral,
                                           int* iterations = nullptr);

/// Flat periodic negative-order norm of a mean-zero grid field:
/// ||f||_{H^-1} = ||Dw||_{L2} where Laplacian w = f.  Evaluated exactly in
/// Fourier space (Nyquist wavenumbers included so this is a norm).
double hminus1_norm(std::span<const double> f, int m, int n, double b);

struct PenaltyResult {
    double value = 0.0;            // (1/2) int_Gamma |D_Gamma v|^2 dH
    std::vector<double> v;         // auxiliary potential on the base surface
    int cg_iterations = 0;
};

/// Minimizing-movement penalty between consecutive profiles: solves
/// Delta_Gamma v = (h - h_prev)/J_prev on the graph of h_prev and returns
/// (1/2) int |D_Gamma v|^2 dH (without any time-step factor).  Requires
/// matching volumes to 1e-10 relative.
PenaltyResult mm_penalty(const Profile& h, const Profile& h_prev,
                         DiffBackend be = DiffBackend::spectral);

/// Same penalty evaluated through a prebuilt operator on the base grid
/// (h_prev values passed separately); used by the stepper hot path.
PenaltyResult mm_penalty(const MetricOperator& op, std::span<const double> h,
                         std::span<const double> h_prev,
                         std::vector<double>* warm = nullptr);

} // namespace filmflow
