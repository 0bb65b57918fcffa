#pragma once

#include "filmflow/grid.hpp"

#include <array>

namespace filmflow {

/// One-homogeneous surface tension density psi on R^dim \ {0}, dim = m+1.
///
/// Families:
///   isotropic          psi(xi) = |xi|
///   elliptic           psi(xi) = sqrt(xi' M xi), M symmetric positive definite
///   regularized_cubic  psi(xi) = |xi| (1 + gamma * sum_i xi_i^4 / |xi|^4)
///
/// All families satisfy the Euler relations Dpsi(xi).xi = psi(xi) and
/// D2psi(xi) xi = 0.  Convexity holds for the first two and for the cubic
/// family only at small gamma (it already fails at the coordinate poles for
/// gamma > 1/3); convexity_margin measures this numerically and nothing here
/// certifies a faceting threshold.
class Anisotropy {
public:
    enum class Family { isotropic, elliptic, regularized_cubic };

    static Anisotropy isotropic(int dim);
    /// mrow: row-major symmetric matrix, dim*dim entries.
    static Anisotropy elliptic(int dim, const std::vector<double>& m_rowmajor);
    static Anisotropy regularized_cubic(int dim, double gamma);

    Family family() const { return family_; }
    int dim() const { return dim_; }
    double gamma() const { return gamma_; }

    double value(std::span<const double> xi) const;
    /// value + gradient + hessian (row-major dim x dim) at xi != 0.
    void eval(std::span<const double> xi, double& val,
              std::span<double> grad, std::span<double> hess) const;

    /// min over sampled unit normals of the smallest tangential hessian
    /// eigenvalue (Fibonacci sphere for dim 3, uniform angles for dim 2).
    double convexity_margin(int samples = 4096) const;

    /// dim == 2 only: g(theta) = psi(cos theta, sin theta) and its second
    /// derivative via the chain rule.
    struct AngleDensity { double g; double g_thth; };
    AngleDensity angle_density(double theta) const;

    /// c >= 1 with |xi|/c <= psi(xi) <= c|xi|.
    double bound_constant() const;

private:
    Anisotropy(Family f, int dim) : family_(f), dim_(dim) {}
    Family family_;
    int dim_;
    std::vector<double> M_;   // elliptic
    double gamma_ = 0.0;      // regularized_cubic
};

/// Anisotropic mean curvature of the graph of h: the flat divergence of
/// x -> [Dpsi(-Dh(x), 1)]_{1..m}.  Coincides with the isotropic mean
/// curvature when psi = |.|.  psi.dim() must equal h.m() + 1.
std::vector<double> anisotropic_curvature(const Profile& h, const Anisotropy& psi,
                                          DiffBackend be = DiffBackend::spectral);

} // namespace filmflow
