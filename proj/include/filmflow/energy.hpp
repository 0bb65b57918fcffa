#pragma once

#include "filmflow/anisotropy.hpp"
#include "filmflow/elasticity.hpp"
#include "filmflow/geometry.hpp"
#include "filmflow/grid.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace filmflow {

/// Parameters of the regularized flow: curvature weight eps, curvature
/// exponent p, slope bound lambda0 and time step tau.
struct FlowParams {
    double epsilon = 0.05;
    double p = 2.0;
    double lambda0 = 0.0;
    double tau = 0.0;
    void validate() const;
};

struct EnergyBreakdown {
    double elastic = 0.0;
    double surface = 0.0;
    double curvature = 0.0;
    double total = 0.0;
};

struct ElasticSpec {
    LameParams lame;
    int ny = 16;
};

/// Optional bulk substitute for the elastic term: a density V(x1, x2, y)
/// integrated over {0 < y < h(x)}; for one-dimensional profiles x2 is 0.
using PotentialFn = std::function<double(double, double, double)>;

/// Free energy
///   F(h) = int_{0<y<h} W dz + int psi(-Dh,1) dx + (eps/p) int |H|^p J dx
/// with the elastic displacement at equilibrium, plus gradients and weak-form
/// residual diagnostics.  Not thread safe (caches FEM warm starts).
class EnergyModel {
public:
    struct Setup {
        Anisotropy psi = Anisotropy::isotropic(2);
        double epsilon = 0.05;
        double p = 2.0;
        DiffBackend backend = DiffBackend::spectral;
        std::optional<ElasticSpec> elastic;
        PotentialFn potential;  // ignored when elastic is set
    };

    explicit EnergyModel(Setup setup);

    /// Elastic energy and surface trace at a fixed displacement field, used
    /// to hold the costly FEM solve constant across several iterates.
    struct FrozenElastic {
        double energy = 0.0;
        std::vector<double> trace;
    };

    EnergyBreakdown free_energy(const Profile& h, const FrozenElastic* frozen = nullptr) const;
    /// Exact derivative of the discrete free energy; entries pair with
    /// profile perturbations through the cell-weighted dot product.
    std::vector<double> energy_gradient(const Profile& h,
                                        const FrozenElastic* frozen = nullptr) const;
    FrozenElastic freeze(const Profile& h) const;

    /// sup over the trig test bank (wavevectors up to kmax per axis) of
    /// |dF(h)[phi]| / ||phi||_{H^1}, phases paired so the value is
    /// translation invariant.  Zero (to rounding) at discrete critical points
    /// of smooth profiles.
    double criticality_residual(const Profile& h, int kmax = 16) const;

    /// Same residual for the incremental minimality condition: adds the
    /// -v/tau pairing, v solving the surface Poisson problem on h_prev with
    /// source h - h_prev.
    double weak_residual(const Profile& h_prev, const Profile& h, double tau,
                         int kmax = 16) const;

    /// int |D^2(|H|^{p-2} H)|^2 dx, the quantity whose time integral the
    /// regularization keeps bounded along discrete flows.
    double eq51_diagnostic(const Profile& h) const;

    /// Weak pairing dF(h)[phi] by direct quadrature against an explicit test
    /// function (same bilinear structure as the banked residuals); when v and
    /// tau are given the -v/tau term is included.
    double weak_pairing(const Profile& h, const std::vector<double>& phi,
                        const std::vector<double>* v = nullptr, double tau = 0.0) const;

    /// Displacement field from the most recent elastic solve, if any.
    const ElasticField* last_elastic() const { return last_elastic_ ? &*last_elastic_ : nullptr; }

    const Setup& setup() const { return setup_; }
    bool has_elastic() const { return setup_.elastic.has_value(); }

    struct WeakFields;  // sampled coefficient fields of the weak form

private:
    Setup setup_;
    mutable std::unique_ptr<PlaneStrainSolver> solver_;
    mutable std::optional<ElasticField> last_elastic_;

    const ElasticField& solve_elastic(const Profile& h) const;
    std::vector<double> substrate_term(const Profile& h, const FrozenElastic* frozen) const;
    double substrate_energy(const Profile& h, const FrozenElastic* frozen) const;
    WeakFields weak_fields(const Profile& h, const std::vector<double>* v, double tau) const;
};

} // namespace filmflow
