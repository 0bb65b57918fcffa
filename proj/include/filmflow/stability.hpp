#pragma once

#include "filmflow/elasticity.hpp"
#include "filmflow/stepper.hpp"

#include <optional>
#include <vector>

namespace filmflow {

/// Plane-strain Poisson ratio nu = lambda / (2 (lambda + mu)).
double poisson_modulus(const LameParams& p);

/// Depth kernel of the flat-film elastic response,
///
///   J(y) = (y + (3-4nu) sinh y cosh y) / (4(1-nu)^2 + y^2 + (3-4nu) sinh^2 y),
///
/// evaluated in overflow-free exponential form.  J(0) = 0, J is increasing
/// and J(y) -> 1; J(y) ~ y/(1-nu) near 0.  Requires nu in [0, 1/2).
double grinfeld_J(double y, double nu);

/// K(y) = max_{n >= 1} J(n y) / n.  Since J < 1, terms with n > 1/best are
/// dominated, which certifies the cutoff.
double grinfeld_K(double y, double nu);

/// Critical thickness of the flat film on period b: the unique d solving
///
///   K(2 pi d / b) = pi (2 mu + lambda) psi11 / (4 e0^2 mu (mu + lambda) b),
///
/// where psi11 is the tangential second derivative of the surface density at
/// the vertical normal.  Films thinner than d are linearly stable.  Returns
/// +infinity when the right-hand side is >= 1 (every thickness is stable).
double local_min_thickness(double b, const LameParams& lame, double psi11);

/// The right-hand side of the threshold equation (for reporting).
double threshold_rhs(double b, const LameParams& lame, double psi11);

/// Second variation of the sharp energy at the flat film of thickness d, in
/// the direction phi = cos(2 pi k x / b): the nonlocal elastic term is
/// -2 int W(E(v_phi)) with v_phi from the finite-element transmission solve
/// on an nx-by-ny mesh; surface = psi11 kappa^2 b/2; curvature =
/// eps_curv kappa^4 b/2 (quadratic regularization).
struct SecondVariation {
    double elastic = 0.0;
    double surface = 0.0;
    double curvature = 0.0;
    double total = 0.0;
};
SecondVariation second_variation_flat(double d, double b, int k, const LameParams& lame,
                                      double psi11, double eps_curv, int nx, int ny);

/// Closed-form value of the same elastic term, through the depth kernel:
/// -2 Chat kappa J(kappa d) b/2 with Chat = 4 e0^2 mu (mu+lambda)/(2mu+lambda).
double second_variation_elastic_exact(double d, double b, int k, const LameParams& lame);

struct StabilityRow {
    double d = 0.0;
    int k = 0;
    SecondVariation sv;
};

/// Zero crossing in d of min_k second_variation_flat(d, ..., eps_curv = 0)
/// located by bisection on [d_lo, d_hi] (requires a sign change there);
/// evaluated rows are appended to *rows when given.  rel_tol controls the
/// bracket width relative to the current midpoint.
double numeric_flat_threshold(double b, const LameParams& lame, double psi11,
                              int nx, int ny, int kmax, double d_lo, double d_hi,
                              double rel_tol = 1e-2,
                              std::vector<StabilityRow>* rows = nullptr);

/// Full linear-stability scan for reporting.
struct StabilityScan {
    double nu = 0.0;
    double rhs = 0.0;
    double d_loc = 0.0;  // +infinity when every thickness is stable
    std::optional<double> numeric_threshold;
    std::vector<StabilityRow> rows;
};

/// Nonlinear check of the threshold: evolve the flat film of thickness d
/// perturbed by amplitude_rel * d * cos(2 pi k x / b) and classify whether
/// the deviation from flat decays (ratio <= 1/2) or grows (ratio >= 2).
struct LiapunovConfig {
    double d = 1.0;
    double b = 2.0 * 3.14159265358979323846;
    int k = 1;
    double amplitude_rel = 1e-3;
    int n = 128;
    int ny = 24;
    int steps = 150;
    double tau = 0.01;
    double epsilon = 0.02;
    double p = 2.0;
    LameParams lame{1.0, 1.0, 0.6};
};

struct LiapunovResult {
    enum class Class { decay, growth, inconclusive };
    Class classification = Class::inconclusive;
    double initial_deviation = 0.0;
    double final_deviation = 0.0;
    EvolutionTrace trace;
};

LiapunovResult liapunov_experiment(const LiapunovConfig& cfg);

} // namespace filmflow
