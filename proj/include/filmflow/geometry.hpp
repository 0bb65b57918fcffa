#pragma once

#include "filmflow/grid.hpp"

namespace filmflow {

/// First/second-order geometry of the graph of a profile, sampled per node.
///
/// Sign convention: the normal points out of the subgraph (upward), and the
/// mean curvature of an upward bump is positive.  H is assembled in
/// conservative divergence form, -Div(Dh/J), so its grid mean vanishes; the
/// curvature pair (kappa1, kappa2) is recovered from that H and the pointwise
/// determinant of the shape operator, with the discriminant clamped at zero.
/// Hence kappa1 + kappa2 == H exactly and H^2 <= 2*|B|^2 holds node-wise.
struct SurfaceMetrics {
    int m = 1;
    int n = 0;
    double b = 0.0;
    std::vector<std::vector<double>> gradient;  // m fields
    std::vector<double> area_element;           // J = sqrt(1+|Dh|^2) >= 1
    std::vector<std::vector<double>> normal;    // m+1 fields, unit length
    std::vector<double> mean_curvature;         // H, grid mean 0
    std::vector<double> kappa1, kappa2;         // kappa2 == 0 for m == 1
    std::vector<double> shape_norm_sq;          // |B|^2 = kappa1^2 + kappa2^2

    double max_slope = 0.0;                     // max_x |Dh|
};

SurfaceMetrics metrics(const Profile& h, DiffBackend be = DiffBackend::spectral);

/// Integral over the graph: sum_nodes f * J * cell.
double surface_integral(const Profile& h, std::span<const double> f,
                        DiffBackend be = DiffBackend::spectral);
double surface_integral(const SurfaceMetrics& g, std::span<const double> f);

/// Volume below the graph: integral of h over Q.
double volume(const Profile& h);

/// Surface area of the graph (integral of J).
double surface_area(const SurfaceMetrics& g);

} // namespace filmflow
