#pragma once

#include "filmflow/grid.hpp"

#include <cstdint>
#include <string>

namespace filmflow {

/// Randomized checks that the discrete calculus satisfies the functional
/// inequalities the a-priori estimates lean on.  Each probe draws band-limited
/// random trig fields and reports the worst constant seen.
///
///   A      ||D^j f||_p        <= C ||D^m f||_p^{j/m} ||f||_p^{1-j/m}
///   C      ||f||_q            <= C ||D^m f||_p^theta ||f||_p^{1-theta}
///   D      ||D^j f||_q        <= C ||D^m f||_p^theta ||D^s f||_p^{1-theta}
///   H1     ||f||_2^2          <= ||Df||_2 ||f||_{H^-1}      (cap exactly 1)
///   morini ||D^2 u||_p        <= C ||Div(a Du)||_p,  a the metric coefficient
///                                 of a random profile with slope <= 1/2
///
/// theta is fixed by scaling; parameters violating the admissible range are
/// rejected with std::domain_error.
enum class ProbeId { A, C, D, H1, morini };

ProbeId probe_id_from_string(const std::string& s);
std::string to_string(ProbeId id);

struct ProbeParams {
    int dim = 1;         // 1 or 2
    int n = 128;         // grid points per axis
    double b = 2.0 * 3.14159265358979323846;
    int degree = 0;      // band limit of the random fields; 0 -> n/4
    double decay = 2.0;  // spectral decay exponent
    double p = 2.0;
    double q = 2.0;      // probes C and D
    int j = 1;           // derivative orders (A, D)
    int m = 2;
    int s = 0;           // probe D
};

struct ProbeReport {
    ProbeId id = ProbeId::A;
    ProbeParams params;
    int trials = 0;
    std::uint64_t seed = 0;
    double cap = 0.0;            // bound the worst ratio must respect
    double worst_ratio = 0.0;
    int worst_trial = -1;
    double mean_ratio = 0.0;
    double max_homogeneity_dev = 0.0;  // relative drift of the ratio under rescaling
    bool capped = false;
};

ProbeReport run_probe(ProbeId id, const ProbeParams& par, int trials, std::uint64_t seed);

} // namespace filmflow
