#pragma once

#include "filmflow/grid.hpp"

#include <span>
#include <string>
#include <vector>

namespace filmflow {

/// Isotropic plane-strain moduli plus the mismatch strain e0 imposed at the
/// substrate: the film is clamped to u = (e0 x, 0) at y = 0.
struct LameParams {
    double mu = 1.0;
    double lambda = 1.0;
    double e0 = 0.0;
    void validate() const;
};

/// Energy density W(E) = mu |E|^2 + (lambda/2) tr(E)^2 for a symmetric 2x2
/// strain (exx, eyy, exy).
double strain_energy_density(const LameParams& p, double exx, double eyy, double exy);

/// Equilibrium displacement of the film {0 < y < h(x)}, x-periodic, clamped
/// to the mismatch datum at y = 0, traction-free at the graph.  Discretized
/// with bilinear quads on the mapped tensor-product mesh
/// (x_i, s_j h(x_i)), s_j = j/ny; the stored dofs are the periodic
/// correction utilde = u - (e0 x, 0), which vanishes at y = 0.
struct ElasticField {
    int nx = 0, ny = 0;
    double b = 0.0;
    LameParams params;
    std::vector<double> heights;   // profile values the mesh was built on (nx)
    std::vector<double> u;         // 2*(ny+1)*nx correction dofs, bottom row zero
    double energy = 0.0;           // int_Omega W(E(u)) dz
    std::vector<double> trace_w;   // W(E(u)) at the top edge, per profile node
    int cg_iterations = 0;

    std::size_t node(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
    /// Total displacement (including the non-periodic datum e0 x) at node (i,j).
    void displacement(int i, int j, double& u1, double& u2) const;
    /// Mesh node coordinates.
    void position(int i, int j, double& x, double& y) const;
};

/// FEM context reusable across solves on the same (nx, ny, b) mesh family;
/// keeps the sparsity pattern and warm-start vectors (single-thread use).
class PlaneStrainSolver {
public:
    PlaneStrainSolver(int nx, int ny, double b);

    ElasticField solve(const Profile& h, const LameParams& p);

    struct VPhi {
        std::vector<double> u;     // correction dofs, layout as ElasticField::u
        double energy = 0.0;       // int_Omega W(E(v)) dz
        int cg_iterations = 0;
    };
    /// Solves the linearized transmission problem: find v (periodic, zero at
    /// y = 0) with  int C E(v):E(w) dz = -int_Gamma phi C E(u) : D_Gamma w dH
    /// for all admissible w; phi is sampled at the profile nodes.  `warm`
    /// optionally supplies/receives the CG starting vector (useful when the
    /// same phi is re-solved on nearby meshes).
    VPhi v_phi(const Profile& h, const ElasticField& field, std::span<const double> phi,
               std::vector<double>* warm = nullptr);

    int nx() const { return nx_; }
    int ny() const { return ny_; }

private:
    int nx_, ny_;
    double b_, dx_;
    int ndof_;                          // unknowns: 2 * nx * ny (rows j >= 1)
    std::vector<int> csr_row_, csr_col_;
    std::vector<int> slot_;             // element -> 8x8 CSR slots
    std::vector<double> csr_val_, jacobi_;
    std::vector<double> warm_u_, warm_v_;
    std::vector<double> node_y_;        // (ny+1)*nx, rebuilt per assemble
    std::vector<double> heights_;

    int dof_index(int i, int j, int c) const {  // -1 for Dirichlet row j == 0
        return j == 0 ? -1 : 2 * ((j - 1) * nx_ + i) + c;
    }
    void assemble(const Profile& h, const LameParams& p);
    std::vector<double> cg(std::span<const double> f, std::vector<double>& warm,
                           int* iterations) const;
    // strain of the correction field at a reference point of element (i,j)
    void element_strain(const std::vector<double>& dofs, int i, int j,
                        double xi, double eta, const LameParams& p,
                        double& exx, double& eyy, double& exy) const;
    friend struct ElasticFieldAccess;
};

/// One-shot equilibrium solve.
ElasticField solve_equilibrium(const Profile& h, const LameParams& p, int ny = 16);

/// W(E(u)) along the film surface, per profile node.
std::vector<double> boundary_energy_trace(const ElasticField& field);

/// One-shot linearized-problem solve (see PlaneStrainSolver::v_phi).
PlaneStrainSolver::VPhi v_phi_solve(const Profile& h, const ElasticField& field,
                                    std::span<const double> phi);

/// Writes the displacement field as CSV rows x,y,u1,u2 (total displacement).
void write_displacement_csv(const ElasticField& field, const std::string& path);

} // namespace filmflow
