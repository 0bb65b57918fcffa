#include "filmflow/elasticity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace filmflow {

void LameParams::validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu))
        throw std::invalid_argument("LameParams: mu must be positive");
    if (!(mu + lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("LameParams: mu + lambda must be positive");
    if (!std::isfinite(e0))
        throw std::invalid_argument("LameParams: e0 must be finite");
}

double strain_energy_density(const LameParams& p, double exx, double eyy, double exy) {
    const double tr = exx + eyy;
    return p.mu * (exx * exx + eyy * eyy + 2.0 * exy * exy) + 0.5 * p.lambda * tr * tr;
}

void ElasticField::displacement(int i, int j, double& u1, double& u2) const {
    const double x = b / nx * i;
    const std::size_t d = 2 * node(i, j);
    u1 = params.e0 * x + u[d];
    u2 = u[d + 1];
}

void ElasticField::position(int i, int j, double& x, double& y) const {
    x = b / nx * i;
    y = heights[static_cast<std::size_t>(i)] * (static_cast<double>(j) / ny);
}

namespace {

constexpr double kGauss = 0.57735026918962576; // 1/sqrt(3)

// bilinear shape derivatives on [-1,1]^2, node order (--, +-, ++, -+)
inline void shape_deriv(double xi, double eta, double dxi[4], double deta[4]) {
    dxi[0] = -0.25 * (1 - eta); deta[0] = -0.25 * (1 - xi);
    dxi[1] = 0.25 * (1 - eta);  deta[1] = -0.25 * (1 + xi);
    dxi[2] = 0.25 * (1 + eta);  deta[2] = 0.25 * (1 + xi);
    dxi[3] = -0.25 * (1 + eta); deta[3] = 0.25 * (1 - xi);
}

inline void shape_value(double xi, double eta, double n[4]) {
    n[0] = 0.25 * (1 - xi) * (1 - eta);
    n[1] = 0.25 * (1 + xi) * (1 - eta);
    n[2] = 0.25 * (1 + xi) * (1 + eta);
    n[3] = 0.25 * (1 - xi) * (1 + eta);
}

} // namespace

PlaneStrainSolver::PlaneStrainSolver(int nx, int ny, double b)
    : nx_(nx), ny_(ny), b_(b), dx_(b / nx) {
    if (nx < 4) throw std::invalid_argument("PlaneStrainSolver: nx must be at least 4");
    if (ny < 1) throw std::invalid_argument("PlaneStrainSolver: ny must be at least 1");
    if (!(b > 0.0)) throw std::invalid_argument("PlaneStrainSolver: b must be positive");
    ndof_ = 2 * nx_ * ny_;

    // sparsity pattern from element connectivity (rows j >= 1 only)
    std::vector<std::vector<int>> cols(ndof_);
    auto visit = [&](int i, int j, auto&& f) {
        const int i1 = (i + 1) % nx_;
        const int n[4][2] = {{i, j}, {i1, j}, {i1, j + 1}, {i, j + 1}};
        int dofs[8];
        for (int a = 0; a < 4; ++a)
            for (int c = 0; c < 2; ++c)
                dofs[2 * a + c] = dof_index(n[a][0], n[a][1], c);
        f(dofs);
    };
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i)
            visit(i, j, [&](const int* dofs) {
                for (int r = 0; r < 8; ++r) {
                    if (dofs[r] < 0) continue;
                    for (int c = 0; c < 8; ++c)
                        if (dofs[c] >= 0) cols[dofs[r]].push_back(dofs[c]);
                }
            });
    csr_row_.assign(ndof_ + 1, 0);
    for (int r = 0; r < ndof_; ++r) {
        auto& v = cols[r];
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        csr_row_[r + 1] = csr_row_[r] + static_cast<int>(v.size());
    }
    csr_col_.resize(csr_row_.back());
    for (int r = 0; r < ndof_; ++r)
        std::copy(cols[r].begin(), cols[r].end(), csr_col_.begin() + csr_row_[r]);
    csr_val_.assign(csr_col_.size(), 0.0);
    jacobi_.assign(ndof_, 0.0);

    // element -> CSR slot table for fast re-assembly
    slot_.assign(static_cast<std::size_t>(nx_) * ny_ * 64, -1);
    std::size_t e = 0;
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i, ++e)
            visit(i, j, [&](const int* dofs) {
                for (int r = 0; r < 8; ++r) {
                    if (dofs[r] < 0) continue;
                    const int lo = csr_row_[dofs[r]];
                    const int hi = csr_row_[dofs[r] + 1];
                    for (int c = 0; c < 8; ++c) {
                        if (dofs[c] < 0) continue;
                        auto it = std::lower_bound(csr_col_.begin() + lo, csr_col_.begin() + hi,
                                                   dofs[c]);
                        slot_[e * 64 + r * 8 + c] =
                            static_cast<int>(it - csr_col_.begin());
                    }
                }
            });
    node_y_.assign(static_cast<std::size_t>(ny_ + 1) * nx_, 0.0);
    warm_u_.assign(ndof_, 0.0);
    warm_v_.assign(ndof_, 0.0);
}

void PlaneStrainSolver::assemble(const Profile& h, const LameParams& p) {
    if (h.m() != 1)
        throw std::invalid_argument("PlaneStrainSolver: profile must be one-dimensional");
    if (h.n() != nx_ || std::abs(h.b() - b_) > 1e-12 * b_)
        throw std::invalid_argument("PlaneStrainSolver: profile grid does not match mesh");
    heights_.assign(h.values().begin(), h.values().end());
    for (double v : heights_)
        if (!(v > 0.0))
            throw std::invalid_argument("PlaneStrainSolver: profile must be strictly positive");

    for (int j = 0; j <= ny_; ++j)
        for (int i = 0; i < nx_; ++i)
            node_y_[static_cast<std::size_t>(j) * nx_ + i] =
                heights_[i] * (static_cast<double>(j) / ny_);

    std::fill(csr_val_.begin(), csr_val_.end(), 0.0);
    const double mu = p.mu, la = p.lambda;
    std::size_t e = 0;
    for (int j = 0; j < ny_; ++j) {
        for (int i = 0; i < nx_; ++i, ++e) {
            const int i1 = (i + 1) % nx_;
            const double ya[4] = {node_y_[static_cast<std::size_t>(j) * nx_ + i],
                                  node_y_[static_cast<std::size_t>(j) * nx_ + i1],
                                  node_y_[static_cast<std::size_t>(j + 1) * nx_ + i1],
                                  node_y_[static_cast<std::size_t>(j + 1) * nx_ + i]};
            double ke[64] = {0};
            for (int gx = 0; gx < 2; ++gx) {
                for (int gy = 0; gy < 2; ++gy) {
                    const double xi = gx ? kGauss : -kGauss;
                    const double eta = gy ? kGauss : -kGauss;
                    double dxi[4], deta[4];
                    shape_deriv(xi, eta, dxi, deta);
                    // x depends on xi only: dx/dxi = dx_/2
                    double dy_dxi = 0, dy_deta = 0;
                    for (int a = 0; a < 4; ++a) {
                        dy_dxi += ya[a] * dxi[a];
                        dy_deta += ya[a] * deta[a];
                    }
                    const double jxx = 0.5 * dx_;
                    const double det = jxx * dy_deta;
                    if (!(det > 0.0))
                        throw std::runtime_error("PlaneStrainSolver: degenerate element");
                    double gx_[4], gy_[4]; // physical shape gradients
                    for (int a = 0; a < 4; ++a) {
                        gy_[a] = deta[a] / dy_deta;
                        gx_[a] = (dxi[a] - dy_dxi * gy_[a]) / jxx;
                    }
                    for (int a = 0; a < 4; ++a) {
                        for (int c2 = 0; c2 < 4; ++c2) {
                            const double dot = gx_[a] * gx_[c2] + gy_[a] * gy_[c2];
                            const double ga[2] = {gx_[a], gy_[a]};
                            const double gb[2] = {gx_[c2], gy_[c2]};
                            for (int ca = 0; ca < 2; ++ca)
                                for (int cb = 0; cb < 2; ++cb) {
                                    double v = mu * ga[cb] * gb[ca] + la * ga[ca] * gb[cb];
                                    if (ca == cb) v += mu * dot;
                                    ke[(2 * a + ca) * 8 + (2 * c2 + cb)] += det * v;
                                }
                        }
                    }
                }
            }
            const int* sl = &slot_[e * 64];
            for (int r = 0; r < 64; ++r)
                if (sl[r] >= 0) csr_val_[sl[r]] += ke[r];
        }
    }
    for (int r = 0; r < ndof_; ++r) {
        double d = 0;
        for (int k = csr_row_[r]; k < csr_row_[r + 1]; ++k)
            if (csr_col_[k] == r) d = csr_val_[k];
        if (!(d > 0.0)) throw std::runtime_error("PlaneStrainSolver: singular diagonal");
        jacobi_[r] = 1.0 / d;
    }
}

std::vector<double> PlaneStrainSolver::cg(std::span<const double> f, std::vector<double>& warm,
                                          int* iterations) const {
    const int n = ndof_;
    double fnorm = 0;
    for (double v : f) fnorm += v * v;
    fnorm = std::sqrt(fnorm);
    if (warm.size() != static_cast<std::size_t>(n)) warm.assign(n, 0.0);
    std::vector<double> x(warm);
    if (fnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        if (iterations) *iterations = 0;
        warm = x;
        return x;
    }
    auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (int r = 0; r < n; ++r) {
            double s = 0;
            for (int k = csr_row_[r]; k < csr_row_[r + 1]; ++k)
                s += csr_val_[k] * v[csr_col_[k]];
            out[r] = s;
        }
    };
    std::vector<double> r(n), z(n), p(n), ap(n);
    apply(x, ap);
    for (int i = 0; i < n; ++i) r[i] = f[i] - ap[i];
    for (int i = 0; i < n; ++i) z[i] = jacobi_[i] * r[i];
    p = z;
    double rz = 0;
    for (int i = 0; i < n; ++i) rz += r[i] * z[i];
    const double tol = 1e-11 * fnorm;
    const int maxit = std::max(20000, 40 * n);
    int it = 0;
    for (; it < maxit; ++it) {
        double rnorm = 0;
        for (int i = 0; i < n; ++i) rnorm += r[i] * r[i];
        if (std::sqrt(rnorm) <= tol) break;
        apply(p, ap);
        double pap = 0;
        for (int i = 0; i < n; ++i) pap += p[i] * ap[i];
        if (!(pap > 0.0))
            throw std::runtime_error("PlaneStrainSolver: stiffness lost positivity");
        const double alpha = rz / pap;
        for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (int i = 0; i < n; ++i) r[i] -= alpha * ap[i];
        for (int i = 0; i < n; ++i) z[i] = jacobi_[i] * r[i];
        double rz_new = 0;
        for (int i = 0; i < n; ++i) rz_new += r[i] * z[i];
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    if (it >= maxit)
        throw std::runtime_error("PlaneStrainSolver: CG failed to converge");
    if (iterations) *iterations = it;
    warm = x;
    return x;
}

void PlaneStrainSolver::element_strain(const std::vector<double>& dofs, int i, int j,
                                       double xi, double eta, const LameParams&,
                                       double& exx, double& eyy, double& exy) const {
    const int i1 = (i + 1) % nx_;
    const int nn[4][2] = {{i, j}, {i1, j}, {i1, j + 1}, {i, j + 1}};
    double ya[4];
    for (int a = 0; a < 4; ++a)
        ya[a] = node_y_[static_cast<std::size_t>(nn[a][1]) * nx_ + nn[a][0]];
    double dxi[4], deta[4];
    shape_deriv(xi, eta, dxi, deta);
    double dy_dxi = 0, dy_deta = 0;
    for (int a = 0; a < 4; ++a) {
        dy_dxi += ya[a] * dxi[a];
        dy_deta += ya[a] * deta[a];
    }
    const double jxx = 0.5 * dx_;
    double du1x = 0, du1y = 0, du2x = 0, du2y = 0;
    for (int a = 0; a < 4; ++a) {
        const double gy = deta[a] / dy_deta;
        const double gx = (dxi[a] - dy_dxi * gy) / jxx;
        const std::size_t nd = 2 * (static_cast<std::size_t>(nn[a][1]) * nx_ + nn[a][0]);
        du1x += dofs[nd] * gx;
        du1y += dofs[nd] * gy;
        du2x += dofs[nd + 1] * gx;
        du2y += dofs[nd + 1] * gy;
    }
    exx = du1x;
    eyy = du2y;
    exy = 0.5 * (du1y + du2x);
}

ElasticField PlaneStrainSolver::solve(const Profile& h, const LameParams& p) {
    p.validate();
    assemble(h, p);

    // load from the constant mismatch prestrain E0 = diag(e0, 0):
    // f(w) = -int C E0 : E(w),  C E0 = diag((2mu+lambda) e0, lambda e0)
    const double s11 = (2.0 * p.mu + p.lambda) * p.e0;
    const double s22 = p.lambda * p.e0;
    std::vector<double> f(ndof_, 0.0);
    for (int j = 0; j < ny_; ++j) {
        for (int i = 0; i < nx_; ++i) {
            const int i1 = (i + 1) % nx_;
            const int nn[4][2] = {{i, j}, {i1, j}, {i1, j + 1}, {i, j + 1}};
            double ya[4];
            for (int a = 0; a < 4; ++a)
                ya[a] = node_y_[static_cast<std::size_t>(nn[a][1]) * nx_ + nn[a][0]];
            for (int gx = 0; gx < 2; ++gx)
                for (int gy = 0; gy < 2; ++gy) {
                    const double xi = gx ? kGauss : -kGauss;
                    const double eta = gy ? kGauss : -kGauss;
                    double dxi[4], deta[4];
                    shape_deriv(xi, eta, dxi, deta);
                    double dy_dxi = 0, dy_deta = 0;
                    for (int a = 0; a < 4; ++a) {
                        dy_dxi += ya[a] * dxi[a];
                        dy_deta += ya[a] * deta[a];
                    }
                    const double jxx = 0.5 * dx_;
                    const double det = jxx * dy_deta;
                    for (int a = 0; a < 4; ++a) {
                        const double gyv = deta[a] / dy_deta;
                        const double gxv = (dxi[a] - dy_dxi * gyv) / jxx;
                        const int d1 = dof_index(nn[a][0], nn[a][1], 0);
                        const int d2 = dof_index(nn[a][0], nn[a][1], 1);
                        if (d1 >= 0) f[d1] -= det * s11 * gxv;
                        if (d2 >= 0) f[d2] -= det * s22 * gyv;
                    }
                }
        }
    }

    int its = 0;
    std::vector<double> x = cg(f, warm_u_, &its);

    ElasticField out;
    out.nx = nx_;
    out.ny = ny_;
    out.b = b_;
    out.params = p;
    out.heights = heights_;
    out.cg_iterations = its;
    out.u.assign(2 * static_cast<std::size_t>(ny_ + 1) * nx_, 0.0);
    for (int j = 1; j <= ny_; ++j)
        for (int i = 0; i < nx_; ++i)
            for (int c = 0; c < 2; ++c)
                out.u[2 * out.node(i, j) + c] = x[dof_index(i, j, c)];

    // total energy int W(E0 + E(utilde)) by 2x2 Gauss per element
    double energy = 0;
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i) {
            const int i1 = (i + 1) % nx_;
            const int nn[4][2] = {{i, j}, {i1, j}, {i1, j + 1}, {i, j + 1}};
            double ya[4];
            for (int a = 0; a < 4; ++a)
                ya[a] = node_y_[static_cast<std::size_t>(nn[a][1]) * nx_ + nn[a][0]];
            for (int gx = 0; gx < 2; ++gx)
                for (int gy = 0; gy < 2; ++gy) {
                    const double xi = gx ? kGauss : -kGauss;
                    const double eta = gy ? kGauss : -kGauss;
                    double dxi[4], deta[4];
                    shape_deriv(xi, eta, dxi, deta);
                    double dy_deta = 0;
                    for (int a = 0; a < 4; ++a) dy_deta += ya[a] * deta[a];
                    const double det = 0.5 * dx_ * dy_deta;
                    double exx, eyy, exy;
                    element_strain(out.u, i, j, xi, eta, p, exx, eyy, exy);
                    energy += det * strain_energy_density(p, exx + p.e0, eyy, exy);
                }
        }
    out.energy = energy;

    // W(E(u)) at top-edge nodes: average the two adjacent element corners
    out.trace_w.assign(nx_, 0.0);
    for (int i = 0; i < nx_; ++i) {
        const int il = (i + nx_ - 1) % nx_;
        double exx, eyy, exy;
        element_strain(out.u, il, ny_ - 1, 1.0, 1.0, p, exx, eyy, exy);
        const double wl = strain_energy_density(p, exx + p.e0, eyy, exy);
        element_strain(out.u, i, ny_ - 1, -1.0, 1.0, p, exx, eyy, exy);
        const double wr = strain_energy_density(p, exx + p.e0, eyy, exy);
        out.trace_w[i] = 0.5 * (wl + wr);
    }
    return out;
}

PlaneStrainSolver::VPhi PlaneStrainSolver::v_phi(const Profile& h, const ElasticField& field,
                                                 std::span<const double> phi,
                                                 std::vector<double>* warm) {
    if (static_cast<int>(phi.size()) != nx_)
        throw std::invalid_argument("v_phi: phi must be sampled at the profile nodes");
    const LameParams& p = field.params;
    if (heights_.size() != h.size() ||
        !std::equal(heights_.begin(), heights_.end(), h.values().begin()))
        assemble(h, p);

    // load f(w) = -int_0^b phi(x) (sigma(u) tau)(x) . d/dx[w(x, h(x))] dx,
    // sigma from the equilibrium field (prestrain included), tau the unit
    // tangent of the discrete surface polyline
    std::vector<double> f(ndof_, 0.0);
    for (int i = 0; i < nx_; ++i) {
        const int i1 = (i + 1) % nx_;
        const double hi = heights_[i], hi1 = heights_[i1];
        const double slope = (hi1 - hi) / dx_;
        const double len = std::sqrt(1.0 + slope * slope);
        const double tau1 = 1.0 / len, tau2 = slope / len;
        double seg[2] = {0, 0}; // int phi (sigma tau)_c dx over the segment
        for (int g = 0; g < 2; ++g) {
            const double xi = g ? kGauss : -kGauss;
            double exx, eyy, exy;
            element_strain(field.u, i, ny_ - 1, xi, 1.0, p, exx, eyy, exy);
            exx += p.e0;
            const double tr = exx + eyy;
            const double sxx = 2.0 * p.mu * exx + p.lambda * tr;
            const double syy = 2.0 * p.mu * eyy + p.lambda * tr;
            const double sxy = 2.0 * p.mu * exy;
            const double st1 = sxx * tau1 + sxy * tau2;
            const double st2 = sxy * tau1 + syy * tau2;
            const double phig = 0.5 * ((1.0 - xi) * phi[i] + (1.0 + xi) * phi[i1]);
            seg[0] += 0.5 * dx_ * phig * st1;
            seg[1] += 0.5 * dx_ * phig * st2;
        }
        for (int c = 0; c < 2; ++c) {
            f[dof_index(i1, ny_, c)] -= seg[c] / dx_;
            f[dof_index(i, ny_, c)] += seg[c] / dx_;
        }
    }

    int its = 0;
    std::vector<double> x = cg(f, warm ? *warm : warm_v_, &its);

    VPhi out;
    out.cg_iterations = its;
    out.u.assign(2 * static_cast<std::size_t>(ny_ + 1) * nx_, 0.0);
    for (int j = 1; j <= ny_; ++j)
        for (int i = 0; i < nx_; ++i)
            for (int c = 0; c < 2; ++c)
                out.u[2 * (static_cast<std::size_t>(j) * nx_ + i) + c] =
                    x[dof_index(i, j, c)];

    double energy = 0;
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i) {
            const int i1 = (i + 1) % nx_;
            const int nn[4][2] = {{i, j}, {i1, j}, {i1, j + 1}, {i, j + 1}};
            double ya[4];
            for (int a = 0; a < 4; ++a)
                ya[a] = node_y_[static_cast<std::size_t>(nn[a][1]) * nx_ + nn[a][0]];
            for (int gx = 0; gx < 2; ++gx)
                for (int gy = 0; gy < 2; ++gy) {
                    const double xi = gx ? kGauss : -kGauss;
                    const double eta = gy ? kGauss : -kGauss;
                    double dxi[4], deta[4];
                    shape_deriv(xi, eta, dxi, deta);
                    double dy_deta = 0;
                    for (int a = 0; a < 4; ++a) dy_deta += ya[a] * deta[a];
                    const double det = 0.5 * dx_ * dy_deta;
                    double exx, eyy, exy;
                    element_strain(out.u, i, j, xi, eta, p, exx, eyy, exy);
                    energy += det * strain_energy_density(p, exx, eyy, exy);
                }
        }
    out.energy = energy;
    return out;
}

ElasticField solve_equilibrium(const Profile& h, const LameParams& p, int ny) {
    PlaneStrainSolver solver(h.n(), ny, h.b());
    return solver.solve(h, p);
}

std::vector<double> boundary_energy_trace(const ElasticField& field) {
    return field.trace_w;
}

PlaneStrainSolver::VPhi v_phi_solve(const Profile& h, const ElasticField& field,
                                    std::span<const double> phi) {
    PlaneStrainSolver solver(field.nx, field.ny, field.b);
    return solver.v_phi(h, field, phi);
}

void write_displacement_csv(const ElasticField& field, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
    std::fprintf(fp, "x,y,u1,u2\n");
    for (int j = 0; j <= field.ny; ++j)
        for (int i = 0; i < field.nx; ++i) {
            double x, y, u1, u2;
            field.position(i, j, x, y);
            field.displacement(i, j, u1, u2);
            std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g\n", x, y, u1, u2);
        }
    std::fclose(fp);
}

} // namespace filmflow
