#include "filmflow/surface_pde.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace filmflow {

namespace {

void subtract_mean(std::vector<double>& v) {
    double mu = grid_mean(v);
    for (double& x : v) x -= mu;
}

} // namespace

MetricOperator::MetricOperator(const Profile& base, DiffBackend be)
    : m_(base.m()), n_(base.n()), b_(base.b()), cell_(base.cell_volume()), be_(be) {
    SurfaceMetrics g = metrics(base, be);
    J_ = g.area_element;
    const std::size_t sz = base.size();

    if (m_ == 1) {
        A_.assign(1, std::vector<double>(sz));
        for (std::size_t i = 0; i < sz; ++i) A_[0][i] = 1.0 / J_[i];  // (1 - h'^2/J^2) J
    } else {
        A_.assign(3, std::vector<double>(sz));
        for (std::size_t i = 0; i < sz; ++i) {
            double gx = g.gradient[0][i], gy = g.gradient[1][i], J = J_[i];
            A_[0][i] = (1.0 - gx * gx / (J * J)) * J;
            A_[1][i] = (-gx * gy / (J * J)) * J;
            A_[2][i] = (1.0 - gy * gy / (J * J)) * J;
        }
    }

    if (be_ == DiffBackend::spectral) {
        double w = M_PI * n_ / b_;  // Nyquist wavenumber
        stab_sigma_.resize(m_);
        double abar = 0.0;
        if (m_ == 1) {
            stab_sigma_[0] = w * w * grid_mean(A_[0]);
            abar = grid_mean(A_[0]);
        } else {
            stab_sigma_[0] = w * w * grid_mean(A_[0]);
            stab_sigma_[1] = w * w * grid_mean(A_[2]);
            abar = 0.5 * (grid_mean(A_[0]) + grid_mean(A_[2]));
        }
        precond_scale_ = abar;
    } else {
        // P1 (m == 1) / Q1 (m == 2) stiffness with element-averaged A,
        // scaled by 1/cell so that <L v, phi>_cell equals the bilinear form.
        std::map<std::pair<int, int>, double> entries;
        auto add = [&](int i, int j, double v) { entries[{i, j}] += v; };
        if (m_ == 1) {
            double d = b_ / n_;
            for (int i = 0; i < n_; ++i) {
                int ip = (i + 1) % n_;
                double a = 0.5 * (A_[0][i] + A_[0][ip]) / d;  // int over edge of A v' phi'
                add(i, i, a);
                add(ip, ip, a);
                add(i, ip, -a);
                add(ip, i, -a);
            }
        } else {
            // Reference square [-1,1]^2, nodes (-,-),(+,-),(+,+),(-,+);
            // physical gradient = (2/d) ref gradient, det = (d/2)^2, so the
            // element matrix is scale-free.
            const double gp = 1.0 / std::sqrt(3.0);
            const double gauss[4][2] = {{-gp, -gp}, {gp, -gp}, {gp, gp}, {-gp, gp}};
            auto shape_grad = [](int a, double xi, double eta, double& dx, double& dy) {
                const double sx[4] = {-1.0, 1.0, 1.0, -1.0};
                const double sy[4] = {-1.0, -1.0, 1.0, 1.0};
                dx = 0.25 * sx[a] * (1.0 + sy[a] * eta);
                dy = 0.25 * sy[a] * (1.0 + sx[a] * xi);
            };
            for (int iy = 0; iy < n_; ++iy)
                for (int ix = 0; ix < n_; ++ix) {
                    int node[4] = {iy * n_ + ix,
                                   iy * n_ + (ix + 1) % n_,
                                   ((iy + 1) % n_) * n_ + (ix + 1) % n_,
                                   ((iy + 1) % n_) * n_ + ix};
                    double a11 = 0.0, a12 = 0.0, a22 = 0.0;
                    for (int c = 0; c < 4; ++c) {
                        a11 += 0.25 * A_[0][node[c]];
                        a12 += 0.25 * A_[1][node[c]];
                        a22 += 0.25 * A_[2][node[c]];
                    }
                    for (const auto& g2 : gauss) {
                        double ga[4][2];
                        for (int a = 0; a < 4; ++a)
                            shape_grad(a, g2[0], g2[1], ga[a][0], ga[a][1]);
                        for (int a = 0; a < 4; ++a)
                            for (int c = 0; c < 4; ++c) {
                                double qx = a11 * ga[c][0] + a12 * ga[c][1];
                                double qy = a12 * ga[c][0] + a22 * ga[c][1];
                                add(node[a], node[c], qx * ga[a][0] + qy * ga[a][1]);
                            }
                    }
                }
        }
        std::size_t nnodes = sz;
        csr_row_.assign(nnodes + 1, 0);
        for (const auto& [ij, v] : entries) csr_row_[ij.first + 1]++;
        for (std::size_t i = 0; i < nnodes; ++i) csr_row_[i + 1] += csr_row_[i];
        csr_col_.resize(entries.size());
        csr_val_.resize(entries.size());
        std::vector<int> cursor(csr_row_.begin(), csr_row_.end() - 1);
        for (const auto& [ij, v] : entries) {
            int at = cursor[ij.first]++;
            csr_col_[at] = ij.second;
            csr_val_[at] = v / cell_;
        }
        jacobi_.assign(nnodes, 0.0);
        for (std::size_t i = 0; i < nnodes; ++i)
            for (int k = csr_row_[i]; k < csr_row_[i + 1]; ++k)
                if (csr_col_[k] == static_cast<int>(i)) jacobi_[i] = csr_val_[k];
    }
}

std::vector<double> MetricOperator::apply_spectral(std::span<const double> v) const {
    const std::size_t sz = v.size();
    spectral::Spectrum vhat = spectral::analyze(v, m_, n_, b_);

    std::vector<std::vector<double>> dv(m_);
    for (int a = 0; a < m_; ++a) {
        spectral::Spectrum s = vhat;
        spectral::apply_first_derivative(s, a);
        dv[a] = spectral::synthesize(s);
    }

    std::vector<std::vector<double>> q(m_, std::vector<double>(sz));
    if (m_ == 1) {
        for (std::size_t i = 0; i < sz; ++i) q[0][i] = A_[0][i] * dv[0][i];
    } else {
        for (std::size_t i = 0; i < sz; ++i) {
            q[0][i] = A_[0][i] * dv[0][i] + A_[1][i] * dv[1][i];
            q[1][i] = A_[1][i] * dv[0][i] + A_[2][i] * dv[1][i];
        }
    }

    spectral::Spectrum acc;
    acc.m = m_;
    acc.n = n_;
    acc.b = b_;
    acc.c.assign(sz, {0.0, 0.0});
    for (int a = 0; a < m_; ++a) {
        spectral::Spectrum s = spectral::analyze(q[a], m_, n_, b_);
        spectral::apply_first_derivative(s, a);
        for (std::size_t i = 0; i < sz; ++i) acc.c[i] += s.c[i];
    }
    // L = -Div(A Dv) plus flat stiffness on the Nyquist modes the derivative
    // convention zeroes out.
    const int half = n_ / 2;
    if (m_ == 1) {
        for (int i = 0; i < n_; ++i) {
            std::complex<double> out = -acc.c[i];
            if (i == half) out += stab_sigma_[0] * vhat.c[i];
            acc.c[i] = out;
        }
    } else {
        for (int iy = 0; iy < n_; ++iy)
            for (int ix = 0; ix < n_; ++ix) {
                std::size_t idx = static_cast<std::size_t>(iy) * n_ + ix;
                std::complex<double> out = -acc.c[idx];
                if (ix == half) out += stab_sigma_[0] * vhat.c[idx];
                if (iy == half) out += stab_sigma_[1] * vhat.c[idx];
                acc.c[idx] = out;
            }
    }
    return spectral::synthesize(acc);
}

std::vector<double> MetricOperator::apply_csr(std::span<const double> v) const {
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        double s = 0.0;
        for (int k = csr_row_[i]; k < csr_row_[i + 1]; ++k)
            s += csr_val_[k] * v[csr_col_[k]];
        out[i] = s;
    }
    return out;
}

std::vector<double> MetricOperator::apply(std::span<const double> v) const {
    if (v.size() != J_.size()) throw std::invalid_argument("MetricOperator::apply: size mismatch");
    return be_ == DiffBackend::spectral ? apply_spectral(v) : apply_csr(v);
}

std::vector<double> MetricOperator::precondition(std::span<const double> r) const {
    if (be_ == DiffBackend::fd2) {
        std::vector<double> z(r.size());
        for (std::size_t i = 0; i < r.size(); ++i)
            z[i] = jacobi_[i] > 0.0 ? r[i] / jacobi_[i] : r[i];
        return z;
    }
    // Flat inverse Laplacian: diagonal in the Fourier basis of the operator.
    spectral::Spectrum s = spectral::analyze(r, m_, n_, b_);
    double w = 2.0 * M_PI / b_;
    if (m_ == 1) {
        for (int i = 0; i < n_; ++i) {
            int k = spectral::signed_index(i, n_);
            double lam = precond_scale_ * (w * k) * (w * k);
            s.c[i] = (k == 0) ? 0.0 : s.c[i] / lam;
        }
    } else {
        for (int iy = 0; iy < n_; ++iy)
            for (int ix = 0; ix < n_; ++ix) {
                int kx = spectral::signed_index(ix, n_);
                int ky = spectral::signed_index(iy, n_);
                std::size_t idx = static_cast<std::size_t>(iy) * n_ + ix;
                double lam = precond_scale_ * w * w * (double(kx) * kx + double(ky) * ky);
                s.c[idx] = (kx == 0 && ky == 0) ? 0.0 : s.c[idx] / lam;
            }
    }
    return spectral::synthesize(s);
}

std::vector<double> MetricOperator::solve(std::span<const double> f, double rel_tol,
                                          std::vector<double>* warm, int* iterations) const {
    const std::size_t sz = J_.size();
    if (f.size() != sz) throw std::invalid_argument("MetricOperator::solve: size mismatch");

    double fnorm = 0.0;
    for (double x : f) fnorm += x * x;
    fnorm = std::sqrt(fnorm);
    if (fnorm == 0.0) {
        if (iterations) *iterations = 0;
        std::vector<double> zero(sz, 0.0);
        if (warm) *warm = zero;
        return zero;
    }

    std::vector<double> x(sz, 0.0);
    if (warm && warm->size() == sz) x = *warm;
    subtract_mean(x);

    std::vector<double> r(sz);
    {
        std::vector<double> lx = apply(x);
        for (std::size_t i = 0; i < sz; ++i) r[i] = f[i] - lx[i];
    }
    subtract_mean(r);

    std::vector<double> z = precondition(r);
    subtract_mean(z);
    std::vector<double> p = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < sz; ++i) rz += r[i] * z[i];

    const int maxit = max_iterations();
    int it = 0;
    for (; it < maxit; ++it) {
        double rnorm = 0.0;
        for (double v : r) rnorm += v * v;
        if (std::sqrt(rnorm) <= rel_tol * fnorm) break;

        std::vector<double> lp = apply(p);
        double plp = 0.0;
        for (std::size_t i = 0; i < sz; ++i) plp += p[i] * lp[i];
        if (!(plp > 0.0))
            throw std::runtime_error("MetricOperator::solve: operator lost positivity");
        double alpha = rz / plp;
        for (std::size_t i = 0; i < sz; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * lp[i];
        }
        subtract_mean(r);
        z = precondition(r);
        subtract_mean(z);
        double rz_new = 0.0;
        for (std::size_t i = 0; i < sz; ++i) rz_new += r[i] * z[i];
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < sz; ++i) p[i] = z[i] + beta * p[i];
    }
    if (it >= maxit)
        throw std::runtime_error("MetricOperator::solve: CG did not converge within " +
                                 std::to_string(maxit) + " iterations");
    if (iterations) *iterations = it;
    subtract_mean(x);
    if (warm) *warm = x;
    return x;
}

double MetricOperator::dirichlet_energy(std::span<const double> v) const {
    std::vector<double> lv = apply(v);
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += lv[i] * v[i];
    return s * cell_;
}

std::vector<double> laplace_beltrami_solve(const Profile& base, std::span<const double> rhs,
                                           DiffBackend be, int* iterations) {
    MetricOperator op(base, be);
    const std::size_t sz = base.size();
    if (rhs.size() != sz)
        throw std::invalid_argument("laplace_beltrami_solve: rhs size mismatch");

    const std::vector<double>& J = op.area_element();
    std::vector<double> f(sz);
    double surf_int = 0.0, l2 = 0.0;
    for (std::size_t i = 0; i < sz; ++i) {
        f[i] = -rhs[i] * J[i];
        surf_int += rhs[i] * J[i];
        l2 += f[i] * f[i];
    }
    surf_int *= op.cell();
    l2 = std::sqrt(l2 * op.cell());
    double area_sqrt = std::pow(base.b(), base.m() * 0.5);
    if (l2 > 0.0 && std::abs(surf_int) > 1e-10 * l2 * area_sqrt)
        throw std::invalid_argument(
            "laplace_beltrami_solve: rhs violates the compatibility condition "
            "(surface mean of rhs must vanish)");

    double mu = grid_mean(f);
    for (double& x : f) x -= mu;

    std::vector<double> v = op.solve(f, 1e-10, nullptr, iterations);

    // Normalization int_Gamma v dH = 0.
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < sz; ++i) {
        num += v[i] * J[i];
        den += J[i];
    }
    double shift = num / den;
    for (double& x : v) x -= shift;
    return v;
}

double hminus1_norm(std::span<const double> f, int m, int n, double b) {
    std::size_t sz = (m == 1) ? static_cast<std::size_t>(n)
                              : static_cast<std::size_t>(n) * n;
    if (f.size() != sz) throw std::invalid_argument("hminus1_norm: size mismatch");
    double mean = grid_mean(f);
    double l2 = grid_l2(f, m, n, b);
    if (l2 > 0.0 && std::abs(mean) * std::pow(b, m) > 1e-10 * l2 * std::pow(b, m * 0.5))
        throw std::invalid_argument("hminus1_norm: f must have zero flat mean");

    spectral::Spectrum s = spectral::analyze(f, m, n, b);
    double w = 2.0 * M_PI / b;
    double acc = 0.0;
    if (m == 1) {
        for (int i = 0; i < n; ++i) {
            int k = spectral::signed_index(i, n);
            if (k == 0) continue;
            acc += std::norm(s.c[i]) / (w * w * double(k) * k);
        }
    } else {
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                int kx = spectral::signed_index(ix, n);
                int ky = spectral::signed_index(iy, n);
                if (kx == 0 && ky == 0) continue;
                double k2 = double(kx) * kx + double(ky) * ky;
                acc += std::norm(s.c[static_cast<std::size_t>(iy) * n + ix]) / (w * w * k2);
            }
    }
    return std::sqrt(acc * std::pow(b, m));
}

PenaltyResult mm_penalty(const MetricOperator& op, std::span<const double> h,
                         std::span<const double> h_prev, std::vector<double>* warm) {
    const std::size_t sz = h.size();
    if (h_prev.size() != sz || op.area_element().size() != sz)
        throw std::invalid_argument("mm_penalty: size mismatch");

    std::vector<double> f(sz);
    double dmean = 0.0;
    for (std::size_t i = 0; i < sz; ++i) {
        f[i] = -(h[i] - h_prev[i]);
        dmean += f[i];
    }
    dmean /= static_cast<double>(sz);
    for (double& x : f) x -= dmean;

    PenaltyResult res;
    res.v = op.solve(f, 1e-10, warm, &res.cg_iterations);
    // (1/2) <L v, v> = -(1/2) <h - h_prev, v>; the operator form is reported.
    res.value = 0.5 * op.dirichlet_energy(res.v);

    // J-weighted normalization (does not affect the penalty).
    const std::vector<double>& J = op.area_element();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < sz; ++i) {
        num += res.v[i] * J[i];
        den += J[i];
    }
    double shift = num / den;
    for (double& x : res.v) x -= shift;
    if (warm) *warm = res.v;
    return res;
}

PenaltyResult mm_penalty(const Profile& h, const Profile& h_prev, DiffBackend be) {
    if (h.m() != h_prev.m() || h.n() != h_prev.n() || h.b() != h_prev.b())
        throw std::invalid_argument("mm_penalty: profiles live on different grids");
    double v0 = volume(h), v1 = volume(h_prev);
    if (std::abs(v0 - v1) > 1e-10 * std::max(std::abs(v0), std::abs(v1)))
        throw std::invalid_argument("mm_penalty: profiles must enclose equal volumes");
    MetricOperator op(h_prev, be);
    return mm_penalty(op, h.values(), h_prev.values(), nullptr);
}

} // namespace filmflow
