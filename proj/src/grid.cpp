#include "filmflow/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace filmflow {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

Profile::Profile(int m, double b, int n, std::vector<double> values)
    : m_(m), b_(b), n_(n), values_(std::move(values)) {
    if (m_ != 1 && m_ != 2)
        throw std::invalid_argument("Profile: m must be 1 or 2, got " + std::to_string(m_));
    if (!(b_ > 0.0) || !std::isfinite(b_))
        throw std::invalid_argument("Profile: period b must be positive and finite");
    if (!is_power_of_two(n_) || n_ < 4)
        throw std::invalid_argument("Profile: n must be a power of two >= 4, got " +
                                    std::to_string(n_));
    std::size_t expect = (m_ == 1) ? static_cast<std::size_t>(n_)
                                   : static_cast<std::size_t>(n_) * n_;
    if (values_.size() != expect)
        throw std::invalid_argument("Profile: expected " + std::to_string(expect) +
                                    " values, got " + std::to_string(values_.size()));
    for (double v : values_)
        if (!std::isfinite(v) || v <= 0.0)
            throw std::invalid_argument("Profile: heights must be finite and positive");
}

Profile Profile::flat(int m, double b, int n, double height) {
    std::size_t sz = (m == 1) ? static_cast<std::size_t>(n)
                              : static_cast<std::size_t>(n) * n;
    return Profile(m, b, n, std::vector<double>(sz, height));
}

double Profile::cell_volume() const {
    double d = spacing();
    return m_ == 1 ? d : d * d;
}

void Profile::assign(std::vector<double> values) {
    *this = Profile(m_, b_, n_, std::move(values));
}

double grid_mean(std::span<const double> f) {
    double s = 0.0;
    for (double v : f) s += v;
    return s / static_cast<double>(f.size());
}

double grid_integral(std::span<const double> f, int m, int n, double b) {
    double cell = std::pow(b / n, m);
    double s = 0.0;
    for (double v : f) s += v;
    return s * cell;
}

double grid_l2(std::span<const double> f, int m, int n, double b) {
    double cell = std::pow(b / n, m);
    double s = 0.0;
    for (double v : f) s += v * v;
    return std::sqrt(s * cell);
}

double grid_lp(std::span<const double> f, int m, int n, double b, double p) {
    if (std::isinf(p)) {
        double mx = 0.0;
        for (double v : f) mx = std::max(mx, std::abs(v));
        return mx;
    }
    if (!(p >= 1.0)) throw std::invalid_argument("grid_lp: p must be >= 1");
    double cell = std::pow(b / n, m);
    double s = 0.0;
    for (double v : f) s += std::pow(std::abs(v), p);
    return std::pow(s * cell, 1.0 / p);
}

// ---------------------------------------------------------------------------
// FFT plumbing.  FFTW planning is not thread safe; plans are cached per
// thread and creation is serialized.  FFTW_ESTIMATE keeps planning
// deterministic.
// ---------------------------------------------------------------------------

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanKey {
    int m, n, sign;
    bool operator<(const PlanKey& o) const {
        if (m != o.m) return m < o.m;
        if (n != o.n) return n < o.n;
        return sign < o.sign;
    }
};

struct PlanEntry {
    fftw_plan plan = nullptr;
    fftw_complex* buf = nullptr;
    std::size_t size = 0;
};

class PlanCache {
public:
    ~PlanCache() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        for (auto& [k, e] : cache_) {
            fftw_destroy_plan(e.plan);
            fftw_free(e.buf);
        }
    }
    PlanEntry& get(int m, int n, int sign) {
        auto it = cache_.find({m, n, sign});
        if (it != cache_.end()) return it->second;
        PlanEntry e;
        e.size = (m == 1) ? static_cast<std::size_t>(n)
                          : static_cast<std::size_t>(n) * n;
        e.buf = fftw_alloc_complex(e.size);
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            e.plan = (m == 1)
                         ? fftw_plan_dft_1d(n, e.buf, e.buf, sign, FFTW_ESTIMATE)
                         : fftw_plan_dft_2d(n, n, e.buf, e.buf, sign, FFTW_ESTIMATE);
        }
        if (!e.plan) throw std::runtime_error("fftw plan creation failed");
        return cache_.emplace(PlanKey{m, n, sign}, e).first->second;
    }

private:
    std::map<PlanKey, PlanEntry> cache_;
};

PlanCache& plan_cache() {
    thread_local PlanCache cache;
    return cache;
}

} // namespace

namespace spectral {

int signed_index(int i, int n) { return (i <= n / 2) ? i : i - n; }

Spectrum analyze(std::span<const double> f, int m, int n, double b) {
    PlanEntry& e = plan_cache().get(m, n, FFTW_FORWARD);
    if (f.size() != e.size) throw std::invalid_argument("analyze: size mismatch");
    for (std::size_t i = 0; i < e.size; ++i) {
        e.buf[i][0] = f[i];
        e.buf[i][1] = 0.0;
    }
    fftw_execute(e.plan);
    Spectrum s;
    s.m = m;
    s.n = n;
    s.b = b;
    s.c.resize(e.size);
    double scale = 1.0 / static_cast<double>(e.size);
    for (std::size_t i = 0; i < e.size; ++i)
        s.c[i] = std::complex<double>(e.buf[i][0] * scale, e.buf[i][1] * scale);
    return s;
}

std::vector<double> synthesize(const Spectrum& s) {
    PlanEntry& e = plan_cache().get(s.m, s.n, FFTW_BACKWARD);
    if (s.c.size() != e.size) throw std::invalid_argument("synthesize: size mismatch");
    for (std::size_t i = 0; i < e.size; ++i) {
        e.buf[i][0] = s.c[i].real();
        e.buf[i][1] = s.c[i].imag();
    }
    fftw_execute(e.plan);
    std::vector<double> out(e.size);
    for (std::size_t i = 0; i < e.size; ++i) out[i] = e.buf[i][0];
    return out;
}

namespace {

// Applies multiplier(kx, ky) to every coefficient; ky is 0 for m == 1.
template <class F>
void apply_multiplier(Spectrum& s, F&& mult) {
    int n = s.n;
    if (s.m == 1) {
        for (int i = 0; i < n; ++i)
            s.c[i] *= mult(signed_index(i, n), 0);
    } else {
        for (int iy = 0; iy < n; ++iy) {
            int ky = signed_index(iy, n);
            for (int ix = 0; ix < n; ++ix)
                s.c[static_cast<std::size_t>(iy) * n + ix] *= mult(signed_index(ix, n), ky);
        }
    }
}

} // namespace

void apply_first_derivative(Spectrum& s, int axis) {
    if (axis < 0 || axis >= s.m) throw std::invalid_argument("derivative axis out of range");
    double w = 2.0 * M_PI / s.b;
    int half = s.n / 2;
    apply_multiplier(s, [&](int kx, int ky) -> std::complex<double> {
        int k = (axis == 0) ? kx : ky;
        if (k == half || k == -half) return {0.0, 0.0};
        return {0.0, w * k};
    });
}

void apply_second_derivative(Spectrum& s, int axis_a, int axis_b) {
    if (axis_a < 0 || axis_a >= s.m || axis_b < 0 || axis_b >= s.m)
        throw std::invalid_argument("derivative axis out of range");
    double w = 2.0 * M_PI / s.b;
    int half = s.n / 2;
    if (axis_a == axis_b) {
        apply_multiplier(s, [&](int kx, int ky) -> std::complex<double> {
            double k = (axis_a == 0) ? kx : ky;
            return {-(w * k) * (w * k), 0.0};
        });
    } else {
        apply_multiplier(s, [&](int kx, int ky) -> std::complex<double> {
            if (kx == half || kx == -half || ky == half || ky == -half) return {0.0, 0.0};
            return {-(w * kx) * (w * ky), 0.0};
        });
    }
}

} // namespace spectral

// ---------------------------------------------------------------------------
// Backend derivatives
// ---------------------------------------------------------------------------

namespace {

inline int wrap(int i, int n) { return (i % n + n) % n; }

std::vector<double> fd_first(std::span<const double> f, int m, int n, double b, int axis) {
    std::vector<double> out(f.size());
    double inv2d = n / (2.0 * b);
    if (m == 1) {
        for (int i = 0; i < n; ++i)
            out[i] = (f[wrap(i + 1, n)] - f[wrap(i - 1, n)]) * inv2d;
    } else {
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                std::size_t idx = static_cast<std::size_t>(iy) * n + ix;
                if (axis == 0)
                    out[idx] = (f[static_cast<std::size_t>(iy) * n + wrap(ix + 1, n)] -
                                f[static_cast<std::size_t>(iy) * n + wrap(ix - 1, n)]) * inv2d;
                else
                    out[idx] = (f[static_cast<std::size_t>(wrap(iy + 1, n)) * n + ix] -
                                f[static_cast<std::size_t>(wrap(iy - 1, n)) * n + ix]) * inv2d;
            }
    }
    return out;
}

std::vector<double> fd_second(std::span<const double> f, int m, int n, double b,
                              int axis_a, int axis_b) {
    std::vector<double> out(f.size());
    double d = b / n;
    if (axis_a == axis_b) {
        double invd2 = 1.0 / (d * d);
        if (m == 1) {
            for (int i = 0; i < n; ++i)
                out[i] = (f[wrap(i + 1, n)] - 2.0 * f[i] + f[wrap(i - 1, n)]) * invd2;
        } else {
            for (int iy = 0; iy < n; ++iy)
                for (int ix = 0; ix < n; ++ix) {
                    std::size_t idx = static_cast<std::size_t>(iy) * n + ix;
                    if (axis_a == 0)
                        out[idx] = (f[static_cast<std::size_t>(iy) * n + wrap(ix + 1, n)] -
                                    2.0 * f[idx] +
                                    f[static_cast<std::size_t>(iy) * n + wrap(ix - 1, n)]) * invd2;
                    else
                        out[idx] = (f[static_cast<std::size_t>(wrap(iy + 1, n)) * n + ix] -
                                    2.0 * f[idx] +
                                    f[static_cast<std::size_t>(wrap(iy - 1, n)) * n + ix]) * invd2;
                }
        }
    } else {
        double inv4d2 = 1.0 / (4.0 * d * d);
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                std::size_t idx = static_cast<std::size_t>(iy) * n + ix;
                out[idx] = (f[static_cast<std::size_t>(wrap(iy + 1, n)) * n + wrap(ix + 1, n)] -
                            f[static_cast<std::size_t>(wrap(iy + 1, n)) * n + wrap(ix - 1, n)] -
                            f[static_cast<std::size_t>(wrap(iy - 1, n)) * n + wrap(ix + 1, n)] +
                            f[static_cast<std::size_t>(wrap(iy - 1, n)) * n + wrap(ix - 1, n)]) * inv4d2;
            }
    }
    return out;
}

} // namespace

std::vector<double> derivative(std::span<const double> f, int m, int n, double b,
                               int axis, DiffBackend be) {
    if (be == DiffBackend::fd2) return fd_first(f, m, n, b, axis);
    spectral::Spectrum s = spectral::analyze(f, m, n, b);
    spectral::apply_first_derivative(s, axis);
    return spectral::synthesize(s);
}

std::vector<double> second_derivative(std::span<const double> f, int m, int n, double b,
                                      int axis_a, int axis_b, DiffBackend be) {
    if (be == DiffBackend::fd2) return fd_second(f, m, n, b, axis_a, axis_b);
    spectral::Spectrum s = spectral::analyze(f, m, n, b);
    spectral::apply_second_derivative(s, axis_a, axis_b);
    return spectral::synthesize(s);
}

std::vector<double> divergence(const std::vector<std::vector<double>>& comp,
                               int m, int n, double b, DiffBackend be) {
    if (static_cast<int>(comp.size()) != m)
        throw std::invalid_argument("divergence: component count must equal m");
    std::vector<double> out(comp[0].size(), 0.0);
    for (int axis = 0; axis < m; ++axis) {
        std::vector<double> d = derivative(comp[axis], m, n, b, axis, be);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
    }
    return out;
}

std::uint64_t SplitMix64::next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SplitMix64::uniform() {
    return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
}

double SplitMix64::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do { u1 = uniform(); } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

} // namespace filmflow
