#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace filmflow {

/// Differentiation backend for all grid calculus.
///   spectral : trigonometric interpolation (default, exponentially accurate
///              for smooth periodic data)
///   fd2      : second-order centered finite differences
enum class DiffBackend { spectral, fd2 };

/// Periodic height profile h : (0,b)^m -> (0, inf) sampled on a uniform grid
/// with n points per axis, n a power of two.  Storage is row-major,
/// index = iy*n + ix for m == 2 and index = ix for m == 1.
class Profile {
public:
    Profile(int m, double b, int n, std::vector<double> values);

    static Profile flat(int m, double b, int n, double height);

    int m() const { return m_; }
    double b() const { return b_; }
    int n() const { return n_; }
    std::size_t size() const { return values_.size(); }
    double spacing() const { return b_ / n_; }
    double cell_volume() const;

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Replaces the sample values (same grid), revalidating positivity.
    void assign(std::vector<double> values);

private:
    int m_;
    double b_;
    int n_;
    std::vector<double> values_;
};

bool is_power_of_two(int n);

/// Mean of a grid field.
double grid_mean(std::span<const double> f);

/// sum f_i * cell  (flat integral over Q = (0,b)^m).
double grid_integral(std::span<const double> f, int m, int n, double b);

/// L2(Q) norm with grid quadrature.
double grid_l2(std::span<const double> f, int m, int n, double b);

/// Lp(Q) norm with grid quadrature; p may be infinity.
double grid_lp(std::span<const double> f, int m, int n, double b, double p);

namespace spectral {

/// Complex Fourier image of a real grid field.  Coefficients are stored in
/// FFT layout (index k corresponds to wavenumber k for k < n/2 and k - n
/// otherwise); coefficient scaling is chosen so that synthesize(analyze(f))
/// returns f.
struct Spectrum {
    int m = 1;
    int n = 0;
    double b = 0.0;
    std::vector<std::complex<double>> c;
};

Spectrum analyze(std::span<const double> f, int m, int n, double b);
std::vector<double> synthesize(const Spectrum& s);

/// Signed integer wavenumber of FFT index i (n even): i for i < n/2,
/// i - n otherwise.  The Nyquist index n/2 maps to +n/2.
int signed_index(int i, int n);

/// First derivative along axis (multiplier i*2*pi*k/b, Nyquist zeroed).
void apply_first_derivative(Spectrum& s, int axis);
/// Second derivative d^2/dx_a dx_b (Nyquist kept for a == b, zeroed on the
/// odd factors when a != b).
void apply_second_derivative(Spectrum& s, int axis_a, int axis_b);

} // namespace spectral

/// First derivative of a periodic grid field along `axis` (0-based).
std::vector<double> derivative(std::span<const double> f, int m, int n, double b,
                               int axis, DiffBackend be);

/// Second derivative along axis_a, axis_b.
std::vector<double> second_derivative(std::span<const double> f, int m, int n, double b,
                                      int axis_a, int axis_b, DiffBackend be);

/// Divergence of an m-component field (components as separate grid fields).
std::vector<double> divergence(const std::vector<std::vector<double>>& comp,
                               int m, int n, double b, DiffBackend be);

/// Deterministic splitmix64 stream; used wherever reproducible noise is needed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    double uniform();           // [0,1)
    double normal();            // standard Gaussian (Box-Muller, cached pair)
private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace filmflow
