#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace visco {

enum class Phase { cos, sin };

/// One divergence-free trigonometric basis field
///   w = c * direction * cos(xi . x)   or   c * direction * sin(xi . x)
/// on the torus [0, 2pi)^N, with c chosen so that ||w||_{L2} = 1.
struct WaveMode {
  std::array<int, 3> xi{};  // components beyond N are zero
  Phase phase = Phase::cos;
  int polarization = 0;     // 0 for N = 2; 0 or 1 for N = 3
  double lambda = 0.0;      // |xi|^2, eigenvalue of -Laplacian
  std::array<double, 3> direction{};
};

class SpectralTransform;

/// Truncated divergence-free Laplacian eigenbasis: every wavevector with
/// |xi|_inf <= m_max (one representative per +-xi pair), both phases and
/// N-1 polarizations. Modes are ordered by (|xi|^2, xi, polarization, phase).
struct BasisSpec {
  int N = 2;
  int m_max = 1;
  int grid_size = 4;
  std::vector<WaveMode> modes;
  std::shared_ptr<const SpectralTransform> transform;

  std::size_t size() const { return modes.size(); }
  std::size_t grid_points() const;
  /// Torus volume (2 pi)^N.
  double volume() const;
  /// Amplitude c of each basis field, sqrt(2 / volume).
  double normalization() const;
  /// Quadrature weight of one collocation point, volume / grid_points.
  double cell_volume() const;
  std::optional<std::size_t> find(std::array<int, 3> xi, Phase phase, int polarization = 0) const;
};

using BasisPtr = std::shared_ptr<const BasisSpec>;

/// Smallest grid size > 3 m_max whose prime factors are 2, 3 and 5.
int default_grid_size(int m_max);

/// Throws ConfigurationError unless N in {2, 3}, m_max >= 1 and grid_size > 3 m_max.
BasisPtr build_basis(int N, int m_max, int grid_size = 0);

/// State u = sum_i d_i w_i at time t.
struct CoefficientVector {
  BasisPtr basis;
  std::vector<double> d;
  double t = 0.0;

  static CoefficientVector zeros(BasisPtr basis, double t = 0.0);
  static CoefficientVector unit(BasisPtr basis, std::size_t i, double amplitude = 1.0);
};

enum class Rank { scalar, vector, tensor };

/// Values on the uniform collocation grid (row-major, x_0 slowest), one array per
/// component. Tensor component (k, j) lives at index k * N + j.
struct GridField {
  Rank rank = Rank::scalar;
  int N = 2;
  int grid_size = 0;
  std::vector<std::vector<double>> comps;

  static GridField zeros(Rank rank, int N, int grid_size);
  std::size_t points() const { return comps.empty() ? 0 : comps.front().size(); }
  std::vector<double>& at(int k, int j) { return comps[static_cast<std::size_t>(k * N + j)]; }
  const std::vector<double>& at(int k, int j) const { return comps[static_cast<std::size_t>(k * N + j)]; }
};

enum class FieldKind { velocity, gradient, sym_gradient };

/// u, grad u (component (k, j) = d_j u_k) or D(u) on the collocation grid.
GridField synthesize(const CoefficientVector& coeffs, FieldKind want);

enum class Pairing { velocity, sym_gradient };

/// Grid quadrature of int field . w_i (vector field, Pairing::velocity) or
/// int field : D(w_i) (tensor field, Pairing::sym_gradient) for every mode i.
std::vector<double> analyze(const BasisSpec& basis, const GridField& field, Pairing against);

struct Norms {
  double l2 = 0.0;
  double h1 = 0.0;
  double dissipation = 0.0;  // int |D(u)|^2 = h1^2 / 2
  double l4 = 0.0;
};

Norms norms(const CoefficientVector& coeffs);

/// Grid quadrature of a scalar field.
double integrate(const BasisSpec& basis, std::span<const double> values);

/// Collocation coordinate of grid point `index` along each axis.
std::array<double, 3> grid_point(const BasisSpec& basis, std::size_t index);

/// Spectral divergence of a vector grid field.
GridField divergence(const BasisSpec& basis, const GridField& field);

/// Spectral -Laplacian applied componentwise.
GridField neg_laplacian(const BasisSpec& basis, const GridField& field);

using VectorFunction = std::function<std::array<double, 3>(const std::array<double, 3>& x)>;

/// L2 projection of a closed-form field onto the basis. Rejects fields whose
/// grid mean or spectral divergence exceeds 1e-8.
CoefficientVector project_function(const VectorFunction& u0, BasisPtr basis);

/// (cos x sin y, -sin x cos y), scaled by `amplitude`.
VectorFunction taylor_green(double amplitude = 1.0);

/// Restrict `fine` to the modes of `coarse`, matched by wavevector,
/// polarization and phase. Coarse modes missing from `fine` get zero.
CoefficientVector restrict_to(const CoefficientVector& fine, BasisPtr coarse);

}  // namespace visco
