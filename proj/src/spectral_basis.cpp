#include "visco/spectral_basis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include <fftw3.h>

#include "visco/errors.hpp"
#include "visco/spectral_transform.hpp"

namespace visco {

namespace {

using cplx = std::complex<double>;

// FFTW's planner is not re-entrant; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int wrap(int k, int G) { return ((k % G) + G) % G; }

std::array<int, 3> cross(const std::array<int, 3>& a, const std::array<int, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

std::array<double, 3> normalized(const std::array<int, 3>& v) {
  const double n = std::sqrt(static_cast<double>(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
  return {v[0] / n, v[1] / n, v[2] / n};
}

// Integer directions spanning the plane orthogonal to xi.
std::vector<std::array<int, 3>> orthogonal_directions(int N, const std::array<int, 3>& xi) {
  if (N == 2) return {{-xi[1], xi[0], 0}};
  const std::array<int, 3> axis = (xi[0] == 0 && xi[1] == 0) ? std::array<int, 3>{1, 0, 0} : std::array<int, 3>{0, 0, 1};
  const auto e1 = cross(xi, axis);
  const auto e2 = cross(xi, e1);
  return {e1, e2};
}

bool is_smooth_235(int n) {
  for (int p : {2, 3, 5})
    while (n % p == 0) n /= p;
  return n == 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// SpectralTransform

SpectralTransform::SpectralTransform(int N, int G, const std::vector<WaveMode>& modes) : N_(N), G_(G) {
  real_size_ = 1;
  for (int d = 0; d < N; ++d) real_size_ *= static_cast<std::size_t>(G);
  half_last_ = G / 2 + 1;
  complex_size_ = real_size_ / static_cast<std::size_t>(G) * static_cast<std::size_t>(half_last_);

  std::vector<int> dims(static_cast<std::size_t>(N), G);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    std::vector<double> r(real_size_);
    std::vector<cplx> c(complex_size_);
    auto* cp = reinterpret_cast<fftw_complex*>(c.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_r2c(N, dims.data(), r.data(), cp, flags);
    backward_ = fftw_plan_dft_c2r(N, dims.data(), cp, r.data(), flags);
  }
  if (!forward_ || !backward_) throw ConfigurationError("FFTW planning failed");

  const std::size_t per_wave = static_cast<std::size_t>(2 * (N - 1));
  for (std::size_t first = 0; first < modes.size(); first += per_wave) {
    Wave w;
    w.xi = modes[first].xi;
    w.lambda = modes[first].lambda;
    w.first_mode = first;
    const int last = w.xi[static_cast<std::size_t>(N - 1)];
    std::array<int, 3> stored = w.xi;
    w.flip = last < 0;
    if (w.flip)
      for (int d = 0; d < N; ++d) stored[static_cast<std::size_t>(d)] = -stored[static_cast<std::size_t>(d)];
    w.index = flat_index(stored);
    if (last == 0) {
      std::array<int, 3> neg{};
      for (int d = 0; d < N; ++d) neg[static_cast<std::size_t>(d)] = -w.xi[static_cast<std::size_t>(d)];
      w.partner = static_cast<std::ptrdiff_t>(flat_index(neg));
    }
    waves_.push_back(w);
  }
}

SpectralTransform::~SpectralTransform() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(forward_);
  fftw_destroy_plan(backward_);
}

std::size_t SpectralTransform::flat_index(const std::array<int, 3>& k) const {
  std::size_t idx = 0;
  for (int d = 0; d < N_ - 1; ++d) idx = idx * static_cast<std::size_t>(G_) + static_cast<std::size_t>(wrap(k[static_cast<std::size_t>(d)], G_));
  return idx * static_cast<std::size_t>(half_last_) + static_cast<std::size_t>(k[static_cast<std::size_t>(N_ - 1)]);
}

std::array<int, 3> SpectralTransform::wavenumber(std::size_t flat) const {
  std::array<int, 3> k{};
  k[static_cast<std::size_t>(N_ - 1)] = static_cast<int>(flat % static_cast<std::size_t>(half_last_));
  flat /= static_cast<std::size_t>(half_last_);
  for (int d = N_ - 2; d >= 0; --d) {
    const int i = static_cast<int>(flat % static_cast<std::size_t>(G_));
    flat /= static_cast<std::size_t>(G_);
    k[static_cast<std::size_t>(d)] = i <= G_ / 2 ? i : i - G_;
  }
  return k;
}

bool SpectralTransform::is_nyquist(const std::array<int, 3>& k) const {
  if (G_ % 2 != 0) return false;
  for (int d = 0; d < N_; ++d)
    if (std::abs(k[static_cast<std::size_t>(d)]) == G_ / 2) return true;
  return false;
}

void SpectralTransform::forward(const double* in, cplx* out) const {
  fftw_execute_dft_r2c(forward_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  const double scale = 1.0 / static_cast<double>(real_size_);
  for (std::size_t i = 0; i < complex_size_; ++i) out[i] *= scale;
}

void SpectralTransform::backward(cplx* in, double* out) const {
  fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(in), out);
}

cplx SpectralTransform::get(const cplx* half, const Wave& w) const {
  const cplx v = half[w.index];
  return w.flip ? std::conj(v) : v;
}

void SpectralTransform::set(cplx* half, const Wave& w, cplx v) const {
  half[w.index] = w.flip ? std::conj(v) : v;
  if (w.partner >= 0) half[static_cast<std::size_t>(w.partner)] = std::conj(v);
}

// ---------------------------------------------------------------------------
// BasisSpec

std::size_t BasisSpec::grid_points() const {
  std::size_t n = 1;
  for (int d = 0; d < N; ++d) n *= static_cast<std::size_t>(grid_size);
  return n;
}

double BasisSpec::volume() const { return std::pow(2.0 * std::numbers::pi, N); }

double BasisSpec::normalization() const { return std::sqrt(2.0 / volume()); }

double BasisSpec::cell_volume() const { return volume() / static_cast<double>(grid_points()); }

std::optional<std::size_t> BasisSpec::find(std::array<int, 3> xi, Phase phase, int polarization) const {
  // Representative of +-xi with positive first nonzero component.
  for (int d = 0; d < N; ++d) {
    if (xi[static_cast<std::size_t>(d)] != 0) {
      if (xi[static_cast<std::size_t>(d)] < 0)
        for (auto& c : xi) c = -c;
      break;
    }
  }
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto& m = modes[i];
    if (m.xi == xi && m.phase == phase && m.polarization == polarization) return i;
  }
  return std::nullopt;
}

int default_grid_size(int m_max) {
  int g = 3 * m_max + 1;
  while (!is_smooth_235(g)) ++g;
  return g;
}

BasisPtr build_basis(int N, int m_max, int grid_size) {
  if (N != 2 && N != 3) throw ConfigurationError("N must be 2 or 3");
  if (m_max < 1) throw ConfigurationError("m_max must be >= 1");
  if (grid_size == 0) grid_size = default_grid_size(m_max);
  if (grid_size <= 3 * m_max)
    throw ConfigurationError("grid_size " + std::to_string(grid_size) + " must exceed 3 * m_max = " +
                             std::to_string(3 * m_max) + " for alias-free quadratic products");

  auto spec = std::make_shared<BasisSpec>();
  spec->N = N;
  spec->m_max = m_max;
  spec->grid_size = grid_size;

  std::vector<std::array<int, 3>> reps;
  const int zlo = N == 3 ? -m_max : 0;
  const int zhi = N == 3 ? m_max : 0;
  for (int a = -m_max; a <= m_max; ++a)
    for (int b = -m_max; b <= m_max; ++b)
      for (int c = zlo; c <= zhi; ++c) {
        const std::array<int, 3> xi{a, b, c};
        int first = 0;
        for (int v : xi)
          if (v != 0) {
            first = v;
            break;
          }
        if (first > 0) reps.push_back(xi);
      }
  auto key = [](const std::array<int, 3>& x) {
    return std::make_tuple(x[0] * x[0] + x[1] * x[1] + x[2] * x[2], x[0], x[1], x[2]);
  };
  std::sort(reps.begin(), reps.end(), [&](const auto& l, const auto& r) { return key(l) < key(r); });

  for (const auto& xi : reps) {
    const auto dirs = orthogonal_directions(N, xi);
    for (std::size_t p = 0; p < dirs.size(); ++p) {
      for (Phase ph : {Phase::cos, Phase::sin}) {
        WaveMode m;
        m.xi = xi;
        m.phase = ph;
        m.polarization = static_cast<int>(p);
        m.lambda = static_cast<double>(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
        m.direction = normalized(dirs[p]);
        spec->modes.push_back(m);
      }
    }
  }
  spec->transform = std::make_shared<const SpectralTransform>(N, grid_size, spec->modes);
  return spec;
}

CoefficientVector CoefficientVector::zeros(BasisPtr basis, double t) {
  CoefficientVector c;
  c.d.assign(basis->size(), 0.0);
  c.basis = std::move(basis);
  c.t = t;
  return c;
}

CoefficientVector CoefficientVector::unit(BasisPtr basis, std::size_t i, double amplitude) {
  auto c = zeros(std::move(basis));
  c.d.at(i) = amplitude;
  return c;
}

GridField GridField::zeros(Rank rank, int N, int grid_size) {
  GridField f;
  f.rank = rank;
  f.N = N;
  f.grid_size = grid_size;
  std::size_t pts = 1;
  for (int d = 0; d < N; ++d) pts *= static_cast<std::size_t>(grid_size);
  const std::size_t ncomp = rank == Rank::scalar ? 1 : rank == Rank::vector ? static_cast<std::size_t>(N) : static_cast<std::size_t>(N * N);
  f.comps.assign(ncomp, std::vector<double>(pts, 0.0));
  return f;
}

// ---------------------------------------------------------------------------
// Synthesis / analysis

namespace {

// Fourier coefficient u^(xi) of the velocity carried by one wavevector:
//   (c / 2) sum_p e_p (a_p - i b_p).
std::array<cplx, 3> wave_velocity(const BasisSpec& basis, const SpectralTransform::Wave& w, std::span<const double> d) {
  const double half_c = 0.5 * basis.normalization();
  std::array<cplx, 3> u{};
  for (int p = 0; p < basis.N - 1; ++p) {
    const std::size_t i = w.first_mode + static_cast<std::size_t>(2 * p);
    const auto& e = basis.modes[i].direction;
    const cplx amp = half_c * cplx(d[i], -d[i + 1]);
    for (int k = 0; k < basis.N; ++k) u[static_cast<std::size_t>(k)] += amp * e[static_cast<std::size_t>(k)];
  }
  return u;
}

void check_grid(const BasisSpec& basis, const GridField& f) {
  if (f.N != basis.N || f.grid_size != basis.grid_size) throw ShapeError("grid field does not match the basis grid");
  for (const auto& c : f.comps)
    if (c.size() != basis.grid_points()) throw ShapeError("grid field component has the wrong size");
}

}  // namespace

GridField synthesize(const CoefficientVector& coeffs, FieldKind want) {
  const BasisSpec& basis = *coeffs.basis;
  if (coeffs.d.size() != basis.size()) throw ShapeError("coefficient vector does not match its basis");
  const auto& T = *basis.transform;
  const int N = basis.N;

  std::vector<std::array<cplx, 3>> U(T.waves().size());
  for (std::size_t w = 0; w < U.size(); ++w) U[w] = wave_velocity(basis, T.waves()[w], coeffs.d);

  std::vector<cplx> half(T.complex_size());
  auto fill = [&](auto&& value_of) {
    std::fill(half.begin(), half.end(), cplx{});
    for (std::size_t w = 0; w < U.size(); ++w) T.set(half.data(), T.waves()[w], value_of(w));
  };

  if (want == FieldKind::velocity) {
    GridField f = GridField::zeros(Rank::vector, N, basis.grid_size);
    for (int k = 0; k < N; ++k) {
      fill([&](std::size_t w) { return U[w][static_cast<std::size_t>(k)]; });
      T.backward(half.data(), f.comps[static_cast<std::size_t>(k)].data());
    }
    return f;
  }

  const bool sym = want == FieldKind::sym_gradient;
  GridField f = GridField::zeros(Rank::tensor, N, basis.grid_size);
  const cplx I(0.0, 1.0);
  for (int k = 0; k < N; ++k) {
    for (int j = 0; j < N; ++j) {
      if (sym && j < k) {
        f.at(k, j) = f.at(j, k);
        continue;
      }
      fill([&](std::size_t w) {
        const auto& xi = T.waves()[w].xi;
        const auto sk = static_cast<std::size_t>(k);
        const auto sj = static_cast<std::size_t>(j);
        if (sym) return 0.5 * I * (static_cast<double>(xi[sj]) * U[w][sk] + static_cast<double>(xi[sk]) * U[w][sj]);
        return I * static_cast<double>(xi[sj]) * U[w][sk];
      });
      T.backward(half.data(), f.at(k, j).data());
    }
  }
  return f;
}

std::vector<double> analyze(const BasisSpec& basis, const GridField& field, Pairing against) {
  check_grid(basis, field);
  const auto& T = *basis.transform;
  const int N = basis.N;
  const double cV = basis.normalization() * basis.volume();
  std::vector<double> out(basis.size(), 0.0);

  if (against == Pairing::velocity) {
    if (field.rank != Rank::vector) throw ShapeError("pairing against w_i needs a vector field");
    std::vector<std::vector<cplx>> hats(static_cast<std::size_t>(N), std::vector<cplx>(T.complex_size()));
    for (int k = 0; k < N; ++k) T.forward(field.comps[static_cast<std::size_t>(k)].data(), hats[static_cast<std::size_t>(k)].data());
    for (const auto& w : T.waves()) {
      std::array<cplx, 3> v{};
      for (int k = 0; k < N; ++k) v[static_cast<std::size_t>(k)] = T.get(hats[static_cast<std::size_t>(k)].data(), w);
      for (int p = 0; p < N - 1; ++p) {
        const std::size_t i = w.first_mode + static_cast<std::size_t>(2 * p);
        const auto& e = basis.modes[i].direction;
        cplx ev{};
        for (int k = 0; k < N; ++k) ev += e[static_cast<std::size_t>(k)] * v[static_cast<std::size_t>(k)];
        out[i] = cV * ev.real();
        out[i + 1] = -cV * ev.imag();
      }
    }
    return out;
  }

  if (field.rank != Rank::tensor) throw ShapeError("pairing against D(w_i) needs a tensor field");
  std::vector<std::vector<cplx>> hats(static_cast<std::size_t>(N * N), std::vector<cplx>(T.complex_size()));
  for (std::size_t c = 0; c < hats.size(); ++c) T.forward(field.comps[c].data(), hats[c].data());
  for (const auto& w : T.waves()) {
    for (int p = 0; p < N - 1; ++p) {
      const std::size_t i = w.first_mode + static_cast<std::size_t>(2 * p);
      const auto& e = basis.modes[i].direction;
      // S : T^ with S = sym(e (x) xi).
      cplx s{};
      for (int k = 0; k < N; ++k)
        for (int j = 0; j < N; ++j) {
          const auto sk = static_cast<std::size_t>(k);
          const auto sj = static_cast<std::size_t>(j);
          const double S = 0.5 * (e[sk] * w.xi[sj] + w.xi[sk] * e[sj]);
          if (S != 0.0) s += S * T.get(hats[static_cast<std::size_t>(k * N + j)].data(), w);
        }
      out[i] = cV * s.imag();
      out[i + 1] = cV * s.real();
    }
  }
  return out;
}

double integrate(const BasisSpec& basis, std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * basis.cell_volume();
}

Norms norms(const CoefficientVector& coeffs) {
  const BasisSpec& basis = *coeffs.basis;
  Norms n;
  double l2 = 0.0;
  double h1 = 0.0;
  for (std::size_t i = 0; i < coeffs.d.size(); ++i) {
    l2 += coeffs.d[i] * coeffs.d[i];
    h1 += basis.modes[i].lambda * coeffs.d[i] * coeffs.d[i];
  }
  n.l2 = std::sqrt(l2);
  n.h1 = std::sqrt(h1);
  n.dissipation = 0.5 * h1;
  if (l2 == 0.0) return n;
  const GridField u = synthesize(coeffs, FieldKind::velocity);
  double l4 = 0.0;
  for (std::size_t x = 0; x < u.points(); ++x) {
    double s = 0.0;
    for (const auto& c : u.comps) s += c[x] * c[x];
    l4 += s * s;
  }
  n.l4 = std::pow(l4 * basis.cell_volume(), 0.25);
  return n;
}

std::array<double, 3> grid_point(const BasisSpec& basis, std::size_t index) {
  std::array<double, 3> x{};
  const double h = 2.0 * std::numbers::pi / basis.grid_size;
  for (int d = basis.N - 1; d >= 0; --d) {
    x[static_cast<std::size_t>(d)] = h * static_cast<double>(index % static_cast<std::size_t>(basis.grid_size));
    index /= static_cast<std::size_t>(basis.grid_size);
  }
  return x;
}

GridField divergence(const BasisSpec& basis, const GridField& field) {
  check_grid(basis, field);
  if (field.rank != Rank::vector) throw ShapeError("divergence needs a vector field");
  const auto& T = *basis.transform;
  std::vector<cplx> acc(T.complex_size());
  std::vector<cplx> hat(T.complex_size());
  for (int k = 0; k < basis.N; ++k) {
    T.forward(field.comps[static_cast<std::size_t>(k)].data(), hat.data());
    for (std::size_t f = 0; f < hat.size(); ++f) {
      const auto kv = T.wavenumber(f);
      if (T.is_nyquist(kv)) continue;
      acc[f] += cplx(0.0, static_cast<double>(kv[static_cast<std::size_t>(k)])) * hat[f];
    }
  }
  GridField out = GridField::zeros(Rank::scalar, basis.N, basis.grid_size);
  T.backward(acc.data(), out.comps[0].data());
  return out;
}

GridField neg_laplacian(const BasisSpec& basis, const GridField& field) {
  check_grid(basis, field);
  const auto& T = *basis.transform;
  GridField out = field;
  std::vector<cplx> hat(T.complex_size());
  for (std::size_t c = 0; c < field.comps.size(); ++c) {
    T.forward(field.comps[c].data(), hat.data());
    for (std::size_t f = 0; f < hat.size(); ++f) {
      const auto kv = T.wavenumber(f);
      double k2 = 0.0;
      for (int d = 0; d < basis.N; ++d) k2 += static_cast<double>(kv[static_cast<std::size_t>(d)] * kv[static_cast<std::size_t>(d)]);
      hat[f] *= k2;
    }
    T.backward(hat.data(), out.comps[c].data());
  }
  return out;
}

CoefficientVector project_function(const VectorFunction& u0, BasisPtr basis) {
  GridField f = GridField::zeros(Rank::vector, basis->N, basis->grid_size);
  for (std::size_t x = 0; x < f.points(); ++x) {
    const auto v = u0(grid_point(*basis, x));
    for (int k = 0; k < basis->N; ++k) f.comps[static_cast<std::size_t>(k)][x] = v[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < basis->N; ++k) {
    double mean = 0.0;
    for (double v : f.comps[static_cast<std::size_t>(k)]) mean += v;
    mean /= static_cast<double>(f.points());
    if (std::abs(mean) > 1e-8)
      throw RejectionError("initial field has nonzero mean " + std::to_string(mean) + " in component " + std::to_string(k));
  }
  const GridField div = divergence(*basis, f);
  double div_max = 0.0;
  for (double v : div.comps[0]) div_max = std::max(div_max, std::abs(v));
  if (div_max > 1e-8) throw RejectionError("initial field is not divergence-free (max |div u| = " + std::to_string(div_max) + ")");

  CoefficientVector c;
  c.d = analyze(*basis, f, Pairing::velocity);
  c.basis = std::move(basis);
  c.t = 0.0;
  return c;
}

VectorFunction taylor_green(double amplitude) {
  return [amplitude](const std::array<double, 3>& x) {
    return std::array<double, 3>{amplitude * std::cos(x[0]) * std::sin(x[1]), -amplitude * std::sin(x[0]) * std::cos(x[1]), 0.0};
  };
}

CoefficientVector restrict_to(const CoefficientVector& fine, BasisPtr coarse) {
  if (fine.basis->N != coarse->N) throw ShapeError("restrict_to: dimension mismatch");
  std::map<std::tuple<int, int, int, int, int>, std::size_t> index;
  for (std::size_t i = 0; i < fine.basis->size(); ++i) {
    const auto& m = fine.basis->modes[i];
    index[{m.xi[0], m.xi[1], m.xi[2], m.polarization, static_cast<int>(m.phase)}] = i;
  }
  auto out = CoefficientVector::zeros(coarse, fine.t);
  for (std::size_t i = 0; i < coarse->size(); ++i) {
    const auto& m = coarse->modes[i];
    const auto it = index.find({m.xi[0], m.xi[1], m.xi[2], m.polarization, static_cast<int>(m.phase)});
    if (it != index.end()) out.d[i] = fine.d[it->second];
  }
  return out;
}

}  // namespace visco
