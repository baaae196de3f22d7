// SPDX-License-Identifier: Apache-2.0
#include "geoae/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "geoae/errors.hpp"
#include "geoae/parallel.hpp"
#include "geoae/training.hpp"

namespace geoae {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

double RadialProfile::at(double rho) const {
  if (values.empty() || rho > extent() || rho < 0.0) return 0.0;
  const double u = rho / step - 0.5;
  if (u <= 0.0) return values.front();
  const auto j = static_cast<std::size_t>(std::floor(u));
  if (j + 1 >= values.size()) return values.back();
  const double t = u - static_cast<double>(j);
  return (1.0 - t) * values[j] + t * values[j + 1];
}

double RadialProfile::norm2() const {
  double s = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) s += values[j] * values[j] * radius(j);
  return 2.0 * kPi * s * step;
}

RadialProfile RadialProfile::normalized() const {
  const double n = norm2();
  if (!(n > 0.0)) throw ConfigError("cannot normalise a zero profile");
  RadialProfile p = *this;
  const double inv = 1.0 / std::sqrt(n);
  for (double& v : p.values) v *= inv;
  p.normalised = true;
  return p;
}

double RadialProfile::mass_within(double r) const {
  double s = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double lo = static_cast<double>(j) * step;
    if (lo >= r) break;
    const double hi = std::min(r, lo + step);
    s += values[j] * 0.5 * (hi * hi - lo * lo);
  }
  return 2.0 * kPi * s;
}

RadialProfile make_profile(double extent, std::size_t cells,
                           const std::function<double(double)>& f) {
  if (cells == 0 || !(extent > 0.0)) throw ConfigError("profile needs cells and extent > 0");
  RadialProfile p;
  p.step = extent / static_cast<double>(cells);
  p.values.resize(cells);
  for (std::size_t j = 0; j < cells; ++j) p.values[j] = f(p.radius(j));
  return p;
}

RadialProfile radial_average(std::span<const double> image, std::size_t m, double step) {
  if (image.size() != m * m || m == 0) {
    throw std::invalid_argument("radial_average: image is not " + std::to_string(m) + "x" +
                                std::to_string(m));
  }
  if (!(step > 0.0)) throw ConfigError("radial bin width must be positive");
  const double half = static_cast<double>(m) / 2.0;
  const auto bins = static_cast<std::size_t>(std::ceil(half / step));
  RadialProfile p;
  p.step = half / static_cast<double>(bins);
  p.values.assign(bins, 0.0);
  p.counts.assign(bins, 0);
  const double c = (static_cast<double>(m) - 1.0) / 2.0;
  for (std::size_t y = 0; y < m; ++y) {
    for (std::size_t x = 0; x < m; ++x) {
      const double rho = std::hypot(static_cast<double>(x) - c, static_cast<double>(y) - c);
      const auto b = static_cast<std::size_t>(rho / p.step);
      if (b >= bins) continue;
      p.values[b] += image[y * m + x];
      ++p.counts[b];
    }
  }
  for (std::size_t b = 0; b < bins; ++b) {
    if (p.counts[b] > 0) p.values[b] /= static_cast<double>(p.counts[b]);
  }
  // Fine bins near the centre contain no pixel centre at all.
  for (std::size_t b = 0; b < bins; ++b) {
    if (p.counts[b] > 0) continue;
    std::size_t best = bins;
    for (std::size_t d = 1; d < bins && best == bins; ++d) {
      if (b >= d && p.counts[b - d] > 0) best = b - d;
      else if (b + d < bins && p.counts[b + d] > 0) best = b + d;
    }
    if (best < bins) p.values[b] = p.values[best];
  }
  return p;
}

std::vector<double> radial_image(const RadialProfile& profile, std::size_t m) {
  std::vector<double> img(m * m);
  const double c = (static_cast<double>(m) - 1.0) / 2.0;
  for (std::size_t y = 0; y < m; ++y) {
    for (std::size_t x = 0; x < m; ++x) {
      img[y * m + x] =
          profile.at(std::hypot(static_cast<double>(x) - c, static_cast<double>(y) - c));
    }
  }
  return img;
}

namespace {

// Cyclic Jacobi eigen-decomposition of a small symmetric matrix. Returns the
// eigenvalues; `vectors` receives eigenvectors as columns.
std::vector<double> symmetric_eigen(std::vector<double> a, std::size_t n,
                                    std::vector<double>& vectors) {
  vectors.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vectors[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a[i * n + i] * a[i * n + i];
      for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
    }
    if (off <= 1e-32 * diag || off == 0.0) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0), sn = t * cs;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = cs * akp - sn * akq;
          a[k * n + q] = sn * akp + cs * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = cs * apk - sn * aqk;
          a[q * n + k] = sn * apk + cs * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors[k * n + p], vkq = vectors[k * n + q];
          vectors[k * n + p] = cs * vkp - sn * vkq;
          vectors[k * n + q] = sn * vkp + cs * vkq;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i * n + i];
  return eig;
}

}  // namespace

RankOneFit rank1_fit(std::span<const double> matrix, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0 || matrix.size() != rows * cols) {
    throw std::invalid_argument("rank1_fit: matrix is not " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
  double frob = 0.0;
  for (double v : matrix) frob += v * v;
  if (!(frob > 0.0)) throw ConfigError("rank1_fit: all-zero outputs");

  std::vector<double> gram(rows * rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = i; j < rows; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < cols; ++k) s += matrix[i * cols + k] * matrix[j * cols + k];
      gram[i * rows + j] = gram[j * rows + i] = s;
    }
  }
  std::vector<double> vecs;
  const std::vector<double> eig = symmetric_eigen(gram, rows, vecs);
  const std::size_t top =
      static_cast<std::size_t>(std::max_element(eig.begin(), eig.end()) - eig.begin());
  const double lambda = std::max(eig[top], 0.0);

  RankOneFit fit;
  fit.sigma1 = std::sqrt(lambda);
  fit.h.resize(rows);
  fit.f.assign(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double u = vecs[i * rows + top];
    for (std::size_t k = 0; k < cols; ++k) fit.f[k] += u * matrix[i * cols + k];
  }
  // Re-project so h = A f exactly for the unit f.
  double fn = 0.0;
  for (double v : fit.f) fn += v * v;
  fn = std::sqrt(fn);
  double fsum = 0.0;
  for (double& v : fit.f) {
    v /= fn;
    fsum += v;
  }
  if (fsum < 0.0) {
    for (double& v : fit.f) v = -v;
  }
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < cols; ++k) s += matrix[i * cols + k] * fit.f[k];
    fit.h[i] = s;
  }
  fit.residual_fraction = std::clamp(1.0 - lambda / frob, 0.0, 1.0);
  return fit;
}

double optimal_h(const RadialProfile& f, double r) {
  const double n = f.norm2();
  if (!(n > 0.0)) throw ConfigError("optimal_h: zero-norm profile");
  if (r <= 0.0) return 0.0;
  return f.mass_within(r) / n;
}

namespace {

// F_i = int_0^{r_i} f rho d rho at the cell edges r_i = i * step.
std::vector<double> edge_integrals(const RadialProfile& f) {
  std::vector<double> F(f.size() + 1, 0.0);
  for (std::size_t j = 0; j < f.size(); ++j) {
    F[j + 1] = F[j] + f.values[j] * f.radius(j) * f.step;
  }
  return F;
}

double edge_weight(std::size_t i, std::size_t n, double step) {
  return (i == 0 || i == n) ? 0.5 * step : step;
}

// Gradient of J in the radial inner product 2 pi sum a b rho d rho.
std::vector<double> energy_gradient(const RadialProfile& f) {
  const std::vector<double> F = edge_integrals(f);
  const std::size_t n = f.size();
  std::vector<double> g(n);
  double tail = 0.0;
  for (std::size_t j = n; j-- > 0;) {
    tail += edge_weight(j + 1, n, f.step) * F[j + 1];
    g[j] = tail / kPi;
  }
  return g;
}

double radial_dot(const RadialProfile& f, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) s += a[j] * b[j] * f.radius(j);
  return 2.0 * kPi * s * f.step;
}

}  // namespace

double decoding_energy(const RadialProfile& f) {
  const std::vector<double> F = edge_integrals(f);
  double J = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) J += edge_weight(i, f.size(), f.step) * F[i] * F[i];
  return J;
}

MaximizeResult maximize_J(double R, std::size_t cells, const MaximizeOptions& opts) {
  if (!(R > 0.0)) throw ConfigError("maximize_J needs R > 0");
  if (cells < 2) throw ConfigError("maximize_J needs at least two cells");
  MaximizeResult res;
  res.profile = make_profile(R, cells, [](double) { return 1.0; }).normalized();
  RadialProfile& f = res.profile;
  double J = decoding_energy(f);
  res.energies.push_back(J);

  auto tangent_norm = [&](const std::vector<double>& g) {
    const double along = radial_dot(f, g, f.values);
    std::vector<double> t(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) t[j] = g[j] - along * f.values[j];
    return std::sqrt(radial_dot(f, t, t));
  };
  std::vector<double> g = energy_gradient(f);
  res.initial_gradient_norm = std::sqrt(radial_dot(f, g, g));
  const double stationary = 1e-9 * res.initial_gradient_norm;

  for (std::size_t it = 0; it < opts.iterations; ++it) {
    const double gn = std::sqrt(radial_dot(f, g, g));
    for (std::size_t j = 0; j < f.size(); ++j) f.values[j] += opts.step * g[j] / gn;
    f = f.normalized();
    const double next = decoding_energy(f);
    res.energies.push_back(next);
    g = energy_gradient(f);
    res.final_gradient_norm = tangent_norm(g);
    const bool flat = std::abs(next - J) <= opts.tolerance * std::abs(next);
    J = next;
    if (flat && res.final_gradient_norm <= stationary) {
      res.converged = true;
      break;
    }
  }
  double mass = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) mass += f.values[j] * f.radius(j);
  if (mass < 0.0) {
    for (double& v : f.values) v = -v;
  }
  return res;
}

std::pair<double, double> integrate_airy(double k, double t_end, std::size_t steps) {
  double y = 1.0, v = 0.0, t = 0.0;
  const double h = t_end / static_cast<double>(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const double k1y = v, k1v = -k * t * y;
    const double k2y = v + 0.5 * h * k1v, k2v = -k * (t + 0.5 * h) * (y + 0.5 * h * k1y);
    const double k3y = v + 0.5 * h * k2v, k3v = -k * (t + 0.5 * h) * (y + 0.5 * h * k2y);
    const double k4y = v + h * k3v, k4v = -k * (t + h) * (y + h * k3y);
    y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    t = h * static_cast<double>(s + 1);
  }
  return {y, v};
}

namespace {

// Walks the RK4 solution, calling visit(t, y, y') at every node until it
// returns false.
template <class Visit>
void walk_airy(double k, double h, std::size_t max_steps, Visit&& visit) {
  double y = 1.0, v = 0.0;
  if (!visit(0.0, y, v)) return;
  for (std::size_t s = 0; s < max_steps; ++s) {
    const double t = h * static_cast<double>(s);
    const double k1y = v, k1v = -k * t * y;
    const double k2y = v + 0.5 * h * k1v, k2v = -k * (t + 0.5 * h) * (y + 0.5 * h * k1y);
    const double k3y = v + 0.5 * h * k2v, k3v = -k * (t + 0.5 * h) * (y + 0.5 * h * k2y);
    const double k4y = v + h * k3v, k4v = -k * (t + h) * (y + h * k3y);
    y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (!visit(h * static_cast<double>(s + 1), y, v)) return;
  }
}

// Root of the cubic Hermite interpolant on [t0, t0 + h].
double hermite_root(double t0, double h, double y0, double v0, double y1, double v1) {
  auto p = [&](double s) {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * v0 + (-2 * s3 + 3 * s2) * y1 +
           (s3 - s2) * h * v1;
  };
  double lo = 0.0, hi = 1.0;
  const bool rising = p(1.0) > p(0.0);
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((p(mid) > 0.0) == rising) hi = mid;
    else lo = mid;
  }
  return t0 + h * 0.5 * (lo + hi);
}

}  // namespace

double airy_first_zero(double k, double t_max, std::size_t steps) {
  const double h = t_max / static_cast<double>(steps);
  double zero = -1.0, prev_t = 0.0, prev_y = 1.0, prev_v = 0.0;
  walk_airy(k, h, steps, [&](double t, double y, double v) {
    if (t > 0.0 && y <= 0.0) {
      zero = y == 0.0 ? t : hermite_root(prev_t, h, prev_y, prev_v, y, v);
      return false;
    }
    prev_t = t;
    prev_y = y;
    prev_v = v;
    return true;
  });
  return zero;
}

AiryResult airy_profile(double R, std::size_t cells) {
  if (!(R > 0.0) || cells == 0) throw ConfigError("airy_profile needs R > 0 and cells > 0");
  // Step count: at least 4096 per R, and a multiple of 2 * cells so every
  // cell midpoint is an integration node.
  const std::size_t per = 2 * cells;
  const std::size_t steps = per * ((4096 + per - 1) / per);
  const double h = R / static_cast<double>(steps);
  auto zero_of = [&](double k) {
    const double z = airy_first_zero(k, 2.0 * R, 2 * steps);
    return z < 0.0 ? 4.0 * R : z;
  };

  // The first zero shrinks like k^(-1/3); bracket around k with zero at R.
  double lo = 1e-12, hi = 1.0;
  while (zero_of(hi) > R) {
    hi *= 8.0;
    if (hi > 1e12) throw NumericError("airy_profile: cannot bracket k");
  }
  while (zero_of(lo) < R) {
    lo /= 8.0;
    if (lo < 1e-300) throw NumericError("airy_profile: cannot bracket k");
  }
  AiryResult res;
  double z = 0.0;
  for (int i = 0; i < 400; ++i) {
    const double mid = std::sqrt(lo * hi);
    z = zero_of(mid);
    if (z > R) lo = mid;
    else hi = mid;
    res.k = mid;
    if (std::abs(z - R) <= 1e-8 || hi / lo - 1.0 < 1e-15) break;
  }
  res.first_zero = z;

  RadialProfile p;
  p.step = R / static_cast<double>(cells);
  p.values.assign(cells, 0.0);
  const std::size_t stride = steps / cells;  // nodes per cell
  std::size_t node = 0;
  walk_airy(res.k, h, steps, [&](double, double y, double) {
    if (node >= stride / 2 && (node - stride / 2) % stride == 0) {
      const std::size_t j = (node - stride / 2) / stride;
      if (j < cells) p.values[j] = std::max(y, 0.0);
    }
    ++node;
    return true;
  });
  res.profile = p.normalized();
  return res;
}

namespace {

RadialProfile resample(const RadialProfile& p, double step, std::size_t cells) {
  return make_profile(step * static_cast<double>(cells), cells,
                      [&](double rho) { return p.at(rho); });
}

std::pair<RadialProfile, RadialProfile> common_grid(const RadialProfile& a,
                                                    const RadialProfile& b) {
  const double step = std::min(a.step, b.step);
  const double extent = std::max(a.extent(), b.extent());
  const auto cells = static_cast<std::size_t>(std::llround(extent / step));
  return {resample(a, step, cells).normalized(), resample(b, step, cells).normalized()};
}

}  // namespace

double profile_cosine(const RadialProfile& a, const RadialProfile& b) {
  const auto [x, y] = common_grid(a, b);
  return radial_dot(x, x.values, y.values);
}

double profile_l2_error(const RadialProfile& a, const RadialProfile& b) {
  const auto [x, y] = common_grid(a, b);
  const double sign = radial_dot(x, x.values, y.values) < 0.0 ? -1.0 : 1.0;
  std::vector<double> d(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) d[j] = sign * x.values[j] - y.values[j];
  return std::sqrt(radial_dot(x, d, d));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: sizes");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  return pearson(ra, rb);
}

std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: sizes");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: constant abscissa");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of nothing");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    v[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return v;
}

std::vector<double> oracle_images(std::span<const double> radii, std::size_t m, double sigma,
                                  int threads) {
  std::vector<double> out(radii.size() * m * m);
  parallel_for(radii.size(), threads, [&](std::size_t i) {
    const DiskImage img = render_disk_oracle(radii[i], m, sigma);
    std::copy(img.pixels.begin(), img.pixels.end(), out.begin() + static_cast<std::ptrdiff_t>(i * m * m));
  });
  return out;
}

LatentCurve latent_curve(const Network& encoder, std::span<const double> radii, double sigma,
                         int threads) {
  const Shape& in = encoder.spec().input_shape;
  const std::size_t m = in.back();
  const std::vector<double> images = oracle_images(radii, m, sigma, threads);
  const Tensor z = encode(encoder, Tensor(batch_shape(in, radii.size()), images));
  LatentCurve c;
  c.radii.assign(radii.begin(), radii.end());
  c.codes.assign(z.data().begin(), z.data().end());
  if (c.codes.size() != c.radii.size()) throw ConfigError("latent_curve needs a scalar code");
  std::vector<double> lr, lz;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] >= 4.0 && radii[i] <= 28.0 && c.codes[i] != 0.0) {
      lr.push_back(std::log(radii[i]));
      lz.push_back(std::log(std::abs(c.codes[i])));
    }
  }
  c.beta = lr.size() >= 2 ? linear_fit(lr, lz).first : std::numeric_limits<double>::quiet_NaN();
  c.spearman = radii.size() >= 2 ? spearman(c.radii, c.codes) : 0.0;
  return c;
}

std::vector<RadiusError> error_by_radius(const Network& encoder, const Network& decoder,
                                         std::span<const double> radii,
                                         std::span<const Interval> exclusions, double sigma,
                                         int threads) {
  const Shape& in = encoder.spec().input_shape;
  const std::size_t m = in.back();
  const std::size_t len = shape_size(in);
  const std::vector<double> images = oracle_images(radii, m, sigma, threads);
  const std::vector<Network> chain{encoder, decoder};
  const Tensor out = run_chain(chain, Tensor(batch_shape(in, radii.size()), images));
  std::vector<RadiusError> rows;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    RadiusError e;
    e.radius = radii[i];
    for (std::size_t k = 0; k < len; ++k) {
      const double t = images[i * len + k], o = out[i * len + k];
      e.mse += (t - o) * (t - o);
      e.target_mass += t;
      e.output_mass += o;
    }
    e.excluded = std::any_of(exclusions.begin(), exclusions.end(),
                             [&](const Interval& iv) { return iv.contains(radii[i]); });
    rows.push_back(e);
  }
  return rows;
}

std::vector<double> decode_codes(const Network& decoder, std::span<const double> codes) {
  const Tensor z({codes.size(), 1}, std::vector<double>(codes.begin(), codes.end()));
  const Tensor out = decode(decoder, z);
  return {out.data().begin(), out.data().end()};
}

}  // namespace geoae
