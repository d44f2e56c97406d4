#include "scg/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "scg/errors.hpp"

namespace scg {

namespace {

constexpr double kSqrtPi = 1.772453850905516027298;
constexpr double kInvSqrt2 = 0.707106781186547524401;

// erf(hi) − erf(lo) without cancellation when both arguments share a sign.
double erf_diff(double lo, double hi) {
  if (lo > hi) return -erf_diff(hi, lo);
  if (lo >= 0.0) return std::erfc(lo) - std::erfc(hi);
  if (hi <= 0.0) return std::erfc(-hi) - std::erfc(-lo);
  return std::erf(hi) - std::erf(lo);
}

struct SegMoments {
  double m0 = 0, m1 = 0, m2 = 0;  // ∫ x^j · w·exp(−k(x−c)²) dx over the segment
};

// Moments of one component over [x1, x2] ∩ [comp.lo, comp.hi].
SegMoments seg_moments(const GaussComponent& g, double x1, double x2) {
  const double a = std::max(x1, g.lo), b = std::min(x2, g.hi);
  SegMoments r;
  if (!(a < b)) return r;
  const double s = std::sqrt(g.stiffness);
  const double t1 = a - g.center, t2 = b - g.center;
  const double g1 = std::exp(-g.stiffness * t1 * t1);
  const double g2 = std::exp(-g.stiffness * t2 * t2);
  const double j0 = kSqrtPi / (2.0 * s) * erf_diff(s * t1, s * t2);
  const double j1 = (g1 - g2) / (2.0 * g.stiffness);
  const double j2 = (t1 * g1 - t2 * g2) / (2.0 * g.stiffness) + j0 / (2.0 * g.stiffness);
  r.m0 = g.weight * j0;
  r.m1 = g.weight * (g.center * j0 + j1);
  r.m2 = g.weight * (g.center * g.center * j0 + 2.0 * g.center * j1 + j2);
  return r;
}

SegMoments window_moments(const GaussComponent& g) { return seg_moments(g, g.lo, g.hi); }

// Rational initial guess for the standard normal quantile (P. Acklam's
// approximation, |rel err| < 1.15e-9), polished below by one Halley step.
double norm_inv_guess(double p) {
  static const double A[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double B[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double C[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double D[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
           ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
           ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
  }
  const double q = p - 0.5, r = q * q;
  return (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q /
         (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error("NonFinite", std::string(what) + " is not finite");
}

}  // namespace

double erf_inv(double y) {
  if (y >= 1.0) return 6.0;    // erf(6) == 1 to double precision
  if (y <= -1.0) return -6.0;  // clamped tails; interior callers never hit this
  double x = norm_inv_guess(0.5 * (y + 1.0));
  // One Halley step on Φ(x) − p with Φ(x) = erfc(−x/√2)/2.
  const double p = 0.5 * (y + 1.0);
  const double e = 0.5 * std::erfc(-x * kInvSqrt2) - p;
  const double u = e * 2.506628274631000502416 * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x * kInvSqrt2;
}

Distribution Distribution::point_mass(double value) {
  require_finite(value, "point mass value");
  return Distribution(PointMass{value});
}

Distribution Distribution::normalize(std::vector<GaussComponent> comps) {
  if (comps.empty()) throw Error("ValidationError", "mixture needs at least one component");
  for (const auto& g : comps) {
    require_finite(g.weight, "component weight");
    require_finite(g.center, "component center");
    require_finite(g.stiffness, "component stiffness");
    require_finite(g.lo, "component window low");
    require_finite(g.hi, "component window high");
    if (g.weight <= 0.0) throw Error("ValidationError", "component weight must be positive");
    if (g.stiffness <= 0.0) throw Error("ValidationError", "component stiffness must be positive");
    if (g.lo > g.hi) throw Error("ValidationError", "component window is inverted (lo > hi)");
  }
  Mixture mix;
  for (const auto& g : comps) {
    if (g.hi <= g.lo) continue;  // zero-width window carries no mass
    if (window_moments(g).m0 <= 0.0) continue;
    mix.comps.push_back(g);
  }
  if (mix.comps.empty())
    throw Error("AllDegenerate", "every component has a zero-width (or massless) window; "
                                 "use point_mass for degenerate delays");
  double z = 0.0;
  mix.cum.reserve(mix.comps.size());
  for (const auto& g : mix.comps) z += window_moments(g).m0;
  mix.norm = z;
  double run = 0.0;
  for (const auto& g : mix.comps) {
    run += window_moments(g).m0 / z;
    mix.cum.push_back(run);
    const double s = std::sqrt(g.stiffness);
    mix.cache.push_back(CompCache{g.center, 1.0 / s, std::erf(s * (g.lo - g.center)),
                                  std::erf(s * (g.hi - g.center)), g.lo, g.hi});
  }
  mix.cum.back() = 1.0;
  return Distribution(std::variant<Mixture, PointMass, Gridded>(std::move(mix)));
}

Distribution Distribution::gridded(double x0, double step, std::vector<double> density) {
  require_finite(x0, "grid origin");
  require_finite(step, "grid step");
  if (step <= 0.0) throw Error("ValidationError", "grid step must be positive");
  if (density.empty()) throw Error("ValidationError", "grid density must be non-empty");
  double total = 0.0;
  for (double d : density) {
    require_finite(d, "grid density");
    if (d < 0.0) throw Error("ValidationError", "grid density must be non-negative");
    total += d * step;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw Error("ValidationError", "grid mass " + std::to_string(total) + " deviates from 1 by more than 1e-6");
  Gridded g;
  g.x0 = x0;
  g.step = step;
  g.density = std::move(density);
  g.cum.reserve(g.density.size());
  double run = 0.0;
  for (double d : g.density) {
    run += d * step;
    g.cum.push_back(run);
  }
  return Distribution(std::variant<Mixture, PointMass, Gridded>(std::move(g)));
}

double Distribution::mean() const {
  if (const auto* p = std::get_if<PointMass>(&v_)) return p->value;
  if (const auto* m = std::get_if<Mixture>(&v_)) {
    double s = 0.0;
    for (const auto& g : m->comps) s += window_moments(g).m1;
    return s / m->norm;
  }
  const auto& g = std::get<Gridded>(v_);
  double s = 0.0;
  for (std::size_t i = 0; i < g.density.size(); ++i)
    s += g.density[i] * g.step * (g.x0 + static_cast<double>(i) * g.step);
  return s;
}

double Distribution::second_moment() const {
  if (const auto* p = std::get_if<PointMass>(&v_)) return p->value * p->value;
  if (const auto* m = std::get_if<Mixture>(&v_)) {
    double s = 0.0;
    for (const auto& g : m->comps) s += window_moments(g).m2;
    return s / m->norm;
  }
  const auto& g = std::get<Gridded>(v_);
  // Cell mass is spread uniformly over the cell, hence the step²/12 term.
  double s = 0.0;
  for (std::size_t i = 0; i < g.density.size(); ++i) {
    const double x = g.x0 + static_cast<double>(i) * g.step;
    s += g.density[i] * g.step * (x * x + g.step * g.step / 12.0);
  }
  return s;
}

double Distribution::variance() const {
  const double mu = mean();
  return std::max(0.0, second_moment() - mu * mu);
}

double Distribution::support_lo() const {
  if (const auto* p = std::get_if<PointMass>(&v_)) return p->value;
  if (const auto* m = std::get_if<Mixture>(&v_)) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& g : m->comps) lo = std::min(lo, g.lo);
    return lo;
  }
  const auto& g = std::get<Gridded>(v_);
  return g.x0 - 0.5 * g.step;
}

double Distribution::support_hi() const {
  if (const auto* p = std::get_if<PointMass>(&v_)) return p->value;
  if (const auto* m = std::get_if<Mixture>(&v_)) {
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& g : m->comps) hi = std::max(hi, g.hi);
    return hi;
  }
  const auto& g = std::get<Gridded>(v_);
  return g.x0 + (static_cast<double>(g.density.size()) - 0.5) * g.step;
}

double Distribution::cdf(double x) const {
  if (const auto* p = std::get_if<PointMass>(&v_)) return x >= p->value ? 1.0 : 0.0;
  if (const auto* m = std::get_if<Mixture>(&v_)) {
    double s = 0.0;
    for (const auto& g : m->comps)
      if (x > g.lo) s += seg_moments(g, g.lo, std::min(x, g.hi)).m0;
    return s / m->norm;
  }
  const auto& g = std::get<Gridded>(v_);
  const double lo = g.x0 - 0.5 * g.step;
  if (x <= lo) return 0.0;
  const auto n = static_cast<std::ptrdiff_t>(g.density.size());
  auto idx = static_cast<std::ptrdiff_t>(std::floor((x - lo) / g.step));
  if (idx >= n) return g.cum.back();
  const double cell_lo = lo + static_cast<double>(idx) * g.step;
  const double below = idx > 0 ? g.cum[static_cast<std::size_t>(idx - 1)] : 0.0;
  return below + g.density[static_cast<std::size_t>(idx)] * (x - cell_lo);
}

double Distribution::pdf(double x) const {
  if (std::holds_alternative<PointMass>(v_)) return 0.0;
  if (const auto* m = std::get_if<Mixture>(&v_)) {
    double s = 0.0;
    for (const auto& g : m->comps)
      if (x >= g.lo && x <= g.hi) {
        const double t = x - g.center;
        s += g.weight * std::exp(-g.stiffness * t * t);
      }
    return s / m->norm;
  }
  const auto& g = std::get<Gridded>(v_);
  const double lo = g.x0 - 0.5 * g.step;
  if (x < lo) return 0.0;
  const auto idx = static_cast<std::ptrdiff_t>(std::floor((x - lo) / g.step));
  if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(g.density.size())) return 0.0;
  return g.density[static_cast<std::size_t>(idx)];
}

double Distribution::quantile(double q) const {
  if (const auto* p = std::get_if<PointMass>(&v_)) return p->value;
  if (!(q > 0.0 && q < 1.0)) throw Error("ValidationError", "quantile level must lie in (0, 1)");
  double lo = support_lo(), hi = support_hi();
  if (cdf(lo) >= q) return lo;
  if (cdf(hi) < q) return hi;  // grid mass may fall 1e-6 short of 1 at extreme q
  // Lower-bound bisection: converges to the smallest x with cdf(x) ≥ q, which
  // on a flat CDF plateau is its left endpoint.
  const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
  for (int it = 0; it < 200 && hi - lo > 1e-14 * scale; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) >= q)
      hi = mid;
    else
      lo = mid;
  }
  // Near a gap between windows the CDF goes flat (to double precision) a
  // little before the window edge, because the remaining in-window tail mass
  // underflows.  Snap forward across any window boundary whose CDF still
  // equals q, so the returned point is the structural plateau-left endpoint.
  if (const auto* m = std::get_if<Mixture>(&v_)) {
    std::vector<double> edges;
    edges.reserve(m->comps.size());
    for (const auto& g : m->comps) edges.push_back(g.hi);
    std::sort(edges.begin(), edges.end());
    for (double e : edges)
      if (e > hi && cdf(e) <= q + 1e-14) hi = e;
  }
  return hi;
}

double Distribution::upper_partial_moment(double v) const {
  if (const auto* p = std::get_if<PointMass>(&v_)) return p->value > v ? p->value : 0.0;
  if (const auto* m = std::get_if<Mixture>(&v_)) {
    double s = 0.0;
    for (const auto& g : m->comps)
      if (v < g.hi) s += seg_moments(g, std::max(v, g.lo), g.hi).m1;
    return s / m->norm;
  }
  const auto& g = std::get<Gridded>(v_);
  double s = 0.0;
  for (std::size_t i = 0; i < g.density.size(); ++i) {
    if (g.density[i] == 0.0) continue;
    const double x = g.x0 + static_cast<double>(i) * g.step;
    const double cell_lo = x - 0.5 * g.step, cell_hi = x + 0.5 * g.step;
    if (v >= cell_hi) continue;
    const double a = std::max(v, cell_lo);
    s += g.density[i] * 0.5 * (cell_hi * cell_hi - a * a);
  }
  return s;
}

double Distribution::prob_greater(double v) const {
  if (const auto* p = std::get_if<PointMass>(&v_)) return p->value > v ? 1.0 : 0.0;
  if (const auto* m = std::get_if<Mixture>(&v_)) {
    double s = 0.0;
    for (const auto& g : m->comps)
      if (v < g.hi) s += seg_moments(g, std::max(v, g.lo), g.hi).m0;
    return s / m->norm;
  }
  const auto& g = std::get<Gridded>(v_);
  return std::max(0.0, g.cum.back() - cdf(v));
}

double Distribution::cvar_upper(double alpha) const {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw Error("ValidationError", "tail level alpha must lie in (0, 1]");
  if (const auto* p = std::get_if<PointMass>(&v_)) return p->value;
  if (alpha == 1.0) return mean();
  const double v = quantile(1.0 - alpha);
  // Generalized tail expectation; exact also when an atom straddles the
  // quantile, and equal to (1/α)·∫_v^∞ x f(x) dx for continuous laws.
  return (upper_partial_moment(v) + v * (alpha - prob_greater(v))) / alpha;
}

double Distribution::inverse_cdf_fast(double u) const {
  if (const auto* p = std::get_if<PointMass>(&v_)) return p->value;
  if (const auto* m = std::get_if<Mixture>(&v_)) {
    std::size_t j = 0;
    while (j + 1 < m->cum.size() && u >= m->cum[j]) ++j;
    const double below = j > 0 ? m->cum[j - 1] : 0.0;
    const double level = (u - below) / (m->cum[j] - below);
    const auto& c = m->cache[j];
    const double y = c.e_lo + level * (c.e_hi - c.e_lo);
    const double x = c.c + c.inv_s * erf_inv(y);
    return std::min(std::max(x, c.lo), c.hi);
  }
  const auto& g = std::get<Gridded>(v_);
  const double target = u * g.cum.back();
  const auto it = std::upper_bound(g.cum.begin(), g.cum.end(), target);
  const auto j = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
      it - g.cum.begin(), static_cast<std::ptrdiff_t>(g.cum.size()) - 1));
  const double below = j > 0 ? g.cum[j - 1] : 0.0;
  const double cell_lo = g.x0 + static_cast<double>(j) * g.step - 0.5 * g.step;
  const double mass = g.density[j] * g.step;
  if (mass <= 0.0) return cell_lo;
  return cell_lo + g.step * std::min(1.0, (target - below) / mass);
}

namespace {

// Deposits `w` times the distribution's mass onto the lattice x_i = x0 + i·step.
// Each source cell / window segment contributes via a two-point split that
// preserves its exact first moment, so lattice means match analytic means.
void deposit(const Distribution& d, double w, double x0, double step, std::vector<double>& mass) {
  const auto n = static_cast<std::ptrdiff_t>(mass.size());
  auto put = [&](double m, double mu) {
    if (m <= 0.0) return;
    const double pos = (mu - x0) / step;
    auto j = static_cast<std::ptrdiff_t>(std::floor(pos));
    double frac = pos - static_cast<double>(j);
    if (j < 0) { j = 0; frac = 0.0; }
    if (j >= n - 1) { j = n - 2; frac = 1.0; }
    mass[static_cast<std::size_t>(j)] += m * (1.0 - frac);
    mass[static_cast<std::size_t>(j + 1)] += m * frac;
  };

  if (d.is_point_mass()) {
    put(w, d.point_value());
    return;
  }
  if (d.is_gridded()) {
    const auto& g = d.as_gridded();
    for (std::size_t i = 0; i < g.density.size(); ++i)
      put(w * g.density[i] * g.step, g.x0 + static_cast<double>(i) * g.step);
    return;
  }
  const auto& m = d.as_mixture();
  for (const auto& g : m.comps) {
    const double half = 0.5 * step;
    auto first = static_cast<std::ptrdiff_t>(std::floor((g.lo - (x0 - half)) / step));
    auto last = static_cast<std::ptrdiff_t>(std::floor((g.hi - (x0 - half)) / step));
    first = std::max<std::ptrdiff_t>(first, 0);
    last = std::min(last, n - 1);
    for (std::ptrdiff_t i = first; i <= last; ++i) {
      const double x = x0 + static_cast<double>(i) * step;
      const SegMoments sm = seg_moments(g, x - half, x + half);
      if (sm.m0 <= 0.0) continue;
      put(w * sm.m0 / m.norm, sm.m1 / sm.m0);
    }
  }
}

struct LatticeSpec {
  double x0 = 0;
  std::size_t n = 0;
};

LatticeSpec lattice_for(double lo, double hi, double step) {
  LatticeSpec s;
  s.x0 = lo - step;  // one pad cell each side for the two-point splits
  s.n = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 3;
  return s;
}

double coarsen_step(double lo, double hi, double step, const GridPolicy& policy) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || hi - lo > 1e9)
    throw Error("GridOverflow", "support hull is not finite");
  const double width = std::max(hi - lo, step);
  if (width / step > static_cast<double>(policy.max_points)) {
    const double coarse = width / static_cast<double>(policy.max_points);
    std::fprintf(stderr, "warning: convolution hull of width %g exceeds %d cells at step %g; "
                         "coarsening step to %g\n", width, policy.max_points, step, coarse);
    return coarse;
  }
  return step;
}

Distribution from_masses(double x0, double step, std::vector<double> mass) {
  // Trim exact-zero padding so grids stay tight.
  std::size_t first = 0, last = mass.size();
  while (first < last && mass[first] == 0.0) ++first;
  while (last > first && mass[last - 1] == 0.0) --last;
  if (first == last) return Distribution::point_mass(x0);
  std::vector<double> density(mass.begin() + static_cast<std::ptrdiff_t>(first),
                              mass.begin() + static_cast<std::ptrdiff_t>(last));
  for (double& d : density) d /= step;
  return Distribution::gridded(x0 + static_cast<double>(first) * step, step, std::move(density));
}

Distribution shift_of(const Distribution& d, double by) {
  if (d.is_point_mass()) return Distribution::point_mass(d.point_value() + by);
  if (d.is_gridded()) {
    const auto& g = d.as_gridded();
    return Distribution::gridded(g.x0 + by, g.step, g.density);
  }
  std::vector<GaussComponent> comps = d.as_mixture().comps;
  for (auto& c : comps) {
    c.center += by;
    c.lo += by;
    c.hi += by;
  }
  return Distribution::normalize(std::move(comps));
}

}  // namespace

Distribution Distribution::convolve(const Distribution& other, const GridPolicy& policy) const {
  if (is_point_mass()) return shift_of(other, point_value());
  if (other.is_point_mass()) return shift_of(*this, other.point_value());

  double step = policy.step;
  if (is_gridded()) step = std::max(step, as_gridded().step);
  if (other.is_gridded()) step = std::max(step, other.as_gridded().step);
  const double lo = support_lo() + other.support_lo();
  const double hi = support_hi() + other.support_hi();
  step = coarsen_step(lo, hi, step, policy);

  const LatticeSpec la = lattice_for(support_lo(), support_hi(), step);
  const LatticeSpec lb = lattice_for(other.support_lo(), other.support_hi(), step);
  std::vector<double> ma(la.n, 0.0), mb(lb.n, 0.0);
  deposit(*this, 1.0, la.x0, step, ma);
  deposit(other, 1.0, lb.x0, step, mb);

  std::vector<double> mc(ma.size() + mb.size() - 1, 0.0);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    if (ma[i] == 0.0) continue;
    const double v = ma[i];
    for (std::size_t j = 0; j < mb.size(); ++j) mc[i + j] += v * mb[j];
  }
  return from_masses(la.x0 + lb.x0, step, std::move(mc));
}

Distribution Distribution::mix_to_grid(const std::vector<std::pair<double, const Distribution*>>& parts,
                                       const GridPolicy& policy) {
  if (parts.empty()) throw Error("ValidationError", "mixture needs at least one part");
  double wsum = 0.0;
  for (const auto& [w, d] : parts) {
    if (w < 0.0 || d == nullptr) throw Error("ValidationError", "mixture weights must be non-negative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw Error("ValidationError", "mixture weights must sum to 1");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double step = policy.step;
  for (const auto& [w, d] : parts) {
    lo = std::min(lo, d->support_lo());
    hi = std::max(hi, d->support_hi());
    if (d->is_gridded()) step = std::max(step, d->as_gridded().step);
  }
  if (hi <= lo) return point_mass(lo);
  step = coarsen_step(lo, hi, step, policy);
  const LatticeSpec spec = lattice_for(lo, hi, step);
  std::vector<double> mass(spec.n, 0.0);
  for (const auto& [w, d] : parts) deposit(*d, w, spec.x0, step, mass);
  return from_masses(spec.x0, step, std::move(mass));
}

}  // namespace scg
