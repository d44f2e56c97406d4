#pragma once

#include <cstddef>
#include <utility>
#include <variant>
#include <vector>

#include "scg/rng.hpp"

namespace scg {

/**
 * One additive term  w · exp(−k (x − c)²) · 1{lo ≤ x ≤ hi}  of a windowed
 * Gaussian mixture. The component std deviation is σ = 1/sqrt(2k).
 */
struct GaussComponent {
  double weight = 1.0;     // relative mass factor, > 0
  double center = 0.0;     // c, time units
  double stiffness = 100;  // k, 1/time²
  double lo = 0.0;         // window bounds, lo ≤ hi
  double hi = 0.0;

  bool operator==(const GaussComponent&) const = default;
};

/// Grid parameters for convolution / discretization output.
struct GridPolicy {
  double step = 1e-3;      // target lattice step (time units)
  int max_points = 10000;  // hull cap; wider hulls coarsen the step (with a warning)
};

/**
 * Univariate delay distribution. Three variants:
 *  - Mixture:   normalized windowed-Gaussian mixture, all moments/CDF in
 *               closed form via the Gaussian error integral;
 *  - PointMass: a single atom (degenerate delay, e.g. an empty link);
 *  - Gridded:   lattice density (mass_i = density_i·step spread uniformly over
 *               the cell [x_i − step/2, x_i + step/2]), produced by convolve().
 *
 * Values are immutable after construction; all operations are const and safe
 * for concurrent use.
 */
class Distribution {
 public:
  struct CompCache {  // precomputed per-component constants for fast inversion
    double c = 0, inv_s = 0, e_lo = 0, e_hi = 0, lo = 0, hi = 0;
  };
  struct Mixture {
    std::vector<GaussComponent> comps;
    double norm = 1.0;               // Z = Σ component masses
    std::vector<double> cum;         // cumulative normalized component masses
    std::vector<CompCache> cache;
    bool operator==(const Mixture& o) const { return comps == o.comps; }
  };
  struct PointMass {
    double value = 0.0;
    bool operator==(const PointMass&) const = default;
  };
  struct Gridded {
    double x0 = 0.0;                 // center of cell 0
    double step = 1e-3;
    std::vector<double> density;     // ≥ 0, step·Σ density = 1 (±1e-6)
    std::vector<double> cum;         // cumulative cell masses
    bool operator==(const Gridded& o) const {
      return x0 == o.x0 && step == o.step && density == o.density;
    }
  };

  /// Degenerate distribution P(X = value) = 1.
  static Distribution point_mass(double value);

  /**
   * Builds a normalized Mixture from raw components. Zero-width (and
   * zero-mass) components are dropped; throws AllDegenerate if nothing
   * remains (callers wanting a degenerate delay should use point_mass),
   * NonFinite / ValidationError on bad parameters. The resulting pdf
   * integrates to 1 within 1e-9.
   */
  static Distribution normalize(std::vector<GaussComponent> comps);

  /// Wraps an explicit lattice density; validates mass = 1 within 1e-6.
  static Distribution gridded(double x0, double step, std::vector<double> density);

  double mean() const;
  double variance() const;
  double second_moment() const;

  double support_lo() const;
  double support_hi() const;

  /// P(X ≤ x); right-continuous, handles the PointMass jump.
  double cdf(double x) const;

  /// Density at x (0 outside support; PointMass reports 0 — use cdf for atoms).
  double pdf(double x) const;

  /**
   * Smallest x with cdf(x) ≥ q, found by lower-bound bisection on the support
   * hull (|cdf(x) − q| ≤ 1e-9 off plateaus). If q falls on a flat CDF plateau
   * the left endpoint of the plateau is returned (documented convention).
   * Requires 0 < q < 1 except for PointMass, which returns its atom.
   */
  double quantile(double q) const;

  /**
   * Upper-tail conditional expectation E[X | X ≥ v_α] with P(X ≥ v_α) = α,
   * for 0 < α ≤ 1 (α = 1 gives the mean). Uses the generalized form
   * (E[X·1{X>v}] + v·(α − P(X>v))) / α with v the (1−α)-quantile, which is
   * exact in the presence of atoms; a PointMass returns its atom for any α.
   */
  double cvar_upper(double alpha) const;

  /// E[X · 1{X > v}] — closed-form partial first moment.
  double upper_partial_moment(double v) const;

  /// P(X > v) (strict; differs from 1 − cdf(v) only at atoms).
  double prob_greater(double v) const;

  /**
   * Analytic inverse CDF used by the sampler: O(log #components) and smooth in
   * the distribution parameters, so common-random-number schemes that reuse
   * the same uniforms across nearby distributions produce smooth estimates.
   * u must lie in [0, 1).
   */
  double inverse_cdf_fast(double u) const;

  /// One draw via inverse transform; reproducible given the stream.
  double sample(RandomStream& rs) const { return inverse_cdf_fast(rs.uniform()); }

  /**
   * Distribution of X + Y for independent X, Y. A PointMass operand acts as an
   * exact analytic shift; otherwise both operands are discretized with exact
   * cell masses and a two-point split that preserves each cell's first moment
   * (so means add to ~1e-12) and convolved on a common lattice. If the summed
   * hull exceeds policy.max_points the step is coarsened with a warning on
   * stderr; a non-finite hull raises GridOverflow.
   */
  Distribution convolve(const Distribution& other, const GridPolicy& policy = {}) const;

  /**
   * Weighted mixture Σ w_i · parts_i rendered onto a common lattice (weights
   * must sum to 1 within 1e-9). Atoms are two-point split onto the lattice —
   * adequate for plots/tests; exact mixture tail math should combine the
   * parts' closed forms instead (see path_eval).
   */
  static Distribution mix_to_grid(const std::vector<std::pair<double, const Distribution*>>& parts,
                                  const GridPolicy& policy = {});

  bool is_point_mass() const { return std::holds_alternative<PointMass>(v_); }
  bool is_mixture() const { return std::holds_alternative<Mixture>(v_); }
  bool is_gridded() const { return std::holds_alternative<Gridded>(v_); }
  const Mixture& as_mixture() const { return std::get<Mixture>(v_); }
  const Gridded& as_gridded() const { return std::get<Gridded>(v_); }
  double point_value() const { return std::get<PointMass>(v_).value; }

  bool operator==(const Distribution& o) const { return v_ == o.v_; }

 private:
  explicit Distribution(std::variant<Mixture, PointMass, Gridded> v) : v_(std::move(v)) {}
  std::variant<Mixture, PointMass, Gridded> v_;
};

/// Inverse error function on (−1, 1); |erf(erf_inv(y)) − y| ≲ 1e-15.
double erf_inv(double y);

}  // namespace scg
