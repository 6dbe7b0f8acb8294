#ifndef DIFFDIST_PHI_HPP
#define DIFFDIST_PHI_HPP

// Basic scalar kernel for the half-line (−∞, 0]:
//
//   Φ(s) = ∫₀ˢ ∫₀^ξ (1 − (r+1)^(−1/h))^(k−1) dr dξ   for s > 0,  0 otherwise.
//
// Φ is k-times differentiable, Φ″ ∈ [0, 1) and Φ vanishes exactly on s ≤ 0.

#include "diffdist/types.hpp"
#include "diffdist/validation.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace diffdist {

template<typename Scalar>
class PhiParams
{
public:
  /// Throws InvalidParams unless h > 0, k ≥ 2 and i/h ∉ {1, 2} for i = 1..k−1.
  PhiParams(Scalar h, int k)
    : h_(h)
    , k_(k)
  {
    if (!(h > Scalar(0)) || !std::isfinite(static_cast<double>(h)))
      throw InvalidParams("PhiParams: h must be positive and finite");
    if (k < 2)
      throw InvalidParams("PhiParams: k must be at least 2");
    for (int i = 1; i < k; ++i) {
      const Scalar a = Scalar(i) / h;
      if (std::abs(a - Scalar(1)) < Scalar(1e-9) || std::abs(a - Scalar(2)) < Scalar(1e-9))
        throw InvalidParams("PhiParams: i/h hits a closed-form pole at i = " + std::to_string(i));
    }
    binomials_.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
      binomials_.push_back(static_cast<Scalar>(boost::math::binomial_coefficient<double>(static_cast<unsigned>(k - 1), static_cast<unsigned>(i))));
  }

  Scalar h() const { return h_; }
  int k() const { return k_; }

  /// C(k−1, i) for i = 0..k−1.
  Scalar binomial(int i) const { return binomials_[static_cast<std::size_t>(i)]; }

private:
  Scalar h_;
  int k_;
  std::vector<Scalar> binomials_;
};

/// Φ and its first two derivatives at one point.
template<typename Scalar>
struct PhiValue
{
  Scalar value{0};
  Scalar d1{0};
  Scalar d2{0};
};

namespace detail {

// Neumaier-compensated accumulator.
template<typename Scalar>
struct CompensatedSum
{
  Scalar sum{0};
  Scalar carry{0};
  Scalar magnitude{0};

  void add(Scalar x)
  {
    const Scalar t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      carry += (sum - t) + x;
    else
      carry += (x - t) + sum;
    sum = t;
    magnitude += std::abs(x);
  }

  Scalar result() const { return sum + carry; }

  /// True when Σ|terms| exceeds |Σ terms| by more than `factor`.
  bool lost_more_than(Scalar factor) const
  {
    return magnitude > std::abs(result()) * factor;
  }
};

// Fall back to quadrature when cancellation costs more than six digits.
inline constexpr double kMaxCancellation = 1e6;

} // namespace detail

/// Φ″(s) = (1 − (s+1)^(−1/h))^(k−1) for s > 0.
template<typename Scalar>
Scalar phi_d2(Scalar s, const PhiParams<Scalar>& params)
{
  if (!(s > Scalar(0)))
    return Scalar(0);
  const Scalar base = -std::expm1(-std::log1p(s) / params.h());
  return std::pow(base, params.k() - 1);
}

/// Φ′ and Φ by quadrature of Φ″ (used when the closed form cancels). Φ″ is
/// analytic on [0, s] with its nearest singularity at −1, so fixed 20-point
/// Gauss–Legendre is at machine precision for s ≤ 1; larger s goes adaptive.
template<typename Scalar>
PhiValue<Scalar> phi_by_quadrature(Scalar s, const PhiParams<Scalar>& params)
{
  PhiValue<Scalar> out;
  if (!(s > Scalar(0)))
    return out;
  out.d2 = phi_d2(s, params);
  auto d2 = [&](Scalar r) { return phi_d2(r, params); };
  auto moment = [&](Scalar r) { return (s - r) * phi_d2(r, params); };
  if (s <= Scalar(1)) {
    using boost::math::quadrature::gauss;
    out.d1 = gauss<Scalar, 20>::integrate(d2, Scalar(0), s);
    out.value = gauss<Scalar, 20>::integrate(moment, Scalar(0), s);
    return out;
  }
  using boost::math::quadrature::gauss_kronrod;
  const Scalar tol = std::max(Scalar(1e-13), std::numeric_limits<Scalar>::epsilon() * Scalar(64));
  out.d1 = gauss_kronrod<Scalar, 31>::integrate(d2, Scalar(0), s, 8, tol);
  out.value = gauss_kronrod<Scalar, 31>::integrate(moment, Scalar(0), s, 8, tol);
  return out;
}

/// Φ, Φ′, Φ″ from the binomial closed form
///   Φ′(s) = Σ_i C(k−1,i)(−1)^i ((s+1)^(1−i/h) − 1)/(1 − i/h)
///   Φ(s)  = Σ_i C(k−1,i)(−1)^i/(1 − i/h) [((s+1)^(2−i/h) − 1)/(2 − i/h) − s]
/// falling back to quadrature when either alternating sum loses more than six
/// digits.
template<typename Scalar>
PhiValue<Scalar> phi_eval(Scalar s, const PhiParams<Scalar>& params)
{
  PhiValue<Scalar> out;
  if (!(s > Scalar(0)))
    return out;
  const Scalar h = params.h();
  const int km1 = params.k() - 1;
  const Scalar L = std::log1p(s);

  detail::CompensatedSum<Scalar> f, df;
  for (int i = 0; i <= km1; ++i) {
    const Scalar binom = params.binomial(i);
    const Scalar sign = (i % 2 == 0) ? Scalar(1) : Scalar(-1);
    const Scalar a1 = Scalar(1) - Scalar(i) / h;
    const Scalar a2 = Scalar(2) - Scalar(i) / h;
    const Scalar c = sign * binom / a1;
    df.add(sign * binom * std::expm1(a1 * L) / a1);
    f.add(c * std::expm1(a2 * L) / a2);
    f.add(-c * s);
  }
  if (f.lost_more_than(Scalar(detail::kMaxCancellation)) || df.lost_more_than(Scalar(detail::kMaxCancellation)))
    return phi_by_quadrature(s, params);

  out.value = std::max(Scalar(0), f.result());
  out.d1 = std::max(Scalar(0), df.result());
  out.d2 = phi_d2(s, params);
  return out;
}

template<typename Scalar>
Scalar phi(Scalar s, const PhiParams<Scalar>& params)
{
  return phi_eval(s, params).value;
}

template<typename Scalar>
Scalar phi_d1(Scalar s, const PhiParams<Scalar>& params)
{
  return phi_eval(s, params).d1;
}

/// Grid for validate_basic_p2s: n uniformly spaced points on [lo, hi].
struct SampleGrid
{
  double lo = -2.0;
  double hi = 10.0;
  int n = 1201;
};

/// Checks the basic-kernel properties on a grid: Φ ≥ 0, Φ = 0 iff s ≤ 0,
/// Φ″ ∈ (0, 1) for s > 0 and Φ″ = 0 for s ≤ 0, derivative chain against
/// central differences, and continuity of derivatives up to order k at 0.
///
/// Continuity of the j-th derivative (2 < j ≤ k) is judged by mesh
/// refinement: the one-sided difference estimate of Φ^(j) at 0⁺ must shrink
/// when the mesh is halved (a true jump does not). Order k+1 is reported for
/// information only.
template<typename Scalar>
ValidationReport validate_basic_p2s(const PhiParams<Scalar>& params, const SampleGrid& grid = {})
{
  ValidationReport report;
  report.subject = "basic_phi(h=" + std::to_string(static_cast<double>(params.h())) +
                   ", k=" + std::to_string(params.k()) + ")";

  Check nonneg{"phi_nonnegative"};
  Check zero_iff{"phi_zero_iff_nonpositive"};
  Check d2_range{"phi_d2_range"};
  Check d2_monotone{"phi_d2_monotone"};
  Check chain{"derivative_chain_fd"};

  if (grid.n < 2 || !(grid.hi > grid.lo))
    throw InvalidParams("validate_basic_p2s: bad grid");
  Scalar prev_d2 = Scalar(0);
  for (int i = 0; i < grid.n; ++i) {
    const Scalar s = Scalar(grid.lo + (grid.hi - grid.lo) * i / (grid.n - 1));
    const auto v = phi_eval(s, params);

    ++nonneg.samples;
    if (v.value < Scalar(0)) {
      ++nonneg.failures;
      nonneg.worst = std::min(nonneg.worst, static_cast<double>(v.value));
    }

    ++zero_iff.samples;
    if ((s <= Scalar(0)) != (v.value == Scalar(0)))
      ++zero_iff.failures;

    ++d2_range.samples;
    // Φ″ rounds to 1 once (s+1)^(−1/h) drops below ulp(1); judge the upper
    // bound on the complement 1 − Φ″ there.
    auto below_one = [&] {
      if (v.d2 < Scalar(1))
        return true;
      const Scalar x = std::pow(s + Scalar(1), Scalar(-1) / params.h());
      return -std::expm1(Scalar(params.k() - 1) * std::log1p(-x)) > Scalar(0);
    };
    const bool in_range = s > Scalar(0) ? (v.d2 > Scalar(0) && below_one()) : (v.d2 == Scalar(0));
    if (!in_range) {
      ++d2_range.failures;
      d2_range.worst = std::max(d2_range.worst, static_cast<double>(v.d2));
    }

    if (s >= Scalar(0)) {
      ++d2_monotone.samples;
      if (v.d2 < prev_d2)
        ++d2_monotone.failures;
      prev_d2 = v.d2;
    }

    // Φ^(k+1) jumps at 0, so a stencil straddling it carries an O(step)
    // error; shrink it there.
    Scalar step = Scalar(1e-6) * std::max(Scalar(1), std::abs(s));
    if (std::abs(s) < step)
      step = Scalar(1e-9);
    const auto lo = phi_eval(s - step, params);
    const auto hi = phi_eval(s + step, params);
    const Scalar e1 = std::abs((hi.value - lo.value) / (Scalar(2) * step) - v.d1);
    const Scalar e2 = std::abs((hi.d1 - lo.d1) / (Scalar(2) * step) - v.d2);
    ++chain.samples;
    const double e = static_cast<double>(std::max(e1, e2));
    chain.worst = std::max(chain.worst, e);
    if (e > 1e-6)
      ++chain.failures;
  }

  // One-sided forward-difference estimate of Φ^(j)(0⁺) from Φ″ samples.
  auto right_derivative = [&](int order, Scalar mesh) {
    const int q = order - 2; // difference order applied to Φ″
    Scalar acc = 0;
    for (int i = 0; i <= q; ++i) {
      const Scalar binom = static_cast<Scalar>(boost::math::binomial_coefficient<double>(static_cast<unsigned>(q), static_cast<unsigned>(i)));
      const Scalar sign = ((q - i) % 2 == 0) ? Scalar(1) : Scalar(-1);
      acc += sign * binom * phi_d2(Scalar(i) * mesh, params);
    }
    return acc / std::pow(mesh, q);
  };

  Check smooth{"continuity_at_zero"};
  smooth.note = "derivative orders 0..k";
  // Orders 0..2 are continuous by construction (Φ(0)=Φ′(0)=Φ″(0)=0 from the
  // right); check they vanish at 0⁺.
  const auto at_zero = phi_eval(Scalar(1e-12), params);
  smooth.samples += 3;
  if (std::abs(at_zero.value) > Scalar(1e-12) || std::abs(at_zero.d1) > Scalar(1e-9) || std::abs(at_zero.d2) > Scalar(1e-6))
    ++smooth.failures;
  const Scalar mesh = Scalar(1e-3);
  for (int order = 3; order <= params.k(); ++order) {
    ++smooth.samples;
    const Scalar coarse = std::abs(right_derivative(order, mesh));
    const Scalar fine = std::abs(right_derivative(order, mesh / Scalar(2)));
    smooth.worst = std::max(smooth.worst, static_cast<double>(fine / std::max(coarse, Scalar(1e-300))));
    if (!(coarse <= Scalar(1e-3) || fine <= Scalar(0.75) * coarse))
      ++smooth.failures;
  }
  {
    Check jump{"order_k_plus_1_jump"};
    jump.note = "informational: Φ^(k+1) is expected to jump at 0";
    jump.samples = 1;
    jump.worst = static_cast<double>(std::abs(right_derivative(params.k() + 1, mesh / Scalar(2))));
    report.checks.push_back(jump);
  }

  for (Check* c : {&nonneg, &zero_iff, &d2_range, &d2_monotone, &chain, &smooth}) {
    c->passed = c->failures == 0;
    report.checks.push_back(*c);
  }
  return report;
}

} // namespace diffdist

#endif // DIFFDIST_PHI_HPP
