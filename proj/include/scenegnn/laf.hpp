#pragma once

// Learnable aggregation over multisets of values in [0, 1]:
//
//   L_{a,b}(x) = (sum_i x_i^b)^a
//   LAF(x)     = (alpha L_{a,b}(x) + beta L_{c,d}(1-x))
//              / (gamma L_{e,f}(x) + delta L_{g,h}(1-x))
//
// with 0^0 = 1, so an inner exponent of 0 counts elements.

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "scenegnn/error.hpp"
#include "scenegnn/matrix.hpp"
#include "scenegnn/ops.hpp"

namespace scenegnn::gnn {

/// Denominators with magnitude below this are pushed out to +-kLafGuard.
inline constexpr double kLafGuard = 1e-8;

/// Effective (already nonnegative) exponents and real coefficients.
struct LafParams {
  double a = 1, b = 1, c = 0, d = 0, e = 0, f = 0, g = 0, h = 0;
  double alpha = 1, beta = 0, gamma = 1, delta = 0;

  static LafParams sum() { return {}; }
  static LafParams mean() {
    LafParams p;
    p.e = 1;
    p.f = 0;
    return p;
  }
};

inline double guard_denominator(double den) {
  if (std::abs(den) >= kLafGuard) return den;
  return den < 0.0 ? -kLafGuard : kLafGuard;
}

inline double generalized_norm(std::span<const double> x, double outer, double inner) {
  double s = 0.0;
  for (double v : x) s += std::pow(v, inner);
  return std::pow(s, outer);
}

/// Scalar LAF. The empty multiset aggregates to 0.
inline double laf_aggregate(const LafParams& p, std::span<const double> x) {
  if (x.empty()) return 0.0;
  std::vector<double> complement;
  complement.reserve(x.size());
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::InputOutOfRange, "LAF input " + std::to_string(v) + " not in [0,1]");
    complement.push_back(1.0 - v);
  }
  const double num = p.alpha * generalized_norm(x, p.a, p.b) + p.beta * generalized_norm(complement, p.c, p.d);
  const double den = p.gamma * generalized_norm(x, p.e, p.f) + p.delta * generalized_norm(complement, p.g, p.h);
  return num / guard_denominator(den);
}

namespace detail {

// d/dx x^p, with the x = 0 limits taken from the right (0 where it diverges).
inline double dpow_dbase(double x, double p) {
  if (p == 0.0) return 0.0;
  if (x > 0.0) return p * std::pow(x, p - 1.0);
  return p == 1.0 ? 1.0 : 0.0;
}

// d/dp x^p = x^p ln x, which tends to 0 as x -> 0+.
inline double dpow_dexp(double x, double p) { return x > 0.0 ? std::pow(x, p) * std::log(x) : 0.0; }

}  // namespace detail

/// members[v] lists the input rows pooled into output row v.
using Membership = std::vector<std::vector<std::size_t>>;

/// Rows of a 0/1 matrix as member lists.
inline Membership membership_from(const Matrix& mask) {
  Membership out(mask.rows);
  for (std::size_t v = 0; v < mask.rows; ++v)
    for (std::size_t u = 0; u < mask.cols; ++u)
      if (mask(v, u) != 0.0) out[v].push_back(u);
  return out;
}

/// Fused, channel-wise LAF over multisets of rows of `x`.
///
/// x:            m x C, entries in [0, 1]
/// members:      r lists of row indices into x; list v is the multiset pooled into output row v
/// exponents:    8 x C rows (a, b, c, d, e, f, g, h), expected nonnegative
/// coefficients: 4 x C rows (alpha, beta, gamma, delta)
///
/// Returns r x C. Rows with an empty multiset are 0 with no gradient.
inline nn::Tensor laf_pool(const nn::Tensor& x, const Membership& members, const nn::Tensor& exponents,
                           const nn::Tensor& coefficients) {
  using nn::to_string;
  const std::size_t m = x.rows();
  const std::size_t channels = x.cols();
  const std::size_t r = members.size();
  for (const auto& list : members)
    for (std::size_t u : list)
      if (u >= m) throw Error(ErrorKind::ShapeMismatch, "laf_pool: member index " + std::to_string(u) + " vs input " + to_string(x.shape()));
  if (exponents.rows() != 8 || exponents.cols() != channels) {
    throw Error(ErrorKind::ShapeMismatch, "laf_pool: exponents " + to_string(exponents.shape()) + " vs input " + to_string(x.shape()));
  }
  if (coefficients.rows() != 4 || coefficients.cols() != channels) {
    throw Error(ErrorKind::ShapeMismatch,
                "laf_pool: coefficients " + to_string(coefficients.shape()) + " vs input " + to_string(x.shape()));
  }
  for (double v : x.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::InputOutOfRange, "laf_pool: input " + std::to_string(v) + " not in [0,1]");
  }

  const auto xv = x.values();
  const auto ev = exponents.values();
  const auto cv = coefficients.values();

  // Per (row, channel): inner sums S_j, outer powers T_j, numerator, guarded denominator.
  struct Cache {
    std::array<double, 4> s{};
    std::array<double, 4> t{};
    double num = 0.0;
    double den = 1.0;
    bool clamped = false;
  };
  std::vector<Cache> cache(r * channels);
  std::vector<double> out(r * channels, 0.0);

  for (std::size_t v = 0; v < r; ++v) {
    if (members[v].empty()) continue;
    for (std::size_t c = 0; c < channels; ++c) {
      Cache& k = cache[v * channels + c];
      const double b = ev[1 * channels + c], d = ev[3 * channels + c], f = ev[5 * channels + c], h = ev[7 * channels + c];
      for (std::size_t u : members[v]) {
        const double xi = xv[u * channels + c];
        k.s[0] += std::pow(xi, b);
        k.s[1] += std::pow(1.0 - xi, d);
        k.s[2] += std::pow(xi, f);
        k.s[3] += std::pow(1.0 - xi, h);
      }
      for (std::size_t j = 0; j < 4; ++j) k.t[j] = std::pow(k.s[j], ev[(2 * j) * channels + c]);
      k.num = cv[0 * channels + c] * k.t[0] + cv[1 * channels + c] * k.t[1];
      const double den = cv[2 * channels + c] * k.t[2] + cv[3 * channels + c] * k.t[3];
      k.den = guard_denominator(den);
      k.clamped = k.den != den;
      out[v * channels + c] = k.num / k.den;
    }
  }

  return nn::detail::make_result(
      {r, channels}, std::move(out), {x, exponents, coefficients},
      [members, cache = std::move(cache), channels, r](nn::detail::Node& self) {
        nn::detail::Node& xn = *self.parents[0];
        nn::detail::Node& en = *self.parents[1];
        nn::detail::Node& cn = *self.parents[2];
        const auto& xv = xn.value;
        const auto& ev = en.value;
        const auto& cv = cn.value;
        std::vector<double>* gx = xn.requires_grad ? &xn.ensure_grad() : nullptr;
        std::vector<double>* ge = en.requires_grad ? &en.ensure_grad() : nullptr;
        std::vector<double>* gc = cn.requires_grad ? &cn.ensure_grad() : nullptr;

        for (std::size_t v = 0; v < r; ++v) {
          if (members[v].empty()) continue;
          for (std::size_t c = 0; c < channels; ++c) {
            const auto& k = cache[v * channels + c];
            const double g = self.grad[v * channels + c];
            if (g == 0.0) continue;
            const double d_num = g / k.den;
            const double d_den = k.clamped ? 0.0 : -g * k.num / (k.den * k.den);
            // Upstream gradient of each outer power term T_j.
            const std::array<double, 4> d_t{d_num * cv[0 * channels + c], d_num * cv[1 * channels + c],
                                            d_den * cv[2 * channels + c], d_den * cv[3 * channels + c]};
            if (gc) {
              (*gc)[0 * channels + c] += d_num * k.t[0];
              (*gc)[1 * channels + c] += d_num * k.t[1];
              (*gc)[2 * channels + c] += d_den * k.t[2];
              (*gc)[3 * channels + c] += d_den * k.t[3];
            }
            std::array<double, 4> d_s{};
            for (std::size_t j = 0; j < 4; ++j) {
              const double outer = ev[(2 * j) * channels + c];
              d_s[j] = d_t[j] * detail::dpow_dbase(k.s[j], outer);
              if (ge) (*ge)[(2 * j) * channels + c] += d_t[j] * detail::dpow_dexp(k.s[j], outer);
            }
            const double b = ev[1 * channels + c], d = ev[3 * channels + c], f = ev[5 * channels + c], h = ev[7 * channels + c];
            for (std::size_t u : members[v]) {
              const double xi = xv[u * channels + c];
              const double yi = 1.0 - xi;
              if (gx) {
                (*gx)[u * channels + c] += d_s[0] * detail::dpow_dbase(xi, b) - d_s[1] * detail::dpow_dbase(yi, d) +
                                           d_s[2] * detail::dpow_dbase(xi, f) - d_s[3] * detail::dpow_dbase(yi, h);
              }
              if (ge) {
                (*ge)[1 * channels + c] += d_s[0] * detail::dpow_dexp(xi, b);
                (*ge)[3 * channels + c] += d_s[1] * detail::dpow_dexp(yi, d);
                (*ge)[5 * channels + c] += d_s[2] * detail::dpow_dexp(xi, f);
                (*ge)[7 * channels + c] += d_s[3] * detail::dpow_dexp(yi, h);
              }
            }
          }
        }
      });
}

}  // namespace scenegnn::gnn
