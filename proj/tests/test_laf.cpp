#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scenegnn/grad_check.hpp"
#include "scenegnn/laf.hpp"
#include "scenegnn/ops.hpp"

using namespace scenegnn;
using namespace scenegnn::gnn;

namespace {

std::vector<double> random_multiset(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

LafParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> e(0.1, 2.0), c(-1.0, 1.0);
  LafParams p;
  p.a = e(rng), p.b = e(rng), p.c = e(rng), p.d = e(rng), p.e = e(rng), p.f = e(rng), p.g = e(rng), p.h = e(rng);
  p.alpha = c(rng), p.beta = c(rng), p.gamma = 1.0 + e(rng), p.delta = e(rng);
  return p;
}

nn::Tensor params_tensor(const std::vector<LafParams>& ps, bool exponents) {
  const std::size_t c = ps.size();
  std::vector<double> v(exponents ? 8 * c : 4 * c);
  for (std::size_t k = 0; k < c; ++k) {
    const auto& p = ps[k];
    const double e[8] = {p.a, p.b, p.c, p.d, p.e, p.f, p.g, p.h};
    const double q[4] = {p.alpha, p.beta, p.gamma, p.delta};
    if (exponents)
      for (std::size_t r = 0; r < 8; ++r) v[r * c + k] = e[r];
    else
      for (std::size_t r = 0; r < 4; ++r) v[r * c + k] = q[r];
  }
  return nn::Tensor({exponents ? 8u : 4u, c}, std::move(v));
}

}  // namespace

TEST(Laf, SumRecovery) {
  const std::vector<double> x{0.2, 0.3};
  EXPECT_NEAR(laf_aggregate(LafParams::sum(), x), 0.5, 1e-15);
}

TEST(Laf, MeanRecovery) {
  const std::vector<double> x{0.2, 0.3};
  EXPECT_NEAR(laf_aggregate(LafParams::mean(), x), 0.25, 1e-15);
}

TEST(Laf, ZeroPadding) {
  const std::vector<double> x{0.2, 0.3, 0.0};
  EXPECT_NEAR(laf_aggregate(LafParams::sum(), x), 0.5, 1e-15);
  // The mean setting counts the zero.
  EXPECT_NEAR(laf_aggregate(LafParams::mean(), x), 0.5 / 3.0, 1e-15);
}

TEST(Laf, EmptyMultisetIsZero) {
  EXPECT_EQ(laf_aggregate(LafParams::sum(), {}), 0.0);
  EXPECT_EQ(laf_aggregate(LafParams::mean(), {}), 0.0);
}

TEST(Laf, ZeroToTheZeroIsOne) {
  const std::vector<double> x{0.0, 0.0, 0.5};
  EXPECT_EQ(generalized_norm(x, 1.0, 0.0), 3.0);
}

TEST(Laf, InputOutOfRange) {
  for (double bad : {-0.01, 1.01, std::nan("")}) {
    const std::vector<double> x{0.5, bad};
    try {
      laf_aggregate(LafParams::sum(), x);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InputOutOfRange);
    }
  }
}

TEST(Laf, DenominatorGuard) {
  EXPECT_EQ(guard_denominator(0.0), kLafGuard);
  EXPECT_EQ(guard_denominator(-1e-12), -kLafGuard);
  EXPECT_EQ(guard_denominator(0.75), 0.75);
  LafParams p = LafParams::sum();
  p.gamma = 0.0;
  const std::vector<double> x{0.5};
  EXPECT_TRUE(std::isfinite(laf_aggregate(p, x)));
}

TEST(Laf, RecoveryOnRandomMultisets) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const auto x = random_multiset(rng, std::uniform_int_distribution<std::size_t>(1, 40)(rng));
    double s = 0.0;
    for (double v : x) s += v;
    EXPECT_NEAR(laf_aggregate(LafParams::sum(), x), s, 1e-12);
    EXPECT_NEAR(laf_aggregate(LafParams::mean(), x), s / static_cast<double>(x.size()), 1e-12);
  }
}

TEST(Laf, GeneralizedNormPaddingInvariance) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> e(0.05, 3.0);
  for (int t = 0; t < 1000; ++t) {
    auto x = random_multiset(rng, std::uniform_int_distribution<std::size_t>(0, 20)(rng));
    const double a = e(rng), b = e(rng);
    const double before = generalized_norm(x, a, b);
    const std::size_t zeros = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
    for (std::size_t k = 0; k < zeros; ++k) x.insert(x.begin() + static_cast<std::ptrdiff_t>(rng() % (x.size() + 1)), 0.0);
    EXPECT_EQ(generalized_norm(x, a, b), before);
  }
}

TEST(Laf, OrderInvariance) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    auto x = random_multiset(rng, 8);
    const auto p = random_params(rng);
    const double v = laf_aggregate(p, x);
    std::shuffle(x.begin(), x.end(), rng);
    EXPECT_NEAR(laf_aggregate(p, x), v, 1e-12 * std::max(1.0, std::abs(v)));
  }
}

TEST(LafPool, MatchesScalarAggregate) {
  std::mt19937_64 rng(4);
  const std::size_t m = 9, channels = 3;
  const auto xs = random_multiset(rng, m * channels);
  const nn::Tensor x({m, channels}, xs);
  std::vector<LafParams> ps{random_params(rng), LafParams::sum(), LafParams::mean()};
  // Includes an empty set and a repeated member.
  const Membership members{{0, 1, 2}, {}, {3, 4, 5, 6, 7, 8}, {2, 2}};
  const auto out = laf_pool(x, members, params_tensor(ps, true), params_tensor(ps, false));
  ASSERT_EQ(out.shape(), (nn::Shape{4, channels}));
  for (std::size_t r = 0; r < members.size(); ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      std::vector<double> set;
      for (std::size_t i : members[r]) set.push_back(xs[i * channels + c]);
      EXPECT_NEAR(out.at(r, c), laf_aggregate(ps[c], set), 1e-14) << r << "," << c;
    }
  }
}

TEST(LafPool, ShapeValidation) {
  const nn::Tensor x = nn::Tensor::filled(3, 2, 0.5);
  const Membership members{{0, 1}};
  try {
    laf_pool(x, members, nn::Tensor::filled(8, 3, 1.0), nn::Tensor::filled(4, 2, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
  try {
    laf_pool(x, Membership{{5}}, nn::Tensor::filled(8, 2, 1.0), nn::Tensor::filled(4, 2, 1.0));
    FAIL();
  } catch (const Error&) {
  }
}

TEST(LafPool, GradCheckOverInputsAndParameters) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 7, channels = 3;
    std::vector<double> xs = random_multiset(rng, m * channels);
    for (auto& v : xs) v = 0.05 + 0.9 * v;  // keep finite differences inside [0, 1]
    auto x = nn::Tensor({m, channels}, xs);
    std::vector<LafParams> ps{random_params(rng), random_params(rng), random_params(rng)};
    auto raw = params_tensor(ps, true);
    for (auto& v : raw.mutable_values()) v = std::log(std::expm1(v));  // softplus^-1
    auto coef = params_tensor(ps, false);
    const Membership members{{0, 1, 2}, {3, 4, 5, 6}, {1, 6}, {}};
    const double err = nn::grad_check(
        [&] {
          const auto y = laf_pool(x, members, nn::softplus(raw), coef);
          return nn::sum(nn::elementwise_mul(y, nn::Tensor({4, channels}, {1, -2, 0.5, 0.3, 1.1, -0.7, 2, 1, -1, 3, 1, 1})));
        },
        {x, raw, coef});
    EXPECT_LT(err, 1e-5) << "trial " << t;
  }
}

TEST(LafPool, GradientAtZeroInputsIsFinite) {
  auto x = nn::Tensor({3, 1}, {0.0, 0.0, 0.4});
  x.set_requires_grad(true);
  std::vector<LafParams> ps{LafParams::mean()};
  auto e = params_tensor(ps, true);
  auto c = params_tensor(ps, false);
  e.set_requires_grad(true);
  nn::sum(laf_pool(x, Membership{{0, 1, 2}}, e, c)).backward();
  for (double g : x.grad()) EXPECT_TRUE(std::isfinite(g));
  for (double g : e.grad()) EXPECT_TRUE(std::isfinite(g));
}
