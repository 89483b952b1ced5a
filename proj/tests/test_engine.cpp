#include <gtest/gtest.h>

#include <cmath>

#include "manifoldshap/discrete.hpp"
#include "manifoldshap/engine.hpp"
#include "manifoldshap/manifold.hpp"
#include "manifoldshap/robustness.hpp"
#include "manifoldshap/scm.hpp"
#include "manifoldshap/values.hpp"

namespace ms = manifoldshap;

namespace {

double X1(std::span<const double> x) { return x[0]; }

/// v(S) read from a table indexed by mask; exact, no sampling.
class TableValue final : public ms::ValueFunction {
 public:
  TableValue(std::vector<double> table, std::size_t d) : t_(std::move(table)), d_(d) {}
  std::size_t dim() const override { return d_; }
  std::string name() const override { return "table"; }
  ms::ValueEstimate Evaluate(const ms::Coalition& s, std::span<const double>, ms::RngStream&) const override {
    return {t_[s.mask()], 0.0, 0};
  }

 private:
  std::vector<double> t_;
  std::size_t d_;
};

std::vector<double> RandomTable(std::size_t d, ms::RngStream& rng) {
  std::vector<double> t(std::size_t{1} << d);
  for (auto& v : t) v = rng.normal(0, 3);
  return t;
}

/// Random pmf on {0,1}^4 with a random model table.
struct Discrete4 {
  std::shared_ptr<const ms::DiscreteJoint> joint;
  ms::Model f;
};

Discrete4 MakeDiscrete4(std::uint64_t seed) {
  ms::RngStream rng(seed);
  ms::Pmf p;
  double total = 0.0;
  for (int k = 0; k < 16; ++k) {
    p.outcomes.push_back({double(k & 1), double((k >> 1) & 1), double((k >> 2) & 1), double((k >> 3) & 1)});
    p.probs.push_back(0.05 + rng.uniform());
    total += p.probs.back();
  }
  for (auto& q : p.probs) q /= total;
  auto table = std::make_shared<std::vector<double>>(RandomTable(4, rng));
  auto f = [table](std::span<const double> x) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < 4; ++j) k |= std::size_t(x[j] > 0.5) << j;
    return (*table)[k];
  };
  return {std::make_shared<const ms::DiscreteJoint>(p), f};
}

}  // namespace

TEST(ExactShapley, DiscreteExampleInterventional) {
  for (double p : {0.6, 0.9}) {
    auto joint = std::make_shared<const ms::DiscreteJoint>(ms::MakeConfoundedBinary(p));
    ms::DiscreteValue v(X1, joint, ms::DiscreteValue::Kind::kInterventional);
    for (ms::Instance x : {ms::Instance{1, 1}, ms::Instance{0, 1}, ms::Instance{1, 0}}) {
      auto a = ms::ExactShapley(v, x, ms::RngStream(1));
      EXPECT_NEAR(a.phi[1], 0.0, 1e-15);
    }
  }
}

TEST(ExactShapley, DiscreteExampleConditional) {
  auto joint = std::make_shared<const ms::DiscreteJoint>(ms::MakeConfoundedBinary(0.9));
  ms::DiscreteValue v(X1, joint, ms::DiscreteValue::Kind::kConditional);
  auto a = ms::ExactShapley(v, ms::Instance{1, 1}, ms::RngStream(1));
  EXPECT_NEAR(a.phi[1], 0.2, 1e-12);
  EXPECT_NEAR(a.phi[0] + a.phi[1], 0.5, 1e-12);
}

TEST(ExactShapley, ConstantModelGivesZero) {
  auto v = ms::MakeIsValue([](std::span<const double>) { return 4.0; }, ms::MakeDagScm(0.5), 50);
  auto a = ms::ExactShapley(*v, ms::Instance{0.1, 0.2}, ms::RngStream(2));
  for (double p : a.phi) EXPECT_EQ(p, 0.0);
}

TEST(ExactShapley, EfficiencyDummyLinearityOnRandomTables) {
  ms::RngStream rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 1 + rng.index(8);
    auto t1 = RandomTable(d, rng);
    auto t2 = RandomTable(d, rng);
    auto a = ms::ExactShapleyFromTable(t1, d);
    double sum = 0.0;
    for (double p : a.phi) sum += p;
    EXPECT_NEAR(sum, t1.back() - t1.front(), 1e-9);

    // Linearity: phi(a v1 + b v2) = a phi(v1) + b phi(v2).
    std::vector<double> mix(t1.size());
    for (std::size_t k = 0; k < mix.size(); ++k) mix[k] = 2.5 * t1[k] - 0.75 * t2[k];
    auto b = ms::ExactShapleyFromTable(t2, d);
    auto c = ms::ExactShapleyFromTable(mix, d);
    for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(c.phi[i], 2.5 * a.phi[i] - 0.75 * b.phi[i], 1e-9);

    // Dummy: make feature j irrelevant.
    const std::size_t j = rng.index(d);
    for (std::size_t k = 0; k < t1.size(); ++k)
      if (k >> j & 1) t1[k] = t1[k & ~(std::size_t{1} << j)];
    EXPECT_NEAR(ms::ExactShapleyFromTable(t1, d).phi[j], 0.0, 1e-12);
  }
}

TEST(ExactShapley, CachedEngineMatchesTable) {
  ms::RngStream rng(4);
  auto t = RandomTable(5, rng);
  TableValue v(t, 5);
  ms::EvalCache cache(5);
  auto a = ms::ExactShapley(v, ms::Instance(5, 0.0), ms::RngStream(1), {}, &cache);
  auto b = ms::ExactShapleyFromTable(t, 5);
  EXPECT_EQ(cache.size(), 32u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(a.phi[i], b.phi[i], 1e-12);
  EXPECT_EQ(a.value_empty, t.front());
  EXPECT_EQ(a.value_full, t.back());
}

TEST(ExactShapley, EfficiencyWithSampledValues) {
  auto v = ms::MakeIsValue([](std::span<const double> x) { return x[0] * x[1] + x[1]; },
                           ms::MakeDagScm(0.85), 200, ms::Interventional::kMarginal);
  auto a = ms::ExactShapley(*v, ms::Instance{0.7, -0.4}, ms::RngStream(5));
  EXPECT_NEAR(a.phi[0] + a.phi[1], a.value_full - a.value_empty, 1e-9);
  ASSERT_TRUE(a.std_errors);
}

TEST(ExactShapley, DimensionGuard) {
  TableValue v(std::vector<double>(1, 0.0), 25);
  EXPECT_THROW(ms::ExactShapley(v, ms::Instance(25, 0.0), ms::RngStream(1)), std::invalid_argument);
}

TEST(PermutationShapley, SingleFeatureIsExact) {
  TableValue v({1.5, 4.0}, 1);
  for (std::size_t m : {1u, 7u}) {
    auto a = ms::PermutationShapley(v, ms::Instance{0.0}, ms::RngStream(6), {m});
    EXPECT_DOUBLE_EQ(a.phi[0], 2.5);
  }
}

TEST(PermutationShapley, MatchesExactOnDiscreteD4) {
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    auto inst = MakeDiscrete4(seed);
    ms::DiscreteValue v(inst.f, inst.joint, ms::DiscreteValue::Kind::kInterventional);
    ms::Instance x{1, 0, 1, 1};
    auto exact = ms::ExactShapley(v, x, ms::RngStream(1));
    auto perm = ms::PermutationShapley(v, x, ms::RngStream(seed), {2000});
    ASSERT_TRUE(perm.std_errors);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_LE(std::abs(perm.phi[i] - exact.phi[i]), 3 * (*perm.std_errors)[i] + 1e-12) << "feature " << i;
    }
  }
}

TEST(PermutationShapley, AntitheticAgreesWithExact) {
  auto inst = MakeDiscrete4(10);
  ms::DiscreteValue v(inst.f, inst.joint, ms::DiscreteValue::Kind::kConditional);
  ms::Instance x{0, 1, 1, 0};
  auto exact = ms::ExactShapley(v, x, ms::RngStream(1));
  auto perm = ms::PermutationShapley(v, x, ms::RngStream(11), {2000, true});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(std::abs(perm.phi[i] - exact.phi[i]), 3 * (*perm.std_errors)[i] + 1e-12);
}

TEST(PermutationShapley, ErrorHalvesWhenPermutationsQuadruple) {
  // DAG instance under marginal semantics: phi = (x1, 0) exactly.
  auto v = ms::MakeIsValue(X1, ms::MakeDagScm(0.85), 4, ms::Interventional::kMarginal);
  ms::Instance x{0.8, 0.5};
  auto rmse = [&](std::size_t m) {
    double ss = 0.0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
      auto a = ms::PermutationShapley(*v, x, ms::RngStream(1000 + r, {m}), {m});
      ss += (a.phi[0] - 0.8) * (a.phi[0] - 0.8) + a.phi[1] * a.phi[1];
    }
    return std::sqrt(ss / reps);
  };
  const double ratio = rmse(50) / rmse(200);
  EXPECT_NEAR(ratio, 2.0, 0.6);
}

TEST(PermutationShapley, EfficiencyPerRun) {
  auto v = ms::MakeIsValue(X1, ms::MakeDagScm(0.85), 20, ms::Interventional::kMarginal);
  auto a = ms::PermutationShapley(*v, ms::Instance{0.3, 0.9}, ms::RngStream(12), {100});
  EXPECT_NEAR(a.phi[0] + a.phi[1], a.value_full - a.value_empty, 1e-9);
}

class ManifoldPermutationTest : public ::testing::Test {
 protected:
  void SetUp() override {
    scm = ms::MakeDagScm(0.85);
    ms::RngStream rng(13);
    auto cal = ms::SampleObservational(*scm, 10000, rng);
    z = ms::MakeMassManifold(scm->oracle_density, cal, 0.999);
    sampler = ms::MakeInterventionalSampler(scm, ms::Interventional::kMarginal);
  }
  std::shared_ptr<ms::Scm> scm;
  std::shared_ptr<const ms::Manifold> z;
  std::shared_ptr<ms::CoalitionSampler> sampler;
  ms::Instance x{1.1, 0.7};
};

TEST_F(ManifoldPermutationTest, FullSupportMatchesPermutationIs) {
  ms::FullSupport full(2);
  auto a = ms::ManifoldPermutationShapley(X1, full, *sampler, x, ms::RngStream(14), {2000});
  ms::SampledValue is(X1, sampler, 1, "is");
  auto b = ms::PermutationShapley(is, x, ms::RngStream(15), {2000});
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LE(std::abs(a.phi[i] - b.phi[i]), 3 * std::hypot((*a.std_errors)[i], (*b.std_errors)[i]));
  }
}

TEST_F(ManifoldPermutationTest, PerturbedModelBitIdentical) {
  ms::PerturbationSpec spec;
  spec.kind = ms::PerturbationKind::kRegression;
  spec.delta = 5.0;
  auto g5 = ms::BuildPerturbed(X1, z, spec);
  auto a = ms::ManifoldPermutationShapley(X1, *z, *sampler, x, ms::RngStream(16), {500});
  auto b = ms::ManifoldPermutationShapley(g5, *z, *sampler, x, ms::RngStream(16), {500});
  EXPECT_EQ(a.phi, b.phi);
  EXPECT_EQ(a.value_empty, b.value_empty);
}

TEST_F(ManifoldPermutationTest, AgreesWithExactManifoldValue) {
  auto vf = std::make_shared<ms::ManifoldValue>(X1, z, sampler, 20000);
  auto exact = ms::ExactShapley(*vf, x, ms::RngStream(17));
  auto perm = ms::ManifoldPermutationShapley(X1, *z, *sampler, x, ms::RngStream(18), {2000});
  for (std::size_t i = 0; i < 2; ++i) {
    const double se = std::hypot((*perm.std_errors)[i], (*exact.std_errors)[i]);
    EXPECT_LE(std::abs(perm.phi[i] - exact.phi[i]), 3 * se) << "feature " << i;
  }
}

TEST_F(ManifoldPermutationTest, LiteralModeAgrees) {
  ms::ManifoldPermutationOptions lit;
  lit.literal = true;
  auto a = ms::ManifoldPermutationShapley(X1, *z, *sampler, x, ms::RngStream(19), {2000});
  auto b = ms::ManifoldPermutationShapley(X1, *z, *sampler, x, ms::RngStream(20), lit);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_LE(std::abs(a.phi[i] - b.phi[i]), 3 * std::hypot((*a.std_errors)[i], (*b.std_errors)[i]));
}

TEST_F(ManifoldPermutationTest, UnreachableCoalitionNamed) {
  ms::PredicateManifold band(2, [](std::span<const double> p) { return p[1] > 49; });
  ms::ManifoldPermutationOptions opt;
  opt.permutations = 5;
  opt.max_attempts = 1000;
  try {
    ms::ManifoldPermutationShapley(X1, band, *sampler, ms::Instance{0, 50}, ms::RngStream(21), opt);
    FAIL();
  } catch (const ms::AcceptanceFailure& e) {
    EXPECT_EQ(e.attempts(), 1000u);
    EXPECT_FALSE(e.coalition().empty());
  }
}
