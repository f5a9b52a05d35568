#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mlate/errors.hpp"
#include "mlate/forward_model.hpp"

using namespace mlate;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no exception";
  return ErrorKind::InvalidArgument;
}

// E(T* | T = 1) - E(T* | T = 0) by Bayes' rule, without the closed form.
double brute_force_m(double m0, double m1, double p_star) {
  const double p11 = p_star * (1.0 - m1);  // T* = 1, T = 1
  const double p01 = (1.0 - p_star) * m0;  // T* = 0, T = 1
  const double p10 = p_star * m1;
  const double p00 = (1.0 - p_star) * (1.0 - m0);
  return p11 / (p11 + p01) - p10 / (p10 + p00);
}

// Cell (tau, p) for one support point under misclassification (m0, m1).
struct Obs {
  double tau;
  double p;
};
Obs forward(double m0, double m1, double p_star, double tau_star) {
  const double p = implied_p(m0, m1, p_star);
  return {implied_tau(m0, m1, p, tau_star), p};
}

WTriple triple(const Obs& a, const Obs& b) { return w_triple(a.tau, b.tau, a.p, b.p); }

}  // namespace

TEST(ImpliedP, Examples) {
  EXPECT_DOUBLE_EQ(implied_p(0, 0, 0.3), 0.3);
  EXPECT_NEAR(implied_p(0.25, 0.25, 0.6707), 0.58535, 1e-12);
  EXPECT_DOUBLE_EQ(implied_p(0.25, 0.25, 0.0), 0.25);
  EXPECT_EQ(kind_of([] { implied_p(0.5, 0.5, 0.3); }), ErrorKind::MonotonicityViolated);
}

TEST(MFactor, Examples) {
  EXPECT_DOUBLE_EQ(m_factor(0, 0, 0.5), 1.0);
  // (1/0.5) * (1 - 0.1875/0.58535 - 0.1875/0.41465) by hand.
  EXPECT_NEAR(m_factor(0.25, 0.25, 0.58535), 0.4549805, 5e-7);
  EXPECT_NEAR(m_factor(0.25, 0.25, 0.58535), brute_force_m(0.25, 0.25, 0.6707), 1e-12);
  EXPECT_NEAR(m_factor(0.25, 0.25, 0.5), 0.5, 1e-15);
  EXPECT_EQ(kind_of([] { m_factor(0.1, 0.1, 1.0); }), ErrorKind::DegenerateCell);
  EXPECT_EQ(kind_of([] { m_factor(0.1, 0.1, 0.0); }), ErrorKind::DegenerateCell);
}

TEST(MFactor, MatchesBayesOverGrid) {
  for (double m0 : {0.0, 0.05, 0.2, 0.4})
    for (double m1 : {0.0, 0.1, 0.3})
      for (double ps : {0.1, 0.33, 0.5, 0.9}) {
        const double p = implied_p(m0, m1, ps);
        EXPECT_NEAR(m_factor(m0, m1, p), brute_force_m(m0, m1, ps), 1e-12);
      }
}

TEST(ImpliedTau, Examples) {
  EXPECT_DOUBLE_EQ(implied_tau(0, 0, 0.4, 2.0), 2.0);
  EXPECT_NEAR(implied_tau(0.25, 0.25, 0.58535, 1.0), 0.4549805, 5e-7);
  EXPECT_DOUBLE_EQ(implied_tau(0.25, 0.25, 0.58535, -2.0), -2.0 * m_factor(0.25, 0.25, 0.58535));
  EXPECT_EQ(implied_tau(0.1, 0.2, 0.4, 0.0), 0.0);
}

TEST(WTriple, Examples) {
  const WTriple same = w_triple(0.7, 0.7, 0.4, 0.4);
  EXPECT_EQ(same.w0, 0.0);
  EXPECT_EQ(same.w1, 0.0);
  EXPECT_EQ(same.w2, 0.0);
  const WTriple w = w_triple(0.45494, 0.56, 0.58535, 0.46);
  EXPECT_NEAR(w.w2, 0.10506, 1e-14);
  EXPECT_NEAR(w.w0, 0.45494 / 0.46 - 0.56 / 0.58535, 1e-14);
  EXPECT_NEAR(w.w1, 0.45494 / 0.54 - 0.56 / 0.41465, 1e-14);
  EXPECT_EQ(kind_of([] { w_triple(1, 1, 0.0, 0.5); }), ErrorKind::DegenerateCell);
}

TEST(WTriple, Antisymmetric) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.05, 0.95), t(-2, 2);
  for (int i = 0; i < 200; ++i) {
    const double a = t(rng), b = t(rng), p = u(rng), q = u(rng);
    const WTriple x = w_triple(a, b, p, q), y = w_triple(b, a, q, p);
    EXPECT_EQ(x.w0, -y.w0);
    EXPECT_EQ(x.w1, -y.w1);
    EXPECT_EQ(x.w2, -y.w2);
  }
}

TEST(SolveB, CaseIRoundTrip) {
  const Obs a = forward(0.2, 0.3, 0.2, 1.0), b = forward(0.2, 0.3, 0.5, 1.0), c = forward(0.2, 0.3, 0.8, 1.0);
  const BPair bp = solve_b_case_i(triple(a, b), triple(a, c));
  EXPECT_NEAR(bp.b0, 0.14, 1e-12);
  EXPECT_NEAR(bp.b1, 0.24, 1e-12);
  const BPair bp2 = solve_b_case_i(triple(forward(0, 0, 0.2, 1), forward(0, 0, 0.5, 1)),
                                   triple(forward(0, 0, 0.2, 1), forward(0, 0, 0.8, 1)));
  EXPECT_NEAR(bp2.b0, 0.0, 1e-12);
  EXPECT_NEAR(bp2.b1, 0.0, 1e-12);
  EXPECT_EQ(kind_of([&] {
              solve_b_case_i(triple(forward(0.2, 0.3, 0.2, 0), forward(0.2, 0.3, 0.5, 0)),
                             triple(forward(0.2, 0.3, 0.2, 0), forward(0.2, 0.3, 0.8, 0)));
            }),
            ErrorKind::SingularSystem);
}

TEST(SolveB, CaseIIRoundTrip) {
  const WTriple w0 = triple(forward(0.25, 0.25, 0.1, 1.0), forward(0.25, 0.25, 0.35, 1.0));
  const WTriple w1 = triple(forward(0.25, 0.25, 0.5, 1.5), forward(0.25, 0.25, 0.75, 1.5));
  const BPair bp = solve_b_case_ii(w0, w1);
  EXPECT_NEAR(bp.b0, 0.1875, 1e-12);
  EXPECT_NEAR(bp.b1, 0.1875, 1e-12);
  const BPair none = solve_b_case_ii(triple(forward(0, 0, 0.1, 1), forward(0, 0, 0.35, 1)),
                                     triple(forward(0, 0, 0.5, 2), forward(0, 0, 0.75, 2)));
  EXPECT_NEAR(none.b0, 0.0, 1e-12);
  EXPECT_NEAR(none.b1, 0.0, 1e-12);
  const WTriple flat = triple(forward(0.25, 0.25, 0.1, 0.0), forward(0.25, 0.25, 0.35, 0.0));
  EXPECT_EQ(kind_of([&] { solve_b_case_ii(flat, w1); }), ErrorKind::SingularSystem);
}

TEST(BToM, Examples) {
  MisclassRates r = b_to_m({0.1875, 0.1875});
  EXPECT_NEAR(r.m0, 0.25, 1e-12);
  EXPECT_NEAR(r.m1, 0.25, 1e-12);
  EXPECT_NEAR(r.s, 0.5, 1e-12);
  r = b_to_m({0.0, 0.0});
  EXPECT_EQ(r.m0, 0.0);
  EXPECT_EQ(r.m1, 0.0);
  EXPECT_EQ(r.s, 1.0);
  r = b_to_m({0.14, 0.24});
  EXPECT_NEAR(r.m0, 0.2, 1e-12);
  EXPECT_NEAR(r.m1, 0.3, 1e-12);
  EXPECT_NEAR(r.s, 0.5, 1e-12);
  // (0.3 - 0.3 + 1)^2 - 4 * 0.3 < 0
  EXPECT_EQ(kind_of([] { b_to_m({0.3, 0.3}); }), ErrorKind::NegativeDiscriminant);
}

TEST(BToM, InvertsMToBOnMonotoneBranch) {
  for (double m0 = 0.0; m0 < 0.999; m0 += 0.037)
    for (double m1 = 0.0; m0 + m1 < 0.999; m1 += 0.041) {
      const BPair b = m_to_b(m0, m1);
      EXPECT_NEAR(b.b0, m0 * (1 - m1), 1e-15);
      EXPECT_NEAR(b.b1, (1 - m0) * m1, 1e-15);
      const MisclassRates r = b_to_m(b);
      EXPECT_NEAR(r.m0, m0, 1e-12);
      EXPECT_NEAR(r.m1, m1, 1e-12);
      EXPECT_GT(r.s, 0.0);
      EXPECT_LT(r.m0 + r.m1, 1.0);
    }
}

namespace {

// Smaller root b0 of (b0 - b1 + 1)^2 - 4 b0 = target.
double b0_for_discriminant(double b1, double target) {
  const double c = 1.0 - b1;
  return (4.0 - 2.0 * c - std::sqrt((2.0 * c - 4.0) * (2.0 * c - 4.0) - 4.0 * (c * c - target))) / 2.0;
}

}  // namespace

TEST(BToM, DiscriminantTolerance) {
  // Inside the tolerance the root is taken as zero, which leaves s = 0.
  EXPECT_EQ(kind_of([] { b_to_m({b0_for_discriminant(0.3, -5e-9), 0.3}); }), ErrorKind::MonotonicityViolated);
  EXPECT_EQ(kind_of([] { b_to_m({b0_for_discriminant(0.3, -5e-8), 0.3}); }), ErrorKind::NegativeDiscriminant);
}

TEST(PStarFromP, Examples) {
  EXPECT_NEAR(p_star_from_p(0.58535, 0.25, 0.25), 0.6707, 1e-12);
  EXPECT_DOUBLE_EQ(p_star_from_p(0.42, 0, 0), 0.42);
  EXPECT_EQ(kind_of([] { p_star_from_p(0.2, 0.25, 0.25); }), ErrorKind::InvalidProbability);
  EXPECT_EQ(p_star_from_p(0.25 - 1e-7, 0.25, 0.25), 0.0);
}

TEST(LateFromReduced, Examples) {
  EXPECT_NEAR(late_from_reduced(1.3413, 1.0, 0.3413), 1.0, 1e-12);
  EXPECT_EQ(late_from_reduced(0.7, 0.7, 0.2), 0.0);
  EXPECT_EQ(kind_of([] { late_from_reduced(1, 0, 0); }), ErrorKind::WeakFirstStage);
}

TEST(Nonsingularity, ForwardStatsHaveNonzeroDeterminants) {
  std::mt19937_64 rng(5);
  for (Mode mode : {Mode::CaseI, Mode::CaseII}) {
    const auto d = mlate::testing::random_draw(mode, 4, rng);
    const CellStats st = population_cell_stats(d.theta, d.v_probs);
    const auto cands = nonsingularity_diag(st, mode);
    EXPECT_EQ(cands.size(), mode == Mode::CaseI ? 2u * 4u * 3u : 6u);
    for (const auto& c : cands) {
      EXPECT_GT(std::abs(c.determinant), 1e-8);
      EXPECT_TRUE(c.error.empty()) << c.error;
    }
  }
}

TEST(Nonsingularity, ZeroContrastsGiveZeroDeterminants) {
  auto d = mlate::testing::reference_draw();
  d.theta.tau_star = {0.0, 0.0};
  for (const auto& c : nonsingularity_diag(population_cell_stats(d.theta, d.v_probs), Mode::CaseII)) {
    EXPECT_EQ(c.determinant, 0.0);
    EXPECT_FALSE(c.error.empty());
  }
}

TEST(Nonsingularity, DeterminantVanishesAsSGoesToZero) {
  // m0 + m1 -> 1 from below; the determinant shrinks in proportion to s.
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {0.5, 1e-2, 1e-4, 1e-6}) {
    auto d = mlate::testing::reference_draw();
    d.theta.m0 = {0.5 - s / 2, 0.5 - s / 2};
    d.theta.m1 = {0.5 - s / 2, 0.5 - s / 2};
    const double det = std::abs(nonsingularity_diag(population_cell_stats(d.theta, d.v_probs), Mode::CaseII)[0].determinant);
    EXPECT_LT(det, prev);
    prev = det;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(Nonsingularity, DeterminantComposesFromTriples) {
  std::mt19937_64 rng(6);
  const auto d = mlate::testing::random_draw(Mode::CaseI, 3, rng);
  const CellStats st = population_cell_stats(d.theta, d.v_probs);
  for (const auto& c : nonsingularity_diag(st, Mode::CaseI)) {
    const auto& a = st.cell(c.z, c.points[0]);
    const auto& b = st.cell(c.z, c.points[1]);
    const auto& e = st.cell(c.z, c.points[2]);
    const WTriple w12 = w_triple(a.tau, b.tau, a.p, b.p), w13 = w_triple(a.tau, e.tau, a.p, e.p);
    EXPECT_EQ(c.determinant, w12.w0 * w13.w1 - w13.w0 * w12.w1);
  }
}

TEST(Identify, ReferenceRoundTrip) {
  const auto d = mlate::testing::reference_draw();
  const IdentifyResult id = identify(population_cell_stats(d.theta, d.v_probs, 0.7), Mode::CaseII);
  const Eigen::VectorXd err = id.theta.to_vector() - d.theta.to_vector();
  EXPECT_LE(err.lpNorm<Eigen::Infinity>(), 1e-10);
  EXPECT_NEAR(id.s[0], 0.5, 1e-12);
  EXPECT_NEAR(id.s[0], 1.0 - id.theta.m0[0] - id.theta.m1[0], 0.0);
}

TEST(Identify, NoMisclassificationGivesPlugIn) {
  auto d = mlate::testing::reference_draw();
  d.theta.m0 = {0, 0};
  d.theta.m1 = {0, 0};
  const CellStats st = population_cell_stats(d.theta, d.v_probs);
  const IdentifyResult id = identify(st, Mode::CaseII);
  for (int z = 0; z < 2; ++z) {
    EXPECT_NEAR(id.theta.m0[z], 0.0, 1e-12);
    EXPECT_NEAR(id.theta.m1[z], 0.0, 1e-12);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(id.theta.p_star[z][k], st.cell(z, k).p, 1e-12);
  }
}

TEST(Identify, CaseIDistinctRatesPerArm) {
  std::mt19937_64 rng(8);
  auto d = mlate::testing::random_draw(Mode::CaseI, 3, rng);
  d.theta.m0 = {0.05, 0.3};
  d.theta.m1 = {0.2, 0.1};
  d.theta.delta_p_star = implied_delta_p_star(d.theta, d.v_probs);
  const IdentifyResult id = identify(population_cell_stats(d.theta, d.v_probs), Mode::CaseI);
  EXPECT_LE((id.theta.to_vector() - d.theta.to_vector()).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Identify, PinnedPoints) {
  std::mt19937_64 rng(10);
  const auto d = mlate::testing::random_draw(Mode::CaseII, 4, rng);
  IdentifyOptions opt;
  opt.points = std::array<std::size_t, 3>{3, 1, 1};
  const IdentifyResult id = identify(population_cell_stats(d.theta, d.v_probs), Mode::CaseII, opt);
  // The pair is unordered.
  EXPECT_EQ(std::min(id.points[0][0], id.points[0][1]), 1u);
  EXPECT_EQ(std::max(id.points[0][0], id.points[0][1]), 3u);
  EXPECT_LE((id.theta.to_vector() - d.theta.to_vector()).lpNorm<Eigen::Infinity>(), 1e-10);
  opt.points = std::array<std::size_t, 3>{0, 9, 0};
  EXPECT_THROW(identify(population_cell_stats(d.theta, d.v_probs), Mode::CaseII, opt), Error);
}

TEST(Identify, RandomRoundTrips) {
  std::mt19937_64 rng(12);
  for (Mode mode : {Mode::CaseI, Mode::CaseII}) {
    for (int i = 0; i < 100; ++i) {
      const std::size_t K = mode == Mode::CaseI ? 3 + i % 3 : 2 + i % 3;
      const auto d = mlate::testing::random_draw(mode, K, rng);
      const IdentifyResult id = identify(population_cell_stats(d.theta, d.v_probs, 0.3), mode);
      EXPECT_LE((id.theta.to_vector() - d.theta.to_vector()).lpNorm<Eigen::Infinity>(), 1e-10);
    }
  }
}

TEST(Identify, WaldIsLateOverS) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 50; ++i) {
    const auto d = mlate::testing::random_draw(Mode::CaseII, 2, rng);
    const CellStats st = population_cell_stats(d.theta, d.v_probs, -0.4);
    const double wald = late_from_reduced(st.mu_z[1], st.mu_z[0], st.p_z[1] - st.p_z[0]);
    EXPECT_NEAR(wald, d.theta.beta_star / d.theta.s(0), 1e-10 * std::max(1.0, std::abs(wald)));
  }
}
