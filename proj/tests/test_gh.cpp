#include <gtest/gtest.h>

#include "generators.hpp"
#include "mmdom/gh.hpp"

using namespace mmdom;

namespace {

FiniteMetricSpace pair_metric(long d) { return two_point_space(Scalar(d), Scalar(1, 2), Scalar(1, 2)).metric; }

FiniteMetricSpace sample(std::uint64_t seed, std::size_t n, const Scalar& diam) {
  std::mt19937_64 rng(seed);
  return oracle::random_metric(rng, n, diam);
}

// Least max(distortion, covering radius) over every map X -> Y.
Scalar brute_min_isometry(const FiniteMetricSpace& x, const FiniteMetricSpace& y) {
  std::optional<Scalar> best;
  std::vector<Index> f(x.size(), 0);
  do {
    const MapWitness w{f, std::nullopt};
    const Scalar e = max(distortion(x, y, w), covering_radius(y, image(w)));
    if (!best || e < *best) best = e;
  } while (oracle::next_assignment(f, y.size()));
  return *best;
}

bool brute_gh_eps(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const Scalar& eps) {
  std::vector<Index> f(x.size(), 0);
  do {
    const MapWitness w{f, std::nullopt};
    if (additive_defect(x, y, w) <= eps && covering_radius(y, image(w)) <= eps) return true;
  } while (oracle::next_assignment(f, y.size()));
  return false;
}

}  // namespace

TEST(Isometry, Examples) {
  const auto x = sample(1, 4, Scalar(1));
  EXPECT_EQ(verify_eps_isometry(x, x, identity_map(x.size()), Scalar(0)).eps, Scalar(0));
  const auto c = verify_eps_isometry(one_point_metric(), pair_metric(1), constant_map(1, 0), Scalar(1));
  EXPECT_EQ(c.distortion, Scalar(0));
  EXPECT_EQ(c.covering, Scalar(1));
  EXPECT_EQ(min_eps_isometry(one_point_metric(), pair_metric(1)).eps, Scalar(1));
  const auto b = verify_eps_isometry(pair_metric(1), pair_metric(2), identity_map(2), Scalar(1));
  EXPECT_EQ(b.distortion, Scalar(1));
  EXPECT_EQ(b.covering, Scalar(0));
  EXPECT_EQ(min_eps_isometry(pair_metric(1), pair_metric(2)).eps, Scalar(1));
}

TEST(Isometry, MinimumMatchesBruteForce) {
  std::mt19937_64 rng(71);
  for (int t = 0; t < 100; ++t) {
    const auto x = oracle::random_metric(rng, 4, Scalar(2)), y = oracle::random_metric(rng, 4, Scalar(1));
    const auto r = min_eps_isometry(x, y);
    ASSERT_TRUE(r.optimal);
    EXPECT_EQ(r.eps, brute_min_isometry(x, y));
    EXPECT_TRUE(verify_eps_isometry(x, y, r.witness, r.eps).ok);
  }
}

TEST(GhDistance, Examples) {
  const auto x = sample(2, 4, Scalar(1));
  EXPECT_EQ(gh_distance(x, x).upper, Scalar(0));
  const auto d = gh_distance(pair_metric(1), pair_metric(2));
  EXPECT_TRUE(d.exact);
  EXPECT_EQ(d.upper, Scalar(1, 2));
  EXPECT_EQ(gh_distance(one_point_metric(), pair_metric(1)).upper, Scalar(1, 2));
}

TEST(GhDistance, MatchesCorrespondenceEnumeration) {
  std::mt19937_64 rng(88);
  for (int t = 0; t < 150; ++t) {
    const auto x = oracle::random_metric(rng, 4, Scalar(2)), y = oracle::random_metric(rng, 3, Scalar(1));
    const auto d = gh_distance(x, y);
    ASSERT_TRUE(d.exact);
    EXPECT_EQ(d.lower, d.upper);
    EXPECT_EQ(d.upper, oracle::gh(x, y));
    EXPECT_EQ(d.upper, gh_distance(y, x).upper);
    if (d.certificate.kind == GhCertificateKind::correspondence) {
      EXPECT_TRUE(is_correspondence(d.certificate.correspondence, x.size(), y.size()));
      EXPECT_EQ(correspondence_distortion(x, y, d.certificate.correspondence) / Scalar(2), d.upper);
    }
  }
}

TEST(GhOrder, Examples) {
  const auto x = sample(3, 4, Scalar(1));
  EXPECT_EQ(gh_dominates(x, x).decision, Decision::holds);
  const auto r = gh_dominates(pair_metric(2), pair_metric(1));
  EXPECT_EQ(r.decision, Decision::holds);
  EXPECT_TRUE(verify_gh_domination(pair_metric(2), pair_metric(1), *r.witness));
  EXPECT_EQ(gh_dominates(one_point_metric(), pair_metric(1)).decision, Decision::refuted);
}

TEST(GhOrder, MatchesBruteForce) {
  std::mt19937_64 rng(92);
  for (int t = 0; t < 200; ++t) {
    const auto x = oracle::random_metric(rng, 4, Scalar(2)), y = oracle::random_metric(rng, 3, Scalar(1));
    const auto r = gh_dominates(x, y);
    EXPECT_EQ(r.decision == Decision::holds, oracle::gh_dominates(x, y).has_value());
    if (r.witness) {
      EXPECT_TRUE(verify_gh_domination(x, y, *r.witness));
    }
  }
}

TEST(GhEpsOrder, Examples) {
  for (const auto& e : {Scalar(1, 2), Scalar(99, 100), Scalar(1), Scalar(2)})
    EXPECT_EQ(gh_eps_dominates(one_point_metric(), pair_metric(1), e).decision == Decision::holds, e >= Scalar(1)) << e;
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto x = oracle::random_metric(rng, 3, Scalar(1)), y = oracle::random_metric(rng, 3, Scalar(2));
    EXPECT_EQ(gh_eps_dominates(x, y, diameter(y)).decision, Decision::holds);
    if (gh_dominates(x, y).decision == Decision::holds) {
      EXPECT_EQ(gh_eps_dominates(x, y, Scalar(1, 64)).decision, Decision::holds);
    }
  }
}

TEST(GhEpsOrder, MatchesBruteForce) {
  std::mt19937_64 rng(64);
  for (int t = 0; t < 150; ++t) {
    const auto x = oracle::random_metric(rng, 4, Scalar(1)), y = oracle::random_metric(rng, 3, Scalar(2));
    const Scalar e = oracle::pick(rng, {Scalar(1, 4), Scalar(1, 2), Scalar(1)});
    const auto r = gh_eps_dominates(x, y, e);
    EXPECT_EQ(r.decision == Decision::holds, brute_gh_eps(x, y, e));
    if (r.witness) {
      EXPECT_TRUE(verify_gh_eps_domination(x, y, *r.witness, e));
    }
  }
}

TEST(GhRefine, OnePointMember) {
  const auto x = pair_metric(1);
  const auto y = one_point_metric();
  const std::vector<GhRefineMember> fam{{y, constant_map(2, 0), {0}}};
  const auto r = gh_refine(x, fam, Scalar(1, 2), Scalar(1, 4));
  EXPECT_EQ(r.space.size(), x.size());
  EXPECT_EQ(distortion(r.space, x, r.projection), Scalar(0));
}

TEST(GhRefine, IdentityWithFullNet) {
  const auto x = sample(6, 3, Scalar(1));
  const std::vector<GhRefineMember> fam{{x, identity_map(x.size()), all_points(x.size())}};
  const Scalar eps(1, 2), eps_prime(1, 4);
  const auto r = gh_refine(x, fam, eps, eps_prime);
  EXPECT_LE(distortion(r.space, x, r.projection), Scalar(3) * eps);
  EXPECT_TRUE(verify_gh_eps_domination(r.space, x, r.maps[0], eps_prime));
}

TEST(GhRefine, RandomProductsSatisfyConclusions) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 50; ++t) {
    auto in = gen::gh_refine_input(rng);
    const auto& x = in->product.space;
    const auto r = gh_refine(x, in->members, in->eps, in->eps_prime);
    EXPECT_TRUE(r.projection_check.ok);
    EXPECT_EQ(r.gh_bound, Scalar(6) * in->eps);
    EXPECT_LE(r.projection_check.eps, Scalar(3) * in->eps);
    for (std::size_t m = 0; m < in->members.size(); ++m) {
      EXPECT_TRUE(is_lipschitz(r.space, in->family[m], r.maps[m]));
      EXPECT_LT(r.coverings[m], in->eps_prime);
    }
  }
}

TEST(GhSequence, OnePointFamily) {
  const std::vector<FiniteMetricSpace> fam{one_point_metric()};
  const auto tr = gh_dominator_sequence(fam, std::vector<Scalar>{Scalar(1, 2), Scalar(1, 4)}, 2);
  EXPECT_TRUE(tr.verified());
  for (const auto& s : tr.stages) EXPECT_EQ(s.space.size(), 1U);
}

TEST(GhSequence, PairAndTwoMembers) {
  const std::vector<Scalar> eps{Scalar(1, 2), Scalar(1, 4)};
  const std::vector<std::vector<FiniteMetricSpace>> families{
      {pair_metric(1)}, {pair_metric(1), pair_metric(2)},
      {sample(4, 3, Scalar(1)), pair_metric(1)}};
  for (const auto& fam : families) {
    const auto tr = gh_dominator_sequence(fam, eps, 2);
    ASSERT_FALSE(tr.truncated) << tr.truncation_reason;
    EXPECT_TRUE(tr.verified());
    EXPECT_EQ(tr.stages.size(), 3U);
    for (const auto& st : tr.steps) {
      EXPECT_LE(st.projection.eps, Scalar(3) * st.eps);
      EXPECT_EQ(st.gh_bound, Scalar(6) * st.eps);
      for (const auto& s : tr.stages)
        for (std::size_t m = 0; m < fam.size(); ++m) EXPECT_TRUE(s.checks[m].ok);
    }
  }
}

TEST(Nets, Examples) {
  const std::vector<FiniteMetricSpace> one{one_point_metric()};
  EXPECT_EQ(gh_net_profile(one, Scalar(1, 2)).size_bound, 1U);
  const std::vector<FiniteMetricSpace> pair{pair_metric(1)};
  EXPECT_EQ(gh_net_profile(pair, Scalar(1, 2)).members[0].net, IndexSet({0, 1}));
}

TEST(Nets, SampledFamily) {
  std::mt19937_64 rng(29);
  std::vector<FiniteMetricSpace> fam;
  for (int i = 0; i < 20; ++i) fam.push_back(oracle::random_metric(rng, 5, Scalar(2)));
  for (const auto& e : {Scalar(1, 4), Scalar(1, 2), Scalar(1)}) {
    const auto p = gh_net_profile(fam, e);
    for (std::size_t i = 0; i < fam.size(); ++i) {
      EXPECT_TRUE(p.members[i].ok);
      EXPECT_LE(p.members[i].covering, e);
      EXPECT_LE(p.members[i].net.size(), p.size_bound);
      EXPECT_LE(diameter(fam[i]), p.diameter_bound);
    }
  }
}

TEST(Nets, PushedThroughWitnesses) {
  const auto x = pair_metric(2);
  const auto y = pair_metric(1);
  const std::vector<GhWitness> w{{y, identity_map(2)}};
  const auto p = gh_net_via_witnesses(x, w, Scalar(1, 2));
  EXPECT_TRUE(p.members[0].ok());
}
