#include <gtest/gtest.h>

#include "generators.hpp"
#include "mmdom/boxorder.hpp"
#include "mmdom/construct.hpp"

using namespace mmdom;

namespace {

FiniteMMSpace pair_space(long d) { return two_point_space(Scalar(d), Scalar(1, 2), Scalar(1, 2)); }

const std::vector<Scalar> kEps{Scalar(1, 2), Scalar(1, 4), Scalar(1, 8)};

}  // namespace

TEST(Scheme, OnePointLevels) {
  const auto s = build_scheme(one_point_space(), kEps, 3);
  for (std::size_t n = 1; n <= 3; ++n) EXPECT_EQ(s.level(n).blocks, std::vector<IndexSet>{{0}});
  EXPECT_TRUE(check_scheme(one_point_space(), s).empty());
}

TEST(Scheme, PairForcesSingletons) {
  const auto s = build_scheme(pair_space(1), kEps, 1);
  EXPECT_EQ(s.level(1).blocks, (std::vector<IndexSet>{{0}, {1}}));
}

TEST(Scheme, RandomSchemesPassChecks) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto y = generate_instance(4, Scalar(1), seed);
    const auto s = build_scheme(y, kEps, 3);
    EXPECT_TRUE(check_scheme(y, s).empty()) << seed;
    for (std::size_t n = 1; n <= 3; ++n) {
      for (const auto& b : s.level(n).blocks) {
        EXPECT_LT(diameter(y.metric, b), s.eps_at(n));
        EXPECT_TRUE(mass_of(y.mass, b).is_positive());
      }
      if (n > 1) {
        EXPECT_TRUE(is_nested(s.level(n - 1), s.level(n)));
      }
    }
  }
  EXPECT_THROW(build_scheme(pair_space(1), std::vector<Scalar>{Scalar(1, 4), Scalar(1, 2)}, 2), PreconditionError);
}

TEST(Product, SingleFactorSingletonsIsIsomorphic) {
  const auto y = generate_instance(3, Scalar(1), 21);
  const std::vector<Factor> f{{y, singleton_partition(all_points(y.size()))}};
  const auto p = product_dominator(f);
  EXPECT_EQ(p.space.size(), y.size());
  EXPECT_EQ(dominates(p.space, y).decision, Decision::holds);
  EXPECT_EQ(distortion(p.space.metric, y.metric, p.maps[0]), Scalar(0));
}

TEST(Product, SingleBlockGivesOnePoint) {
  const FiniteMMSpace y{FiniteMetricSpace({"a", "b", "c"}, std::vector<Scalar>{Scalar(0), Scalar(1), Scalar(1), Scalar(1),
                                                                               Scalar(0), Scalar(1), Scalar(1), Scalar(1),
                                                                               Scalar(0)}),
                        {Scalar(1, 4), Scalar(1, 4), Scalar(1, 2)}};
  const std::vector<Factor> f{{y, PartitionFamily{{{2}}}}};
  const auto p = product_dominator(f);
  ASSERT_EQ(p.space.size(), 1U);
  EXPECT_EQ(pushforward(p.maps[0], p.space.mass, y.size())[2], Scalar(1));
}

TEST(Product, TwoPairsGiveFourPoints) {
  const auto a = pair_space(1), b = pair_space(1);
  const std::vector<Factor> f{{a, singleton_partition({0, 1})}, {b, singleton_partition({0, 1})}};
  const auto p = product_dominator(f);
  ASSERT_EQ(p.space.size(), 4U);
  for (const auto& m : p.space.mass) EXPECT_EQ(m, Scalar(1, 4));
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_TRUE(is_lipschitz(p.space.metric, f[m].space.metric, p.maps[m]));
    EXPECT_EQ(pushforward(p.maps[m], p.space.mass, 2), f[m].space.mass);
  }
}

TEST(Product, RandomFamiliesDominate) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 60; ++t) {
    const auto in = gen::product_input(rng, 3, 3, Scalar(1, 2));
    EXPECT_TRUE(validate(in->product.space).empty());
    for (std::size_t m = 0; m < in->family.size(); ++m) {
      const auto& y = in->family[m];
      const auto& f = in->product.maps[m];
      EXPECT_TRUE(is_lipschitz(in->product.space.metric, y.metric, f));
      const auto push = pushforward(f, in->product.space.mass, y.size());
      const Scalar mu_u = mass_of(y.mass, in->blocks[m].union_set());
      for (const auto& blk : in->blocks[m].blocks) EXPECT_EQ(mass_of(push, blk), mass_of(y.mass, blk) / mu_u);
    }
  }
}

TEST(Transfer, IdentityTransfer) {
  const auto y = generate_instance(4, Scalar(1), 5);
  const auto a = refine_level(y, PartitionFamily{}, Scalar(1, 2));
  const auto t = neighborhood_transfer(y, a, Scalar(1, 2), y, identity_map(y.size()));
  EXPECT_EQ(t.blocks_z, a);
  for (std::size_t b = 0; b < a.size(); ++b)
    for (Index p : a.blocks[b]) EXPECT_EQ(t.phi(p), t.anchors_z[b]);
  for (const auto& r : t.mass_ratios) EXPECT_EQ(r, Scalar(1));
}

TEST(Transfer, SmallPerturbation) {
  const auto y = pair_space(1);
  const FiniteMMSpace z{two_point_space(Scalar(17, 16), Scalar(1, 2), Scalar(1, 2)).metric, y.mass};
  const Scalar eps(1, 2);
  EXPECT_NO_THROW(neighborhood_transfer(y, singleton_partition({0, 1}), eps, z, identity_map(2)));
}

TEST(Transfer, CollapsingToPointFails) {
  EXPECT_THROW(neighborhood_transfer(pair_space(1), singleton_partition({0, 1}), Scalar(1, 4), one_point_space(),
                                     constant_map(2, 0)),
               PreconditionError);
}

TEST(Refine, SameFamilyGivesBijection) {
  const auto y = pair_space(1);
  const std::vector<Factor> f{{y, singleton_partition({0, 1})}};
  const auto p = product_dominator(f);
  const std::vector<RefineMember> fam{{y, p.maps[0], singleton_partition({0, 1}), singleton_partition({0, 1})}};
  const Scalar eps_prime(1, 2);
  const auto r = refine(p.space, fam, Scalar(1, 2), eps_prime);
  EXPECT_EQ(r.space.size(), p.space.size());
  EXPECT_EQ(image(r.projection).size(), p.space.size());
  for (const auto& k : r.max_key_ratio) {
    EXPECT_GE(k, Scalar(1));
    EXPECT_LT(k, Scalar(1) + eps_prime);
  }
  EXPECT_TRUE(r.projection_check.ok);
}

TEST(Refine, RandomInputsSatisfyConclusions) {
  std::mt19937_64 rng(47);
  for (int t = 0; t < 60; ++t) {
    auto in = gen::refine_input(rng);
    const auto r = refine(in.base->product.space, in.members, in.eps, in.eps_prime);
    EXPECT_TRUE(validate(r.space).empty());
    EXPECT_EQ(r.box_bound, Scalar(9) * in.eps);
    EXPECT_TRUE(verify_mm_iso(r.space, in.base->product.space, r.projection, Scalar(3) * in.eps).ok);
    for (std::size_t m = 0; m < in.members.size(); ++m) {
      EXPECT_TRUE(is_lipschitz(r.space.metric, in.members[m].space.metric, r.maps[m], Scalar(1), Scalar(3) * in.eps));
      EXPECT_LT(r.max_key_ratio[m], Scalar(1) + in.eps_prime);
    }
  }
}

TEST(Refine, EscapeHypothesisReported) {
  const FiniteMMSpace y{FiniteMetricSpace({"a", "b", "c"}, std::vector<Scalar>{Scalar(0), Scalar(1), Scalar(1), Scalar(1),
                                                                               Scalar(0), Scalar(1), Scalar(1), Scalar(1),
                                                                               Scalar(0)}),
                        {Scalar(1, 3), Scalar(1, 3), Scalar(1, 3)}};
  const auto coarse = singleton_partition({0, 1, 2});
  const std::vector<Factor> f{{y, coarse}};
  const auto p = product_dominator(f);
  const std::vector<RefineMember> fam{{y, p.maps[0], coarse, singleton_partition({0})}};
  try {
    refine(p.space, fam, Scalar(1, 2), Scalar(1, 4));
    FAIL() << "expected a hypothesis error";
  } catch (const HypothesisError& e) {
    EXPECT_EQ(e.hypothesis(), 4);
  }
}

TEST(Pad, ExactPushforwardIdentity) {
  const auto y = generate_instance(3, Scalar(1), 14);
  const auto blocks = refine_level(y, PartitionFamily{}, Scalar(1, 2));
  const std::vector<PadMember> fam{{y, identity_map(y.size()), blocks}};
  const Scalar eps(1, 2);
  const auto p = pad_extend(y, fam, eps, Scalar(0));
  for (std::size_t b = 0; b < blocks.size(); ++b) EXPECT_EQ(p.anchor_masses[0][b], mass_of(y.mass, blocks.blocks[b]));
  const auto push = pushforward(p.maps[0], p.space.mass, y.size());
  for (const auto& blk : blocks.blocks) EXPECT_EQ(mass_of(push, blk), mass_of(y.mass, blk));
  EXPECT_TRUE(verify_mm_iso(y, p.space, p.inclusion, eps).ok);
}

TEST(Pad, OnePointMember) {
  const auto x = one_point_space();
  const std::vector<PadMember> fam{{x, identity_map(1), singleton_partition({0})}};
  const auto p = pad_extend(x, fam, Scalar(1, 2), Scalar(0));
  EXPECT_EQ(p.space.size(), 1U);
  EXPECT_EQ(p.maps[0].assignment, std::vector<Index>{0});
}

TEST(Pad, RandomInputsSatisfyConclusions) {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 80; ++t) {
    auto in = gen::pad_input(rng);
    const auto p = pad_extend(*in.x, in.members, in.eps, in.eps_prime);
    EXPECT_TRUE(validate(p.space).empty());
    EXPECT_TRUE(verify_mm_iso(*in.x, p.space, p.inclusion, in.eps).ok);
    EXPECT_EQ(p.box_bound, Scalar(3) * in.eps);
    for (std::size_t m = 0; m < in.members.size(); ++m) {
      const auto& y = in.members[m].space;
      EXPECT_TRUE(is_lipschitz(p.space.metric, y.metric, p.maps[m], Scalar(1), in.eps_prime));
      const auto push = pushforward(p.maps[m], p.space.mass, y.size());
      for (const auto& blk : in.members[m].blocks.blocks) EXPECT_EQ(mass_of(push, blk), mass_of(y.mass, blk));
    }
  }
}

TEST(EpsDominator, OnePointFamily) {
  const std::vector<FiniteMMSpace> fam{one_point_space()};
  const auto d = eps_dominator(fam, Scalar(1, 4));
  EXPECT_EQ(d.space.size(), 1U);
  EXPECT_TRUE(d.members[0].verified);
}

TEST(EpsDominator, TwoPairs) {
  const std::vector<FiniteMMSpace> fam{pair_space(1), pair_space(2)};
  const Scalar eps(1, 4);
  const auto d = eps_dominator(fam, eps);
  EXPECT_EQ(d.space.size(), 4U);
  for (std::size_t m = 0; m < fam.size(); ++m) {
    EXPECT_TRUE(d.members[m].verified);
    EXPECT_EQ(d.members[m].certificate.eps, Scalar(5) * eps);
    EXPECT_TRUE(verify_domination(d.space, fam[m], d.members[m].certificate));
  }
}

TEST(EpsDominator, TransferredMember) {
  const auto y = pair_space(1);
  const FiniteMMSpace z{two_point_space(Scalar(33, 32), Scalar(1, 2), Scalar(1, 2)).metric, y.mass};
  const std::vector<FiniteMMSpace> fam{y, z};
  const auto d = eps_dominator(fam, Scalar(1, 4), RepresentativeMode::transfer);
  EXPECT_EQ(d.representatives, std::vector<std::size_t>{0});
  EXPECT_EQ(d.members[1].representative, 0U);
  for (std::size_t m = 0; m < fam.size(); ++m) EXPECT_TRUE(verify_domination(d.space, fam[m], d.members[m].certificate));
}

TEST(Sequence, OnePointFamily) {
  const std::vector<FiniteMMSpace> fam{one_point_space()};
  const auto tr = dominator_sequence(fam, kEps, 3);
  EXPECT_TRUE(tr.verified());
  for (const auto& s : tr.stages) EXPECT_EQ(s.space.size(), 1U);
  for (const auto& st : tr.steps) EXPECT_EQ(st.projection.eps, Scalar(0));
}

TEST(Sequence, PairThreeStages) {
  const std::vector<FiniteMMSpace> fam{pair_space(1)};
  const auto tr = dominator_sequence(fam, kEps, 3);
  ASSERT_FALSE(tr.truncated);
  EXPECT_TRUE(tr.verified());
  ASSERT_EQ(tr.stages.size(), 3U);
  ASSERT_EQ(tr.steps.size(), 2U);
  for (const auto& st : tr.steps) {
    const Scalar& e = tr.eps[st.from - 1];
    EXPECT_EQ(st.total_bound, Scalar(48) * e);
    EXPECT_LE(st.projection.eps, Scalar(9) * e);
    EXPECT_LE(st.inclusion.eps, Scalar(7) * e);
  }
  for (const auto& s : tr.stages)
    for (const auto& c : s.members) EXPECT_TRUE(verify_domination(s.space, fam[c.member], c.domination));
}

TEST(Sequence, TwoMembersBothModes) {
  const std::vector<FiniteMMSpace> fam{pair_space(1), generate_instance(3, Scalar(1), 4)};
  for (auto mode : {RepresentativeMode::direct, RepresentativeMode::transfer}) {
    SequenceOptions opts;
    opts.mode = mode;
    const auto tr = dominator_sequence(fam, kEps, 2, opts);
    ASSERT_FALSE(tr.truncated) << tr.truncation_reason;
    EXPECT_TRUE(tr.verified());
    EXPECT_EQ(tr.steps.size(), 1U);
  }
}

TEST(Covering, IdentityWitness) {
  const auto x = generate_instance(4, Scalar(1), 12);
  const Scalar eps(1, 2);
  const auto k = PartitionFamily{member_profile(x, eps).blocks};
  const std::vector<CoveringWitness> w{{x, identity_map(x.size())}};
  const auto r = derive_covering(x, k, w, eps);
  ASSERT_EQ(r.size(), 1U);
  EXPECT_TRUE(r[0].ok());
  for (std::size_t b = 0; b < k.size(); ++b) EXPECT_EQ(r[0].sets[b], open_ball_enlargement(x.metric, k.blocks[b], eps));
}

TEST(Covering, FromDominator) {
  const std::vector<FiniteMMSpace> fam{pair_space(1), generate_instance(3, Scalar(1), 9)};
  const auto d = eps_dominator(fam, Scalar(1, 8));
  const auto c = derive_covering_from(d, fam);
  for (const auto& m : c.members) EXPECT_TRUE(m.ok());
}

TEST(Covering, BrokenWitnessRejected) {
  const auto x = pair_space(1), y = one_point_space();
  const std::vector<CoveringWitness> w{{y, MapWitness{{0, 1}, std::nullopt}}};
  EXPECT_THROW(derive_covering(x, singleton_partition({0, 1}), w, Scalar(1, 2)), PreconditionError);
}

TEST(Profile, OnePointFamily) {
  const std::vector<FiniteMMSpace> fam{one_point_space()};
  for (const auto& e : {Scalar(1, 8), Scalar(1, 2)}) EXPECT_EQ(precompact_profile(fam, e).count_bound, 1U);
}

TEST(Profile, SampledFamily) {
  std::vector<FiniteMMSpace> fam;
  for (std::uint64_t s = 0; s < 20; ++s) fam.push_back(generate_instance(4, Scalar(2), s));
  for (const auto& e : {Scalar(1, 4), Scalar(1, 2), Scalar(1)}) {
    const auto p = precompact_profile(fam, e);
    EXPECT_LE(p.count_bound, 4U);
    for (std::size_t m = 0; m < fam.size(); ++m) {
      const auto& mp = p.members[m];
      EXPECT_LE(mp.max_block_diameter, e);
      EXPECT_GE(mp.covered_mass, Scalar(1) - e);
      EXPECT_LE(mp.blocks.size(), p.count_bound);
      EXPECT_LE(mp.union_diameter, p.diameter_bound);
    }
  }
  const auto whole = precompact_profile(fam, Scalar(2));
  for (const auto& mp : whole.members) EXPECT_EQ(mp.blocks.size(), 1U);
}
