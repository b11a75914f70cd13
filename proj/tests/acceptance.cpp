// Acceptance suite: one PASS/FAIL line per criterion; exits non-zero when
// any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "generators.hpp"
#include "mmdom/cli.hpp"
#include "oracles.hpp"

using namespace mmdom;

namespace {

// Pinned tolerances: exact arithmetic everywhere, so every tolerance is 0.
const Scalar kExact(0);
constexpr double kLimitProhorov = 30.0;
constexpr double kLimitRefine = 60.0;
constexpr double kLimitSequence = 120.0;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = true;
  std::string detail;
  std::size_t cases = 0;
  std::size_t failures = 0;

  void check(bool ok, const std::string& what) {
    ++cases;
    if (ok) return;
    ++failures;
    pass = false;
    if (detail.size() < 400) detail += (detail.empty() ? "" : "; ") + what;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

FiniteMMSpace two_point(const Scalar& d, const Scalar& a, const Scalar& b) { return two_point_space(d, a, b); }

FiniteMMSpace three_path() {
  return {FiniteMetricSpace({"a", "b", "c"}, std::vector<std::vector<Scalar>>{{0, 1, 2}, {1, 0, 1}, {2, 1, 0}}),
          {Scalar(1, 3), Scalar(1, 3), Scalar(1, 3)}};
}

// ---------------------------------------------------------------------------

Outcome prohorov_oracle() {
  Outcome o;
  std::mt19937_64 rng(kSeed + 1);
  for (int t = 0; t < 200; ++t) {
    const auto x = oracle::random_metric(rng, 6, oracle::pick(rng, {Scalar(1, 2), Scalar(1), Scalar(3, 2)}));
    const auto mu = oracle::random_mass(rng, x.size(), true);
    const auto nu = oracle::random_mass(rng, x.size(), true);
    const auto v = prohorov_distance(x, mu, nu);
    const Scalar want = oracle::prohorov(x, mu, nu);
    o.check(abs(v.value - want) <= kExact, "case " + std::to_string(t) + ": " + v.value.str() + " vs " + want.str());
  }
  return o;
}

Outcome lemma_p() {
  Outcome o;
  std::mt19937_64 rng(kSeed + 2);
  for (int t = 0; t < 200; ++t) {
    FiniteMMSpace x = generate_instance(6, oracle::pick(rng, {Scalar(1), Scalar(2)}), rng());
    const Scalar eps = oracle::pick(rng, {Scalar(1, 4), Scalar(1, 2), Scalar(1)});
    const Scalar eps_prime = oracle::pick(rng, {Scalar(1, 8), Scalar(1, 4), Scalar(1, 2)});
    auto blocks = greedy_clusters(x.metric, all_points(x.size()), eps);
    // Drop blocks while the uncovered mass stays <= eps.
    Scalar dropped;
    PartitionFamily kept;
    for (const auto& b : blocks.blocks) {
      const Scalar m = mass_of(x.mass, b);
      if (blocks.size() > 1 && rng() % 3 == 0 && dropped + m <= eps && kept.size() + 1 < blocks.size())
        dropped += m;
      else
        kept.blocks.push_back(b);
    }
    // nu: reshuffle inside blocks, then move at most eps'/2 between two points.
    std::vector<Scalar> nu = x.mass;
    for (const auto& b : kept.blocks) {
      if (b.size() < 2) continue;
      const Index from = b[rng() % b.size()], to = b[rng() % b.size()];
      const Scalar amt = nu[from] * Scalar(static_cast<long>(rng() % 3), 2);
      nu[from] -= amt;
      nu[to] += amt;
    }
    const Index from = rng() % x.size(), to = rng() % x.size();
    const Scalar amt = min(nu[from], eps_prime / Scalar(2));
    nu[from] -= amt;
    nu[to] += amt;
    const std::string tag = "case " + std::to_string(t);
    try {
      const auto r = partition_prohorov_bound(x, kept, nu, eps, eps_prime);
      o.check(prohorov_le(x.metric, x.mass, nu, r.bound).holds, tag + ": prohorov_le rejects " + r.bound.str());
      o.check(oracle::prohorov(x.metric, x.mass, nu) <= r.bound, tag + ": oracle exceeds bound");
    } catch (const std::exception& e) {
      o.check(false, tag + ": " + e.what());
    }
  }
  return o;
}

Outcome product_dominator_check() {
  Outcome o;
  std::mt19937_64 rng(kSeed + 3);
  for (int t = 0; t < 100; ++t) {
    const auto family = oracle::random_family(rng, 3, 4, oracle::pick(rng, {Scalar(1), Scalar(2)}));
    const std::string tag = "case " + std::to_string(t);
    try {
      // Greedy blocks: exact 1-Lipschitz and block pushforward.
      const Scalar eps = oracle::pick(rng, {Scalar(1, 2), Scalar(1)});
      std::vector<PartitionFamily> blocks;
      std::vector<Factor> factors;
      for (const auto& y : family) blocks.push_back(greedy_clusters(y.metric, support(y.mass), eps));
      for (std::size_t m = 0; m < family.size(); ++m) factors.push_back({family[m], blocks[m]});
      const auto p = product_dominator(factors);
      for (std::size_t m = 0; m < family.size(); ++m) {
        const auto& y = family[m];
        o.check(is_lipschitz(p.space.metric, y.metric, p.maps[m]), tag + ": map not 1-Lipschitz");
        const auto push = pushforward(p.maps[m], p.space.mass, y.size());
        for (const auto& b : blocks[m].blocks)
          o.check(mass_of(push, b) == mass_of(y.mass, b), tag + ": block pushforward differs");
      }
      // Singleton blocks: exact domination of every member.
      std::vector<PartitionFamily> singles;
      std::vector<Factor> sf;
      for (const auto& y : family) singles.push_back(singleton_partition(support(y.mass)));
      for (std::size_t m = 0; m < family.size(); ++m) sf.push_back({family[m], singles[m]});
      const auto q = product_dominator(sf);
      for (std::size_t m = 0; m < family.size(); ++m) {
        const DominationCertificate c{q.maps[m], DominationMode::exact, Scalar(0)};
        o.check(verify_domination(q.space, family[m], c), tag + ": product map is not a domination");
        o.check(dominates(q.space, family[m]).decision == Decision::holds, tag + ": dominates() is not true");
      }
    } catch (const std::exception& e) {
      o.check(false, tag + ": " + e.what());
    }
  }
  return o;
}

Outcome refine_check() {
  Outcome o;
  std::mt19937_64 rng(kSeed + 4);
  for (int t = 0; t < 50; ++t) {
    auto in = gen::refine_input(rng);
    const auto& x = in.base->product.space;
    const std::string tag = "case " + std::to_string(t);
    try {
      const auto r = refine(x, in.members, in.eps, in.eps_prime);
      // ineq;3ep on every pair, recomputed here.
      for (Index a = 0; a < r.space.size(); ++a)
        for (Index b = 0; b < r.space.size(); ++b)
          o.check(r.space.d(a, b) <= x.d(r.projection(a), r.projection(b)) + Scalar(3) * in.eps &&
                      x.d(r.projection(a), r.projection(b)) <= r.space.d(a, b),
                  tag + ": pair distance bound fails");
      // eq;key on every fine block inside U.
      for (std::size_t m = 0; m < in.members.size(); ++m) {
        const auto& y = in.members[m].space;
        const IndexSet u = in.members[m].coarse.union_set();
        const Scalar mu_u = mass_of(y.mass, u);
        const auto push = pushforward(r.maps[m], r.space.mass, y.size());
        for (const auto& b : in.members[m].fine.blocks) {
          if (!is_subset(b, u)) continue;
          const Scalar ratio = mu_u * mass_of(push, b) / mass_of(y.mass, b);
          o.check(Scalar(1) <= ratio && ratio < Scalar(1) + in.eps_prime, tag + ": key ratio " + ratio.str());
        }
        o.check(is_lipschitz(r.space.metric, y.metric, r.maps[m]), tag + ": g not 1-Lipschitz");
      }
      o.check(verify_mm_iso(r.space, x, r.projection, Scalar(3) * in.eps).ok, tag + ": projection fails at 3eps");
    } catch (const std::exception& e) {
      o.check(false, tag + ": " + e.what());
    }
  }
  return o;
}

Outcome pad_check() {
  Outcome o;
  std::mt19937_64 rng(kSeed + 5);
  for (int t = 0; t < 50; ++t) {
    auto in = gen::pad_input(rng);
    const auto& x = *in.x;
    const std::string tag = "case " + std::to_string(t);
    try {
      const auto r = pad_extend(x, in.members, in.eps, in.eps_prime);
      for (std::size_t m = 0; m < in.members.size(); ++m) {
        const auto& y = in.members[m].space;
        const auto& blocks = in.members[m].blocks;
        const IndexSet u = blocks.union_set();
        const Scalar mu_u = mass_of(y.mass, u);
        for (std::size_t a = 0; a < blocks.size(); ++a)
          o.check(r.anchor_masses[m][a] >= in.eps * mass_of(y.mass, blocks.blocks[a]),
                  tag + ": anchor mass below eps mu(A)");
        const auto push = pushforward(r.maps[m], r.space.mass, y.size());
        for (const auto& b : blocks.blocks)
          o.check(mass_of(push, b) == mass_of(y.mass, b) / mu_u, tag + ": pushforward identity fails");
        o.check(is_subset(image(r.maps[m]), u), tag + ": image leaves U");
        o.check(additive_defect(r.space.metric, y.metric, r.maps[m]) <= in.eps_prime, tag + ": defect exceeds eps'");
      }
      o.check(verify_mm_iso(x, r.space, r.inclusion, in.eps).ok, tag + ": inclusion fails at eps");
    } catch (const std::exception& e) {
      o.check(false, tag + ": " + e.what());
    }
  }
  return o;
}

Outcome sequence_check() {
  Outcome o;
  const std::vector<std::vector<FiniteMMSpace>> families{
      {two_point(1, Scalar(1, 2), Scalar(1, 2)), two_point(2, Scalar(1, 2), Scalar(1, 2))},
      {three_path(), two_point(1, Scalar(1, 4), Scalar(3, 4))}};
  const std::vector<Scalar> eps{pow2_neg(1), pow2_neg(2), pow2_neg(3)};
  for (std::size_t f = 0; f < families.size(); ++f) {
    const std::string tag = "family " + std::to_string(f);
    try {
      const auto t = dominator_sequence(families[f], eps, 3);
      o.check(!t.truncated, tag + ": truncated (" + t.truncation_reason + ")");
      o.check(t.stages.size() == 3 && t.steps.size() == 2, tag + ": wrong stage/step count");
      for (const auto& s : t.steps) {
        const Scalar ek = eps[s.from - 1];
        o.check(s.refine_bound == Scalar(27) * ek && s.pad_bound == Scalar(21) * ek && s.total_bound == Scalar(48) * ek,
                tag + ": step bound is not 27 + 21 = 48 eps_k");
        o.check(s.projection.eps <= Scalar(9) * ek && s.inclusion.eps <= Scalar(7) * ek, tag + ": step certificate too weak");
        o.check(s.verified, tag + ": step unverified");
      }
      for (const auto& st : t.stages) {
        for (const auto& c : st.members) {
          const DominationCertificate cert{c.map, DominationMode::eps_zero, Scalar(3) * st.eps};
          o.check(verify_domination(st.space, families[f][c.member], cert), tag + ": stage certificate fails");
        }
        o.check(st.verified, tag + ": stage unverified");
      }
    } catch (const std::exception& e) {
      o.check(false, tag + ": " + e.what());
    }
  }
  return o;
}

Outcome eps_dominator_check() {
  Outcome o;
  const Scalar eps(1, 4), five = Scalar(5) * eps;
  std::vector<std::vector<FiniteMMSpace>> families{
      {two_point(1, Scalar(1, 2), Scalar(1, 2)), two_point(2, Scalar(1, 2), Scalar(1, 2)), three_path()}};
  std::mt19937_64 rng(kSeed + 7);
  for (int t = 0; t < 10; ++t) {
    auto fam = oracle::random_family(rng, 1, 3, Scalar(1));
    while (fam.size() < 3) fam.push_back(generate_instance(3, Scalar(1), rng()));
    families.push_back(std::move(fam));
  }
  for (std::size_t f = 0; f < families.size(); ++f)
    for (auto mode : {RepresentativeMode::direct, RepresentativeMode::transfer}) {
      const std::string tag = "family " + std::to_string(f) + " " + to_string(mode);
      try {
        const auto d = eps_dominator(families[f], eps, mode);
        for (std::size_t m = 0; m < families[f].size(); ++m) {
          const auto& c = d.members[m].certificate;
          o.check(c.mode == DominationMode::eps_zero && c.eps == five, tag + ": certificate is not <_{5eps,0}");
          o.check(verify_domination(d.space, families[f][m], c), tag + ": certificate fails");
          o.check(eps_dominates(d.space, families[f][m], five, true).decision == Decision::holds,
                  tag + ": eps_dominates refutes");
        }
      } catch (const std::exception& e) {
        o.check(false, tag + ": " + e.what());
      }
    }
  return o;
}

Outcome covering_check() {
  Outcome o;
  std::vector<std::vector<FiniteMMSpace>> families{
      {two_point(1, Scalar(1, 2), Scalar(1, 2)), two_point(2, Scalar(1, 2), Scalar(1, 2)), three_path()}};
  std::mt19937_64 rng(kSeed + 8);
  for (int t = 0; t < 10; ++t) families.push_back(oracle::random_family(rng, 3, 3, Scalar(1)));
  for (std::size_t f = 0; f < families.size(); ++f)
    for (const Scalar& eps : {Scalar(1, 4), Scalar(1, 8), Scalar(1, 16)}) {
      const std::string tag = "family " + std::to_string(f) + " eps " + eps.str();
      try {
        const auto d = eps_dominator(families[f], eps);
        const auto cov = derive_covering_from(d, families[f]);
        for (const auto& m : cov.members) {
          o.check(m.sets.size() <= cov.covering.size(), tag + ": too many sets");
          o.check(m.max_diameter < Scalar(4) * cov.eps, tag + ": set diameter " + m.max_diameter.str());
          o.check(m.covered_mass >= Scalar(1) - Scalar(3) * cov.eps, tag + ": covered mass " + m.covered_mass.str());
        }
      } catch (const std::exception& e) {
        o.check(false, tag + ": " + e.what());
      }
    }
  return o;
}

Outcome gh_exact() {
  Outcome o;
  const auto p = one_point_metric();
  const auto t1 = two_point(1, Scalar(1, 2), Scalar(1, 2)).metric;
  const auto t2 = two_point(2, Scalar(1, 2), Scalar(1, 2)).metric;
  const auto c3 = three_path().metric;
  struct Named {
    const FiniteMetricSpace& a;
    const FiniteMetricSpace& b;
    Scalar want;
    const char* name;
  };
  for (const auto& c : {Named{c3, c3, Scalar(0), "X vs X"}, Named{t1, t2, Scalar(1, 2), "d=1 vs d=2"},
                        Named{p, t1, Scalar(1, 2), "point vs d=1"}}) {
    const auto g = gh_distance(c.a, c.b);
    o.check(g.exact && g.lower == c.want, std::string(c.name) + ": " + g.lower.str());
    o.check(oracle::gh(c.a, c.b) == c.want, std::string(c.name) + ": oracle disagrees");
  }
  std::mt19937_64 rng(kSeed + 9);
  for (int t = 0; t < 200; ++t) {
    const Scalar diam = oracle::pick(rng, {Scalar(1), Scalar(2)});
    const auto x = oracle::random_metric(rng, 4, diam), y = oracle::random_metric(rng, 4, diam),
               z = oracle::random_metric(rng, 4, diam);
    const auto xy = gh_distance(x, y), yx = gh_distance(y, x), yz = gh_distance(y, z), xz = gh_distance(x, z);
    const std::string tag = "triple " + std::to_string(t);
    o.check(xy.exact && yx.exact && yz.exact && xz.exact, tag + ": inexact");
    o.check(xy.lower == yx.lower, tag + ": asymmetric");
    o.check(xz.lower <= xy.lower + yz.lower, tag + ": triangle inequality fails");
    if (x.size() * y.size() <= 12) o.check(xy.lower == oracle::gh(x, y), tag + ": oracle disagrees");
  }
  return o;
}

Outcome gh_refine_check() {
  Outcome o;
  std::mt19937_64 rng(kSeed + 10);
  for (int t = 0; t < 50; ++t) {
    auto in = gen::gh_refine_input(rng);
    const auto& x = in->product.space;
    const std::string tag = "case " + std::to_string(t);
    try {
      const auto r = gh_refine(x, in->members, in->eps, in->eps_prime);
      o.check(distortion(r.space, x, r.projection) <= Scalar(3) * in->eps, tag + ": projection distortion");
      for (std::size_t m = 0; m < in->members.size(); ++m) {
        o.check(is_lipschitz(r.space, in->family[m], r.maps[m]), tag + ": g not 1-Lipschitz");
        o.check(covering_radius(in->family[m], image(r.maps[m])) < in->eps_prime, tag + ": covering too large");
      }
    } catch (const std::exception& e) {
      o.check(false, tag + ": " + e.what());
    }
  }
  std::vector<std::vector<FiniteMetricSpace>> families{
      {two_point(1, 1, 0).metric, two_point(2, 1, 0).metric}, {three_path().metric, one_point_metric()}};
  for (int t = 0; t < 10; ++t) {
    std::vector<FiniteMetricSpace> fam;
    for (int i = 0; i < 2; ++i) fam.push_back(oracle::random_metric(rng, 3, Scalar(1)));
    families.push_back(std::move(fam));
  }
  const std::vector<Scalar> eps{Scalar(1, 2), Scalar(1, 4)};
  for (std::size_t f = 0; f < families.size(); ++f) {
    const std::string tag = "sequence " + std::to_string(f);
    try {
      const auto tr = gh_dominator_sequence(families[f], eps, 2);
      o.check(!tr.truncated && tr.stages.size() == 3 && tr.verified(), tag + ": not fully verified");
    } catch (const std::exception& e) {
      o.check(false, tag + ": " + e.what());
    }
  }
  return o;
}

// ---------------------------------------------------------------------------
// Determinism through the command front end
// ---------------------------------------------------------------------------

std::string write(const std::filesystem::path& dir, const std::string& name, const io::json& j) {
  const auto p = dir / name;
  std::ofstream(p) << j.dump(1);
  return p.string();
}

Outcome determinism() {
  Outcome o;
  const auto dir = std::filesystem::temp_directory_path() / "mmdom_acceptance";
  std::filesystem::create_directories(dir);
  const auto a = two_point(1, Scalar(1, 2), Scalar(1, 2)), b = two_point(2, Scalar(1, 2), Scalar(1, 2));
  const auto c = three_path();
  const std::string sa = write(dir, "a.json", io::to_json(a)), sb = write(dir, "b.json", io::to_json(b)),
                    sc = write(dir, "c.json", io::to_json(c));
  const std::string fam = write(dir, "fam.json", io::json{{"spaces", {io::to_json(a), io::to_json(b)}}});
  const auto mixed = generate_instance(5, Scalar(2), 11);
  std::mt19937_64 mass_rng(5);
  const auto other = FiniteMMSpace{mixed.metric, oracle::random_mass(mass_rng, mixed.size(), true)};
  const std::string sm = write(dir, "m.json", io::to_json(mixed)), so = write(dir, "o.json", io::to_json(other));

  std::mt19937_64 rng(kSeed + 11);
  auto ri = gen::refine_input(rng);
  io::json rj{{"x", io::to_json(ri.base->product.space)}, {"members", io::json::array()}};
  for (const auto& m : ri.members)
    rj["members"].push_back({{"space", io::to_json(m.space)}, {"map", io::to_json(m.f)},
                             {"coarse", io::to_json(m.coarse)}, {"fine", io::to_json(m.fine)}});
  const std::string sr = write(dir, "refine.json", rj);
  auto pi = gen::pad_input(rng);
  io::json pj{{"x", io::to_json(*pi.x)}, {"members", io::json::array()}};
  for (const auto& m : pi.members)
    pj["members"].push_back({{"space", io::to_json(m.space)}, {"map", io::to_json(m.g)}, {"blocks", io::to_json(m.blocks)}});
  const std::string sp = write(dir, "pad.json", pj);
  auto gi = gen::gh_refine_input(rng);
  io::json gj{{"x", io::to_json(gi->product.space)}, {"members", io::json::array()}};
  for (const auto& m : gi->members)
    gj["members"].push_back({{"space", io::to_json(m.space)}, {"map", io::to_json(m.f)}, {"net", m.net}});
  const std::string sg = write(dir, "ghrefine.json", gj);

  auto cfg = [](std::string cmd, std::string in, std::string in2 = {}) {
    cli::RunConfig c;
    c.command = std::move(cmd);
    c.input = std::move(in);
    c.input2 = std::move(in2);
    return c;
  };
  std::vector<cli::RunConfig> runs;
  runs.push_back(cfg("validate", fam));
  runs.push_back(cfg("prohorov", sm, so));
  runs.back().eps = "1/4";
  runs.push_back(cfg("prohorov", sm, so));
  runs.back().eps = "1";
  runs.push_back(cfg("dominates", sa, sa));
  runs.push_back(cfg("box-bounds", sa, sc));
  runs.push_back(cfg("dominates", sc, sa));
  runs.push_back(cfg("eps-dominates", sb, sa));
  runs.back().eps = "1/2";
  runs.push_back(cfg("build-product", fam));
  runs.back().eps = "1/2";
  runs.push_back(cfg("refine", sr));
  runs.back().eps = ri.eps.str();
  runs.back().eps2 = ri.eps_prime.str();
  runs.push_back(cfg("pad", sp));
  runs.back().eps = pi.eps.str();
  runs.back().eps2 = pi.eps_prime.str();
  runs.push_back(cfg("run-sequence", fam));
  runs.back().eps_seq = "1/2,1/4,1/8";
  runs.back().stages = 3;
  runs.push_back(cfg("run-sequence", fam));
  runs.back().eps_seq = "1/2,1/4,1/8";
  runs.back().stages = 3;
  runs.back().mode = "transfer";
  runs.push_back(cfg("derive-covering", fam));
  runs.back().eps = "1/8";
  runs.push_back(cfg("precompact-profile", fam));
  runs.back().eps = "1/4";
  runs.push_back(cfg("gen", ""));
  runs.back().n = 5;
  runs.back().diam = "3/2";
  runs.back().seed = 42;
  runs.back().count = 3;
  runs.push_back(cfg("gh-dist", sc, sb));
  runs.push_back(cfg("gh-dominates", sc, sa));
  runs.push_back(cfg("gh-dominates", sb, sc));
  runs.back().eps = "1";
  runs.push_back(cfg("gh-refine", sg));
  runs.back().eps = gi->eps.str();
  runs.back().eps2 = gi->eps_prime.str();
  runs.push_back(cfg("gh-run-sequence", fam));
  runs.back().eps_seq = "1/2,1/4";
  runs.back().stages = 2;
  runs.push_back(cfg("gh-net-profile", fam));
  runs.back().eps = "1/2";

  std::vector<bool> seen(cli::commands().size(), false);
  for (auto& r : runs) {
    r.threads = 1;
    const auto one = cli::run(r);
    const std::string text1 = cli::render(one.report);
    const std::string again = cli::render(cli::run(r).report);
    r.threads = 4;
    const auto four = cli::run(r);
    o.check(text1 == again && text1 == cli::render(four.report) && one.exit == four.exit,
            r.command + ": reports differ");
    o.check(one.exit == cli::computed || one.exit == cli::refuted, r.command + ": exit " + std::to_string(one.exit) +
                                           (one.report.contains("error") ? " (" + one.report["error"].get<std::string>() + ")" : ""));
    for (std::size_t i = 0; i < cli::commands().size(); ++i) seen[i] = seen[i] || cli::commands()[i] == r.command;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) o.check(seen[i], cli::commands()[i] + ": not exercised");
  std::filesystem::remove_all(dir);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double limit;   // seconds, 0 = none
  };
  const std::vector<Criterion> criteria{
      {1, "prohorov distance matches subset enumeration", prohorov_oracle, kLimitProhorov},
      {2, "partition bound passes prohorov_le", lemma_p, 0},
      {3, "product dominator is 1-Lipschitz, measure-preserving and dominates", product_dominator_check, 0},
      {4, "refinement pair bound, key ratio and 3eps projection", refine_check, kLimitRefine},
      {5, "padding anchor masses, eps inclusion and pushforward identity", pad_check, 0},
      {6, "three-stage sequence with 27 + 21 = 48 eps_n steps", sequence_check, kLimitSequence},
      {7, "eps-dominator certificates at 5eps", eps_dominator_check, 0},
      {8, "derived coverings: count, diameter and mass", covering_check, 0},
      {9, "GH exact values, symmetry and triangle inequality", gh_exact, 0},
      {10, "GH refinement and two-step GH sequence", gh_refine_check, 0},
      {11, "byte-identical reports across runs and thread counts", determinism, 0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("uncaught: ") + e.what());
    }
    const double secs = seconds_since(t0);
    if (c.limit > 0 && secs >= c.limit) o.check(false, "runtime limit exceeded");
    std::printf("criterion %2d %s  %s  [%zu checks, %zu failed, %.2fs]%s%s\n", c.id, o.pass ? "PASS" : "FAIL", c.name,
                o.cases, o.failures, secs, o.detail.empty() ? "" : "  ", o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
