#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mmdom/boxorder.hpp"
#include "mmdom/core.hpp"

namespace mmdom {

// A map X -> Y whose domain is the non-exceptional set.
struct CoveringWitness {
  const FiniteMMSpace& space;
  MapWitness map;
};

struct DerivedCovering {
  std::vector<IndexSet> sets;   // U_eps(f(K cap dom)), one per K
  Scalar max_diameter;
  Scalar union_diameter;
  Scalar source_union_diameter;
  Scalar covered_mass;
  bool count_ok = false;
  bool diameter_ok = false;        // < 4 eps
  bool union_diameter_ok = false;  // < diam(union K) + 3 eps
  bool mass_ok = false;            // >= 1 - 3 eps

  bool ok() const { return count_ok && diameter_ok && union_diameter_ok && mass_ok; }
};

inline std::vector<DerivedCovering> derive_covering(const FiniteMMSpace& x, const PartitionFamily& k,
                                                    std::span<const CoveringWitness> witnesses, const Scalar& eps) {
  require_valid(x, "X");
  require_valid(k, x.size(), "covering family");
  if (!eps.is_positive()) throw PreconditionError("derive_covering: eps must be positive");
  for (std::size_t b = 0; b < k.size(); ++b)
    if (diameter(x.metric, k.blocks[b]) > eps)
      throw PreconditionError("derive_covering: block " + std::to_string(b) + " has diameter > eps");
  const IndexSet ku = k.union_set();
  if (mass_of(x.mass, ku) < Scalar(1) - eps) throw PreconditionError("derive_covering: covering family has mass < 1 - eps");
  for (std::size_t w = 0; w < witnesses.size(); ++w) {
    require_valid(witnesses[w].space, "member " + std::to_string(w));
    const DominationCertificate c{witnesses[w].map, DominationMode::eps, eps};
    if (!verify_domination(x, witnesses[w].space, c))
      throw PreconditionError("derive_covering: witness for member " + std::to_string(w) + " is invalid");
  }

  const Scalar source_diam = diameter(x.metric, ku);
  std::vector<DerivedCovering> out;
  for (const auto& w : witnesses) {
    const auto& y = w.space;
    const IndexSet dom = w.map.domain_or_all();
    DerivedCovering d;
    d.source_union_diameter = source_diam;
    IndexSet all;
    for (const auto& blk : k.blocks) {
      IndexSet s = open_ball_enlargement(y.metric, image(w.map, set_intersection(blk, dom)), eps);
      d.max_diameter = max(d.max_diameter, diameter(y.metric, s));
      std::vector<Index> merged;
      std::set_union(all.begin(), all.end(), s.begin(), s.end(), std::back_inserter(merged));
      all = std::move(merged);
      d.sets.push_back(std::move(s));
    }
    d.union_diameter = diameter(y.metric, all);
    d.covered_mass = mass_of(y.mass, all);
    d.count_ok = d.sets.size() <= k.size();
    d.diameter_ok = d.max_diameter < Scalar(4) * eps;
    d.union_diameter_ok = d.union_diameter < source_diam + Scalar(3) * eps;
    d.mass_ok = d.covered_mass >= Scalar(1) - Scalar(3) * eps;
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Covering profile of a finite family
// ---------------------------------------------------------------------------

struct MemberProfile {
  std::vector<IndexSet> blocks;
  Scalar max_block_diameter;
  Scalar union_diameter;
  Scalar covered_mass;
};

struct PrecompactProfile {
  Scalar eps;
  std::size_t count_bound = 0;
  Scalar diameter_bound;
  Scalar delta;   // max(count_bound, diameter_bound)
  std::vector<MemberProfile> members;
};

// Greedy closed eps/2-balls around points in index order (one block when
// diam Y <= eps), then the lightest blocks are dropped while the kept mass
// stays >= 1 - eps.
inline MemberProfile member_profile(const FiniteMMSpace& y, const Scalar& eps) {
  MemberProfile p;
  const Scalar radius = eps / Scalar(2);
  if (diameter(y.metric) <= eps) {
    p.blocks.push_back(all_points(y.size()));
  } else {
    std::vector<bool> taken(y.size(), false);
    for (Index c = 0; c < y.size(); ++c) {
      if (taken[c]) continue;
      IndexSet blk;
      for (Index q = 0; q < y.size(); ++q)
        if (!taken[q] && y.d(c, q) <= radius) {
          taken[q] = true;
          blk.push_back(q);
        }
      p.blocks.push_back(std::move(blk));
    }
    std::vector<std::size_t> order(p.blocks.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<Scalar> m;
    for (const auto& b : p.blocks) m.push_back(mass_of(y.mass, b));
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m[a] < m[b]; });
    Scalar kept = total_mass(m);
    std::vector<bool> drop(p.blocks.size(), false);
    std::size_t remaining = p.blocks.size();
    for (auto i : order) {
      if (remaining <= 1 || kept - m[i] < Scalar(1) - eps) break;
      kept -= m[i];
      drop[i] = true;
      --remaining;
    }
    std::vector<IndexSet> keep;
    for (std::size_t i = 0; i < p.blocks.size(); ++i)
      if (!drop[i]) keep.push_back(std::move(p.blocks[i]));
    p.blocks = std::move(keep);
  }
  IndexSet all;
  for (const auto& b : p.blocks) {
    p.max_block_diameter = max(p.max_block_diameter, diameter(y.metric, b));
    all.insert(all.end(), b.begin(), b.end());
  }
  all = make_index_set(std::move(all));
  p.union_diameter = diameter(y.metric, all);
  p.covered_mass = mass_of(y.mass, all);
  return p;
}

inline PrecompactProfile precompact_profile(std::span<const FiniteMMSpace> family, const Scalar& eps) {
  if (!eps.is_positive()) throw PreconditionError("precompact_profile: eps must be positive");
  PrecompactProfile out;
  out.eps = eps;
  for (std::size_t m = 0; m < family.size(); ++m) {
    require_valid(family[m], "member " + std::to_string(m));
    auto p = member_profile(family[m], eps);
    out.count_bound = std::max(out.count_bound, p.blocks.size());
    out.diameter_bound = max(out.diameter_bound, p.union_diameter);
    out.members.push_back(std::move(p));
  }
  out.delta = max(Scalar(static_cast<long long>(out.count_bound)), out.diameter_bound);
  return out;
}

}  // namespace mmdom
