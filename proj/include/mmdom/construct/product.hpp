#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mmdom/boxorder.hpp"
#include "mmdom/construct/scheme.hpp"
#include "mmdom/core.hpp"
#include "mmdom/parallel.hpp"

namespace mmdom {

inline constexpr std::size_t kDefaultPointCap = 4096;

// A member space with its block family.
struct Factor {
  const FiniteMMSpace& space;
  PartitionFamily blocks;
};

namespace detail {

inline std::vector<Index> least_anchors(const PartitionFamily& fam) {
  std::vector<Index> out;
  for (const auto& b : fam.blocks) out.push_back(b.front());
  return out;
}

// Mixed-radix odometer over radices; returns false after the last tuple.
inline bool next_tuple(std::vector<std::size_t>& t, std::span<const std::size_t> radix) {
  for (std::size_t i = t.size(); i-- > 0;) {
    if (++t[i] < radix[i]) return true;
    t[i] = 0;
  }
  return false;
}

inline std::uint64_t checked_product(std::span<const std::size_t> radix) {
  std::uint64_t p = 1;
  for (auto r : radix) {
    if (r != 0 && p > std::numeric_limits<std::uint64_t>::max() / r) return std::numeric_limits<std::uint64_t>::max();
    p *= r;
  }
  return p;
}

inline std::string tuple_label(const std::vector<std::string>& parts) {
  std::string s = "(";
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "," : "") + parts[i];
  return s + ")";
}

inline void require_positive_blocks(const FiniteMMSpace& y, const PartitionFamily& fam, const std::string& what) {
  require_valid(fam, y.size(), what);
  if (fam.blocks.empty()) throw PreconditionError(what + ": empty block family");
  for (std::size_t b = 0; b < fam.size(); ++b)
    if (!mass_of(y.mass, fam.blocks[b]).is_positive())
      throw PreconditionError(what + ": block " + std::to_string(b) + " has zero mass");
}

// f(X) inside U and f_* mu_X(A) = mu_Y(A) / mu_Y(U) for every block.
inline bool pushforward_matches_blocks(const FiniteMMSpace& x, const FiniteMMSpace& y, const MapWitness& f,
                                       const PartitionFamily& fam) {
  const IndexSet u = fam.union_set();
  for (Index i = 0; i < x.size(); ++i)
    if (!contains(u, f(i))) return false;
  const auto push = pushforward(f, x.mass, y.size());
  const Scalar mu_u = mass_of(y.mass, u);
  for (const auto& a : fam.blocks)
    if (mass_of(push, a) != mass_of(y.mass, a) / mu_u) return false;
  return true;
}

}  // namespace detail

struct ProductDominator {
  FiniteMMSpace space;
  std::vector<MapWitness> maps;                  // f_Y per factor
  std::vector<std::vector<std::size_t>> tuples;  // block index per factor, per point of space
  bool quotiented = false;
};

inline std::uint64_t product_size(std::span<const Factor> family) {
  std::vector<std::size_t> radix;
  for (const auto& f : family) radix.push_back(f.blocks.size());
  return detail::checked_product(radix);
}

// X = prod A_Y with the max of anchor distances and the normalized product
// measure; f_Y sends a tuple to the anchor of its Y-coordinate.
inline ProductDominator product_dominator(std::span<const Factor> family, std::size_t point_cap = kDefaultPointCap) {
  if (family.empty()) throw PreconditionError("product_dominator: empty family");
  std::vector<std::size_t> radix;
  std::vector<std::vector<Index>> anchors;
  std::vector<Scalar> cover;
  for (std::size_t m = 0; m < family.size(); ++m) {
    const auto& [y, fam] = family[m];
    require_valid(y, "member " + std::to_string(m));
    detail::require_positive_blocks(y, fam, "member " + std::to_string(m));
    radix.push_back(fam.size());
    anchors.push_back(detail::least_anchors(fam));
    cover.push_back(mass_of(y.mass, fam.union_set()));
  }
  const auto total = detail::checked_product(radix);
  if (total > point_cap)
    throw BudgetExceeded("product_dominator: " + std::to_string(total) + " points exceed the cap " + std::to_string(point_cap));

  std::vector<std::vector<std::size_t>> tuples;
  std::vector<std::size_t> t(family.size(), 0);
  do tuples.push_back(t);
  while (detail::next_tuple(t, radix));

  const std::size_t n = tuples.size();
  std::vector<std::string> labels;
  std::vector<Scalar> flat(n * n), mass;
  for (const auto& tp : tuples) {
    std::vector<std::string> parts;
    Scalar w(1);
    for (std::size_t m = 0; m < family.size(); ++m) {
      const auto& y = family[m].space;
      parts.push_back(y.metric.label(anchors[m][tp[m]]));
      w *= mass_of(y.mass, family[m].blocks.blocks[tp[m]]) / cover[m];
    }
    labels.push_back(detail::tuple_label(parts));
    mass.push_back(std::move(w));
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      Scalar d;
      for (std::size_t m = 0; m < family.size(); ++m)
        d = max(d, family[m].space.d(anchors[m][tuples[a][m]], anchors[m][tuples[b][m]]));
      flat[a * n + b] = d;
      flat[b * n + a] = std::move(d);
    }

  std::vector<MapWitness> raw(family.size());
  for (std::size_t m = 0; m < family.size(); ++m)
    for (const auto& tp : tuples) raw[m].assignment.push_back(anchors[m][tp[m]]);

  auto q = quotient_zero_distance(labels, flat, mass);
  ProductDominator out;
  out.quotiented = q.merged;
  out.space = std::move(q.space);
  for (auto& f : raw) out.maps.push_back(q.merged ? descend_map(f, q) : std::move(f));
  if (q.merged) {
    std::vector<std::vector<std::size_t>> kept(out.space.size());
    for (std::size_t i = 0; i < n; ++i)
      if (kept[q.class_of[i]].empty()) kept[q.class_of[i]] = tuples[i];
    out.tuples = std::move(kept);
  } else {
    out.tuples = std::move(tuples);
  }

  if (total_mass(out.space.mass) != Scalar(1)) throw PostconditionError("product_dominator: mass does not sum to 1");
  for (std::size_t m = 0; m < family.size(); ++m) {
    const auto& y = family[m].space;
    if (!is_lipschitz(out.space.metric, y.metric, out.maps[m]))
      throw PostconditionError("product_dominator: map " + std::to_string(m) + " is not 1-Lipschitz");
    if (!detail::pushforward_matches_blocks(out.space, y, out.maps[m], family[m].blocks))
      throw PostconditionError("product_dominator: pushforward identity fails for member " + std::to_string(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Refinement
// ---------------------------------------------------------------------------

struct RefineMember {
  const FiniteMMSpace& space;
  MapWitness f;             // X -> Y
  PartitionFamily coarse;   // A_Y
  PartitionFamily fine;     // A'_Y
};

struct Refinement {
  FiniteMMSpace space;             // X'
  std::vector<MapWitness> maps;    // g_Y: X' -> Y
  MapWitness projection;           // pi: X' -> X
  MmIsoCheck projection_check;     // pi at 3 eps
  Scalar box_bound;                // 9 eps
  std::vector<Scalar> max_key_ratio;
  bool quotiented = false;
};

namespace detail {

// Fine blocks contained in each coarse block, in fine order.
inline std::vector<std::vector<std::size_t>> children(const PartitionFamily& coarse, const PartitionFamily& fine) {
  std::vector<std::vector<std::size_t>> out(coarse.size());
  for (std::size_t a = 0; a < coarse.size(); ++a)
    for (std::size_t b = 0; b < fine.size(); ++b)
      if (is_subset(fine.blocks[b], coarse.blocks[a])) out[a].push_back(b);
  return out;
}

inline void check_refine_hypotheses(const FiniteMMSpace& x, std::span<const RefineMember> family, const Scalar& eps,
                                    const Scalar& eps_prime) {
  for (std::size_t m = 0; m < family.size(); ++m) {
    const auto& mem = family[m];
    const auto& y = mem.space;
    const std::string who = "member " + std::to_string(m);
    require_valid(y, who);
    require_valid_map(mem.f, x.size(), y.size());
    require_valid(mem.coarse, y.size(), who + " coarse family");
    require_valid(mem.fine, y.size(), who + " fine family");
    if (!is_lipschitz(x.metric, y.metric, mem.f, Scalar(1), eps))
      throw HypothesisError(1, who + ": map is not (1, eps)-Lipschitz");
    const IndexSet u = mem.coarse.union_set();
    for (Index i = 0; i < x.size(); ++i)
      if (!contains(u, mem.f(i))) throw HypothesisError(2, who + ": f(X) not inside U");
    const auto push = pushforward(mem.f, x.mass, y.size());
    const Scalar mu_u = mass_of(y.mass, u);
    for (std::size_t a = 0; a < mem.coarse.size(); ++a) {
      const auto& blk = mem.coarse.blocks[a];
      if (diameter(y.metric, blk) > eps) throw HypothesisError(3, who + ": block " + std::to_string(a) + " diameter > eps");
      if (mass_of(push, blk) != mass_of(y.mass, blk) / mu_u)
        throw HypothesisError(3, who + ": pushforward of block " + std::to_string(a) + " is not mu(A)/mu(U)");
    }
    const Scalar escape = Scalar(1) - mass_of(y.mass, mem.fine.union_set());
    if (mem.coarse.blocks.empty() ||
        !(escape < eps_prime / (Scalar(1) + eps_prime) * min_block_mass(y, mem.coarse)))
      throw HypothesisError(4, who + ": mass outside U' is too large");
    for (std::size_t b = 0; b < mem.fine.size(); ++b)
      if (!mass_of(y.mass, mem.fine.blocks[b]).is_positive())
        throw HypothesisError(5, who + ": fine block " + std::to_string(b) + " has zero mass");
    if (!is_nested(mem.coarse, mem.fine)) throw HypothesisError(6, who + ": fine family is not nested in the coarse one");
  }
}

}  // namespace detail

// Predicted |X'| for a refinement (no hypothesis checks).
inline std::uint64_t refine_size(const FiniteMMSpace& x, std::span<const RefineMember> family) {
  std::uint64_t total = 0;
  std::vector<std::vector<std::vector<std::size_t>>> kids;
  std::vector<std::vector<std::optional<std::size_t>>> owner;
  for (const auto& mem : family) {
    kids.push_back(detail::children(mem.coarse, mem.fine));
    owner.push_back(mem.coarse.block_of(mem.space.size()));
  }
  for (Index i = 0; i < x.size(); ++i) {
    std::vector<std::size_t> radix;
    for (std::size_t m = 0; m < family.size(); ++m) {
      const auto a = owner[m][family[m].f(i)];
      radix.push_back(a ? kids[m][*a].size() : 0);
    }
    const auto p = detail::checked_product(radix);
    if (p > std::numeric_limits<std::uint64_t>::max() - total) return std::numeric_limits<std::uint64_t>::max();
    total += p;
  }
  return total;
}

inline Refinement refine(const FiniteMMSpace& x, std::span<const RefineMember> family, const Scalar& eps,
                         const Scalar& eps_prime, std::size_t point_cap = kDefaultPointCap) {
  require_valid(x, "X");
  if (family.empty()) throw PreconditionError("refine: empty family");
  if (!eps.is_positive() || !eps_prime.is_positive()) throw PreconditionError("refine: eps and eps' must be positive");
  detail::check_refine_hypotheses(x, family, eps, eps_prime);
  const auto predicted = refine_size(x, family);
  if (predicted > point_cap)
    throw BudgetExceeded("refine: " + std::to_string(predicted) + " points exceed the cap " + std::to_string(point_cap));

  const std::size_t k = family.size();
  std::vector<std::vector<std::vector<std::size_t>>> kids(k);
  std::vector<std::vector<std::optional<std::size_t>>> owner(k);
  std::vector<std::vector<Index>> anchors(k);
  std::vector<std::vector<Scalar>> child_mass(k);  // mu_Y(union A'(A)) per coarse block
  for (std::size_t m = 0; m < k; ++m) {
    const auto& mem = family[m];
    kids[m] = detail::children(mem.coarse, mem.fine);
    owner[m] = mem.coarse.block_of(mem.space.size());
    anchors[m] = detail::least_anchors(mem.fine);
    for (const auto& ks : kids[m]) {
      Scalar s;
      for (auto b : ks) s += mass_of(mem.space.mass, mem.fine.blocks[b]);
      child_mass[m].push_back(std::move(s));
    }
  }

  std::vector<Index> base;                       // pi
  std::vector<std::vector<Index>> pts;           // anchors per member
  std::vector<std::string> labels;
  std::vector<Scalar> mass;
  for (Index i = 0; i < x.size(); ++i) {
    std::vector<std::vector<std::size_t>> options(k);
    std::vector<std::size_t> radix(k);
    Scalar denom(1);
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t a = *owner[m][family[m].f(i)];
      options[m] = kids[m][a];
      radix[m] = options[m].size();
      if (radix[m] == 0) throw PostconditionError("refine: occupied block with no refinement (hypothesis (4) should have failed)");
      denom *= child_mass[m][a];
    }
    std::vector<std::size_t> t(k, 0);
    do {
      std::vector<Index> anc(k);
      std::vector<std::string> parts{x.metric.label(i)};
      Scalar num(1);
      for (std::size_t m = 0; m < k; ++m) {
        const auto b = options[m][t[m]];
        anc[m] = anchors[m][b];
        parts.push_back(family[m].space.metric.label(anc[m]));
        num *= mass_of(family[m].space.mass, family[m].fine.blocks[b]);
      }
      base.push_back(i);
      pts.push_back(std::move(anc));
      labels.push_back(detail::tuple_label(parts));
      mass.push_back(x.mass[i] * num / denom);
    } while (detail::next_tuple(t, radix));
  }

  const std::size_t n = base.size();
  std::vector<Scalar> flat(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      Scalar d = x.d(base[a], base[b]);
      for (std::size_t m = 0; m < k; ++m) d = max(d, family[m].space.d(pts[a][m], pts[b][m]));
      flat[a * n + b] = d;
      flat[b * n + a] = std::move(d);
    }

  MapWitness pi{base, std::nullopt};
  std::vector<MapWitness> g(k);
  for (std::size_t m = 0; m < k; ++m)
    for (const auto& p : pts) g[m].assignment.push_back(p[m]);

  auto q = quotient_zero_distance(labels, flat, mass);
  Refinement out;
  out.quotiented = q.merged;
  out.space = std::move(q.space);
  out.projection = q.merged ? descend_map(pi, q) : std::move(pi);
  for (auto& gm : g) out.maps.push_back(q.merged ? descend_map(gm, q) : std::move(gm));
  out.box_bound = Scalar(9) * eps;

  const auto& xp = out.space;
  if (total_mass(xp.mass) != Scalar(1)) throw PostconditionError("refine: mass does not sum to 1");
  if (pushforward(out.projection, xp.mass, x.size()) != x.mass)
    throw PostconditionError("refine: projection does not push mu_X' to mu_X");
  for (std::size_t m = 0; m < k; ++m) {
    const auto& mem = family[m];
    const auto& y = mem.space;
    if (!is_lipschitz(xp.metric, y.metric, out.maps[m]))
      throw PostconditionError("refine: g for member " + std::to_string(m) + " is not 1-Lipschitz");
    const IndexSet u = mem.coarse.union_set();
    const IndexSet both = set_intersection(u, mem.fine.union_set());
    for (Index p = 0; p < xp.size(); ++p)
      if (!contains(both, out.maps[m](p)))
        throw PostconditionError("refine: image of g for member " + std::to_string(m) + " leaves U and U'");
    const auto push = pushforward(out.maps[m], xp.mass, y.size());
    const Scalar mu_u = mass_of(y.mass, u);
    Scalar worst(1);
    for (const auto& b : mem.fine.blocks) {
      if (!is_subset(b, u)) continue;
      const Scalar ratio = mu_u * mass_of(push, b) / mass_of(y.mass, b);
      if (ratio < Scalar(1) || !(ratio < Scalar(1) + eps_prime))
        throw PostconditionError("refine: key ratio " + ratio.str() + " outside [1, 1+eps')");
      worst = max(worst, ratio);
    }
    out.max_key_ratio.push_back(std::move(worst));
  }
  const Scalar three_eps = Scalar(3) * eps;
  for (Index a = 0; a < xp.size(); ++a)
    for (Index b = a + 1; b < xp.size(); ++b) {
      const Scalar& dx = x.d(out.projection(a), out.projection(b));
      if (xp.d(a, b) < dx || xp.d(a, b) > dx + three_eps)
        throw PostconditionError("refine: projection distance bound fails for points " + std::to_string(a) + "," +
                                 std::to_string(b));
    }
  out.projection_check = verify_mm_iso(xp, x, out.projection, three_eps);
  if (!out.projection_check.ok) throw PostconditionError("refine: projection is not a 3eps-mm-isomorphism");
  return out;
}

// ---------------------------------------------------------------------------
// Padding
// ---------------------------------------------------------------------------

struct PadMember {
  const FiniteMMSpace& space;
  MapWitness g;             // X -> Y
  PartitionFamily blocks;   // A_Y
};

struct Padding {
  FiniteMMSpace space;                            // X'
  std::vector<MapWitness> maps;                   // f_Y: X' -> Y
  MapWitness inclusion;                           // iota: X -> X'
  MmIsoCheck inclusion_check;                     // at eps
  std::vector<std::vector<Index>> anchors;        // Y' per member, one per block
  std::vector<std::vector<Scalar>> anchor_masses; // mu_Y' per member
  Scalar box_bound;                               // 3 eps
  bool quotiented = false;
};

inline std::uint64_t pad_size(const FiniteMMSpace& x, std::span<const PadMember> family) {
  std::vector<std::size_t> radix;
  for (const auto& m : family) radix.push_back(m.blocks.size());
  const auto p = detail::checked_product(radix);
  return p > std::numeric_limits<std::uint64_t>::max() - x.size() ? p : p + x.size();
}

inline Padding pad_extend(const FiniteMMSpace& x, std::span<const PadMember> family, const Scalar& eps,
                          const Scalar& eps_prime, std::size_t point_cap = kDefaultPointCap) {
  require_valid(x, "X");
  if (family.empty()) throw PreconditionError("pad_extend: empty family");
  if (!eps.is_positive() || !(eps < Scalar(1))) throw PreconditionError("pad_extend: eps must lie in (0, 1)");
  if (eps_prime.is_negative()) throw PreconditionError("pad_extend: eps' must be >= 0");
  const std::size_t k = family.size();
  for (std::size_t m = 0; m < k; ++m) {
    const auto& mem = family[m];
    const auto& y = mem.space;
    const std::string who = "member " + std::to_string(m);
    require_valid(y, who);
    require_valid_map(mem.g, x.size(), y.size());
    require_valid(mem.blocks, y.size(), who + " blocks");
    if (mem.blocks.blocks.empty()) throw PreconditionError(who + ": empty block family");
    const IndexSet u = mem.blocks.union_set();
    for (Index i = 0; i < x.size(); ++i)
      if (!contains(u, mem.g(i))) throw HypothesisError(1, who + ": g(X) not inside U");
    if (additive_defect(x.metric, y.metric, mem.g) > eps_prime)
      throw HypothesisError(2, who + ": additive defect exceeds eps'");
    const auto push = pushforward(mem.g, x.mass, y.size());
    for (std::size_t a = 0; a < mem.blocks.size(); ++a) {
      const Scalar mu_a = mass_of(y.mass, mem.blocks.blocks[a]);
      if (!mu_a.is_positive()) throw HypothesisError(3, who + ": block " + std::to_string(a) + " has zero mass");
      if (mass_of(push, mem.blocks.blocks[a]) > (Scalar(1) + eps) * mu_a)
        throw HypothesisError(3, who + ": block " + std::to_string(a) + " receives more than (1+eps) mu(A)");
    }
  }
  const auto predicted = pad_size(x, family);
  if (predicted > point_cap)
    throw BudgetExceeded("pad_extend: " + std::to_string(predicted) + " points exceed the cap " + std::to_string(point_cap));

  const Index x0 = 0;
  Padding out;
  std::vector<std::size_t> radix;
  for (std::size_t m = 0; m < k; ++m) {
    const auto& mem = family[m];
    const auto& y = mem.space;
    const auto owner = mem.blocks.block_of(y.size());
    const std::size_t home = *owner[mem.g(x0)];
    const auto push = pushforward(mem.g, x.mass, y.size());
    const Scalar mu_u = mass_of(y.mass, mem.blocks.union_set());
    std::vector<Index> anc;
    std::vector<Scalar> w;
    for (std::size_t a = 0; a < mem.blocks.size(); ++a) {
      const auto& blk = mem.blocks.blocks[a];
      anc.push_back(a == home ? mem.g(x0) : blk.front());
      const Scalar mu_a = mass_of(y.mass, blk);
      Scalar v = (mu_a / mu_u - (Scalar(1) - eps) * mass_of(push, blk)) / eps;
      if (v < eps * mu_a)
        throw PostconditionError("pad_extend: anchor mass below eps mu(A) (hypothesis (3) should have failed)");
      w.push_back(std::move(v));
    }
    if (total_mass(w) != Scalar(1)) throw PostconditionError("pad_extend: anchor measure does not sum to 1");
    radix.push_back(anc.size());
    out.anchors.push_back(std::move(anc));
    out.anchor_masses.push_back(std::move(w));
  }

  std::vector<std::vector<std::size_t>> tuples;
  std::vector<std::size_t> t(k, 0);
  do tuples.push_back(t);
  while (detail::next_tuple(t, radix));

  auto pad_d = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    Scalar d;
    for (std::size_t m = 0; m < k; ++m)
      d = max(d, family[m].space.d(out.anchors[m][a[m]], out.anchors[m][b[m]]));
    return d;
  };
  Scalar diam_pad;
  for (std::size_t a = 0; a < tuples.size(); ++a)
    for (std::size_t b = a + 1; b < tuples.size(); ++b) diam_pad = max(diam_pad, pad_d(tuples[a], tuples[b]));

  const std::size_t nx = x.size();
  const std::size_t n = nx + tuples.size();
  std::vector<std::string> labels = x.metric.labels();
  std::vector<Scalar> mass;
  for (Index i = 0; i < nx; ++i) mass.push_back((Scalar(1) - eps) * x.mass[i]);
  for (const auto& tp : tuples) {
    std::vector<std::string> parts;
    Scalar w = eps;
    for (std::size_t m = 0; m < k; ++m) {
      parts.push_back(family[m].space.metric.label(out.anchors[m][tp[m]]));
      w *= out.anchor_masses[m][tp[m]];
    }
    labels.push_back("pad" + detail::tuple_label(parts));
    mass.push_back(std::move(w));
  }
  std::vector<Scalar> flat(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      Scalar d;
      if (b < nx)
        d = x.d(a, b);
      else if (a >= nx)
        d = pad_d(tuples[a - nx], tuples[b - nx]);
      else
        d = x.d(a, x0) + diam_pad;
      flat[a * n + b] = d;
      flat[b * n + a] = std::move(d);
    }

  std::vector<MapWitness> f(k);
  for (std::size_t m = 0; m < k; ++m) {
    f[m].assignment = family[m].g.assignment;
    for (const auto& tp : tuples) f[m].assignment.push_back(out.anchors[m][tp[m]]);
  }
  MapWitness iota{all_points(nx), std::nullopt};

  auto q = quotient_zero_distance(labels, flat, mass);
  out.quotiented = q.merged;
  for (auto& fm : f) out.maps.push_back(q.merged ? descend_map(fm, q) : std::move(fm));
  if (q.merged)
    for (auto& v : iota.assignment) v = q.class_of[v];
  out.space = std::move(q.space);
  out.inclusion = std::move(iota);
  out.box_bound = Scalar(3) * eps;

  const auto& xp = out.space;
  if (total_mass(xp.mass) != Scalar(1)) throw PostconditionError("pad_extend: mass does not sum to 1");
  out.inclusion_check = verify_mm_iso(x, xp, out.inclusion, eps);
  if (!out.inclusion_check.ok) throw PostconditionError("pad_extend: inclusion is not an eps-mm-isomorphism");
  for (std::size_t m = 0; m < k; ++m) {
    const auto& mem = family[m];
    const std::string who = "pad_extend: member " + std::to_string(m);
    if (!detail::pushforward_matches_blocks(xp, mem.space, out.maps[m], mem.blocks))
      throw PostconditionError(who + ": image or pushforward conclusion fails");
    if (additive_defect(xp.metric, mem.space.metric, out.maps[m]) > eps_prime)
      throw PostconditionError(who + ": additive defect exceeds eps'");
  }
  return out;
}

}  // namespace mmdom
