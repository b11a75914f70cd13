#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "mmdom/core.hpp"
#include "mmdom/flow.hpp"

namespace mmdom {

// Transport plan between two mass vectors on a common space; row-major over
// (point of mu) x (point of nu).
struct Coupling {
  std::size_t n = 0;
  std::vector<Scalar> matrix;

  const Scalar& at(Index i, Index j) const { return matrix[i * n + j]; }
};

inline std::vector<Scalar> row_sums(const Coupling& c) {
  std::vector<Scalar> out(c.n);
  for (Index i = 0; i < c.n; ++i)
    for (Index j = 0; j < c.n; ++j) out[i] += c.at(i, j);
  return out;
}

inline std::vector<Scalar> column_sums(const Coupling& c) {
  std::vector<Scalar> out(c.n);
  for (Index i = 0; i < c.n; ++i)
    for (Index j = 0; j < c.n; ++j) out[j] += c.at(i, j);
  return out;
}

// Mass the coupling places on pairs at distance >= eps.
inline Scalar mass_at_or_beyond(const FiniteMetricSpace& space, const Coupling& c, const Scalar& eps) {
  Scalar s;
  for (Index i = 0; i < c.n; ++i)
    for (Index j = 0; j < c.n; ++j)
      if (space.d(i, j) >= eps) s += c.at(i, j);
  return s;
}

struct ProhorovDecision {
  bool holds = false;
  std::optional<Coupling> coupling;      // when holds
  std::optional<IndexSet> violating_set;  // when !holds
  // true: mu(A) > nu(U_eps(A)) + eps; false: the roles of mu and nu swapped.
  bool violation_in_first = true;
};

struct ProhorovValue {
  Scalar value;
  // Whether prohorov_le(value) holds. With open enlargements the infimum can
  // fail to be attained when it sits on a distance value.
  bool attained = true;
};

namespace detail {

inline void require_masses(const FiniteMetricSpace& space, std::span<const Scalar> mu, std::span<const Scalar> nu) {
  if (mu.size() != space.size() || nu.size() != space.size())
    throw PreconditionError("mass vectors do not match the space dimension");
  for (auto m : {mu, nu}) {
    for (const auto& v : m)
      if (v.is_negative()) throw PreconditionError("negative mass entry");
    if (total_mass(m) != Scalar(1)) throw PreconditionError("mass vector does not sum to 1");
  }
}

inline Scalar tv_excess(std::span<const Scalar> mu, std::span<const Scalar> nu) {
  Scalar s;
  for (Index i = 0; i < mu.size(); ++i)
    if (mu[i] > nu[i]) s += mu[i] - nu[i];
  return s;
}

struct TransportResult {
  Scalar value;
  std::vector<Scalar> flow;  // n x n, indexed by original points
  IndexSet cut;              // source-side points of mu (a minimizing A)
};

// Max transport from mu to nu along pairs with d < threshold (strict) or
// d <= threshold. By max-flow/min-cut its value is
//   min_A [ mu(X \ A) + nu(U(A)) ],
// so value >= 1 - eps exactly when mu(A) <= nu(U(A)) + eps for every A.
inline TransportResult max_transport(const FiniteMetricSpace& space, std::span<const Scalar> mu,
                                     std::span<const Scalar> nu, const Scalar& threshold, bool strict) {
  const std::size_t n = space.size();
  const IndexSet left = support(mu);
  const IndexSet right = support(nu);
  const std::size_t source = 0, sink = 1 + left.size() + right.size();
  MaxFlow mf(sink + 1);
  for (std::size_t a = 0; a < left.size(); ++a) mf.add_arc(source, 1 + a, mu[left[a]]);
  for (std::size_t b = 0; b < right.size(); ++b) mf.add_arc(1 + left.size() + b, sink, nu[right[b]]);
  std::vector<std::tuple<std::size_t, Index, Index>> mids;
  for (std::size_t a = 0; a < left.size(); ++a)
    for (std::size_t b = 0; b < right.size(); ++b) {
      const auto& d = space.d(left[a], right[b]);
      if (strict ? d < threshold : d <= threshold)
        mids.emplace_back(mf.add_unbounded_arc(1 + a, 1 + left.size() + b), left[a], right[b]);
    }
  TransportResult out;
  out.value = mf.run(source, sink);
  out.flow.assign(n * n, Scalar(0));
  for (const auto& [arc, i, j] : mids) out.flow[i * n + j] = mf.flow_on(arc);
  const auto side = mf.source_side(source);
  for (std::size_t a = 0; a < left.size(); ++a)
    if (side[1 + a]) out.cut.push_back(left[a]);
  return out;
}

// Completes a partial plan with a product of the residual marginals.
inline Coupling complete_coupling(std::size_t n, std::vector<Scalar> flow, std::span<const Scalar> mu,
                                  std::span<const Scalar> nu) {
  std::vector<Scalar> r(mu.begin(), mu.end()), s(nu.begin(), nu.end());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      r[i] -= flow[i * n + j];
      s[j] -= flow[i * n + j];
    }
  const Scalar rest = total_mass(r);
  if (rest.is_positive())
    for (Index i = 0; i < n; ++i)
      if (r[i].is_positive())
        for (Index j = 0; j < n; ++j)
          if (s[j].is_positive()) flow[i * n + j] += r[i] * s[j] / rest;
  return {n, std::move(flow)};
}

inline Coupling diagonal_coupling(std::span<const Scalar> mu, std::span<const Scalar> nu) {
  const std::size_t n = mu.size();
  std::vector<Scalar> flow(n * n);
  for (Index i = 0; i < n; ++i) flow[i * n + i] = min(mu[i], nu[i]);
  return complete_coupling(n, std::move(flow), mu, nu);
}

}  // namespace detail

// Decides mu(A) <= nu(U_eps(A)) + eps and nu(A) <= mu(U_eps(A)) + eps for every
// index set A, with strict open enlargements. Positive answers carry a
// coupling that puts at most eps mass on pairs at distance >= eps; negative
// answers carry a violating set.
inline ProhorovDecision prohorov_le(const FiniteMetricSpace& space, std::span<const Scalar> mu,
                                    std::span<const Scalar> nu, const Scalar& eps) {
  detail::require_masses(space, mu, nu);
  if (!eps.is_positive()) throw PreconditionError("prohorov_le: eps must be positive");
  ProhorovDecision out;
  // Total variation bounds d_P: mu(A) - nu(U(A)) <= mu(A) - nu(A).
  if (detail::tv_excess(mu, nu) <= eps) {
    out.holds = true;
    out.coupling = detail::diagonal_coupling(mu, nu);
    return out;
  }
  const Scalar need = Scalar(1) - eps;
  auto forward = detail::max_transport(space, mu, nu, eps, true);
  if (forward.value < need) {
    out.violating_set = std::move(forward.cut);
    out.violation_in_first = true;
    return out;
  }
  auto backward = detail::max_transport(space, nu, mu, eps, true);
  if (backward.value < need) {
    out.violating_set = std::move(backward.cut);
    out.violation_in_first = false;
    return out;
  }
  out.holds = true;
  out.coupling = detail::complete_coupling(space.size(), std::move(forward.flow), mu, nu);
  return out;
}

// Decides d_P(mu, nu) <= eps for the infimum d_P (eps >= 0). This differs from
// prohorov_le(eps) only when the infimum equals eps and is not attained.
inline bool prohorov_within(const FiniteMetricSpace& space, std::span<const Scalar> mu, std::span<const Scalar> nu,
                            const Scalar& eps) {
  detail::require_masses(space, mu, nu);
  if (eps.is_negative()) throw PreconditionError("prohorov_within: eps must be >= 0");
  if (detail::tv_excess(mu, nu) <= eps) return true;
  // For delta slightly above eps the admissible pairs are exactly d <= eps.
  const Scalar need = Scalar(1) - eps;
  return detail::max_transport(space, mu, nu, eps, false).value >= need &&
         detail::max_transport(space, nu, mu, eps, false).value >= need;
}

// Exact Prohorov distance. Between consecutive distance values r_k < r_{k+1}
// the admissible pairs for eps in (r_k, r_{k+1}] are those with d <= r_k, so
// feasibility there reads eps >= 1 - F_k with F_k the max transport on that
// graph. Hence d_P = min_k max(1 - F_k, r_k); the two terms are monotone in
// opposite directions, so the minimum sits at their crossing and is found by
// binary search over the sorted distance values.
inline ProhorovValue prohorov_distance(const FiniteMetricSpace& space, std::span<const Scalar> mu,
                                       std::span<const Scalar> nu) {
  detail::require_masses(space, mu, nu);
  if (std::equal(mu.begin(), mu.end(), nu.begin())) return {Scalar(0), true};

  std::vector<Scalar> radii{Scalar(0)};
  for (Index i : support(mu))
    for (Index j : support(nu)) radii.push_back(space.d(i, j));
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

  auto gap = [&](std::size_t k) {
    const auto f = detail::max_transport(space, mu, nu, radii[k], false).value;
    return Scalar(1) - f;
  };
  // Smallest k with radii[k] >= gap(k).
  std::size_t lo = 0, hi = radii.size();
  std::vector<std::optional<Scalar>> cache(radii.size());
  auto gap_at = [&](std::size_t k) -> const Scalar& {
    if (!cache[k]) cache[k] = gap(k);
    return *cache[k];
  };
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (radii[mid] >= gap_at(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  Scalar value;
  if (lo == radii.size()) {
    value = gap_at(radii.size() - 1);
  } else {
    value = radii[lo];
    if (lo > 0) value = min(value, gap_at(lo - 1));
  }
  ProhorovValue out;
  out.value = value;
  out.attained = value.is_zero() || prohorov_le(space, mu, nu, value).holds;
  return out;
}

// ---------------------------------------------------------------------------
// Partition bound
// ---------------------------------------------------------------------------

struct PartitionProhorovBound {
  Scalar bound;            // eps + eps'
  Scalar block_mass_gap;   // sum_A |mu(A) - nu(A)|
  Scalar uncovered_mass;   // mu(X \ U)
  Scalar max_block_diameter;
  bool prohorov_le_holds = false;
};

// If every block has diameter <= eps, the uncovered part has mu-mass <= eps
// and sum_A |mu(A) - nu(A)| <= eps', then d_P(mu, nu) <= eps + eps'. The
// conclusion is re-checked with the exact decision procedure.
inline PartitionProhorovBound partition_prohorov_bound(const FiniteMMSpace& x, const PartitionFamily& blocks,
                                                       std::span<const Scalar> nu, const Scalar& eps,
                                                       const Scalar& eps_prime) {
  require_valid(blocks, x.size(), "partition");
  if (!eps.is_positive()) throw PreconditionError("partition bound: eps must be positive");
  if (eps_prime.is_negative()) throw PreconditionError("partition bound: eps' must be >= 0");
  PartitionProhorovBound out;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Scalar dm = diameter(x.metric, blocks.blocks[b]);
    if (dm > eps) throw PreconditionError("block " + std::to_string(b) + " has diameter " + dm.str() + " > eps");
    out.max_block_diameter = max(out.max_block_diameter, dm);
    out.block_mass_gap += abs(mass_of(x.mass, blocks.blocks[b]) - mass_of(nu, blocks.blocks[b]));
  }
  out.uncovered_mass = Scalar(1) - mass_of(x.mass, blocks.union_set());
  if (out.uncovered_mass > eps)
    throw PreconditionError("uncovered mass " + out.uncovered_mass.str() + " exceeds eps");
  if (out.block_mass_gap > eps_prime)
    throw PreconditionError("block mass discrepancy " + out.block_mass_gap.str() + " exceeds eps'");
  out.bound = eps + eps_prime;
  if (!prohorov_within(x.metric, x.mass, nu, out.bound))
    throw PostconditionError("partition bound not confirmed by the exact decision procedure");
  out.prohorov_le_holds = prohorov_le(x.metric, x.mass, nu, out.bound).holds;
  // Open enlargements need a strict margin: holds whenever eps' > 0 or every
  // block is strictly smaller than eps.
  if ((eps_prime.is_positive() || out.max_block_diameter < eps) && !out.prohorov_le_holds)
    throw PostconditionError("partition bound not confirmed by prohorov_le");
  return out;
}

// Ratio form: 1 - eps' <= nu(A)/mu(A) <= 1 + eps' on every block with
// mu(A) > 0 gives sum_A |mu(A) - nu(A)| <= eps' * mu(U) <= eps'. Blocks with
// mu(A) = 0 must carry no nu-mass.
inline PartitionProhorovBound partition_prohorov_bound_from_ratios(const FiniteMMSpace& x,
                                                                   const PartitionFamily& blocks,
                                                                   std::span<const Scalar> nu, const Scalar& eps,
                                                                   const Scalar& eps_prime) {
  require_valid(blocks, x.size(), "partition");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Scalar m = mass_of(x.mass, blocks.blocks[b]);
    const Scalar v = mass_of(nu, blocks.blocks[b]);
    if (m.is_zero()) {
      if (!v.is_zero()) throw PreconditionError("block " + std::to_string(b) + " has mu-mass 0 but positive nu-mass");
      continue;
    }
    const Scalar ratio = v / m;
    if (ratio < Scalar(1) - eps_prime || ratio > Scalar(1) + eps_prime)
      throw PreconditionError("block " + std::to_string(b) + " has mass ratio " + ratio.str() + " outside [1-eps', 1+eps']");
  }
  return partition_prohorov_bound(x, blocks, nu, eps, eps_prime);
}

}  // namespace mmdom
