#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmdom/boxorder.hpp"
#include "mmdom/construct/covering.hpp"
#include "mmdom/construct/product.hpp"
#include "mmdom/construct/scheme.hpp"
#include "mmdom/construct/transfer.hpp"
#include "mmdom/measures.hpp"
#include "mmdom/parallel.hpp"

namespace mmdom {

enum class RepresentativeMode { direct, transfer };

inline const char* to_string(RepresentativeMode m) { return m == RepresentativeMode::direct ? "direct" : "transfer"; }

namespace detail {

// Lemma P with block diameter/uncovered mass <= eps and ratio slack eps'.
// Returns nullopt when its preconditions do not hold on this data.
inline std::optional<Scalar> lemma_p_bound(const FiniteMMSpace& y, const PartitionFamily& blocks,
                                           std::span<const Scalar> push, const Scalar& eps, const Scalar& eps_prime) {
  try {
    return partition_prohorov_bound_from_ratios(y, blocks, push, eps, eps_prime).bound;
  } catch (const PreconditionError&) {
    return std::nullopt;
  }
}

// Tries each representative in order; returns (rep, Psi, transfer) on the
// first success.
struct Assignment {
  std::size_t rep;
  MapWitness psi;
  NeighborhoodTransfer transfer;
};

inline std::optional<Assignment> find_representative(const FiniteMMSpace& z, std::span<const FiniteMMSpace> family,
                                                     const std::vector<std::size_t>& reps,
                                                     const std::vector<PartitionFamily>& blocks, const Scalar& eps,
                                                     const SearchOptions& opts) {
  for (auto r : reps) {
    auto iso = min_mm_iso(z, family[r], opts);
    try {
      auto nb = neighborhood_transfer(family[r], blocks[r], eps, z, iso.certificate.witness);
      return Assignment{r, iso.certificate.witness, std::move(nb)};
    } catch (const TransferError&) {
    }
  }
  return std::nullopt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// One-shot eps-dominator
// ---------------------------------------------------------------------------

struct EpsDominatorMember {
  std::size_t representative = 0;   // itself when not transferred
  PartitionFamily blocks;
  MapWitness map;                   // X -> Y, full domain
  Scalar additive_defect;
  Scalar max_mass_ratio;            // f_* mu_X(A) / mu_Y(A)
  Scalar cover_mass;                // mu_Y(U)
  std::optional<Scalar> lemma_p_bound;
  DominationCertificate certificate;  // eps_zero at 5 eps
  bool verified = false;
};

struct EpsDominator {
  FiniteMMSpace space;
  Scalar eps;
  RepresentativeMode mode = RepresentativeMode::direct;
  std::vector<std::size_t> representatives;
  std::vector<EpsDominatorMember> members;
};

inline EpsDominator eps_dominator(std::span<const FiniteMMSpace> family, const Scalar& eps,
                                  RepresentativeMode mode = RepresentativeMode::direct, const SearchOptions& opts = {},
                                  std::size_t point_cap = kDefaultPointCap) {
  if (family.empty()) throw PreconditionError("eps_dominator: empty family");
  if (!eps.is_positive() || !(eps < Scalar(1))) throw PreconditionError("eps_dominator: eps must lie in (0, 1)");
  for (std::size_t m = 0; m < family.size(); ++m) require_valid(family[m], "member " + std::to_string(m));

  std::vector<PartitionFamily> blocks;
  for (const auto& y : family) blocks.push_back(refine_level(y, PartitionFamily{}, eps));

  std::vector<std::size_t> reps;
  std::vector<std::optional<detail::Assignment>> assigned(family.size());
  for (std::size_t m = 0; m < family.size(); ++m) {
    if (mode == RepresentativeMode::transfer && !reps.empty())
      assigned[m] = detail::find_representative(family[m], family, reps, blocks, eps, opts);
    if (!assigned[m]) reps.push_back(m);
  }

  std::vector<Factor> factors;
  for (auto r : reps) factors.push_back({family[r], blocks[r]});
  auto prod = product_dominator(factors, point_cap);

  EpsDominator out;
  out.eps = eps;
  out.mode = mode;
  out.representatives = reps;
  out.space = prod.space;
  const Scalar five = Scalar(5) * eps;
  const auto& x = out.space;
  out.members = parallel_indexed(family.size(), opts.threads, [&](std::size_t m) {
    EpsDominatorMember mem;
    const auto& y = family[m];
    if (assigned[m]) {
      const auto& as = *assigned[m];
      const auto rep_slot = static_cast<std::size_t>(std::find(reps.begin(), reps.end(), as.rep) - reps.begin());
      auto t = transfer(family[as.rep], blocks[as.rep], eps, y, as.psi, x, prod.maps[rep_slot]);
      mem.representative = as.rep;
      mem.blocks = t.neighborhood.blocks_z;
      mem.map = t.h_z;
    } else {
      const auto rep_slot = static_cast<std::size_t>(std::find(reps.begin(), reps.end(), m) - reps.begin());
      mem.representative = m;
      mem.blocks = blocks[m];
      mem.map = prod.maps[rep_slot];
    }
    const auto push = pushforward(mem.map, x.mass, y.size());
    mem.additive_defect = additive_defect(x.metric, y.metric, mem.map);
    mem.cover_mass = mass_of(y.mass, mem.blocks.union_set());
    for (const auto& a : mem.blocks.blocks) mem.max_mass_ratio = max(mem.max_mass_ratio, mass_of(push, a) / mass_of(y.mass, a));
    mem.lemma_p_bound = detail::lemma_p_bound(y, mem.blocks, push, Scalar(2) * eps, Scalar(3) * eps);
    mem.certificate = {mem.map, DominationMode::eps_zero, five};
    mem.verified = verify_domination(x, y, mem.certificate);
    if (!mem.verified) throw PostconditionError("eps_dominator: member " + std::to_string(m) + " certificate fails");
    return mem;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Iterated construction
// ---------------------------------------------------------------------------

struct SequenceOptions {
  RepresentativeMode mode = RepresentativeMode::direct;
  std::size_t point_cap = kDefaultPointCap;
  SearchOptions search;
};

struct StageMemberCertificate {
  std::size_t member = 0;
  MapWitness map;                      // f_{Y,n}
  Scalar additive_defect;              // <= 3 eps_n
  bool image_in_cover = false;
  bool pushforward_identity = false;
  std::optional<Scalar> lemma_p_bound;
  DominationCertificate domination;    // eps_zero at 3 eps_n
  bool verified = false;
};

struct Stage {
  std::size_t index = 1;
  Scalar eps;
  FiniteMMSpace space;
  std::vector<StageMemberCertificate> members;
  bool verified = false;
};

struct StepCertificate {
  std::size_t from = 1;                // k; the step is X_k -> X_{k+1}
  Scalar refine_eps;                   // 3 eps_k
  Scalar pad_eps;
  Scalar pad_eps_prime;
  Scalar refine_bound;                 // 27 eps_k
  Scalar pad_bound;                    // 21 eps_k
  Scalar total_bound;                  // 48 eps_k
  MmIsoCertificate projection;         // pi: X'_k -> X_k
  bool projection_ok = false;
  MmIsoCertificate inclusion;          // iota: X'_k -> X_{k+1}
  bool inclusion_ok = false;
  std::size_t intermediate_size = 0;   // |X'_k|
  std::vector<std::size_t> transferred;
  bool verified = false;
};

struct DominatorTrace {
  std::vector<Scalar> eps;
  RepresentativeMode mode = RepresentativeMode::direct;
  std::vector<std::size_t> representatives;
  std::vector<std::optional<std::size_t>> representative_of;  // for transferred members
  std::vector<PartitionScheme> schemes;
  std::vector<Stage> stages;
  std::vector<StepCertificate> steps;
  bool truncated = false;
  std::string truncation_reason;

  bool verified() const {
    for (const auto& s : stages)
      if (!s.verified) return false;
    for (const auto& s : steps)
      if (!s.verified) return false;
    return true;
  }
};

namespace detail {

template <class F>
decltype(auto) at_step(std::size_t k, F&& fn) {
  const std::string tag = "step " + std::to_string(k) + ": ";
  try {
    return fn();
  } catch (const HypothesisError& e) {
    throw HypothesisError(e.hypothesis(), tag + e.detail());
  } catch (const TransferError& e) {
    throw TransferError(tag + e.what());
  } catch (const PreconditionError& e) {
    throw PreconditionError(tag + e.what());
  } catch (const PostconditionError& e) {
    throw PostconditionError(tag + e.what());
  }
}

inline StageMemberCertificate certify_stage_member(const FiniteMMSpace& x, const FiniteMMSpace& y, std::size_t member,
                                                   const MapWitness& f, const PartitionFamily& blocks,
                                                   const Scalar& eps_n) {
  StageMemberCertificate c;
  c.member = member;
  c.map = f;
  const Scalar three = Scalar(3) * eps_n;
  c.additive_defect = additive_defect(x.metric, y.metric, f);
  const IndexSet u = blocks.union_set();
  c.image_in_cover = true;
  for (Index i = 0; i < x.size(); ++i) c.image_in_cover = c.image_in_cover && contains(u, f(i));
  c.pushforward_identity = pushforward_matches_blocks(x, y, f, blocks);
  const auto push = pushforward(f, x.mass, y.size());
  c.lemma_p_bound = lemma_p_bound(y, blocks, push, eps_n, eps_n);
  c.domination = {f, DominationMode::eps_zero, three};
  // Lemma P settles the Prohorov part when it applies; otherwise the exact
  // decision procedure does.
  const bool prohorov_ok = (c.lemma_p_bound && *c.lemma_p_bound <= three) || prohorov_within(y.metric, push, y.mass, three);
  c.verified = c.additive_defect <= three && c.image_in_cover && c.pushforward_identity && prohorov_ok &&
               verify_domination(x, y, c.domination);
  return c;
}

}  // namespace detail

// eps_pad: 7 eps_k when that is below 1; otherwise the least admissible value
// max(eps_k, worst overload) when it is below 1.
inline Scalar pad_eps_for(const Scalar& eps_k, const Scalar& overload) {
  const Scalar seven = Scalar(7) * eps_k;
  if (seven < Scalar(1)) return seven;
  Scalar e = max(eps_k, overload);
  if (!(e < Scalar(1))) throw PreconditionError("no padding eps below 1 accommodates overload " + overload.str());
  return e;
}

inline DominatorTrace dominator_sequence(std::span<const FiniteMMSpace> family, std::span<const Scalar> eps_seq,
                                         std::size_t stages, const SequenceOptions& opts = {}) {
  if (family.empty()) throw PreconditionError("dominator_sequence: empty family");
  if (stages == 0) throw PreconditionError("dominator_sequence: need at least one stage");
  if (eps_seq.size() < stages) throw PreconditionError("dominator_sequence: eps sequence shorter than the stage count");
  require_decreasing_eps(eps_seq.first(stages));
  const std::size_t members = family.size();

  DominatorTrace trace;
  trace.mode = opts.mode;
  trace.eps.assign(eps_seq.begin(), eps_seq.begin() + static_cast<std::ptrdiff_t>(stages));
  trace.representative_of.assign(members, std::nullopt);
  trace.schemes.resize(members);
  for (std::size_t m = 0; m < members; ++m) trace.schemes[m] = build_scheme(family[m], trace.eps, stages);

  // Transfer mode picks representatives against level-2 partitions; a
  // transferred member joins at stage 2 with the transferred family as its
  // level 2 and its own nested levels afterwards.
  std::vector<std::optional<detail::Assignment>> assigned(members);
  for (std::size_t m = 0; m < members; ++m) {
    if (opts.mode == RepresentativeMode::transfer && stages >= 2 && !trace.representatives.empty()) {
      std::vector<PartitionFamily> level2(members);
      for (auto r : trace.representatives) level2[r] = trace.schemes[r].level(2);
      assigned[m] = detail::find_representative(family[m], family, trace.representatives, level2, trace.eps[1],
                                                opts.search);
    }
    if (assigned[m]) {
      trace.representative_of[m] = assigned[m]->rep;
      trace.schemes[m] = extend_scheme(family[m], assigned[m]->transfer.blocks_z, 2, trace.eps[1],
                                       std::span<const Scalar>(trace.eps).subspan(2));
    } else {
      trace.representatives.push_back(m);
    }
  }

  std::vector<std::size_t> present = trace.representatives;
  std::vector<Factor> factors;
  for (auto r : present) factors.push_back({family[r], trace.schemes[r].level(1)});
  if (product_size(factors) > opts.point_cap) {
    trace.truncated = true;
    trace.truncation_reason = "stage 1 exceeds the point cap";
    return trace;
  }
  auto prod = detail::at_step(1, [&] { return product_dominator(factors, opts.point_cap); });
  FiniteMMSpace x = prod.space;
  std::vector<std::optional<MapWitness>> f(members);
  for (std::size_t i = 0; i < present.size(); ++i) f[present[i]] = prod.maps[i];

  auto certify = [&](std::size_t n) {
    Stage st;
    st.index = n;
    st.eps = trace.eps[n - 1];
    st.space = x;
    st.members = parallel_indexed(present.size(), opts.search.threads, [&](std::size_t i) {
      const auto m = present[i];
      return detail::certify_stage_member(x, family[m], m, *f[m], trace.schemes[m].level(n), st.eps);
    });
    st.verified = std::all_of(st.members.begin(), st.members.end(), [](const auto& c) { return c.verified; });
    trace.stages.push_back(std::move(st));
  };
  certify(1);

  for (std::size_t k = 1; k < stages; ++k) {
    const Scalar& ek = trace.eps[k - 1];
    const Scalar& ek1 = trace.eps[k];
    StepCertificate step;
    step.from = k;
    step.refine_eps = Scalar(3) * ek;
    step.refine_bound = Scalar(27) * ek;
    step.pad_bound = Scalar(21) * ek;
    step.total_bound = step.refine_bound + step.pad_bound;

    std::vector<RefineMember> rmembers;
    for (auto m : present)
      rmembers.push_back({family[m], *f[m], trace.schemes[m].level(k), trace.schemes[m].level(k + 1)});
    const auto predicted = refine_size(x, rmembers);
    if (predicted > opts.point_cap) {
      trace.truncated = true;
      trace.truncation_reason = "refinement at step " + std::to_string(k) + " needs " + std::to_string(predicted) + " points";
      break;
    }
    auto ref = detail::at_step(k, [&] { return refine(x, rmembers, step.refine_eps, ek1, opts.point_cap); });
    step.projection = ref.projection_check.certificate;
    step.projection_ok = ref.projection_check.ok && step.projection.eps <= Scalar(9) * ek;
    step.intermediate_size = ref.space.size();

    std::vector<std::optional<MapWitness>> g(members);
    for (std::size_t i = 0; i < present.size(); ++i) g[present[i]] = ref.maps[i];
    std::vector<std::size_t> next = present;
    if (k == 1)
      for (std::size_t m = 0; m < members; ++m) {
        if (!assigned[m]) continue;
        const auto& as = *assigned[m];
        const auto& rep_level = trace.schemes[as.rep].level(2);
        auto t = detail::at_step(k, [&] { return transfer(family[as.rep], rep_level, ek1, family[m], as.psi, ref.space, *g[as.rep]); });
        g[m] = t.h_z;
        next.push_back(m);
        step.transferred.push_back(m);
      }
    std::sort(next.begin(), next.end());

    std::vector<PadMember> pmembers;
    Scalar overload, defect;
    for (auto m : next) {
      const auto& y = family[m];
      const auto& blocks = trace.schemes[m].level(k + 1);
      const auto push = pushforward(*g[m], ref.space.mass, y.size());
      for (const auto& a : blocks.blocks) overload = max(overload, mass_of(push, a) / mass_of(y.mass, a) - Scalar(1));
      defect = max(defect, additive_defect(ref.space.metric, y.metric, *g[m]));
      pmembers.push_back({y, *g[m], blocks});
    }
    const auto pad_predicted = pad_size(ref.space, pmembers);
    if (pad_predicted > opts.point_cap) {
      trace.truncated = true;
      trace.truncation_reason = "padding at step " + std::to_string(k) + " needs " + std::to_string(pad_predicted) + " points";
      break;
    }
    step.pad_eps = detail::at_step(k, [&] { return pad_eps_for(ek, overload); });
    step.pad_eps_prime = defect;
    auto pad = detail::at_step(k, [&] { return pad_extend(ref.space, pmembers, step.pad_eps, defect, opts.point_cap); });
    step.inclusion = pad.inclusion_check.certificate;
    step.inclusion_ok = pad.inclusion_check.ok && Scalar(3) * step.pad_eps <= step.pad_bound;
    step.verified = step.projection_ok && step.inclusion_ok && step.total_bound == Scalar(48) * ek &&
                    defect <= Scalar(3) * ek1;
    trace.steps.push_back(std::move(step));

    x = pad.space;
    present = next;
    for (std::size_t i = 0; i < present.size(); ++i) f[present[i]] = pad.maps[i];
    certify(k + 1);
  }
  return trace;
}

// Coverings derived from an eps-dominator: the certificates are <_{5eps}
// witnesses, and the covering family of X is its profile at 5eps.
struct DominatorCovering {
  Scalar eps;                      // 5 eps of the dominator
  PartitionFamily covering;
  std::vector<DerivedCovering> members;
};

inline DominatorCovering derive_covering_from(const EpsDominator& d, std::span<const FiniteMMSpace> family) {
  if (family.size() != d.members.size()) throw PreconditionError("derive_covering_from: family size mismatch");
  DominatorCovering out;
  out.eps = Scalar(5) * d.eps;
  out.covering.blocks = member_profile(d.space, out.eps).blocks;
  std::sort(out.covering.blocks.begin(), out.covering.blocks.end());
  std::vector<CoveringWitness> w;
  for (std::size_t m = 0; m < family.size(); ++m) w.push_back({family[m], d.members[m].map});
  out.members = derive_covering(d.space, out.covering, w, out.eps);
  return out;
}

}  // namespace mmdom
