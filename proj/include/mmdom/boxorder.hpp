#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "mmdom/core.hpp"
#include "mmdom/measures.hpp"
#include "mmdom/parallel.hpp"

namespace mmdom {

struct SearchOptions {
  // Cap on complete maps examined (enumerations) or search nodes visited
  // (backtracking).
  std::uint64_t max_maps = 2'000'000;
  unsigned threads = 1;
};

enum class Decision { holds, refuted, indeterminate };

inline const char* to_string(Decision d) {
  switch (d) {
    case Decision::holds: return "holds";
    case Decision::refuted: return "refuted";
    case Decision::indeterminate: return "indeterminate";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// eps-mm-isomorphisms
// ---------------------------------------------------------------------------

struct MmIsoBreakdown {
  Scalar mass_defect;  // 1 - mu_X(domain)
  Scalar distortion;   // on domain x domain
  Scalar prohorov;     // d_P(f_* mu_X, mu_Y), exact infimum
};

inline Scalar max_component(const MmIsoBreakdown& b) { return max(b.mass_defect, max(b.distortion, b.prohorov)); }

// eps is the tightest value the witness certifies: the max of the breakdown.
struct MmIsoCertificate {
  MapWitness witness;
  Scalar eps;
  MmIsoBreakdown breakdown;
};

struct MmIsoCheck {
  bool ok = false;
  int failed_condition = 0;  // 1 mass, 2 distortion, 3 Prohorov; 0 when ok
  MmIsoCertificate certificate;
};

inline MmIsoBreakdown mm_iso_breakdown(const FiniteMMSpace& x, const FiniteMMSpace& y, const MapWitness& f) {
  require_valid_map(f, x.size(), y.size());
  const IndexSet dom = f.domain_or_all();
  MmIsoBreakdown b;
  b.mass_defect = Scalar(1) - mass_of(x.mass, dom);
  b.distortion = distortion(x.metric, y.metric, f, dom);
  const auto push = pushforward(f, x.mass, y.size());
  b.prohorov = prohorov_distance(y.metric, push, y.mass).value;
  return b;
}

// Checks the three conditions of an eps-mm-isomorphism with the domain stored
// in f (whole source when absent).
inline MmIsoCheck verify_mm_iso(const FiniteMMSpace& x, const FiniteMMSpace& y, const MapWitness& f,
                                const Scalar& eps) {
  MmIsoCheck out;
  out.certificate.witness = f;
  out.certificate.breakdown = mm_iso_breakdown(x, y, f);
  out.certificate.eps = max_component(out.certificate.breakdown);
  const auto& b = out.certificate.breakdown;
  if (b.mass_defect > eps)
    out.failed_condition = 1;
  else if (b.distortion > eps)
    out.failed_condition = 2;
  else if (b.prohorov > eps)
    out.failed_condition = 3;
  out.ok = out.failed_condition == 0;
  return out;
}

namespace detail {

struct Subset {
  std::uint64_t mask;
  Scalar mass;
  IndexSet points;
};

// All subsets of the source ordered by decreasing mass, ties by mask.
inline std::vector<Subset> subsets_by_mass(std::span<const Scalar> mass) {
  const std::size_t n = mass.size();
  if (n > 20) throw PreconditionError("domain search is limited to 20 source points");
  std::vector<Subset> out;
  out.reserve(std::size_t{1} << n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    Subset s{mask, Scalar(0), {}};
    for (Index i = 0; i < n; ++i)
      if (mask >> i & 1) {
        s.mass += mass[i];
        s.points.push_back(i);
      }
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [](const Subset& a, const Subset& b) { return a.mass > b.mass; });
  return out;
}

// Lexicographic odometer over maps with f(0) fixed; returns false when done.
inline bool next_map(std::vector<Index>& f, std::size_t targets) {
  for (std::size_t pos = f.size(); pos-- > 1;) {
    if (++f[pos] < targets) return true;
    f[pos] = 0;
  }
  return false;
}

struct SubtreeOutcome {
  std::uint64_t examined = 0;
  bool truncated = false;
};

}  // namespace detail

struct MinMmIso {
  Scalar eps;
  MmIsoCertificate certificate;
  bool optimal = true;
  std::uint64_t maps_examined = 0;
};

// Minimum eps over all maps X -> Y and all non-exceptional domains such that
// the map is an eps-mm-isomorphism. Witness ties are broken towards the
// lexicographically least map, then the heaviest domain.
inline MinMmIso min_mm_iso(const FiniteMMSpace& x, const FiniteMMSpace& y, const SearchOptions& opts = {}) {
  require_valid(x, "source space");
  require_valid(y, "target space");
  const std::size_t n = x.size(), m = y.size();
  const auto subsets = detail::subsets_by_mass(x.mass);

  struct Partial {
    detail::SubtreeOutcome outcome;
    std::optional<MmIsoCertificate> best;
  };
  auto search = [&](std::size_t first) {
    Partial p;
    std::map<std::vector<Scalar>, Scalar> prohorov_memo;
    std::vector<Index> f(n, 0);
    f[0] = first;
    do {
      if (p.outcome.examined >= opts.max_maps) {
        p.outcome.truncated = true;
        break;
      }
      ++p.outcome.examined;
      MapWitness w{f, std::nullopt};
      auto push = pushforward(w, x.mass, m);
      auto it = prohorov_memo.find(push);
      if (it == prohorov_memo.end())
        it = prohorov_memo.emplace(push, prohorov_distance(y.metric, push, y.mass).value).first;
      const Scalar& dp = it->second;
      if (p.best && dp >= p.best->eps) continue;
      for (const auto& s : subsets) {
        Scalar lower = max(Scalar(1) - s.mass, dp);
        if (p.best && lower >= p.best->eps) break;
        Scalar dis = distortion(x.metric, y.metric, w, s.points);
        Scalar val = max(lower, dis);
        if (!p.best || val < p.best->eps) {
          MmIsoCertificate c;
          c.witness = MapWitness{f, s.points};
          c.breakdown = {Scalar(1) - s.mass, dis, dp};
          c.eps = val;
          p.best = std::move(c);
        }
      }
    } while (detail::next_map(f, m));
    return p;
  };

  auto parts = parallel_indexed(m, opts.threads, search);
  MinMmIso out;
  bool any = false;
  std::uint64_t used = 0;
  for (auto& p : parts) {
    used += p.outcome.examined;
    if (p.best && (!any || p.best->eps < out.eps)) {
      any = true;
      out.eps = p.best->eps;
      out.certificate = *p.best;
    }
    if (p.outcome.truncated || used > opts.max_maps) {
      out.optimal = false;
      break;
    }
  }
  out.maps_examined = used;
  if (!any) throw BudgetExceeded("min_mm_iso: no map examined within budget");
  return out;
}

struct BoxBounds {
  Scalar lower;
  Scalar upper;
  MinMmIso forward;   // X -> Y
  MinMmIso backward;  // Y -> X
};

// Sandwich for the box distance through eps-mm-isomorphisms: any eps-mm-iso
// gives box <= 3 eps, and if no 3e-mm-iso exists in one direction then
// box >= e. With exact minima eps*_XY, eps*_YX this yields
//   max(eps*_XY, eps*_YX)/3 <= box(X, Y) <= 3 min(eps*_XY, eps*_YX).
// A direction whose search was truncated contributes nothing to the lower
// bound.
inline BoxBounds box_bounds(const FiniteMMSpace& x, const FiniteMMSpace& y, const SearchOptions& opts = {}) {
  BoxBounds out{Scalar(0), Scalar(0), min_mm_iso(x, y, opts), min_mm_iso(y, x, opts)};
  out.upper = Scalar(3) * min(out.forward.eps, out.backward.eps);
  if (out.forward.optimal) out.lower = max(out.lower, out.forward.eps / Scalar(3));
  if (out.backward.optimal) out.lower = max(out.lower, out.backward.eps / Scalar(3));
  return out;
}

// ---------------------------------------------------------------------------
// Lipschitz order
// ---------------------------------------------------------------------------

enum class DominationMode { exact, eps, eps_zero };

inline const char* to_string(DominationMode m) {
  switch (m) {
    case DominationMode::exact: return "exact";
    case DominationMode::eps: return "eps";
    case DominationMode::eps_zero: return "eps_zero";
  }
  return "?";
}

struct DominationCertificate {
  MapWitness witness;  // X -> Y
  DominationMode mode = DominationMode::exact;
  Scalar eps;          // 0 for exact
};

struct DominationResult {
  Decision decision = Decision::indeterminate;
  std::optional<DominationCertificate> certificate;
  std::uint64_t work = 0;  // nodes or maps examined
};

// Re-checks a certificate from scratch.
inline bool verify_domination(const FiniteMMSpace& x, const FiniteMMSpace& y, const DominationCertificate& c) {
  require_valid_map(c.witness, x.size(), y.size());
  if (c.mode == DominationMode::exact)
    return is_lipschitz(x.metric, y.metric, c.witness) && pushforward(c.witness, x.mass, y.size()) == y.mass;
  if (c.mode == DominationMode::eps_zero && c.witness.domain && c.witness.domain->size() != x.size()) return false;
  const IndexSet dom = c.witness.domain_or_all();
  return mass_of(x.mass, dom) >= Scalar(1) - c.eps &&
         additive_defect(x.metric, y.metric, c.witness, dom) <= c.eps &&
         prohorov_within(y.metric, pushforward(c.witness, x.mass, y.size()), y.mass, c.eps);
}

namespace detail {

// Exact-domination search instance. Points of X closer than the smallest
// distance of Y must share an image, so they are merged into items first.
// Items are ordered by decreasing mass.
template <class W>
struct DominationProblem {
  std::vector<IndexSet> items;
  std::vector<W> weight;          // per item
  std::vector<W> demand;          // per target
  std::vector<char> compat;       // (a, b, j, l): items a, b may map to j, l
  std::size_t targets = 0;

  bool ok(std::size_t a, std::size_t b, Index j, Index l) const {
    return compat[((a * items.size() + b) * targets + j) * targets + l] != 0;
  }
};

// Masses as integers over a common denominator, when it stays small.
inline std::optional<std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>> integer_masses(
    std::span<const Scalar> a, std::span<const Scalar> b) {
  mpz_class l(1);
  for (auto s : {a, b})
    for (const auto& v : s) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v.raw().get_den_mpz_t());
  if (mpz_sizeinbase(l.get_mpz_t(), 2) > 40) return std::nullopt;
  auto scale = [&](std::span<const Scalar> s) {
    std::vector<std::int64_t> out;
    for (const auto& v : s) {
      const mpq_class q = v.raw() * l;
      out.push_back(mpz_class(q.get_num()).get_si());
    }
    return out;
  };
  return std::make_pair(scale(a), scale(b));
}

template <class W>
DominationProblem<W> make_domination_problem(const FiniteMetricSpace& x, const FiniteMetricSpace& y,
                                             const std::vector<W>& wx, const std::vector<W>& wy) {
  const std::size_t n = x.size(), m = y.size();
  std::optional<Scalar> sep;
  for (Index j = 0; j < m; ++j)
    for (Index l = j + 1; l < m; ++l)
      if (!sep || y.d(j, l) < *sep) sep = y.d(j, l);
  std::vector<Index> root(n);
  for (Index i = 0; i < n; ++i) root[i] = i;
  auto find = [&](Index i) {
    while (root[i] != i) i = root[i] = root[root[i]];
    return i;
  };
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b)
      if (!sep || x.d(a, b) < *sep) root[std::max(find(a), find(b))] = std::min(find(a), find(b));
  std::map<Index, IndexSet> groups;
  for (Index i = 0; i < n; ++i) groups[find(i)].push_back(i);

  DominationProblem<W> p;
  p.targets = m;
  p.demand = wy;
  for (auto& [r, g] : groups) {
    W w{};
    for (Index i : g) w += wx[i];
    p.items.push_back(std::move(g));
    p.weight.push_back(w);
  }
  std::vector<std::size_t> order(p.items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p.weight[b] < p.weight[a]; });
  std::vector<IndexSet> items;
  std::vector<W> weight;
  for (auto i : order) {
    items.push_back(std::move(p.items[i]));
    weight.push_back(p.weight[i]);
  }
  p.items = std::move(items);
  p.weight = std::move(weight);

  const std::size_t k = p.items.size();
  p.compat.assign(k * k * m * m, 1);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) continue;
      Scalar gap = x.d(p.items[a][0], p.items[b][0]);
      for (Index s : p.items[a])
        for (Index t : p.items[b]) gap = min(gap, x.d(s, t));
      for (Index j = 0; j < m; ++j)
        for (Index l = 0; l < m; ++l) p.compat[((a * k + b) * m + j) * m + l] = y.d(j, l) <= gap;
    }
  return p;
}

// True when some sub-multiset of `items` sums to `target`.
inline bool subset_sum_reaches(const std::vector<std::int64_t>& items, std::int64_t target) {
  if (target == 0) return true;
  const std::size_t words = static_cast<std::size_t>(target / 64) + 1;
  std::vector<std::uint64_t> bits(words, 0);
  bits[0] = 1;
  for (auto w : items) {
    if (w <= 0 || w > target) continue;
    const std::size_t ws = static_cast<std::size_t>(w / 64), bs = static_cast<std::size_t>(w % 64);
    for (std::size_t q = words; q-- > ws;) {
      std::uint64_t v = bits[q - ws] << bs;
      if (bs != 0 && q > ws) v |= bits[q - ws - 1] >> (64 - bs);
      bits[q] |= v;
    }
  }
  return (bits[static_cast<std::size_t>(target / 64)] >> (target % 64)) & 1U;
}

// Backtracking for a 1-Lipschitz map X -> Y with f_* mu_X = mu_Y.
template <class W>
class DominationSearch {
 public:
  static constexpr std::int64_t kSubsetSumLimit = std::int64_t{1} << 18;

  DominationSearch(const DominationProblem<W>& p, std::uint64_t cap, const FirstHit* hit = nullptr,
                   std::size_t index = 0)
      : p_(p), cap_(cap), hit_(hit), index_(index), f_(p.items.size()), load_(p.targets) {}

  // Explores the subtree where the heaviest item maps to `first`.
  std::optional<std::vector<Index>> run(Index first) {
    if (!fits(0, first, 0)) return std::nullopt;
    place(0, first);
    if (!extend(1)) return std::nullopt;
    std::vector<Index> f(total_points());
    for (std::size_t i = 0; i < p_.items.size(); ++i)
      for (Index s : p_.items[i]) f[s] = f_[i];
    return f;
  }

  std::uint64_t nodes() const { return nodes_; }
  bool truncated() const { return truncated_; }

 private:
  std::size_t total_points() const {
    std::size_t n = 0;
    for (const auto& g : p_.items) n += g.size();
    return n;
  }

  // Items 0..assigned-1 are placed.
  bool fits(std::size_t i, Index j, std::size_t assigned) const {
    if (p_.demand[j] < load_[j] + p_.weight[i]) return false;
    for (std::size_t k = 0; k < assigned; ++k)
      if (!p_.ok(i, k, j, f_[k])) return false;
    return true;
  }

  void place(std::size_t i, Index j) {
    f_[i] = j;
    load_[j] += p_.weight[i];
  }
  void unplace(std::size_t i) { load_[f_[i]] -= p_.weight[i]; }

  // Every open item needs a compatible target, and every residual demand must
  // be reachable (as a total, and as an exact subset sum for integer masses).
  bool feasible(std::size_t from) const {
    const std::size_t m = p_.targets;
    std::vector<W> reach(m);
    std::vector<std::vector<W>> options(m);
    for (std::size_t i = from; i < p_.items.size(); ++i) {
      bool any = false;
      for (Index j = 0; j < m; ++j)
        if (fits(i, j, from)) {
          any = true;
          reach[j] += p_.weight[i];
          options[j].push_back(p_.weight[i]);
        }
      if (!any) return false;
    }
    for (Index j = 0; j < m; ++j) {
      const W residual = p_.demand[j] - load_[j];
      if (reach[j] < residual) return false;
      if constexpr (std::is_same_v<W, std::int64_t>)
        if (residual <= kSubsetSumLimit && !subset_sum_reaches(options[j], residual)) return false;
    }
    return true;
  }

  bool extend(std::size_t i) {
    ++nodes_;
    if (nodes_ > cap_ || (hit_ && nodes_ % 64 == 0 && hit_->superseded(index_))) {
      truncated_ = true;
      return false;
    }
    if (i == p_.items.size()) return load_ == p_.demand;
    if (!feasible(i)) return false;
    for (Index j = 0; j < p_.targets; ++j) {
      if (!fits(i, j, i)) continue;
      place(i, j);
      if (extend(i + 1)) return true;
      unplace(i);
      if (truncated_) return false;
    }
    return false;
  }

  const DominationProblem<W>& p_;
  std::uint64_t cap_;
  const FirstHit* hit_;
  std::size_t index_;
  std::vector<Index> f_;
  std::vector<W> load_;
  std::uint64_t nodes_ = 0;
  bool truncated_ = false;
};

template <class W>
DominationResult run_domination(const FiniteMMSpace& x, const FiniteMMSpace& y, const std::vector<W>& wx,
                                const std::vector<W>& wy, const SearchOptions& opts) {
  const auto problem = make_domination_problem(x.metric, y.metric, wx, wy);
  struct Part {
    std::optional<std::vector<Index>> found;
    std::uint64_t nodes;
    bool truncated;
  };
  FirstHit hit;
  auto parts = parallel_indexed(y.size(), opts.threads, [&](std::size_t first) {
    DominationSearch<W> s(problem, opts.max_maps, &hit, first);
    auto found = s.run(first);
    if (found) hit.record(first);
    return Part{std::move(found), s.nodes(), s.truncated()};
  });
  DominationResult out;
  for (auto& p : parts) {
    out.work += p.nodes;
    if (p.truncated || out.work > opts.max_maps) {
      out.decision = Decision::indeterminate;
      return out;
    }
    if (p.found) {
      out.decision = Decision::holds;
      out.certificate = DominationCertificate{MapWitness{*p.found, std::nullopt}, DominationMode::exact, Scalar(0)};
      return out;
    }
  }
  out.decision = Decision::refuted;
  return out;
}

}  // namespace detail

// Exact decision of Y < X (Lipschitz order): a 1-Lipschitz f: X -> Y with
// f_* mu_X = mu_Y. Equivalently, membership of Y in the pyramid of X.
inline DominationResult dominates(const FiniteMMSpace& x, const FiniteMMSpace& y, const SearchOptions& opts = {}) {
  require_valid(x, "dominating space");
  require_valid(y, "dominated space");
  if (x.metric == y.metric && x.mass == y.mass) {
    DominationResult out;
    out.decision = Decision::holds;
    out.certificate = DominationCertificate{identity_map(x.size()), DominationMode::exact, Scalar(0)};
    return out;
  }
  if (auto w = detail::integer_masses(x.mass, y.mass)) return detail::run_domination(x, y, w->first, w->second, opts);
  return detail::run_domination(x, y, x.mass, y.mass, opts);
}

inline DominationResult in_pyramid(const FiniteMMSpace& x, const FiniteMMSpace& y, const SearchOptions& opts = {}) {
  return dominates(x, y, opts);
}

// Decides Y <_eps X: a map f and a domain of mass >= 1 - eps with additive
// defect <= eps on it and d_P(f_* mu_X, mu_Y) <= eps. With require_full_domain
// the domain is all of X.
inline DominationResult eps_dominates(const FiniteMMSpace& x, const FiniteMMSpace& y, const Scalar& eps,
                                      bool require_full_domain, const SearchOptions& opts = {}) {
  require_valid(x, "dominating space");
  require_valid(y, "dominated space");
  if (!eps.is_positive()) throw PreconditionError("eps_dominates: eps must be positive");
  const std::size_t n = x.size(), m = y.size();
  const auto subsets = require_full_domain ? std::vector<detail::Subset>{} : detail::subsets_by_mass(x.mass);
  const Scalar need = Scalar(1) - eps;

  struct Part {
    std::optional<MapWitness> found;
    detail::SubtreeOutcome outcome;
  };
  FirstHit hit;
  auto search = [&](std::size_t first) {
    Part p;
    std::map<std::vector<Scalar>, bool> memo;
    std::vector<Index> f(n, 0);
    f[0] = first;
    do {
      if (p.outcome.examined >= opts.max_maps || hit.superseded(first)) {
        p.outcome.truncated = true;
        break;
      }
      ++p.outcome.examined;
      MapWitness w{f, std::nullopt};
      if (require_full_domain && additive_defect(x.metric, y.metric, w) > eps) continue;
      auto push = pushforward(w, x.mass, m);
      auto it = memo.find(push);
      if (it == memo.end()) it = memo.emplace(push, prohorov_within(y.metric, push, y.mass, eps)).first;
      if (!it->second) continue;
      if (require_full_domain) {
        w.domain = all_points(n);
        p.found = std::move(w);
        break;
      }
      for (const auto& s : subsets) {
        if (s.mass < need) break;
        if (additive_defect(x.metric, y.metric, w, s.points) <= eps) {
          w.domain = s.points;
          p.found = std::move(w);
          break;
        }
      }
      if (p.found) break;
    } while (detail::next_map(f, m));
    if (p.found) hit.record(first);
    return p;
  };
  auto parts = parallel_indexed(m, opts.threads, search);
  DominationResult out;
  const auto mode = require_full_domain ? DominationMode::eps_zero : DominationMode::eps;
  for (auto& p : parts) {
    out.work += p.outcome.examined;
    if (p.found && out.work <= opts.max_maps) {
      out.decision = Decision::holds;
      out.certificate = DominationCertificate{*p.found, mode, eps};
      return out;
    }
    if (p.outcome.truncated || out.work > opts.max_maps) {
      out.decision = Decision::indeterminate;
      return out;
    }
  }
  out.decision = Decision::refuted;
  return out;
}

}  // namespace mmdom
