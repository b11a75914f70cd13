#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmdom/boxorder.hpp"
#include "mmdom/construct/product.hpp"
#include "mmdom/core.hpp"
#include "mmdom/parallel.hpp"

namespace mmdom {

inline void require_valid_metric(const FiniteMetricSpace& x, const std::string& what) {
  const auto report = validate(x);
  if (!report.empty()) throw PreconditionError(what + " is invalid: " + report.front());
}

// ---------------------------------------------------------------------------
// eps-isometries
// ---------------------------------------------------------------------------

struct IsometryCheck {
  Scalar distortion;
  Scalar covering;   // max_y d(y, f(X))
  Scalar eps;        // max of the two
  bool ok = false;
};

inline IsometryCheck verify_eps_isometry(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const MapWitness& f,
                                         const Scalar& eps) {
  require_valid_map(f, x.size(), y.size());
  IsometryCheck c;
  c.distortion = distortion(x, y, f);
  c.covering = covering_radius(y, image(f));
  c.eps = max(c.distortion, c.covering);
  c.ok = c.eps <= eps;
  return c;
}

struct MinIsometry {
  Scalar eps;
  MapWitness witness;
  bool optimal = true;
  std::uint64_t work = 0;
};

namespace detail {

// Depth-first search over maps X -> Y with f(0) fixed; `score` at a leaf
// combines the partial distortion with a leaf-only term.
class IsometrySearch {
 public:
  IsometrySearch(const FiniteMetricSpace& x, const FiniteMetricSpace& y, Scalar bound, std::uint64_t cap)
      : x_(x), y_(y), best_(std::move(bound)), cap_(cap), f_(x.size()) {}

  void run(Index first) {
    f_[0] = first;
    extend(1, Scalar(0));
  }

  const Scalar& best() const { return best_; }
  const std::optional<std::vector<Index>>& witness() const { return witness_; }
  std::uint64_t work() const { return work_; }
  bool truncated() const { return truncated_; }

 private:
  void extend(std::size_t i, const Scalar& dis) {
    if (truncated_) return;
    if (i == x_.size()) {
      if (++work_ > cap_) {
        truncated_ = true;
        return;
      }
      std::vector<Index> img(f_.begin(), f_.end());
      const Scalar score = max(dis, covering_radius(y_, make_index_set(std::move(img))));
      if (score < best_) {
        best_ = score;
        witness_ = f_;
      }
      return;
    }
    for (Index j = 0; j < y_.size(); ++j) {
      Scalar d = dis;
      for (std::size_t k = 0; k < i && d < best_; ++k) d = max(d, abs(y_.d(j, f_[k]) - x_.d(i, k)));
      if (!(d < best_)) continue;
      f_[i] = j;
      extend(i + 1, d);
      if (truncated_) return;
    }
  }

  const FiniteMetricSpace& x_;
  const FiniteMetricSpace& y_;
  Scalar best_;
  std::uint64_t cap_;
  std::vector<Index> f_;
  std::optional<std::vector<Index>> witness_;
  std::uint64_t work_ = 0;
  bool truncated_ = false;
};

inline Scalar gh_trivial_upper(const FiniteMetricSpace& x, const FiniteMetricSpace& y) {
  return max(diameter(x), diameter(y));
}

}  // namespace detail

// Least eps for which some map X -> Y is an eps-isometry.
inline MinIsometry min_eps_isometry(const FiniteMetricSpace& x, const FiniteMetricSpace& y,
                                    const SearchOptions& opts = {}) {
  require_valid_metric(x, "source space");
  require_valid_metric(y, "target space");
  // Any map has distortion and covering <= max diameter; searching below
  // max + 1 makes the constant map at 0 an admissible starting witness.
  const Scalar start = detail::gh_trivial_upper(x, y) + Scalar(1);
  struct Part {
    Scalar best;
    std::optional<std::vector<Index>> witness;
    std::uint64_t work;
    bool truncated;
  };
  auto parts = parallel_indexed(y.size(), opts.threads, [&](std::size_t first) {
    detail::IsometrySearch s(x, y, start, opts.max_maps);
    s.run(first);
    return Part{s.best(), s.witness(), s.work(), s.truncated()};
  });
  MinIsometry out;
  out.eps = start;
  std::uint64_t total = 0;
  for (auto& p : parts) {
    total += p.work;
    if (p.truncated || total > opts.max_maps) out.optimal = false;
    if (p.witness && p.best < out.eps) {
      out.eps = p.best;
      out.witness = {*p.witness, std::nullopt};
    }
  }
  out.work = total;
  return out;
}

// ---------------------------------------------------------------------------
// Exact Gromov-Hausdorff distance
// ---------------------------------------------------------------------------

// Every correspondence contains graph(f) together with the transpose of
// graph(g) for some f: X -> Y, g: Y -> X, and distortion is monotone, so the
// minimum runs over such pairs.
struct Correspondence {
  std::vector<std::pair<Index, Index>> pairs;  // sorted, unique
};

inline Scalar correspondence_distortion(const FiniteMetricSpace& x, const FiniteMetricSpace& y,
                                        const Correspondence& r) {
  Scalar best;
  for (const auto& [a, b] : r.pairs)
    for (const auto& [c, d] : r.pairs) best = max(best, abs(x.d(a, c) - y.d(b, d)));
  return best;
}

inline bool is_correspondence(const Correspondence& r, std::size_t nx, std::size_t ny) {
  std::vector<bool> sx(nx, false), sy(ny, false);
  for (const auto& [a, b] : r.pairs) {
    if (a >= nx || b >= ny) return false;
    sx[a] = sy[b] = true;
  }
  return std::all_of(sx.begin(), sx.end(), [](bool v) { return v; }) &&
         std::all_of(sy.begin(), sy.end(), [](bool v) { return v; });
}

enum class GhCertificateKind { correspondence, eps_isometry };

struct GhCertificate {
  GhCertificateKind kind = GhCertificateKind::correspondence;
  Correspondence correspondence;  // correspondence kind
  MapWitness map;                 // eps_isometry kind, X -> Y
  Scalar value;                   // half the distortion, or the isometry eps
};

struct GhDistance {
  bool exact = false;
  Scalar lower;
  Scalar upper;
  bool upper_strict = false;      // true when the upper end is only approached
  GhCertificate certificate;
  std::uint64_t work = 0;
};

namespace detail {

class CorrespondenceSearch {
 public:
  CorrespondenceSearch(const FiniteMetricSpace& x, const FiniteMetricSpace& y, Scalar bound, std::uint64_t cap)
      : x_(x), y_(y), best_(std::move(bound)), cap_(cap), f_(x.size()), g_(y.size()) {}

  void run(Index first) {
    f_[0] = first;
    extend(1, Scalar(0));
  }

  const Scalar& best() const { return best_; }
  const std::optional<std::pair<std::vector<Index>, std::vector<Index>>>& witness() const { return witness_; }
  std::uint64_t work() const { return work_; }
  bool truncated() const { return truncated_; }

 private:
  // Positions 0..nx-1 assign f, positions nx..nx+ny-1 assign g.
  void extend(std::size_t pos, const Scalar& dis) {
    if (truncated_) return;
    const std::size_t nx = x_.size(), ny = y_.size();
    if (pos == nx + ny) {
      if (++work_ > cap_) {
        truncated_ = true;
        return;
      }
      if (dis < best_) {
        best_ = dis;
        witness_ = {f_, g_};
      }
      return;
    }
    if (pos < nx) {
      const Index i = pos;
      for (Index j = 0; j < ny; ++j) {
        Scalar d = dis;
        for (std::size_t k = 0; k < i && d < best_; ++k) d = max(d, abs(y_.d(j, f_[k]) - x_.d(i, k)));
        if (!(d < best_)) continue;
        f_[i] = j;
        extend(pos + 1, d);
        if (truncated_) return;
      }
    } else {
      const Index yj = pos - nx;
      for (Index i = 0; i < nx; ++i) {
        Scalar d = dis;
        // (i, yj) against every f-pair and every earlier g-pair.
        for (Index k = 0; k < nx && d < best_; ++k) d = max(d, abs(x_.d(i, k) - y_.d(yj, f_[k])));
        for (Index l = 0; l < yj && d < best_; ++l) d = max(d, abs(x_.d(i, g_[l]) - y_.d(yj, l)));
        if (!(d < best_)) continue;
        g_[yj] = i;
        extend(pos + 1, d);
        if (truncated_) return;
      }
    }
  }

  const FiniteMetricSpace& x_;
  const FiniteMetricSpace& y_;
  Scalar best_;
  std::uint64_t cap_;
  std::vector<Index> f_, g_;
  std::optional<std::pair<std::vector<Index>, std::vector<Index>>> witness_;
  std::uint64_t work_ = 0;
  bool truncated_ = false;
};

inline Correspondence make_correspondence(const std::vector<Index>& f, const std::vector<Index>& g) {
  Correspondence r;
  for (Index i = 0; i < f.size(); ++i) r.pairs.emplace_back(i, f[i]);
  for (Index j = 0; j < g.size(); ++j) r.pairs.emplace_back(g[j], j);
  std::sort(r.pairs.begin(), r.pairs.end());
  r.pairs.erase(std::unique(r.pairs.begin(), r.pairs.end()), r.pairs.end());
  return r;
}

}  // namespace detail

// Sandwich from eps-isometries in both directions: an eps-isometry gives
// d_GH < 2 eps, and d_GH < eps gives a 2eps-isometry, so the least isometry
// value m in either direction satisfies m/2 <= d_GH.
struct GhIsometryBounds {
  MinIsometry forward, backward;
  Scalar lower, upper;  // lower <= d_GH < upper when upper > 0
};

inline GhIsometryBounds gh_isometry_bounds(const FiniteMetricSpace& x, const FiniteMetricSpace& y,
                                           const SearchOptions& opts = {}) {
  GhIsometryBounds b{min_eps_isometry(x, y, opts), min_eps_isometry(y, x, opts), {}, {}};
  // Only optimal searches certify a least value; the diameter gap is always valid.
  Scalar lo = abs(diameter(x) - diameter(y)) / Scalar(2);
  if (b.forward.optimal) lo = max(lo, b.forward.eps / Scalar(2));
  if (b.backward.optimal) lo = max(lo, b.backward.eps / Scalar(2));
  b.lower = lo;
  b.upper = Scalar(2) * min(b.forward.eps, b.backward.eps);
  return b;
}

inline GhDistance gh_distance(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const SearchOptions& opts = {}) {
  require_valid_metric(x, "X");
  require_valid_metric(y, "Y");
  const Scalar start = detail::gh_trivial_upper(x, y) + Scalar(1);
  struct Part {
    Scalar best;
    std::optional<std::pair<std::vector<Index>, std::vector<Index>>> witness;
    std::uint64_t work;
    bool truncated;
  };
  auto parts = parallel_indexed(y.size(), opts.threads, [&](std::size_t first) {
    detail::CorrespondenceSearch s(x, y, start, opts.max_maps);
    s.run(first);
    return Part{s.best(), s.witness(), s.work(), s.truncated()};
  });
  GhDistance out;
  Scalar best = start;
  std::optional<std::pair<std::vector<Index>, std::vector<Index>>> witness;
  bool complete = true;
  for (auto& p : parts) {
    out.work += p.work;
    if (p.truncated || out.work > opts.max_maps) complete = false;
    if (p.witness && p.best < best) {
      best = p.best;
      witness = p.witness;
    }
  }
  if (complete && witness) {
    out.exact = true;
    out.lower = out.upper = best / Scalar(2);
    out.certificate.kind = GhCertificateKind::correspondence;
    out.certificate.correspondence = detail::make_correspondence(witness->first, witness->second);
    out.certificate.value = out.lower;
    return out;
  }
  auto b = gh_isometry_bounds(x, y, opts);
  out.lower = b.lower;
  out.upper = b.upper;
  out.upper_strict = true;
  out.certificate.kind = GhCertificateKind::eps_isometry;
  const bool fwd = b.forward.eps <= b.backward.eps;
  out.certificate.map = fwd ? b.forward.witness : b.backward.witness;
  out.certificate.value = fwd ? b.forward.eps : b.backward.eps;
  if (witness && best / Scalar(2) <= out.upper) {
    out.upper = best / Scalar(2);
    out.upper_strict = false;
    out.certificate = {GhCertificateKind::correspondence, detail::make_correspondence(witness->first, witness->second),
                       {}, out.upper};
  }
  return out;
}

// ---------------------------------------------------------------------------
// GH order
// ---------------------------------------------------------------------------

struct GhDominationResult {
  Decision decision = Decision::indeterminate;
  std::optional<MapWitness> witness;  // X -> Y
  std::uint64_t work = 0;
};

inline bool verify_gh_domination(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const MapWitness& f) {
  require_valid_map(f, x.size(), y.size());
  return is_lipschitz(x, y, f) && image(f).size() == y.size();
}

// Defect <= eps and d(y, f(X)) <= eps for all y.
inline bool verify_gh_eps_domination(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const MapWitness& f,
                                     const Scalar& eps) {
  require_valid_map(f, x.size(), y.size());
  return additive_defect(x, y, f) <= eps && covering_radius(y, image(f)) <= eps;
}

namespace detail {

// Backtracking with f(0) fixed. Exact mode: 1-Lipschitz and surjective.
// Eps mode: defect <= eps, covering <= eps at the leaves.
class GhOrderSearch {
 public:
  GhOrderSearch(const FiniteMetricSpace& x, const FiniteMetricSpace& y, std::optional<Scalar> eps, std::uint64_t cap,
                const FirstHit* hit = nullptr, std::size_t index = 0)
      : x_(x), y_(y), eps_(std::move(eps)), cap_(cap), hit_(hit), index_(index), f_(x.size()), hits_(y.size(), 0) {}

  std::optional<std::vector<Index>> run(Index first) {
    place(0, first);
    if (extend(1)) return f_;
    return std::nullopt;
  }
  std::uint64_t work() const { return work_; }
  bool truncated() const { return truncated_; }

 private:
  void place(std::size_t i, Index j) {
    f_[i] = j;
    if (hits_[j]++ == 0) ++covered_;
  }
  void unplace(std::size_t i) {
    if (--hits_[f_[i]] == 0) --covered_;
  }

  bool extend(std::size_t i) {
    if (++work_ > cap_ || (hit_ && work_ % 64 == 0 && hit_->superseded(index_))) {
      truncated_ = true;
      return false;
    }
    if (i == x_.size()) {
      if (!eps_) return covered_ == y_.size();
      IndexSet img;
      for (Index j = 0; j < y_.size(); ++j)
        if (hits_[j]) img.push_back(j);
      return covering_radius(y_, img) <= *eps_;
    }
    if (!eps_ && covered_ + (x_.size() - i) < y_.size()) return false;
    const Scalar slack = eps_ ? *eps_ : Scalar(0);
    for (Index j = 0; j < y_.size(); ++j) {
      bool fits = true;
      for (std::size_t k = 0; k < i && fits; ++k) fits = y_.d(j, f_[k]) <= x_.d(i, k) + slack;
      if (!fits) continue;
      place(i, j);
      if (extend(i + 1)) return true;
      unplace(i);
      if (truncated_) return false;
    }
    return false;
  }

  const FiniteMetricSpace& x_;
  const FiniteMetricSpace& y_;
  std::optional<Scalar> eps_;
  std::uint64_t cap_;
  const FirstHit* hit_;
  std::size_t index_;
  std::vector<Index> f_;
  std::vector<std::size_t> hits_;
  std::size_t covered_ = 0;
  std::uint64_t work_ = 0;
  bool truncated_ = false;
};

inline GhDominationResult gh_order_search(const FiniteMetricSpace& x, const FiniteMetricSpace& y,
                                          const std::optional<Scalar>& eps, const SearchOptions& opts) {
  require_valid_metric(x, "X");
  require_valid_metric(y, "Y");
  struct Part {
    std::optional<std::vector<Index>> found;
    std::uint64_t work;
    bool truncated;
  };
  FirstHit hit;
  auto parts = parallel_indexed(y.size(), opts.threads, [&](std::size_t first) {
    GhOrderSearch s(x, y, eps, opts.max_maps, &hit, first);
    auto r = s.run(first);
    if (r) hit.record(first);
    return Part{std::move(r), s.work(), s.truncated()};
  });
  GhDominationResult out;
  bool complete = true;
  for (auto& p : parts) {
    out.work += p.work;
    if (p.found) {
      out.decision = Decision::holds;
      out.witness = MapWitness{*p.found, std::nullopt};
      return out;
    }
    if (p.truncated || out.work > opts.max_maps) {
      complete = false;
      break;
    }
  }
  out.decision = complete ? Decision::refuted : Decision::indeterminate;
  return out;
}

}  // namespace detail

// Y is dominated by X: a 1-Lipschitz surjection X -> Y.
inline GhDominationResult gh_dominates(const FiniteMetricSpace& x, const FiniteMetricSpace& y,
                                       const SearchOptions& opts = {}) {
  return detail::gh_order_search(x, y, std::nullopt, opts);
}

inline GhDominationResult gh_eps_dominates(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const Scalar& eps,
                                           const SearchOptions& opts = {}) {
  if (eps.is_negative()) throw PreconditionError("gh_eps_dominates: eps must be >= 0");
  return detail::gh_order_search(x, y, eps, opts);
}

// ---------------------------------------------------------------------------
// Nets
// ---------------------------------------------------------------------------

// Greedy in index order: keeps a point whose distance to the net is >= r
// (strict = true: every point ends within < r) or > r (strict = false:
// every point ends within <= r, net points pairwise > r apart).
inline IndexSet greedy_net(const FiniteMetricSpace& y, const Scalar& r, bool strict) {
  IndexSet net;
  for (Index p = 0; p < y.size(); ++p) {
    const bool far = net.empty() || (strict ? distance_to_set(y, p, net) >= r : distance_to_set(y, p, net) > r);
    if (far) net.push_back(p);
  }
  return net;
}

struct NetProfileMember {
  IndexSet net;
  Scalar separation;  // min pairwise distance in the net (0 for one point)
  Scalar covering;
  bool ok = false;    // separation > eps (or single point) and covering <= eps
};

struct NetProfile {
  Scalar eps;
  std::size_t size_bound = 0;
  Scalar diameter_bound;
  std::vector<NetProfileMember> members;
};

inline NetProfileMember net_member(const FiniteMetricSpace& y, const Scalar& eps) {
  NetProfileMember m;
  m.net = greedy_net(y, eps, false);
  bool first = true;
  for (std::size_t a = 0; a < m.net.size(); ++a)
    for (std::size_t b = a + 1; b < m.net.size(); ++b) {
      const auto& d = y.d(m.net[a], m.net[b]);
      if (first || d < m.separation) m.separation = d;
      first = false;
    }
  m.covering = covering_radius(y, m.net);
  m.ok = (m.net.size() <= 1 || m.separation > eps) && m.covering <= eps;
  return m;
}

inline NetProfile gh_net_profile(std::span<const FiniteMetricSpace> family, const Scalar& eps) {
  if (!eps.is_positive()) throw PreconditionError("gh_net_profile: eps must be positive");
  NetProfile out;
  out.eps = eps;
  for (std::size_t i = 0; i < family.size(); ++i) {
    require_valid_metric(family[i], "member " + std::to_string(i));
    auto m = net_member(family[i], eps);
    out.size_bound = std::max(out.size_bound, m.net.size());
    out.diameter_bound = max(out.diameter_bound, diameter(family[i]));
    out.members.push_back(std::move(m));
  }
  return out;
}

// Nets pushed through eps-domination witnesses X -> Y.
struct WitnessNet {
  IndexSet net;        // f(N)
  Scalar diameter;     // diam Y
  Scalar covering;     // max_y d(y, f(N))
  bool diameter_ok = false;  // diam Y <= diam X + 3 eps
  bool size_ok = false;      // #f(N) <= #N
  bool covering_ok = false;  // <= 2 eps
  bool ok() const { return diameter_ok && size_ok && covering_ok; }
};

struct WitnessNetProfile {
  IndexSet source_net;
  std::vector<WitnessNet> members;
};

struct GhWitness {
  const FiniteMetricSpace& space;
  MapWitness map;  // X -> Y
};

inline WitnessNetProfile gh_net_via_witnesses(const FiniteMetricSpace& x, std::span<const GhWitness> witnesses,
                                              const Scalar& eps) {
  require_valid_metric(x, "X");
  if (!eps.is_positive()) throw PreconditionError("gh_net_via_witnesses: eps must be positive");
  WitnessNetProfile out;
  out.source_net = greedy_net(x, eps, false);
  const Scalar dx = diameter(x);
  for (std::size_t i = 0; i < witnesses.size(); ++i) {
    const auto& w = witnesses[i];
    require_valid_metric(w.space, "member " + std::to_string(i));
    if (!verify_gh_eps_domination(x, w.space, w.map, eps))
      throw PreconditionError("gh_net_via_witnesses: witness for member " + std::to_string(i) + " is invalid");
    WitnessNet n;
    n.net = image(w.map, out.source_net);
    n.diameter = diameter(w.space);
    n.covering = covering_radius(w.space, n.net);
    n.diameter_ok = n.diameter <= dx + Scalar(3) * eps;
    n.size_ok = n.net.size() <= out.source_net.size();
    n.covering_ok = n.covering <= Scalar(2) * eps;
    out.members.push_back(std::move(n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Refinement and iteration
// ---------------------------------------------------------------------------

struct GhRefineMember {
  const FiniteMetricSpace& space;
  MapWitness f;   // X -> Y witnessing Y <_eps X
  IndexSet net;   // every point within < eps' of the net
};

// A member handled through a representative: Z with an isometry psi: Y -> Z.
struct GhRepresented {
  const FiniteMetricSpace& space;
  std::size_t representative;   // index into the refined family
};

struct GhRefinement {
  FiniteMetricSpace space;            // X'
  MapWitness projection;              // pi: X' -> X
  IsometryCheck projection_check;     // at 3 eps
  Scalar gh_bound;                    // 6 eps (strict)
  std::vector<MapWitness> maps;       // g_Y
  std::vector<Scalar> coverings;      // < eps'
  std::vector<MapWitness> represented_maps;   // psi o g_Y
  std::vector<Scalar> represented_psi_eps;    // <= 2 eps'
  bool passthrough = false;
  bool quotiented = false;
};

inline std::uint64_t gh_refine_size(const FiniteMetricSpace& x, std::span<const GhRefineMember> family,
                                    const Scalar& eps) {
  std::uint64_t total = 0;
  for (Index i = 0; i < x.size(); ++i) {
    std::vector<std::size_t> radix;
    for (const auto& m : family) {
      std::size_t c = 0;
      for (Index p : m.net) c += m.space.d(m.f(i), p) <= eps ? 1 : 0;
      radix.push_back(c);
    }
    const auto p = detail::checked_product(radix);
    if (p > std::numeric_limits<std::uint64_t>::max() - total) return std::numeric_limits<std::uint64_t>::max();
    total += p;
  }
  return total;
}

inline GhRefinement gh_refine(const FiniteMetricSpace& x, std::span<const GhRefineMember> family, const Scalar& eps,
                              const Scalar& eps_prime, std::span<const GhRepresented> represented = {},
                              const SearchOptions& opts = {}, std::size_t point_cap = kDefaultPointCap) {
  require_valid_metric(x, "X");
  if (family.empty()) throw PreconditionError("gh_refine: empty family");
  if (eps.is_negative() || !eps_prime.is_positive()) throw PreconditionError("gh_refine: need eps >= 0 and eps' > 0");
  const std::size_t k = family.size();
  for (std::size_t m = 0; m < k; ++m) {
    const auto& mem = family[m];
    const std::string who = "member " + std::to_string(m);
    require_valid_metric(mem.space, who);
    require_valid_map(mem.f, x.size(), mem.space.size());
    if (!verify_gh_eps_domination(x, mem.space, mem.f, eps))
      throw PreconditionError("gh_refine: " + who + " map does not witness Y <_eps X");
    if (mem.net.empty() || !std::is_sorted(mem.net.begin(), mem.net.end()) || mem.net.back() >= mem.space.size())
      throw PreconditionError("gh_refine: " + who + " net is not a valid index set");
    for (Index y = 0; y < mem.space.size(); ++y)
      if (!(distance_to_set(mem.space, y, mem.net) < eps_prime))
        throw PreconditionError("gh_refine: " + who + " net does not cover within < eps'");
  }

  GhRefinement out;
  if (!(eps_prime < eps)) {
    out.passthrough = true;
    out.space = x;
    out.projection = identity_map(x.size());
    out.projection_check = verify_eps_isometry(x, x, out.projection, Scalar(0));
    out.gh_bound = Scalar(0);
    for (const auto& mem : family) {
      out.maps.push_back(mem.f);
      out.coverings.push_back(covering_radius(mem.space, image(mem.f)));
    }
  } else {
    const auto predicted = gh_refine_size(x, family, eps);
    if (predicted > point_cap)
      throw BudgetExceeded("gh_refine: " + std::to_string(predicted) + " points exceed the cap " + std::to_string(point_cap));
    std::vector<Index> base;
    std::vector<std::vector<Index>> pts;
    std::vector<std::string> labels;
    for (Index i = 0; i < x.size(); ++i) {
      std::vector<std::vector<Index>> options(k);
      std::vector<std::size_t> radix(k);
      for (std::size_t m = 0; m < k; ++m) {
        const auto& mem = family[m];
        for (Index p : mem.net)
          if (mem.space.d(mem.f(i), p) <= eps) options[m].push_back(p);
        if (options[m].empty())
          throw PreconditionError("gh_refine: member " + std::to_string(m) + " has no net point near f(" + std::to_string(i) + ")");
        radix[m] = options[m].size();
      }
      std::vector<std::size_t> t(k, 0);
      do {
        std::vector<Index> sel(k);
        std::vector<std::string> parts{x.label(i)};
        for (std::size_t m = 0; m < k; ++m) {
          sel[m] = options[m][t[m]];
          parts.push_back(family[m].space.label(sel[m]));
        }
        base.push_back(i);
        pts.push_back(std::move(sel));
        labels.push_back(detail::tuple_label(parts));
      } while (detail::next_tuple(t, radix));
    }
    const std::size_t n = base.size();
    std::vector<Scalar> flat(n * n), dummy(n, Scalar(0));
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
    auto q = quotient_zero_distance(labels, flat, dummy);
    out.quotiented = q.merged;
    out.space = std::move(q.space.metric);
    out.projection = q.merged ? descend_map(pi, q) : std::move(pi);
    for (auto& gm : g) out.maps.push_back(q.merged ? descend_map(gm, q) : std::move(gm));
    out.gh_bound = Scalar(6) * eps;

    out.projection_check = verify_eps_isometry(out.space, x, out.projection, Scalar(3) * eps);
    if (!out.projection_check.ok) throw PostconditionError("gh_refine: projection is not a 3eps-isometry");
    for (std::size_t m = 0; m < k; ++m) {
      const auto& y = family[m].space;
      if (!is_lipschitz(out.space, y, out.maps[m]))
        throw PostconditionError("gh_refine: g for member " + std::to_string(m) + " is not 1-Lipschitz");
      Scalar cov = covering_radius(y, image(out.maps[m]));
      if (!(cov < eps_prime)) throw PostconditionError("gh_refine: g for member " + std::to_string(m) + " covers only within " + cov.str());
      out.coverings.push_back(std::move(cov));
    }
  }

  for (std::size_t r = 0; r < represented.size(); ++r) {
    const auto& rep = represented[r];
    if (rep.representative >= k) throw PreconditionError("gh_refine: representative index out of range");
    require_valid_metric(rep.space, "represented member " + std::to_string(r));
    auto iso = min_eps_isometry(family[rep.representative].space, rep.space, opts);
    if (iso.eps > Scalar(2) * eps_prime)
      throw TransferError("gh_refine: represented member " + std::to_string(r) + " is not within reach of its representative");
    MapWitness h = compose(iso.witness, out.maps[rep.representative]);
    if (!verify_gh_eps_domination(out.space, rep.space, h, Scalar(5) * eps_prime))
      throw PostconditionError("gh_refine: represented member " + std::to_string(r) + " fails the 5eps' check");
    out.represented_maps.push_back(std::move(h));
    out.represented_psi_eps.push_back(iso.eps);
  }
  return out;
}

struct GhStage {
  std::size_t index = 0;
  Scalar eps;
  FiniteMetricSpace space;
  std::vector<MapWitness> maps;
  std::vector<IsometryCheck> checks;   // defect in `distortion`, covering in `covering`
  bool verified = false;
};

struct GhStep {
  std::size_t from = 0;
  Scalar eps, eps_prime;
  Scalar gh_bound;                 // 6 eps_n
  IsometryCheck projection;        // 3 eps_n-isometry
  MapWitness projection_map;
  std::vector<IndexSet> nets;
  bool passthrough = false;
  bool verified = false;
};

struct GhTrace {
  std::vector<Scalar> eps;         // eps_0, eps_1, ...
  std::vector<GhStage> stages;
  std::vector<GhStep> steps;
  bool truncated = false;
  std::string truncation_reason;

  bool verified() const {
    return std::all_of(stages.begin(), stages.end(), [](const auto& s) { return s.verified; }) &&
           std::all_of(steps.begin(), steps.end(), [](const auto& s) { return s.verified; });
  }
};

struct GhSequenceOptions {
  std::size_t point_cap = kDefaultPointCap;
  SearchOptions search;
};

inline GhTrace gh_dominator_sequence(std::span<const FiniteMetricSpace> family, std::span<const Scalar> eps_seq,
                                     std::size_t steps, const GhSequenceOptions& opts = {}) {
  if (family.empty()) throw PreconditionError("gh_dominator_sequence: empty family");
  if (eps_seq.size() < steps) throw PreconditionError("gh_dominator_sequence: eps sequence shorter than the step count");
  for (std::size_t i = 0; i < steps; ++i)
    if (!eps_seq[i].is_positive()) throw PreconditionError("gh_dominator_sequence: eps entries must be positive");
  Scalar eps0;
  for (std::size_t m = 0; m < family.size(); ++m) {
    require_valid_metric(family[m], "member " + std::to_string(m));
    eps0 = max(eps0, diameter(family[m]));
  }
  GhTrace trace;
  trace.eps.push_back(eps0);
  for (std::size_t i = 0; i < steps; ++i) trace.eps.push_back(eps_seq[i]);

  FiniteMetricSpace x = one_point_metric();
  std::vector<MapWitness> f(family.size(), constant_map(1, 0));

  auto certify = [&](std::size_t n) {
    GhStage st;
    st.index = n;
    st.eps = trace.eps[n];
    st.space = x;
    st.maps = f;
    st.checks = parallel_indexed(family.size(), opts.search.threads, [&](std::size_t m) {
      IsometryCheck c;
      c.distortion = additive_defect(x, family[m], f[m]);
      c.covering = covering_radius(family[m], image(f[m]));
      c.eps = max(c.distortion, c.covering);
      c.ok = c.eps <= st.eps;
      return c;
    });
    st.verified = std::all_of(st.checks.begin(), st.checks.end(), [](const auto& c) { return c.ok; });
    trace.stages.push_back(std::move(st));
  };
  certify(0);

  for (std::size_t n = 0; n < steps; ++n) {
    GhStep step;
    step.from = n;
    step.eps = trace.eps[n];
    step.eps_prime = trace.eps[n + 1];
    step.gh_bound = Scalar(6) * step.eps;
    std::vector<GhRefineMember> members;
    for (std::size_t m = 0; m < family.size(); ++m) {
      step.nets.push_back(greedy_net(family[m], step.eps_prime, true));
      members.push_back({family[m], f[m], step.nets.back()});
    }
    if (step.eps_prime < step.eps) {
      const auto predicted = gh_refine_size(x, members, step.eps);
      if (predicted > opts.point_cap) {
        trace.truncated = true;
        trace.truncation_reason = "step " + std::to_string(n) + " needs " + std::to_string(predicted) + " points";
        break;
      }
    }
    auto ref = gh_refine(x, members, step.eps, step.eps_prime, {}, opts.search, opts.point_cap);
    step.passthrough = ref.passthrough;
    step.projection = ref.projection_check;
    step.projection_map = ref.projection;
    step.verified = ref.projection_check.ok && ref.projection_check.eps <= Scalar(3) * step.eps;
    trace.steps.push_back(std::move(step));
    x = ref.space;
    f = ref.maps;
    certify(n + 1);
  }
  return trace;
}

}  // namespace mmdom
