#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmdom/errors.hpp"
#include "mmdom/scalar.hpp"

namespace mmdom {

using Index = std::size_t;

// Sorted, duplicate-free list of point indices.
using IndexSet = std::vector<Index>;

inline IndexSet make_index_set(std::vector<Index> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline IndexSet all_points(std::size_t n) {
  IndexSet s(n);
  std::iota(s.begin(), s.end(), Index{0});
  return s;
}

inline bool contains(const IndexSet& s, Index i) { return std::binary_search(s.begin(), s.end(), i); }

inline bool is_subset(const IndexSet& a, const IndexSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline IndexSet set_intersection(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// ---------------------------------------------------------------------------
// FiniteMetricSpace
// ---------------------------------------------------------------------------

// Labeled finite point set with an exact distance matrix. The constructor
// checks only shape; metric axioms are reported by validate().
class FiniteMetricSpace {
 public:
  FiniteMetricSpace() = default;

  FiniteMetricSpace(std::vector<std::string> labels, const std::vector<std::vector<Scalar>>& rows)
      : labels_(std::move(labels)) {
    const std::size_t n = labels_.size();
    if (rows.size() != n) throw PreconditionError("distance matrix has " + std::to_string(rows.size()) +
                                                  " rows for " + std::to_string(n) + " labels");
    dist_.reserve(n * n);
    for (const auto& row : rows) {
      if (row.size() != n) throw PreconditionError("distance matrix is not square");
      dist_.insert(dist_.end(), row.begin(), row.end());
    }
  }

  FiniteMetricSpace(std::vector<std::string> labels, std::vector<Scalar> flat)
      : labels_(std::move(labels)), dist_(std::move(flat)) {
    if (dist_.size() != labels_.size() * labels_.size())
      throw PreconditionError("flat distance array has wrong length");
  }

  std::size_t size() const { return labels_.size(); }
  const Scalar& d(Index i, Index j) const { return dist_[i * size() + j]; }
  const std::string& label(Index i) const { return labels_[i]; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::span<const Scalar> row(Index i) const { return {dist_.data() + i * size(), size()}; }

  friend bool operator==(const FiniteMetricSpace&, const FiniteMetricSpace&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<Scalar> dist_;
};

// One-point space labelled "p0".
inline FiniteMetricSpace one_point_metric() { return FiniteMetricSpace({"p0"}, std::vector<Scalar>{Scalar(0)}); }

// ---------------------------------------------------------------------------
// FiniteMMSpace
// ---------------------------------------------------------------------------

struct FiniteMMSpace {
  FiniteMetricSpace metric;
  std::vector<Scalar> mass;

  std::size_t size() const { return metric.size(); }
  const Scalar& d(Index i, Index j) const { return metric.d(i, j); }

  friend bool operator==(const FiniteMMSpace&, const FiniteMMSpace&) = default;
};

inline FiniteMMSpace one_point_space() { return {one_point_metric(), {Scalar(1)}}; }

// Two points at distance d with the given masses.
inline FiniteMMSpace two_point_space(const Scalar& d, const Scalar& m0, const Scalar& m1) {
  return {FiniteMetricSpace({"p0", "p1"}, std::vector<std::vector<Scalar>>{{0, d}, {d, 0}}), {m0, m1}};
}

inline Scalar mass_of(std::span<const Scalar> mass, const IndexSet& a) {
  Scalar s;
  for (Index i : a) s += mass[i];
  return s;
}

inline Scalar total_mass(std::span<const Scalar> mass) {
  Scalar s;
  for (const auto& m : mass) s += m;
  return s;
}

// Violated invariants of a metric; empty iff valid. Each kind of violation is
// reported once, with the first offending indices in scan order.
inline std::vector<std::string> validate(const FiniteMetricSpace& x) {
  std::vector<std::string> report;
  const std::size_t n = x.size();
  if (n == 0) {
    report.emplace_back("empty space");
    return report;
  }
  auto pair_str = [](Index i, Index j) { return " (" + std::to_string(i) + "," + std::to_string(j) + ")"; };
  bool diag = false, zero = false, neg = false, asym = false, tri = false;
  for (Index i = 0; i < n; ++i) {
    if (!diag && !x.d(i, i).is_zero()) {
      report.push_back("nonzero self-distance" + pair_str(i, i));
      diag = true;
    }
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (!asym && x.d(i, j) != x.d(j, i)) {
        report.push_back("asymmetric distance" + pair_str(i, j));
        asym = true;
      }
      if (!neg && x.d(i, j).is_negative()) {
        report.push_back("negative distance" + pair_str(i, j));
        neg = true;
      } else if (!zero && x.d(i, j).is_zero()) {
        report.push_back("zero distance between distinct points" + pair_str(i, j));
        zero = true;
      }
    }
  }
  for (Index i = 0; i < n && !tri; ++i)
    for (Index j = 0; j < n && !tri; ++j)
      for (Index k = 0; k < n && !tri; ++k)
        if (x.d(i, k) > x.d(i, j) + x.d(j, k)) {
          report.push_back("triangle inequality violated (" + std::to_string(i) + "," + std::to_string(j) + "," +
                           std::to_string(k) + ")");
          tri = true;
        }
  return report;
}

inline std::vector<std::string> validate(const FiniteMMSpace& x) {
  auto report = validate(x.metric);
  if (x.mass.size() != x.size()) {
    report.push_back("mass vector has " + std::to_string(x.mass.size()) + " entries for " +
                     std::to_string(x.size()) + " points");
    return report;
  }
  for (Index i = 0; i < x.size(); ++i)
    if (x.mass[i].is_negative()) {
      report.push_back("negative mass at point " + std::to_string(i));
      break;
    }
  if (total_mass(x.mass) != Scalar(1)) report.push_back("total mass is " + total_mass(x.mass).str() + ", not 1");
  return report;
}

template <class Space>
void require_valid(const Space& x, const std::string& what) {
  const auto report = validate(x);
  if (!report.empty()) throw PreconditionError(what + " is invalid: " + report.front());
}

inline IndexSet zero_mass_points(const FiniteMMSpace& x) {
  IndexSet out;
  for (Index i = 0; i < x.size(); ++i)
    if (x.mass[i].is_zero()) out.push_back(i);
  return out;
}

inline IndexSet support(std::span<const Scalar> mass) {
  IndexSet out;
  for (Index i = 0; i < mass.size(); ++i)
    if (mass[i].is_positive()) out.push_back(i);
  return out;
}

// Restriction of a metric to the points in `keep` (in order).
inline FiniteMetricSpace restrict_metric(const FiniteMetricSpace& x, const IndexSet& keep) {
  std::vector<std::string> labels;
  std::vector<Scalar> flat;
  flat.reserve(keep.size() * keep.size());
  for (Index i : keep) {
    labels.push_back(x.label(i));
    for (Index j : keep) flat.push_back(x.d(i, j));
  }
  return FiniteMetricSpace(std::move(labels), std::move(flat));
}

struct Canonicalized {
  FiniteMMSpace space;
  IndexSet kept;  // original index of each surviving point
};

// Drops zero-mass points. Total mass is unchanged, so no renormalization.
inline Canonicalized canonicalize(const FiniteMMSpace& x) {
  Canonicalized out;
  out.kept = support(x.mass);
  out.space.metric = restrict_metric(x.metric, out.kept);
  for (Index i : out.kept) out.space.mass.push_back(x.mass[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Elementary metric operations
// ---------------------------------------------------------------------------

// U_eps(A) = { i : min_{j in A} d(i, j) < eps }, strict.
inline IndexSet open_ball_enlargement(const FiniteMetricSpace& x, const IndexSet& a, const Scalar& eps) {
  if (!eps.is_positive()) throw PreconditionError("open_ball_enlargement: eps must be positive");
  IndexSet out;
  if (a.empty()) return out;
  for (Index i = 0; i < x.size(); ++i)
    for (Index j : a)
      if (x.d(i, j) < eps) {
        out.push_back(i);
        break;
      }
  return out;
}

// Max pairwise distance within A; 0 for the empty set and singletons.
inline Scalar diameter(const FiniteMetricSpace& x, const IndexSet& a) {
  Scalar best;
  for (std::size_t p = 0; p < a.size(); ++p)
    for (std::size_t q = p + 1; q < a.size(); ++q)
      if (x.d(a[p], a[q]) > best) best = x.d(a[p], a[q]);
  return best;
}

inline Scalar diameter(const FiniteMetricSpace& x) { return diameter(x, all_points(x.size())); }

// Distance from point i to a nonempty set.
inline Scalar distance_to_set(const FiniteMetricSpace& x, Index i, const IndexSet& a) {
  if (a.empty()) throw PreconditionError("distance to empty set");
  Scalar best = x.d(i, a.front());
  for (Index j : a)
    if (x.d(i, j) < best) best = x.d(i, j);
  return best;
}

// Sorted distinct values of the distance matrix, including 0.
inline std::vector<Scalar> distinct_distances(const FiniteMetricSpace& x) {
  std::vector<Scalar> vals{Scalar(0)};
  for (Index i = 0; i < x.size(); ++i)
    for (Index j = i + 1; j < x.size(); ++j) vals.push_back(x.d(i, j));
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  return vals;
}

// ---------------------------------------------------------------------------
// PartitionFamily
// ---------------------------------------------------------------------------

// Disjoint nonempty blocks; the union may be a proper subset of the space.
// Every subset of a finite space is clopen, so boundaries carry no mass.
struct PartitionFamily {
  std::vector<IndexSet> blocks;

  std::size_t size() const { return blocks.size(); }

  IndexSet union_set() const {
    std::vector<Index> all;
    for (const auto& b : blocks) all.insert(all.end(), b.begin(), b.end());
    return make_index_set(std::move(all));
  }

  // block id of each point, or nullopt when outside the union.
  std::vector<std::optional<std::size_t>> block_of(std::size_t n) const {
    std::vector<std::optional<std::size_t>> out(n);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (Index i : blocks[b]) out[i] = b;
    return out;
  }

  friend bool operator==(const PartitionFamily&, const PartitionFamily&) = default;
};

inline PartitionFamily singleton_partition(const IndexSet& points) {
  PartitionFamily f;
  for (Index i : points) f.blocks.push_back({i});
  return f;
}

inline std::vector<std::string> validate(const PartitionFamily& fam, std::size_t n) {
  std::vector<std::string> report;
  std::vector<int> seen(n, -1);
  for (std::size_t b = 0; b < fam.blocks.size(); ++b) {
    const auto& blk = fam.blocks[b];
    if (blk.empty()) report.push_back("block " + std::to_string(b) + " is empty");
    if (!std::is_sorted(blk.begin(), blk.end()) || std::adjacent_find(blk.begin(), blk.end()) != blk.end())
      report.push_back("block " + std::to_string(b) + " is not a sorted index set");
    for (Index i : blk) {
      if (i >= n) {
        report.push_back("block " + std::to_string(b) + " has out-of-range index " + std::to_string(i));
        continue;
      }
      if (seen[i] >= 0)
        report.push_back("blocks " + std::to_string(seen[i]) + " and " + std::to_string(b) + " share point " +
                         std::to_string(i));
      seen[i] = static_cast<int>(b);
    }
  }
  return report;
}

inline void require_valid(const PartitionFamily& fam, std::size_t n, const std::string& what) {
  const auto report = validate(fam, n);
  if (!report.empty()) throw PreconditionError(what + " is invalid: " + report.front());
}

// ---------------------------------------------------------------------------
// MapWitness
// ---------------------------------------------------------------------------

// Point map source -> target given by an index array, plus an optional
// non-exceptional domain (absent means the whole source).
struct MapWitness {
  std::vector<Index> assignment;
  std::optional<IndexSet> domain;

  std::size_t size() const { return assignment.size(); }
  Index operator()(Index i) const { return assignment[i]; }

  IndexSet domain_or_all() const { return domain ? *domain : all_points(assignment.size()); }

  friend bool operator==(const MapWitness&, const MapWitness&) = default;
};

inline MapWitness identity_map(std::size_t n) { return {all_points(n), std::nullopt}; }

inline MapWitness constant_map(std::size_t n, Index target) {
  return {std::vector<Index>(n, target), std::nullopt};
}

inline void require_valid_map(const MapWitness& f, std::size_t source_n, std::size_t target_n) {
  if (f.assignment.size() != source_n)
    throw PreconditionError("map is not total: " + std::to_string(f.assignment.size()) + " entries for " +
                            std::to_string(source_n) + " source points");
  for (Index t : f.assignment)
    if (t >= target_n) throw PreconditionError("map target index " + std::to_string(t) + " out of range");
  if (f.domain) {
    for (Index i : *f.domain)
      if (i >= source_n) throw PreconditionError("domain index " + std::to_string(i) + " out of range");
    if (!std::is_sorted(f.domain->begin(), f.domain->end()))
      throw PreconditionError("domain is not a sorted index set");
  }
}

// g o f; the domain of f is carried over.
inline MapWitness compose(const MapWitness& g, const MapWitness& f) {
  MapWitness out;
  out.assignment.reserve(f.size());
  for (Index t : f.assignment) out.assignment.push_back(g(t));
  out.domain = f.domain;
  return out;
}

inline std::vector<Scalar> pushforward(const MapWitness& f, std::span<const Scalar> source_mass,
                                       std::size_t target_n) {
  std::vector<Scalar> out(target_n);
  for (Index i = 0; i < f.size(); ++i) out[f(i)] += source_mass[i];
  return out;
}

inline std::vector<Scalar> pushforward(const MapWitness& f, const FiniteMMSpace& source, const FiniteMMSpace& target) {
  require_valid_map(f, source.size(), target.size());
  return pushforward(f, source.mass, target.size());
}

inline IndexSet image(const MapWitness& f, const IndexSet& of) {
  std::vector<Index> out;
  for (Index i : of) out.push_back(f(i));
  return make_index_set(std::move(out));
}

inline IndexSet image(const MapWitness& f) { return image(f, all_points(f.size())); }

inline IndexSet preimage(const MapWitness& f, const IndexSet& target_set) {
  IndexSet out;
  for (Index i = 0; i < f.size(); ++i)
    if (contains(target_set, f(i))) out.push_back(i);
  return out;
}

// Smallest D >= 0 with d_Y(f x, f x') <= d_X(x, x') + D on dom x dom.
inline Scalar additive_defect(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const MapWitness& f,
                              const IndexSet& dom) {
  Scalar best;
  for (std::size_t p = 0; p < dom.size(); ++p)
    for (std::size_t q = p + 1; q < dom.size(); ++q) {
      const Index a = dom[p], b = dom[q];
      Scalar excess = y.d(f(a), f(b)) - x.d(a, b);
      if (excess > best) best = std::move(excess);
    }
  return best;
}

inline Scalar additive_defect(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const MapWitness& f) {
  return additive_defect(x, y, f, all_points(x.size()));
}

// max |d_X(x, x') - d_Y(f x, f x')| on dom x dom.
inline Scalar distortion(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const MapWitness& f,
                         const IndexSet& dom) {
  Scalar best;
  for (std::size_t p = 0; p < dom.size(); ++p)
    for (std::size_t q = p + 1; q < dom.size(); ++q) {
      const Index a = dom[p], b = dom[q];
      Scalar gap = abs(y.d(f(a), f(b)) - x.d(a, b));
      if (gap > best) best = std::move(gap);
    }
  return best;
}

inline Scalar distortion(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const MapWitness& f) {
  return distortion(x, y, f, all_points(x.size()));
}

// max_y d(y, S) for nonempty S.
inline Scalar covering_radius(const FiniteMetricSpace& y, const IndexSet& s) {
  Scalar best;
  for (Index i = 0; i < y.size(); ++i) {
    Scalar r = distance_to_set(y, i, s);
    if (r > best) best = std::move(r);
  }
  return best;
}

// (C, D)-Lipschitz check: d_Y(f x, f x') <= C d_X(x, x') + D for all pairs.
inline bool is_lipschitz(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const MapWitness& f,
                         const Scalar& c = Scalar(1), const Scalar& d = Scalar(0)) {
  for (Index a = 0; a < x.size(); ++a)
    for (Index b = a + 1; b < x.size(); ++b)
      if (y.d(f(a), f(b)) > c * x.d(a, b) + d) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Zero-distance quotient for pseudometric constructions
// ---------------------------------------------------------------------------

struct Quotient {
  FiniteMMSpace space;
  std::vector<Index> class_of;  // original point -> quotient point
  bool merged = false;
};

// Identifies points at distance zero (an equivalence relation for any
// pseudometric) and adds their masses. Representatives keep the lowest index.
inline Quotient quotient_zero_distance(const std::vector<std::string>& labels, const std::vector<Scalar>& flat,
                                       const std::vector<Scalar>& mass) {
  const std::size_t n = labels.size();
  Quotient q;
  q.class_of.assign(n, n);
  std::vector<Index> reps;
  for (Index i = 0; i < n; ++i) {
    if (q.class_of[i] != n) continue;
    q.class_of[i] = reps.size();
    for (Index j = i + 1; j < n; ++j)
      if (q.class_of[j] == n && flat[i * n + j].is_zero()) {
        q.class_of[j] = reps.size();
        q.merged = true;
      }
    reps.push_back(i);
  }
  if (!q.merged) {
    q.space = {FiniteMetricSpace(labels, flat), mass};
    return q;
  }
  std::vector<std::string> qlabels;
  std::vector<Scalar> qflat;
  std::vector<Scalar> qmass(reps.size());
  for (Index r : reps) {
    qlabels.push_back(labels[r]);
    for (Index s : reps) qflat.push_back(flat[r * n + s]);
  }
  for (Index i = 0; i < n; ++i) qmass[q.class_of[i]] += mass[i];
  q.space = {FiniteMetricSpace(std::move(qlabels), std::move(qflat)), std::move(qmass)};
  return q;
}

// Rewrites a map defined on the pre-quotient points onto the quotient. Merged
// points must share their image.
inline MapWitness descend_map(const MapWitness& f, const Quotient& q) {
  std::size_t m = 0;
  for (Index c : q.class_of) m = std::max<std::size_t>(m, c + 1);
  if (f.size() != q.class_of.size()) throw PostconditionError("descend_map: domain size mismatch");
  std::vector<std::optional<Index>> out(m);
  for (Index i = 0; i < f.size(); ++i) {
    auto& slot = out[q.class_of[i]];
    if (slot && *slot != f(i)) throw PostconditionError("quotient merges points with different images");
    slot = f(i);
  }
  MapWitness g;
  for (auto& s : out) {
    if (!s) throw PostconditionError("descend_map: empty class");
    g.assignment.push_back(*s);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

namespace detail {
// Portable bounded draw (std::uniform_int_distribution is implementation
// defined, which would break cross-platform reproducibility).
inline std::uint64_t draw(std::mt19937_64& rng, std::uint64_t bound) { return rng() % bound; }
}  // namespace detail

// Random valid mm-space with 1..N points, diameter <= D and positive masses.
// Off-diagonal entries are drawn from the lattice D*{1..4}/4, then closed
// under shortest paths, which enforces the triangle inequality while staying
// within (0, D].
inline FiniteMMSpace generate_instance(std::size_t max_points, const Scalar& max_diam, std::uint64_t seed) {
  if (max_points == 0) throw PreconditionError("generate_instance: N must be >= 1");
  if (!max_diam.is_positive()) throw PreconditionError("generate_instance: D must be positive");
  std::mt19937_64 rng(seed);
  const std::size_t n = 1 + detail::draw(rng, max_points);
  constexpr std::uint64_t kLattice = 4;
  std::vector<Scalar> flat(n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const auto k = 1 + detail::draw(rng, kLattice);
      flat[i * n + j] = flat[j * n + i] = max_diam * Scalar(static_cast<long>(k), static_cast<long>(kLattice));
    }
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (flat[i * n + k] + flat[k * n + j] < flat[i * n + j]) flat[i * n + j] = flat[i * n + k] + flat[k * n + j];
  std::vector<long> weights(n);
  long total = 0;
  for (auto& w : weights) total += (w = 1 + static_cast<long>(detail::draw(rng, 8)));
  std::vector<Scalar> mass;
  for (long w : weights) mass.emplace_back(w, total);
  std::vector<std::string> labels;
  for (Index i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i));
  return {FiniteMetricSpace(std::move(labels), std::move(flat)), std::move(mass)};
}

}  // namespace mmdom
