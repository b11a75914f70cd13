#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "mmdom/core.hpp"

namespace mmdom {

// Nested partition levels of one space; levels[i] is level first_level + i
// and uses eps[i].
struct PartitionScheme {
  std::size_t first_level = 1;
  std::vector<Scalar> eps;
  std::vector<PartitionFamily> levels;

  std::size_t last_level() const { return first_level + levels.size() - 1; }
  bool has_level(std::size_t n) const { return n >= first_level && n < first_level + levels.size(); }
  const PartitionFamily& level(std::size_t n) const { return levels.at(n - first_level); }
  const Scalar& eps_at(std::size_t n) const { return eps.at(n - first_level); }
};

inline void require_decreasing_eps(std::span<const Scalar> eps_seq) {
  if (eps_seq.empty()) throw PreconditionError("eps sequence is empty");
  for (std::size_t i = 0; i < eps_seq.size(); ++i) {
    if (!eps_seq[i].is_positive()) throw PreconditionError("eps sequence entries must be positive");
    if (i > 0 && !(eps_seq[i] < eps_seq[i - 1])) throw PreconditionError("eps sequence must be strictly decreasing");
  }
  if (!(eps_seq[0] < Scalar(1))) throw PreconditionError("eps_1 must be < 1");
}

// eps_n = eps_1 * 2^(1-n), n = 1..count.
inline std::vector<Scalar> default_eps_sequence(const Scalar& eps1, std::size_t count) {
  std::vector<Scalar> out;
  for (std::size_t n = 0; n < count; ++n) out.push_back(eps1 * pow2_neg(static_cast<unsigned>(n)));
  return out;
}

// Greedy clustering of `points` (in index order) into blocks of diameter
// strictly below eps: each point joins the first block it is close to.
inline PartitionFamily greedy_clusters(const FiniteMetricSpace& y, const IndexSet& points, const Scalar& eps) {
  PartitionFamily fam;
  for (Index p : points) {
    bool placed = false;
    for (auto& blk : fam.blocks) {
      if (std::all_of(blk.begin(), blk.end(), [&](Index q) { return y.d(p, q) < eps; })) {
        blk.push_back(p);
        placed = true;
        break;
      }
    }
    if (!placed) fam.blocks.push_back({p});
  }
  return fam;
}

// Next level: split every block of `coarse` into clusters of diameter < eps,
// then cluster the support points not covered by `coarse`. The result covers
// the whole support and is nested in `coarse`.
inline PartitionFamily refine_level(const FiniteMMSpace& y, const PartitionFamily& coarse, const Scalar& eps) {
  PartitionFamily fine;
  const IndexSet supp = support(y.mass);
  for (const auto& blk : coarse.blocks) {
    auto parts = greedy_clusters(y.metric, set_intersection(blk, supp), eps);
    for (auto& b : parts.blocks) fine.blocks.push_back(std::move(b));
  }
  auto rest = greedy_clusters(y.metric, set_difference(supp, coarse.union_set()), eps);
  for (auto& b : rest.blocks) fine.blocks.push_back(std::move(b));
  std::sort(fine.blocks.begin(), fine.blocks.end());
  return fine;
}

// Continues a scheme from a given base level (used for transferred members).
inline PartitionScheme extend_scheme(const FiniteMMSpace& y, PartitionFamily base, std::size_t base_level,
                                     const Scalar& base_eps, std::span<const Scalar> further_eps) {
  PartitionScheme s;
  s.first_level = base_level;
  s.eps.push_back(base_eps);
  s.levels.push_back(std::move(base));
  for (const auto& e : further_eps) {
    s.levels.push_back(refine_level(y, s.levels.back(), e));
    s.eps.push_back(e);
  }
  return s;
}

// Partition levels 1..depth with diam A < eps_n and mu(A) > 0, nested, each
// covering the full support (so the mass-escape and cover bounds hold with
// room to spare).
inline PartitionScheme build_scheme(const FiniteMMSpace& y, std::span<const Scalar> eps_seq, std::size_t depth) {
  require_valid(y, "space");
  if (depth == 0) throw PreconditionError("build_scheme: depth must be >= 1");
  if (eps_seq.size() < depth) throw PreconditionError("build_scheme: eps sequence shorter than depth");
  require_decreasing_eps(eps_seq.first(depth));
  PartitionScheme s;
  s.levels.push_back(refine_level(y, PartitionFamily{}, eps_seq[0]));
  s.eps.push_back(eps_seq[0]);
  for (std::size_t n = 1; n < depth; ++n) {
    s.levels.push_back(refine_level(y, s.levels.back(), eps_seq[n]));
    s.eps.push_back(eps_seq[n]);
  }
  return s;
}

// Every level-(n+1) block lies inside a level-n block or misses all of them.
inline bool is_nested(const PartitionFamily& coarse, const PartitionFamily& fine) {
  for (const auto& b : fine.blocks)
    for (const auto& a : coarse.blocks)
      if (!is_subset(b, a) && !set_intersection(a, b).empty()) return false;
  return true;
}

inline Scalar min_block_mass(const FiniteMMSpace& y, const PartitionFamily& fam) {
  Scalar best;
  bool first = true;
  for (const auto& b : fam.blocks) {
    Scalar m = mass_of(y.mass, b);
    if (first || m < best) best = m;
    first = false;
  }
  return best;
}

// Violated scheme invariants; empty iff the scheme is valid.
inline std::vector<std::string> check_scheme(const FiniteMMSpace& y, const PartitionScheme& s) {
  std::vector<std::string> report;
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    const std::size_t n = s.first_level + i;
    const auto& fam = s.levels[i];
    const auto& e = s.eps[i];
    for (const auto& msg : validate(fam, y.size())) report.push_back("level " + std::to_string(n) + ": " + msg);
    if (fam.blocks.empty()) report.push_back("level " + std::to_string(n) + ": no blocks");
    for (std::size_t b = 0; b < fam.size(); ++b) {
      if (!(diameter(y.metric, fam.blocks[b]) < e))
        report.push_back("level " + std::to_string(n) + " block " + std::to_string(b) + ": diameter not < eps");
      if (!mass_of(y.mass, fam.blocks[b]).is_positive())
        report.push_back("level " + std::to_string(n) + " block " + std::to_string(b) + ": zero mass");
    }
    if (!(mass_of(y.mass, fam.union_set()) * (Scalar(1) + e) > Scalar(1)))
      report.push_back("level " + std::to_string(n) + ": cover mass not > 1/(1+eps)");
    if (i + 1 < s.levels.size()) {
      const auto& next = s.levels[i + 1];
      const auto& e_next = s.eps[i + 1];
      if (!is_nested(fam, next)) report.push_back("levels " + std::to_string(n) + "/" + std::to_string(n + 1) + ": not nested");
      const Scalar escape = Scalar(1) - mass_of(y.mass, next.union_set());
      if (!(escape < e_next / (Scalar(1) + e_next) * min_block_mass(y, fam)))
        report.push_back("level " + std::to_string(n + 1) + ": mass-escape bound violated");
    }
  }
  return report;
}

}  // namespace mmdom
