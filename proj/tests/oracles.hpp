#pragma once

// Brute-force reference implementations and random input generators shared
// by the unit tests and the acceptance binary.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "mmdom/construct.hpp"
#include "mmdom/core.hpp"
#include "mmdom/gh.hpp"

namespace oracle {

using namespace mmdom;

// ---------------------------------------------------------------------------
// Prohorov distance by subset enumeration
// ---------------------------------------------------------------------------

// Closed enlargement {y : d(y, A) <= c}.
inline std::vector<Index> closed_enlargement(const FiniteMetricSpace& x, std::uint32_t a, const Scalar& c) {
  std::vector<Index> out;
  for (Index y = 0; y < x.size(); ++y)
    for (Index p = 0; p < x.size(); ++p)
      if ((a >> p & 1U) && x.d(y, p) <= c) {
        out.push_back(y);
        break;
      }
  return out;
}

inline Scalar subset_mass(std::span<const Scalar> m, std::uint32_t a) {
  Scalar s;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (a >> i & 1U) s += m[i];
  return s;
}

// mu(A) <= nu(C_c(A)) + c for every A. The infimum of the open-enlargement
// condition is the least c satisfying this closed form.
inline bool closed_feasible(const FiniteMetricSpace& x, std::span<const Scalar> mu, std::span<const Scalar> nu,
                            const Scalar& c) {
  const std::uint32_t full = 1U << x.size();
  for (std::uint32_t a = 1; a < full; ++a) {
    Scalar covered;
    for (Index y : closed_enlargement(x, a, c)) covered += nu[y];
    if (subset_mass(mu, a) > covered + c) return false;
  }
  return true;
}

// Open-enlargement check at a fixed eps: mu(A) <= nu(U_eps(A)) + eps.
inline bool open_feasible(const FiniteMetricSpace& x, std::span<const Scalar> mu, std::span<const Scalar> nu,
                          const Scalar& eps) {
  const std::uint32_t full = 1U << x.size();
  for (std::uint32_t a = 1; a < full; ++a) {
    Scalar covered;
    for (Index y = 0; y < x.size(); ++y)
      for (Index p = 0; p < x.size(); ++p)
        if ((a >> p & 1U) && x.d(y, p) < eps) {
          covered += nu[y];
          break;
        }
    if (subset_mass(mu, a) > covered + eps) return false;
  }
  return true;
}

// The minimum is a jump point of c -> nu(C_c(A)) or a plateau value
// mu(A) - nu(C_t(A)).
inline Scalar prohorov(const FiniteMetricSpace& x, std::span<const Scalar> mu, std::span<const Scalar> nu) {
  std::set<Scalar> cand{Scalar(0), Scalar(1)};
  std::set<Scalar> levels{Scalar(0)};
  for (Index i = 0; i < x.size(); ++i)
    for (Index j = 0; j < x.size(); ++j) levels.insert(x.d(i, j));
  cand.insert(levels.begin(), levels.end());
  const std::uint32_t full = 1U << x.size();
  for (std::uint32_t a = 1; a < full; ++a)
    for (const auto& t : levels) {
      Scalar covered;
      for (Index y : closed_enlargement(x, a, t)) covered += nu[y];
      const Scalar v = subset_mass(mu, a) - covered;
      if (!v.is_negative()) cand.insert(v);
    }
  std::vector<Scalar> sorted(cand.begin(), cand.end());
  std::size_t lo = 0, hi = sorted.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (closed_feasible(x, mu, nu, sorted[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return sorted[lo];
}

// ---------------------------------------------------------------------------
// Lipschitz order by map enumeration
// ---------------------------------------------------------------------------

inline bool next_assignment(std::vector<Index>& f, std::size_t targets) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (++f[i] < targets) return true;
    f[i] = 0;
  }
  return false;
}

// Some 1-Lipschitz f: X -> Y with f_* mu_X = mu_Y.
inline std::optional<MapWitness> dominates(const FiniteMMSpace& x, const FiniteMMSpace& y) {
  std::vector<Index> f(x.size(), 0);
  do {
    MapWitness w{f, std::nullopt};
    if (is_lipschitz(x.metric, y.metric, w) && pushforward(w, x.mass, y.size()) == y.mass) return w;
  } while (next_assignment(f, y.size()));
  return std::nullopt;
}

// Some 1-Lipschitz surjection X -> Y.
inline std::optional<MapWitness> gh_dominates(const FiniteMetricSpace& x, const FiniteMetricSpace& y) {
  std::vector<Index> f(x.size(), 0);
  do {
    MapWitness w{f, std::nullopt};
    if (is_lipschitz(x, y, w) && image(w).size() == y.size()) return w;
  } while (next_assignment(f, y.size()));
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Gromov-Hausdorff distance by correspondence enumeration
// ---------------------------------------------------------------------------

// Half the least distortion over every subset of X x Y that is a
// correspondence. Feasible for |X| |Y| <= 16.
inline Scalar gh(const FiniteMetricSpace& x, const FiniteMetricSpace& y) {
  const std::size_t nx = x.size(), ny = y.size(), cells = nx * ny;
  std::optional<Scalar> best;
  for (std::uint32_t r = 1; r < (1U << cells); ++r) {
    std::vector<bool> hit_x(nx, false), hit_y(ny, false);
    std::vector<std::pair<Index, Index>> pairs;
    for (std::size_t c = 0; c < cells; ++c)
      if (r >> c & 1U) {
        pairs.emplace_back(c / ny, c % ny);
        hit_x[c / ny] = hit_y[c % ny] = true;
      }
    if (std::find(hit_x.begin(), hit_x.end(), false) != hit_x.end()) continue;
    if (std::find(hit_y.begin(), hit_y.end(), false) != hit_y.end()) continue;
    Scalar dis;
    for (const auto& [a, b] : pairs)
      for (const auto& [c, d] : pairs) dis = max(dis, abs(x.d(a, c) - y.d(b, d)));
    if (!best || dis < *best) best = dis;
  }
  return *best / Scalar(2);
}

// ---------------------------------------------------------------------------
// Random inputs
// ---------------------------------------------------------------------------

inline Scalar pick(std::mt19937_64& rng, std::initializer_list<Scalar> values) {
  std::vector<Scalar> v(values);
  return v[rng() % v.size()];
}

// Random probability vector of length n, zeros allowed when `zeros`.
inline std::vector<Scalar> random_mass(std::mt19937_64& rng, std::size_t n, bool zeros) {
  std::vector<long> w(n);
  long total = 0;
  for (auto& v : w) total += (v = static_cast<long>(rng() % 6) + (zeros ? 0 : 1));
  if (total == 0) {
    w[rng() % n] = 1;
    total = 1;
  }
  std::vector<Scalar> out;
  for (long v : w) out.emplace_back(v, total);
  return out;
}

inline FiniteMetricSpace random_metric(std::mt19937_64& rng, std::size_t max_points, const Scalar& diam) {
  return generate_instance(max_points, diam, rng()).metric;
}

inline std::vector<FiniteMMSpace> random_family(std::mt19937_64& rng, std::size_t max_members, std::size_t max_points,
                                                const Scalar& diam) {
  std::vector<FiniteMMSpace> out;
  const std::size_t k = 1 + rng() % max_members;
  for (std::size_t i = 0; i < k; ++i) out.push_back(generate_instance(max_points, diam, rng()));
  return out;
}

// Max-metric product of whole metric spaces with coordinate projections.
struct MetricProduct {
  FiniteMetricSpace space;
  std::vector<MapWitness> projections;
};

inline MetricProduct metric_product(std::span<const FiniteMetricSpace> family) {
  std::vector<std::size_t> radix, t(family.size(), 0);
  for (const auto& y : family) radix.push_back(y.size());
  std::vector<std::vector<Index>> tuples;
  do {
    tuples.emplace_back(t.begin(), t.end());
  } while (mmdom::detail::next_tuple(t, radix));
  const std::size_t n = tuples.size();
  std::vector<Scalar> flat(n * n);
  std::vector<std::string> labels;
  for (std::size_t a = 0; a < n; ++a) {
    labels.push_back("t" + std::to_string(a));
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t m = 0; m < family.size(); ++m) flat[a * n + b] = max(flat[a * n + b], family[m].d(tuples[a][m], tuples[b][m]));
  }
  MetricProduct out{FiniteMetricSpace(std::move(labels), std::move(flat)), {}};
  for (std::size_t m = 0; m < family.size(); ++m) {
    MapWitness p;
    for (const auto& tup : tuples) p.assignment.push_back(tup[m]);
    out.projections.push_back(std::move(p));
  }
  return out;
}

}  // namespace oracle
