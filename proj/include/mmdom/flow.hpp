#pragma once

#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "mmdom/scalar.hpp"

namespace mmdom {

// Dinic max-flow with exact rational capacities. Arcs may be uncapacitated;
// every augmenting path still has a finite bottleneck as long as the source
// arcs are finite.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t nodes) : graph_(nodes) {}

  // Returns the arc id (usable with flow_on()).
  std::size_t add_arc(std::size_t from, std::size_t to, const Scalar& cap) { return add(from, to, cap, false); }
  std::size_t add_unbounded_arc(std::size_t from, std::size_t to) { return add(from, to, Scalar(0), true); }

  Scalar run(std::size_t source, std::size_t sink) {
    Scalar total;
    while (bfs(source, sink)) {
      cursor_.assign(graph_.size(), 0);
      while (true) {
        auto pushed = dfs(source, sink, std::nullopt);
        if (!pushed || pushed->is_zero()) break;
        total += *pushed;
      }
    }
    return total;
  }

  const Scalar& flow_on(std::size_t arc) const { return arcs_[arc].flow; }

  // Nodes reachable from `source` in the residual graph after run().
  std::vector<bool> source_side(std::size_t source) const {
    std::vector<bool> seen(graph_.size(), false);
    std::queue<std::size_t> q;
    q.push(source);
    seen[source] = true;
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto id : graph_[u]) {
        const auto& a = arcs_[id];
        if (!seen[a.to] && residual_positive(a)) {
          seen[a.to] = true;
          q.push(a.to);
        }
      }
    }
    return seen;
  }

 private:
  struct Arc {
    std::size_t to;
    Scalar cap;   // forward capacity (ignored when unbounded)
    Scalar flow;  // signed; reverse arcs carry -flow
    bool unbounded;
  };

  std::size_t add(std::size_t from, std::size_t to, const Scalar& cap, bool unbounded) {
    const std::size_t id = arcs_.size();
    arcs_.push_back({to, cap, Scalar(0), unbounded});
    graph_[from].push_back(id);
    arcs_.push_back({from, Scalar(0), Scalar(0), false});
    graph_[to].push_back(id + 1);
    return id;
  }

  static bool residual_positive(const Arc& a) { return a.unbounded || a.flow < a.cap; }

  bool bfs(std::size_t s, std::size_t t) {
    level_.assign(graph_.size(), -1);
    std::queue<std::size_t> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto id : graph_[u]) {
        const auto& a = arcs_[id];
        if (level_[a.to] < 0 && residual_positive(a)) {
          level_[a.to] = level_[u] + 1;
          q.push(a.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  // `limit` == nullopt means unbounded.
  std::optional<Scalar> dfs(std::size_t u, std::size_t t, const std::optional<Scalar>& limit) {
    if (u == t) return limit;
    for (auto& i = cursor_[u]; i < graph_[u].size(); ++i) {
      const auto id = graph_[u][i];
      auto& a = arcs_[id];
      if (level_[a.to] != level_[u] + 1 || !residual_positive(a)) continue;
      std::optional<Scalar> cap = limit;
      if (!a.unbounded) {
        Scalar room = a.cap - a.flow;
        if (!cap || room < *cap) cap = std::move(room);
      }
      auto pushed = dfs(a.to, t, cap);
      if (pushed && pushed->is_positive()) {
        a.flow += *pushed;
        arcs_[id ^ 1].flow -= *pushed;
        return pushed;
      }
    }
    return Scalar(0);
  }

  std::vector<std::vector<std::size_t>> graph_;
  std::vector<Arc> arcs_;
  std::vector<int> level_;
  std::vector<std::size_t> cursor_;
};

}  // namespace mmdom
