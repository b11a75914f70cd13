#pragma once

#include <string>
#include <vector>

#include "mmdom/boxorder.hpp"
#include "mmdom/core.hpp"

namespace mmdom {

// Phi: Y -> Z and the family A_Z; blocks_z.blocks[i] corresponds to a.blocks[i].
struct NeighborhoodTransfer {
  PartitionFamily blocks_z;
  MapWitness phi;
  std::vector<Index> anchors_z;
  Index fallback = 0;        // image of Y \ U
  Scalar distortion_on_u;    // max over U x U, < 3 eps
  std::vector<Scalar> mass_ratios;  // mu_Y(A) / mu_Z(A_Z)
  Scalar psi_eps;            // tightest eps certified by Psi
};

struct Transfer {
  NeighborhoodTransfer neighborhood;
  MapWitness h_z;            // X -> Z
  Scalar distortion;         // of h_Z against h on h^{-1}(U)
};

// Builds A_Z = {Psi^{-1}(A) cap dom Psi}, anchors them at least indices and
// sends each block of Y to the anchor of its partner; every conclusion is
// then checked, so success certifies Z as a member of the neighborhood.
inline NeighborhoodTransfer neighborhood_transfer(const FiniteMMSpace& y, const PartitionFamily& a, const Scalar& eps,
                                                  const FiniteMMSpace& z, const MapWitness& psi) {
  require_valid(y, "Y");
  require_valid(z, "Z");
  require_valid(a, y.size(), "transfer blocks");
  if (!eps.is_positive()) throw PreconditionError("transfer: eps must be positive");
  if (a.blocks.empty()) throw PreconditionError("transfer: empty block family");
  for (std::size_t b = 0; b < a.size(); ++b) {
    if (!(diameter(y.metric, a.blocks[b]) < eps))
      throw PreconditionError("transfer: block " + std::to_string(b) + " diameter not < eps");
    if (!mass_of(y.mass, a.blocks[b]).is_positive())
      throw PreconditionError("transfer: block " + std::to_string(b) + " has zero mass");
  }
  require_valid_map(psi, z.size(), y.size());

  NeighborhoodTransfer out;
  out.psi_eps = max_component(mm_iso_breakdown(z, y, psi));
  const IndexSet dom = psi.domain_or_all();
  for (std::size_t b = 0; b < a.size(); ++b) {
    IndexSet pre = set_intersection(preimage(psi, a.blocks[b]), dom);
    if (pre.empty()) throw TransferError("transfer: block " + std::to_string(b) + " has empty preimage in Z");
    out.anchors_z.push_back(pre.front());
    out.blocks_z.blocks.push_back(std::move(pre));
  }
  const IndexSet u = a.union_set();
  const IndexSet u_z = out.blocks_z.union_set();
  if (mass_of(y.mass, u) == Scalar(1)) {
    out.fallback = 0;
  } else {
    const IndexSet outside = set_difference(all_points(z.size()), u_z);
    out.fallback = outside.empty() ? 0 : outside.front();
  }
  const auto owner = a.block_of(y.size());
  for (Index p = 0; p < y.size(); ++p)
    out.phi.assignment.push_back(owner[p] ? out.anchors_z[*owner[p]] : out.fallback);

  out.distortion_on_u = distortion(y.metric, z.metric, out.phi, u);
  if (!(out.distortion_on_u < Scalar(3) * eps))
    throw TransferError("transfer: distortion " + out.distortion_on_u.str() + " on U is not < 3eps");
  const auto push = pushforward(out.phi, y.mass, z.size());
  for (std::size_t b = 0; b < a.size(); ++b) {
    const auto& bz = out.blocks_z.blocks[b];
    if (!(diameter(z.metric, bz) < eps)) throw TransferError("transfer: block " + std::to_string(b) + " of Z has diameter not < eps");
    const Scalar mz = mass_of(z.mass, bz);
    if (!mz.is_positive()) throw TransferError("transfer: block " + std::to_string(b) + " of Z has zero mass");
    if (set_intersection(preimage(out.phi, bz), u) != a.blocks[b])
      throw TransferError("transfer: preimage of block " + std::to_string(b) + " is not its partner");
    const Scalar ratio = mass_of(push, bz) / mz;
    if (!(Scalar(1) - eps < ratio && ratio < Scalar(1) + eps))
      throw TransferError("transfer: mass ratio " + ratio.str() + " of block " + std::to_string(b) + " outside (1-eps, 1+eps)");
    out.mass_ratios.push_back(mass_of(y.mass, a.blocks[b]) / mz);
  }
  for (Index p : u)
    if (!contains(u_z, out.phi(p))) throw TransferError("transfer: Phi(U) leaves U_Z");
  return out;
}

// h_Z = Phi o h for h: X -> Y with h(X) inside U.
inline Transfer transfer(const FiniteMMSpace& y, const PartitionFamily& a, const Scalar& eps, const FiniteMMSpace& z,
                         const MapWitness& psi, const FiniteMMSpace& x, const MapWitness& h) {
  require_valid(x, "X");
  require_valid_map(h, x.size(), y.size());
  const IndexSet u = a.union_set();
  for (Index i = 0; i < x.size(); ++i)
    if (!contains(u, h(i))) throw PreconditionError("transfer: h(X) not inside U");
  Transfer out{neighborhood_transfer(y, a, eps, z, psi), {}, {}};
  const auto& nb = out.neighborhood;
  out.h_z = compose(nb.phi, h);
  out.h_z.domain.reset();

  Scalar worst;
  for (Index i = 0; i < x.size(); ++i)
    for (Index j = i + 1; j < x.size(); ++j)
      worst = max(worst, abs(y.d(h(i), h(j)) - z.d(out.h_z(i), out.h_z(j))));
  out.distortion = worst;
  if (!(worst < Scalar(3) * eps)) throw TransferError("transfer: h_Z distortion not < 3eps");
  const IndexSet u_z = nb.blocks_z.union_set();
  for (Index i = 0; i < x.size(); ++i)
    if (!contains(u_z, out.h_z(i))) throw TransferError("transfer: h_Z(X) leaves U_Z");
  const auto push_z = pushforward(out.h_z, x.mass, z.size());
  const auto push_y = pushforward(h, x.mass, y.size());
  for (std::size_t b = 0; b < a.size(); ++b) {
    if (mass_of(push_z, nb.blocks_z.blocks[b]) != mass_of(push_y, a.blocks[b]))
      throw TransferError("transfer: pushforward of block " + std::to_string(b) + " not preserved");
    const auto& r = nb.mass_ratios[b];
    if (!(Scalar(1) - eps < r && r < Scalar(1) + eps))
      throw TransferError("transfer: mass ratio of block " + std::to_string(b) + " outside (1-eps, 1+eps)");
  }
  return out;
}

}  // namespace mmdom
