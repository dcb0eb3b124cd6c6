#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "nvrot/spin.hpp"

namespace nvrot {

// A carbon site of the diamond lattice. `index` holds integer coordinates in
// units of a_cubic/4 in the cubic crystal frame; `position` is the same site
// in the NV frame (nm), whose +z axis is the [111] NV axis.
struct LatticeSite {
  std::array<int, 3> index{};
  Vector3 position = Vector3::Zero();
};

struct BathParams {
  double abundance = 0.011;
  // 2.48 nm holds ~125 13C at natural abundance; 3.35 nm gives ~310.
  double radius_nm = 2.48;
  // excludes the first shells where the unmodelled contact term dominates
  double min_distance_nm = 0.25;
};

struct BathConfiguration {
  std::uint64_t seed = 0;
  double abundance = 0.0;
  double radius_nm = 0.0;
  double min_distance_nm = 0.0;
  std::vector<Vector3> sites;
};

struct ClusterPartition {
  std::vector<std::vector<std::size_t>> groups;
  int g_max = 1;
};

// Cubic lattice constant implied by the nearest-neighbour distance.
double cubic_lattice_constant(const PhysicalConstants& pc = constants());

// Maps cubic crystal coordinates to the NV frame ([111] -> +z).
Eigen::Matrix3d crystal_to_nv();

// All diamond-lattice sites within `radius_nm` of the vacancy at the origin,
// origin excluded, ordered lexicographically by integer coordinates.
std::vector<LatticeSite> generate_lattice(double radius_nm,
                                          const PhysicalConstants& pc = constants());

// Occupies each site independently with probability `abundance`, one uniform
// draw per site in input order.
BathConfiguration sample_bath(std::span<const LatticeSite> sites, double abundance,
                              std::uint64_t seed);

// generate_lattice + min-distance exclusion + sample_bath.
BathConfiguration generate_bath(const BathParams& params, std::uint64_t seed,
                                const PhysicalConstants& pc = constants());

// Secular grouping metric |1 - 3 cos^2 theta_ij| / r_ij^3 (nm^-3), z = NV axis.
double grouping_coupling(const Vector3& a, const Vector3& b);

// Greedy agglomeration: pairs in descending coupling order (ties by index),
// merging two groups whenever the union stays within g_max.
ClusterPartition partition_clusters(const BathConfiguration& bath, int g_max);

std::vector<Vector3> cluster_sites(const BathConfiguration& bath,
                                   const std::vector<std::size_t>& group);

// Plain-text bath archive; see README for the schema.
void write_bath(std::ostream& out, const BathConfiguration& bath);
BathConfiguration read_bath(std::istream& in);

}  // namespace nvrot
