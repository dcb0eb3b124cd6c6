#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "nvrot/bath.hpp"
#include "nvrot/error.hpp"
#include "nvrot/rng.hpp"

using namespace nvrot;

TEST(SplitMix64, ReferenceStream) {
  SplitMix64 zero(0);
  EXPECT_EQ(zero.next(), 0xE220A8397B1DCDAFULL);
  SplitMix64 g(1234567);
  EXPECT_EQ(g.next(), 6457827717110365317ULL);
  EXPECT_EQ(g.next(), 3203168211198807973ULL);
  EXPECT_EQ(g.next(), 9817491932198370423ULL);
}

TEST(SplitMix64, UniformInUnitInterval) {
  SplitMix64 g(42);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = g.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Lattice, MatchesFccPlusBasisEnumeration) {
  const double radius = 1.2;
  const auto sites = generate_lattice(radius);
  // diamond = fcc translations plus a (1/4,1/4,1/4) basis atom
  const double ac = cubic_lattice_constant();
  const Vector3 fcc[4] = {{0, 0, 0}, {0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}};
  std::vector<double> expected;
  const int n = static_cast<int>(radius / ac) + 2;
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j)
      for (int k = -n; k <= n; ++k)
        for (const auto& f : fcc)
          for (double shift : {0.0, 0.25}) {
            const Vector3 p = ac * (Vector3(i, j, k) + f + Vector3::Constant(shift));
            const double r = p.norm();
            if (r > 1e-9 && r <= radius) expected.push_back(r);
          }
  ASSERT_EQ(sites.size(), expected.size());
  std::vector<double> got;
  for (const auto& s : sites) got.push_back(s.position.norm());
  std::sort(got.begin(), got.end());
  std::sort(expected.begin(), expected.end());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-12);
}

TEST(Lattice, FourNearestNeighboursOneOnAxis) {
  const auto sites = generate_lattice(0.16);
  ASSERT_EQ(sites.size(), 4u);
  int on_axis = 0;
  for (const auto& s : sites) {
    EXPECT_NEAR(s.position.norm(), constants().a0, 1e-12);
    if (std::abs(s.position.z() - constants().a0) < 1e-12) ++on_axis;
  }
  EXPECT_EQ(on_axis, 1);
}

TEST(Lattice, CrystalToNvIsRotation) {
  const auto m = crystal_to_nv();
  EXPECT_LT((m * m.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(m.determinant(), 1.0, 1e-15);
  EXPECT_LT((m * Vector3(1, 1, 1).normalized() - Vector3::UnitZ()).norm(), 1e-15);
}

TEST(Lattice, RejectsNonPositiveRadius) {
  try {
    generate_lattice(0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "bath.invalid_argument");
  }
}

TEST(Sampling, OneDrawPerSiteInOrder) {
  const auto lattice = generate_lattice(1.5);
  const double p = 0.2;
  const auto bath = sample_bath(lattice, p, 99);
  SplitMix64 g(99);
  std::vector<Vector3> expected;
  for (const auto& s : lattice) {
    if (g.uniform() < p) expected.push_back(s.position);
  }
  ASSERT_EQ(bath.sites.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(bath.sites[i], expected[i]);
  EXPECT_EQ(bath.seed, 99u);
}

TEST(Sampling, OccupancyIsBinomial) {
  const auto lattice = generate_lattice(2.0);
  const double p = 0.011;
  const int seeds = 400;
  const double n = static_cast<double>(lattice.size());
  double mean = 0.0, m2 = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const double k = static_cast<double>(sample_bath(lattice, p, 1000 + s).sites.size());
    mean += k;
    m2 += k * k;
  }
  mean /= seeds;
  const double var = m2 / seeds - mean * mean;
  const double expect_mean = n * p;
  const double expect_var = n * p * (1.0 - p);
  EXPECT_NEAR(mean, expect_mean, 4.0 * std::sqrt(expect_var / seeds));
  // sample variance of a near-Poisson count; 25% is several standard errors at 400 samples
  EXPECT_NEAR(var, expect_var, 0.25 * expect_var);
}

TEST(Sampling, NaturalAbundanceBathSize) {
  double mean = 0.0;
  const int seeds = 30;
  for (int s = 0; s < seeds; ++s) mean += static_cast<double>(generate_bath({}, s).sites.size());
  mean /= seeds;
  EXPECT_GT(mean, 110.0);
  EXPECT_LT(mean, 140.0);
}

TEST(Sampling, RespectsRadiusAndExclusion) {
  BathParams params{0.2, 1.6, 0.5};
  const auto bath = generate_bath(params, 5);
  ASSERT_FALSE(bath.sites.empty());
  for (const auto& s : bath.sites) {
    EXPECT_GE(s.norm(), 0.5);
    EXPECT_LE(s.norm(), 1.6 + 1e-12);
  }
  EXPECT_THROW(generate_bath({0.01, 1.0, 1.0}, 1), Error);
}

TEST(Sampling, SameSeedSameBath) {
  const auto a = generate_bath({}, 17);
  const auto b = generate_bath({}, 17);
  EXPECT_EQ(a.sites, b.sites);
  const auto c = generate_bath({}, 18);
  EXPECT_NE(a.sites, c.sites);
}

TEST(Partition, DisjointCoverWithinLimit) {
  const auto bath = generate_bath({}, 3);
  for (int g : {1, 2, 3, 4}) {
    const auto part = partition_clusters(bath, g);
    std::set<std::size_t> seen;
    for (const auto& group : part.groups) {
      EXPECT_LE(static_cast<int>(group.size()), g);
      EXPECT_FALSE(group.empty());
      for (std::size_t i : group) EXPECT_TRUE(seen.insert(i).second);
    }
    EXPECT_EQ(seen.size(), bath.sites.size());
  }
  EXPECT_EQ(partition_clusters(bath, 1).groups.size(), bath.sites.size());
}

TEST(Partition, StrongestPairClustersFirst) {
  BathConfiguration bath;
  // pair (0,1) stacked along z couples strongly; site 2 is far away
  bath.sites = {Vector3(0, 0, 1.0), Vector3(0, 0, 1.2), Vector3(2.0, 0, 0)};
  const auto part = partition_clusters(bath, 2);
  ASSERT_EQ(part.groups.size(), 2u);
  bool paired = false;
  for (const auto& g : part.groups) {
    if (g.size() == 2) paired = (g[0] == 0 && g[1] == 1) || (g[0] == 1 && g[1] == 0);
  }
  EXPECT_TRUE(paired);
}

TEST(Partition, GroupingMetric) {
  const Vector3 a(0, 0, 0), b(0, 0, 0.5);
  EXPECT_NEAR(grouping_coupling(a, b), 2.0 / 0.125, 1e-12);
  // magic-angle separation decouples
  const Vector3 m(std::sin(std::acos(1.0 / std::sqrt(3.0))), 0.0, 1.0 / std::sqrt(3.0));
  EXPECT_NEAR(grouping_coupling(a, m), 0.0, 1e-12);
}

TEST(Archive, RoundTripIsExact) {
  const auto bath = generate_bath({0.03, 2.0, 0.3}, 7);
  std::stringstream ss;
  write_bath(ss, bath);
  const auto back = read_bath(ss);
  EXPECT_EQ(back.seed, bath.seed);
  EXPECT_EQ(back.abundance, bath.abundance);
  EXPECT_EQ(back.radius_nm, bath.radius_nm);
  EXPECT_EQ(back.min_distance_nm, bath.min_distance_nm);
  EXPECT_EQ(back.sites, bath.sites);
}

TEST(Archive, ReportsLineOfBadRecord) {
  const auto bath = generate_bath({0.05, 1.0, 0.0}, 2);
  std::stringstream ss;
  write_bath(ss, bath);
  std::string text = ss.str();
  text += "1.0 oops 2.0\n";
  std::istringstream in(text);
  try {
    read_bath(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "bath.parse");
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}
