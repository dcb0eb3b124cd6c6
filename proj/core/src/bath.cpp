#include "nvrot/bath.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "nvrot/error.hpp"
#include "nvrot/rng.hpp"

namespace nvrot {

double cubic_lattice_constant(const PhysicalConstants& pc) {
  return 4.0 * pc.a0 / std::sqrt(3.0);
}

Eigen::Matrix3d crystal_to_nv() {
  Eigen::Matrix3d m;
  m.row(0) = Vector3(2.0, -1.0, -1.0).normalized();
  m.row(1) = Vector3(0.0, 1.0, -1.0).normalized();
  m.row(2) = Vector3(1.0, 1.0, 1.0).normalized();
  return m;
}

namespace {

bool is_diamond_site(int x, int y, int z) {
  const auto mod4 = [](int v) { return ((v % 4) + 4) % 4; };
  const int sum = mod4(x + y + z);
  const bool all_even = (x % 2 == 0) && (y % 2 == 0) && (z % 2 == 0);
  const bool all_odd = (x % 2 != 0) && (y % 2 != 0) && (z % 2 != 0);
  return (all_even && sum == 0) || (all_odd && sum == 3);
}

}  // namespace

std::vector<LatticeSite> generate_lattice(double radius_nm, const PhysicalConstants& pc) {
  if (!(radius_nm > 0.0)) {
    throw Error("bath.invalid_argument", "lattice radius must be positive");
  }
  const double quarter = cubic_lattice_constant(pc) / 4.0;
  const int n = static_cast<int>(std::floor(radius_nm / quarter)) + 1;
  const Eigen::Matrix3d to_nv = crystal_to_nv();
  std::vector<LatticeSite> sites;
  for (int x = -n; x <= n; ++x) {
    for (int y = -n; y <= n; ++y) {
      for (int z = -n; z <= n; ++z) {
        if ((x == 0 && y == 0 && z == 0) || !is_diamond_site(x, y, z)) continue;
        const Vector3 cubic = quarter * Vector3(x, y, z);
        if (cubic.norm() > radius_nm) continue;
        sites.push_back({{x, y, z}, to_nv * cubic});
      }
    }
  }
  return sites;
}

BathConfiguration sample_bath(std::span<const LatticeSite> sites, double abundance,
                              std::uint64_t seed) {
  if (!(abundance >= 0.0 && abundance <= 1.0)) {
    throw Error("bath.invalid_argument", "abundance must lie in [0, 1]");
  }
  BathConfiguration bath;
  bath.seed = seed;
  bath.abundance = abundance;
  SplitMix64 rng(seed);
  double r_max = 0.0;
  double r_min = sites.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const auto& site : sites) {
    const double r = site.position.norm();
    r_max = std::max(r_max, r);
    r_min = std::min(r_min, r);
    // Always draw, so abundance 1.0 and 0.0 share the stream layout.
    if (rng.uniform() < abundance) bath.sites.push_back(site.position);
  }
  bath.radius_nm = r_max;
  bath.min_distance_nm = std::isfinite(r_min) ? r_min : 0.0;
  return bath;
}

BathConfiguration generate_bath(const BathParams& params, std::uint64_t seed,
                                const PhysicalConstants& pc) {
  if (params.min_distance_nm < 0.0 || params.min_distance_nm >= params.radius_nm) {
    throw Error("bath.invalid_argument", "min_distance must lie in [0, radius)");
  }
  auto lattice = generate_lattice(params.radius_nm, pc);
  std::erase_if(lattice, [&](const LatticeSite& s) {
    return s.position.norm() < params.min_distance_nm;
  });
  BathConfiguration bath = sample_bath(lattice, params.abundance, seed);
  bath.radius_nm = params.radius_nm;
  bath.min_distance_nm = params.min_distance_nm;
  return bath;
}

double grouping_coupling(const Vector3& a, const Vector3& b) {
  const Vector3 d = a - b;
  const double r2 = d.squaredNorm();
  const double r = std::sqrt(r2);
  const double cos2 = d.z() * d.z() / r2;
  return std::abs(1.0 - 3.0 * cos2) / (r2 * r);
}

ClusterPartition partition_clusters(const BathConfiguration& bath, int g_max) {
  if (g_max < 1) throw Error("bath.invalid_argument", "g_max must be at least 1");
  const std::size_t n = bath.sites.size();

  struct Pair {
    double coupling;
    std::size_t i, j;
  };
  std::vector<Pair> pairs;
  pairs.reserve(n * (n > 0 ? n - 1 : 0) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      pairs.push_back({grouping_coupling(bath.sites[i], bath.sites[j]), i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.coupling != b.coupling) return a.coupling > b.coupling;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::vector<std::size_t> size(n, 1);
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  if (g_max > 1) {
    for (const auto& p : pairs) {
      std::size_t a = find(p.i);
      std::size_t b = find(p.j);
      if (a == b || size[a] + size[b] > static_cast<std::size_t>(g_max)) continue;
      if (b < a) std::swap(a, b);
      parent[b] = a;
      size[a] += size[b];
    }
  }

  ClusterPartition partition;
  partition.g_max = g_max;
  std::vector<long> group_of_root(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    if (group_of_root[root] < 0) {
      group_of_root[root] = static_cast<long>(partition.groups.size());
      partition.groups.emplace_back();
    }
    partition.groups[static_cast<std::size_t>(group_of_root[root])].push_back(i);
  }
  return partition;
}

std::vector<Vector3> cluster_sites(const BathConfiguration& bath,
                                   const std::vector<std::size_t>& group) {
  std::vector<Vector3> out;
  out.reserve(group.size());
  for (auto i : group) out.push_back(bath.sites.at(i));
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, int line) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw Error("bath.parse", "line " + std::to_string(line) + ": bad number '" + token + "'");
  }
  return v;
}

}  // namespace

void write_bath(std::ostream& out, const BathConfiguration& bath) {
  out << "# nvrot bath configuration; positions in nm, NV frame (+z = NV axis)\n";
  out << "format nvrot-bath 1\n";
  out << "seed " << bath.seed << '\n';
  out << "abundance " << format_double(bath.abundance) << '\n';
  out << "radius_nm " << format_double(bath.radius_nm) << '\n';
  out << "min_distance_nm " << format_double(bath.min_distance_nm) << '\n';
  out << "sites " << bath.sites.size() << '\n';
  for (const auto& s : bath.sites) {
    out << format_double(s.x()) << ' ' << format_double(s.y()) << ' ' << format_double(s.z())
        << '\n';
  }
}

BathConfiguration read_bath(std::istream& in) {
  BathConfiguration bath;
  std::string raw;
  int line = 0;
  bool have_format = false;
  long expected = -1;
  const auto fail = [&](const std::string& msg) {
    throw Error("bath.parse", "line " + std::to_string(line) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line;
    if (raw.empty() || raw[0] == '#') continue;
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (expected >= 0) {
      if (tok.size() != 3) fail("expected three coordinates");
      bath.sites.emplace_back(parse_double(tok[0], line), parse_double(tok[1], line),
                              parse_double(tok[2], line));
      continue;
    }
    const std::string& key = tok[0];
    if (key == "format") {
      if (tok.size() != 3 || tok[1] != "nvrot-bath" || tok[2] != "1") fail("unsupported format");
      have_format = true;
    } else if (key == "seed" && tok.size() == 2) {
      try {
        bath.seed = std::stoull(tok[1]);
      } catch (const std::exception&) {
        fail("bad seed");
      }
    } else if (key == "abundance" && tok.size() == 2) {
      bath.abundance = parse_double(tok[1], line);
    } else if (key == "radius_nm" && tok.size() == 2) {
      bath.radius_nm = parse_double(tok[1], line);
    } else if (key == "min_distance_nm" && tok.size() == 2) {
      bath.min_distance_nm = parse_double(tok[1], line);
    } else if (key == "sites" && tok.size() == 2) {
      expected = std::stol(tok[1]);
      if (expected < 0) fail("negative site count");
    } else {
      fail("unexpected entry '" + key + "'");
    }
  }
  if (!have_format) throw Error("bath.parse", "missing format line");
  if (expected < 0) throw Error("bath.parse", "missing sites section");
  if (static_cast<long>(bath.sites.size()) != expected) {
    throw Error("bath.parse", "site count mismatch: header says " + std::to_string(expected) +
                                  ", found " + std::to_string(bath.sites.size()));
  }
  return bath;
}

}  // namespace nvrot
