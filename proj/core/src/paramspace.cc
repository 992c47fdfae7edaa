#include "pemlab/paramspace.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pemlab/error.h"
#include "text.h"

namespace pemlab {

TransversalityReport transversality_ratios(const MapFamily& family, double a, std::size_t j_max) {
  family.require_admissible(a);
  if (family.x0_deriv(a) == 0.0) {
    throw DegenerateSeedError("x_0'(a) = 0: the seed does not move with the parameter");
  }
  const OrbitRecord orbit = family.orbit(a, j_max);
  TransversalityReport report;
  report.a = a;
  std::size_t last = j_max;
  if (orbit.hit_boundary()) {
    report.truncated_at = orbit.boundary_hits.front();
    last = orbit.boundary_hits.front();
  }
  for (std::size_t j = 1; j <= last; ++j) {
    const double r = orbit.a_derivative[j] / orbit.x_derivative[j];
    report.ratios.push_back(r);
    const double c = std::max(std::abs(r), 1.0 / std::abs(r));
    report.bound_C = std::max(report.bound_C, c);
  }
  return report;
}

std::uint64_t itinerary_code(const MapFamily& family, double a, std::size_t n) {
  const auto base = static_cast<std::uint64_t>(family.p0());
  double x = family.x0(a);
  std::uint64_t code = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int k = family.branch_of(a, x);
    code = code * base + static_cast<std::uint64_t>(k - 1);
    x = family.step(a, x);
  }
  return code;
}

std::vector<std::uint8_t> decode_itinerary(std::uint64_t code, std::size_t n, int p0) {
  std::vector<std::uint8_t> out(n);
  const auto base = static_cast<std::uint64_t>(p0);
  for (std::size_t i = n; i-- > 0;) {
    out[i] = static_cast<std::uint8_t>(code % base + 1);
    code /= base;
  }
  return out;
}

std::vector<std::uint8_t> ParameterPartition::itinerary(const PartitionCell& cell) const {
  return decode_itinerary(cell.code, depth, p0);
}

std::optional<std::size_t> ParameterPartition::locate(double a) const {
  auto it = std::upper_bound(cells.begin(), cells.end(), a,
                             [](double v, const PartitionCell& c) { return v < c.a_lo; });
  if (it == cells.begin()) return std::nullopt;
  --it;
  if (a > it->a_hi) return std::nullopt;
  return static_cast<std::size_t>(it - cells.begin());
}

namespace {

struct Bracket {
  double lo;
  double hi;
};

// Narrows [l, r] around every itinerary change between its ends.
void locate_changes(const MapFamily& family, std::size_t n, double tol, double l, std::uint64_t cl,
                    double r, std::uint64_t cr, std::vector<Bracket>& out, int depth = 0) {
  while (r - l > tol) {
    const double m = 0.5 * (l + r);
    if (m <= l || m >= r) break;
    const std::uint64_t cm = itinerary_code(family, m, n);
    if (cm == cl) {
      l = m;
    } else if (cm == cr) {
      r = m;
    } else if (depth < 200) {
      locate_changes(family, n, tol, l, cl, m, cm, out, depth + 1);
      locate_changes(family, n, tol, m, cm, r, cr, out, depth + 1);
      return;
    } else {
      break;
    }
  }
  out.push_back({l, r});
}

std::vector<double> chebyshev_nodes(double lo, double hi, std::size_t count) {
  std::vector<double> nodes(count);
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) /
                              (2.0 * static_cast<double>(count)));
    nodes[i] = c + h * t;
  }
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

constexpr std::size_t kChebyshevNodes = 17;

struct CellScan {
  PartitionCell cell;
  std::vector<Bracket> extra;  // itinerary changes found inside the cell
};

CellScan scan_cell(const MapFamily& family, std::size_t n, const PartitionOptions& options,
                   double lo, double hi) {
  CellScan scan;
  PartitionCell& cell = scan.cell;
  cell.a_lo = lo;
  cell.a_hi = hi;
  const double tol = options.bisection_tolerance;
  const double mid = 0.5 * (lo + hi);
  cell.code = itinerary_code(family, mid, n);
  if (hi - lo <= 2.0 * tol) {
    cell.unresolved = true;
    return scan;
  }
  const auto nodes = chebyshev_nodes(lo, hi, kChebyshevNodes);
  // Itinerary self-check on the nodes; disagreements are bisected against the
  // midpoint itinerary.
  std::vector<std::uint64_t> codes(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) codes[i] = itinerary_code(family, nodes[i], n);
  double prev_a = lo + tol;
  std::uint64_t prev_c = itinerary_code(family, prev_a, n);
  std::vector<double> probe_a(nodes.begin(), nodes.end());
  probe_a.push_back(hi - tol);
  codes.push_back(itinerary_code(family, hi - tol, n));
  for (std::size_t i = 0; i < probe_a.size(); ++i) {
    if (codes[i] != prev_c) {
      locate_changes(family, n, tol, prev_a, prev_c, probe_a[i], codes[i], scan.extra);
    }
    prev_a = probe_a[i];
    prev_c = codes[i];
  }
  if (!scan.extra.empty()) return scan;

  const auto itinerary = decode_itinerary(cell.code, n, family.p0());
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  double xmin = dmin, xmax = -dmin;
  const auto take = [&](double a) {
    const auto [x, d] = family.orbit_along(a, itinerary);
    dmin = std::min(dmin, std::abs(d));
    dmax = std::max(dmax, std::abs(d));
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  };
  take(lo);
  for (double a : nodes) take(a);
  take(hi);
  cell.min_deriv = dmin;
  cell.max_deriv = dmax;
  cell.image_length = std::min(1.0, xmax - xmin);

  if (options.support) {
    double x = family.x0(mid);
    for (std::size_t i = 0; i < n; ++i) {
      if (!options.support(mid, x)) {
        cell.exits_support = true;
        break;
      }
      x = family.step(mid, x);
    }
  }
  return scan;
}

}  // namespace

ParameterPartition build_partition(const MapFamily& family, double j_lo, double j_hi, std::size_t n,
                                   const PartitionOptions& options, const Executor& executor) {
  if (n < 1) throw DomainError("partition depth must be at least 1");
  if (n > kPartitionDepthCap) {
    throw DepthCapError("partition depth " + std::to_string(n) + " exceeds the cap of " +
                        std::to_string(kPartitionDepthCap) + "; use sampled cells instead");
  }
  if (!(j_lo < j_hi)) throw DomainError("partition interval must have j_lo < j_hi");
  family.require_admissible(j_lo);
  family.require_admissible(j_hi);
  const double tol = options.bisection_tolerance;
  if (!(tol > 0.0)) throw DomainError("bisection tolerance must be positive");

  std::size_t grid = options.grid_density;
  if (grid == 0) {
    const double cells = std::pow(static_cast<double>(family.p0()), static_cast<double>(n));
    grid = static_cast<std::size_t>(std::max(2048.0, 4.0 * cells));
  }

  // Initial scan; both ends are pulled inside J by one tolerance.
  std::vector<double> grid_a(grid + 1);
  for (std::size_t m = 0; m <= grid; ++m) {
    grid_a[m] = j_lo + (j_hi - j_lo) * static_cast<double>(m) / static_cast<double>(grid);
  }
  grid_a.front() = j_lo + tol;
  grid_a.back() = j_hi - tol;
  const auto codes = executor.map<std::uint64_t>(
      grid_a.size(), [&](std::size_t m) { return itinerary_code(family, grid_a[m], n); });

  std::vector<std::size_t> changes;
  for (std::size_t m = 0; m < grid; ++m) {
    if (codes[m] != codes[m + 1]) changes.push_back(m);
  }
  const auto found = executor.map<std::vector<Bracket>>(changes.size(), [&](std::size_t c) {
    std::vector<Bracket> out;
    const std::size_t m = changes[c];
    locate_changes(family, n, tol, grid_a[m], codes[m], grid_a[m + 1], codes[m + 1], out);
    return out;
  });
  std::vector<Bracket> brackets;
  for (const auto& f : found) brackets.insert(brackets.end(), f.begin(), f.end());

  ParameterPartition partition;
  partition.j_lo = j_lo;
  partition.j_hi = j_hi;
  partition.depth = n;
  partition.p0 = family.p0();

  std::vector<CellScan> scans;
  for (int round = 0; round < 4; ++round) {
    std::sort(brackets.begin(), brackets.end(),
              [](const Bracket& x, const Bracket& y) { return x.lo < y.lo; });
    std::vector<double> edges{j_lo};
    for (const Bracket& b : brackets) edges.push_back(0.5 * (b.lo + b.hi));
    edges.push_back(j_hi);
    scans = executor.map<CellScan>(edges.size() - 1, [&](std::size_t i) {
      return scan_cell(family, n, options, edges[i], edges[i + 1]);
    });
    std::size_t added = 0;
    for (const CellScan& s : scans) {
      brackets.insert(brackets.end(), s.extra.begin(), s.extra.end());
      added += s.extra.size();
    }
    if (added == 0) break;
  }

  for (CellScan& s : scans) {
    if (!s.extra.empty()) s.cell.unresolved = true;
    if (s.cell.unresolved) ++partition.unresolved_count;
    partition.cells.push_back(s.cell);
  }
  for (std::size_t i = 1; i < partition.cells.size(); ++i) {
    partition.boundary_params.push_back(partition.cells[i].a_lo);
  }
  return partition;
}

ConditionSum condition_iii_sum(const ParameterPartition& partition) {
  ConditionSum sum;
  for (const PartitionCell& c : partition.cells) {
    if (c.unresolved) continue;
    sum.value += 1.0 / c.max_deriv;
  }
  sum.lower_bound = partition.unresolved_count > 0;
  return sum;
}

double small_image_fraction(const ParameterPartition& partition, double d) {
  double total = 0.0;
  for (const PartitionCell& c : partition.cells) {
    if (!c.unresolved && c.image_length <= d) total += c.length();
  }
  return total;
}

double distortion_ratio(const MapFamily& family, const ParameterPartition& partition,
                        const PartitionCell& cell, double a1, double a2) {
  for (double a : {a1, a2}) {
    if (!(a >= cell.a_lo && a <= cell.a_hi)) {
      throw UsageError("parameter " + detail::format_double(a) + " is not in the cell");
    }
    const bool interior = a > cell.a_lo + 1e-12 && a < cell.a_hi - 1e-12;
    if (interior && itinerary_code(family, a, partition.depth) != cell.code) {
      throw UsageError("parameter " + detail::format_double(a) +
                       " has a different itinerary from the cell");
    }
  }
  if (a1 == a2) return 1.0;
  const auto itinerary = partition.itinerary(cell);
  const double d1 = family.orbit_along(a1, itinerary).second;
  const double d2 = family.orbit_along(a2, itinerary).second;
  return std::abs(d1 / d2);
}

GrowthPair parameter_vs_phase_growth(const MapFamily& family, double a, std::size_t n) {
  const OrbitRecord orbit = family.orbit(a, n);
  return {std::abs(orbit.a_derivative[n]), std::abs(orbit.x_derivative[n]), orbit.hit_boundary()};
}

void write_partition_csv(std::ostream& out, const ParameterPartition& partition) {
  out << "a_lo,a_hi,itinerary,min_deriv,max_deriv,image_length\n";
  for (const PartitionCell& c : partition.cells) {
    out << detail::format_double(c.a_lo) << ',' << detail::format_double(c.a_hi) << ',';
    const auto it = partition.itinerary(c);
    for (std::size_t i = 0; i < it.size(); ++i) {
      if (i) out << '.';
      out << static_cast<int>(it[i]);
    }
    out << ',' << detail::format_double(c.min_deriv) << ',' << detail::format_double(c.max_deriv)
        << ',' << detail::format_double(c.image_length) << '\n';
  }
}

}  // namespace pemlab
