#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "pemlab/maps.h"
#include "pemlab/parallel.h"

namespace pemlab {

struct TransversalityReport {
  double a = 0.0;
  std::vector<double> ratios;  // r_j = x_j'(a) / (T_a^j)'(x_0(a)), j = 1 .. j_max
  double bound_C = 1.0;        // max over j of max(|r_j|, 1/|r_j|)
  std::optional<std::size_t> truncated_at;  // first j whose step starts on a branch point
};

TransversalityReport transversality_ratios(const MapFamily& family, double a, std::size_t j_max);

struct PartitionCell {
  double a_lo = 0.0;
  double a_hi = 0.0;
  std::uint64_t code = 0;  // itinerary packed in base p0, first step most significant
  double min_deriv = 0.0;  // min |x_n'| over the cell
  double max_deriv = 0.0;
  double image_length = 0.0;  // |x_n(cell)|
  bool unresolved = false;
  bool exits_support = false;

  double length() const { return a_hi - a_lo; }
};

struct PartitionOptions {
  std::size_t grid_density = 0;  // 0 selects max(2048, 4 * p0^n)
  double bisection_tolerance = 1e-13;
  // Optional test of x in K(a); cells whose orbit leaves it are flagged.
  std::function<bool(double a, double x)> support;
};

inline constexpr std::size_t kPartitionDepthCap = 24;

// Intervals of J on which the itinerary of x_0(a) .. x_{n-1}(a) is constant.
class ParameterPartition {
 public:
  double j_lo = 0.0;
  double j_hi = 0.0;
  std::size_t depth = 0;
  int p0 = 2;
  std::vector<PartitionCell> cells;
  std::vector<double> boundary_params;
  std::size_t unresolved_count = 0;

  std::vector<std::uint8_t> itinerary(const PartitionCell& cell) const;
  // Index of the cell containing a, if any.
  std::optional<std::size_t> locate(double a) const;
};

std::uint64_t itinerary_code(const MapFamily& family, double a, std::size_t n);
std::vector<std::uint8_t> decode_itinerary(std::uint64_t code, std::size_t n, int p0);

ParameterPartition build_partition(const MapFamily& family, double j_lo, double j_hi, std::size_t n,
                                   const PartitionOptions& options = {},
                                   const Executor& executor = Executor::sequential());

struct ConditionSum {
  double value = 0.0;
  bool lower_bound = false;  // unresolved cells were left out
};

ConditionSum condition_iii_sum(const ParameterPartition& partition);

// Total length of resolved cells whose image is at most d.
double small_image_fraction(const ParameterPartition& partition, double d);

// |x_n'(a1) / x_n'(a2)| for two parameters of the same cell.
double distortion_ratio(const MapFamily& family, const ParameterPartition& partition,
                        const PartitionCell& cell, double a1, double a2);

struct GrowthPair {
  double parameter = 0.0;  // |x_n'(a)|
  double phase = 1.0;      // |(T_a^n)'(x_0(a))|
  bool truncated = false;
};

GrowthPair parameter_vs_phase_growth(const MapFamily& family, double a, std::size_t n);

void write_partition_csv(std::ostream& out, const ParameterPartition& partition);

}  // namespace pemlab
