#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "egpu/config.hpp"
#include "egpu/cycles.hpp"

namespace egpu {

// Rows of the golden cycle tables. Category rows come first in the same order as Category.
enum class Row { FP_OP, COMPLEX_OP, INT_OP, LOAD, STORE, STORE_VM, IMMEDIATE, BRANCH, NOP, TOTAL, TIME_US, EFFICIENCY, MEMORY };
inline constexpr int kRowCount = 13;

std::string_view row_name(Row r);
Row row_of(Category c);

struct GoldenKey {
  int radix;
  int points;
  Variant variant;
  auto operator<=>(const GoldenKey&) const = default;
};

// All (radix, points, variant) columns present in the golden tables.
const std::vector<GoldenKey>& golden_keys();
bool has_golden(const GoldenKey& key);
// Missing cells (dash, blank or an omitted row) return nullopt.
std::optional<double> golden_cell(const GoldenKey& key, Row row);
// Cells the diff reports but never gates, with the reason.
std::optional<std::string> golden_annotation(const GoldenKey& key, Row row);

struct IpCoreRow {
  int points;
  double ip_time_us;
  double egpu_time_us;
  double perf_ratio;
  double normalized_ratio;
};
const std::vector<IpCoreRow>& ip_core_reference();

struct GpuEfficiencyRow {
  std::string device;
  int points;
  double efficiency_pct;
};
const std::vector<GpuEfficiencyRow>& gpu_efficiency_reference();

struct RadixEightBudget {
  int fp_cycles = 3296;
  int int_cycles = 768;
  int wavefront = 32;
};
inline constexpr RadixEightBudget kRadixEightTotals{};

enum class Tolerance { Exact, Compute, Control, Info };
Tolerance tolerance_of(Row r);
double tolerance_fraction(Tolerance t);

struct DiffRow {
  Row row;
  double simulated = 0;
  std::optional<double> golden;
  double abs_delta = 0;
  double rel_delta = 0;
  Tolerance tolerance = Tolerance::Info;
  bool gated = false;
  bool pass = true;
  std::string note;
};

struct DiffReport {
  GoldenKey key;
  std::vector<DiffRow> rows;
  bool pass() const;
};

// Throws std::out_of_range for keys absent from the tables.
DiffReport diff_against_golden(const CycleBreakdown& b, const Metrics& m, const GoldenKey& key);

}  // namespace egpu
