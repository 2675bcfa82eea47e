#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "egpu/config.hpp"
#include "egpu/isa.hpp"

namespace egpu {

enum class Category : std::uint8_t { FP_OP, COMPLEX_OP, INT_OP, LOAD, STORE, STORE_VM, IMMEDIATE, BRANCH, NOP };
inline constexpr int kCategoryCount = 9;

Category category(Opcode op);
std::string_view category_name(Category c);  // FP_OP, Complex_OP, ... (CSV spelling)

std::uint64_t instruction_cost(const Instruction& in, const MachineConfig& config);

struct CycleBreakdown {
  std::array<std::uint64_t, kCategoryCount> cycles{};

  std::uint64_t& operator[](Category c) { return cycles[static_cast<int>(c)]; }
  std::uint64_t operator[](Category c) const { return cycles[static_cast<int>(c)]; }
  std::uint64_t total() const;
  bool operator==(const CycleBreakdown&) const = default;
};

struct Metrics {
  double time_us = 0;
  double efficiency_pct = 0;
  double memory_pct = 0;
  std::uint64_t baseline_fp_cycles = 0;
};

struct ExecutionTrace;

CycleBreakdown profile(const ExecutionTrace& trace);
// Static sum over program order; equals profile(run(...)) for straight-line code.
CycleBreakdown static_breakdown(const Program& program, const MachineConfig& config);
// Throws std::invalid_argument if total is 0 or baseline_fp exceeds total.
Metrics metrics(const CycleBreakdown& b, std::uint64_t baseline_fp, double clock_hz);

// Same identities applied to raw numbers (used on golden cells).
double time_us(double total_cycles, double clock_hz);
double efficiency_pct(double baseline_fp, double total_cycles);
double memory_pct(double load, double store, double store_vm, double total_cycles);

}  // namespace egpu
