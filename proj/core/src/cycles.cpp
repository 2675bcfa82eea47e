#include "egpu/cycles.hpp"

#include <numeric>
#include <stdexcept>

#include "egpu/machine.hpp"

namespace egpu {

Category category(Opcode op) {
  switch (op) {
    case Opcode::FADD:
    case Opcode::FSUB:
    case Opcode::FMUL:
      return Category::FP_OP;
    case Opcode::LOD_COEFF:
    case Opcode::MUL_REAL:
    case Opcode::MUL_IMAG:
      return Category::COMPLEX_OP;
    case Opcode::IADD:
    case Opcode::ISUB:
    case Opcode::IXOR:
    case Opcode::ISHL:
    case Opcode::ISHR:
    case Opcode::IAND:
    case Opcode::IOR:
    case Opcode::MOV:
      return Category::INT_OP;
    case Opcode::LOD:
      return Category::LOAD;
    case Opcode::SAVE:
      return Category::STORE;
    case Opcode::SAVE_BANK:
      return Category::STORE_VM;
    case Opcode::SETI:
    case Opcode::COEFF_EN:
    case Opcode::COEFF_DIS:
      return Category::IMMEDIATE;
    case Opcode::BRNZ:
    case Opcode::HALT:
      return Category::BRANCH;
    case Opcode::NOP:
      return Category::NOP;
  }
  return Category::NOP;
}

std::string_view category_name(Category c) {
  static constexpr std::string_view names[] = {"FP_OP", "Complex_OP", "INT_OP",    "Load", "Store",
                                               "StoreVM", "Immediate", "Branch", "NOP"};
  return names[static_cast<int>(c)];
}

std::uint64_t instruction_cost(const Instruction& in, const MachineConfig& config) {
  const std::uint64_t threads = static_cast<std::uint64_t>(config.threads);
  switch (category(in.op)) {
    case Category::FP_OP:
    case Category::COMPLEX_OP:
    case Category::INT_OP:
      return static_cast<std::uint64_t>(config.wavefront());
    case Category::LOAD:
      return threads / 4;
    case Category::STORE:
      return config.variant == MemoryVariant::QP ? threads / 2 : threads;
    case Category::STORE_VM:
      return threads / 4;
    case Category::BRANCH:
      return in.op == Opcode::HALT ? 0 : 1;
    case Category::IMMEDIATE:
    case Category::NOP:
      return 1;
  }
  return 0;
}

std::uint64_t CycleBreakdown::total() const { return std::accumulate(cycles.begin(), cycles.end(), std::uint64_t{0}); }

CycleBreakdown profile(const ExecutionTrace& trace) {
  CycleBreakdown b;
  for (const auto& e : trace.entries) b[e.category] += e.cycles;
  return b;
}

CycleBreakdown static_breakdown(const Program& program, const MachineConfig& config) {
  CycleBreakdown b;
  for (const auto& in : program.code) b[category(in.op)] += instruction_cost(in, config);
  return b;
}

double time_us(double total_cycles, double clock_hz) { return total_cycles / clock_hz * 1e6; }
double efficiency_pct(double baseline_fp, double total_cycles) { return 100.0 * baseline_fp / total_cycles; }
double memory_pct(double load, double store, double store_vm, double total_cycles) {
  return 100.0 * (load + store + store_vm) / total_cycles;
}

Metrics metrics(const CycleBreakdown& b, std::uint64_t baseline_fp, double clock_hz) {
  const auto total = b.total();
  if (total == 0) throw std::invalid_argument("metrics of an empty breakdown");
  if (baseline_fp > total) throw std::invalid_argument("baseline FP cycles exceed total cycles");
  Metrics m;
  m.baseline_fp_cycles = baseline_fp;
  m.time_us = time_us(static_cast<double>(total), clock_hz);
  m.efficiency_pct = efficiency_pct(static_cast<double>(baseline_fp), static_cast<double>(total));
  m.memory_pct = memory_pct(static_cast<double>(b[Category::LOAD]), static_cast<double>(b[Category::STORE]),
                            static_cast<double>(b[Category::STORE_VM]), static_cast<double>(total));
  return m;
}

}  // namespace egpu
