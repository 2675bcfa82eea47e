#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "egpu/config.hpp"
#include "egpu/cycles.hpp"
#include "egpu/isa.hpp"
#include "egpu/machine.hpp"

namespace egpu {

enum class TwiddleClass { UNITY, NEGATE, POS_J, NEG_J, EQUAL_MAG, GENERAL };
std::string_view twiddle_class_name(TwiddleClass c);

// Throws std::invalid_argument unless |w| is 1 within 1e-6.
TwiddleClass classify_twiddle(std::complex<double> w);

// One rotation site of the in-register radix-2 DIF network: after the
// butterfly of `stage`, the difference term is multiplied by W_R^exponent.
struct RotationSite {
  int stage;
  int exponent;
  TwiddleClass cls;
};
std::vector<RotationSite> kernel_sites(int radix);

struct ExpandedBudget {
  int general = 0;
  int general_flops = 0;   // 6 per GENERAL
  int real_multiplies = 0; // 2 per EQUAL_MAG
  int other_ops = 0;       // 2 per quarter turn or negation
};
ExpandedBudget expanded_budget(const std::vector<RotationSite>& sites);

// How each rotation class is lowered, per radix.
enum class MoveKind { None, Int, Fp };
enum class QuarterTurn { IntPair, IntFp, FpPair, RenameXor };

struct KernelRecipe {
  std::vector<MoveKind> unity_by_stage;
  QuarterTurn quarter_turn = QuarterTurn::IntFp;
  bool complex_inner = false;       // GENERAL/EQUAL_MAG kernel rotations via the complex unit
  bool move_after_inner = false;    // MOV the rotated real part back into its home register
  bool twiddle_move_dp = false;
  bool twiddle_move_complex = false;
};
const KernelRecipe& recipe_for(int radix);

struct InstructionCounts {
  int fp = 0;
  int complex = 0;
  int int_ops = 0;
  int load = 0;
  int store = 0;
  int store_vm = 0;
  int immediate = 0;
  int nop = 0;
};
InstructionCounts count_instructions(const std::vector<Instruction>& code);

struct KernelCode {
  std::vector<Instruction> code;
  InstructionCounts counts;
};

// In-register radix-R DFT followed by R-1 twiddle rotations (twiddles assumed
// already in registers). Used for budgets; emit_program builds the same code.
KernelCode gen_kernel(int radix, bool complex_enabled);

struct PassInfo {
  int radix = 0;
  int stride = 0;        // distance between the R inputs of one kernel
  int blocks = 1;        // >1 for a trailing smaller radix
  bool twiddled = false;
  bool vm_eligible = false;
  std::uint32_t tw_re = 0;  // twiddle table bases (words)
  std::uint32_t tw_im = 0;
};

struct FFTPlan {
  int points = 0;
  int radix = 0;
  std::vector<int> radix_schedule;
  int threads = 0;
  int regs_per_thread = 0;
  int wavefront_depth = 0;
  std::vector<PassInfo> passes;
  std::uint32_t data_re = 0;
  std::uint32_t data_im = 0;
  std::uint32_t words_used = 0;
};

// Throws std::invalid_argument for unsupported combinations.
FFTPlan plan(int points, int radix, int num_sps = 16);
MachineConfig plan_config(const FFTPlan& p, Variant v);

bool vm_eligibility(const FFTPlan& p, int pass_index);

// Data index (into the planar data region) thread `t` touches for input k in
// `pass` and block `b`.
std::uint32_t load_index(const FFTPlan& p, int pass, int t, int k, int block = 0);
// Natural-order output index of kernel output f in the last pass.
std::uint32_t output_index(const FFTPlan& p, int t, int f, int block = 0);

std::vector<Instruction> gen_addressing(const FFTPlan& p, int pass_index);

struct Compiled {
  Program program;
  CycleBreakdown predicted;
  InstructionCounts counts;
  std::vector<int> store_vm_passes;
};

struct EmitOptions {
  // false: every kernel rotation, trivial ones included, becomes a full complex multiply.
  bool strength_reduction = true;
};

// Throws std::invalid_argument on plan/config mismatch or register exhaustion.
Compiled emit_program(const FFTPlan& p, const MachineConfig& config, const EmitOptions& options = {});

// FP cycles of the plain DP compile; the efficiency baseline for every variant.
std::uint64_t baseline_fp_cycles(const FFTPlan& p);

SharedMemoryImage init_memory(const FFTPlan& p, const std::vector<std::complex<double>>& input,
                              std::size_t words = 16384);
std::vector<std::complex<double>> read_output(const FFTPlan& p, const SharedMemoryImage& image);

// JSON sidecar text: plan, per-pass eligibility, predicted breakdown, memory map.
std::string plan_sidecar_json(const FFTPlan& p, const Compiled& c, Variant v);

}  // namespace egpu
