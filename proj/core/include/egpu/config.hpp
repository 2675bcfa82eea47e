#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace egpu {

enum class MemoryVariant { DP, QP, VM };

// The six architectural variants with golden columns.
enum class Variant { DP, DP_VM, DP_COMPLEX, DP_VM_COMPLEX, QP, QP_COMPLEX };

const std::vector<Variant>& all_variants();
std::string_view variant_name(Variant v);   // cli spelling: dp, dp-vm, ...
std::string_view variant_label(Variant v);  // table heading: eGPU-DP VM, ...
std::optional<Variant> parse_variant(std::string_view s);
MemoryVariant memory_variant(Variant v);
bool has_complex(Variant v);

inline constexpr double kClockDP = 771e6;
inline constexpr double kClockQP = 600e6;
inline constexpr int kMaxTotalRegisters = 32768;

struct MachineConfig {
  int num_sps = 16;
  int threads = 16;
  int regs_per_thread = 32;
  std::size_t shared_mem_bytes = 65536;
  MemoryVariant variant = MemoryVariant::DP;
  bool complex_enabled = false;
  double clock_hz = kClockDP;
  int pipeline_depth = 8;
  bool strict_banking = true;

  int wavefront() const { return threads / num_sps; }
  std::size_t words() const { return shared_mem_bytes / 4; }
  // Throws std::invalid_argument when an invariant is broken.
  void check() const;
};

MachineConfig make_config(Variant v, int threads, int regs_per_thread);

}  // namespace egpu
