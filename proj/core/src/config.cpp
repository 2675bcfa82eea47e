#include "egpu/config.hpp"

#include <array>
#include <stdexcept>

namespace egpu {

namespace {
struct VariantInfo {
  Variant v;
  std::string_view name;
  std::string_view label;
  MemoryVariant mem;
  bool complex;
};
constexpr std::array<VariantInfo, 6> kVariants{{
    {Variant::DP, "dp", "eGPU-DP", MemoryVariant::DP, false},
    {Variant::DP_VM, "dp-vm", "eGPU-DP VM", MemoryVariant::VM, false},
    {Variant::DP_COMPLEX, "dp-complex", "eGPU-DP Complex", MemoryVariant::DP, true},
    {Variant::DP_VM_COMPLEX, "dp-vm-complex", "eGPU-DP VM+Complex", MemoryVariant::VM, true},
    {Variant::QP, "qp", "eGPU-QP", MemoryVariant::QP, false},
    {Variant::QP_COMPLEX, "qp-complex", "eGPU-QP Complex", MemoryVariant::QP, true},
}};
const VariantInfo& info(Variant v) { return kVariants[static_cast<int>(v)]; }
}  // namespace

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::DP, Variant::DP_VM, Variant::DP_COMPLEX,
                                      Variant::DP_VM_COMPLEX, Variant::QP, Variant::QP_COMPLEX};
  return v;
}

std::string_view variant_name(Variant v) { return info(v).name; }
std::string_view variant_label(Variant v) { return info(v).label; }
MemoryVariant memory_variant(Variant v) { return info(v).mem; }
bool has_complex(Variant v) { return info(v).complex; }

std::optional<Variant> parse_variant(std::string_view s) {
  for (const auto& i : kVariants)
    if (i.name == s) return i.v;
  return std::nullopt;
}

void MachineConfig::check() const {
  if (num_sps <= 0 || num_sps % 4 != 0) throw std::invalid_argument("num_sps must be a positive multiple of 4");
  if (threads <= 0 || threads % num_sps != 0) throw std::invalid_argument("threads must be a positive multiple of num_sps");
  if (regs_per_thread <= 0) throw std::invalid_argument("regs_per_thread must be positive");
  if (static_cast<long long>(threads) * regs_per_thread > kMaxTotalRegisters)
    throw std::invalid_argument("threads x regs_per_thread exceeds 32768");
  if (shared_mem_bytes == 0 || shared_mem_bytes % 4 != 0) throw std::invalid_argument("shared memory must be whole words");
  if (clock_hz <= 0) throw std::invalid_argument("clock must be positive");
  if (pipeline_depth <= 0) throw std::invalid_argument("pipeline depth must be positive");
}

MachineConfig make_config(Variant v, int threads, int regs_per_thread) {
  MachineConfig c;
  c.threads = threads;
  c.regs_per_thread = regs_per_thread;
  c.variant = memory_variant(v);
  c.complex_enabled = has_complex(v);
  c.clock_hz = c.variant == MemoryVariant::QP ? kClockQP : kClockDP;
  c.check();
  return c;
}

}  // namespace egpu
