#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "egpu/config.hpp"
#include "egpu/cycles.hpp"
#include "egpu/isa.hpp"

namespace egpu {

inline constexpr int kBanks = 4;

class MachineError : public std::runtime_error {
 public:
  enum class Kind { Validation, InvalidBankRead, CacheUninitialized, BranchDivergence, AddressRange, StepLimit };
  MachineError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

class SharedMemoryImage {
 public:
  SharedMemoryImage() = default;
  explicit SharedMemoryImage(std::size_t words);

  std::size_t words() const { return banks_[0].size(); }
  std::uint32_t word(int bank, std::size_t addr) const { return banks_[bank].at(addr); }
  bool valid(int bank, std::size_t addr) const { return valid_[bank].at(addr) != 0; }

  // Host-side initialization: writes all banks and marks them valid.
  void poke(std::size_t addr, std::uint32_t value);
  void poke_float(std::size_t addr, float value);
  // Bank-0 view.
  std::uint32_t peek(std::size_t addr) const { return word(0, addr); }
  float peek_float(std::size_t addr) const;

  void store_standard(std::size_t addr, std::uint32_t value);
  void store_banked(int bank, std::size_t addr, std::uint32_t value);

  bool banks_identical() const;

  // Little-endian words of bank 0 in `path`; per-word bank validity mask in
  // `path` + ".valid" (one byte per word, bit b = bank b valid).
  void save(const std::filesystem::path& path) const;
  static SharedMemoryImage load(const std::filesystem::path& path);

  bool operator==(const SharedMemoryImage&) const = default;

 private:
  std::array<std::vector<std::uint32_t>, kBanks> banks_;
  std::array<std::vector<std::uint8_t>, kBanks> valid_;
};

enum class StoreMode { Standard, Banked };

// One row of SPs storing in the same cycle group. sp_values[i] is written by SP i.
void mem_store(std::span<const std::uint32_t> sp_values, std::span<const std::uint32_t> addrs,
               StoreMode mode, const MachineConfig& config, SharedMemoryImage& image);

struct CoefficientCache {
  struct Slot {
    float re = 0.0f;
    float im = 0.0f;
    bool valid = false;
  };
  std::vector<Slot> slots;
  bool enabled = false;
};

// Sum-of-two-multipliers unit: products rounded to f32 before the final add.
float exec_complex(Opcode op, float a, float b, float tw_re, float tw_im);

struct TraceEntry {
  std::size_t index;
  Opcode op;
  Category category;
  std::uint64_t cycles;
};

struct ExecutionTrace {
  std::vector<TraceEntry> entries;
  int wavefront_depth = 0;
  int threads = 0;
  int regs_per_thread = 0;
  std::vector<std::uint32_t> registers;  // thread-major: registers[t * regs + r]
  SharedMemoryImage memory;
  std::uint64_t total_cycles = 0;

  std::uint32_t reg(int thread, int r) const { return registers.at(static_cast<std::size_t>(thread) * regs_per_thread + r); }
  float reg_float(int thread, int r) const;
};

struct RunOptions {
  std::size_t max_steps = 10'000'000;
  // Lets a test seed registers before execution; R0 is set to the thread id first.
  std::vector<std::pair<int, std::vector<std::uint32_t>>> preload;
};

ExecutionTrace run(const Program& program, const MachineConfig& config, SharedMemoryImage memory,
                   const RunOptions& options = {});

struct Hazard {
  std::size_t producer;
  std::size_t consumer;
  std::uint64_t gap;
  std::uint64_t missing;
};

// Read-after-write pairs closer than the pipeline depth, measured in issue
// cycles along program order.
std::vector<Hazard> check_hazards(const Program& program, const MachineConfig& config);

}  // namespace egpu
