#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace egpu {

struct MachineConfig;

enum class Opcode : std::uint8_t {
  IADD, ISUB, IXOR, ISHL, ISHR, IAND, IOR, MOV, SETI,
  FADD, FSUB, FMUL,
  LOD_COEFF, MUL_REAL, MUL_IMAG, COEFF_EN, COEFF_DIS,
  LOD, SAVE, SAVE_BANK,
  BRNZ, NOP, HALT,
};

inline constexpr int kOpcodeCount = static_cast<int>(Opcode::HALT) + 1;

// Largest register index the text format accepts; validate() checks the
// per-configuration limit.
inline constexpr int kMaxRegisterIndex = 255;

// Operand layout per opcode.
//   R3    Rd, Ra, Rb      integer/FP ALU, MUL_REAL, MUL_IMAG
//   R2    Rd, Ra          MOV
//   RI    Rd, imm         SETI
//   PAIR  Ra, Rb          LOD_COEFF
//   LOAD  Rd, Ra[, Rb]    address = Ra (+ Rb)
//   STORE Rv, Ra[, Rb]    value register is held in `dest`
//   BR    Ra, target      BRNZ, target index in `imm`
//   NONE                  NOP, HALT, COEFF_EN, COEFF_DIS
enum class Shape : std::uint8_t { R3, R2, RI, PAIR, LOAD, STORE, BR, NONE };

std::string_view mnemonic(Opcode op);
std::optional<Opcode> parse_mnemonic(std::string_view text);
Shape shape(Opcode op);
bool needs_vm(Opcode op);
bool needs_complex(Opcode op);

struct Instruction {
  Opcode op = Opcode::NOP;
  int dest = -1;
  int src1 = -1;
  int src2 = -1;
  std::uint32_t imm = 0;

  bool operator==(const Instruction&) const = default;
};

// Registers an instruction reads and writes (stores read their value register).
std::vector<int> reads(const Instruction& in);
std::optional<int> writes(const Instruction& in);

struct Features {
  bool vm = false;
  bool complex = false;
  bool operator==(const Features&) const = default;
};

struct Program {
  std::vector<Instruction> code;
  std::map<std::string, std::size_t> labels;
  Features features;
  int regs_required = 1;
  int threads_required = 0;  // 0 = any

  // Recomputes features and regs_required from the code.
  void refresh_metadata();

  bool operator==(const Program& o) const { return code == o.code && labels == o.labels; }
};

class AsmError : public std::runtime_error {
 public:
  AsmError(int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

Program assemble(std::string_view source);
std::string disassemble(const Program& program);
std::string format_instruction(const Instruction& in, const Program* program = nullptr);

struct Violation {
  std::size_t index;  // instruction index, or code.size() for whole-program issues
  std::string message;
};

std::vector<Violation> validate(const Program& program, const MachineConfig& config);

}  // namespace egpu
