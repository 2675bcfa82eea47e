#include <gtest/gtest.h>

#include <random>

#include "egpu/config.hpp"
#include "egpu/fftgen.hpp"
#include "egpu/isa.hpp"

using namespace egpu;

namespace {

int asm_error_line(std::string_view src) {
  try {
    assemble(src);
  } catch (const AsmError& e) {
    return e.line();
  }
  return -1;
}

bool has_violation(const std::vector<Violation>& v, std::string_view needle) {
  for (const auto& x : v)
    if (x.message.find(needle) != std::string::npos) return true;
  return false;
}

Instruction random_instruction(std::mt19937& rng, std::size_t code_size) {
  std::uniform_int_distribution<int> op_d(0, kOpcodeCount - 1), reg_d(0, kMaxRegisterIndex), coin(0, 1);
  Instruction in;
  in.op = static_cast<Opcode>(op_d(rng));
  switch (shape(in.op)) {
    case Shape::R3:
      in.dest = reg_d(rng), in.src1 = reg_d(rng), in.src2 = reg_d(rng);
      break;
    case Shape::R2:
      in.dest = reg_d(rng), in.src1 = reg_d(rng);
      break;
    case Shape::RI:
      in.dest = reg_d(rng);
      in.imm = static_cast<std::uint32_t>(rng());
      break;
    case Shape::PAIR:
      in.src1 = reg_d(rng), in.src2 = reg_d(rng);
      break;
    case Shape::LOAD:
    case Shape::STORE:
      in.dest = reg_d(rng), in.src1 = reg_d(rng);
      if (coin(rng)) in.src2 = reg_d(rng);
      break;
    case Shape::BR:
      in.src1 = reg_d(rng);
      in.imm = static_cast<std::uint32_t>(rng() % code_size);
      break;
    case Shape::NONE:
      break;
  }
  return in;
}

}  // namespace

TEST(Assemble, MulRealFromListing) {
  auto p = assemble("MUL_REAL R6, R8, R9; -- real part");
  ASSERT_EQ(p.code.size(), 1u);
  EXPECT_EQ(p.code[0], (Instruction{Opcode::MUL_REAL, 6, 8, 9, 0}));
  EXPECT_TRUE(p.features.complex);
  EXPECT_FALSE(p.features.vm);
}

TEST(Assemble, NopHasNoOperands) {
  auto p = assemble("NOP");
  ASSERT_EQ(p.code.size(), 1u);
  EXPECT_EQ(p.code[0], Instruction{Opcode::NOP});
}

TEST(Assemble, LabelsAndBranches) {
  auto p = assemble("SETI R1, 3\nloop:\n  ISUB R1, R1, R2\n  BRNZ R1, loop\nHALT\n");
  EXPECT_EQ(p.labels.at("loop"), 1u);
  EXPECT_EQ(p.code[2].imm, 1u);
  EXPECT_EQ(p.regs_required, 3);
}

TEST(Assemble, LoadStoreOptionalSecondAddress) {
  auto p = assemble("LOD R4, R1\nLOD R5, R1, R2\nSAVE R4, R3\nSAVE_BANK R5, R3, R2\nHALT");
  EXPECT_EQ(p.code[0].src2, -1);
  EXPECT_EQ(p.code[1].src2, 2);
  EXPECT_EQ(p.code[2].dest, 4);
  EXPECT_TRUE(p.features.vm);
}

TEST(Assemble, ErrorsCarryLineNumbers) {
  EXPECT_EQ(asm_error_line("NOP\nFROB R1, R2\n"), 2);
  EXPECT_EQ(asm_error_line("NOP\nNOP\nFADD R1, R2\n"), 3);
  EXPECT_EQ(asm_error_line("IADD R1, R2, R300"), 1);
  EXPECT_EQ(asm_error_line("SETI R1, zebra"), 1);
  EXPECT_EQ(asm_error_line("a:\nNOP\na:\nHALT"), 3);
  EXPECT_EQ(asm_error_line("NOP\n\nBRNZ R1, nowhere"), 3);
  EXPECT_EQ(asm_error_line("NOP R1"), 1);
  EXPECT_EQ(asm_error_line("LOD R1"), 1);
}

TEST(Disassemble, Examples) {
  Program p;
  p.code.push_back({Opcode::LOD_COEFF, -1, 30, 31, 0});
  EXPECT_EQ(format_instruction(p.code[0]), "LOD_COEFF R30, R31");
  Program h;
  h.code.push_back({Opcode::HALT});
  EXPECT_EQ(disassemble(h), "HALT\n");
}

TEST(RoundTrip, TextIsStable) {
  const std::string src = "start:\nSETI R1, 0x3F800000\nFADD R2, R1, R1\nBRNZ R2, start\nHALT\n";
  auto p = assemble(src);
  EXPECT_EQ(disassemble(p), src);
  EXPECT_EQ(assemble(disassemble(p)), p);
}

TEST(RoundTrip, RandomInstructionStreams) {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    Program p;
    const std::size_t n = 1 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) p.code.push_back(random_instruction(rng, n));
    p.refresh_metadata();
    auto back = assemble(disassemble(p));
    ASSERT_EQ(back.code, p.code) << "trial " << trial;
    EXPECT_EQ(back.features, p.features);
    EXPECT_EQ(back.regs_required, p.regs_required);
  }
}

TEST(RoundTrip, GeneratedPrograms) {
  for (auto [radix, points] : {std::pair{4, 256}, {8, 512}, {16, 1024}}) {
    for (auto v : {Variant::DP, Variant::DP_VM_COMPLEX, Variant::QP}) {
      auto pl = plan(points, radix);
      auto c = emit_program(pl, plan_config(pl, v));
      auto back = assemble(disassemble(c.program));
      EXPECT_EQ(back.code, c.program.code) << radix << " " << points << " " << variant_name(v);
    }
  }
}

TEST(Validate, FeatureGates) {
  auto banked = assemble("SAVE_BANK R1, R2\nHALT");
  EXPECT_TRUE(has_violation(validate(banked, make_config(Variant::DP, 16, 32)), "virtual banking unavailable"));
  EXPECT_TRUE(validate(banked, make_config(Variant::DP_VM, 16, 32)).empty());

  auto cx = assemble("COEFF_EN\nLOD_COEFF R2, R3\nMUL_REAL R6, R8, R9\nHALT");
  EXPECT_TRUE(validate(cx, make_config(Variant::DP_COMPLEX, 16, 32)).empty());
  EXPECT_TRUE(has_violation(validate(cx, make_config(Variant::DP, 16, 32)), "complex feature unavailable"));
}

TEST(Validate, RegisterLimit) {
  auto p = assemble("IADD R40, R1, R2\nHALT");
  auto v = validate(p, make_config(Variant::DP, 1024, 32));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].index, 0u);
  EXPECT_TRUE(validate(p, make_config(Variant::DP, 512, 64)).empty());
}

TEST(Validate, MissingHalt) {
  auto p = assemble("NOP");
  EXPECT_TRUE(has_violation(validate(p, make_config(Variant::DP, 16, 32)), "HALT"));
  EXPECT_TRUE(has_violation(validate(Program{}, make_config(Variant::DP, 16, 32)), "HALT"));
}

TEST(Mnemonics, ParseIsInverseOfPrint) {
  for (int i = 0; i < kOpcodeCount; ++i) {
    auto op = static_cast<Opcode>(i);
    EXPECT_EQ(parse_mnemonic(mnemonic(op)), op);
  }
  EXPECT_FALSE(parse_mnemonic("FMA").has_value());
}
