#include <gtest/gtest.h>

#include <array>
#include <bit>
#include <cmath>
#include <filesystem>
#include <random>

#include "egpu/config.hpp"
#include "egpu/machine.hpp"

using namespace egpu;

namespace {

MachineConfig cfg(Variant v, int threads, int regs = 32) { return make_config(v, threads, regs); }

std::uint32_t fbits(float x) { return std::bit_cast<std::uint32_t>(x); }

MachineError::Kind error_kind(const Program& p, const MachineConfig& c, SharedMemoryImage m = {},
                              const RunOptions& o = {}) {
  try {
    run(p, c, std::move(m), o);
  } catch (const MachineError& e) {
    return e.kind;
  }
  ADD_FAILURE() << "no error raised";
  return MachineError::Kind::Validation;
}

}  // namespace

TEST(Run, ThreadIdPreload) {
  auto p = assemble("SETI R1, 5\nIADD R2, R1, R0\nHALT");
  auto tr = run(p, cfg(Variant::DP, 32), {});
  for (int t = 0; t < 32; ++t) EXPECT_EQ(tr.reg(t, 2), 5u + t);
}

TEST(Run, MultiplyByJWithComplexUnit) {
  auto p = assemble(
      "COEFF_EN\nLOD_COEFF R30, R31\nMUL_REAL R6, R8, R9; -- real\nMUL_IMAG R7, R8, R9\nCOEFF_DIS\nHALT");
  RunOptions o;
  o.preload = {{8, std::vector<std::uint32_t>(16, fbits(1.0f))},
               {9, std::vector<std::uint32_t>(16, fbits(0.0f))},
               {30, std::vector<std::uint32_t>(16, fbits(0.0f))},
               {31, std::vector<std::uint32_t>(16, fbits(1.0f))}};
  auto tr = run(p, cfg(Variant::DP_COMPLEX, 16), {}, o);
  for (int t = 0; t < 16; ++t) {
    EXPECT_EQ(tr.reg_float(t, 6), 0.0f);
    EXPECT_EQ(tr.reg_float(t, 7), 1.0f);
  }
}

TEST(Run, IntegerAndFloatOps) {
  auto p = assemble(
      "SETI R1, 6\nSETI R2, 3\nISUB R3, R1, R2\nIXOR R4, R1, R2\nISHL R5, R1, R2\nISHR R6, R1, R2\n"
      "IAND R7, R1, R2\nIOR R8, R1, R2\nMOV R9, R8\n"
      "SETI R10, 0x40000000\nSETI R11, 0x3F000000\nFADD R12, R10, R11\nFSUB R13, R10, R11\nFMUL R14, R10, R11\nHALT");
  auto tr = run(p, cfg(Variant::DP, 16), {});
  EXPECT_EQ(tr.reg(3, 3), 3u);
  EXPECT_EQ(tr.reg(3, 4), 5u);
  EXPECT_EQ(tr.reg(3, 5), 48u);
  EXPECT_EQ(tr.reg(3, 6), 0u);
  EXPECT_EQ(tr.reg(3, 7), 2u);
  EXPECT_EQ(tr.reg(3, 8), 7u);
  EXPECT_EQ(tr.reg(3, 9), 7u);
  EXPECT_EQ(tr.reg_float(3, 12), 2.5f);
  EXPECT_EQ(tr.reg_float(3, 13), 1.5f);
  EXPECT_EQ(tr.reg_float(3, 14), 1.0f);
}

TEST(Run, UniformLoop) {
  auto p = assemble("SETI R1, 5\nSETI R2, 1\nloop:\nIADD R3, R3, R2\nISUB R1, R1, R2\nBRNZ R1, loop\nHALT");
  auto tr = run(p, cfg(Variant::DP, 16), {});
  EXPECT_EQ(tr.reg(7, 3), 5u);
  std::size_t branches = 0;
  for (const auto& e : tr.entries) branches += e.op == Opcode::BRNZ;
  EXPECT_EQ(branches, 5u);
}

TEST(Run, DivergentBranchIsAnError) {
  auto p = assemble("target:\nBRNZ R0, target\nHALT");
  EXPECT_EQ(error_kind(p, cfg(Variant::DP, 16)), MachineError::Kind::BranchDivergence);
}

TEST(Run, StepLimit) {
  auto p = assemble("SETI R1, 1\nloop:\nBRNZ R1, loop\nHALT");
  RunOptions o;
  o.max_steps = 100;
  EXPECT_EQ(error_kind(p, cfg(Variant::DP, 16), {}, o), MachineError::Kind::StepLimit);
}

TEST(Run, CacheReadBeforeLoadIsAnError) {
  auto p = assemble("COEFF_EN\nMUL_REAL R6, R8, R9\nHALT");
  EXPECT_EQ(error_kind(p, cfg(Variant::DP_COMPLEX, 16)), MachineError::Kind::CacheUninitialized);
}

TEST(Run, ValidationRunsFirst) {
  EXPECT_EQ(error_kind(assemble("SAVE_BANK R1, R2\nHALT"), cfg(Variant::DP, 16)), MachineError::Kind::Validation);
}

TEST(Run, AddressOutOfRange) {
  auto p = assemble("SETI R1, 0x7FFFFFFF\nLOD R2, R1\nHALT");
  EXPECT_EQ(error_kind(p, cfg(Variant::DP, 16)), MachineError::Kind::AddressRange);
}

TEST(ExecComplex, Examples) {
  EXPECT_EQ(exec_complex(Opcode::MUL_REAL, 1.0f, 0.0f, 0.7071068f, -0.7071068f), 0.7071068f);
  EXPECT_EQ(exec_complex(Opcode::MUL_REAL, 3.0f, 4.0f, 1.0f, 0.0f), 3.0f);
  EXPECT_EQ(exec_complex(Opcode::MUL_IMAG, 3.0f, 4.0f, 1.0f, 0.0f), 4.0f);
  EXPECT_THROW(exec_complex(Opcode::FADD, 1, 1, 1, 1), std::invalid_argument);
}

TEST(ExecComplex, MatchesPerOperationRounding) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> d(-4.0f, 4.0f);
  for (int i = 0; i < 10000; ++i) {
    const float a = d(rng), b = d(rng), c = d(rng), s = d(rng);
    // Each double product of two floats is exact; rounding it to float models one DSP.
    const float ac = static_cast<float>(double(a) * c), bs = static_cast<float>(double(b) * s);
    const float as = static_cast<float>(double(a) * s), bc = static_cast<float>(double(b) * c);
    EXPECT_EQ(exec_complex(Opcode::MUL_REAL, a, b, c, s), static_cast<float>(double(ac) - double(bs)));
    EXPECT_EQ(exec_complex(Opcode::MUL_IMAG, a, b, c, s), static_cast<float>(double(as) + double(bc)));
  }
}

TEST(MemStore, StandardMirrorsAllBanks) {
  SharedMemoryImage img(64);
  std::vector<std::uint32_t> vals(16), addrs(16);
  for (int i = 0; i < 16; ++i) vals[i] = 100 + i, addrs[i] = 2 * i;
  mem_store(vals, addrs, StoreMode::Standard, cfg(Variant::DP, 16), img);
  for (int i = 0; i < 16; ++i)
    for (int b = 0; b < kBanks; ++b) {
      EXPECT_EQ(img.word(b, 2 * i), 100u + i);
      EXPECT_TRUE(img.valid(b, 2 * i));
    }
  EXPECT_TRUE(img.banks_identical());
}

TEST(MemStore, BankedWritesOneBankPerSp) {
  SharedMemoryImage img(64);
  std::vector<std::uint32_t> vals(16), addrs(16);
  for (int i = 0; i < 16; ++i) vals[i] = 100 + i, addrs[i] = i;
  mem_store(vals, addrs, StoreMode::Banked, cfg(Variant::DP_VM, 16), img);
  for (int i : {0, 4, 8, 12}) {
    EXPECT_EQ(img.word(0, i), 100u + i);
    EXPECT_TRUE(img.valid(0, i));
    for (int b = 1; b < kBanks; ++b) EXPECT_FALSE(img.valid(b, i));
  }
  EXPECT_FALSE(img.valid(1, 2));
  EXPECT_TRUE(img.valid(2, 2));
  EXPECT_THROW(mem_store(vals, addrs, StoreMode::Banked, cfg(Variant::DP, 16), img), MachineError);
}

TEST(MemStore, StaleReadAcrossBanksIsDetected) {
  // SP 2 banks a value into bank 2; SP 1 reads it from bank 1.
  auto p = assemble("SAVE_BANK R0, R0\nSETI R2, 2\nLOD R3, R2\nHALT");
  EXPECT_EQ(error_kind(p, cfg(Variant::DP_VM, 16)), MachineError::Kind::InvalidBankRead);
  auto c = cfg(Variant::DP_VM, 16);
  c.strict_banking = false;
  EXPECT_NO_THROW(run(p, c, {}));
}

TEST(MemStore, SameBankReadBackIsAllowed) {
  // Thread t writes address t; thread t+4k reads address t, same bank.
  auto p = assemble("SAVE_BANK R0, R0\nSETI R1, 3\nIAND R2, R0, R1\nLOD R3, R2\nHALT");
  auto tr = run(p, cfg(Variant::DP_VM, 16), {});
  for (int t = 0; t < 16; ++t) EXPECT_EQ(tr.reg(t, 3), static_cast<std::uint32_t>(t & 3));
}

// Random SAVE-only programs never desynchronize the banks.
TEST(Property, MirrorInvariantWithoutBankedStores) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int threads = 16 * (1 + static_cast<int>(rng() % 4));
    std::string src;
    for (int i = 0; i < 12; ++i) {
      src += "SETI R" + std::to_string(1 + i % 4) + ", " + std::to_string(rng() % 97) + "\n";
      src += "IADD R5, R0, R" + std::to_string(1 + i % 4) + "\n";
      src += "SAVE R" + std::to_string(1 + rng() % 5) + ", R5\n";
      src += "LOD R6, R5\n";
    }
    src += "HALT\n";
    auto tr = run(assemble(src), cfg(Variant::DP_VM, threads), SharedMemoryImage(256));
    ASSERT_TRUE(tr.memory.banks_identical()) << "trial " << trial;
  }
}

// Randomized interleavings of SAVE, SAVE_BANK and LOD over a small address
// range, checked against an independent per-bank validity model.
TEST(Property, StaleBankReadsAlwaysDetected) {
  std::mt19937 rng(2024);
  int faulted = 0, clean = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int threads = 16 * (1 + static_cast<int>(rng() % 3));
    const std::uint32_t range = 4 + rng() % 28;
    const int ops = 2 + static_cast<int>(rng() % 10);

    struct Op {
      Opcode op;
      int addr_reg;
    };
    std::vector<Op> seq;
    RunOptions o;
    for (int i = 0; i < ops; ++i) {
      const int r = 1 + i;
      std::vector<std::uint32_t> a(threads);
      for (auto& x : a) x = rng() % range;
      o.preload.push_back({r, a});
      const auto pick = rng() % 3;
      seq.push_back({pick == 0 ? Opcode::SAVE : pick == 1 ? Opcode::SAVE_BANK : Opcode::LOD, r});
    }
    const int value_reg = ops + 1, load_reg = ops + 2;
    std::vector<std::uint32_t> vals(threads);
    for (int t = 0; t < threads; ++t) vals[t] = 1000 + t;
    o.preload.push_back({value_reg, vals});

    std::string src;
    for (const auto& s : seq)
      src += std::string(mnemonic(s.op)) + " R" + std::to_string(s.op == Opcode::LOD ? load_reg : value_reg) + ", R" +
             std::to_string(s.addr_reg) + "\n";
    src += "HALT\n";

    // Model: per bank and address, a valid flag and a value.
    std::array<std::vector<int>, 4> valid;
    std::array<std::vector<std::uint32_t>, 4> word;
    for (int b = 0; b < 4; ++b) valid[b].assign(range, 1), word[b].assign(range, 0);
    bool expect_fault = false;
    std::vector<std::uint32_t> last_load(threads, 0);
    for (const auto& s : seq) {
      const auto& addr = o.preload[s.addr_reg - 1].second;
      if (s.op == Opcode::LOD) {
        for (int t = 0; t < threads && !expect_fault; ++t) {
          const int b = (t % 16) % 4;
          if (!valid[b][addr[t]]) expect_fault = true;
          last_load[t] = word[b][addr[t]];
        }
      } else {
        for (int t = 0; t < threads; ++t) {
          if (s.op == Opcode::SAVE) {
            for (int b = 0; b < 4; ++b) valid[b][addr[t]] = 1, word[b][addr[t]] = vals[t];
          } else {
            for (int b = 0; b < 4; ++b) valid[b][addr[t]] = 0;
            valid[(t % 16) % 4][addr[t]] = 1;
            word[(t % 16) % 4][addr[t]] = vals[t];
          }
        }
      }
      if (expect_fault) break;
    }

    auto prog = assemble(src);
    auto c = cfg(Variant::DP_VM, threads);
    if (expect_fault) {
      ++faulted;
      EXPECT_EQ(error_kind(prog, c, SharedMemoryImage(range), o), MachineError::Kind::InvalidBankRead)
          << "trial " << trial << "\n" << src;
      c.strict_banking = false;
      EXPECT_NO_THROW(run(prog, c, SharedMemoryImage(range), o)) << "trial " << trial;
    } else {
      ++clean;
      auto tr = run(prog, c, SharedMemoryImage(range), o);
      for (int t = 0; t < threads; ++t) ASSERT_EQ(tr.reg(t, load_reg), last_load[t]) << "trial " << trial;
    }
  }
  // Both outcomes must actually be exercised.
  EXPECT_GT(faulted, 100);
  EXPECT_GT(clean, 100);
}

TEST(Image, SaveLoadRoundTrip) {
  SharedMemoryImage img(32);
  for (int a = 0; a < 32; ++a) img.poke(a, 7u * a + 1);
  img.store_banked(3, 5, 42);
  const auto path = std::filesystem::temp_directory_path() / "egpu_image_roundtrip.bin";
  img.save(path);
  auto back = SharedMemoryImage::load(path);
  EXPECT_EQ(back.peek(9), 64u);
  EXPECT_FALSE(back.valid(0, 5));
  EXPECT_TRUE(back.valid(3, 5));
  EXPECT_EQ(std::filesystem::file_size(path), 128u);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".valid");
}

TEST(Hazards, Examples) {
  auto dep = assemble("FADD R1, R2, R3\nFADD R4, R1, R1\nHALT");
  EXPECT_TRUE(check_hazards(dep, cfg(Variant::DP, 1024)).empty());
  auto h = check_hazards(dep, cfg(Variant::DP, 64));
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(h[0].consumer, 1u);
  EXPECT_EQ(h[0].missing, 4u);
  auto indep = assemble("FADD R1, R2, R3\nFADD R4, R5, R6\nFMUL R7, R8, R9\nHALT");
  EXPECT_TRUE(check_hazards(indep, cfg(Variant::DP, 64)).empty());
}

TEST(Hazards, CoefficientCacheDependency) {
  auto p = assemble("COEFF_EN\nLOD_COEFF R1, R2\nMUL_REAL R3, R4, R5\nHALT");
  auto h = check_hazards(p, cfg(Variant::DP_COMPLEX, 64));
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(h[0].producer, 1u);
}

// Brute force: every consumer against every earlier instruction, keeping a
// pair when no instruction in between rewrote the register.
TEST(Hazards, MatchesPairwiseSearch) {
  std::mt19937 rng(5);
  const Opcode ops[] = {Opcode::FADD, Opcode::IADD, Opcode::MOV, Opcode::SETI, Opcode::NOP, Opcode::SAVE, Opcode::LOD};
  for (int trial = 0; trial < 300; ++trial) {
    Program p;
    const int n = 2 + static_cast<int>(rng() % 25);
    for (int i = 0; i < n; ++i) {
      Instruction in;
      in.op = ops[rng() % std::size(ops)];
      auto r = [&] { return static_cast<int>(rng() % 6); };
      switch (shape(in.op)) {
        case Shape::R3: in.dest = r(), in.src1 = r(), in.src2 = r(); break;
        case Shape::R2: in.dest = r(), in.src1 = r(); break;
        case Shape::RI: in.dest = r(); break;
        case Shape::LOAD:
        case Shape::STORE: in.dest = r(), in.src1 = r(); break;
        default: break;
      }
      p.code.push_back(in);
    }
    p.code.push_back({Opcode::HALT});
    const auto c = cfg(Variant::DP, 16 * (1 << (rng() % 4)));

    std::vector<std::pair<std::size_t, std::size_t>> expect;
    for (std::size_t j = 0; j < p.code.size(); ++j) {
      std::vector<std::size_t> producers;
      for (int reg : reads(p.code[j])) {
        for (std::size_t i = j; i-- > 0;) {
          if (writes(p.code[i]) == reg) {
            producers.push_back(i);
            break;
          }
        }
      }
      std::sort(producers.begin(), producers.end());
      producers.erase(std::unique(producers.begin(), producers.end()), producers.end());
      for (auto i : producers) {
        std::uint64_t gap = 0;
        for (std::size_t k = i; k < j; ++k) gap += instruction_cost(p.code[k], c);
        if (gap < 8) expect.push_back({i, j});
      }
    }
    std::vector<std::pair<std::size_t, std::size_t>> got;
    for (const auto& h : check_hazards(p, c)) got.push_back({h.producer, h.consumer});
    ASSERT_EQ(got, expect) << "trial " << trial << "\n" << disassemble(p);
  }
}
