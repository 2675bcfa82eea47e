#include "egpu/machine.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <cstring>
#include <fstream>
#include <iterator>

namespace egpu {

SharedMemoryImage::SharedMemoryImage(std::size_t words) {
  for (int b = 0; b < kBanks; ++b) {
    banks_[b].assign(words, 0);
    valid_[b].assign(words, 1);
  }
}

void SharedMemoryImage::poke(std::size_t addr, std::uint32_t value) {
  for (int b = 0; b < kBanks; ++b) {
    banks_[b].at(addr) = value;
    valid_[b][addr] = 1;
  }
}

void SharedMemoryImage::poke_float(std::size_t addr, float value) { poke(addr, std::bit_cast<std::uint32_t>(value)); }

float SharedMemoryImage::peek_float(std::size_t addr) const { return std::bit_cast<float>(peek(addr)); }

void SharedMemoryImage::store_standard(std::size_t addr, std::uint32_t value) { poke(addr, value); }

void SharedMemoryImage::store_banked(int bank, std::size_t addr, std::uint32_t value) {
  for (int b = 0; b < kBanks; ++b) valid_[b].at(addr) = 0;
  banks_[bank][addr] = value;
  valid_[bank][addr] = 1;
}

bool SharedMemoryImage::banks_identical() const {
  for (int b = 1; b < kBanks; ++b)
    if (banks_[b] != banks_[0]) return false;
  return true;
}

void SharedMemoryImage::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (auto w : banks_[0]) {
    unsigned char b[4] = {static_cast<unsigned char>(w), static_cast<unsigned char>(w >> 8),
                          static_cast<unsigned char>(w >> 16), static_cast<unsigned char>(w >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  }
  std::ofstream side(path.string() + ".valid", std::ios::binary);
  if (!side) throw std::runtime_error("cannot write " + path.string() + ".valid");
  for (std::size_t a = 0; a < words(); ++a) {
    unsigned char m = 0;
    for (int b = 0; b < kBanks; ++b) m |= static_cast<unsigned char>(valid_[b][a] << b);
    side.put(static_cast<char>(m));
  }
}

SharedMemoryImage SharedMemoryImage::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4) throw std::runtime_error(path.string() + ": size is not a whole number of words");
  SharedMemoryImage img(bytes.size() / 4);
  for (std::size_t a = 0; a < img.words(); ++a) {
    std::uint32_t w = bytes[4 * a] | (bytes[4 * a + 1] << 8) | (bytes[4 * a + 2] << 16) |
                      (static_cast<std::uint32_t>(bytes[4 * a + 3]) << 24);
    img.poke(a, w);
  }
  std::ifstream side(path.string() + ".valid", std::ios::binary);
  if (side) {
    std::vector<unsigned char> mask((std::istreambuf_iterator<char>(side)), std::istreambuf_iterator<char>());
    if (mask.size() != img.words()) throw std::runtime_error(path.string() + ".valid: length mismatch");
    for (std::size_t a = 0; a < img.words(); ++a)
      for (int b = 0; b < kBanks; ++b) img.valid_[b][a] = (mask[a] >> b) & 1;
  }
  return img;
}

void mem_store(std::span<const std::uint32_t> sp_values, std::span<const std::uint32_t> addrs, StoreMode mode,
               const MachineConfig& config, SharedMemoryImage& image) {
  if (sp_values.size() != addrs.size()) throw std::invalid_argument("mem_store: value/address count mismatch");
  if (mode == StoreMode::Banked && config.variant != MemoryVariant::VM)
    throw MachineError(MachineError::Kind::Validation, "banked store on a non-VM configuration");
  for (std::size_t i = 0; i < addrs.size(); ++i)
    if (addrs[i] >= image.words())
      throw MachineError(MachineError::Kind::AddressRange, "store address " + std::to_string(addrs[i]) + " out of range");
  // Groups {g, g+4, g+8, g+12} in SP order; later writers win.
  for (std::size_t i = 0; i < addrs.size(); ++i) {
    if (mode == StoreMode::Standard) image.store_standard(addrs[i], sp_values[i]);
    else image.store_banked(static_cast<int>(i % kBanks), addrs[i], sp_values[i]);
  }
}

float exec_complex(Opcode op, float a, float b, float tw_re, float tw_im) {
  volatile float p1, p2;  // keep each product rounded to f32
  if (op == Opcode::MUL_REAL) {
    p1 = a * tw_re;
    p2 = b * tw_im;
    return p1 - p2;
  }
  if (op == Opcode::MUL_IMAG) {
    p1 = a * tw_im;
    p2 = b * tw_re;
    return p1 + p2;
  }
  throw std::invalid_argument("exec_complex: not a complex multiply");
}

float ExecutionTrace::reg_float(int thread, int r) const { return std::bit_cast<float>(reg(thread, r)); }

ExecutionTrace run(const Program& program, const MachineConfig& config, SharedMemoryImage memory,
                   const RunOptions& options) {
  config.check();
  auto violations = validate(program, config);
  if (!violations.empty()) throw MachineError(MachineError::Kind::Validation, violations.front().message);
  if (memory.words() == 0) memory = SharedMemoryImage(config.words());

  const int T = config.threads;
  const int R = config.regs_per_thread;
  ExecutionTrace tr;
  tr.wavefront_depth = config.wavefront();
  tr.threads = T;
  tr.regs_per_thread = R;
  std::vector<std::uint32_t> regs(static_cast<std::size_t>(T) * R, 0);
  for (int t = 0; t < T; ++t) regs[static_cast<std::size_t>(t) * R] = static_cast<std::uint32_t>(t);
  for (const auto& [r, vals] : options.preload)
    for (int t = 0; t < T && t < static_cast<int>(vals.size()); ++t) regs[static_cast<std::size_t>(t) * R + r] = vals[t];

  CoefficientCache cache;
  cache.slots.resize(T);

  auto at = [&](int t, int r) -> std::uint32_t& { return regs[static_cast<std::size_t>(t) * R + r]; };
  auto f = [](std::uint32_t w) { return std::bit_cast<float>(w); };
  auto w = [](float x) { return std::bit_cast<std::uint32_t>(x); };
  auto address = [&](const Instruction& in, int t) -> std::uint32_t {
    std::uint32_t a = at(t, in.src1);
    if (in.src2 >= 0) a += at(t, in.src2);
    if (a >= memory.words())
      throw MachineError(MachineError::Kind::AddressRange, "address " + std::to_string(a) + " out of range (thread " +
                                                               std::to_string(t) + ")");
    return a;
  };

  std::size_t pc = 0, steps = 0;
  std::vector<std::uint32_t> row_vals(config.num_sps), row_addrs(config.num_sps);
  while (pc < program.code.size()) {
    if (++steps > options.max_steps) throw MachineError(MachineError::Kind::StepLimit, "step limit exceeded");
    const auto& in = program.code[pc];
    const auto cost = instruction_cost(in, config);
    tr.entries.push_back({pc, in.op, category(in.op), cost});
    tr.total_cycles += cost;
    std::size_t next = pc + 1;
    switch (in.op) {
      case Opcode::IADD:
        for (int t = 0; t < T; ++t) at(t, in.dest) = at(t, in.src1) + at(t, in.src2);
        break;
      case Opcode::ISUB:
        for (int t = 0; t < T; ++t) at(t, in.dest) = at(t, in.src1) - at(t, in.src2);
        break;
      case Opcode::IXOR:
        for (int t = 0; t < T; ++t) at(t, in.dest) = at(t, in.src1) ^ at(t, in.src2);
        break;
      case Opcode::ISHL:
        for (int t = 0; t < T; ++t) at(t, in.dest) = at(t, in.src1) << (at(t, in.src2) & 31);
        break;
      case Opcode::ISHR:
        for (int t = 0; t < T; ++t) at(t, in.dest) = at(t, in.src1) >> (at(t, in.src2) & 31);
        break;
      case Opcode::IAND:
        for (int t = 0; t < T; ++t) at(t, in.dest) = at(t, in.src1) & at(t, in.src2);
        break;
      case Opcode::IOR:
        for (int t = 0; t < T; ++t) at(t, in.dest) = at(t, in.src1) | at(t, in.src2);
        break;
      case Opcode::MOV:
        for (int t = 0; t < T; ++t) at(t, in.dest) = at(t, in.src1);
        break;
      case Opcode::SETI:
        for (int t = 0; t < T; ++t) at(t, in.dest) = in.imm;
        break;
      case Opcode::FADD:
        for (int t = 0; t < T; ++t) at(t, in.dest) = w(f(at(t, in.src1)) + f(at(t, in.src2)));
        break;
      case Opcode::FSUB:
        for (int t = 0; t < T; ++t) at(t, in.dest) = w(f(at(t, in.src1)) - f(at(t, in.src2)));
        break;
      case Opcode::FMUL:
        for (int t = 0; t < T; ++t) at(t, in.dest) = w(f(at(t, in.src1)) * f(at(t, in.src2)));
        break;
      case Opcode::LOD_COEFF:
        for (int t = 0; t < T; ++t) cache.slots[t] = {f(at(t, in.src1)), f(at(t, in.src2)), true};
        break;
      case Opcode::MUL_REAL:
      case Opcode::MUL_IMAG:
        for (int t = 0; t < T; ++t) {
          const auto& s = cache.slots[t];
          if (!s.valid)
            throw MachineError(MachineError::Kind::CacheUninitialized,
                               "coefficient cache read before LOD_COEFF (thread " + std::to_string(t) + ")");
          at(t, in.dest) = w(exec_complex(in.op, f(at(t, in.src1)), f(at(t, in.src2)), s.re, s.im));
        }
        break;
      case Opcode::COEFF_EN:
        cache.enabled = true;
        break;
      case Opcode::COEFF_DIS:
        cache.enabled = false;
        break;
      case Opcode::LOD:
        for (int t = 0; t < T; ++t) {
          const auto a = address(in, t);
          const int bank = (t % config.num_sps) % kBanks;
          if (config.strict_banking && !memory.valid(bank, a))
            throw MachineError(MachineError::Kind::InvalidBankRead,
                               "thread " + std::to_string(t) + " read stale bank " + std::to_string(bank) +
                                   " at address " + std::to_string(a));
          at(t, in.dest) = memory.word(bank, a);
        }
        break;
      case Opcode::SAVE:
      case Opcode::SAVE_BANK: {
        const auto mode = in.op == Opcode::SAVE ? StoreMode::Standard : StoreMode::Banked;
        for (int t0 = 0; t0 < T; t0 += config.num_sps) {
          for (int i = 0; i < config.num_sps; ++i) {
            row_addrs[i] = address(in, t0 + i);
            row_vals[i] = at(t0 + i, in.dest);
          }
          mem_store(row_vals, row_addrs, mode, config, memory);
        }
        break;
      }
      case Opcode::BRNZ: {
        const bool taken = at(0, in.src1) != 0;
        for (int t = 1; t < T; ++t)
          if ((at(t, in.src1) != 0) != taken)
            throw MachineError(MachineError::Kind::BranchDivergence,
                               "divergent branch at instruction " + std::to_string(pc));
        if (taken) next = in.imm;
        break;
      }
      case Opcode::NOP:
        break;
      case Opcode::HALT:
        next = program.code.size();
        break;
    }
    pc = next;
  }
  tr.registers = std::move(regs);
  tr.memory = std::move(memory);
  return tr;
}

std::vector<Hazard> check_hazards(const Program& program, const MachineConfig& config) {
  std::vector<Hazard> out;
  const int cache_reg = -2;
  std::vector<std::uint64_t> issue(program.code.size() + 1, 0);
  for (std::size_t i = 0; i < program.code.size(); ++i)
    issue[i + 1] = issue[i] + instruction_cost(program.code[i], config);
  std::map<int, std::size_t> last_writer;
  const auto depth = static_cast<std::uint64_t>(config.pipeline_depth);
  for (std::size_t c = 0; c < program.code.size(); ++c) {
    const auto& in = program.code[c];
    auto srcs = reads(in);
    if (in.op == Opcode::MUL_REAL || in.op == Opcode::MUL_IMAG) srcs.push_back(cache_reg);
    std::vector<std::size_t> producers;
    for (int r : srcs)
      if (auto it = last_writer.find(r); it != last_writer.end()) producers.push_back(it->second);
    std::sort(producers.begin(), producers.end());
    producers.erase(std::unique(producers.begin(), producers.end()), producers.end());
    for (auto p : producers) {
      const auto gap = issue[c] - issue[p];
      if (gap < depth) out.push_back({p, c, gap, depth - gap});
    }
    if (auto wr = writes(in)) last_writer[*wr] = c;
    if (in.op == Opcode::LOD_COEFF) last_writer[cache_reg] = c;
  }
  return out;
}

}  // namespace egpu
