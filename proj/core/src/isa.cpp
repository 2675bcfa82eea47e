#include "egpu/isa.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <sstream>

#include "egpu/config.hpp"

namespace egpu {

namespace {

struct OpInfo {
  std::string_view name;
  Shape shape;
};

constexpr std::array<OpInfo, kOpcodeCount> kOps{{
    {"IADD", Shape::R3},      {"ISUB", Shape::R3},      {"IXOR", Shape::R3},     {"ISHL", Shape::R3},
    {"ISHR", Shape::R3},      {"IAND", Shape::R3},      {"IOR", Shape::R3},      {"MOV", Shape::R2},
    {"SETI", Shape::RI},      {"FADD", Shape::R3},      {"FSUB", Shape::R3},     {"FMUL", Shape::R3},
    {"LOD_COEFF", Shape::PAIR}, {"MUL_REAL", Shape::R3}, {"MUL_IMAG", Shape::R3}, {"COEFF_EN", Shape::NONE},
    {"COEFF_DIS", Shape::NONE}, {"LOD", Shape::LOAD},   {"SAVE", Shape::STORE},  {"SAVE_BANK", Shape::STORE},
    {"BRNZ", Shape::BR},      {"NOP", Shape::NONE},     {"HALT", Shape::NONE},
}};

const OpInfo& info(Opcode op) { return kOps[static_cast<int>(op)]; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_ident(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_' || s[0] == '.')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
}

std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

int parse_register(std::string_view tok, int line) {
  if (tok.size() < 2 || (tok[0] != 'R' && tok[0] != 'r')) throw AsmError(line, "expected register, got '" + std::string(tok) + "'");
  auto digits = tok.substr(1);
  int value = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || p != digits.data() + digits.size() || digits[0] == '-' || digits[0] == '+')
    throw AsmError(line, "malformed register '" + std::string(tok) + "'");
  if (value < 0 || value > kMaxRegisterIndex)
    throw AsmError(line, "register index out of range '" + std::string(tok) + "'");
  return value;
}

std::uint32_t parse_immediate(std::string_view tok, int line) {
  bool neg = false;
  std::string_view body = tok;
  if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
    neg = body[0] == '-';
    body.remove_prefix(1);
  }
  int base = 10;
  if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
    base = 16;
    body.remove_prefix(2);
  }
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), v, base);
  if (body.empty() || ec != std::errc() || p != body.data() + body.size() || v > 0xFFFFFFFFull ||
      (neg && v > 0x80000000ull))
    throw AsmError(line, "malformed immediate '" + std::string(tok) + "'");
  auto w = static_cast<std::uint32_t>(v);
  return neg ? static_cast<std::uint32_t>(0u - w) : w;
}

std::string reg(int r) { return "R" + std::to_string(r); }

}  // namespace

AsmError::AsmError(int line, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

std::string_view mnemonic(Opcode op) { return info(op).name; }
Shape shape(Opcode op) { return info(op).shape; }

std::optional<Opcode> parse_mnemonic(std::string_view text) {
  std::string up(text);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (int i = 0; i < kOpcodeCount; ++i)
    if (kOps[i].name == up) return static_cast<Opcode>(i);
  return std::nullopt;
}

bool needs_vm(Opcode op) { return op == Opcode::SAVE_BANK; }

bool needs_complex(Opcode op) {
  switch (op) {
    case Opcode::LOD_COEFF:
    case Opcode::MUL_REAL:
    case Opcode::MUL_IMAG:
    case Opcode::COEFF_EN:
    case Opcode::COEFF_DIS:
      return true;
    default:
      return false;
  }
}

std::vector<int> reads(const Instruction& in) {
  std::vector<int> r;
  auto add = [&](int x) {
    if (x >= 0) r.push_back(x);
  };
  switch (shape(in.op)) {
    case Shape::R3:
    case Shape::PAIR:
      add(in.src1);
      add(in.src2);
      break;
    case Shape::R2:
    case Shape::BR:
      add(in.src1);
      break;
    case Shape::LOAD:
      add(in.src1);
      add(in.src2);
      break;
    case Shape::STORE:
      add(in.dest);
      add(in.src1);
      add(in.src2);
      break;
    case Shape::RI:
    case Shape::NONE:
      break;
  }
  return r;
}

std::optional<int> writes(const Instruction& in) {
  switch (shape(in.op)) {
    case Shape::R3:
    case Shape::R2:
    case Shape::RI:
    case Shape::LOAD:
      return in.dest;
    default:
      return std::nullopt;
  }
}

void Program::refresh_metadata() {
  features = {};
  int hi = 0;
  for (const auto& in : code) {
    features.vm |= needs_vm(in.op);
    features.complex |= needs_complex(in.op);
    for (int r : reads(in)) hi = std::max(hi, r);
    if (auto w = writes(in)) hi = std::max(hi, *w);
  }
  regs_required = hi + 1;
}

Program assemble(std::string_view source) {
  Program prog;
  struct Fixup {
    std::size_t index;
    std::string label;
    int line;
  };
  std::vector<Fixup> fixups;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    auto nl = source.find('\n', pos);
    auto raw = source.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? source.size() + 1 : nl + 1;
    ++line_no;

    auto comment = raw.find("--");
    auto text = trim(raw.substr(0, comment));
    while (!text.empty() && text.back() == ';') text = trim(text.substr(0, text.size() - 1));

    // Any number of leading labels.
    while (true) {
      auto colon = text.find(':');
      if (colon == std::string_view::npos) break;
      auto name = trim(text.substr(0, colon));
      if (!is_ident(name)) throw AsmError(line_no, "malformed label '" + std::string(name) + "'");
      if (prog.labels.count(std::string(name))) throw AsmError(line_no, "duplicate label '" + std::string(name) + "'");
      prog.labels[std::string(name)] = prog.code.size();
      text = trim(text.substr(colon + 1));
    }
    if (text.empty()) continue;

    auto sp = text.find_first_of(" \t");
    auto mn = text.substr(0, sp);
    auto rest = sp == std::string_view::npos ? std::string_view{} : trim(text.substr(sp));
    auto op = parse_mnemonic(mn);
    if (!op) throw AsmError(line_no, "unknown mnemonic '" + std::string(mn) + "'");
    auto ops = split_operands(rest);
    Instruction in;
    in.op = *op;
    auto want = [&](std::size_t lo, std::size_t hi) {
      if (ops.size() < lo || ops.size() > hi)
        throw AsmError(line_no, std::string(mnemonic(*op)) + " expects " +
                                    (lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi)) +
                                    " operands");
      for (auto o : ops)
        if (o.empty()) throw AsmError(line_no, "empty operand");
    };
    switch (shape(*op)) {
      case Shape::R3:
        want(3, 3);
        in.dest = parse_register(ops[0], line_no);
        in.src1 = parse_register(ops[1], line_no);
        in.src2 = parse_register(ops[2], line_no);
        break;
      case Shape::R2:
        want(2, 2);
        in.dest = parse_register(ops[0], line_no);
        in.src1 = parse_register(ops[1], line_no);
        break;
      case Shape::RI:
        want(2, 2);
        in.dest = parse_register(ops[0], line_no);
        in.imm = parse_immediate(ops[1], line_no);
        break;
      case Shape::PAIR:
        want(2, 2);
        in.src1 = parse_register(ops[0], line_no);
        in.src2 = parse_register(ops[1], line_no);
        break;
      case Shape::LOAD:
      case Shape::STORE:
        want(2, 3);
        in.dest = parse_register(ops[0], line_no);
        in.src1 = parse_register(ops[1], line_no);
        if (ops.size() == 3) in.src2 = parse_register(ops[2], line_no);
        break;
      case Shape::BR: {
        want(2, 2);
        in.src1 = parse_register(ops[0], line_no);
        auto target = ops[1];
        if (!target.empty() && std::isdigit(static_cast<unsigned char>(target[0]))) {
          in.imm = parse_immediate(target, line_no);
        } else if (is_ident(target)) {
          fixups.push_back({prog.code.size(), std::string(target), line_no});
        } else {
          throw AsmError(line_no, "malformed branch target '" + std::string(target) + "'");
        }
        break;
      }
      case Shape::NONE:
        want(0, 0);
        break;
    }
    prog.code.push_back(in);
  }
  for (const auto& f : fixups) {
    auto it = prog.labels.find(f.label);
    if (it == prog.labels.end()) throw AsmError(f.line, "unresolved label '" + f.label + "'");
    prog.code[f.index].imm = static_cast<std::uint32_t>(it->second);
  }
  for (std::size_t i = 0; i < prog.code.size(); ++i) {
    const auto& in = prog.code[i];
    if (in.op == Opcode::BRNZ && in.imm > prog.code.size())
      throw AsmError(0, "branch target " + std::to_string(in.imm) + " out of range at instruction " + std::to_string(i));
  }
  prog.refresh_metadata();
  return prog;
}

std::string format_instruction(const Instruction& in, const Program* program) {
  std::string s(mnemonic(in.op));
  switch (shape(in.op)) {
    case Shape::R3:
      return s + " " + reg(in.dest) + ", " + reg(in.src1) + ", " + reg(in.src2);
    case Shape::R2:
      return s + " " + reg(in.dest) + ", " + reg(in.src1);
    case Shape::RI: {
      char buf[16];
      std::snprintf(buf, sizeof buf, "0x%08X", in.imm);
      return s + " " + reg(in.dest) + ", " + buf;
    }
    case Shape::PAIR:
      return s + " " + reg(in.src1) + ", " + reg(in.src2);
    case Shape::LOAD:
    case Shape::STORE:
      s += " " + reg(in.dest) + ", " + reg(in.src1);
      if (in.src2 >= 0) s += ", " + reg(in.src2);
      return s;
    case Shape::BR: {
      s += " " + reg(in.src1) + ", ";
      if (program) {
        for (const auto& [name, idx] : program->labels)
          if (idx == in.imm) return s + name;
      }
      return s + std::to_string(in.imm);
    }
    case Shape::NONE:
      return s;
  }
  return s;
}

std::string disassemble(const Program& program) {
  std::multimap<std::size_t, std::string> by_index;
  for (const auto& [name, idx] : program.labels) by_index.emplace(idx, name);
  std::ostringstream os;
  for (std::size_t i = 0; i <= program.code.size(); ++i) {
    auto [lo, hi] = by_index.equal_range(i);
    for (auto it = lo; it != hi; ++it) os << it->second << ":\n";
    if (i < program.code.size()) os << format_instruction(program.code[i], &program) << "\n";
  }
  return os.str();
}

std::vector<Violation> validate(const Program& program, const MachineConfig& config) {
  std::vector<Violation> out;
  const auto n = program.code.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& in = program.code[i];
    if (needs_vm(in.op) && config.variant != MemoryVariant::VM)
      out.push_back({i, "virtual banking unavailable: " + std::string(mnemonic(in.op))});
    if (needs_complex(in.op) && !config.complex_enabled)
      out.push_back({i, "complex feature unavailable: " + std::string(mnemonic(in.op))});
    auto check = [&](int r) {
      if (r >= config.regs_per_thread)
        out.push_back({i, "register R" + std::to_string(r) + " exceeds " + std::to_string(config.regs_per_thread) +
                              " registers per thread"});
    };
    for (int r : reads(in)) check(r);
    if (auto w = writes(in)) check(*w);
    if (in.op == Opcode::BRNZ && in.imm >= n) out.push_back({i, "branch target out of range"});
  }
  if (n == 0 || program.code.back().op != Opcode::HALT) out.push_back({n, "program does not end with HALT"});
  if (program.threads_required && program.threads_required != config.threads)
    out.push_back({n, "program built for " + std::to_string(program.threads_required) + " threads"});
  return out;
}

}  // namespace egpu
