#include "egpu/fftgen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace egpu {

namespace {

constexpr double kClassTol = 1e-9;
constexpr std::uint32_t kSignMask = 0x80000000u;
constexpr int kCacheReg = kMaxRegisterIndex + 1;  // coefficient cache as a pseudo-register

int log2i(long long v) { return std::countr_zero(static_cast<unsigned long long>(v)); }
bool is_pow2(long long v) { return v > 0 && (v & (v - 1)) == 0; }
std::uint32_t fbits(double v) { return std::bit_cast<std::uint32_t>(static_cast<float>(v)); }

std::complex<double> root(long long num, long long den) {
  const double a = -2.0 * std::numbers::pi * static_cast<double>(num % den) / static_cast<double>(den);
  return {std::cos(a), std::sin(a)};
}

int bitrev(int v, int bits) {
  int r = 0;
  for (int i = 0; i < bits; ++i) r |= ((v >> i) & 1) << (bits - 1 - i);
  return r;
}

struct Cx {
  int re = -1;
  int im = -1;
};

// Register file with a FIFO free list and an LRU pool of SETI constants.
class Emitter {
 public:
  explicit Emitter(int regs) {
    if (regs < 2) throw std::invalid_argument("need at least two registers per thread");
    for (int r = 1; r < regs; ++r) free_.push_back(r);
  }

  std::vector<Instruction> code;

  int alloc() {
    if (free_.empty()) evict();
    const int r = free_.front();
    free_.pop_front();
    return r;
  }

  void release(int r) {
    if (r <= 0 || owner_.count(r)) return;
    free_.push_back(r);
  }

  int constant(std::uint32_t v) {
    if (auto it = pool_.find(v); it != pool_.end()) {
      it->second.stamp = stamp_;
      return it->second.reg;
    }
    // A nearly empty free list hands out registers released a moment ago;
    // recycling the oldest constant keeps the SETI clear of their readers.
    const int r = free_.size() < kLowWater && evictable() ? take_lru() : alloc();
    code.push_back({Opcode::SETI, r, -1, -1, v});
    pool_[v] = {r, stamp_};
    owner_[r] = v;
    return r;
  }
  int fconst(double v) { return constant(fbits(v)); }

  void forget_constants() {
    for (auto& [v, e] : pool_) free_.push_back(e.reg);
    pool_.clear();
    owner_.clear();
  }

  void emit(const Instruction& in) {
    code.push_back(in);
    ++stamp_;
  }
  int op(Opcode o, int a, int b = -1) {
    const int d = alloc();
    emit({o, d, a, b, 0});
    return d;
  }

 private:
  struct Entry {
    int reg;
    std::uint64_t stamp;
  };

  static constexpr std::size_t kLowWater = 4;

  std::map<std::uint32_t, Entry>::iterator lru() {
    auto victim = pool_.end();
    for (auto it = pool_.begin(); it != pool_.end(); ++it)
      if (it->second.stamp < stamp_ && (victim == pool_.end() || it->second.stamp < victim->second.stamp)) victim = it;
    return victim;
  }
  bool evictable() { return lru() != pool_.end(); }
  int take_lru() {
    auto victim = lru();
    const int r = victim->second.reg;
    owner_.erase(r);
    pool_.erase(victim);
    return r;
  }
  void evict() {
    if (!evictable()) throw std::invalid_argument("register file exhausted");
    free_.push_back(take_lru());
  }

  std::deque<int> free_;
  std::map<std::uint32_t, Entry> pool_;
  std::map<int, std::uint32_t> owner_;
  std::uint64_t stamp_ = 1;
};

class KernelEmitter {
 public:
  KernelEmitter(Emitter& e, const KernelRecipe& rc, bool complex, bool reduce = true)
      : e_(e), rc_(rc), complex_(complex), reduce_(reduce) {}

  void butterfly(Cx& a, Cx& b) {
    const int sr = e_.op(Opcode::FADD, a.re, b.re);
    const int si = e_.op(Opcode::FADD, a.im, b.im);
    e_.emit({Opcode::FSUB, b.re, a.re, b.re, 0});
    e_.emit({Opcode::FSUB, b.im, a.im, b.im, 0});
    e_.release(a.re);
    e_.release(a.im);
    a = {sr, si};
  }

  void move(int& r, MoveKind kind) {
    if (kind == MoveKind::None) return;
    const int d = kind == MoveKind::Int ? e_.op(Opcode::MOV, r) : e_.op(Opcode::FADD, r, e_.fconst(0.0));
    e_.release(r);
    r = d;
  }

  // v *= -j, i.e. (re, im) -> (im, -re).
  void neg_j(Cx& v) {
    switch (rc_.quarter_turn) {
      case QuarterTurn::RenameXor:
        e_.emit({Opcode::IXOR, v.re, v.re, e_.constant(kSignMask), 0});
        std::swap(v.re, v.im);
        return;
      case QuarterTurn::IntFp:
      case QuarterTurn::IntPair:
      case QuarterTurn::FpPair: {
        const int t = rc_.quarter_turn == QuarterTurn::FpPair ? e_.op(Opcode::FADD, v.im, e_.fconst(0.0))
                                                                : e_.op(Opcode::MOV, v.im);
        if (rc_.quarter_turn == QuarterTurn::IntPair)
          e_.emit({Opcode::IXOR, v.im, v.re, e_.constant(kSignMask), 0});
        else
          e_.emit({Opcode::FSUB, v.im, e_.fconst(0.0), v.re, 0});
        e_.release(v.re);
        v.re = t;
        return;
      }
    }
  }

  void negate(Cx& v) {
    e_.emit({Opcode::FSUB, v.re, e_.fconst(0.0), v.re, 0});
    e_.emit({Opcode::FSUB, v.im, e_.fconst(0.0), v.im, 0});
  }

  void complex_mul(Cx& v, int wr, int wi, bool move_back) {
    e_.emit({Opcode::LOD_COEFF, -1, wr, wi, 0});
    const int t = e_.op(Opcode::MUL_REAL, v.re, v.im);
    e_.emit({Opcode::MUL_IMAG, v.im, v.re, v.im, 0});
    finish_real(v, t, move_back);
  }

  void general(Cx& v, int wr, int wi, bool move_back) {
    const int t1 = e_.op(Opcode::FMUL, v.re, wr);
    const int t2 = e_.op(Opcode::FMUL, v.im, wi);
    const int t3 = e_.op(Opcode::FMUL, v.re, wi);
    e_.emit({Opcode::FMUL, v.im, v.im, wr, 0});
    e_.emit({Opcode::FADD, v.im, t3, v.im, 0});
    e_.release(t3);
    if (move_back) {
      e_.emit({Opcode::FSUB, t1, t1, t2, 0});
      e_.emit({Opcode::MOV, v.re, t1, -1, 0});
      e_.release(t1);
    } else {
      e_.emit({Opcode::FSUB, v.re, t1, t2, 0});
      e_.release(t1);
    }
    e_.release(t2);
  }

  // w = c (sr + j si) with c = 1/sqrt(2): two add/subs, then one real multiply per part.
  void equal_mag(Cx& v, std::complex<double> w, bool move_back) {
    const bool same_sign = (w.real() > 0) == (w.imag() > 0);
    const int u = e_.op(same_sign ? Opcode::FSUB : Opcode::FADD, v.re, v.im);
    e_.emit({same_sign ? Opcode::FADD : Opcode::FSUB, v.im, v.re, v.im, 0});
    if (move_back) {
      e_.emit({Opcode::FMUL, u, u, e_.fconst(w.real()), 0});
      e_.emit({Opcode::MOV, v.re, u, -1, 0});
      e_.release(u);
    } else {
      e_.emit({Opcode::FMUL, v.re, u, e_.fconst(w.real()), 0});
      e_.release(u);
    }
    e_.emit({Opcode::FMUL, v.im, v.im, e_.fconst(w.imag()), 0});
  }

  void rotate(Cx& v, int stage, std::complex<double> w) {
    if (!reduce_) {
      const int wr = e_.fconst(w.real());
      const int wi = e_.fconst(w.imag());
      if (complex_) complex_mul(v, wr, wi, false);
      else general(v, wr, wi, false);
      return;
    }
    switch (classify_twiddle(w)) {
      case TwiddleClass::UNITY: {
        const auto& u = rc_.unity_by_stage;
        const MoveKind k = u.empty() ? MoveKind::None : u[std::min<std::size_t>(stage, u.size() - 1)];
        move(v.re, k);
        move(v.im, k);
        return;
      }
      case TwiddleClass::NEG_J:
        neg_j(v);
        return;
      case TwiddleClass::POS_J:
        neg_j(v);
        negate(v);
        return;
      case TwiddleClass::NEGATE:
        negate(v);
        return;
      case TwiddleClass::EQUAL_MAG:
      case TwiddleClass::GENERAL:
        if (complex_ && rc_.complex_inner) {
          const int wr = e_.fconst(w.real());
          const int wi = e_.fconst(w.imag());
          complex_mul(v, wr, wi, rc_.move_after_inner);
        } else if (classify_twiddle(w) == TwiddleClass::EQUAL_MAG) {
          equal_mag(v, w, rc_.move_after_inner);
        } else {
          const int wr = e_.fconst(w.real());
          const int wi = e_.fconst(w.imag());
          general(v, wr, wi, rc_.move_after_inner);
        }
        return;
    }
  }

  // In-register DIF network; afterwards X[f] sits in x[bitrev(f)].
  void kernel(std::vector<Cx>& x) {
    const int R = static_cast<int>(x.size());
    const int m = log2i(R);
    for (int j = 0; j < m; ++j) {
      const int h = R >> (j + 1);
      for (int g = 0; g < R / (2 * h); ++g)
        for (int i = 0; i < h; ++i) {
          const int a = g * 2 * h + i;
          butterfly(x[a], x[a + h]);
          rotate(x[a + h], j, root(static_cast<long long>(i) * R / (2 * h), R));
        }
    }
  }

  void twiddle(Cx& v, int wr, int wi) {
    if (complex_) complex_mul(v, wr, wi, rc_.twiddle_move_complex);
    else general(v, wr, wi, rc_.twiddle_move_dp);
  }

 private:
  void finish_real(Cx& v, int t, bool move_back) {
    if (move_back) {
      e_.emit({Opcode::MOV, v.re, t, -1, 0});
      e_.release(t);
    } else {
      e_.release(v.re);
      v.re = t;
    }
  }

  Emitter& e_;
  const KernelRecipe& rc_;
  bool complex_;
  bool reduce_;
};

int num_sps_of(const FFTPlan& p) { return p.threads / p.wavefront_depth; }

// Frequency index held at data position `pos` after all passes.
std::uint32_t natural_index(const FFTPlan& p, std::uint32_t pos) {
  std::uint32_t k = 0, weight = 1, rem = static_cast<std::uint32_t>(p.points);
  for (int r : p.radix_schedule) {
    rem /= r;
    k += ((pos / rem) % r) * weight;
    weight *= r;
  }
  return k;
}

struct AddrState {
  int hi1 = -1;
};

struct PassRegs {
  std::vector<int> base;  // per block
  int lo = 0;
  std::vector<int> rev;   // final pass only
  std::vector<int> owned;
};

// Builds rev(t) from shifted copies of t with one shift, one mask and one OR per digit at most.
int emit_digit_reverse(Emitter& e, const FFTPlan& p, int lb, const AddrState& st) {
  const int D = static_cast<int>(p.passes.size()) - 1;
  const int m_last = log2i(p.passes.back().radix);
  struct Source {
    int reg;
    int shift;  // source = t << shift (negative: right shift)
  };
  std::vector<Source> sources;
  if (st.hi1 >= 0) sources.push_back({st.hi1, -log2i(p.passes[1].stride)});
  sources.push_back({0, 0});
  sources.push_back({lb, m_last});

  std::vector<int> pos(D), dst(D);
  for (int j = D - 1, acc = 0; j >= 0; --j) {
    pos[j] = acc;
    acc += log2i(p.radix_schedule[j]);
  }
  for (int j = 0, acc = 0; j < D; ++j) {
    dst[j] = acc;
    acc += log2i(p.radix_schedule[j]);
  }

  auto is_source = [&](int r) {
    return std::any_of(sources.begin(), sources.end(), [r](const Source& s) { return s.reg == r; });
  };
  int rev = -1;
  for (int j = 0; j < D; ++j) {
    int best = -1, best_cost = 1 << 30, best_delta = 0;
    bool best_mask = false;
    for (int si = 0; si < static_cast<int>(sources.size()); ++si) {
      const auto& s = sources[si];
      const int at = pos[j] + s.shift;
      if (at < 0) continue;
      const int delta = dst[j] - at;
      const int low_start = std::max(s.shift, 0);
      const bool has_low = s.shift >= 0 ? pos[j] > 0 : at > 0;
      const bool low_junk = has_low && dst[j] > std::max(0, low_start + delta);
      const bool mask = low_junk || j > 0;
      const int cost = (delta != 0) + mask;
      if (cost < best_cost) {
        best = si;
        best_cost = cost;
        best_delta = delta;
        best_mask = mask;
      }
    }
    int v = sources[best].reg;
    if (best_delta > 0) v = e.op(Opcode::ISHL, v, e.constant(best_delta));
    else if (best_delta < 0) v = e.op(Opcode::ISHR, v, e.constant(-best_delta));
    if (best_mask) {
      const std::uint32_t mask = static_cast<std::uint32_t>(p.radix_schedule[j] - 1) << dst[j];
      const int masked = e.op(Opcode::IAND, v, e.constant(mask));
      if (best_delta != 0) e.release(v);
      v = masked;
    }
    if (rev < 0) {
      rev = v;
    } else {
      const int r = e.op(Opcode::IOR, rev, v);
      if (!is_source(rev)) e.release(rev);
      if (!is_source(v)) e.release(v);
      rev = r;
    }
  }
  if (rev < 0) rev = 0;
  return rev;
}

PassRegs emit_addressing(Emitter& e, const FFTPlan& p, int pass, AddrState& st) {
  const auto& info = p.passes[pass];
  const int P = static_cast<int>(p.passes.size());
  PassRegs pr;
  if (pass < P - 1) {
    if (pass == 0) {
      pr.base = {0};
      pr.lo = 0;
      return pr;
    }
    const int s = info.stride;
    const int hi = e.op(Opcode::ISHR, 0, e.constant(log2i(s)));
    pr.lo = e.op(Opcode::IAND, 0, e.constant(s - 1));
    const int base = e.op(Opcode::ISHL, hi, e.constant(log2i(static_cast<long long>(info.radix) * s)));
    e.emit({Opcode::IOR, base, base, pr.lo, 0});
    pr.base = {base};
    pr.owned = {pr.lo, base};
    if (pass == 1) st.hi1 = hi;
    else e.release(hi);
    return pr;
  }
  // Final pass: loads from t * r_last, stores to rev(t) + f * N / r_last.
  int lb = e.op(Opcode::ISHL, 0, e.constant(log2i(info.radix)));
  pr.owned.push_back(lb);
  int rev = emit_digit_reverse(e, p, lb, st);
  if (rev != 0 && rev != st.hi1 && rev != lb) pr.owned.push_back(rev);
  pr.base.push_back(lb);
  pr.rev.push_back(rev);
  if (info.blocks > 1) {
    const std::uint32_t lb_step = load_index(p, pass, 0, 0, 1) - load_index(p, pass, 0, 0, 0);
    const std::uint32_t rev_step = output_index(p, 0, 0, 1) - output_index(p, 0, 0, 0);
    for (int b = 1; b < info.blocks; ++b) {
      lb = e.op(Opcode::IADD, lb, e.constant(lb_step));
      rev = e.op(Opcode::IADD, rev, e.constant(rev_step));
      pr.base.push_back(lb);
      pr.rev.push_back(rev);
      pr.owned.push_back(lb);
      pr.owned.push_back(rev);
    }
  }
  return pr;
}

// Load/store with an optional constant offset; offset 0 uses the one-register form.
void mem_op(Emitter& e, Opcode op, int value, int addr, std::uint32_t offset) {
  const int off = offset ? e.constant(offset) : -1;
  e.emit({op, value, addr, off, 0});
}
int load(Emitter& e, int addr, std::uint32_t offset) {
  const int d = e.alloc();
  mem_op(e, Opcode::LOD, d, addr, offset);
  return d;
}

// List scheduler: keeps every RAW pair at least `depth` issue cycles apart,
// padding with NOPs only when nothing else is ready.
std::vector<Instruction> schedule(const std::vector<Instruction>& in, const MachineConfig& config) {
  const int n = static_cast<int>(in.size());
  std::vector<std::vector<std::pair<int, bool>>> preds(n);
  std::vector<std::vector<int>> succs(n);
  std::vector<int> indeg(n, 0);
  auto edge = [&](int a, int b, bool raw) {
    preds[b].push_back({a, raw});
    succs[a].push_back(b);
    ++indeg[b];
  };
  std::vector<int> last_write(kCacheReg + 1, -1);
  std::vector<std::vector<int>> readers(kCacheReg + 1);
  int last_store = -1;
  std::vector<int> pending_loads;
  for (int i = 0; i < n; ++i) {
    const auto& x = in[i];
    auto srcs = reads(x);
    std::optional<int> dst = writes(x);
    if (x.op == Opcode::MUL_REAL || x.op == Opcode::MUL_IMAG) srcs.push_back(kCacheReg);
    const bool cache_write =
        x.op == Opcode::LOD_COEFF || x.op == Opcode::COEFF_EN || x.op == Opcode::COEFF_DIS;
    for (int s : srcs)
      if (last_write[s] >= 0) edge(last_write[s], i, true);
    auto write = [&](int d) {
      for (int r : readers[d])
        if (r != i) edge(r, i, false);
      if (last_write[d] >= 0) edge(last_write[d], i, false);
    };
    if (dst) write(*dst);
    if (cache_write) write(kCacheReg);
    if (x.op == Opcode::LOD) {
      if (last_store >= 0) edge(last_store, i, false);
      pending_loads.push_back(i);
    } else if (x.op == Opcode::SAVE || x.op == Opcode::SAVE_BANK) {
      if (last_store >= 0) edge(last_store, i, false);
      for (int l : pending_loads) edge(l, i, false);
      pending_loads.clear();
      last_store = i;
    }
    for (int s : srcs) readers[s].push_back(i);
    auto written = [&](int d) {
      last_write[d] = i;
      readers[d].clear();
    };
    if (dst) written(*dst);
    if (cache_write) written(kCacheReg);
  }

  const auto depth = static_cast<std::uint64_t>(config.pipeline_depth);
  std::vector<std::uint64_t> start(n, 0);
  std::set<int> ready;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.insert(i);
  std::vector<Instruction> out;
  out.reserve(n + n / 4);
  std::uint64_t cycle = 0;
  // Compute and stores issue in emission order; SETI and LOD may be hoisted
  // ahead of the in-order head to cover its latency.
  auto hoistable = [&](int i) { return in[i].op == Opcode::SETI || in[i].op == Opcode::LOD; };
  std::vector<char> done(n, 0);
  int head = 0;
  while (!ready.empty()) {
    while (head < n && (done[head] || hoistable(head))) ++head;
    int pick = -1;
    for (int c : ready) {
      if (c > head && !hoistable(c)) continue;
      bool ok = true;
      for (auto [p, raw] : preds[c])
        if (raw && cycle - start[p] < depth) {
          ok = false;
          break;
        }
      if (ok && (pick < 0 || in[c].op == Opcode::SETI)) {
        pick = c;
        if (in[c].op == Opcode::SETI) break;
      }
    }
    if (pick < 0) {
      out.push_back({Opcode::NOP, -1, -1, -1, 0});
      cycle += instruction_cost(out.back(), config);
      continue;
    }
    ready.erase(pick);
    done[pick] = 1;
    start[pick] = cycle;
    out.push_back(in[pick]);
    cycle += instruction_cost(in[pick], config);
    for (int s : succs[pick])
      if (--indeg[s] == 0) ready.insert(s);
  }
  if (out.size() < in.size()) throw std::logic_error("scheduler dependency cycle");
  return out;
}

}  // namespace

std::string_view twiddle_class_name(TwiddleClass c) {
  static constexpr std::string_view names[] = {"UNITY", "NEGATE", "POS_J", "NEG_J", "EQUAL_MAG", "GENERAL"};
  return names[static_cast<int>(c)];
}

TwiddleClass classify_twiddle(std::complex<double> w) {
  if (std::fabs(std::abs(w) - 1.0) > 1e-6) throw std::invalid_argument("twiddle is not on the unit circle");
  auto near = [](double a, double b) { return std::fabs(a - b) < kClassTol; };
  if (near(w.real(), 1) && near(w.imag(), 0)) return TwiddleClass::UNITY;
  if (near(w.real(), -1) && near(w.imag(), 0)) return TwiddleClass::NEGATE;
  if (near(w.real(), 0) && near(w.imag(), 1)) return TwiddleClass::POS_J;
  if (near(w.real(), 0) && near(w.imag(), -1)) return TwiddleClass::NEG_J;
  if (near(std::fabs(w.real()), std::fabs(w.imag()))) return TwiddleClass::EQUAL_MAG;
  return TwiddleClass::GENERAL;
}

std::vector<RotationSite> kernel_sites(int radix) {
  if (!is_pow2(radix) || radix < 2) throw std::invalid_argument("radix must be a power of two >= 2");
  std::vector<RotationSite> out;
  const int m = log2i(radix);
  for (int j = 0; j < m; ++j) {
    const int h = radix >> (j + 1);
    for (int g = 0; g < radix / (2 * h); ++g)
      for (int i = 0; i < h; ++i) {
        const int e = i * radix / (2 * h);
        out.push_back({j, e, classify_twiddle(root(e, radix))});
      }
  }
  return out;
}

ExpandedBudget expanded_budget(const std::vector<RotationSite>& sites) {
  ExpandedBudget b;
  for (const auto& s : sites) {
    switch (s.cls) {
      case TwiddleClass::GENERAL:
        ++b.general;
        b.general_flops += 6;
        break;
      case TwiddleClass::EQUAL_MAG:
        b.real_multiplies += 2;
        break;
      case TwiddleClass::NEG_J:
      case TwiddleClass::POS_J:
      case TwiddleClass::NEGATE:
        b.other_ops += 2;
        break;
      case TwiddleClass::UNITY:
        break;
    }
  }
  return b;
}

const KernelRecipe& recipe_for(int radix) {
  using M = MoveKind;
  static const KernelRecipe r2{{M::None}, QuarterTurn::IntFp, false, false, false, false};
  static const KernelRecipe r4{{M::Int, M::Fp}, QuarterTurn::RenameXor, false, false, false, false};
  static const KernelRecipe r8{{M::Int, M::Int, M::Int}, QuarterTurn::IntFp, false, false, true, false};
  static const KernelRecipe r16{{M::Fp, M::Int, M::Fp, M::Int}, QuarterTurn::IntFp, true, true, false, false};
  switch (radix) {
    case 2:
      return r2;
    case 4:
      return r4;
    case 8:
      return r8;
    case 16:
      return r16;
  }
  throw std::invalid_argument("unsupported radix " + std::to_string(radix));
}

InstructionCounts count_instructions(const std::vector<Instruction>& code) {
  InstructionCounts c;
  for (const auto& in : code) {
    switch (category(in.op)) {
      case Category::FP_OP:
        ++c.fp;
        break;
      case Category::COMPLEX_OP:
        ++c.complex;
        break;
      case Category::INT_OP:
        ++c.int_ops;
        break;
      case Category::LOAD:
        ++c.load;
        break;
      case Category::STORE:
        ++c.store;
        break;
      case Category::STORE_VM:
        ++c.store_vm;
        break;
      case Category::IMMEDIATE:
        ++c.immediate;
        break;
      case Category::NOP:
        ++c.nop;
        break;
      case Category::BRANCH:
        break;
    }
  }
  return c;
}

KernelCode gen_kernel(int radix, bool complex_enabled) {
  const auto& rc = recipe_for(radix);
  Emitter e(kMaxRegisterIndex + 1);
  KernelEmitter k(e, rc, complex_enabled);
  std::vector<Cx> x(radix);
  for (auto& v : x) v = {e.alloc(), e.alloc()};
  std::vector<Cx> w(radix);
  for (int f = 1; f < radix; ++f) w[f] = {e.alloc(), e.alloc()};
  k.kernel(x);
  const int bits = log2i(radix);
  for (int f = 1; f < radix; ++f) k.twiddle(x[bitrev(f, bits)], w[f].re, w[f].im);
  KernelCode out{e.code, {}};
  out.counts = count_instructions(out.code);
  return out;
}

FFTPlan plan(int points, int radix, int num_sps) {
  if (radix != 2 && radix != 4 && radix != 8 && radix != 16)
    throw std::invalid_argument("radix must be 2, 4, 8 or 16");
  if (!is_pow2(points) || points < radix * radix)
    throw std::invalid_argument("points must be a power of two and at least radix^2");
  if (num_sps <= 0 || num_sps % kBanks) throw std::invalid_argument("num_sps must be a positive multiple of 4");
  FFTPlan p;
  p.points = points;
  p.radix = radix;
  int n = points;
  while (n >= radix) {
    p.radix_schedule.push_back(radix);
    n /= radix;
  }
  if (n > 1) p.radix_schedule.push_back(n);
  p.threads = points / radix;
  if (p.threads % num_sps) throw std::invalid_argument("points / radix must be a multiple of the SP count");
  p.wavefront_depth = p.threads / num_sps;
  p.regs_per_thread = std::min(kMaxRegisterIndex + 1, kMaxTotalRegisters / p.threads);
  p.data_re = 0;
  p.data_im = static_cast<std::uint32_t>(points);
  std::uint32_t cursor = 2u * points;
  const int P = static_cast<int>(p.radix_schedule.size());
  long long span = points;
  for (int i = 0; i < P; ++i) {
    PassInfo pi;
    pi.radix = p.radix_schedule[i];
    span /= pi.radix;
    pi.stride = static_cast<int>(span);
    pi.blocks = i == P - 1 ? points / pi.radix / p.threads : 1;
    pi.twiddled = i < P - 1;
    if (pi.twiddled) {
      pi.tw_re = cursor;
      pi.tw_im = cursor + static_cast<std::uint32_t>((pi.radix - 1) * pi.stride);
      cursor += 2u * (pi.radix - 1) * pi.stride;
    }
    p.passes.push_back(pi);
  }
  p.words_used = cursor;
  if (p.words_used > 16384) throw std::invalid_argument("data and twiddle tables exceed shared memory");
  for (int i = 0; i < P; ++i) p.passes[i].vm_eligible = vm_eligibility(p, i);
  return p;
}

MachineConfig plan_config(const FFTPlan& p, Variant v) {
  MachineConfig c = make_config(v, p.threads, p.regs_per_thread);
  c.num_sps = num_sps_of(p);
  c.check();
  return c;
}

bool vm_eligibility(const FFTPlan& p, int pass_index) {
  const int P = static_cast<int>(p.passes.size());
  if (pass_index < 0 || pass_index >= P) throw std::out_of_range("pass index");
  if (pass_index == P - 1) return false;  // the host reads the result through any bank
  const int sps = num_sps_of(p);
  std::vector<int> reader(p.points, -1);
  const auto& next = p.passes[pass_index + 1];
  for (int b = 0; b < next.blocks; ++b)
    for (int t = 0; t < p.threads; ++t)
      for (int k = 0; k < next.radix; ++k) reader[load_index(p, pass_index + 1, t, k, b)] = (t % sps) % kBanks;
  const auto& cur = p.passes[pass_index];
  for (int b = 0; b < cur.blocks; ++b)
    for (int t = 0; t < p.threads; ++t)
      for (int k = 0; k < cur.radix; ++k)
        if (reader[load_index(p, pass_index, t, k, b)] != (t % sps) % kBanks) return false;
  return true;
}

std::uint32_t load_index(const FFTPlan& p, int pass, int t, int k, int block) {
  const auto& pi = p.passes.at(pass);
  const std::uint32_t u = static_cast<std::uint32_t>(block * p.threads + t);
  const std::uint32_t s = static_cast<std::uint32_t>(pi.stride);
  return (u / s) * pi.radix * s + u % s + static_cast<std::uint32_t>(k) * s;
}

std::uint32_t output_index(const FFTPlan& p, int t, int f, int block) {
  return natural_index(p, load_index(p, static_cast<int>(p.passes.size()) - 1, t, f, block));
}

std::vector<Instruction> gen_addressing(const FFTPlan& p, int pass_index) {
  if (pass_index < 0 || pass_index >= static_cast<int>(p.passes.size())) throw std::out_of_range("pass index");
  Emitter e(p.regs_per_thread);
  AddrState st;
  for (int i = 0; i < pass_index; ++i) {
    auto pr = emit_addressing(e, p, i, st);
    for (int r : pr.owned) e.release(r);
  }
  e.forget_constants();
  e.code.clear();
  emit_addressing(e, p, pass_index, st);
  return e.code;
}

Compiled emit_program(const FFTPlan& p, const MachineConfig& config, const EmitOptions& options) {
  if (config.threads != p.threads) throw std::invalid_argument("configuration thread count does not match the plan");
  if (config.num_sps != num_sps_of(p)) throw std::invalid_argument("configuration SP count does not match the plan");
  if (config.words() < p.words_used) throw std::invalid_argument("shared memory too small for the plan");
  const bool complex = config.complex_enabled;
  const bool vm = config.variant == MemoryVariant::VM;
  const std::uint32_t N = static_cast<std::uint32_t>(p.points);
  const int P = static_cast<int>(p.passes.size());

  Emitter e(config.regs_per_thread);
  Compiled out;
  if (complex) e.emit({Opcode::COEFF_EN, -1, -1, -1, 0});
  AddrState st;
  for (int pass = 0; pass < P; ++pass) {
    const auto& info = p.passes[pass];
    const auto& rc = recipe_for(info.radix);
    KernelEmitter k(e, rc, complex, options.strength_reduction);
    const bool last = pass == P - 1;
    const auto s = static_cast<std::uint32_t>(info.stride);
    PassRegs pr = emit_addressing(e, p, pass, st);

    std::vector<std::vector<Cx>> x(info.blocks, std::vector<Cx>(info.radix));
    for (int b = 0; b < info.blocks; ++b)
      for (int i = 0; i < info.radix; ++i) {
        x[b][i].re = load(e, pr.base[b], p.data_re + i * s);
        x[b][i].im = load(e, pr.base[b], p.data_im + i * s);
      }

    const bool banked = vm && info.vm_eligible;
    if (banked) out.store_vm_passes.push_back(pass);
    const Opcode store = banked ? Opcode::SAVE_BANK : Opcode::SAVE;
    const int bits = log2i(info.radix);
    for (int b = 0; b < info.blocks; ++b) {
      k.kernel(x[b]);
      if (info.twiddled)
        for (int f = 1; f < info.radix; ++f) {
          const int wr = load(e, pr.lo, info.tw_re + (f - 1) * s);
          const int wi = load(e, pr.lo, info.tw_im + (f - 1) * s);
          k.twiddle(x[b][bitrev(f, bits)], wr, wi);
          e.release(wr);
          e.release(wi);
        }
      for (int f = 0; f < info.radix; ++f) {
        const Cx v = x[b][bitrev(f, bits)];
        if (last) {
          const std::uint32_t off = f * (N / info.radix);
          mem_op(e, store, v.re, pr.rev[b], p.data_re + off);
          mem_op(e, store, v.im, pr.rev[b], p.data_im + off);
        } else {
          mem_op(e, store, v.re, pr.base[b], p.data_re + f * s);
          mem_op(e, store, v.im, pr.base[b], p.data_im + f * s);
        }
        e.release(v.re);
        e.release(v.im);
      }
    }
    for (int r : pr.owned) e.release(r);
    if (last && st.hi1 >= 0) e.release(st.hi1);
  }
  if (complex) e.emit({Opcode::COEFF_DIS, -1, -1, -1, 0});

  out.program.code = schedule(e.code, config);
  out.program.code.push_back({Opcode::HALT, -1, -1, -1, 0});
  out.program.threads_required = p.threads;
  out.program.refresh_metadata();
  out.predicted = static_breakdown(out.program, config);
  out.counts = count_instructions(out.program.code);
  return out;
}

std::uint64_t baseline_fp_cycles(const FFTPlan& p) {
  const auto c = emit_program(p, plan_config(p, Variant::DP));
  return c.predicted[Category::FP_OP];
}

SharedMemoryImage init_memory(const FFTPlan& p, const std::vector<std::complex<double>>& input, std::size_t words) {
  if (input.size() != static_cast<std::size_t>(p.points)) throw std::invalid_argument("input length does not match the plan");
  if (words < p.words_used) throw std::invalid_argument("memory image too small for the plan");
  SharedMemoryImage img(words);
  for (int i = 0; i < p.points; ++i) {
    img.poke_float(p.data_re + i, static_cast<float>(input[i].real()));
    img.poke_float(p.data_im + i, static_cast<float>(input[i].imag()));
  }
  for (const auto& pi : p.passes) {
    if (!pi.twiddled) continue;
    const long long L = static_cast<long long>(pi.radix) * pi.stride;
    for (int f = 1; f < pi.radix; ++f)
      for (int lo = 0; lo < pi.stride; ++lo) {
        const auto w = root(static_cast<long long>(f) * lo, L);
        img.poke_float(pi.tw_re + (f - 1) * pi.stride + lo, static_cast<float>(w.real()));
        img.poke_float(pi.tw_im + (f - 1) * pi.stride + lo, static_cast<float>(w.imag()));
      }
  }
  return img;
}

std::vector<std::complex<double>> read_output(const FFTPlan& p, const SharedMemoryImage& image) {
  std::vector<std::complex<double>> out(p.points);
  for (int k = 0; k < p.points; ++k) out[k] = {image.peek_float(p.data_re + k), image.peek_float(p.data_im + k)};
  return out;
}

std::string plan_sidecar_json(const FFTPlan& p, const Compiled& c, Variant v) {
  nlohmann::ordered_json j;
  j["points"] = p.points;
  j["radix"] = p.radix;
  j["variant"] = std::string(variant_name(v));
  j["radix_schedule"] = p.radix_schedule;
  j["threads"] = p.threads;
  j["wavefront_depth"] = p.wavefront_depth;
  j["regs_per_thread"] = p.regs_per_thread;
  j["regs_required"] = c.program.regs_required;
  j["instructions"] = c.program.code.size();
  auto& passes = j["passes"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < p.passes.size(); ++i) {
    const auto& pi = p.passes[i];
    nlohmann::ordered_json e;
    e["radix"] = pi.radix;
    e["stride"] = pi.stride;
    e["blocks"] = pi.blocks;
    e["twiddled"] = pi.twiddled;
    e["vm_eligible"] = pi.vm_eligible;
    e["store_vm"] = std::find(c.store_vm_passes.begin(), c.store_vm_passes.end(), static_cast<int>(i)) !=
                    c.store_vm_passes.end();
    if (pi.twiddled) e["twiddle_base"] = {pi.tw_re, pi.tw_im};
    passes.push_back(e);
  }
  auto& pred = j["predicted"];
  for (int i = 0; i < kCategoryCount; ++i)
    pred[std::string(category_name(static_cast<Category>(i)))] = c.predicted[static_cast<Category>(i)];
  pred["Total"] = c.predicted.total();
  j["memory_map"] = {{"data_re", p.data_re}, {"data_im", p.data_im}, {"words_used", p.words_used}};
  return j.dump(2);
}

}  // namespace egpu
