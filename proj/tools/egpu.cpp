#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "egpu/cycles.hpp"
#include "egpu/fftgen.hpp"
#include "egpu/golden.hpp"
#include "egpu/isa.hpp"
#include "egpu/machine.hpp"
#include "egpu/oracle.hpp"

using json = nlohmann::ordered_json;
using namespace egpu;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitGolden = 2;
constexpr int kExitUsage = 64;
constexpr double kTolerance = 1e-4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Cell {
  GoldenKey key;
  CycleBreakdown cycles;
  Metrics metrics;
  oracle::ErrorStats error;
  bool verified = false;
  std::string failure;
  std::optional<DiffReport> diff;
  Compiled compiled;
};

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

oracle::ComplexVector read_input(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read input file " + path);
  oracle::ComplexVector v;
  std::string line;
  while (std::getline(in, line)) {
    if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
    std::istringstream ls(line);
    double re = 0, im = 0;
    if (!(ls >> re)) continue;
    ls >> im;
    v.emplace_back(re, im);
  }
  if (v.size() != n)
    throw UsageError(path + ": expected " + std::to_string(n) + " samples, found " + std::to_string(v.size()));
  return v;
}

Cell evaluate(const GoldenKey& key, const oracle::ComplexVector& input, const oracle::ComplexVector& expected,
              std::uint64_t baseline, bool strict) {
  Cell c;
  c.key = key;
  const auto p = plan(key.points, key.radix);
  auto cfg = plan_config(p, key.variant);
  cfg.strict_banking = strict;
  c.compiled = emit_program(p, cfg);
  try {
    const auto trace = run(c.compiled.program, cfg, init_memory(p, input, cfg.words()));
    c.cycles = profile(trace);
    c.error = oracle::compare(read_output(p, trace.memory), expected);
    c.verified = c.error.max_rel_err <= kTolerance;
    if (!c.verified) c.failure = "max relative error " + std::to_string(c.error.max_rel_err);
  } catch (const MachineError& e) {
    c.cycles = c.compiled.predicted;
    c.failure = e.what();
  }
  c.metrics = metrics(c.cycles, baseline, cfg.clock_hz);
  if (has_golden(key)) c.diff = diff_against_golden(c.cycles, c.metrics, key);
  return c;
}

std::vector<double> row_values(const Cell& c) {
  std::vector<double> v;
  for (int i = 0; i < kCategoryCount; ++i) v.push_back(static_cast<double>(c.cycles[static_cast<Category>(i)]));
  v.push_back(static_cast<double>(c.cycles.total()));
  v.push_back(c.metrics.time_us);
  v.push_back(c.metrics.efficiency_pct);
  v.push_back(c.metrics.memory_pct);
  return v;
}

std::string csv_header() {
  std::string h;
  for (int i = 0; i < kRowCount; ++i) h += (i ? "," : "") + std::string(row_name(static_cast<Row>(i)));
  return h;
}

std::string csv_values(const Cell& c) {
  std::string s;
  const auto v = row_values(c);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += i >= static_cast<std::size_t>(kRowCount) - 3 ? fmt2(v[i]) : std::to_string(static_cast<std::uint64_t>(v[i]));
  }
  return s;
}

json cell_json(const Cell& c) {
  json j;
  j["radix"] = c.key.radix;
  j["points"] = c.key.points;
  j["variant"] = std::string(variant_name(c.key.variant));
  j["source"] = "simulated";
  const auto v = row_values(c);
  for (int i = 0; i < kRowCount; ++i) j[std::string(row_name(static_cast<Row>(i)))] = v[i];
  j["verified"] = c.verified;
  j["max_rel_err"] = c.error.max_rel_err;
  if (!c.failure.empty()) j["failure"] = c.failure;
  if (c.diff) {
    json d = json::array();
    for (const auto& r : c.diff->rows) {
      if (!r.golden) continue;
      json e{{"row", std::string(row_name(r.row))}, {"simulated", r.simulated}, {"golden", *r.golden},
             {"rel_delta", r.rel_delta}, {"gated", r.gated}, {"pass", r.pass}};
      if (!r.note.empty()) e["note"] = r.note;
      d.push_back(e);
    }
    j["golden_diff"] = d;
    j["golden_pass"] = c.diff->pass();
  }
  return j;
}

std::string key_label(const GoldenKey& k) {
  return "radix-" + std::to_string(k.radix) + " " + std::to_string(k.points) + " " + std::string(variant_label(k.variant));
}

void print_cell_text(std::ostream& os, const Cell& c) {
  os << key_label(c.key) << "\n";
  const auto v = row_values(c);
  for (int i = 0; i < kRowCount; ++i) {
    const auto row = static_cast<Row>(i);
    char line[160];
    const bool metric = i >= kRowCount - 3;
    std::snprintf(line, sizeof line, "  %-15s %12s", std::string(row_name(row)).c_str(),
                  metric ? fmt2(v[i]).c_str() : std::to_string(static_cast<std::uint64_t>(v[i])).c_str());
    os << line;
    if (c.diff) {
      const auto& r = c.diff->rows[i];
      if (r.golden) {
        std::snprintf(line, sizeof line, "  golden %10s  %+6.1f%%%s", metric ? fmt2(*r.golden).c_str() : std::to_string(static_cast<std::uint64_t>(*r.golden)).c_str(),
                      100.0 * r.rel_delta, !r.gated ? "  (not gated)" : r.pass ? "" : "  OUT OF TOLERANCE");
        os << line;
      }
    }
    os << "\n";
  }
  os << "  verification    " << (c.verified ? "pass" : "FAIL") << " (max rel err " << c.error.max_rel_err << ")";
  if (!c.failure.empty()) os << ": " << c.failure;
  os << "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

Variant variant_arg(const std::string& s) {
  auto v = parse_variant(s);
  if (!v) throw UsageError("unknown variant '" + s + "'");
  return *v;
}

int cmd_run(int radix, int points, const std::string& variant, std::uint64_t seed, const std::string& input_path,
            const std::string& out_path, const std::string& format, bool strict) {
  const GoldenKey key{radix, points, variant_arg(variant)};
  FFTPlan p;
  try {
    p = plan(points, radix);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto input = input_path.empty() ? oracle::random_vector(points, seed) : read_input(input_path, points);
  const Cell c = evaluate(key, input, oracle::dft_reference(input), baseline_fp_cycles(p), strict);
  if (!out_path.empty()) {
    write_text(out_path, disassemble(c.compiled.program));
    write_text(out_path + ".json", plan_sidecar_json(p, c.compiled, key.variant) + "\n");
  }
  if (format == "csv") {
    std::cout << csv_header() << "\n" << csv_values(c) << "\n";
  } else if (format == "json") {
    auto j = cell_json(c);
    j["seed"] = seed;
    std::cout << j.dump(2) << "\n";
  } else {
    print_cell_text(std::cout, c);
    if (input_path.empty()) std::cout << "  seed            " << seed << "\n";
  }
  return c.verified ? kExitOk : kExitNumeric;
}

json reference_json() {
  json refs = json::array();
  for (const auto& r : ip_core_reference())
    refs.push_back({{"source", "published"}, {"kind", "ip_core"}, {"points", r.points}, {"ip_time_us", r.ip_time_us},
                    {"egpu_time_us", r.egpu_time_us}, {"ratio", r.perf_ratio}, {"ratio_normalized", r.normalized_ratio}});
  for (const auto& r : gpu_efficiency_reference())
    refs.push_back({{"source", "published"}, {"kind", "gpu_efficiency"}, {"device", r.device}, {"points", r.points},
                    {"efficiency_pct", r.efficiency_pct}});
  return refs;
}

int cmd_bench(std::vector<int> radices, std::vector<int> sizes, std::vector<std::string> variants, std::uint64_t seed,
              const std::string& out_path, const std::string& format, bool strict) {
  std::vector<Variant> vs;
  for (const auto& s : variants) vs.push_back(variant_arg(s));
  std::vector<GoldenKey> keys;
  for (const auto& k : golden_keys()) {
    if (!radices.empty() && std::find(radices.begin(), radices.end(), k.radix) == radices.end()) continue;
    if (!sizes.empty() && std::find(sizes.begin(), sizes.end(), k.points) == sizes.end()) continue;
    if (!vs.empty() && std::find(vs.begin(), vs.end(), k.variant) == vs.end()) continue;
    keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end());

  std::map<int, oracle::ComplexVector> inputs, expected;
  std::map<std::pair<int, int>, std::uint64_t> baselines;
  std::vector<Cell> cells;
  for (const auto& k : keys) {
    if (!inputs.count(k.points)) {
      inputs[k.points] = oracle::random_vector(k.points, seed);
      expected[k.points] = oracle::dft_reference(inputs[k.points]);
    }
    auto& b = baselines[{k.radix, k.points}];
    if (!b) b = baseline_fp_cycles(plan(k.points, k.radix));
    cells.push_back(evaluate(k, inputs[k.points], expected[k.points], b, strict));
  }

  int exact = 0, tolerant = 0, failed = 0, ungated = 0;
  bool numeric_ok = true, golden_ok = true;
  for (const auto& c : cells) {
    numeric_ok &= c.verified;
    if (!c.diff) continue;
    golden_ok &= c.diff->pass();
    for (const auto& r : c.diff->rows) {
      if (!r.golden) continue;
      if (!r.gated) ++ungated;
      else if (!r.pass) ++failed;
      else if (r.abs_delta == 0) ++exact;
      else ++tolerant;
    }
  }

  std::ostringstream os;
  if (format == "csv") {
    os << "radix,points,variant," << csv_header() << "\n";
    for (const auto& c : cells)
      os << c.key.radix << "," << c.key.points << "," << variant_name(c.key.variant) << "," << csv_values(c) << "\n";
  } else if (format == "json") {
    json j;
    j["seed"] = seed;
    j["rows"] = json::array();
    for (const auto& c : cells) j["rows"].push_back(cell_json(c));
    j["summary"] = {{"cells_exact", exact}, {"cells_within_tolerance", tolerant}, {"cells_failed", failed},
                    {"cells_not_gated", ungated}, {"verification_pass", numeric_ok}, {"golden_pass", golden_ok}};
    j["reference"] = reference_json();
    os << j.dump(2) << "\n";
  } else {
    for (const auto& c : cells) print_cell_text(os, c);
    if (!cells.empty()) {
      os << "\nsummary: " << exact << " exact, " << tolerant << " within tolerance, " << failed << " failed, "
         << ungated << " not gated; verification " << (numeric_ok ? "pass" : "FAIL") << "\n";
      os << "\nreference rows (published figures, not simulated)\n";
      for (const auto& r : ip_core_reference())
        os << "  IP core " << r.points << " points: " << fmt2(r.ip_time_us) << " us; eGPU radix-16 "
           << fmt2(r.egpu_time_us) << " us; ratio " << r.perf_ratio << " (normalized " << r.normalized_ratio << ")\n";
      for (const auto& r : gpu_efficiency_reference())
        os << "  " << r.device << " " << r.points << " points: efficiency " << r.efficiency_pct << "%\n";
      for (const auto& c : cells)
        if (c.key.radix == 16 && c.key.variant == Variant::DP_VM_COMPLEX)
          for (const auto& r : ip_core_reference())
            if (r.points == c.key.points)
              os << "  simulated radix-16 " << r.points << " VM+Complex time / IP time = "
                 << fmt2(c.metrics.time_us / r.ip_time_us) << "\n";
    }
  }
  if (out_path.empty()) std::cout << os.str();
  else write_text(out_path, os.str());
  if (!numeric_ok) return kExitNumeric;
  return golden_ok ? kExitOk : kExitGolden;
}

json program_json(const Program& p) {
  json j;
  j["threads_required"] = p.threads_required;
  j["regs_required"] = p.regs_required;
  j["labels"] = json::object();
  for (const auto& [name, idx] : p.labels) j["labels"][name] = idx;
  j["code"] = json::array();
  for (const auto& in : p.code) {
    json e{{"op", std::string(mnemonic(in.op))}};
    if (in.dest >= 0) e["dest"] = in.dest;
    if (in.src1 >= 0) e["src1"] = in.src1;
    if (in.src2 >= 0) e["src2"] = in.src2;
    if (shape(in.op) == Shape::RI || shape(in.op) == Shape::BR) e["imm"] = in.imm;
    j["code"].push_back(e);
  }
  return j;
}

Program program_from_json(const json& j) {
  Program p;
  for (const auto& e : j.at("code")) {
    const auto name = e.at("op").get<std::string>();
    auto op = parse_mnemonic(name);
    if (!op) throw std::runtime_error("unknown opcode " + name);
    p.code.push_back({*op, e.value("dest", -1), e.value("src1", -1), e.value("src2", -1), e.value("imm", 0u)});
  }
  if (j.contains("labels"))
    for (const auto& [name, idx] : j["labels"].items()) p.labels[name] = idx.get<std::size_t>();
  p.refresh_metadata();
  p.threads_required = j.value("threads_required", 0);
  return p;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_asm(const std::string& path, const std::string& out_path) {
  Program p;
  try {
    p = assemble(slurp(path));
  } catch (const AsmError& e) {
    std::cerr << path << ":" << e.line() << ": " << e.what() << "\n";
    return kExitNumeric;
  }
  const auto text = program_json(p).dump(2) + "\n";
  if (out_path.empty()) std::cout << text;
  else write_text(out_path, text);
  return kExitOk;
}

int cmd_disasm(const std::string& path, const std::string& out_path) {
  Program p;
  try {
    p = program_from_json(json::parse(slurp(path)));
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kExitNumeric;
  }
  const auto text = disassemble(p);
  if (out_path.empty()) std::cout << text;
  else write_text(out_path, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eGPU FFT simulator"};
  app.require_subcommand(1);

  int radix = 4, points = 256;
  std::string variant = "dp", format = "text", input, out;
  std::uint64_t seed = 1;
  bool strict = true;
  const std::vector<std::string> formats{"text", "csv", "json"};

  auto* run_cmd = app.add_subcommand("run", "compile, simulate and verify one configuration");
  run_cmd->add_option("--radix", radix, "FFT radix (2, 4, 8, 16)")->required();
  run_cmd->add_option("--points", points, "transform length")->required();
  run_cmd->add_option("--variant", variant, "dp, qp, dp-vm, dp-complex, dp-vm-complex, qp-complex");
  run_cmd->add_option("--seed", seed, "seed for the random input");
  run_cmd->add_option("--input", input, "file with one 're im' sample per line");
  run_cmd->add_option("--out", out, "write the generated program here (plus a .json sidecar)");
  run_cmd->add_option("--format", format)->check(CLI::IsMember(formats));
  run_cmd->add_flag("--strict-banking,!--no-strict-banking", strict, "fault on stale virtual-bank reads");

  std::vector<int> radices, sizes;
  std::vector<std::string> variants;
  auto* bench_cmd = app.add_subcommand("bench", "run the table matrix and diff against the golden tables");
  bench_cmd->add_option("--radix", radices, "restrict to these radices");
  bench_cmd->add_option("--points", sizes, "restrict to these sizes");
  bench_cmd->add_option("--variant", variants, "restrict to these variants");
  bench_cmd->add_option("--seed", seed);
  bench_cmd->add_option("--out", out, "write the report here instead of stdout");
  bench_cmd->add_option("--format", format)->check(CLI::IsMember(formats));
  bench_cmd->add_flag("--strict-banking,!--no-strict-banking", strict);

  std::string file;
  auto* asm_cmd = app.add_subcommand("asm", "assemble text into a JSON program");
  asm_cmd->add_option("file", file)->required();
  asm_cmd->add_option("--out", out);
  auto* disasm_cmd = app.add_subcommand("disasm", "print a JSON program as assembly text");
  disasm_cmd->add_option("file", file)->required();
  disasm_cmd->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(radix, points, variant, seed, input, out, format, strict);
    if (*bench_cmd) return cmd_bench(radices, sizes, variants, seed, out, format, strict);
    if (*asm_cmd) return cmd_asm(file, out);
    if (*disasm_cmd) return cmd_disasm(file, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
