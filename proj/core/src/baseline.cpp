#include "enertree/baseline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "enertree/error.hpp"

namespace enertree {
namespace {

constexpr std::array<std::string_view, 6> kNumericColumns = {"p_dram", "p_cpu", "p_gpu",
                                                             "e_dram", "e_cpu", "e_gpu"};

void check_fraction(double p, std::string_view what, std::size_t row) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("trace sample " + std::to_string(row) + ": " + std::string(what) +
                          " must be within [0, 1]");
  }
}

void check_energy(double e, std::string_view what, std::size_t row) {
  if (!(e >= 0.0) || !std::isfinite(e)) {
    throw ValidationError("trace sample " + std::to_string(row) + ": " + std::string(what) +
                          " must be non-negative");
  }
}

}  // namespace

double utilization_energy(const ResourceTrace& trace, const BaselineConfig& cfg) {
  if (!(cfg.pue >= 1.0) || !std::isfinite(cfg.pue)) throw ValidationError("PUE must be >= 1");
  double total = 0.0;
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const ResourceSample& s = trace.samples[i];
    check_fraction(s.p_dram, "p_dram", i);
    check_fraction(s.p_cpu, "p_cpu", i);
    check_fraction(s.p_gpu, "p_gpu", i);
    check_energy(s.e_dram, "e_dram", i);
    check_energy(s.e_cpu, "e_cpu", i);
    check_energy(s.e_gpu, "e_gpu", i);
    total += s.p_dram * s.e_dram + s.p_cpu * s.e_cpu + s.p_gpu * s.e_gpu;
  }
  return cfg.pue * total;
}

ResourceTrace parse_trace_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  const std::size_t process_col = table.column("process");
  if (process_col == std::string_view::npos) throw ParseError("trace CSV: missing column 'process'");
  std::array<std::size_t, 6> cols{};
  for (std::size_t k = 0; k < kNumericColumns.size(); ++k) {
    cols[k] = table.column(kNumericColumns[k]);
    if (cols[k] == std::string_view::npos) {
      throw ParseError("trace CSV: missing column '" + std::string(kNumericColumns[k]) + "'");
    }
  }
  ResourceTrace trace;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    ResourceSample s;
    s.process = row[process_col];
    std::array<double*, 6> dst = {&s.p_dram, &s.p_cpu, &s.p_gpu, &s.e_dram, &s.e_cpu, &s.e_gpu};
    for (std::size_t k = 0; k < 6; ++k) *dst[k] = csv::to_double(row[cols[k]], r, kNumericColumns[k]);
    trace.samples.push_back(std::move(s));
  }
  return trace;
}

ResourceTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open trace file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace_csv(buf.str());
}

std::string serialize_trace_csv(const ResourceTrace& trace) {
  std::string out = "process,p_dram,p_cpu,p_gpu,e_dram,e_cpu,e_gpu\n";
  for (const ResourceSample& s : trace.samples) {
    out += s.process;
    for (double v : {s.p_dram, s.p_cpu, s.p_gpu, s.e_dram, s.e_cpu, s.e_gpu}) {
      out += ',';
      out += csv::format_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace enertree
