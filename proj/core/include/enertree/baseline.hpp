#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace enertree {

// One sample window of one process. Fractions are the share of the in-use
// resource attributable to the process; energies are joules the resource
// spent over the window.
struct ResourceSample {
  std::string process;
  double p_dram = 0.0;
  double p_cpu = 0.0;
  double p_gpu = 0.0;
  double e_dram = 0.0;
  double e_cpu = 0.0;
  double e_gpu = 0.0;

  friend bool operator==(const ResourceSample&, const ResourceSample&) = default;
};

struct ResourceTrace {
  std::vector<ResourceSample> samples;

  friend bool operator==(const ResourceTrace&, const ResourceTrace&) = default;
};

struct BaselineConfig {
  double pue = 1.0;  // power usage effectiveness, >= 1
};

// PUE * sum over samples of (p_dram e_dram + p_cpu e_cpu + p_gpu e_gpu).
// ValidationError on fractions outside [0, 1], negative energies or PUE < 1.
double utilization_energy(const ResourceTrace& trace, const BaselineConfig& cfg = {});

// CSV with header process,p_dram,p_cpu,p_gpu,e_dram,e_cpu,e_gpu.
ResourceTrace parse_trace_csv(std::string_view text);
ResourceTrace load_trace(const std::filesystem::path& path);
std::string serialize_trace_csv(const ResourceTrace& trace);

}  // namespace enertree
