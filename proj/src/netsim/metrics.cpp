#include "scap/netsim/metrics.hpp"

#include <cstdio>

namespace scap::netsim {

void Metrics::reset_traffic() {
  for (auto& b : bytes) b = DeviceBytes{};
  sent_count.fill(0);
  delivered_count.fill(0);
  sent_by_phase.fill(0);
  for (auto& row : type_bytes) row.fill(0);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_csv_header(std::ostream& out) { out << "scenario,seed,metric,time,value\n"; }

void write_csv(std::ostream& out, const std::string& scenario, std::uint64_t seed, const std::vector<Sample>& samples) {
  for (const auto& s : samples) out << scenario << ',' << seed << ',' << s.metric << ',' << fmt(s.time) << ',' << fmt(s.value) << '\n';
}

}  // namespace scap::netsim
