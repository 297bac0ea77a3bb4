#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "lrtc/experiments.hpp"

namespace lrtc {

namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check(const std::ostream& out) {
  if (!out) throw std::runtime_error("failed writing CSV output");
}

}  // namespace

void write_history(std::span<const IterationRecord> history, std::ostream& out) {
  out << "t,r,s,rho,objective,nmse\n";
  for (const IterationRecord& rec : history) {
    out << rec.t << ',' << exact(rec.r) << ',' << exact(rec.s) << ',' << exact(rec.rho) << ','
        << exact(rec.objective) << ',';
    if (rec.nmse) out << exact(*rec.nmse);
    out << '\n';
  }
  out.flush();
  check(out);
}

void write_summary(const SweepResult& result, std::ostream& out) {
  out << "cfg,ratio,nmse,iters,status\n";
  for (const SummaryRow& row : result.summary()) {
    out << row.cfg << ',' << exact(row.ratio) << ',' << exact(row.nmse) << ',' << exact(row.iters)
        << ',' << to_string(row.status) << '\n';
  }
  out.flush();
  check(out);
}

}  // namespace lrtc
