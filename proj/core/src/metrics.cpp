#include "snnc/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "snnc/errors.hpp"

namespace snnc {

double residual_memory(double sparsity, int bits, int baseline_bits) {
  if (!(sparsity >= 0.0 && sparsity < 1.0))
    throw Error("residual_memory: sparsity must be in [0,1)");
  if (bits < 1 || bits > baseline_bits)
    throw Error("residual_memory: need 1 <= b <= B");
  return (1.0 - sparsity) * static_cast<double>(bits) /
         static_cast<double>(baseline_bits);
}

double residual_spikes(double rate, double baseline_rate) {
  if (!(baseline_rate > 0.0))
    throw Error("residual_spikes: baseline rate R must be > 0");
  if (rate < 0.0) throw Error("residual_spikes: rate r must be >= 0");
  return rate / baseline_rate;
}

double residual_ops(double r_mem, double r_s) {
  if (!(r_mem > 0.0 && r_mem <= 1.0))
    throw Error("residual_ops: R_mem must be in (0,1]");
  if (!(r_s >= 0.0 && r_s <= 1.0))
    throw Error("residual_ops: R_s must be in [0,1]");
  return r_mem * r_s;
}

double round_half_up(double x, int decimals) {
  double scale = std::pow(10.0, decimals);
  return std::floor(x * scale + 0.5) / scale;
}

double to_percent(double fraction) { return round_half_up(100.0 * fraction); }

double multiplier_of_percent(double percent) {
  if (!(percent > 0.0)) throw Error("multiplier_of_percent: percent <= 0");
  return round_half_up(100.0 / percent);
}

CompressionReport make_report(double lambda, double sparsity, int bits,
                              int baseline_bits, double baseline_rate,
                              double rate, double baseline_accuracy,
                              double accuracy) {
  CompressionReport r;
  r.lambda = lambda;
  r.sparsity = sparsity;
  r.bits = bits;
  r.baseline_bits = baseline_bits;
  r.baseline_rate = baseline_rate;
  r.rate = rate;
  r.r_mem = residual_memory(sparsity, bits, baseline_bits);
  r.r_s = residual_spikes(rate, baseline_rate);
  // Direct product rather than residual_ops(): a retrained model can spike
  // more than its baseline, putting the measured R_s above 1.
  r.r_ops = r.r_mem * r.r_s;
  r.baseline_accuracy = baseline_accuracy;
  r.accuracy = accuracy;
  r.accuracy_loss = accuracy - baseline_accuracy;
  return r;
}

std::string report_csv_header() {
  return "lambda,s,b,r,r_mem_pct,r_ops_pct,accuracy_pct,accuracy_loss_pct,"
         "r_mem_x,r_ops_x,baseline_rate,r_s_pct,baseline_accuracy_pct";
}

std::string report_csv_row(const CompressionReport& r) {
  char buf[320];
  double mem_pct = to_percent(r.r_mem);
  double ops_pct = to_percent(r.r_ops);
  std::snprintf(
      buf, sizeof(buf),
      "%g,%g,%d,%.6f,%.2f,%.2f,%.2f,%.2f,%.2f,%.2f,%.6f,%.2f,%.2f",
      r.lambda, r.sparsity, r.bits, r.rate, mem_pct, ops_pct,
      round_half_up(100.0 * r.accuracy),
      round_half_up(100.0 * r.accuracy_loss), multiplier_of_percent(mem_pct),
      multiplier_of_percent(ops_pct), r.baseline_rate, to_percent(r.r_s),
      round_half_up(100.0 * r.baseline_accuracy));
  return buf;
}

void write_report_csv(std::ostream& out, const CompressionReport& report) {
  out << report_csv_header() << '\n' << report_csv_row(report) << '\n';
}

}  // namespace snnc
