#pragma once

#include <iosfwd>
#include <string>

namespace snnc {

// Residual-cost arithmetic. Fractions are kept at full precision; the
// printable percentages are rounded half-up to 2 decimals and the
// compression multipliers are the reciprocals of those *rounded*
// percentages (that is how the reference tables are printed: 1/0.0234 =
// 42.74x, not 1/0.0234375 = 42.67x).

// (1 - s) * b / B, the fraction of weight memory left after pruning to
// sparsity s and quantizing to b of B bits.
double residual_memory(double sparsity, int bits, int baseline_bits = 32);

// r / R, the fraction of spikes left when regularization lowers the average
// spike rate from R to r.
double residual_spikes(double rate, double baseline_rate);

// R_mem * R_s, a coarse estimate of the residual operation cost.
double residual_ops(double r_mem, double r_s);

// Round half-up to `decimals` places.
double round_half_up(double x, int decimals = 2);
// Fraction -> percent rounded to 2 decimals.
double to_percent(double fraction);
// Percent -> "NNx" compression multiplier, rounded to 2 decimals.
double multiplier_of_percent(double percent);

struct CompressionReport {
  double lambda = 0.0;
  double sparsity = 0.0;
  int bits = 32;
  int baseline_bits = 32;
  double baseline_rate = 0.0;  // R, hidden scope on the test split
  double rate = 0.0;           // r, same scope after compression
  double r_mem = 0.0;
  double r_s = 0.0;
  double r_ops = 0.0;
  double baseline_accuracy = 0.0;
  double accuracy = 0.0;
  double accuracy_loss = 0.0;  // accuracy - baseline_accuracy
};

CompressionReport make_report(double lambda, double sparsity, int bits,
                              int baseline_bits, double baseline_rate,
                              double rate, double baseline_accuracy,
                              double accuracy);

// CSV header + one row. Columns start in the reference table order
// (lambda, s, b, r, R_mem%, R_ops%, accuracy%, accuracy loss%) followed by
// the multipliers and the measured baselines the ratios were taken against.
std::string report_csv_header();
std::string report_csv_row(const CompressionReport& report);
void write_report_csv(std::ostream& out, const CompressionReport& report);

}  // namespace snnc
