#pragma once

#include <cstddef>
#include <cstdint>

namespace fraudfuse::kernels {

// Data-parallel inner loops behind the trainer, scorer and explainer. Each
// kernel has a scalar reference implementation and an AVX2 variant; the
// active variant is picked once per call from the CPU (overridable for the
// equivalence tests). Integer kernels and element-independent float kernels
// are bit-exact across variants; the sigmoid family is equivalent to within
// an absolute tolerance of a few ulps because the vector exp is polynomial.

enum class Isa { scalar, avx2 };

const char* to_string(Isa isa);
bool isa_supported(Isa isa);

// Highest supported ISA unless an override is forced.
Isa active_isa();

// Test hook. Throws ErrorKind::argument if the ISA is unsupported here.
void force_isa(Isa isa);
void reset_isa();

struct HistBin {
  double sum_g = 0.0;
  double sum_h = 0.0;
  uint64_t count = 0;
};

struct ThresholdCounts {
  uint64_t tp = 0;
  uint64_t fp = 0;
  uint64_t tn = 0;
  uint64_t fn = 0;
};

// out[i] = 1 / (1 + exp(-x[i]))
void sigmoid(const double* x, double* out, size_t n);

// Logistic-loss derivatives: g = p - y, h = p * (1 - p), with p = sigmoid(m).
// Rows with y == 1 are scaled by pos_weight (1.0 = no reweighting).
void logistic_grad_hess(const double* margin, const uint8_t* y, double pos_weight,
                        double* g, double* h, size_t n);

// acc[i] += |x[i]|
void accumulate_abs(double* acc, const double* x, size_t n);

// Confusion counts under the rule score >= threshold => predicted positive.
ThresholdCounts threshold_confusion(const double* scores, const uint8_t* labels,
                                    double threshold, size_t n);

// hist[bins[r]] accumulates (g[r], h[r], 1) for r in rows[0..n). Accumulation
// order is the order of `rows` in every variant, so results are bit-exact.
void hist_accumulate(const uint16_t* bins, const int32_t* rows, size_t n,
                     const double* g, const double* h, HistBin* hist);

// Per-variant entry points (exposed for the equivalence tests).
namespace scalar {
void sigmoid(const double* x, double* out, size_t n);
void logistic_grad_hess(const double* margin, const uint8_t* y, double pos_weight,
                        double* g, double* h, size_t n);
void accumulate_abs(double* acc, const double* x, size_t n);
ThresholdCounts threshold_confusion(const double* scores, const uint8_t* labels,
                                    double threshold, size_t n);
void hist_accumulate(const uint16_t* bins, const int32_t* rows, size_t n,
                     const double* g, const double* h, HistBin* hist);
}  // namespace scalar

namespace avx2 {
bool available();
void sigmoid(const double* x, double* out, size_t n);
void logistic_grad_hess(const double* margin, const uint8_t* y, double pos_weight,
                        double* g, double* h, size_t n);
void accumulate_abs(double* acc, const double* x, size_t n);
ThresholdCounts threshold_confusion(const double* scores, const uint8_t* labels,
                                    double threshold, size_t n);
void hist_accumulate(const uint16_t* bins, const int32_t* rows, size_t n,
                     const double* g, const double* h, HistBin* hist);
}  // namespace avx2

}  // namespace fraudfuse::kernels
