#include "fraudfuse/kernels.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "fraudfuse/errors.hpp"

namespace fraudfuse::kernels {

const char* to_string(Isa isa) { return isa == Isa::scalar ? "scalar" : "avx2"; }

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
  return avx2::available();
}

namespace avx2 {
bool available() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
}  // namespace avx2

namespace {
std::atomic<int> g_forced{-1};  // -1 = auto

Isa detect() { return avx2::available() ? Isa::avx2 : Isa::scalar; }
}  // namespace

Isa active_isa() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced >= 0) return static_cast<Isa>(forced);
  static const Isa detected = detect();
  return detected;
}

void force_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw Error(ErrorKind::argument,
                std::string("ISA not supported on this CPU: ") + to_string(isa));
  }
  g_forced.store(static_cast<int>(isa), std::memory_order_relaxed);
}

void reset_isa() { g_forced.store(-1, std::memory_order_relaxed); }

namespace scalar {

void sigmoid(const double* x, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    out[i] = 1.0 / (1.0 + std::exp(-x[i]));
  }
}

void logistic_grad_hess(const double* margin, const uint8_t* y, double pos_weight,
                        double* g, double* h, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-margin[i]));
    const double w = y[i] ? pos_weight : 1.0;
    g[i] = w * (p - static_cast<double>(y[i]));
    h[i] = w * p * (1.0 - p);
  }
}

void accumulate_abs(double* acc, const double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    acc[i] += std::fabs(x[i]);
  }
}

ThresholdCounts threshold_confusion(const double* scores, const uint8_t* labels,
                                    double threshold, size_t n) {
  ThresholdCounts c;
  for (size_t i = 0; i < n; ++i) {
    const bool flagged = scores[i] >= threshold;
    const bool positive = labels[i] != 0;
    c.tp += flagged && positive;
    c.fp += flagged && !positive;
    c.fn += !flagged && positive;
    c.tn += !flagged && !positive;
  }
  return c;
}

void hist_accumulate(const uint16_t* bins, const int32_t* rows, size_t n,
                     const double* g, const double* h, HistBin* hist) {
  for (size_t i = 0; i < n; ++i) {
    const int32_t r = rows[i];
    HistBin& b = hist[bins[r]];
    b.sum_g += g[r];
    b.sum_h += h[r];
    b.count += 1;
  }
}

}  // namespace scalar

void sigmoid(const double* x, double* out, size_t n) {
  if (active_isa() == Isa::avx2) return avx2::sigmoid(x, out, n);
  scalar::sigmoid(x, out, n);
}

void logistic_grad_hess(const double* margin, const uint8_t* y, double pos_weight,
                        double* g, double* h, size_t n) {
  if (active_isa() == Isa::avx2) return avx2::logistic_grad_hess(margin, y, pos_weight, g, h, n);
  scalar::logistic_grad_hess(margin, y, pos_weight, g, h, n);
}

void accumulate_abs(double* acc, const double* x, size_t n) {
  if (active_isa() == Isa::avx2) return avx2::accumulate_abs(acc, x, n);
  scalar::accumulate_abs(acc, x, n);
}

ThresholdCounts threshold_confusion(const double* scores, const uint8_t* labels,
                                    double threshold, size_t n) {
  if (active_isa() == Isa::avx2) return avx2::threshold_confusion(scores, labels, threshold, n);
  return scalar::threshold_confusion(scores, labels, threshold, n);
}

void hist_accumulate(const uint16_t* bins, const int32_t* rows, size_t n,
                     const double* g, const double* h, HistBin* hist) {
  if (active_isa() == Isa::avx2) return avx2::hist_accumulate(bins, rows, n, g, h, hist);
  scalar::hist_accumulate(bins, rows, n, g, h, hist);
}

}  // namespace fraudfuse::kernels
