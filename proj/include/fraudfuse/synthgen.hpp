#pragma once

#include <cstdint>
#include <map>

#include "fraudfuse/dataset.hpp"
#include "fraudfuse/schema.hpp"

namespace fraudfuse {

// Recipe for a synthetic applicant table. group_signal is the mean shift, in
// pooled-std units, applied to fraud-class feature distributions of a group;
// it must name all three groups (0 = that group carries no signal).
struct SynthSpec {
  size_t n_rows = 0;
  size_t train_size = 0;            // rows before this index use train_fraud_rate
  double train_fraud_rate = 0.0;
  double test_fraud_rate = 0.0;
  std::map<FeatureGroup, double> group_signal;
  uint64_t noise_seed = 0;
  FeatureSchema schema;

  void validate() const;  // ErrorKind::config on violation
};

// Draws a raw (un-encoded) dataset with order_index = 0..n_rows-1. Numeric
// columns: N(0,1) for legitimate rows, N(signal, 1) for fraud. Categorical
// columns: uniform for legitimate, exp(2*signal*t_c)-tilted for fraud, with
// t_c evenly spaced on [-1,1]. One sequential draw stream (label first, then
// columns in schema order) keeps output bit-identical for a given seed.
LabeledDataset generate(const SynthSpec& spec);

// 23 raw columns (8 super-app, 6 mobile, 9 bureau) that one-hot to exactly
// 48 encoded columns.
FeatureSchema paper_shape_schema();

// Full-scale preset: 86,726 rows, first 60,708 at 2.18% fraud, rest at 0.37%.
SynthSpec paper_shape_spec(uint64_t seed);

// Small preset where every group carries its own independent signal, so fused
// scenarios beat every single-source scenario; used by the comparison tests.
SynthSpec complementary_spec(uint64_t seed);

}  // namespace fraudfuse
