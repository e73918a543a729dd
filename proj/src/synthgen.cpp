#include "fraudfuse/synthgen.hpp"

#include <cmath>
#include <string>

#include "fraudfuse/errors.hpp"
#include "fraudfuse/rng.hpp"

namespace fraudfuse {

void SynthSpec::validate() const {
  if (n_rows == 0) throw Error(ErrorKind::config, "n_rows must be positive");
  if (train_size == 0 || train_size >= n_rows) {
    throw Error(ErrorKind::config, "train_size must be in (0, n_rows)");
  }
  for (double rate : {train_fraud_rate, test_fraud_rate}) {
    if (!(rate > 0.0 && rate < 1.0)) {
      throw Error(ErrorKind::config, "fraud rates must be in (0,1)");
    }
  }
  if (group_signal.size() != kAllGroups.size()) {
    throw Error(ErrorKind::config, "group_signal must name all three feature groups");
  }
  for (FeatureGroup g : kAllGroups) {
    auto it = group_signal.find(g);
    if (it == group_signal.end()) {
      throw Error(ErrorKind::config, "group_signal missing group " + to_string(g));
    }
    if (!(it->second >= 0.0 && it->second <= 1.0)) {
      throw Error(ErrorKind::config, "group_signal for " + to_string(g) + " must be in [0,1]");
    }
  }
  schema.validate();
}

namespace {
// Cumulative category distribution; last entry pinned to 1.
std::vector<double> tilted_cdf(size_t k, double signal) {
  std::vector<double> w(k);
  double total = 0.0;
  for (size_t c = 0; c < k; ++c) {
    const double t = k == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(c) / static_cast<double>(k - 1);
    w[c] = std::exp(2.0 * signal * t);
    total += w[c];
  }
  std::vector<double> cdf(k);
  double cum = 0.0;
  for (size_t c = 0; c < k; ++c) {
    cum += w[c] / total;
    cdf[c] = cum;
  }
  cdf.back() = 1.0;
  return cdf;
}

size_t pick(const std::vector<double>& cdf, double u) {
  for (size_t c = 0; c < cdf.size(); ++c) {
    if (u < cdf[c]) return c;
  }
  return cdf.size() - 1;
}
}  // namespace

LabeledDataset generate(const SynthSpec& spec) {
  spec.validate();

  LabeledDataset ds;
  ds.schema = spec.schema;
  ds.numeric_cols.resize(ds.n_cols());
  ds.cat_cols.resize(ds.n_cols());
  ds.labels.reserve(spec.n_rows);
  ds.order_index.reserve(spec.n_rows);

  std::vector<std::vector<double>> base_cdf(ds.n_cols()), fraud_cdf(ds.n_cols());
  std::vector<double> signal(ds.n_cols());
  for (size_t c = 0; c < ds.n_cols(); ++c) {
    const ColumnSpec& col = ds.schema.columns[c];
    signal[c] = spec.group_signal.at(col.group);
    if (col.kind == ColumnKind::categorical) {
      base_cdf[c] = tilted_cdf(col.cardinality(), 0.0);
      fraud_cdf[c] = tilted_cdf(col.cardinality(), signal[c]);
      ds.cat_cols[c].reserve(spec.n_rows);
    } else {
      ds.numeric_cols[c].reserve(spec.n_rows);
    }
  }

  Rng rng(derive_seed(spec.noise_seed, "synthgen"));
  for (size_t i = 0; i < spec.n_rows; ++i) {
    const double rate = i < spec.train_size ? spec.train_fraud_rate : spec.test_fraud_rate;
    const bool fraud = rng.bernoulli(rate);
    ds.labels.push_back(fraud ? 1 : 0);
    ds.order_index.push_back(static_cast<int64_t>(i));
    for (size_t c = 0; c < ds.n_cols(); ++c) {
      if (ds.schema.columns[c].kind == ColumnKind::numeric) {
        ds.numeric_cols[c].push_back(rng.normal() + (fraud ? signal[c] : 0.0));
      } else {
        const auto& cdf = fraud ? fraud_cdf[c] : base_cdf[c];
        ds.cat_cols[c].push_back(ds.schema.columns[c].categories[pick(cdf, rng.uniform())]);
      }
    }
  }
  return ds;
}

namespace {
ColumnSpec num_col(std::string name, FeatureGroup g) {
  ColumnSpec c;
  c.name = std::move(name);
  c.group = g;
  c.kind = ColumnKind::numeric;
  return c;
}

ColumnSpec cat_col(std::string name, FeatureGroup g, std::vector<std::string> cats) {
  ColumnSpec c;
  c.name = std::move(name);
  c.group = g;
  c.kind = ColumnKind::categorical;
  c.categories = std::move(cats);
  return c;
}
}  // namespace

FeatureSchema paper_shape_schema() {
  using G = FeatureGroup;
  FeatureSchema s;
  // Super-app: 6 numeric + cardinalities 4 and 5 -> 15 encoded.
  s.columns.push_back(num_col("pct_spend_restaurants", G::super_app));
  s.columns.push_back(num_col("pct_spend_supermarkets", G::super_app));
  s.columns.push_back(num_col("platform_tenure_months", G::super_app));
  s.columns.push_back(num_col("n_registered_devices", G::super_app));
  s.columns.push_back(num_col("n_orders_90d", G::super_app));
  s.columns.push_back(num_col("avg_ticket_amount", G::super_app));
  s.columns.push_back(cat_col("device_os", G::super_app, {"android", "ios", "web", "other"}));
  s.columns.push_back(cat_col("acquisition_channel", G::super_app,
                              {"organic", "referral", "paid_social", "paid_search", "partner"}));
  // Mobile: 4 numeric + cardinalities 2 and 4 -> 10 encoded.
  s.columns.push_back(num_col("payment_cadence_score", G::mobile));
  s.columns.push_back(num_col("calls_in_monthly", G::mobile));
  s.columns.push_back(num_col("calls_out_monthly", G::mobile));
  s.columns.push_back(num_col("line_tenure_months", G::mobile));
  s.columns.push_back(cat_col("plan_type", G::mobile, {"prepaid", "postpaid"}));
  s.columns.push_back(cat_col("handset_tier", G::mobile, {"entry", "mid", "high", "flagship"}));
  // Bureau: 7 numeric + cardinalities 6 and 10 -> 23 encoded.
  s.columns.push_back(num_col("credit_score", G::credit_bureau));
  s.columns.push_back(num_col("n_open_credit_lines", G::credit_bureau));
  s.columns.push_back(num_col("total_credit_limit", G::credit_bureau));
  s.columns.push_back(num_col("avg_credit_card_limit", G::credit_bureau));
  s.columns.push_back(num_col("utilization_ratio", G::credit_bureau));
  s.columns.push_back(num_col("months_since_first_credit", G::credit_bureau));
  s.columns.push_back(num_col("n_inquiries_12m", G::credit_bureau));
  s.columns.push_back(cat_col("risk_band", G::credit_bureau, {"A", "B", "C", "D", "E", "F"}));
  {
    std::vector<std::string> regions;
    for (int i = 1; i <= 10; ++i) {
      regions.push_back("r" + std::string(i < 10 ? "0" : "") + std::to_string(i));
    }
    s.columns.push_back(cat_col("residence_region", G::credit_bureau, std::move(regions)));
  }
  return s;
}

namespace {
std::map<FeatureGroup, double> default_signal() {
  return {{FeatureGroup::super_app, 0.55},
          {FeatureGroup::mobile, 0.50},
          {FeatureGroup::credit_bureau, 0.45}};
}
}  // namespace

SynthSpec paper_shape_spec(uint64_t seed) {
  SynthSpec spec;
  spec.n_rows = 86726;
  spec.train_size = 60708;
  spec.train_fraud_rate = 0.0218;
  spec.test_fraud_rate = 0.0037;
  spec.group_signal = default_signal();
  spec.noise_seed = seed;
  spec.schema = paper_shape_schema();
  return spec;
}

SynthSpec complementary_spec(uint64_t seed) {
  SynthSpec spec;
  spec.n_rows = 16000;
  spec.train_size = 9600;
  spec.train_fraud_rate = 0.03;
  spec.test_fraud_rate = 0.02;
  spec.group_signal = default_signal();
  spec.noise_seed = seed;
  spec.schema = paper_shape_schema();
  return spec;
}

}  // namespace fraudfuse
