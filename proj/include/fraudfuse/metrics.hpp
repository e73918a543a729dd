#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace fraudfuse {

struct ConfusionCounts {
  uint64_t tp = 0;
  uint64_t fp = 0;
  uint64_t tn = 0;
  uint64_t fn = 0;
};

// Unit costs for misclassified applications: a funded fraudster costs the
// average credit line; a rejected good customer costs their lifetime value
// times the probability the rejection makes them churn.
struct CostParams {
  double acl = 5000.0;
  double clv = 1500.0;
  double churn_given_reject = 0.25;

  void validate() const;  // ErrorKind::config on violation
};

struct MetricStat {
  double mean = 0.0;
  double std = 0.0;
};

struct MetricSummary {
  MetricStat auc, f1, precision, recall, financial_loss;
  double threshold = 0.0;  // fixed F1-optimal threshold from the full test set
  size_t n_replicates = 0;
};

// Mann-Whitney statistic P(score+ > score-) + 0.5 P(score+ = score-),
// via rank sums with average ranks for ties. ErrorKind::metric unless both
// classes are present.
double roc_auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels);

// Sweeps every unique score as a threshold under the rule score >= threshold
// => flagged, returns (threshold, F1) maximizing F1; ties keep the largest
// threshold (fewest rows flagged).
std::pair<double, double> optimal_f1_threshold(const std::vector<double>& scores,
                                               const std::vector<uint8_t>& labels);

ConfusionCounts confusion(const std::vector<double>& scores, const std::vector<uint8_t>& labels,
                          double threshold);

// loss = fn * acl + fp * clv * churn_given_reject
double financial_loss(const ConfusionCounts& counts, const CostParams& costs);

// Resamples the test set with replacement n_replicates times (replicate
// seeds derived from seed, so dropping or reordering replicates elsewhere
// cannot shift them). The decision threshold is fixed once from the full
// inputs. Single-class draws are redrawn a bounded number of times.
MetricSummary bootstrap_evaluate(const std::vector<double>& scores,
                                 const std::vector<uint8_t>& labels, const CostParams& costs,
                                 size_t n_replicates, uint64_t seed);

}  // namespace fraudfuse
