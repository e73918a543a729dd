#include "fraudfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fraudfuse/errors.hpp"
#include "fraudfuse/kernels.hpp"
#include "fraudfuse/rng.hpp"
#include "fraudfuse/threading.hpp"

namespace fraudfuse {

void CostParams::validate() const {
  if (!(acl >= 0.0)) throw Error(ErrorKind::config, "acl must be >= 0");
  if (!(clv >= 0.0)) throw Error(ErrorKind::config, "clv must be >= 0");
  if (!(churn_given_reject >= 0.0 && churn_given_reject <= 1.0)) {
    throw Error(ErrorKind::config, "churn_given_reject must be in [0,1]");
  }
}

namespace {
void check_lengths(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::argument, "scores and labels differ in length");
  }
}

size_t count_positives(const std::vector<uint8_t>& labels) {
  size_t n = 0;
  for (uint8_t y : labels) n += y;
  return n;
}

void require_both_classes(const std::vector<uint8_t>& labels, const char* where) {
  const size_t pos = count_positives(labels);
  if (pos == 0 || pos == labels.size()) {
    throw Error(ErrorKind::metric, std::string(where) + " needs both classes present");
  }
}
}  // namespace

double roc_auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
  check_lengths(scores, labels);
  require_both_classes(labels, "roc_auc");

  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&scores](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups; sum ranks of the positive class.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]]) rank_sum_pos += avg_rank;
    }
    i = j;
  }

  const auto n_pos = static_cast<double>(count_positives(labels));
  const double n_neg = static_cast<double>(n) - n_pos;
  return (rank_sum_pos - n_pos * (n_pos + 1.0) * 0.5) / (n_pos * n_neg);
}

std::pair<double, double> optimal_f1_threshold(const std::vector<double>& scores,
                                               const std::vector<uint8_t>& labels) {
  check_lengths(scores, labels);
  require_both_classes(labels, "optimal_f1_threshold");

  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&scores](size_t a, size_t b) { return scores[a] > scores[b]; });

  const auto n_pos = static_cast<double>(count_positives(labels));
  double best_f1 = -1.0, best_threshold = 0.0;
  size_t tp = 0, flagged = 0;
  size_t i = 0;
  while (i < n) {
    // Flag every row scoring >= the current unique value.
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]];
      ++flagged;
      ++j;
    }
    const double f1 =
        2.0 * static_cast<double>(tp) / (static_cast<double>(flagged) + n_pos);
    if (f1 > best_f1) {  // strict: ties keep the earlier = larger threshold
      best_f1 = f1;
      best_threshold = scores[order[i]];
    }
    i = j;
  }
  return {best_threshold, best_f1};
}

ConfusionCounts confusion(const std::vector<double>& scores, const std::vector<uint8_t>& labels,
                          double threshold) {
  check_lengths(scores, labels);
  const kernels::ThresholdCounts c =
      kernels::threshold_confusion(scores.data(), labels.data(), threshold, scores.size());
  return ConfusionCounts{c.tp, c.fp, c.tn, c.fn};
}

double financial_loss(const ConfusionCounts& counts, const CostParams& costs) {
  costs.validate();
  return static_cast<double>(counts.fn) * costs.acl +
         static_cast<double>(counts.fp) * costs.clv * costs.churn_given_reject;
}

namespace {
struct ReplicateMetrics {
  double auc = 0.0, f1 = 0.0, precision = 0.0, recall = 0.0, loss = 0.0;
};

MetricStat stat_over(const std::vector<ReplicateMetrics>& reps,
                     double ReplicateMetrics::* field) {
  const auto n = static_cast<double>(reps.size());
  double mean = 0.0;
  for (const auto& r : reps) mean += r.*field;
  mean /= n;
  double ss = 0.0;
  for (const auto& r : reps) {
    const double d = r.*field - mean;
    ss += d * d;
  }
  return MetricStat{mean, std::sqrt(ss / (n - 1.0))};
}
}  // namespace

MetricSummary bootstrap_evaluate(const std::vector<double>& scores,
                                 const std::vector<uint8_t>& labels, const CostParams& costs,
                                 size_t n_replicates, uint64_t seed) {
  check_lengths(scores, labels);
  require_both_classes(labels, "bootstrap_evaluate");
  costs.validate();
  if (n_replicates < 2) throw Error(ErrorKind::argument, "n_replicates must be >= 2");

  const auto [threshold, full_f1] = optimal_f1_threshold(scores, labels);
  (void)full_f1;
  const size_t n = scores.size();
  constexpr int kMaxRedraws = 64;

  std::vector<ReplicateMetrics> reps(n_replicates);
  std::vector<char> failed(n_replicates, 0);
  parallel_for(n_replicates, [&](size_t r) {
    Rng rng(derive_seed(seed, "bootstrap", r));
    std::vector<double> s(n);
    std::vector<uint8_t> y(n);
    bool drawn = false;
    for (int attempt = 0; attempt < kMaxRedraws && !drawn; ++attempt) {
      size_t pos = 0;
      for (size_t i = 0; i < n; ++i) {
        const size_t pick = rng.uniform_int(n);
        s[i] = scores[pick];
        y[i] = labels[pick];
        pos += y[i];
      }
      drawn = pos > 0 && pos < n;
    }
    if (!drawn) {
      failed[r] = 1;
      return;
    }
    ReplicateMetrics& m = reps[r];
    m.auc = roc_auc(s, y);
    const ConfusionCounts c = confusion(s, y, threshold);
    const uint64_t pred_pos = c.tp + c.fp;
    m.precision = pred_pos == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(pred_pos);
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    m.f1 = 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
    m.loss = financial_loss(c, costs);
  });
  for (size_t r = 0; r < n_replicates; ++r) {
    if (failed[r]) {
      throw Error(ErrorKind::metric, "bootstrap replicate " + std::to_string(r) +
                                         " had a single class after " +
                                         std::to_string(kMaxRedraws) + " redraws");
    }
  }

  MetricSummary summary;
  summary.auc = stat_over(reps, &ReplicateMetrics::auc);
  summary.f1 = stat_over(reps, &ReplicateMetrics::f1);
  summary.precision = stat_over(reps, &ReplicateMetrics::precision);
  summary.recall = stat_over(reps, &ReplicateMetrics::recall);
  summary.financial_loss = stat_over(reps, &ReplicateMetrics::loss);
  summary.threshold = threshold;
  summary.n_replicates = n_replicates;
  return summary;
}

}  // namespace fraudfuse
