#pragma once

#include <Eigen/Core>

#include <map>
#include <string>
#include <vector>

namespace causalnet {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int n_classes = 3) : counts_(Eigen::MatrixXi::Zero(n_classes, n_classes)) {}
  explicit ConfusionMatrix(Eigen::MatrixXi counts);

  void add(int truth, int predicted);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  int classes() const { return static_cast<int>(counts_.rows()); }
  long total() const { return counts_.cast<long>().sum(); }
  const Eigen::MatrixXi& counts() const { return counts_; }

  friend bool operator==(const ConfusionMatrix& a, const ConfusionMatrix& b) { return a.counts_ == b.counts_; }

 private:
  Eigen::MatrixXi counts_;
};

struct Metrics {
  double uf1 = 0;
  double uar = 0;
  double acc = 0;
};

/// Macro F1 (2TP / (2TP + FP + FN)), macro recall and accuracy. Classes with a
/// zero denominator contribute 0. Throws std::invalid_argument on an empty matrix.
Metrics compute_metrics(const ConfusionMatrix& cm);

/// Mean and population standard deviation per metric.
struct MetricSummary {
  Metrics mean;
  Metrics std;
  std::vector<Metrics> runs;
};

MetricSummary summarize(const std::vector<Metrics>& runs);

}  // namespace causalnet
