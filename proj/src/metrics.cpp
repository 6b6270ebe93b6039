#include "causalnet/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace causalnet {

ConfusionMatrix::ConfusionMatrix(Eigen::MatrixXi counts) : counts_(std::move(counts)) {
  if (counts_.rows() != counts_.cols()) throw std::invalid_argument("confusion matrix must be square");
  if ((counts_.array() < 0).any()) throw std::invalid_argument("confusion counts must be non-negative");
}

void ConfusionMatrix::add(int truth, int predicted) {
  if (truth < 0 || truth >= classes() || predicted < 0 || predicted >= classes())
    throw std::out_of_range("class index out of range");
  ++counts_(truth, predicted);
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes() != classes()) throw std::invalid_argument("confusion matrices differ in class count");
  counts_ += other.counts_;
  return *this;
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  const long total = cm.total();
  if (total <= 0) throw std::invalid_argument("compute_metrics: empty confusion matrix");
  const Eigen::MatrixXd c = cm.counts().cast<double>();
  const int n = cm.classes();
  double f1_sum = 0, recall_sum = 0;
  for (int k = 0; k < n; ++k) {
    const double tp = c(k, k);
    const double fp = c.col(k).sum() - tp;
    const double fn = c.row(k).sum() - tp;
    const double f1_den = 2 * tp + fp + fn;
    f1_sum += f1_den > 0 ? 2 * tp / f1_den : 0.0;
    recall_sum += (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
  }
  return {f1_sum / n, recall_sum / n, c.trace() / static_cast<double>(total)};
}

MetricSummary summarize(const std::vector<Metrics>& runs) {
  if (runs.empty()) throw std::invalid_argument("summarize: no runs");
  MetricSummary s;
  s.runs = runs;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    s.mean.uf1 += r.uf1 / n;
    s.mean.uar += r.uar / n;
    s.mean.acc += r.acc / n;
  }
  for (const auto& r : runs) {
    s.std.uf1 += (r.uf1 - s.mean.uf1) * (r.uf1 - s.mean.uf1) / n;
    s.std.uar += (r.uar - s.mean.uar) * (r.uar - s.mean.uar) / n;
    s.std.acc += (r.acc - s.mean.acc) * (r.acc - s.mean.acc) / n;
  }
  s.std.uf1 = std::sqrt(s.std.uf1);
  s.std.uar = std::sqrt(s.std.uar);
  s.std.acc = std::sqrt(s.std.acc);
  return s;
}

}  // namespace causalnet
