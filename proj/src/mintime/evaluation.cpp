#include "mintime/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mintime/errors.hpp"

namespace mintime {

namespace {

void check_sizes(const std::vector<double>& scores, const std::vector<Label>& labels) {
  if (scores.size() != labels.size())
    throw DataError("metrics: scores and labels differ in length");
  if (scores.empty()) throw DataError("metrics: no scored items");
}

}  // namespace

double accuracy(const std::vector<double>& scores, const std::vector<Label>& labels,
                double threshold) {
  check_sizes(scores, labels);
  int64_t correct = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    const Label predicted = scores[i] >= threshold ? Label::fake : Label::pristine;
    correct += predicted == labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double auc(const std::vector<double>& scores, const std::vector<Label>& labels) {
  check_sizes(scores, labels);
  int64_t n_pos = 0, n_neg = 0;
  for (Label l : labels) (l == Label::fake ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0)
    throw DataError("auc undefined: needs at least one positive and one negative");

  // Midrank formulation: AUC = (sum of positive ranks - n_pos(n_pos+1)/2) /
  // (n_pos * n_neg). Ranks are exact halves, so this equals the pairwise
  // count with half-weighted ties, value for value.
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(scores.size(), 0.0);
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) rank[order[k]] = mid;
    i = j;
  }
  double pos_rank_sum = 0.0;
  for (size_t k = 0; k < scores.size(); ++k)
    if (labels[k] == Label::fake) pos_rank_sum += rank[k];
  const double u =
      pos_rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double fpr(const std::vector<double>& scores, const std::vector<Label>& labels,
           double threshold) {
  check_sizes(scores, labels);
  int64_t fp = 0, tn = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != Label::pristine) continue;
    if (scores[i] >= threshold)
      ++fp;
    else
      ++tn;
  }
  if (fp + tn == 0) throw DataError("fpr undefined: no negatives");
  return static_cast<double>(fp) / static_cast<double>(fp + tn);
}

double mav(const std::vector<double>& per_class_accuracies) {
  if (per_class_accuracies.empty()) throw DataError("mav undefined: empty class set");
  const auto [mn, mx] =
      std::minmax_element(per_class_accuracies.begin(), per_class_accuracies.end());
  return *mx - *mn;
}

std::map<std::string, double> per_class_accuracy(const std::vector<ScoredVideo>& videos,
                                                 double threshold) {
  std::map<std::string, std::pair<int64_t, int64_t>> counts;  // class -> {correct, total}
  for (const auto& v : videos) {
    const std::string cls =
        v.anomaly_class.empty() ? std::string(label_name(v.label)) : v.anomaly_class;
    const Label predicted = v.score >= threshold ? Label::fake : Label::pristine;
    auto& [correct, total] = counts[cls];
    ++total;
    correct += predicted == v.label ? 1 : 0;
  }
  std::map<std::string, double> out;
  for (const auto& [cls, ct] : counts)
    out[cls] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  return out;
}

EvalReport evaluate(const std::vector<ScoredVideo>& videos, double threshold) {
  std::vector<double> scores;
  std::vector<Label> labels;
  for (const auto& v : videos) {
    scores.push_back(v.score);
    labels.push_back(v.label);
  }
  EvalReport report;
  report.accuracy = accuracy(scores, labels, threshold);
  report.auc = auc(scores, labels);
  report.fpr = fpr(scores, labels, threshold);
  report.per_class = per_class_accuracy(videos, threshold);
  std::vector<double> accs;
  for (const auto& [cls, acc] : report.per_class) accs.push_back(acc);
  report.mav = mav(accs);
  return report;
}

Localization localize(const AttentionReport& attention) {
  std::vector<size_t> valid;
  for (size_t i = 0; i < attention.slot_identity.size(); ++i)
    if (attention.slot_identity[i] >= 0) valid.push_back(i);
  if (valid.empty()) throw DataError("localize: no valid slots");

  std::map<int, std::pair<double, int>> per_identity;  // id -> {sum, count}
  double mean = 0.0;
  for (size_t i : valid) {
    auto& [sum, count] = per_identity[attention.slot_identity[i]];
    sum += attention.slot_values[i];
    ++count;
    mean += attention.slot_values[i];
  }
  mean /= static_cast<double>(valid.size());
  double var = 0.0;
  for (size_t i : valid) {
    const double d = attention.slot_values[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(valid.size());
  const double cutoff = mean + std::sqrt(var);

  Localization out;
  double best = -1.0;
  for (const auto& [id, sc] : per_identity) {
    const double m = sc.first / static_cast<double>(sc.second);
    if (m > best) {
      best = m;
      out.suspect_identity = id;
    }
  }
  for (size_t i : valid)
    if (attention.slot_values[i] > cutoff) out.suspect_frames.push_back(attention.slot_frame[i]);
  return out;
}

std::string svg_attention_histogram(const AttentionReport& attention, const std::string& title) {
  const size_t n = attention.slot_values.size();
  const double bar_w = 24.0, gap = 6.0, plot_h = 200.0, margin = 40.0;
  const double width = margin * 2 + n * (bar_w + gap);
  const double height = plot_h + margin * 2;
  double peak = 0.0;
  for (double v : attention.slot_values) peak = std::max(peak, v);
  if (peak <= 0.0) peak = 1.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  svg << "  <text x=\"" << margin << "\" y=\"" << margin / 2 << "\" font-size=\"14\">" << title
      << "</text>\n";
  svg << "  <line x1=\"" << margin << "\" y1=\"" << margin + plot_h << "\" x2=\""
      << width - margin << "\" y2=\"" << margin + plot_h << "\" stroke=\"black\"/>\n";
  const char* palette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52"};
  int prev_identity = attention.slot_identity.empty() ? -1 : attention.slot_identity[0];
  for (size_t i = 0; i < n; ++i) {
    const double x = margin + i * (bar_w + gap);
    const int identity = attention.slot_identity[i];
    if (i > 0 && identity != prev_identity) {
      // separator between identity groups
      const double sx = x - gap / 2;
      svg << "  <line x1=\"" << sx << "\" y1=\"" << margin << "\" x2=\"" << sx << "\" y2=\""
          << margin + plot_h << "\" stroke=\"#888\" stroke-dasharray=\"4,3\"/>\n";
      prev_identity = identity;
    }
    const double h = attention.slot_values[i] / peak * plot_h;
    const char* fill = identity >= 0 ? palette[identity % 4] : "#cccccc";
    svg << "  <rect x=\"" << x << "\" y=\"" << margin + plot_h - h << "\" width=\"" << bar_w
        << "\" height=\"" << h << "\" fill=\"" << fill << "\"/>\n";
    svg << "  <text x=\"" << x + bar_w / 2 << "\" y=\"" << margin + plot_h + 16
        << "\" font-size=\"10\" text-anchor=\"middle\">" << i << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace mintime
