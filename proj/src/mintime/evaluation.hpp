#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mintime/model.hpp"
#include "mintime/trackdata.hpp"

namespace mintime {

// Scored video plus everything localization needs.
struct ScoredVideo {
  std::string video_id;
  double score = 0.0;  // probability of fake, in (0,1)
  Label label = Label::pristine;
  std::string anomaly_class;
  std::optional<int> manipulated_identity;
  AttentionReport attention;
};

double accuracy(const std::vector<double>& scores, const std::vector<Label>& labels,
                double threshold = 0.5);

// Probability that a random positive outranks a random negative; ties count
// one half. Needs at least one positive and one negative.
double auc(const std::vector<double>& scores, const std::vector<Label>& labels);

// FP / (TN + FP); needs at least one negative.
double fpr(const std::vector<double>& scores, const std::vector<Label>& labels,
           double threshold = 0.5);

// max - min over a set of per-class accuracies.
double mav(const std::vector<double>& per_class_accuracies);

std::map<std::string, double> per_class_accuracy(const std::vector<ScoredVideo>& videos,
                                                 double threshold = 0.5);

struct EvalReport {
  double accuracy = 0.0;
  double auc = 0.0;
  double fpr = 0.0;
  double mav = 0.0;
  std::map<std::string, double> per_class;
};

EvalReport evaluate(const std::vector<ScoredVideo>& videos, double threshold = 0.5);

struct Localization {
  int suspect_identity = -1;
  std::vector<int64_t> suspect_frames;  // slots whose attention exceeds mean + 1 sigma
};

// Identity with the highest mean attention over its valid slots; frames
// whose slot attention exceeds mean + one population sigma.
Localization localize(const AttentionReport& attention);

// Attention histogram per the qualitative analysis figures: one bar per
// slot, vertical separators between identity groups.
std::string svg_attention_histogram(const AttentionReport& attention, const std::string& title);

}  // namespace mintime
