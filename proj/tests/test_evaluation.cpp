#include <algorithm>

#include "doctest.h"
#include "mintime/errors.hpp"
#include "mintime/evaluation.hpp"
#include "mintime/rng.hpp"

using namespace mintime;

namespace {

// O(n^2) pairwise oracle: wins + half-ties over positive/negative pairs.
double auc_pairwise_oracle(const std::vector<double>& scores, const std::vector<Label>& labels) {
  double u = 0.0;
  int64_t np = 0, nn = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != Label::fake) continue;
    ++np;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != Label::pristine) continue;
      if (scores[i] > scores[j])
        u += 1.0;
      else if (scores[i] == scores[j])
        u += 0.5;
    }
  }
  for (Label l : labels) nn += l == Label::pristine ? 1 : 0;
  return u / (static_cast<double>(np) * static_cast<double>(nn));
}

AttentionReport report_of(std::vector<double> values, std::vector<int> identities,
                          std::vector<int64_t> frames) {
  AttentionReport r;
  r.slot_values = std::move(values);
  r.slot_identity = std::move(identities);
  r.slot_frame = std::move(frames);
  return r;
}

}  // namespace

TEST_CASE("auc examples") {
  // perfectly separated
  CHECK(auc({0.9, 0.8, 0.2, 0.1}, {Label::fake, Label::fake, Label::pristine, Label::pristine}) ==
        1.0);
  // constant score: all ties
  CHECK(auc({0.5, 0.5, 0.5, 0.5}, {Label::fake, Label::pristine, Label::fake, Label::pristine}) ==
        0.5);
  // single class is undefined
  CHECK_THROWS_AS(auc({0.1, 0.2}, {Label::fake, Label::fake}), DataError);
}

TEST_CASE("auc equals the pairwise oracle exactly") {
  Rng rng(2024);
  for (int iter = 0; iter < 300; ++iter) {
    const int n = 2 + static_cast<int>(rng.index(49));
    std::vector<double> scores;
    std::vector<Label> labels;
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      // coarse grid so ties actually happen
      scores.push_back(static_cast<double>(rng.index(10)) / 10.0);
      const bool fake = rng.uniform() < 0.5;
      labels.push_back(fake ? Label::fake : Label::pristine);
      has_pos = has_pos || fake;
      has_neg = has_neg || !fake;
    }
    if (!has_pos) labels[0] = Label::fake;
    if (!has_neg) labels[1] = Label::pristine;
    CHECK(auc(scores, labels) == auc_pairwise_oracle(scores, labels));
  }
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
  Rng rng(31);
  for (int iter = 0; iter < 50; ++iter) {
    const int n = 4 + static_cast<int>(rng.index(30));
    std::vector<double> scores;
    std::vector<Label> labels;
    for (int i = 0; i < n; ++i) {
      scores.push_back(rng.uniform());
      labels.push_back(i % 2 == 0 ? Label::fake : Label::pristine);
    }
    std::vector<double> warped;
    for (double v : scores) warped.push_back(std::exp(3.0 * v) - 0.5);
    CHECK(auc(scores, labels) == doctest::Approx(auc(warped, labels)).epsilon(1e-12));
  }
}

TEST_CASE("fpr formula") {
  // FP=3, TN=7 -> 0.3
  std::vector<double> scores;
  std::vector<Label> labels;
  for (int i = 0; i < 3; ++i) {
    scores.push_back(0.9);
    labels.push_back(Label::pristine);
  }
  for (int i = 0; i < 7; ++i) {
    scores.push_back(0.1);
    labels.push_back(Label::pristine);
  }
  CHECK(fpr(scores, labels) == doctest::Approx(0.3));

  // all negatives below threshold
  CHECK(fpr({0.1, 0.2}, {Label::pristine, Label::pristine}) == 0.0);
  CHECK_THROWS_AS(fpr({0.9}, {Label::fake}), DataError);

  // random instances vs confusion-matrix oracle
  Rng rng(10);
  for (int iter = 0; iter < 50; ++iter) {
    const int n = 2 + static_cast<int>(rng.index(40));
    scores.clear();
    labels.clear();
    int64_t fp = 0, tn = 0;
    for (int i = 0; i < n; ++i) {
      scores.push_back(rng.uniform());
      labels.push_back(rng.uniform() < 0.5 ? Label::fake : Label::pristine);
    }
    labels[0] = Label::pristine;
    for (int i = 0; i < n; ++i) {
      if (labels[static_cast<size_t>(i)] != Label::pristine) continue;
      (scores[static_cast<size_t>(i)] >= 0.5 ? fp : tn) += 1;
    }
    CHECK(fpr(scores, labels) ==
          doctest::Approx(static_cast<double>(fp) / static_cast<double>(fp + tn)));
  }
}

TEST_CASE("mav examples") {
  CHECK(mav({0.8}) == 0.0);
  CHECK(mav({0.7, 0.9, 0.8}) == doctest::Approx(0.2));
  CHECK_THROWS_AS(mav({}), DataError);

  // full nine-class row: range is max - min = 92.03 - 77.59 = 14.44
  std::vector<double> row{88.15, 79.94, 84.64, 82.17, 84.05, 77.59, 85.37, 92.03, 79.91};
  CHECK(mav(row) == doctest::Approx(14.44));

  // permutation invariance; zero iff all equal
  std::vector<double> shuffled = row;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(mav(shuffled) == doctest::Approx(mav(row)));
  CHECK(mav({0.5, 0.5, 0.5}) == 0.0);
}

TEST_CASE("accuracy threshold behavior") {
  CHECK(accuracy({0.9, 0.1}, {Label::fake, Label::pristine}) == 1.0);
  CHECK(accuracy({0.5}, {Label::fake}) == 1.0);  // score >= threshold predicts fake
  CHECK(accuracy({0.49}, {Label::fake}) == 0.0);
}

TEST_CASE("localize argmax and +1 sigma rule") {
  // attention concentrated on identity 1
  auto concentrated = report_of({0.01, 0.02, 0.30, 0.40}, {0, 0, 1, 1}, {0, 2, 1, 3});
  Localization loc = localize(concentrated);
  CHECK(loc.suspect_identity == 1);

  // uniform attention: sigma 0, nothing exceeds mean strictly
  auto uniform = report_of({0.1, 0.1, 0.1, 0.1}, {0, 0, 1, 1}, {0, 2, 1, 3});
  CHECK(localize(uniform).suspect_frames.empty());

  // scaling every value leaves the argmax unchanged
  auto scaled = concentrated;
  for (auto& v : scaled.slot_values) v *= 7.5;
  CHECK(localize(scaled).suspect_identity == loc.suspect_identity);

  // PAD-only report rejected
  auto pads = report_of({0.0}, {-1}, {-1});
  CHECK_THROWS_AS(localize(pads), DataError);
}

TEST_CASE("suspect frames pick the outliers") {
  auto rep = report_of({0.05, 0.05, 0.05, 0.6, 0.05, 0.05}, {0, 0, 0, 1, 1, 1},
                       {0, 1, 2, 10, 11, 12});
  Localization loc = localize(rep);
  CHECK(loc.suspect_identity == 1);
  REQUIRE(loc.suspect_frames.size() == 1);
  CHECK(loc.suspect_frames[0] == 10);
}

TEST_CASE("evaluate produces a coherent report") {
  std::vector<ScoredVideo> videos;
  Rng rng(8);
  for (int i = 0; i < 40; ++i) {
    ScoredVideo v;
    v.video_id = "v" + std::to_string(i);
    v.label = i % 2 == 0 ? Label::fake : Label::pristine;
    v.anomaly_class = v.label == Label::fake ? "texture_patch" : "pristine";
    v.score = v.label == Label::fake ? 0.6 + 0.4 * rng.uniform() : 0.4 * rng.uniform();
    videos.push_back(v);
  }
  EvalReport report = evaluate(videos);
  CHECK(report.accuracy == 1.0);
  CHECK(report.auc == 1.0);
  CHECK(report.fpr == 0.0);
  CHECK(report.per_class.at("texture_patch") == 1.0);
  CHECK(report.per_class.at("pristine") == 1.0);
  CHECK(report.mav == 0.0);
}

TEST_CASE("svg histogram carries one bar per slot and identity separators") {
  auto rep = report_of({0.1, 0.2, 0.0, 0.3}, {0, 0, -1, 1}, {0, 1, -1, 2});
  const std::string svg = svg_attention_histogram(rep, "demo");
  size_t bars = 0, at = 0;
  while ((at = svg.find("<rect", at)) != std::string::npos) {
    ++bars;
    at += 5;
  }
  CHECK(bars == 4);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);  // separator present
  CHECK(svg.find("</svg>") != std::string::npos);
}
