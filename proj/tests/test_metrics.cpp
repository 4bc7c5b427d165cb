#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "vesselaug/vesselaug.hpp"

using namespace vesselaug;
using vesselaug::testing::ScratchDir;

#ifndef VESSELAUG_SOURCE_DIR
#define VESSELAUG_SOURCE_DIR "."
#endif

namespace {

BinaryMask bits(int w, int h, std::vector<std::uint8_t> v) { return BinaryMask(w, h, std::move(v)); }

double brute_force_auc(const ProbabilityMap& p, const BinaryMask& t, const BinaryMask& f) {
  double correct = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < p.pixel_count(); ++i) {
    if (!f.data()[i] || !t.data()[i]) continue;
    for (std::size_t j = 0; j < p.pixel_count(); ++j) {
      if (!f.data()[j] || t.data()[j]) continue;
      pairs += 1;
      if (p.data()[i] > p.data()[j]) correct += 1;
      else if (p.data()[i] == p.data()[j]) correct += 0.5;
    }
  }
  return correct / pairs;
}

void write_prob16(const std::filesystem::path& path, const ProbabilityMap& p) {
  std::vector<std::uint16_t> v(p.pixel_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<std::uint16_t>(std::lround(p.data()[i] * 65535.0));
  }
  detail::write_png(path, p.width(), p.height(), 1, 16, v);
}

ProbabilityMap as_scores(const BinaryMask& m) {
  std::vector<float> v(m.data().begin(), m.data().end());
  return ProbabilityMap(m.width(), m.height(), std::move(v));
}

}  // namespace

TEST(Confusion, PerfectPrediction) {
  const BinaryMask t = bits(4, 1, {1, 0, 1, 0});
  for (float thr : {0.01f, 0.5f, 1.0f}) {
    const ConfusionCounts c = confusion(as_scores(t), t, BinaryMask(4, 1, 1), thr);
    EXPECT_EQ(c.fp, 0u);
    EXPECT_EQ(c.fn, 0u);
  }
}

TEST(Confusion, EmptyFovGivesZeroCounts) {
  const BinaryMask t = bits(3, 1, {1, 0, 1});
  const ConfusionCounts c = confusion(ProbabilityMap(3, 1, {0.9f, 0.1f, 0.2f}), t, BinaryMask(3, 1), 0.5f);
  EXPECT_EQ(c.total(), 0u);
}

TEST(Confusion, ThreePixelEnumeration) {
  const ConfusionCounts c = confusion(ProbabilityMap(3, 1, {0.9f, 0.4f, 0.6f}), bits(3, 1, {1, 0, 1}),
                                      BinaryMask(3, 1, 1), 0.5f);
  EXPECT_EQ(c, (ConfusionCounts{2, 0, 1, 0}));
}

TEST(Confusion, NonFovPixelsIrrelevant) {
  RandomStream rng(1);
  std::vector<std::uint8_t> t(64), f(64), t2(64);
  std::vector<float> p(64), p2(64);
  for (int i = 0; i < 64; ++i) {
    t[i] = rng.uniform() < 0.4;
    f[i] = rng.uniform() < 0.6;
    p[i] = static_cast<float>(rng.uniform());
    t2[i] = f[i] ? t[i] : !t[i];
    p2[i] = f[i] ? p[i] : static_cast<float>(rng.uniform());
  }
  const BinaryMask fov(8, 8, f);
  EXPECT_EQ(confusion(ProbabilityMap(8, 8, p), BinaryMask(8, 8, t), fov, 0.5f),
            confusion(ProbabilityMap(8, 8, p2), BinaryMask(8, 8, t2), fov, 0.5f));
}

TEST(Confusion, Errors) {
  EXPECT_THROW(confusion(ProbabilityMap(2, 1, {0, 0}), BinaryMask(3, 1), BinaryMask(2, 1), 0.5f), DataError);
  EXPECT_THROW(confusion(ProbabilityMap(2, 1, {0, 0}), BinaryMask(2, 1), BinaryMask(2, 1), 1.5f),
               ParameterError);
}

TEST(Accuracy, Values) {
  EXPECT_DOUBLE_EQ(accuracy({3, 0, 5, 0}), 1.0);
  EXPECT_DOUBLE_EQ(accuracy({0, 2, 0, 3}), 0.0);
  EXPECT_DOUBLE_EQ(accuracy({2, 0, 1, 1}), 0.75);
  EXPECT_THROW(accuracy({}), DataError);
}

TEST(Dice, Values) {
  const BinaryMask all(6, 1, 1);
  const BinaryMask a = bits(6, 1, {1, 1, 0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(dice(a, a, all), 1.0);
  EXPECT_DOUBLE_EQ(dice(a, bits(6, 1, {0, 0, 1, 1, 0, 0}), all), 0.0);
  const BinaryMask p = bits(6, 1, {1, 1, 1, 1, 0, 0});
  const BinaryMask t = bits(6, 1, {0, 1, 1, 0, 0, 0});
  EXPECT_NEAR(dice(p, t, all), 2.0 * 2 / (4 + 2), 1e-15);
  EXPECT_NEAR(dice(p, t, all), 0.6667, 1e-4);
  EXPECT_DOUBLE_EQ(dice(BinaryMask(6, 1), BinaryMask(6, 1), all), 1.0);
}

TEST(Dice, SymmetricAndOneIffIdentical) {
  RandomStream rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint8_t> p(25), t(25), f(25);
    for (int i = 0; i < 25; ++i) {
      p[i] = rng.uniform() < 0.3;
      t[i] = rng.uniform() < 0.3;
      f[i] = rng.uniform() < 0.7;
    }
    const BinaryMask P(5, 5, p), T(5, 5, t), F(5, 5, f);
    EXPECT_DOUBLE_EQ(dice(P, T, F), dice(T, P, F));
    bool identical = true;
    for (int i = 0; i < 25; ++i) identical = identical && (!f[i] || p[i] == t[i]);
    EXPECT_EQ(dice(P, T, F) == 1.0, identical);
  }
}

TEST(Auc, ExamplesAndTies) {
  const BinaryMask f(4, 1, 1);
  EXPECT_DOUBLE_EQ(roc_auc(ProbabilityMap(4, 1, {0.1f, 0.2f, 0.8f, 0.9f}), bits(4, 1, {0, 0, 1, 1}), f), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(ProbabilityMap(4, 1, {0.3f, 0.3f, 0.3f, 0.3f}), bits(4, 1, {0, 1, 0, 1}), f), 0.5);
  const ProbabilityMap p(4, 1, {0.1f, 0.4f, 0.35f, 0.8f});
  const BinaryMask t = bits(4, 1, {0, 0, 1, 1});
  EXPECT_DOUBLE_EQ(roc_auc(p, t, f), brute_force_auc(p, t, f));
  EXPECT_DOUBLE_EQ(roc_auc(p, t, f), 0.75);
}

TEST(Auc, DegenerateTruthIsAnError) {
  const BinaryMask f(3, 1, 1);
  EXPECT_THROW(roc_auc(ProbabilityMap(3, 1, {0.1f, 0.2f, 0.3f}), BinaryMask(3, 1, 1), f), DegenerateTruthError);
  EXPECT_THROW(roc_auc(ProbabilityMap(3, 1, {0.1f, 0.2f, 0.3f}), BinaryMask(3, 1), f), DegenerateTruthError);
  // Positives exist only outside the FOV.
  EXPECT_THROW(roc_auc(ProbabilityMap(2, 1, {0.1f, 0.2f}), bits(2, 1, {1, 0}), bits(2, 1, {0, 1})),
               DegenerateTruthError);
}

TEST(Auc, MatchesBruteForceWithHeavyTies) {
  RandomStream rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int w = static_cast<int>(rng.uniform_int(2, 20));
    std::vector<float> s(w * 3);
    std::vector<std::uint8_t> t(w * 3), f(w * 3);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = static_cast<float>(rng.uniform_int(0, 4)) / 4.0f;
      t[i] = rng.uniform() < 0.5;
      f[i] = rng.uniform() < 0.8;
    }
    t[0] = 1, f[0] = 1, t[1] = 0, f[1] = 1;
    const ProbabilityMap P(w, 3, s);
    const BinaryMask T(w, 3, t), F(w, 3, f);
    ASSERT_NEAR(roc_auc(P, T, F), brute_force_auc(P, T, F), 1e-12);
  }
}

TEST(Auc, InvariantUnderSquaringPositiveScores) {
  RandomStream rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> s(100), sq(100);
    std::vector<std::uint8_t> t(100);
    for (int i = 0; i < 100; ++i) {
      s[i] = static_cast<float>(rng.uniform(0.01, 1.0));
      sq[i] = s[i] * s[i];
      t[i] = rng.uniform() < 0.3;
    }
    t[0] = 1, t[1] = 0;
    const BinaryMask T(10, 10, t), F(10, 10, 1);
    EXPECT_NEAR(roc_auc(ProbabilityMap(10, 10, s), T, F), roc_auc(ProbabilityMap(10, 10, sq), T, F), 1e-12);
  }
}

TEST(Overlay, Semantics) {
  const BinaryMask t = bits(4, 1, {1, 1, 0, 0});
  const ImagePlane same = render_overlay(t, t);
  EXPECT_EQ(same.at(0, 0, 0), 1.0f);
  EXPECT_EQ(same.at(0, 0, 1), 0.0f);
  for (int x = 0; x < 4; ++x) EXPECT_FALSE(same.at(x, 0, 1) == 1.0f);  // no white

  const ImagePlane empty_pred = render_overlay(BinaryMask(4, 1), t);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(empty_pred.at(0, 0, c), 1.0f);
    EXPECT_EQ(empty_pred.at(2, 0, c), 0.0f);
  }
  EXPECT_THROW(render_overlay(BinaryMask(3, 1), t), DataError);
}

TEST(Overlay, PixelCountsBySetArithmetic) {
  RandomStream rng(5);
  std::vector<std::uint8_t> p(256), t(256);
  for (int i = 0; i < 256; ++i) {
    p[i] = rng.uniform() < 0.3;
    t[i] = rng.uniform() < 0.3;
  }
  const ImagePlane o = render_overlay(BinaryMask(16, 16, p), BinaryMask(16, 16, t));
  std::size_t red = 0, white = 0, black = 0, p_count = 0, t_minus_p = 0;
  for (int i = 0; i < 256; ++i) {
    const float r = o.data()[i * 3], g = o.data()[i * 3 + 1], b = o.data()[i * 3 + 2];
    red += r == 1.0f && g == 0.0f && b == 0.0f;
    white += r == 1.0f && g == 1.0f && b == 1.0f;
    black += r == 0.0f && g == 0.0f && b == 0.0f;
    p_count += p[i];
    t_minus_p += t[i] && !p[i];
  }
  EXPECT_EQ(red, p_count);
  EXPECT_EQ(white, t_minus_p);
  EXPECT_EQ(red + white + black, 256u);
}

TEST(Evaluate, PerfectSingleImage) {
  const BinaryMask t = bits(4, 1, {1, 0, 1, 0});
  std::vector<EvalInput> in{{"a", as_scores(t), t, std::nullopt}};
  const EvalReport r = evaluate(in, 0.5f);
  EXPECT_DOUBLE_EQ(r.mean_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.mean_dice, 1.0);
  EXPECT_DOUBLE_EQ(r.mean_auc, 1.0);
  EXPECT_EQ(r.fov_policy, "all-ones (no FOV masks)");
}

TEST(Evaluate, MeanOfAccuracies) {
  // 10 pixels each: 9 and 7 correct.
  std::vector<std::uint8_t> t(10, 0);
  t[0] = 1;
  std::vector<float> p1(10, 0.0f), p2(10, 0.0f);
  p1[0] = 1.0f;
  p1[1] = 1.0f;  // one false positive -> 0.9
  p2[0] = 1.0f;
  p2[1] = p2[2] = p2[3] = 1.0f;  // three false positives -> 0.7
  const BinaryMask T(10, 1, t);
  std::vector<EvalInput> in{{"a", ProbabilityMap(10, 1, p1), T, std::nullopt},
                            {"b", ProbabilityMap(10, 1, p2), T, std::nullopt}};
  const EvalReport r = evaluate(in, 0.5f);
  EXPECT_DOUBLE_EQ(r.images[0].accuracy, 0.9);
  EXPECT_DOUBLE_EQ(r.images[1].accuracy, 0.7);
  EXPECT_NEAR(r.mean_accuracy, 0.8, 1e-15);
}

TEST(Evaluate, DegenerateImageSkippedAndFlagged) {
  const BinaryMask t = bits(2, 1, {1, 0});
  std::vector<EvalInput> in{{"good", ProbabilityMap(2, 1, {0.9f, 0.1f}), t, std::nullopt},
                            {"flat", ProbabilityMap(2, 1, {0.9f, 0.1f}), BinaryMask(2, 1), std::nullopt}};
  const EvalReport r = evaluate(in, 0.5f);
  EXPECT_TRUE(r.images[1].degenerate);
  EXPECT_EQ(r.evaluated, 1u);
  EXPECT_DOUBLE_EQ(r.mean_auc, 1.0);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("flat"), std::string::npos);
}

TEST(Evaluate, BestThresholdMatchesSweepOracle) {
  RandomStream rng(6);
  std::vector<EvalInput> in;
  for (int k = 0; k < 3; ++k) {
    std::vector<float> s(64);
    std::vector<std::uint8_t> t(64), f(64);
    for (int i = 0; i < 64; ++i) {
      t[i] = rng.uniform() < 0.3;
      s[i] = static_cast<float>(std::clamp(0.35 * t[i] + rng.uniform(0.0, 0.7), 0.0, 1.0));
      f[i] = rng.uniform() < 0.9;
    }
    in.push_back({"i" + std::to_string(k), ProbabilityMap(8, 8, s), BinaryMask(8, 8, t), BinaryMask(8, 8, f)});
  }
  const EvalReport r = evaluate(in, 0.5f);
  // Oracle: evaluate every candidate threshold through the public path.
  double best = -1.0;
  float best_t = 0.0f;
  std::vector<float> cands;
  for (const auto& e : in) {
    for (std::size_t i = 0; i < 64; ++i) if (e.fov->data()[i]) cands.push_back(e.prediction.data()[i]);
  }
  std::sort(cands.begin(), cands.end());
  for (float c : cands) {
    double m = 0.0;
    for (const auto& e : in) m += accuracy(confusion(e.prediction, e.truth, *e.fov, c));
    m /= 3.0;
    if (m > best) best = m, best_t = c;
  }
  EXPECT_NEAR(r.best_mean_accuracy, best, 1e-12);
  EXPECT_EQ(r.best_threshold, best_t);
}

TEST(EvaluateDataset, DirectoriesAndReport) {
  ScratchDir dir;
  for (const char* sub : {"pred", "truth", "fov"}) std::filesystem::create_directories(dir / sub);
  RandomStream rng(7);
  for (int k = 0; k < 20; ++k) {
    const std::string stem = (k < 9 ? "0" : "") + std::to_string(k + 1) + "_test";
    std::vector<float> s(24 * 16);
    std::vector<std::uint8_t> t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      t[i] = rng.uniform() < 0.2;
      s[i] = static_cast<float>(rng.uniform());
    }
    t[0] = 1, t[1] = 0;
    write_prob16(dir / "pred" / (stem + ".png"), ProbabilityMap(24, 16, s));
    save_png(BinaryMask(24, 16, t), dir / "truth" / (stem + ".png"));
    if (k % 2 == 0) save_png(BinaryMask(24, 16, 1), dir / "fov" / (stem + ".png"));
  }
  save_png(BinaryMask(24, 16, 1), dir / "truth" / "orphan.png");

  const EvalReport r = evaluate_dataset(dir / "pred", dir / "truth", dir / "fov", 0.5f, 2);
  EXPECT_EQ(r.images.size(), 20u);
  EXPECT_EQ(r.fov_policy, "fov-restricted where provided, else all-ones");
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings.back().find("orphan"), std::string::npos);

  std::ostringstream jsonl;
  write_report_jsonl(r, jsonl);
  std::istringstream lines(jsonl.str());
  std::string line;
  int image_records = 0, total = 0;
  while (std::getline(lines, line)) {
    ++total;
    image_records += nlohmann::json::parse(line).at("type") == "image";
  }
  EXPECT_EQ(image_records, 20);
  EXPECT_EQ(total, 22);

  const std::string table = format_report_table(r);
  EXPECT_EQ(table.rfind("# config: --threshold 0.5", 0), 0u);
  EXPECT_EQ(summary_line(r).rfind("mean_auc=", 0), 0u);
}

TEST(EvaluateDataset, SixteenBitScoresKeepAuc) {
  RandomStream rng(8);
  std::vector<float> s(4096);
  std::vector<std::uint8_t> t(4096);
  for (std::size_t i = 0; i < s.size(); ++i) {
    t[i] = rng.uniform() < 0.2;
    s[i] = static_cast<float>(std::clamp(0.2 * t[i] + rng.uniform(0.0, 0.8), 0.0, 1.0));
  }
  const ProbabilityMap ref(64, 64, s);
  const BinaryMask T(64, 64, t), F(64, 64, 1);
  ScratchDir dir;
  write_prob16(dir / "p.png", ref);
  EXPECT_LT(std::abs(roc_auc(load_probability_map(dir / "p.png"), T, F) - roc_auc(ref, T, F)), 1e-4);
}

TEST(EvaluateDataset, NoCommonStems) {
  ScratchDir dir;
  std::filesystem::create_directories(dir / "pred");
  std::filesystem::create_directories(dir / "truth");
  save_png(BinaryMask(2, 2), dir / "pred" / "a.png");
  save_png(BinaryMask(2, 2), dir / "truth" / "b.png");
  EXPECT_THROW(evaluate_dataset(dir / "pred", dir / "truth", std::nullopt, 0.5f), DataError);
}

// Stored 16-bit score maps with metrics computed by numpy/scikit-learn
// (tools/make_reference_maps.py). 03_ref has no FOV file, 02_ref and 04_ref
// carry heavily tied scores.
TEST(ReferenceMaps, MatchIndependentlyComputedValues) {
  const std::filesystem::path root = std::filesystem::path(VESSELAUG_SOURCE_DIR) / "tests" / "data" / "reference";
  const auto expected = nlohmann::json::parse(vesselaug::testing::read_bytes(root / "expected.json"));
  const EvalReport r = evaluate_dataset(root / "pred", root / "truth", root / "fov", 0.5f, 2);
  ASSERT_EQ(r.images.size(), expected.at("images").size());
  EXPECT_EQ(r.evaluated, r.images.size());
  for (const auto& img : r.images) {
    SCOPED_TRACE(img.stem);
    const auto& e = expected.at("images").at(img.stem);
    EXPECT_EQ(img.counts.tp, e.at("tp").get<std::uint64_t>());
    EXPECT_EQ(img.counts.tn, e.at("tn").get<std::uint64_t>());
    EXPECT_EQ(img.counts.fp, e.at("fp").get<std::uint64_t>());
    EXPECT_EQ(img.counts.fn, e.at("fn").get<std::uint64_t>());
    EXPECT_NEAR(img.auc, e.at("auc").get<double>(), 1e-12);
    EXPECT_NEAR(img.accuracy, e.at("accuracy").get<double>(), 1e-12);
    EXPECT_NEAR(img.dice, e.at("dice").get<double>(), 1e-12);
    EXPECT_EQ(img.fov_provided, img.stem != "03_ref");
  }
  EXPECT_NEAR(r.mean_auc, expected.at("mean_auc").get<double>(), 1e-12);
  EXPECT_NEAR(r.mean_accuracy, expected.at("mean_accuracy").get<double>(), 1e-12);
  EXPECT_NEAR(r.mean_dice, expected.at("mean_dice").get<double>(), 1e-12);
}
