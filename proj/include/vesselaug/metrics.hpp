#pragma once

// Segmentation metrics restricted to the field of view: confusion counts,
// accuracy, dice and exact rank-statistic ROC-AUC, plus the prediction /
// ground-truth overlay renderer and dataset-level evaluation.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vesselaug/detail/parallel.hpp"
#include "vesselaug/image.hpp"
#include "vesselaug/png_io.hpp"

namespace vesselaug {

/// AUC is undefined when the FOV holds only one truth class.
class DegenerateTruthError : public DataError {
 public:
  using DataError::DataError;
};

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

namespace detail {

template <typename A, typename B>
void require_same_size(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DataError(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) +
                    "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + ")");
  }
}

/// Shortest decimal text that round-trips `v`.
inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

}  // namespace detail

inline ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& truth,
                                 const BinaryMask& fov) {
  detail::require_same_size(pred, truth, "confusion");
  detail::require_same_size(pred, fov, "confusion");
  ConfusionCounts c;
  const auto p = pred.data();
  const auto t = truth.data();
  const auto f = fov.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!f[i]) continue;
    if (p[i]) {
      (t[i] ? c.tp : c.fp) += 1;
    } else {
      (t[i] ? c.fn : c.tn) += 1;
    }
  }
  return c;
}

/// Scores >= threshold count as positive.
inline ConfusionCounts confusion(const ProbabilityMap& pred, const BinaryMask& truth,
                                 const BinaryMask& fov, float threshold) {
  if (!(threshold >= 0.0f && threshold <= 1.0f)) {
    throw ParameterError("confusion: threshold must lie in [0,1]");
  }
  detail::require_same_size(pred, truth, "confusion");
  return confusion(pred.binarize(threshold), truth, fov);
}

inline double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw DataError("accuracy: empty field of view");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

/// 2|P∩T| / (|P|+|T|) over FOV pixels; 1 when both sets are empty.
inline double dice(const BinaryMask& pred, const BinaryMask& truth, const BinaryMask& fov) {
  const ConfusionCounts c = confusion(pred, truth, fov);
  const std::uint64_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

/// Mann-Whitney statistic over FOV pixels: the fraction of (positive,
/// negative) pairs where the positive scores higher, ties counting half.
/// Sort-based, O(n log n).
inline double roc_auc(const ProbabilityMap& pred, const BinaryMask& truth, const BinaryMask& fov) {
  detail::require_same_size(pred, truth, "roc_auc");
  detail::require_same_size(pred, fov, "roc_auc");
  std::vector<std::pair<float, std::uint8_t>> scored;
  scored.reserve(fov.count());
  const auto s = pred.data();
  const auto t = truth.data();
  const auto f = fov.data();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (f[i]) scored.emplace_back(s[i], t[i]);
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Doubled pair count keeps everything integral until the final division.
  std::uint64_t twice_correct = 0;
  std::uint64_t negatives_below = 0;
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    std::uint64_t group_pos = 0;
    std::uint64_t group_neg = 0;
    while (j < scored.size() && scored[j].first == scored[i].first) {
      (scored[j].second ? group_pos : group_neg) += 1;
      ++j;
    }
    twice_correct += 2 * group_pos * negatives_below + group_pos * group_neg;
    negatives_below += group_neg;
    positives += group_pos;
    negatives += group_neg;
    i = j;
  }
  if (positives == 0 || negatives == 0) {
    throw DegenerateTruthError("roc_auc: field of view contains a single truth class");
  }
  return static_cast<double>(twice_correct) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

/// Black background, ground-truth pixels white, predicted pixels red (drawn
/// over white, so visible white marks missed vessels).
inline ImagePlane render_overlay(const BinaryMask& pred, const BinaryMask& truth) {
  detail::require_same_size(pred, truth, "render_overlay");
  const std::size_t n = pred.pixel_count();
  std::vector<float> rgb(n * 3, 0.0f);
  const auto p = pred.data();
  const auto t = truth.data();
  for (std::size_t i = 0; i < n; ++i) {
    float* px = rgb.data() + i * 3;
    if (p[i]) {
      px[0] = 1.0f;
    } else if (t[i]) {
      px[0] = px[1] = px[2] = 1.0f;
    }
  }
  return ImagePlane(pred.width(), pred.height(), 3, std::move(rgb));
}

struct ImageEvaluation {
  std::string stem;
  ConfusionCounts counts;
  double accuracy = 0.0;
  double auc = 0.0;
  double dice = 0.0;
  bool fov_provided = false;
  bool degenerate = false;  // excluded from aggregates
  std::string note;
};

struct EvalReport {
  float threshold = 0.5f;
  std::string fov_policy;
  std::vector<ImageEvaluation> images;
  std::vector<std::string> warnings;
  std::size_t evaluated = 0;
  double mean_accuracy = 0.0;
  double mean_auc = 0.0;
  double mean_dice = 0.0;
  /// Threshold maximizing mean accuracy over evaluated images.
  float best_threshold = 0.5f;
  double best_mean_accuracy = 0.0;
};

struct EvalInput {
  std::string stem;
  ProbabilityMap prediction;
  BinaryMask truth;
  std::optional<BinaryMask> fov;
};

namespace detail {

/// Sweeps every distinct score as a candidate threshold and returns the one
/// maximizing the mean per-image accuracy (lowest threshold on ties).
inline std::pair<float, double> best_accuracy_threshold(const std::vector<EvalInput>& inputs,
                                                        const std::vector<ImageEvaluation>& evals) {
  struct Sorted {
    std::vector<float> pos;
    std::vector<float> neg;
  };
  std::vector<Sorted> per_image;
  std::vector<float> candidates;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (evals[k].degenerate) continue;
    const auto& in = inputs[k];
    const BinaryMask fov = in.fov ? *in.fov : BinaryMask(in.truth.width(), in.truth.height(), 1);
    Sorted s;
    const auto sc = in.prediction.data();
    for (std::size_t i = 0; i < sc.size(); ++i) {
      if (!fov.data()[i]) continue;
      (in.truth.data()[i] ? s.pos : s.neg).push_back(sc[i]);
      candidates.push_back(sc[i]);
    }
    std::sort(s.pos.begin(), s.pos.end());
    std::sort(s.neg.begin(), s.neg.end());
    per_image.push_back(std::move(s));
  }
  if (per_image.empty()) return {0.5f, 0.0};
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<double> sum(candidates.size(), 0.0);
  for (const Sorted& s : per_image) {
    const double n = static_cast<double>(s.pos.size() + s.neg.size());
    std::size_t pos_below = 0;
    std::size_t neg_below = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const float t = candidates[c];
      while (pos_below < s.pos.size() && s.pos[pos_below] < t) ++pos_below;
      while (neg_below < s.neg.size() && s.neg[neg_below] < t) ++neg_below;
      sum[c] += static_cast<double>((s.pos.size() - pos_below) + neg_below) / n;
    }
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    if (sum[c] > sum[best]) best = c;
  }
  return {candidates[best], sum[best] / static_cast<double>(per_image.size())};
}

}  // namespace detail

inline ImageEvaluation evaluate_image(const EvalInput& input, float threshold) {
  ImageEvaluation e;
  e.stem = input.stem;
  e.fov_provided = input.fov.has_value();
  detail::require_same_size(input.prediction, input.truth, input.stem.c_str());
  const BinaryMask fov =
      input.fov ? *input.fov : BinaryMask(input.truth.width(), input.truth.height(), 1);
  detail::require_same_size(input.prediction, fov, input.stem.c_str());
  const BinaryMask pred = input.prediction.binarize(threshold);
  e.counts = confusion(pred, input.truth, fov);
  if (e.counts.total() == 0) {
    e.degenerate = true;
    e.note = "empty field of view";
    return e;
  }
  e.accuracy = accuracy(e.counts);
  e.dice = dice(pred, input.truth, fov);
  try {
    e.auc = roc_auc(input.prediction, input.truth, fov);
  } catch (const DegenerateTruthError&) {
    e.degenerate = true;
    e.note = "single truth class inside field of view";
  }
  return e;
}

/// Per-image metrics plus arithmetic means over non-degenerate images, in
/// the order given.
inline EvalReport evaluate(const std::vector<EvalInput>& inputs, float threshold, int threads = 1) {
  if (!(threshold >= 0.0f && threshold <= 1.0f)) {
    throw ParameterError("evaluate: threshold must lie in [0,1]");
  }
  EvalReport report;
  report.threshold = threshold;
  report.images.resize(inputs.size());
  detail::parallel_for(inputs.size(), threads,
                       [&](std::size_t i) { report.images[i] = evaluate_image(inputs[i], threshold); });

  std::size_t with_fov = 0;
  for (const auto& e : report.images) {
    with_fov += e.fov_provided;
    if (e.degenerate) {
      report.warnings.push_back(e.stem + ": skipped (" + e.note + ")");
      continue;
    }
    ++report.evaluated;
    report.mean_accuracy += e.accuracy;
    report.mean_auc += e.auc;
    report.mean_dice += e.dice;
  }
  if (report.evaluated == 0) throw DataError("evaluate: no evaluable images");
  const double n = static_cast<double>(report.evaluated);
  report.mean_accuracy /= n;
  report.mean_auc /= n;
  report.mean_dice /= n;
  report.fov_policy = with_fov == inputs.size() ? "fov-restricted"
                      : with_fov == 0           ? "all-ones (no FOV masks)"
                                                : "fov-restricted where provided, else all-ones";
  std::tie(report.best_threshold, report.best_mean_accuracy) =
      detail::best_accuracy_threshold(inputs, report.images);
  return report;
}

namespace detail {

inline std::set<std::string> png_stems(const std::filesystem::path& dir) {
  std::set<std::string> stems;
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("'" + dir.string() + "' is not a directory");
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      stems.insert(entry.path().stem().string());
    }
  }
  return stems;
}

}  // namespace detail

/// Evaluates every stem present in both `pred_dir` and `truth_dir`. Stems
/// found in only one directory are listed as warnings; an empty
/// intersection is an error. A missing FOV file falls back to all-ones.
inline EvalReport evaluate_dataset(const std::filesystem::path& pred_dir,
                                   const std::filesystem::path& truth_dir,
                                   const std::optional<std::filesystem::path>& fov_dir,
                                   float threshold, int threads = 1) {
  const auto preds = detail::png_stems(pred_dir);
  const auto truths = detail::png_stems(truth_dir);
  std::vector<std::string> stems;
  std::vector<std::string> unmatched;
  std::set_intersection(preds.begin(), preds.end(), truths.begin(), truths.end(),
                        std::back_inserter(stems));
  std::set_symmetric_difference(preds.begin(), preds.end(), truths.begin(), truths.end(),
                                std::back_inserter(unmatched));
  if (stems.empty()) {
    throw DataError("evaluate: no common stems between '" + pred_dir.string() + "' and '" +
                    truth_dir.string() + "'");
  }

  std::vector<EvalInput> inputs(stems.size());
  detail::parallel_for(stems.size(), threads, [&](std::size_t i) {
    const std::string file = stems[i] + ".png";
    inputs[i].stem = stems[i];
    inputs[i].prediction = load_probability_map(pred_dir / file);
    inputs[i].truth = load_mask(truth_dir / file).mask;
    if (fov_dir && std::filesystem::exists(*fov_dir / file)) {
      inputs[i].fov = load_mask(*fov_dir / file).mask;
    }
  });

  EvalReport report = evaluate(inputs, threshold, threads);
  for (const auto& stem : unmatched) {
    report.warnings.push_back(stem + ": present in only one of prediction/truth directories");
  }
  return report;
}

/// Line-delimited JSON: one header record, one record per image, one
/// aggregate record.
inline void write_report_jsonl(const EvalReport& report, std::ostream& out) {
  using nlohmann::json;
  out << json{{"type", "header"},
              {"threshold", report.threshold},
              {"fov_policy", report.fov_policy},
              {"images", report.images.size()}}
             .dump()
      << '\n';
  for (const auto& e : report.images) {
    json rec{{"type", "image"},        {"stem", e.stem},         {"tp", e.counts.tp},
             {"fp", e.counts.fp},      {"tn", e.counts.tn},      {"fn", e.counts.fn},
             {"fov", e.fov_provided ? "provided" : "all-ones"},  {"degenerate", e.degenerate}};
    if (e.degenerate) {
      rec["note"] = e.note;
    } else {
      rec["accuracy"] = e.accuracy;
      rec["auc"] = e.auc;
      rec["dice"] = e.dice;
    }
    out << rec.dump() << '\n';
  }
  out << json{{"type", "aggregate"},
              {"evaluated", report.evaluated},
              {"mean_accuracy", report.mean_accuracy},
              {"mean_auc", report.mean_auc},
              {"mean_dice", report.mean_dice},
              {"best_threshold", report.best_threshold},
              {"best_mean_accuracy", report.best_mean_accuracy},
              {"warnings", report.warnings}}
             .dump()
      << '\n';
}

inline std::string format_report_table(const EvalReport& report) {
  std::ostringstream os;
  os << "# config: --threshold " << detail::format_number(report.threshold)
     << "  fov: " << report.fov_policy << '\n';
  os << std::left << std::setw(24) << "stem" << std::right << std::setw(10) << "accuracy"
     << std::setw(10) << "auc" << std::setw(10) << "dice" << '\n';
  os << std::fixed << std::setprecision(4);
  for (const auto& e : report.images) {
    os << std::left << std::setw(24) << e.stem << std::right;
    if (e.degenerate) {
      os << "  skipped: " << e.note << '\n';
    } else {
      os << std::setw(10) << e.accuracy << std::setw(10) << e.auc << std::setw(10) << e.dice
         << '\n';
    }
  }
  os << std::left << std::setw(24) << "mean" << std::right << std::setw(10)
     << report.mean_accuracy << std::setw(10) << report.mean_auc << std::setw(10)
     << report.mean_dice << '\n';
  os << "# best-accuracy threshold " << detail::format_number(report.best_threshold)
     << " -> mean accuracy " << report.best_mean_accuracy << '\n';
  for (const auto& w : report.warnings) os << "# warning: " << w << '\n';
  return os.str();
}

inline std::string summary_line(const EvalReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << "mean_auc=" << report.mean_auc
     << " mean_acc=" << report.mean_accuracy << " mean_dice=" << report.mean_dice;
  return os.str();
}

}  // namespace vesselaug
