// vesselaug command-line front end.
//
// Exit codes: 0 success, 2 partial failure, 64 usage error, 65 data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "vesselaug/vesselaug.hpp"

namespace fs = std::filesystem;
using namespace vesselaug;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;

int default_threads() {
  if (const char* env = std::getenv("VESSELAUG_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct AugmentArgs {
  fs::path in;
  fs::path plan;
  fs::path out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool verbose = false;
};

int cmd_augment(const AugmentArgs& args) {
  if (!fs::is_regular_file(args.plan)) {
    std::cerr << "augment: plan file '" << args.plan.string() << "' not found\n";
    return kExitUsage;
  }
  if (!fs::is_directory(args.in)) {
    std::cerr << "augment: source directory '" << args.in.string() << "' not found\n";
    return kExitUsage;
  }
  AugmentationPlan plan = parse_plan(read_file(args.plan));
  if (args.seed) plan.master_seed = *args.seed;

  const ExpandResult result = expand_dataset(args.in, plan, args.out, ExpandOptions{args.threads});
  std::cout << "manifest: " << result.manifest_path.string() << '\n';
  std::cout << "outputs: " << result.manifest.records.size() << '\n';
  if (args.verbose) {
    std::cout << "plan_hash: " << result.manifest.header.plan_hash << '\n'
              << "seed: " << plan.master_seed << '\n';
  }
  if (!result.ok()) {
    for (const auto& f : result.failures) {
      std::cerr << "failed: " << f.stem << " (source " << f.source_id << "): " << f.message << '\n';
    }
    return kExitPartial;
  }
  return kExitOk;
}

struct EvaluateArgs {
  fs::path pred;
  fs::path truth;
  std::optional<fs::path> fov;
  std::optional<fs::path> out;
  float threshold = 0.5f;
  int threads = 1;
};

int cmd_evaluate(const EvaluateArgs& args) {
  const EvalReport report =
      evaluate_dataset(args.pred, args.truth, args.fov, args.threshold, args.threads);
  const std::string table = format_report_table(report);
  if (args.out) {
    fs::create_directories(*args.out);
    std::ofstream jsonl(*args.out / "report.jsonl", std::ios::binary | std::ios::trunc);
    write_report_jsonl(report, jsonl);
    std::ofstream txt(*args.out / "report.txt", std::ios::binary | std::ios::trunc);
    txt << table;
  } else {
    std::cout << table;
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << summary_line(report) << '\n';
  return kExitOk;
}

struct OverlayArgs {
  fs::path pred;
  fs::path truth;
  fs::path out;
  float threshold = 0.5f;
};

int cmd_overlay(const OverlayArgs& args) {
  std::vector<std::pair<fs::path, fs::path>> pairs;
  if (fs::is_directory(args.pred) && fs::is_directory(args.truth)) {
    const auto preds = detail::png_stems(args.pred);
    const auto truths = detail::png_stems(args.truth);
    for (const auto& stem : preds) {
      if (truths.count(stem)) {
        pairs.emplace_back(args.pred / (stem + ".png"), args.truth / (stem + ".png"));
      } else {
        std::cerr << "warning: no ground truth for '" << stem << "'\n";
      }
    }
    if (pairs.empty()) {
      std::cerr << "overlay: no matching stems\n";
      return kExitData;
    }
  } else if (fs::is_regular_file(args.pred) && fs::is_regular_file(args.truth)) {
    pairs.emplace_back(args.pred, args.truth);
  } else {
    std::cerr << "overlay: --pred and --truth must both be files or both be directories\n";
    return kExitUsage;
  }

  fs::create_directories(args.out);
  for (const auto& [pred_path, truth_path] : pairs) {
    const std::string stem = pred_path.stem().string();
    const BinaryMask pred = load_probability_map(pred_path).binarize(args.threshold);
    const BinaryMask truth = load_mask(truth_path).mask;
    if (pred.width() != truth.width() || pred.height() != truth.height()) {
      std::cerr << "overlay: dimension mismatch for '" << stem << "'\n";
      return kExitData;
    }
    save_png(render_overlay(pred, truth), args.out / (stem + "_overlay.png"));
  }
  std::cout << "overlays: " << pairs.size() << '\n';
  return kExitOk;
}

struct ReplayArgs {
  fs::path manifest;
  fs::path in;
  std::string stem;
  std::optional<fs::path> out;
};

int cmd_replay(const ReplayArgs& args) {
  const Manifest manifest = Manifest::read(args.manifest);
  const ManifestRecord* record = manifest.find(args.stem);
  if (!record) {
    std::cerr << "replay: no record '" << args.stem << "' in manifest\n";
    return kExitData;
  }
  const ReplayResult result = replay(*record, args.in, manifest.header);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  if (args.out) {
    fs::create_directories(*args.out / kImagesDir);
    fs::create_directories(*args.out / kMasksDir);
    if (result.sample.fov()) fs::create_directories(*args.out / kFovDir);
    write_sample(result.sample, *args.out, record->stem);
  }
  std::cout << "checksum: " << result.checksum << (result.matches ? " (match)" : " (MISMATCH)")
            << '\n';
  return result.matches ? kExitOk : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vesselaug: paired image/mask augmentation and segmentation evaluation"};
  app.require_subcommand(1);

  AugmentArgs aug;
  aug.threads = default_threads();
  auto* augment = app.add_subcommand("augment", "Expand a dataset with an augmentation plan");
  augment->add_option("--in", aug.in, "Source directory (images/, masks/, fov/)")->required();
  augment->add_option("--plan", aug.plan, "Plan file (JSON)")->required();
  augment->add_option("--out", aug.out, "Output directory")->required();
  augment->add_option("--seed", aug.seed, "Master seed (overrides the plan; default 42)");
  augment->add_option("--threads", aug.threads, "Worker threads (env VESSELAUG_THREADS)")
      ->check(CLI::PositiveNumber);
  augment->add_flag("-v,--verbose", aug.verbose, "Also print the plan hash and seed");

  EvaluateArgs ev;
  ev.threads = default_threads();
  auto* evaluate = app.add_subcommand("evaluate", "Score probability maps against ground truth");
  evaluate->add_option("--pred", ev.pred, "Directory of probability-map PNGs")->required();
  evaluate->add_option("--truth", ev.truth, "Directory of vessel-mask PNGs")->required();
  evaluate->add_option("--fov", ev.fov, "Directory of FOV-mask PNGs");
  evaluate->add_option("--threshold", ev.threshold, "Binarization threshold")
      ->check(CLI::Range(0.0f, 1.0f));
  evaluate->add_option("--out", ev.out, "Report directory (report.jsonl, report.txt)");
  evaluate->add_option("--threads", ev.threads, "Worker threads (env VESSELAUG_THREADS)")->check(CLI::PositiveNumber);

  OverlayArgs ov;
  auto* overlay = app.add_subcommand("overlay", "Render prediction/ground-truth overlays");
  overlay->add_option("--pred", ov.pred, "Prediction PNG or directory")->required();
  overlay->add_option("--truth", ov.truth, "Ground-truth PNG or directory")->required();
  overlay->add_option("--out", ov.out, "Output directory")->required();
  overlay->add_option("--threshold", ov.threshold, "Binarization threshold for the prediction")
      ->check(CLI::Range(0.0f, 1.0f));

  ReplayArgs rp;
  auto* replay_cmd = app.add_subcommand("replay", "Regenerate one manifest record");
  replay_cmd->add_option("--manifest", rp.manifest, "manifest.jsonl from the original run")->required();
  replay_cmd->add_option("--in", rp.in, "Source directory used for the original run")->required();
  replay_cmd->add_option("--stem", rp.stem, "Output stem to regenerate")->required();
  replay_cmd->add_option("--out", rp.out, "Write the regenerated sample here");

  auto* default_plan = app.add_subcommand("default-plan", "Print the staged default plan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (augment->parsed()) return cmd_augment(aug);
    if (evaluate->parsed()) return cmd_evaluate(ev);
    if (overlay->parsed()) return cmd_overlay(ov);
    if (replay_cmd->parsed()) return cmd_replay(rp);
    if (default_plan->parsed()) {
      std::cout << default_paper_plan().to_json().dump(2) << '\n';
      return kExitOk;
    }
  } catch (const PlanError& e) {
    std::cerr << "plan error: " << e.what() << '\n';
    return kExitData;
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
