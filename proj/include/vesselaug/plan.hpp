#pragma once

// Augmentation plans: the declarative list of transform entries, their
// parameter distributions, the transform registry that resolves and
// applies them, and the staged default plan.
//
// Plan files are JSON (schema version 1, see docs/plan-schema.md). A
// parameter spec is either a literal (number, string, array of numbers) or
// one of {"uniform":[lo,hi]}, {"uniform_int":[lo,hi]}, {"choice":[...]}.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vesselaug/affine.hpp"
#include "vesselaug/detail/digest.hpp"
#include "vesselaug/elastic.hpp"
#include "vesselaug/image.hpp"
#include "vesselaug/pixel.hpp"
#include "vesselaug/rng.hpp"

namespace vesselaug {

using nlohmann::json;

inline constexpr std::string_view kEngineVersion = "vesselaug-1.0.0";
inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr int kPlanSchemaVersion = 1;

class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CompositionMode { single, chained };
enum class ChannelPolicy { rgb, green };

/// One transform invocation with parameter specs (unresolved).
struct PlanStep {
  std::string transform;
  json params = json::object();
};

struct PlanEntry {
  std::vector<PlanStep> steps;
  int count = 1;
  int stage = 0;  // informational grouping, 0 = none
};

/// One resolved transform invocation, as recorded in the manifest.
struct ResolvedStep {
  std::string transform;
  json params = json::object();
};

namespace detail {

inline double spec_number(const json& v, std::string_view what) {
  if (!v.is_number()) throw PlanError(std::string(what) + ": expected a number");
  return v.get<double>();
}

/// Draws a concrete value for one parameter spec.
inline json resolve_spec(const json& spec, RandomStream& rng, std::string_view what) {
  if (!spec.is_object()) return spec;
  if (spec.size() != 1) throw PlanError(std::string(what) + ": malformed distribution");
  const std::string kind = spec.begin().key();
  const json& args = spec.begin().value();
  if (kind == "uniform" || kind == "uniform_int") {
    if (!args.is_array() || args.size() != 2) {
      throw PlanError(std::string(what) + ": " + kind + " needs [lo, hi]");
    }
    if (kind == "uniform") {
      return rng.uniform(spec_number(args[0], what), spec_number(args[1], what));
    }
    if (!args[0].is_number_integer() || !args[1].is_number_integer()) {
      throw PlanError(std::string(what) + ": uniform_int bounds must be integers");
    }
    const auto lo = args[0].get<std::int64_t>();
    const auto hi = args[1].get<std::int64_t>();
    if (hi < lo) throw PlanError(std::string(what) + ": empty uniform_int range");
    return rng.uniform_int(lo, hi);
  }
  if (kind == "choice") {
    if (!args.is_array() || args.empty()) {
      throw PlanError(std::string(what) + ": choice needs a non-empty list");
    }
    return args[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(args.size()) - 1))];
  }
  throw PlanError(std::string(what) + ": unknown distribution '" + kind + "'");
}

inline double num(const json& p, const char* key) { return p.at(key).get<double>(); }
inline int integer(const json& p, const char* key) { return p.at(key).get<int>(); }

inline RandomStream stream_from(const json& p) {
  return RandomStream(parse_hex_u64(p.at("stream").get<std::string>()));
}

}  // namespace detail

/// Registered transform: ordered parameter defaults, a resolver that turns
/// specs into concrete values, and an applier that consumes only resolved
/// values (so a manifest record alone regenerates the output).
struct TransformDef {
  std::string name;
  bool geometric = false;
  /// (parameter name, default spec) in resolution order.
  std::vector<std::pair<std::string, json>> defaults;
  /// Extra resolution after the declared parameters (offsets, factors,
  /// stream keys). May inspect the current sample.
  std::function<void(json&, const Sample&, RandomStream&)> finish;
  std::function<Sample(const Sample&, const json&)> apply;
};

namespace detail {

inline void add_stream_key(json& p, const Sample&, RandomStream& rng) {
  p["stream"] = hex_u64(rng.next_u64());
}

inline std::vector<TransformDef> build_registry() {
  std::vector<TransformDef> r;
  auto pixel = [](auto fn) {
    return [fn](const Sample& s, const json& p) { return s.with_image(fn(s.image(), p)); };
  };

  r.push_back({"rotate", true, {{"angle", json{{"uniform", {0.0, 360.0}}}}}, nullptr,
               [](const Sample& s, const json& p) { return rotate(s, num(p, "angle")); }});
  r.push_back({"flip", true, {{"axis", json{{"choice", {"horizontal", "vertical", "both"}}}}},
               nullptr, [](const Sample& s, const json& p) {
                 return flip(s, parse_flip_axis(p.at("axis").get<std::string>()));
               }});
  r.push_back({"zoom_out", true, {{"factor", json{{"uniform", {0.6, 1.0}}}}}, nullptr,
               [](const Sample& s, const json& p) { return zoom_out(s, num(p, "factor")); }});
  r.push_back({"crop", true, {{"size", json{{"uniform_int", {48, 128}}}}},
               [](json& p, const Sample& s, RandomStream& rng) {
                 const int limit = std::min(s.width(), s.height());
                 const int size = std::min(p.at("size").get<int>(), limit);
                 p["size"] = size;
                 const CropOffset o = draw_crop_offset(s.width(), s.height(), size, rng);
                 p["x"] = o.x;
                 p["y"] = o.y;
               },
               [](const Sample& s, const json& p) {
                 return crop(s, integer(p, "size"), integer(p, "x"), integer(p, "y"));
               }});
  r.push_back({"shift", true,
               {{"dx", json{{"uniform_int", {-60, 60}}}}, {"dy", json{{"uniform_int", {-60, 60}}}}},
               [](json& p, const Sample& s, RandomStream&) {
                 // Keep the translation strictly inside small rasters.
                 p["dx"] = std::clamp(p.at("dx").get<int>(), -(s.width() - 1), s.width() - 1);
                 p["dy"] = std::clamp(p.at("dy").get<int>(), -(s.height() - 1), s.height() - 1);
               },
               [](const Sample& s, const json& p) {
                 return shift(s, integer(p, "dx"), integer(p, "dy"));
               }});
  r.push_back({"shear", true,
               {{"factor", json{{"uniform", {-0.2, 0.2}}}}, {"axis", json{{"choice", {"x", "y"}}}}},
               nullptr, [](const Sample& s, const json& p) {
                 return shear(s, num(p, "factor"), parse_shear_axis(p.at("axis").get<std::string>()));
               }});
  r.push_back({"elastic", true, {{"alpha", 34.0}, {"sigma", 4.0}}, add_stream_key,
               [](const Sample& s, const json& p) {
                 RandomStream rng = stream_from(p);
                 return elastic_deform(s, ElasticParams{num(p, "alpha"), num(p, "sigma")}, rng);
               }});
  r.push_back({"grid", true, {{"cells", 5}, {"distort_limit", 0.3}},
               [](json& p, const Sample&, RandomStream& rng) {
                 GridDistortParams g;
                 g.cells = p.at("cells").get<int>();
                 g.distort_limit = p.at("distort_limit").get<double>();
                 if (p.contains("factors_x")) g.factors_x = p["factors_x"].get<std::vector<double>>();
                 if (p.contains("factors_y")) g.factors_y = p["factors_y"].get<std::vector<double>>();
                 g = resolve_grid_factors(g, rng);
                 p["factors_x"] = g.factors_x;
                 p["factors_y"] = g.factors_y;
               },
               [](const Sample& s, const json& p) {
                 GridDistortParams g;
                 g.cells = integer(p, "cells");
                 g.distort_limit = num(p, "distort_limit");
                 g.factors_x = p.at("factors_x").get<std::vector<double>>();
                 g.factors_y = p.at("factors_y").get<std::vector<double>>();
                 return grid_distort(s, g);
               }});
  r.push_back({"optical", true, {{"k", json{{"uniform", {-0.3, 0.3}}}}}, nullptr,
               [](const Sample& s, const json& p) {
                 return optical_distort(s, OpticalDistortParams{num(p, "k")});
               }});
  r.push_back({"noise", false, {{"epsilon", json{{"choice", {5, 10, 20}}}}}, add_stream_key,
               pixel([](const ImagePlane& im, const json& p) {
                 RandomStream rng = stream_from(p);
                 return white_noise(im, WhiteNoiseParams{num(p, "epsilon")}, rng);
               })});
  r.push_back({"gamma", false, {{"gamma", json{{"uniform", {0.6, 1.6}}}}}, nullptr,
               pixel([](const ImagePlane& im, const json& p) {
                 return gamma_correct(im, GammaParams{num(p, "gamma")});
               })});
  r.push_back({"equalize", false, {}, nullptr,
               pixel([](const ImagePlane& im, const json&) { return equalize_hist(im); })});
  r.push_back({"dropout", false, {{"p", 0.05}}, add_stream_key,
               pixel([](const ImagePlane& im, const json& p) {
                 RandomStream rng = stream_from(p);
                 return pixel_dropout(im, PixelDropoutParams{num(p, "p")}, rng);
               })});
  r.push_back({"sharpen", false,
               {{"amount", json{{"uniform", {0.5, 1.5}}}}, {"sigma", 1.0}}, nullptr,
               pixel([](const ImagePlane& im, const json& p) {
                 FilterParams f;
                 f.sharpen_amount = num(p, "amount");
                 f.blur_sigma = num(p, "sigma");
                 return sharpen(im, f);
               })});
  r.push_back({"blur", false, {{"sigma", json{{"uniform", {0.5, 1.5}}}}}, nullptr,
               pixel([](const ImagePlane& im, const json& p) {
                 FilterParams f;
                 f.blur_sigma = num(p, "sigma");
                 return blur(im, f);
               })});
  r.push_back({"contrast", false, {{"factor", json{{"uniform", {0.7, 1.3}}}}}, nullptr,
               pixel([](const ImagePlane& im, const json& p) {
                 FilterParams f;
                 f.contrast_factor = num(p, "factor");
                 return adjust_contrast(im, f);
               })});
  return r;
}

}  // namespace detail

inline const std::vector<TransformDef>& transform_registry() {
  static const std::vector<TransformDef> registry = detail::build_registry();
  return registry;
}

inline const TransformDef& find_transform(std::string_view name) {
  for (const auto& def : transform_registry()) {
    if (def.name == name) return def;
  }
  throw PlanError("unknown transform '" + std::string(name) + "'");
}

/// Resolves a step's specs (declared parameter order, then the transform's
/// extra draws) against the current sample.
inline ResolvedStep resolve_step(const PlanStep& step, const Sample& current, RandomStream& rng) {
  const TransformDef& def = find_transform(step.transform);
  ResolvedStep out{def.name, json::object()};
  for (const auto& [key, fallback] : def.defaults) {
    const json& spec = step.params.contains(key) ? step.params.at(key) : fallback;
    out.params[key] = detail::resolve_spec(spec, rng, def.name + "." + key);
  }
  // Explicit grid factors are literal inputs, carried through unchanged.
  for (const char* extra : {"factors_x", "factors_y"}) {
    if (def.name == "grid" && step.params.contains(extra)) out.params[extra] = step.params[extra];
  }
  if (def.finish) def.finish(out.params, current, rng);
  return out;
}

/// Applies resolved steps in order. Pixel-level steps are checked to leave
/// both masks byte-identical.
inline Sample apply_steps(const Sample& source, const std::vector<ResolvedStep>& steps) {
  Sample current = source;
  for (const auto& step : steps) {
    const TransformDef& def = find_transform(step.transform);
    Sample next = def.apply(current, step.params);
    if (!def.geometric && (next.vessels() != current.vessels() || next.fov() != current.fov())) {
      throw std::logic_error("pixel transform '" + def.name + "' altered a mask");
    }
    current = std::move(next);
  }
  return current;
}

struct AugmentationPlan {
  std::vector<PlanEntry> entries;
  std::uint64_t master_seed = kDefaultSeed;
  bool include_originals = true;
  CompositionMode composition = CompositionMode::single;
  ChannelPolicy channels = ChannelPolicy::rgb;
  std::string description;

  std::size_t replicate_total() const {
    std::size_t total = 0;
    for (const auto& e : entries) total += static_cast<std::size_t>(e.count);
    return total;
  }

  /// Outputs emitted per source sample.
  std::size_t outputs_per_source() const {
    return replicate_total() + (include_originals ? 1 : 0);
  }

  void validate() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const std::string where = "entry " + std::to_string(i);
      if (e.count < 1) throw PlanError(where + ": replicate count must be >= 1");
      if (e.steps.empty()) throw PlanError(where + ": no transform");
      if (e.steps.size() > 1 && composition != CompositionMode::chained) {
        throw PlanError(where + ": chained steps require composition \"chained\"");
      }
      for (const auto& step : e.steps) {
        const TransformDef& def = find_transform(step.transform);
        if (!step.params.is_object()) throw PlanError(where + ": params must be an object");
        for (const auto& item : step.params.items()) {
          const std::string& key = item.key();
          bool known = false;
          for (const auto& d : def.defaults) known = known || d.first == key;
          known = known || (def.name == "grid" && (key == "factors_x" || key == "factors_y"));
          if (!known) {
            throw PlanError(where + ": transform '" + def.name + "' has no parameter '" + key + "'");
          }
        }
      }
    }
  }

  json to_json() const {
    json j;
    j["schema_version"] = kPlanSchemaVersion;
    j["master_seed"] = master_seed;
    j["include_originals"] = include_originals;
    j["composition"] = composition == CompositionMode::single ? "single" : "chained";
    j["channels"] = channels == ChannelPolicy::rgb ? "rgb" : "green";
    if (!description.empty()) j["description"] = description;
    j["entries"] = json::array();
    for (const auto& e : entries) {
      json je;
      je["count"] = e.count;
      if (e.stage) je["stage"] = e.stage;
      if (e.steps.size() == 1 && composition == CompositionMode::single) {
        je["transform"] = e.steps[0].transform;
        je["params"] = e.steps[0].params;
      } else {
        je["chain"] = json::array();
        for (const auto& s : e.steps) je["chain"].push_back({{"transform", s.transform}, {"params", s.params}});
      }
      j["entries"].push_back(std::move(je));
    }
    return j;
  }

  static AugmentationPlan from_json(const json& j) {
    if (!j.is_object()) throw PlanError("plan: top level must be an object");
    const int version = j.value("schema_version", kPlanSchemaVersion);
    if (version != kPlanSchemaVersion) {
      throw PlanError("plan: unsupported schema_version " + std::to_string(version));
    }
    static const std::vector<std::string> top_keys = {
        "schema_version", "master_seed", "include_originals", "composition",
        "channels",       "description", "entries"};
    for (const auto& item : j.items()) {
      if (std::find(top_keys.begin(), top_keys.end(), item.key()) == top_keys.end()) {
        throw PlanError("plan: unknown field '" + item.key() + "'");
      }
    }
    AugmentationPlan plan;
    try {
      plan.master_seed = j.value("master_seed", kDefaultSeed);
      plan.include_originals = j.value("include_originals", true);
      const std::string mode = j.value("composition", std::string("single"));
      if (mode == "single") plan.composition = CompositionMode::single;
      else if (mode == "chained") plan.composition = CompositionMode::chained;
      else throw PlanError("plan: composition must be \"single\" or \"chained\"");
      const std::string channels = j.value("channels", std::string("rgb"));
      if (channels == "rgb") plan.channels = ChannelPolicy::rgb;
      else if (channels == "green") plan.channels = ChannelPolicy::green;
      else throw PlanError("plan: channels must be \"rgb\" or \"green\"");
      plan.description = j.value("description", std::string());

      for (const auto& je : j.at("entries")) {
        PlanEntry e;
        e.count = je.value("count", 1);
        e.stage = je.value("stage", 0);
        if (je.contains("chain") == je.contains("transform")) {
          throw PlanError("plan: each entry needs exactly one of \"transform\" or \"chain\"");
        }
        if (je.contains("transform")) {
          e.steps.push_back({je.at("transform").get<std::string>(), je.value("params", json::object())});
        } else {
          for (const auto& js : je.at("chain")) {
            e.steps.push_back({js.at("transform").get<std::string>(), js.value("params", json::object())});
          }
        }
        plan.entries.push_back(std::move(e));
      }
    } catch (const json::exception& ex) {
      throw PlanError(std::string("plan: ") + ex.what());
    }
    plan.validate();
    return plan;
  }

  /// Key-sorted compact JSON of the normalized plan.
  std::string canonical() const { return to_json().dump(); }

  std::string hash() const { return detail::sha256_hex(canonical()); }
};

inline AugmentationPlan parse_plan(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw PlanError(std::string("plan: ") + ex.what());
  }
  return AugmentationPlan::from_json(j);
}

/// Staged plan covering all sixteen transforms, ordered as the augmentation
/// families were introduced: rotation/flip, then shift/zoom/crop, then
/// noise/elastic, then gamma, then the remaining pixel and distortion ops.
/// Parameters are engineering defaults. Sum of replicate counts is 63, so
/// every source yields 64 outputs with the original.
inline AugmentationPlan default_paper_plan() {
  AugmentationPlan plan;
  plan.description =
      "staged default plan; parameter values are engineering defaults, not published settings";
  auto add = [&](int stage, std::string transform, json params, int count) {
    plan.entries.push_back({{PlanStep{std::move(transform), std::move(params)}}, count, stage});
  };
  const json none = json::object();
  add(1, "rotate", {{"angle", {{"uniform", {0.0, 360.0}}}}}, 8);
  add(1, "rotate", {{"angle", 90}}, 1);
  add(1, "rotate", {{"angle", 180}}, 1);
  add(1, "rotate", {{"angle", 270}}, 1);
  add(1, "flip", {{"axis", {{"choice", {"horizontal", "vertical", "both"}}}}}, 3);
  add(2, "shift", {{"dx", {{"uniform_int", {-60, 60}}}}, {"dy", {{"uniform_int", {-60, 60}}}}}, 4);
  add(2, "zoom_out", {{"factor", {{"uniform", {0.6, 1.0}}}}}, 4);
  add(2, "crop", {{"size", {{"uniform_int", {48, 128}}}}}, 4);
  add(3, "noise", {{"epsilon", {{"choice", {5, 10, 20}}}}}, 6);
  add(3, "elastic", {{"alpha", 34.0}, {"sigma", 4.0}}, 6);
  add(4, "gamma", {{"gamma", {{"uniform", {0.6, 1.6}}}}}, 5);
  add(5, "blur", {{"sigma", {{"uniform", {0.5, 1.5}}}}}, 3);
  add(5, "dropout", {{"p", 0.05}}, 3);
  add(5, "equalize", none, 1);
  add(5, "grid", {{"cells", 5}, {"distort_limit", 0.3}}, 3);
  add(5, "optical", {{"k", {{"uniform", {-0.3, 0.3}}}}}, 3);
  add(5, "shear", {{"factor", {{"uniform", {-0.2, 0.2}}}}, {"axis", {{"choice", {"x", "y"}}}}}, 3);
  add(5, "sharpen", {{"amount", {{"uniform", {0.5, 1.5}}}}, {"sigma", 1.0}}, 2);
  add(5, "contrast", {{"factor", {{"uniform", {0.7, 1.3}}}}}, 2);
  return plan;
}

}  // namespace vesselaug
