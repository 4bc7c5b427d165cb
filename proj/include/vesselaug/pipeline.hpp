#pragma once

// Dataset expansion: N source samples -> N x (originals + sum of replicate
// counts) outputs, a line-delimited manifest describing every output, and
// replay of any manifest record.
//
// Directory layout (input and output): images/, masks/, fov/ holding PNGs
// with matching stems. fov/ is optional.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vesselaug/detail/digest.hpp"
#include "vesselaug/detail/parallel.hpp"
#include "vesselaug/image.hpp"
#include "vesselaug/plan.hpp"
#include "vesselaug/png_io.hpp"
#include "vesselaug/rng.hpp"

namespace vesselaug {

namespace fs = std::filesystem;

inline constexpr const char* kImagesDir = "images";
inline constexpr const char* kMasksDir = "masks";
inline constexpr const char* kFovDir = "fov";
inline constexpr const char* kManifestFile = "manifest.jsonl";

/// Sorted stems of images/*.png under `dir`.
inline std::vector<std::string> list_source_ids(const fs::path& dir) {
  const fs::path images = dir / kImagesDir;
  if (!fs::is_directory(images)) {
    throw IoError("source '" + dir.string() + "' has no " + kImagesDir + "/ directory");
  }
  std::set<std::string> stems;
  for (const auto& entry : fs::directory_iterator(images)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      stems.insert(entry.path().stem().string());
    }
  }
  return {stems.begin(), stems.end()};
}

inline Sample load_source(const fs::path& dir, const std::string& id,
                          ChannelPolicy channels = ChannelPolicy::rgb) {
  const std::string file = id + ".png";
  ImagePlane image = load_image(dir / kImagesDir / file);
  if (channels == ChannelPolicy::green) image = green_channel(image);
  const fs::path mask_path = dir / kMasksDir / file;
  if (!fs::exists(mask_path)) throw IoError("sample '" + id + "': missing vessel mask");
  BinaryMask vessels = load_mask(mask_path).mask;
  std::optional<BinaryMask> fov;
  const fs::path fov_path = dir / kFovDir / file;
  if (fs::exists(fov_path)) fov = load_mask(fov_path).mask;
  return Sample(std::move(image), std::move(vessels), std::move(fov), id);
}

inline void write_sample(const Sample& sample, const fs::path& out_dir, const std::string& stem) {
  const std::string file = stem + ".png";
  save_png(sample.image(), out_dir / kImagesDir / file);
  save_png(sample.vessels(), out_dir / kMasksDir / file);
  if (sample.fov()) save_png(*sample.fov(), out_dir / kFovDir / file);
}

/// SHA-256 over the dimensions and the exact 8-bit payloads written to disk.
inline std::string sample_checksum(const Sample& sample) {
  detail::Sha256 h;
  h.update_u64(static_cast<std::uint64_t>(sample.width()))
      .update_u64(static_cast<std::uint64_t>(sample.height()))
      .update_u64(static_cast<std::uint64_t>(sample.image().channels()));
  h.update(encode_bytes(sample.image()));
  h.update(encode_bytes(sample.vessels()));
  h.update_u64(sample.fov() ? 1 : 0);
  if (sample.fov()) h.update(encode_bytes(*sample.fov()));
  return h.hex();
}

struct ManifestRecord {
  std::string stem;
  std::string source_id;
  std::optional<int> entry;  // empty for an original copy
  int replicate = 0;
  std::vector<ResolvedStep> steps;
  std::string seed_digest;
  std::string checksum;

  json to_json() const {
    json steps_json = json::array();
    for (const auto& s : steps) steps_json.push_back({{"transform", s.transform}, {"params", s.params}});
    return {{"type", "record"},
            {"stem", stem},
            {"source", source_id},
            {"entry", entry ? json(*entry) : json(nullptr)},
            {"replicate", replicate},
            {"steps", std::move(steps_json)},
            {"seed", seed_digest},
            {"checksum", checksum}};
  }

  static ManifestRecord from_json(const json& j) {
    ManifestRecord r;
    r.stem = j.at("stem").get<std::string>();
    r.source_id = j.at("source").get<std::string>();
    if (!j.at("entry").is_null()) r.entry = j.at("entry").get<int>();
    r.replicate = j.at("replicate").get<int>();
    for (const auto& s : j.at("steps")) {
      r.steps.push_back({s.at("transform").get<std::string>(), s.at("params")});
    }
    r.seed_digest = j.value("seed", std::string());
    r.checksum = j.at("checksum").get<std::string>();
    return r;
  }
};

struct ManifestHeader {
  std::string plan_hash;
  std::uint64_t master_seed = kDefaultSeed;
  std::string engine_version{kEngineVersion};
  ChannelPolicy channels = ChannelPolicy::rgb;
  json plan;

  json to_json() const {
    return {{"type", "header"},
            {"plan_hash", plan_hash},
            {"master_seed", master_seed},
            {"engine_version", engine_version},
            {"channels", channels == ChannelPolicy::rgb ? "rgb" : "green"},
            {"plan", plan}};
  }

  static ManifestHeader from_json(const json& j) {
    ManifestHeader h;
    h.plan_hash = j.at("plan_hash").get<std::string>();
    h.master_seed = j.at("master_seed").get<std::uint64_t>();
    h.engine_version = j.at("engine_version").get<std::string>();
    h.channels = j.value("channels", std::string("rgb")) == "green" ? ChannelPolicy::green
                                                                     : ChannelPolicy::rgb;
    h.plan = j.value("plan", json());
    return h;
  }
};

struct Manifest {
  ManifestHeader header;
  std::vector<ManifestRecord> records;

  std::string serialize() const {
    std::string out = header.to_json().dump() + '\n';
    for (const auto& r : records) out += r.to_json().dump() + '\n';
    return out;
  }

  void write(const fs::path& path) const {
    fs::path tmp = path;
    tmp += ".tmp";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw IoError("cannot write manifest '" + path.string() + "'");
      os << serialize();
      if (!os) throw IoError("cannot write manifest '" + path.string() + "'");
    }
    fs::rename(tmp, path);
  }

  static Manifest read(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read manifest '" + path.string() + "'");
    Manifest m;
    bool have_header = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const json j = json::parse(line);
        const std::string type = j.at("type").get<std::string>();
        if (type == "header") {
          m.header = ManifestHeader::from_json(j);
          have_header = true;
        } else if (type == "record") {
          m.records.push_back(ManifestRecord::from_json(j));
        }
      } catch (const json::exception& ex) {
        throw DataError("manifest line " + std::to_string(line_no) + ": " + ex.what());
      }
    }
    if (!have_header) throw DataError("manifest '" + path.string() + "' has no header record");
    return m;
  }

  const ManifestRecord* find(std::string_view stem) const {
    for (const auto& r : records) {
      if (r.stem == stem) return &r;
    }
    return nullptr;
  }
};

/// Output stem for plan entry `entry`, replicate `replicate` of `source_id`.
inline std::string augmented_stem(int entry, int replicate, const std::string& source_id) {
  return "aug_" + std::to_string(entry) + "_" + std::to_string(replicate) + "_" + source_id;
}

/// Resolves and applies one plan entry to `source`. Step s draws from the
/// derived stream split by s, so chained steps never share draws.
inline std::pair<Sample, std::vector<ResolvedStep>> generate_output(const Sample& source,
                                                                    const PlanEntry& entry,
                                                                    const SeedSpec& spec) {
  const RandomStream root = derive_stream(spec);
  Sample current = source;
  std::vector<ResolvedStep> resolved;
  for (std::size_t s = 0; s < entry.steps.size(); ++s) {
    RandomStream rng = root.split(s);
    ResolvedStep step = resolve_step(entry.steps[s], current, rng);
    current = apply_steps(current, {step});
    resolved.push_back(std::move(step));
  }
  return {std::move(current), std::move(resolved)};
}

struct ExpandOptions {
  int threads = 1;
};

struct SampleFailure {
  std::string source_id;
  std::string stem;
  std::string message;
};

struct ExpandResult {
  Manifest manifest;
  fs::path manifest_path;
  std::vector<SampleFailure> failures;

  bool ok() const { return failures.empty(); }
};

/// Emits, for each source sample in sorted id order, the original (when
/// included) and one output per (entry, replicate). Output bytes depend only
/// on sources, plan and seed: every output owns its derived stream, so the
/// thread count affects wall time only. Failures are collected per output
/// with sample context; the manifest lists successful outputs only.
inline ExpandResult expand_dataset(const fs::path& source_dir, const AugmentationPlan& plan,
                                   const fs::path& out_dir, const ExpandOptions& options = {}) {
  plan.validate();
  const std::vector<std::string> ids = list_source_ids(source_dir);
  if (ids.empty()) throw DataError("source '" + source_dir.string() + "' contains no images");

  struct Job {
    std::size_t source;
    std::optional<int> entry;
    int replicate;
    std::string stem;
  };
  std::vector<Job> jobs;
  jobs.reserve(ids.size() * plan.outputs_per_source());
  for (std::size_t s = 0; s < ids.size(); ++s) {
    if (plan.include_originals) jobs.push_back({s, std::nullopt, 0, ids[s]});
    for (std::size_t e = 0; e < plan.entries.size(); ++e) {
      for (int r = 0; r < plan.entries[e].count; ++r) {
        jobs.push_back({s, static_cast<int>(e), r, augmented_stem(static_cast<int>(e), r, ids[s])});
      }
    }
  }
  std::set<std::string> seen;
  for (const auto& job : jobs) {
    if (!seen.insert(job.stem).second) {
      throw DataError("output collision: stem '" + job.stem + "' would be written twice");
    }
  }

  std::vector<std::optional<Sample>> sources(ids.size());
  std::vector<std::string> load_errors(ids.size());
  detail::parallel_for(ids.size(), options.threads, [&](std::size_t i) {
    try {
      sources[i] = load_source(source_dir, ids[i], plan.channels);
    } catch (const std::exception& ex) {
      load_errors[i] = ex.what();
    }
  });

  bool any_fov = false;
  for (const auto& s : sources) any_fov = any_fov || (s && s->fov());
  fs::create_directories(out_dir / kImagesDir);
  fs::create_directories(out_dir / kMasksDir);
  if (any_fov) fs::create_directories(out_dir / kFovDir);

  std::vector<std::optional<ManifestRecord>> records(jobs.size());
  std::vector<std::string> errors(jobs.size());
  detail::parallel_for(jobs.size(), options.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    if (!sources[job.source]) {
      errors[j] = "cannot load source: " + load_errors[job.source];
      return;
    }
    const Sample& source = *sources[job.source];
    try {
      ManifestRecord rec;
      rec.stem = job.stem;
      rec.source_id = ids[job.source];
      rec.entry = job.entry;
      rec.replicate = job.replicate;
      Sample output = source;
      if (job.entry) {
        const SeedSpec spec{plan.master_seed, ids[job.source], *job.entry, job.replicate};
        rec.seed_digest = detail::hex_u64(spec.key());
        auto [sample, steps] = generate_output(source, plan.entries[*job.entry], spec);
        output = std::move(sample);
        rec.steps = std::move(steps);
      }
      write_sample(output, out_dir, job.stem);
      rec.checksum = sample_checksum(output);
      records[j] = std::move(rec);
    } catch (const std::exception& ex) {
      errors[j] = ex.what();
    }
  });

  ExpandResult result;
  result.manifest.header.plan_hash = plan.hash();
  result.manifest.header.master_seed = plan.master_seed;
  result.manifest.header.channels = plan.channels;
  result.manifest.header.plan = plan.to_json();
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (records[j]) {
      result.manifest.records.push_back(std::move(*records[j]));
    } else {
      result.failures.push_back({ids[jobs[j].source], jobs[j].stem, errors[j]});
    }
  }
  result.manifest_path = out_dir / kManifestFile;
  result.manifest.write(result.manifest_path);
  return result;
}

struct ReplayResult {
  Sample sample;
  std::string checksum;
  bool matches = false;
  std::vector<std::string> warnings;
};

/// Regenerates a recorded output from its source using only the resolved
/// parameters in the record, and compares checksums.
inline ReplayResult replay(const ManifestRecord& record, const Sample& source,
                           const std::optional<ManifestHeader>& header = std::nullopt) {
  ReplayResult out;
  if (header && header->engine_version != kEngineVersion) {
    out.warnings.push_back("manifest written by " + header->engine_version + ", replaying with " +
                           std::string(kEngineVersion));
  }
  out.sample = apply_steps(source, record.steps);
  out.checksum = sample_checksum(out.sample);
  out.matches = out.checksum == record.checksum;
  if (!out.matches) {
    out.warnings.push_back("checksum mismatch for '" + record.stem + "': recorded " +
                           record.checksum + ", regenerated " + out.checksum);
  }
  return out;
}

inline ReplayResult replay(const ManifestRecord& record, const fs::path& source_dir,
                           const ManifestHeader& header) {
  const fs::path image = source_dir / kImagesDir / (record.source_id + ".png");
  if (!fs::exists(image)) {
    throw IoError("replay: source '" + record.source_id + "' not found under '" +
                  source_dir.string() + "'");
  }
  return replay(record, load_source(source_dir, record.source_id, header.channels), header);
}

}  // namespace vesselaug
