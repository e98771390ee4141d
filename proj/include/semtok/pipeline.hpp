#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "semtok/alignment.hpp"
#include "semtok/embed_store.hpp"
#include "semtok/grouping.hpp"

namespace semtok {

struct LexiconSource {
  std::filesystem::path path;
  LexiconFormat format = LexiconFormat::PairTsv;
};

struct DimReduceStage {
  std::size_t d = 0;
};

struct ClsaStage {
  ClsaConfig clsa;
  std::vector<LexiconSource> lexicons;
  bool roundtrip = false;  // add mutual-nearest-neighbour pairs mined before training
  bool dedup = false;
  TokenizerOptions tokenizer;
};

struct GroupStage {
  GroupingMethod method = GroupingMethod::KMeans;
  std::optional<double> ratio;  // target r_G; k = ceil(ratio * |V|)
  std::optional<std::size_t> k;
  KMeansConfig kmeans;
  std::vector<LexiconSource> lexicons;  // lexicon method only
  TokenizerOptions tokenizer;
};

// Masked-LM continual pretraining is not performed; the stage only records its
// position so pipeline definitions keep their full shape.
struct PretrainStage {};

using Stage = std::variant<DimReduceStage, ClsaStage, GroupStage, PretrainStage>;

struct PipelineConfig {
  std::filesystem::path embeddings;
  EmbeddingFormat format = EmbeddingFormat::W2vText;
  LoadOptions load;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::vector<Stage> stages;
  std::vector<std::optional<std::uint64_t>> stage_seeds;  // per-stage override
  nlohmann::json raw;
};

// Relative paths are resolved against base_dir. Throws ConfigError.
PipelineConfig parse_pipeline_config(const nlohmann::json& json,
                                     const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Stage-order rules: at most one grouping stage, placed after every clsa and
// dimreduce stage. Throws ConfigError.
void validate_pipeline(const PipelineConfig& cfg);

struct RunManifest {
  nlohmann::json json;
  std::filesystem::path path;
  bool ok = false;
  std::optional<GroupingRatio> ratio;
};

// Runs the stages in order and writes every intermediate artifact plus
// manifest.json into cfg.output_dir. On a stage failure the manifest is still
// written (status "failed", partial outputs listed) and the error rethrown
// with the stage name attached.
RunManifest run_pipeline(const PipelineConfig& cfg);

// Recomputes every digest listed in a manifest; returns the mismatches.
std::vector<std::string> verify_manifest(const std::filesystem::path& manifest_path);

}  // namespace semtok
