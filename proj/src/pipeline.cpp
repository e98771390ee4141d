#include "semtok/pipeline.hpp"

#include <chrono>
#include <fstream>

#include "semtok/digest.hpp"
#include "semtok/dimreduce.hpp"
#include "semtok/error.hpp"

namespace semtok {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// configuration

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::ConfigError, message);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("field '") + key + "': " + e.what());
  }
}

std::vector<LexiconSource> parse_lexicons(const json& j, const fs::path& base) {
  std::vector<LexiconSource> out;
  if (!j.contains("lexicons")) return out;
  if (!j["lexicons"].is_array()) config_error("'lexicons' must be an array");
  for (const auto& item : j["lexicons"]) {
    if (item.is_string()) {
      out.push_back({resolve(base, item.get<std::string>()), LexiconFormat::PairTsv});
    } else if (item.is_object() && item.contains("path")) {
      out.push_back({resolve(base, item["path"].get<std::string>()),
                     parse_lexicon_format(get_or<std::string>(item, "format", "pair_tsv"))});
    } else {
      config_error("lexicon entries need a 'path'");
    }
  }
  return out;
}

TokenizerOptions parse_tokenizer(const json& j) {
  TokenizerOptions t;
  t.lowercase = get_or<bool>(j, "lowercase", false);
  return t;
}

std::string stage_name(const Stage& s) {
  return std::visit(
      [](const auto& st) -> std::string {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, DimReduceStage>) return "dimreduce";
        if constexpr (std::is_same_v<T, ClsaStage>) return "clsa";
        if constexpr (std::is_same_v<T, GroupStage>) return "group";
        return "pretrain";
      },
      s);
}

}  // namespace

PipelineConfig parse_pipeline_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) config_error("pipeline config must be a JSON object");
  PipelineConfig cfg;
  cfg.raw = j;

  const json* emb = j.contains("embeddings") ? &j["embeddings"] : nullptr;
  if (!emb) config_error("missing 'embeddings'");
  if (emb->is_string()) {
    cfg.embeddings = resolve(base_dir, emb->get<std::string>());
  } else if (emb->is_object() && emb->contains("path")) {
    cfg.embeddings = resolve(base_dir, (*emb)["path"].get<std::string>());
    cfg.format = parse_embedding_format(get_or<std::string>(*emb, "format", "w2v_text"));
  } else {
    config_error("'embeddings' must be a path or {path, format}");
  }
  if (j.contains("special_tokens"))
    cfg.load.special_tokens = get_or<std::vector<std::string>>(j, "special_tokens", {});
  cfg.load.unk_token = get_or<std::string>(j, "unk_token", cfg.load.unk_token);
  cfg.load.continuation_prefix =
      get_or<std::string>(j, "continuation_prefix", cfg.load.continuation_prefix);
  if (!j.contains("output_dir")) config_error("missing 'output_dir'");
  cfg.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  cfg.threads = get_or<std::size_t>(j, "threads", 1);

  if (!j.contains("stages") || !j["stages"].is_array()) config_error("missing 'stages' array");
  for (const auto& s : j["stages"]) {
    const auto type = get_or<std::string>(s, "type", "");
    cfg.stage_seeds.push_back(s.contains("seed") ? std::optional(get_or<std::uint64_t>(s, "seed", 0))
                                                 : std::nullopt);
    if (type == "dimreduce") {
      DimReduceStage st;
      st.d = get_or<std::size_t>(s, "d", 0);
      if (st.d == 0) config_error("dimreduce needs d >= 1");
      cfg.stages.emplace_back(st);
    } else if (type == "clsa") {
      ClsaStage st;
      st.clsa.temperature = get_or<double>(s, "temperature", st.clsa.temperature);
      st.clsa.learning_rate = get_or<double>(s, "learning_rate", st.clsa.learning_rate);
      st.clsa.batch_size = get_or<std::size_t>(s, "batch_size", st.clsa.batch_size);
      st.clsa.epochs = get_or<std::size_t>(s, "epochs", st.clsa.epochs);
      st.clsa.max_steps = get_or<std::size_t>(s, "max_steps", 0);
      st.clsa.symmetric_loss = get_or<bool>(s, "symmetric_loss", true);
      st.lexicons = parse_lexicons(s, base_dir);
      st.roundtrip = get_or<bool>(s, "roundtrip", false);
      st.dedup = get_or<bool>(s, "dedup", false);
      st.tokenizer = parse_tokenizer(s);
      if (st.lexicons.empty() && !st.roundtrip) config_error("clsa needs lexicons or roundtrip");
      if (!(st.clsa.temperature > 0.0)) config_error("clsa temperature must be > 0");
      if (!(st.clsa.learning_rate > 0.0)) config_error("clsa learning_rate must be > 0");
      if (st.clsa.batch_size < 2) config_error("clsa batch_size must be >= 2");
      cfg.stages.emplace_back(std::move(st));
    } else if (type == "group") {
      GroupStage st;
      st.method = parse_grouping_method(get_or<std::string>(s, "method", "kmeans"));
      if (s.contains("ratio")) st.ratio = get_or<double>(s, "ratio", 0.0);
      if (s.contains("k")) st.k = get_or<std::size_t>(s, "k", 0);
      st.kmeans.metric = parse_metric(get_or<std::string>(s, "metric", "cosine"));
      st.kmeans.max_iters = get_or<std::size_t>(s, "max_iters", st.kmeans.max_iters);
      st.kmeans.rel_tol = get_or<double>(s, "rel_tol", st.kmeans.rel_tol);
      st.kmeans.n_init = get_or<std::size_t>(s, "n_init", st.kmeans.n_init);
      if (st.kmeans.n_init < 1) config_error("group n_init must be >= 1");
      st.lexicons = parse_lexicons(s, base_dir);
      st.tokenizer = parse_tokenizer(s);
      if (st.ratio && st.k) config_error("group takes either 'ratio' or 'k', not both");
      if (st.ratio && (!(*st.ratio > 0.0) || *st.ratio > 1.0))
        config_error("group ratio must lie in (0, 1]");
      if ((st.method == GroupingMethod::KMeans || st.method == GroupingMethod::FirstK) &&
          !st.ratio && !st.k)
        config_error("group needs 'ratio' or 'k'");
      if (st.method == GroupingMethod::Lexicon && st.lexicons.empty())
        config_error("lexicon grouping needs lexicons");
      cfg.stages.emplace_back(std::move(st));
    } else if (type == "pretrain") {
      cfg.stages.emplace_back(PretrainStage{});
    } else {
      config_error("unknown stage type '" + type + "'");
    }
  }
  validate_pipeline(cfg);
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  return parse_pipeline_config(j, path.parent_path());
}

void validate_pipeline(const PipelineConfig& cfg) {
  if (cfg.stages.empty()) config_error("pipeline has no stages");
  std::optional<std::size_t> group_at;
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const auto& s = cfg.stages[i];
    if (std::holds_alternative<GroupStage>(s)) {
      if (group_at) config_error("at most one grouping stage is allowed");
      group_at = i;
    } else if (group_at && !std::holds_alternative<PretrainStage>(s)) {
      config_error("stage " + std::to_string(i + 1) + " (" + stage_name(s) +
                   ") follows the grouping stage; grouping must come last");
    }
  }
}

// ---------------------------------------------------------------------------
// execution

namespace {

json file_entry(const fs::path& path, const fs::path& root) {
  return {{"path", fs::relative(path, root).generic_string()}, {"sha256", sha256_file(path)}};
}

json input_entry(const fs::path& path) {
  return {{"path", fs::absolute(path).lexically_normal().generic_string()},
          {"sha256", sha256_file(path)}};
}

std::vector<fs::path> save_stage_embeddings(const Vocabulary& vocab, const EmbeddingMatrix& emb,
                                            const fs::path& path) {
  save_embeddings(vocab, emb, path, EmbeddingFormat::SembBinary);
  return {path, vocab_sidecar_path(path)};
}

std::vector<IdPair> training_pairs(const ClsaStage& st, const Vocabulary& vocab,
                                   const EmbeddingMatrix& emb, json& details) {
  std::vector<LexiconPair> words;
  json sources = json::array();
  for (const auto& lex : st.lexicons) {
    auto ingested = ingest_lexicon(lex.path, lex.format);
    auto expanded = expand_concepts(ingested.concepts);
    const std::size_t count = ingested.pairs.size() + expanded.size();
    words.insert(words.end(), ingested.pairs.begin(), ingested.pairs.end());
    words.insert(words.end(), expanded.begin(), expanded.end());
    sources.push_back({{"path", lex.path.generic_string()},
                       {"format", lex.format == LexiconFormat::PairTsv ? "pair_tsv" : "concept_tsv"},
                       {"pairs", count}});
  }
  if (st.dedup) words = dedup_pairs(words);
  auto filtered = filter_single_subword(words, vocab, st.tokenizer);
  details["lexicon_sources"] = sources;
  details["filter"] = {{"total", filtered.report.total},
                       {"kept", filtered.report.kept},
                       {"multi_piece", filtered.report.multi_piece},
                       {"unknown", filtered.report.unknown},
                       {"invalid_word", filtered.report.invalid_word},
                       {"coverage", filtered.report.coverage_percent()}};

  std::vector<IdPair> pairs = std::move(filtered.kept);
  if (st.roundtrip) {
    std::vector<TokenId> candidates;
    for (std::size_t i = 0; i < vocab.size(); ++i)
      if (!vocab.is_special(static_cast<TokenId>(i))) candidates.push_back(static_cast<TokenId>(i));
    auto mined = mine_roundtrip(emb, candidates);
    details["roundtrip_pairs"] = mined.size();
    pairs.insert(pairs.end(), mined.begin(), mined.end());
  }
  details["training_pairs"] = pairs.size();
  return pairs;
}

}  // namespace

RunManifest run_pipeline(const PipelineConfig& cfg) {
  validate_pipeline(cfg);
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  fs::create_directories(cfg.output_dir);
  const fs::path root = cfg.output_dir;

  RunManifest manifest;
  manifest.path = root / "manifest.json";
  json& m = manifest.json;
  m["tool"] = "semtok";
  m["manifest_version"] = 1;
  m["config"] = cfg.raw;
  m["seed"] = cfg.seed;
  m["stages"] = json::array();
  m["outputs"] = json::array();

  auto write_manifest = [&] {
    m["timing"]["total_seconds"] =
        std::chrono::duration<double>(clock::now() - t0).count();
    std::ofstream out(manifest.path, std::ios::binary | std::ios::trunc);
    out << m.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::Io, "cannot write " + manifest.path.string());
  };
  auto record_outputs = [&](const std::vector<fs::path>& files, json& stage) {
    for (const auto& f : files) {
      json e = file_entry(f, root);
      stage["outputs"].push_back(e["path"]);
      m["outputs"].push_back(std::move(e));
    }
  };

  std::string current = "load";
  try {
    json inputs = json::array();
    inputs.push_back(input_entry(cfg.embeddings));
    if (cfg.format == EmbeddingFormat::SembBinary)
      inputs.push_back(input_entry(vocab_sidecar_path(cfg.embeddings)));
    for (const auto& s : cfg.stages) {
      const std::vector<LexiconSource>* lex = nullptr;
      if (auto* c = std::get_if<ClsaStage>(&s)) lex = &c->lexicons;
      if (auto* g = std::get_if<GroupStage>(&s)) lex = &g->lexicons;
      if (lex)
        for (const auto& l : *lex) inputs.push_back(input_entry(l.path));
    }
    m["inputs"] = inputs;

    auto [vocab, emb] = load_embeddings(cfg.embeddings, cfg.format, cfg.load);
    m["input_shape"] = {emb.rows(), emb.dim()};
    bool grouped = false;

    for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
      const auto& stage = cfg.stages[i];
      current = stage_name(stage);
      const auto ts = clock::now();
      const std::uint64_t seed = cfg.stage_seeds.size() > i && cfg.stage_seeds[i]
                                     ? *cfg.stage_seeds[i]
                                     : cfg.seed;
      const std::string prefix = "stage" + std::to_string(i + 1) + "_" + current;
      json rec = {{"index", i + 1}, {"type", current}, {"outputs", json::array()}};

      if (auto* dr = std::get_if<DimReduceStage>(&stage)) {
        emb = truncate(emb, dr->d);
        rec["d"] = dr->d;
        record_outputs(save_stage_embeddings(vocab, emb, root / (prefix + ".semb")), rec);
      } else if (auto* cl = std::get_if<ClsaStage>(&stage)) {
        json details;
        auto pairs = training_pairs(*cl, vocab, emb, details);
        ClsaConfig ccfg = cl->clsa;
        ccfg.seed = seed;
        rec["seed"] = seed;
        rec["details"] = details;
        if (pairs.empty()) throw Error(ErrorCode::InvalidArgument, "no pair survived filtering");
        auto trained = train_clsa(emb, pairs, ccfg);
        emb = std::move(trained.embeddings);
        rec["steps"] = trained.trace.size();
        if (!trained.trace.empty()) {
          rec["first_loss"] = trained.trace.front().loss;
          rec["last_loss"] = trained.trace.back().loss;
        }
        const fs::path pairs_path = root / (prefix + "_pairs.tsv");
        const fs::path trace_path = root / (prefix + "_loss.csv");
        write_id_pairs(pairs, vocab, pairs_path);
        write_loss_trace(trained.trace, trace_path);
        auto files = save_stage_embeddings(vocab, emb, root / (prefix + ".semb"));
        files.push_back(pairs_path);
        files.push_back(trace_path);
        record_outputs(files, rec);
      } else if (auto* gr = std::get_if<GroupStage>(&stage)) {
        GroupingMap map;
        if (gr->method == GroupingMethod::KMeans) {
          KMeansConfig kc = gr->kmeans;
          kc.seed = seed;
          kc.threads = cfg.threads;
          kc.k = gr->k ? *gr->k : count_for_ratio(vocab.size(), *gr->ratio);
          auto result = spherical_kmeans(emb, kc, vocab.special_ids());
          map = std::move(result.map);
          rec["seed"] = seed;
          rec["k"] = kc.k;
          rec["metric"] = metric_name(kc.metric);
          rec["n_init"] = kc.n_init;
          rec["iterations"] = result.iterations;
          rec["converged"] = result.converged;
          rec["objective_trace"] = result.objective_trace;
        } else if (gr->method == GroupingMethod::FirstK) {
          const std::size_t k = gr->k ? *gr->k : count_for_ratio(vocab.size(), *gr->ratio);
          map = first_k(vocab, k);
          rec["k"] = k;
        } else if (gr->method == GroupingMethod::Lexicon) {
          std::vector<LexiconPair> words;
          for (const auto& lex : gr->lexicons) {
            auto ingested = ingest_lexicon(lex.path, lex.format);
            auto expanded = expand_concepts(ingested.concepts);
            words.insert(words.end(), ingested.pairs.begin(), ingested.pairs.end());
            words.insert(words.end(), expanded.begin(), expanded.end());
          }
          auto result = lexicon_group(vocab, words, gr->tokenizer);
          map = std::move(result.map);
          rec["filter_summary"] = result.report.summary();
        } else {
          map = identity_map(vocab.size());
        }
        if (auto issues = validate_map(map, &vocab); !issues.empty())
          throw Error(ErrorCode::NumericFailure, "grouping map invalid: " + issues.front());

        const auto merged = merge_embeddings(emb, map);
        const auto ratio = grouping_ratio(map);
        manifest.ratio = ratio;
        m["grouping_ratio"] = {
            {"semantic", ratio.semantic}, {"total", ratio.total}, {"value", ratio.value}};
        m["final_shape"] = {merged.matrix.rows(), merged.matrix.dim()};
        rec["method"] = grouping_method_name(map.method);

        const fs::path map_path = root / "grouping.tsv";
        write_grouping_map(map, vocab, map_path);
        auto files = save_stage_embeddings(semantic_vocabulary(map), merged.matrix,
                                           root / "semantic.semb");
        files.insert(files.begin(), map_path);
        record_outputs(files, rec);
        grouped = true;
      } else {
        rec["status"] = "skipped";
        rec["note"] = "continual masked-LM pretraining is not performed by this tool";
      }
      rec["seconds"] = std::chrono::duration<double>(clock::now() - ts).count();
      m["stages"].push_back(std::move(rec));
    }

    if (!grouped) {
      current = "finalize";
      json rec = {{"type", "final"}, {"outputs", json::array()}};
      record_outputs(save_stage_embeddings(vocab, emb, root / "final.semb"), rec);
      m["final_shape"] = {emb.rows(), emb.dim()};
    }
    m["status"] = "ok";
    m["partial"] = false;
    manifest.ok = true;
    write_manifest();
    return manifest;
  } catch (const Error& e) {
    m["status"] = "failed";
    m["partial"] = true;
    m["failed_stage"] = current;
    m["error"] = e.what();
    write_manifest();
    throw Error(e.code(), "stage '" + current + "': " + e.what());
  }
}

std::vector<std::string> verify_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + manifest_path.string());
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedLine, manifest_path.string() + ": " + e.what());
  }
  std::vector<std::string> mismatches;
  const fs::path root = manifest_path.parent_path();
  auto check = [&](const json& entry, const fs::path& path) {
    const auto expected = entry.at("sha256").get<std::string>();
    if (!fs::exists(path)) {
      mismatches.push_back(path.generic_string() + ": missing");
    } else if (sha256_file(path) != expected) {
      mismatches.push_back(path.generic_string() + ": digest mismatch");
    }
  };
  for (const auto& e : m.value("outputs", json::array()))
    check(e, root / e.at("path").get<std::string>());
  for (const auto& e : m.value("inputs", json::array()))
    check(e, fs::path(e.at("path").get<std::string>()));
  return mismatches;
}

}  // namespace semtok
