// semtok: command-line front end for semantic-token vocabulary compression.
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric error.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "semtok/alignment.hpp"
#include "semtok/dimreduce.hpp"
#include "semtok/embed_store.hpp"
#include "semtok/error.hpp"
#include "semtok/grouping.hpp"
#include "semtok/inspect.hpp"
#include "semtok/pipeline.hpp"
#include "semtok/tokenizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace semtok;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct InputArgs {
  std::string path;
  std::string format = "w2v_text";
  std::vector<std::string> specials = kDefaultSpecialTokens;
  std::string unk = std::string(kDefaultUnkToken);
  std::string prefix = std::string(kDefaultContinuationPrefix);

  void add_to(CLI::App* app) {
    app->add_option("-i,--input", path, "embedding file")->required();
    app->add_option("-f,--format", format, "w2v_text | semb_binary");
    app->add_option("--specials", specials, "special token strings");
    app->add_option("--unk", unk, "unknown-token string");
    app->add_option("--prefix", prefix, "continuation prefix");
  }

  LoadedEmbeddings load() const {
    LoadOptions opt;
    opt.special_tokens = specials;
    opt.unk_token = unk;
    opt.continuation_prefix = prefix;
    return load_embeddings(path, parse_embedding_format(format), opt);
  }
};

struct LexiconArgs {
  std::vector<std::string> pair_files;
  std::vector<std::string> concept_files;
  bool lenient = false;
  bool dedup = false;
  bool lowercase = false;

  void add_to(CLI::App* app) {
    app->add_option("--lexicon", pair_files, "pair_tsv lexicon (repeatable)");
    app->add_option("--concepts", concept_files, "concept_tsv list (repeatable)");
    app->add_flag("--lenient", lenient, "skip malformed lines instead of failing");
    app->add_flag("--dedup", dedup, "collapse repeated pairs");
    app->add_flag("--lowercase", lowercase, "ASCII-lowercase words before lookup");
  }

  std::vector<LexiconPair> read(json* sources = nullptr) const {
    std::vector<LexiconPair> out;
    auto take = [&](const std::string& path, LexiconFormat format) {
      auto ingested = ingest_lexicon(path, format, !lenient);
      auto expanded = expand_concepts(ingested.concepts);
      for (const auto& e : ingested.skipped)
        std::cerr << fmt::format("warning: {}:{}: {}\n", path, e.line, e.message);
      if (sources)
        sources->push_back({{"path", path},
                            {"format", format == LexiconFormat::PairTsv ? "pair_tsv" : "concept_tsv"},
                            {"pairs", ingested.pairs.size() + expanded.size()},
                            {"skipped_lines", ingested.skipped.size()}});
      out.insert(out.end(), ingested.pairs.begin(), ingested.pairs.end());
      out.insert(out.end(), expanded.begin(), expanded.end());
    };
    for (const auto& p : pair_files) take(p, LexiconFormat::PairTsv);
    for (const auto& p : concept_files) take(p, LexiconFormat::ConceptTsv);
    return dedup ? dedup_pairs(out) : out;
  }

  TokenizerOptions tokenizer() const {
    TokenizerOptions t;
    t.lowercase = lowercase;
    return t;
  }
};

struct GroupOutputArgs {
  std::string map_path;
  std::string emb_path;
  std::string emb_format = "semb_binary";
  std::string labels_path;

  void add_to(CLI::App* app) {
    app->add_option("--out-map", map_path, "grouping map TSV")->required();
    app->add_option("--out-emb", emb_path, "merged semantic embeddings");
    app->add_option("--out-format", emb_format, "w2v_text | semb_binary");
    app->add_option("--labels", labels_path, "one label per semantic id, replacing <SEM_g>");
  }

  void write(const GroupingMap& map, const Vocabulary& vocab, const EmbeddingMatrix& emb) const {
    write_grouping_map(map, vocab, map_path);
    if (emb_path.empty()) return;
    std::vector<std::string> labels;
    if (!labels_path.empty()) {
      std::ifstream in(labels_path);
      if (!in) throw Error(ErrorCode::Io, "cannot open " + labels_path);
      for (std::string line; std::getline(in, line);) labels.push_back(line);
    }
    auto merged = merge_embeddings(emb, map);
    save_embeddings(semantic_vocabulary(map, labels), merged.matrix, emb_path,
                    parse_embedding_format(emb_format));
  }
};

void print_ratio(const GroupingMap& map) {
  auto r = grouping_ratio(map);
  std::cout << fmt::format("|V|={} |V'|={} r_G={:.6f}\n", r.total, r.semantic, r.value);
}

json report_json(const ClusterReport& r) {
  json members = json::array();
  for (const auto& [id, tok] : r.members) members.push_back({{"id", id}, {"token", tok}});
  json j = {{"semantic_id", r.semantic_id}, {"size", r.size}, {"members", members}};
  j["label"] = r.label ? json(*r.label) : json(nullptr);
  return j;
}

void print_report(const ClusterReport& r) {
  std::cout << fmt::format("group {} size {}", r.semantic_id, r.size);
  if (r.label) std::cout << " label " << *r.label;
  std::cout << '\n';
  for (const auto& [id, tok] : r.members) std::cout << fmt::format("  {}\t{}\n", id, tok);
}

// Vocabulary rebuilt from the token column of a grouping map file.
Vocabulary vocab_from_map(const LoadedGroupingMap& loaded, const std::string& unk,
                          const std::string& prefix) {
  Vocabulary vocab(loaded.tokens, prefix);
  vocab.mark_specials(kDefaultSpecialTokens, unk);
  return vocab;
}

std::vector<std::pair<double, double>> read_two_column_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::vector<std::pair<double, double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorCode::MalformedLine, path + ":" + std::to_string(lineno));
    try {
      std::size_t used_x = 0, used_y = 0;
      const std::string xs = line.substr(0, comma), ys = line.substr(comma + 1);
      double x = std::stod(xs, &used_x), y = std::stod(ys, &used_y);
      rows.emplace_back(x, y);
    } catch (const std::exception&) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw Error(ErrorCode::MalformedLine, path + ":" + std::to_string(lineno));
    }
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semtok: merge semantically similar subwords into shared semantic tokens"};
  app.require_subcommand(1);

  // run -------------------------------------------------------------------
  std::string config_path;
  auto* run = app.add_subcommand("run", "run a pipeline described by a JSON config");
  run->add_option("-c,--config", config_path, "pipeline config")->required();

  // group -----------------------------------------------------------------
  InputArgs group_in;
  GroupOutputArgs group_out;
  KMeansConfig kcfg;
  std::string metric = "cosine";
  double group_ratio = 0.0;
  auto* group = app.add_subcommand("group", "k-means semantic grouping");
  group_in.add_to(group);
  group_out.add_to(group);
  auto* k_opt = group->add_option("-k,--k", kcfg.k, "number of clusters");
  auto* r_opt = group->add_option("-r,--ratio", group_ratio, "target grouping ratio in (0,1]");
  k_opt->excludes(r_opt);
  group->add_option("--metric", metric, "cosine | euclidean");
  group->add_option("--seed", kcfg.seed, "random seed");
  group->add_option("--max-iters", kcfg.max_iters, "iteration cap");
  group->add_option("--rel-tol", kcfg.rel_tol, "relative objective tolerance");
  group->add_option("--threads", kcfg.threads, "assignment workers");
  group->add_option("--n-init", kcfg.n_init, "independent seedings, best objective kept");

  // firstk ----------------------------------------------------------------
  InputArgs fk_in;
  GroupOutputArgs fk_out;
  std::size_t fk_k = 0;
  double fk_ratio = 0.0;
  auto* firstk = app.add_subcommand("firstk", "first-k baseline grouping");
  fk_in.add_to(firstk);
  fk_out.add_to(firstk);
  auto* fk_k_opt = firstk->add_option("-k,--k", fk_k, "subwords kept");
  auto* fk_r_opt = firstk->add_option("-r,--ratio", fk_ratio, "kept fraction of |V|");
  fk_k_opt->excludes(fk_r_opt);

  // lexicon-group ---------------------------------------------------------
  InputArgs lg_in;
  GroupOutputArgs lg_out;
  LexiconArgs lg_lex;
  auto* lexgroup = app.add_subcommand("lexicon-group", "group subwords linked by lexicon pairs");
  lg_in.add_to(lexgroup);
  lg_out.add_to(lexgroup);
  lg_lex.add_to(lexgroup);

  // align -----------------------------------------------------------------
  InputArgs al_in;
  LexiconArgs al_lex;
  ClsaConfig ccfg;
  bool al_roundtrip = false;
  std::string al_out, al_out_format = "semb_binary", al_trace, al_manifest;
  auto* align = app.add_subcommand("align", "cross-lingual subword alignment (InfoNCE)");
  al_in.add_to(align);
  al_lex.add_to(align);
  align->add_flag("--roundtrip", al_roundtrip, "add mutual nearest-neighbour pairs");
  align->add_option("--temperature", ccfg.temperature, "softmax temperature");
  align->add_option("--lr", ccfg.learning_rate, "SGD learning rate");
  align->add_option("--batch-size", ccfg.batch_size, "pairs per batch");
  align->add_option("--epochs", ccfg.epochs, "passes over the pairs");
  align->add_option("--max-steps", ccfg.max_steps, "cap on SGD steps (0 = none)");
  align->add_option("--seed", ccfg.seed, "shuffle seed");
  align->add_option("-o,--output", al_out, "aligned embeddings")->required();
  align->add_option("--out-format", al_out_format, "w2v_text | semb_binary");
  align->add_option("--loss-trace", al_trace, "CSV step,loss");
  align->add_option("--manifest", al_manifest, "JSON run record");

  // mine-roundtrip ---------------------------------------------------------
  InputArgs mr_in;
  std::string mr_out;
  auto* mine = app.add_subcommand("mine-roundtrip", "mutual nearest-neighbour pairs");
  mr_in.add_to(mine);
  mine->add_option("-o,--output", mr_out, "pairs TSV (stdout if omitted)");

  // reduce-dim ------------------------------------------------------------
  InputArgs rd_in;
  std::size_t rd_d = 0, rd_pad = 0;
  std::string rd_out, rd_out_format = "semb_binary";
  auto* reduce = app.add_subcommand("reduce-dim", "keep the leading d dimensions");
  rd_in.add_to(reduce);
  reduce->add_option("-d,--d", rd_d, "dimensions kept")->required();
  reduce->add_option("--pad-to", rd_pad, "zero-pad back to this dimension");
  reduce->add_option("-o,--output", rd_out, "output embeddings")->required();
  reduce->add_option("--out-format", rd_out_format, "w2v_text | semb_binary");

  // remap -----------------------------------------------------------------
  std::string rm_map, rm_text, rm_unk = std::string(kDefaultUnkToken),
                               rm_prefix = std::string(kDefaultContinuationPrefix);
  bool rm_lower = false, rm_json = false;
  auto* remap = app.add_subcommand("remap", "tokenize text and map subword ids to semantic ids");
  remap->add_option("-m,--map", rm_map, "grouping map TSV")->required();
  remap->add_option("-t,--text", rm_text, "text (stdin if omitted)");
  remap->add_option("--unk", rm_unk, "unknown-token string");
  remap->add_option("--prefix", rm_prefix, "continuation prefix");
  remap->add_flag("--lowercase", rm_lower, "ASCII-lowercase before lookup");
  remap->add_flag("--json", rm_json, "JSON output");

  // inspect ---------------------------------------------------------------
  std::string in_map, in_emb, in_emb_format = "w2v_text", in_token;
  std::vector<TokenId> in_groups;
  bool in_all = false, in_json = false;
  auto* inspect = app.add_subcommand("inspect", "show grouped subwords");
  inspect->add_option("-m,--map", in_map, "grouping map TSV")->required();
  inspect->add_option("-e,--embeddings", in_emb, "embeddings for nearest-to-mean labels");
  inspect->add_option("--emb-format", in_emb_format, "w2v_text | semb_binary");
  inspect->add_option("--token", in_token, "show the group of this token");
  inspect->add_option("--group", in_groups, "semantic ids to show");
  inspect->add_flag("--all", in_all, "show every group");
  inspect->add_flag("--json", in_json, "JSON output");

  // stats -----------------------------------------------------------------
  std::string st_map;
  auto* stats = app.add_subcommand("stats", "cluster size statistics as JSON");
  stats->add_option("-m,--map", st_map, "grouping map TSV")->required();

  // corr ------------------------------------------------------------------
  std::string co_csv;
  std::size_t co_perms = 0;
  std::uint64_t co_seed = 0;
  bool co_exhaustive = false;
  auto* corr = app.add_subcommand("corr", "Pearson correlation with one-tailed p");
  corr->add_option("csv", co_csv, "two-column CSV")->required();
  corr->add_option("--permutations", co_perms, "sampled permutation cross-check");
  corr->add_option("--seed", co_seed, "permutation seed");
  corr->add_flag("--exhaustive", co_exhaustive, "enumerate all permutations (n <= 12)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      auto cfg = load_pipeline_config(config_path);
      auto manifest = run_pipeline(cfg);
      std::cout << "manifest: " << manifest.path.string() << '\n';
      if (manifest.ratio)
        std::cout << fmt::format("|V|={} |V'|={} r_G={:.6f}\n", manifest.ratio->total,
                                 manifest.ratio->semantic, manifest.ratio->value);
      if (auto bad = verify_manifest(manifest.path); !bad.empty()) {
        for (const auto& b : bad) std::cerr << b << '\n';
        return kExitData;
      }
    } else if (*group) {
      auto [vocab, emb] = group_in.load();
      if (*r_opt) kcfg.k = count_for_ratio(vocab.size(), group_ratio);
      else if (!*k_opt) throw Error(ErrorCode::ConfigError, "give --k or --ratio");
      kcfg.metric = parse_metric(metric);
      auto result = spherical_kmeans(emb, kcfg, vocab.special_ids());
      group_out.write(result.map, vocab, emb);
      std::cout << fmt::format("iterations {} converged {} objective {}\n", result.iterations,
                               result.converged, result.objective_trace.back());
      print_ratio(result.map);
    } else if (*firstk) {
      auto [vocab, emb] = fk_in.load();
      std::size_t k = fk_k;
      if (*fk_r_opt) k = count_for_ratio(vocab.size(), fk_ratio);
      else if (!*fk_k_opt) throw Error(ErrorCode::ConfigError, "give --k or --ratio");
      auto map = first_k(vocab, k);
      fk_out.write(map, vocab, emb);
      print_ratio(map);
    } else if (*lexgroup) {
      auto [vocab, emb] = lg_in.load();
      auto pairs = lg_lex.read();
      auto result = lexicon_group(vocab, pairs, lg_lex.tokenizer());
      lg_out.write(result.map, vocab, emb);
      std::cout << result.report.summary() << '\n';
      if (result.special_dropped)
        std::cout << result.special_dropped << " pairs dropped for touching special tokens\n";
      print_ratio(result.map);
    } else if (*align) {
      auto [vocab, emb] = al_in.load();
      json sources = json::array();
      auto words = al_lex.read(&sources);
      auto filtered = filter_single_subword(words, vocab, al_lex.tokenizer());
      std::cout << filtered.report.summary() << '\n';
      auto pairs = filtered.kept;
      std::size_t mined = 0;
      if (al_roundtrip) {
        std::vector<TokenId> candidates;
        for (std::size_t i = 0; i < vocab.size(); ++i)
          if (!vocab.is_special(static_cast<TokenId>(i)))
            candidates.push_back(static_cast<TokenId>(i));
        auto rt = mine_roundtrip(emb, candidates);
        mined = rt.size();
        pairs.insert(pairs.end(), rt.begin(), rt.end());
      }
      if (pairs.empty()) throw Error(ErrorCode::InvalidArgument, "no training pairs survived");
      auto result = train_clsa(emb, pairs, ccfg);
      save_embeddings(vocab, result.embeddings, al_out, parse_embedding_format(al_out_format));
      if (!al_trace.empty()) write_loss_trace(result.trace, al_trace);
      if (!result.trace.empty())
        std::cout << fmt::format("steps {} loss {:.6f} -> {:.6f}\n", result.trace.size(),
                                 result.trace.front().loss, result.trace.back().loss);
      if (!al_manifest.empty()) {
        json m = {{"command", "align"},
                  {"input", al_in.path},
                  {"lexicons", sources},
                  {"roundtrip", al_roundtrip},
                  {"roundtrip_pairs", mined},
                  {"dedup", al_lex.dedup},
                  {"training_pairs", pairs.size()},
                  {"coverage", filtered.report.coverage_percent()},
                  {"config",
                   {{"temperature", ccfg.temperature},
                    {"learning_rate", ccfg.learning_rate},
                    {"batch_size", ccfg.batch_size},
                    {"epochs", ccfg.epochs},
                    {"max_steps", ccfg.max_steps},
                    {"seed", ccfg.seed},
                    {"symmetric_loss", ccfg.symmetric_loss}}},
                  {"steps", result.trace.size()}};
        std::ofstream(al_manifest) << m.dump(2) << '\n';
      }
    } else if (*mine) {
      auto [vocab, emb] = mr_in.load();
      std::vector<TokenId> candidates;
      for (std::size_t i = 0; i < vocab.size(); ++i)
        if (!vocab.is_special(static_cast<TokenId>(i))) candidates.push_back(static_cast<TokenId>(i));
      auto pairs = mine_roundtrip(emb, candidates);
      if (mr_out.empty()) {
        for (const auto& p : pairs)
          std::cout << p.a << '\t' << p.b << '\t' << vocab.token(p.a) << '\t' << vocab.token(p.b)
                    << '\n';
      } else {
        write_id_pairs(pairs, vocab, mr_out);
        std::cout << pairs.size() << " round-trip pairs\n";
      }
    } else if (*reduce) {
      auto [vocab, emb] = rd_in.load();
      auto out = truncate(emb, rd_d);
      if (rd_pad) out = zero_pad(out, rd_pad);
      save_embeddings(vocab, out, rd_out, parse_embedding_format(rd_out_format));
      std::cout << fmt::format("{} x {} -> {} x {}\n", emb.rows(), emb.dim(), out.rows(), out.dim());
    } else if (*remap) {
      auto loaded = read_grouping_map(rm_map);
      auto vocab = vocab_from_map(loaded, rm_unk, rm_prefix);
      if (rm_text.empty())
        rm_text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
      TokenizerOptions opt;
      opt.lowercase = rm_lower;
      auto enc = encode(rm_text, vocab, opt);
      auto sem = remap_ids(enc.ids, loaded.map);
      if (rm_json) {
        json out = json::array();
        for (std::size_t i = 0; i < enc.ids.size(); ++i)
          out.push_back({{"piece", rm_text.substr(enc.offsets[i].begin,
                                                  enc.offsets[i].end - enc.offsets[i].begin)},
                         {"subword_id", enc.ids[i]},
                         {"token", vocab.token(enc.ids[i])},
                         {"semantic_id", sem[i]}});
        std::cout << out.dump(2) << '\n';
      } else {
        for (std::size_t i = 0; i < enc.ids.size(); ++i)
          std::cout << fmt::format("{}\t{}\t{}\n", vocab.token(enc.ids[i]), enc.ids[i], sem[i]);
      }
    } else if (*inspect) {
      auto loaded = read_grouping_map(in_map);
      auto vocab = vocab_from_map(loaded, std::string(kDefaultUnkToken),
                                  std::string(kDefaultContinuationPrefix));
      std::optional<LoadedEmbeddings> emb;
      if (!in_emb.empty()) emb = load_embeddings(in_emb, parse_embedding_format(in_emb_format));
      const EmbeddingMatrix* matrix = emb ? &emb->matrix : nullptr;

      std::vector<ClusterReport> reports;
      if (!in_token.empty()) reports.push_back(find_token(loaded.map, vocab, in_token, matrix).report);
      for (TokenId g : in_groups) reports.push_back(cluster_members(loaded.map, vocab, g, matrix));
      if (in_all) reports = all_cluster_reports(loaded.map, vocab, matrix);
      if (reports.empty()) throw Error(ErrorCode::ConfigError, "give --token, --group or --all");
      if (in_json) {
        json out = json::array();
        for (const auto& r : reports) out.push_back(report_json(r));
        std::cout << out.dump(2) << '\n';
      } else {
        for (const auto& r : reports) print_report(r);
      }
    } else if (*stats) {
      auto loaded = read_grouping_map(st_map);
      auto s = cluster_stats(loaded.map);
      json hist = json::object();
      for (const auto& [size, count] : s.size_histogram) hist[std::to_string(size)] = count;
      json out = {{"subwords", s.ratio.total},     {"groups", s.groups},
                  {"singletons", s.singletons},   {"max_size", s.max_size},
                  {"grouping_ratio", s.ratio.value}, {"size_histogram", hist}};
      std::cout << out.dump(2) << '\n';
    } else if (*corr) {
      auto rows = read_two_column_csv(co_csv);
      std::vector<double> xs, ys;
      for (const auto& [x, y] : rows) {
        xs.push_back(x);
        ys.push_back(y);
      }
      auto r = pearson(xs, ys);
      json out = {{"n", r.n}, {"rho", r.rho}, {"t", r.t}, {"p_one_tail", r.p_one_tail}};
      if (co_exhaustive) {
        auto p = permutation_p_exhaustive(xs, ys);
        out["permutation"] = {{"mode", "exhaustive"}, {"p", p.p}, {"permutations", p.permutations},
                              {"standard_error", p.standard_error}};
      } else if (co_perms > 0) {
        auto p = permutation_p_sampled(xs, ys, co_perms, co_seed);
        out["permutation"] = {{"mode", "sampled"}, {"seed", co_seed}, {"p", p.p},
                              {"permutations", p.permutations}, {"standard_error", p.standard_error}};
      }
      std::cout << out.dump(2) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (error_category(e.code())) {
      case ErrorCategory::Config: return kExitConfig;
      case ErrorCategory::Data: return kExitData;
      case ErrorCategory::Numeric: return kExitNumeric;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
