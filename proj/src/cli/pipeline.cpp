// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "fixv2w/candidates.hpp"
#include "fixv2w/cli.hpp"
#include "fixv2w/digest.hpp"
#include "fixv2w/longitudinal.hpp"
#include "fixv2w/remap.hpp"

namespace fixv2w::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr const char* kToolVersion = "fixv2w 1";
constexpr const char* kApiKeyEnv = "FIXV2W_NVD_API_KEY";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EmptyInputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string status_slug(const std::optional<kg::MappingStatus>& s) {
  return s ? lower(kg::to_string(*s)) : "all";
}

std::vector<kg::MappingStatus> statuses(const RunConfig& cfg) {
  if (cfg.status) return {*cfg.status};
  return {kg::MappingStatus::Discouraged, kg::MappingStatus::Prohibited};
}

std::vector<CandidateStrategy> strategies_for(kg::MappingStatus s) {
  using enum CandidateStrategy;
  if (s == kg::MappingStatus::Discouraged) return {Cwe1003, Top25, Descendants, Family, PerCweTailored};
  return {Cwe1003, Top25, Members, MembersFnn, PerCweTailored};
}

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

ordered_json rank_json(const eval::RankReport& r) {
  ordered_json j;
  j["count"] = r.count;
  j["unfound"] = r.unfound;
  j["mr"] = r.mr;
  j["mrr"] = r.mrr;
  auto& hits = j["hits"] = ordered_json::object();
  for (const auto& [k, v] : r.hits) hits[std::to_string(k)] = v;
  return j;
}

// Rank report over the entries, or null when the policy leaves nothing.
ordered_json rank_json_or_null(std::span<const eval::RankEntry> entries, eval::UnfoundPolicy policy) {
  std::size_t usable = 0;
  for (const auto& e : entries) usable += e.rank || policy == eval::UnfoundPolicy::Penalty;
  if (usable == 0) return nullptr;
  return rank_json(eval::rank_metrics(entries, policy));
}

// Files written under the output directory, with their digests.
class Artifacts {
 public:
  explicit Artifacts(fs::path root) : root_(std::move(root)) {}

  void write(const std::string& rel, std::string_view bytes) {
    const auto path = root_ / rel;
    fs::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw EmptyInputError("cannot write " + tmp);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw EmptyInputError("short write to " + tmp);
    }
    fs::rename(tmp, path);
    outputs_[rel] = sha256_hex(bytes);
  }

  void record(const std::string& rel) { outputs_[rel] = sha256_file(root_ / rel); }

  const fs::path& root() const { return root_; }
  const std::map<std::string, std::string>& outputs() const { return outputs_; }

 private:
  fs::path root_;
  std::map<std::string, std::string> outputs_;
};

// Inputs read on demand; each file read is digested for the manifest.
class Inputs {
 public:
  explicit Inputs(const RunConfig& cfg) : cfg_(cfg) {}

  std::string read(const std::string& key, const std::string& path) {
    if (path.empty()) throw ConfigError(key + " is required for this command");
    auto bytes = read_file(cfg_.resolve(path));
    digests_[key] = {path, sha256_hex(bytes)};
    return bytes;
  }

  void note(const std::string& key, const std::string& path, const std::string& digest) {
    digests_[key] = {path, digest};
  }

  const ingest::CweCatalog& catalog() {
    if (!catalog_) {
      auto c = ingest::parse_cwe_catalog(read("data.catalog", cfg_.data.catalog));
      if (!cfg_.data.view1003.empty()) {
        const auto ids = ingest::parse_cwe_id_list(read("data.view1003", cfg_.data.view1003));
        ingest::set_view_1003(c, ids);
      }
      if (!cfg_.data.status_overrides.empty()) {
        ingest::apply_status_overrides(c, read("data.status_overrides", cfg_.data.status_overrides));
      }
      catalog_ = std::move(c);
    }
    return *catalog_;
  }

  const ingest::CveFeed& feed() {
    if (!feed_) feed_ = ingest::parse_cve_feed(read("data.feed", cfg_.data.feed));
    return *feed_;
  }

  const ingest::ChangeHistory& history() {
    if (!history_) history_ = ingest::parse_change_history(read("data.history", cfg_.data.history));
    return *history_;
  }

  void set_feed(ingest::CveFeed f) { feed_ = std::move(f); }
  void set_history(ingest::ChangeHistory h) { history_ = std::move(h); }

  const std::vector<ingest::ExploitEvent>& exploits() {
    if (!exploits_) {
      if (cfg_.data.kev.empty() && cfg_.data.exploitdb.empty()) {
        throw ConfigError("data.kev or data.exploitdb is required for this command");
      }
      const auto kev = cfg_.data.kev.empty() ? std::string() : read("data.kev", cfg_.data.kev);
      const auto edb = cfg_.data.exploitdb.empty() ? std::string() : read("data.exploitdb", cfg_.data.exploitdb);
      exploits_ = ingest::parse_exploits(kev, edb);
    }
    return *exploits_;
  }

  std::vector<kg::EntityId> top25() {
    if (cfg_.data.top25.empty()) return candidates::default_top25();
    return candidates::parse_top25(read("data.top25", cfg_.data.top25));
  }

  const ingest::Snapshot& snapshot(Date d) {
    auto it = snapshots_.find(d);
    if (it == snapshots_.end()) {
      auto s = ingest::build_snapshot(feed().records, history(), catalog(), d, cfg_.feed_state);
      s.graph.freeze();
      it = snapshots_.emplace(d, std::move(s)).first;
    }
    return it->second;
  }

  ordered_json manifest_json() const {
    ordered_json j = ordered_json::object();
    for (const auto& [key, v] : digests_) j[key] = {{"path", v.first}, {"sha256", v.second}};
    return j;
  }

 private:
  const RunConfig& cfg_;
  std::map<std::string, std::pair<std::string, std::string>> digests_;
  std::optional<ingest::CweCatalog> catalog_;
  std::optional<ingest::CveFeed> feed_;
  std::optional<ingest::ChangeHistory> history_;
  std::optional<std::vector<ingest::ExploitEvent>> exploits_;
  std::map<Date, ingest::Snapshot> snapshots_;
};

embed::TrainingConfig training_config(const RunConfig& cfg) {
  auto t = cfg.training;
  t.seed = cfg.seed;
  t.threads = cfg.threads;
  return t;
}

// Identifies the model `train` produces: data, snapshot date and training
// settings.
std::string model_key(const RunConfig& cfg, Date snapshot) {
  ordered_json j;
  const auto all = cfg.to_json();
  for (const auto& [key, value] : all.items()) {
    if (key.starts_with("data.") || key.starts_with("train.") || key == "seed" || key == "threads") j[key] = value;
  }
  j["snapshot"] = format_date(snapshot);
  return sha256_hex(j.dump());
}

struct Context {
  const RunConfig& cfg;
  const CommandOptions& options;
  Inputs inputs;
  Artifacts artifacts;
  ordered_json summary = ordered_json::object();
  std::optional<std::string> model_key;
};

const fs::path kTrainedModel = "train/model.bin";

embed::EmbeddingModel trained_model(Context& ctx, Date snapshot) {
  const auto root = ctx.artifacts.root();
  const auto model_path = root / kTrainedModel;
  const auto manifest_path = root / "manifest.train.json";
  if (!fs::exists(model_path) || !fs::exists(manifest_path)) {
    throw ValidationError("no trained model in " + root.string() + "; run `fixv2w train` first");
  }
  const auto manifest = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
  const auto expected = model_key(ctx.cfg, snapshot);
  if (manifest.is_discarded() || !manifest.contains("model_key") || manifest["model_key"] != expected) {
    throw ValidationError("the model in " + model_path.string() +
                          " was trained with other data or settings (snapshot " + format_date(snapshot) +
                          "); rerun `fixv2w train`");
  }
  const auto bytes = read_file(model_path);
  ctx.inputs.note("model", kTrainedModel.generic_string(), sha256_hex(bytes));
  return embed::deserialize_model(bytes);
}

candidates::CandidateOptions candidate_options(Context& ctx) {
  candidates::CandidateOptions o;
  o.threshold = ctx.cfg.threshold;
  o.top25 = ctx.inputs.top25();
  return o;
}

// Per-CWE strategy votes from remaps between tailored.from (default three
// years earlier) and the snapshot date.
candidates::TailoredTable tailored_table(Context& ctx, Date snapshot, const candidates::CandidateOptions& opts) {
  const Date from = ctx.cfg.tailored_from.value_or(
      Date{snapshot.year() - std::chrono::years{3}, snapshot.month(), std::chrono::day{1}});
  const auto& before = ctx.inputs.snapshot(from);
  const auto& now = ctx.inputs.snapshot(snapshot);
  std::vector<RemapCase> history;
  for (auto s : {kg::MappingStatus::Discouraged, kg::MappingStatus::Prohibited}) {
    auto part = ingest::build_test_set(before, now, s);
    history.insert(history.end(), part.begin(), part.end());
  }
  return candidates::tailored_strategy_table(now.graph, history, opts);
}

ordered_json tailored_json(const candidates::TailoredTable& t) {
  ordered_json j = ordered_json::object();
  for (const auto& [cwe, s] : t) j[cwe.key()] = to_string(s);
  return j;
}

std::vector<RemapCase> rank_cases(Context& ctx, const kg::KnowledgeGraph& g, const embed::EmbeddingModel& model,
                                  std::vector<RemapCase> cases, CandidateStrategy strategy,
                                  const candidates::CandidateOptions& opts) {
  remap::FixOptions fo;
  fo.candidates = opts;
  fo.threads = ctx.cfg.threads;
  return remap::fix_v2w(g, model, std::move(cases), strategy, fo);
}

std::string loss_csv(std::span<const double> losses) {
  std::string out = "epoch,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out += std::to_string(i + 1) + "," + format_real(losses[i]) + "\n";
  return out;
}

ordered_json counts_by_status(const kg::KnowledgeGraph& g) {
  const auto cases = remap::determine_invalid(g);
  std::size_t discouraged = 0, prohibited = 0;
  for (const auto& c : cases) (c.old_status == kg::MappingStatus::Discouraged ? discouraged : prohibited)++;
  return {{"discouraged", discouraged}, {"prohibited", prohibited}};
}

// ---------------------------------------------------------------------------
// Commands

void cmd_ingest(Context& ctx) {
  ordered_json pages = ordered_json::object();
  if (ctx.options.fetch) {
    if (!ctx.cfg.from || !ctx.cfg.to) throw ConfigError("ingest --fetch needs --from and --to");
    if (ctx.cfg.cache_dir.empty()) throw ConfigError("ingest --fetch needs ingest.cache_dir (--cache-dir)");
    std::optional<std::string> key;
    if (const char* k = std::getenv(kApiKeyEnv); k && *k) key = k;
    ingest::NvdClient client(ctx.cfg.resolve(ctx.cfg.cache_dir), key);
    const ingest::FetchWindow window{*ctx.cfg.from, *ctx.cfg.to};
    ingest::CveFeed feed;
    std::vector<ingest::ChangeHistory> parts;
    const auto cve_pages = client.fetch_cves(window);
    const auto hist_pages = client.fetch_history(window);
    for (std::size_t i = 0; i < cve_pages.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "ingest/raw/cves-%04zu.json", i);
      ctx.artifacts.write(name, cve_pages[i]);
      auto page = ingest::parse_cve_feed(cve_pages[i]);
      feed.records.insert(feed.records.end(), page.records.begin(), page.records.end());
      for (auto& w : page.diagnostics.warnings) feed.diagnostics.warn(std::move(w));
    }
    for (std::size_t i = 0; i < hist_pages.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "ingest/raw/history-%04zu.json", i);
      ctx.artifacts.write(name, hist_pages[i]);
      parts.push_back(ingest::parse_change_history(hist_pages[i]));
    }
    pages = {{"cves", cve_pages.size()}, {"history", hist_pages.size()}};
    ctx.inputs.set_feed(std::move(feed));
    ctx.inputs.set_history(ingest::merge_histories(std::move(parts)));
  }
  const auto& feed = ctx.inputs.feed();
  const auto& history = ctx.inputs.history();
  auto& s = ctx.summary;
  if (!pages.empty()) s["pages"] = pages;
  s["cve_records"] = feed.records.size();
  s["change_events"] = history.events.size();
  s["history_covered_until"] = history.covered_until ? format_timestamp(*history.covered_until) : "";
  ordered_json warnings = ordered_json::array();
  for (const auto& w : feed.diagnostics.warnings) warnings.push_back("feed: " + w);
  for (const auto& w : history.diagnostics.warnings) warnings.push_back("history: " + w);
  if (!ctx.cfg.data.catalog.empty()) {
    const auto& c = ctx.inputs.catalog();
    s["catalog_version"] = c.version;
    s["cwe_nodes"] = c.nodes.size();
    s["cwe_edges"] = c.edges.size();
    for (const auto& w : c.diagnostics.warnings) warnings.push_back("catalog: " + w);
  }
  if (!ctx.cfg.data.kev.empty() || !ctx.cfg.data.exploitdb.empty()) {
    std::string csv = "cve,source,date,verified\n";
    std::size_t kev = 0, edb = 0;
    for (const auto& e : ctx.inputs.exploits()) {
      csv += e.cve.key() + "," + std::string(ingest::to_string(e.source)) + "," + format_date(e.exploit_date) + "," +
             (e.verified ? "true" : "false") + "\n";
      (e.source == ingest::ExploitSource::Kev ? kev : edb)++;
    }
    ctx.artifacts.write("ingest/exploits.csv", csv);
    s["exploits"] = {{"kev", kev}, {"exploitdb", edb}};
  }
  s["warnings"] = warnings;
  ctx.artifacts.write("ingest/cve_feed.json", ingest::emit_cve_feed(feed.records));
  ctx.artifacts.write("ingest/summary.json", s.dump(2) + "\n");
}

void cmd_snapshot(Context& ctx) {
  const Date d = ctx.cfg.snapshot_date();
  const auto& snap = ctx.inputs.snapshot(d);
  const auto rel = "snapshot-" + format_date(d);
  ingest::save_snapshot(snap, ctx.artifacts.root() / rel);
  for (const char* f : {"as_of.txt", "entities.tsv", "cwe_nodes.tsv", "triples.tsv"}) {
    ctx.artifacts.record(rel + "/" + f);
  }
  ctx.summary["as_of"] = format_date(d);
  ctx.summary["entities"] = snap.graph.entity_count();
  ctx.summary["triples"] = snap.graph.triple_count();
  ctx.summary["invalid_mappings"] = counts_by_status(snap.graph);
}

void cmd_longitudinal(Context& ctx) {
  const auto& history = ctx.inputs.history();
  const auto& catalog = ctx.inputs.catalog();
  Date from = ctx.cfg.from.value_or(history.events.empty() ? ctx.cfg.train_date
                                                           : date_of(history.events.front().timestamp));
  Date to = ctx.cfg.to.value_or(ctx.cfg.validate_date);
  if (to < from) throw ConfigError("longitudinal window is empty: " + format_date(from) + " > " + format_date(to));
  const auto events = ingest::events_between(history, from, to);
  kg::KnowledgeGraph g;
  ingest::add_catalog(g, catalog);
  g.freeze();

  longitudinal::Report r;
  r.events = events.size();
  r.distance = longitudinal::remap_distance_distribution(events, g);
  r.distance_with_placeholders = longitudinal::remap_distance_distribution(events, g, {.exclude_placeholders = false});
  r.pairs = longitudinal::remap_pair_frequencies(events, &g);
  const auto snaps = longitudinal::yearly_snapshots(ctx.inputs.feed().records, history, catalog,
                                                    static_cast<int>(from.year()), static_cast<int>(to.year()),
                                                    ctx.cfg.feed_state);
  r.counts = longitudinal::cumulative_invalid_counts(snaps);
  r.top = longitudinal::top_added_removed(events, 10);

  ctx.artifacts.write("longitudinal/distance.csv", longitudinal::distance_csv(r.distance));
  ctx.artifacts.write("longitudinal/pairs.csv", longitudinal::pairs_csv(r.pairs));
  ctx.artifacts.write("longitudinal/counts.csv", longitudinal::counts_csv(r.counts));
  ctx.artifacts.write("longitudinal/top.csv", longitudinal::top_csv(r.top));
  ctx.artifacts.write("longitudinal/report.json", longitudinal::report_json(r));
  ctx.summary["from"] = format_date(from);
  ctx.summary["to"] = format_date(to);
  ctx.summary["events"] = events.size();
}

embed::EmbeddingModel train_on(const kg::KnowledgeGraph& g, const RunConfig& cfg, std::vector<double>* losses) {
  auto result = embed::train(g, training_config(cfg));
  if (losses) *losses = std::move(result.epoch_loss);
  return std::move(result.model);
}

void cmd_train(Context& ctx) {
  const Date d = ctx.cfg.snapshot_date();
  const auto& snap = ctx.inputs.snapshot(d);
  std::vector<double> losses;
  const auto model = train_on(snap.graph, ctx.cfg, &losses);
  ctx.artifacts.write("train/triples.tsv", kg::dump_triples(snap.graph));
  ctx.artifacts.write(kTrainedModel.generic_string(), embed::serialize_model(model));
  ctx.artifacts.write("train/loss.csv", loss_csv(losses));
  ctx.model_key = model_key(ctx.cfg, d);
  ctx.summary["as_of"] = format_date(d);
  ctx.summary["triples"] = snap.graph.triple_count();
  ctx.summary["entities"] = model.entity_count();
  ctx.summary["final_loss"] = losses.empty() ? 0.0 : losses.back();
}

void cmd_fix(Context& ctx) {
  const Date d = ctx.cfg.snapshot_date();
  const auto& g = ctx.inputs.snapshot(d).graph;
  const auto model = trained_model(ctx, d);
  auto opts = candidate_options(ctx);
  const auto strategy = ctx.cfg.strategy.value_or(CandidateStrategy::PerCweTailored);
  candidates::TailoredTable table;
  if (strategy == CandidateStrategy::PerCweTailored) {
    table = tailored_table(ctx, d, opts);
    opts.tailored = &table;
  }
  const auto ranked = rank_cases(ctx, g, model, remap::determine_invalid(g, ctx.cfg.status), strategy, opts);
  const auto fixed = remap::apply_fixes(g, ranked, ctx.cfg.top_n);

  const auto dir = "fix/" + lower(to_string(strategy)) + "-" + status_slug(ctx.cfg.status) + "/";
  ctx.artifacts.write(dir + "predictions.jsonl", remap::predictions_jsonl(ranked));
  ctx.artifacts.write(dir + "predictions.csv", remap::predictions_csv(ranked));
  ctx.artifacts.write(dir + "fixed_triples.tsv", kg::dump_triples(fixed.graph));
  std::size_t unranked = 0;
  for (const auto& c : ranked) unranked += !c.predictions.has_value();
  auto& s = ctx.summary;
  s["as_of"] = format_date(d);
  s["strategy"] = to_string(strategy);
  s["status"] = status_slug(ctx.cfg.status);
  s["top_n"] = ctx.cfg.top_n;
  s["cases"] = ranked.size();
  s["unranked"] = unranked;
  s["fixed_cves"] = fixed.fixed_cves.size();
  s["edges_removed"] = fixed.removed;
  s["edges_added"] = fixed.added;
  if (strategy == CandidateStrategy::PerCweTailored) s["tailored"] = tailored_json(table);
  s["diagnostics"] = fixed.diagnostics;
  ctx.artifacts.write(dir + "summary.json", s.dump(2) + "\n");
}

void cmd_evaluate(Context& ctx) {
  const Date d = ctx.cfg.train_date;
  const auto& train = ctx.inputs.snapshot(d);
  const auto& valid = ctx.inputs.snapshot(ctx.cfg.validate_date);
  const auto model = trained_model(ctx, d);
  auto opts = candidate_options(ctx);
  const auto table = tailored_table(ctx, d, opts);
  opts.tailored = &table;

  std::vector<eval::CoverageReport> coverage;
  ordered_json by_status = ordered_json::object();
  for (auto status : statuses(ctx.cfg)) {
    const auto slug = status_slug(status);
    const auto cases = ingest::build_test_set(train, valid, status);
    ordered_json js;
    js["cases"] = cases.size();
    auto& jstrat = js["strategies"] = ordered_json::object();
    const auto list = ctx.cfg.strategy ? std::vector<CandidateStrategy>{*ctx.cfg.strategy} : strategies_for(status);
    for (auto strategy : list) {
      const auto name = std::string(to_string(strategy));
      const auto ranked = rank_cases(ctx, train.graph, model, cases, strategy, opts);
      ctx.artifacts.write("evaluate/" + slug + "/predictions-" + lower(name) + ".jsonl",
                          remap::predictions_jsonl(ranked));
      auto report = eval::coverage_report(ranked, train.graph, slug + "/" + name, ctx.cfg.cutoff);
      std::vector<eval::RankEntry> entries;
      for (const auto& c : ranked) {
        if (c.predictions) entries.push_back({eval::truth_rank(c), c.predictions->size()});
      }
      ordered_json jr;
      jr["ranked"] = entries.size();
      jr["unranked"] = ranked.size() - entries.size();
      jr["metrics"] = rank_json_or_null(entries, ctx.cfg.unfound);
      auto& jc = jr["coverage"] = ordered_json::object();
      for (auto kind : {eval::MatchKind::Exact, eval::MatchKind::Fine, eval::MatchKind::Coarse}) {
        auto& jk = jc[std::string(eval::to_string(kind))] = ordered_json::object();
        for (std::size_t b = 0; b < eval::kBucketCount; ++b) {
          jk[std::string(eval::bucket_name(b))] = cases.empty() ? 0.0 : report.fraction(kind, b);
        }
      }
      jr["unmatched"] = report.unmatched;
      jstrat[name] = jr;
      coverage.push_back(std::move(report));
    }
    by_status[slug] = js;
  }
  ordered_json j;
  j["ranking"] = "rank of the best truth label among the candidates; unfound truths " +
                 std::string(ctx.cfg.unfound == eval::UnfoundPolicy::Penalty ? "rank |candidates|+1" : "excluded");
  j["train"] = format_date(d);
  j["validate"] = format_date(ctx.cfg.validate_date);
  j["cutoff"] = ctx.cfg.cutoff;
  j["statuses"] = by_status;
  j["tailored"] = tailored_json(table);
  ctx.artifacts.write("evaluate/coverage.csv", eval::coverage_csv(coverage));
  ctx.artifacts.write("evaluate/rank_histogram.csv", eval::rank_histogram_csv(coverage));
  ctx.artifacts.write("evaluate/metrics.json", j.dump(2) + "\n");
  ctx.summary["statuses"] = by_status.size();
  ctx.summary["reports"] = coverage.size();
}

ordered_json completion_json(const eval::CompletionResult& r, eval::UnfoundPolicy policy) {
  ordered_json j;
  j["triples"] = r.ranks.size();
  j["metrics"] = rank_json_or_null(r.ranks, policy);
  j["diagnostics"] = r.diagnostics.size();
  return j;
}

void cmd_retrain_eval(Context& ctx) {
  const Date d = ctx.cfg.train_date;
  const auto& train = ctx.inputs.snapshot(d);
  const auto& valid = ctx.inputs.snapshot(ctx.cfg.validate_date);
  const auto model = trained_model(ctx, d);
  const auto pool = candidates::cwe1003_pool(train.graph);
  const auto eval_triples = eval::open_world_triples(train.graph, valid.graph);
  if (eval_triples.empty()) throw EmptyInputError("no open-world triples between the two snapshots");

  ordered_json j;
  j["ranking"] = "filtered tail ranking over the CWE-1003 pool; ties by id";
  j["train"] = format_date(d);
  j["validate"] = format_date(ctx.cfg.validate_date);
  j["open_world_triples"] = eval_triples.size();
  const auto original = eval::graph_completion_eval(train.graph, eval_triples, eval::WorldMode::Open, model, pool);
  j["original"] = completion_json(original, ctx.cfg.unfound);

  auto opts = candidate_options(ctx);
  const auto strategy = ctx.cfg.strategy.value_or(CandidateStrategy::PerCweTailored);
  candidates::TailoredTable table;
  if (strategy == CandidateStrategy::PerCweTailored) {
    table = tailored_table(ctx, d, opts);
    opts.tailored = &table;
  }
  std::vector<RemapCase> cases;
  for (auto status : statuses(ctx.cfg)) {
    auto part = remap::determine_invalid(train.graph, status);
    cases.insert(cases.end(), part.begin(), part.end());
  }
  const auto ranked = rank_cases(ctx, train.graph, model, std::move(cases), strategy, opts);
  const auto fixed = remap::apply_fixes(train.graph, ranked, ctx.cfg.top_n);
  // Triples the fix itself added are in training; rank only the rest.
  std::vector<kg::Triple> remaining;
  for (const auto& t : eval_triples) {
    if (!fixed.graph.contains(t)) remaining.push_back(t);
  }
  ctx.artifacts.write("retrain/fixed_triples.tsv", kg::dump_triples(fixed.graph));
  const auto fixed_model = train_on(fixed.graph, ctx.cfg, nullptr);
  ctx.artifacts.write("retrain/model_fixed.bin", embed::serialize_model(fixed_model));
  ordered_json jf;
  jf["strategy"] = to_string(strategy);
  jf["top_n"] = ctx.cfg.top_n;
  jf["fixed_cves"] = fixed.fixed_cves.size();
  jf["recovered_by_fix"] = eval_triples.size() - remaining.size();
  if (remaining.empty()) {
    jf["triples"] = 0;
    jf["metrics"] = nullptr;
  } else {
    const auto r = eval::graph_completion_eval(fixed.graph, remaining, eval::WorldMode::Open, fixed_model, pool);
    jf.update(completion_json(r, ctx.cfg.unfound));
  }
  j["fixed"] = jf;

  const auto split = eval::closed_world_split(train.graph, ctx.cfg.closed_fraction, ctx.cfg.seed);
  ordered_json jc;
  jc["fraction"] = ctx.cfg.closed_fraction;
  if (split.held_out.empty()) {
    jc["triples"] = 0;
    jc["metrics"] = nullptr;
  } else {
    const auto closed_model = train_on(split.train, ctx.cfg, nullptr);
    ctx.artifacts.write("retrain/model_closed.bin", embed::serialize_model(closed_model));
    const auto r =
        eval::graph_completion_eval(split.train, split.held_out, eval::WorldMode::Closed, closed_model, pool);
    jc.update(completion_json(r, ctx.cfg.unfound));
  }
  j["closed_world"] = jc;
  ctx.artifacts.write("retrain/report.json", j.dump(2) + "\n");
  ctx.summary["open_world_triples"] = eval_triples.size();
  ctx.summary["recovered_by_fix"] = jf["recovered_by_fix"];
}

void cmd_exploits(Context& ctx) {
  const Date d = ctx.cfg.train_date;
  const auto& train = ctx.inputs.snapshot(d);
  const auto& valid = ctx.inputs.snapshot(ctx.cfg.validate_date);
  const auto& exploits = ctx.inputs.exploits();
  const auto model = trained_model(ctx, d);
  auto opts = candidate_options(ctx);
  const auto strategy = ctx.cfg.strategy.value_or(CandidateStrategy::PerCweTailored);
  candidates::TailoredTable table;
  if (strategy == CandidateStrategy::PerCweTailored) {
    table = tailored_table(ctx, d, opts);
    opts.tailored = &table;
  }
  std::vector<RemapCase> cases;
  for (auto status : statuses(ctx.cfg)) {
    auto part = ingest::build_test_set(train, valid, status);
    cases.insert(cases.end(), part.begin(), part.end());
  }
  const auto ranked = rank_cases(ctx, train.graph, model, std::move(cases), strategy, opts);
  const Date from = ctx.cfg.from.value_or(d);
  const Date to = ctx.cfg.to.value_or(ctx.cfg.validate_date);
  const auto report =
      eval::exploit_analysis(ranked, exploits, ctx.inputs.history(), train.graph, from, to, ctx.cfg.cutoff);
  ctx.artifacts.write("exploits/report.json", eval::exploit_report_json(report));
  ctx.summary["strategy"] = to_string(strategy);
  ctx.summary["from"] = format_date(from);
  ctx.summary["to"] = format_date(to);
  ctx.summary["rows"] = report.rows.size();
}

}  // namespace

void run(std::string_view command, const RunConfig& cfg, const CommandOptions& options) {
  cfg.validate();
  fs::create_directories(cfg.out);
  Context ctx{cfg, options, Inputs(cfg), Artifacts(cfg.out)};
  if (command == "ingest") {
    cmd_ingest(ctx);
  } else if (command == "snapshot") {
    cmd_snapshot(ctx);
  } else if (command == "longitudinal") {
    cmd_longitudinal(ctx);
  } else if (command == "train") {
    cmd_train(ctx);
  } else if (command == "fix") {
    cmd_fix(ctx);
  } else if (command == "evaluate") {
    cmd_evaluate(ctx);
  } else if (command == "retrain-eval") {
    cmd_retrain_eval(ctx);
  } else if (command == "exploits") {
    cmd_exploits(ctx);
  } else {
    throw ConfigError("unknown command '" + std::string(command) + "'");
  }

  ordered_json m;
  m["command"] = command;
  m["tool"] = kToolVersion;
  m["config_sha256"] = cfg.hash();
  m["config"] = cfg.to_json();
  if (ctx.model_key) m["model_key"] = *ctx.model_key;
  m["inputs"] = ctx.inputs.manifest_json();
  auto& outs = m["outputs"] = ordered_json::object();
  for (const auto& [rel, digest] : ctx.artifacts.outputs()) outs[rel] = digest;
  m["summary"] = ctx.summary;
  Artifacts(cfg.out).write("manifest." + std::string(command) + ".json", m.dump(2) + "\n");
}

}  // namespace fixv2w::cli
