#include "edabench/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <ctime>
#include <fcntl.h>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "edabench/router.hpp"

namespace edabench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "run.manifest";
constexpr const char* kLedger = "ledger";

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read '{}'", p.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void fsync_path(const fs::path& p) {
  const int fd = ::open(p.c_str(), O_RDONLY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

// Whole-file replace via rename so readers never see a half-written file.
void write_atomic(const fs::path& p, const std::string& text) {
  const auto tmp = fs::path(p.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", tmp.string()));
    out << text;
    if (!out.flush()) throw Error(ErrorCode::IoError, fmt::format("short write to '{}'", tmp.string()));
  }
  fsync_path(tmp);
  fs::rename(tmp, p);
}

void append_durable(const fs::path& p, const std::string& line) {
  const int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}' for append", p.string()));
  std::size_t done = 0;
  while (done < line.size()) {
    const auto n = ::write(fd, line.data() + done, line.size() - done);
    if (n <= 0) {
      ::close(fd);
      throw Error(ErrorCode::IoError, fmt::format("write to '{}' failed", p.string()));
    }
    done += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

// Complete lines only; a trailing fragment without '\n' is reported as torn.
std::vector<std::string> split_lines(const std::string& text, bool* torn = nullptr) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string::npos) {
      if (torn != nullptr) *torn = true;
      break;
    }
    if (nl > start) lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string record_key(const json& rec) {
  const auto& k = rec.at("key");
  return WorkItem{k.at("sample_id").get<std::string>(), parse_view(k.at("view").get<std::string>()),
                  k.at("agent").get<std::string>()}
      .key();
}

std::vector<fs::path> record_files(const fs::path& dir) {
  std::vector<fs::path> files;
  const auto rd = dir / "records";
  if (!fs::exists(rd)) return files;
  for (const auto& e : fs::directory_iterator(rd))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

json opt_num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
json opt_num(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json features_json(const FeatureVector& f) {
  return {{"luminance", f.luminance},
          {"contrast", f.contrast},
          {"chrominance", f.chrominance},
          {"blur", f.blur},
          {"spatial_information", f.spatial_information}};
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string WorkItem::key() const { return fmt::format("{}\t{}\t{}", sample_id, to_string(view), agent); }

Plan plan_run(const Dataset& d, const std::vector<ViewLabel>& views, const std::vector<std::string>& agents,
              std::uint64_t seed) {
  if (d.samples.empty() || views.empty() || agents.empty()) {
    throw Error(ErrorCode::ContractViolation, "plan needs samples, views and agents");
  }
  Plan p;
  for (const auto& id : shuffled_order(d, seed)) {
    const auto& s = d.find(id);
    for (auto v : views) {
      try {
        derive_view(s, v);
      } catch (const Error& e) {
        p.skipped.push_back(fmt::format("{}/{}: {}", id, to_string(v), e.what()));
        continue;
      }
      for (const auto& a : agents) p.items.push_back({id, v, a});
    }
  }
  return p;
}

std::string make_run_id(const Config& cfg, const std::string& manifest_hash) {
  std::string basis = fmt::format("{}\n{}\n{}\n", cfg.digest, cfg.seed, manifest_hash);
  for (auto v : cfg.views) basis += fmt::format("{},", to_string(v));
  basis += "\n";
  for (const auto& a : cfg.agents) basis += a.name + ",";
  return "run-" + sha256_hex(std::string_view(basis)).substr(0, 12);
}

json execute_item(const Dataset& d, const WorkItem& item, const Config& cfg, const BackendSet& backends,
                  bool zero_timing) {
  const auto t0 = std::chrono::steady_clock::now();
  const Sample& s = d.find(item.sample_id);
  const auto& agent = cfg.agent(item.agent);

  ScoreRecord sr;
  sr.sample_id = s.id;
  sr.view = item.view;
  sr.agent = item.agent;
  sr.combo = s.combo;
  sr.difficulty = s.difficulty;

  json trace;
  json errors = json::array();
  json click = nullptr;
  json view_size = nullptr;
  json features = nullptr;
  std::optional<std::string> answer;
  std::optional<std::string> answer_note;

  try {
    const auto v = derive_view(s, item.view);
    const auto img = load_view_raster(d, s, item.view);
    view_size = json::array({v.view_meta.width, v.view_meta.height});
    features = features_json(low_level_features(img));
    const RequestContext ctx{s.id, item.view, "", 0};

    std::optional<PixelPoint> act;
    if (agent.kind == "edagent") {
      const auto out = run_edagent(s.question, v, img, backends.at(agent.comprehender), backends.at(agent.grounder),
                                   backends.at(agent.validator), cfg.router);
      trace = out.to_json();
      for (const auto& n : out.notes) errors.push_back(n);
      act = out.act;
      if (!out.ans.empty()) {
        answer = out.ans;
      } else if (!out.notes.empty()) {
        answer_note = out.notes.front();
      }
    } else {
      trace = {{"ans", nullptr}, {"point_norm", nullptr}, {"act", nullptr}, {"failed", false}};
      if (!agent.answerer.empty()) {
        try {
          answer = backends.at(agent.answerer).comprehend(s.question, img, ctx);
          trace["ans"] = *answer;
        } catch (const Error& e) {
          answer_note = fmt::format("comprehend: {}", e.what());
          errors.push_back(*answer_note);
        }
      } else {
        answer_note = "AnswerScoreUnavailable: agent gives no answer";
      }
      try {
        RequestContext gctx = ctx;
        gctx.variant = "question";
        const auto p = backends.at(agent.grounder).ground(s.question, img, gctx);
        act = denormalize(p, v.view_meta, v.frame());
        trace["point_norm"] = json::array({p.x(), p.y()});
        trace["act"] = json::array({act->x, act->y});
      } catch (const Error& e) {
        errors.push_back(fmt::format("ground_question: {}", e.what()));
        errors.push_back("router: RouterFailure: no grounding candidate");
        trace["failed"] = true;
      }
    }

    if (act) {
      sr.action = score_action(*act, v.view_bbox);
      const double ox = v.crop.rect.x_min + act->x + 0.5;
      const double oy = v.crop.rect.y_min + act->y + 0.5;
      click = json::array({ox / s.image.width, oy / s.image.height});
    }
    if (answer) {
      sr.answer = score_answer(backends.at(cfg.judge), s.question, s.gt_answer, *answer, cfg.judge_runs, ctx);
      if (!sr.answer.available()) sr.answer_error = "AnswerScoreUnavailable: judge abstained on every run of an orientation";
    } else {
      sr.answer_error = answer_note.value_or("AnswerScoreUnavailable: no answer");
    }
  } catch (const Error& e) {
    errors.push_back(fmt::format("item: {}", e.what()));
    sr.action = {};
    sr.answer = {};
    sr.answer_error = fmt::format("item: {}", e.what());
  }

  const auto ms = zero_timing ? 0.0
                              : std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return {{"key", {{"sample_id", item.sample_id}, {"view", to_string(item.view)}, {"agent", item.agent}}},
          {"agent_kind", agent.kind},
          {"trace", trace},
          {"score", sr.to_json()},
          {"click", click},
          {"view_size", view_size},
          {"features", features},
          {"errors", errors},
          {"timing_ms", ms}};
}

fs::path run_dir(const fs::path& out, const std::string& run_id) {
  const auto dir = out / run_id;
  if (run_id.empty() || run_id.find('/') != std::string::npos || !fs::exists(dir / kManifest)) {
    throw Error(ErrorCode::UnknownRun, fmt::format("no run '{}' under '{}'", run_id, out.string()));
  }
  return dir;
}

std::size_t repair_run(const fs::path& dir) {
  std::size_t dropped = 0;
  const auto ledger_path = dir / kLedger;
  std::vector<std::string> ledger;
  bool ledger_dirty = false;
  if (fs::exists(ledger_path)) {
    bool torn = false;
    const auto lines = split_lines(read_text(ledger_path), &torn);
    if (torn) {
      ++dropped;
      ledger_dirty = true;
    }
    std::set<std::string> seen;
    for (const auto& l : lines) {
      if (seen.insert(l).second) {
        ledger.push_back(l);
      } else {
        ++dropped;
        ledger_dirty = true;
      }
    }
  }
  const std::set<std::string> in_ledger(ledger.begin(), ledger.end());

  std::set<std::string> recorded;
  for (const auto& file : record_files(dir)) {
    bool torn = false;
    const auto lines = split_lines(read_text(file), &torn);
    bool dirty = torn;
    if (torn) ++dropped;
    std::string kept;
    for (const auto& l : lines) {
      std::string key;
      try {
        key = record_key(json::parse(l));
      } catch (const std::exception&) {
        ++dropped;
        dirty = true;
        continue;
      }
      if (!in_ledger.count(key) || !recorded.insert(key).second) {
        ++dropped;
        dirty = true;
        continue;
      }
      kept += l;
      kept += '\n';
    }
    if (dirty) write_atomic(file, kept);
  }

  std::string kept;
  for (const auto& k : ledger) {
    if (!recorded.count(k)) {
      ++dropped;
      ledger_dirty = true;
      continue;
    }
    kept += k + "\n";
  }
  if (ledger_dirty) write_atomic(ledger_path, kept);
  return dropped;
}

RunSummary run_evaluation(const Config& cfg, const RunOptions& opts) {
  auto log = [&](const std::string& line) {
    if (opts.log != nullptr) *opts.log << line << "\n";
  };
  // Backends first: a missing token must fail before any planning.
  const auto backends = build_backends(cfg, opts.dry_run);
  const auto d = load_manifest(cfg.dataset);

  std::vector<std::string> agents;
  for (const auto& a : cfg.agents) agents.push_back(a.name);
  const auto plan = plan_run(d, cfg.views, agents, cfg.seed);
  for (const auto& s : plan.skipped) log("skip " + s);

  RunSummary sum;
  sum.run_id = make_run_id(cfg, d.manifest_hash);
  if (opts.resume) {
    run_dir(cfg.out, *opts.resume);
    if (*opts.resume != sum.run_id) {
      throw Error(ErrorCode::ConfigError,
                  fmt::format("run '{}' was created from a different config, seed or dataset", *opts.resume));
    }
  }
  sum.dir = cfg.out / sum.run_id;
  sum.planned = plan.items.size();
  sum.skipped = plan.skipped.size();
  fs::create_directories(sum.dir / "records");

  const auto manifest_path = sum.dir / kManifest;
  bool zero_timing = opts.dry_run;
  if (fs::exists(manifest_path)) {
    const auto m = json::parse(read_text(manifest_path));
    if (m.value("config_digest", "") != cfg.digest) {
      throw Error(ErrorCode::ConfigError, fmt::format("run '{}' has a different config digest", sum.run_id));
    }
    // A resumed dry run stays a dry run so its records keep the same bytes.
    zero_timing = zero_timing || m.value("dry_run", false);
  } else {
    json agents_json = json::array();
    for (const auto& a : cfg.agents) {
      json aj{{"name", a.name}, {"kind", a.kind}, {"grounder", a.grounder}};
      if (a.kind == "edagent") {
        aj["comprehender"] = a.comprehender;
        aj["validator"] = a.validator;
      } else {
        aj["answerer"] = a.answerer.empty() ? json(nullptr) : json(a.answerer);
      }
      agents_json.push_back(aj);
    }
    json views = json::array();
    for (auto v : cfg.views) views.push_back(to_string(v));
    const json m{{"run_id", sum.run_id},
                 {"config_digest", cfg.digest},
                 {"manifest_hash", d.manifest_hash},
                 {"samples", d.samples.size()},
                 {"backends", backends.fingerprints},
                 {"judge", cfg.judge},
                 {"judge_runs", cfg.judge_runs},
                 {"router",
                  {{"selection", cfg.router.selection.kind == SelectionMode::Kind::Comparative ? "comparative" : "threshold"},
                   {"tau", cfg.router.selection.tau},
                   {"confidence_mode", to_string(cfg.router.confidence_mode)}}},
                 {"seed", cfg.seed},
                 {"views", views},
                 {"agents", agents_json},
                 {"plan_size", plan.items.size()},
                 {"skipped", plan.skipped},
                 {"created_at", opts.dry_run ? "1970-01-01T00:00:00Z" : utc_now()},
                 {"dry_run", opts.dry_run},
                 {"ledger", kLedger}};
    write_atomic(manifest_path, m.dump(2) + "\n");
  }

  sum.repaired = repair_run(sum.dir);
  if (sum.repaired > 0) log(fmt::format("repaired {} damaged line(s)", sum.repaired));
  std::set<std::string> done;
  if (fs::exists(sum.dir / kLedger)) {
    for (auto& l : split_lines(read_text(sum.dir / kLedger))) done.insert(std::move(l));
  }

  std::vector<WorkItem> pending;
  for (const auto& it : plan.items)
    if (!done.count(it.key())) pending.push_back(it);
  sum.already_done = plan.items.size() - pending.size();
  log(fmt::format("{} items remaining", pending.size()));

  const auto n = opts.stop_after ? std::min(*opts.stop_after, pending.size()) : pending.size();
  std::vector<std::optional<std::string>> slots(n);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < n; i = next++) {
      auto line = execute_item(d, pending[i], cfg, backends, zero_timing).dump() + "\n";
      {
        std::lock_guard lock(mu);
        slots[i] = std::move(line);
      }
      cv.notify_all();
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto w = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), n);
    for (std::size_t t = 0; t < w; ++t) pool.emplace_back(worker);

    // Commit in plan order: record first, then the ledger entry.
    for (std::size_t i = 0; i < n; ++i) {
      std::string line;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return slots[i].has_value(); });
        line = std::move(*slots[i]);
        slots[i].reset();
      }
      append_durable(sum.dir / "records" / (pending[i].agent + ".jsonl"), line);
      append_durable(sum.dir / kLedger, pending[i].key() + "\n");
      ++sum.executed;
    }
  }
  sum.remaining = pending.size() - sum.executed;
  return sum;
}

AuditReport audit_run(const fs::path& dir) {
  AuditReport a;
  std::map<std::string, int> ledger;
  if (fs::exists(dir / kLedger)) {
    bool torn = false;
    for (const auto& l : split_lines(read_text(dir / kLedger), &torn)) ++ledger[l];
    if (torn) a.problems.push_back("ledger: torn final line");
  }
  for (const auto& [k, c] : ledger) {
    if (c > 1) a.problems.push_back(fmt::format("ledger: key '{}' appears {} times", k, c));
  }
  a.ledger_keys = ledger.size();

  std::map<std::string, int> records;
  for (const auto& file : record_files(dir)) {
    bool torn = false;
    const auto lines = split_lines(read_text(file), &torn);
    if (torn) a.problems.push_back(fmt::format("{}: torn final line", file.filename().string()));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      try {
        ++records[record_key(json::parse(lines[i]))];
        ++a.records;
      } catch (const std::exception&) {
        a.problems.push_back(fmt::format("{}:{}: unparsable record", file.filename().string(), i + 1));
      }
    }
  }
  for (const auto& [k, c] : ledger) {
    const auto it = records.find(k);
    if (it == records.end()) a.problems.push_back(fmt::format("ledger key '{}' has no record", k));
  }
  for (const auto& [k, c] : records) {
    if (c > 1) a.problems.push_back(fmt::format("key '{}' has {} records", k, c));
    if (!ledger.count(k)) a.problems.push_back(fmt::format("record '{}' is not in the ledger", k));
  }
  for (auto& p : a.problems) std::replace(p.begin(), p.end(), '\t', '/');
  return a;
}

std::vector<json> load_records(const fs::path& dir) {
  std::vector<json> out;
  for (const auto& file : record_files(dir)) {
    for (const auto& l : split_lines(read_text(file))) {
      try {
        out.push_back(json::parse(l));
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, fmt::format("{}: {}", file.filename().string(), e.what()));
      }
    }
  }
  return out;
}

namespace {

json row_json(const AggregateRow& r) {
  json key = json::object();
  for (const auto& k : r.key) key[std::string(to_string(k.dim))] = k.label;
  return {{"key", key},
          {"label", r.key_label()},
          {"n", r.n},
          {"n_answer", r.n_answer},
          {"answer", opt_num(r.mean_answer)},
          {"precision", opt_num(r.mean_precision)},
          {"recall", opt_num(r.mean_recall)},
          {"action", opt_num(r.mean_action)},
          {"action_h", opt_num(r.mean_action_h)},
          {"action_v", opt_num(r.mean_action_v)}};
}

json rows_json(const std::vector<AggregateRow>& rows) {
  json a = json::array();
  for (const auto& r : rows) a.push_back(row_json(r));
  return a;
}

struct Means {
  int n = 0;
  int n_answer = 0;
  double answer = NAN;
  double action = NAN;
};

Means means(const std::vector<const ScoreRecord*>& rs) {
  Means m;
  double a = 0, c = 0;
  for (const auto* r : rs) {
    ++m.n;
    c += r->action.action;
    if (r->answer.available()) {
      ++m.n_answer;
      a += *r->answer.answer;
    }
  }
  if (m.n > 0) m.action = c / m.n;
  if (m.n_answer > 0) m.answer = a / m.n_answer;
  return m;
}

json means_json(const Means& m) {
  return {{"n", m.n}, {"n_answer", m.n_answer}, {"answer", opt_num(m.answer)}, {"action", opt_num(m.action)}};
}

json matrix_json(const std::vector<std::vector<std::optional<double>>>& m) {
  json a = json::array();
  for (const auto& row : m) {
    json r = json::array();
    for (const auto& v : row) r.push_back(opt_num(v));
    a.push_back(r);
  }
  return a;
}

json correlation_pair(const std::vector<double>& x, const std::vector<double>& y) {
  json j{{"n", x.size()}, {"srcc", nullptr}, {"plcc", nullptr}};
  try {
    j["srcc"] = srcc(x, y);
  } catch (const Error&) {
  }
  try {
    j["plcc"] = plcc(x, y);
  } catch (const Error&) {
  }
  return j;
}

template <typename Pred>
std::vector<const ScoreRecord*> select(const std::vector<ScoreRecord>& all, Pred&& p) {
  std::vector<const ScoreRecord*> out;
  for (const auto& r : all)
    if (p(r)) out.push_back(&r);
  return out;
}

}  // namespace

json score_run(const fs::path& dir, int top_k) {
  const auto manifest = json::parse(read_text(dir / kManifest));
  const auto raw = load_records(dir);
  if (raw.empty()) throw Error(ErrorCode::EmptyRun, fmt::format("run '{}' has no records", dir.filename().string()));

  std::vector<ScoreRecord> recs;
  std::map<int, std::vector<NormPoint>> hits;  // combo index -> correct clicks, original frame
  std::map<std::pair<std::string, int>, FeatureVector> features;  // (sample, view) -> features
  std::map<std::string, int> sample_combo;
  for (const auto& j : raw) {
    auto r = ScoreRecord::from_json(j.at("score"));
    if (r.action.action == 1 && j.at("click").is_array()) {
      hits[r.combo.index()].emplace_back(j["click"][0].get<double>(), j["click"][1].get<double>());
    }
    if (const auto& f = j.at("features"); f.is_object()) {
      features[{r.sample_id, static_cast<int>(r.view)}] =
          FeatureVector{f.at("luminance").get<double>(), f.at("contrast").get<double>(),
                        f.at("chrominance").get<double>(), f.at("blur").get<double>(),
                        f.at("spatial_information").get<double>()};
    }
    sample_combo[r.sample_id] = r.combo.index();
    recs.push_back(std::move(r));
  }

  std::vector<ComboTag> combos;
  for (const auto& c : all_combos()) {
    if (std::any_of(recs.begin(), recs.end(), [&](const auto& r) { return r.combo == c; })) combos.push_back(c);
  }
  std::set<std::string> agent_set;
  for (const auto& r : recs) agent_set.insert(r.agent);
  const std::vector<std::string> agents(agent_set.begin(), agent_set.end());

  json b;
  b["run_id"] = manifest.at("run_id");
  b["records"] = recs.size();
  b["agents"] = agents;

  using GD = GroupDim;
  b["aggregates"] = {
      {"combo_resolution", rows_json(aggregate(recs, {GD::Combo, GD::Resolution}))},
      {"combo_difficulty", rows_json(aggregate(recs, {GD::Combo, GD::Difficulty}))},
      {"difficulty", rows_json(aggregate(recs, {GD::Difficulty}))},
      {"resolution", rows_json(aggregate(recs, {GD::Resolution}))},
      {"agent", rows_json(aggregate(recs, {GD::Agent}))},
      {"agent_resolution", rows_json(aggregate(recs, {GD::Agent, GD::Resolution}))},
      {"combo_resolution_agent", rows_json(aggregate(recs, {GD::Combo, GD::Resolution, GD::Agent}))},
  };

  // Ori. is the Large view; Dyn. pools every Middle and Small record.
  json ori_dyn = json::array();
  for (const auto& a : agents) {
    auto add = [&](const std::string& label, std::optional<ComboTag> c) {
      auto in = [&](const ScoreRecord& r) { return r.agent == a && (!c || r.combo == *c); };
      const auto ori = means(select(recs, [&](const auto& r) { return in(r) && r.view == ViewLabel::Large; }));
      const auto dyn = means(select(recs, [&](const auto& r) { return in(r) && r.view != ViewLabel::Large; }));
      ori_dyn.push_back({{"agent", a}, {"combo", label}, {"ori", means_json(ori)}, {"dyn", means_json(dyn)}});
    };
    for (const auto& c : combos) add(c.name(), c);
    add("All", std::nullopt);
  }
  b["ori_dyn"] = ori_dyn;

  // Cross-subset consistency over agents, one score per (combo, agent).
  json corr;
  for (const bool answer_metric : {true, false}) {
    std::vector<std::vector<double>> scores;
    std::vector<std::string> labels;
    for (const auto& c : all_combos()) {
      labels.push_back(c.name());
      std::vector<double> row;
      for (const auto& a : agents) {
        const auto m = means(select(recs, [&](const auto& r) { return r.combo == c && r.agent == a; }));
        row.push_back(answer_metric ? m.answer : m.action);
      }
      scores.push_back(std::move(row));
    }
    const auto m = subset_correlation_matrix(scores, labels, 3);
    corr[answer_metric ? "answer" : "action"] = {
        {"labels", m.labels}, {"mean", matrix_json(m.mean)}, {"srcc", matrix_json(m.srcc)}, {"plcc", matrix_json(m.plcc)}};
  }
  b["correlation_matrices"] = corr;

  // Answer-Action agreement over records carrying both scores.
  auto pairs = [&](auto&& pred) {
    std::vector<double> x, y;
    for (const auto& r : recs) {
      if (r.answer.available() && pred(r)) {
        x.push_back(*r.answer.answer);
        y.push_back(r.action.action);
      }
    }
    return correlation_pair(x, y);
  };
  json by_res = json::array(), by_diff = json::array();
  auto agreement_rows = [&](const std::string& label, std::optional<ComboTag> c) {
    auto in = [&](const ScoreRecord& r) { return !c || r.combo == *c; };
    json rr{{"combo", label}}, rd{{"combo", label}};
    for (auto v : kAllViews) rr[std::string(to_string(v))] = pairs([&](const auto& r) { return in(r) && r.view == v; });
    rr["All"] = pairs(in);
    for (auto dd : kAllDifficulties) {
      rd[std::string(to_string(dd))] = pairs([&](const auto& r) { return in(r) && r.difficulty == dd; });
    }
    rd["All"] = pairs(in);
    by_res.push_back(rr);
    by_diff.push_back(rd);
  };
  for (const auto& c : combos) agreement_rows(c.name(), c);
  agreement_rows("All", std::nullopt);
  b["answer_action"] = {{"by_resolution", by_res}, {"by_difficulty", by_diff}};

  // Gains over the top-k agents by Action.
  const auto top = top_k_agents(recs, top_k, true);
  const std::set<std::string> top_set(top.begin(), top.end());
  json gains_res = json::array(), gains_diff = json::array();
  auto gain_rows = [&](const std::string& label, std::optional<ComboTag> c) {
    auto in = [&](const ScoreRecord& r) { return top_set.count(r.agent) && (!c || r.combo == *c); };
    auto build = [&](const std::vector<std::pair<std::string, std::function<bool(const ScoreRecord&)>>>& levels) {
      std::vector<std::pair<std::string, double>> pts;
      json missing = json::array();
      for (const auto& [name, pred] : levels) {
        const auto m = means(select(recs, [&](const auto& r) { return in(r) && pred(r); }));
        if (m.n == 0) {
          missing.push_back(name);
        } else {
          pts.emplace_back(name, m.action);
        }
      }
      json row{{"combo", label}, {"missing", missing}, {"levels", json::array()}};
      if (missing.empty()) {
        for (const auto& g : gain_table(pts)) {
          row["levels"].push_back({{"level", g.level}, {"mean", g.mean}, {"abs_gain", opt_num(g.abs_gain)},
                                   {"pct_gain", opt_num(g.pct_gain)}});
        }
      }
      return row;
    };
    gains_res.push_back(build({{"Large", [](const ScoreRecord& r) { return r.view == ViewLabel::Large; }},
                               {"Middle", [](const ScoreRecord& r) { return r.view == ViewLabel::Middle; }},
                               {"Small", [](const ScoreRecord& r) { return r.view == ViewLabel::Small; }}}));
    gains_diff.push_back(build({{"Hard", [](const ScoreRecord& r) { return r.difficulty == DifficultyTag::Hard; }},
                                {"Normal", [](const ScoreRecord& r) { return r.difficulty == DifficultyTag::Normal; }},
                                {"Easy", [](const ScoreRecord& r) { return r.difficulty == DifficultyTag::Easy; }}}));
  };
  for (const auto& c : combos) gain_rows(c.name(), c);
  gain_rows("All", std::nullopt);
  b["gains"] = {{"metric", "action"}, {"top_k", top_k}, {"agents", top}, {"resolution", gains_res}, {"difficulty", gains_diff}};

  // Phase quadrants against the means of each combo.
  json phases = json::array();
  auto phase_rows = [&](const std::string& label, std::optional<ComboTag> c) {
    const auto rs = select(recs, [&](const auto& r) { return r.answer.available() && (!c || r.combo == *c); });
    json row{{"combo", label}, {"n", rs.size()}, {"counts", {{"P1", 0}, {"P2", 0}, {"P3", 0}, {"P4", 0}}},
             {"points", json::array()}};
    if (!rs.empty()) {
      const auto m = means(rs);
      row["mean_answer"] = m.answer;
      row["mean_action"] = m.action;
      for (const auto* r : rs) {
        const auto ph = phase_assign(*r->answer.answer, r->action.action, m.answer, m.action);
        row["counts"][std::string(to_string(ph))] = row["counts"][std::string(to_string(ph))].get<int>() + 1;
        row["points"].push_back({{"sample_id", r->sample_id}, {"view", to_string(r->view)}, {"agent", r->agent},
                                 {"answer", *r->answer.answer}, {"action", r->action.action},
                                 {"phase", to_string(ph)}});
      }
    }
    phases.push_back(row);
  };
  for (const auto& c : combos) phase_rows(c.name(), c);
  phase_rows("All", std::nullopt);
  b["phases"] = phases;

  // Click-density grids of correct clicks and their pairwise JSD.
  json heat = json::array();
  std::vector<std::pair<std::string, HeatGrid>> grids;
  for (const auto& c : combos) {
    const auto& pts = hits[c.index()];
    const auto g = build_heatmap(pts);
    json bins = json::array();
    for (int y = 0; y < g.gy(); ++y) {
      json row = json::array();
      for (int x = 0; x < g.gx(); ++x) row.push_back(g.at(x, y));
      bins.push_back(row);
    }
    heat.push_back({{"combo", c.name()}, {"points", pts.size()}, {"gx", g.gx()}, {"gy", g.gy()}, {"bins", bins}});
    grids.emplace_back(c.name(), g);
  }
  json jsd = json::array();
  for (const auto& [la, ga] : grids) {
    json row = json::array();
    for (const auto& [lb, gb] : grids) {
      row.push_back(ga.total() > 0 && gb.total() > 0 ? json(js_divergence(ga, gb)) : json(nullptr));
    }
    jsd.push_back(row);
  }
  json jsd_labels = json::array();
  for (const auto& g : grids) jsd_labels.push_back(g.first);
  b["heatmaps"] = {{"grids", heat}, {"jsd", {{"base", 2}, {"labels", jsd_labels}, {"matrix", jsd}}}};

  // Mean low-level features per combo and view.
  json feats = json::array();
  for (const auto& c : combos) {
    for (auto v : kAllViews) {
      FeatureVector sum;
      int n = 0;
      for (const auto& [key, f] : features) {
        if (key.second != static_cast<int>(v) || sample_combo[key.first] != c.index()) continue;
        sum.luminance += f.luminance;
        sum.contrast += f.contrast;
        sum.chrominance += f.chrominance;
        sum.blur += f.blur;
        sum.spatial_information += f.spatial_information;
        ++n;
      }
      if (n == 0) continue;
      const double k = n;
      feats.push_back({{"combo", c.name()},
                       {"view", to_string(v)},
                       {"images", n},
                       {"features", features_json({sum.luminance / k, sum.contrast / k, sum.chrominance / k,
                                                   sum.blur / k, sum.spatial_information / k})}});
    }
  }
  b["features"] = feats;

  // Per-record verdict distributions for the top-k answering agents.
  json dist = json::array();
  for (const auto& a : top_k_agents(recs, top_k, false)) {
    json p = json::array(), r = json::array();
    for (const auto& rec : recs) {
      if (rec.agent != a || !rec.answer.available()) continue;
      p.push_back(*rec.answer.precision);
      r.push_back(*rec.answer.recall);
    }
    dist.push_back({{"agent", a}, {"precision", p}, {"recall", r}});
  }
  b["answer_distribution"] = dist;

  b["notes"] = json::array({
      "Dyn. is the mean over all Middle and Small records; whether published Dyn. columns average both reduced views or report one of them is unresolved.",
      "JSD is base 2, so values lie in [0, 1].",
      "Phase ties fold to the lower side (P2/P3).",
  });

  fs::create_directories(dir / "scores");
  write_atomic(dir / "scores" / "scores.json", b.dump(2) + "\n");
  return b;
}

}  // namespace edabench
