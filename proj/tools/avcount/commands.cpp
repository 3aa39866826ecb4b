#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "avcount/blackbox.hpp"
#include "avcount/curriculum.hpp"
#include "avcount/extract.hpp"
#include "avcount/io.hpp"
#include "avcount/rng.hpp"
#include "avcount/whitebox.hpp"

#ifndef AVCOUNT_VERSION
#define AVCOUNT_VERSION "0.0.0"
#endif

namespace avcount::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version() { return AVCOUNT_VERSION; }

// ---- config ----

Config config_from_json(const json& j, Config c) {
  if (!j.is_object()) throw SchemaError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "fallback") {
      c.fallback = v.get<std::int64_t>();
    } else if (key == "weights") {
      c.weights.format = v.value("format", c.weights.format);
      c.weights.task = v.value("task", c.weights.task);
    } else if (key == "review_fraction") {
      c.review_fraction = v.get<double>();
    } else if (key == "pass_threshold") {
      c.pass_threshold = v.get<double>();
    } else if (key == "iou_discard_above") {
      c.iou_discard_above = v.get<double>();
    } else if (key == "count_ranges") {
      c.count_ranges = v.get<std::vector<std::int64_t>>();
    } else if (key == "max_count") {
      c.max_count = v.get<std::int64_t>();
    } else if (key == "quota") {
      c.quota = v.get<std::size_t>();
    } else if (key == "seed") {
      c.seed = v.get<std::uint64_t>();
    } else if (key == "threads") {
      c.threads = v.get<unsigned>();
    } else {
      throw SchemaError("config: unknown key '" + key + "'");
    }
  }
  if (!(c.review_fraction >= 0.0 && c.review_fraction <= 1.0)) {
    throw SchemaError("config: review_fraction must lie in [0, 1]");
  }
  if (c.max_count < 1) throw SchemaError("config: max_count must be at least 1");
  if (!std::is_sorted(c.count_ranges.begin(), c.count_ranges.end()) ||
      std::adjacent_find(c.count_ranges.begin(), c.count_ranges.end()) != c.count_ranges.end()) {
    throw SchemaError("config: count_ranges must be strictly increasing");
  }
  return c;
}

json to_json(const Config& c) {
  return {{"fallback", c.fallback},
          {"weights", {{"format", c.weights.format}, {"task", c.weights.task}}},
          {"review_fraction", c.review_fraction},
          {"pass_threshold", c.pass_threshold},
          {"iou_discard_above", c.iou_discard_above},
          {"count_ranges", c.count_ranges},
          {"max_count", c.max_count},
          {"quota", c.quota},
          {"seed", c.seed},
          {"threads", c.threads}};
}

Config load_config() {
  const char* path = std::getenv(kConfigEnv);
  if (!path || !*path) return {};
  std::ifstream in(path);
  if (!in) throw InputError(std::string("cannot open config ") + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw SchemaError(std::string(path) + ": malformed JSON");
  try {
    return config_from_json(j);
  } catch (const json::exception& e) {
    throw SchemaError(std::string(path) + ": " + e.what());
  }
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---- run manifest ----

json to_json(const RunManifest& m) {
  char digest[17];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(fnv1a(m.config.dump())));
  json j = {{"command", m.command},
            {"inputs", m.inputs},
            {"outputs", m.outputs},
            {"config", m.config},
            {"config_digest", std::string("fnv1a64:") + digest},
            {"seed", m.seed ? json(*m.seed) : json(nullptr)},
            {"version", version()}};
  if (!m.warnings.empty()) j["warnings"] = m.warnings;
  return j;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  if (path == "-") {
    std::cerr << to_json(m).dump() << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << to_json(m).dump(2) << '\n';
}

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  return out;
}

std::string manifest_path_for(const std::string& output) { return output + ".manifest.json"; }

// Prefixes schema errors with the file they came from.
template <typename Fn>
auto with_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const SchemaError& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

std::vector<CountingQuestion> load_annotations(const std::string& path) {
  auto in = open_in(path);
  auto questions = with_path(path, [&] { return read_questions(in); });
  std::set<std::string> ids;
  for (const auto& q : questions) {
    if (!ids.insert(q.id).second) {
      throw SchemaError(path + ": duplicate annotation id '" + q.id + "'");
    }
    if (const auto v = validate_question(q); !v.empty()) {
      throw SchemaError(path + ": annotation '" + q.id + "' is inconsistent: " + v[0].field +
                        ": " + v[0].rule);
    }
  }
  return questions;
}

// Predictions for one setting keyed by sample id, checked against the annotations.
std::map<std::string, std::string> load_predictions(const std::string& path, Setting setting,
                                                    const std::vector<CountingQuestion>& qs) {
  auto in = open_in(path);
  std::map<std::string, std::string> by_id;
  with_path(path, [&] {
    for_each_jsonl(in, [&](const json& j, std::size_t line) {
      auto r = raw_output_from_json(j);
      if (r.setting != setting) return;
      if (!by_id.emplace(r.sample_id, std::move(r.text)).second) {
        throw SchemaError("duplicate prediction for '" + r.sample_id + "'", line);
      }
    });
  });

  std::set<std::string> known;
  for (const auto& q : qs) known.insert(q.id);
  std::vector<std::string> unknown;
  for (const auto& [id, text] : by_id) {
    if (!known.contains(id)) unknown.push_back(id);
  }
  if (!unknown.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(unknown.size(), 5); ++i) {
      list += (i ? ", " : "") + unknown[i];
    }
    throw JoinError(std::to_string(unknown.size()) + " prediction(s) reference unknown ids: " +
                    list);
  }
  if (by_id.empty()) {
    throw JoinError("no " + std::string(to_string(setting)) +
                    " prediction matches an annotation id");
  }
  return by_id;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

// ---- evaluation ----

void cmd_eval_blackbox(const EvalOptions& o, Setting setting, const Config& cfg) {
  const auto questions = load_annotations(o.annotations);
  const auto preds = load_predictions(o.predictions, setting, questions);

  std::vector<BlackBoxSample> samples;
  std::vector<std::string> status;
  std::size_t missing = 0;
  for (const auto& q : questions) {
    BlackBoxSample s;
    s.sample_id = q.id;
    s.target = q.target;
    s.modality = q.modality;
    s.gt_count = q.gt_count;
    ParsedAnswer parsed = ParseFailure{"missing-prediction"};
    if (auto it = preds.find(q.id); it != preds.end()) {
      parsed = parse_count_answer(it->second);
    } else {
      ++missing;
    }
    if (const auto* c = std::get_if<CountAnswer>(&parsed)) s.predicted = c->value;
    const auto* f = std::get_if<ParseFailure>(&parsed);
    s.parse_failed = f != nullptr;
    status.push_back(f ? f->reason : "ok");
    s.score = score_sample(parsed, q.gt_count, cfg.fallback);
    samples.push_back(std::move(s));
  }

  const auto report = aggregate(samples,
                                {BreakdownDimension::Target, BreakdownDimension::Modality,
                                 BreakdownDimension::CountRange},
                                CountRanges{cfg.count_ranges});
  fs::create_directories(o.out_dir);
  const auto dir = fs::path(o.out_dir);
  auto report_json = to_json(report);
  report_json["setting"] = std::string(to_string(setting));
  report_json["n_missing"] = missing;
  report_json["fallback"] = cfg.fallback;
  open_out((dir / "report.json").string()) << report_json.dump(2) << '\n';
  open_out((dir / "report.txt").string()) << format_table(report);

  auto csv = open_out((dir / "samples.csv").string());
  csv << "sample_id,target,modality,gt_count,predicted,status,correct,off_by_one,abs_err\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    csv << csv_field(s.sample_id) << ',' << to_string(s.target) << ',' << to_string(s.modality)
        << ',' << s.gt_count << ',' << (s.predicted ? std::to_string(*s.predicted) : "") << ','
        << status[i] << ',' << s.score.correct << ',' << s.score.off_by_one << ','
        << s.score.abs_err << '\n';
  }

  RunManifest m{"eval-blackbox",
                {o.annotations, o.predictions},
                {(dir / "report.json").string(), (dir / "report.txt").string(),
                 (dir / "samples.csv").string()},
                to_json(cfg),
                std::nullopt,
                {}};
  if (missing) m.warnings.push_back(std::to_string(missing) + " annotation(s) had no prediction");
  write_manifest(m, (dir / "run_manifest.json").string());
}

void cmd_eval_whitebox(const EvalOptions& o, const Config& cfg) {
  const auto questions = load_annotations(o.annotations);
  const auto preds = load_predictions(o.predictions, Setting::WhiteBox, questions);

  std::vector<WhiteBoxSampleResult> results;
  std::size_t missing = 0;
  for (const auto& q : questions) {
    if (auto it = preds.find(q.id); it != preds.end()) {
      results.push_back(evaluate_whitebox(q, it->second));
    } else {
      WhiteBoxSampleResult r;
      r.sample_id = q.id;
      r.target = q.target;
      r.failure_reason = "missing-prediction";
      results.push_back(std::move(r));
      ++missing;
    }
  }
  const auto report = aggregate_whitebox(results);

  fs::create_directories(o.out_dir);
  const auto dir = fs::path(o.out_dir);
  auto per_sample = open_out((dir / "per_sample.jsonl").string());
  for (const auto& r : results) per_sample << to_json(r).dump() << '\n';
  auto report_json = to_json(report);
  report_json["n_missing"] = missing;
  open_out((dir / "report.json").string()) << report_json.dump(2) << '\n';
  open_out((dir / "report.txt").string()) << format_table(report);

  RunManifest m{"eval-whitebox",
                {o.annotations, o.predictions},
                {(dir / "per_sample.jsonl").string(), (dir / "report.json").string(),
                 (dir / "report.txt").string()},
                to_json(cfg),
                std::nullopt,
                {}};
  if (missing) m.warnings.push_back(std::to_string(missing) + " annotation(s) had no prediction");
  write_manifest(m, (dir / "run_manifest.json").string());
}

// ---- rewards ----

void run_rewards(std::istream& in, std::ostream& out, const RewardWeights& w) {
  for_each_jsonl(in, [&](const json& j, std::size_t) {
    const auto req = reward_request_from_json(j);
    auto rec = to_json(compute_reward(req.task, req.text, req.gt, w));
    if (!req.id.empty()) rec["id"] = req.id;
    out << rec.dump() << '\n';
    out.flush();
  });
}

void cmd_rewards(const std::string& input, const std::string& output,
                 const std::optional<std::string>& manifest, const Config& cfg) {
  std::ifstream file_in;
  std::ofstream file_out;
  std::istream* in = &std::cin;
  std::ostream* out = &std::cout;
  if (input != "-") {
    file_in = open_in(input);
    in = &file_in;
  }
  if (output != "-") {
    file_out = open_out(output);
    out = &file_out;
  }
  with_path(input == "-" ? "<stdin>" : input, [&] { run_rewards(*in, *out, cfg.weights); });
  RunManifest m{"rewards", {input}, {output}, to_json(cfg), std::nullopt, {}};
  write_manifest(m, manifest ? *manifest : output == "-" ? "-" : manifest_path_for(output));
}

// ---- curriculum ----

namespace {

std::vector<RolloutRecord> load_rollouts(const std::string& path) {
  auto in = open_in(path);
  std::vector<RolloutRecord> out;
  with_path(path, [&] {
    for_each_jsonl(in, [&](const json& j, std::size_t) { out.push_back(rollout_from_json(j)); });
  });
  return out;
}

std::vector<SampleRef> load_samples(const std::string& path) {
  auto in = open_in(path);
  std::vector<SampleRef> out;
  with_path(path, [&] {
    for_each_jsonl(in, [&](const json& j, std::size_t) { out.push_back(sample_ref_from_json(j)); });
  });
  return out;
}

}  // namespace

void cmd_curriculum_filter(const std::string& rollouts, const std::string& output,
                           const Config& cfg) {
  const auto records = load_rollouts(rollouts);
  const auto kept = filter_samples(records, {cfg.iou_discard_above, cfg.threads});
  auto out = open_out(output);
  for (const auto& k : kept) out << to_json(k).dump() << '\n';
  RunManifest m{"curriculum filter", {rollouts}, {output}, to_json(cfg), std::nullopt, {}};
  m.warnings.push_back(std::to_string(records.size() - kept.size()) + " of " +
                       std::to_string(records.size()) + " sample(s) discarded");
  write_manifest(m, manifest_path_for(output));
}

void cmd_curriculum_stage(const std::string& new_samples, const std::string& history,
                          const std::string& output, const std::string& stage_name, int epoch,
                          const Config& cfg) {
  const auto fresh = load_samples(new_samples);
  const auto past = history.empty() ? std::vector<SampleRef>{} : load_samples(history);
  const auto stage = build_stage(fresh, past, cfg.review_fraction, cfg.seed);
  std::vector<ManifestEntry> entries;
  for (const auto& e : stage) entries.push_back({e.sample, stage_name, epoch, e.review, std::nullopt});
  open_out(output) << manifest_to_jsonl(entries);

  RunManifest m{"curriculum stage", {new_samples}, {output}, to_json(cfg), cfg.seed, {}};
  if (!history.empty()) m.inputs.push_back(history);
  write_manifest(m, manifest_path_for(output));
}

void cmd_curriculum_fulltask(const std::string& rollouts, const std::string& output,
                             const Config& cfg) {
  const auto records = load_rollouts(rollouts);
  const auto kept = filter_samples(records, {cfg.iou_discard_above, cfg.threads});
  std::set<std::string> kept_ids;
  for (const auto& k : kept) kept_ids.insert(k.sample_id);
  std::vector<RolloutRecord> eligible;
  for (const auto& r : records) {
    if (kept_ids.contains(r.sample_id)) eligible.push_back(r);
  }
  const auto full = sample_full_task(build_difficulty_pools(eligible, cfg.pass_threshold),
                                     cfg.quota, cfg.seed);
  std::vector<ManifestEntry> entries;
  for (const auto& e : full.entries) entries.push_back({e.sample, "full_task", 0, false, e.difficulty});
  open_out(output) << manifest_to_jsonl(entries);

  RunManifest m{"curriculum fulltask", {rollouts}, {output}, to_json(cfg), cfg.seed, full.warnings};
  for (const auto& w : full.warnings) std::cerr << "warning: " << w << '\n';
  write_manifest(m, manifest_path_for(output));
}

// ---- random baseline ----

namespace {

double round2(double v) { return static_cast<double>(static_cast<std::int64_t>(v * 100.0)) / 100.0; }

json random_box(Rng& rng) {
  const double x0 = round2(rng.uniform_real(0, 1000)), x1 = round2(rng.uniform_real(0, 1000));
  const double y0 = round2(rng.uniform_real(0, 1000)), y1 = round2(rng.uniform_real(0, 1000));
  return json::array({std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)});
}

std::string random_whitebox_answer(const CountingQuestion& q, std::int64_t n, Rng& rng) {
  std::vector<std::string> frames = q.clue_frames;
  if (frames.empty()) frames.push_back("Frame1");
  json answer;
  switch (q.target) {
    case CountTarget::Event: {
      answer = json::array();
      const auto& ref = q.reference_interval;
      for (std::int64_t i = 0; i < n; ++i) {
        const double a = round2(rng.uniform_real(ref.start_s, ref.end_s));
        const double b = round2(rng.uniform_real(ref.start_s, ref.end_s));
        answer.push_back({std::min(a, b), std::max(a, b)});
      }
      break;
    }
    case CountTarget::Object: {
      answer = json::object();
      for (const auto& f : frames) answer[f] = json::array();
      for (std::int64_t i = 0; i < n; ++i) {
        answer[frames[rng.uniform_index(frames.size())]].push_back(random_box(rng));
      }
      break;
    }
    case CountTarget::Attribute: {
      answer = json::object();
      for (const auto& f : frames) answer[f] = json::array();
      const auto groups = rng.uniform_int(1, n);
      for (std::int64_t i = 0; i < n; ++i) {
        answer[frames[rng.uniform_index(frames.size())]].push_back(
            {{"bbox", random_box(rng)},
             {"label", "group" + std::to_string(rng.uniform_int(1, groups))}});
      }
      break;
    }
  }
  return "<think></think><answer>" + answer.dump() + "</answer>";
}

}  // namespace

std::vector<RawModelOutput> random_baseline(const std::vector<CountingQuestion>& questions,
                                            std::int64_t max_count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RawModelOutput> out;
  out.reserve(questions.size() * 3);
  for (const auto& q : questions) {
    for (auto setting : {Setting::LongAcc, Setting::RefAcc}) {
      out.push_back({q.id, setting,
                     "<think></think><answer>" + std::to_string(rng.uniform_int(1, max_count)) +
                         "</answer>"});
    }
    out.push_back({q.id, Setting::WhiteBox,
                   random_whitebox_answer(q, rng.uniform_int(1, max_count), rng)});
  }
  return out;
}

void cmd_random_baseline(const std::string& annotations, const std::string& output,
                         const Config& cfg) {
  const auto questions = load_annotations(annotations);
  auto out = open_out(output);
  for (const auto& r : random_baseline(questions, cfg.max_count, cfg.seed)) {
    out << to_json(r).dump() << '\n';
  }
  RunManifest m{"random-baseline", {annotations}, {output}, to_json(cfg), cfg.seed, {}};
  write_manifest(m, manifest_path_for(output));
}

// ---- validate ----

std::size_t cmd_validate(const std::string& annotations, std::ostream& out) {
  auto in = open_in(annotations);
  const auto questions = with_path(annotations, [&] { return read_questions(in); });
  std::size_t n = 0;
  for (const auto& q : questions) {
    for (const auto& v : validate_question(q)) {
      out << json{{"id", q.id}, {"field", v.field}, {"rule", v.rule}}.dump() << '\n';
      ++n;
    }
  }
  return n;
}

// ---- exit codes ----

int guarded(const std::function<void()>& fn, std::ostream& err) {
  try {
    fn();
    return kExitOk;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const json::exception& e) {
    err << "schema error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const JoinError& e) {
    err << "join error: " << e.what() << '\n';
    return kExitJoin;
  } catch (const std::exception& e) {
    err << "refused: " << e.what() << '\n';
    return kExitRefusal;
  }
}

}  // namespace avcount::cli
