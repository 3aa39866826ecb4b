#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avcount/model.hpp"
#include "avcount/rewards.hpp"

namespace avcount::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSchema = 2;
inline constexpr int kExitJoin = 3;
inline constexpr int kExitRefusal = 4;

// Prediction and annotation ids do not line up.
class JoinError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An input file is missing or unreadable. Reported like a schema error.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Defaults for every tunable; loaded from the JSON file named by AVCOUNT_CONFIG
// and then overridden by command-line flags.
struct Config {
  std::int64_t fallback{0};
  RewardWeights weights;
  double review_fraction{0.2};
  double pass_threshold{0.5};
  double iou_discard_above{0.9};
  std::vector<std::int64_t> count_ranges{5, 10, 20};
  std::int64_t max_count{76};
  std::size_t quota{2500};
  std::uint64_t seed{0};
  unsigned threads{1};
};

inline constexpr const char* kConfigEnv = "AVCOUNT_CONFIG";

Config config_from_json(const nlohmann::json& j, Config base = {});
nlohmann::json to_json(const Config& c);
// Reads AVCOUNT_CONFIG when set; defaults otherwise.
Config load_config();

std::uint64_t fnv1a(std::string_view bytes);

struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  nlohmann::json config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> warnings;
};
nlohmann::json to_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::string& path);

std::string version();

struct EvalOptions {
  std::string annotations;
  std::string predictions;
  std::string out_dir;
};

// Writes report.json, report.txt, samples.csv and run_manifest.json to out_dir.
void cmd_eval_blackbox(const EvalOptions& o, Setting setting, const Config& cfg);
// Writes per_sample.jsonl, report.json, report.txt and run_manifest.json to out_dir.
void cmd_eval_whitebox(const EvalOptions& o, const Config& cfg);

// Streams one RewardBreakdown line per request line, flushing each line.
void run_rewards(std::istream& in, std::ostream& out, const RewardWeights& w);
void cmd_rewards(const std::string& input, const std::string& output,
                 const std::optional<std::string>& manifest, const Config& cfg);

void cmd_curriculum_filter(const std::string& rollouts, const std::string& output,
                           const Config& cfg);
void cmd_curriculum_stage(const std::string& new_samples, const std::string& history,
                          const std::string& output, const std::string& stage_name, int epoch,
                          const Config& cfg);
void cmd_curriculum_fulltask(const std::string& rollouts, const std::string& output,
                             const Config& cfg);

// One LongAcc, one RefAcc and one WhiteBox record per annotation.
void cmd_random_baseline(const std::string& annotations, const std::string& output,
                         const Config& cfg);
std::vector<RawModelOutput> random_baseline(const std::vector<CountingQuestion>& questions,
                                            std::int64_t max_count, std::uint64_t seed);

// Prints one JSON line per violation; returns the number of violations.
std::size_t cmd_validate(const std::string& annotations, std::ostream& out);

// Runs `fn`, maps exceptions to exit codes and prints diagnostics to `err`.
int guarded(const std::function<void()>& fn, std::ostream& err);

}  // namespace avcount::cli
