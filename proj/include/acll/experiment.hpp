#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "acll/dataset.hpp"
#include "acll/errors.hpp"
#include "acll/lifelong.hpp"

#include <json.hpp>

namespace acll {

struct TaskDescriptor {
  std::string name;
  DatasetKind kind = DatasetKind::blobs;
  int class_count = 2;
  double noise_std = 0.1;
  int n_per_split = 0;  // 0 = inherit the experiment-wide value
};

struct ExperimentConfig {
  std::string preset;  // empty when tasks are given explicitly
  std::vector<TaskDescriptor> tasks;
  std::vector<Strategy> strategies;
  std::vector<int> layer_dims{2, 64, 64};
  TrainConfig train{60, 0.1, 32, 0, Optimizer::plain_sgd};
  TrainConfig finetune{20, 0.05, 32, 0, Optimizer::plain_sgd};
  DualSearchConfig dual;
  Granularity granularity = Granularity::global;
  int n_per_split = 512;
  std::uint64_t seed = 1;
  std::string out = "results";
};

inline std::vector<TaskDescriptor> preset_task_descriptors(const std::string& preset) {
  const TaskDescriptor blobs{"blobs2", DatasetKind::blobs, 2, 0.4, 0};
  const TaskDescriptor spirals{"spirals5", DatasetKind::spirals, 5, 0.05, 0};
  const TaskDescriptor rings{"rings3", DatasetKind::rings, 3, 0.08, 0};
  if (preset == "simple_to_hard") return {blobs, spirals, rings};
  if (preset == "hard_to_simple") return {spirals, blobs, rings};
  throw InvalidSpecError("unknown preset '" + preset + "'");
}

inline bool is_known_preset(const std::string& preset) {
  return preset == "simple_to_hard" || preset == "hard_to_simple";
}

namespace detail {

inline void check_known_keys(const nlohmann::json& obj, const std::string& prefix,
                             std::initializer_list<const char*> known,
                             std::vector<std::string>& diags) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) diags.push_back(prefix + key + ": unknown field");
  }
}

inline void parse_train_block(const nlohmann::json& j, const std::string& path, TrainConfig& cfg,
                              std::vector<std::string>& diags) {
  if (!j.is_object()) {
    diags.push_back(path + ": must be an object");
    return;
  }
  check_known_keys(j, path + ".", {"epochs", "learning_rate", "batch_size", "optimizer"}, diags);
  if (j.contains("epochs")) {
    if (!j["epochs"].is_number_integer() || j["epochs"].get<int>() < 1)
      diags.push_back(path + ".epochs: must be an integer >= 1");
    else
      cfg.epochs = j["epochs"].get<int>();
  }
  if (j.contains("learning_rate")) {
    if (!j["learning_rate"].is_number() || !(j["learning_rate"].get<double>() > 0.0))
      diags.push_back(path + ".learning_rate: must be > 0");
    else
      cfg.learning_rate = j["learning_rate"].get<double>();
  }
  if (j.contains("batch_size")) {
    if (!j["batch_size"].is_number_integer() || j["batch_size"].get<int>() < 1)
      diags.push_back(path + ".batch_size: must be an integer >= 1");
    else
      cfg.batch_size = j["batch_size"].get<int>();
  }
  if (j.contains("optimizer")) {
    const std::string opt = j["optimizer"].is_string() ? j["optimizer"].get<std::string>() : "";
    if (opt == "sgd")
      cfg.optimizer = Optimizer::plain_sgd;
    else if (opt == "momentum")
      cfg.optimizer = Optimizer::momentum_sgd;
    else
      diags.push_back(path + ".optimizer: must be \"sgd\" or \"momentum\"");
  }
}

}  // namespace detail

/// Builds the config from parsed JSON, appending one diagnostic per violated
/// constraint. The returned config is only usable when `diags` stays empty.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                                std::vector<std::string>& diags) {
  ExperimentConfig cfg;
  if (!j.is_object()) {
    diags.push_back("config: top level must be a JSON object");
    return cfg;
  }
  detail::check_known_keys(j, "",
                           {"preset", "tasks", "strategies", "layer_dims", "train", "finetune",
                            "dual", "bo", "granularity", "n_per_split", "seed", "out"},
                           diags);

  const bool has_preset = j.contains("preset");
  const bool has_tasks = j.contains("tasks");
  if (has_preset == has_tasks) {
    diags.push_back("preset: exactly one of \"preset\" and \"tasks\" must be given");
  } else if (has_preset) {
    if (!j["preset"].is_string() || !is_known_preset(j["preset"].get<std::string>()))
      diags.push_back("preset: must be \"simple_to_hard\" or \"hard_to_simple\"");
    else
      cfg.preset = j["preset"].get<std::string>();
  } else {
    if (!j["tasks"].is_array() || j["tasks"].empty()) {
      diags.push_back("tasks: must be a non-empty array");
    } else {
      for (std::size_t i = 0; i < j["tasks"].size(); ++i) {
        const auto& tj = j["tasks"][i];
        const std::string path = "tasks[" + std::to_string(i) + "]";
        TaskDescriptor td;
        if (!tj.is_object()) {
          diags.push_back(path + ": must be an object");
          continue;
        }
        detail::check_known_keys(tj, path + ".",
                                 {"name", "kind", "class_count", "noise_std", "n_per_split"},
                                 diags);
        if (tj.contains("name") && tj["name"].is_string())
          td.name = tj["name"].get<std::string>();
        if (!tj.contains("kind") || !tj["kind"].is_string()) {
          diags.push_back(path + ".kind: must be \"blobs\", \"rings\", or \"spirals\"");
        } else {
          try {
            td.kind = dataset_kind_from_string(tj["kind"].get<std::string>());
          } catch (const InvalidSpecError&) {
            diags.push_back(path + ".kind: must be \"blobs\", \"rings\", or \"spirals\"");
          }
        }
        if (tj.contains("class_count")) {
          if (!tj["class_count"].is_number_integer() || tj["class_count"].get<int>() < 2)
            diags.push_back(path + ".class_count: must be an integer >= 2");
          else
            td.class_count = tj["class_count"].get<int>();
        }
        if (tj.contains("noise_std")) {
          if (!tj["noise_std"].is_number() || tj["noise_std"].get<double>() < 0.0)
            diags.push_back(path + ".noise_std: must be >= 0");
          else
            td.noise_std = tj["noise_std"].get<double>();
        }
        if (tj.contains("n_per_split")) {
          if (!tj["n_per_split"].is_number_integer() || tj["n_per_split"].get<int>() < 2)
            diags.push_back(path + ".n_per_split: must be an integer >= 2");
          else
            td.n_per_split = tj["n_per_split"].get<int>();
        }
        if (td.name.empty()) td.name = to_string(td.kind) + std::to_string(td.class_count);
        cfg.tasks.push_back(td);
      }
    }
  }

  if (!j.contains("strategies") || !j["strategies"].is_array() || j["strategies"].empty()) {
    diags.push_back("strategies: must be a non-empty array");
  } else {
    for (std::size_t i = 0; i < j["strategies"].size(); ++i) {
      const auto& sj = j["strategies"][i];
      const std::string path = "strategies[" + std::to_string(i) + "]";
      if (!sj.is_object() || !sj.contains("name") || !sj["name"].is_string()) {
        diags.push_back(path + ": must be an object with a \"name\"");
        continue;
      }
      detail::check_known_keys(sj, path + ".", {"name", "epsilon", "rate"}, diags);
      Strategy s;
      s.name = sj["name"].get<std::string>();
      try {
        s.kind = strategy_kind_from_string(s.name);
      } catch (const InvalidSpecError&) {
        diags.push_back(path + ": unknown strategy \"" + s.name + "\"");
        continue;
      }
      if (sj.contains("epsilon")) {
        if (s.kind != StrategyKind::acll)
          diags.push_back(path + ".epsilon: only valid for the acll strategy");
        else if (!sj["epsilon"].is_number() || sj["epsilon"].get<double>() < 0.0)
          diags.push_back(path + ".epsilon: must be >= 0");
        else
          s.epsilon = sj["epsilon"].get<double>();
      }
      if (sj.contains("rate")) {
        if (s.kind != StrategyKind::fixed)
          diags.push_back(path + ".rate: only valid for the fixed strategy");
        else if (!sj["rate"].is_number() || !(sj["rate"].get<double>() >= 0.0) ||
                 !(sj["rate"].get<double>() <= 1.0))
          diags.push_back(path + ".rate: must lie in [0,1]");
        else
          s.rate = sj["rate"].get<double>();
      }
      for (const auto& prev : cfg.strategies)
        if (prev.name == s.name)
          diags.push_back(path + ".name: duplicate strategy \"" + s.name + "\"");
      cfg.strategies.push_back(s);
    }
  }

  if (j.contains("layer_dims")) {
    bool ok = j["layer_dims"].is_array() && j["layer_dims"].size() >= 2;
    if (ok)
      for (const auto& d : j["layer_dims"])
        if (!d.is_number_integer() || d.get<int>() < 1) ok = false;
    if (ok && j["layer_dims"][0].get<int>() != 2) ok = false;
    if (!ok)
      diags.push_back("layer_dims: must be an integer array, length >= 2, starting with 2");
    else
      cfg.layer_dims = j["layer_dims"].get<std::vector<int>>();
  }

  if (j.contains("train")) detail::parse_train_block(j["train"], "train", cfg.train, diags);
  if (j.contains("finetune"))
    detail::parse_train_block(j["finetune"], "finetune", cfg.finetune, diags);

  if (j.contains("dual")) {
    const auto& dj = j["dual"];
    if (!dj.is_object()) {
      diags.push_back("dual: must be an object");
    } else {
      detail::check_known_keys(
          dj, "dual.", {"epsilon", "lambda_lo", "lambda_hi", "lambda_tol", "max_rounds"}, diags);
      if (dj.contains("epsilon")) {
        if (!dj["epsilon"].is_number() || dj["epsilon"].get<double>() < 0.0)
          diags.push_back("dual.epsilon: must be >= 0");
        else
          cfg.dual.epsilon = dj["epsilon"].get<double>();
      }
      if (dj.contains("lambda_lo")) {
        if (!dj["lambda_lo"].is_number() || dj["lambda_lo"].get<double>() < 0.0)
          diags.push_back("dual.lambda_lo: must be >= 0");
        else
          cfg.dual.lambda_lo = dj["lambda_lo"].get<double>();
      }
      if (dj.contains("lambda_hi")) {
        if (!dj["lambda_hi"].is_number())
          diags.push_back("dual.lambda_hi: must be a number");
        else
          cfg.dual.lambda_hi = dj["lambda_hi"].get<double>();
      }
      if (cfg.dual.lambda_hi <= cfg.dual.lambda_lo)
        diags.push_back("dual.lambda_hi: must exceed dual.lambda_lo");
      if (dj.contains("lambda_tol")) {
        if (!dj["lambda_tol"].is_number() || !(dj["lambda_tol"].get<double>() > 0.0))
          diags.push_back("dual.lambda_tol: must be > 0");
        else
          cfg.dual.lambda_tol = dj["lambda_tol"].get<double>();
      }
      if (dj.contains("max_rounds")) {
        if (!dj["max_rounds"].is_number_integer() || dj["max_rounds"].get<int>() < 1)
          diags.push_back("dual.max_rounds: must be an integer >= 1");
        else
          cfg.dual.max_rounds = dj["max_rounds"].get<int>();
      }
    }
  }

  if (j.contains("bo")) {
    const auto& bj = j["bo"];
    if (!bj.is_object()) {
      diags.push_back("bo: must be an object");
    } else {
      detail::check_known_keys(bj, "bo.", {"n_init", "n_iter"}, diags);
      if (bj.contains("n_init")) {
        if (!bj["n_init"].is_number_integer() || bj["n_init"].get<int>() < 2)
          diags.push_back("bo.n_init: must be an integer >= 2");
        else
          cfg.dual.bo_budget.n_init = bj["n_init"].get<int>();
      }
      if (bj.contains("n_iter")) {
        if (!bj["n_iter"].is_number_integer() || bj["n_iter"].get<int>() < 1)
          diags.push_back("bo.n_iter: must be an integer >= 1");
        else
          cfg.dual.bo_budget.n_iter = bj["n_iter"].get<int>();
      }
    }
  }

  if (j.contains("granularity")) {
    const std::string g = j["granularity"].is_string() ? j["granularity"].get<std::string>() : "";
    if (g == "global")
      cfg.granularity = Granularity::global;
    else if (g == "per_layer")
      cfg.granularity = Granularity::per_layer;
    else
      diags.push_back("granularity: must be \"global\" or \"per_layer\"");
  }

  if (j.contains("n_per_split")) {
    if (!j["n_per_split"].is_number_integer() || j["n_per_split"].get<int>() < 2)
      diags.push_back("n_per_split: must be an integer >= 2");
    else
      cfg.n_per_split = j["n_per_split"].get<int>();
  }

  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0)
      diags.push_back("seed: must be a non-negative integer");
    else
      cfg.seed = j["seed"].get<std::uint64_t>();
  }

  if (j.contains("out")) {
    if (!j["out"].is_string() || j["out"].get<std::string>().empty())
      diags.push_back("out: must be a non-empty string");
    else
      cfg.out = j["out"].get<std::string>();
  }

  // cross-field checks that need the assembled config
  if (diags.empty()) {
    std::vector<TaskDescriptor> tds =
        cfg.preset.empty() ? cfg.tasks : preset_task_descriptors(cfg.preset);
    for (std::size_t i = 0; i < tds.size(); ++i) {
      const int n = tds[i].n_per_split > 0 ? tds[i].n_per_split : cfg.n_per_split;
      if (n < tds[i].class_count)
        diags.push_back("tasks[" + std::to_string(i) +
                        "].n_per_split: must be >= class_count");
    }
  }
  return cfg;
}

struct ConfigLoad {
  ExperimentConfig config;
  std::vector<std::string> diagnostics;
};

/// Reads and validates a config file. I/O and JSON syntax problems come back
/// as diagnostics too; syntax errors carry a line number.
inline ConfigLoad load_experiment_config(const std::string& path) {
  ConfigLoad out;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    out.diagnostics.push_back(path + ": cannot open file");
    return out;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    const std::size_t stop = e.byte < text.size() ? e.byte : text.size();
    for (std::size_t i = 0; i < stop; ++i)
      if (text[i] == '\n') ++line;
    out.diagnostics.push_back(path + ":" + std::to_string(line) + ": " + e.what());
    return out;
  }
  out.config = parse_experiment_config(j, out.diagnostics);
  return out;
}

inline std::vector<std::string> validate_config(const std::string& path) {
  return load_experiment_config(path).diagnostics;
}

/// Materializes the task list: generates every dataset from the master seed.
inline std::vector<TaskSpec> build_tasks(const ExperimentConfig& cfg) {
  const std::vector<TaskDescriptor> tds =
      cfg.preset.empty() ? cfg.tasks : preset_task_descriptors(cfg.preset);
  std::vector<TaskSpec> tasks;
  for (std::size_t k = 0; k < tds.size(); ++k) {
    DatasetParams params;
    params.class_count = tds[k].class_count;
    params.n_per_split = tds[k].n_per_split > 0 ? tds[k].n_per_split : cfg.n_per_split;
    params.noise_std = tds[k].noise_std;
    TaskSpec spec;
    spec.name = tds[k].name;
    spec.dataset = generate_dataset(
        tds[k].kind, params, detail::derive_seed(cfg.seed, 0xda7a, static_cast<std::uint64_t>(k + 1)));
    spec.train_cfg = cfg.train;
    spec.finetune_cfg = cfg.finetune;
    tasks.push_back(std::move(spec));
  }
  return tasks;
}

inline nlohmann::ordered_json report_to_json(const SequenceReport& report) {
  nlohmann::ordered_json j;
  j["strategy"] = report.strategy_name;
  j["seed"] = report.seed;
  j["total_risk_evals"] = report.total_risk_evals;
  auto& tasks = j["tasks"] = nlohmann::ordered_json::array();
  for (const auto& r : report.tasks) {
    nlohmann::ordered_json tj;
    tj["task_id"] = r.task_id;
    tj["name"] = r.name;
    tj["theta"] = r.theta;
    tj["size"] = r.size;
    tj["reference_risk"] = r.reference_risk;
    tj["val_risk"] = r.val_risk;
    tj["acc_post_task"] = r.acc_post_task;
    tj["acc_end_of_sequence"] = r.acc_end_of_sequence;
    tj["owned_fraction_after"] = r.owned_fraction_after;
    tj["risk_evals"] = r.risk_evals;
    tj["infeasible"] = r.infeasible;
    tj["bracket_converged"] = r.bracket_converged;
    tj["lambda_final"] = r.lambda_final;
    auto& trail = tj["trail"] = nlohmann::ordered_json::array();
    for (const auto& round : r.trail) trail.push_back(dual_round_to_json(round));
    tasks.push_back(std::move(tj));
  }
  return j;
}

namespace detail {

inline std::string theta_csv_field(const std::vector<double>& theta) {
  std::string s;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (i) s.push_back(';');
    s += format_double(theta[i]);
  }
  return s;
}

}  // namespace detail

inline void write_summary_csv(const std::vector<SequenceReport>& reports, std::ostream& os) {
  os << "strategy,task,chosen_theta,size,acc_post_task,acc_end_of_sequence,avg_over_tasks\n";
  for (const auto& report : reports) {
    double avg = 0.0;
    for (const auto& r : report.tasks) avg += r.acc_end_of_sequence;
    if (!report.tasks.empty()) avg /= static_cast<double>(report.tasks.size());
    for (const auto& r : report.tasks) {
      os << report.strategy_name << ',' << r.name << ',' << detail::theta_csv_field(r.theta)
         << ',' << detail::format_double(r.size) << ',' << detail::format_double(r.acc_post_task)
         << ',' << detail::format_double(r.acc_end_of_sequence) << ','
         << detail::format_double(avg) << '\n';
    }
  }
}

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

/// Full experiment: every strategy over the configured sequence, reports and
/// audit files under the output directory. Returns a process exit code:
/// 0 ok, 1 runtime failure, 2 bad config.
inline int run_experiment(const std::string& config_path, const CliOverrides& overrides,
                          std::ostream& out, std::ostream& err) {
  ConfigLoad loaded = load_experiment_config(config_path);
  if (!loaded.diagnostics.empty()) {
    for (const auto& d : loaded.diagnostics) err << d << '\n';
    return 2;
  }
  ExperimentConfig cfg = loaded.config;
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.out) cfg.out = *overrides.out;

  RunParams params;
  params.layer_dims = cfg.layer_dims;
  params.dual = cfg.dual;
  params.granularity = cfg.granularity;

  namespace fs = std::filesystem;
  std::vector<SequenceReport> reports;
  try {
    const std::vector<TaskSpec> tasks = build_tasks(cfg);
    fs::create_directories(cfg.out);
    for (const auto& strategy : cfg.strategies) {
      SequenceReport report;
      try {
        report = run_sequence(tasks, strategy, cfg.seed, params);
      } catch (const std::exception& e) {
        err << "strategy '" << strategy.name << "': " << e.what() << '\n';
        return 1;
      }
      const fs::path dir = fs::path(cfg.out) / strategy.name;
      fs::create_directories(dir);
      {
        std::ofstream f(dir / "report.json", std::ios::binary);
        f << report_to_json(report).dump(2) << '\n';
      }
      for (const auto& r : report.tasks) {
        if (r.cache_entries.empty()) continue;
        std::ofstream cf(dir / ("cache_task" + std::to_string(r.task_id) + ".jsonl"),
                         std::ios::binary);
        for (const auto& e : r.cache_entries) {
          nlohmann::ordered_json ej;
          ej["theta"] = e.theta;
          ej["size"] = e.size;
          ej["risk"] = e.risk;
          cf << ej.dump() << '\n';
        }
        std::ofstream tf(dir / ("trail_task" + std::to_string(r.task_id) + ".jsonl"),
                         std::ios::binary);
        for (const auto& round : r.trail) tf << dual_round_to_json(round).dump() << '\n';
      }
      out << "strategy " << strategy.name << ": " << report.tasks.size() << " tasks, "
          << report.total_risk_evals << " cached evaluations\n";
      reports.push_back(std::move(report));
    }
    std::ofstream csv(fs::path(cfg.out) / "summary.csv", std::ios::binary);
    write_summary_csv(reports, csv);
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return 1;
  }
  out << "wrote " << (fs::path(cfg.out) / "summary.csv").string() << '\n';
  return 0;
}

}  // namespace acll
