// transducer: train, predict, evaluate and inspect the expert.
//
//   transducer train --train t.tsv --dev d.tsv --model m.bin [options]
//   transducer predict --model m.bin --input test.tsv --output out.tsv
//   transducer evaluate --gold test.tsv --pred out.tsv
//   transducer oracle-check --data t.tsv
//
// Exit status: 0 success, 1 data or runtime failure, 2 usage error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mtrans/batch_decode.hpp"
#include "mtrans/data_io.hpp"
#include "mtrans/errors.hpp"
#include "mtrans/oracle.hpp"
#include "mtrans/training.hpp"
#include "mtrans/utf8.hpp"

using namespace mtrans;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Raised for flag combinations CLI11 cannot express.
struct BadUsage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void print_metrics(const Evaluation& e) {
  std::printf("%.4f\t%.4f\n", e.exact_match, e.mean_distance);
}

struct TrainArgs {
  std::string train, dev, model, format = "sig2017", objective = "il-nll", warm_start;
  TrainConfig config;
};

int run_train(const TrainArgs& a) {
  TrainConfig config = a.config;
  try {
    config.objective = parse_objective(a.objective);
    parse_format(a.format);
    config.validate();
  } catch (const ConfigError& e) {
    throw BadUsage(e.what());
  }
  const auto format = parse_format(a.format);
  const auto train_set = read_dataset(a.train, format);
  const auto dev_set = read_dataset(a.dev, format);

  std::optional<ModelBundle> warm;
  if (!a.warm_start.empty()) {
    warm = load_checkpoint(a.warm_start);
    // The stored model fixes the dimensions.
    config.char_dim = warm->model.dims.char_dim;
    config.feat_dim = warm->model.dims.feat_dim;
    config.hidden_dim = warm->model.dims.hidden_dim;
    std::cerr << "warm start from " << a.warm_start << " (dims " << config.char_dim << "/"
              << config.feat_dim << "/" << config.hidden_dim << ")\n";
  }
  std::cerr << "train " << train_set.size() << " samples, dev " << dev_set.size()
            << ", objective " << to_string(config.objective) << "\n"
            << "epoch\tloss\tdev_acc\tdev_dist\tp_e\n";
  const auto result = train(train_set, dev_set, config, &std::cerr, warm ? &warm->model : nullptr);
  save_checkpoint(a.model, result.best, config);
  std::cerr << "best epoch " << result.best_epoch << ", saved " << a.model << "\n";
  print_metrics({result.best_accuracy, result.best_distance});
  return kOk;
}

struct PredictArgs {
  std::string model, ensemble, input, output, format = "sig2017";
  int beam_width = 0;  // 0: the checkpoint's setting
};

int run_predict(const PredictArgs& a) {
  std::vector<std::string> paths = split_list(a.ensemble);
  if (!a.model.empty()) paths.insert(paths.begin(), a.model);
  if (paths.empty()) throw BadUsage("predict needs --model or --ensemble");
  if (a.beam_width < 0) throw BadUsage("--beam-width must be positive");
  DatasetFormat format;
  try {
    format = parse_format(a.format);
  } catch (const ConfigError& e) {
    throw BadUsage(e.what());
  }

  std::vector<ModelBundle> bundles;
  for (const auto& p : paths) bundles.push_back(load_checkpoint(p));
  std::vector<const Model*> models;
  for (const auto& b : bundles) models.push_back(&b.model);
  check_compatible(models);
  const int width = a.beam_width > 0 ? a.beam_width : bundles.front().config.beam_width;
  const int slack = bundles.front().config.max_actions_slack;

  const auto samples = read_dataset(a.input, format);
  std::cerr << "decoding " << samples.size() << " inputs with " << models.size()
            << " model(s), beam " << width << "\n";
  const auto results = decode_batch(models, samples, width, slack);
  std::vector<std::u32string> preds;
  preds.reserve(results.size());
  std::size_t truncated = 0;
  for (const auto& r : results) {
    preds.push_back(r.output);
    truncated += r.truncated;
  }
  if (truncated) std::cerr << "warning: " << truncated << " outputs hit the action cap\n";
  write_predictions(a.output, samples, preds, format);
  return kOk;
}

int run_evaluate(const std::string& gold_path, const std::string& pred_path,
                 const std::string& format_name) {
  DatasetFormat format;
  try {
    format = parse_format(format_name);
  } catch (const ConfigError& e) {
    throw BadUsage(e.what());
  }
  const auto gold = read_dataset(gold_path, format);
  const auto pred = read_dataset(pred_path, format);
  if (gold.size() != pred.size()) {
    throw InputError("gold has " + std::to_string(gold.size()) + " rows, predictions have " +
                     std::to_string(pred.size()));
  }
  std::vector<std::u32string> strings;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (!gold[k].y) throw InputError("gold row " + std::to_string(k + 1) + " has no target");
    if (pred[k].x != gold[k].x) {
      throw InputError("row " + std::to_string(k + 1) + " lemma differs between files");
    }
    strings.push_back(pred[k].y.value_or(U""));
  }
  print_metrics(evaluate(gold, strings));
  return kOk;
}

int run_oracle_check(const std::string& data, const std::string& format_name) {
  DatasetFormat format;
  try {
    format = parse_format(format_name);
  } catch (const ConfigError& e) {
    throw BadUsage(e.what());
  }
  const auto samples = read_dataset(data, format);
  std::size_t failures = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    if (!s.y) throw InputError("row " + std::to_string(k + 1) + " has no target");
    const auto actions = derive_static_actions(s.x, *s.y);
    const int cost = edit_cost(actions);
    const int optimal = completion_costs(s.x, 1, *s.y, 0).at(1, 0);
    std::cout << to_string(actions) << '\t' << cost << '\n';
    if (run_actions(s.x, actions) != *s.y || cost != optimal) {
      ++failures;
      std::cerr << "row " << k + 1 << ": derivation does not reproduce '" << utf8::encode(*s.y)
                << "' at cost " << optimal << "\n";
    }
  }
  std::cerr << samples.size() - failures << "/" << samples.size() << " derivations verified\n";
  return failures ? kFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural transition-based string transducer"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train a model and save the best checkpoint");
  train_cmd->add_option("--train", ta.train, "training data")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--dev", ta.dev, "development data")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--model", ta.model, "output checkpoint")->required();
  train_cmd->add_option("--format", ta.format, "sig2017, sig2016 or pairs")->capture_default_str();
  train_cmd->add_option("--objective", ta.objective, "mle, il-nll, il-softmax-margin or mrt")
      ->capture_default_str();
  train_cmd->add_option("--beta", ta.config.beta, "penalty per unit of edit distance")
      ->capture_default_str();
  train_cmd->add_option("--rollin-k", ta.config.rollin_k, "roll-in decay constant")
      ->capture_default_str();
  train_cmd->add_option("--rollout-mix", ta.config.rollout_mix_p,
                        "probability of an expert roll-out per action (1 = expert only)")
      ->capture_default_str();
  train_cmd->add_option("--beam-width", ta.config.beam_width, "beam used for dev decoding")
      ->capture_default_str();
  train_cmd->add_option("--seed", ta.config.seed)->capture_default_str();
  train_cmd->add_option("--char-dim", ta.config.char_dim)->capture_default_str();
  train_cmd->add_option("--feat-dim", ta.config.feat_dim)->capture_default_str();
  train_cmd->add_option("--hidden-dim", ta.config.hidden_dim)->capture_default_str();
  train_cmd->add_option("--patience", ta.config.patience)->capture_default_str();
  train_cmd->add_option("--max-epochs", ta.config.max_epochs)->capture_default_str();
  train_cmd->add_option("--max-actions-slack", ta.config.max_actions_slack,
                        "action cap is |x| plus this")
      ->capture_default_str();
  train_cmd->add_option("--mrt-lambda", ta.config.mrt_lambda)->capture_default_str();
  train_cmd->add_option("--mrt-samples", ta.config.mrt_max_samples)->capture_default_str();
  train_cmd->add_option("--mrt-alpha", ta.config.mrt_alpha)->capture_default_str();
  train_cmd->add_option("--warm-start", ta.warm_start, "checkpoint to continue from")
      ->check(CLI::ExistingFile);

  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "decode an input file");
  predict_cmd->add_option("--model", pa.model, "checkpoint");
  predict_cmd->add_option("--ensemble", pa.ensemble, "comma-separated checkpoints");
  predict_cmd->add_option("--input,--test", pa.input, "input data")->required();
  predict_cmd->add_option("--output", pa.output, "predictions file")->required();
  predict_cmd->add_option("--format", pa.format)->capture_default_str();
  predict_cmd->add_option("--beam-width", pa.beam_width, "1 for greedy; default from checkpoint");

  std::string gold, pred, eval_format = "sig2017";
  auto* eval_cmd = app.add_subcommand("evaluate", "exact match and mean edit distance");
  eval_cmd->add_option("--gold", gold)->required();
  eval_cmd->add_option("--pred", pred)->required();
  eval_cmd->add_option("--format", eval_format)->capture_default_str();

  std::string oracle_data, oracle_format = "sig2017";
  auto* oracle_cmd = app.add_subcommand("oracle-check", "print and verify expert derivations");
  oracle_cmd->add_option("--data", oracle_data)->required();
  oracle_cmd->add_option("--format", oracle_format)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*train_cmd) return run_train(ta);
    if (*predict_cmd) return run_predict(pa);
    if (*eval_cmd) return run_evaluate(gold, pred, eval_format);
    if (*oracle_cmd) return run_oracle_check(oracle_data, oracle_format);
  } catch (const BadUsage& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
