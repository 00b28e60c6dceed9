#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "squarebox/analysis.hpp"
#include "squarebox/attack.hpp"
#include "squarebox/errors.hpp"
#include "squarebox/harness.hpp"
#include "squarebox/inference.hpp"
#include "squarebox/stub_server.hpp"

namespace sb = squarebox;

namespace {

struct AttackArgs {
  std::string model;
  std::string endpoint;
  std::size_t num_classes = 0;
  int timeout_ms = 10000;
  std::string dataset;
  std::string norm = "linf";
  double eps = 0.05;
  double p_init = 0.05;
  std::int64_t n_queries = 10000;
  std::string mode = "untargeted";
  std::string variant;
  std::string init;
  std::string loss;
  int restarts = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string output = "-";
  std::string curve;
  std::vector<std::int64_t> budgets;
  bool literal_init_loss = false;
  bool skip_null_updates = false;
};

sb::AttackConfig make_config(const AttackArgs& a) {
  sb::AttackConfig cfg;
  const sb::Norm norm = sb::parse_norm(a.norm);
  cfg.tm = sb::ThreatModel(norm, a.eps);
  cfg.n_queries = a.n_queries;
  cfg.p_init = a.p_init;
  cfg.goal = a.mode == "targeted" ? sb::AttackGoal::targeted(0) : sb::AttackGoal::untargeted(0);
  if (!a.loss.empty()) cfg.loss = sb::parse_loss_kind(a.loss);
  cfg.seed = a.seed;
  if (norm == sb::Norm::Linf) {
    if (!a.variant.empty()) cfg.sampler.linf.update = sb::parse_linf_update(a.variant);
    if (!a.init.empty()) cfg.sampler.linf.init = sb::parse_linf_init(a.init);
  } else {
    if (!a.variant.empty()) cfg.sampler.l2.update = sb::parse_l2_update(a.variant);
    if (!a.init.empty()) cfg.sampler.l2.init = sb::parse_l2_init(a.init);
  }
  cfg.literal_init_loss = a.literal_init_loss;
  cfg.skip_null_updates = a.skip_null_updates;
  cfg.validate();
  return cfg;
}

int run_attack_cmd(const AttackArgs& a) {
  sb::BatchOptions options;
  options.config = make_config(a);
  options.restarts = a.restarts;
  options.jobs = a.jobs;
  options.curve_budgets = a.budgets;

  const sb::Dataset dataset = sb::load_dataset(a.dataset);
  std::optional<sb::Model> model;
  std::unique_ptr<sb::Classifier> classifier;
  if (!a.model.empty()) {
    model.emplace(sb::load_model(a.model));
    classifier = std::make_unique<sb::LocalClassifier>(*model);
  } else {
    classifier = std::make_unique<sb::RemoteClassifier>(a.endpoint, a.num_classes,
                                                        std::chrono::milliseconds(a.timeout_ms));
  }

  const sb::BatchReport report = sb::run_batch(*classifier, dataset, options);

  if (a.output == "-") {
    sb::write_jsonl(std::cout, report);
  } else {
    std::ofstream out(a.output, std::ios::binary);
    if (!out) throw sb::Error("cannot write " + a.output);
    sb::write_jsonl(out, report);
  }
  std::string curve_path = a.curve;
  if (curve_path.empty() && a.output != "-") curve_path = a.output + ".curve.csv";
  if (!curve_path.empty()) {
    std::ofstream csv(curve_path, std::ios::binary);
    if (!csv) throw sb::Error("cannot write " + curve_path);
    sb::write_curve_csv(csv, report.stats.success_curve);
  }

  const sb::BatchStats& s = report.stats;
  if (!s.failure_rate) {
    std::cerr << "warning: no initially correct points, statistics are undefined\n";
  }
  if (s.n_errors > 0) std::cerr << "warning: " << s.n_errors << " image(s) failed with errors\n";
  std::cerr << "attacked " << s.n_initially_correct << " of " << s.n_points << " points, "
            << s.n_success << " succeeded\n";
  return 0;
}

int run_analyze_cmd(const sb::analysis::CheckOptions& options) {
  const auto results = sb::analysis::run_checks(options);
  bool all = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    all = all && r.passed;
  }
  std::cout << (all ? "all checks passed" : "some checks failed") << '\n';
  return all ? 0 : 1;
}

std::vector<double> parse_logits(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.size() < 2) throw sb::ValueError("--logits needs at least two comma-separated values");
  return out;
}

sb::LogitsServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

int run_serve_cmd(const std::string& model_path, const std::string& logits, const std::string& host,
                  int port) {
  std::optional<sb::Model> model;
  sb::LogitsServer::Handler handler;
  if (!model_path.empty()) {
    model.emplace(sb::load_model(model_path));
    handler = [&model](const sb::ImageTensor& img) { return model->forward(img); };
  } else {
    const std::vector<double> fixed = parse_logits(logits);
    handler = [fixed](const sb::ImageTensor&) { return fixed; };
  }
  sb::LogitsServer server(handler);
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cerr << "serving on http://" << host << ':' << port << "/logits\n";
  server.listen_blocking(host, port);
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Score-based black-box adversarial attacks with square-shaped random search"};
  app.require_subcommand(1);

  AttackArgs a;
  auto* attack = app.add_subcommand("attack", "Attack every image of a dataset");
  auto* model_opt = attack->add_option("--model", a.model, "Model manifest (JSON)");
  auto* endpoint_opt = attack->add_option("--endpoint", a.endpoint, "Remote classifier base URL");
  model_opt->excludes(endpoint_opt);
  attack->add_option("--num-classes", a.num_classes, "Class count of the remote model")
      ->needs(endpoint_opt);
  attack->add_option("--timeout-ms", a.timeout_ms, "Remote request timeout")->capture_default_str();
  attack->add_option("--dataset", a.dataset, "Dataset manifest (JSON)")->required();
  attack->add_option("--norm", a.norm, "Threat model")
      ->check(CLI::IsMember({"linf", "l2"}))
      ->capture_default_str();
  attack->add_option("--eps", a.eps, "Perturbation radius")->capture_default_str();
  attack->add_option("--p-init", a.p_init, "Initial window fraction")->capture_default_str();
  attack->add_option("--n-queries", a.n_queries, "Query budget per restart")->capture_default_str();
  attack->add_option("--mode", a.mode, "Attack goal")
      ->check(CLI::IsMember({"untargeted", "targeted"}))
      ->capture_default_str();
  attack->add_option("--variant", a.variant,
                     "Update shape (linf: square-c, square-ch2, square-1, rect-c, random-ch2, "
                     "random-c; l2: eta, eta-single, eta-rand)");
  attack->add_option("--init", a.init,
                     "Initialization (linf: vert-stripes, horiz-stripes, uniform-random, "
                     "random-squares; l2: eta-grid, gaussian, uniform, vert-stripes)");
  attack->add_option("--loss", a.loss, "margin or ce (default: margin untargeted, ce targeted)")
      ->check(CLI::IsMember({"margin", "ce"}));
  attack->add_option("--restarts", a.restarts, "Independent restarts per image")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  attack->add_option("--seed", a.seed, "Base random seed")->capture_default_str();
  attack->add_option("--jobs", a.jobs, "Images attacked concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  attack->add_option("--output", a.output, "JSONL output path, - for stdout")->capture_default_str();
  attack->add_option("--curve", a.curve, "Success-curve CSV path (default: OUTPUT.curve.csv)");
  attack->add_option("--budgets", a.budgets, "Query budgets for the success curve")->delimiter(',');
  attack->add_flag("--literal-init-loss", a.literal_init_loss,
                   "Compare candidates against the loss of the clean input");
  attack->add_flag("--skip-null-updates", a.skip_null_updates,
                   "Do not query candidates equal to the current iterate");

  sb::analysis::CheckOptions check;
  auto* analyze = app.add_subcommand("analyze", "Run the analysis checks and print a report");
  analyze->add_option("--seed", check.seed)->capture_default_str();
  analyze->add_option("--khintchine-trials", check.khintchine_trials)->capture_default_str();
  analyze->add_option("--directions", check.khintchine_directions)->capture_default_str();
  analyze->add_option("--sign-trials", check.sign_trials)->capture_default_str();
  analyze->add_option("--convergence-seeds", check.convergence_seeds)->capture_default_str();

  std::string serve_model, serve_logits = "1,2,3", host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve-stub", "Serve logits over HTTP for testing");
  serve->add_option("--model", serve_model, "Answer with this model's logits");
  serve->add_option("--logits", serve_logits, "Fixed comma-separated logits")->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*attack) {
      if (a.model.empty() && a.endpoint.empty()) {
        throw sb::ValueError("one of --model or --endpoint is required");
      }
      if (!a.endpoint.empty() && a.num_classes < 2) {
        throw sb::ValueError("--endpoint needs --num-classes >= 2");
      }
      return run_attack_cmd(a);
    }
    if (*analyze) return run_analyze_cmd(check);
    if (*serve) return run_serve_cmd(serve_model, serve_logits, host, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
