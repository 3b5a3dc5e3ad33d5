#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "borex/heatmap.hpp"
#include "borex/runner.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override,
            std::optional<std::uint64_t> seed_override, const std::string& method_override) {
  borex::RunConfig cfg = borex::load_run_config(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (seed_override) cfg.seed = *seed_override;
  if (!method_override.empty()) cfg.method = borex::parse_method(method_override);

  const auto report = borex::run_experiment(cfg);
  std::size_t ok = 0;
  for (const auto& r : report.rows) {
    if (r.failed) {
      std::cerr << "item " << r.item << " failed: " << r.error << "\n";
    } else {
      ++ok;
    }
  }
  std::cout << ok << "/" << report.rows.size() << " items succeeded; report at "
            << (cfg.out_dir / "report.csv").string() << "\n";
  for (const auto& w : report.wilcoxon) {
    std::printf("wilcoxon %-10s %s vs %s: n=%zu W=%g p=%.6g (%s)\n", w.metric.c_str(),
                w.comparison.c_str(), w.baseline.c_str(), w.n, w.statistic, w.p_value,
                w.method.c_str());
  }
  return 0;
}

int cmd_explain(const std::string& image_path, const std::string& label,
                const std::string& prior_path, const std::string& config_path,
                const std::string& out_path) {
  borex::RunConfig cfg = borex::load_run_config(config_path);
  borex::DatasetItem item;
  item.name = "explain";
  item.image = borex::read_image_tensor(image_path);
  item.target = borex::Label{label};
  if (!prior_path.empty()) {
    item.prior = borex::read_saliency_tensor(prior_path);
  }

  auto classifier = borex::make_classifier(cfg.classifier, item, item.target);
  const auto map = borex::explain_item(*classifier, item, cfg, cfg.seed);

  const std::filesystem::path out = out_path.empty() ? "saliency.bxt" : out_path;
  borex::write_tensor(out, map);
  borex::emit_heatmap(map, item.image, out.parent_path() / out.stem());
  std::cout << "saliency map written to " << out.string() << "\n";
  return 0;
}

int cmd_eval(const std::string& map_path, const std::string& image_path, const std::string& label,
             const std::string& region_path, const std::string& config_path) {
  borex::RunConfig cfg = config_path.empty() ? borex::RunConfig{} : borex::load_run_config(config_path);
  borex::DatasetItem item;
  item.name = "eval";
  item.image = borex::read_image_tensor(image_path);
  item.target = borex::Label{label};
  if (!region_path.empty()) {
    item.region = borex::read_saliency_tensor(region_path);
  }
  const auto map = borex::read_saliency_tensor(map_path);

  if (!config_path.empty()) {
    auto classifier = borex::make_classifier(cfg.classifier, item, item.target);
    const auto ins = borex::insertion(*classifier, item.image, item.target, map, cfg.metric_steps,
                                      cfg.fill);
    const auto del = borex::deletion(*classifier, item.image, item.target, map, cfg.metric_steps,
                                     cfg.fill);
    std::printf("insertion %.6f\n", ins.score);
    std::printf("deletion  %.6f\n", del.score);
  }
  if (item.region) {
    const auto f = borex::f_measure(map, *item.region, cfg.metric_steps);
    std::printf("f_measure %.6f\n", f.score);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box saliency map generation, refinement, and evaluation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, method, image_path, label, prior_path, map_path, region_path,
      out_path;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run an experiment over a dataset");
  run->add_option("--config", config_path, "JSON run configuration")->required();
  run->add_option("--out", out_dir, "Output directory override");
  run->add_option("--seed", seed, "Seed override");
  run->add_option("--method", method, "Method override");

  auto* explain = app.add_subcommand("explain", "Explain a single image/clip");
  explain->add_option("--image", image_path, "Input tensor file")->required();
  explain->add_option("--label", label, "Target label token")->required();
  explain->add_option("--prior", prior_path, "Prior saliency tensor");
  explain->add_option("--config", config_path, "JSON run configuration")->required();
  explain->add_option("--out", out_path, "Output saliency tensor path");

  auto* eval = app.add_subcommand("eval", "Evaluate a saliency map");
  eval->add_option("--map", map_path, "Saliency tensor file")->required();
  eval->add_option("--image", image_path, "Input tensor file")->required();
  eval->add_option("--label", label, "Target label token")->required();
  eval->add_option("--region", region_path, "Ground-truth region tensor");
  eval->add_option("--config", config_path,
                   "JSON run configuration (omit to report F-measure only)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, seed, method);
    if (explain->parsed()) return cmd_explain(image_path, label, prior_path, config_path, out_path);
    if (eval->parsed()) return cmd_eval(map_path, image_path, label, region_path, config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
