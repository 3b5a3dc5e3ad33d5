#ifndef BOREX_RUNNER_HPP
#define BOREX_RUNNER_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "borex/dataset.hpp"
#include "borex/gpr.hpp"
#include "borex/mc_explainer.hpp"
#include "borex/metrics.hpp"
#include "borex/synthetic.hpp"

namespace borex {

enum class Method {
  kRise,
  kPnRise,
  kBoBaseline,
  kBorex,
  kAblationNoFlip,
  kAblationSimpleAvg,
  kAblationNoPrior,
};

Method parse_method(const std::string& name);
std::string method_name(Method m);

struct ClassifierSpec {
  // Exactly one of these is set.
  std::optional<std::string> synthetic;  // constant | region_fraction | multi_region_max
  std::optional<std::string> external;   // shell command

  double constant = 0.5;
  double gamma = 1.0;
  std::vector<RegionBox> boxes;  // overrides per-item regions when non-empty
  double timeout_s = 60.0;
};

struct RunConfig {
  std::filesystem::path dataset;
  ClassifierSpec classifier;
  Method method = Method::kBorex;
  RefineConfig refine;
  McConfig mc;
  std::size_t prior_n_masks = 100;  // RISE prior size when method=borex and no prior file
  KernelParams kernel;
  std::size_t metric_steps = 20;
  float fill = 0.0f;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  bool paired = true;          // emit Wilcoxon method-vs-baseline summaries
  bool record_timing = false;  // measured wall_ms breaks byte-identical reruns
};

RunConfig load_run_config(const std::filesystem::path& path);

struct ItemResult {
  std::string item;
  std::string method;
  double insertion_score = 0.0;
  double deletion_score = 0.0;
  std::optional<double> f_measure_score;
  std::size_t n_classifier_calls = 0;
  std::uint64_t wall_ms = 0;
  bool failed = false;
  std::string error;
};

struct WilcoxonRow {
  std::string metric;
  std::string baseline;
  std::string comparison;
  std::size_t n = 0;
  double statistic = 0.0;
  double p_value = 1.0;
  std::string method;
};

struct EvalReport {
  std::vector<ItemResult> rows;
  std::vector<ItemResult> baseline_rows;  // paired runs only
  std::vector<WilcoxonRow> wilcoxon;
};

/// Builds the item's classifier from the spec (synthetic ones use the item's
/// own image and region as reference).
std::unique_ptr<ClassifierPort> make_classifier(const ClassifierSpec& spec,
                                                const DatasetItem& item, const Label& label);

/// Produces the method's saliency map for one item. Derived seed
/// = cfg.seed ^ item_index keeps items independent and reproducible.
SaliencyVolume explain_item(ClassifierPort& model, const DatasetItem& item, const RunConfig& cfg,
                            std::uint64_t item_seed);

EvalReport run_experiment(const RunConfig& cfg);

void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
void write_wilcoxon_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace borex

#endif  // BOREX_RUNNER_HPP
