#include "borex/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "borex/external.hpp"
#include "borex/heatmap.hpp"

namespace borex {
namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

RefineConfig refine_for_method(const RefineConfig& base, Method method) {
  RefineConfig rc = base;
  switch (method) {
    case Method::kBoBaseline:
      rc.use_flip = false;
      rc.weighted_avg = false;
      rc.use_prior = false;
      break;
    case Method::kAblationNoFlip:
      rc.use_flip = false;
      break;
    case Method::kAblationSimpleAvg:
      rc.weighted_avg = false;
      break;
    case Method::kAblationNoPrior:
      rc.use_prior = false;
      break;
    default:
      break;
  }
  return rc;
}

bool method_uses_prior(Method method) {
  return method == Method::kBorex || method == Method::kAblationNoFlip ||
         method == Method::kAblationSimpleAvg;
}

bool method_refines(Method method) {
  return method != Method::kRise && method != Method::kPnRise;
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "rise") return Method::kRise;
  if (name == "pn_rise") return Method::kPnRise;
  if (name == "bo_baseline") return Method::kBoBaseline;
  if (name == "borex") return Method::kBorex;
  if (name == "ablation:no_flip") return Method::kAblationNoFlip;
  if (name == "ablation:simple_avg") return Method::kAblationSimpleAvg;
  if (name == "ablation:no_prior") return Method::kAblationNoPrior;
  throw ManifestError("unknown method: " + name);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kRise: return "rise";
    case Method::kPnRise: return "pn_rise";
    case Method::kBoBaseline: return "bo_baseline";
    case Method::kBorex: return "borex";
    case Method::kAblationNoFlip: return "ablation:no_flip";
    case Method::kAblationSimpleAvg: return "ablation:simple_avg";
    case Method::kAblationNoPrior: return "ablation:no_prior";
  }
  return "?";
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ManifestError("cannot open config: " + path.string());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ManifestError(std::string("config parse error: ") + e.what());
  }

  RunConfig cfg;
  const auto base = path.parent_path();
  if (doc.contains("dataset")) {
    std::filesystem::path p = doc["dataset"].get<std::string>();
    cfg.dataset = p.is_absolute() ? p : base / p;
  }

  if (doc.contains("classifier")) {
    const auto& c = doc["classifier"];
    if (c.contains("synthetic") == c.contains("external")) {
      throw ManifestError("config: classifier needs exactly one of synthetic/external");
    }
    if (c.contains("synthetic")) {
      cfg.classifier.synthetic = c["synthetic"].get<std::string>();
    } else {
      cfg.classifier.external = c["external"].get<std::string>();
    }
    cfg.classifier.constant = c.value("constant", 0.5);
    cfg.classifier.gamma = c.value("gamma", 1.0);
    cfg.classifier.timeout_s = c.value("timeout_s", 60.0);
    if (c.contains("regions")) {
      for (const auto& b : c["regions"]) {
        if (!b.is_array() || b.size() != 6) {
          throw ManifestError("config: region box must be [t0,t1,y0,y1,x0,x1]");
        }
        cfg.classifier.boxes.push_back(RegionBox{
            b[0].get<std::size_t>(), b[1].get<std::size_t>(), b[2].get<std::size_t>(),
            b[3].get<std::size_t>(), b[4].get<std::size_t>(), b[5].get<std::size_t>()});
      }
    }
  }

  if (doc.contains("method")) cfg.method = parse_method(doc["method"].get<std::string>());
  if (doc.contains("refine")) {
    const auto& r = doc["refine"];
    cfg.refine.n_iters = r.value("n_iters", cfg.refine.n_iters);
    if (r.contains("sizes")) cfg.refine.sizes = r["sizes"].get<std::vector<std::size_t>>();
    if (r.contains("spans")) cfg.refine.spans = r["spans"].get<std::vector<std::size_t>>();
    cfg.refine.kappa = r.value("kappa", cfg.refine.kappa);
    cfg.refine.candidate_stride = r.value("stride", cfg.refine.candidate_stride);
  }
  if (doc.contains("mc")) {
    const auto& m = doc["mc"];
    cfg.mc.n_masks = m.value("n_masks", cfg.mc.n_masks);
    if (m.contains("grid")) {
      cfg.mc.dist.grid_h = m["grid"][0].get<std::size_t>();
      cfg.mc.dist.grid_w = m["grid"][1].get<std::size_t>();
    }
    cfg.mc.dist.keep_prob = m.value("keep_prob", cfg.mc.dist.keep_prob);
    cfg.mc.batch = m.value("batch", cfg.mc.batch);
  }
  if (doc.contains("kernel")) {
    const auto& k = doc["kernel"];
    cfg.kernel.nu = k.value("nu", cfg.kernel.nu);
    cfg.kernel.length_scale = k.value("length_scale", cfg.kernel.length_scale);
    cfg.kernel.signal_var = k.value("signal_var", cfg.kernel.signal_var);
    cfg.kernel.noise_var = k.value("noise_var", cfg.kernel.noise_var);
    cfg.kernel.frame_scale = k.value("frame_scale", cfg.kernel.frame_scale);
  }
  cfg.prior_n_masks = doc.value("prior_n_masks", cfg.prior_n_masks);
  cfg.metric_steps = doc.value("metric_steps", cfg.metric_steps);
  cfg.fill = doc.value("fill", cfg.fill);
  if (!doc.contains("seed")) {
    throw ManifestError("config: seed is mandatory");
  }
  cfg.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("out")) {
    std::filesystem::path p = doc["out"].get<std::string>();
    cfg.out_dir = p.is_absolute() ? p : base / p;
  }
  cfg.paired = doc.value("paired", cfg.paired);
  cfg.record_timing = doc.value("timing", cfg.record_timing);
  return cfg;
}

std::unique_ptr<ClassifierPort> make_classifier(const ClassifierSpec& spec,
                                                const DatasetItem& item, const Label& label) {
  if (spec.external) {
    return std::make_unique<ExternalClassifier>(
        *spec.external,
        std::chrono::milliseconds(static_cast<std::int64_t>(spec.timeout_s * 1000.0)));
  }
  const std::string kind = spec.synthetic.value_or("constant");
  if (kind == "constant") {
    return std::make_unique<SyntheticClassifier>(
        SyntheticClassifier::constant(spec.constant, label));
  }

  std::vector<SaliencyVolume> regions;
  if (!spec.boxes.empty()) {
    for (const auto& box : spec.boxes) {
      regions.push_back(region_indicator(box, item.image.shape()));
    }
  } else if (item.region) {
    regions.push_back(*item.region);
  } else {
    throw ManifestError("synthetic classifier needs a region (item annotation or config boxes)");
  }

  if (kind == "region_fraction") {
    return std::make_unique<SyntheticClassifier>(SyntheticClassifier::region_fraction(
        item.image, std::move(regions.front()), spec.gamma, label));
  }
  if (kind == "multi_region_max") {
    return std::make_unique<SyntheticClassifier>(SyntheticClassifier::multi_region_max(
        item.image, std::move(regions), spec.gamma, label));
  }
  throw ManifestError("unknown synthetic classifier: " + kind);
}

namespace {

SaliencyVolume explain_with_prior(ClassifierPort& model, const DatasetItem& item,
                                  const RunConfig& cfg, std::uint64_t item_seed,
                                  std::optional<SaliencyVolume>* prior_used) {
  McConfig mc = cfg.mc;
  mc.dist.seed = item_seed;
  mc.fill = cfg.fill;

  switch (cfg.method) {
    case Method::kRise:
      mc.variant = McVariant::kRise;
      return estimate_rise(model, item.image, item.target, mc);
    case Method::kPnRise:
      mc.variant = McVariant::kPnRise;
      return estimate_pn_rise(model, item.image, item.target, mc);
    default:
      break;
  }

  std::optional<SaliencyVolume> prior;
  if (method_uses_prior(cfg.method) || cfg.paired) {
    if (item.prior) {
      prior = *item.prior;
    } else if (method_uses_prior(cfg.method)) {
      // No prior file: generate the "potentially low-quality" starting map
      // with a small-budget RISE pass.
      McConfig prior_mc = mc;
      prior_mc.n_masks = cfg.prior_n_masks;
      prior_mc.variant = McVariant::kPnRise;
      prior = estimate_pn_rise(model, item.image, item.target, prior_mc);
    }
  }
  if (prior_used) *prior_used = prior;

  const RefineConfig rc = refine_for_method(cfg.refine, cfg.method);
  return refine(model, item.image, prior, item.target, rc, cfg.kernel, cfg.fill);
}

}  // namespace

SaliencyVolume explain_item(ClassifierPort& model, const DatasetItem& item, const RunConfig& cfg,
                            std::uint64_t item_seed) {
  return explain_with_prior(model, item, cfg, item_seed, nullptr);
}

EvalReport run_experiment(const RunConfig& cfg) {
  const auto items = dataset_load(cfg.dataset);
  std::filesystem::create_directories(cfg.out_dir);

  EvalReport report;
  std::vector<std::pair<double, double>> insertion_pairs;
  std::vector<std::pair<double, double>> deletion_pairs;
  std::vector<std::pair<double, double>> f_pairs;
  std::size_t failures = 0;

  const bool paired = cfg.paired && method_refines(cfg.method);

  for (std::size_t index = 0; index < items.size(); ++index) {
    const auto& item = items[index];
    ItemResult row;
    row.item = item.name;
    row.method = method_name(cfg.method);
    try {
      auto classifier = make_classifier(cfg.classifier, item, item.target);
      CountingClassifier counted(*classifier);
      const auto t0 = std::chrono::steady_clock::now();
      const std::uint64_t item_seed = cfg.seed ^ static_cast<std::uint64_t>(index);

      std::optional<SaliencyVolume> prior;
      const SaliencyVolume map = explain_with_prior(counted, item, cfg, item_seed, &prior);

      const auto ins = insertion(counted, item.image, item.target, map, cfg.metric_steps,
                                 cfg.fill);
      const auto del = deletion(counted, item.image, item.target, map, cfg.metric_steps,
                                cfg.fill);
      row.insertion_score = ins.score;
      row.deletion_score = del.score;
      if (item.region) {
        row.f_measure_score = f_measure(map, *item.region, cfg.metric_steps).score;
      }
      row.n_classifier_calls = counted.count();
      if (cfg.record_timing) {
        row.wall_ms = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count());
      }

      emit_heatmap(map, item.image, cfg.out_dir / ("heatmap_" + item.name));

      if (paired && prior) {
        ItemResult base_row;
        base_row.item = item.name;
        base_row.method = "prior";
        const auto bins = insertion(counted, item.image, item.target, *prior, cfg.metric_steps,
                                    cfg.fill);
        const auto bdel = deletion(counted, item.image, item.target, *prior, cfg.metric_steps,
                                   cfg.fill);
        base_row.insertion_score = bins.score;
        base_row.deletion_score = bdel.score;
        if (item.region) {
          base_row.f_measure_score = f_measure(*prior, *item.region, cfg.metric_steps).score;
          f_pairs.emplace_back(*row.f_measure_score, *base_row.f_measure_score);
        }
        insertion_pairs.emplace_back(row.insertion_score, base_row.insertion_score);
        // Lower deletion is better, so the one-sided test asks whether the
        // baseline's deletion is stochastically greater.
        deletion_pairs.emplace_back(base_row.deletion_score, row.deletion_score);
        report.baseline_rows.push_back(std::move(base_row));
      }
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      ++failures;
    }
    report.rows.push_back(std::move(row));
  }

  if (!items.empty() && failures * 2 > items.size()) {
    throw RunFailed("more than half of the items failed (" + std::to_string(failures) + "/" +
                    std::to_string(items.size()) + ")");
  }

  if (paired) {
    auto add_test = [&](const std::string& metric,
                        const std::vector<std::pair<double, double>>& pairs) {
      if (pairs.empty()) return;
      WilcoxonRow wr;
      wr.metric = metric;
      wr.baseline = "prior";
      wr.comparison = method_name(cfg.method);
      try {
        const auto res = wilcoxon_one_sided(pairs);
        wr.n = res.n_effective;
        wr.statistic = res.statistic;
        wr.p_value = res.p_value;
        wr.method = res.method;
      } catch (const DegenerateSample&) {
        wr.n = 0;
        wr.p_value = 1.0;
        wr.method = "degenerate";
      }
      report.wilcoxon.push_back(std::move(wr));
    };
    add_test("insertion", insertion_pairs);
    add_test("deletion", deletion_pairs);
    add_test("f_measure", f_pairs);
  }

  write_report_csv(cfg.out_dir / "report.csv", report);
  if (!report.wilcoxon.empty()) {
    write_wilcoxon_csv(cfg.out_dir / "wilcoxon.csv", report);
  }
  return report;
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  out << "item,method,insertion,deletion,f_measure,n_classifier_calls,wall_ms\n";

  auto write_row = [&](const ItemResult& r) {
    out << r.item << ',' << r.method << ',';
    if (r.failed) {
      out << ",,,," << '\n';
      return;
    }
    out << fmt_double(r.insertion_score) << ',' << fmt_double(r.deletion_score) << ',';
    if (r.f_measure_score) out << fmt_double(*r.f_measure_score);
    out << ',' << r.n_classifier_calls << ',' << r.wall_ms << '\n';
  };

  double ins_sum = 0, del_sum = 0, f_sum = 0;
  std::size_t ok = 0, f_count = 0;
  for (const auto& r : report.rows) {
    write_row(r);
    if (!r.failed) {
      ins_sum += r.insertion_score;
      del_sum += r.deletion_score;
      ++ok;
      if (r.f_measure_score) {
        f_sum += *r.f_measure_score;
        ++f_count;
      }
    }
  }
  for (const auto& r : report.baseline_rows) {
    write_row(r);
  }
  if (ok > 0) {
    out << "summary," << report.rows.front().method << ','
        << fmt_double(ins_sum / static_cast<double>(ok)) << ','
        << fmt_double(del_sum / static_cast<double>(ok)) << ',';
    if (f_count > 0) out << fmt_double(f_sum / static_cast<double>(f_count));
    out << ",,\n";
  }
}

void write_wilcoxon_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  out << "metric,baseline,comparison,n,W,p,method\n";
  for (const auto& w : report.wilcoxon) {
    out << w.metric << ',' << w.baseline << ',' << w.comparison << ',' << w.n << ','
        << fmt_double(w.statistic) << ',' << fmt_double(w.p_value) << ',' << w.method << '\n';
  }
}

}  // namespace borex
