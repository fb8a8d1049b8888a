#include "scar/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "scar/checkpoint.hpp"
#include "scar/csv.hpp"
#include "scar/errors.hpp"
#include "scar/report.hpp"
#include "scar/rng.hpp"
#include "scar/scar.hpp"
#include "scar/svg.hpp"

namespace fs = std::filesystem;

namespace scar {

namespace {

constexpr uint64_t kDataTag = 0xDA7A;
constexpr uint64_t kTestTag = 0x7E57;
constexpr uint64_t kSplitTag = 0x5917;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

MlpSpec spec_from_config(const ExperimentConfig& cfg, int64_t input_dim, int64_t classes) {
  MlpSpec spec;
  spec.layer_sizes.push_back(input_dim);
  for (int64_t h : cfg.model.hidden) spec.layer_sizes.push_back(h);
  spec.layer_sizes.push_back(classes);
  return spec;
}

std::string write_snapshot(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const std::string path = (fs::path(cfg.out_dir) / "resolved.ini").string();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config snapshot: " + path);
  out << serialize_config(cfg);
  return path;
}

}  // namespace

RunData build_run_data(const ExperimentConfig& cfg) {
  const uint64_t seed = cfg.model.seed;
  Dataset full, test;
  if (cfg.dataset.generator == "two_moons") {
    full = gen_two_moons(cfg.dataset.n, cfg.dataset.noise, mix_seed(seed, kDataTag));
    test = gen_two_moons(cfg.dataset.n_test, cfg.dataset.noise, mix_seed(seed, kTestTag));
  } else if (cfg.dataset.generator == "blobs") {
    full = gen_blobs(cfg.dataset.n, cfg.dataset.classes, cfg.dataset.spread, mix_seed(seed, kDataTag));
    test = gen_blobs(cfg.dataset.n_test, cfg.dataset.classes, cfg.dataset.spread,
                     mix_seed(seed, kTestTag));
  } else {  // csv
    if (!fs::exists(cfg.dataset.csv_path))
      throw ConfigError("dataset file not found: " + cfg.dataset.csv_path);
    full = load_csv(cfg.dataset.csv_path);
    if (!full.has_labels()) throw ConfigError(cfg.dataset.csv_path + " has no label column");
    if (cfg.dataset.csv_test_path.empty())
      throw ConfigError("dataset.csv_test_path: required when generator = csv");
    if (!fs::exists(cfg.dataset.csv_test_path))
      throw ConfigError("dataset file not found: " + cfg.dataset.csv_test_path);
    test = load_csv(cfg.dataset.csv_test_path);
    if (!test.has_labels()) throw ConfigError(cfg.dataset.csv_test_path + " has no label column");
  }
  RunData data;
  data.split = split_semi(full, cfg.dataset.n_l, mix_seed(seed, kSplitTag));
  data.test = std::move(test);
  return data;
}

RunArtifact cmd_pretrain(const ExperimentConfig& cfg) {
  Timer timer;
  RunArtifact artifact;
  artifact.config_snapshot_path = write_snapshot(cfg);

  const RunData data = build_run_data(cfg);
  const MlpSpec spec = spec_from_config(cfg, data.split.labeled.dim(), data.split.labeled.num_classes);
  Classifier model = init_classifier(spec, cfg.model.seed);

  artifact.metrics_path = (fs::path(cfg.out_dir) / "pretrain_metrics.csv").string();
  CsvWriter metrics(artifact.metrics_path,
                    {"epoch", "labeled_loss", "unlabeled_loss", "total_loss", "mask_fraction",
                     "test_accuracy"});
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    const auto hist = train_ssl_range(model, data.split.labeled, data.split.unlabeled, cfg.method,
                                      cfg.train, epoch, epoch + 1);
    const LossReport& rep = hist.front();
    metrics.begin_row();
    metrics.field(static_cast<long>(epoch));
    metrics.field(static_cast<double>(rep.labeled));
    metrics.field(static_cast<double>(rep.unlabeled));
    metrics.field(static_cast<double>(rep.total));
    metrics.field(static_cast<double>(rep.mask_fraction));
    metrics.field(accuracy(model, data.test.features, data.test.labels));
    metrics.end_row();
  }

  artifact.checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint.ckpt").string();
  save_checkpoint(model, artifact.checkpoint_path, cfg.train.epochs, cfg.method.name());
  artifact.wall_seconds = timer.seconds();
  std::cout << "pretrain: method=" << cfg.method.name()
            << " final_acc=" << accuracy(model, data.test.features, data.test.labels) * 100.0
            << "% (" << artifact.wall_seconds << "s) -> " << cfg.out_dir << "\n";
  return artifact;
}

RunArtifact cmd_scar(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
  Timer timer;
  RunArtifact artifact;
  artifact.config_snapshot_path = write_snapshot(cfg);

  const RunData data = build_run_data(cfg);
  const MlpSpec spec = spec_from_config(cfg, data.split.labeled.dim(), data.split.labeled.num_classes);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  require_spec(ckpt, spec);
  Classifier model = std::move(ckpt.model);
  const double pre_accuracy = accuracy(model, data.test.features, data.test.labels);

  ScarConfig scar_cfg;
  scar_cfg.attack = cfg.attack;
  scar_cfg.train = cfg.train;
  scar_cfg.method = cfg.method;
  scar_cfg.reselect_each_epoch = cfg.reselect_each_epoch;

  artifact.metrics_path = (fs::path(cfg.out_dir) / "scar_metrics.csv").string();
  CsvWriter metrics(artifact.metrics_path,
                    {"epoch", "labeled_loss", "unlabeled_loss", "total_loss", "mask_fraction",
                     "pre_accuracy", "test_accuracy"});
  const auto observer = [&](int epoch, const Classifier& m, const LossReport& rep) {
    metrics.begin_row();
    metrics.field(static_cast<long>(epoch));
    metrics.field(static_cast<double>(rep.labeled));
    metrics.field(static_cast<double>(rep.unlabeled));
    metrics.field(static_cast<double>(rep.total));
    metrics.field(static_cast<double>(rep.mask_fraction));
    metrics.field(pre_accuracy);
    metrics.field(accuracy(m, data.test.features, data.test.labels));
    metrics.end_row();
  };
  const ScarResult result =
      scar_finetune(model, data.split.labeled, data.split.unlabeled, scar_cfg, observer);

  const std::string selection_path = (fs::path(cfg.out_dir) / "selection.csv").string();
  {
    CsvWriter sel(selection_path, {"index", "pseudo_label", "adv_label", "robust"});
    for (const auto& rec : result.selection) {
      sel.begin_row();
      sel.field(static_cast<long>(rec.index));
      sel.field(static_cast<long>(rec.pseudo_label));
      sel.field(static_cast<long>(rec.adv_label));
      sel.field(static_cast<long>(rec.robust ? 1 : 0));
      sel.end_row();
    }
  }

  artifact.checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint.ckpt").string();
  save_checkpoint(model, artifact.checkpoint_path, ckpt.epoch + cfg.train.epochs,
                  std::string(cfg.method.name()) + "+scar");
  artifact.wall_seconds = timer.seconds();

  std::cout << "scar: method=" << cfg.method.name() << " selected=" << result.n_selected << "/"
            << result.selection.size() << " pre_acc=" << pre_accuracy * 100.0
            << "% post_acc=" << accuracy(model, data.test.features, data.test.labels) * 100.0
            << "% (" << artifact.wall_seconds << "s) -> " << cfg.out_dir << "\n";
  return artifact;
}

RunArtifact cmd_tradeoff(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                         const std::vector<float>& eps_list) {
  if (eps_list.empty()) throw ConfigError("tradeoff: empty eps list");
  Timer timer;
  RunArtifact artifact;
  artifact.config_snapshot_path = write_snapshot(cfg);

  const RunData data = build_run_data(cfg);
  const MlpSpec spec = spec_from_config(cfg, data.split.labeled.dim(), data.split.labeled.num_classes);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  require_spec(ckpt, spec);
  const FrozenClassifier frozen = freeze(ckpt.model);

  const auto rows = tradeoff_table(frozen, data.split.unlabeled, data.split.withheld_labels,
                                   eps_list, cfg.attack);

  artifact.metrics_path = (fs::path(cfg.out_dir) / "tradeoff.csv").string();
  CsvWriter csv(artifact.metrics_path, {"eps", "sensitivity", "sens_num", "sens_den", "specificity",
                                        "spec_num", "spec_den", "n_selected"});
  for (const auto& row : rows) {
    csv.begin_row();
    csv.field(static_cast<double>(row.eps));
    csv.field(row.sensitivity.value());
    csv.field(row.sensitivity.num);
    csv.field(row.sensitivity.den);
    csv.field(row.specificity.value());
    csv.field(row.specificity.num);
    csv.field(row.specificity.den);
    csv.field(row.n_selected);
    csv.end_row();
  }

  SvgSeries sens{"sensitivity", "#1f6fb2", {}, {}};
  SvgSeries spec_series{"specificity", "#c23b22", {}, {}};
  for (const auto& row : rows) {
    sens.x.push_back(row.eps);
    spec_series.x.push_back(row.eps);
    auto scale_pct = [](std::optional<double> v) -> std::optional<double> {
      if (!v) return std::nullopt;
      return *v * 100.0;
    };
    sens.y.push_back(scale_pct(row.sensitivity.value()));
    spec_series.y.push_back(scale_pct(row.specificity.value()));
  }
  const std::string svg_path = (fs::path(cfg.out_dir) / "tradeoff.svg").string();
  write_line_chart(svg_path, "Selection trade-off", "epsilon", "rate (%)", {sens, spec_series});

  for (const auto& row : rows)
    std::cout << "eps=" << row.eps << "  sensitivity " << format_rate(row.sensitivity.num, row.sensitivity.den)
              << "  specificity " << format_rate(row.specificity.num, row.specificity.den)
              << "  selected=" << row.n_selected << "\n";

  artifact.checkpoint_path = checkpoint_path;
  artifact.wall_seconds = timer.seconds();
  return artifact;
}

RunArtifact cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  if (run_dirs.empty()) throw ConfigError("report: at least one run directory required");
  Timer timer;
  const auto rows = collect_report_rows(run_dirs);
  fs::create_directories(out_dir);
  RunArtifact artifact;
  artifact.metrics_path = (fs::path(out_dir) / "report.csv").string();
  write_report_csv(artifact.metrics_path, rows);
  const std::string text = render_report_text(rows);
  {
    std::ofstream out(fs::path(out_dir) / "report.txt");
    out << text;
  }
  std::cout << text;
  artifact.wall_seconds = timer.seconds();
  return artifact;
}

}  // namespace scar
