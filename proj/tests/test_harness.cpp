#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "scar/checkpoint.hpp"
#include "scar/config.hpp"
#include "scar/csv.hpp"
#include "scar/errors.hpp"
#include "scar/model.hpp"
#include "scar/report.hpp"
#include "scar/runner.hpp"
#include "scar/svg.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using scar::Array;
using scar::ExperimentConfig;
using scar::MlpSpec;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kSmallConfig = R"(
[dataset]
generator = two_moons
n = 200
noise = 0.2
n_l = 10
n_test = 100

[model]
hidden = 8,8
seed = 42

[method]
name = fixmatch
lambda = 1.0
tau = 0.95

[attack]
kind = fgsm
eps = 2/255

[train]
epochs = 3
batch_size = 16
batches_per_epoch = 3
lr = 0.2
)";

ExperimentConfig small_config(const std::string& out_dir) {
  ExperimentConfig cfg = scar::parse_config_text(kSmallConfig, "test");
  cfg.out_dir = out_dir;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("parses every section and applies the eps fraction notation") {
    const auto cfg = scar::parse_config_text(kSmallConfig, "test");
    CHECK(cfg.dataset.n == 200);
    CHECK(cfg.dataset.n_l == 10);
    CHECK(cfg.model.hidden == std::vector<int64_t>{8, 8});
    CHECK(cfg.model.seed == 42);
    CHECK(cfg.method.kind == scar::MethodKind::FixMatchLite);
    CHECK(cfg.attack.eps == doctest::Approx(2.0f / 255.0f));
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.train.seed == 42);
  }
  SUBCASE("unknown keys are hard errors") {
    CHECK_THROWS_AS(scar::parse_config_text("[dataset]\nbogus = 1\n", "test"), scar::ConfigError);
    CHECK_THROWS_AS(scar::parse_config_text("[nonsense]\nn = 1\n", "test"), scar::ConfigError);
    try {
      scar::parse_config_text("[train]\nlearning_rate = 0.1\n", "test");
      FAIL("expected ConfigError");
    } catch (const scar::ConfigError& e) {
      CHECK(std::string(e.what()).find("train.learning_rate") != std::string::npos);
    }
  }
  SUBCASE("duplicate keys are rejected") {
    CHECK_THROWS_AS(scar::parse_config_text("[dataset]\nn = 2\nn = 3\n", "test"),
                    scar::ConfigError);
  }
  SUBCASE("field-level validation message names the field") {
    try {
      scar::parse_config_text("[method]\nname = fixmatch\ntau = 1.5\n", "test");
      FAIL("expected ConfigError");
    } catch (const scar::ConfigError& e) {
      CHECK(std::string(e.what()).find("tau") != std::string::npos);
    }
  }
  SUBCASE("serialize/parse round-trip is exact") {
    const auto cfg = scar::parse_config_text(kSmallConfig, "test");
    const std::string text = scar::serialize_config(cfg);
    const auto cfg2 = scar::parse_config_text(text, "roundtrip");
    CHECK(scar::serialize_config(cfg2) == text);
    CHECK(cfg2.attack.eps == cfg.attack.eps);
    CHECK(cfg2.model.seed == cfg.model.seed);
    CHECK(cfg2.train.lr == cfg.train.lr);
  }
}

TEST_CASE("eps parsing") {
  CHECK(scar::parse_eps("0.05") == doctest::Approx(0.05f));
  CHECK(scar::parse_eps("2/255") == doctest::Approx(2.0f / 255.0f));
  const auto list = scar::parse_eps_list("1/255, 2/255,0.1");
  REQUIRE(list.size() == 3);
  CHECK(list[0] == doctest::Approx(1.0f / 255.0f));
  CHECK(list[2] == doctest::Approx(0.1f));
  CHECK_THROWS_AS(scar::parse_eps_list(""), scar::ConfigError);
  CHECK_THROWS_AS(scar::parse_eps("1/0"), scar::ConfigError);
  CHECK_THROWS_AS(scar::parse_eps("abc"), scar::ConfigError);
}

TEST_CASE("seed overrides") {
  auto cfg = scar::parse_config_text(kSmallConfig, "test");
  SUBCASE("SCAR_SEED overrides the config seed") {
    setenv("SCAR_SEED", "777", 1);
    scar::apply_seed_overrides(cfg, "");
    unsetenv("SCAR_SEED");
    CHECK(cfg.model.seed == 777);
    CHECK(cfg.train.seed == 777);
  }
  SUBCASE("--seed beats SCAR_SEED") {
    setenv("SCAR_SEED", "777", 1);
    scar::apply_seed_overrides(cfg, "888");
    unsetenv("SCAR_SEED");
    CHECK(cfg.model.seed == 888);
  }
}

TEST_CASE("checkpoint round-trip") {
  const auto dir = temp_dir("scar_ckpt_test");
  const MlpSpec spec{{2, 8, 2}};
  const auto model = scar::init_classifier(spec, 99);
  const std::string path = (dir / "model.ckpt").string();

  SUBCASE("save -> load -> save produces byte-identical files") {
    scar::save_checkpoint(model, path, 7, "fixmatch");
    const auto ckpt = scar::load_checkpoint(path);
    CHECK(ckpt.epoch == 7);
    CHECK(ckpt.method == "fixmatch");
    CHECK(ckpt.model.spec == spec);
    CHECK(scar::param_hash(ckpt.model) == scar::param_hash(model));
    const std::string path2 = (dir / "model2.ckpt").string();
    scar::save_checkpoint(ckpt.model, path2, 7, "fixmatch");
    CHECK(read_file(path) == read_file(path2));
  }
  SUBCASE("corrupted magic is reported as not a SCAR checkpoint") {
    scar::save_checkpoint(model, path, 1, "vat");
    std::string bytes = read_file(path);
    bytes[0] = 'X';
    std::ofstream(path, std::ios::binary) << bytes;
    try {
      scar::load_checkpoint(path);
      FAIL("expected CheckpointError");
    } catch (const scar::CheckpointError& e) {
      CHECK(std::string(e.what()).find("not a SCAR checkpoint") != std::string::npos);
    }
  }
  SUBCASE("truncated file is detected") {
    scar::save_checkpoint(model, path, 1, "vat");
    std::string bytes = read_file(path);
    bytes.resize(bytes.size() - 10);
    std::ofstream(path, std::ios::binary) << bytes;
    CHECK_THROWS_AS(scar::load_checkpoint(path), scar::CheckpointError);
  }
  SUBCASE("loading into a mismatched spec names the layer") {
    scar::save_checkpoint(model, path, 1, "vat");
    const auto ckpt = scar::load_checkpoint(path);
    try {
      scar::require_spec(ckpt, MlpSpec{{2, 16, 2}});
      FAIL("expected CheckpointError");
    } catch (const scar::CheckpointError& e) {
      CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
      CHECK(std::string(e.what()).find("[2,8,2]") != std::string::npos);
      CHECK(std::string(e.what()).find("[2,16,2]") != std::string::npos);
    }
  }
}

TEST_CASE("csv round-trip and header-keyed reads") {
  const auto dir = temp_dir("scar_csv_test");
  const std::string path = (dir / "t.csv").string();
  {
    scar::CsvWriter w(path, {"epoch", "value", "note"});
    w.begin_row();
    w.field(0L);
    w.field(0.5);
    w.field(std::string("ok"));
    w.end_row();
    w.begin_row();
    w.field(1L);
    w.field(std::optional<double>{});
    w.field(std::string("none"));
    w.end_row();
  }
  const auto table = scar::read_csv(path);
  REQUIRE(table.rows.size() == 2);
  CHECK(table.at(0, "value") == "0.500000");
  CHECK(table.at(1, "value") == "");
  CHECK(table.at(1, "note") == "none");
  CHECK_THROWS_AS(table.at(0, "missing"), scar::ParseError);
}

TEST_CASE("svg chart is well-formed XML") {
  scar::SvgSeries a{"sensitivity", "#1f6fb2", {0.01, 0.02, 0.03}, {0.9, 0.95, std::nullopt}};
  scar::SvgSeries b{"specificity", "#c23b22", {0.01, 0.02, 0.03}, {0.5, 0.4, 0.3}};
  const std::string svg = scar::render_line_chart("t", "epsilon", "rate", {a, b});
  CHECK(testutil::xml_well_formed(svg));
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("pretrain runs reproducibly" * doctest::timeout(120)) {
  const auto dir_a = temp_dir("scar_run_a");
  const auto dir_b = temp_dir("scar_run_b");
  const auto art_a = scar::cmd_pretrain(small_config(dir_a.string()));
  const auto art_b = scar::cmd_pretrain(small_config(dir_b.string()));

  CHECK(read_file(art_a.metrics_path) == read_file(art_b.metrics_path));
  CHECK(read_file(art_a.checkpoint_path) == read_file(art_b.checkpoint_path));
  // snapshots differ only in the output directory they record
  CHECK(read_file(art_a.config_snapshot_path).find("seed = 42") != std::string::npos);

  SUBCASE("the snapshot re-runs to identical results") {
    const auto dir_c = temp_dir("scar_run_c");
    ExperimentConfig from_snapshot = scar::parse_config_file(art_a.config_snapshot_path);
    from_snapshot.out_dir = dir_c.string();
    const auto art_c = scar::cmd_pretrain(from_snapshot);
    CHECK(read_file(art_a.metrics_path) == read_file(art_c.metrics_path));
    CHECK(read_file(art_a.checkpoint_path) == read_file(art_c.checkpoint_path));
  }
}

TEST_CASE("scar + tradeoff + report pipeline" * doctest::timeout(240)) {
  const auto pre_dir = temp_dir("scar_pipe_pre");
  const auto art_pre = scar::cmd_pretrain(small_config(pre_dir.string()));

  SUBCASE("scar writes selection and both accuracy columns") {
    const auto dir = temp_dir("scar_pipe_ft");
    const auto art = scar::cmd_scar(small_config(dir.string()), art_pre.checkpoint_path);
    const auto metrics = scar::read_csv(art.metrics_path);
    REQUIRE(!metrics.rows.empty());
    CHECK(metrics.column("pre_accuracy").has_value());
    CHECK(metrics.column("test_accuracy").has_value());
    const auto selection = scar::read_csv((fs::path(dir) / "selection.csv").string());
    CHECK(selection.rows.size() == 190);  // n - n_l
    CHECK(selection.column("robust").has_value());

    SUBCASE("report aggregates pretrain and scar runs in table order") {
      const auto rep_dir = temp_dir("scar_pipe_rep");
      const auto art_rep =
          scar::cmd_report({pre_dir.string(), dir.string()}, rep_dir.string());
      const auto table = scar::read_csv(art_rep.metrics_path);
      REQUIRE(table.rows.size() == 2);
      CHECK(table.at(0, "method") == "FixMatch");
      CHECK(table.at(1, "method") == "FixMatch + SCAR");
      CHECK(table.at(0, "accuracy_std") == "");  // single seed -> empty std
      // accuracy echoes the metrics CSV exactly
      const auto pre_metrics = scar::read_csv(art_pre.metrics_path);
      const std::string last_acc =
          pre_metrics.at(pre_metrics.rows.size() - 1, "test_accuracy");
      CHECK(table.at(0, "accuracy_mean") == last_acc);
    }
  }
  SUBCASE("checkpoint/spec mismatch is rejected with both shapes") {
    auto cfg = small_config(temp_dir("scar_pipe_bad").string());
    cfg.model.hidden = {16};
    try {
      scar::cmd_scar(cfg, art_pre.checkpoint_path);
      FAIL("expected CheckpointError");
    } catch (const scar::CheckpointError& e) {
      const std::string what = e.what();
      CHECK(what.find("[2,8,8,2]") != std::string::npos);
      CHECK(what.find("[2,16,2]") != std::string::npos);
    }
  }
  SUBCASE("tradeoff emits csv rows plus a valid svg") {
    const auto dir = temp_dir("scar_pipe_to");
    auto cfg = small_config(dir.string());
    const auto art = scar::cmd_tradeoff(cfg, art_pre.checkpoint_path,
                                        scar::parse_eps_list("1/255,2/255,4/255"));
    const auto table = scar::read_csv(art.metrics_path);
    REQUIRE(table.rows.size() == 3);
    CHECK(table.column("sens_num").has_value());
    CHECK(table.column("n_selected").has_value());
    CHECK(testutil::xml_well_formed(read_file((fs::path(dir) / "tradeoff.svg").string())));
  }
  SUBCASE("missing dataset file names the path") {
    auto cfg = small_config(temp_dir("scar_pipe_csv").string());
    cfg.dataset.generator = "csv";
    cfg.dataset.csv_path = "/nonexistent/data.csv";
    cfg.dataset.csv_test_path = "/nonexistent/test.csv";
    try {
      scar::cmd_pretrain(cfg);
      FAIL("expected ConfigError");
    } catch (const scar::ConfigError& e) {
      CHECK(std::string(e.what()).find("/nonexistent/data.csv") != std::string::npos);
    }
  }
}

TEST_CASE("cli exit codes") {
  const char* cli = std::getenv("SCAR_CLI");
  if (cli == nullptr || *cli == '\0') {
    MESSAGE("SCAR_CLI not set; skipping CLI process tests");
    return;
  }
  const auto dir = temp_dir("scar_cli_codes");
  auto run = [&](const std::string& args) {
    const std::string cmd =
        std::string(cli) + " " + args + " > " + (dir / "out.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };

  SUBCASE("missing dataset file exits with code 2 and names the path") {
    const fs::path cfg = dir / "csv.ini";
    std::ofstream(cfg) << "[dataset]\ngenerator = csv\ncsv_path = /nope/data.csv\n"
                          "csv_test_path = /nope/test.csv\nn_l = 10\n"
                          "[method]\nname = supervised\n[attack]\neps = 0.01\n";
    CHECK(run("pretrain --config " + cfg.string()) == 2);
    CHECK(read_file((dir / "out.txt").string()).find("/nope/data.csv") != std::string::npos);
  }
  SUBCASE("invalid config key exits with code 2 and a field-level message") {
    const fs::path cfg = dir / "bad.ini";
    std::ofstream(cfg) << "[train]\nbogus_knob = 3\n";
    CHECK(run("pretrain --config " + cfg.string()) == 2);
    CHECK(read_file((dir / "out.txt").string()).find("train.bogus_knob") != std::string::npos);
  }
  SUBCASE("usage errors exit with code 2") {
    CHECK(run("pretrain") == 2);           // --config is required
    CHECK(run("tradeoff --config x") == 2);
  }
  SUBCASE("a good run exits 0") {
    const fs::path cfg = dir / "ok.ini";
    std::ofstream(cfg) << "[dataset]\nn = 100\nn_test = 50\nn_l = 10\n"
                          "[model]\nhidden = 4\nseed = 1\n[method]\nname = supervised\n"
                          "[attack]\neps = 0.01\n"
                          "[train]\nepochs = 2\nbatch_size = 8\nbatches_per_epoch = 2\n"
                          "[output]\ndir = " << (dir / "run").string() << "\n";
    CHECK(run("pretrain --config " + cfg.string()) == 0);
  }
}
