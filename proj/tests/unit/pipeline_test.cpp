// Copyright 2026 The eqdf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <regex>

#include "eqdf/config.hpp"
#include "eqdf/csv.hpp"
#include "eqdf/error.hpp"
#include "eqdf/pipeline.hpp"
#include "eqdf/report.hpp"
#include "support.hpp"

using namespace eqdf;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig c = default_config();
  c.synth.train_size = 60;
  c.synth.validation_size = 24;
  c.synth.test_size = 30;
  c.num_classes = c.synth.num_classes = 4;
  c.zoo = {"M5", "M5-NA1"};
  c.train.epochs = 2;
  c.epsilons = {0.0, 0.01, 0.1};
  c.attack.steps = 3;
  c.rs_draws = {5, 20};
  c.alpha_step = 0.01;
  c.alpha_min = 0.01;
  c.sync();
  return c;
}

std::map<std::string, std::string> csv_files(const fs::path& run) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(run)) {
    const auto ext = e.path().extension();
    if (ext == ".csv" || ext == ".svg" || ext == ".md") out[fs::relative(e.path(), run).string()] = read_file(e.path());
  }
  return out;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

// Writes the minimal CSV set the report needs: one model, one axis.
void write_minimal_run(const fs::path& run) {
  write_file(run / "models/zoo.csv",
             "model_id,status,NA,AT,T,PT,noise_sigma,at_epsilon,selected_epoch,val_acc,val_attacked_acc,error\n"
             "M5,ok,0,0,0,0,0,0,3,0.9,,\n");
  write_file(run / "attack/robustness_curve.csv",
             "model_id,subgroup_axis,subgroup,epsilon,accuracy,n_samples\n"
             "M5,gender,f,0,0.9,10\nM5,gender,f,0.1,0.5,10\nM5,gender,f,0.3,0.1,10\n"
             "M5,gender,m,0,0.8,12\nM5,gender,m,0.1,0.4,12\nM5,gender,m,0.3,0,12\n"
             "M5,gender,x,0,NA,0\nM5,gender,x,0.1,NA,0\nM5,gender,x,0.3,NA,0\n");
  write_file(run / "attack/auc_acc.csv",
             "model_id,subgroup_axis,subgroup,auc_acc,auc_acc_raw,clean_acc,n_samples,low_count\n"
             "M5,gender,f,0.45,0.135,0.9,10,false\nM5,gender,m,0.3667,0.11,0.8,12,false\n");
  write_file(run / "attack/M5/parity.csv", "axis,metric,value\ngender,DP,0.0833\ngender,AP,0.1\n");
  write_file(run / "attack/correlations.csv", "intervention,mode,subgroup_or_axis,r,defined\nNA,binary,DP:gender,NA,false\n");
  write_file(run / "reject/fpr_curve.csv",
             "method,model_id,subgroup_axis,subgroup,alpha,fpr,n_samples\n"
             "NR,M5,gender,f,0.5,0.1,10\nNR,M5,gender,f,1,0.3,10\n"
             "RS-N10,M5,gender,f,0.5,0.2,10\nRS-N10,M5,gender,f,1,0,10\n"
             "RS-N100,M5,gender,f,0.5,0.1,10\nRS-N100,M5,gender,f,1,0,10\n");
  write_file(run / "reject/auc_fpr.csv",
             "method,model_id,subgroup_axis,subgroup,auc_fpr,auc_fpr_raw,n_samples,low_count,train_count\n"
             "NR,M5,gender,f,0.2,0.1,10,false,40\n"
             "RS-N10,M5,gender,f,0.1,0.05,10,false,40\nRS-N100,M5,gender,f,0.05,0.025,10,false,40\n");
  write_file(run / "reject/fprp_comparison.csv",
             "model_id,axis,method,draws,fprp\nM5,gender,NR,,0\nM5,gender,RS-N10,10,0\n");
  write_file(run / "reject/fpr_size_correlations.csv", "method,model_id,n_groups,r,defined\nNR,M5,1,NA,false\n");
}

// Always right: the dataset's labels are all zero and so is the prediction.
class ConstantModel final : public Model {
 public:
  explicit ConstantModel(std::size_t len) : len_(len) {}
  std::size_t num_classes() const override { return 2; }
  std::size_t input_len() const override { return len_; }
  Tensor logits(const Tensor& batch) const override {
    Tensor out({batch.dim(0), 2});
    for (std::size_t i = 0; i < batch.dim(0); ++i) out.data[2 * i] = 1.0;
    return out;
  }
  bool has_input_gradients() const override { return true; }
  BackwardResult input_gradient(const Tensor& batch, std::span<const int>) const override {
    BackwardResult r;
    r.logits = logits(batch);
    r.grads.input_grad = Tensor(batch.shape);
    return r;
  }

 private:
  std::size_t len_;
};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("configuration text round trips") {
  ExperimentConfig c = default_config();
  CHECK(format_config(parse_config(format_config(c), "a.ini")) == format_config(c));
  c = tiny_config();
  c.attack.step_size = 0.002;
  c.attack.clamp.reset();
  c.nr_options.gamma = 0.25;
  c.synth.axes[1][2].pitch_shift = 0.125;
  const ExperimentConfig back = parse_config(format_config(c), "b.ini");
  CHECK(format_config(back) == format_config(c));
  CHECK(back.attack.step_size == 0.002);
  CHECK_FALSE(back.attack.clamp.has_value());
  CHECK(json_hash(to_json(back)) == json_hash(to_json(c)));
}

TEST_CASE("configuration errors carry the location") {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_config(text, "x.ini");
    } catch (const UsageError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("[run]\nseed = 1\nsed = 2\n").find("x.ini:3") != std::string::npos);
  CHECK(message("[nope]\n").find("x.ini:1") != std::string::npos);
  CHECK(message("[attack]\nsteps = many\n").find("x.ini:2") != std::string::npos);
  CHECK(message("seed = 1\n").find("x.ini:1") != std::string::npos);
  CHECK(message("# comment\n; another\n[run]\nseed = 4\n").empty());
}

TEST_CASE("report charts trace the CSVs") {
  const fs::path run = eqdf::testing::scratch_dir("report");
  write_minimal_run(run);
  write_report(run);
  std::size_t robustness = 0;
  for (const auto& e : fs::directory_iterator(run / "report"))
    robustness += e.path().filename().string().rfind("robustness_", 0) == 0;
  CHECK(robustness == 1);
  const std::string svg = read_file(run / "report/robustness_M5_gender.svg");
  CHECK(count(svg, "<polyline") == 2);
  const std::regex poly("data-name=\"([^\"]+)\"[^>]*points=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), poly); it != std::sregex_iterator(); ++it)
    CHECK(count((*it)[2].str(), ",") == 3);
  const std::string draws = read_file(run / "report/auc_fpr_vs_draws_M5_gender.svg");
  CHECK(count(draws, "<polyline") == 1);
  const std::string md = read_file(run / "report/report.md");
  CHECK(md.find("0.0833") != std::string::npos);
  CHECK(md.find("0.3667") != std::string::npos);

  const auto first = csv_files(run / "report");
  write_report(run);
  CHECK(csv_files(run / "report") == first);
}

TEST_CASE("report names the stage whose output is missing") {
  const fs::path run = eqdf::testing::scratch_dir("report_missing");
  write_minimal_run(run);
  fs::remove(run / "reject/auc_fpr.csv");
  try {
    write_report(run);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("reject-sweep") != std::string::npos);
  }
  fs::remove(run / "attack/robustness_curve.csv");
  CHECK_THROWS_WITH_AS(write_report(run), doctest::Contains("attack-sweep"), DataError);
}

TEST_CASE("a constant-correct model has zero defense parity") {
  SubgroupedDataset ds(2, 8000, 8);
  for (int i = 0; i < 12; ++i)
    ds.add(Sample{"s" + std::to_string(i), Split::test, 0,
                  {i % 2 ? "f" : "m", i % 3 ? "a" : "b", "c"}, std::vector<double>(8, 0.1)});
  ExperimentConfig cfg = default_config();
  cfg.source = DataSource::manifest;
  const AttackResult r = attack_model(ConstantModel(8), "stub", ds, cfg, declared_groups(ds, cfg));
  for (const auto& p : r.parity) CHECK(p.value == 0.0);
  CHECK(r.clean_accuracy == 1.0);
}

TEST_CASE("tiny end-to-end run is consistent, resumable and thread invariant") {
  const fs::path root = eqdf::testing::scratch_dir("e2e");
  std::vector<std::string> log;
  RunContext ctx{tiny_config(), root / "a", false, [&](const std::string& s) { log.push_back(s); }};
  run_all(ctx);
  const auto a = csv_files(ctx.out);

  // Cross-file checks: AUC_acc from the curve, FPRP from AUC_FPR.
  const CsvTable rob = read_csv(ctx.out / "attack/robustness_curve.csv");
  const CsvTable auc = read_csv(ctx.out / "attack/auc_acc.csv");
  for (const auto& row : auc.rows) {
    if (row[auc.column("auc_acc")] == "NA") continue;
    std::vector<double> x, y;
    for (const auto& r : rob.rows)
      if (r[0] == row[0] && r[1] == row[1] && r[2] == row[2]) {
        x.push_back(std::stod(r[rob.column("epsilon")]));
        y.push_back(std::stod(r[rob.column("accuracy")]));
      }
    double area = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) area += (x[i] - x[i - 1]) * (y[i] + y[i - 1]) / 2;
    CHECK(std::stod(row[auc.column("auc_acc")]) == doctest::Approx(area / (x.back() - x.front())).epsilon(1e-12));
  }
  const CsvTable afpr = read_csv(ctx.out / "reject/auc_fpr.csv");
  const CsvTable cmp = read_csv(ctx.out / "reject/fprp_comparison.csv");
  CHECK(cmp.rows.size() == 2 * 3 + 2 * 3);
  for (const auto& row : cmp.rows) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& r : afpr.rows)
      if (r[afpr.column("model_id")] == row[0] && r[afpr.column("subgroup_axis")] == row[1] &&
          r[afpr.column("method")] == row[2] && r[afpr.column("auc_fpr")] != "NA") {
        lo = std::min(lo, std::stod(r[afpr.column("auc_fpr")]));
        hi = std::max(hi, std::stod(r[afpr.column("auc_fpr")]));
      }
    CHECK(std::stod(row[cmp.column("fprp")]) == doctest::Approx(hi - lo).epsilon(1e-12));
  }
  const CsvTable corr = read_csv(ctx.out / "attack/correlations.csv");
  std::set<std::pair<std::string, std::string>> cells;
  for (const auto& r : corr.rows)
    if (r[1] == "binary") CHECK(cells.insert({r[0], r[2]}).second);
  CHECK(cells.size() == 4 * (9 + 3));

  // Rerunning with the same settings is a no-op.
  log.clear();
  const auto stamp = fs::last_write_time(ctx.out / "attack/robustness_curve.csv");
  run_all(ctx);
  CHECK(fs::last_write_time(ctx.out / "attack/robustness_curve.csv") == stamp);
  CHECK(std::count_if(log.begin(), log.end(), [](const std::string& s) {
          return s.find("up to date") != std::string::npos;
        }) == 4);

  RunContext other = ctx;
  other.out = root / "b";
  other.cfg.threads = 3;
  run_all(other);
  CHECK(csv_files(other.out) == a);

  // A different seed refuses to overwrite without --force.
  RunContext reseeded = ctx;
  reseeded.cfg.seed = 5;
  reseeded.cfg.sync();
  CHECK_THROWS_AS(run_synth(reseeded), UsageError);
  reseeded.force = true;
  run_synth(reseeded);
}

TEST_CASE("stages check their prerequisites") {
  const fs::path root = eqdf::testing::scratch_dir("prereq");
  RunContext ctx{tiny_config(), root, false, {}};
  CHECK_THROWS_AS(run_zoo(ctx), DataError);
  CHECK_THROWS_AS(run_attack_sweep(ctx), DataError);
  CHECK_THROWS_AS(run_report(ctx), DataError);
}

}  // TEST_SUITE
