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

#include "eqdf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <mutex>
#include <set>

#include "eqdf/attack.hpp"
#include "eqdf/csv.hpp"
#include "eqdf/error.hpp"
#include "eqdf/rejection.hpp"
#include "eqdf/report.hpp"
#include "eqdf/synth.hpp"
#include "eqdf/training.hpp"

namespace fs = std::filesystem;

namespace eqdf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void say(const RunContext& ctx, const std::string& msg) {
  if (ctx.log) ctx.log(msg);
}

std::string cell(double v) { return std::isnan(v) ? "NA" : format_double(v); }

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---- stage bookkeeping -----------------------------------------------------

fs::path stamp_path(const fs::path& dir) { return dir / ".stamp"; }

bool stage_current(const fs::path& dir, const std::string& hash) {
  std::error_code ec;
  if (!fs::exists(stamp_path(dir), ec)) return false;
  try {
    return nlohmann::json::parse(read_file(stamp_path(dir))).value("hash", "") == hash;
  } catch (const std::exception&) {
    return false;
  }
}

bool non_empty_dir(const fs::path& dir) {
  std::error_code ec;
  return fs::is_directory(dir, ec) && !fs::is_empty(dir, ec);
}

void reset_dir(const fs::path& dir) {
  std::error_code ec;
  fs::remove_all(dir, ec);
  if (ec) throw DataError("cannot clear " + dir.string() + ": " + ec.message());
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

void write_stamp(const fs::path& dir, const std::string& hash) {
  write_file(stamp_path(dir), nlohmann::json{{"hash", hash}}.dump() + "\n");
}

/// Rewrites run_manifest.json with fresh checksums of every file in the run.
void update_run_manifest(const RunContext& ctx, const std::string& stage, const std::string& hash, bool ran,
                         const nlohmann::json& extra = nullptr) {
  const fs::path path = ctx.out / "run_manifest.json";
  nlohmann::json m = nlohmann::json::object();
  std::error_code ec;
  if (fs::exists(path, ec)) {
    try {
      m = nlohmann::json::parse(read_file(path));
    } catch (const std::exception&) {
      m = nlohmann::json::object();
    }
  }
  m["toolkit_version"] = kToolkitVersion;
  m["config_hash"] = json_hash(to_json(ctx.cfg));
  m["seed"] = ctx.cfg.seed;
  auto& st = m["stages"][stage];
  if (ran || !st.contains("completed_at")) st["completed_at"] = now_utc();
  st["hash"] = hash;
  if (!extra.is_null()) st["details"] = extra;
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(ctx.out); it != fs::recursive_directory_iterator(); ++it)
    if (it->is_regular_file() && it->path().filename() != "run_manifest.json") files.push_back(it->path());
  std::sort(files.begin(), files.end());
  nlohmann::json list = nlohmann::json::array();
  for (const auto& f : files) {
    const std::string bytes = read_file(f);
    list.push_back({{"path", fs::relative(f, ctx.out).generic_string()},
                    {"sha256", sha256_hex(bytes)},
                    {"bytes", bytes.size()}});
  }
  m["files"] = list;
  write_file(path, m.dump(2) + "\n");
}

// ---- zoo on disk -----------------------------------------------------------

struct LoadedModel {
  ZooEntry entry;
  Classifier model;
};

std::vector<LoadedModel> load_zoo(const RunContext& ctx) {
  const fs::path zoo_csv = ctx.out / "models" / "zoo.csv";
  std::error_code ec;
  if (!fs::exists(zoo_csv, ec))
    throw DataError("missing zoo output " + zoo_csv.string() + " (run the zoo stage first)");
  const CsvTable t = read_csv(zoo_csv);
  const auto c_id = t.column("model_id"), c_status = t.column("status");
  std::vector<LoadedModel> out;
  for (const auto& row : t.rows) {
    if (row[c_status] != "ok") continue;
    LoadedModel lm{parse_zoo_name(row[c_id]), load_checkpoint(ctx.out / "models" / row[c_id] / "checkpoint.eqdf")};
    out.push_back(std::move(lm));
  }
  if (out.empty()) throw DataError("no successfully trained models in " + zoo_csv.string());
  return out;
}

void check_compatible(const Model& m, const std::string& id, const SubgroupedDataset& ds) {
  if (m.num_classes() != ds.num_classes())
    throw DataError("model '" + id + "' has " + std::to_string(m.num_classes()) + " classes but the dataset has " +
                    std::to_string(ds.num_classes()));
  if (m.input_len() != ds.length())
    throw DataError("model '" + id + "' expects " + std::to_string(m.input_len()) + " samples per clip, dataset has " +
                    std::to_string(ds.length()));
}

std::vector<std::array<std::string, 3>> groups_of(const SubgroupedDataset& ds, std::span<const std::size_t> idx) {
  std::vector<std::array<std::string, 3>> g;
  for (std::size_t i : idx) g.push_back(ds[i].groups);
  return g;
}

MethodRejection summarize_method(const std::string& method, std::size_t draws,
                                 const std::vector<RejectionProfile>& profiles, AbstainWhen when,
                                 const std::vector<std::array<std::string, 3>>& groups,
                                 std::span<const double> alphas, const DeclaredGroups& declared) {
  MethodRejection m;
  m.method = method;
  m.draws = draws;
  const auto hits = abstentions(profiles, alphas, when);
  for (Axis axis : kAxes) {
    RejectionCurve c = curve_from_indicators(axis, alphas, hits, groups, declared[static_cast<std::size_t>(axis)]);
    std::map<std::string, double> present;
    for (const auto& [g, s] : c.groups) {
      GroupAuc a{axis, g, s.n, kNaN, kNaN, kNaN};
      if (s.present()) {
        a.auc = auc_fpr(c, g);
        a.auc_raw = auc_fpr(c, g, false);
        present[g] = a.auc;
      }
      m.aucs.push_back(a);
    }
    if (!present.empty()) m.parity.push_back({axis, "FPRP:" + method, fpr_parity(present)});
    m.curves.push_back(std::move(c));
  }
  return m;
}

}  // namespace

// ---- in-memory analyses ----------------------------------------------------

DeclaredGroups declared_groups(const SubgroupedDataset& ds, const ExperimentConfig& cfg) {
  DeclaredGroups out;
  for (Axis axis : kAxes) {
    std::set<std::string> names;
    for (const auto& s : ds.samples()) names.insert(s.group(axis));
    if (cfg.source == DataSource::synth)
      for (const auto& g : cfg.synth.axes[static_cast<std::size_t>(axis)]) names.insert(g.name);
    out[static_cast<std::size_t>(axis)].assign(names.begin(), names.end());
  }
  return out;
}

std::vector<std::size_t> evaluation_indices(const SubgroupedDataset& ds, std::size_t limit) {
  auto idx = ds.indices(Split::test);
  if (idx.empty()) throw DataError("the dataset has no test split");
  if (limit > 0 && idx.size() > limit) idx.resize(limit);
  return idx;
}

AttackResult attack_model(const Model& model, const std::string& model_id, const SubgroupedDataset& ds,
                          const ExperimentConfig& cfg, const DeclaredGroups& declared) {
  check_compatible(model, model_id, ds);
  if (cfg.epsilons.size() < 2) throw UsageError("the attack sweep needs at least two epsilons");
  const auto idx = evaluation_indices(ds, cfg.attack_samples);
  const CorrectnessGrid grid = attack_sweep(model, ds, idx, cfg.epsilons, cfg.attack, cfg.threads);

  std::vector<std::uint8_t> clean;
  if (cfg.epsilons.front() == 0.0) {
    clean = grid.correct.front();
  } else {
    const auto pred = predict(model, ds.batch(idx));
    const auto y = ds.labels(idx);
    for (std::size_t i = 0; i < idx.size(); ++i) clean.push_back(pred[i] == y[i] ? 1 : 0);
  }

  AttackResult r;
  r.model_id = model_id;
  r.max_linf = grid.max_linf;
  r.clean_accuracy = static_cast<double>(std::count(clean.begin(), clean.end(), 1)) / static_cast<double>(idx.size());
  r.attacked_accuracy_max = grid.accuracy(grid.epsilons.size() - 1);
  const std::vector<double> zero{0.0};
  for (Axis axis : kAxes) {
    const auto& decl = declared[static_cast<std::size_t>(axis)];
    RobustnessCurve c = curve_from_indicators(axis, grid.epsilons, grid.correct, grid.groups, decl);
    const SubgroupCurve clean_curve = curve_from_indicators(axis, zero, {clean}, grid.groups, decl);
    std::map<std::string, double> auc, acc;
    for (const auto& [g, s] : c.groups) {
      GroupAuc a{axis, g, s.n, kNaN, kNaN, kNaN};
      if (s.present()) {
        a.auc = auc_acc(c, g);
        a.auc_raw = auc_acc(c, g, false);
        a.clean = clean_curve.groups.at(g).values[0];
        auc[g] = a.auc;
        acc[g] = a.clean;
      }
      r.aucs.push_back(a);
    }
    if (!auc.empty()) {
      r.parity.push_back({axis, "DP", defense_parity(auc)});
      r.parity.push_back({axis, "AP", accuracy_parity(acc)});
    }
    r.curves.push_back(std::move(c));
  }
  return r;
}

void check_rejection_monotone(const MethodRejection& m) {
  const bool rs = m.method != "NR";
  for (const auto& c : m.curves)
    for (const auto& [g, s] : c.groups) {
      if (!s.present()) continue;
      for (std::size_t i = 1; i < s.values.size(); ++i) {
        const bool ok = rs ? s.values[i] <= s.values[i - 1] : s.values[i] >= s.values[i - 1];
        if (!ok)
          throw Error(ErrorKind::internal, m.method + " abstention is not monotone in alpha for " +
                                               std::string(to_string(c.axis)) + ":" + g);
      }
    }
}

RejectResult reject_model(const Classifier& model, const std::string& model_id, const SubgroupedDataset& ds,
                          const ExperimentConfig& cfg, const DeclaredGroups& declared, bool run_nr, bool run_rs) {
  check_compatible(model, model_id, ds);
  const auto test = evaluation_indices(ds);
  const auto groups = groups_of(ds, test);
  const auto alphas = alpha_grid(cfg.alpha_min, cfg.alpha_max, cfg.alpha_step);
  RejectResult r;
  r.model_id = model_id;
  for (std::size_t i : test) r.sample_ids.push_back(ds[i].id);

  if (run_nr) {
    const auto tr = ds.indices(Split::train), va = ds.indices(Split::validation);
    if (tr.empty() || va.empty()) throw DataError("neural rejection needs train and validation splits");
    const Tensor fit = model.extract(ds.batch(tr));
    const Tensor cal = model.extract(ds.batch(va));
    NeuralRejector nr = fit_neural_rejection(fit, ds.labels(tr), cal, ds.labels(va), ds.num_classes(),
                                             cfg.nr_options);
    nr.set_extractor(&model);
    const auto profiles = nr.profiles(ds, test, cfg.threads);
    r.methods.push_back(summarize_method("NR", 0, profiles, nr.abstain_when(), groups, alphas, declared));
  }
  if (run_rs) {
    const SmoothedCounts sc = smoothed_counts(model, ds, test, cfg.rs_sigma, cfg.rs_draws, cfg.seed, cfg.threads);
    for (std::size_t d = 0; d < sc.draws.size(); ++d) {
      std::vector<RejectionProfile> profiles;
      for (const auto& c : sc.counts[d]) profiles.push_back(profile_from_counts(c));
      r.methods.push_back(summarize_method("RS-N" + std::to_string(sc.draws[d]), sc.draws[d], profiles,
                                           AbstainWhen::stat_above_alpha, groups, alphas, declared));
      r.rs_counts[sc.draws[d]] = sc.counts[d];
    }
  }
  for (const auto& m : r.methods) check_rejection_monotone(m);
  return r;
}

// ---- stages ----------------------------------------------------------------

SubgroupedDataset load_run_dataset(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  fs::path manifest = c.source == DataSource::synth ? ctx.out / "data" / "manifest.csv" : c.manifest;
  std::error_code ec;
  if (c.source == DataSource::synth && !fs::exists(manifest, ec))
    throw DataError("missing synth output " + manifest.string() + " (run the synth stage first)");
  if (manifest.empty()) throw UsageError("[data] manifest must be set when source = manifest");
  return load_manifest(manifest, c.sample_rate, c.length, c.num_classes);
}

void run_synth(const RunContext& ctx) {
  if (ctx.cfg.source != DataSource::synth) {
    say(ctx, "synth: data source is a manifest, nothing to generate");
    return;
  }
  const fs::path dir = ctx.out / "data";
  const std::string hash = json_hash(data_stage_json(ctx.cfg));
  std::error_code ec;
  if (!ctx.force && stage_current(dir, hash) && fs::exists(dir / "manifest.csv", ec)) {
    say(ctx, "synth: up to date");
    update_run_manifest(ctx, "synth", hash, false);
    return;
  }
  if (non_empty_dir(dir) && !ctx.force)
    throw UsageError("output directory " + dir.string() + " is not empty and was made with other settings; pass --force");
  reset_dir(dir);
  say(ctx, "synth: generating " +
               std::to_string(ctx.cfg.synth.train_size + ctx.cfg.synth.validation_size + ctx.cfg.synth.test_size) +
               " clips");
  const SubgroupedDataset ds = synth_generate(ctx.cfg.synth);
  write_manifest(ds, dir);
  write_file(dir / "subgroup_stats.csv", subgroup_stats_csv(subgroup_stats(ds)));
  write_stamp(dir, hash);
  update_run_manifest(ctx, "synth", hash, true);
}

void run_zoo(const RunContext& ctx) {
  const fs::path dir = ctx.out / "models";
  const std::string hash = json_hash(zoo_stage_json(ctx.cfg));
  if (!ctx.force && stage_current(dir, hash)) {
    say(ctx, "zoo: up to date");
    update_run_manifest(ctx, "zoo", hash, false);
    return;
  }
  const SubgroupedDataset ds = load_run_dataset(ctx);
  const auto entries = parse_zoo(ctx.cfg.zoo);
  reset_dir(dir);
  std::mutex mu;
  std::size_t done = 0;
  const auto results = build_zoo(ds, entries, ctx.cfg.train, ctx.cfg.threads, [&](const ZooResult& r) {
    std::lock_guard lock(mu);
    ++done;
    std::string msg = "zoo: [" + std::to_string(done) + "/" + std::to_string(entries.size()) + "] " + r.entry.name;
    if (!r.error.empty()) {
      msg += " failed: " + r.error;
    } else {
      const auto& e = r.history.epochs[r.history.selected];
      msg += " epoch " + std::to_string(e.epoch) + " val_acc " + format_double(e.val_acc);
      if (e.val_attacked_acc) msg += " val_attacked_acc " + format_double(*e.val_attacked_acc);
    }
    say(ctx, msg);
  });
  CsvWriter zoo({"model_id", "status", "NA", "AT", "T", "PT", "noise_sigma", "at_epsilon", "selected_epoch", "val_acc",
                 "val_attacked_acc", "error"});
  nlohmann::json details = nlohmann::json::array();
  for (const auto& r : results) {
    const auto enc = binary_encoding(r.entry.iv);
    std::vector<std::string> row{r.entry.name, r.error.empty() ? "ok" : "failed"};
    for (double v : enc) row.push_back(format_double(v));
    row.push_back(format_double(r.entry.iv.noise_sigma));
    row.push_back(format_double(r.entry.iv.at_epsilon));
    if (r.error.empty()) {
      const auto& e = r.history.epochs[r.history.selected];
      row.push_back(std::to_string(r.history.selected));
      row.push_back(format_double(e.val_acc));
      row.push_back(e.val_attacked_acc ? format_double(*e.val_attacked_acc) : "");
      row.push_back("");
      const fs::path mdir = dir / r.entry.name;
      fs::create_directories(mdir);
      save_checkpoint(*r.model, mdir / "checkpoint.eqdf");
      write_file(mdir / "train_history.csv", history_csv(r.history));
    } else {
      row.insert(row.end(), {"", "", "", r.error});
    }
    zoo.row(row);
    details.push_back({{"model_id", r.entry.name},
                       {"status", r.error.empty() ? "ok" : "failed"},
                       {"binary", {{"NA", enc[0]}, {"AT", enc[1]}, {"T", enc[2]}, {"PT", enc[3]}}},
                       {"level", {{"NA", r.entry.iv.noise_sigma}, {"AT", r.entry.iv.at_epsilon}}}});
  }
  zoo.save(dir / "zoo.csv");
  write_stamp(dir, hash);
  update_run_manifest(ctx, "zoo", hash, true, details);
}

void run_attack_sweep(const RunContext& ctx) {
  const fs::path dir = ctx.out / "attack";
  const std::string hash = json_hash(attack_stage_json(ctx.cfg));
  if (!ctx.force && stage_current(dir, hash)) {
    say(ctx, "attack-sweep: up to date");
    update_run_manifest(ctx, "attack-sweep", hash, false);
    return;
  }
  const SubgroupedDataset ds = load_run_dataset(ctx);
  const auto models = load_zoo(ctx);
  const DeclaredGroups declared = declared_groups(ds, ctx.cfg);
  reset_dir(dir);

  CsvWriter curve({"model_id", "subgroup_axis", "subgroup", "epsilon", "accuracy", "n_samples"});
  CsvWriter aucs({"model_id", "subgroup_axis", "subgroup", "auc_acc", "auc_acc_raw", "clean_acc", "n_samples",
                  "low_count"});
  CsvWriter linf({"model_id", "epsilon", "max_linf"});
  std::vector<std::vector<double>> bin_enc, lvl_enc;
  std::map<std::string, std::vector<double>> targets;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto& lm = models[m];
    say(ctx, "attack-sweep: " + lm.entry.name);
    const AttackResult r = attack_model(lm.model, lm.entry.name, ds, ctx.cfg, declared);
    for (const auto& c : r.curves)
      for (const auto& [g, s] : c.groups)
        for (std::size_t e = 0; e < c.grid.size(); ++e)
          curve.row({r.model_id, std::string(to_string(c.axis)), g, format_double(c.grid[e]), cell(s.values[e]),
                     std::to_string(s.n)});
    for (const auto& a : r.aucs) {
      aucs.row({r.model_id, std::string(to_string(a.axis)), a.group, cell(a.auc), cell(a.auc_raw), cell(a.clean),
                std::to_string(a.n), a.n < kLowCountThreshold ? "true" : "false"});
      const std::string key = std::string(to_string(a.axis)) + ":" + a.group;
      targets[key].resize(models.size(), kNaN);
      targets[key][m] = a.auc;
    }
    for (std::size_t e = 0; e < r.max_linf.size(); ++e)
      linf.row({r.model_id, format_double(ctx.cfg.epsilons[e]), format_double(r.max_linf[e])});
    CsvWriter parity({"axis", "metric", "value"});
    for (const auto& p : r.parity) {
      parity.row({std::string(to_string(p.axis)), p.metric, format_double(p.value)});
      if (p.metric == "DP") {
        const std::string key = "DP:" + std::string(to_string(p.axis));
        targets[key].resize(models.size(), kNaN);
        targets[key][m] = p.value;
      }
    }
    parity.save(dir / r.model_id / "parity.csv");
    bin_enc.push_back(binary_encoding(lm.entry.iv));
    lvl_enc.push_back({lm.entry.iv.noise_sigma, lm.entry.iv.at_epsilon});
  }
  curve.save(dir / "robustness_curve.csv");
  aucs.save(dir / "auc_acc.csv");
  linf.save(dir / "max_linf.csv");

  CsvWriter corr({"intervention", "mode", "subgroup_or_axis", "r", "defined"});
  if (models.size() >= 2) {
    auto emit = [&](const std::vector<CorrelationCell>& cells) {
      for (const auto& c : cells)
        corr.row({c.intervention, std::string(to_string(c.mode)), c.target, c.r ? format_double(*c.r) : "NA",
                  c.r ? "true" : "false"});
    };
    emit(intervention_correlation(kInterventionNames, bin_enc, targets, EncodingMode::binary));
    emit(intervention_correlation({"NA", "AT"}, lvl_enc, targets, EncodingMode::level));
  } else {
    say(ctx, "attack-sweep: fewer than two models, correlations left empty");
  }
  corr.save(dir / "correlations.csv");
  write_stamp(dir, hash);
  update_run_manifest(ctx, "attack-sweep", hash, true);
}

void run_reject_sweep(const RunContext& ctx) {
  const fs::path dir = ctx.out / "reject";
  const std::string hash = json_hash(reject_stage_json(ctx.cfg));
  if (!ctx.force && stage_current(dir, hash)) {
    say(ctx, "reject-sweep: up to date");
    update_run_manifest(ctx, "reject-sweep", hash, false);
    return;
  }
  const SubgroupedDataset ds = load_run_dataset(ctx);
  const auto models = load_zoo(ctx);
  const DeclaredGroups declared = declared_groups(ds, ctx.cfg);
  reset_dir(dir);

  std::vector<bool> rs_on(models.size(), false);
  if (ctx.cfg.rs) {
    bool any = false;
    for (std::size_t m = 0; m < models.size(); ++m) {
      rs_on[m] = std::abs(models[m].entry.iv.noise_sigma - ctx.cfg.rs_sigma) < 1e-12;
      any = any || rs_on[m];
    }
    if (!any) {
      say(ctx, "reject-sweep: warning: no model was trained with noise sigma " + format_double(ctx.cfg.rs_sigma) +
                   "; smoothing every model");
      rs_on.assign(models.size(), true);
    }
  }

  std::map<std::string, std::size_t> train_counts;
  const auto tr = ds.indices(Split::train);
  for (Axis axis : kAxes)
    for (const auto& [g, members] : slice(ds, axis, tr))
      train_counts[std::string(to_string(axis)) + ":" + g] = members.size();

  CsvWriter curve({"method", "model_id", "subgroup_axis", "subgroup", "alpha", "fpr", "n_samples"});
  CsvWriter aucs({"method", "model_id", "subgroup_axis", "subgroup", "auc_fpr", "auc_fpr_raw", "n_samples",
                  "low_count", "train_count"});
  CsvWriter compare({"model_id", "axis", "method", "draws", "fprp"});
  CsvWriter size_corr({"method", "model_id", "n_groups", "r", "defined"});
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto& lm = models[m];
    if (!ctx.cfg.nr && !rs_on[m]) continue;
    say(ctx, "reject-sweep: " + lm.entry.name + (rs_on[m] ? " (NR + RS)" : " (NR)"));
    const RejectResult r = reject_model(lm.model, lm.entry.name, ds, ctx.cfg, declared, ctx.cfg.nr, rs_on[m]);
    CsvWriter parity({"axis", "metric", "value"});
    for (const auto& meth : r.methods) {
      for (const auto& c : meth.curves)
        for (const auto& [g, s] : c.groups)
          for (std::size_t a = 0; a < c.grid.size(); ++a)
            curve.row({meth.method, r.model_id, std::string(to_string(c.axis)), g, format_double(c.grid[a]),
                       cell(s.values[a]), std::to_string(s.n)});
      std::vector<double> xs, ys;
      for (const auto& a : meth.aucs) {
        const std::string key = std::string(to_string(a.axis)) + ":" + a.group;
        const auto it = train_counts.find(key);
        const std::size_t tc = it == train_counts.end() ? 0 : it->second;
        aucs.row({meth.method, r.model_id, std::string(to_string(a.axis)), a.group, cell(a.auc), cell(a.auc_raw),
                  std::to_string(a.n), a.n < kLowCountThreshold ? "true" : "false", std::to_string(tc)});
        if (!std::isnan(a.auc)) {
          xs.push_back(static_cast<double>(tc));
          ys.push_back(a.auc);
        }
      }
      const auto rr = pearson(xs, ys);
      size_corr.row({meth.method, r.model_id, std::to_string(xs.size()), rr ? format_double(*rr) : "NA",
                     rr ? "true" : "false"});
      for (const auto& p : meth.parity) {
        parity.row({std::string(to_string(p.axis)), p.metric, format_double(p.value)});
        compare.row({r.model_id, std::string(to_string(p.axis)), meth.method,
                     meth.draws ? std::to_string(meth.draws) : "", format_double(p.value)});
      }
    }
    parity.save(dir / r.model_id / "parity.csv");
    for (const auto& [n, counts] : r.rs_counts) {
      CsvWriter w({"sample_id", "class", "count"});
      for (std::size_t s = 0; s < counts.size(); ++s)
        for (std::size_t c = 0; c < counts[s].size(); ++c)
          if (counts[s][c] > 0) w.row({r.sample_ids[s], std::to_string(c), std::to_string(counts[s][c])});
      w.save(dir / r.model_id / ("rs_counts_n" + std::to_string(n) + ".csv"));
    }
  }
  curve.save(dir / "fpr_curve.csv");
  aucs.save(dir / "auc_fpr.csv");
  compare.save(dir / "fprp_comparison.csv");
  size_corr.save(dir / "fpr_size_correlations.csv");
  write_stamp(dir, hash);
  update_run_manifest(ctx, "reject-sweep", hash, true);
}

void run_report(const RunContext& ctx) {
  write_report(ctx.out);
  say(ctx, "report: wrote " + (ctx.out / "report" / "report.md").string());
  update_run_manifest(ctx, "report", "", true);
}

void run_all(const RunContext& ctx) {
  run_synth(ctx);
  run_zoo(ctx);
  run_attack_sweep(ctx);
  run_reject_sweep(ctx);
  run_report(ctx);
}

}  // namespace eqdf
