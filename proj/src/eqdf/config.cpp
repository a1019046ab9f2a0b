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

#include "eqdf/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "eqdf/csv.hpp"
#include "eqdf/error.hpp"

namespace eqdf {

void ExperimentConfig::sync() {
  synth.seed = seed;
  synth.num_classes = num_classes == 0 ? synth.num_classes : num_classes;
  synth.sample_rate = sample_rate;
  synth.length = length;
  train.seed = seed;
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.sync();
  return c;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(sep, start);
    out.push_back(trim(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

double to_double(const std::string& v) {
  double d = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc() || p != v.data() + v.size()) throw UsageError("expected a number, got '" + v + "'");
  return d;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t d = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc() || p != v.data() + v.size())
    throw UsageError("expected a non-negative integer, got '" + v + "'");
  return d;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError("expected a boolean, got '" + v + "'");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

template <class T, class F>
std::string join(const std::vector<T>& v, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

std::vector<GroupSpec> parse_groups(const std::string& v) {
  std::vector<GroupSpec> out;
  for (const auto& item : split(v, ',')) {
    const auto f = split(item, ':');
    if (f.size() != 5)
      throw UsageError("group '" + item + "' must be name:prevalence:pitch_shift:amplitude:noise");
    out.push_back({f[0], to_double(f[1]), to_double(f[2]), to_double(f[3]), to_double(f[4])});
  }
  return out;
}

std::string format_groups(const std::vector<GroupSpec>& g) {
  return join(g, [](const GroupSpec& s) {
    return s.name + ":" + format_double(s.prevalence) + ":" + format_double(s.pitch_shift) + ":" +
           format_double(s.amplitude) + ":" + format_double(s.noise);
  });
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define EQDF_NUM(sec, name, expr)                                                                   \
  Field {                                                                                           \
    sec, name, [](ExperimentConfig& c, const std::string& v) { expr = static_cast<std::remove_reference_t<decltype(expr)>>(to_double(v)); }, \
        [](const ExperimentConfig& c) { return format_double(static_cast<double>(expr)); }          \
  }
#define EQDF_INT(sec, name, expr)                                                                   \
  Field {                                                                                           \
    sec, name, [](ExperimentConfig& c, const std::string& v) { expr = static_cast<std::remove_reference_t<decltype(expr)>>(to_u64(v)); }, \
        [](const ExperimentConfig& c) { return std::to_string(expr); }                              \
  }
#define EQDF_BOOL(sec, name, expr)                                                                  \
  Field {                                                                                           \
    sec, name, [](ExperimentConfig& c, const std::string& v) { expr = to_bool(v); },                \
        [](const ExperimentConfig& c) { return from_bool(expr); }                                   \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      EQDF_INT("run", "seed", c.seed),
      EQDF_INT("run", "threads", c.threads),

      Field{"data", "source",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "synth") c.source = DataSource::synth;
              else if (v == "manifest") c.source = DataSource::manifest;
              else throw UsageError("data source must be synth or manifest, got '" + v + "'");
            },
            [](const ExperimentConfig& c) { return std::string(c.source == DataSource::synth ? "synth" : "manifest"); }},
      Field{"data", "manifest", [](ExperimentConfig& c, const std::string& v) { c.manifest = v; },
            [](const ExperimentConfig& c) { return c.manifest.string(); }},
      EQDF_INT("data", "num_classes", c.num_classes),
      EQDF_INT("data", "sample_rate", c.sample_rate),
      EQDF_INT("data", "length", c.length),

      EQDF_INT("synth", "train_size", c.synth.train_size),
      EQDF_INT("synth", "validation_size", c.synth.validation_size),
      EQDF_INT("synth", "test_size", c.synth.test_size),
      EQDF_NUM("synth", "base_freq", c.synth.base_freq),
      EQDF_NUM("synth", "freq_step", c.synth.freq_step),
      EQDF_NUM("synth", "base_amplitude", c.synth.base_amplitude),
      EQDF_NUM("synth", "base_noise", c.synth.base_noise),
      EQDF_NUM("synth", "freq_jitter", c.synth.freq_jitter),
      EQDF_NUM("synth", "amp_jitter", c.synth.amp_jitter),
      EQDF_NUM("synth", "taper", c.synth.taper),
      EQDF_NUM("synth", "skew", c.synth.skew),
      EQDF_NUM("synth", "shift", c.synth.shift),
      EQDF_BOOL("synth", "uniform_test", c.synth.uniform_test),
      Field{"synth", "gender", [](ExperimentConfig& c, const std::string& v) { c.synth.axes[0] = parse_groups(v); },
            [](const ExperimentConfig& c) { return format_groups(c.synth.axes[0]); }},
      Field{"synth", "age", [](ExperimentConfig& c, const std::string& v) { c.synth.axes[1] = parse_groups(v); },
            [](const ExperimentConfig& c) { return format_groups(c.synth.axes[1]); }},
      Field{"synth", "accent", [](ExperimentConfig& c, const std::string& v) { c.synth.axes[2] = parse_groups(v); },
            [](const ExperimentConfig& c) { return format_groups(c.synth.axes[2]); }},

      Field{"zoo", "models", [](ExperimentConfig& c, const std::string& v) { c.zoo = split(v, ','); },
            [](const ExperimentConfig& c) { return join(c.zoo, [](const std::string& s) { return s; }); }},
      EQDF_INT("zoo", "epochs", c.train.epochs),
      EQDF_NUM("zoo", "learning_rate", c.train.initial_lr),
      EQDF_NUM("zoo", "lr_decay", c.train.lr_decay),
      EQDF_INT("zoo", "decay_period", c.train.decay_period),
      EQDF_INT("zoo", "batch_size", c.train.batch_size),
      Field{"zoo", "at_steps",
            [](ExperimentConfig& c, const std::string& v) {
              if (!c.train.adv) c.train.adv.emplace();
              c.train.adv->steps = static_cast<int>(to_u64(v));
            },
            [](const ExperimentConfig& c) { return std::to_string(c.train.adv.value_or(AdvTrainConfig{}).steps); }},
      Field{"zoo", "at_lambda",
            [](ExperimentConfig& c, const std::string& v) {
              if (!c.train.adv) c.train.adv.emplace();
              c.train.adv->lambda = to_double(v);
            },
            [](const ExperimentConfig& c) { return format_double(c.train.adv.value_or(AdvTrainConfig{}).lambda); }},
      EQDF_INT("zoo", "val_attack_steps", c.train.val_attack_steps),

      Field{"attack", "epsilons",
            [](ExperimentConfig& c, const std::string& v) {
              c.epsilons.clear();
              for (const auto& s : split(v, ',')) c.epsilons.push_back(to_double(s));
            },
            [](const ExperimentConfig& c) { return join(c.epsilons, [](double d) { return format_double(d); }); }},
      EQDF_INT("attack", "steps", c.attack.steps),
      Field{"attack", "step_size",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "auto") c.attack.step_size.reset();
              else c.attack.step_size = to_double(v);
            },
            [](const ExperimentConfig& c) {
              return c.attack.step_size ? format_double(*c.attack.step_size) : std::string("auto");
            }},
      EQDF_BOOL("attack", "random_start", c.attack.random_start),
      Field{"attack", "clamp",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "none") {
                c.attack.clamp.reset();
                return;
              }
              const auto p = split(v, ',');
              if (p.size() != 2) throw UsageError("clamp must be 'lo, hi' or 'none'");
              c.attack.clamp = std::pair{to_double(p[0]), to_double(p[1])};
            },
            [](const ExperimentConfig& c) {
              return c.attack.clamp ? format_double(c.attack.clamp->first) + ", " + format_double(c.attack.clamp->second)
                                    : std::string("none");
            }},
      EQDF_INT("attack", "max_samples", c.attack_samples),

      EQDF_BOOL("reject", "nr", c.nr),
      EQDF_NUM("reject", "nr_c", c.nr_options.C),
      Field{"reject", "nr_gamma",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "auto") c.nr_options.gamma.reset();
              else c.nr_options.gamma = to_double(v);
            },
            [](const ExperimentConfig& c) {
              return c.nr_options.gamma ? format_double(*c.nr_options.gamma) : std::string("auto");
            }},
      EQDF_NUM("reject", "nr_tol", c.nr_options.tol),
      EQDF_BOOL("reject", "rs", c.rs),
      EQDF_NUM("reject", "rs_sigma", c.rs_sigma),
      Field{"reject", "rs_draws",
            [](ExperimentConfig& c, const std::string& v) {
              c.rs_draws.clear();
              for (const auto& s : split(v, ',')) c.rs_draws.push_back(to_u64(s));
            },
            [](const ExperimentConfig& c) {
              return join(c.rs_draws, [](std::size_t n) { return std::to_string(n); });
            }},
      EQDF_NUM("reject", "alpha_min", c.alpha_min),
      EQDF_NUM("reject", "alpha_max", c.alpha_max),
      EQDF_NUM("reject", "alpha_step", c.alpha_step),
  };
  return f;
}

#undef EQDF_NUM
#undef EQDF_INT
#undef EQDF_BOOL

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
  ExperimentConfig c = default_config();
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw UsageError(where + ": malformed section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      const bool known = std::any_of(fields().begin(), fields().end(), [&](const Field& f) { return f.section == section; });
      if (!known) throw UsageError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError(where + ": expected key = value");
    if (section.empty()) throw UsageError(where + ": key outside of a section");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    const auto it = std::find_if(fields().begin(), fields().end(),
                                 [&](const Field& f) { return f.section == section && f.key == key; });
    if (it == fields().end()) throw UsageError(where + ": unknown key '" + key + "' in [" + section + "]");
    try {
      it->set(c, value);
    } catch (const UsageError& e) {
      throw UsageError(where + ": " + e.what());
    }
  }
  // The AT keys are always written; defaults leave the base template unset.
  if (c.train.adv && *c.train.adv == AdvTrainConfig{}) c.train.adv.reset();
  c.sync();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  ExperimentConfig c = parse_config(text, path.string());
  if (!c.manifest.empty() && c.manifest.is_relative()) c.manifest = path.parent_path() / c.manifest;
  return c;
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string out, section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      out += (section.empty() ? "" : "\n") + std::string("[") + f.section + "]\n";
      section = f.section;
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

nlohmann::json data_stage_json(const ExperimentConfig& c) {
  nlohmann::json j = {{"source", c.source == DataSource::synth ? "synth" : "manifest"},
                      {"num_classes", c.num_classes},
                      {"sample_rate", c.sample_rate},
                      {"length", c.length}};
  if (c.source == DataSource::synth)
    j["synth"] = to_json(c.synth);
  else
    j["manifest"] = c.manifest.string();
  return j;
}

nlohmann::json zoo_stage_json(const ExperimentConfig& c) {
  return {{"data", data_stage_json(c)}, {"models", c.zoo}, {"train", to_json(c.train)}};
}

nlohmann::json attack_stage_json(const ExperimentConfig& c) {
  return {{"zoo", zoo_stage_json(c)},
          {"epsilons", c.epsilons},
          {"steps", c.attack.steps},
          {"step_size", c.attack.step_size ? nlohmann::json(*c.attack.step_size) : nlohmann::json("auto")},
          {"random_start", c.attack.random_start},
          {"clamp", c.attack.clamp ? nlohmann::json({c.attack.clamp->first, c.attack.clamp->second}) : nlohmann::json()},
          {"max_samples", c.attack_samples}};
}

nlohmann::json reject_stage_json(const ExperimentConfig& c) {
  return {{"zoo", zoo_stage_json(c)},
          {"nr", c.nr},
          {"nr_c", c.nr_options.C},
          {"nr_gamma", c.nr_options.gamma ? nlohmann::json(*c.nr_options.gamma) : nlohmann::json("auto")},
          {"nr_tol", c.nr_options.tol},
          {"rs", c.rs},
          {"rs_sigma", c.rs_sigma},
          {"rs_draws", c.rs_draws},
          {"seed", c.seed},
          {"alpha", {c.alpha_min, c.alpha_max, c.alpha_step}}};
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"seed", c.seed}, {"attack", attack_stage_json(c)}, {"reject", reject_stage_json(c)}};
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::internal, "SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string json_hash(const nlohmann::json& j) { return sha256_hex(j.dump()); }

}  // namespace eqdf
