// Copyright 2026 The DBN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dbn/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "dbn/error.hpp"

namespace dbn {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_unsigned(std::string_view v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

double parse_real(std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(d)) {
    throw ConfigError("expected a finite number, got '" + s + "'");
  }
  return d;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected true or false, got '" + std::string(v) + "'");
}

PairingMode parse_pairing(std::string_view v) {
  if (auto p = pairing_from_name(v)) return *p;
  throw ConfigError("unknown pairing mode '" + std::string(v) + "'");
}

std::string real_text(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string widths_text(const std::vector<std::size_t>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

std::vector<std::size_t> parse_widths(std::string_view v) {
  std::vector<std::size_t> out;
  while (!v.empty()) {
    const std::size_t comma = v.find(',');
    const auto tok = trim(v.substr(0, comma));
    const auto w = parse_unsigned<std::size_t>(tok);
    if (w == 0) throw ConfigError("layer widths must be positive");
    out.push_back(w);
    v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
  }
  return out;
}

struct Key {
  const char* name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = {
      {"dataset.kind",
       [](RunConfig& c, std::string_view v) {
         if (v != "parity" && v != "idx" && v != "cifar10" && v != "cifar100") {
           throw ConfigError("expected parity, idx, cifar10 or cifar100, got '" + std::string(v) + "'");
         }
         c.dataset_kind = v;
       },
       [](const RunConfig& c) { return c.dataset_kind; }},
      {"dataset.dir", [](RunConfig& c, std::string_view v) { c.dataset_dir = std::string(v); },
       [](const RunConfig& c) { return c.dataset_dir.string(); }},
      {"dataset.parity_bits",
       [](RunConfig& c, std::string_view v) { c.parity_bits = parse_unsigned<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.parity_bits); }},
      {"dataset.train_limit",
       [](RunConfig& c, std::string_view v) { c.train_limit = parse_unsigned<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.train_limit); }},
      {"dataset.test_limit",
       [](RunConfig& c, std::string_view v) { c.test_limit = parse_unsigned<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.test_limit); }},
      {"dataset.augment.flip",
       [](RunConfig& c, std::string_view v) { c.augment.horizontal_flip = parse_bool(v); },
       [](const RunConfig& c) { return bool_text(c.augment.horizontal_flip); }},
      {"dataset.augment.pad_crop",
       [](RunConfig& c, std::string_view v) { c.augment.pad_crop = parse_bool(v); },
       [](const RunConfig& c) { return bool_text(c.augment.pad_crop); }},
      {"binarization.thresholds",
       [](RunConfig& c, std::string_view v) {
         c.binarization.threshold_count = parse_unsigned<std::uint32_t>(v);
       },
       [](const RunConfig& c) { return std::to_string(c.binarization.threshold_count); }},
      {"binarization.low",
       [](RunConfig& c, std::string_view v) {
         c.binarization.intensity_low = parse_unsigned<std::uint32_t>(v);
       },
       [](const RunConfig& c) { return std::to_string(c.binarization.intensity_low); }},
      {"binarization.high",
       [](RunConfig& c, std::string_view v) {
         c.binarization.intensity_high = parse_unsigned<std::uint32_t>(v);
       },
       [](const RunConfig& c) { return std::to_string(c.binarization.intensity_high); }},
      {"arch.name",
       [](RunConfig& c, std::string_view v) {
         if (v != "layered") parse_block_count(v);
         c.arch_name = v;
       },
       [](const RunConfig& c) { return c.arch_name; }},
      {"arch.widths", [](RunConfig& c, std::string_view v) { c.widths = parse_widths(v); },
       [](const RunConfig& c) { return widths_text(c.widths); }},
      {"arch.sampling", [](RunConfig& c, std::string_view v) { c.sampling = parse_pairing(v); },
       [](const RunConfig& c) { return std::string(pairing_name(c.sampling)); }},
      {"arch.hidden_pairing",
       [](RunConfig& c, std::string_view v) { c.hidden_pairing = parse_pairing(v); },
       [](const RunConfig& c) { return std::string(pairing_name(c.hidden_pairing)); }},
      {"arch.head_pairing",
       [](RunConfig& c, std::string_view v) { c.head_pairing = parse_pairing(v); },
       [](const RunConfig& c) { return std::string(pairing_name(c.head_pairing)); }},
      {"arch.layered_pairing",
       [](RunConfig& c, std::string_view v) { c.layered_pairing = parse_pairing(v); },
       [](const RunConfig& c) { return std::string(pairing_name(c.layered_pairing)); }},
      {"arch.skip",
       [](RunConfig& c, std::string_view v) {
         if (v == "none") {
           c.skip = false;
           return;
         }
         const auto conn = connective_from_name(v);
         if (!conn) throw ConfigError("unknown skip connective '" + std::string(v) + "'");
         c.skip = true;
         c.connective = *conn;
       },
       [](const RunConfig& c) {
         return c.skip ? std::string(connective_name(c.connective)) : std::string("none");
       }},
      {"arch.bottleneck", [](RunConfig& c, std::string_view v) { c.bottleneck = parse_bool(v); },
       [](const RunConfig& c) { return bool_text(c.bottleneck); }},
      {"arch.temperature", [](RunConfig& c, std::string_view v) { c.temperature = parse_real(v); },
       [](const RunConfig& c) { return real_text(c.temperature); }},
      {"arch.head_width",
       [](RunConfig& c, std::string_view v) { c.head_width = parse_unsigned<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.head_width); }},
      {"arch.init_std", [](RunConfig& c, std::string_view v) { c.init_std = parse_real(v); },
       [](const RunConfig& c) { return real_text(c.init_std); }},
      {"train.optimizer",
       [](RunConfig& c, std::string_view v) {
         if (v == "adam") {
           c.train.optimizer.kind = OptimizerKind::kAdam;
         } else if (v == "sgd") {
           c.train.optimizer.kind = OptimizerKind::kSgd;
         } else {
           throw ConfigError("expected adam or sgd, got '" + std::string(v) + "'");
         }
       },
       [](const RunConfig& c) {
         return std::string(c.train.optimizer.kind == OptimizerKind::kAdam ? "adam" : "sgd");
       }},
      {"train.lr",
       [](RunConfig& c, std::string_view v) { c.train.optimizer.learning_rate = parse_real(v); },
       [](const RunConfig& c) { return real_text(c.train.optimizer.learning_rate); }},
      {"train.weight_decay",
       [](RunConfig& c, std::string_view v) { c.train.optimizer.weight_decay = parse_real(v); },
       [](const RunConfig& c) { return real_text(c.train.optimizer.weight_decay); }},
      {"train.batch",
       [](RunConfig& c, std::string_view v) { c.train.batch_size = parse_unsigned<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.train.batch_size); }},
      {"train.epochs",
       [](RunConfig& c, std::string_view v) { c.train.epochs = parse_unsigned<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.train.epochs); }},
      {"train.seed",
       [](RunConfig& c, std::string_view v) { c.train.seed = parse_unsigned<std::uint64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.train.seed); }},
      {"train.threads",
       [](RunConfig& c, std::string_view v) { c.train.threads = parse_unsigned<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.train.threads); }},
      {"train.eval_every",
       [](RunConfig& c, std::string_view v) { c.train.eval_every = parse_unsigned<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.train.eval_every); }},
      {"output.dir", [](RunConfig& c, std::string_view v) { c.output_dir = std::string(v); },
       [](const RunConfig& c) { return c.output_dir.string(); }},
  };
  return keys;
}

const Key& find_key(std::string_view name) {
  for (const auto& k : key_table()) {
    if (name == k.name) return k;
  }
  throw ConfigError("unknown key '" + std::string(name) + "'");
}

struct DataFiles {
  std::vector<std::filesystem::path> train;
  std::vector<std::filesystem::path> test;
};

DataFiles data_files(const RunConfig& c) {
  const auto& d = c.dataset_dir;
  if (c.dataset_kind == "idx") {
    return {{d / "train-images-idx3-ubyte", d / "train-labels-idx1-ubyte"},
            {d / "t10k-images-idx3-ubyte", d / "t10k-labels-idx1-ubyte"}};
  }
  if (c.dataset_kind == "cifar10") {
    DataFiles f;
    for (int i = 1; i <= 5; ++i) f.train.push_back(d / ("data_batch_" + std::to_string(i) + ".bin"));
    f.test.push_back(d / "test_batch.bin");
    return f;
  }
  if (c.dataset_kind == "cifar100") return {{d / "train.bin"}, {d / "test.bin"}};
  return {};
}

LabeledDataset load_cifar_files(const std::vector<std::filesystem::path>& files, bool cifar100) {
  LabeledDataset out;
  for (const auto& f : files) {
    auto part = load_cifar_binary(f, cifar100);
    out.class_count = part.class_count;
    for (auto& ex : part.examples) out.examples.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const Key& k = find_key(key);
  try {
    k.set(*this, trim(value));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

std::string RunConfig::to_text() const {
  std::string out = "# effective configuration\n";
  for (const auto& k : key_table()) out += std::string(k.name) + " = " + k.get(*this) + "\n";
  return out;
}

void RunConfig::validate(bool check_paths) const {
  auto fail = [](const std::string& key, const std::string& msg) {
    throw ConfigError(key + ": " + msg);
  };
  if (dataset_kind == "parity" && (parity_bits == 0 || parity_bits > 16)) {
    fail("dataset.parity_bits", "must be in [1, 16]");
  }
  if (arch_name == "layered" && widths.empty()) fail("arch.widths", "required for the layered architecture");
  if (arch_name != "layered" && dataset_kind == "parity") {
    fail("arch.name", "parity data needs the layered architecture");
  }
  try {
    binarization.validate();
  } catch (const ConfigError& e) {
    fail("binarization", e.what());
  }
  if (!(temperature > 0)) fail("arch.temperature", "must be positive");
  if (!(init_std >= 0)) fail("arch.init_std", "must be non-negative");
  if (!(train.optimizer.learning_rate >= 0)) fail("train.lr", "must be non-negative");
  if (!(train.optimizer.weight_decay >= 0)) fail("train.weight_decay", "must be non-negative");
  if (train.batch_size == 0) fail("train.batch", "must be at least 1");
  if (train.threads == 0) fail("train.threads", "must be at least 1");
  if (train.eval_every == 0) fail("train.eval_every", "must be at least 1");
  if (output_dir.empty()) fail("output.dir", "must not be empty");
  if (check_paths && dataset_kind != "parity") {
    if (dataset_dir.empty()) fail("dataset.dir", "required for dataset.kind = " + dataset_kind);
    if (!std::filesystem::is_directory(dataset_dir)) {
      fail("dataset.dir", "directory does not exist: " + dataset_dir.string());
    }
    const auto files = data_files(*this);
    for (const auto* list : {&files.train, &files.test}) {
      for (const auto& f : *list) {
        if (!std::filesystem::exists(f)) fail("dataset.dir", "missing file " + f.string());
      }
    }
  }
}

std::vector<std::string> run_config_keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.emplace_back(k.name);
  return out;
}

RunConfig parse_run_config(std::string_view text, std::string_view source) {
  RunConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

void apply_overrides(RunConfig& cfg, std::span<const std::string> overrides) {
  for (const auto& o : overrides) {
    const std::size_t eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    cfg.set(trim(std::string_view(o).substr(0, eq)), std::string_view(o).substr(eq + 1));
  }
}

RunData load_run_data(const RunConfig& cfg) {
  cfg.validate(true);
  RunData d;
  if (cfg.dataset_kind == "parity") {
    d.train = make_parity_dataset(cfg.parity_bits);
  } else {
    const auto files = data_files(cfg);
    if (cfg.dataset_kind == "idx") {
      d.train = load_idx(files.train[0], files.train[1]);
      d.test = load_idx(files.test[0], files.test[1]);
    } else {
      const bool c100 = cfg.dataset_kind == "cifar100";
      d.train = load_cifar_files(files.train, c100);
      d.test = load_cifar_files(files.test, c100);
    }
  }
  if (cfg.train_limit) d.train = d.train.head(cfg.train_limit);
  if (cfg.test_limit && d.test.size()) d.test = d.test.head(cfg.test_limit);
  d.train.validate();
  return d;
}

NetworkModel build_run_model(const RunConfig& cfg, const LabeledDataset& train) {
  if (train.examples.empty()) throw ConfigError("dataset: no training examples");
  const Example& ex = train.examples.front();
  InputShape shape;
  if (const auto* raw = std::get_if<RawImage>(&ex.input)) {
    shape = binarized_shape(raw->channels, raw->height, raw->width, cfg.binarization);
  } else {
    shape = std::get<BinarizedImage>(ex.input).shape;
  }
  if (cfg.arch_name == "layered") {
    auto m = build_layered(shape, cfg.widths, cfg.layered_pairing, train.class_count, cfg.temperature,
                           cfg.train.seed, cfg.init_std);
    if (std::holds_alternative<RawImage>(ex.input)) m.binarization = cfg.binarization;
    return m;
  }
  ArchitectureOptions o;
  o.name = cfg.arch_name;
  o.input_shape = shape;
  o.binarization = cfg.binarization;
  o.class_count = train.class_count;
  o.sampling = cfg.sampling;
  o.hidden_pairing = cfg.hidden_pairing;
  o.head_pairing = cfg.head_pairing;
  o.connective = cfg.connective;
  o.skip = cfg.skip;
  o.bottleneck = cfg.bottleneck;
  o.temperature = cfg.temperature;
  o.head_width = cfg.head_width;
  o.seed = cfg.train.seed;
  o.init_std = cfg.init_std;
  return build_architecture(o);
}

}  // namespace dbn
