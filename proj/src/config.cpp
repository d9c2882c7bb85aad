#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "kge/training.hpp"

namespace kge {

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw Error("config key '" + key + "': cannot parse '" + std::string(value) + "'");
  return out;
}

std::vector<int> parse_k_values(const std::string& key, std::string_view value) {
  std::vector<int> ks;
  while (!value.empty()) {
    auto comma = value.find(',');
    auto part = trim(value.substr(0, comma));
    int k = parse_number<int>(key, part);
    if (k < 1) throw Error("config key '" + key + "': k values must be at least 1");
    ks.push_back(k);
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  if (ks.empty()) throw Error("config key '" + key + "' is empty");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

const std::set<std::string, std::less<>> kKeys = {
    "model", "train", "valid", "test", "n_batches", "d", "d_r", "loss", "margin", "lr", "l2",
    "n_epochs", "sampler", "seed", "eval_every", "k_values", "preset"};

}  // namespace

void TrainConfig::validate() const {
  if (n_batches == 0) throw Error("n_batches must be positive");
  if (dim == 0 || rel_dim == 0) throw Error("dimensions must be positive");
  if (n_epochs == 0) throw Error("n_epochs must be positive");
  if (!(lr > 0.0)) throw Error("lr must be positive");
  if (l2 < 0.0) throw Error("l2 must be nonnegative");
  if (loss == LossKind::Margin && !margin) throw Error("margin loss needs a margin");
  if (loss != LossKind::Margin && margin) throw Error("margin is only meaningful for the margin loss");
  if (margin && *margin < 0.0) throw Error("margin must be nonnegative");
  if (k_values.empty()) throw Error("k_values must not be empty");
}

TrainConfig paper_table1_preset(ModelKind model) {
  TrainConfig c;
  c.model = model;
  c.preset = "paper-table1";
  c.dim = 100;
  c.rel_dim = (model == ModelKind::TransD || model == ModelKind::TransR) ? 50 : 100;
  c.n_batches = model == ModelKind::RESCAL ? 20 : 10;
  if (is_translational(model)) {
    c.loss = LossKind::Margin;
    c.margin = 1.0;
  } else {
    c.loss = LossKind::Sigmoid;
    c.margin.reset();
  }
  c.lr = 0.01;
  c.l2 = 1e-5;
  c.sampler = SamplerKind::Bernoulli;
  return c;
}

ConfigEntries parse_config_text(std::string_view text) {
  ConfigEntries out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

TrainConfig resolve_config(const ConfigEntries& entries) {
  for (const auto& [k, v] : entries)
    if (!kKeys.contains(k)) throw ConfigKeyError(k);

  auto last = [&](std::string_view key) -> std::optional<std::string> {
    std::optional<std::string> found;
    for (const auto& [k, v] : entries)
      if (k == key) found = v;
    return found;
  };

  const auto model_name = last("model");
  if (!model_name) throw Error("config needs a 'model' key");
  const ModelKind model = parse_model_kind(*model_name);

  TrainConfig c;
  if (auto preset = last("preset")) {
    if (*preset != "paper-table1") throw Error("unknown preset '" + *preset + "'");
    c = paper_table1_preset(model);
  } else {
    c.model = model;
    if (!is_translational(model)) {
      c.loss = LossKind::Sigmoid;
      c.margin.reset();
    }
  }

  bool d_r_given = false, margin_given = false;
  for (const auto& [k, v] : entries) {
    if (k == "model" || k == "preset") continue;
    if (k == "train") c.train_path = v;
    else if (k == "valid") c.valid_path = v;
    else if (k == "test") c.test_path = v;
    else if (k == "n_batches") c.n_batches = parse_number<std::size_t>(k, v);
    else if (k == "d") c.dim = parse_number<std::size_t>(k, v);
    else if (k == "d_r") c.rel_dim = parse_number<std::size_t>(k, v), d_r_given = true;
    else if (k == "loss") c.loss = parse_loss_kind(v);
    else if (k == "margin") c.margin = parse_number<double>(k, v), margin_given = true;
    else if (k == "lr") c.lr = parse_number<double>(k, v);
    else if (k == "l2") c.l2 = parse_number<double>(k, v);
    else if (k == "n_epochs") c.n_epochs = parse_number<std::size_t>(k, v);
    else if (k == "sampler") c.sampler = parse_sampler_kind(v);
    else if (k == "seed") c.seed = parse_number<std::uint64_t>(k, v);
    else if (k == "eval_every") c.eval_every = parse_number<std::size_t>(k, v);
    else if (k == "k_values") c.k_values = parse_k_values(k, v);
  }
  const bool projection = model == ModelKind::TransR || model == ModelKind::TransD;
  if (!projection) c.rel_dim = c.dim;
  else if (!d_r_given && c.preset.empty()) c.rel_dim = c.dim;
  if (c.loss == LossKind::Sigmoid && !margin_given) c.margin.reset();
  if (c.loss == LossKind::Margin && !c.margin) c.margin = 1.0;
  c.validate();
  return c;
}

TrainConfig load_config(const std::string& path, const ConfigEntries& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  ConfigEntries entries;
  try {
    entries = parse_config_text(ss.str());
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
  entries.insert(entries.end(), overrides.begin(), overrides.end());
  return resolve_config(entries);
}

std::map<std::string, std::string> config_to_map(const TrainConfig& c) {
  std::map<std::string, std::string> m;
  m["model"] = std::string(to_string(c.model));
  m["train"] = c.train_path;
  m["valid"] = c.valid_path;
  m["test"] = c.test_path;
  m["n_batches"] = std::to_string(c.n_batches);
  m["d"] = std::to_string(c.dim);
  m["d_r"] = std::to_string(c.rel_dim);
  m["loss"] = std::string(to_string(c.loss));
  m["margin"] = c.margin ? fmt::format("{}", *c.margin) : "";
  m["lr"] = fmt::format("{}", c.lr);
  m["l2"] = fmt::format("{}", c.l2);
  m["n_epochs"] = std::to_string(c.n_epochs);
  m["sampler"] = std::string(to_string(c.sampler));
  m["seed"] = std::to_string(c.seed);
  m["eval_every"] = std::to_string(c.eval_every);
  m["k_values"] = fmt::format("{}", fmt::join(c.k_values, ","));
  m["preset"] = c.preset;
  return m;
}

}  // namespace kge
