/*
 * Copyright 2026 The FairRank Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fairrank/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace fairrank {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"data", {"interactions", "groups", "split"}},
    {"synthetic",
     {"users", "items", "shares", "popularity", "interactions_per_user", "topics",
      "personal_fraction", "activity_spread"}},
    {"train",
     {"model", "dim", "lr", "adv_lr", "lambda_theta", "alpha", "beta", "lambda_model", "gamma",
      "negative_rate", "batch_size", "epochs", "pretrain_epochs", "adv_layers", "adv_hidden",
      "theta_batches_per_round", "eval_every", "checkpoint_select", "record_wall_time"}},
    {"eval", {"ks", "user_pairs", "bins"}},
    {"run", {"seed", "out"}},
};

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool present() const { return tree_ != nullptr; }
  bool has(const std::string& key) const { return raw(key).has_value(); }

  std::optional<std::string> raw(const std::string& key) const {
    if (tree_ == nullptr) return std::nullopt;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return boost::algorithm::trim_copy(*v);
  }

  template <typename T>
  void read(const std::string& key, T& target) const {
    if (auto v = raw(key)) target = convert<T>(key, *v);
  }

  template <typename T>
  void read_list(const std::string& key, std::vector<T>& target) const {
    auto v = raw(key);
    if (!v) return;
    std::vector<std::string> parts;
    boost::algorithm::split(parts, *v, boost::is_any_of(","));
    target.clear();
    for (auto& p : parts) {
      boost::algorithm::trim(p);
      if (p.empty()) fail(key, "empty list element in '" + *v + "'");
      target.push_back(convert<T>(key, p));
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError("[" + name_ + "] " + key + ": " + msg);
  }

 private:
  template <typename T>
  T convert(const std::string& key, const std::string& v) const {
    if constexpr (std::is_same_v<T, bool>) {
      const std::string l = boost::algorithm::to_lower_copy(v);
      if (l == "true" || l == "1" || l == "yes") return true;
      if (l == "false" || l == "0" || l == "no") return false;
      fail(key, "expected a boolean, got '" + v + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else {
      if constexpr (std::is_unsigned_v<T>) {
        if (!v.empty() && v.front() == '-') fail(key, "expected a non-negative integer, got '" + v + "'");
      }
      T out{};
      if (!boost::conversion::try_lexical_convert(v, out)) {
        fail(key, std::string(std::is_floating_point_v<T> ? "expected a number" : "expected an integer") +
                      ", got '" + v + "'");
      }
      return out;
    }
  }

  const pt::ptree* tree_;
  std::string name_;
};

Section section(const pt::ptree& root, const std::string& name) {
  auto child = root.get_child_optional(name);
  return Section(child ? &*child : nullptr, name);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt_double(v[k]);
    } else {
      s += std::to_string(v[k]);
    }
  }
  return s;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  train.seed = s;
  eval.seed = s;
  if (synthetic) synthetic->seed = s;
}

std::string ExperimentConfig::resolved_text() const {
  std::ostringstream o;
  o << "[data]\n";
  if (!interactions.empty()) o << "interactions = " << interactions.string() << '\n';
  if (!groups.empty()) o << "groups = " << groups.string() << '\n';
  o << "split = " << fmt_double(ratios.train) << ',' << fmt_double(ratios.val) << ','
    << fmt_double(ratios.test) << '\n';
  if (synthetic) {
    const auto& s = *synthetic;
    o << "\n[synthetic]\n"
      << "users = " << s.num_users << '\n'
      << "items = " << s.num_items << '\n'
      << "shares = " << join(s.group_item_shares) << '\n'
      << "popularity = " << join(s.group_popularity) << '\n'
      << "interactions_per_user = " << s.interactions_per_user << '\n'
      << "topics = " << s.num_topics << '\n'
      << "personal_fraction = " << fmt_double(s.personal_fraction) << '\n'
      << "activity_spread = " << fmt_double(s.activity_spread) << '\n';
  }
  const auto& t = train;
  o << "\n[train]\n"
    << "model = " << to_string(t.kind) << '\n'
    << "dim = " << t.dim << '\n'
    << "lr = " << fmt_double(t.lr) << '\n'
    << "adv_lr = " << fmt_double(t.adv_lr) << '\n'
    << "lambda_theta = " << fmt_double(t.weights.lambda_theta) << '\n'
    << "alpha = " << fmt_double(t.weights.alpha) << '\n'
    << "beta = " << fmt_double(t.weights.beta) << '\n'
    << "lambda_model = " << fmt_double(t.weights.lambda_model) << '\n'
    << "gamma = " << fmt_double(t.weights.baseline_l2()) << '\n'
    << "negative_rate = " << t.negative_rate << '\n'
    << "batch_size = " << t.batch_size << '\n'
    << "epochs = " << t.epochs << '\n'
    << "pretrain_epochs = " << t.pretrain_epochs << '\n'
    << "adv_layers = " << t.adv_layers << '\n'
    << "adv_hidden = " << t.adv_hidden << '\n'
    << "theta_batches_per_round = " << t.theta_batches_per_round << '\n'
    << "eval_every = " << t.eval_every << '\n'
    << "checkpoint_select = " << (t.checkpoint_select == CheckpointSelect::kBest ? "best" : "last")
    << '\n'
    << "record_wall_time = " << (t.record_wall_time ? "true" : "false") << '\n';
  o << "\n[eval]\n"
    << "ks = " << join(eval.ks) << '\n'
    << "user_pairs = " << eval.user_pairs << '\n'
    << "bins = " << eval.bins << '\n';
  o << "\n[run]\n"
    << "seed = " << seed << '\n';
  return o.str();
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(resolved_text()); }

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [name, child] : root) {
    auto known = kKnownKeys.find(name);
    if (known == kKnownKeys.end()) {
      if (child.empty()) throw ConfigError("config: key '" + name + "' outside any section");
      throw ConfigError("config: unknown section [" + name + "]");
    }
    for (const auto& kv : child) {
      if (!known->second.count(kv.first)) {
        throw ConfigError("[" + name + "] " + kv.first + ": unknown key");
      }
    }
  }

  ExperimentConfig c;
  const Section data = section(root, "data");
  if (auto p = data.raw("interactions")) c.interactions = resolve(base_dir, *p);
  if (auto p = data.raw("groups")) c.groups = resolve(base_dir, *p);
  if (data.has("split")) {
    std::vector<double> r;
    data.read_list("split", r);
    if (r.size() != 3) data.fail("split", "expected three ratios train,val,test");
    for (double x : r) {
      if (x < 0.0) data.fail("split", "ratios must be >= 0");
    }
    if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) data.fail("split", "ratios must sum to 1");
    c.ratios = {r[0], r[1], r[2]};
  }

  const Section syn = section(root, "synthetic");
  if (syn.present()) {
    SyntheticSpec s;
    syn.read("users", s.num_users);
    syn.read("items", s.num_items);
    syn.read_list("shares", s.group_item_shares);
    syn.read_list("popularity", s.group_popularity);
    syn.read("interactions_per_user", s.interactions_per_user);
    syn.read("topics", s.num_topics);
    syn.read("personal_fraction", s.personal_fraction);
    syn.read("activity_spread", s.activity_spread);
    c.synthetic = s;
  }
  if (c.interactions.empty() && !c.synthetic) {
    throw ConfigError("[data] interactions: required unless a [synthetic] section is given");
  }

  const Section tr = section(root, "train");
  auto& t = c.train;
  if (!tr.has("model")) throw ConfigError("[train] model: required");
  t.kind = parse_model_kind(*tr.raw("model"));
  tr.read("dim", t.dim);
  tr.read("lr", t.lr);
  tr.read("adv_lr", t.adv_lr);
  tr.read("lambda_theta", t.weights.lambda_theta);
  tr.read("alpha", t.weights.alpha);
  tr.read("beta", t.weights.beta);
  tr.read("lambda_model", t.weights.lambda_model);
  tr.read("gamma", t.weights.gamma);
  tr.read("negative_rate", t.negative_rate);
  tr.read("batch_size", t.batch_size);
  tr.read("epochs", t.epochs);
  tr.read("pretrain_epochs", t.pretrain_epochs);
  tr.read("adv_layers", t.adv_layers);
  tr.read("adv_hidden", t.adv_hidden);
  tr.read("theta_batches_per_round", t.theta_batches_per_round);
  tr.read("eval_every", t.eval_every);
  tr.read("record_wall_time", t.record_wall_time);
  if (auto sel = tr.raw("checkpoint_select")) {
    if (*sel == "best") {
      t.checkpoint_select = CheckpointSelect::kBest;
    } else if (*sel == "last") {
      t.checkpoint_select = CheckpointSelect::kLast;
    } else {
      tr.fail("checkpoint_select", "expected 'best' or 'last', got '" + *sel + "'");
    }
  }
  if (tr.has("gamma") && t.weights.gamma < 0.0) tr.fail("gamma", "must be >= 0");
  if (is_dpr(t.kind)) {
    if (!tr.has("alpha")) throw ConfigError("[train] alpha required for " + to_string(t.kind));
    if (!tr.has("beta")) throw ConfigError("[train] beta required for " + to_string(t.kind));
  }
  if ((t.kind == ModelKind::kFatr || is_reg(t.kind)) && !tr.has("lambda_model")) {
    throw ConfigError("[train] lambda_model required for " + to_string(t.kind));
  }

  const Section ev = section(root, "eval");
  ev.read_list("ks", c.eval.ks);
  for (auto k : c.eval.ks) {
    if (k == 0) ev.fail("ks", "k must be >= 1");
  }
  if (c.eval.ks.empty()) ev.fail("ks", "at least one k is required");
  ev.read("user_pairs", c.eval.user_pairs);
  ev.read("bins", c.eval.bins);
  if (c.eval.bins == 0) ev.fail("bins", "must be >= 1");

  const Section run = section(root, "run");
  std::uint64_t seed = c.seed;
  run.read("seed", seed);
  if (auto o = run.raw("out")) c.out = resolve(base_dir, *o);
  c.set_seed(seed);
  if (c.synthetic) c.synthetic->validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

}  // namespace fairrank
