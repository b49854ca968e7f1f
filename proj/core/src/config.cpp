#include "dom/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "dom/error.hpp"

namespace dom {

RunConfig RunConfig::defaults(Paradigm paradigm) {
  RunConfig c;
  c.paradigm = paradigm;
  switch (paradigm) {
    case Paradigm::natural:
      c.train.epochs = 300;
      c.lr = LrSchedule::step(0.1, {150, 225}, 0.1, 300);
      c.dom.threshold = ThresholdRule::fixed(0.2);
      c.dom.da_iterations = 3;
      break;
    case Paradigm::at_multi:
      c.train.epochs = 200;
      c.lr = LrSchedule::step(0.1, {100, 150}, 0.1, 200);
      c.attack = AttackSpec{8.0 / 255.0, 2.0 / 255.0, 10, true, true, false};
      c.dom.threshold = ThresholdRule::fixed(1.5);
      c.dom.da_iterations = 2;
      break;
    case Paradigm::at_single:
      c.train.epochs = 100;
      c.lr = LrSchedule::cyclical(0.2, -1.0, 100);
      c.attack = AttackSpec{8.0 / 255.0, 10.0 / 255.0, 1, true, true, false};
      c.dom.threshold = ThresholdRule::fixed(2.0);
      c.dom.da_iterations = 5;
      break;
  }
  c.dom.da_strength = 0.5;
  return c;
}

LrSchedule RunConfig::schedule() const {
  LrSchedule s = lr;
  s.total_epochs = train.epochs;
  if (s.kind == LrSchedule::Kind::cyclical && s.peak_epoch <= 0.0) s.peak_epoch = train.epochs / 2.0;
  return s;
}

int RunConfig::resolved_warmup() const {
  if (dom.warmup_epoch >= 0) return dom.warmup_epoch;
  if (auto d = schedule().first_decay()) return *d;
  return train.epochs / 2;
}

int RunConfig::resolved_aux_epoch() const {
  if (telemetry.aux_epoch >= 0) return telemetry.aux_epoch;
  if (auto d = schedule().first_decay()) return *d;
  return resolved_warmup();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "' as " +
                    std::string(expected));
}

double to_number(std::string_view key, std::string_view v) {
  double out;
  const std::string s = trim(v);
  // Allow simple fractions such as 8/255.
  if (auto slash = s.find('/'); slash != std::string::npos) {
    return to_number(key, s.substr(0, slash)) / to_number(key, s.substr(slash + 1));
  }
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) bad_value(key, v, "a number");
  return out;
}

long long to_integer(std::string_view key, std::string_view v) {
  long long out;
  const std::string s = trim(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) bad_value(key, v, "an integer");
  return out;
}

std::size_t to_count(std::string_view key, std::string_view v) {
  const auto n = to_integer(key, v);
  if (n < 0) bad_value(key, v, "a non-negative integer");
  return static_cast<std::size_t>(n);
}

bool to_bool(std::string_view key, std::string_view v) {
  const std::string s = trim(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::string s = trim(v);
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T, class F>
std::vector<T> to_list(std::string_view v, F&& f) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(f(item));
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T>
std::string fmt_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) out += fmt(static_cast<double>(v[i]));
    else if constexpr (std::is_same_v<T, AugmentKind>) out += to_string(v[i]);
    else out += std::to_string(v[i]);
  }
  return out;
}

struct KeyEntry {
  ConfigKeyInfo info;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string enum_choice(std::string_view key, std::string_view v, std::initializer_list<std::string_view> choices) {
  const std::string s = trim(v);
  for (auto c : choices) {
    if (s == c) return s;
  }
  std::string expected = "one of";
  for (auto c : choices) expected += " " + std::string(c);
  bad_value(key, v, expected);
}

#define DOM_NUMBER(name, field, doc)                                                              \
  KeyEntry{{name, KeyKind::number, doc},                                                          \
           [](RunConfig& c, std::string_view v) { c.field = to_number(name, v); },               \
           [](const RunConfig& c) { return fmt(static_cast<double>(c.field)); }}
#define DOM_INTEGER(name, field, type, doc)                                                       \
  KeyEntry{{name, KeyKind::integer, doc},                                                         \
           [](RunConfig& c, std::string_view v) { c.field = static_cast<type>(to_integer(name, v)); }, \
           [](const RunConfig& c) { return std::to_string(c.field); }}
#define DOM_COUNT(name, field, doc)                                                               \
  KeyEntry{{name, KeyKind::integer, doc},                                                         \
           [](RunConfig& c, std::string_view v) { c.field = to_count(name, v); },                \
           [](const RunConfig& c) { return std::to_string(c.field); }}
#define DOM_BOOL(name, field, doc)                                                                \
  KeyEntry{{name, KeyKind::boolean, doc},                                                         \
           [](RunConfig& c, std::string_view v) { c.field = to_bool(name, v); },                 \
           [](const RunConfig& c) { return fmt(static_cast<bool>(c.field)); }}
#define DOM_TEXT(name, field, doc)                                                                \
  KeyEntry{{name, KeyKind::text, doc},                                                            \
           [](RunConfig& c, std::string_view v) { c.field = trim(v); },                          \
           [](const RunConfig& c) { return c.field; }}

const std::vector<KeyEntry>& registry() {
  static const std::vector<KeyEntry> keys = {
      {{"paradigm", KeyKind::enumeration, "natural | at_multi | at_single; selects the paradigm defaults"},
       [](RunConfig& c, std::string_view v) {
         c.paradigm = *parse_paradigm(enum_choice("paradigm", v, {"natural", "at_multi", "at_single"}));
       },
       [](const RunConfig& c) { return to_string(c.paradigm); }},
      DOM_INTEGER("seed", seed, std::uint64_t, "run seed (shuffling, attacks, augmentation, model init)"),
      DOM_TEXT("output_dir", output_dir, "directory for report.json, ledger.csv, figure data, checkpoints"),

      {{"data.source", KeyKind::enumeration, "synthetic | idx | cifar | domd"},
       [](RunConfig& c, std::string_view v) {
         c.data.source = enum_choice("data.source", v, {"synthetic", "idx", "cifar", "domd"});
       },
       [](const RunConfig& c) { return c.data.source; }},
      DOM_COUNT("data.n_train", data.n_train, "synthetic training samples"),
      DOM_COUNT("data.n_test", data.n_test, "synthetic test samples"),
      DOM_COUNT("data.classes", data.classes, "synthetic class count"),
      {{"data.shape", KeyKind::list, "synthetic sample shape, e.g. 32 or 1,8,8"},
       [](RunConfig& c, std::string_view v) {
         c.data.shape = to_list<std::size_t>(v, [](const std::string& s) { return to_count("data.shape", s); });
       },
       [](const RunConfig& c) { return fmt_list(c.data.shape); }},
      DOM_NUMBER("data.label_noise", data.label_noise, "fraction of training labels resampled to a wrong class"),
      DOM_NUMBER("data.cluster_std", data.cluster_std, "per-coordinate std of synthetic class clusters"),
      DOM_INTEGER("data.seed", data.seed, std::uint64_t, "synthetic data seed"),
      DOM_TEXT("data.train_images", data.train_images, "IDX training images"),
      DOM_TEXT("data.train_labels", data.train_labels, "IDX training labels"),
      DOM_TEXT("data.test_images", data.test_images, "IDX test images"),
      DOM_TEXT("data.test_labels", data.test_labels, "IDX test labels"),
      DOM_TEXT("data.train_path", data.train_path, "CIFAR binary or DOMD training file"),
      DOM_TEXT("data.test_path", data.test_path, "CIFAR binary or DOMD test file"),
      DOM_BOOL("data.standard_augment", data.standard_augment, "pad-4 crop + flip for image data"),
      DOM_COUNT("data.limit_train", data.limit_train, "truncate file training sets (0 = all)"),
      DOM_COUNT("data.limit_test", data.limit_test, "truncate file test sets (0 = all)"),

      {{"model.arch", KeyKind::enumeration, "mlp | convnet"},
       [](RunConfig& c, std::string_view v) { c.model.arch = enum_choice("model.arch", v, {"mlp", "convnet"}); },
       [](const RunConfig& c) { return c.model.arch; }},
      {{"model.hidden", KeyKind::list, "MLP hidden widths"},
       [](RunConfig& c, std::string_view v) {
         c.model.hidden = to_list<std::size_t>(v, [](const std::string& s) { return to_count("model.hidden", s); });
       },
       [](const RunConfig& c) { return fmt_list(c.model.hidden); }},
      {{"model.channels", KeyKind::list, "ConvNet channels per conv3x3+relu+maxpool block"},
       [](RunConfig& c, std::string_view v) {
         c.model.channels =
             to_list<std::size_t>(v, [](const std::string& s) { return to_count("model.channels", s); });
       },
       [](const RunConfig& c) { return fmt_list(c.model.channels); }},
      DOM_INTEGER("model.seed", model.seed, std::int64_t, "initialisation seed, -1 = run seed"),

      DOM_INTEGER("train.epochs", train.epochs, int, "training epochs E"),
      DOM_COUNT("train.batch_size", train.batch_size, "mini-batch size M"),
      DOM_NUMBER("train.momentum", train.sgd.momentum, "SGD momentum"),
      DOM_NUMBER("train.weight_decay", train.sgd.weight_decay, "SGD weight decay"),

      {{"lr.kind", KeyKind::enumeration, "step | cyclical"},
       [](RunConfig& c, std::string_view v) {
         c.lr.kind = enum_choice("lr.kind", v, {"step", "cyclical"}) == "step" ? LrSchedule::Kind::step
                                                                                : LrSchedule::Kind::cyclical;
       },
       [](const RunConfig& c) { return std::string(c.lr.kind == LrSchedule::Kind::step ? "step" : "cyclical"); }},
      DOM_NUMBER("lr.base", lr.base_lr, "step schedule initial rate"),
      {{"lr.decay_epochs", KeyKind::list, "step schedule decay epochs"},
       [](RunConfig& c, std::string_view v) {
         c.lr.decay_epochs =
             to_list<int>(v, [](const std::string& s) { return static_cast<int>(to_integer("lr.decay_epochs", s)); });
       },
       [](const RunConfig& c) { return fmt_list(c.lr.decay_epochs); }},
      DOM_NUMBER("lr.decay_factor", lr.decay_factor, "step schedule multiplier per decay"),
      DOM_NUMBER("lr.peak", lr.peak_lr, "cyclical schedule peak rate"),
      DOM_NUMBER("lr.peak_epoch", lr.peak_epoch, "cyclical peak epoch, <= 0 = midpoint"),

      DOM_NUMBER("attack.epsilon", attack.epsilon, "training perturbation budget (L-inf, pixel units)"),
      DOM_NUMBER("attack.alpha", attack.alpha, "training attack step size"),
      DOM_INTEGER("attack.steps", attack.steps, int, "training attack steps (1 = RS-FGSM)"),
      DOM_BOOL("attack.random_init", attack.random_init, "uniform random start"),
      DOM_BOOL("attack.clip_pixels", attack.clip_pixels, "keep x + delta in [0,1]"),
      DOM_BOOL("attack.resample_eta", attack.resample_eta, "fresh random start for every PGD step"),

      DOM_NUMBER("eval.epsilon", eval.attack.epsilon, "evaluation perturbation budget"),
      DOM_NUMBER("eval.alpha", eval.attack.alpha, "evaluation step size"),
      DOM_INTEGER("eval.steps", eval.attack.steps, int, "evaluation PGD steps"),
      DOM_BOOL("eval.random_init", eval.attack.random_init, "evaluation random start"),
      DOM_INTEGER("eval.every", eval.every, int, "robust accuracy cadence in epochs"),
      DOM_COUNT("eval.batch_size", eval.batch_size, "evaluation batch size"),

      {{"dom.mode", KeyKind::enumeration, "off | RE | DA"},
       [](RunConfig& c, std::string_view v) { c.dom.mode = *parse_dom_mode(enum_choice("dom.mode", v, {"off", "RE", "DA", "re", "da"})); },
       [](const RunConfig& c) { return to_string(c.dom.mode); }},
      {{"dom.threshold_rule", KeyKind::enumeration, "fixed | adaptive"},
       [](RunConfig& c, std::string_view v) {
         const bool fixed = enum_choice("dom.threshold_rule", v, {"fixed", "adaptive"}) == "fixed";
         if (fixed && c.dom.threshold.kind != ThresholdRule::Kind::fixed) c.dom.threshold = ThresholdRule::fixed(0.2);
         if (!fixed && c.dom.threshold.kind != ThresholdRule::Kind::adaptive) c.dom.threshold = ThresholdRule::adaptive(40.0);
       },
       [](const RunConfig& c) {
         return std::string(c.dom.threshold.kind == ThresholdRule::Kind::fixed ? "fixed" : "adaptive");
       }},
      {{"dom.threshold", KeyKind::number, "fixed loss threshold"},
       [](RunConfig& c, std::string_view v) { c.dom.threshold = ThresholdRule::fixed(to_number("dom.threshold", v)); },
       [](const RunConfig& c) {
         return c.dom.threshold.kind == ThresholdRule::Kind::fixed ? fmt(c.dom.threshold.value) : std::string("-");
       }},
      {{"dom.percentile", KeyKind::number, "adaptive threshold percentile of the batch natural losses"},
       [](RunConfig& c, std::string_view v) {
         c.dom.threshold = ThresholdRule::adaptive(to_number("dom.percentile", v));
       },
       [](const RunConfig& c) {
         return c.dom.threshold.kind == ThresholdRule::Kind::adaptive ? fmt(c.dom.threshold.value) : std::string("-");
       }},
      DOM_INTEGER("dom.warmup", dom.warmup_epoch, int, "warm-up epoch K, -1 = first decay (step) or E/2"),
      DOM_NUMBER("dom.strength", dom.da_strength, "blend weight beta for failed draws"),
      DOM_INTEGER("dom.iterations", dom.da_iterations, int, "augmentation iterations gamma"),
      {{"dom.ops", KeyKind::list, "augmentation operator family"},
       [](RunConfig& c, std::string_view v) {
         c.dom.da_ops = to_list<AugmentKind>(v, [](const std::string& s) {
           auto k = parse_augment_kind(s);
           if (!k) bad_value("dom.ops", s, "an augmentation operator");
           return *k;
         });
       },
       [](const RunConfig& c) { return fmt_list(c.dom.da_ops); }},
      DOM_NUMBER("dom.magnitude", dom.da_magnitude, "operator magnitude (strength hint) in [0,1]"),
      DOM_BOOL("dom.strict_fidelity", dom.strict_fidelity, "RE under AT: attack all samples, then mask"),

      DOM_BOOL("telemetry.ledger", telemetry.ledger, "record per-sample losses every epoch"),
      {{"telemetry.bins", KeyKind::list, "interior loss-range bin edges"},
       [](RunConfig& c, std::string_view v) {
         c.telemetry.bins = to_list<double>(v, [](const std::string& s) { return to_number("telemetry.bins", s); });
       },
       [](const RunConfig& c) { return fmt_list(c.telemetry.bins); }},
      DOM_INTEGER("telemetry.aux_epoch", telemetry.aux_epoch, int, "auxiliary snapshot epoch, -1 = default"),
      DOM_INTEGER("telemetry.probe_epoch", telemetry.probe_epoch, int, "tag-and-remove epoch, 0 = off"),
      DOM_INTEGER("telemetry.probe_horizon", telemetry.probe_horizon, int, "epochs tracked after removal"),
      DOM_NUMBER("telemetry.fig4_threshold", telemetry.fig4_threshold, "natural-loss split for grouped adversarial loss"),
      DOM_INTEGER("telemetry.fig4_window", telemetry.fig4_window, int, "final epochs averaged for grouped adversarial loss"),
      DOM_BOOL("telemetry.checkpoints", telemetry.checkpoints, "write best/last/aux checkpoints"),
  };
  return keys;
}

#undef DOM_NUMBER
#undef DOM_INTEGER
#undef DOM_COUNT
#undef DOM_BOOL
#undef DOM_TEXT

const KeyEntry& find_key(std::string_view key) {
  const auto& r = registry();
  auto it = std::find_if(r.begin(), r.end(), [&](const KeyEntry& e) { return e.info.name == key; });
  if (it == r.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return *it;
}

}  // namespace

const std::vector<ConfigKeyInfo>& config_keys() {
  static const std::vector<ConfigKeyInfo> infos = [] {
    std::vector<ConfigKeyInfo> v;
    for (const auto& e : registry()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

bool is_scalar_key(std::string_view key) {
  const auto kind = find_key(key).info.kind;
  return kind == KeyKind::integer || kind == KeyKind::number || kind == KeyKind::boolean ||
         kind == KeyKind::enumeration;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  find_key(key).set(config, value);
}

std::string get_config_value(const RunConfig& config, std::string_view key) { return find_key(key).get(config); }

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::stringstream ss{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    out.emplace_back(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

RunConfig parse_config(std::string_view text, const KeyValues& overrides) {
  KeyValues all = parse_key_values(text);
  all.insert(all.end(), overrides.begin(), overrides.end());
  Paradigm paradigm = Paradigm::natural;
  for (const auto& [k, v] : all) {
    if (k == "paradigm") {
      RunConfig probe;
      set_config_value(probe, k, v);
      paradigm = probe.paradigm;
    }
  }
  RunConfig config = RunConfig::defaults(paradigm);
  for (const auto& [k, v] : all) set_config_value(config, k, v);
  return config;
}

RunConfig load_config(const std::filesystem::path& path, const KeyValues& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  for (const auto& e : registry()) {
    const std::string v = e.get(config);
    if (v == "-") continue;
    out += e.info.name + " = " + v + "\n";
  }
  return out;
}

std::vector<Violation> validate(const RunConfig& c) {
  std::vector<Violation> v;
  const auto add = [&](std::string field, std::string msg) { v.push_back({std::move(field), std::move(msg)}); };
  const int E = c.train.epochs;

  if (c.paradigm == Paradigm::at_single && c.attack.steps != 1) {
    add("attack.steps", "at_single trains with a single-step attack (steps == 1), got " + std::to_string(c.attack.steps));
  }
  if (c.paradigm == Paradigm::at_multi && c.attack.steps <= 1) {
    add("attack.steps", "at_multi trains with a multi-step attack (steps > 1), got " + std::to_string(c.attack.steps));
  }
  if (c.paradigm == Paradigm::at_single && !c.attack.random_init) {
    add("attack.random_init", "at_single uses RS-FGSM, which requires a random start");
  }
  if (E < 1) add("train.epochs", "must be >= 1");
  if (c.train.batch_size < 1) add("train.batch_size", "must be >= 1");
  if (!(c.train.sgd.momentum >= 0.0 && c.train.sgd.momentum < 1.0)) add("train.momentum", "must be in [0,1)");
  if (!(c.train.sgd.weight_decay >= 0.0)) add("train.weight_decay", "must be >= 0");

  const int K = c.resolved_warmup();
  if (K < 0) add("dom.warmup", "must be >= 0");
  if (K >= E) add("dom.warmup", "warm-up epoch " + std::to_string(K) + " must be < train.epochs " + std::to_string(E));

  if (c.lr.kind == LrSchedule::Kind::step) {
    if (!(c.lr.base_lr > 0.0)) add("lr.base", "must be > 0");
    if (!(c.lr.decay_factor > 0.0 && c.lr.decay_factor <= 1.0)) add("lr.decay_factor", "must be in (0,1]");
    for (std::size_t i = 0; i < c.lr.decay_epochs.size(); ++i) {
      if (c.lr.decay_epochs[i] <= 0 || (i && c.lr.decay_epochs[i] <= c.lr.decay_epochs[i - 1])) {
        add("lr.decay_epochs", "must be positive and strictly increasing");
        break;
      }
    }
  } else {
    if (!(c.lr.peak_lr > 0.0)) add("lr.peak", "must be > 0");
    const double pe = c.schedule().peak_epoch;
    if (E >= 1 && !(pe > 0.0 && pe < E)) add("lr.peak_epoch", "must lie in (0, train.epochs)");
  }

  const auto check_attack = [&](const AttackSpec& a, const std::string& prefix) {
    if (!(a.epsilon > 0.0)) add(prefix + ".epsilon", "must be > 0");
    if (!(a.alpha > 0.0)) add(prefix + ".alpha", "must be > 0");
    if (a.steps < 1) add(prefix + ".steps", "must be >= 1");
  };
  check_attack(c.attack, "attack");
  check_attack(c.eval.attack, "eval");
  if (c.eval.every < 1) add("eval.every", "must be >= 1");
  if (c.eval.batch_size < 1) add("eval.batch_size", "must be >= 1");

  if (c.dom.threshold.kind == ThresholdRule::Kind::fixed) {
    if (!(c.dom.threshold.value > 0.0)) add("dom.threshold", "must be > 0");
  } else if (!(c.dom.threshold.value > 0.0 && c.dom.threshold.value < 100.0)) {
    add("dom.percentile", "must be in (0,100)");
  }
  if (!(c.dom.da_strength >= 0.0 && c.dom.da_strength <= 1.0)) add("dom.strength", "must be in [0,1]");
  if (c.dom.da_iterations < 1) add("dom.iterations", "must be >= 1");
  if (!(c.dom.da_magnitude >= 0.0 && c.dom.da_magnitude <= 1.0)) add("dom.magnitude", "must be in [0,1]");
  if (c.dom.mode == DomMode::da && c.dom.da_ops.empty()) add("dom.ops", "DA mode needs at least one operator");

  const auto& d = c.data;
  if (d.source == "synthetic") {
    if (d.classes < 2) add("data.classes", "must be >= 2");
    if (d.n_train < d.classes) add("data.n_train", "must be >= data.classes");
    if (d.n_test < 1) add("data.n_test", "must be >= 1");
    if (!(d.label_noise >= 0.0 && d.label_noise < 1.0)) add("data.label_noise", "must be in [0,1)");
    if (!(d.cluster_std > 0.0)) add("data.cluster_std", "must be > 0");
    if (d.shape.empty() || std::find(d.shape.begin(), d.shape.end(), 0) != d.shape.end() ||
        (d.shape.size() != 1 && d.shape.size() != 3)) {
      add("data.shape", "must be D or C,H,W with positive entries");
    }
    if (c.model.arch == "convnet" && d.shape.size() != 3) add("data.shape", "convnet needs an image shape C,H,W");
  } else if (d.source == "idx") {
    for (auto [field, value] : {std::pair{"data.train_images", &d.train_images}, {"data.train_labels", &d.train_labels},
                                {"data.test_images", &d.test_images}, {"data.test_labels", &d.test_labels}}) {
      if (value->empty()) add(field, "required for data.source = idx");
    }
  } else {
    if (d.train_path.empty()) add("data.train_path", "required for data.source = " + d.source);
    if (d.test_path.empty()) add("data.test_path", "required for data.source = " + d.source);
  }

  if (c.model.arch == "convnet") {
    if (c.model.channels.empty() || c.model.channels.size() > 4) add("model.channels", "convnet takes 1 to 4 blocks");
    if (std::find(c.model.channels.begin(), c.model.channels.end(), 0) != c.model.channels.end()) {
      add("model.channels", "entries must be positive");
    }
  } else if (std::find(c.model.hidden.begin(), c.model.hidden.end(), 0) != c.model.hidden.end()) {
    add("model.hidden", "entries must be positive");
  }

  const auto& t = c.telemetry;
  for (std::size_t i = 0; i < t.bins.size(); ++i) {
    if (!(t.bins[i] > (i ? t.bins[i - 1] : 0.0)) || !std::isfinite(t.bins[i])) {
      add("telemetry.bins", "interior edges must be finite, positive and strictly increasing");
      break;
    }
  }
  const int aux = c.resolved_aux_epoch();
  if (aux < 1 || aux > E) add("telemetry.aux_epoch", "must lie in [1, train.epochs]");
  if (t.probe_epoch != 0) {
    if (t.probe_epoch <= aux || t.probe_epoch > E) add("telemetry.probe_epoch", "must lie in (aux epoch, train.epochs]");
    if (!t.ledger) add("telemetry.ledger", "the removal probe needs the loss ledger");
    if (c.dom.threshold.kind != ThresholdRule::Kind::fixed) add("telemetry.probe_epoch", "the probe needs a fixed dom.threshold");
  }
  if (t.probe_horizon < 0) add("telemetry.probe_horizon", "must be >= 0");
  if (!(t.fig4_threshold > 0.0)) add("telemetry.fig4_threshold", "must be > 0");
  if (t.fig4_window < 1) add("telemetry.fig4_window", "must be >= 1");
  return v;
}

}  // namespace dom
