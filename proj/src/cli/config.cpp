#include "dstsa/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "dstsa/errors.hpp"

namespace dstsa::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Thrown by the value parsers; turned into a ConfigError naming the key.
struct BadValue {
  std::string why;
};

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw BadValue{"expected a non-negative integer"};
  }
  return out;
}

std::size_t to_size(const std::string& v) { return static_cast<std::size_t>(to_u64(v)); }

double to_double(const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) throw BadValue{"expected a number"};
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw BadValue{"expected true or false"};
}

std::vector<std::size_t> to_size_list(const std::string& v) {
  std::vector<std::size_t> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_size(trim(item)));
  return out;
}

std::string from_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string from_bool(bool v) { return v ? "true" : "false"; }

std::string from_size_list(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

// Re-raises domain parse failures (ConfigError / InputError from the enum
// parsers) as BadValue so they are reported against the key.
template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw BadValue{e.what()};
  }
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define DSTSA_SIZE_FIELD(KEY, MEMBER)                                           \
  Field {                                                                       \
    KEY, [](const RunConfig& c) { return std::to_string(c.MEMBER); },           \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_size(v); }       \
  }
#define DSTSA_U64_FIELD(KEY, MEMBER)                                            \
  Field {                                                                       \
    KEY, [](const RunConfig& c) { return std::to_string(c.MEMBER); },           \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_u64(v); }        \
  }
#define DSTSA_DOUBLE_FIELD(KEY, MEMBER)                                         \
  Field {                                                                       \
    KEY, [](const RunConfig& c) { return from_double(c.MEMBER); },              \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_double(v); }     \
  }
#define DSTSA_BOOL_FIELD(KEY, MEMBER)                                           \
  Field {                                                                       \
    KEY, [](const RunConfig& c) { return from_bool(c.MEMBER); },                \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_bool(v); }       \
  }
#define DSTSA_STRING_FIELD(KEY, MEMBER)                                         \
  Field {                                                                       \
    KEY, [](const RunConfig& c) { return c.MEMBER; },                           \
        [](RunConfig& c, const std::string& v) { c.MEMBER = v; }                \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      DSTSA_STRING_FIELD("model.graph", model.graph),
      DSTSA_SIZE_FIELD("model.in_channels", model.in_channels),
      DSTSA_SIZE_FIELD("model.num_classes", model.num_classes),
      DSTSA_SIZE_FIELD("model.input_frames", model.input_frames),
      DSTSA_SIZE_FIELD("model.base_channels", model.base_channels),
      Field{"model.stage_depths",
            [](const RunConfig& c) { return from_size_list(c.model.stage_depths); },
            [](RunConfig& c, const std::string& v) { c.model.stage_depths = to_size_list(v); }},
      DSTSA_SIZE_FIELD("model.groups", model.gc.groups),
      Field{"model.theta", [](const RunConfig& c) { return nn::theta_name(c.model.gc.theta); },
            [](RunConfig& c, const std::string& v) {
              c.model.gc.theta = guarded([&] { return nn::parse_theta(v); });
            }},
      Field{"model.static_init",
            [](const RunConfig& c) { return nn::static_init_name(c.model.gc.static_init); },
            [](RunConfig& c, const std::string& v) {
              c.model.gc.static_init = guarded([&] { return nn::parse_static_init(v); });
            }},
      DSTSA_BOOL_FIELD("model.stca", model.gc.use_stca),
      DSTSA_SIZE_FIELD("model.stca_reduction", model.gc.stca_reduction),
      DSTSA_BOOL_FIELD("model.tgp", model.gc.use_tgp),
      DSTSA_BOOL_FIELD("model.cgp", model.gc.use_cgp),
      DSTSA_BOOL_FIELD("model.gcgc", model.gc.enable_gcgc),
      DSTSA_BOOL_FIELD("model.gtgc", model.gc.enable_gtgc),
      Field{"model.branches",
            [](const RunConfig& c) { return nn::branches_name(c.model.tcn.branches); },
            [](RunConfig& c, const std::string& v) {
              c.model.tcn.branches = guarded([&] { return nn::parse_branches(v); });
            }},
      DSTSA_SIZE_FIELD("model.kernel", model.tcn.kernel),
      DSTSA_SIZE_FIELD("model.plain_kernel", model.tcn.plain_kernel),

      DSTSA_DOUBLE_FIELD("train.lr", train.schedule.lr0),
      DSTSA_SIZE_FIELD("train.warmup_epochs", train.schedule.warmup_epochs),
      Field{"train.step_epochs",
            [](const RunConfig& c) { return from_size_list(c.train.schedule.step_epochs); },
            [](RunConfig& c, const std::string& v) {
              c.train.schedule.step_epochs = to_size_list(v);
            }},
      DSTSA_SIZE_FIELD("train.epochs", train.schedule.epochs),
      DSTSA_DOUBLE_FIELD("train.momentum", train.sgd.momentum),
      DSTSA_BOOL_FIELD("train.nesterov", train.sgd.nesterov),
      DSTSA_DOUBLE_FIELD("train.weight_decay", train.sgd.weight_decay),
      DSTSA_SIZE_FIELD("train.batch_size", train.batch_size),
      DSTSA_U64_FIELD("train.seed", train.seed),
      Field{"train.modality",
            [](const RunConfig& c) { return data::modality_name(c.train.modality); },
            [](RunConfig& c, const std::string& v) {
              c.train.modality = guarded([&] { return data::parse_modality(v); });
            }},
      Field{"train.label_set", [](const RunConfig& c) { return std::to_string(c.train.label_set); },
            [](RunConfig& c, const std::string& v) {
              c.train.label_set = static_cast<int>(to_size(v));
            }},
      DSTSA_SIZE_FIELD("train.checkpoint_every", checkpoint_every),
      DSTSA_SIZE_FIELD("train.eval_batch_size", eval_batch_size),

      DSTSA_STRING_FIELD("data.source", data.source),
      DSTSA_STRING_FIELD("data.root", data.root),
      DSTSA_STRING_FIELD("data.train_file", data.train_file),
      DSTSA_STRING_FIELD("data.val_file", data.val_file),
      DSTSA_SIZE_FIELD("data.synthetic.classes", data.synthetic.classes),
      DSTSA_SIZE_FIELD("data.synthetic.per_class", data.synthetic.per_class),
      DSTSA_SIZE_FIELD("data.synthetic.val_per_class", data.synthetic.val_per_class),
      DSTSA_SIZE_FIELD("data.synthetic.joints", data.synthetic.joints),
      DSTSA_SIZE_FIELD("data.synthetic.frames", data.synthetic.frames),
      DSTSA_U64_FIELD("data.synthetic.seed", data.synthetic.seed),
      DSTSA_U64_FIELD("data.synthetic.val_seed", data.synthetic.val_seed),
      DSTSA_DOUBLE_FIELD("data.synthetic.noise", data.synthetic.noise),
  };
  return table;
}

#undef DSTSA_SIZE_FIELD
#undef DSTSA_U64_FIELD
#undef DSTSA_DOUBLE_FIELD
#undef DSTSA_BOOL_FIELD
#undef DSTSA_STRING_FIELD

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

// Applies one assignment, returning a description of the problem or "".
std::string try_set(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) return "unknown config key '" + key + "'";
  try {
    f->set(cfg, value);
  } catch (const BadValue& e) {
    return "invalid value '" + value + "' for key '" + key + "': " + e.why;
  }
  return "";
}

std::string join_errors(const std::vector<std::string>& errors) {
  std::string out = errors.size() == 1 ? "" : std::to_string(errors.size()) + " config errors: ";
  for (std::size_t i = 0; i < errors.size(); ++i) out += (i ? "; " : "") + errors[i];
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  model.num_classes = data.synthetic.classes;
  model.input_frames = data.synthetic.frames;
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  const std::size_t joints = data::graph_by_name(model.graph).joints;
  if (data.source == "synthetic") {
    const auto& s = data.synthetic;
    if (s.classes == 0 || s.per_class == 0 || s.frames < 2) {
      throw ConfigError("data.synthetic needs classes >= 1, per_class >= 1 and frames >= 2");
    }
    if (s.classes != model.num_classes) {
      throw ConfigError("model.num_classes = " + std::to_string(model.num_classes) +
                        " but data.synthetic.classes = " + std::to_string(s.classes));
    }
    if (s.joints != joints) {
      throw ConfigError("model.graph '" + model.graph + "' has " + std::to_string(joints) +
                        " joints but data.synthetic.joints = " + std::to_string(s.joints));
    }
  } else if (data.source == "shrec") {
    if (data.root.empty()) throw ConfigError("data.source = shrec needs data.root");
    if (model.num_classes != static_cast<std::size_t>(train.label_set)) {
      throw ConfigError("model.num_classes = " + std::to_string(model.num_classes) +
                        " but train.label_set = " + std::to_string(train.label_set));
    }
  } else if (data.source == "files") {
    if (data.train_file.empty()) throw ConfigError("data.source = files needs data.train_file");
  } else {
    throw ConfigError("data.source must be synthetic, shrec or files, got '" + data.source + "'");
  }
  if (eval_batch_size == 0) throw ConfigError("train.eval_batch_size must be >= 1");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

void set_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const std::string err = try_set(cfg, key, value);
  if (!err.empty()) throw ConfigError(err);
}

std::string get_value(const RunConfig& cfg, const std::string& key) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown config key '" + key + "'");
  return f->get(cfg);
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::vector<std::string> errors;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(number) + ": expected key = value");
      continue;
    }
    const std::string err = try_set(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    if (!err.empty()) errors.push_back("line " + std::to_string(number) + ": " + err);
  }
  if (!errors.empty()) throw ConfigError(join_errors(errors));
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  apply_config_text(cfg, text);
  return cfg;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& assignments) {
  std::vector<std::string> errors;
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) {
      errors.push_back("expected key=value, got '" + a + "'");
      continue;
    }
    const std::string err = try_set(cfg, trim(a.substr(0, eq)), trim(a.substr(eq + 1)));
    if (!err.empty()) errors.push_back(err);
  }
  if (!errors.empty()) throw ConfigError(join_errors(errors));
}

}  // namespace dstsa::cli
