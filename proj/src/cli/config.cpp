#include "votenet/cli/config.hpp"

#include <array>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace votenet::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE) throw ConfigError("not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_unsigned(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("not a non-negative integer: '" + s + "'");
  }
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ConfigError("integer out of range: '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("not a boolean: '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T, typename Fmt>
std::string join(const std::vector<T>& values, Fmt fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    out += fmt(values[i]);
  }
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

Field real(std::string section, std::string key, double& ref) {
  return {std::move(section), std::move(key), [&ref] { return fmt_double(ref); },
          [&ref](const std::string& v) { ref = parse_double(v); }};
}

Field count(std::string section, std::string key, std::size_t& ref) {
  return {std::move(section), std::move(key), [&ref] { return std::to_string(ref); },
          [&ref](const std::string& v) { ref = parse_unsigned(v); }};
}

Field u64(std::string section, std::string key, std::uint64_t& ref) {
  return {std::move(section), std::move(key), [&ref] { return std::to_string(ref); },
          [&ref](const std::string& v) { ref = parse_unsigned(v); }};
}

Field flag(std::string section, std::string key, bool& ref) {
  return {std::move(section), std::move(key), [&ref] { return std::string(ref ? "true" : "false"); },
          [&ref](const std::string& v) { ref = parse_bool(v); }};
}

Field text(std::string section, std::string key, std::string& ref) {
  return {std::move(section), std::move(key), [&ref] { return ref; },
          [&ref](const std::string& v) { ref = v; }};
}

Field real_list(std::string section, std::string key, std::vector<double>& ref) {
  return {std::move(section), std::move(key), [&ref] { return join(ref, fmt_double); },
          [&ref](const std::string& v) {
            std::vector<double> out;
            for (const std::string& item : split_list(v)) out.push_back(parse_double(item));
            ref = std::move(out);
          }};
}

Field count_list(std::string section, std::string key, std::vector<std::size_t>& ref) {
  return {std::move(section), std::move(key),
          [&ref] { return join(ref, [](std::size_t x) { return std::to_string(x); }); },
          [&ref](const std::string& v) {
            std::vector<std::size_t> out;
            for (const std::string& item : split_list(v)) out.push_back(parse_unsigned(item));
            ref = std::move(out);
          }};
}

Field triple(std::string section, std::string key, std::array<double, 3>& ref) {
  const std::string name = section + "." + key;
  return {std::move(section), std::move(key),
          [&ref] { return join(std::vector<double>(ref.begin(), ref.end()), fmt_double); },
          [&ref, name](const std::string& v) {
            const auto items = split_list(v);
            if (items.size() != 3) throw ConfigError(name + " needs exactly 3 values");
            for (std::size_t i = 0; i < 3; ++i) ref[i] = parse_double(items[i]);
          }};
}

std::vector<Field> fields(RunConfig& c) {
  std::vector<Field> f;
  f.push_back(u64("run", "seed", c.seed));
  f.push_back(text("run", "out", c.out));
  f.push_back(text("run", "data", c.data));
  f.push_back(text("run", "checkpoint", c.checkpoint));

  f.push_back(count("network", "segments", c.network.segments));
  f.push_back(count("network", "height", c.network.height));
  f.push_back(count("network", "width", c.network.width));
  f.push_back({"network", "widths",
               [&c] {
                 return join(std::vector<std::size_t>(c.network.widths.begin(), c.network.widths.end()),
                             [](std::size_t x) { return std::to_string(x); });
               },
               [&c](const std::string& v) {
                 const auto items = split_list(v);
                 if (items.size() != c.network.widths.size()) {
                   throw ConfigError("network.widths needs exactly 4 values");
                 }
                 for (std::size_t i = 0; i < items.size(); ++i) c.network.widths[i] = parse_unsigned(items[i]);
               }});
  f.push_back(triple("network", "input_mean", c.network.input_mean));
  f.push_back(triple("network", "input_std", c.network.input_std));
  f.push_back(real("network", "count_temperature", c.network.count_temperature));
  f.push_back({"network", "count_mode", [&c] { return net::to_string(c.network.count_mode); },
               [&c](const std::string& v) {
                 try {
                   c.network.count_mode = net::parse_count_mode(v);
                 } catch (const std::invalid_argument& e) {
                   throw ConfigError(e.what());
                 }
               }});

  // A numeric eta switches the automatic weight off; eta_auto is written
  // after it so a saved file restores both.
  f.push_back({"loss", "eta", [&c] { return fmt_double(c.loss.eta); },
               [&c](const std::string& v) {
                 if (v == "auto") {
                   c.eta_auto = true;
                 } else {
                   c.eta_auto = false;
                   c.loss.eta = parse_double(v);
                 }
               }});
  f.push_back(flag("loss", "eta_auto", c.eta_auto));
  f.push_back(real("loss", "lambda_c", c.loss.lambda_c));
  f.push_back(real("loss", "lambda_r", c.loss.lambda_r));
  f.push_back({"loss", "pc_sign", [&c] { return loss::to_string(c.loss.pc_sign); },
               [&c](const std::string& v) {
                 try {
                   c.loss.pc_sign = loss::parse_pc_sign(v);
                 } catch (const std::invalid_argument& e) {
                   throw ConfigError(e.what());
                 }
               }});
  f.push_back({"loss", "f_loss_mode", [&c] { return loss::to_string(c.loss.f_loss_mode); },
               [&c](const std::string& v) {
                 try {
                   c.loss.f_loss_mode = loss::parse_f_loss_mode(v);
                 } catch (const std::invalid_argument& e) {
                   throw ConfigError(e.what());
                 }
               }});

  f.push_back(count("scene", "height", c.scene.height));
  f.push_back(count("scene", "width", c.scene.width));
  f.push_back(count("scene", "field_count", c.scene.field_count));
  f.push_back(real("scene", "levee_fraction", c.scene.levee_fraction));
  f.push_back(count("scene", "min_field_size", c.scene.min_field_size));
  f.push_back(count("scene", "max_field_size", c.scene.max_field_size));
  f.push_back(real("scene", "min_stripe_period", c.scene.min_stripe_period));
  f.push_back(real("scene", "max_stripe_period", c.scene.max_stripe_period));
  f.push_back(real("scene", "noise_level", c.scene.noise_level));
  f.push_back(count("scene", "max_placement_attempts", c.scene.max_placement_attempts));

  f.push_back(real_list("sampler", "r_fractions", c.sampler.r_fractions));
  f.push_back(real("sampler", "angle_step", c.sampler.angle_step));
  f.push_back(real("sampler", "keep_threshold", c.sampler.keep_threshold));
  f.push_back(count("sampler", "patch_size", c.sampler.patch_size));
  f.push_back(count("sampler", "background_stride", c.sampler.background_stride));
  f.push_back(real("sampler", "background_tolerance", c.sampler.background_tolerance));
  f.push_back(real_list("sampler", "rotation_set", c.sampler.rotation_set));

  f.push_back(count("dataset", "train_scenes", c.dataset.train_scenes));
  f.push_back(count("dataset", "eval_scenes", c.dataset.eval_scenes));
  f.push_back(count("dataset", "train_patches", c.dataset.train_patches));
  f.push_back(count("dataset", "eval_patches", c.dataset.eval_patches));
  f.push_back(real("dataset", "contour_share", c.dataset.contour_share));
  f.push_back(flag("dataset", "rotate", c.dataset.rotate));

  f.push_back(real("train", "learning_rate", c.train.learning_rate));
  f.push_back(real("train", "decayed_learning_rate", c.train.decayed_learning_rate));
  f.push_back(count("train", "decay_after_epochs", c.train.decay_after_epochs));
  f.push_back(count("train", "epochs", c.train.epochs));
  f.push_back(real("train", "beta1", c.train.beta1));
  f.push_back(real("train", "beta2", c.train.beta2));
  f.push_back(real("train", "epsilon", c.train.epsilon));

  f.push_back(count("eval", "stride", c.eval.stride));
  f.push_back(text("eval", "edge", c.eval.edge));
  f.push_back(flag("eval", "postprocess", c.eval.postprocess));
  f.push_back(count("eval", "min_area", c.eval.min_area));
  f.push_back(count("eval", "overlays", c.eval.overlays));

  f.push_back(count_list("sweep", "strides", c.sweep.strides));
  f.push_back(count("sweep", "scenes", c.sweep.scenes));
  f.push_back(real_list("sweep", "lambda_values", c.sweep.lambda_values));
  f.push_back(count("sweep", "repeats", c.sweep.repeats));
  f.push_back(count("sweep", "train_patches", c.sweep.train_patches));
  f.push_back(count("sweep", "epochs", c.sweep.epochs));
  return f;
}

void assign(RunConfig& config, const std::string& section, const std::string& key,
            const std::string& value) {
  for (Field& field : fields(config)) {
    if (field.section == section && field.key == key) {
      field.set(value);
      return;
    }
  }
  throw ConfigError("unknown key '" + section + "." + key + "'");
}

}  // namespace

void RunConfig::validate() const {
  auto wrap = [](const auto& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  };
  wrap([&] { network.validate(); });
  wrap([&] { loss.validate(); });
  wrap([&] { sampler.validate(); });
  wrap([&] { scene.validate(); });
  if (network.height != sampler.patch_size || network.width != sampler.patch_size) {
    throw ConfigError("network input " + std::to_string(network.height) + "x" +
                      std::to_string(network.width) + " must equal sampler.patch_size " +
                      std::to_string(sampler.patch_size));
  }
  if (dataset.contour_share < 0.0 || dataset.contour_share > 1.0) {
    throw ConfigError("dataset.contour_share must lie in [0, 1]");
  }
  if (!(train.learning_rate > 0.0) || !(train.decayed_learning_rate > 0.0)) {
    throw ConfigError("train learning rates must be positive");
  }
  if (!(train.beta1 >= 0.0 && train.beta1 < 1.0) || !(train.beta2 >= 0.0 && train.beta2 < 1.0)) {
    throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
  }
  if (!(train.epsilon > 0.0)) throw ConfigError("train.epsilon must be positive");
  if (eval.stride == 0) throw ConfigError("eval.stride must be positive");
  if (eval.edge != "clamp" && eval.edge != "pad") throw ConfigError("eval.edge must be clamp or pad");
  for (std::size_t s : sweep.strides) {
    if (s == 0) throw ConfigError("sweep.strides must be positive");
  }
  if (sweep.repeats == 0) throw ConfigError("sweep.repeats must be at least 1");
}

std::string serialize_config(const RunConfig& config) {
  RunConfig copy = config;
  std::string out;
  std::string section;
  for (const Field& field : fields(copy)) {
    if (field.section != section) {
      if (!section.empty()) out += '\n';
      section = field.section;
      out += "[" + section + "]\n";
    }
    out += field.key + " = " + field.get() + "\n";
  }
  return out;
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  RunConfig config = base;
  std::istringstream in(text);
  std::string line, section;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(number) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    if (section.empty()) throw ConfigError(where + "key outside of a section");
    try {
      assign(config, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), base);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << serialize_config(config);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override must look like section.key=value, got '" + assignment + "'");
  }
  assign(config, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
         trim(assignment.substr(eq + 1)));
}

std::vector<std::string> config_keys() {
  RunConfig scratch;
  std::vector<std::string> keys;
  for (const Field& field : fields(scratch)) keys.push_back(field.section + "." + field.key);
  return keys;
}

}  // namespace votenet::cli
