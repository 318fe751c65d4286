#include "cne/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace cne {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError("config key " + key + ": expected a boolean, got \"" + v + "\"");
}

int64_t parse_int(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected an integer, got \"" + v + "\"");
  }
}

double parse_float(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected a number, got \"" + v + "\"");
  }
}

using Setter = std::function<void(RunSettings&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& schema() {
  static const std::map<std::string, Setter> table = {
      {"data.corpus", [](RunSettings& s, const std::string& v, const std::string&) { s.corpus = v; }},
      {"data.word_vectors",
       [](RunSettings& s, const std::string& v, const std::string&) { s.word_vectors = v; }},
      {"data.word_vectors_format",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         if (v == "auto") s.word_vectors_format = VectorFileFormat::kAuto;
         else if (v == "text") s.word_vectors_format = VectorFileFormat::kText;
         else if (v == "binary") s.word_vectors_format = VectorFileFormat::kBinary;
         else throw ConfigError("config key " + k + ": expected auto|text|binary");
       }},
      {"data.min_count",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.min_count = static_cast<int>(parse_int(v, k));
       }},
      {"data.labels",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         if (v == "auto") s.labels = LabelMode::kAuto;
         else if (v == "require") s.labels = LabelMode::kRequire;
         else if (v == "none") s.labels = LabelMode::kNone;
         else throw ConfigError("config key " + k + ": expected auto|require|none");
       }},
      {"model.m",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.model.m = static_cast<int>(parse_int(v, k));
       }},
      {"model.layers",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.model.layers = static_cast<int>(parse_int(v, k));
       }},
      {"model.channels",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.model.channels = static_cast<int>(parse_int(v, k));
       }},
      {"model.kernel_width",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.model.kernel_width = static_cast<int>(parse_int(v, k));
       }},
      {"model.aggregation",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         try {
           s.model.aggregation = aggregation_from_name(v);
         } catch (const std::exception& e) {
           throw ConfigError("config key " + k + ": " + e.what());
         }
       }},
      {"model.pool_k",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.model.pool_k = static_cast<int>(parse_int(v, k));
       }},
      {"model.pad_target_len",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.model.pad_target_len = static_cast<int>(parse_int(v, k));
       }},
      {"model.residual_period",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.model.residual_period = static_cast<int>(parse_int(v, k));
       }},
      {"model.batch_norm",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.model.use_batch_norm = parse_bool(v, k);
       }},
      {"train.h",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.train.h = static_cast<int>(parse_int(v, k));
       }},
      {"train.epsilon",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.train.epsilon = static_cast<int>(parse_int(v, k));
       }},
      {"train.negatives",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.train.neg_samples = static_cast<int>(parse_int(v, k));
       }},
      {"train.batch_size",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.train.batch_size = static_cast<int>(parse_int(v, k));
       }},
      {"train.epochs",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.train.epochs = static_cast<int>(parse_int(v, k));
       }},
      {"train.seed",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.train.seed = static_cast<uint64_t>(parse_int(v, k));
       }},
      {"train.lr",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.train.lr = static_cast<float>(parse_float(v, k));
       }},
      {"train.beta1",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.train.beta1 = static_cast<float>(parse_float(v, k));
       }},
      {"train.beta2",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.train.beta2 = static_cast<float>(parse_float(v, k));
       }},
      {"train.adam_epsilon",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.train.adam_epsilon = static_cast<float>(parse_float(v, k));
       }},
      {"train.checkpoint_every",
       [](RunSettings& s, const std::string& v, const std::string& k) {
         s.train.checkpoint_every = static_cast<int>(parse_int(v, k));
       }},
      {"output.dir",
       [](RunSettings& s, const std::string& v, const std::string&) { s.output_dir = v; }},
  };
  return table;
}

void apply(RunSettings& settings, const std::string& key, const std::string& value,
           const std::string& where) {
  const auto it = schema().find(key);
  if (it == schema().end()) {
    throw ConfigError("unknown config key \"" + key + "\"" + where);
  }
  it->second(settings, value, key);
}

}  // namespace

RunSettings default_run_settings() { return RunSettings{}; }

RunSettings parse_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  RunSettings settings;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = " (" + path + ":" + std::to_string(line_no) + ")";
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("malformed section header" + where);
      section = trim(t.substr(1, t.size() - 2));
      if (section != "data" && section != "model" && section != "train" && section != "output") {
        throw ConfigError("unknown config section [" + section + "]" + where);
      }
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value" + where);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (section.empty()) throw ConfigError("key outside any section" + where);
    apply(settings, section + "." + key, value, where);
  }
  for (const std::string& ov : overrides) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override \"" + ov + "\": expected section.key=value");
    }
    apply(settings, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)), " (command line)");
  }
  return settings;
}

std::string render_run_config(const RunSettings& s) {
  std::ostringstream out;
  out << "[data]\n";
  out << "corpus = " << s.corpus << "\n";
  out << "word_vectors = " << s.word_vectors << "\n";
  out << "word_vectors_format = "
      << (s.word_vectors_format == VectorFileFormat::kAuto
              ? "auto"
              : s.word_vectors_format == VectorFileFormat::kText ? "text" : "binary")
      << "\n";
  out << "min_count = " << s.min_count << "\n";
  out << "labels = "
      << (s.labels == LabelMode::kAuto ? "auto"
                                       : s.labels == LabelMode::kRequire ? "require" : "none")
      << "\n";
  out << "[model]\n";
  out << "m = " << s.model.m << "\n";
  out << "layers = " << s.model.layers << "\n";
  out << "channels = " << s.model.channels << "\n";
  out << "kernel_width = " << s.model.kernel_width << "\n";
  out << "aggregation = " << aggregation_name(s.model.aggregation) << "\n";
  out << "pool_k = " << s.model.pool_k << "\n";
  out << "pad_target_len = " << s.model.pad_target_len << "\n";
  out << "residual_period = " << s.model.residual_period << "\n";
  out << "batch_norm = " << (s.model.use_batch_norm ? "true" : "false") << "\n";
  out << "[train]\n";
  out << "h = " << s.train.h << "\n";
  out << "epsilon = " << s.train.epsilon << "\n";
  out << "negatives = " << s.train.neg_samples << "\n";
  out << "batch_size = " << s.train.batch_size << "\n";
  out << "epochs = " << s.train.epochs << "\n";
  out << "seed = " << s.train.seed << "\n";
  out << "lr = " << s.train.lr << "\n";
  out << "beta1 = " << s.train.beta1 << "\n";
  out << "beta2 = " << s.train.beta2 << "\n";
  out << "adam_epsilon = " << s.train.adam_epsilon << "\n";
  out << "checkpoint_every = " << s.train.checkpoint_every << "\n";
  out << "[output]\n";
  out << "dir = " << s.output_dir << "\n";
  return out.str();
}

}  // namespace cne
