#include "unirep/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "unirep/error.hpp"

namespace unirep {

Schedule ExperimentConfig::schedule() const {
  Schedule s;
  s.total_steps = total_steps;
  s.warmup_steps = static_cast<std::size_t>(
      std::llround(warmup_fraction * static_cast<double>(total_steps)));
  s.warmup_lr = warmup_lr;
  s.base_lr = base_lr;
  s.final_lr = final_lr;
  for (double f : decay_boundaries)
    s.boundaries.push_back(static_cast<std::size_t>(
        std::llround(f * static_cast<double>(total_steps))));
  return s;
}

std::vector<std::size_t> ExperimentConfig::class_counts() const {
  std::vector<std::size_t> out;
  for (const DomainConfig& d : domains)
    out.push_back(d.type == DomainConfig::Type::Synthetic ? d.synth.classes : 0);
  return out;
}

std::vector<std::string> ExperimentConfig::collect_violations() const {
  std::vector<std::string> v;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };
  check(!domains.empty(), "no [domain.N] sections");
  check(preset == "desk8" || preset == "resnet38", "unknown preset '" + preset + "'");
  check(capacity_multiplier == 1 || capacity_multiplier == 2 || capacity_multiplier == 4,
        "capacity_multiplier must be 1, 2 or 4");
  try {
    norm.validate();
  } catch (const ConfigError& e) {
    v.push_back(e.what());
  }
  try {
    schedule().validate();
  } catch (const ConfigError& e) {
    v.push_back(e.what());
  }
  check(batch_size >= 1, "batch_size must be >= 1");
  check(warmup_fraction >= 0.0 && warmup_fraction < 1.0,
        "warmup_fraction must be in [0,1)");
  const std::size_t stages = preset == "resnet38" ? 4 : 2;
  if (sharing_mode == SharingMode::Partial)
    check(partial_first >= 1 && partial_first <= partial_last && partial_last <= stages,
          "partial_blocks must be a non-empty range within 1.." + std::to_string(stages));
  if (sharing_mode == SharingMode::FullSharing) {
    bool all_synth = true;
    for (const DomainConfig& d : domains)
      if (d.type != DomainConfig::Type::Synthetic) all_synth = false;
    if (all_synth && !domains.empty()) {
      const std::size_t k0 = domains.front().synth.classes;
      for (const DomainConfig& d : domains)
        check(d.synth.classes == k0,
              "full sharing requires equal class counts, got " + std::to_string(k0) +
                  " vs " + std::to_string(d.synth.classes));
    }
  }
  for (std::size_t i = 0; i < domains.size(); ++i) {
    const DomainConfig& d = domains[i];
    const std::string tag = "domain." + std::to_string(i + 1) + ": ";
    check(d.split_ratio > 0.0 && d.split_ratio < 1.0, tag + "split_ratio must be in (0,1)");
    if (d.type == DomainConfig::Type::Synthetic) {
      try {
        d.synth.validate();
      } catch (const ConfigError& e) {
        v.push_back(tag + e.what());
      }
    } else {
      check(!d.path.empty(), tag + "udrd domain needs a path");
    }
  }
  return v;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> v = collect_violations();
  if (v.empty()) return;
  std::string msg = "invalid experiment config (" + std::to_string(v.size()) +
                    " violations):";
  for (const std::string& s : v) msg += "\n  - " + s;
  throw ConfigError(msg, std::move(v));
}

namespace {

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

NormKind parse_norm_kind(const std::string& s) {
  if (s == "bn") return NormKind::BN;
  if (s == "bn_plus") return NormKind::BN_PLUS;
  if (s == "in") return NormKind::IN;
  if (s == "none") return NormKind::NONE;
  throw ConfigError("unknown normalization kind '" + s + "'");
}

ParamScope parse_scope(const std::string& s) {
  if (s == "universal") return ParamScope::Universal;
  if (s == "domain") return ParamScope::Domain;
  throw ConfigError("unknown scale scope '" + s + "'");
}

MomentScope parse_moment_scope(const std::string& s) {
  if (s == "universal") return MomentScope::Universal;
  if (s == "domain") return MomentScope::Domain;
  if (s == "none") return MomentScope::None;
  throw ConfigError("unknown moment scope '" + s + "'");
}

SharingMode parse_sharing(const std::string& s) {
  if (s == "none") return SharingMode::NoSharing;
  if (s == "deep") return SharingMode::DeepSharing;
  if (s == "full") return SharingMode::FullSharing;
  if (s == "partial") return SharingMode::Partial;
  throw ConfigError("unknown sharing mode '" + s + "'");
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct IniData {
  // section -> key -> value; domain sections are kept in order.
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::vector<std::string> errors;
};

IniData parse_ini(const std::string& text) {
  IniData out;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        out.errors.push_back("line " + std::to_string(lineno) + ": unterminated section");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      out.sections[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      out.errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    if (section.empty()) {
      out.errors.push_back("line " + std::to_string(lineno) + ": key outside a section");
      continue;
    }
    out.sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

class SectionReader {
public:
  SectionReader(const std::string& name, const std::map<std::string, std::string>& kv,
                std::vector<std::string>& errors)
      : name_(name), kv_(kv), errors_(errors) {}

  ~SectionReader() {
    for (const auto& [key, value] : kv_) {
      (void)value;
      if (!consumed_.count(key))
        errors_.push_back("[" + name_ + "]: unknown key '" + key + "'");
    }
  }

  template <typename F>
  void with(const std::string& key, F&& f) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return;
    consumed_.insert(key);
    try {
      f(it->second);
    } catch (const std::exception& e) {
      errors_.push_back("[" + name_ + "] " + key + ": " + e.what());
    }
  }

  void str(const std::string& key, std::string& dst) {
    with(key, [&](const std::string& v) { dst = v; });
  }
  void f64(const std::string& key, double& dst) {
    with(key, [&](const std::string& v) { dst = std::stod(v); });
  }
  void u64(const std::string& key, std::uint64_t& dst) {
    with(key, [&](const std::string& v) { dst = std::stoull(v); });
  }
  void usize(const std::string& key, std::size_t& dst) {
    with(key, [&](const std::string& v) { dst = std::stoull(v); });
  }
  void boolean(const std::string& key, bool& dst) {
    with(key, [&](const std::string& v) {
      if (v == "true" || v == "1")
        dst = true;
      else if (v == "false" || v == "0")
        dst = false;
      else
        throw ConfigError("expected true/false");
    });
  }

private:
  std::string name_;
  const std::map<std::string, std::string>& kv_;
  std::vector<std::string>& errors_;
  std::set<std::string> consumed_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  IniData ini = parse_ini(text);
  std::vector<std::string> errors = std::move(ini.errors);
  ExperimentConfig cfg;
  bool moment_scope_set = false;

  for (const auto& [section, kv] : ini.sections) {
    if (section == "experiment") {
      SectionReader r(section, kv, errors);
      r.str("name", cfg.name);
      r.str("output_dir", cfg.output_dir);
      r.u64("seed_model", cfg.seed_model);
      r.u64("seed_data", cfg.seed_data);
      r.u64("seed_augment", cfg.seed_augment);
    } else if (section == "network") {
      SectionReader r(section, kv, errors);
      r.str("preset", cfg.preset);
      r.usize("capacity_multiplier", cfg.capacity_multiplier);
      r.with("sharing", [&](const std::string& v) { cfg.sharing_mode = parse_sharing(v); });
      r.with("partial_blocks", [&](const std::string& v) {
        const std::size_t dash = v.find('-');
        if (dash == std::string::npos) {
          cfg.partial_first = cfg.partial_last = std::stoull(v);
        } else {
          cfg.partial_first = std::stoull(v.substr(0, dash));
          cfg.partial_last = std::stoull(v.substr(dash + 1));
        }
      });
    } else if (section == "normalization") {
      SectionReader r(section, kv, errors);
      r.with("kind", [&](const std::string& v) { cfg.norm.kind = parse_norm_kind(v); });
      r.with("scale_scope",
             [&](const std::string& v) { cfg.norm.scale_scope = parse_scope(v); });
      r.with("moment_scope", [&](const std::string& v) {
        cfg.norm.moment_scope = parse_moment_scope(v);
        moment_scope_set = true;
      });
    } else if (section == "optimizer") {
      SectionReader r(section, kv, errors);
      r.f64("momentum", cfg.momentum);
      r.f64("weight_decay", cfg.weight_decay);
      r.usize("batch_size", cfg.batch_size);
    } else if (section == "schedule") {
      SectionReader r(section, kv, errors);
      r.usize("total_steps", cfg.total_steps);
      r.f64("warmup_fraction", cfg.warmup_fraction);
      r.f64("warmup_lr", cfg.warmup_lr);
      r.f64("base_lr", cfg.base_lr);
      r.f64("final_lr", cfg.final_lr);
      r.with("decay_boundaries", [&](const std::string& v) {
        cfg.decay_boundaries.clear();
        std::istringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ',')) cfg.decay_boundaries.push_back(std::stod(trim(tok)));
      });
    } else if (section == "training") {
      SectionReader r(section, kv, errors);
      r.usize("eval_every", cfg.eval_every);
      r.usize("checkpoint_every", cfg.checkpoint_every);
      r.boolean("parallel_accumulation", cfg.parallel_accumulation);
      r.with("threads", [&](const std::string& v) {
        cfg.threads = static_cast<unsigned>(std::stoul(v));
      });
    } else if (section.rfind("domain.", 0) == 0) {
      continue;  // handled below, in numeric order
    } else {
      errors.push_back("unknown section [" + section + "]");
    }
  }

  // Domains must be numbered 1..D.
  for (std::size_t d = 1;; ++d) {
    const std::string section = "domain." + std::to_string(d);
    auto it = ini.sections.find(section);
    if (it == ini.sections.end()) break;
    DomainConfig dom;
    dom.synth.name = section;
    std::string type = "synthetic";
    SectionReader r(section, it->second, errors);
    r.str("type", type);
    if (type == "udrd") {
      dom.type = DomainConfig::Type::Udrd;
      r.str("path", dom.path);
      r.boolean("rgb_replicate", dom.rgb_replicate);
      r.f64("split_ratio", dom.split_ratio);
    } else {
      if (type != "synthetic")
        errors.push_back("[" + section + "]: unknown type '" + type + "'");
      dom.type = DomainConfig::Type::Synthetic;
      r.str("name", dom.synth.name);
      r.usize("classes", dom.synth.classes);
      r.usize("n_per_class", dom.synth.n_per_class);
      r.usize("image_size", dom.synth.image_size);
      r.usize("channels", dom.synth.channels);
      r.f64("mean_offset", dom.synth.mean_offset);
      r.f64("variance_scale", dom.synth.variance_scale);
      r.f64("margin", dom.synth.margin);
      r.f64("noise_std", dom.synth.noise_std);
      r.u64("seed", dom.synth.seed);
      r.boolean("flip_allowed", dom.synth.flip_allowed);
      r.f64("split_ratio", dom.split_ratio);
      dom.synth.split_ratio = dom.split_ratio;
    }
    cfg.domains.push_back(std::move(dom));
  }
  for (const auto& [section, kv] : ini.sections) {
    (void)kv;
    if (section.rfind("domain.", 0) == 0) {
      const std::size_t n = std::stoull(section.substr(7));
      if (n == 0 || n > cfg.domains.size())
        errors.push_back("[" + section + "]: domain sections must be numbered 1..D "
                         "contiguously");
    }
  }

  // Kinds that compute moments on the fly default to moment_scope none.
  if (!moment_scope_set && cfg.norm.kind != NormKind::BN)
    cfg.norm.moment_scope = MomentScope::None;

  std::vector<std::string> violations = cfg.collect_violations();
  errors.insert(errors.end(), violations.begin(), violations.end());
  if (!errors.empty()) {
    std::string msg = "invalid experiment config (" + std::to_string(errors.size()) +
                      " violations):";
    for (const std::string& s : errors) msg += "\n  - " + s;
    throw ConfigError(msg, std::move(errors));
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string ExperimentConfig::resolved_text() const {
  std::ostringstream os;
  os << "[experiment]\n";
  os << "name = " << name << "\n";
  os << "output_dir = " << output_dir << "\n";
  os << "seed_model = " << seed_model << "\n";
  os << "seed_data = " << seed_data << "\n";
  os << "seed_augment = " << seed_augment << "\n";
  os << "\n[network]\n";
  os << "preset = " << preset << "\n";
  os << "capacity_multiplier = " << capacity_multiplier << "\n";
  os << "sharing = " << to_string(sharing_mode) << "\n";
  if (sharing_mode == SharingMode::Partial)
    os << "partial_blocks = " << partial_first << "-" << partial_last << "\n";
  os << "\n[normalization]\n";
  os << "kind = " << to_string(norm.kind) << "\n";
  os << "scale_scope = " << to_string(norm.scale_scope) << "\n";
  os << "moment_scope = " << to_string(norm.moment_scope) << "\n";
  os << "\n[optimizer]\n";
  os << "momentum = " << fmt_double(momentum) << "\n";
  os << "weight_decay = " << fmt_double(weight_decay) << "\n";
  os << "batch_size = " << batch_size << "\n";
  os << "\n[schedule]\n";
  os << "total_steps = " << total_steps << "\n";
  os << "warmup_fraction = " << fmt_double(warmup_fraction) << "\n";
  os << "warmup_lr = " << fmt_double(warmup_lr) << "\n";
  os << "base_lr = " << fmt_double(base_lr) << "\n";
  os << "final_lr = " << fmt_double(final_lr) << "\n";
  os << "decay_boundaries = ";
  for (std::size_t i = 0; i < decay_boundaries.size(); ++i)
    os << (i ? "," : "") << fmt_double(decay_boundaries[i]);
  os << "\n";
  os << "\n[training]\n";
  os << "eval_every = " << eval_every << "\n";
  os << "checkpoint_every = " << checkpoint_every << "\n";
  os << "parallel_accumulation = " << (parallel_accumulation ? "true" : "false") << "\n";
  os << "threads = " << threads << "\n";
  for (std::size_t i = 0; i < domains.size(); ++i) {
    const DomainConfig& d = domains[i];
    os << "\n[domain." << (i + 1) << "]\n";
    if (d.type == DomainConfig::Type::Udrd) {
      os << "type = udrd\n";
      os << "path = " << d.path << "\n";
      os << "rgb_replicate = " << (d.rgb_replicate ? "true" : "false") << "\n";
      os << "split_ratio = " << fmt_double(d.split_ratio) << "\n";
    } else {
      os << "type = synthetic\n";
      os << "name = " << d.synth.name << "\n";
      os << "classes = " << d.synth.classes << "\n";
      os << "n_per_class = " << d.synth.n_per_class << "\n";
      os << "image_size = " << d.synth.image_size << "\n";
      os << "channels = " << d.synth.channels << "\n";
      os << "mean_offset = " << fmt_double(d.synth.mean_offset) << "\n";
      os << "variance_scale = " << fmt_double(d.synth.variance_scale) << "\n";
      os << "margin = " << fmt_double(d.synth.margin) << "\n";
      os << "noise_std = " << fmt_double(d.synth.noise_std) << "\n";
      os << "seed = " << d.synth.seed << "\n";
      os << "flip_allowed = " << (d.synth.flip_allowed ? "true" : "false") << "\n";
      os << "split_ratio = " << fmt_double(d.split_ratio) << "\n";
    }
  }
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string text = resolved_text();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<Dataset> build_datasets(const ExperimentConfig& config) {
  std::vector<Dataset> out;
  for (std::size_t i = 0; i < config.domains.size(); ++i) {
    const DomainConfig& dc = config.domains[i];
    Dataset ds;
    if (dc.type == DomainConfig::Type::Synthetic) {
      ds = generate_synthetic(dc.synth);
    } else {
      ds = load_binary(dc.path);
      if (dc.rgb_replicate && ds.images.channels() == 1) ds = replicate_to_rgb(ds);
      ds.descriptor.split_ratio = dc.split_ratio;
    }
    ds.descriptor.id = i + 1;
    ds.split = split(ds, dc.split_ratio, derive_seed(config.seed_data, i + 1));
    whiten(ds);
    out.push_back(std::move(ds));
  }
  return out;
}

Model build_model(const ExperimentConfig& config) {
  config.validate();
  std::vector<std::size_t> counts = config.class_counts();
  // UDRD class counts come from the file headers.
  for (std::size_t i = 0; i < config.domains.size(); ++i)
    if (config.domains[i].type == DomainConfig::Type::Udrd)
      counts[i] = load_binary(config.domains[i].path).descriptor.classes;
  const Blueprint bp =
      build_blueprint(config.preset, config.capacity_multiplier, config.norm, counts);
  SharingConfig sharing;
  sharing.mode = config.sharing_mode;
  sharing.capacity_multiplier = config.capacity_multiplier;
  sharing.partial_first = config.partial_first;
  sharing.partial_last = config.partial_last;
  return apply_sharing<float>(bp, sharing, counts.size(), config.seed_model);
}

TrainOptions train_options(const ExperimentConfig& config) {
  TrainOptions opt;
  opt.schedule = config.schedule();
  opt.optimizer.momentum = config.momentum;
  opt.optimizer.weight_decay = config.weight_decay;
  opt.batch_size = config.batch_size;
  opt.eval_every = config.eval_every;
  opt.checkpoint_every = config.checkpoint_every;
  opt.parallel_accumulation = config.parallel_accumulation;
  opt.threads = config.threads;
  opt.data_seed = config.seed_data;
  opt.augment_seed = config.seed_augment;
  return opt;
}

}  // namespace unirep
