#include "fockscatter/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace fockscatter {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

template <class T>
T parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("not a valid number: '" + s + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(value)) throw ConfigError("number must be finite: '" + s + "'");
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (const std::string& item : split(s, ',')) out.push_back(parse_number<double>(item));
  return out;
}

std::string format_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + format_double(v[k]);
  return s;
}

FockState parse_state(const std::string& s) {
  FockState n;
  for (const std::string& item : split(s, ',')) {
    const int v = parse_number<int>(item);
    if (v < 0) throw ConfigError("occupations must be non-negative: '" + s + "'");
    n.push_back(v);
  }
  if (n.empty()) throw ConfigError("empty occupation vector");
  return n;
}

std::string format_state(const FockState& n) {
  std::string s;
  for (std::size_t k = 0; k < n.size(); ++k) s += (k ? "," : "") + std::to_string(n[k]);
  return s;
}

std::optional<double> parse_optional_double(const std::string& s) {
  if (trim(s) == "none") return std::nullopt;
  return parse_number<double>(s);
}

struct Field {
  ConfigKey meta;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define FS_DOUBLE(sec, name, member, doc)                                                          \
  Field {                                                                                          \
    {sec, name, "float", doc}, [](RunConfig& c, const std::string& v) { c.member = parse_number<double>(v); }, \
        [](const RunConfig& c) { return format_double(c.member); }                                 \
  }
#define FS_INT(sec, name, member, type, doc)                                                      \
  Field {                                                                                         \
    {sec, name, "integer", doc}, [](RunConfig& c, const std::string& v) { c.member = parse_number<type>(v); }, \
        [](const RunConfig& c) { return std::to_string(c.member); }                               \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      FS_INT("model", "sites", model.sites, int, "number of sites L"),
      Field{{"model", "geometry", "chain|ring", "lattice geometry"},
            [](RunConfig& c, const std::string& v) {
              try {
                c.model.geometry = geometry_from_string(trim(v));
              } catch (const std::exception&) {
                throw ConfigError("geometry must be chain or ring, got '" + trim(v) + "'");
              }
            },
            [](const RunConfig& c) { return to_string(c.model.geometry); }},
      FS_DOUBLE("model", "hopping", model.hopping, "hopping amplitude J >= 0; h_{l,l+1} = -J exp(i flux)"),
      FS_DOUBLE("model", "flux_per_bond", model.flux_per_bond, "Peierls phase per bond (radians)"),
      FS_DOUBLE("model", "interaction", model.interaction, "on-site interaction U"),
      Field{{"model", "onsite", "float list", "on-site energies eps_l; empty means zero"},
            [](RunConfig& c, const std::string& v) { c.model.onsite = parse_doubles(v); },
            [](const RunConfig& c) { return format_doubles(c.model.onsite); }},
      FS_DOUBLE("model", "hbar", model.hbar, "value of hbar"),

      FS_DOUBLE("disorder", "width", disorder.width, "W; eps_l uniform on [-W/2, W/2]"),
      Field{{"disorder", "distribution", "uniform", "disorder distribution"},
            [](RunConfig& c, const std::string& v) {
              if (trim(v) != "uniform") throw ConfigError("distribution must be uniform, got '" + trim(v) + "'");
              c.disorder.distribution = DisorderDistribution::uniform;
            },
            [](const RunConfig&) { return std::string("uniform"); }},
      FS_INT("disorder", "realizations", disorder.realizations, int, "number of disorder realizations"),

      FS_INT("run", "seed", run.seed, std::uint64_t, "master seed for disorder, sampling and bootstrap"),
      FS_INT("run", "threads", run.threads, int, "worker threads; results do not depend on it"),

      Field{{"transition", "initial", "int list", "initial Fock state n_i"},
            [](RunConfig& c, const std::string& v) { c.transition.initial = parse_state(v); },
            [](const RunConfig& c) { return format_state(c.transition.initial); }},
      Field{{"transition", "final", "list of int lists", "final states separated by ';'; empty means all"},
            [](RunConfig& c, const std::string& v) {
              c.transition.final.clear();
              if (trim(v).empty()) return;
              for (const std::string& item : split(v, ';')) c.transition.final.push_back(parse_state(item));
            },
            [](const RunConfig& c) {
              std::string s;
              for (std::size_t k = 0; k < c.transition.final.size(); ++k)
                s += (k ? "; " : "") + format_state(c.transition.final[k]);
              return s;
            }},
      Field{{"transition", "times", "float list", "evolution times, ascending"},
            [](RunConfig& c, const std::string& v) { c.transition.times = parse_doubles(v); },
            [](const RunConfig& c) { return format_doubles(c.transition.times); }},
      Field{{"transition", "realization", "integer|none", "disorder realization applied to the model"},
            [](RunConfig& c, const std::string& v) {
              if (trim(v) == "none")
                c.transition.realization.reset();
              else
                c.transition.realization = parse_number<int>(v);
            },
            [](const RunConfig& c) {
              return c.transition.realization ? std::to_string(*c.transition.realization) : std::string("none");
            }},

      FS_INT("classical", "samples", classical.samples, std::int64_t, "phase-space samples"),
      FS_INT("classical", "chunk_size", classical.chunk_size, std::int64_t, "samples per random substream"),
      FS_DOUBLE("classical", "rel_tol", classical.rel_tol, "integrator relative tolerance for sampling"),
      FS_DOUBLE("classical", "abs_tol", classical.abs_tol, "integrator absolute tolerance for sampling"),

      FS_DOUBLE("shooting", "residual_tol", shooting.residual_tol, "Newton residual tolerance"),
      FS_INT("shooting", "max_newton_iter", shooting.max_newton_iter, int, "Newton iteration cap"),
      FS_INT("shooting", "multistart_count", shooting.multistart_count, int, "number of Newton seeds"),
      FS_DOUBLE("shooting", "damping", shooting.damping, "backtracking factor of the line search"),
      FS_DOUBLE("shooting", "dedup_distance", shooting.dedup_distance, "duplicate threshold in unknown space"),
      FS_DOUBLE("shooting", "caustic_tolerance", shooting.caustic_tolerance, "caustic flag threshold"),

      FS_DOUBLE("integrator", "rel_tol", integrator.rel_tol, "relative tolerance for trajectories"),
      FS_DOUBLE("integrator", "abs_tol", integrator.abs_tol, "absolute tolerance for trajectories"),
      FS_DOUBLE("integrator", "max_step", integrator.max_step, "largest step, 0 = unlimited"),
      FS_INT("integrator", "max_steps", integrator.max_steps, std::int64_t, "step budget per integration"),
      FS_DOUBLE("integrator", "sample_stride", integrator.sample_stride, "path sampling interval, 0 = every step"),

      Field{{"trajectory", "kind", "fock|quadrature", "boundary-value problem to solve"},
            [](RunConfig& c, const std::string& v) {
              try {
                c.trajectory.kind = trajectory_kind_from_string(trim(v));
              } catch (const std::exception&) {
                throw ConfigError("kind must be fock or quadrature, got '" + trim(v) + "'");
              }
            },
            [](const RunConfig& c) { return to_string(c.trajectory.kind); }},
      FS_DOUBLE("trajectory", "t", trajectory.t, "final time"),
      FS_DOUBLE("trajectory", "b", trajectory.b, "quadrature scale b"),
      Field{{"trajectory", "q_initial", "float list", "initial quadratures (quadrature kind)"},
            [](RunConfig& c, const std::string& v) { c.trajectory.q_initial = parse_doubles(v); },
            [](const RunConfig& c) { return format_doubles(c.trajectory.q_initial); }},
      Field{{"trajectory", "q_final", "float list", "final quadratures (quadrature kind)"},
            [](RunConfig& c, const std::string& v) { c.trajectory.q_final = parse_doubles(v); },
            [](const RunConfig& c) { return format_doubles(c.trajectory.q_final); }},

      Field{{"cbs", "initial", "int list", "initial Fock state n_i"},
            [](RunConfig& c, const std::string& v) { c.cbs.initial = parse_state(v); },
            [](const RunConfig& c) { return format_state(c.cbs.initial); }},
      Field{{"cbs", "times", "float list", "evolution times, strictly ascending"},
            [](RunConfig& c, const std::string& v) { c.cbs.times = parse_doubles(v); },
            [](const RunConfig& c) { return format_doubles(c.cbs.times); }},
      FS_INT("cbs", "mc_samples", cbs.mc_samples, std::int64_t, "classical samples per realization"),
      Field{{"cbs", "flux", "float|none", "ring flux per bond replacing model.flux_per_bond"},
            [](RunConfig& c, const std::string& v) { c.cbs.flux = parse_optional_double(v); },
            [](const RunConfig& c) { return c.cbs.flux ? format_double(*c.cbs.flux) : std::string("none"); }},
      FS_INT("cbs", "bootstrap", cbs.bootstrap, int, "bootstrap resamples, at least 200"),
      FS_INT("cbs", "transfer_states", cbs.transfer_states, int, "size of the transfer aggregate"),
      FS_INT("cbs", "dimension_cap", cbs.dimension_cap, std::int64_t, "largest Hilbert dimension"),
      FS_DOUBLE("cbs", "rel_tol", cbs.rel_tol, "integrator relative tolerance for sampling"),
      FS_DOUBLE("cbs", "abs_tol", cbs.abs_tol, "integrator absolute tolerance for sampling"),

      FS_DOUBLE("validate", "horizon", validate.horizon, "mean-field time for drift checks"),
      FS_INT("validate", "samples", validate.samples, std::int64_t, "classical samples for the sum-rule check"),
  };
  return table;
}

#undef FS_DOUBLE
#undef FS_INT

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const Field& f : fields()) out.push_back(f.meta);
    return out;
  }();
  return keys;
}

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  std::set<std::string> sections;
  for (const Field& f : fields()) sections.insert(f.meta.section);

  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (!sections.count(section)) {
      if (body.empty()) throw ConfigError("config: key '" + section + "' outside any section");
      throw ConfigError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      const Field* match = nullptr;
      for (const Field& f : fields())
        if (f.meta.section == section && f.meta.key == key) match = &f;
      if (!match) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
      try {
        match->set(cfg, value.data());
      } catch (const ConfigError& e) {
        throw ConfigError("config: [" + section + "] " + key + ": " + e.what());
      }
    }
  }
  if (cfg.run.threads < 1) throw ConfigError("config: [run] threads must be positive");
  if (cfg.model.sites < 1) throw ConfigError("config: [model] sites must be positive");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_ini(const RunConfig& config) {
  std::string out, section;
  for (const Field& f : fields()) {
    if (f.meta.section != section) {
      section = f.meta.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += f.meta.key + " = " + f.get(config) + "\n";
  }
  return out;
}

BoseHubbardModel model_from_config(const RunConfig& config) {
  BoseHubbardModel model = build_model(config.model);
  if (!config.transition.realization) return model;
  DisorderSpec spec{config.disorder.width, config.disorder.distribution, config.run.seed, config.disorder.realizations};
  return sample_disorder(model, spec, *config.transition.realization);
}

ShootingConfig shooting_from_config(const RunConfig& config) {
  ShootingConfig s;
  s.residual_tol = config.shooting.residual_tol;
  s.max_newton_iter = config.shooting.max_newton_iter;
  s.multistart_count = config.shooting.multistart_count;
  s.damping = config.shooting.damping;
  s.dedup_distance = config.shooting.dedup_distance;
  s.caustic_tolerance = config.shooting.caustic_tolerance;
  s.seed = config.run.seed;
  s.threads = config.run.threads;
  s.integrator.rel_tol = config.integrator.rel_tol;
  s.integrator.abs_tol = config.integrator.abs_tol;
  s.integrator.max_step =
      config.integrator.max_step > 0.0 ? config.integrator.max_step : std::numeric_limits<double>::infinity();
  s.integrator.max_steps = config.integrator.max_steps;
  s.integrator.dense_output_stride = config.integrator.sample_stride;
  s.quadrature.b = config.trajectory.b;
  return s;
}

ClassicalSamplingOptions sampling_from_config(const RunConfig& config) {
  ClassicalSamplingOptions o;
  o.chunk_size = config.classical.chunk_size;
  o.threads = config.run.threads;
  o.integrator.rel_tol = config.classical.rel_tol;
  o.integrator.abs_tol = config.classical.abs_tol;
  return o;
}

CbsExperimentConfig cbs_from_config(const RunConfig& config) {
  CbsExperimentConfig c;
  c.model = config.model;
  c.disorder = DisorderSpec{config.disorder.width, config.disorder.distribution, config.run.seed,
                            config.disorder.realizations};
  c.n_i = config.cbs.initial;
  c.times = config.cbs.times;
  c.mc_samples = config.cbs.mc_samples;
  c.trs_breaking = config.cbs.flux;
  c.master_seed = config.run.seed;
  c.threads = config.run.threads;
  c.bootstrap_resamples = config.cbs.bootstrap;
  c.transfer_states = config.cbs.transfer_states;
  c.dimension_cap = config.cbs.dimension_cap;
  c.sampling.integrator.rel_tol = config.cbs.rel_tol;
  c.sampling.integrator.abs_tol = config.cbs.abs_tol;
  return c;
}

}  // namespace fockscatter
