#include "fockscatter/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "fockscatter/cbs.hpp"
#include "fockscatter/config.hpp"
#include "fockscatter/semiclassics.hpp"
#include "fockscatter/trajectory.hpp"
#include "fockscatter/validation.hpp"

namespace fockscatter {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: OpenSSL digest failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
  return hex.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

namespace {

template <class T>
void append_raw(std::string& s, const T& v) {
  s.append(reinterpret_cast<const char*>(&v), sizeof v);
}

}  // namespace

std::string model_checksum(const BoseHubbardModel& model, const FockBasis& basis) {
  std::string bytes = "fockscatter-hamiltonian-1";
  append_raw(bytes, static_cast<std::int64_t>(basis.sites()));
  append_raw(bytes, static_cast<std::int64_t>(basis.particles()));
  append_raw(bytes, model.hbar());
  const Eigen::MatrixXcd& h = model.hopping();
  for (Eigen::Index j = 0; j < h.cols(); ++j)
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      append_raw(bytes, h(i, j).real());
      append_raw(bytes, h(i, j).imag());
    }
  const Eigen::VectorXd& u = model.interaction().onsite();
  for (Eigen::Index l = 0; l < u.size(); ++l) append_raw(bytes, u(l));
  for (const auto& [idx, v] : model.interaction().general()) {
    for (int k : idx) append_raw(bytes, static_cast<std::int32_t>(k));
    append_raw(bytes, v);
  }
  return sha256_hex(bytes);
}

SparseHamiltonian cached_hamiltonian(const BoseHubbardModel& model, const FockBasis& basis) {
  const char* dir = std::getenv("FOCKSCATTER_CACHE");
  if (!dir || !*dir) return build_hamiltonian(model, basis);
  const fs::path path = fs::path(dir) / ("h_" + model_checksum(model, basis) + ".bin");
  constexpr char kMagic[4] = {'F', 'S', 'H', '1'};
  {
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {};
    std::int64_t dim = 0, nnz = 0;
    if (in.read(magic, 4) && std::memcmp(magic, kMagic, 4) == 0 && in.read(reinterpret_cast<char*>(&dim), 8) &&
        in.read(reinterpret_cast<char*>(&nnz), 8) && dim == basis.size() && nnz >= 0) {
      std::vector<Eigen::Triplet<cplx>> triplets;
      triplets.reserve(static_cast<std::size_t>(nnz));
      bool ok = true;
      for (std::int64_t k = 0; k < nnz && ok; ++k) {
        std::int64_t r = 0, c = 0;
        double re = 0.0, im = 0.0;
        ok = static_cast<bool>(in.read(reinterpret_cast<char*>(&r), 8) && in.read(reinterpret_cast<char*>(&c), 8) &&
                               in.read(reinterpret_cast<char*>(&re), 8) && in.read(reinterpret_cast<char*>(&im), 8));
        ok = ok && r >= 0 && r < dim && c >= 0 && c < dim;
        if (ok) triplets.emplace_back(r, c, cplx(re, im));
      }
      if (ok) {
        SparseHamiltonian h(dim, dim);
        h.setFromTriplets(triplets.begin(), triplets.end());
        return h;
      }
    }
  }
  SparseHamiltonian h = build_hamiltonian(model, basis);
  h.makeCompressed();
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream outf(tmp, std::ios::binary);
    if (!outf) return h;  // cache is best effort
    const std::int64_t dim = h.rows(), nnz = h.nonZeros();
    outf.write(kMagic, 4);
    outf.write(reinterpret_cast<const char*>(&dim), 8);
    outf.write(reinterpret_cast<const char*>(&nnz), 8);
    for (Eigen::Index j = 0; j < h.outerSize(); ++j)
      for (SparseHamiltonian::InnerIterator it(h, j); it; ++it) {
        const std::int64_t r = it.row(), c = it.col();
        const double re = it.value().real(), im = it.value().imag();
        outf.write(reinterpret_cast<const char*>(&r), 8);
        outf.write(reinterpret_cast<const char*>(&c), 8);
        outf.write(reinterpret_cast<const char*>(&re), 8);
        outf.write(reinterpret_cast<const char*>(&im), 8);
      }
  }
  fs::rename(tmp, path, ec);
  return h;
}

namespace {

struct Outcome {
  int code = kExitOk;
  std::vector<std::string> files;  // names relative to the output directory
};

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void check_state(const FockState& n, int sites, const char* what) {
  if (static_cast<int>(n.size()) != sites)
    throw ConfigError(std::string(what) + " has " + std::to_string(n.size()) + " entries for " +
                      std::to_string(sites) + " sites");
}

void check_times(const std::vector<double>& times) {
  if (times.empty()) throw ConfigError("[transition] times is empty");
  for (std::size_t k = 0; k < times.size(); ++k)
    if (times[k] < 0.0 || (k > 0 && times[k] < times[k - 1]))
      throw ConfigError("[transition] times must be non-negative and ascending");
}

std::vector<FockState> final_states(const RunConfig& cfg, const FockBasis& basis) {
  if (cfg.transition.final.empty()) return basis.states();
  for (const FockState& n : cfg.transition.final) check_state(n, basis.sites(), "[transition] final");
  return cfg.transition.final;
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  return out;
}

// Exact probabilities |<n_f|U(t)|n_i>|^2, column per time.
Eigen::MatrixXd exact_columns(const BoseHubbardModel& model, const FockBasis& basis, const FockState& n_i,
                              const std::vector<double>& times) {
  const SparseHamiltonian h = cached_hamiltonian(model, basis);
  const std::int64_t home = basis.index(n_i);
  Eigen::MatrixXd p(basis.size(), static_cast<Eigen::Index>(times.size()));
  std::optional<SpectralPropagator> spectral;
  if (basis.size() <= 2000) spectral.emplace(h, model.hbar());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    if (times[k] == 0.0) {
      p.col(col).setZero();
      p(home, col) = 1.0;
    } else if (spectral) {
      p.col(col) = spectral->probabilities_from(home, times[k]);
    } else {
      p.col(col) = evolve(fock_state_vector(basis, n_i), h, model.hbar(), times[k]).cwiseAbs2();
    }
  }
  return p;
}

Outcome cmd_exact(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
  const BoseHubbardModel model = model_from_config(cfg);
  check_state(cfg.transition.initial, model.sites(), "[transition] initial");
  check_times(cfg.transition.times);
  const FockBasis basis(model.sites(), total_particles(cfg.transition.initial));
  const Eigen::MatrixXd p = exact_columns(model, basis, cfg.transition.initial, cfg.transition.times);
  std::vector<TransitionRecord> records;
  for (std::size_t k = 0; k < cfg.transition.times.size(); ++k)
    for (const FockState& n_f : final_states(cfg, basis)) {
      TransitionRecord r{cfg.transition.initial, n_f, cfg.transition.times[k], {}};
      r.estimate.method = EstimateMethod::exact;
      if (const auto pos = basis.find(n_f))
        r.estimate.value = p(*pos, static_cast<Eigen::Index>(k));
      else
        r.estimate.note = "particle number differs";
      records.push_back(std::move(r));
    }
  auto f = open_output(dir, "transitions.tsv");
  write_transition_records(f, records);
  out << "exact: " << records.size() << " records, dimension " << basis.size() << "\n";
  return {kExitOk, {"transitions.tsv"}};
}

Outcome cmd_classical(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
  const BoseHubbardModel model = model_from_config(cfg);
  check_state(cfg.transition.initial, model.sites(), "[transition] initial");
  check_times(cfg.transition.times);
  const ClassicalDistribution dist = classical_distribution(model, cfg.transition.initial, cfg.transition.times,
                                                            cfg.classical.samples, cfg.run.seed,
                                                            sampling_from_config(cfg));
  std::vector<TransitionRecord> records;
  for (EstimateMethod method : {EstimateMethod::classical_mc, EstimateMethod::diagonal})
    for (std::size_t k = 0; k < cfg.transition.times.size(); ++k)
      for (const FockState& n_f : final_states(cfg, dist.basis))
        records.push_back({cfg.transition.initial, n_f, cfg.transition.times[k], dist.estimate(k, n_f, method)});
  auto f = open_output(dir, "transitions.tsv");
  f << "# samples=" << dist.samples << " discarded=" << dist.discarded << "\n";
  for (std::size_t k = 0; k < dist.times.size(); ++k)
    f << "# out_of_basis t=" << dist.times[k] << ": " << dist.out_of_basis[k] << "\n";
  write_transition_records(f, records);
  out << "classical: " << dist.samples << " samples, " << dist.discarded << " discarded\n";
  return {kExitOk, {"transitions.tsv"}};
}

Outcome cmd_semiclassical(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
  const BoseHubbardModel model = model_from_config(cfg);
  check_state(cfg.transition.initial, model.sites(), "[transition] initial");
  check_times(cfg.transition.times);
  const FockBasis basis(model.sites(), total_particles(cfg.transition.initial));
  const Eigen::MatrixXd p = exact_columns(model, basis, cfg.transition.initial, cfg.transition.times);
  const ShootingConfig shooting = shooting_from_config(cfg);
  std::vector<TransitionRecord> records;
  int empty = 0;
  for (std::size_t k = 0; k < cfg.transition.times.size(); ++k) {
    const double t = cfg.transition.times[k];
    for (const FockState& n_f : final_states(cfg, basis)) {
      const auto pos = basis.find(n_f);
      TransitionEstimate sc, sum, ex;
      sc.method = EstimateMethod::semiclassical;
      sum.method = EstimateMethod::trajectory_sum;
      ex.method = EstimateMethod::exact;
      if (!pos) {
        sc.note = sum.note = ex.note = "particle number differs";
      } else if (t == 0.0) {
        sc.note = sum.note = "zero time: no boundary-value problem";
        ex.value = p(*pos, static_cast<Eigen::Index>(k));
      } else {
        const SemiclassicalAmplitude amp = propagator_fock_semiclassical(model, cfg.transition.initial, n_f, t, shooting);
        sc.value = std::norm(amp.amplitude);
        sc.family_count = sum.family_count = amp.family_count;
        sc.caustic_count = sum.caustic_count = amp.caustic_count;
        for (const Trajectory& traj : amp.families)
          if (!traj.caustic) sum.value += std::norm(traj.prefactor);
        if (amp.no_trajectory) {
          sc.note = sum.note = "no-trajectory";
          ++empty;
        }
        ex.value = p(*pos, static_cast<Eigen::Index>(k));
      }
      for (const TransitionEstimate& e : {sc, sum, ex}) records.push_back({cfg.transition.initial, n_f, t, e});
    }
  }
  auto f = open_output(dir, "transitions.tsv");
  write_transition_records(f, records);
  out << "semiclassical: " << records.size() / 3 << " transitions, " << empty << " without trajectories\n";
  return {kExitOk, {"transitions.tsv"}};
}

Outcome cmd_trajectory(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
  const BoseHubbardModel model = model_from_config(cfg);
  const int L = model.sites();
  const ShootingConfig shooting = shooting_from_config(cfg);
  const TimeSpan span{0.0, cfg.trajectory.t};
  ShootingResult shot;
  if (cfg.trajectory.kind == TrajectoryKind::fock) {
    check_state(cfg.transition.initial, L, "[transition] initial");
    if (cfg.transition.final.empty()) throw ConfigError("trajectory: [transition] final must name a state");
    check_state(cfg.transition.final.front(), L, "[transition] final");
    shot = shoot_fock(model, cfg.transition.initial, cfg.transition.final.front(), span, shooting);
  } else {
    if (static_cast<int>(cfg.trajectory.q_initial.size()) != L || static_cast<int>(cfg.trajectory.q_final.size()) != L)
      throw ConfigError("trajectory: q_initial and q_final need one entry per site");
    const Eigen::VectorXd qi = Eigen::Map<const Eigen::VectorXd>(cfg.trajectory.q_initial.data(), L);
    const Eigen::VectorXd qf = Eigen::Map<const Eigen::VectorXd>(cfg.trajectory.q_final.data(), L);
    shot = shoot_quadrature(model, qi, qf, span, shooting);
  }
  Outcome res;
  auto summary = open_output(dir, "summary.tsv");
  const ShootingDiagnostics& d = shot.diagnostics;
  summary << "# seeds=" << d.seeds << " converged=" << d.converged << " duplicates=" << d.duplicates
          << " diverged=" << d.diverged << " integration_failures=" << d.integration_failures
          << " caustics=" << d.caustics << (d.message.empty() ? "" : " message=" + d.message) << "\n";
  summary << "# action in units of hbar; energy in units of J\n";
  summary << "# index\tkind\taction\tenergy\tprefactor_re\tprefactor_im\tmaslov\tcaustic\tresidual\tnewton_iterations\n";
  summary << std::setprecision(17);
  res.files.push_back("summary.tsv");
  for (std::size_t k = 0; k < shot.trajectories.size(); ++k) {
    const Trajectory& traj = shot.trajectories[k];
    std::ostringstream name;
    name << "trajectory_" << std::setw(3) << std::setfill('0') << k << ".txt";
    auto f = open_output(dir, name.str());
    write_trajectory(f, traj);
    res.files.push_back(name.str());
    summary << k << '\t' << to_string(traj.kind) << '\t' << traj.action << '\t' << traj.energy << '\t'
            << traj.prefactor.real() << '\t' << traj.prefactor.imag() << '\t' << traj.maslov << '\t'
            << (traj.caustic ? 1 : 0) << '\t' << traj.residual << '\t' << traj.newton_iterations << '\n';
  }
  out << "trajectory: " << shot.trajectories.size() << " solutions"
      << (d.message.empty() ? "" : " (" + d.message + ")") << "\n";
  return res;
}

Outcome cmd_cbs(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
  const CbsExperimentConfig c = cbs_from_config(cfg);
  const CbsResult result = run_cbs_experiment(c);
  {
    auto f = open_output(dir, "cbs.tsv");
    write_cbs_results(f, result);
  }
  auto f = open_output(dir, "cbs_details.tsv");
  f << "# trs=" << (result.trs ? 1 : 0) << " dimension=" << result.dimension
    << " classical_samples=" << result.classical_samples << " discarded=" << result.discarded
    << (result.note.empty() ? "" : " note=" + result.note) << "\n";
  f << "# t\treturn_exact_spread\tout_of_basis\ttransfer_states\n" << std::setprecision(17);
  std::optional<double> crossing;
  for (const CbsTimeResult& tr : result.times) {
    f << tr.t << '\t' << tr.return_exact_spread << '\t' << tr.out_of_basis << '\t';
    for (std::size_t k = 0; k < tr.transfer_set.size(); ++k) {
      if (k) f << ';';
      for (std::size_t l = 0; l < tr.transfer_set[k].size(); ++l) f << (l ? "," : "") << tr.transfer_set[k][l];
    }
    f << '\n';
    if (!crossing && tr.return_state.ratio > 1.5) crossing = tr.t;
  }
  out << "cbs: " << result.realizations << " realizations, trs=" << (result.trs ? "yes" : "no") << "\n";
  for (const CbsTimeResult& tr : result.times)
    out << "  t=" << tr.t << " return ratio " << tr.return_state.ratio << " [" << tr.return_state.ci_low << ", "
        << tr.return_state.ci_high << "], transfer ratio " << tr.transfer.ratio << "\n";
  out << "  return ratio first above 1.5 at t=" << (crossing ? std::to_string(*crossing) : std::string("none")) << "\n";
  return {kExitOk, {"cbs.tsv", "cbs_details.tsv"}};
}

Outcome cmd_validate(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
  const std::vector<CheckResult> checks = run_validation_suite(cfg);
  auto f = open_output(dir, "validate.tsv");
  f << "# check\tvalue\tthreshold\tstatus\tnote\n" << std::setprecision(6);
  int failed = 0;
  for (const CheckResult& c : checks) {
    const char* status = c.skipped ? "skip" : (c.passed ? "pass" : "fail");
    f << c.name << '\t' << c.value << '\t' << c.threshold << '\t' << status << '\t' << c.note << '\n';
    out << "  " << status << "  " << c.name << " " << c.value << (c.note.empty() ? "" : " (" + c.note + ")") << "\n";
    failed += !c.passed;
  }
  out << "validate: " << checks.size() - failed << "/" << checks.size() << " passed\n";
  return {failed ? kExitValidationFailed : kExitOk, {"validate.tsv"}};
}

RunConfig read_config_argument(const std::string& path) {
  if (path.empty()) return RunConfig{};
  if (fs::path(path).extension() == ".json") {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    nlohmann::json manifest;
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("manifest " + path + ": " + e.what());
    }
    if (!manifest.contains("config") || !manifest["config"].is_string())
      throw ConfigError("manifest " + path + ": missing resolved config");
    return parse_config(manifest["config"].get<std::string>());
  }
  return load_config(path);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semiclassical and exact Bose-Hubbard propagation in Fock space", "fockscatter"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "INI config file, or a manifest.json to replay");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "override [run] seed");
  app.add_option("--threads", threads, "worker threads; does not change results")->check(CLI::PositiveNumber);

  using Command = Outcome (*)(const RunConfig&, const fs::path&, std::ostream&);
  const std::vector<std::pair<std::string, std::pair<std::string, Command>>> commands = {
      {"exact", {"exact transition probabilities", cmd_exact}},
      {"classical", {"classical (sum-rule) Monte Carlo probabilities", cmd_classical}},
      {"trajectory", {"shoot boundary-value solutions and dump them", cmd_trajectory}},
      {"semiclassical", {"semiclassical propagator with exact comparison", cmd_semiclassical}},
      {"cbs", {"disorder-averaged backscattering experiment", cmd_cbs}},
      {"validate", {"invariant suite on the configured model", cmd_validate}},
  };
  for (const auto& [name, info] : commands) app.add_subcommand(name, info.first);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg = read_config_argument(config_path);
    if (seed) cfg.run.seed = *seed;
    if (threads) cfg.run.threads = *threads;
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    const std::string started = utc_now();
    Command command = nullptr;
    for (const auto& [n, info] : commands)
      if (n == name) command = info.second;
    const Outcome outcome = command(cfg, dir, out);

    nlohmann::ordered_json manifest;
    manifest["artifact"] = "fockscatter";
    manifest["version"] = kVersion;
    manifest["subcommand"] = name;
    manifest["config"] = to_ini(cfg);
    manifest["seed"] = cfg.run.seed;
    manifest["threads"] = cfg.run.threads;
    manifest["started"] = started;
    manifest["finished"] = utc_now();
    manifest["exit_code"] = outcome.code;
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (const std::string& f : outcome.files) files[f] = "sha256:" + sha256_file((dir / f).string());
    manifest["files"] = files;
    std::ofstream m(dir / "manifest.json");
    m << manifest.dump(2) << "\n";
    if (!m) throw std::runtime_error("cannot write manifest");
    return outcome.code;
  } catch (const std::exception& e) {
    err << "fockscatter " << name << ": " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace fockscatter
