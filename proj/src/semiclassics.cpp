#include "fockscatter/semiclassics.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fockscatter/parallel.hpp"
#include "fockscatter/random.hpp"

namespace fockscatter {

namespace {

constexpr const char* kMethodNames[] = {"exact", "classical-MC", "semiclassical", "diagonal", "trajectory-sum"};

void check_pair(const BoseHubbardModel& model, const FockState& n_i, const FockState& n_f) {
  const auto L = static_cast<std::size_t>(model.sites());
  if (n_i.size() != L || n_f.size() != L) throw std::invalid_argument("occupation vector length differs from sites");
  for (std::size_t l = 0; l < L; ++l)
    if (n_i[l] < 0 || n_f[l] < 0) throw std::invalid_argument("negative occupation");
}

}  // namespace

std::string to_string(EstimateMethod m) { return kMethodNames[static_cast<int>(m)]; }

EstimateMethod estimate_method_from_string(const std::string& s) {
  for (int k = 0; k < 5; ++k)
    if (s == kMethodNames[k]) return static_cast<EstimateMethod>(k);
  throw std::invalid_argument("unknown estimate method: " + s);
}

SemiclassicalAmplitude propagator_fock_semiclassical(const BoseHubbardModel& model, const FockState& n_i,
                                                     const FockState& n_f, double t, const ShootingConfig& cfg) {
  check_pair(model, n_i, n_f);
  SemiclassicalAmplitude out;
  if (total_particles(n_i) != total_particles(n_f)) {
    out.no_trajectory = true;
    out.diagnostics.message = "particle number not conserved";
    return out;
  }
  ShootingResult shot = shoot_fock(model, n_i, n_f, TimeSpan{0.0, t}, cfg);
  out.diagnostics = shot.diagnostics;
  for (const Trajectory& traj : shot.trajectories) {
    if (traj.caustic) {
      ++out.caustic_count;
    } else {
      ++out.family_count;
      out.amplitude += traj.prefactor * std::exp(cplx(0.0, traj.action / traj.hbar));
    }
  }
  out.no_trajectory = shot.trajectories.empty();
  out.families = std::move(shot.trajectories);
  return out;
}

TransitionEstimate semiclassical_probability(const BoseHubbardModel& model, const FockState& n_i, const FockState& n_f,
                                             double t, const ShootingConfig& cfg) {
  const SemiclassicalAmplitude k = propagator_fock_semiclassical(model, n_i, n_f, t, cfg);
  TransitionEstimate est;
  est.method = EstimateMethod::semiclassical;
  est.value = std::norm(k.amplitude);
  est.family_count = k.family_count;
  est.caustic_count = k.caustic_count;
  if (k.no_trajectory)
    est.note = k.diagnostics.message.empty() ? "no trajectory" : k.diagnostics.message;
  else if (k.family_count == 0)
    est.note = "all families caustic";
  return est;
}

TransitionEstimate diagonal_trajectory_sum(const BoseHubbardModel& model, const FockState& n_i, const FockState& n_f,
                                           double t, const ShootingConfig& cfg) {
  const SemiclassicalAmplitude k = propagator_fock_semiclassical(model, n_i, n_f, t, cfg);
  TransitionEstimate est;
  est.method = EstimateMethod::trajectory_sum;
  est.family_count = k.family_count;
  est.caustic_count = k.caustic_count;
  // |prefactor|^2 = (2 pi)^-(L-1) / |det B|
  for (const Trajectory& traj : k.families)
    if (!traj.caustic) est.value += std::norm(traj.prefactor);
  if (k.no_trajectory) est.note = k.diagnostics.message.empty() ? "no trajectory" : k.diagnostics.message;
  return est;
}

TransitionEstimate ClassicalDistribution::estimate(std::size_t k, const FockState& n_f, EstimateMethod method) const {
  if (k >= probabilities.size()) throw std::out_of_range("time index out of range");
  TransitionEstimate est;
  est.method = method;
  est.samples = samples;
  if (method == EstimateMethod::diagonal) est.note = kDiagonalNote;
  const auto pos = basis.find(n_f);
  if (!pos) {
    if (!est.note.empty()) est.note += "; ";
    est.note += "final state outside the fixed-N basis";
    return est;
  }
  const double p = probabilities[k](*pos);
  est.value = p;
  est.stderr_ = samples > 0 ? std::sqrt(p * (1.0 - p) / static_cast<double>(samples)) : 0.0;
  return est;
}

ClassicalDistribution classical_distribution(const BoseHubbardModel& model, const FockState& n_i,
                                             const std::vector<double>& times, std::int64_t sample_count,
                                             std::uint64_t seed, const ClassicalSamplingOptions& opts) {
  const int L = model.sites();
  if (static_cast<int>(n_i.size()) != L) throw std::invalid_argument("occupation vector length differs from sites");
  if (sample_count <= 0) throw std::invalid_argument("sample_count must be positive");
  if (opts.chunk_size <= 0) throw std::invalid_argument("chunk_size must be positive");
  for (std::size_t k = 0; k < times.size(); ++k)
    if (times[k] < 0.0 || (k > 0 && times[k] < times[k - 1]))
      throw std::invalid_argument("times must be non-negative and ascending");

  const int N = total_particles(n_i);
  ClassicalDistribution out{FockBasis(L, N), times, {}, {}, 0, 0};
  const std::size_t T = times.size();
  const auto D = static_cast<std::size_t>(out.basis.size());

  std::vector<std::vector<std::int64_t>> counts(T, std::vector<std::int64_t>(D, 0));
  std::vector<std::int64_t> outside(T, 0);
  std::int64_t good = 0, bad = 0;
  std::mutex merge;

  Eigen::VectorXd amplitude(L);
  for (int l = 0; l < L; ++l) amplitude(l) = std::sqrt(n_i[static_cast<std::size_t>(l)] + 0.5);

  const std::int64_t chunks = (sample_count + opts.chunk_size - 1) / opts.chunk_size;
  parallel_for(chunks, opts.threads, [&](std::int64_t c) {
    Stream rng(substream_seed(seed, stream_tag::monte_carlo, static_cast<std::uint64_t>(c)));
    const std::int64_t begin = c * opts.chunk_size;
    const std::int64_t end = std::min(sample_count, begin + opts.chunk_size);
    std::vector<std::vector<std::int64_t>> local(T, std::vector<std::int64_t>(D, 0));
    std::vector<std::int64_t> local_out(T, 0);
    std::int64_t local_good = 0, local_bad = 0;
    FockState n_f(static_cast<std::size_t>(L));
    ClassicalField psi(L);
    for (std::int64_t s = begin; s < end; ++s) {
      psi(0) = std::polar(amplitude(0), opts.phase_offset);
      for (int l = 1; l < L; ++l)
        psi(l) = std::polar(amplitude(l), opts.phase_offset + 2.0 * std::numbers::pi * rng.uniform());
      std::vector<ClassicalField> path;
      try {
        path = integrate_to_times(model, psi, 0.0, times, opts.integrator);
      } catch (const IntegrationError&) {
        ++local_bad;
        continue;
      }
      ++local_good;
      for (std::size_t k = 0; k < T; ++k) {
        int rest = N;
        bool valid = true;
        for (int l = 1; l < L; ++l) {
          const double occ = std::norm(path[k](l));
          // floor(|psi|^2) is the nearest integer to |psi|^2 - 1/2, ties upward
          const double bin = std::floor(occ);
          if (!(bin <= N)) {
            valid = false;
            break;
          }
          n_f[static_cast<std::size_t>(l)] = static_cast<int>(bin);
          rest -= static_cast<int>(bin);
        }
        if (!valid || rest < 0) {
          ++local_out[k];
          continue;
        }
        n_f[0] = rest;
        ++local[k][static_cast<std::size_t>(out.basis.index(n_f))];
      }
    }
    std::lock_guard<std::mutex> lock(merge);
    for (std::size_t k = 0; k < T; ++k) {
      for (std::size_t j = 0; j < D; ++j) counts[k][j] += local[k][j];
      outside[k] += local_out[k];
    }
    good += local_good;
    bad += local_bad;
  });

  out.samples = good;
  out.discarded = bad;
  if (static_cast<double>(bad) > opts.max_discard_fraction * static_cast<double>(sample_count)) {
    std::ostringstream msg;
    msg << "classical sampling discarded " << bad << " of " << sample_count
        << " samples after integration failures (limit " << opts.max_discard_fraction * 100.0 << "%)";
    throw std::runtime_error(msg.str());
  }
  const double norm = good > 0 ? 1.0 / static_cast<double>(good) : 0.0;
  out.probabilities.resize(T);
  out.out_of_basis.resize(T);
  for (std::size_t k = 0; k < T; ++k) {
    out.probabilities[k].resize(static_cast<Eigen::Index>(D));
    for (std::size_t j = 0; j < D; ++j) out.probabilities[k](static_cast<Eigen::Index>(j)) = counts[k][j] * norm;
    out.out_of_basis[k] = outside[k] * norm;
  }
  return out;
}

namespace {

std::vector<SelectedEstimate> select(const ClassicalDistribution& dist, const FockSelector& selector,
                                     EstimateMethod method) {
  std::vector<SelectedEstimate> out;
  for (const FockState& n_f : dist.basis.states())
    if (!selector || selector(n_f)) out.push_back({n_f, dist.estimate(0, n_f, method)});
  if (dist.out_of_basis[0] > 0.0)
    for (auto& e : out) {
      std::ostringstream note;
      note << (e.estimate.note.empty() ? "" : e.estimate.note + "; ") << "out_of_basis=" << dist.out_of_basis[0];
      e.estimate.note = note.str();
    }
  return out;
}

}  // namespace

std::vector<SelectedEstimate> classical_transition_probability(const BoseHubbardModel& model, const FockState& n_i,
                                                               const FockSelector& selector, double t,
                                                               std::int64_t sample_count, std::uint64_t seed,
                                                               const ClassicalSamplingOptions& opts) {
  const ClassicalDistribution dist = classical_distribution(model, n_i, {t}, sample_count, seed, opts);
  return select(dist, selector, EstimateMethod::classical_mc);
}

std::vector<SelectedEstimate> diagonal_approximation(const BoseHubbardModel& model, const FockState& n_i,
                                                     const FockSelector& selector, double t,
                                                     std::int64_t sample_count, std::uint64_t seed,
                                                     const ClassicalSamplingOptions& opts) {
  const ClassicalDistribution dist = classical_distribution(model, n_i, {t}, sample_count, seed, opts);
  return select(dist, selector, EstimateMethod::diagonal);
}

namespace {

constexpr const char* kRecordHeader =
    "# n_i\tn_f\tt\tmethod\tvalue\tstderr\tsamples\tfamily_count\tcaustic_count\tnote";

std::string join_state(const FockState& n) {
  std::string s;
  for (std::size_t l = 0; l < n.size(); ++l) {
    if (l) s += ',';
    s += std::to_string(n[l]);
  }
  return s;
}

FockState parse_state(const std::string& s) {
  FockState n;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw std::runtime_error("bad occupation entry: " + item);
    n.push_back(v);
  }
  if (n.empty()) throw std::runtime_error("empty occupation vector");
  return n;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("bad number: " + s);
  return v;
}

}  // namespace

void write_transition_records(std::ostream& out, const std::vector<TransitionRecord>& records) {
  out << "# t in units of hbar/J; value and stderr are probabilities\n";
  out << kRecordHeader << '\n';
  out << std::setprecision(17);
  for (const TransitionRecord& r : records) {
    std::string note = r.estimate.note;
    for (char& ch : note)
      if (ch == '\t' || ch == '\n') ch = ' ';
    out << join_state(r.n_i) << '\t' << join_state(r.n_f) << '\t' << r.t << '\t' << to_string(r.estimate.method)
        << '\t' << r.estimate.value << '\t' << r.estimate.stderr_ << '\t' << r.estimate.samples << '\t'
        << r.estimate.family_count << '\t' << r.estimate.caustic_count << '\t' << note << '\n';
  }
}

std::vector<TransitionRecord> read_transition_records(std::istream& in) {
  std::vector<TransitionRecord> records;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line == kRecordHeader) header = true;
      continue;
    }
    if (!header) throw std::runtime_error("transition records: missing column header");
    std::vector<std::string> cols;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, '\t')) cols.push_back(cell);
    if (cols.size() == 9) cols.emplace_back();  // empty note
    if (cols.size() != 10) throw std::runtime_error("transition records: expected 10 columns in: " + line);
    try {
      TransitionRecord r;
      r.n_i = parse_state(cols[0]);
      r.n_f = parse_state(cols[1]);
      r.t = parse_double(cols[2]);
      r.estimate.method = estimate_method_from_string(cols[3]);
      r.estimate.value = parse_double(cols[4]);
      r.estimate.stderr_ = parse_double(cols[5]);
      r.estimate.samples = std::stoll(cols[6]);
      r.estimate.family_count = std::stoi(cols[7]);
      r.estimate.caustic_count = std::stoi(cols[8]);
      r.estimate.note = cols[9];
      records.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw std::runtime_error(std::string("transition records: ") + e.what() + " in: " + line);
    }
  }
  return records;
}

}  // namespace fockscatter
