#include <optional>
#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fockscatter/cbs.hpp"
#include "fockscatter/cli.hpp"
#include "fockscatter/config.hpp"
#include "fockscatter/fock.hpp"
#include "fockscatter/meanfield.hpp"
#include "fockscatter/quadrature.hpp"
#include "fockscatter/semiclassics.hpp"
#include "fockscatter/trajectory.hpp"

namespace py = pybind11;
using namespace fockscatter;
using namespace py::literals;

namespace {

py::dict estimate_dict(const TransitionEstimate& e) {
  return py::dict("value"_a = e.value, "stderr"_a = e.stderr_, "samples"_a = e.samples,
                  "method"_a = to_string(e.method), "family_count"_a = e.family_count,
                  "caustic_count"_a = e.caustic_count, "note"_a = e.note);
}

py::dict class_dict(const CbsClassResult& c) {
  return py::dict("exact"_a = c.exact, "classical"_a = c.classical, "ratio"_a = c.ratio, "ci_low"_a = c.ci_low,
                  "ci_high"_a = c.ci_high);
}

}  // namespace

PYBIND11_MODULE(_fockscatter, m) {
  m.doc() = "Fock-space semiclassics for Bose-Hubbard systems";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<BoseHubbardModel>(m, "Model")
      .def_property_readonly("sites", &BoseHubbardModel::sites)
      .def_property_readonly("hopping", &BoseHubbardModel::hopping)
      .def_property_readonly("hbar", &BoseHubbardModel::hbar)
      .def_property_readonly("onsite_interaction",
                             [](const BoseHubbardModel& mdl) { return mdl.interaction().onsite(); })
      .def("is_trs", [](const BoseHubbardModel& mdl) { return analyze_time_reversal(mdl).is_trs; });

  m.def(
      "build_model",
      [](int sites, const std::string& geometry, double hopping, double flux_per_bond, double interaction,
         std::vector<double> onsite, double hbar) {
        ModelConfig c;
        c.sites = sites;
        c.geometry = geometry_from_string(geometry);
        c.hopping = hopping;
        c.flux_per_bond = flux_per_bond;
        c.interaction = interaction;
        c.onsite = std::move(onsite);
        c.hbar = hbar;
        return build_model(c);
      },
      "sites"_a = 4, "geometry"_a = "ring", "hopping"_a = 1.0, "flux_per_bond"_a = 0.0, "interaction"_a = 0.5,
      "onsite"_a = std::vector<double>{}, "hbar"_a = 1.0);

  m.def(
      "basis_states", [](int sites, int particles) { return FockBasis(sites, particles).states(); }, "sites"_a,
      "particles"_a, "Fock states with fixed particle number, in basis order.");

  m.def(
      "transition_probabilities_exact",
      [](const BoseHubbardModel& model, const FockState& n_i, double t) {
        const FockBasis basis(model.sites(), total_particles(n_i));
        return transition_probabilities_exact(model, basis, n_i, t);
      },
      "model"_a, "n_i"_a, "t"_a, "P(n_i -> n_f, t) for every n_f, ordered like basis_states.");

  m.def(
      "classical_distribution",
      [](const BoseHubbardModel& model, const FockState& n_i, const std::vector<double>& times, std::int64_t samples,
         std::uint64_t seed, int threads) {
        ClassicalSamplingOptions opts;
        opts.threads = threads;
        std::optional<ClassicalDistribution> dist;
        {
          py::gil_scoped_release release;
          dist.emplace(classical_distribution(model, n_i, times, samples, seed, opts));
        }
        const ClassicalDistribution& d = *dist;
        return py::dict("states"_a = d.basis.states(), "times"_a = d.times, "probabilities"_a = d.probabilities,
                        "out_of_basis"_a = d.out_of_basis, "samples"_a = d.samples, "discarded"_a = d.discarded);
      },
      "model"_a, "n_i"_a, "times"_a, "samples"_a, "seed"_a = 2024, "threads"_a = 1);

  m.def(
      "semiclassical_amplitude",
      [](const BoseHubbardModel& model, const FockState& n_i, const FockState& n_f, double t) {
        const SemiclassicalAmplitude a = propagator_fock_semiclassical(model, n_i, n_f, t);
        return py::dict("amplitude"_a = a.amplitude, "family_count"_a = a.family_count,
                        "caustic_count"_a = a.caustic_count, "no_trajectory"_a = a.no_trajectory);
      },
      "model"_a, "n_i"_a, "n_f"_a, "t"_a, "Sum over trajectory families of prefactor * exp(iR/hbar).");

  m.def(
      "diagonal_trajectory_sum",
      [](const BoseHubbardModel& model, const FockState& n_i, const FockState& n_f, double t) {
        return estimate_dict(diagonal_trajectory_sum(model, n_i, n_f, t));
      },
      "model"_a, "n_i"_a, "n_f"_a, "t"_a);

  m.def(
      "shoot_fock",
      [](const BoseHubbardModel& model, const FockState& n_i, const FockState& n_f, double t) {
        const ShootingResult r = shoot_fock(model, n_i, n_f, TimeSpan{0.0, t});
        py::list out;
        for (const Trajectory& tr : r.trajectories)
          out.append(py::dict("action"_a = tr.action, "energy"_a = tr.energy, "prefactor"_a = tr.prefactor,
                              "maslov"_a = tr.maslov, "caustic"_a = tr.caustic, "residual"_a = tr.residual,
                              "unknowns"_a = tr.unknowns));
        return out;
      },
      "model"_a, "n_i"_a, "n_f"_a, "t"_a);

  m.def(
      "overlap_exact", [](int n, double q, double b) { return quadrature::overlap_exact(n, q, {b}); }, "n"_a, "q"_a,
      "b"_a = quadrature::QuadratureConfig{}.b);
  m.def(
      "overlap_wkb", [](int n, double q, double b) { return quadrature::overlap_wkb(n, q, {b}); }, "n"_a, "q"_a,
      "b"_a = quadrature::QuadratureConfig{}.b);

  m.def(
      "default_config", [] { return to_ini(RunConfig{}); }, "Canonical INI text with every key at its default.");
  m.def(
      "normalize_config", [](const std::string& text) { return to_ini(parse_config(text)); }, "text"_a,
      "Parses INI text and returns its canonical form; raises ConfigError.");

  m.def(
      "run_cbs",
      [](const std::string& ini_text) {
        const CbsExperimentConfig c = cbs_from_config(parse_config(ini_text));
        CbsResult r;
        {
          py::gil_scoped_release release;
          r = run_cbs_experiment(c);
        }
        py::list rows;
        for (const CbsTimeResult& t : r.times)
          rows.append(py::dict("t"_a = t.t, "return"_a = class_dict(t.return_state), "transfer"_a = class_dict(t.transfer),
                               "return_exact_spread"_a = t.return_exact_spread, "out_of_basis"_a = t.out_of_basis));
        return py::dict("times"_a = rows, "realizations"_a = r.realizations, "trs"_a = r.trs,
                        "dimension"_a = r.dimension, "note"_a = r.note);
      },
      "ini_text"_a, "Runs the [cbs] experiment described by an INI config.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> argv_s{"fockscatter"};
        argv_s.insert(argv_s.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : argv_s) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      "args"_a, "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
