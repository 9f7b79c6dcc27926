// Copyright 2026 The entdetect Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Batch driver: noise bands, protocol experiments, no-go campaigns,
// multi-copy checks, extendibility certificates and reconstruction from
// stored transcripts.

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "entdetect/entdetect.hpp"

namespace ed = entdetect;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::uint64_t seed = 20260101;
  std::string config;
  std::string out;
};

void add_common(CLI::App *cmd, CommonArgs &args) {
  cmd->add_option("--seed", args.seed, "Master seed");
  cmd->add_option("--config", args.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out, "Output path (stdout when omitted)");
}

json load_json(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ed::InvalidParameter("cannot open " + path);
  return json::parse(in);
}

json load_config(const CommonArgs &args) {
  return args.config.empty() ? json::object() : load_json(args.config);
}

/// Writes through `fn` to --out or stdout.
template <class Fn>
void emit(const CommonArgs &args, Fn &&fn) {
  if (args.out.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream os(args.out, std::ios::binary);
  if (!os) throw ed::InvalidParameter("cannot write " + args.out);
  fn(os);
}

void emit_json(const CommonArgs &args, const json &j) {
  emit(args, [&](std::ostream &os) { os << j.dump(2) << '\n'; });
}

ed::NoiseModel noise_from(const json &cfg) {
  if (!cfg.contains("noise")) return {};
  const auto &n = cfg.at("noise");
  if (n.is_string() && n.get<std::string>() == "zero") return ed::NoiseModel::zero();
  return ed::noise_model_from_json(n);
}

/// "ZZ", "XI", ... or a {"re": [[..]], "im": [[..]]} matrix.
ed::Observable observable_from(const json &j) {
  if (!j.is_string()) return ed::Observable(ed::matrix_from_json(j));
  const auto label = j.get<std::string>();
  if (label.size() != 2) throw ed::InvalidParameter("bad Pauli label " + label);
  auto index = [&](char c) {
    switch (c) {
      case 'I': return 0;
      case 'X': return 1;
      case 'Y': return 2;
      case 'Z': return 3;
    }
    throw ed::InvalidParameter("bad Pauli label " + label);
  };
  return ed::Observable(ed::pauli_product(index(label[0]), index(label[1])));
}

ed::Observable random_direction(ed::Rng &rng) {
  ed::CMatrix h = ed::hermitian_part(ed::ginibre(4, 4, rng));
  h -= (h.trace() / 4.0) * ed::CMatrix::Identity(4, 4);
  return ed::Observable(h / h.norm());
}

// ---------------------------------------------------------------------------

void run_band(const CommonArgs &args, bool fast) {
  const json cfg = load_config(args);
  const int count = fast ? 20 : cfg.value("lambda_count", 200);
  const int samples = fast ? 100 : cfg.value("samples_per_lambda", 2500);
  const auto rep = ed::concurrence_band(count, samples, noise_from(cfg), args.seed);
  emit(args, [&](std::ostream &os) { ed::write_band_csv(os, rep); });
}

void run_protocol(const CommonArgs &args, bool fast) {
  const json cfg = load_config(args);
  const auto lambdas =
      cfg.value("lambdas", std::vector<double>{0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
  ed::ExperimentOptions opts;
  opts.filters = cfg.value("filters", opts.filters);
  opts.restarts = cfg.value("restarts", opts.restarts);
  opts.band_samples = fast ? 100 : cfg.value("band_samples", opts.band_samples);
  if (cfg.value("path", std::string("direct")) == "ancilla") opts.path = ed::FilterPath::Ancilla;
  const auto rep = ed::protocol_experiment(lambdas, noise_from(cfg), args.seed, opts);
  emit(args, [&](std::ostream &os) { ed::write_experiment_csv(os, rep); });
}

void run_nogo(const CommonArgs &args) {
  const json cfg = load_config(args);
  json out;
  if (cfg.contains("observables")) {
    std::vector<ed::Observable> obs;
    for (const auto &o : cfg.at("observables")) obs.push_back(observable_from(o));
    out = ed::to_json(ed::cylinder_test(obs, args.seed));
  } else if (cfg.contains("campaign")) {
    const int n = cfg.at("campaign").get<int>();
    ed::Rng rng(args.seed);
    out = json::array();
    for (int i = 0; i < n; ++i) {
      const auto r = random_direction(rng);
      out.push_back(ed::to_json(
          ed::find_counterexample(r, ed::derive_seed(args.seed, static_cast<std::uint64_t>(i)))));
    }
  } else {
    const auto r = observable_from(cfg.value("direction", json("ZZ")));
    out = ed::to_json(ed::find_counterexample(r, args.seed));
  }
  emit_json(args, out);
}

void run_multicopy(const CommonArgs &args) {
  const json cfg = load_config(args);
  std::vector<ed::DensityMatrix> states;
  if (cfg.contains("states")) {
    for (const auto &s : cfg.at("states")) states.push_back(ed::density_from_json(s));
  } else {
    ed::Rng rng(args.seed);
    const int n = cfg.value("random_states", 100);
    for (int i = 0; i < n; ++i) states.push_back(ed::random_density_matrix(4, 1 + i % 4, rng));
  }
  const auto &w = ed::four_copy_det_observable();
  emit(args, [&](std::ostream &os) {
    os.precision(17);
    os << "state_id,ppt_determinant,four_copy,two_copy,two_copy_outcomes\n";
    for (std::size_t i = 0; i < states.size(); ++i) {
      const auto two = ed::two_copy_scheme(states[i]);
      os << i << ',' << ed::ppt_determinant(states[i]) << ',' << w.expectation(states[i])
         << ',' << two.det_estimate << ',' << two.outcome_count << '\n';
    }
  });
}

void run_extend(const CommonArgs &args) {
  const json cfg = load_config(args);
  const auto ce =
      ed::build_extension_counterexample(cfg.value("y", 1.0), cfg.value("epsilon", 0.01));
  json ineq = json::array();
  for (const auto &q : ce.inequalities)
    ineq.push_back({{"name", q.name}, {"lhs", q.lhs}, {"rhs", q.rhs}, {"holds", q.holds()}});
  json werner = json::array();
  const auto dk = cfg.value("werner", std::vector<std::vector<int>>{{2, 2}, {2, 3}, {3, 2}});
  for (const auto &p : dk) {
    if (p.size() != 2) throw ed::InvalidParameter("werner entries are [d, k] pairs");
    werner.push_back({{"d", p[0]},
                      {"k", p[1]},
                      {"psi_minus_threshold", -static_cast<double>(p[0] - 1) / p[1]}});
  }
  emit_json(args, {{"x_state",
                    {{"x", ce.params.x},
                     {"y", ce.params.y},
                     {"z", ce.params.z},
                     {"w", ce.params.w}}},
                   {"rho", ed::to_json(ce.rho)},
                   {"rho_shifted", ed::to_json(ce.rho_shifted)},
                   {"R", ed::matrix_to_json(ce.R.matrix())},
                   {"extension_gap", ce.extension_gap},
                   {"shifted_ppt_determinant", ce.shifted_ppt_determinant},
                   {"inequalities", ineq},
                   {"werner_thresholds", werner}});
}

void run_reconstruct(const CommonArgs &args, const std::string &transcript_path,
                     const std::string &emit_path) {
  const json cfg = load_config(args);
  std::optional<ed::DensityMatrix> truth;
  const ed::ProtocolTranscript transcript = [&] {
    if (!transcript_path.empty()) return ed::transcript_from_json(load_json(transcript_path));
    truth = cfg.contains("state") ? ed::density_from_json(cfg.at("state"))
                                  : ed::input_state(cfg.value("lambda", 0.5));
    return ed::run_protocol(*truth, cfg.value("filters", 5));
  }();
  if (!emit_path.empty()) {
    std::ofstream os(emit_path, std::ios::binary);
    if (!os) throw ed::InvalidParameter("cannot write " + emit_path);
    os << ed::to_json(transcript).dump(2) << '\n';
  }

  const int ensemble = cfg.value("ensemble", 0);
  if (ensemble > 0) {
    const int prefix = cfg.value("prefix", static_cast<int>(transcript.steps.size()));
    const auto ens = ed::feasible_states(transcript, prefix, ensemble, args.seed);
    const auto reference = truth ? *truth : ens.candidates.at(0);
    emit(args, [&](std::ostream &os) { ed::write_ensemble_csv(os, ens, reference); });
    return;
  }
  ed::MleOptions opts;
  opts.seed = args.seed;
  opts.restarts = cfg.value("restarts", opts.restarts);
  const auto fit = ed::mle_reconstruct(transcript, opts);
  json out{{"state", ed::to_json(fit.state)},
           {"residual", fit.residual},
           {"dof", fit.dof},
           {"feasible_restarts", fit.feasible_restarts},
           {"concurrence", ed::concurrence(fit.state).value}};
  if (truth) out["fidelity_to_input"] = ed::fidelity(*truth, fit.state);
  emit_json(args, out);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"entdetect batch driver"};
  app.require_subcommand(1);

  CommonArgs band_args, protocol_args, nogo_args, multi_args, extend_args, recon_args;
  bool band_fast = false, protocol_fast = false;
  std::string transcript_in, transcript_out;

  auto *band = app.add_subcommand("band", "Concurrence noise band over the lambda grid (CSV)");
  add_common(band, band_args);
  band->add_flag("--fast", band_fast, "20 lambda values x 100 samples");

  auto *protocol =
      app.add_subcommand("protocol", "Filter protocol + reconstruction per lambda (CSV)");
  add_common(protocol, protocol_args);
  protocol->add_flag("--fast", protocol_fast, "100 band samples per lambda");

  auto *nogo = app.add_subcommand("nogo", "Counterexample pairs for a missing direction (JSON)");
  add_common(nogo, nogo_args);

  auto *multi = app.add_subcommand("multicopy", "Four- and two-copy determinant estimates (CSV)");
  add_common(multi, multi_args);

  auto *extend = app.add_subcommand("extend", "Extendibility certificates (JSON)");
  add_common(extend, extend_args);

  auto *recon = app.add_subcommand("reconstruct", "Reconstruct from a transcript (JSON or CSV)");
  add_common(recon, recon_args);
  recon->add_option("--transcript", transcript_in, "Transcript JSON to reconstruct from")
      ->check(CLI::ExistingFile);
  recon->add_option("--emit-transcript", transcript_out, "Write the transcript used");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (*band) run_band(band_args, band_fast);
    if (*protocol) run_protocol(protocol_args, protocol_fast);
    if (*nogo) run_nogo(nogo_args);
    if (*multi) run_multicopy(multi_args);
    if (*extend) run_extend(extend_args);
    if (*recon) run_reconstruct(recon_args, transcript_in, transcript_out);
  } catch (const ed::CertificateFailure &e) {
    std::cerr << "certificate failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
