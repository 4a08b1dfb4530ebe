// maglab: command-line front end for the magnetic flows laboratory.
//
// Exit codes: 0 all checks pass, 1 an assertion failed, 2 usage or config error.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maglab/experiment.hpp"

namespace {

using namespace maglab;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Overrides {
  std::string config_path;
  std::string backend;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> batteries;
  std::optional<double> sigma;
  std::vector<double> sigmas;
  std::optional<int> n;
  std::optional<int> k_max;
  std::optional<int> size;
  std::optional<double> kappa;
  std::vector<std::string> classes;
  std::string family;
  std::optional<double> family_c;
  std::string out;
  bool quiet = false;
};

ExperimentConfig load_config(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot open config '" + o.config_path + "'");
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    c = config_from_json(j);
    if (!o.backend.empty() && o.backend != c.backend) c.backend = o.backend;
  } else {
    c = default_config(o.backend.empty() ? "bolza" : o.backend);
  }
  if (o.seed) c.seed = *o.seed;
  if (!o.batteries.empty()) c.batteries = o.batteries;
  if (o.sigma) c.sigma = *o.sigma;
  if (!o.sigmas.empty()) c.sigmas = o.sigmas;
  if (o.n) c.carleman_n = *o.n;
  if (o.k_max) c.k_max = *o.k_max;
  if (o.size) {
    c.battery_size = *o.size;
    c.structural_size = std::min(c.structural_size, *o.size);
  }
  if (o.kappa) {
    c.kappa_mean = *o.kappa;
    c.kappas = {*o.kappa};
  }
  if (!o.classes.empty()) c.classes = o.classes;
  if (!o.family.empty()) c.family.kind = o.family;
  if (o.family_c) c.family.c = *o.family_c;
  if (!o.out.empty()) c.output_dir = o.out;
  validate(c);
  return c;
}

void print_summary(const std::string& command, const RunResult& r, const std::vector<std::string>& files) {
  std::map<std::string, std::array<int, 3>> counts;
  for (const auto& row : r.rows) ++counts[row.battery][static_cast<int>(row.status)];
  std::cout << command << ":\n";
  for (const auto& [b, c] : counts)
    std::cout << "  " << b << ": " << c[0] << " pass, " << c[1] << " fail, " << c[2] << " skipped\n";
  for (const auto& row : r.rows)
    if (row.failed())
      std::cout << "  FAIL " << row.battery << " / " << row.check << " member=" << row.member
                << " residual=" << format_double(row.residual) << " tol=" << format_double(row.tolerance)
                << (row.note.empty() ? "" : " (" + row.note + ")") << "\n";
  for (const auto& f : files) std::cout << "  wrote " << f << "\n";
  std::cout << (r.failed() ? "FAIL" : "PASS") << "\n";
}

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "JSON config file");
  app->add_option("--backend", o.backend, "flat-torus | torus | bolza")
      ->check(CLI::IsMember({"flat-torus", "torus", "bolza"}));
  app->add_option("--seed", o.seed, "battery seed");
  app->add_option("--out", o.out, "output directory");
  app->add_flag("--quiet", o.quiet, "only print the verdict");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maglab: magnetic flows laboratory"};
  app.require_subcommand(1);
  Overrides o;

  auto* verify = app.add_subcommand("verify", "run verification batteries");
  add_common(verify, o);
  verify->add_option("--battery", o.batteries, "batteries to run (repeatable)");
  verify->add_option("--sigma", o.sigma, "Carleman weight parameter");
  verify->add_option("--N", o.n, "Carleman degree bound");
  verify->add_option("--k-max", o.k_max, "largest weight index");
  verify->add_option("--size", o.size, "random functions per battery");
  verify->add_option("--kappa", o.kappa, "constant magnetic intensity (bolza)");

  auto* spectrum = app.add_subcommand("spectrum", "marked length spectrum and monodromy");
  add_common(spectrum, o);
  spectrum->add_option("--kappa", o.kappa, "constant magnetic intensity (bolza)");
  spectrum->add_option("--classes", o.classes, "free homotopy classes, e.g. g1..g8 or 1,0");

  auto* deform = app.add_subcommand("deform", "deformation study: lengths, orbit integrals, Jacobi fields");
  add_common(deform, o);
  deform->add_option("--family", o.family, "kappa-shift | translation | conformal | constant");
  deform->add_option("--c", o.family_c, "rate of the kappa-shift family");
  deform->add_option("--classes", o.classes, "classes to follow");

  auto* sweep = app.add_subcommand("carleman-sweep", "Carleman weights and estimates over several sigma");
  add_common(sweep, o);
  sweep->add_option("--sigmas", o.sigmas, "sigma values");
  sweep->add_option("--k-max", o.k_max, "largest weight index");
  sweep->add_option("--N", o.n, "Carleman degree bound");
  sweep->add_option("--size", o.size, "random functions per sigma");

  auto* list = app.add_subcommand("list-batteries", "list batteries and what they check");
  auto* print = app.add_subcommand("print-config", "print the effective config as JSON");
  print->add_option("--config", o.config_path, "JSON config file");
  print->add_option("--backend", o.backend, "flat-torus | torus | bolza")
      ->check(CLI::IsMember({"flat-torus", "torus", "bolza"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (list->parsed()) {
      for (const auto& b : battery_catalog()) std::cout << b.name << "\t" << b.backends << "\t" << b.anchor << "\n";
      return kExitPass;
    }
    const ExperimentConfig c = load_config(o);
    if (print->parsed()) {
      std::cout << to_json(c).dump(2) << "\n";
      return kExitPass;
    }
    std::string command;
    RunResult r;
    if (verify->parsed()) {
      command = "verify";
      r = run_verify(c);
    } else if (spectrum->parsed()) {
      command = "spectrum";
      r = run_spectrum(c);
    } else if (deform->parsed()) {
      command = "deform";
      r = run_deform(c);
    } else {
      command = "carleman-sweep";
      r = run_carleman_sweep(c);
    }
    const auto files = write_reports(command, c, r);
    if (o.quiet)
      std::cout << (r.failed() ? "FAIL" : "PASS") << "\n";
    else
      print_summary(command, r, files);
    return r.failed() ? kExitFail : kExitPass;
  } catch (const std::invalid_argument& e) {
    std::cerr << "maglab: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "maglab: " << e.what() << "\n";
    return kExitFail;
  }
}
