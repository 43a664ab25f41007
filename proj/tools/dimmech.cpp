// dimmech: scenario runner and unit converter.
//
//   dimmech run <scenario>... [--out DIR] [--dry-run] [--jobs N] [--seed U64]
//   dimmech check <scenario>
//   dimmech convert <value> <dim-expr> --from A --to B [--units FILE]
//
// Exit codes: 0 success, 1 a check or flow failed, 2 configuration error.

#include <dimmech/scenario.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <future>
#include <iostream>

using namespace dimmech;

namespace {

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome run_one(const std::string &file, const RunOptions &opt) {
  Outcome o;
  try {
    Scenario s = load_scenario(file);
    RunResult r = run_scenario(s, opt);
    o.code = r.exit_code;
    o.out = r.report;
  } catch (const std::exception &e) {
    o.code = 2;
    o.err = file + ": " + e.what() + "\n";
  }
  return o;
}

int run_all(const std::vector<std::string> &files, const RunOptions &opt, unsigned jobs) {
  std::vector<Outcome> results(files.size());
  jobs = std::max(1u, jobs);
  for (std::size_t start = 0; start < files.size(); start += jobs) {
    std::vector<std::future<Outcome>> batch;
    for (std::size_t i = start; i < std::min(files.size(), start + jobs); ++i)
      batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run_one, files[i], opt));
    for (std::size_t i = 0; i < batch.size(); ++i)
      results[start + i] = batch[i].get();
  }
  int code = 0;
  for (const auto &r : results) {
    std::cout << r.out;
    std::cerr << r.err;
    code = std::max(code, r.code);
  }
  return code;
}

/// "P=101325,V=0.001" -> names and scales in the order written.
UnitSystem inline_units(const std::string &decl) {
  std::vector<std::string> names;
  std::vector<double> scales;
  std::stringstream ss(decl);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ParseError(0, "unit system '" + decl + "': expected NAME=SCALE entries");
    names.push_back(item.substr(0, eq));
    try {
      scales.push_back(std::stod(item.substr(eq + 1)));
    } catch (const std::exception &) {
      throw ParseError(eq + 1, "unit system '" + decl + "': malformed scale");
    }
  }
  return {MeasurandSpace(names), scales};
}

std::vector<std::pair<std::string, UnitSystem>> units_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError(0, "cannot open units file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error &e) {
    throw ParseError(e.byte, std::string("malformed JSON: ") + e.what());
  }
  std::vector<std::string> names = j.at("measurands").get<std::vector<std::string>>();
  MeasurandSpace space(names);
  std::vector<std::pair<std::string, UnitSystem>> out;
  for (const auto &[un, decl] : j.at("unit_systems").items()) {
    std::vector<double> scales;
    for (const auto &m : names)
      scales.push_back(decl.at(m).get<double>());
    out.emplace_back(un, UnitSystem(space, scales));
  }
  return out;
}

int convert_cmd(double value, const std::string &dim, const std::string &from, const std::string &to,
                const std::string &units) {
  auto pick = [](const std::vector<std::pair<std::string, UnitSystem>> &sys, const std::string &n) {
    for (const auto &[k, u] : sys)
      if (k == n)
        return u;
    throw UnresolvedReference("unit system '" + n + "' is not declared");
  };
  std::optional<UnitSystem> a, b;
  if (!units.empty()) {
    auto sys = units_file(units);
    a = pick(sys, from);
    b = pick(sys, to);
  } else {
    a = inline_units(from);
    b = inline_units(to);
    if (!(a->space() == b->space()))
      throw MeasurandSpaceMismatch("--from and --to name different measurands");
  }
  TypedNumber x(a->space(), value, parse_dimension(dim, a->space()));
  TypedNumber y = convert(x, *a, *b);
  std::printf("%.17g\n", y.magnitude());
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Dimensioned Hamiltonian mechanics on Jacobi structures"};
  app.require_subcommand(1);

  std::vector<std::string> files;
  std::string out_dir = ".";
  bool dry_run = false;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;
  auto *run = app.add_subcommand("run", "Validate, certify and integrate scenarios");
  run->add_option("scenarios", files, "Scenario files")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Directory for CSV and report files");
  run->add_flag("--dry-run", dry_run, "Validate and certify without integrating");
  run->add_option("--jobs", jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Override the sampling seed");

  std::string check_file;
  auto *check = app.add_subcommand("check", "Validate and run certifications only");
  check->add_option("scenario", check_file, "Scenario file")->required()->check(CLI::ExistingFile);

  double value = 0.0;
  std::string dim, from, to, units;
  auto *conv = app.add_subcommand("convert", "Re-express a reading in another unit system");
  conv->add_option("value", value, "Reading")->required();
  conv->add_option("dim", dim, "Dimension expression, e.g. P*V/N")->required();
  conv->add_option("--from", from, "Unit system name, or NAME=SCALE,...")->required();
  conv->add_option("--to", to, "Unit system name, or NAME=SCALE,...")->required();
  conv->add_option("--units", units, "JSON file with measurands and unit_systems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*run) {
    RunOptions opt;
    opt.dry_run = dry_run;
    opt.out_dir = out_dir;
    opt.seed = seed;
    return run_all(files, opt, jobs);
  }
  if (*check) {
    RunOptions opt;
    opt.dry_run = true;
    opt.write_files = false;
    return run_all({check_file}, opt, 1);
  }
  try {
    return convert_cmd(value, dim, from, to, units);
  } catch (const std::exception &e) {
    std::cerr << "convert: " << e.what() << "\n";
    return 2;
  }
}
