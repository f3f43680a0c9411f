// Command-line driver: run a scenario, print the max-min oracle of a
// topology, or sweep one or more parameters.

#include "abrsim/config.hpp"
#include "abrsim/errors.hpp"
#include "abrsim/fairness.hpp"
#include "abrsim/harness.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace abrsim;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_outputs(const fs::path& dir, const RunReport& report) {
  fs::create_directories(dir);
  write_file(dir / "report.txt", format_report(report));
  write_file(dir / "metrics.csv", report.csv);
  std::ofstream ports(dir / "ports.csv");
  emit_ports_csv(report.log, ports);
}

std::string summary_line(const RunReport& r) {
  std::ostringstream os;
  os << "fairness=";
  if (r.headline.steady_state_fairness) {
    os << *r.headline.steady_state_fairness;
  } else {
    os << "n/a";
  }
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < r.oracle.size(); ++i) {
    if (r.oracle[i] <= 0.0) continue;
    const double ratio = r.headline.steady_throughput.at(i) / r.oracle[i];
    lo = i == 0 ? ratio : std::min(lo, ratio);
    hi = i == 0 ? ratio : std::max(hi, ratio);
  }
  os << " share_of_oracle=[" << lo << "," << hi << "]";
  os << " loss=" << r.headline.total_loss << " max_queue=" << r.headline.max_queue
     << " conservation=" << (r.log.conservation_ok ? "ok" : "VIOLATED");
  return os.str();
}

std::string mbps_exact(const BigRational& cps) {
  BigRational m = cps * 424 / 1'000'000;
  std::ostringstream os;
  os << boost::multiprecision::numerator(m);
  if (boost::multiprecision::denominator(m) != 1) os << '/' << boost::multiprecision::denominator(m);
  return os.str();
}

int report_config_error(const ConfigError& e) {
  std::cerr << "configuration error:\n";
  for (const auto& d : e.diagnostics()) std::cerr << "  " << d.field << ": " << d.message << '\n';
  return 2;
}

struct SweepParam {
  std::string key;
  std::vector<std::string> values;
};

SweepParam parse_sweep(const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--param", "expected key=v1,v2,... got `" + spec + "`");
  SweepParam p;
  p.key = spec.substr(0, eq);
  std::string rest = spec.substr(eq + 1);
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    auto comma = rest.find(',', pos);
    p.values.push_back(rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  for (const auto& v : p.values) {
    if (v.empty()) throw ConfigError("--param", "empty value in `" + spec + "`");
  }
  return p;
}

void apply_overrides(ConfigDocument& doc, const std::optional<std::uint64_t>& seed,
                     const std::optional<std::uint64_t>& duration_ms) {
  if (seed) doc.set("scenario.seed", std::to_string(*seed));
  if (duration_ms) {
    doc.set("scenario.duration_ms", std::to_string(*duration_ms));
    for (auto& s : doc.sections) {
      if (s.type != "scenario") continue;
      std::erase_if(s.entries, [](const auto& e) { return e.key == "duration_us"; });
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ATM ABR traffic-management simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> duration_ms;
  auto* run = app.add_subcommand("run", "Run one scenario and write report.txt and metrics.csv");
  run->add_option("config", config_path, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seed", seed, "Override scenario.seed");
  run->add_option("--duration", duration_ms, "Override the duration, in simulated milliseconds");

  std::string topology_path;
  auto* oracle = app.add_subcommand("oracle", "Print the max-min fair allocation of a topology");
  oracle->add_option("topology", topology_path, "Scenario or topology file")->required();

  std::string sweep_config;
  std::vector<std::string> sweep_specs;
  std::string sweep_out = "sweep";
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "Run a labeled series over parameter values");
  sweep->add_option("config", sweep_config, "Scenario file")->required();
  sweep->add_option("--param", sweep_specs, "key=v1,v2,... (repeatable; runs the cartesian product)")->required();
  sweep->add_option("--out", sweep_out, "Output directory; one subdirectory per run");
  sweep->add_option("--jobs", jobs, "Scenarios run concurrently");
  sweep->add_option("--seed", seed, "Override scenario.seed for every run");
  sweep->add_option("--duration", duration_ms, "Override the duration of every run, in simulated milliseconds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto doc = ConfigDocument::parse(read_file(config_path));
      apply_overrides(doc, seed, duration_ms);
      auto report = run_scenario(load_config(doc));
      write_outputs(out_dir, report);
      std::cout << summary_line(report) << '\n';
      std::cout << "wrote " << (fs::path(out_dir) / "report.txt").string() << " and "
                << (fs::path(out_dir) / "metrics.csv").string() << '\n';
      return 0;
    }

    if (*oracle) {
      auto doc = ConfigDocument::parse(read_file(topology_path));
      // A bare topology file has no run length; the oracle does not need one.
      if (!doc.get("scenario.duration_us") && !doc.get("scenario.duration_ms")) {
        doc.set("scenario.duration_us", "1");
      }
      auto cfg = load_config(doc);
      auto problem = allocation_problem(cfg);
      auto alloc = max_min(problem);
      for (std::size_t i = 0; i < alloc.size(); ++i) {
        std::cout << "vc " << problem.vcs[i].id << ": " << mbps_exact(alloc[i]) << " Mbps ("
                  << to_double(alloc[i]) << " cells/s)\n";
      }
      return 0;
    }

    if (*sweep) {
      auto base = ConfigDocument::parse(read_file(sweep_config));
      apply_overrides(base, seed, duration_ms);
      std::vector<SweepParam> params;
      for (const auto& s : sweep_specs) params.push_back(parse_sweep(s));

      struct Job {
        std::string label;
        ConfigDocument doc;
      };
      std::vector<Job> work{{"", base}};
      for (const auto& p : params) {
        std::vector<Job> next;
        for (const auto& j : work) {
          for (const auto& v : p.values) {
            Job n = j;
            n.doc.set(p.key, v);
            n.label += (n.label.empty() ? "" : "_") + p.key + "=" + v;
            next.push_back(std::move(n));
          }
        }
        work = std::move(next);
      }
      // Validate everything before starting any run.
      std::vector<ScenarioConfig> cfgs;
      for (const auto& j : work) cfgs.push_back(load_config(j.doc));

      std::vector<std::string> lines(work.size());
      std::vector<std::string> errors(work.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t i = next++; i < work.size(); i = next++) {
          try {
            auto report = run_scenario(cfgs[i]);
            write_outputs(fs::path(sweep_out) / work[i].label, report);
            lines[i] = work[i].label + ": " + summary_line(report);
          } catch (const std::exception& e) {
            errors[i] = work[i].label + ": " + e.what();
          }
        }
      };
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < std::min<std::size_t>(jobs, work.size()); ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      int status = 0;
      for (std::size_t i = 0; i < work.size(); ++i) {
        if (!errors[i].empty()) {
          std::cerr << errors[i] << '\n';
          status = 1;
        } else {
          std::cout << lines[i] << '\n';
        }
      }
      return status;
    }
  } catch (const ConfigError& e) {
    return report_config_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
