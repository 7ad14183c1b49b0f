// Command-line front end over the C API.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qunet/qunet.h"

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kInvalid = 2, kCapacity = 3, kInternal = 4 };

int exit_code(qunet_status s) {
  switch (s) {
    case QUNET_OK: return kOk;
    case QUNET_ERR_CAPACITY_EXCEEDED:
    case QUNET_ERR_BRANCH_EXPLOSION: return kCapacity;
    case QUNET_ERR_INTERNAL: return kInternal;
    default: return kInvalid;
  }
}

/// Thrown to unwind with a library status.
struct Failure {
  qunet_status status;
};

void check(qunet_status s) {
  if (s != QUNET_OK) throw Failure{s};
}

struct FreeString {
  void operator()(char* s) const { qunet_string_free(s); }
};
using OwnedString = std::unique_ptr<char, FreeString>;

struct ConfigDeleter {
  void operator()(qunet_config* c) const { qunet_config_destroy(c); }
};
struct ReportDeleter {
  void operator()(qunet_report* r) const { qunet_report_destroy(r); }
};

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(item.c_str(), &end, 10);
    if (item.empty() || *end != '\0' || item[0] == '-') throw CLI::ValidationError("bad dimension list '" + text + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw CLI::ValidationError("empty dimension list");
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f || !f.write(text.data(), static_cast<std::streamsize>(text.size()))) {
    std::cerr << "error: cannot write '" << path << "'\n";
    throw Failure{QUNET_ERR_IO};
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot open '" << path << "'\n";
    throw Failure{QUNET_ERR_IO};
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Flags shared by `run` and `verify --replay`.
struct ConfigFlags {
  std::string protocol = "many-to-one";
  std::string dims;
  std::string recv_dims;
  std::optional<std::uint64_t> seed;
  std::string mode = "enumerate";
  std::string input;

  void add_to(CLI::App* app, bool with_mode) {
    app->add_option("--protocol", protocol, "many-to-one | one-to-many | many-to-many | two-way")
        ->capture_default_str();
    app->add_option("--dims", dims, "senders' digit dimensions, e.g. 2,3")->required();
    app->add_option("--recv-dims", recv_dims, "many-to-many receivers' dimensions");
    app->add_option("--seed", seed, "seed for random inputs and sampling");
    if (with_mode) app->add_option("--mode", mode, "enumerate | sample | branch=o1,o2,...")->capture_default_str();
    app->add_option("--input", input, "state file with one input state per sender");
  }

  std::unique_ptr<qunet_config, ConfigDeleter> build() const {
    qunet_config* raw = nullptr;
    check(qunet_config_create_named(protocol.c_str(), &raw));
    std::unique_ptr<qunet_config, ConfigDeleter> c(raw);
    const auto d = parse_list(dims);
    check(qunet_config_set_dims(c.get(), d.data(), d.size()));
    if (!recv_dims.empty()) {
      const auto r = parse_list(recv_dims);
      check(qunet_config_set_recv_dims(c.get(), r.data(), r.size()));
    }
    if (seed) check(qunet_config_set_seed(c.get(), *seed));
    check(qunet_config_set_mode(c.get(), mode.c_str()));
    if (!input.empty()) check(qunet_config_load_inputs(c.get(), input.c_str()));
    if (const char* cap = std::getenv("QUNET_MAX_DIM")) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(cap, &end, 10);
      if (*cap == '\0' || *end != '\0') {
        std::cerr << "error: QUNET_MAX_DIM must be a positive integer\n";
        throw Failure{QUNET_ERR_CONFIG_INVALID};
      }
      check(qunet_config_set_max_dimension(c.get(), static_cast<std::size_t>(v)));
    }
    return c;
  }
};

int cmd_run(const ConfigFlags& flags, const std::string& json_path, const std::string& transcript_path,
            const std::string& format) {
  const auto config = flags.build();
  qunet_report* raw = nullptr;
  check(qunet_run(config.get(), &raw));
  std::unique_ptr<qunet_report, ReportDeleter> report(raw);

  char* json_raw = nullptr;
  check(qunet_report_to_json(report.get(), &json_raw));
  const OwnedString json(json_raw);
  if (!json_path.empty()) write_file(json_path, json.get());
  if (!transcript_path.empty()) {
    char* t = nullptr;
    check(qunet_report_transcript(report.get(), &t));
    const OwnedString transcript(t);
    write_file(transcript_path, transcript.get());
  }

  const double min_fidelity = qunet_report_min_fidelity(report.get());
  if (format == "json") {
    std::cout << json.get();
  } else {
    std::printf("protocol %s, dims %s, mode %s\n", flags.protocol.c_str(), flags.dims.c_str(), flags.mode.c_str());
    std::printf("branches %zu, measurements %zu, probability sum %.15f, min fidelity %.15f\n",
                qunet_report_branch_count(report.get()), qunet_report_measurement_count(report.get()),
                qunet_report_probability_sum(report.get()), min_fidelity);
  }
  if (flags.mode == "enumerate" && min_fidelity < 1.0 - 1e-9) {
    std::cerr << "min fidelity " << min_fidelity << " below 1 - 1e-9\n";
    return kCheckFailed;
  }
  return kOk;
}

int report_summary(const std::string& summary, bool passed, const std::string& json_path) {
  if (!json_path.empty()) write_file(json_path, summary);
  const auto j = nlohmann::json::parse(summary);
  if (j.contains("properties")) {
    for (const auto& p : j["properties"]) {
      std::printf("%s %s: %s\n", p["passed"].get<bool>() ? "PASS" : "FAIL", p["name"].get<std::string>().c_str(),
                  p["detail"].get<std::string>().c_str());
    }
    if (!passed) std::cerr << "verify failed: " << j["first_failure"].get<std::string>() << "\n";
  } else {
    std::printf("%s replay_determinism: %zu messages, fidelity %.15f, max deviation %.3g\n",
                passed ? "PASS" : "FAIL", j["messages"].get<std::size_t>(), j["fidelity"].get<double>(),
                j["max_deviation"].get<double>());
    if (!passed) std::cerr << "verify failed: replay_determinism\n";
  }
  return passed ? kOk : kCheckFailed;
}

int cmd_verify(const std::string& matrix, std::uint64_t seed, bool inject_fault, const std::string& json_path) {
  char* raw = nullptr;
  int passed = 0;
  check(qunet_verify(matrix.empty() ? nullptr : matrix.c_str(), seed, inject_fault ? 1 : 0, &raw, &passed));
  const OwnedString summary(raw);
  return report_summary(summary.get(), passed != 0, json_path);
}

int cmd_replay(const ConfigFlags& flags, const std::string& transcript_path, const std::string& json_path) {
  const auto config = flags.build();
  const std::string text = read_file(transcript_path);
  char* raw = nullptr;
  int passed = 0;
  check(qunet_verify_replay(config.get(), text.c_str(), &raw, &passed));
  const OwnedString summary(raw);
  return report_summary(summary.get(), passed != 0, json_path);
}

int cmd_bell_table(std::size_t d, const std::string& out) {
  char* raw = nullptr;
  check(qunet_bell_table(d, &raw));
  const OwnedString table(raw);
  if (out.empty()) {
    std::cout << table.get();
  } else {
    write_file(out, table.get());
  }
  return kOk;
}

int cmd_pin_phases() {
  char* raw = nullptr;
  check(qunet_pin_phases(&raw));
  const OwnedString log(raw);
  std::cout << log.get();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for multi-party qudit teleportation protocols"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  std::string json_path;
  std::string transcript_path;
  std::string format = "text";
  CLI::App* run = app.add_subcommand("run", "run a protocol and report every branch");
  run_flags.add_to(run, true);
  run->add_option("--json", json_path, "write the JSON report here");
  run->add_option("--transcript", transcript_path, "write the message transcript (JSONL) here");
  run->add_option("--format", format, "standard output: text | json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  std::string matrix;
  std::uint64_t verify_seed = 1;
  bool inject_fault = false;
  std::string replay_path;
  std::string verify_json;
  ConfigFlags replay_flags;
  CLI::App* verify = app.add_subcommand("verify", "check the protocol invariants, or replay a transcript");
  verify->add_option("--dims-matrix", matrix, "dimension sets, e.g. \"2,2;2,3;3,2\"");
  verify->add_option("--verify-seed", verify_seed, "seed of the suite's random inputs")->capture_default_str();
  verify->add_flag("--inject-fault", inject_fault, "run the protocols with a flipped phase sign (must fail)");
  verify->add_option("--json", verify_json, "write the verification summary here");
  verify->add_option("--replay", replay_path, "transcript (JSONL) to replay against the configuration flags");
  replay_flags.protocol = "many-to-one";
  verify->add_option("--protocol", replay_flags.protocol, "replay: protocol");
  verify->add_option("--dims", replay_flags.dims, "replay: senders' dimensions");
  verify->add_option("--recv-dims", replay_flags.recv_dims, "replay: receivers' dimensions");
  verify->add_option("--seed", replay_flags.seed, "replay: seed used for the run");
  verify->add_option("--input", replay_flags.input, "replay: input state file used for the run");

  std::size_t bell_d = 0;
  std::string bell_out;
  CLI::App* bell = app.add_subcommand("bell-table", "write the generalized Bell basis in the state file format");
  bell->add_option("--d", bell_d, "local dimension, 2..16")->required();
  bell->add_option("--out", bell_out, "output file (default: standard output)");

  CLI::App* pin = app.add_subcommand("pin-phases", "rerun the phase-convention search and print its log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run) return cmd_run(run_flags, json_path, transcript_path, format);
    if (*verify) {
      if (replay_path.empty()) return cmd_verify(matrix, verify_seed, inject_fault, verify_json);
      if (replay_flags.dims.empty()) {
        std::cerr << "error: --replay needs --dims (and the run's --seed or --input)\n";
        return kInvalid;
      }
      return cmd_replay(replay_flags, replay_path, verify_json);
    }
    if (*bell) return cmd_bell_table(bell_d, bell_out);
    if (*pin) return cmd_pin_phases();
  } catch (const Failure& f) {
    if (f.status != QUNET_ERR_IO || *qunet_last_error() != '\0') {
      std::cerr << "error: " << qunet_last_error() << "\n";
    }
    return exit_code(f.status);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kOk;
}
