#pragma once

// Command-line front end. run() takes the arguments after the program name
// and returns the exit status: 0 success, 1 violation or invalid chain,
// 2 usage, parse or configuration error.

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dfci/conformance.hpp"
#include "dfci/custody.hpp"
#include "dfci/dsl.hpp"
#include "dfci/protocols.hpp"
#include "dfci/render.hpp"
#include "dfci/sim.hpp"
#include "dfci/trace.hpp"

namespace dfci::cli {

enum Exit : int { kOk = 0, kViolation = 1, kUsage = 2 };

struct Style {
  bool color = false;

  static Style from_env() {
    const char* v = std::getenv("DFCI_COLOR");
    return Style{v != nullptr && std::string_view(v) == "1"};
  }
  std::string good(std::string_view s) const { return paint(s, "32"); }
  std::string bad(std::string_view s) const { return paint(s, "31"); }

 private:
  std::string paint(std::string_view s, const char* code) const {
    if (!color) return std::string(s);
    return std::string("\x1b[") + code + "m" + std::string(s) + "\x1b[0m";
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Format, "cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

// "builtin:NAME" or a path to a .msc file.
inline MscDocument load_document(const std::string& spec) {
  constexpr std::string_view kBuiltin = "builtin:";
  if (spec.rfind(kBuiltin, 0) == 0) return builtin(std::string_view(spec).substr(kBuiltin.size()));
  const std::string text = read_file(spec);
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw Error(ErrorKind::Parse, spec + ":" + e.what());
  }
}

inline Trace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Format, "cannot open " + path);
  try {
    return read_trace(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Format, "cannot write " + path);
  out << text;
}

inline std::string format_report(const ConformanceReport& conf, const ObjectiveReport& obj,
                                 const Style& style) {
  std::ostringstream os;
  const bool ok = conf.verdict == Verdict::conformant;
  os << conf.protocol << ": "
     << (ok ? style.good(to_string(conf.verdict)) : style.bad(to_string(conf.verdict))) << '\n';
  for (const auto& v : conf.violations) {
    os << "  " << to_string(v.kind) << ' ' << v.msg_id << " at "
       << (v.seq ? "seq " + std::to_string(*v.seq) : std::string("end")) << ": " << v.explanation
       << '\n';
  }
  if (!obj.results.empty()) os << "objectives:\n";
  for (const auto& r : obj.results) {
    os << "  " << r.id << ' ' << (r.satisfied ? style.good("satisfied") : style.bad("violated"));
    if (r.witness) os << " (witness seq " << *r.witness << ')';
    if (!r.missing.empty()) {
      os << " (missing";
      for (const auto& m : r.missing) os << ' ' << m;
      os << ')';
    }
    os << '\n';
  }
  return os.str();
}

// "1..5" or "1,2,9".
inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
      throw Error(ErrorKind::ConfigOutOfBounds, "bad seed list '" + text + "'");
    }
    return v;
  };
  std::vector<std::uint64_t> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = number(std::string_view(text).substr(0, dots));
    const auto hi = number(std::string_view(text).substr(dots + 2));
    if (hi < lo || hi - lo > 100000) {
      throw Error(ErrorKind::ConfigOutOfBounds, "bad seed range '" + text + "'");
    }
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    out.push_back(number(rest.substr(0, comma)));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  return out;
}

inline std::vector<FaultKind> parse_kinds(const std::string& text) {
  std::vector<FaultKind> out;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto name = rest.substr(0, comma);
    const auto kind = fault_kind_from_string(name);
    if (!kind) {
      throw Error(ErrorKind::ConfigOutOfBounds, "unknown fault kind '" + std::string(name) + "'");
    }
    out.push_back(*kind);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  return out;
}

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  const Style style = Style::from_env();
  CLI::App app{"Message sequence charts for digital forensics in crime investigation", "dfci"};
  app.require_subcommand(1);

  std::string file;
  auto* parse_cmd = app.add_subcommand("parse", "validate a .msc file and print its canonical form");
  parse_cmd->add_option("file", file, ".msc file or builtin:NAME")->required();

  std::string msc, trace_path, ledger_path, out_path;
  bool prefix = false, json = false;

  auto* check_cmd = app.add_subcommand("check", "check a trace against a chart and its objectives");
  check_cmd->add_option("--msc", msc, "chart: file or builtin:NAME")->required();
  check_cmd->add_option("--trace", trace_path, "trace (.jsonl)")->required();
  check_cmd->add_flag("--prefix", prefix, "accept a conformant prefix of a run");
  check_cmd->add_flag("--json", json, "JSON output");

  std::uint64_t seed = 0;
  std::vector<std::string> faults;
  std::string opt = "take";
  std::optional<std::size_t> loops;
  auto* sim_cmd = app.add_subcommand("simulate", "simulate a run of a chart");
  sim_cmd->add_option("--msc", msc, "chart: file or builtin:NAME")->required();
  sim_cmd->add_option("--seed", seed, "generator seed")->required();
  sim_cmd->add_option("--fault", faults, "kind:msg=ID,p=RAT (repeatable)");
  sim_cmd->add_option("--opt", opt, "opt policy")->check(CLI::IsMember({"take", "skip", "random"}));
  sim_cmd->add_option("--loops", loops, "iterations per loop (1..3)");
  sim_cmd->add_option("--out", out_path, "write the trace here instead of stdout");
  sim_cmd->add_option("--ledger", ledger_path, "write the custody ledger here");

  std::string format;
  auto* render_cmd = app.add_subcommand("render", "render a chart");
  render_cmd->add_option("--msc", msc, "chart: file or builtin:NAME")->required();
  render_cmd->add_option("--format", format, "dot or ascii")
      ->required()
      ->check(CLI::IsMember({"dot", "ascii"}));

  auto* custody_cmd = app.add_subcommand("custody", "custody ledger checks");
  custody_cmd->require_subcommand(1);
  auto* verify_cmd = custody_cmd->add_subcommand("verify", "verify the hash chain");
  verify_cmd->add_option("--ledger", ledger_path, "ledger (.custody.json)")->required();
  auto* coverage_cmd = custody_cmd->add_subcommand("coverage", "check custody covers the span");
  coverage_cmd->add_option("--msc", msc, "chart: file or builtin:NAME")->required();
  coverage_cmd->add_option("--trace", trace_path, "trace (.jsonl)")->required();
  coverage_cmd->add_option("--ledger", ledger_path, "ledger (.custody.json)")->required();

  std::string kinds = "drop", seeds = "1";
  auto* adv_cmd = app.add_subcommand("adversary", "fault-injection detection matrix");
  adv_cmd->add_option("--msc", msc, "chart: file or builtin:NAME")->required();
  adv_cmd->add_option("--kinds", kinds, "comma-separated fault kinds");
  adv_cmd->add_option("--seeds", seeds, "seed range A..B or list");
  adv_cmd->add_flag("--json", json, "JSON output");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "dfci: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*parse_cmd) {
      if (file.rfind("builtin:", 0) == 0) {
        out << serialize(load_document(file));
        return kOk;
      }
      const std::string text = read_file(file);
      try {
        out << serialize(parse(text));
      } catch (const ParseError& e) {
        err << file << ':' << e.what() << '\n';
        return kUsage;
      }
      return kOk;
    }

    if (*check_cmd) {
      const MscDocument doc = load_document(msc);
      const Trace trace = load_trace(trace_path);
      const auto conf = check_trace(doc, trace, CheckOptions{prefix});
      const auto obj = check_objectives(doc, trace);
      if (json) {
        nlohmann::ordered_json j;
        j["conformance"] = to_json(conf);
        j["objectives"] = to_json(obj);
        out << j.dump(2) << '\n';
      } else {
        out << format_report(conf, obj, style);
      }
      const bool failed =
          conf.verdict == Verdict::nonconformant || (!prefix && !obj.all_satisfied());
      return failed ? kViolation : kOk;
    }

    if (*sim_cmd) {
      const MscDocument doc = load_document(msc);
      SimConfig config;
      config.seed = seed;
      config.default_opt_policy = *opt_policy_from_string(opt);
      config.default_loop_iterations = loops;
      for (const auto& f : faults) config.faults.push_back(parse_fault(f));
      const SimResult result = simulate(doc, config);
      if (!ledger_path.empty() && !result.chain) {
        err << "dfci: " << doc.name << " produced no custody ledger\n";
        return kUsage;
      }
      if (out_path.empty()) {
        write_trace(out, result.trace);
      } else {
        write_text(out_path, to_jsonl(result.trace));
      }
      if (!ledger_path.empty()) write_text(ledger_path, ledger_text(*result.chain));
      return kOk;
    }

    if (*render_cmd) {
      const MscDocument doc = load_document(msc);
      out << render(doc, format == "dot" ? RenderFormat::dot : RenderFormat::ascii);
      return kOk;
    }

    if (*verify_cmd) {
      const CustodyChain chain = load_ledger(ledger_path);
      const auto v = verify_chain(chain);
      if (v.valid) {
        out << chain.case_id << ": " << style.good("valid") << " (" << chain.entries.size()
            << " entries)\n";
        return kOk;
      }
      out << chain.case_id << ": " << style.bad("invalid") << " at index " << *v.failing_index
          << ": " << to_string(*v.check) << ": " << v.detail << '\n';
      return kViolation;
    }

    if (*coverage_cmd) {
      const MscDocument doc = load_document(msc);
      const Trace trace = load_trace(trace_path);
      const CustodyChain chain = load_ledger(ledger_path);
      if (const auto v = verify_chain(chain); !v.valid) {
        out << chain.case_id << ": " << style.bad("invalid") << " at index " << *v.failing_index
            << ": " << to_string(*v.check) << ": " << v.detail << '\n';
        return kViolation;
      }
      const auto report = check_custody_coverage(doc, trace, chain);
      if (report.covered) {
        out << doc.name << ": custody " << style.good("covered") << " from "
            << doc.custody_span->start << " to " << doc.custody_span->end << '\n';
        return kOk;
      }
      out << doc.name << ": custody " << style.bad("not covered") << '\n';
      for (const auto& g : report.gaps) {
        out << "  " << to_string(g.kind);
        if (!g.msg_id.empty()) out << ' ' << g.msg_id;
        if (g.entry) out << " (entry " << *g.entry << ')';
        out << ": " << g.detail << '\n';
      }
      return kViolation;
    }

    if (*adv_cmd) {
      const MscDocument doc = load_document(msc);
      const auto report = adversary_matrix(doc, parse_kinds(kinds), parse_seeds(seeds));
      if (json) {
        out << to_json(report).dump(2) << '\n';
      } else {
        out << format_table(report);
      }
      return kOk;
    }
  } catch (const Error& e) {
    err << "dfci: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace dfci::cli
