#pragma once

// Recorded runs: one TraceEvent per observed send or receive, stored as JSON
// Lines with the fields seq, ts, protocol, msg_id, kind, from, to,
// payload_digest, meta (in that order). `seq` is the ordering authority;
// `ts` is informational.

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dfci/error.hpp"
#include "dfci/event_graph.hpp"
#include "dfci/sha256.hpp"
#include "dfci/timestamp.hpp"

namespace dfci {

struct TraceEvent {
  std::uint64_t seq = 0;
  std::string ts;
  std::string protocol;
  std::string msg_id;
  EventKind kind = EventKind::send;
  std::string from;
  std::string to;
  std::string payload_digest;
  std::map<std::string, std::string> meta;

  bool operator==(const TraceEvent&) const = default;
};

using Trace = std::vector<TraceEvent>;

inline nlohmann::ordered_json to_json(const TraceEvent& e) {
  nlohmann::ordered_json j;
  j["seq"] = e.seq;
  j["ts"] = e.ts;
  j["protocol"] = e.protocol;
  j["msg_id"] = e.msg_id;
  j["kind"] = std::string(to_string(e.kind));
  j["from"] = e.from;
  j["to"] = e.to;
  j["payload_digest"] = e.payload_digest;
  j["meta"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : e.meta) j["meta"][k] = v;
  return j;
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* name,
                                   const std::string& where) {
  auto it = j.find(name);
  if (it == j.end()) throw Error(ErrorKind::Format, where + ": missing field '" + name + "'");
  return *it;
}

inline std::string string_field(const nlohmann::json& j, const char* name,
                                const std::string& where) {
  const auto& v = field(j, name, where);
  if (!v.is_string()) {
    throw Error(ErrorKind::Format, where + ": field '" + name + "' must be a string");
  }
  return v.get<std::string>();
}

}  // namespace detail

inline TraceEvent trace_event_from_json(const nlohmann::json& j, const std::string& where) {
  static const char* const kFields[] = {"seq",  "ts", "protocol",       "msg_id", "kind",
                                        "from", "to", "payload_digest", "meta"};
  if (!j.is_object()) throw Error(ErrorKind::Format, where + ": event must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kFields), std::end(kFields), key) == std::end(kFields)) {
      throw Error(ErrorKind::Format, where + ": unknown field '" + key + "'");
    }
  }
  TraceEvent e;
  const auto& seq = detail::field(j, "seq", where);
  if (!seq.is_number_unsigned() && !(seq.is_number_integer() && seq.get<std::int64_t>() >= 0)) {
    throw Error(ErrorKind::Format, where + ": 'seq' must be a non-negative integer");
  }
  e.seq = seq.get<std::uint64_t>();
  e.ts = detail::string_field(j, "ts", where);
  if (!parse_timestamp(e.ts)) {
    throw Error(ErrorKind::Format, where + ": 'ts' is not an ISO-8601 UTC timestamp");
  }
  e.protocol = detail::string_field(j, "protocol", where);
  e.msg_id = detail::string_field(j, "msg_id", where);
  const auto kind = detail::string_field(j, "kind", where);
  if (kind == "send") e.kind = EventKind::send;
  else if (kind == "recv") e.kind = EventKind::recv;
  else throw Error(ErrorKind::Format, where + ": 'kind' must be send or recv");
  e.from = detail::string_field(j, "from", where);
  e.to = detail::string_field(j, "to", where);
  e.payload_digest = detail::string_field(j, "payload_digest", where);
  if (!is_hex64(e.payload_digest)) {
    throw Error(ErrorKind::Format, where + ": 'payload_digest' must be 64 lowercase hex digits");
  }
  const auto& meta = detail::field(j, "meta", where);
  if (!meta.is_object()) throw Error(ErrorKind::Format, where + ": 'meta' must be an object");
  for (const auto& [k, v] : meta.items()) {
    if (!v.is_string()) {
      throw Error(ErrorKind::Format, where + ": meta values must be strings");
    }
    e.meta[k] = v.get<std::string>();
  }
  return e;
}

// Reads a JSON Lines trace. Blank lines are skipped; seq must strictly
// increase.
inline Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& ex) {
      throw Error(ErrorKind::Format, where + ": " + ex.what());
    }
    TraceEvent e = trace_event_from_json(j, where);
    if (!trace.empty() && e.seq <= trace.back().seq) {
      throw Error(ErrorKind::Format, where + ": seq " + std::to_string(e.seq) +
                                         " does not increase");
    }
    trace.push_back(std::move(e));
  }
  return trace;
}

inline Trace read_trace(const std::string& text) {
  std::istringstream in(text);
  return read_trace(in);
}

inline void write_trace(std::ostream& out, const Trace& trace) {
  for (const auto& e : trace) out << to_json(e).dump() << '\n';
}

inline std::string to_jsonl(const Trace& trace) {
  std::ostringstream os;
  write_trace(os, trace);
  return os.str();
}

}  // namespace dfci
