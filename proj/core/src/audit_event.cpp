#include "provalert/audit_event.hpp"

#include <algorithm>

#include "json.hpp"

namespace provalert {

namespace {

using nlohmann::json;

// Content hash used when a record carries no event_id of its own.
// Identical records map to the same id, so normalize_stream still
// collapses exact duplicates.
std::string derived_event_id(const AuditEvent& e) {
  std::string key = (e.kind == EventKind::ProcessStart ? "P" : "N");
  key += '\x1f' + std::to_string(e.ts) + '\x1f' + e.host + '\x1f' +
         std::to_string(e.pid) + '\x1f' + std::to_string(e.ppid) + '\x1f' +
         e.image + '\x1f' + e.cmdline + '\x1f' + e.remote;
  // FNV-1a, 64-bit
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "ev-%016llx", (unsigned long long)h);
  return buf;
}

}  // namespace

AuditEvent parse_event_line(const std::string& line) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw ParseError(ParseErrorKind::MalformedLine, "not a JSON object: " + line);
  }

  auto require_string = [&](const char* field) -> std::string {
    auto it = j.find(field);
    if (it == j.end() || !it->is_string()) {
      throw ParseError(ParseErrorKind::SchemaViolation,
                       std::string("missing or non-string field '") + field + "'");
    }
    return it->get<std::string>();
  };
  auto require_int = [&](const char* field) -> std::int64_t {
    auto it = j.find(field);
    if (it == j.end() || !it->is_number_integer()) {
      throw ParseError(ParseErrorKind::SchemaViolation,
                       std::string("missing or non-integer field '") + field + "'");
    }
    return it->get<std::int64_t>();
  };

  AuditEvent e;
  const std::string kind = require_string("kind");
  if (kind == "ProcessStart") {
    e.kind = EventKind::ProcessStart;
  } else if (kind == "NetConnect") {
    e.kind = EventKind::NetConnect;
  } else {
    throw ParseError(ParseErrorKind::SchemaViolation, "unknown kind: " + kind);
  }

  e.ts = require_int("ts");
  if (e.ts <= 0) {
    throw ParseError(ParseErrorKind::BadTimestamp,
                     "ts must be > 0, got " + std::to_string(e.ts));
  }
  e.host = require_string("host");
  e.pid = require_int("pid");
  if (e.pid < 0) {
    throw ParseError(ParseErrorKind::SchemaViolation, "pid must be >= 0");
  }
  e.image = require_string("image");

  if (e.kind == EventKind::ProcessStart) {
    e.ppid = require_int("ppid");
    if (e.ppid < 0) {
      throw ParseError(ParseErrorKind::SchemaViolation, "ppid must be >= 0");
    }
    if (auto it = j.find("cmdline"); it != j.end() && it->is_string()) {
      e.cmdline = it->get<std::string>();
    }
  } else {
    e.remote = require_string("remote");
  }

  if (auto it = j.find("event_id"); it != j.end() && it->is_string()) {
    e.event_id = it->get<std::string>();
  } else {
    e.event_id = derived_event_id(e);
  }
  return e;
}

std::string render_event_line(const AuditEvent& e) {
  json j;
  j["event_id"] = e.event_id;
  j["kind"] = e.kind == EventKind::ProcessStart ? "ProcessStart" : "NetConnect";
  j["ts"] = e.ts;
  j["host"] = e.host;
  j["pid"] = e.pid;
  j["image"] = e.image;
  if (e.kind == EventKind::ProcessStart) {
    j["ppid"] = e.ppid;
    j["cmdline"] = e.cmdline;
  } else {
    j["remote"] = e.remote;
  }
  return j.dump();
}

std::vector<AuditEvent> normalize_events(std::vector<AuditEvent> events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const AuditEvent& a, const AuditEvent& b) {
                     if (a.ts != b.ts) return a.ts < b.ts;
                     return a.event_id < b.event_id;
                   });
  // Equal (ts, event_id) keeps first-seen; exact duplicates collapse.
  events.erase(std::unique(events.begin(), events.end(),
                           [](const AuditEvent& a, const AuditEvent& b) {
                             return a.ts == b.ts && a.event_id == b.event_id;
                           }),
               events.end());
  return events;
}

NormalizeResult normalize_stream(const std::vector<std::string>& lines) {
  NormalizeResult out;
  std::vector<AuditEvent> events;
  events.reserve(lines.size());
  for (const auto& line : lines) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      events.push_back(parse_event_line(line));
    } catch (const ParseError&) {
      ++out.skipped;
    }
  }
  out.events = normalize_events(std::move(events));
  return out;
}

}  // namespace provalert
