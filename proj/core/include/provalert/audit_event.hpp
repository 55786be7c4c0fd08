#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace provalert {

enum class EventKind { ProcessStart, NetConnect };

/// One normalized telemetry record: a process start or an outbound
/// network connection observed on a host.
struct AuditEvent {
  std::string event_id;
  EventKind kind = EventKind::ProcessStart;
  std::int64_t ts = 0;  // nanoseconds since epoch
  std::string host;
  std::int64_t pid = 0;
  std::int64_t ppid = 0;     // ProcessStart only
  std::string image;
  std::string cmdline;       // ProcessStart only, may be empty
  std::string remote;        // NetConnect only, "ip:port"

  bool operator==(const AuditEvent&) const = default;
};

enum class ParseErrorKind { MalformedLine, SchemaViolation, BadTimestamp };

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind k, const std::string& what)
      : std::runtime_error(what), kind_(k) {}
  ParseErrorKind kind() const { return kind_; }

 private:
  ParseErrorKind kind_;
};

/// Parses one JSON-lines record. Unknown extra fields are ignored.
/// Throws ParseError on malformed input, missing required fields for
/// the record kind, or ts <= 0.
AuditEvent parse_event_line(const std::string& line);

/// Renders an event back to its JSON-lines form. parse_event_line is
/// the exact inverse for every valid event.
std::string render_event_line(const AuditEvent& e);

struct NormalizeResult {
  std::vector<AuditEvent> events;  // sorted by (ts, event_id), deduped
  std::size_t skipped = 0;         // malformed lines dropped
};

/// Sorts, dedups, and drops unparseable lines (counted, not fatal).
NormalizeResult normalize_stream(const std::vector<std::string>& lines);

/// Same contract applied to already-parsed events.
std::vector<AuditEvent> normalize_events(std::vector<AuditEvent> events);

}  // namespace provalert
