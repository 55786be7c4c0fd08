#include "provalert/synth.hpp"

#include <algorithm>
#include <array>

#include "json.hpp"
#include "rng_util.hpp"

namespace provalert {

namespace {

using detail::splitmix64;

struct BenignTemplate {
  const char* image;
  const char* cmdline;
};

constexpr std::array<BenignTemplate, 6> kRoots = {{
    {"systemd", "systemd --switched-root --system --deserialize 31"},
    {"services.exe", "c:\\windows\\system32\\services.exe"},
    {"launchd", "launchd -s boot"},
    {"sshd", "sshd -D -o AuthorizedKeysFile=/home/user/.ssh/authorized_keys"},
    {"explorer.exe", "c:\\windows\\explorer.exe"},
    {"init", "init splash"},
}};

// Benign commands deliberately reuse a small set of argument tokens
// (/var/log, /home/user, nginx, user, status) the way real fleet telemetry
// repeats working directories and service names.
// Benign commands deliberately reuse a small set of argument tokens
// (/var/log, /home/user, nginx, user) the way real fleet telemetry repeats
// working directories, usernames, and service names.
constexpr std::array<BenignTemplate, 10> kShells = {{
    {"bash", "bash --login user"},
    {"zsh", "zsh -i -l user"},
    {"cmd.exe", "c:\\windows\\system32\\cmd.exe /q"},
    {"powershell.exe", "c:\\windows\\system32\\powershell.exe -noprofile"},
    {"sh", "sh -c cd /home/user && ./run.sh"},
    {"login", "login -p user"},
    {"sshd", "sshd: user@pts"},
    {"tmux", "tmux new-session -d -s user"},
    {"cron", "cron -f"},
    {"gnome-terminal", "gnome-terminal --working-directory /home/user"},
}};

constexpr std::array<BenignTemplate, 16> kLeaves = {{
    {"ls", "ls -la /var/log"},
    {"grep", "grep -r error /var/log"},
    {"cat", "cat /etc/hosts"},
    {"ps", "ps -u user -f"},
    {"tar", "tar -czf backup.tar.gz /home/user"},
    {"python3", "python3 report.py --input data.csv --user user"},
    {"systemctl", "systemctl status nginx"},
    {"curl", "curl -s http://intranet.local/nginx/status"},
    {"du", "du -sh /var/log"},
    {"uptime", "uptime"},
    {"chrome.exe", "c:\\program files\\chrome.exe https://news.example.com"},
    {"notepad.exe", "c:\\windows\\system32\\notepad.exe c:\\users\\user\\notes.txt"},
    {"git", "git -C /home/user status"},
    {"make", "make -C /home/user all"},
    {"rsync", "rsync -a /home/user backup:/srv"},
    {"journalctl", "journalctl -u nginx --since today"},
}};

constexpr std::array<const char*, 4> kBenignEndpoints = {
    "127.0.0.1:8080",
    "10.0.0.5:443",
    "10.0.0.9:5432",
    "192.168.1.20:22",
};

// Fig-style case-study command lines used as technique markers.
constexpr const char* kCscCmdline =
    "/noconfig /fullpaths @C:\\Users\\user\\AppData\\Local\\Temp\\4krwc2ua.cmdline";
constexpr const char* kHexMarker =
    "echo 732F5B5B3A626C616E6B3A5D5D5C2B202F202F67 | xxd -r -p | sh";
constexpr const char* kBase64Marker =
    "echo 2E2F6774636163686520263E202F6465762F6E756C6C2026 | xxd -r -p | sh";

struct Generator {
  Scenario scenario;
  std::uint64_t rng = 0;
  std::string host = "h1";
  std::int64_t next_pid = 1000;
  std::int64_t ts = 1'000'000;
  int event_seq = 0;

  std::int64_t tick() {
    ts += 1000 + (std::int64_t)(splitmix64(rng) % 5000);
    return ts;
  }

  std::string next_event_id() {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "s-%06d", event_seq++);
    return buf;
  }

  // Emits a ProcessStart and returns (node_id, pid).
  std::pair<NodeId, std::int64_t> start(std::int64_t ppid,
                                        const std::string& image,
                                        const std::string& cmdline) {
    AuditEvent e;
    e.event_id = next_event_id();
    e.kind = EventKind::ProcessStart;
    e.ts = tick();
    e.host = host;
    e.pid = next_pid++;
    e.ppid = ppid;
    e.image = image;
    e.cmdline = cmdline;
    scenario.events.push_back(e);
    return {make_node_id(host, e.pid, e.ts), e.pid};
  }

  void connect(std::int64_t pid, const std::string& image,
               const std::string& remote) {
    AuditEvent e;
    e.event_id = next_event_id();
    e.kind = EventKind::NetConnect;
    e.ts = tick();
    e.host = host;
    e.pid = pid;
    e.image = image;
    e.remote = remote;
    scenario.events.push_back(e);
  }

  // One benign tree rooted under a fresh synthetic parent; returns the
  // number of process nodes created (synthetic root not counted).
  int benign_tree(int budget) {
    std::int64_t orphan_ppid = next_pid++;  // never started: synthetic root
    const auto& root_tpl = kRoots[splitmix64(rng) % kRoots.size()];
    auto [root_id, root_pid] = start(orphan_ppid, root_tpl.image, root_tpl.cmdline);
    int created = 1;

    int shells = 1 + (int)(splitmix64(rng) % 3);
    for (int s = 0; s < shells && created < budget; ++s) {
      // Shell sessions nest: a login shell often spawns further shells
      // (tmux panes, subshells), so benign chains reach depth 2-4 before
      // the workload command runs.
      std::int64_t parent_pid = root_pid;
      int nesting = 1 + (int)(splitmix64(rng) % 3);
      for (int n = 0; n < nesting && created < budget; ++n) {
        const auto& tpl = kShells[splitmix64(rng) % kShells.size()];
        auto [shell_id, shell_pid] = start(parent_pid, tpl.image, tpl.cmdline);
        parent_pid = shell_pid;
        ++created;
      }
      int leaves = 1 + (int)(splitmix64(rng) % 3);
      for (int l = 0; l < leaves && created < budget; ++l) {
        const auto& leaf = kLeaves[splitmix64(rng) % kLeaves.size()];
        auto [leaf_id, leaf_pid] = start(parent_pid, leaf.image, leaf.cmdline);
        ++created;
        if (splitmix64(rng) % 4 == 0) {
          connect(leaf_pid, leaf.image,
                  kBenignEndpoints[splitmix64(rng) % kBenignEndpoints.size()]);
        }
      }
    }
    return created;
  }

  // Records a chain step as ground truth and links it to the previous node.
  void mark(const NodeId& node, const NodeId* prev) {
    scenario.attack_nodes.insert(node);
    if (prev) scenario.attack_edges.insert({*prev, node});
  }

  void inject_attack(ScenarioKind kind) {
    std::int64_t orphan_ppid = next_pid++;
    NodeId synthetic_root = make_node_id(host, orphan_ppid, 0);
    scenario.attack_nodes.insert(synthetic_root);

    auto chain_start = [&](const NodeId* prev, std::int64_t ppid,
                           const std::string& image, const std::string& cmd)
        -> std::pair<NodeId, std::int64_t> {
      auto [id, pid] = start(ppid, image, cmd);
      mark(id, prev ? prev : &synthetic_root);
      return {id, pid};
    };

    // A command burst under the last chain node: real intrusions fan out
    // into several follow-up commands, which also gives the interior chain
    // nodes the betweenness a lone tail would lack.
    auto burst = [&](const NodeId& parent, std::int64_t ppid,
                     std::initializer_list<BenignTemplate> cmds) {
      for (const auto& t : cmds) chain_start(&parent, ppid, t.image, t.cmdline);
    };

    switch (kind) {
      case ScenarioKind::TurlaChain: {
        auto [a, ap] = chain_start(nullptr, orphan_ppid, "Explorer.exe", "");
        auto [b, bp] = chain_start(
            &a, ap, "Powershell",
            "powershell -nop -w hidden -f "
            "C:\\Users\\user\\AppData\\Local\\Temp\\stage.ps1");
        auto [c, cp] = chain_start(&b, bp, "csc.exe", kCscCmdline);
        connect(cp, "csc.exe", "154.26.156.62:4444");
        auto [d, dp] = chain_start(&c, cp, "WMI.exe", "tasklist");
        burst(d, dp,
              {{"whoami.exe", "whoami /all /fo list"},
               {"netstat.exe", "netstat -ano"},
               {"systeminfo.exe", "systeminfo /fo csv"}});
        scenario.markers = {kCscCmdline, "tasklist"};
        break;
      }
      case ScenarioKind::HexTransform: {
        auto [a, ap] = chain_start(nullptr, orphan_ppid, "bash", "bash -i");
        auto [b, bp] = chain_start(&a, ap, "sh", kHexMarker);
        auto [c, cp] = chain_start(&b, bp, "sed",
                                   "sed s/[[:blank:]]\\+/ /g /dev/shm/.cfg/raw");
        burst(c, cp, {{"whoami", "whoami > /dev/shm/.cfg/rec"},
                      {"id", "id -u -n > /dev/shm/.cfg/rec"},
                      {"uname", "uname -a -r > /dev/shm/.cfg/rec"}});
        scenario.markers = {kHexMarker};
        break;
      }
      case ScenarioKind::Base64Backdoor: {
        auto [a, ap] = chain_start(nullptr, orphan_ppid, "bash", "bash -i");
        auto [b, bp] = chain_start(&a, ap, "sh", kBase64Marker);
        auto [c, cp] = chain_start(&b, bp, "gtcache",
                                   "./gtcache -o /tmp/.gt/rec -l /tmp/.gt/gt.log &> /dev/null &");
        connect(cp, "gtcache", "154.26.156.62:4444");
        burst(c, cp, {{"whoami", "whoami >> /tmp/.gt/rec 2>> /tmp/.gt/gt.log"},
                      {"netstat", "netstat -antp >> /tmp/.gt/rec 2>> /tmp/.gt/gt.log"},
                      {"crontab", "crontab -l -u root >> /tmp/.gt/rec 2>> /tmp/.gt/gt.log"}});
        scenario.markers = {kBase64Marker};
        break;
      }
      case ScenarioKind::LogDeletion: {
        auto [a, ap] = chain_start(nullptr, orphan_ppid, "bash", "bash -i");
        auto [b, bp] = chain_start(&a, ap, "sh", "clear_console");
        auto [c, cp] = chain_start(&b, bp, "rm", "rm -rf /var/log/audit");
        burst(c, cp, {{"rm", "rm -f /root/.bash_history /root/.zsh_history"},
                      {"shred", "shred -zu /var/log/audit"},
                      {"rm", "rm -rf /var/log/audit /root/.bash_history"}});
        scenario.markers = {"clear_console"};
        break;
      }
      case ScenarioKind::TimestampForgery: {
        auto [a, ap] = chain_start(nullptr, orphan_ppid, "bash", "bash -i");
        auto [b, bp] = chain_start(&a, ap, "date", "date -d null +%s");
        auto [c, cp] = chain_start(&b, bp, "touch",
                                   "touch -t 197001010000.00 /opt/.tfx/payload.so");
        burst(c, cp, {{"touch", "touch -r /bin/ls /opt/.tfx/payload.so"},
                      {"stat", "stat -c %y,%x /opt/.tfx/payload.so"},
                      {"mv", "mv /opt/.tfx/payload.so /lib/.modcache/kworker.so"}});
        scenario.markers = {"date -d null +%s"};
        break;
      }
      case ScenarioKind::PrivEscalation: {
        auto [a, ap] = chain_start(nullptr, orphan_ppid, "bash", "bash -i");
        auto [b, bp] = chain_start(&a, ap, "chmod", "chmod +x tcexec");
        auto [c, cp] = chain_start(&b, bp, "tcexec", "./tcexec -q -p 4444");
        burst(c, cp, {{"whoami", "whoami > /tmp/.tc/rec"},
                      {"sudo", "sudo -l -n > /tmp/.tc/rec"},
                      {"find", "find / -perm -4000 -type f > /tmp/.tc/rec"}});
        scenario.markers = {"chmod +x tcexec"};
        break;
      }
    }
  }
};

}  // namespace

ScenarioKind scenario_kind_from_name(const std::string& name) {
  for (ScenarioKind k : all_scenario_kinds()) {
    if (scenario_kind_name(k) == name) return k;
  }
  throw UnknownKind("unknown scenario kind: " + name);
}

std::string scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::TurlaChain: return "turla-chain";
    case ScenarioKind::HexTransform: return "hex-transform";
    case ScenarioKind::Base64Backdoor: return "base64-backdoor";
    case ScenarioKind::LogDeletion: return "log-deletion";
    case ScenarioKind::TimestampForgery: return "timestamp-forgery";
    default: return "priv-escalation";
  }
}

std::vector<ScenarioKind> all_scenario_kinds() {
  return {ScenarioKind::TurlaChain,      ScenarioKind::HexTransform,
          ScenarioKind::Base64Backdoor,  ScenarioKind::LogDeletion,
          ScenarioKind::TimestampForgery, ScenarioKind::PrivEscalation};
}

Scenario generate_scenario(ScenarioKind kind, std::uint64_t seed, int scale) {
  if (scale < 10) scale = 10;

  Generator gen;
  gen.rng = seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull;
  gen.scenario.kind = kind;
  gen.scenario.seed = seed;
  gen.scenario.name = scenario_kind_name(kind) + "-" + std::to_string(seed);

  gen.inject_attack(kind);
  const int attack_nodes = (int)gen.scenario.attack_nodes.size();

  int benign_budget = std::max(2, scale - attack_nodes);
  while (benign_budget > 0) {
    int created = gen.benign_tree(benign_budget);
    benign_budget -= created;
  }

  gen.scenario.events = normalize_events(std::move(gen.scenario.events));
  return gen.scenario;
}

std::string scenario_truth_json(const Scenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["kind"] = scenario_kind_name(s.kind);
  j["seed"] = s.seed;
  j["attack_nodes"] = s.attack_nodes;
  j["attack_edges"] = nlohmann::json::array();
  for (const auto& [p, c] : s.attack_edges)
    j["attack_edges"].push_back({p, c});
  j["markers"] = s.markers;
  return j.dump(2) + "\n";
}

Scenario scenario_truth_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Scenario s;
  s.name = j.value("name", "");
  s.kind = scenario_kind_from_name(j.value("kind", "turla-chain"));
  s.seed = j.value("seed", std::uint64_t{0});
  for (const auto& n : j.at("attack_nodes"))
    s.attack_nodes.insert(n.get<std::string>());
  for (const auto& e : j.at("attack_edges"))
    s.attack_edges.emplace(e.at(0).get<std::string>(),
                           e.at(1).get<std::string>());
  for (const auto& m : j.at("markers")) s.markers.push_back(m.get<std::string>());
  return s;
}

namespace {

struct AlarmView {
  std::vector<NodeId> nodes;
  std::vector<std::string> cmdlines;  // flattened
};

Metrics score_views(const std::vector<AlarmView>& alarms, const Scenario& truth,
                    MetricLevel level) {
  Metrics m;
  m.level = level;

  double precision = 0.0, recall = 0.0;
  switch (level) {
    case MetricLevel::Node: {
      std::set<NodeId> predicted;
      for (const auto& a : alarms)
        predicted.insert(a.nodes.begin(), a.nodes.end());
      std::size_t hit = 0;
      for (const auto& n : predicted)
        if (truth.attack_nodes.count(n)) ++hit;
      precision = predicted.empty() ? 0.0 : (double)hit / predicted.size();
      recall = truth.attack_nodes.empty()
                   ? 0.0
                   : (double)hit / truth.attack_nodes.size();
      break;
    }
    case MetricLevel::InfoPath: {
      std::size_t tp = 0;
      std::set<std::pair<NodeId, NodeId>> covered;
      for (const auto& a : alarms) {
        bool hit = false;
        for (std::size_t i = 0; i + 1 < a.nodes.size(); ++i) {
          std::pair<NodeId, NodeId> e{a.nodes[i], a.nodes[i + 1]};
          if (truth.attack_edges.count(e)) {
            hit = true;
            covered.insert(e);
          }
        }
        if (hit) ++tp;
      }
      precision = alarms.empty() ? 0.0 : (double)tp / alarms.size();
      recall = truth.attack_edges.empty()
                   ? 0.0
                   : (double)covered.size() / truth.attack_edges.size();
      break;
    }
    case MetricLevel::Ttp: {
      std::size_t covered = 0;
      for (const auto& marker : truth.markers) {
        bool found = false;
        for (const auto& a : alarms) {
          for (const auto& c : a.cmdlines) {
            if (c == marker) {
              found = true;
              break;
            }
          }
          if (found) break;
        }
        if (found) ++covered;
      }
      std::size_t alarms_with_marker = 0;
      for (const auto& a : alarms) {
        bool has = false;
        for (const auto& c : a.cmdlines)
          if (std::find(truth.markers.begin(), truth.markers.end(), c) !=
              truth.markers.end())
            has = true;
        if (has) ++alarms_with_marker;
      }
      precision = alarms.empty() ? 0.0 : (double)alarms_with_marker / alarms.size();
      recall = truth.markers.empty() ? 0.0
                                     : (double)covered / truth.markers.size();
      break;
    }
  }

  m.precision = precision;
  m.recall = recall;
  m.f1 = (precision + recall) > 0.0
             ? 2.0 * precision * recall / (precision + recall)
             : 0.0;
  return m;
}

}  // namespace

Metrics score_alarms(const std::vector<SnapshotAlarm>& alarms,
                     const Scenario& truth, MetricLevel level) {
  std::vector<AlarmView> views;
  views.reserve(alarms.size());
  for (const auto& a : alarms) {
    AlarmView v;
    v.nodes = a.path.nodes;
    for (const auto& per_node : a.cmdlines)
      v.cmdlines.insert(v.cmdlines.end(), per_node.begin(), per_node.end());
    views.push_back(std::move(v));
  }
  return score_views(views, truth, level);
}

Metrics score_report_json(const std::string& report_json, const Scenario& truth,
                          MetricLevel level) {
  nlohmann::json j = nlohmann::json::parse(report_json);
  std::vector<AlarmView> views;
  for (const auto& ja : j.at("alarms")) {
    AlarmView v;
    for (const auto& n : ja.at("nodes")) v.nodes.push_back(n);
    for (const auto& per_node : ja.at("cmdlines"))
      for (const auto& c : per_node) v.cmdlines.push_back(c);
    views.push_back(std::move(v));
  }
  return score_views(views, truth, level);
}

}  // namespace provalert
