#include "scap/scenarios/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace scap::scenarios {

using nlohmann::json;

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kHeartbeat: return "heartbeat";
    case ScenarioKind::kAttestation: return "attestation";
    case ScenarioKind::kDynamicHeartbeat: return "dynamic_heartbeat";
    case ScenarioKind::kLeaderOutage: return "leader_outage";
    case ScenarioKind::kDynamicAttestation: return "dynamic_attestation";
    case ScenarioKind::kSecatt: return "secatt";
    case ScenarioKind::kForgery: return "forgery";
    case ScenarioKind::kCustom: return "custom";
  }
  return "?";
}

namespace {

/// Field access with path-qualified error messages.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& at(const char* key) const {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError("missing field " + qualify(key));
    return j_.at(key);
  }

  template <typename T>
  T get(const char* key) const {
    const json& v = at(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError("field " + qualify(key) + " has the wrong type");
    }
  }

  template <typename T>
  T get(const char* key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  /// A scalar or a list of scalars.
  template <typename T>
  std::vector<T> list(const char* key) const {
    const json& v = at(key);
    if (!v.is_array()) return {get<T>(key)};
    std::vector<T> out;
    for (const auto& e : v) {
      try {
        out.push_back(e.get<T>());
      } catch (const json::exception&) {
        throw ConfigError("field " + qualify(key) + " has the wrong type");
      }
    }
    if (out.empty()) throw ConfigError("field " + qualify(key) + " must not be empty");
    return out;
  }

  Reader child(const char* key) const { return Reader(at(key), qualify(key)); }

  std::string qualify(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("unknown field " + qualify(it.key().c_str()));
  }

 private:
  const json& j_;
  std::string path_;
  mutable std::set<std::string> used_;
};

ScenarioKind parse_kind(const std::string& s) {
  for (auto k : {ScenarioKind::kHeartbeat, ScenarioKind::kAttestation, ScenarioKind::kDynamicHeartbeat,
                 ScenarioKind::kLeaderOutage, ScenarioKind::kDynamicAttestation, ScenarioKind::kSecatt,
                 ScenarioKind::kForgery, ScenarioKind::kCustom})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown scenario kind '" + s + "'");
}

TopologySpec parse_topology(const Reader& r) {
  TopologySpec t;
  const auto type = r.get<std::string>("type");
  if (type == "kary_tree") {
    t.type = TopologySpec::Type::kKaryTree;
    t.arity = r.get<std::uint32_t>("arity");
    if (t.arity < 1) throw ConfigError("topology.arity must be at least 1");
  } else if (type == "grid") {
    t.type = TopologySpec::Type::kGrid;
    t.rows = r.get<std::uint32_t>("rows");
    t.cols = r.get<std::uint32_t>("cols");
  } else if (type == "graph") {
    t.type = TopologySpec::Type::kGraph;
    for (const auto& e : r.at("edges")) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned())
        throw ConfigError("topology.edges entries must be [a, b] device id pairs");
      t.edges.emplace_back(e[0].get<DeviceId>(), e[1].get<DeviceId>());
    }
  } else if (type == "random_connected") {
    t.type = TopologySpec::Type::kRandomConnected;
    t.extra_edges = r.get<std::uint32_t>("extra_edges", 0);
  } else if (type == "dynamic") {
    t.type = TopologySpec::Type::kDynamic;
    auto& m = t.mobility;
    m.width = r.get("width", m.width);
    m.height = r.get("height", m.height);
    m.range = r.get("range", m.range);
    m.v_min = r.get("v_min", m.v_min);
    m.v_max = r.get("v_max", m.v_max);
    m.tick = r.get("tick", m.tick);
    if (!(m.width > 0 && m.height > 0 && m.range > 0)) throw ConfigError("topology area and range must be positive");
    if (!(m.v_min > 0 && m.v_min <= m.v_max)) throw ConfigError("topology speeds must satisfy 0 < v_min <= v_max");
    if (!(m.tick > 0)) throw ConfigError("topology.tick must be positive");
  } else {
    throw ConfigError("unknown topology type '" + type + "'");
  }
  r.reject_unknown();
  return t;
}

AdversaryAction parse_action(const Reader& r) {
  static const std::pair<const char*, AdversaryAction::Type> kNames[] = {
      {"take_offline", AdversaryAction::Type::kTakeOffline},
      {"bring_online", AdversaryAction::Type::kBringOnline},
      {"physical_compromise", AdversaryAction::Type::kPhysicalCompromise},
      {"compromise_software", AdversaryAction::Type::kCompromiseSoftware},
      {"drop_link", AdversaryAction::Type::kDropLink},
      {"inject", AdversaryAction::Type::kInject},
      {"replay", AdversaryAction::Type::kReplay},
  };
  AdversaryAction a;
  const auto name = r.get<std::string>("action");
  bool found = false;
  for (const auto& [k, t] : kNames)
    if (name == k) {
      a.type = t;
      found = true;
    }
  if (!found) throw ConfigError("unknown adversary action '" + name + "'");
  a.time = r.get<double>("time");
  a.device = r.get<DeviceId>("device");
  using T = AdversaryAction::Type;
  switch (a.type) {
    case T::kTakeOffline: a.duration = r.get("duration", 0.0); break;
    case T::kCompromiseSoftware:
      a.offset = r.get<std::size_t>("offset", 0);
      a.mask = r.get<std::uint8_t>("mask", 1);
      if (a.mask == 0) throw ConfigError(r.qualify("mask") + " must be nonzero");
      break;
    case T::kDropLink:
      a.peer = r.get<DeviceId>("peer");
      a.until = r.get<double>("until");
      break;
    case T::kInject: {
      a.peer = r.get<DeviceId>("peer");
      const auto m = r.get<unsigned>("msg");
      if (m < 1 || m > 13) throw ConfigError(r.qualify("msg") + " must be a message type in [1, 13]");
      a.msg = static_cast<MsgType>(m);
      try {
        a.body = from_hex(r.get<std::string>("body_hex", ""));
      } catch (const std::exception&) {
        throw ConfigError(r.qualify("body_hex") + " is not valid hex");
      }
      break;
    }
    case T::kReplay:
      a.from = r.get<double>("from");
      a.until = r.get<double>("until");
      if (!(a.from < a.until)) throw ConfigError(r.qualify("from") + " must precede until");
      break;
    default: break;
  }
  r.reject_unknown();
  return a;
}

AttestationSpec parse_attestation(const Reader& r) {
  AttestationSpec a;
  a.at = r.get<double>("at");
  a.entry = r.get<DeviceId>("entry", 1);
  const auto mode = r.get<std::string>("mode", "tree");
  if (mode == "tree")
    a.mode = AttMode::kTree;
  else if (mode == "dynamic")
    a.mode = AttMode::kDynamic;
  else
    throw ConfigError("unknown attestation mode '" + mode + "'");
  a.informative = r.get("informative", true);
  a.collect_after = r.get("collect_after", 0.0);
  r.reject_unknown();
  return a;
}

bool needs_network(ScenarioKind k) { return k != ScenarioKind::kSecatt && k != ScenarioKind::kForgery; }

bool dynamic_kind(ScenarioKind k) {
  return k == ScenarioKind::kDynamicHeartbeat || k == ScenarioKind::kLeaderOutage ||
         k == ScenarioKind::kDynamicAttestation;
}

}  // namespace

ScenarioConfig parse_config(const json& j) {
  const Reader r(j, "");
  ScenarioConfig c;
  c.name = r.get<std::string>("name");
  if (c.name.empty() || c.name.find_first_of(",\n\"") != std::string::npos)
    throw ConfigError("name must be non-empty and free of commas, quotes and newlines");
  c.kind = parse_kind(r.get<std::string>("kind"));

  if (needs_network(c.kind)) {
    c.topology = parse_topology(r.child("topology"));
    if (c.topology.type == TopologySpec::Type::kGrid && !r.has("n"))
      c.n_list = {c.topology.rows * c.topology.cols};
    else
      c.n_list = r.list<std::uint32_t>("n");
    const Reader t = r.child("timing");
    c.protocol.time.delta = t.get<double>("delta");
    c.protocol.time.delta_hb = t.get<double>("delta_hb");
    c.protocol.time.t_attack = t.get<double>("t_attack");
    t.reject_unknown();
  }
  c.allow_unsafe_timing = r.get("allow_unsafe_timing", false);

  const bool mobile = c.topology.type == TopologySpec::Type::kDynamic;
  c.protocol.polling = mobile;
  c.protocol.request_window_s = c.protocol.time.t_attack;
  if (r.has("protocol")) {
    const Reader p = r.child("protocol");
    auto& pc = c.protocol;
    pc.polling = p.get("polling", pc.polling);
    pc.poll_interval_s = p.get("poll_interval", pc.poll_interval_s);
    pc.request_window_s = p.get("request_window", pc.request_window_s);
    pc.child_timeout_s = p.get("child_timeout", pc.child_timeout_s);
    pc.retry_s = p.get("retry", pc.retry_s);
    pc.s = p.get("s", pc.s);
    p.reject_unknown();
    if (!(pc.poll_interval_s > 0)) throw ConfigError("protocol.poll_interval must be positive");
    if (!(pc.request_window_s > 0)) throw ConfigError("protocol.request_window must be positive");
    if (!(pc.child_timeout_s > 0)) throw ConfigError("protocol.child_timeout must be positive");
  }
  if (r.has("delay")) {
    const Reader d = r.child("delay");
    c.delay.base_latency = d.get("base_latency", c.delay.base_latency);
    c.delay.throughput_bps = d.get("throughput_bps", c.delay.throughput_bps);
    d.reject_unknown();
    if (!(c.delay.base_latency >= 0) || !(c.delay.throughput_bps > 0))
      throw ConfigError("delay: base_latency must be >= 0 and throughput_bps > 0");
  }
  c.null_crypto = r.get("null_crypto", false);
  c.software_attestation = r.get("software_attestation", false);
  c.preestablish = r.get("preestablish_channels", c.kind == ScenarioKind::kAttestation);
  if (r.has("key_exchange")) c.key_exchange = r.list<bool>("key_exchange");
  if (r.has("informative")) c.informative = r.list<bool>("informative");
  c.attest_at = r.get("attest_at", c.attest_at);
  if (r.has("attestations"))
    for (std::size_t i = 0; const auto& a : r.at("attestations"))
      c.attestations.push_back(parse_attestation(Reader(a, "attestations[" + std::to_string(i++) + "]")));
  if (r.has("adversary"))
    for (std::size_t i = 0; const auto& a : r.at("adversary"))
      c.adversary.push_back(parse_action(Reader(a, "adversary[" + std::to_string(i++) + "]")));
  c.outage_period = r.get("outage_period", c.outage_period);
  c.seeds = r.get("seeds", dynamic_kind(c.kind) ? 10u : 1u);
  c.horizon = r.get("horizon", 0.0);

  if (c.kind == ScenarioKind::kSecatt) {
    const Reader s = r.child("secatt");
    auto& sp = c.secatt;
    sp.strategies = s.list<std::string>("strategies");
    sp.runs = s.get("runs", sp.runs);
    sp.n_min = s.get("n_min", sp.n_min);
    sp.n_max = s.get("n_max", sp.n_max);
    sp.c = s.get("c", sp.c);
    sp.s = s.get("s", sp.s);
    sp.negative_control = s.get("negative_control", sp.negative_control);
    s.reject_unknown();
  }
  if (c.kind == ScenarioKind::kForgery) {
    const Reader f = r.child("forgery");
    auto& fp = c.forgery;
    fp.n = f.get("n", fp.n);
    fp.s = f.get("s", fp.s);
    fp.c = f.get("c", fp.c);
    fp.trials = f.get("trials", fp.trials);
    f.reject_unknown();
  }
  r.reject_unknown();
  validate(c);
  return c;
}

ScenarioConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void validate(const ScenarioConfig& c) {
  if (c.seeds < 1) throw ConfigError("seeds must be at least 1");
  if (c.horizon < 0) throw ConfigError("horizon must be non-negative");
  if (c.kind == ScenarioKind::kSecatt) {
    const auto& s = c.secatt;
    static const std::set<std::string> kKnown = {"rejoin",   "extract-then-replay-heartbeat", "report-replay",
                                                 "bitflip",  "collision-guess",               "two-key"};
    for (const auto& name : s.strategies)
      if (!kKnown.count(name)) throw ConfigError("unknown secatt strategy '" + name + "'");
    if (s.n_min < 2 || s.n_min > s.n_max) throw ConfigError("secatt: need 2 <= n_min <= n_max");
    if (s.c >= s.n_min) throw ConfigError("secatt.c must be below n_min (at least one honest device)");
    if (s.runs < 1) throw ConfigError("secatt.runs must be at least 1");
    return;
  }
  if (c.kind == ScenarioKind::kForgery) {
    const auto& f = c.forgery;
    const std::uint32_t comp = f.c ? f.c : f.n / 2 - std::min(f.s, f.n / 2);
    if (f.n < 2 || comp < 1 || comp >= f.n) throw ConfigError("forgery: need n >= 2 and 1 <= c < n");
    if (f.trials < 1) throw ConfigError("forgery.trials must be at least 1");
    return;
  }

  c.protocol.time.validate(c.allow_unsafe_timing);
  const bool mobile = c.topology.type == TopologySpec::Type::kDynamic;
  if (dynamic_kind(c.kind) && !mobile) throw ConfigError(to_string(c.kind) + " requires a dynamic topology");
  if ((c.kind == ScenarioKind::kHeartbeat || c.kind == ScenarioKind::kAttestation) && mobile)
    throw ConfigError(to_string(c.kind) + " requires a static topology");
  if (c.kind == ScenarioKind::kLeaderOutage && c.outage_period < 2)
    throw ConfigError("outage_period must be at least 2");
  for (const std::uint32_t n : c.n_list) {
    if (n < 1) throw ConfigError("n must be at least 1");
    if (c.topology.type == TopologySpec::Type::kGrid && n != c.topology.rows * c.topology.cols)
      throw ConfigError("n must equal rows*cols for a grid topology");
    for (const auto& [a, b] : c.topology.edges)
      if (a < 1 || b < 1 || a > n || b > n) throw ConfigError("topology.edges references a device id above n");
    auto check_id = [&](DeviceId d, const char* what) {
      if (d < 1 || d > n) throw ConfigError(std::string(what) + " references device " + std::to_string(d) + " outside 1..n");
    };
    for (const auto& a : c.attestations) check_id(a.entry, "attestations.entry");
    for (const auto& a : c.adversary) {
      check_id(a.device, "adversary.device");
      if (a.type == AdversaryAction::Type::kDropLink) check_id(a.peer, "adversary.peer");
      if (a.type == AdversaryAction::Type::kInject && a.peer != kOperatorId) check_id(a.peer, "adversary.peer");
    }
  }
}

netsim::SimConfig make_sim_config(const ScenarioConfig& c, std::uint32_t n, std::uint64_t seed) {
  netsim::SimConfig s;
  Rng topo_rng(seed ^ 0x5DEECE66Dull);
  switch (c.topology.type) {
    case TopologySpec::Type::kKaryTree: s.topology = netsim::Topology::kary_tree(n, c.topology.arity); break;
    case TopologySpec::Type::kGrid: s.topology = netsim::Topology::grid(c.topology.rows, c.topology.cols); break;
    case TopologySpec::Type::kGraph: s.topology = netsim::Topology::graph(n, c.topology.edges); break;
    case TopologySpec::Type::kRandomConnected:
      s.topology = netsim::Topology::random_connected(n, c.topology.extra_edges, topo_rng);
      break;
    case TopologySpec::Type::kDynamic:
      s.dynamic = true;
      s.dynamic_n = n;
      s.mobility = c.topology.mobility;
      break;
  }
  s.protocol = c.protocol;
  s.delay.base_latency = c.delay.base_latency;
  s.delay.throughput_bps = c.delay.throughput_bps;
  s.null_crypto = c.null_crypto;
  s.preestablish_channels = c.preestablish;
  s.allow_unsafe_timing = c.allow_unsafe_timing;
  s.software_attestation = c.software_attestation;
  s.seed = seed;
  return s;
}

}  // namespace scap::scenarios
