#include "abrsim/config.hpp"

#include "abrsim/errors.hpp"
#include "abrsim/topology.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace abrsim {

// ------------------------------------------------------------- schemes

namespace {

constexpr std::pair<SchemeKind, std::string_view> kSchemeNames[] = {
    {SchemeKind::EfciPrca, "efci_prca"},     {SchemeKind::Eprca, "eprca"},
    {SchemeKind::Osu, "osu"},                {SchemeKind::OsuCount, "osu_count"},
    {SchemeKind::Capc, "capc"},              {SchemeKind::Becn, "becn"},
    {SchemeKind::CreditStatic, "credit_static"}, {SchemeKind::CreditAdaptive, "credit_adaptive"},
};

}  // namespace

std::string_view to_string(SchemeKind k) {
  for (const auto& [kind, name] : kSchemeNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

std::optional<SchemeKind> parse_scheme(std::string_view s) {
  for (const auto& [kind, name] : kSchemeNames) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

bool is_credit(SchemeKind k) { return k == SchemeKind::CreditStatic || k == SchemeKind::CreditAdaptive; }

ResolvedSourceParams resolved_source_params(SchemeKind scheme, const SchemeParams& p) {
  // RDF compounds to 63/64 over one RM cycle of nrm data cells.
  ResolvedSourceParams r{1.0 / 32.0, std::pow(63.0 / 64.0, 1.0 / static_cast<double>(std::max<std::uint32_t>(p.nrm, 1)))};
  switch (scheme) {
    case SchemeKind::Osu:
    case SchemeKind::OsuCount:
    case SchemeKind::Capc:
      // Pure explicit-rate following: the switch's ER is the whole signal.
      r = {1.0, 1.0};
      break;
    case SchemeKind::Becn:
      r = {0.0, 1.0};
      break;
    case SchemeKind::CreditStatic:
    case SchemeKind::CreditAdaptive:
      r = {0.0, 1.0};
      break;
    case SchemeKind::EfciPrca:
    case SchemeKind::Eprca:
      break;
  }
  if (p.air_fraction) r.air_fraction = *p.air_fraction;
  if (p.rdf) r.rdf = *p.rdf;
  return r;
}

// ------------------------------------------------------------ scenario

TrafficContract VcSpec::contract() const { return TrafficContract::make(pcr, scr, mcr, mbs, cdvt); }

const LinkSpec* ScenarioConfig::find_link(std::string_view id) const {
  for (const auto& l : links) {
    if (l.id == id) return &l;
  }
  return nullptr;
}

const VcSpec* ScenarioConfig::find_vc(VcId id) const {
  for (const auto& v : vcs) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

VcSpec* ScenarioConfig::find_vc(VcId id) {
  for (auto& v : vcs) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

void ScenarioConfig::validate() const {
  std::vector<FieldDiagnostic> d;
  auto bad = [&](std::string field, std::string msg) { d.push_back({std::move(field), std::move(msg)}); };

  if (duration == 0) bad("scenario.duration", "must be positive");
  if (metric_interval == 0) bad("scenario.metric_interval", "must be positive");
  if (!(cdv_alpha > 0.0 && cdv_alpha < 1.0)) bad("scenario.cdv_alpha", "must lie in (0, 1)");

  std::set<std::string> link_ids;
  for (const auto& l : links) {
    const std::string f = "link " + l.id;
    if (l.id.empty()) bad("link", "empty id");
    if (!link_ids.insert(l.id).second) bad(f, "duplicate link id");
    if (!l.rate.positive()) bad(f + ".rate", "must be positive");
    if (l.from.empty() || l.to.empty()) bad(f, "needs both `from` and `to`");
    if (l.from == l.to && !l.from.empty()) bad(f, "`from` and `to` are the same switch");
    if (l.buffer && *l.buffer == 0) bad(f + ".buffer_cells", "must be positive");
    if (!(l.loss_probability >= 0.0 && l.loss_probability < 1.0)) {
      bad(f + ".loss_probability", "must lie in [0, 1)");
    }
  }

  if (vcs.empty()) bad("vc", "scenario defines no vcs");
  std::set<VcId> vc_ids;
  for (const auto& v : vcs) {
    const std::string f = "vc " + std::to_string(v.id);
    if (!vc_ids.insert(v.id).second) bad(f, "duplicate vc id");
    if (v.route.empty()) bad(f + ".route", "is empty");
    const LinkSpec* prev = nullptr;
    for (const auto& id : v.route) {
      const LinkSpec* l = find_link(id);
      if (!l) {
        bad(f + ".route", "unknown link " + id);
        prev = nullptr;
        continue;
      }
      if (prev && prev->to != l->from) {
        bad(f + ".route", "link " + prev->id + " ends at " + prev->to + " but " + l->id + " starts at " +
                              l->from);
      }
      prev = l;
    }
    if (!v.pcr.positive()) bad(f + ".pcr", "must be positive");
    if (v.mcr.value() < 0) bad(f + ".mcr", "must not be negative");
    if (v.pcr.positive() && v.pcr < v.mcr) bad(f + ".mcr", "exceeds pcr");
    if (v.pcr.positive()) {
      try {
        v.contract();
      } catch (const InvalidContract& e) {
        bad(f + ".contract", e.what());
      }
    }
    if (v.packet_cells == 0) bad(f + ".packet_cells", "must be positive");
    if (v.source.kind == SourceKind::Bursty && v.source.burst_cells == 0) {
      bad(f + ".burst_cells", "bursty source needs a positive burst size");
    }
    if (v.initial_acr && !(*v.initial_acr > 0.0)) bad(f + ".initial_acr", "must be positive");
    if (v.access_rate && !v.access_rate->positive()) bad(f + ".access_rate", "must be positive");
    if (v.demand && v.demand->value() < 0) bad(f + ".demand", "must not be negative");
  }

  const auto& p = params;
  if (p.nrm == 0) bad("scheme.nrm", "must be positive");
  if (p.rdf && !(*p.rdf > 0.0 && *p.rdf <= 1.0)) bad("scheme.rdf", "must lie in (0, 1]");
  if (p.air_fraction && !(*p.air_fraction >= 0.0)) bad("scheme.air_fraction", "must not be negative");
  if (!(p.initial_acr_fraction > 0.0 && p.initial_acr_fraction <= 1.0)) {
    bad("scheme.initial_acr_fraction", "must lie in (0, 1]");
  }
  if (!(p.alpha > 0.0 && p.alpha <= 1.0)) bad("scheme.alpha", "must lie in (0, 1]");
  if (!(p.sw_dpf > 0.0 && p.sw_dpf <= 1.0)) bad("scheme.sw_dpf", "must lie in (0, 1]");
  if (!(p.macr_initial_fraction > 0.0)) bad("scheme.macr_initial_fraction", "must be positive");
  if (p.forced_efci_probability && !(*p.forced_efci_probability >= 0.0 && *p.forced_efci_probability <= 1.0)) {
    bad("scheme.forced_efci_probability", "must lie in [0, 1]");
  }
  if (p.growth_window == 0) bad("scheme.growth_window", "must be positive");
  if (!(p.target_utilization > 0.0 && p.target_utilization <= 1.0)) {
    bad("scheme.target_utilization", "must lie in (0, 1]");
  }
  if (p.capc_target_utilization && !(*p.capc_target_utilization > 0.0 && *p.capc_target_utilization <= 1.0)) {
    bad("scheme.capc_target_utilization", "must lie in (0, 1]");
  }
  if (p.averaging_interval == 0) bad("scheme.averaging_interval", "must be positive");
  if (!(p.delta >= 0.0 && p.delta < 1.0)) bad("scheme.delta", "must lie in [0, 1)");
  if (!(p.rup > 0.0)) bad("scheme.rup", "must be positive");
  if (!(p.rdn > 0.0)) bad("scheme.rdn", "must be positive");
  if (!(p.eru >= 1.0)) bad("scheme.eru", "must be at least 1");
  if (!(p.erf > 0.0 && p.erf <= 1.0)) bad("scheme.erf", "must lie in (0, 1]");
  if (p.becn_recovery_base == 0) bad("scheme.becn_recovery_base", "must be positive");
  if (p.replenish_batch == 0) bad("scheme.replenish_batch", "must be positive");
  if (p.resync_period && *p.resync_period == 0) bad("scheme.resync_period", "must be positive");
  if (p.allocation_period && *p.allocation_period == 0) bad("scheme.allocation_period", "must be positive");

  if (!d.empty()) throw ConfigError(std::move(d));
}

AllocationProblem allocation_problem(const ScenarioConfig& cfg) {
  AllocationProblem p;
  for (const auto& l : cfg.links) p.links.push_back({l.id, l.rate.exact()});
  for (const auto& v : cfg.vcs) {
    AllocationProblem::VcEntry e;
    e.id = std::to_string(v.id);
    e.links = v.route;
    e.demand = v.demand ? v.demand->exact() : v.pcr.exact();
    p.vcs.push_back(std::move(e));
  }
  return p;
}

// ----------------------------------------------------------- document

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

}  // namespace

const ConfigDocument::Entry* ConfigDocument::Section::find(std::string_view key) const {
  for (const auto& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

ConfigDocument ConfigDocument::parse(std::string_view text) {
  ConfigDocument doc;
  std::vector<FieldDiagnostic> d;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') {
        d.push_back({where, "unterminated section header"});
        continue;
      }
      std::string_view inner = trim(line.substr(1, line.size() - 2));
      Section s;
      s.line = line_no;
      auto sp = inner.find_first_of(" \t");
      s.type = std::string(inner.substr(0, sp));
      if (sp != std::string_view::npos) s.name = std::string(trim(inner.substr(sp)));
      if (s.type.empty()) d.push_back({where, "empty section header"});
      doc.sections.push_back(std::move(s));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      d.push_back({where, "expected `key = value`"});
      continue;
    }
    if (doc.sections.empty()) {
      d.push_back({where, "entry outside any section"});
      continue;
    }
    Entry e;
    e.key = std::string(trim(line.substr(0, eq)));
    e.value = std::string(trim(line.substr(eq + 1)));
    e.line = line_no;
    if (e.key.empty()) {
      d.push_back({where, "empty key"});
      continue;
    }
    doc.sections.back().entries.push_back(std::move(e));
  }
  if (!d.empty()) throw ConfigError(std::move(d));
  return doc;
}

std::string ConfigDocument::dump() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& s : sections) {
    if (!first) os << '\n';
    first = false;
    os << '[' << s.type;
    if (!s.name.empty()) os << ' ' << s.name;
    os << "]\n";
    for (const auto& e : s.entries) os << e.key << " = " << e.value << '\n';
  }
  return os.str();
}

namespace {

struct DottedKey {
  std::string type;
  std::string name;
  std::string key;
};

DottedKey split_dotted(std::string_view dotted) {
  auto first = dotted.find('.');
  auto last = dotted.rfind('.');
  if (first == std::string_view::npos) throw ConfigError(std::string(dotted), "expected section.key");
  DottedKey k;
  k.type = std::string(dotted.substr(0, first));
  k.key = std::string(dotted.substr(last + 1));
  if (last != first) k.name = std::string(dotted.substr(first + 1, last - first - 1));
  if (k.type.empty() || k.key.empty()) throw ConfigError(std::string(dotted), "expected section.key");
  return k;
}

}  // namespace

void ConfigDocument::set(std::string_view dotted_key, std::string_view value) {
  auto k = split_dotted(dotted_key);
  Section* target = nullptr;
  for (auto& s : sections) {
    if (s.type == k.type && s.name == k.name) target = &s;
  }
  if (!target) {
    sections.push_back(Section{k.type, k.name, {}, 0});
    target = &sections.back();
  }
  for (auto& e : target->entries) {
    if (e.key == k.key) {
      e.value = std::string(value);
      return;
    }
  }
  target->entries.push_back(Entry{k.key, std::string(value), 0});
}

std::optional<std::string> ConfigDocument::get(std::string_view dotted_key) const {
  auto k = split_dotted(dotted_key);
  std::optional<std::string> out;
  for (const auto& s : sections) {
    if (s.type != k.type || s.name != k.name) continue;
    if (const auto* e = s.find(k.key)) out = e->value;
  }
  return out;
}

// ------------------------------------------------------------- loading

namespace {

/// Reads typed values out of one section and records a diagnostic for each
/// problem instead of stopping at the first.
class Reader {
 public:
  Reader(const ConfigDocument::Section& s, std::string prefix, std::vector<FieldDiagnostic>& d)
      : s_(s), prefix_(std::move(prefix)), d_(d) {}

  bool has(std::string_view key) const { return s_.find(key) != nullptr; }

  void fail(std::string_view key, std::string msg) { d_.push_back({prefix_ + "." + std::string(key), std::move(msg)}); }

  template <class F>
  void with(std::string_view key, F&& f) {
    const auto* e = s_.find(key);
    if (!e) return;
    used_.insert(std::string(key));
    try {
      f(e->value);
    } catch (const std::exception& ex) {
      fail(key, "invalid value `" + e->value + "`: " + ex.what());
    }
  }

  void uint(std::string_view key, std::uint64_t& out) {
    with(key, [&](const std::string& v) { out = parse_uint(v); });
  }
  template <class T>
  void uint_as(std::string_view key, T& out) {
    with(key, [&](const std::string& v) {
      auto x = parse_uint(v);
      if (x > std::numeric_limits<T>::max()) throw std::out_of_range("too large");
      out = static_cast<T>(x);
    });
  }
  template <class T>
  void opt_uint(std::string_view key, std::optional<T>& out) {
    with(key, [&](const std::string& v) {
      if (v == "none") {
        out.reset();
        return;
      }
      out = static_cast<T>(parse_uint(v));
    });
  }
  void real(std::string_view key, double& out) {
    with(key, [&](const std::string& v) { out = parse_real(v); });
  }
  void opt_real(std::string_view key, std::optional<double>& out) {
    with(key, [&](const std::string& v) {
      if (v == "none") {
        out.reset();
        return;
      }
      out = parse_real(v);
    });
  }
  void boolean(std::string_view key, bool& out) {
    with(key, [&](const std::string& v) {
      if (v == "true" || v == "yes" || v == "1") {
        out = true;
      } else if (v == "false" || v == "no" || v == "0") {
        out = false;
      } else {
        throw std::invalid_argument("expected true or false");
      }
    });
  }
  void text(std::string_view key, std::string& out) {
    with(key, [&](const std::string& v) { out = v; });
  }

  /// `<base>_us` or `<base>_ms`; both present is an error.
  template <class T>
  void time(std::string_view base, T& out) {
    std::string us = std::string(base) + "_us";
    std::string ms = std::string(base) + "_ms";
    if (has(us) && has(ms)) fail(base, "give either " + us + " or " + ms + ", not both");
    with(us, [&](const std::string& v) { out = to_ticks(v, 1); });
    with(ms, [&](const std::string& v) { out = to_ticks(v, 1000); });
  }
  void opt_time(std::string_view base, std::optional<SimTime>& out) {
    SimTime t = 0;
    bool seen = has(std::string(base) + "_us") || has(std::string(base) + "_ms");
    time(base, t);
    if (seen) out = t;
  }

  /// `<base>_mbps` or `<base>_cps` (exact rationals).
  void rate(std::string_view base, Rate& out) {
    std::optional<Rate> r;
    opt_rate(base, r);
    if (r) out = *r;
  }
  void opt_rate(std::string_view base, std::optional<Rate>& out) {
    std::string mbps = std::string(base) + "_mbps";
    std::string cps = std::string(base) + "_cps";
    if (has(mbps) && has(cps)) fail(base, "give either " + mbps + " or " + cps + ", not both");
    with(mbps, [&](const std::string& v) { out = Rate::from_mbps(parse_rational(v)); });
    with(cps, [&](const std::string& v) { out = Rate(parse_rational(v)); });
  }

  void reject_unused() {
    for (const auto& e : s_.entries) {
      if (!used_.contains(e.key)) {
        d_.push_back({prefix_ + "." + e.key, "unknown key (line " + std::to_string(e.line) + ")"});
      }
    }
  }

  static std::uint64_t parse_uint(const std::string& v) {
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected a non-negative integer");
    return x;
  }
  static double parse_real(const std::string& v) {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("expected a number");
    return x;
  }
  static SimTime to_ticks(const std::string& v, std::int64_t scale) {
    auto r = parse_rational(v) * scale;
    if (r < 0) throw std::invalid_argument("must not be negative");
    if (r.denominator() != 1) throw std::invalid_argument("not a whole number of microseconds");
    return static_cast<SimTime>(r.numerator());
  }

 private:
  const ConfigDocument::Section& s_;
  std::string prefix_;
  std::vector<FieldDiagnostic>& d_;
  std::set<std::string> used_;
};

DropPolicy parse_drop_policy(const std::string& v) {
  if (v == "tail_drop") return DropPolicy::TailDrop;
  if (v == "epd") return DropPolicy::EarlyPacketDiscard;
  throw std::invalid_argument("expected tail_drop or epd");
}

std::string_view drop_policy_name(DropPolicy p) {
  return p == DropPolicy::TailDrop ? "tail_drop" : "epd";
}

void read_link_fields(Reader& r, LinkSpec& l) {
  r.text("from", l.from);
  r.text("to", l.to);
  r.rate("rate", l.rate);
  r.time("delay", l.delay);
  r.opt_uint("buffer_cells", l.buffer);
  r.with("drop_policy", [&](const std::string& v) { l.drop_policy = parse_drop_policy(v); });
  r.uint_as("epd_threshold", l.epd_threshold);
  r.real("loss_probability", l.loss_probability);
}

void read_vc_fields(Reader& r, VcSpec& v) {
  r.with("route", [&](const std::string& s) {
    std::istringstream is(s);
    std::vector<LinkId> route;
    for (std::string id; is >> id;) route.push_back(id);
    v.route = std::move(route);
  });
  r.rate("pcr", v.pcr);
  r.opt_rate("scr", v.scr);
  r.rate("mcr", v.mcr);
  r.with("mbs", [&](const std::string& s) {
    if (s == "none") {
      v.mbs.reset();
    } else {
      v.mbs = static_cast<std::int64_t>(Reader::parse_uint(s));
    }
  });
  r.with("cdvt_us", [&](const std::string& s) { v.cdvt = Micros(parse_rational(s)); });
  r.with("source", [&](const std::string& s) {
    if (s == "persistent") {
      v.source.kind = SourceKind::Persistent;
    } else if (s == "staggered") {
      v.source.kind = SourceKind::Staggered;
    } else if (s == "bursty") {
      v.source.kind = SourceKind::Bursty;
    } else {
      throw std::invalid_argument("expected persistent, staggered or bursty");
    }
  });
  r.time("start", v.source.start);
  r.uint_as("burst_cells", v.source.burst_cells);
  r.time("idle", v.source.idle);
  r.with("loop", [&](const std::string& s) {
    if (s == "open") {
      v.source.loop = BurstLoop::Open;
    } else if (s == "closed") {
      v.source.loop = BurstLoop::Closed;
    } else {
      throw std::invalid_argument("expected open or closed");
    }
  });
  r.boolean("random_idle", v.source.random_idle);
  r.uint_as("packet_cells", v.packet_cells);
  r.with("police", [&](const std::string& s) {
    if (s == "off") {
      v.police = PoliceMode::Off;
    } else if (s == "drop") {
      v.police = PoliceMode::Drop;
    } else if (s == "tag") {
      v.police = PoliceMode::Tag;
    } else {
      throw std::invalid_argument("expected off, drop or tag");
    }
  });
  r.opt_real("initial_acr_cps", v.initial_acr);
  r.opt_rate("demand", v.demand);
  r.opt_rate("access_rate", v.access_rate);
  r.time("start_jitter", v.start_jitter);
}

void read_scheme(Reader& r, SchemeParams& p) {
  r.uint_as("nrm", p.nrm);
  r.opt_real("air_fraction", p.air_fraction);
  r.opt_real("rdf", p.rdf);
  r.real("initial_acr_fraction", p.initial_acr_fraction);
  r.time("oor_interval", p.oor_interval);
  r.uint_as("queue_threshold", p.queue_threshold);
  r.opt_uint("ci_threshold", p.ci_threshold);
  r.uint_as("growth_window", p.growth_window);
  r.with("detector", [&](const std::string& s) {
    if (s == "queue_length") {
      p.detector = CongestionDetector::QueueLength;
    } else if (s == "queue_growth") {
      p.detector = CongestionDetector::QueueGrowth;
    } else {
      throw std::invalid_argument("expected queue_length or queue_growth");
    }
  });
  r.real("alpha", p.alpha);
  r.real("sw_dpf", p.sw_dpf);
  r.real("macr_initial_fraction", p.macr_initial_fraction);
  r.opt_real("forced_efci_probability", p.forced_efci_probability);
  r.real("target_utilization", p.target_utilization);
  r.time("averaging_interval", p.averaging_interval);
  r.real("delta", p.delta);
  r.boolean("osu_metered", p.osu_metered);
  r.real("rup", p.rup);
  r.real("rdn", p.rdn);
  r.real("eru", p.eru);
  r.real("erf", p.erf);
  r.uint_as("capc_queue_threshold", p.capc_queue_threshold);
  r.opt_real("capc_target_utilization", p.capc_target_utilization);
  r.uint_as("becn_threshold", p.becn_threshold);
  r.opt_time("becn_spacing", p.becn_spacing);
  r.time("becn_recovery_base", p.becn_recovery_base);
  r.uint_as("replenish_batch", p.replenish_batch);
  r.opt_time("resync_period", p.resync_period);
  r.opt_time("allocation_period", p.allocation_period);
  r.uint_as("min_grant", p.min_grant);
  r.boolean("credit_cells_use_link", p.credit_cells_use_link);
}

}  // namespace

ScenarioConfig load_config(const ConfigDocument& doc) {
  ScenarioConfig cfg;
  std::vector<FieldDiagnostic> d;
  std::set<std::string> known{"scenario", "topology", "scheme", "switch", "link", "vc"};
  for (const auto& s : doc.sections) {
    if (!known.contains(s.type)) d.push_back({"line " + std::to_string(s.line), "unknown section [" + s.type + "]"});
  }

  auto sections_of = [&](std::string_view type) {
    std::vector<const ConfigDocument::Section*> out;
    for (const auto& s : doc.sections) {
      if (s.type == type) out.push_back(&s);
    }
    return out;
  };

  for (const auto* s : sections_of("scenario")) {
    Reader r(*s, "scenario", d);
    r.text("name", cfg.name);
    r.with("scheme", [&](const std::string& v) {
      auto k = parse_scheme(v);
      if (!k) throw std::invalid_argument("unknown scheme");
      cfg.scheme = *k;
    });
    r.time("duration", cfg.duration);
    r.uint("seed", cfg.seed);
    r.time("metric_interval", cfg.metric_interval);
    r.real("cdv_alpha", cfg.cdv_alpha);
    r.time("access_delay", cfg.access_delay);
    r.reject_unused();
  }

  for (const auto* s : sections_of("topology")) {
    Reader r(*s, "topology", d);
    std::string generator;
    std::uint64_t switches = 3;
    std::uint64_t n_vcs = 1;
    Rate rate = Rate::from_mbps(150);
    SimTime delay = 100;
    r.text("generator", generator);
    r.uint("switches", switches);
    r.uint("vcs", n_vcs);
    r.rate("link_rate", rate);
    r.time("link_delay", delay);
    std::optional<std::size_t> buffer;
    r.opt_uint("buffer_cells", buffer);
    std::optional<DropPolicy> policy;
    r.with("drop_policy", [&](const std::string& v) { policy = parse_drop_policy(v); });
    std::optional<std::size_t> epd;
    r.opt_uint("epd_threshold", epd);
    r.reject_unused();

    if (!rate.positive()) {
      r.fail("link_rate", "must be positive");
      continue;
    }
    ScenarioConfig topo;
    if (generator == "parking_lot") {
      if (switches < 2) {
        r.fail("switches", "parking lot needs at least 2 switches");
        continue;
      }
      topo = build_parking_lot(switches, rate, delay);
    } else if (generator == "figure3") {
      topo = build_figure3(rate, delay);
    } else if (generator == "chain") {
      if (switches < 2) {
        r.fail("switches", "chain needs at least 2 switches");
        continue;
      }
      topo = build_chain(switches, n_vcs, rate, delay);
    } else if (!generator.empty()) {
      r.fail("generator", "expected parking_lot, figure3 or chain");
      continue;
    }
    if (generator.empty()) continue;
    for (auto& l : topo.links) {
      if (buffer) l.buffer = buffer;
      if (policy) l.drop_policy = *policy;
      if (epd) l.epd_threshold = *epd;
    }
    cfg.switches = std::move(topo.switches);
    cfg.links = std::move(topo.links);
    cfg.vcs = std::move(topo.vcs);
  }

  for (const auto* s : sections_of("switch")) {
    if (s->name.empty()) {
      d.push_back({"switch", "section needs a name (line " + std::to_string(s->line) + ")"});
      continue;
    }
    Reader r(*s, "switch " + s->name, d);
    r.reject_unused();
    if (std::find(cfg.switches.begin(), cfg.switches.end(), s->name) == cfg.switches.end()) {
      cfg.switches.push_back(s->name);
    }
  }

  for (const auto* s : sections_of("link")) {
    if (s->name.empty()) {
      d.push_back({"link", "section needs a name (line " + std::to_string(s->line) + ")"});
      continue;
    }
    LinkSpec* l = nullptr;
    for (auto& x : cfg.links) {
      if (x.id == s->name) l = &x;
    }
    if (!l) {
      cfg.links.push_back(LinkSpec{});
      l = &cfg.links.back();
      l->id = s->name;
      l->rate = Rate::from_mbps(150);
      l->delay = 100;
    }
    Reader r(*s, "link " + s->name, d);
    read_link_fields(r, *l);
    r.reject_unused();
    for (const auto& node : {l->from, l->to}) {
      if (!node.empty() && std::find(cfg.switches.begin(), cfg.switches.end(), node) == cfg.switches.end()) {
        cfg.switches.push_back(node);
      }
    }
  }

  for (const auto* s : sections_of("vc")) {
    VcId id = 0;
    try {
      auto x = Reader::parse_uint(s->name);
      if (x > std::numeric_limits<VcId>::max()) throw std::out_of_range("too large");
      id = static_cast<VcId>(x);
    } catch (const std::exception&) {
      d.push_back({"vc " + s->name, "vc sections are named by a numeric id (line " + std::to_string(s->line) + ")"});
      continue;
    }
    VcSpec* v = cfg.find_vc(id);
    const bool fresh = v == nullptr;
    if (fresh) {
      cfg.vcs.push_back(VcSpec{});
      v = &cfg.vcs.back();
      v->id = id;
      v->source = SourceModel::persistent(id);
    }
    Reader r(*s, "vc " + s->name, d);
    read_vc_fields(r, *v);
    r.reject_unused();
    if (fresh && !r.has("pcr_mbps") && !r.has("pcr_cps") && !v->route.empty()) {
      if (const LinkSpec* first = cfg.find_link(v->route.front())) v->pcr = first->rate;
    }
    v->source.vc = id;
  }

  for (const auto* s : sections_of("scheme")) {
    Reader r(*s, "scheme", d);
    read_scheme(r, cfg.params);
    r.reject_unused();
  }

  if (!d.empty()) {
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      d.insert(d.end(), e.diagnostics().begin(), e.diagnostics().end());
    }
    throw ConfigError(std::move(d));
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config_text(std::string_view text) { return load_config(ConfigDocument::parse(text)); }

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str());
}

// --------------------------------------------------------- serializing

namespace {

std::string rate_value(const Rate& r) { return format_rational(r.value()); }

std::string source_name(SourceKind k) {
  switch (k) {
    case SourceKind::Persistent:
      return "persistent";
    case SourceKind::Staggered:
      return "staggered";
    case SourceKind::Bursty:
      return "bursty";
  }
  return "persistent";
}

std::string police_name(PoliceMode m) {
  switch (m) {
    case PoliceMode::Off:
      return "off";
    case PoliceMode::Drop:
      return "drop";
    case PoliceMode::Tag:
      return "tag";
  }
  return "off";
}

}  // namespace

std::string serialize_config(const ScenarioConfig& cfg) {
  ConfigDocument doc;
  auto section = [&](std::string type, std::string name = {}) -> ConfigDocument::Section& {
    doc.sections.push_back(ConfigDocument::Section{std::move(type), std::move(name), {}, 0});
    return doc.sections.back();
  };
  auto put = [](ConfigDocument::Section& s, std::string key, std::string value) {
    s.entries.push_back({std::move(key), std::move(value), 0});
  };
  auto num = [](auto x) { return std::to_string(x); };

  auto& sc = section("scenario");
  put(sc, "name", cfg.name);
  put(sc, "scheme", std::string(to_string(cfg.scheme)));
  put(sc, "duration_us", num(cfg.duration));
  put(sc, "seed", num(cfg.seed));
  put(sc, "metric_interval_us", num(cfg.metric_interval));
  put(sc, "cdv_alpha", format_double(cfg.cdv_alpha));
  put(sc, "access_delay_us", num(cfg.access_delay));

  const auto& p = cfg.params;
  auto& sh = section("scheme");
  put(sh, "nrm", num(p.nrm));
  if (p.air_fraction) put(sh, "air_fraction", format_double(*p.air_fraction));
  if (p.rdf) put(sh, "rdf", format_double(*p.rdf));
  put(sh, "initial_acr_fraction", format_double(p.initial_acr_fraction));
  put(sh, "oor_interval_us", num(p.oor_interval));
  put(sh, "queue_threshold", num(p.queue_threshold));
  if (p.ci_threshold) put(sh, "ci_threshold", num(*p.ci_threshold));
  put(sh, "growth_window", num(p.growth_window));
  put(sh, "detector", p.detector == CongestionDetector::QueueLength ? "queue_length" : "queue_growth");
  put(sh, "alpha", format_double(p.alpha));
  put(sh, "sw_dpf", format_double(p.sw_dpf));
  put(sh, "macr_initial_fraction", format_double(p.macr_initial_fraction));
  if (p.forced_efci_probability) put(sh, "forced_efci_probability", format_double(*p.forced_efci_probability));
  put(sh, "target_utilization", format_double(p.target_utilization));
  put(sh, "averaging_interval_us", num(p.averaging_interval));
  put(sh, "delta", format_double(p.delta));
  put(sh, "osu_metered", p.osu_metered ? "true" : "false");
  put(sh, "rup", format_double(p.rup));
  put(sh, "rdn", format_double(p.rdn));
  put(sh, "eru", format_double(p.eru));
  put(sh, "erf", format_double(p.erf));
  put(sh, "capc_queue_threshold", num(p.capc_queue_threshold));
  if (p.capc_target_utilization) put(sh, "capc_target_utilization", format_double(*p.capc_target_utilization));
  put(sh, "becn_threshold", num(p.becn_threshold));
  if (p.becn_spacing) put(sh, "becn_spacing_us", num(*p.becn_spacing));
  put(sh, "becn_recovery_base_us", num(p.becn_recovery_base));
  put(sh, "replenish_batch", num(p.replenish_batch));
  if (p.resync_period) put(sh, "resync_period_us", num(*p.resync_period));
  if (p.allocation_period) put(sh, "allocation_period_us", num(*p.allocation_period));
  put(sh, "min_grant", num(p.min_grant));
  put(sh, "credit_cells_use_link", p.credit_cells_use_link ? "true" : "false");

  for (const auto& s : cfg.switches) section("switch", s);

  for (const auto& l : cfg.links) {
    auto& s = section("link", l.id);
    put(s, "from", l.from);
    put(s, "to", l.to);
    put(s, "rate_cps", rate_value(l.rate));
    put(s, "delay_us", num(l.delay));
    if (l.buffer) put(s, "buffer_cells", num(*l.buffer));
    put(s, "drop_policy", std::string(drop_policy_name(l.drop_policy)));
    put(s, "epd_threshold", num(l.epd_threshold));
    put(s, "loss_probability", format_double(l.loss_probability));
  }

  for (const auto& v : cfg.vcs) {
    auto& s = section("vc", num(v.id));
    std::string route;
    for (const auto& l : v.route) route += (route.empty() ? "" : " ") + l;
    put(s, "route", route);
    put(s, "pcr_cps", rate_value(v.pcr));
    if (v.scr) put(s, "scr_cps", rate_value(*v.scr));
    put(s, "mcr_cps", rate_value(v.mcr));
    if (v.mbs) put(s, "mbs", num(*v.mbs));
    put(s, "cdvt_us", format_rational(v.cdvt));
    put(s, "source", source_name(v.source.kind));
    put(s, "start_us", num(v.source.start));
    put(s, "burst_cells", num(v.source.burst_cells));
    put(s, "idle_us", num(v.source.idle));
    put(s, "loop", v.source.loop == BurstLoop::Open ? "open" : "closed");
    put(s, "random_idle", v.source.random_idle ? "true" : "false");
    put(s, "packet_cells", num(v.packet_cells));
    put(s, "police", police_name(v.police));
    if (v.initial_acr) put(s, "initial_acr_cps", format_double(*v.initial_acr));
    if (v.demand) put(s, "demand_cps", rate_value(*v.demand));
    if (v.access_rate) put(s, "access_rate_cps", rate_value(*v.access_rate));
    put(s, "start_jitter_us", num(v.start_jitter));
  }
  return doc.dump();
}

}  // namespace abrsim
