#include "abrsim/network.hpp"

#include "abrsim/credit.hpp"
#include "abrsim/errors.hpp"
#include "abrsim/fairness.hpp"
#include "abrsim/gcra.hpp"
#include "abrsim/link.hpp"
#include "abrsim/port_queue.hpp"
#include "abrsim/schemes.hpp"
#include "abrsim/source_model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace abrsim {
namespace {

enum class PortRole : std::uint8_t { Access, Trunk, Egress, Reverse };

constexpr std::uint32_t kTxDone = 0;
constexpr std::uint32_t kResync = 0;
constexpr std::uint32_t kAllocate = 1;
// Source timer tags: kind in the low two bits, generation above.
constexpr std::uint32_t kOorProbe = 0;
constexpr std::uint32_t kBecnRecovery = 1;
constexpr std::uint32_t kGenerationMask = 0x3fff'ffff;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Receiver side of one (link, vc) credit loop.
struct Receiver {
  std::int64_t target = 0;       // allocation the receiver aims for
  std::int64_t outstanding = 0;  // granted and not yet freed by forwarding
  std::uint64_t usage = 0;       // cells forwarded in the current period
  bool revoking = false;         // a revocation is on its way to the sender
};

struct Port {
  Port(std::string n, PortRole r, Link l, PortQueue q)
      : name(std::move(n)), role(r), link(std::move(l)), fifo(std::move(q)) {}

  std::string name;
  PortRole role;
  Link link;
  PortQueue fifo;
  std::unique_ptr<PortController> ctl;
  bool busy = false;

  bool credit_gated = false;
  CreditState credit;  // sender side of this link
  std::map<VcId, std::deque<Cell>> vcq;
  std::vector<VcId> rr;
  std::size_t rr_pos = 0;
  std::size_t vcq_total = 0;
  std::map<VcId, Receiver> recv;  // receiver side (far end of this link)
  std::map<VcId, std::size_t> hop_of;  // index of this port in the vc's forward path
  std::int64_t pool = 0;          // adaptive: buffer shared by the link's vcs

  double loss_p = 0.0;
  std::map<VcId, std::uint64_t> wire_data;

  double occ_integral = 0.0;
  SimTime last_touch = 0;
  std::size_t interval_max = 0;
  std::uint64_t interval_input = 0;
  std::size_t all_time_max = 0;

  bool forward() const { return role != PortRole::Reverse; }
  std::size_t occupancy() const {
    return credit_gated ? vcq_total + (busy ? 1 : 0) : fifo.occupancy();
  }
};

struct VcRt {
  VcRt(VcSpec s, TrafficSource t) : spec(std::move(s)), src(std::move(t)) {}

  VcSpec spec;
  std::vector<PortIndex> fwd;  // access, trunk..., egress
  std::vector<PortIndex> rev;  // rev[j] is the reverse of fwd[m - j]
  std::size_t m = 0;           // switches on the path
  TrafficSource src;
  SourceState ss;
  bool started = false;
  bool lazy = false;  // credit mode: backlog is always non-empty once started
  SimTime pending = kNever;
  std::uint64_t wake_gen = 0;
  bool stalled = false;
  bool rm_due = false;
  SimTime last_rm = 0;
  std::uint64_t seq = 0;
  std::uint32_t packet_pos = 0;
  std::optional<Policer> policer;
  bool last_efci = false;
  std::uint32_t recovery_gen = 0;
  std::optional<std::uint64_t> burst_last_seq;
  SimTime burst_start = 0;

  VcTotals tot;
  std::vector<std::uint32_t> delays;
  double delay_sum = 0.0;
  std::uint64_t iv_delivered = 0;
  std::uint64_t iv_dropped = 0;
  std::uint64_t iv_efci = 0;
};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= kFnvPrime;
  }
}

}  // namespace

struct Simulation::Impl {
  ScenarioConfig cfg;
  EventQueue q;
  std::vector<Port> ports;
  std::vector<VcRt> vcs;
  std::map<VcId, std::size_t> vc_index;
  std::vector<PortIndex> trunk_ports;
  std::vector<double> oracle;
  bool oracle_positive = false;
  MetricsLog log;
  SimTime last_metric = 0;
  std::uint64_t processed = 0;
  std::uint64_t hash = kFnvOffset;
  std::function<void(const Event&)> hook;
  std::mt19937_64 rng;
  bool credit = false;
  bool becn = false;
  ResolvedSourceParams sp{};

  explicit Impl(const ScenarioConfig& c);

  SimTime now() const { return q.now(); }
  VcRt& vc(VcId id) { return vcs[vc_index.at(id)]; }
  const VcRt& vc(VcId id) const { return vcs[vc_index.at(id)]; }

  PortIndex add_port(std::string name, PortRole role, Link link, PortQueue fifo) {
    ports.emplace_back(std::move(name), role, std::move(link), std::move(fifo));
    return static_cast<PortIndex>(ports.size() - 1);
  }

  void build_controllers();
  void build_credit();
  void start_sources();

  void dispatch(const Event& ev);
  void on_arrival(const CellArrival& a);
  void on_timer(const TimerFire& t);
  void on_wake(const SourceWake& w);

  void switch_forward(VcRt& v, std::size_t node, Cell cell);
  void switch_backward(VcRt& v, std::size_t node, std::size_t j, Cell cell);
  void deliver(VcRt& v, Cell cell);
  void source_backward(VcRt& v, const Cell& cell);
  void handle_credit(VcRt& v, std::size_t j, const Cell& cell);

  void enqueue_forward(PortIndex pi, Cell cell);
  void enqueue_reverse(PortIndex pi, Cell cell);
  /// `back_to_back` is set when the port just finished a cell, so a cell
  /// that was already waiting starts at the exact end of the previous one.
  void try_serve(PortIndex pi, bool back_to_back = false);
  void touch(Port& p);
  void note(Port& p);

  Cell make_source_cell(VcRt& v);
  void send_forward_rm(VcRt& v);
  /// Interval-mode OSU sources send one forward RM per averaging interval
  /// instead of one per nrm data cells.
  bool timed_rm() const { return cfg.scheme == SchemeKind::Osu; }
  SimTime probe_period() const { return timed_rm() ? cfg.params.averaging_interval : cfg.params.oor_interval; }
  void schedule_wake(VcRt& v, SimTime t);
  void reschedule_source(VcRt& v);
  void schedule_recovery(VcRt& v);
  void record_drop(const Cell& cell);
  void complete_burst(VcRt& v);

  void credit_forwarded(VcRt& v, std::size_t k);
  void send_credit_cell(VcRt& v, std::size_t k, std::uint32_t granted, std::uint32_t revoke);
  void grant_if_due(VcRt& v, std::size_t k);

  void flush_interval(SimTime t);
  ConservationCheck conservation(const VcRt& v) const;
  MetricsLog snapshot() const;
};

Simulation::Impl::Impl(const ScenarioConfig& c) : cfg(c), rng(c.seed) {
  cfg.validate();
  credit = is_credit(cfg.scheme);
  becn = cfg.scheme == SchemeKind::Becn;
  sp = resolved_source_params(cfg.scheme, cfg.params);

  // Every vector that ports are pushed into is reserved up front so
  // references into `ports` stay valid during construction.
  ports.reserve(2 * cfg.links.size() + 4 * cfg.vcs.size());

  std::map<LinkId, std::pair<PortIndex, PortIndex>> trunk;
  for (const auto& l : cfg.links) {
    PortQueue fq(l.buffer, l.drop_policy, l.epd_threshold);
    auto f = add_port(l.id, PortRole::Trunk, Link(l.id, l.rate, l.delay, l.from, l.to), fq);
    auto r = add_port(l.id + "~rev", PortRole::Reverse, Link(l.id + "~rev", l.rate, l.delay, l.to, l.from),
                      PortQueue(std::nullopt));
    ports[f].loss_p = l.loss_probability;
    trunk[l.id] = {f, r};
    trunk_ports.push_back(f);
  }

  vcs.reserve(cfg.vcs.size());
  for (const auto& spec : cfg.vcs) {
    SourceModel model = spec.source;
    model.vc = spec.id;
    if (spec.start_jitter > 0) {
      model.start += static_cast<SimTime>(rng() % (spec.start_jitter + 1));
    }
    vcs.emplace_back(spec, TrafficSource(model, cfg.seed));
    VcRt& v = vcs.back();
    vc_index[spec.id] = vcs.size() - 1;

    const auto& first = *cfg.find_link(spec.route.front());
    const auto& last = *cfg.find_link(spec.route.back());
    Rate access_rate = spec.access_rate.value_or(first.rate);
    std::string tag = "vc" + std::to_string(spec.id);
    auto acc = add_port("access:" + tag, PortRole::Access,
                        Link("access:" + tag, access_rate, cfg.access_delay, "src:" + tag, first.from),
                        PortQueue(std::nullopt));
    auto acc_rev = add_port("access:" + tag + "~rev", PortRole::Reverse,
                            Link("access:" + tag + "~rev", access_rate, cfg.access_delay, first.from,
                                 "src:" + tag),
                            PortQueue(std::nullopt));
    auto egr = add_port("egress:" + tag, PortRole::Egress,
                        Link("egress:" + tag, last.rate, cfg.access_delay, last.to, "dst:" + tag),
                        PortQueue(std::nullopt));
    auto egr_rev = add_port("egress:" + tag + "~rev", PortRole::Reverse,
                            Link("egress:" + tag + "~rev", last.rate, cfg.access_delay, "dst:" + tag,
                                 last.to),
                            PortQueue(std::nullopt));

    v.fwd.push_back(acc);
    for (const auto& l : spec.route) v.fwd.push_back(trunk.at(l).first);
    v.fwd.push_back(egr);
    v.m = spec.route.size() + 1;
    v.rev.push_back(egr_rev);
    for (auto it = spec.route.rbegin(); it != spec.route.rend(); ++it) v.rev.push_back(trunk.at(*it).second);
    v.rev.push_back(acc_rev);
    for (std::size_t k = 0; k < v.fwd.size(); ++k) ports[v.fwd[k]].hop_of[spec.id] = k;

    if (spec.police != PoliceMode::Off) {
      v.policer.emplace(spec.contract(),
                        spec.police == PoliceMode::Drop ? PoliceAction::Drop : PoliceAction::TagClp);
    }

    const double pcr = spec.pcr.cells_per_second();
    const double mcr = spec.mcr.cells_per_second();
    // BECN sends no forward RM cells; interval-mode OSU sends them on a timer.
    const std::uint32_t nrm = becn || timed_rm() ? std::numeric_limits<std::uint32_t>::max() : cfg.params.nrm;
    v.ss = SourceState::make(pcr, mcr, sp.air_fraction * pcr, sp.rdf, nrm,
                             cfg.params.initial_acr_fraction);
    if (spec.initial_acr) v.ss.acr = std::clamp(*spec.initial_acr, mcr, pcr);
  }

  auto problem = allocation_problem(cfg);
  for (const auto& r : max_min(problem)) oracle.push_back(to_double(r));
  oracle_positive = std::all_of(oracle.begin(), oracle.end(), [](double x) { return x > 0.0; });

  log.interval = cfg.metric_interval;
  for (const auto& v : vcs) log.vcs.push_back(v.spec.id);
  log.oracle = oracle;

  if (credit) {
    build_credit();
  } else {
    build_controllers();
  }
  start_sources();
  q.schedule(cfg.metric_interval, TimerFire{TimerOwner::Metrics, 0, 0});
}

void Simulation::Impl::build_controllers() {
  const auto& p = cfg.params;
  for (PortIndex pi = 0; pi < ports.size(); ++pi) {
    Port& port = ports[pi];
    if (port.role != PortRole::Trunk && port.role != PortRole::Egress) continue;
    const double rate = port.link.rate().cells_per_second();
    const auto n_vcs = port.hop_of.size();
    switch (cfg.scheme) {
      case SchemeKind::EfciPrca:
      case SchemeKind::Eprca: {
        EprcaSwitchState st;
        st.macr = p.macr_initial_fraction * rate;
        st.alpha = p.alpha;
        st.sw_dpf = p.sw_dpf;
        st.queue_threshold = p.queue_threshold;
        st.ci_threshold = p.ci_threshold.value_or(2 * p.queue_threshold);
        st.growth_window = p.growth_window;
        st.detector = p.detector;
        if (cfg.scheme == SchemeKind::EfciPrca) {
          port.ctl = std::make_unique<EfciController>(st, p.forced_efci_probability,
                                                      cfg.seed * 0x9E3779B97F4A7C15ULL + pi);
        } else {
          port.ctl = std::make_unique<EprcaController>(st);
        }
        break;
      }
      case SchemeKind::Osu:
      case SchemeKind::OsuCount: {
        OsuSwitchState st;
        st.target_rate = p.target_utilization * rate;
        st.averaging_interval = p.averaging_interval;
        st.delta = p.delta;
        st.mode = cfg.scheme == SchemeKind::OsuCount ? OsuMode::CountBased : OsuMode::Interval;
        port.ctl = std::make_unique<OsuController>(std::move(st), p.osu_metered);
        break;
      }
      case SchemeKind::Capc: {
        CapcSwitchState st;
        st.target_rate = p.capc_target_utilization.value_or(p.target_utilization) * rate;
        st.fair_share = st.target_rate / static_cast<double>(std::max<std::size_t>(1, n_vcs));
        st.rup = p.rup;
        st.rdn = p.rdn;
        st.eru = p.eru;
        st.erf = p.erf;
        st.queue_threshold = p.capc_queue_threshold;
        port.ctl = std::make_unique<CapcController>(st, p.averaging_interval);
        break;
      }
      case SchemeKind::Becn: {
        BecnSwitchState st;
        st.queue_threshold = p.becn_threshold;
        st.min_spacing = p.becn_spacing.value_or(2 * port.link.propagation_delay());
        port.ctl = std::make_unique<BecnController>(std::move(st));
        break;
      }
      case SchemeKind::CreditStatic:
      case SchemeKind::CreditAdaptive:
        break;
    }
    if (port.ctl && port.ctl->interval() > 0) {
      q.schedule(port.ctl->interval(), TimerFire{TimerOwner::Controller, pi, 0});
    }
  }
}

void Simulation::Impl::build_credit() {
  const auto& p = cfg.params;
  const bool adaptive = cfg.scheme == SchemeKind::CreditAdaptive;
  for (PortIndex pi = 0; pi < ports.size(); ++pi) {
    Port& port = ports[pi];
    if (!port.forward()) continue;
    port.credit_gated = true;
    // The loop also spans one data cell time, one credit cell time and the
    // wait for a full replenishment batch.
    const auto base = static_credit_size(port.link) + static_cast<std::int64_t>(p.replenish_batch) + 2;
    const auto n = static_cast<std::int64_t>(port.hop_of.size());
    std::vector<std::int64_t> alloc(port.hop_of.size(), base);
    if (adaptive) {
      // Two round trips of credit shared by every vc: room for a vc to
      // double its allocation each period while others hold theirs.
      port.pool = std::max(2 * base, n * static_cast<std::int64_t>(p.min_grant));
      alloc = adaptive_allocate(std::vector<std::uint64_t>(port.hop_of.size(), 1), port.pool,
                                p.min_grant);
    }
    std::size_t i = 0;
    for (const auto& [id, k] : port.hop_of) {
      port.credit.register_vc(id, alloc[i]);
      port.recv[id] = Receiver{alloc[i], alloc[i], 0};
      port.vcq[id];
      port.rr.push_back(id);
      ++i;
    }
    const SimTime rtt = 2 * port.link.propagation_delay();
    const SimTime resync_every = p.resync_period.value_or(std::max<SimTime>(1000, 100 * rtt));
    q.schedule(resync_every, TimerFire{TimerOwner::Credit, pi, kResync});
    if (adaptive) {
      const SimTime alloc_every = p.allocation_period.value_or(std::max<SimTime>(100, 4 * rtt));
      q.schedule(alloc_every, TimerFire{TimerOwner::Credit, pi, kAllocate});
    }
  }
}

void Simulation::Impl::start_sources() {
  for (auto& v : vcs) {
    if (credit) {
      v.lazy = v.spec.source.kind != SourceKind::Bursty;
      schedule_wake(v, v.src.first_emission(v.spec.pcr.cells_per_second()));
      continue;
    }
    const SimTime start = v.src.first_emission(v.ss.acr > 0.0 ? v.ss.acr : 1.0);
    v.last_rm = start;
    schedule_wake(v, start);
    const auto idx = static_cast<std::uint32_t>(&v - vcs.data());
    if (becn) {
      v.recovery_gen = 0;
      q.schedule(start + becn_recovery_period(cfg.params.becn_recovery_base, v.ss.acr, v.ss.pcr),
                 TimerFire{TimerOwner::Source, idx, kBecnRecovery});
    } else if (probe_period() > 0) {
      q.schedule(start + probe_period(), TimerFire{TimerOwner::Source, idx, kOorProbe});
    }
  }
}

// ------------------------------------------------------------- dispatch

void Simulation::Impl::dispatch(const Event& ev) {
  fnv(hash, ev.at);
  fnv(hash, ev.sequence);
  fnv(hash, ev.kind.index());
  std::visit(Overloaded{
                 [&](const CellArrival& a) {
                   fnv(hash, a.link);
                   fnv(hash, a.cell.vc);
                   fnv(hash, static_cast<std::uint64_t>(a.cell.kind));
                   on_arrival(a);
                 },
                 [&](const TimerFire& t) {
                   fnv(hash, static_cast<std::uint64_t>(t.owner));
                   fnv(hash, t.index);
                   fnv(hash, t.tag);
                   on_timer(t);
                 },
                 [&](const SourceWake& w) {
                   fnv(hash, w.vc);
                   fnv(hash, w.generation);
                   on_wake(w);
                 },
             },
             ev.kind);
}

void Simulation::Impl::on_arrival(const CellArrival& a) {
  Port& p = ports[a.link];
  Cell cell = a.cell;
  VcRt& v = vc(cell.vc);
  if (p.forward()) {
    if (cell.is_data()) --p.wire_data[cell.vc];
    if (p.credit_gated) ++p.credit.at(cell.vc).cells_received;
    const std::size_t node = static_cast<std::size_t>(cell.hop) + 1;
    if (node == v.m + 1) {
      deliver(v, std::move(cell));
    } else {
      switch_forward(v, node, std::move(cell));
    }
    return;
  }
  const std::size_t j = cell.hop;
  const std::size_t node = v.m - j;
  if (cell.kind == CellKind::Credit) {
    handle_credit(v, j, cell);
  } else if (node == 0) {
    source_backward(v, cell);
  } else {
    switch_backward(v, node, j, std::move(cell));
  }
}

void Simulation::Impl::on_timer(const TimerFire& t) {
  switch (t.owner) {
    case TimerOwner::Port: {
      Port& p = ports[t.index];
      touch(p);
      p.busy = false;
      if (!p.credit_gated) p.fifo.end_service();
      try_serve(t.index, true);
      break;
    }
    case TimerOwner::Controller: {
      Port& p = ports[t.index];
      p.ctl->on_interval(now());
      q.schedule(now() + p.ctl->interval(), t);
      break;
    }
    case TimerOwner::Credit: {
      Port& p = ports[t.index];
      const SimTime rtt = 2 * p.link.propagation_delay();
      if (t.tag == kResync) {
        bool reissued = false;
        for (const auto& [id, st] : p.credit.vcs()) {
          const auto sent = st.cells_sent;
          const auto received = st.cells_received;
          if (resync(p.credit, id, sent, received, p.wire_data[id]) > 0) reissued = true;
        }
        if (reissued) try_serve(t.index);
        const SimTime every = cfg.params.resync_period.value_or(std::max<SimTime>(1000, 100 * rtt));
        q.schedule(now() + every, t);
      } else {
        std::vector<std::uint64_t> usage;
        for (VcId id : p.rr) usage.push_back(p.recv[id].usage);
        const SimTime period = cfg.params.allocation_period.value_or(std::max<SimTime>(100, 4 * rtt));
        const auto capacity = static_cast<std::uint64_t>(p.link.rate().cells_per_second() *
                                                         static_cast<double>(period) / kTicksPerSecond);
        auto alloc = adaptive_allocate(usage, p.pool, cfg.params.min_grant, capacity);
        for (std::size_t i = 0; i < p.rr.size(); ++i) {
          VcId id = p.rr[i];
          p.recv[id].target = alloc[i];
          p.recv[id].usage = 0;
          p.credit.at(id).buffer_allocation = alloc[i];
        }
        for (VcId id : std::vector<VcId>(p.rr)) {
          VcRt& v = vc(id);
          const std::size_t k = p.hop_of.at(id);
          Receiver& r = p.recv[id];
          const std::int64_t excess = r.outstanding - r.target;
          if (!r.revoking && excess >= static_cast<std::int64_t>(std::max<std::uint32_t>(1, cfg.params.replenish_batch))) {
            r.revoking = true;
            send_credit_cell(v, k, 0, static_cast<std::uint32_t>(excess));
          }
          grant_if_due(v, k);
        }
        q.schedule(now() + period, t);
      }
      break;
    }
    case TimerOwner::Source: {
      VcRt& v = vcs[t.index];
      const std::uint32_t kind = t.tag & 3U;
      if (kind == kOorProbe) {
        // An out-of-rate RM keeps feedback flowing when the allowed rate has
        // dropped so low (or to zero) that in-rate RM cells stop.
        if (v.started && v.src.in_burst() && (timed_rm() || now() - v.last_rm >= cfg.params.oor_interval)) {
          send_forward_rm(v);
        }
        q.schedule(now() + probe_period(), t);
      } else if (kind == kBecnRecovery) {
        if ((t.tag >> 2) != (v.recovery_gen & kGenerationMask)) break;
        v.ss.acr = becn_recover(v.ss.acr, v.ss.pcr);
        reschedule_source(v);
        if (v.ss.acr < v.ss.pcr) schedule_recovery(v);
      }
      break;
    }
    case TimerOwner::Metrics:
      flush_interval(now());
      q.schedule(now() + cfg.metric_interval, t);
      break;
    case TimerOwner::Test:
      break;
  }
}

void Simulation::Impl::on_wake(const SourceWake& w) {
  VcRt& v = vc(w.vc);
  if (w.generation != v.wake_gen) return;
  v.pending = kNever;
  v.started = true;

  if (credit) {
    if (v.lazy) {
      try_serve(v.fwd[0]);
      return;
    }
    Cell c = make_source_cell(v);
    SimTime next = v.src.next_emission(now(), v.spec.pcr.cells_per_second(), true);
    if (next != kNever) schedule_wake(v, next);
    enqueue_forward(v.fwd[0], std::move(c));
    return;
  }

  if (!(v.ss.acr > 0.0)) {
    v.stalled = true;
    return;
  }
  SimTime next;
  if (v.rm_due) {
    v.rm_due = false;
    send_forward_rm(v);
    next = v.src.next_emission(now(), v.ss.acr, false);
  } else {
    Cell c = make_source_cell(v);
    DataSent ds = source_on_data_sent(v.ss);
    v.ss = ds.state;
    v.rm_due = ds.emit_rm;
    enqueue_forward(v.fwd[0], std::move(c));
    if (!(v.ss.acr > 0.0)) {
      v.stalled = true;
      return;
    }
    next = v.src.next_emission(now(), v.ss.acr, true);
  }
  if (next != kNever) {
    schedule_wake(v, next);
  } else if (!v.src.awaiting_response()) {
    v.stalled = true;
  }
}

// ----------------------------------------------------------- cell paths

void Simulation::Impl::switch_forward(VcRt& v, std::size_t node, Cell cell) {
  if (node == 1 && v.policer) {
    const bool was_clp = cell.clp;
    switch (v.policer->police(cell, now())) {
      case PoliceResult::Reject:
        ++v.tot.policed_drops;
        record_drop(cell);
        return;
      case PoliceResult::AdmitTagged:
        if (cell.is_data() && !was_clp) {
          ++v.tot.tagged;
          --v.tot.emitted_clp[0];
          ++v.tot.emitted_clp[1];
        }
        break;
      case PoliceResult::Admit:
        break;
    }
  }
  cell.hop = static_cast<std::uint16_t>(node);
  enqueue_forward(v.fwd[node], std::move(cell));
}

void Simulation::Impl::switch_backward(VcRt& v, std::size_t node, std::size_t j, Cell cell) {
  Port& out = ports[v.fwd[node]];
  if (out.ctl && cell.rm && !cell.rm->bn) out.ctl->on_backward_rm(cell.vc, *cell.rm, out.fifo, now());
  cell.hop = static_cast<std::uint16_t>(j + 1);
  enqueue_reverse(v.rev[j + 1], std::move(cell));
}

void Simulation::Impl::deliver(VcRt& v, Cell cell) {
  if (cell.is_data()) {
    ++v.tot.delivered;
    ++v.iv_delivered;
    if (cell.efci) {
      ++v.tot.efci_delivered;
      ++v.iv_efci;
    }
    v.last_efci = cell.efci;
    const SimTime d = now() - cell.emitted_at;
    v.delays.push_back(static_cast<std::uint32_t>(std::min<SimTime>(d, std::numeric_limits<std::uint32_t>::max())));
    v.delay_sum += static_cast<double>(d);
    v.tot.ctd_max = std::max(v.tot.ctd_max, d);
    if (credit) credit_forwarded(v, v.m);
    if (v.burst_last_seq && cell.seq == *v.burst_last_seq) complete_burst(v);
    return;
  }
  if (cell.is_rm() && cell.rm && cell.rm->direction == RmDirection::Forward) {
    Cell b;
    b.vc = cell.vc;
    b.kind = CellKind::RM;
    b.rm = destination_turnaround(v.last_efci, *cell.rm);
    b.emitted_at = now();
    b.hop = 0;
    enqueue_reverse(v.rev[0], std::move(b));
  }
}

void Simulation::Impl::source_backward(VcRt& v, const Cell& cell) {
  if (!cell.rm || credit) return;
  const double before = v.ss.acr;
  if (cell.rm->bn) {
    v.ss.acr = becn_on_notification(v.ss.acr, v.ss.mcr);
    if (becn) schedule_recovery(v);
  } else {
    v.ss = source_on_backward_rm(v.ss, *cell.rm);
  }
  if (v.ss.acr != before) reschedule_source(v);
}

void Simulation::Impl::handle_credit(VcRt& v, std::size_t j, const Cell& cell) {
  const PortIndex pi = v.fwd[v.m - j];
  Port& p = ports[pi];
  if (cell.credit->revoke > 0) {
    // Perfect knowledge: the receiver learns at once how much was returned.
    Receiver& r = p.recv.at(cell.vc);
    r.outstanding -= p.credit.revoke(cell.vc, cell.credit->revoke);
    r.revoking = false;
    grant_if_due(v, v.m - j);
    return;
  }
  p.credit.deliver(cell.vc, cell.credit->granted);
  try_serve(pi);
}

// ----------------------------------------------------------------- ports

void Simulation::Impl::touch(Port& p) {
  const SimTime t = now();
  p.occ_integral += static_cast<double>(p.occupancy()) * static_cast<double>(t - p.last_touch);
  p.last_touch = t;
}

void Simulation::Impl::note(Port& p) {
  const auto occ = p.occupancy();
  p.interval_max = std::max(p.interval_max, occ);
  p.all_time_max = std::max(p.all_time_max, occ);
}

void Simulation::Impl::enqueue_forward(PortIndex pi, Cell cell) {
  Port& p = ports[pi];
  touch(p);
  cell.queued_at = now();
  ++p.interval_input;
  if (p.ctl) {
    if (auto notice = p.ctl->on_forward(cell, p.fifo, now())) {
      // Switch-generated notification travels back from this switch.
      VcRt& v = vc(cell.vc);
      const std::size_t node = cell.hop;
      Cell b;
      b.vc = cell.vc;
      b.kind = CellKind::RM;
      b.rm = *notice;
      b.rm->direction = RmDirection::Backward;
      b.emitted_at = now();
      b.hop = static_cast<std::uint16_t>(v.m + 1 - node);
      enqueue_reverse(v.rev[b.hop], std::move(b));
    }
  }
  if (p.credit_gated) {
    VcRt& v = vc(cell.vc);
    auto& queue = p.vcq[cell.vc];
    if (cell.hop >= 1) {
      const Receiver& r = ports[v.fwd[cell.hop - 1]].recv.at(cell.vc);
      if (static_cast<std::int64_t>(queue.size()) >= std::max(r.target, r.outstanding)) {
        record_drop(cell);
        return;
      }
    }
    queue.push_back(std::move(cell));
    ++p.vcq_total;
    note(p);
    try_serve(pi);
    return;
  }
  Cell copy_for_drop = cell;
  if (p.fifo.enqueue(std::move(cell)) == EnqueueResult::Dropped) {
    record_drop(copy_for_drop);
    return;
  }
  note(p);
  try_serve(pi);
}

void Simulation::Impl::enqueue_reverse(PortIndex pi, Cell cell) {
  Port& p = ports[pi];
  touch(p);
  cell.queued_at = now();
  p.fifo.push(std::move(cell));
  note(p);
  try_serve(pi);
}

void Simulation::Impl::try_serve(PortIndex pi, bool back_to_back) {
  Port& p = ports[pi];
  if (p.busy) return;
  Cell cell;
  if (p.credit_gated) {
    const std::size_t n = p.rr.size();
    std::optional<VcId> pick;
    for (std::size_t k = 0; k < n; ++k) {
      VcId id = p.rr[(p.rr_pos + k) % n];
      if (p.credit.at(id).balance <= 0) continue;
      const bool backlog = p.role == PortRole::Access && vc(id).lazy && vc(id).started;
      if (!p.vcq[id].empty() || backlog) {
        pick = id;
        p.rr_pos = (p.rr_pos + k + 1) % n;
        break;
      }
    }
    if (!pick) return;
    touch(p);
    credit_send_gate(p.credit, *pick);
    auto& queue = p.vcq[*pick];
    if (!queue.empty()) {
      cell = std::move(queue.front());
      queue.pop_front();
      --p.vcq_total;
    } else {
      cell = make_source_cell(vc(*pick));
      // A backlogged source's next cell is ready the instant the link frees.
      cell.queued_at = back_to_back ? floor_ticks(p.link.exact_free_time()) : now();
    }
  } else {
    if (!p.fifo.has_waiting()) return;
    touch(p);
    cell = p.fifo.begin_service();
  }
  p.busy = true;
  const SimTime arrive = p.link.transmit(back_to_back ? cell.queued_at : now());
  q.schedule(p.link.free_time(), TimerFire{TimerOwner::Port, pi, kTxDone});

  if (p.credit_gated && cell.hop >= 1) credit_forwarded(vc(cell.vc), cell.hop - 1u);

  if (p.forward() && p.loss_p > 0.0 && uniform01(rng) < p.loss_p) {
    record_drop(cell);
    return;
  }
  if (p.forward() && cell.is_data()) ++p.wire_data[cell.vc];
  q.schedule(arrive, CellArrival{pi, std::move(cell)});
}

// --------------------------------------------------------------- sources

Cell Simulation::Impl::make_source_cell(VcRt& v) {
  bool eom = false;
  if (v.spec.source.kind == SourceKind::Bursty && v.src.burst_last_cell()) {
    eom = true;
    v.packet_pos = 0;
  } else if (++v.packet_pos >= v.spec.packet_cells) {
    eom = true;
    v.packet_pos = 0;
  }
  Cell c = make_data_cell(v.spec.id, now(), eom);
  c.seq = v.seq++;
  c.hop = 0;
  if (v.spec.source.kind == SourceKind::Bursty && v.spec.source.loop == BurstLoop::Closed) {
    if (v.src.burst_starting()) v.burst_start = now();
    if (v.src.burst_last_cell()) v.burst_last_seq = c.seq;
  }
  ++v.tot.emitted;
  ++v.tot.emitted_clp[0];
  return c;
}

void Simulation::Impl::send_forward_rm(VcRt& v) {
  Cell c = make_forward_rm(v.spec.id, std::min(v.ss.acr, v.ss.pcr), v.ss.pcr, now());
  c.hop = 0;
  ++v.tot.rm_emitted;
  v.last_rm = now();
  enqueue_forward(v.fwd[0], std::move(c));
}

void Simulation::Impl::schedule_wake(VcRt& v, SimTime t) {
  ++v.wake_gen;
  v.pending = t;
  q.schedule(t, SourceWake{v.spec.id, v.wake_gen});
}

void Simulation::Impl::reschedule_source(VcRt& v) {
  if (credit || !v.started || !(v.ss.acr > 0.0)) return;
  if (v.src.awaiting_response()) return;
  if (v.pending == kNever && !v.stalled) return;
  v.stalled = false;
  const SimTime t = v.src.reschedule(now(), v.ss.acr);
  if (t == kNever) {
    ++v.wake_gen;
    v.pending = kNever;
    v.stalled = true;
  } else if (t != v.pending) {
    schedule_wake(v, t);
  }
}

void Simulation::Impl::schedule_recovery(VcRt& v) {
  ++v.recovery_gen;
  const auto idx = static_cast<std::uint32_t>(&v - vcs.data());
  const std::uint32_t tag = ((v.recovery_gen & kGenerationMask) << 2) | kBecnRecovery;
  q.schedule(now() + becn_recovery_period(cfg.params.becn_recovery_base, v.ss.acr, v.ss.pcr),
             TimerFire{TimerOwner::Source, idx, tag});
}

void Simulation::Impl::record_drop(const Cell& cell) {
  VcRt& v = vc(cell.vc);
  if (cell.is_data()) {
    ++v.tot.dropped_clp[cell.clp ? 1 : 0];
    ++v.iv_dropped;
    // A lost final cell still ends the burst; the application would
    // otherwise wait forever.
    if (v.burst_last_seq && cell.seq == *v.burst_last_seq) complete_burst(v);
  } else if (cell.is_rm()) {
    ++v.tot.rm_dropped;
  }
}

void Simulation::Impl::complete_burst(VcRt& v) {
  v.tot.burst_response_times.push_back(now() - v.burst_start);
  v.burst_last_seq.reset();
  const SimTime t = v.src.on_response_complete(now());
  if (credit || v.ss.acr > 0.0) {
    schedule_wake(v, t);
  } else {
    v.stalled = true;
  }
}

// ---------------------------------------------------------------- credit

void Simulation::Impl::credit_forwarded(VcRt& v, std::size_t k) {
  Port& up = ports[v.fwd[k]];
  Receiver& r = up.recv.at(v.spec.id);
  --r.outstanding;
  ++r.usage;
  grant_if_due(v, k);
}

void Simulation::Impl::grant_if_due(VcRt& v, std::size_t k) {
  Port& up = ports[v.fwd[k]];
  Receiver& r = up.recv.at(v.spec.id);
  const std::int64_t deficit = r.target - r.outstanding;
  const std::int64_t batch =
      std::max<std::int64_t>(1, std::min<std::int64_t>(cfg.params.replenish_batch, r.target));
  if (deficit < batch) return;
  r.outstanding += deficit;
  up.credit.issue(v.spec.id, deficit);
  send_credit_cell(v, k, static_cast<std::uint32_t>(deficit), 0);
}

void Simulation::Impl::send_credit_cell(VcRt& v, std::size_t k, std::uint32_t granted, std::uint32_t revoke) {
  Port& up = ports[v.fwd[k]];
  Cell c;
  c.vc = v.spec.id;
  c.kind = CellKind::Credit;
  c.credit = CreditCell{v.spec.id, granted, up.credit.at(v.spec.id).cells_received, revoke};
  c.emitted_at = now();
  const std::size_t j = v.m - k;
  c.hop = static_cast<std::uint16_t>(j);
  if (cfg.params.credit_cells_use_link) {
    enqueue_reverse(v.rev[j], std::move(c));
  } else {
    q.schedule(now() + up.link.propagation_delay(), CellArrival{v.rev[j], std::move(c)});
  }
}

// --------------------------------------------------------------- metrics

void Simulation::Impl::flush_interval(SimTime t) {
  if (t <= last_metric) return;
  const SimTime len = t - last_metric;
  const double secs = static_cast<double>(len) / kTicksPerSecond;

  std::map<PortIndex, std::size_t> port_max;
  for (PortIndex pi : trunk_ports) {
    Port& p = ports[pi];
    touch(p);
    PortSample s;
    s.time = t;
    s.port = p.name;
    s.queue_max = p.interval_max;
    s.queue_mean = p.occ_integral / static_cast<double>(len);
    s.input_cells = p.interval_input;
    if (p.ctl) s.load_factor = p.ctl->load_factor();
    log.ports.push_back(s);
    port_max[pi] = p.interval_max;
    p.occ_integral = 0.0;
    p.interval_max = p.occupancy();
    p.interval_input = 0;
  }

  std::vector<double> thr;
  for (const auto& v : vcs) thr.push_back(static_cast<double>(v.iv_delivered) / secs);
  std::optional<double> fairness;
  if (oracle_positive && std::any_of(thr.begin(), thr.end(), [](double x) { return x > 0.0; })) {
    fairness = fairness_index(thr, oracle);
  }

  for (std::size_t i = 0; i < vcs.size(); ++i) {
    VcRt& v = vcs[i];
    IntervalRow row;
    row.time = t;
    row.vc = v.spec.id;
    row.throughput = thr[i];
    if (!credit) row.acr = v.ss.acr;
    for (std::size_t k = 1; k + 1 < v.fwd.size(); ++k) {
      row.queue_max = std::max(row.queue_max, port_max[v.fwd[k]]);
    }
    row.dropped = v.iv_dropped;
    row.delivered = v.iv_delivered;
    row.efci_fraction =
        v.iv_delivered > 0 ? static_cast<double>(v.iv_efci) / static_cast<double>(v.iv_delivered) : 0.0;
    row.fairness_index = fairness;
    log.rows.push_back(row);

    auto check = conservation(v);
    if (!check.holds()) {
      log.conservation_ok = false;
      std::ostringstream msg;
      msg << "t=" << t << " vc " << v.spec.id << ": emitted " << check.emitted << " != delivered "
          << check.delivered << " + dropped " << check.dropped << " + in transit " << check.in_transit
          << " + queued " << check.queued;
      log.conservation_failures.push_back(msg.str());
    }
    v.iv_delivered = 0;
    v.iv_dropped = 0;
    v.iv_efci = 0;
  }
  last_metric = t;
}

ConservationCheck Simulation::Impl::conservation(const VcRt& v) const {
  ConservationCheck c;
  c.emitted = v.tot.emitted;
  c.delivered = v.tot.delivered;
  c.dropped = v.tot.dropped();
  for (PortIndex pi : v.fwd) {
    const Port& p = ports[pi];
    if (auto it = p.wire_data.find(v.spec.id); it != p.wire_data.end()) c.in_transit += it->second;
    if (p.credit_gated) {
      if (auto it = p.vcq.find(v.spec.id); it != p.vcq.end()) c.queued += it->second.size();
    } else {
      for (const auto& cell : p.fifo.waiting_cells()) {
        if (cell.vc == v.spec.id && cell.is_data()) ++c.queued;
      }
    }
  }
  return c;
}

MetricsLog Simulation::Impl::snapshot() const {
  MetricsLog out = log;
  out.end = now();
  for (const auto& v : vcs) {
    VcTotals t = v.tot;
    if (!v.delays.empty()) {
      t.ctd_mean = v.delay_sum / static_cast<double>(v.delays.size());
      std::vector<std::uint32_t> d = v.delays;
      const auto lo = *std::min_element(d.begin(), d.end());
      auto rank = static_cast<std::size_t>(
          std::ceil((1.0 - cfg.cdv_alpha) * static_cast<double>(d.size())));
      rank = std::clamp<std::size_t>(rank, 1, d.size()) - 1;
      std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(rank), d.end());
      t.cdv_peak_to_peak = d[rank] - lo;
    }
    out.totals[v.spec.id] = std::move(t);
  }
  return out;
}

// ---------------------------------------------------------------- facade

Simulation::Simulation(const ScenarioConfig& cfg) : impl_(std::make_unique<Impl>(cfg)) {}
Simulation::~Simulation() = default;

void Simulation::schedule(Event ev) { impl_->q.schedule(std::move(ev)); }

MetricsLog Simulation::run_until(SimTime end) {
  auto& s = *impl_;
  while (!s.q.empty() && s.q.next_time() <= end) {
    Event ev = s.q.pop();
    s.dispatch(ev);
    ++s.processed;
    if (s.hook) s.hook(ev);
  }
  if (s.q.now() < end) s.q.advance_to(end);
  s.flush_interval(s.now());
  return s.snapshot();
}

MetricsLog Simulation::run() { return run_until(impl_->cfg.duration); }

SimTime Simulation::now() const { return impl_->now(); }
std::uint64_t Simulation::events_processed() const { return impl_->processed; }
std::uint64_t Simulation::trace_hash() const { return impl_->hash; }
void Simulation::set_event_hook(std::function<void(const Event&)> hook) { impl_->hook = std::move(hook); }
const ScenarioConfig& Simulation::config() const { return impl_->cfg; }

double Simulation::acr(VcId vc) const { return impl_->vc(vc).ss.acr; }

ConservationCheck Simulation::conservation(VcId vc) const {
  return impl_->conservation(impl_->vc(vc));
}

std::vector<PortInfo> Simulation::ports() const {
  std::vector<PortInfo> out;
  for (const auto& p : impl_->ports) {
    out.push_back(PortInfo{p.name, p.occupancy(), p.all_time_max, p.link.cells_transmitted(),
                           p.role == PortRole::Trunk, p.forward()});
  }
  return out;
}

std::vector<std::string> Simulation::credit_violations() const {
  std::vector<std::string> out;
  const auto& s = *impl_;
  if (!s.credit) return out;
  for (const auto& up : s.ports) {
    if (!up.forward()) continue;
    for (const auto& [id, st] : up.credit.vcs()) {
      const auto lhs = static_cast<std::int64_t>(st.credits_issued) -
                       static_cast<std::int64_t>(st.credits_consumed) -
                       static_cast<std::int64_t>(st.credits_revoked) - st.credits_in_flight;
      if (lhs != st.balance) {
        out.push_back(up.name + " vc " + std::to_string(id) + ": credits issued - consumed - revoked - in flight = " +
                      std::to_string(lhs) + " but balance is " + std::to_string(st.balance));
      }
      const VcRt& v = s.vc(id);
      const std::size_t k = up.hop_of.at(id);
      if (k >= v.m) continue;  // the destination buffers nothing
      const Port& down = s.ports[v.fwd[k + 1]];
      const auto queued = static_cast<std::int64_t>(down.vcq.at(id).size());
      const Receiver& r = up.recv.at(id);
      const auto allocation = std::max(r.target, r.outstanding);
      if (queued > allocation) {
        out.push_back(down.name + " vc " + std::to_string(id) + ": queue " + std::to_string(queued) +
                      " exceeds allocation " + std::to_string(allocation));
      }
    }
  }
  return out;
}

}  // namespace abrsim
