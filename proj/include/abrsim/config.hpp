#pragma once

#include "abrsim/contract.hpp"
#include "abrsim/fairness.hpp"
#include "abrsim/port_queue.hpp"
#include "abrsim/schemes.hpp"
#include "abrsim/source_model.hpp"
#include "abrsim/units.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace abrsim {

enum class SchemeKind : std::uint8_t {
  EfciPrca,
  Eprca,
  Osu,
  OsuCount,
  Capc,
  Becn,
  CreditStatic,
  CreditAdaptive,
};

std::string_view to_string(SchemeKind k);
std::optional<SchemeKind> parse_scheme(std::string_view s);
bool is_credit(SchemeKind k);

enum class PoliceMode : std::uint8_t { Off, Drop, Tag };

/// Every tunable of every scheme. Unset optionals take the scheme default
/// (see resolved_source_params()).
struct SchemeParams {
  // ABR source
  std::uint32_t nrm = 32;
  std::optional<double> air_fraction;  // AIR as a fraction of PCR
  std::optional<double> rdf;
  double initial_acr_fraction = 0.1;
  SimTime oor_interval = 10'000;  // out-of-rate RM when a source has gone quiet

  // EFCI / EPRCA
  std::size_t queue_threshold = 100;
  std::optional<std::size_t> ci_threshold;  // default 2 x queue_threshold
  std::size_t growth_window = 50;
  CongestionDetector detector = CongestionDetector::QueueLength;
  double alpha = 1.0 / 16.0;
  double sw_dpf = 7.0 / 8.0;
  double macr_initial_fraction = 1.0;  // of the port's link rate
  std::optional<double> forced_efci_probability;

  // OSU
  double target_utilization = 0.9;
  SimTime averaging_interval = 1000;
  double delta = 0.1;
  bool osu_metered = false;  // per-vc rate measured at the switch instead of CCR

  // CAPC
  double rup = 0.06;
  double rdn = 0.5;
  double eru = 1.5;
  double erf = 0.5;
  std::size_t capc_queue_threshold = 50;
  std::optional<double> capc_target_utilization;  // default: target_utilization

  // BECN
  std::size_t becn_threshold = 100;
  std::optional<SimTime> becn_spacing;  // default: round trip of the congested link
  SimTime becn_recovery_base = 10'000;

  // credit
  std::uint32_t replenish_batch = 10;
  std::optional<SimTime> resync_period;      // default 100 link round trips
  std::optional<SimTime> allocation_period;  // default 4 link round trips
  std::uint32_t min_grant = 2;
  bool credit_cells_use_link = true;
};

struct ResolvedSourceParams {
  double air_fraction;
  double rdf;
};
ResolvedSourceParams resolved_source_params(SchemeKind scheme, const SchemeParams& p);

struct LinkSpec {
  LinkId id;
  NodeId from;
  NodeId to;
  Rate rate;
  SimTime delay = 0;
  std::optional<std::size_t> buffer;  // cells; unbounded when absent
  DropPolicy drop_policy = DropPolicy::TailDrop;
  std::size_t epd_threshold = 0;
  double loss_probability = 0.0;  // random cell loss on the wire (resync experiments)
};

struct VcSpec {
  VcId id = 0;
  std::vector<LinkId> route;
  Rate pcr;
  std::optional<Rate> scr;
  Rate mcr{0};
  std::optional<std::int64_t> mbs;
  Micros cdvt{0};
  SourceModel source;
  std::uint32_t packet_cells = 30;
  PoliceMode police = PoliceMode::Off;
  std::optional<double> initial_acr;  // cells/s
  std::optional<Rate> demand;         // cap for the max-min oracle
  std::optional<Rate> access_rate;    // default: rate of the first route link
  SimTime start_jitter = 0;           // seeded random offset added to the start

  TrafficContract contract() const;
};

struct ScenarioConfig {
  std::string name = "scenario";
  SchemeKind scheme = SchemeKind::Eprca;
  SchemeParams params;
  std::vector<NodeId> switches;
  std::vector<LinkSpec> links;
  std::vector<VcSpec> vcs;
  SimTime access_delay = 10;
  SimTime duration = 0;
  std::uint64_t seed = 1;
  SimTime metric_interval = 10'000;
  double cdv_alpha = 0.01;

  const LinkSpec* find_link(std::string_view id) const;
  const VcSpec* find_vc(VcId id) const;
  VcSpec* find_vc(VcId id);

  /// Throws ConfigError listing every problem found.
  void validate() const;
};

/// Max-min problem over the trunk links. Each VC is capped at its demand
/// when given, otherwise at its PCR.
AllocationProblem allocation_problem(const ScenarioConfig& cfg);

// ------------------------------------------------------- text format

/// Parsed but uninterpreted configuration file: ordered sections of
/// key = value lines. Section headers are "[type]" or "[type name]".
struct ConfigDocument {
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };
  struct Section {
    std::string type;
    std::string name;
    std::vector<Entry> entries;
    int line = 0;

    const Entry* find(std::string_view key) const;
  };
  std::vector<Section> sections;

  static ConfigDocument parse(std::string_view text);
  std::string dump() const;

  /// Sets "section.key" or "type.name.key" (e.g. "scheme.rup",
  /// "vc.3.start_us"), creating the section or entry when missing.
  void set(std::string_view dotted_key, std::string_view value);
  std::optional<std::string> get(std::string_view dotted_key) const;
};

ScenarioConfig load_config(const ConfigDocument& doc);
ScenarioConfig load_config_text(std::string_view text);
ScenarioConfig load_config_file(const std::string& path);

/// Fully expanded, exact form: reloading it reproduces the same simulation.
std::string serialize_config(const ScenarioConfig& cfg);

}  // namespace abrsim
