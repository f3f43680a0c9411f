#pragma once

#include "abrsim/units.hpp"

#include <cstdint>
#include <optional>

namespace abrsim {

using VcId = std::uint32_t;

enum class CellKind : std::uint8_t { Data, RM, Credit };

enum class RmDirection : std::uint8_t { Forward, Backward };

/// Resource-management payload. One layout serves every scheme; a scheme
/// ignores the fields it does not define. Rates are cells per second.
struct RmPayload {
  RmDirection direction = RmDirection::Forward;
  double er = 0.0;   // explicit rate; switches only ever lower it
  double ccr = 0.0;  // source's current cell rate when the cell left
  bool ci = false;   // congestion indication
  bool reduced = false;
  bool bn = false;   // generated by a switch (BECN), not turned around by a destination
};

/// Hop-by-hop credit grant carried on the reverse link.
struct CreditCell {
  VcId vc = 0;
  std::uint32_t granted = 0;
  std::uint64_t receiver_count = 0;  // cumulative cells received, for resync
  std::uint32_t revoke = 0;          // unused credits the receiver takes back
};

/// A cell as a structured record. `hop` and `seq` are simulator routing
/// bookkeeping: the index of the next port on the cell's path and a per-vc
/// emission counter.
struct Cell {
  VcId vc = 0;
  CellKind kind = CellKind::Data;
  bool efci = false;
  bool clp = false;
  bool eom = false;
  std::optional<RmPayload> rm;
  std::optional<CreditCell> credit;
  SimTime emitted_at = 0;
  SimTime queued_at = 0;  // tick the cell joined its current output queue
  std::uint64_t seq = 0;
  std::uint16_t hop = 0;

  bool is_data() const { return kind == CellKind::Data; }
  bool is_rm() const { return kind == CellKind::RM; }

  /// Sets EFCI. There is deliberately no way to clear it.
  void mark_efci() { efci = true; }
};

Cell make_data_cell(VcId vc, SimTime at, bool eom = false);

/// Forward RM cell as a source emits it: ER starts at PCR, CCR carries the
/// current allowed rate, CI clear. Throws std::invalid_argument unless
/// 0 <= acr <= pcr.
Cell make_forward_rm(VcId vc, double acr, double pcr, SimTime at = 0);

}  // namespace abrsim
