#include "abrsim/cell.hpp"
#include "abrsim/contract.hpp"
#include "abrsim/errors.hpp"

#include <stdexcept>

namespace abrsim {

Cell make_data_cell(VcId vc, SimTime at, bool eom) {
  Cell c;
  c.vc = vc;
  c.kind = CellKind::Data;
  c.eom = eom;
  c.emitted_at = at;
  return c;
}

Cell make_forward_rm(VcId vc, double acr, double pcr, SimTime at) {
  if (!(acr >= 0.0) || acr > pcr) {
    throw std::invalid_argument("forward RM requires 0 <= acr <= pcr");
  }
  Cell c;
  c.vc = vc;
  c.kind = CellKind::RM;
  c.emitted_at = at;
  c.rm = RmPayload{RmDirection::Forward, pcr, acr, false, false, false};
  return c;
}

Micros bt_exact(std::int64_t mbs, Rate scr, Rate pcr) {
  if (mbs < 1) throw InvalidContract("mbs must be at least 1");
  if (!scr.positive()) throw InvalidContract("scr must be positive");
  if (scr > pcr) throw InvalidContract("scr exceeds pcr");
  return Micros(mbs - 1) * (scr.interval() - pcr.interval());
}

SimTime bt_from_mbs(std::int64_t mbs, Rate scr, Rate pcr) {
  return floor_ticks(bt_exact(mbs, scr, pcr));
}

void TrafficContract::validate() const {
  if (!pcr.positive()) throw InvalidContract("pcr must be positive");
  if (mcr.value() < 0) throw InvalidContract("mcr must be non-negative");
  if (mcr > pcr) throw InvalidContract("mcr exceeds pcr");
  if (scr) {
    if (!scr->positive()) throw InvalidContract("scr must be positive");
    if (*scr > pcr) throw InvalidContract("scr exceeds pcr");
  }
  if (mbs && *mbs < 1) throw InvalidContract("mbs must be at least 1");
  if (cdvt < 0 || bt < 0) throw InvalidContract("tolerances must be non-negative");
}

TrafficContract TrafficContract::make(Rate pcr, std::optional<Rate> scr, Rate mcr,
                                      std::optional<std::int64_t> mbs, Micros cdvt) {
  TrafficContract c;
  c.pcr = pcr;
  c.scr = scr;
  c.mcr = mcr;
  c.mbs = mbs;
  c.cdvt = cdvt;
  c.validate();
  if (mbs && scr) c.bt = bt_exact(*mbs, *scr, pcr);
  return c;
}

}  // namespace abrsim
