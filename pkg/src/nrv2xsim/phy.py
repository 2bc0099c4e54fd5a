"""Numerology and resource-capacity arithmetic for sidelink broadcast.

Everything here is exact integer/closed-form math: subcarrier spacing,
the PRB grid per (bandwidth, numerology), per-message PRB sizing, how
many transmitters fit into a slot and into a second, and the overload
ceiling on the packet reception ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .config import SimConfig

SUBCARRIERS_PER_PRB = 12
USABLE_SYMBOLS_PER_SLOT = 9
NPRB_PSCCH = 2  # control channel cost per message, fixed

# PRB grid sizes by (bandwidth in MHz, numerology index).  60 kHz spacing
# does not fit a 5 MHz carrier, so (5, 2) is deliberately absent.
PRB_TABLE = {
    (5, 0): 25, (10, 0): 52, (15, 0): 79, (20, 0): 106,
    (5, 1): 11, (10, 1): 24, (15, 1): 38, (20, 1): 51,
    (10, 2): 11, (15, 2): 18, (20, 2): 24,
}
PRB_TABLE_BANDWIDTHS_MHZ = (5, 10, 15, 20)
PRB_TABLE_MUS = (0, 1, 2)


def scs_khz(mu: int) -> int:
    """Subcarrier spacing in kHz for numerology index mu (0..4)."""
    if not 0 <= mu <= 4:
        raise ValueError(f"mu must be in 0..4, got {mu}")
    return 15 * 2**mu


@dataclass(frozen=True)
class Numerology:
    mu: int
    scs_khz: int
    slots_per_second: int
    usable_symbols: int = USABLE_SYMBOLS_PER_SLOT

    @classmethod
    def from_mu(cls, mu: int) -> "Numerology":
        return cls(mu=mu, scs_khz=scs_khz(mu), slots_per_second=1000 * 2**mu)


@dataclass(frozen=True)
class CqiEntry:
    cqi_index: int
    modulation: str
    code_rate: float        # target code rate
    efficiency: float       # bits per resource element


# 4-bit CQI table with 256QAM entries (the variant used for sidelink MCS
# selection here).  Efficiency is strictly increasing in the index.
CQI_TABLE = (
    CqiEntry(1, "qpsk", 78 / 1024, 0.1523),
    CqiEntry(2, "qpsk", 193 / 1024, 0.3770),
    CqiEntry(3, "qpsk", 449 / 1024, 0.8770),
    CqiEntry(4, "16qam", 378 / 1024, 1.4766),
    CqiEntry(5, "16qam", 490 / 1024, 1.9141),
    CqiEntry(6, "16qam", 616 / 1024, 2.4063),
    CqiEntry(7, "64qam", 466 / 1024, 2.7305),
    CqiEntry(8, "64qam", 567 / 1024, 3.3223),
    CqiEntry(9, "64qam", 666 / 1024, 3.9023),
    CqiEntry(10, "64qam", 772 / 1024, 4.5234),
    CqiEntry(11, "64qam", 873 / 1024, 5.1152),
    CqiEntry(12, "256qam", 711 / 1024, 5.5547),
    CqiEntry(13, "256qam", 797 / 1024, 6.2266),
    CqiEntry(14, "256qam", 885 / 1024, 6.9141),
    CqiEntry(15, "256qam", 948 / 1024, 7.4063),
)


def prb_count(bandwidth_mhz: float, mu: int) -> int:
    """PRB grid size for a carrier; raises for undefined (bandwidth, mu) pairs."""
    try:
        return PRB_TABLE[(bandwidth_mhz, mu)]
    except KeyError:
        raise ValueError(
            f"undefined PRB entry: bandwidth_mhz={bandwidth_mhz}, mu={mu}"
        ) from None


def required_se(packet_size_bytes: float, ue_gnb: int, tf_hz: float,
                bandwidth_hz: float) -> float:
    """Spectral efficiency in bit/s/Hz needed to serve ue_gnb users at tf_hz."""
    return packet_size_bytes * 8.0 * ue_gnb * tf_hz / bandwidth_hz


def select_cqi(se: float, table: tuple[CqiEntry, ...] = CQI_TABLE) -> CqiEntry:
    """Lowest-index entry whose efficiency covers se; clamps to the top entry."""
    for entry in table:
        if entry.efficiency >= se:
            return entry
    return table[-1]


def nprb_pssch(packet_size_bytes: int, subcarriers_per_prb: int,
               usable_symbols: int, max_mcs_efficiency: float) -> int:
    """Data-channel PRBs needed to carry one packet at the peak efficiency."""
    bits = packet_size_bytes * 8
    return math.ceil(bits / (subcarriers_per_prb * usable_symbols * max_mcs_efficiency))


def ue_per_slot(n_prb: int, nprb_total: int) -> int:
    """How many whole messages fit side by side in the PRB grid of one slot."""
    if nprb_total <= 0:
        raise ValueError(f"nprb_total must be positive, got {nprb_total}")
    return n_prb // nprb_total


def ue_supported(per_slot: int, slots_per_second: int, tf_hz: float,
                 retx_factor: int = 1) -> int:
    """Transmitters servable per second; retx_factor 2 halves it for blind repeats."""
    if tf_hz <= 0:
        raise ValueError(f"tf_hz must be positive, got {tf_hz}")
    if retx_factor not in (1, 2):
        raise ValueError(f"retx_factor must be 1 or 2, got {retx_factor}")
    return math.floor(per_slot * slots_per_second / (tf_hz * retx_factor))


def prr_max(supported: int, ue_gnb: int) -> float:
    """Overload ceiling on PRR: capped at 1 when the cell is not overloaded."""
    if ue_gnb <= 0:
        raise ValueError(f"ue_gnb must be positive, got {ue_gnb}")
    return min(1.0, supported / ue_gnb)


@dataclass(frozen=True)
class ResourcePlan:
    """Numerology-derived capacity of one cell for the configured message."""

    n_prb: int              # PRB grid size of the carrier
    nprb_pscch: int         # control PRBs per message
    nprb_pssch: int         # data PRBs per message
    nprb_total: int
    ue_per_slot: int
    ue_supported: int       # per second, after the retransmission factor
    subcarriers_per_prb: int = SUBCARRIERS_PER_PRB


def build_resource_plan(cfg: "SimConfig") -> ResourcePlan:
    num = Numerology.from_mu(cfg.mu)
    n_prb = prb_count(cfg.bandwidth_mhz, cfg.mu)
    pssch = nprb_pssch(
        cfg.packet_size_bytes, SUBCARRIERS_PER_PRB, num.usable_symbols,
        cfg.max_mcs_efficiency,
    )
    total = pssch + NPRB_PSCCH
    per_slot = ue_per_slot(n_prb, total)
    retx_factor = 1 if cfg.retx_scheme == "none" else 2
    supported = ue_supported(per_slot, num.slots_per_second, cfg.tf_hz, retx_factor)
    return ResourcePlan(
        n_prb=n_prb,
        nprb_pscch=NPRB_PSCCH,
        nprb_pssch=pssch,
        nprb_total=total,
        ue_per_slot=per_slot,
        ue_supported=supported,
    )
