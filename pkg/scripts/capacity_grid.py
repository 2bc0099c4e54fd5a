#!/usr/bin/env python3
"""Print the supported-transmitter grid over bandwidth, numerology and rate.

Handy for picking sweep points: shows where the overload ceiling bites for
a given inter-vehicle distance.
"""

import argparse

from nrv2xsim import phy, scenario
from nrv2xsim.config import SimConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ivd", type=float, default=10.0)
    parser.add_argument("--retx", default="none")
    args = parser.parse_args()

    ue_gnb = scenario.ue_per_gnb_count(1732.0, args.ivd, 6)
    print(f"ivd={args.ivd:g} m -> {ue_gnb} vehicles per cell, retx={args.retx}")
    print("bandwidth_mhz,mu,tf_hz,ue_supported,prr_max")
    for bw in (10.0, 20.0):
        for mu in (0, 1, 2):
            for tf in (10.0, 20.0, 30.0):
                cfg = SimConfig(
                    bandwidth_mhz=bw, mu=mu, tf_hz=tf, ivd_m=args.ivd,
                    retx_scheme=args.retx,
                )
                plan = phy.build_resource_plan(cfg)
                ceiling = phy.prr_max(plan.ue_supported, ue_gnb)
                print(f"{bw:g},{mu},{tf:g},{plan.ue_supported},{ceiling:.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
