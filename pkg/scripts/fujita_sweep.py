"""Certificate coverage across the Fujita exponent 1 + 2s/N for several (N, s)."""
import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mixedblowup.certifier import InitialDatum, ScanIncompleteError, fujita_exponent, fujita_scan, scan_to_csv
from mixedblowup.specfun import OperatorParams


@dataclass
class FujitaConfig:
    cases: tuple = ((1, 0.5), (2, 0.5), (1, 0.25), (2, 0.75))
    fractions: tuple = (0.25, 0.5, 0.75, 1.25, 1.5)   # p = 1 + fraction * (p_F - 1)
    amplitude: float = 1.0
    width: float = 1.0
    out_dir: Path = Path("results/fujita")


def main(cfg: FujitaConfig) -> None:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    u0 = InitialDatum.gaussian(cfg.amplitude, cfg.width)
    for N, s in cfg.cases:
        op = OperatorParams(1.0, 1.0, s, N)
        pF = fujita_exponent(op)
        grid = [1 + f * (pF - 1) for f in cfg.fractions]
        try:
            rows = fujita_scan(op, u0, None, grid)
        except ScanIncompleteError as exc:
            print(f"N={N} s={s}: {exc.args[0]}")
            rows = exc.args[1]
        path = cfg.out_dir / f"scan_N{N}_s{s}.csv"
        path.write_text(scan_to_csv(rows))
        marks = " ".join(f"{r.p:.3f}:{'Y' if r.certified else 'n'}" for r in rows)
        print(f"N={N} s={s} p_F={pF:.3f}  {marks}")
    print(f"wrote {cfg.out_dir}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=FujitaConfig.out_dir)
    sys.exit(main(FujitaConfig(out_dir=ap.parse_args().out_dir)))
