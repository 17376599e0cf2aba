"""Density matrix -> tomogram -> density matrix for a few states; prints the worst element error."""
import argparse
import time
from dataclasses import dataclass

import numpy as np

from tomrep import states as S
from tomrep import tomography as T


@dataclass(frozen=True)
class RoundtripConfig:
    N: int = 16
    s_max: float = 10.0
    radial_nodes: int = 96
    angles: int = 64
    coherent: float = 0.5


def run(cfg: RoundtripConfig) -> dict:
    rcfg = T.ReconstructionConfig(s_max=cfg.s_max, radial_nodes=cfg.radial_nodes, angles=cfg.angles)
    specs = {
        "vacuum": S.FockSpec(0),
        "fock1": S.FockSpec(1),
        "fock2": S.FockSpec(2),
        f"coherent{cfg.coherent}": S.CoherentSpec(cfg.coherent),
    }
    out = {}
    for name, spec in specs.items():
        rho = S.density_matrix(spec, cfg.N)
        t0 = time.perf_counter()
        res = T.density_from_tomogram(T.DensityTomogram(rho), cfg.N, rcfg, check=False)
        out[name] = (float(np.max(np.abs(res.rho - rho))), res.quadrature_error, time.perf_counter() - t0)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    for f, default in RoundtripConfig().__dict__.items():
        ap.add_argument(f"--{f.replace('_', '-')}", type=type(default), default=default)
    cfg = RoundtripConfig(**vars(ap.parse_args()))
    print(f"{'state':<14}{'max error':>12}{'estimate':>12}{'seconds':>9}")
    for name, (err, est, dt) in run(cfg).items():
        print(f"{name:<14}{err:>12.2e}{est:>12.2e}{dt:>9.2f}")


if __name__ == "__main__":
    main()
