"""Coin probabilities of a rotating coherent state: closed form against RK4 of the von Neumann equation."""
import argparse
import csv
import math
import sys
from dataclasses import dataclass

from tomrep import evolution as ev
from tomrep.coin_rep import coherent_density, coins_from_density


@dataclass(frozen=True)
class TrajectoryConfig:
    alpha: float = 1.0
    N: int = 24
    n: int = 0
    n_prime: int = 1
    t_end: float = 2 * math.pi
    step: float = 1e-3
    every: int = 100


def run(cfg: TrajectoryConfig):
    H = ev.oscillator_hamiltonian(cfg.N)
    traj = ev.kinetic_evolve(coherent_density(cfg.alpha, cfg.N), H, (0.0, cfg.t_end), cfg.step)
    for t, rho in zip(traj.times[:: cfg.every], traj.rhos[:: cfg.every]):
        p1, p2 = coins_from_density(rho).get(cfg.n, cfg.n_prime)
        ref = ev.coherent_coin_trajectory(cfg.alpha, cfg.n, cfg.n_prime, t)
        yield t, p1, p2, ref["p1"], ref["p2"], ev.relative_entropy(p1, p2)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    for f, default in TrajectoryConfig().__dict__.items():
        ap.add_argument(f"--{f.replace('_', '-')}", type=type(default), default=default)
    cfg = TrajectoryConfig(**vars(ap.parse_args()))
    if cfg.n >= cfg.n_prime:
        ap.error("need n < n-prime")
    out = csv.writer(sys.stdout)
    out.writerow(["t", "p1_kinetic", "p2_kinetic", "p1_closed", "p2_closed", "kl_p1_p2"])
    worst = 0.0
    for row in run(cfg):
        out.writerow([repr(float(v)) for v in row])
        worst = max(worst, abs(row[1] - row[3]), abs(row[2] - row[4]))
    print(f"# max |kinetic - closed| = {worst:.2e}", file=sys.stderr)


if __name__ == "__main__":
    main()
