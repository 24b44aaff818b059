"""Per-index thresholds of all four rules on one seeded instance, with the oracle rank
just above each threshold.

    python3 scripts/rule_table.py --seed 7 --lambda0-frac 0.5
"""

import argparse

from nmlrscreen.experiments import certificates
from nmlrscreen.instances import InstanceSpec, generate_instance
from nmlrscreen.linalg import rank_eps
from nmlrscreen.primal import solve_primal
from nmlrscreen.rules import RuleKind


def fmt(t):
    return "" if t is None else f"{t:.6g}"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--p", type=int, default=50)
    ap.add_argument("--q", type=int, default=20)
    ap.add_argument("--rank", type=int, default=5)
    ap.add_argument("--noise-std", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--lambda0-frac", type=float, default=0.5)
    args = ap.parse_args()

    X, Y, _ = generate_instance(InstanceSpec(args.n, args.p, args.q, args.noise_std,
                                             args.rank, args.seed))
    rules = list(RuleKind)
    lmax, certs = certificates(X, Y, args.lambda0_frac, rules)
    print(f"# lambda_max={lmax:.6g} lambda0={args.lambda0_frac * lmax:.6g}")
    print("index," + ",".join(r.value for r in rules) + ",oracle_rank_above_PSR+")
    for i in range(min(args.p, args.q)):
        row = [certs[r].clamped[i] for r in rules]
        t = certs[RuleKind.PSRplus].clamped[i]
        oracle = "" if t is None else rank_eps(solve_primal(X, Y, t * (1 + 1e-3)))
        print(f"{i + 1}," + ",".join(fmt(v) for v in row) + f",{oracle}")


if __name__ == "__main__":
    main()
