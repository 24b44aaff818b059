"""Sample every certified interval on seeded instances and compare with the oracle rank.

    python3 scripts/run_safety_sweep.py --instances 20 --lambda0-frac 0.5
"""

import argparse
import time

from nmlrscreen.experiments import certificates, safety_check
from nmlrscreen.instances import InstanceSpec, generate_instance
from nmlrscreen.rules import RuleKind


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=20)
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--p", type=int, default=50)
    ap.add_argument("--q", type=int, default=20)
    ap.add_argument("--ranks", default="2,5,10")
    ap.add_argument("--noise-std", type=float, default=0.01)
    ap.add_argument("--lambda0-frac", type=float, default=0.5)
    ap.add_argument("--per-interval", type=int, default=10)
    ap.add_argument("--seed", type=int, default=1000)
    args = ap.parse_args()

    ranks = [int(r) for r in args.ranks.split(",")]
    rules = list(RuleKind)
    start = time.perf_counter()
    total, bad = 0, 0
    print("seed,rank," + ",".join(f"intervals_{r.value}" for r in rules) + ",checks,violations")
    for k in range(args.instances):
        seed, rank = args.seed + k, ranks[k % len(ranks)]
        spec = InstanceSpec(args.n, args.p, args.q, args.noise_std, rank, seed)
        X, Y, _ = generate_instance(spec)
        _, certs = certificates(X, Y, args.lambda0_frac, rules)
        res = safety_check(X, Y, certs, per_interval=args.per_interval)
        total += res.checks
        bad += len(res.violations)
        counts = ",".join(str(len(certs[r].intervals)) for r in rules)
        print(f"{seed},{rank},{counts},{res.checks},{len(res.violations)}")
    print(f"# {total} checks, {bad} violations, {time.perf_counter() - start:.1f} s")


if __name__ == "__main__":
    main()
