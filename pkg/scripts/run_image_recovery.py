"""Recover a low-rank image B from Y = X B + W by the dual ADMM.

Uses a PGM file when given, otherwise a synthetic rank-5 pattern.

    python3 scripts/run_image_recovery.py --n 128 --fracs 1e-4,1e-3,1e-2
"""

import argparse

from nmlrscreen.experiments import recover_image
from nmlrscreen.instances import low_rank_image
from nmlrscreen.io import read_pgm, write_pgm


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("image", nargs="?")
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--rank", type=int, default=5)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--noise-std", type=float, default=0.0)
    ap.add_argument("--fracs", default="1e-4,1e-3,1e-2,1e-1")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="write the last recovery as PGM")
    args = ap.parse_args()

    img = read_pgm(args.image) if args.image else low_rank_image(args.size, args.size, args.rank)
    print("lambda_frac,lambda,time_s,iterations,mse,converged")
    res = None
    for frac in (float(f) for f in args.fracs.split(",")):
        res = recover_image(img, args.n, args.noise_std, lam_frac=frac, seed=args.seed)
        print(f"{frac:g},{res.lam:.6g},{res.seconds:.3f},{res.iterations},{res.mse:.3e},{res.converged}")
    if args.out and res is not None:
        write_pgm(res.recovered, args.out)


if __name__ == "__main__":
    main()
