"""Run the five figure presets and write one CSV per figure.

    python scripts/reproduce_figures.py --out results/ [--no-mc] [--workers 4]
"""
import argparse
import pathlib
import time
from dataclasses import replace

from risfso import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--no-mc", action="store_true", help="analytic curves only")
    args = ap.parse_args()
    outdir = pathlib.Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    workers = cli.resolve_workers(args.workers)
    mc = cli.McSettings(trials=100_000, seed=args.seed, adaptive=True)
    for n in range(1, 6):
        t0 = time.perf_counter()
        curves = cli.figure_preset(n, mc)
        if args.no_mc:
            curves = [replace(c, outputs=frozenset(o for o in c.outputs if not o.value.endswith("_mc")))
                      for c in curves]
        rows = cli.run_curves(curves, workers=workers)
        path = outdir / f"fig{n}.csv"
        cli.emit(rows, cli.result_meta(curves, args.seed), str(path), "csv")
        bad = sum(1 for r in rows if r.get("error"))
        print(f"fig{n}: {len(rows)} rows -> {path} ({time.perf_counter() - t0:.1f}s, {bad} errors)")


if __name__ == "__main__":
    main()
