"""Command-line front end: ``entlab {compute,sweep,verify,sample}``.

Exit codes: 0 success, 2 usage or domain error, 3 I/O error,
4 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import moments, sampling
from .ensembles import EnsembleParams, purity, von_neumann
from .errors import ConvergenceError, DomainError
from .verify import SUITES, run_suite

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

SWEEP_HEADER = ("m", "n", "theta", "a", "mean_purity", "mean_vn")

_DEFORMED_THETAS = (1.0, 1.25, 1.5, 1.75, 2.0)
_A_GRID = tuple(-0.5 + 0.25 * k for k in range(27))
FIGURES = {
    1: dict(m_range=(2, 50), thetas=_DEFORMED_THETAS, a_values=(-0.5, 0.0), quantity="purity"),
    2: dict(m_range=(8, 8), thetas=(1.0, 1.5, 2.0), a_values=_A_GRID, quantity="purity"),
    3: dict(m_range=(2, 50), thetas=_DEFORMED_THETAS, a_values=(-0.5, 0.0), quantity="vn"),
    4: dict(m_range=(8, 8), thetas=(1.0, 1.5, 2.0), a_values=_A_GRID, quantity="vn"),
}


def fmt(x) -> str:
    """Render a CSV cell: floats with 17 significant digits, None as empty."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([fmt(v) for v in row] for row in rows)
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


@dataclass(frozen=True)
class SweepSpec:
    """A rectangular (m, theta, a) grid, or an endpoint grid at fixed n."""

    m_range: tuple[int, int]
    thetas: tuple[float, ...] = ()
    a_values: tuple[float, ...] = ()
    quantity: str = "both"
    endpoint: str | None = None
    n: int | None = None

    def __post_init__(self):
        lo, hi = self.m_range
        if not 1 <= lo <= hi:
            raise DomainError("m range must satisfy 1 <= start <= stop")
        if self.quantity not in ("purity", "vn", "both"):
            raise DomainError(f"unknown quantity {self.quantity!r}")
        if self.endpoint is None:
            if not self.thetas or not self.a_values:
                raise DomainError("theta and a lists must be nonempty")
            for t in self.thetas:
                if not t > 0:
                    raise DomainError(f"theta must satisfy theta > 0, got {t}")
            for a in self.a_values:
                if not a > -1:
                    raise DomainError(f"a must satisfy a > -1, got {a}")
        else:
            if self.n is None:
                raise DomainError("an endpoint sweep needs --n")
            if hi > self.n:
                raise DomainError(f"endpoint sweep needs m <= n, got m up to {hi}, n={self.n}")

    def points(self):
        """(n or None, params) in m-major, then theta, then a order."""
        lo, hi = self.m_range
        for m in range(lo, hi + 1):
            if self.endpoint is None:
                for t in self.thetas:
                    for a in self.a_values:
                        yield None, EnsembleParams(m, t, a)
            else:
                thetas = self.thetas or (None,)
                for t in thetas:
                    yield self.n, EnsembleParams.from_endpoint(m, self.n, self.endpoint, t)


def _point_row(job):
    n, params, quantity = job
    p = moments.mean_purity(params) if quantity in ("purity", "both") else None
    v = moments.mean_vn(params) if quantity in ("vn", "both") else None
    return (params.m, n, params.theta, params.a, p, v)


def sweep_rows(spec: SweepSpec, workers: int = 1) -> list[tuple]:
    jobs = [(n, p, spec.quantity) for n, p in spec.points()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_point_row, jobs, chunksize=16))
    return [_point_row(j) for j in jobs]


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("ENTLAB_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------- commands

def _params_from_args(args) -> tuple[EnsembleParams, int | None]:
    if args.endpoint is not None:
        if args.n is None:
            raise DomainError("--endpoint needs --n")
        return EnsembleParams.from_endpoint(args.m, args.n, args.endpoint, args.theta), args.n
    if args.theta is None or args.a is None:
        raise DomainError("give --theta and --a, or --n with --endpoint")
    return EnsembleParams(args.m, args.theta, args.a), None


def cmd_compute(args) -> int:
    params, _ = _params_from_args(args)
    record = {"m": params.m, "theta": params.theta, "a": params.a, "d": params.d}
    if args.quantity in ("purity", "both"):
        record["mean_purity"] = moments.mean_purity(params)
    if args.quantity in ("vn", "both"):
        record["mean_vn"] = moments.mean_vn(params)
    if args.format == "json":
        sys.stdout.write(json.dumps(record) + "\n")
    else:
        sys.stdout.write(_csv_text(record.keys(), [record.values()]))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.figure is not None:
        spec = SweepSpec(**FIGURES[args.figure])
    else:
        if args.m_range is None:
            raise DomainError("sweep needs --m-range or --figure")
        spec = SweepSpec(tuple(args.m_range), tuple(args.theta or ()), tuple(args.a or ()),
                         args.quantity, args.endpoint, args.n)
    text = _csv_text(SWEEP_HEADER, sweep_rows(spec, _workers()))
    _write(args.out, text)
    return EXIT_OK


def cmd_verify(args) -> int:
    reports = run_suite(args.suite, args.tol, args.seed)
    payload = {"reports": [r.to_dict() for r in reports]}
    ok = all(r.ok or r.finding for r in reports)
    payload["ok"] = ok
    _write(args.out, json.dumps(payload, indent=2) + "\n")
    return EXIT_OK if ok else 1


def _stats_record(stats: sampling.SampleStats, target):
    rec = asdict(stats)
    rec["target"] = target
    rec["zscore"] = None if target is None else stats.zscore(target)
    return rec


def cmd_sample(args) -> int:
    config = sampling.ChainConfig(args.chains, args.steps, args.burn_in, args.thin,
                                  args.seed, args.step_scale)
    if args.method == "mcmc":
        params, _ = _params_from_args(args)
        run = sampling.run_chains(params, config)
        states = run.states
        steps = np.broadcast_to(run.steps, states.shape[:2])
        accept = run.acceptance
        pur, vn = run.functional("purity"), run.functional("vn")
        targets = (moments.mean_purity(params), moments.mean_vn(params))
        stat_p = sampling.summarize_chains(pur, float(accept.mean()))
        stat_v = sampling.summarize_chains(vn, float(accept.mean()))
        meta = {"method": "mcmc", **asdict(params), "acceptance_rate": accept.tolist(),
                "step_scale": run.step_scale.tolist()}
    else:
        if args.n is None:
            raise DomainError(f"{args.method} needs --m and --n")
        m, n = args.m, args.n
        if args.method == "hs-direct":
            spectra = sampling.sample_hs_direct(m, n, args.count, args.seed)
            targets = (moments.mean_purity_hs(m, n), moments.mean_vn_hs_page(m, n))
        else:
            if n != m:
                raise DomainError(
                    f"bh-direct only covers n = m (got m={m}, n={n}); the unitary "
                    "factor is Haar-distributed only when the dimensions agree. "
                    "Use --method mcmc with --endpoint bh instead")
            spectra = sampling.sample_bh_direct_equal_dim(m, args.count, args.seed)
            targets = (moments.mean_purity_bh(m, n), moments.mean_vn_bh(m, n))
        states = spectra[None]
        steps = np.arange(spectra.shape[0])[None]
        pur, vn = purity(states), von_neumann(states)
        stat_p, stat_v = sampling.iid_stats(pur[0]), sampling.iid_stats(vn[0])
        meta = {"method": args.method, "m": m, "n": n, "count": args.count}

    m = states.shape[-1]
    header = ["chain", "step"] + [f"lambda_{i + 1}" for i in range(m)] + ["purity", "vn"]
    rows = (
        [c, int(steps[c, k]), *states[c, k], pur[c, k], vn[c, k]]
        for c in range(states.shape[0]) for k in range(states.shape[1])
    )
    _write(args.out, _csv_text(header, rows))
    stats = {**meta, "seed": args.seed,
             "purity": _stats_record(stat_p, targets[0]),
             "vn": _stats_record(stat_v, targets[1])}
    text = json.dumps(stats, indent=2) + "\n"
    if args.stats:
        _write(args.stats, text)
    if args.out != "-":
        sys.stdout.write(text)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _ensemble_flags(p: argparse.ArgumentParser, m_required=True):
    p.add_argument("--m", type=int, required=m_required, help="subsystem dimension")
    p.add_argument("--theta", type=float, help="deformation parameter, > 0")
    p.add_argument("--a", type=float, help="weight exponent, > -1")
    p.add_argument("--n", type=int, help="environment dimension (with --endpoint)")
    p.add_argument("--endpoint", choices=("hs", "bh"),
                   help="derive a (and theta, unless given) from (m, n)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="average purity and entropy at one point")
    _ensemble_flags(p)
    p.add_argument("--quantity", choices=("purity", "vn", "both"), default="both")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("sweep", help="averages over a parameter grid, as CSV")
    p.add_argument("--figure", type=int, choices=sorted(FIGURES),
                   help="preset grid for one of the four standard plots")
    p.add_argument("--m-range", type=int, nargs=2, metavar=("START", "STOP"),
                   help="inclusive range of m")
    p.add_argument("--theta", type=float, nargs="+")
    p.add_argument("--a", type=float, nargs="+")
    p.add_argument("--n", type=int)
    p.add_argument("--endpoint", choices=("hs", "bh"))
    p.add_argument("--quantity", choices=("purity", "vn", "both"), default="both")
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run invariant suites, JSON report")
    p.add_argument("--suite", choices=["all", *SUITES], default="all")
    p.add_argument("--tol", type=float, help="override every case tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", help="draw spectra, CSV samples plus JSON stats")
    p.add_argument("--method", choices=("mcmc", "hs-direct", "bh-direct"), default="mcmc")
    _ensemble_flags(p)
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--steps", type=int, default=200_000)
    p.add_argument("--burn-in", type=int, default=20_000)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step-scale", type=float, default=0.5)
    p.add_argument("--count", type=int, default=100_000, help="draws for direct samplers")
    p.add_argument("--out", default="-", help="sample CSV path")
    p.add_argument("--stats", help="also write the JSON stats here")
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"entlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"entlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"entlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
