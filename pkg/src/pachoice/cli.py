"""Experiment driver: configuration, seeded parallel trials, checkpoint CSVs,
the exact small-m enumeration oracle, and summaries.

Reproducibility contract: trial t of an experiment with seed s runs on the
uniform stream PCG64(SeedSequence([s, t])). Results are therefore identical
across re-runs and across any degree of worker parallelism; a single writer
emits records sorted by (trial, j).

CSV schema (header mandatory, one row per trial x checkpoint):

    run_id,model,d,alpha,trial,j,max_degree,f_1,...,f_{k_max}

Wall-clock segment times are kept on the in-memory records only; writing
them would break byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels, theory
from .ballsbins import coupled_run
from .fstats import KMaxExceededError
from .model import MAX_EDGES, ModelSpec, GrowthSnapshot, grow, init
from .rng import RandomSource

__version__ = "0.1.0"


class CliError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "min"
    choices: int = 2
    alpha: float = 1.0
    dgrow_a: float | None = None
    edges: int = 10**6
    trials: int = 1
    seed: int = 0
    checkpoints: str | tuple[int, ...] = "geometric:1.5"
    k_max: int = 64
    out: str | None = None
    workers: int = 1
    run_id: str | None = None

    def validate(self) -> None:
        if self.trials < 1:
            raise CliError("trials must be >= 1")
        if not 1 <= self.edges <= MAX_EDGES:
            raise CliError(f"edges must be in [1, {MAX_EDGES}]")
        if not 0 <= self.seed < 2**64:
            raise CliError("seed must be a 64-bit non-negative integer")
        if self.k_max < 1:
            raise CliError("k_max must be >= 1")
        if self.workers < 1:
            raise CliError("workers must be >= 1")
        self.spec()
        self.schedule()

    def spec(self) -> ModelSpec:
        try:
            return ModelSpec(rule=self.model, choices=self.choices,
                             alpha=self.alpha, dgrow_a=self.dgrow_a)
        except ValueError as e:
            raise CliError(str(e)) from e

    def schedule(self) -> tuple[int, ...]:
        return build_schedule(self.edges, self.checkpoints)

    def resolved_run_id(self) -> str:
        if self.run_id:
            return self.run_id
        key = json.dumps(
            {
                "model": self.model,
                "choices": self.choices,
                "alpha": self.alpha,
                "dgrow_a": self.dgrow_a,
                "edges": self.edges,
                "trials": self.trials,
                "seed": self.seed,
                "checkpoints": list(self.schedule()),
                "k_max": self.k_max,
            },
            sort_keys=True,
        )
        return hashlib.sha256(key.encode()).hexdigest()[:12]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "choices": self.choices,
            "alpha": self.alpha,
            "dgrow_a": self.dgrow_a,
            "edges": self.edges,
            "trials": self.trials,
            "seed": self.seed,
            "checkpoints": self.checkpoints if isinstance(self.checkpoints, str)
            else list(self.checkpoints),
            "k_max": self.k_max,
            "out": self.out,
            "workers": self.workers,
            "run_id": self.resolved_run_id(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(d) - known
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}")
        if isinstance(d.get("checkpoints"), list):
            d = dict(d, checkpoints=tuple(d["checkpoints"]))
        return cls(**d)


def build_schedule(edges: int, checkpoints: str | Sequence[int]) -> tuple[int, ...]:
    """Checkpoint edge counts. Geometric schedules start at j = 10 and always
    include the final edge count; explicit lists are validated as-given."""
    if isinstance(checkpoints, str):
        kind, _, arg = checkpoints.partition(":")
        if kind == "geometric":
            try:
                ratio = float(arg or "1.5")
            except ValueError as e:
                raise CliError(f"bad geometric ratio {arg!r}") from e
            if ratio <= 1.0:
                raise CliError("geometric ratio must be > 1")
            pts = set()
            v = 10.0
            while v < edges:
                pts.add(int(round(v)))
                v *= ratio
            pts.add(edges)
            return tuple(sorted(p for p in pts if 1 <= p <= edges))
        if kind == "list":
            try:
                vals = [int(x) for x in arg.split(",") if x]
            except ValueError as e:
                raise CliError(f"bad checkpoint list {arg!r}") from e
        else:
            raise CliError(f"unknown checkpoint spec {checkpoints!r}")
    else:
        vals = [int(x) for x in checkpoints]
    for v in vals:
        if not 1 <= v <= edges:
            raise CliError(f"checkpoint {v} outside [1, edges={edges}]")
    return tuple(sorted(set(vals)))


# ---------------------------------------------------------------------------
# trial records


@dataclass(frozen=True)
class CheckpointRecord:
    run_id: str
    model: str
    d: int
    alpha: float
    trial: int
    j: int
    max_degree: int
    f: tuple[int, ...]
    elapsed_ns: int = 0  # in-memory only, never serialized


def _run_trial(config: ExperimentConfig, trial: int) -> list[CheckpointRecord]:
    spec = config.spec()
    rng = RandomSource.for_trial(config.seed, trial)
    state = init(spec, m_capacity=config.edges)
    run_id = config.resolved_run_id()
    records: list[CheckpointRecord] = []

    def observe(snap: GrowthSnapshot) -> None:
        records.append(
            CheckpointRecord(
                run_id=run_id,
                model=config.model,
                d=config.choices,
                alpha=config.alpha,
                trial=trial,
                j=snap.j,
                max_degree=snap.max_degree,
                f=snap.f,
                elapsed_ns=snap.elapsed_ns,
            )
        )

    grow(state, spec, rng, config.edges, k_max=config.k_max,
         checkpoints=config.schedule(), observers=[observe])
    return records


def _trial_worker(args: tuple[ExperimentConfig, int]) -> list[CheckpointRecord]:
    return _run_trial(*args)


def run_trials(config: ExperimentConfig) -> list[CheckpointRecord]:
    """All trials, records sorted by (trial, j); independent of worker count."""
    config.validate()
    if config.workers == 1:
        blocks = [_run_trial(config, t) for t in range(config.trials)]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            blocks = list(
                pool.map(_trial_worker, [(config, t) for t in range(config.trials)])
            )
    return [rec for block in blocks for rec in block]


# ---------------------------------------------------------------------------
# CSV + meta persistence


def write_records_csv(path: str | Path, records: Sequence[CheckpointRecord],
                      k_max: int) -> None:
    header = ["run_id", "model", "d", "alpha", "trial", "j", "max_degree"]
    header += [f"f_{k}" for k in range(1, k_max + 1)]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in records:
                if len(r.f) != k_max:
                    raise CliError(
                        f"record at trial={r.trial} j={r.j} has {len(r.f)} "
                        f"f-columns, expected {k_max}"
                    )
                w.writerow([r.run_id, r.model, r.d, repr(r.alpha), r.trial,
                            r.j, r.max_degree, *r.f])
    except OSError as e:
        raise CliError(f"{path}: {e}") from e


def read_records_csv(path: str | Path) -> list[CheckpointRecord]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[:7] != ["run_id", "model", "d", "alpha",
                                            "trial", "j", "max_degree"]:
                raise CliError(f"{path}: not a pachoice records CSV")
            k_max = len(header) - 7
            out = []
            for row in reader:
                if len(row) != len(header):
                    raise CliError(f"{path}: ragged row {row[:3]}...")
                out.append(
                    CheckpointRecord(
                        run_id=row[0],
                        model=row[1],
                        d=int(row[2]),
                        alpha=float(row[3]),
                        trial=int(row[4]),
                        j=int(row[5]),
                        max_degree=int(row[6]),
                        f=tuple(int(x) for x in row[7:]),
                    )
                )
            return out
    except OSError as e:
        raise CliError(f"{path}: {e}") from e


def meta_path(csv_path: str | Path) -> Path:
    return Path(str(csv_path) + ".meta.json")


def write_meta(csv_path: str | Path, config: ExperimentConfig) -> None:
    doc = {"version": __version__, "config": config.to_dict(),
           "schedule": list(config.schedule())}
    try:
        meta_path(csv_path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    except OSError as e:
        raise CliError(f"{csv_path}: {e}") from e


# ---------------------------------------------------------------------------
# summaries


def _pct(values: list[float], q: float) -> float:
    return float(np.percentile(np.asarray(values, dtype=np.float64), q))


def summarize(records: Sequence[CheckpointRecord], meta: dict | None = None) -> dict:
    """Aggregate records into a JSON-ready summary with theory deltas."""
    if not records:
        raise CliError("no records to summarize")
    by_run: dict[str, list[CheckpointRecord]] = defaultdict(list)
    for r in records:
        by_run[r.run_id].append(r)

    alphas = theory.alpha_seq(5)
    runs = []
    for run_id, recs in by_run.items():
        by_j: dict[int, list[CheckpointRecord]] = defaultdict(list)
        for r in recs:
            by_j[r.j].append(r)
        checkpoints = []
        for j in sorted(by_j):
            batch = by_j[j]
            deltas = [float(r.max_degree) for r in batch]
            f_over_j = {}
            alpha_dev = {}
            k_top = min(5, len(batch[0].f))
            for k in range(1, k_top + 1):
                ratio = sum(r.f[k - 1] for r in batch) / (len(batch) * j)
                f_over_j[str(k)] = ratio
                alpha_dev[str(k)] = ratio - alphas[k - 1]
            entry = {
                "j": j,
                "trials": len(batch),
                "max_degree": {
                    "mean": sum(deltas) / len(deltas),
                    "min": min(deltas),
                    "max": max(deltas),
                    "p10": _pct(deltas, 10),
                    "p50": _pct(deltas, 50),
                    "p90": _pct(deltas, 90),
                },
                "f_over_j": f_over_j,
                "alpha_dev": alpha_dev,
            }
            if j >= 16:
                ref = theory.reference_curve(j)
                entry["reference_curve"] = ref
                entry["max_degree_minus_reference"] = entry["max_degree"]["mean"] - ref
            checkpoints.append(entry)
        first = recs[0]
        runs.append(
            {
                "run_id": run_id,
                "model": first.model,
                "d": first.d,
                "alpha": first.alpha,
                "trials": len({r.trial for r in recs}),
                "checkpoints": checkpoints,
            }
        )

    doc: dict = {"version": __version__, "runs": sorted(runs, key=lambda r: r["run_id"])}
    if meta:
        doc["config"] = meta.get("config")
        doc["seed"] = (meta.get("config") or {}).get("seed")
    else:
        doc["config"] = None
        doc["seed"] = None
    return doc


# ---------------------------------------------------------------------------
# exact enumeration oracle (independent of the simulator code paths)


@dataclass
class EnumerationResult:
    m: int
    exact: bool  # probabilities are Fractions (alpha integral) vs floats
    probs: dict[tuple[int, ...], object]

    def total(self):
        return sum(self.probs.values())

    def delta_dist(self) -> dict[int, object]:
        out: dict[int, object] = defaultdict(self._zero)
        for ms, p in self.probs.items():
            out[ms[0]] += p
        return dict(out)

    def f_dist(self, k_max: int) -> dict[tuple[int, ...], object]:
        out: dict[tuple[int, ...], object] = defaultdict(self._zero)
        for ms, p in self.probs.items():
            f = tuple(sum(d for d in ms if d >= k) for k in range(1, k_max + 1))
            out[f] += p
        return dict(out)

    def _zero(self):
        return Fraction(0) if self.exact else 0.0

    def to_dict(self) -> dict:
        def key(ms):
            return ",".join(str(d) for d in ms)

        doc = {
            "m": self.m,
            "exact": self.exact,
            "multisets": {key(ms): float(p) for ms, p in sorted(self.probs.items())},
            "max_degree": {str(k): float(p) for k, p in sorted(self.delta_dist().items())},
        }
        if self.exact:
            doc["multisets_exact"] = {
                key(ms): str(p) for ms, p in sorted(self.probs.items())
            }
        return doc


def _degree_masses(ms: tuple[int, ...], alpha: float, exact: bool):
    counts = Counter(ms)
    if exact:
        return {d: c * Fraction(d) ** int(alpha) for d, c in counts.items()}
    return {d: c * float(d) ** alpha for d, c in counts.items()}


def _chosen_degree_dist(ms: tuple[int, ...], spec: ModelSpec, exact: bool):
    """P(winning candidate has degree delta) for one step from multiset ms."""
    m = sum(ms) // 2
    d = spec.effective_choices(m)
    masses = _degree_masses(ms, spec.alpha, exact)
    total = sum(masses.values())
    out = []
    if d == 1:
        for deg, mass in masses.items():
            out.append((deg, mass / total))
        return out
    descending = spec.rule != "max"
    degs = sorted(masses, reverse=descending)
    running = Fraction(0) if exact else 0.0
    prev_pow = Fraction(0) if exact else 0.0
    for deg in degs:
        running = running + masses[deg]
        cur_pow = (running / total) ** d
        out.append((deg, cur_pow - prev_pow))
        prev_pow = cur_pow
    return out


def enumerate_exact(m_max: int, spec: ModelSpec) -> EnumerationResult:
    """Exact distribution over degree multisets after m_max edges, by dynamic
    programming over multiset states. Refuses m_max > 6 (state-space guard).

    Probabilities are exact rationals when alpha is a non-negative integer,
    floats otherwise; they sum to 1 (exactly, resp. within 1e-12).
    """
    if not 1 <= m_max <= 6:
        raise ValueError("enumerate_exact supports 1 <= m_max <= 6")
    exact = spec.alpha == int(spec.alpha) and spec.alpha >= 0
    one = Fraction(1) if exact else 1.0
    probs: dict[tuple[int, ...], object] = {(1, 1): one}
    for _ in range(m_max - 1):
        nxt: dict[tuple[int, ...], object] = defaultdict(lambda: one * 0)
        for ms, p in probs.items():
            for deg, pd in _chosen_degree_dist(ms, spec, exact):
                if pd == 0:
                    continue
                lst = list(ms)
                lst.remove(deg)
                lst.append(deg + 1)
                lst.append(1)
                nxt[tuple(sorted(lst, reverse=True))] += p * pd
        probs = dict(nxt)
    return EnumerationResult(m=m_max, exact=exact, probs=probs)


# ---------------------------------------------------------------------------
# Monte Carlo validation harness (production step law, many small runs)


def _decode_multiset(code: int) -> tuple[int, ...]:
    digits = []
    while code:
        code, d = divmod(code, 32)
        digits.append(int(d))
    return tuple(reversed(digits))


def mc_multiset_distribution(spec: ModelSpec, m_target: int, runs: int,
                             seed: int = 0, *, chunk: int = 200_000,
                             use_kernel: bool | None = None) -> Counter:
    """Empirical distribution of the degree multiset after m_target edges over
    ``runs`` independent small simulations of the production step law.

    The accelerated path gives each run a fixed stride of one uniform block;
    the fallback shares a single stream. The sampling law is identical.
    """
    if m_target < 1 or m_target > 6:
        raise ValueError("mc_multiset_distribution supports 1 <= m_target <= 6")
    if use_kernel is None:
        use_kernel = _kernels.HAVE_NUMBA
    use_kernel = use_kernel and spec.alpha == 1.0 and spec.dgrow_a is None
    counts: Counter = Counter()
    if use_kernel:
        rule = _kernels.RULE_MAX if spec.rule == "max" else _kernels.RULE_MIN
        d = spec.choices
        stride = max(1, (m_target - 1) * (d + 1))
        gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
        done = 0
        while done < runs:
            c = min(chunk, runs - done)
            u = gen.random(c * stride)
            out = np.empty(c, dtype=np.int64)
            _kernels.replicate_small_trees(c, m_target, rule, d, stride, u, out)
            vals, cnts = np.unique(out, return_counts=True)
            for code, n in zip(vals.tolist(), cnts.tolist()):
                counts[_decode_multiset(code)] += n
            done += c
    else:
        from .model import step

        rng = RandomSource([seed])
        for _ in range(runs):
            state = init(spec, m_capacity=m_target)
            while state.m < m_target:
                step(state, spec, rng)
            counts[tuple(sorted(state.degrees.tolist(), reverse=True))] += 1
    return counts


def total_variation(p: dict, q: dict) -> float:
    """TV distance between two distributions given as mappings to weights."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(k, 0)) - float(q.get(k, 0))) for k in keys)


# ---------------------------------------------------------------------------
# command-line interface


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["min", "max", "classic"], default=None)
    p.add_argument("--choices", type=int, default=None, metavar="D")
    p.add_argument("--alpha", type=float, default=None, metavar="A")
    p.add_argument("--dgrow-A", dest="dgrow_a", type=float, default=None, metavar="A")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pachoice",
        description="Preferential-attachment trees with limited choice: "
        "simulation and analysis.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run seeded Monte Carlo trials")
    _add_model_flags(sim)
    sim.add_argument("--edges", type=int, default=None, metavar="M")
    sim.add_argument("--trials", type=int, default=None, metavar="T")
    sim.add_argument("--seed", type=int, default=None, metavar="S")
    sim.add_argument("--checkpoints", default=None,
                     metavar="geometric:R|list:J1,J2,...")
    sim.add_argument("--kmax", dest="k_max", type=int, default=None, metavar="K")
    sim.add_argument("--out", default=None, metavar="PATH")
    sim.add_argument("--workers", type=int, default=None, metavar="N")
    sim.add_argument("--config", default=None, metavar="JSON_PATH")

    cpl = sub.add_parser("couple", help="domination certificate vs two-choice bins")
    cpl.add_argument("--edges", type=int, required=True, metavar="M")
    cpl.add_argument("--seed", type=int, default=0, metavar="S")
    cpl.add_argument("--kmax", dest="k_max", type=int, default=64, metavar="K")

    th = sub.add_parser("theory", help="emit the recurrence/constants table")
    th.add_argument("--m", type=int, default=None, metavar="M")
    th.add_argument("--kmax", dest="k_max", type=int, default=20, metavar="K")

    en = sub.add_parser("enumerate", help="exact small-m outcome distribution")
    en.add_argument("--edges", type=int, required=True, metavar="M")
    _add_model_flags(en)

    sm = sub.add_parser("summarize", help="aggregate a records CSV")
    sm.add_argument("--in", dest="infile", required=True, metavar="PATH")
    sm.add_argument("--out", default=None, metavar="PATH")
    return p


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except OSError as e:
            raise CliError(f"{args.config}: {e}") from e
        except json.JSONDecodeError as e:
            raise CliError(f"{args.config}: invalid JSON: {e}") from e
        if not isinstance(base, dict):
            raise CliError(f"{args.config}: config must be a JSON object")
    cfg = ExperimentConfig.from_dict(base)
    overrides = {
        name: getattr(args, name)
        for name in ("model", "choices", "alpha", "dgrow_a", "edges", "trials",
                     "seed", "checkpoints", "k_max", "out", "workers")
        if getattr(args, name, None) is not None
    }
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        try:
            Path(out).write_text(text)
        except OSError as e:
            raise CliError(f"{out}: {e}") from e
    else:
        sys.stdout.write(text)


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    config.validate()
    records = run_trials(config)
    out = config.out or "records.csv"
    write_records_csv(out, records, config.k_max)
    write_meta(out, config)
    sys.stdout.write(
        json.dumps(
            {"out": out, "records": len(records), "run_id": config.resolved_run_id()}
        )
        + "\n"
    )
    return 0


def _cmd_couple(args: argparse.Namespace) -> int:
    report = coupled_run(args.edges, args.seed, k_max=args.k_max)
    _emit(report.as_dict(), None)
    return 0


def _cmd_theory(args: argparse.Namespace) -> int:
    table = theory.RecurrenceTable.build(k_alpha=args.k_max)
    _emit(table.to_dict(m=args.m), None)
    return 0


def _cmd_enumerate(args: argparse.Namespace) -> int:
    spec = ModelSpec(
        rule=args.model or "min",
        choices=args.choices if args.choices is not None else 2,
        alpha=args.alpha if args.alpha is not None else 1.0,
        dgrow_a=args.dgrow_a,
    )
    try:
        res = enumerate_exact(args.edges, spec)
    except ValueError as e:
        raise CliError(str(e)) from e
    _emit(res.to_dict(), None)
    return 0


def _cmd_summarize(args: argparse.Namespace) -> int:
    records = read_records_csv(args.infile)
    meta = None
    mp = meta_path(args.infile)
    if mp.exists():
        try:
            meta = json.loads(mp.read_text())
        except (OSError, json.JSONDecodeError):
            meta = None
    _emit(summarize(records, meta), args.out)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "couple": _cmd_couple,
    "theory": _cmd_theory,
    "enumerate": _cmd_enumerate,
    "summarize": _cmd_summarize,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (CliError, KMaxExceededError, ValueError, OverflowError) as e:
        sys.stderr.write(
            json.dumps({"error": type(e).__name__, "message": str(e)}) + "\n"
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
