"""Command-line interface.

Exit codes: 0 success, 2 input or configuration error, 3 statistically
infeasible request (the Monte-Carlo method cannot be rescaled at this K).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .core import Method, Observations, RankCiResult, validate_observations
from .coverage_sim import SimulationConfig, load_config, run_sweep, run_table
from .errors import InvalidInput, RankGaugeError, ResolutionExhausted
from .plot import interval_svg
from .rankability import estimated_rankability
from .rescaler import DEFAULT_R, MethodSettings, rescale_alpha
from .studentized_range import DEFAULT_B
from .tukey import tukey_rank_cis
from .zhang import ZhangConfig, zhang_simultaneous_cis

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 2, 3


# ---------------------------------------------------------------------------
# input


def read_csv_rows(text: str) -> list[tuple[str, str, str]]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InvalidInput("empty CSV file") from None
    if [h.strip().lower() for h in header] != ["id", "y", "sigma"]:
        raise InvalidInput(f"CSV header must be id,y,sigma (got {','.join(header)})")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != 3:
            raise InvalidInput(f"line {lineno}: expected 3 fields, got {len(rec)}")
        ident, y, s = (c.strip() for c in rec)
        try:
            rows.append((ident, float(y), float(s)))
        except ValueError:
            raise InvalidInput(f"line {lineno}: y and sigma must be numbers") from None
    return rows


def read_json_rows(text: str) -> list[tuple[str, float, float]]:
    try:
        doc = json.loads(text)
        return [(it["id"], float(it["y"]), float(it["sigma"])) for it in doc["items"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise InvalidInput(f"malformed JSON input: {exc}") from None


def load_observations(path: str | Path) -> Observations:
    text = Path(path).read_text(encoding="utf-8-sig")
    rows = read_json_rows(text) if text.lstrip().startswith("{") else read_csv_rows(text)
    return validate_observations(rows)


# ---------------------------------------------------------------------------
# output


def result_dict(res: RankCiResult) -> dict:
    rk = estimated_rankability(res) if res.n >= 2 else None
    return {
        "method": res.method.value,
        "alpha_nominal": res.alpha_nominal,
        "alpha_effective": res.alpha_effective,
        "seed": res.seed,
        "quantile_used": res.quantile_used,
        "beta_used": res.beta_used,
        "items": [
            {
                "id": res.ids[i],
                "y": float(res.y[i]),
                "sigma": float(res.sigma[i]),
                "rank_lower": int(res.lower[i]),
                "rank_upper": int(res.upper[i]),
            }
            for i in range(res.n)
        ],
        "rankability": {
            "estimate": None if rk is None else rk.estimate,
            "ci_lower": None if rk is None else rk.ci_lower,
            "ci_upper": 1,
        },
    }


def result_json(res: RankCiResult) -> str:
    return json.dumps(result_dict(res), indent=2) + "\n"


def result_tsv(res: RankCiResult) -> str:
    d = result_dict(res)
    lines = [
        f"# method\t{d['method']}",
        f"# alpha_nominal\t{d['alpha_nominal']!r}",
        f"# alpha_effective\t{d['alpha_effective']!r}",
        f"# seed\t{d['seed']}",
    ]
    rk = d["rankability"]
    if rk["estimate"] is not None:
        lines.append(f"# rankability\t{rk['estimate']!r}\tci\t[{rk['ci_lower']!r}, 1]")
    lines.append("id\ty\tsigma\tposition\trank_lower\trank_upper")
    for i, it in enumerate(d["items"]):
        lines.append(
            f"{it['id']}\t{it['y']!r}\t{it['sigma']!r}\t{int(res.position[i])}\t{it['rank_lower']}\t{it['rank_upper']}"
        )
    return "\n".join(lines) + "\n"


def _emit(text: str, path: str | None):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def compute_ranks(obs: Observations, method, alpha: float, *, rescale=False, seed=1, mc_samples=DEFAULT_B,
                  zhang_K=10_000, replicates=DEFAULT_R) -> RankCiResult:
    method = Method.parse(method)
    level = alpha
    if rescale and obs.n >= 2:
        settings = MethodSettings(K=zhang_K, B=mc_samples, quantile_seed=seed)
        level = rescale_alpha(obs.n, np.asarray(obs.sigma), alpha, method, replicates, seed, settings=settings).alpha_tilde
    if method is Method.TUKEY:
        return tukey_rank_cis(obs, level, B=mc_samples, seed=seed, alpha_nominal=alpha)
    return zhang_simultaneous_cis(obs, ZhangConfig(level, K=zhang_K, seed=seed), alpha_nominal=alpha)


def cmd_ranks(args) -> int:
    obs = load_observations(args.csv_path)
    res = compute_ranks(
        obs, args.method, args.alpha, rescale=args.rescale, seed=args.seed,
        mc_samples=args.mc_samples, zhang_K=args.zhang_K, replicates=args.replicates,
    )
    _emit(result_json(res) if args.out == "json" else result_tsv(res), args.output)
    if args.plot:
        Path(args.plot).write_text(interval_svg(res), encoding="utf-8")
    return EXIT_OK


def _read_sigma_file(path: str) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8-sig")
    first = text.lstrip().splitlines()[0] if text.strip() else ""
    if first.lower().startswith("id"):
        return np.array([s for _, _, s in read_csv_rows(text)], dtype=float)
    try:
        vals = [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise InvalidInput(f"{path}: expected numbers or an id,y,sigma CSV") from None
    return np.array(vals)


def cmd_rescale(args) -> int:
    if args.sigma_file:
        sigma = _read_sigma_file(args.sigma_file)
        n = sigma.size
        if args.n is not None and args.n != n:
            raise InvalidInput(f"--n {args.n} disagrees with {n} sigma values")
    else:
        if args.n is None:
            raise InvalidInput("give --n with --equal-sigma, or --sigma-file")
        n, sigma = args.n, np.ones(args.n)
    if n < 1 or np.any(sigma <= 0):
        raise InvalidInput("sigma values must be positive")
    settings = MethodSettings(K=args.zhang_K, B=args.mc_samples, quantile_seed=args.seed)
    res = rescale_alpha(n, sigma, args.alpha, args.method, args.replicates, args.seed, settings=settings)
    a = res.achieved
    sys.stdout.write(
        f"method\t{res.method.value}\nn\t{n}\nalpha\t{args.alpha!r}\nalpha_tilde\t{res.alpha_tilde:.6g}\n"
        f"coverage\t{a.p_hat:.6f}\nse\t{a.std_error:.6f}\nreplicates\t{a.R}\nseed\t{a.seed}\n"
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg: SimulationConfig = load_config(args.config_path)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config_path).stem
    if cfg.cells:
        report = run_table(cfg.cells)
        (out / f"{stem}.tsv").write_text(report.to_tsv(), encoding="utf-8")
        (out / f"{stem}.json").write_text(report.to_json(), encoding="utf-8")
        sys.stdout.write(report.to_tsv())
    for sweep in cfg.sweeps:
        rows = run_sweep(sweep)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "coverage", "se", "level"])
        for r in rows:
            w.writerow([f"{r['epsilon']:.6g}", f"{r['coverage']:.6f}", f"{r['se']:.6f}", f"{r['level']:.6g}"])
        (out / f"{stem}_{sweep.name}.csv").write_text(buf.getvalue(), encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------


def _unit_alpha(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rankgauge", description="Simultaneous confidence intervals for ranks.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("ranks", help="rank intervals for a CSV of id,y,sigma")
    r.add_argument("csv_path")
    r.add_argument("--method", choices=[m.value for m in Method], default="tukey")
    r.add_argument("--alpha", type=_unit_alpha, default=0.1)
    r.add_argument("--rescale", action="store_true", help="rescale alpha at the worst-case configuration")
    r.add_argument("--seed", type=int, default=1)
    r.add_argument("--mc-samples", type=int, default=DEFAULT_B, help="draws for the Tukey critical value")
    r.add_argument("--zhang-K", type=int, default=10_000, help="simulated samples for the Monte-Carlo method")
    r.add_argument("--replicates", type=int, default=DEFAULT_R, help="replicates for rescaling")
    r.add_argument("--out", choices=["json", "tsv"], default="json")
    r.add_argument("--output", help="write the table here instead of stdout")
    r.add_argument("--plot", help="write an SVG interval chart to this path")
    r.set_defaults(func=cmd_ranks)

    s = sub.add_parser("rescale", help="rescaled alpha at the worst-case configuration")
    s.add_argument("--n", type=int)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--sigma-file")
    g.add_argument("--equal-sigma", action="store_true")
    s.add_argument("--alpha", type=_unit_alpha, default=0.1)
    s.add_argument("--method", choices=[m.value for m in Method], default="tukey")
    s.add_argument("--replicates", type=int, default=DEFAULT_R)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--mc-samples", type=int, default=DEFAULT_B)
    s.add_argument("--zhang-K", type=int, default=10_000)
    s.set_defaults(func=cmd_rescale)

    m = sub.add_parser("simulate", help="run a simulation config (tables and sweeps)")
    m.add_argument("config_path")
    m.add_argument("--out-dir", default="results")
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResolutionExhausted as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except (RankGaugeError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
