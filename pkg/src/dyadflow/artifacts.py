"""CSV/JSON artifact writers and readers shared by the CLI and harness.

Floats are written with repr() so identical runs produce byte-identical
files; run_meta.json is the only artifact carrying timing data.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .sampler import PosteriorDraws


def write_csv(path: str | Path, header: list[str], rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_draws(out_dir: str | Path, chains: list[PosteriorDraws]) -> None:
    """One CSV per parameter block: chain, iteration, then one column per entry."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    blocks = chains[0].blocks()
    for name, first in blocks.items():
        if first.ndim == 2:
            if name == "beta" and chains[0].beta_names:
                cols = [f"beta[{c}]" for c in chains[0].beta_names]
            elif name == "gamma" and chains[0].gamma_labels:
                cols = [f"gamma[{c}]" for c in chains[0].gamma_labels]
            else:
                cols = [f"{name}[{k}]" for k in range(first.shape[1])]
        else:
            cols = [name]
        rows = []
        for c, chain in enumerate(chains):
            block = chain.blocks()[name]
            for it in range(block.shape[0]):
                vals = block[it] if block.ndim == 2 else [block[it]]
                rows.append([c, it] + [_fmt(v) for v in np.atleast_1d(vals)])
        write_csv(out_dir / f"{name}.csv", ["chain", "iteration"] + cols, rows)


def read_draws(out_dir: str | Path) -> list[PosteriorDraws]:
    """Rebuild per-chain PosteriorDraws from the draw CSVs in a directory."""
    out_dir = Path(out_dir)
    blocks: dict[str, dict] = {}
    names = ("beta", "sigma2_y", "gamma", "eta", "theta",
             "sigma2_eta", "sigma2_theta", "phi")
    labels: dict[str, list[str]] = {}
    for name in names:
        f = out_dir / f"{name}.csv"
        if not f.exists():
            continue
        with f.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            per_chain: dict[int, list] = {}
            for row in reader:
                per_chain.setdefault(int(row[0]), []).append([float(v) for v in row[2:]])
        labels[name] = [h.split("[", 1)[1][:-1] for h in header[2:] if "[" in h]
        blocks[name] = {c: np.array(v) for c, v in per_chain.items()}
    if "beta" not in blocks:
        raise FileNotFoundError(f"no beta.csv draw file in {out_dir}")
    chains = []
    for c in sorted(blocks["beta"]):
        def col(name):
            if name not in blocks:
                return None
            arr = blocks[name][c]
            return arr[:, 0] if name.startswith("sigma2") or name == "phi" else arr
        chains.append(PosteriorDraws(
            beta=col("beta"), sigma2_y=col("sigma2_y"),
            gamma=col("gamma"), eta=col("eta"), theta=col("theta"),
            sigma2_eta=col("sigma2_eta"), sigma2_theta=col("sigma2_theta"),
            phi=col("phi"),
            beta_names=labels.get("beta", []),
            gamma_labels=labels.get("gamma", []),
        ))
    return chains


def write_scores(path: str | Path, scores) -> None:
    write_csv(path, ["model", "crps", "draws_used"],
              [[s.label, _fmt(s.crps), s.draws_used] for s in scores])


def write_summary(path: str | Path, rows: list[dict]) -> None:
    header = ["parameter", "mean", "sd", "q2.5", "q50", "q97.5", "rhat", "ess"]
    write_csv(path, header,
              [[r["parameter"]] + [_fmt(r[k]) for k in header[1:]] for r in rows])


def write_run_meta(path: str | Path, meta: dict) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=_jsonify)
        fh.write("\n")


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_error(out_dir: str | Path, stage: str, exc: Exception) -> Path:
    """Machine-readable failure record for nonzero exits."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "error.json"
    with path.open("w", encoding="utf-8") as fh:
        json.dump({"stage": stage, "type": type(exc).__name__, "message": str(exc)},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
