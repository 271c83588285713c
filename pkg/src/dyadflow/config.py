"""Run configuration: a single versioned JSON document determines a run."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DomainError
from .geometry import CoordinateMode, Dissimilarity, DissimilarityKind
from .sampler import PriorConfig, SamplerConfig
from .weights import BasisFunction, WeightSpec, four_weight_models

SCHEMA_VERSION = 1
WEIGHT_MODEL_NAMES = ("none", "temporal", "spatial", "spatiotemporal")


@dataclass
class RunConfig:
    nodes_csv: Path
    weight_model: str | dict
    grid_csv: Path | None = None
    coordinate_mode: CoordinateMode = CoordinateMode.GEODESIC
    dissimilarity: Dissimilarity = field(default_factory=Dissimilarity)
    priors: PriorConfig = field(default_factory=PriorConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    phi_increment: float = 10.0
    phi_values: list[float] | None = None
    location_tolerance: float = 0.0
    surface_thin: int = 10
    scoring_mode: str = "mixture"
    scoring_thin: int = 1
    output_dir: Path = Path("out")
    raw: dict = field(default_factory=dict, repr=False)

    def weight_spec(self) -> WeightSpec:
        return resolve_weight_spec(self.weight_model)


def resolve_weight_spec(model: str | dict) -> WeightSpec:
    if isinstance(model, str):
        try:
            return four_weight_models()[model]
        except KeyError:
            raise DomainError(
                f"unknown weight model {model!r}; expected one of "
                f"{', '.join(WEIGHT_MODEL_NAMES)} or a custom basis spec") from None
    bases = tuple(BasisFunction(b["lag"], float(b.get("exponent", 1.0)))
                  for b in model["bases"])
    mask = tuple(bool(v) for v in model.get("fixed_mask", [False] * len(bases)))
    return WeightSpec(bases=bases, fixed_mask=mask)


def load_config(path: str | Path) -> RunConfig:
    """Parse a config JSON; raises DomainError with every issue found."""
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DomainError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DomainError(f"config is not valid JSON: {exc}") from None
    issues = validate_document(doc, base_dir=path.parent)
    if issues:
        raise DomainError("invalid config:\n  - " + "\n  - ".join(issues))
    return _build(doc, base_dir=path.parent)


def validate_config_file(path: str | Path) -> list[str]:
    """Dry-run validation: returns the full issue list, never raises."""
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        return [f"config file not found: {path}"]
    except json.JSONDecodeError as exc:
        return [f"config is not valid JSON: {exc}"]
    return validate_document(doc, base_dir=path.parent)


def _positive(issues, doc, label, value) -> None:
    if not isinstance(value, (int, float)) or value <= 0:
        issues.append(f"{label} must be a positive number, got {value!r}")


def validate_document(doc: dict, base_dir: Path = Path(".")) -> list[str]:
    issues: list[str] = []
    if not isinstance(doc, dict):
        return ["config document must be a JSON object"]
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        issues.append(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")

    nodes = doc.get("nodes_csv")
    node_header: list[str] = []
    if not nodes:
        issues.append("nodes_csv is required")
    else:
        nodes_path = _resolve(base_dir, nodes)
        if not nodes_path.exists():
            issues.append(f"nodes_csv does not exist: {nodes_path}")
        else:
            node_header = _csv_header(nodes_path)
            for col in ("id", "lon", "lat", "time"):
                if col not in node_header:
                    issues.append(f"nodes_csv missing required column {col!r}")

    grid = doc.get("grid_csv")
    if grid:
        grid_path = _resolve(base_dir, grid)
        if not grid_path.exists():
            issues.append(f"grid_csv does not exist: {grid_path}")
        elif node_header:
            grid_header = _csv_header(grid_path)
            node_x = [c for c in node_header if c.startswith("x_")]
            grid_x = [c for c in grid_header if c.startswith("x_")]
            extra = [c for c in grid_x if c not in node_x]
            missing = [c for c in node_x if c not in grid_x]
            if extra or missing:
                issues.append(
                    f"grid covariate columns disagree with nodes "
                    f"(missing {missing}, extra {extra})")

    mode = doc.get("coordinate_mode", "geodesic")
    if mode not in ("geodesic", "planar"):
        issues.append(f"coordinate_mode must be 'geodesic' or 'planar', got {mode!r}")

    dis = doc.get("dissimilarity", {"kind": "signed-difference"})
    kind = dis.get("kind") if isinstance(dis, dict) else None
    if kind not in [k.value for k in DissimilarityKind]:
        issues.append(f"dissimilarity.kind invalid: {kind!r}")

    model = doc.get("weight_model", "none")
    if isinstance(model, str):
        if model not in WEIGHT_MODEL_NAMES:
            issues.append(f"weight_model must be one of {WEIGHT_MODEL_NAMES} "
                          f"or a custom spec, got {model!r}")
    elif isinstance(model, dict):
        try:
            resolve_weight_spec(model)
        except (DomainError, KeyError, TypeError) as exc:
            issues.append(f"invalid custom weight_model: {exc}")
    else:
        issues.append("weight_model must be a name or an object")

    priors = doc.get("priors", {})
    if isinstance(priors, dict):
        for key in ("beta_variance",):
            if key in priors:
                _positive(issues, doc, f"priors.{key}", priors[key])
        for key in ("sigma2_y", "sigma2_eta", "sigma2_theta", "phi", "gamma"):
            if key in priors:
                pair = priors[key]
                if (not isinstance(pair, (list, tuple)) or len(pair) != 2
                        or any(not isinstance(v, (int, float)) or v <= 0 for v in pair)):
                    issues.append(f"priors.{key} must be a positive [shape, rate] pair")
    else:
        issues.append("priors must be an object")

    sampler = doc.get("sampler", {})
    if isinstance(sampler, dict):
        it = sampler.get("iterations", 10_000)
        if not isinstance(it, int) or it < 2:
            issues.append("sampler.iterations must be an integer >= 2")
        burn = sampler.get("burn_in")
        if burn is not None and (not isinstance(burn, int) or not 0 <= burn < (it if isinstance(it, int) else 1)):
            issues.append("sampler.burn_in must satisfy 0 <= burn_in < iterations")
        thin = sampler.get("thinning", 10)
        if not isinstance(thin, int) or thin < 1:
            issues.append("sampler.thinning must be an integer >= 1")
        chains = sampler.get("chains", 1)
        if not isinstance(chains, int) or chains < 1:
            issues.append("sampler.chains must be an integer >= 1")
    else:
        issues.append("sampler must be an object")

    phi = doc.get("phi_support", {})
    if isinstance(phi, dict):
        if "values" in phi:
            vals = phi["values"]
            ok = (isinstance(vals, list) and vals
                  and all(isinstance(v, (int, float)) and v >= 0 for v in vals)
                  and all(b > a for a, b in zip(vals, vals[1:])))
            if not ok:
                issues.append("phi_support.values must be a nonempty ascending list of nonnegative numbers")
        else:
            inc = phi.get("increment", 10.0)
            if not isinstance(inc, (int, float)) or inc <= 0:
                issues.append(f"phi_support.increment must be > 0, got {inc!r}")
    else:
        issues.append("phi_support must be an object")

    tol = doc.get("location_tolerance", 0.0)
    if not isinstance(tol, (int, float)) or tol < 0:
        issues.append("location_tolerance must be >= 0")
    return issues


def _build(doc: dict, base_dir: Path) -> RunConfig:
    sampler_doc = dict(doc.get("sampler", {}))
    sampler = SamplerConfig(
        iterations=sampler_doc.get("iterations", 10_000),
        burn_in=sampler_doc.get("burn_in"),
        thinning=sampler_doc.get("thinning", 10),
        seed=sampler_doc.get("seed", 0),
        chains=sampler_doc.get("chains", 1),
        adaptation_window=sampler_doc.get("adaptation_window", 50),
        target_acceptance=sampler_doc.get("target_acceptance", 0.44),
        constraint=sampler_doc.get("constraint", True),
        deterministic_reduction=sampler_doc.get("deterministic_reduction", True),
        spatial_effects=sampler_doc.get("spatial_effects", True),
        node_effects=sampler_doc.get("node_effects", True),
        propagate_adjusted_beta=sampler_doc.get("propagate_adjusted_beta", False),
        initial_proposal_scale=sampler_doc.get("initial_proposal_scale", 0.25),
        store_fitted_means=sampler_doc.get("store_fitted_means", False),
    )
    priors_doc = dict(doc.get("priors", {}))
    priors = PriorConfig(
        beta_variance=priors_doc.get("beta_variance", 1e6),
        sigma2_y_ig=tuple(priors_doc.get("sigma2_y", (0.01, 0.01))),
        sigma2_eta_ig=tuple(priors_doc.get("sigma2_eta", (0.01, 0.01))),
        sigma2_theta_ig=tuple(priors_doc.get("sigma2_theta", (0.01, 0.01))),
        phi_gamma=tuple(priors_doc.get("phi", (400.0, 250.0))),
        gamma_gamma=tuple(priors_doc.get("gamma", (2.0, 2.0))),
    )
    dis_doc = doc.get("dissimilarity", {"kind": "signed-difference"})
    dis = Dissimilarity(
        kind=DissimilarityKind(dis_doc.get("kind", "signed-difference")),
        weights=dis_doc.get("weights"),
    )
    phi_doc = doc.get("phi_support", {})
    surface_doc = doc.get("surface", {})
    scoring_doc = doc.get("scoring", {})
    return RunConfig(
        nodes_csv=_resolve(base_dir, doc["nodes_csv"]),
        grid_csv=_resolve(base_dir, doc["grid_csv"]) if doc.get("grid_csv") else None,
        coordinate_mode=CoordinateMode(doc.get("coordinate_mode", "geodesic")),
        dissimilarity=dis,
        weight_model=doc.get("weight_model", "none"),
        priors=priors,
        sampler=sampler,
        phi_increment=phi_doc.get("increment", 10.0),
        phi_values=phi_doc.get("values"),
        location_tolerance=doc.get("location_tolerance", 0.0),
        surface_thin=surface_doc.get("thin", 10),
        scoring_mode=scoring_doc.get("mode", "mixture"),
        scoring_thin=scoring_doc.get("thin", 1),
        output_dir=_resolve(base_dir, doc.get("output_dir", "out")),
        raw=doc,
    )


def _resolve(base_dir: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base_dir / p


def _csv_header(path: Path) -> list[str]:
    with path.open(newline="", encoding="utf-8") as fh:
        return next(csv.reader(fh), [])
