"""Configuration and orchestration of the full construction."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .characteristics import solve_u_hat, solve_v_hat
from .components import cramer_RS
from .embedding import EG_from_ab, build_surface, curve_box, export_mesh, fmt
from .errors import PipelineError
from .metric import GeodesicMetric, Rect, gaussian_curvature
from .ode_system import AUTO_MARGIN, STEPS_PER_UNIT, HhatChoice, LevelSystem, choose_hhat, integrate
from .transform import geodesic_map
from .verify import check_claim_ER_GS

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    ghat: str = "1"
    domain: tuple = (-1.5, 1.5, -1.5, 1.5)
    delta: Union[float, str] = "auto"
    s_max: float = 1.0
    grid: tuple = (41, 41)
    out: Optional[str] = "out"
    steps_per_unit: int = STEPS_PER_UNIT
    halving_check: bool = True
    family: list = field(default_factory=list)

    def __post_init__(self):
        self.domain = tuple(float(t) for t in self.domain)
        self.grid = tuple(int(t) for t in self.grid)
        if self.delta != "auto":
            self.delta = float(self.delta)

    def validate(self):
        Rect(*self.domain)
        if len(self.grid) != 2 or min(self.grid) < 3:
            raise ValueError(f"grid must be at least 3x3, got {self.grid}")
        if not self.s_max > 0:
            raise ValueError("s_max must be positive")
        if self.delta != "auto" and self.delta == 0:
            raise ValueError("delta must be nonzero")
        return self

    @classmethod
    def from_toml(cls, path):
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        raw = raw.get("pipeline", raw)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def override(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


@dataclass
class PipelineArtifacts:
    config: PipelineConfig
    metric: GeodesicMetric = None
    hhat: HhatChoice = None
    u_sol: object = None
    v_sol: object = None
    pmap: object = None
    components: object = None
    system: LevelSystem = None
    trajectory: object = None
    a: object = None
    b: object = None
    EG: object = None
    surface: object = None
    report: object = None

    @property
    def delta(self):
        return self.hhat.delta

    @property
    def ghat_text(self):
        return self.config.ghat


class _Stage:
    """Context manager labelling any failure with the stage it happened in."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.debug("stage %s", self.name)

    def __exit__(self, typ, exc, tb):
        if exc is not None and not isinstance(exc, PipelineError):
            raise PipelineError(self.name, exc) from exc
        return False


def build_system(cfg):
    """Everything up to the ODE right side: metric, PDE solutions, chart change, R and S."""
    art = PipelineArtifacts(cfg)
    with _Stage("config"):
        cfg.validate()
    with _Stage("metric"):
        art.metric = GeodesicMetric.from_formula(cfg.ghat, Rect(*cfg.domain))
    with _Stage("hhat"):
        if cfg.delta == "auto":
            art.hhat = choose_hhat(art.metric.Ghat, margin=AUTO_MARGIN)
        else:
            art.hhat = HhatChoice(cfg.delta)
    with _Stage("characteristics"):
        art.u_sol = solve_u_hat()
        art.v_sol = solve_v_hat(art.metric.Ghat, art.hhat.data)
    with _Stage("transform"):
        art.pmap = geodesic_map(art.u_sol, art.v_sol)
    with _Stage("components"):
        art.components = cramer_RS(art.metric.Ghat, art.u_sol, art.v_sol, art.pmap)
        art.system = LevelSystem(art.components)
    return art


def run_pipeline(cfg, write=True):
    """Run every stage; with ``write`` the mesh, report and field grids go to ``cfg.out``.

    Reality violations during integration truncate the curve and are flagged
    in the report; they do not fail the run.
    """
    art = build_system(cfg)
    with _Stage("integrate"):
        art.trajectory = integrate(
            art.system, cfg.s_max, step=1.0 / cfg.steps_per_unit, halving_check=cfg.halving_check
        )
        art.a, art.b = art.trajectory.a_data(), art.trajectory.b_data()
    with _Stage("embedding"):
        art.EG = EG_from_ab(art.a, art.b)
    with _Stage("surface"):
        art.surface = build_surface(art.a, art.b, cfg.grid, curve_box(art.a, art.b))
    with _Stage("verify"):
        art.report = check_claim_ER_GS(art)
    if write:
        with _Stage("write"):
            write_outputs(art, Path(cfg.out))
    return art


def write_outputs(art, out):
    out.mkdir(parents=True, exist_ok=True)
    export_mesh(art.surface, out / "surface.obj", "obj")
    export_mesh(art.surface, out / "surface.csv", "csv")
    (out / "report.json").write_text(art.report.to_json())
    art.report.write_fields(out / "fields")
    tr = art.trajectory
    with (out / "trajectory.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "a", "b", "da", "db"])
        for row in zip(tr.s, tr.a, tr.b, tr.da, tr.db):
            w.writerow([fmt(t) for t in row])


SWEEP_COLUMNS = ("ghat", "delta", "completed", "s_end", "truncated", "on_curve_max", "off_curve_max", "K_min", "K_max", "error")


def sweep(cfg, family=None):
    """One summary row per ``{ghat, delta}`` entry; failures become rows, not exceptions."""
    family = cfg.family if family is None else family
    rows = []
    for entry in family:
        row = dict.fromkeys(SWEEP_COLUMNS, "")
        row["ghat"] = entry["ghat"]
        row["delta"] = entry.get("delta", cfg.delta)
        try:
            sub = replace(cfg, ghat=entry["ghat"], delta=row["delta"], family=[])
            art = run_pipeline(sub, write=False)
            rep = art.report
            K = gaussian_curvature(art.metric).sample()[2]
            row.update(
                delta=art.delta,
                completed=True,
                s_end=art.trajectory.s_end,
                truncated=art.trajectory.truncated,
                on_curve_max=rep.on_curve_max(),
                off_curve_max=rep.off_curve_max(),
                K_min=float(np.min(K)),
                K_max=float(np.max(K)),
            )
        except PipelineError as exc:
            row.update(completed=False, error=str(exc))
        rows.append(row)
    return rows


def write_sweep(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([fmt(r[c]) if isinstance(r[c], float) else r[c] for c in SWEEP_COLUMNS])
