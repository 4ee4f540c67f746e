"""Run controller for cosmoweyl.

Orchestrates: resolve config → evaluate → check → write CSV/SVG/JSON → summary.

Exposes:
  - Controller.run(RunRequest), used by the CLI
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from ..core.analysis import (
    ConeField,
    CylinderField,
    SphereGrid,
    hodge_residual,
    isoperimetric_check,
    null_sobolev_check,
    sobolev_trace_check,
)
from ..core.audit import audit_foliation, de_sitter_sample, ellipsoid_sample, sds_ef_sample
from ..core.belrobinson import (
    energy_identity_closure,
    flux_sigma_density,
    redshift_pointwise,
    sds_sample,
    sigma_flux,
)
from ..core.charts import (
    ChartPoint,
    ChartTag,
    SdSGeometry,
    ef_steps,
    penrose_polylines,
    polylines_svg,
    sds_gauge_data,
    sds_metric_fn,
    stereographic_metric,
)
from ..core.decay import DecayProblem, gronwall_bound, measure_exponent, verify_decay
from ..core.errors import ConfigError
from ..core.nullframe import COEFF_COLUMNS, frame_vectors, gauss_residual, structure_coefficients
from ..core.profiles import Config, ProfileLoader
from ..core.tensors import lower_first, riemann
from ..core.weyl import WEYL_COLUMNS, null_decompose, sds_weyl_field, sds_weyl_null, weyl_from_riemann

logger = logging.getLogger(__name__)

COMMANDS = ("table1", "penrose", "audit", "verify", "dump")
VERIFY_TARGETS = ("energy", "decay", "sobolev", "hodge", "weyl")
DUMP_TARGETS = ("coeffs", "weyl", "flux")
FOLIATIONS = ("sds_ef", "de_sitter", "ellipsoid")
TABLE_COLUMNS = ("gauge", "quantity", "measured", "expected", "rel_error")
SUMMARY_NAME = "summary.json"


@dataclass
class RunRequest:
    """Everything needed for one subcommand."""

    command: str
    target: str | None = None
    config: Config = field(default_factory=Config)
    r: float = 1e4
    u_star: float = 0.5
    radii: Sequence[float] = (5.0, 10.0, 20.0, 50.0, 100.0)
    foliation: str = "sds_ef"
    eps: float = 0.06
    phi: float = 0.05
    coords: str = "kruskal"


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("measured", "threshold"):
            if not math.isfinite(d[key]):
                d[key] = None
        return d


@dataclass
class RunResult:
    """What a subcommand returns."""

    command: str
    target: str | None
    checks: list[CheckResult] = field(default_factory=list)
    output_paths: list[Path] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def summary(self, config: Config) -> dict:
        return {
            "command": self.command,
            "target": self.target,
            "config": config.to_dict(),
            "checks": [c.to_dict() for c in self.checks],
            "outputs": [str(p) for p in self.output_paths],
            "warnings": list(self.warnings),
            "error": self.error,
            "ok": self.ok,
        }


class Controller:
    """Dispatches subcommands to the core library and writes their outputs."""

    def __init__(self, profiles_dir: str | Path | None = None) -> None:
        self._profile_loader = ProfileLoader(profiles_dir)

    @property
    def profile_loader(self) -> ProfileLoader:
        return self._profile_loader

    # ------------------------------------------------------------------
    # Public API
    # ------------------------------------------------------------------

    def run(self, request: RunRequest) -> RunResult:
        """Execute one subcommand; summary.json is written even when it fails."""
        config = request.config
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        result = RunResult(request.command, request.target)
        try:
            config.validate()
            self._handler(request)(request, config, out_dir, result)
        except (RuntimeError, KeyError, ValueError) as exc:
            result.error = str(exc)
            raise
        finally:
            self._write_summary(out_dir, config, result)
        for check in result.checks:
            logger.info("%s: %s (%.6e vs %.6e)", check.name, "pass" if check.passed else "FAIL",
                        check.measured, check.threshold)
        return result

    # ------------------------------------------------------------------
    # Subcommands
    # ------------------------------------------------------------------

    def _table1(self, req: RunRequest, cfg: Config, out: Path, res: RunResult) -> None:
        """Asymptotic values of the three SdS gauges on Sigma_r at a given u*."""
        geo = SdSGeometry(cfg.params)
        if not req.u_star > 0.0:
            raise ConfigError("table1 needs u* > 0 (the initial-data patch)")
        r = req.r
        rs = geo.rstar(r)
        us, vs = req.u_star, rs - req.u_star
        k = geo.kappa_c
        s = math.sqrt(cfg.lam / 3.0)
        points = {
            ChartTag.EF: (us, vs),
            ChartTag.KRUSKAL: (math.exp(2.0 * k * us), math.exp(2.0 * k * vs)),
            ChartTag.INITIAL_DATA: (2.0 * k * us, math.exp(2.0 * k * vs) - 1.0),
        }
        expected = {
            ChartTag.EF: (s * s * r * r, 2 * s, 2 * s, s, s, 1.0),
            ChartTag.KRUSKAL: (
                0.25 * s * s / k ** 2 * r * r,
                2 * s * math.exp(2 * k * us), 2 * s * math.exp(2 * k * vs),
                s * math.exp(-2 * k * vs), s * math.exp(-2 * k * us),
                math.exp(2 * k * us),
            ),
            ChartTag.INITIAL_DATA: (
                0.25 * s * s / k ** 2 * math.exp(2 * k * us) * r * r,
                2 * s * math.exp(k * us), 2 * s * math.exp(-k * us),
                s * math.exp(k * us), s * math.exp(-k * us),
                math.exp(k * us),
            ),
        }
        names = ("Omega_sq", "trchi", "trchibar", "omega_hat", "omegabar_hat", "q")
        tol = 10.0 / r
        rows = []
        for gauge, (a, b) in points.items():
            data = sds_gauge_data(geo, ChartPoint(gauge, (a, b, 0.5 * math.pi, 0.0)))
            measured = (data.omega ** 2, data.trchi, data.trchibar, data.omega_hat, data.omegabar_hat, data.q)
            worst = 0.0
            for name, m_val, e_val in zip(names, measured, expected[gauge]):
                rel = abs(m_val - e_val) / abs(e_val)
                worst = max(worst, rel)
                rows.append((gauge.value, name, m_val, e_val, rel))
            res.checks.append(CheckResult(f"table1_{gauge.value}", worst <= tol, worst, tol))
            gauss = abs(0.25 * data.trchi * data.trchibar - s * s) / (s * s)
            redshift = max(abs(2 * data.omega_hat - data.trchi), abs(2 * data.omegabar_hat - data.trchibar))
            res.checks.append(CheckResult(f"gauss_limit_{gauge.value}", gauss <= tol, gauss, tol))
            res.checks.append(CheckResult(f"redshift_limit_{gauge.value}", redshift <= tol, redshift, tol))
        res.output_paths.append(_write_csv(out / "table1.csv", TABLE_COLUMNS, rows))

    def _penrose(self, req: RunRequest, cfg: Config, out: Path, res: RunResult) -> None:
        geo = SdSGeometry(cfg.params)
        lines = penrose_polylines(geo, req.radii, coords=req.coords, n_points=cfg.n_u)
        svg = out / "penrose.svg"
        svg.write_text(polylines_svg(lines), encoding="utf-8")
        rows = [(line.label, i, float(p[0]), float(p[1]))
                for line in lines for i, p in enumerate(line.points)]
        res.output_paths += [svg, _write_csv(out / "penrose.csv", ("label", "index", "x", "y"), rows)]

    def _audit(self, req: RunRequest, cfg: Config, out: Path, res: RunResult) -> None:
        grid = SphereGrid(cfg.n_theta, cfg.n_phi)
        if req.foliation == "sds_ef":
            sample = sds_ef_sample(cfg.params, req.radii, grid)
        elif req.foliation == "de_sitter":
            sample = de_sitter_sample(req.radii, grid)
        elif req.foliation == "ellipsoid":
            sample = ellipsoid_sample(req.eps, req.phi, grid)
        else:
            raise ConfigError(f"unknown foliation: {req.foliation}")
        report = audit_foliation(sample, cfg.eps0, cfg.c0)
        path = out / "audit.json"
        path.write_text(report.to_json() + "\n", encoding="utf-8")
        res.output_paths.append(path)
        for e in report.entries:
            if e.holds is None:
                res.warnings.append(f"{e.name} not measured on {sample.name}")
                continue
            res.checks.append(CheckResult(e.name, e.holds, e.measured, e.threshold, e.relation))

    def _verify_energy(self, req: RunRequest, cfg: Config, out: Path, res: RunResult) -> None:
        """Energy identity on [5, 10] and the pointwise redshift inequality for r >= 5."""
        closure = energy_identity_closure(cfg.params, 5.0, 10.0, tol=1e-3)
        res.output_paths.append(_write_csv(out / "energy.csv",
                                           ("r", "flux", "int_kplus", "int_kminus", "residual"),
                                           closure.rows))
        res.checks.append(CheckResult("energy_closure", closure.holds, closure.residual, closure.tolerance))

        geo = SdSGeometry(cfg.params)
        radii = np.geomspace(5.0, 100.0, cfg.n_u)
        samples = self._map(cfg, lambda r: sds_sample(geo, float(r)), radii)
        eps0 = max(abs(2.0 * c.omega_hat - c.trchi) / c.trchi for c, _ in samples)
        rows = []
        worst = math.inf
        for r, (coeffs, w) in zip(radii, samples):
            check = redshift_pointwise(w, coeffs, float(r), eps0)
            rows.append((float(r), check.lhs, check.rhs))
            if check.rhs > 0.0:
                worst = min(worst, check.lhs / check.rhs)
        res.output_paths.append(_write_csv(out / "redshift.csv", ("r", "phi_kplus", "rhs"), rows))
        res.checks.append(CheckResult("redshift_pointwise", worst >= 1.0, worst, 1.0, f"eps0={eps0:.6e}"))

    def _verify_decay(self, req: RunRequest, cfg: Config, out: Path, res: RunResult) -> None:
        """Sigma_r flux of the exact SdS field against the Gronwall bound."""
        geo = SdSGeometry(cfg.params)
        r0 = 5.0
        coeffs, _ = sds_sample(geo, r0)
        eps0 = abs(2.0 * coeffs.omega_hat - coeffs.trchi) / coeffs.trchi
        kappa1 = 6.0 * (1.0 - eps0) ** 2
        problem = DecayProblem(kappa=lambda r: kappa1, f0=sigma_flux(geo, r0), r0=r0)
        bound = gronwall_bound(problem)
        radii = np.geomspace(2.0 * r0, 200.0 * r0, cfg.n_u)
        flux = self._map(cfg, lambda r: sigma_flux(geo, float(r)), radii)
        res.output_paths.append(_write_csv(out / "decay.csv", ("r", "f", "bound"),
                                           bound.rows(radii, flux)))
        check = verify_decay(list(zip(radii, flux)), kappa1, bound.constant)
        res.checks.append(CheckResult("gronwall_bound", check.holds, check.sup_c, check.bound,
                                      f"kappa1={kappa1:.6e}"))
        slope = measure_exponent(list(zip(radii, flux)))
        res.checks.append(CheckResult("flux_exponent", abs(slope + 6.0) <= 0.05, slope, -6.0))

    def _verify_sobolev(self, req: RunRequest, cfg: Config, out: Path, res: RunResult) -> None:
        grid = SphereGrid(cfg.n_theta, cfg.n_phi)
        reports = [isoperimetric_check(lambda th, ph: np.cos(th), grid)]
        cyl = CylinderField(
            lambda u, th, ph: np.cos(th) * np.exp(-u * u),
            np.linspace(-4.0, 4.0, 2 * (cfg.n_u // 2) + 1),
            grid,
        )
        reports += sobolev_trace_check(cyl).reports(grid.describe())
        cone = ConeField(
            lambda v, th, ph: np.cos(th) / (1.0 + v) ** 2,
            np.linspace(0.0, 4.0, 2 * (cfg.n_u // 2) + 1),
            radius=lambda v: 1.0 + v,
            lapse=lambda v: np.ones_like(v),
            trchi=lambda v: 2.0 / (1.0 + v),
            grid=grid,
        )
        reports += null_sobolev_check(cone).reports(grid.describe())
        rows = [(r.inequality, r.lhs, r.rhs, r.constant_estimate, int(r.converged)) for r in reports]
        res.output_paths.append(_write_csv(out / "sobolev.csv",
                                           ("inequality", "lhs", "rhs", "constant_estimate", "converged"),
                                           rows))
        for r in reports:
            res.checks.append(CheckResult(r.inequality, r.converged and math.isfinite(r.constant_estimate),
                                          r.constant_estimate, math.inf, "refinement-stable"))

    def _verify_hodge(self, req: RunRequest, cfg: Config, out: Path, res: RunResult) -> None:
        geo = SdSGeometry(cfg.params)
        metric_fn = sds_metric_fn(geo, ChartTag.EF)
        weyl_fn = sds_weyl_field(geo, ChartTag.EF)
        tol = 1e-4
        rows = []
        for r in (5.0, 10.0):
            half = 0.5 * geo.rstar(r)
            x = np.array([half, half, 0.5 * math.pi, 0.0])
            hr = hodge_residual(weyl_fn, metric_fn, x, steps=ef_steps(geo, r, cfg.fd_scale))
            # about 4 while truncation dominates; reported only
            halved = hodge_residual(weyl_fn, metric_fn, x, steps=ef_steps(geo, r, 0.5 * cfg.fd_scale))
            ratio = hr.max / halved.max if halved.max > 0.0 else math.inf
            rows.append((r, hr.div_e, hr.curl_e, hr.div_h, hr.curl_h, ratio))
            res.checks.append(CheckResult(f"hodge_r={r:g}", hr.max < tol, hr.max, tol))
        res.output_paths.append(_write_csv(out / "hodge.csv",
                                           ("r", "div_e", "curl_e", "div_h", "curl_h", "halving_ratio"), rows))

    def _verify_weyl(self, req: RunRequest, cfg: Config, out: Path, res: RunResult) -> None:
        """Conformal flatness of de Sitter and rho = -2m/r^3 on SdS by two routes."""
        x = np.array([0.3, 0.2, -0.1, 0.4])

        def stereo(y: np.ndarray) -> np.ndarray:
            return stereographic_metric(float(y[0]), y[1:]).g

        g = stereo(x)
        riem = lower_first(riemann(stereo, x, use_richardson=True), g)
        w = weyl_from_riemann(riem, g, 3.0)
        scale = max(1.0, float(np.abs(riem).max()))
        ds_norm = float(np.abs(w.components).max()) / scale
        res.checks.append(CheckResult("de_sitter_weyl", ds_norm < cfg.tolerance, ds_norm, cfg.tolerance))

        geo = SdSGeometry(cfg.params)
        metric_fn = sds_metric_fn(geo, ChartTag.EF)
        rows = []
        for r in (2.0, 5.0, 10.0, 100.0):
            exact = sds_weyl_null(geo.m, r).rho
            half = 0.5 * geo.rstar(r)
            point = ChartPoint(ChartTag.EF, (half, half, 0.5 * math.pi, 0.0))
            coeffs = structure_coefficients(ChartTag.EF, cfg.params, point, geo)
            rho_gauss = -gauss_residual(coeffs, 0.0, cfg.lam)
            xr = point.as_array()
            gr = metric_fn(xr)
            riem_r = lower_first(riemann(metric_fn, xr, steps=ef_steps(geo, r, cfg.fd_scale),
                                         use_richardson=True), gr)
            rho_fd = null_decompose(weyl_from_riemann(riem_r, gr, cfg.lam), frame_vectors(metric_fn, xr)).rho
            rows.append((r, exact, rho_gauss, rho_fd))
            res.checks.append(CheckResult(f"rho_gauss_r={r:g}", abs(rho_gauss - exact) < 1e-8,
                                          abs(rho_gauss - exact), 1e-8))
            res.checks.append(CheckResult(f"rho_fd_r={r:g}", abs(rho_fd - exact) < 1e-5,
                                          abs(rho_fd - exact), 1e-5))
        res.output_paths.append(_write_csv(out / "weyl.csv", ("r", "rho_exact", "rho_gauss", "rho_fd"), rows))

    def _dump(self, req: RunRequest, cfg: Config, out: Path, res: RunResult) -> None:
        geo = SdSGeometry(cfg.params)
        radii = np.geomspace(min(req.radii), max(req.radii), cfg.n_u)
        samples = self._map(cfg, lambda r: sds_sample(geo, float(r)), radii)
        if req.target == "coeffs":
            header: tuple[str, ...] = COEFF_COLUMNS
            rows = [c.to_row() for c, _ in samples]
        elif req.target == "weyl":
            header = ("r",) + WEYL_COLUMNS
            rows = [(float(r), *w.as_vector()) for r, (_, w) in zip(radii, samples)]
        else:
            header = ("r", "flux_density", "sigma_flux")
            rows = [
                (float(r), flux_sigma_density(w, 1.0, c.lapse).value, sigma_flux(geo, float(r)))
                for r, (c, w) in zip(radii, samples)
            ]
        res.output_paths.append(_write_csv(out / f"{req.target}.csv", header, rows))

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def _handler(self, req: RunRequest) -> Callable[[RunRequest, Config, Path, RunResult], None]:
        if req.command == "verify":
            if req.target not in VERIFY_TARGETS:
                raise ConfigError(f"verify target must be one of {', '.join(VERIFY_TARGETS)}")
            return getattr(self, f"_verify_{req.target}")
        if req.command == "dump":
            if req.target not in DUMP_TARGETS:
                raise ConfigError(f"dump target must be one of {', '.join(DUMP_TARGETS)}")
            return self._dump
        if req.command not in COMMANDS:
            raise ConfigError(f"unknown command: {req.command}")
        return getattr(self, f"_{req.command}")

    @staticmethod
    def _map(cfg: Config, fn: Callable, items: Iterable) -> list:
        """Evaluate fn over items on a thread pool; results in input order."""
        with ThreadPoolExecutor(max_workers=cfg.worker_count()) as pool:
            return list(pool.map(fn, items))

    @staticmethod
    def _write_summary(out: Path, cfg: Config, result: RunResult) -> None:
        path = out / SUMMARY_NAME
        path.write_text(json.dumps(result.summary(cfg), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Header row, ',' separator, floats as %.17e."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _fmt(v: object) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17e}"
