"""Scenario configuration and end-to-end pipeline orchestration.

A scenario sweeps (seed x node count x interpolation method) cells through
the full chain: deploy -> build links -> synthesize -> baseline -> detect
-> isolate -> invert -> interpolate -> evaluate.  Results land in a fixed
metrics CSV, per-cell reconstruction grids, detection logs, and a JSON
manifest that echoes the configuration.

Config grammar: flat ``section.key = value`` lines, '#' comments, lists
comma-separated.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (
    DEFAULT_NOISE_SIGMA,
    HOURS_PER_SOL,
    free_space_path_loss,
    link_path_points,
    link_rng,
)
from .detect import DetectionConfig, detect_series, onset_index, write_detection_log
from .dust import CdodConversion, DustMedium, concentration_from_attenuation, concentration_from_cdod
from .errprop import UncertaintyBudget, concentration_variance
from .fields import generate_synthetic_field
from .grids import GridSpec, IntensityGrid, read_grid, write_grid
from .interp import InterpConfig, SampleSet, interpolate, uncertainty_weighted_map
from .metrics import METRICS_CSV_COLUMNS, evaluate
from .network import build_links, build_topology, node_density_factor, topology_to_json
from .spectra import absorption_coefficient, absorption_db_per_km, mars_atmosphere, parse_line_catalog, parse_partition_table, PartitionModel

log = logging.getLogger(__name__)

SEASONS = ("storm", "calm", "file")


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict:
    """Parse the flat key-value grammar into a string-to-string mapping."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = line.split("=", 1)
        key = key.strip()
        if "." not in key:
            raise ConfigError(f"line {lineno}: key {key!r} missing section prefix")
        out[key] = value.strip()
    return out


def _get(cfg, key, default=None, cast=str):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    try:
        return cast(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from None


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _str_list(text):
    return [x.strip() for x in text.split(",") if x.strip()]


@dataclass
class Scenario:
    seeds: list
    season: str
    output_dir: str
    node_counts: list
    l_max: float
    area: tuple
    frequency: float
    noise_sigma: float
    path_samples: int
    calibration_sols: int
    season_sols: int
    map_interval: int
    grid_nx: int
    grid_ny: int
    methods: list
    idw_power: float
    weighting_z: float
    detection: DetectionConfig
    detection_max_links: int
    budget: UncertaintyBudget
    dust: DustMedium
    cdod: CdodConversion
    temperature: float
    pressure: float
    catalog_path: str = None
    partition_path: str = None
    field_grid_path: str = None
    workers: int = 1
    raw_config: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, cfg: dict) -> "Scenario":
        season = _get(cfg, "season.name", "storm")
        if season not in SEASONS:
            raise ConfigError(f"season.name must be one of {SEASONS}")
        seeds = _int_list(_get(cfg, "run.seeds", _get(cfg, "run.seed", "0")))
        node_counts = _int_list(_get(cfg, "network.node_counts", "20"))
        if any(n < 2 for n in node_counts):
            raise ConfigError("node counts must be >= 2")
        methods = _str_list(_get(cfg, "interp.methods", "linear"))
        dust = DustMedium(
            mean_radius=_get(cfg, "dust.radius", 4e-6, float),
            eps_real=_get(cfg, "dust.eps_real", 1.55, float),
            eps_imag=_get(cfg, "dust.eps_imag", 6.3, float),
        )
        scenario = cls(
            seeds=seeds,
            season=season,
            output_dir=_get(cfg, "run.output_dir", "mdsd-out"),
            node_counts=node_counts,
            l_max=_get(cfg, "network.l_max", 15.0, float),
            area=(
                _get(cfg, "network.area_width", 40.0, float),
                _get(cfg, "network.area_height", 20.0, float),
            ),
            frequency=_get(cfg, "channel.frequency", 1e12, float),
            noise_sigma=_get(cfg, "channel.noise_sigma", DEFAULT_NOISE_SIGMA, float),
            path_samples=_get(cfg, "channel.path_samples", 16, int),
            calibration_sols=_get(cfg, "channel.calibration_sols", 2, int),
            season_sols=_get(cfg, "channel.season_sols", 10, int),
            map_interval=_get(cfg, "channel.map_interval", 24, int),
            grid_nx=_get(cfg, "field.nx", 100, int),
            grid_ny=_get(cfg, "field.ny", 50, int),
            methods=methods,
            idw_power=_get(cfg, "interp.idw_power", 2.0, float),
            weighting_z=_get(cfg, "interp.z", 1.0, float),
            detection=DetectionConfig(
                rho_threshold=_get(cfg, "detection.rho_threshold", 0.7, float),
                alpha=_get(cfg, "detection.alpha", 1.0, float),
                window=_get(cfg, "detection.window", 24, int),
            ),
            detection_max_links=_get(cfg, "detection.max_links", 10, int),
            budget=UncertaintyBudget(
                sigma_r=_get(cfg, "budget.sigma_r", 0.4e-6, float),
                sigma_eps_real=_get(cfg, "budget.sigma_eps_real", 0.0775, float),
                sigma_eps_imag=_get(cfg, "budget.sigma_eps_imag", 0.315, float),
                sigma_n_rel=_get(cfg, "budget.sigma_n_rel", 0.2, float),
            ),
            dust=dust,
            cdod=CdodConversion(radius=dust.mean_radius),
            temperature=_get(cfg, "atmosphere.temperature", 210.0, float),
            pressure=_get(cfg, "atmosphere.pressure", 610.0, float),
            catalog_path=cfg.get("atmosphere.catalog"),
            partition_path=cfg.get("atmosphere.partition_table"),
            field_grid_path=cfg.get("field.grid"),
            workers=_get(cfg, "run.workers", 1, int),
            raw_config=dict(cfg),
        )
        if season == "file" and not scenario.field_grid_path:
            raise ConfigError("season.name = file requires field.grid")
        for path_key in ("atmosphere.catalog", "atmosphere.partition_table", "field.grid"):
            path = cfg.get(path_key)
            if path and not Path(path).is_file():
                raise ConfigError(f"{path_key} path not readable: {path}")
        bad = [m for m in scenario.methods if m not in ("linear", "nearest", "cubic", "rbf", "idw", "kriging", "weighted")]
        if bad:
            raise ConfigError(f"unknown interpolation methods: {bad}")
        return scenario

    @classmethod
    def from_file(cls, path) -> "Scenario":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_mapping(parse_config(text))


def ingest_cdod_grid(path) -> IntensityGrid:
    """Read an MDSD-GRID v1 file holding CDOD values."""
    return read_grid(path)


def _load_spectroscopy(scenario: Scenario):
    atm = mars_atmosphere(scenario.temperature, scenario.pressure)
    catalog = []
    partition = PartitionModel()
    if scenario.catalog_path:
        raw = Path(scenario.catalog_path).read_text()
        window = (0.5 * scenario.frequency, 1.5 * scenario.frequency)
        catalog = parse_line_catalog(raw, {2, 22}, window)
    if scenario.partition_path:
        partition = parse_partition_table(Path(scenario.partition_path).read_text())
    return atm, catalog, partition


def _concentration_field_series(scenario: Scenario, seed: int, spec: GridSpec, season_hours: int):
    """Ground-truth concentration grids for every season hour."""
    if scenario.season == "file":
        cdod_grid = ingest_cdod_grid(scenario.field_grid_path)
        n_values = concentration_from_cdod(cdod_grid.values, scenario.cdod)
        static = IntensityGrid(cdod_grid.spec, n_values, cdod_grid.valid_mask)
        return [static] * season_hours
    synth = generate_synthetic_field(scenario.season, scenario.area, seed, season_hours)
    series = []
    for t in range(season_hours):
        cdod = synth.rasterize(float(t), spec)
        series.append(IntensityGrid(spec, concentration_from_cdod(cdod.values, scenario.cdod)))
    return series


def _synthesize_matrix(scenario, links, field_series, a_abs_db, master_seed):
    """Per-km attenuation matrix (n_links, T) plus per-link free-space dB."""
    from .dust import attenuation_per_concentration

    points = np.vstack([link_path_points(lk, scenario.path_samples) for lk in links])
    n_links = len(links)
    n_pts = scenario.path_samples
    slope = attenuation_per_concentration(scenario.dust, scenario.frequency)
    values = np.empty((n_links, len(field_series)))
    for t, grid in enumerate(field_series):
        sampled = grid.sample(points).reshape(n_links, n_pts)
        values[:, t] = slope * sampled.mean(axis=1) + a_abs_db
    if scenario.noise_sigma > 0:
        for i in range(n_links):
            rng = link_rng(master_seed, i)
            values[i] += rng.normal(0.0, scenario.noise_sigma, values.shape[1])
    fs = np.array([free_space_path_loss(lk.frequency, lk.length) for lk in links])
    return values, fs


def _baseline_matrix(values, times, clear_mask):
    """Hour-of-sol median over clear samples, shape (n_links, 24)."""
    hours = np.asarray(times) % HOURS_PER_SOL
    out = np.empty((values.shape[0], HOURS_PER_SOL))
    for h in range(HOURS_PER_SOL):
        sel = clear_mask & (hours == h)
        if not sel.any():
            raise ValueError(f"no clear samples for hour {h}")
        out[:, h] = np.median(values[:, sel], axis=1)
    return out


@dataclass
class CellResult:
    rows: list
    grids: list          # (filename, IntensityGrid, comments)
    detection_log: tuple  # (filename, results)
    topology_json: tuple  # (filename, text)
    errors: list


def _run_cell(scenario: Scenario, seed: int, node_count: int):
    """Run every interpolation method for one (seed, node count) cell."""
    season_hours = scenario.season_sols * HOURS_PER_SOL
    cal_hours = scenario.calibration_sols * HOURS_PER_SOL
    if scenario.season == "file":
        probe = ingest_cdod_grid(scenario.field_grid_path)
        spec = probe.spec
        area_origin = (spec.xmin, spec.ymin)
        area = (spec.xmax - spec.xmin, spec.ymax - spec.ymin)
    else:
        area = scenario.area
        area_origin = (0.0, 0.0)
        spec = GridSpec(0.0, area[0], 0.0, area[1], scenario.grid_nx, scenario.grid_ny)

    truth_series = _concentration_field_series(scenario, seed, spec, season_hours)
    zero_grid = IntensityGrid(spec, np.zeros((spec.ny, spec.nx)))
    field_series = [zero_grid] * cal_hours + truth_series

    topo_seed = np.random.SeedSequence([int(seed), int(node_count), 101])
    topo = build_topology(node_count, area, scenario.l_max, scenario.frequency, topo_seed)
    if area_origin != (0.0, 0.0):
        # file-driven grids may not start at the origin; shift the layout
        # into the grid frame and rebuild the links there
        topo.nodes = topo.nodes + np.asarray(area_origin)
        topo.links = build_links(topo.nodes, scenario.l_max, scenario.frequency)
    ndf = node_density_factor(topo)
    if not topo.links:
        return CellResult(
            rows=[],
            grids=[],
            detection_log=(None, []),
            topology_json=(f"topology_seed{seed}_n{node_count}.json", topology_to_json(topo, seed)),
            errors=[f"seed={seed} nodes={node_count}: no links"],
        )

    atm, catalog, partition = _load_spectroscopy(scenario)
    k_f = absorption_coefficient(atm, catalog, scenario.frequency, partition) if catalog else 0.0
    a_abs_db = absorption_db_per_km(k_f)

    master_seed = int(np.random.SeedSequence([int(seed), int(node_count), 202]).generate_state(1)[0])
    values, _fs = _synthesize_matrix(scenario, topo.links, field_series, a_abs_db, master_seed)

    times = np.arange(values.shape[1])
    clear_mask = times < cal_hours
    baselines = _baseline_matrix(values, times, clear_mask)
    baseline_at = baselines[:, times % HOURS_PER_SOL]

    # detection over the season segment (signal-level change is negative
    # under dust); limited to a deterministic subset of links for cost
    season_values = values[:, cal_hours:]
    season_baseline = baseline_at[:, cal_hours:]
    delta = -(season_values - season_baseline)
    n_detect = min(scenario.detection_max_links, len(topo.links))
    det_results = []
    latency = -1
    if n_detect >= 2 and season_values.shape[1] >= scenario.detection.window:
        det_results = detect_series(delta[:n_detect], scenario.detection)
        onset = onset_index(det_results)
        latency = -1 if onset is None else onset

    residual = season_values - season_baseline - a_abs_db
    clamp_count = int((residual < 0).sum())
    isolated = np.maximum(residual, 0.0)

    # per-link map samples: trailing-window mean of isolated attenuation at
    # each mapping time, inverted to concentration
    midpoints = np.array([lk.midpoint() for lk in topo.links])
    map_times = np.arange(scenario.map_interval - 1, season_hours, scenario.map_interval)
    pred_samples = []
    for mt in map_times:
        lo = mt + 1 - scenario.map_interval
        a_dust = isolated[:, lo : mt + 1].mean(axis=1)
        n_hat = concentration_from_attenuation(a_dust, scenario.dust, scenario.frequency)
        variances = np.array(
            [
                concentration_variance(
                    scenario.dust.with_concentration(float(n)), scenario.frequency, scenario.budget
                )
                for n in n_hat
            ]
        )
        pred_samples.append(SampleSet(midpoints, n_hat, variances))
    truth_maps = [truth_series[mt] for mt in map_times]

    rows, grids, errors = [], [], []
    for method in scenario.methods:
        try:
            pred_maps = []
            for samples in pred_samples:
                if method == "weighted":
                    grid = uncertainty_weighted_map(
                        samples, spec, z=scenario.weighting_z, l_max=scenario.l_max
                    )
                else:
                    cfg = InterpConfig(method=method, idw_power=scenario.idw_power)
                    grid = interpolate(samples, spec, cfg)
                pred_maps.append(grid)
            report = evaluate(pred_maps, truth_maps)
        except Exception as exc:
            errors.append(f"seed={seed} nodes={node_count} method={method}: {exc}")
            continue
        rows.append(
            {
                "season": scenario.season,
                "method": method,
                "ndf": f"{ndf:.12g}",
                "seed": seed,
                "mae": f"{report.mae:.12g}",
                "rho": f"{report.rho:.12g}",
                "nbias": f"{report.nbias:.12g}",
                "coverage": f"{report.coverage:.12g}",
                "clamp_count": clamp_count,
                "detect_latency": latency,
            }
        )
        grids.append(
            (
                f"grid_seed{seed}_n{node_count}_{method}.grid",
                pred_maps[-1],
                [f"method={method}", f"seed={seed}", f"nodes={node_count}", f"ndf={ndf:.6g}"],
            )
        )

    det_name = f"detection_seed{seed}_n{node_count}.csv" if det_results else None
    return CellResult(
        rows=rows,
        grids=grids,
        detection_log=(det_name, det_results),
        topology_json=(f"topology_seed{seed}_n{node_count}.json", topology_to_json(topo, seed)),
        errors=errors,
    )


def run_scenario(scenario: Scenario, output_dir=None) -> dict:
    """Execute the full sweep and write all artifacts; returns the manifest.

    Cells run in a thread pool; outputs are ordered deterministically
    before emission, so the metrics CSV is byte-identical across worker
    counts for a fixed seed list.
    """
    t0 = time.time()
    out = Path(output_dir or scenario.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    cells = [(seed, n) for seed in scenario.seeds for n in scenario.node_counts]
    if scenario.workers > 1:
        with ThreadPoolExecutor(max_workers=scenario.workers) as pool:
            results = list(pool.map(lambda c: _run_cell(scenario, *c), cells))
    else:
        results = [_run_cell(scenario, *c) for c in cells]

    rows = [row for res in results for row in res.rows]
    rows.sort(key=lambda r: (r["season"], r["method"], float(r["ndf"]), int(r["seed"])))
    metrics_path = out / "metrics.csv"
    with open(metrics_path, "w", newline="") as fh:
        fh.write(",".join(METRICS_CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in METRICS_CSV_COLUMNS) + "\n")

    errors = []
    for res in results:
        errors.extend(res.errors)
        for name, grid, comments in res.grids:
            write_grid(out / name, grid, comments)
        det_name, det_res = res.detection_log
        if det_name:
            write_detection_log(out / det_name, det_res)
        topo_name, topo_text = res.topology_json
        (out / topo_name).write_text(topo_text)
    for message in errors:
        log.error("%s", message)

    manifest = {
        "version": __version__,
        "config": scenario.raw_config,
        "seeds": scenario.seeds,
        "node_counts": scenario.node_counts,
        "methods": scenario.methods,
        "rows_written": len(rows),
        "errors": errors,
        "wall_time_s": round(time.time() - t0, 3),
        "metrics_csv": metrics_path.name,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest
