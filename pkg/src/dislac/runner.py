"""Experiment configuration, orchestration and CSV emission.

A config document (TOML or JSON) names one experiment and may carry one
table of parameter overrides per experiment::

    experiment = "sensing-mc"
    seed = 7
    output_dir = "out/sensing"

    [sensing-mc]
    n_antennas = [2, 4, 8]
    trials = 200

Every run writes its CSV artifacts plus ``manifest.json``; the manifest holds
the fully resolved parameters and seed, which is all a rerun needs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .beamforming import (
    Topology,
    TopologyKind,
    WmmseConfig,
    overhead_model,
    s3_baseline,
    wmmse_centralized,
    wmmse_decentralized,
)
from .channel import hardening_rates
from .geometry import (
    ConstellationSpec,
    GroundTerminal,
    delay_doppler_profile,
    feasibility_mask,
    link_observables,
    sample_constellation,
)
from .scenarios import DownlinkScenario, downlink_instance
from .seeding import MASK64, derive_seed
from .sensing import EstimatorKind, default_scene, run_bench
from .waveform import OfdmConfig, metrics_sweep, required_config

__all__ = [
    "ConfigError",
    "RunnerError",
    "ExperimentSpec",
    "RunManifest",
    "EXPERIMENTS",
    "emit_csv",
    "format_value",
    "load_config",
    "parse_config",
    "resolve_parameters",
    "run_experiment",
    "rerun_from_manifest",
]

MANIFEST_NAME = "manifest.json"


class ConfigError(ValueError):
    """Invalid experiment configuration; ``path`` locates the offending key."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class RunnerError(RuntimeError):
    """An experiment could not be run or its artifacts could not be written."""


# --- CSV ----------------------------------------------------------------------

Schema = Sequence[tuple[str, str]]  # (column, one of "int", "float", "bool", "str")


def format_value(value: Any, kind: str) -> str:
    """Render one cell. Floats use 9 significant digits, trailing zeros kept."""
    if kind == "float":
        v = float(value)
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r}")
        if v == 0.0:
            v = 0.0  # drop the sign of -0.0
        return format(v, "#.9g")
    if kind == "int":
        if isinstance(value, bool) or int(value) != value:
            raise ValueError(f"expected an integer, got {value!r}")
        return str(int(value))
    if kind == "bool":
        if not isinstance(value, (bool, np.bool_)):
            raise ValueError(f"expected a bool, got {value!r}")
        return "true" if value else "false"
    if kind == "str":
        if not isinstance(value, str):
            raise ValueError(f"expected a string, got {value!r}")
        return value
    raise ValueError(f"unknown column type {kind!r}")


def emit_csv(rows: Sequence[dict], schema: Schema, path: str | os.PathLike) -> Path:
    """Write ``rows`` as UTF-8 CSV with LF line ends.

    All rows are validated and rendered before anything touches the disk, and
    the file appears atomically, so a failure never leaves a partial file.
    """
    columns = [c for c, _ in schema]
    if len(set(columns)) != len(columns):
        raise ValueError("duplicate column names in schema")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for i, row in enumerate(rows):
        if set(row) != set(columns):
            missing = sorted(set(columns) - set(row))
            extra = sorted(set(row) - set(columns))
            raise ValueError(f"row {i} does not match schema (missing {missing}, extra {extra})")
        try:
            writer.writerow([format_value(row[c], k) for c, k in schema])
        except ValueError as exc:
            raise ValueError(f"row {i}: {exc}") from None
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# --- experiments ----------------------------------------------------------------


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    defaults: dict
    run: Callable[[dict, int, Path, int], list[Path]]


def _ue(p: dict) -> GroundTerminal:
    return GroundTerminal.from_latlon(p["ue_lat_deg"], p["ue_lon_deg"])


def _run_delay_doppler(p: dict, seed: int, out: Path, workers: int) -> list[Path]:
    ue = _ue(p)
    spec = ConstellationSpec(
        count=p["count"],
        altitude=p["altitude_km"],
        speed=p["speed_km_s"],
        zenith_min=p["zenith_min_deg"],
        zenith_max=p["zenith_max_deg"],
        seed=derive_seed(seed, "delay-doppler", 0),
    )
    sats = sample_constellation(spec, ue)
    profile = delay_doppler_profile(sats, ue, p["fc_hz"])
    mask = feasibility_mask(profile, p["cp_s"], p["scs_hz"], p["doppler_factor"])
    rows = []
    for sat, (dd, fd), (d_ok, f_ok) in zip(sats, profile, mask):
        rows.append(
            {
                "sat_id": sat.id,
                "zenith_deg": link_observables(sat, ue, p["fc_hz"]).zenith_angle,
                "differential_delay_us": dd * 1e6,
                "doppler_hz": fd,
                "delay_ok": bool(d_ok),
                "doppler_ok": bool(f_ok),
            }
        )
    schema = [
        ("sat_id", "int"),
        ("zenith_deg", "float"),
        ("differential_delay_us", "float"),
        ("doppler_hz", "float"),
        ("delay_ok", "bool"),
        ("doppler_ok", "bool"),
    ]
    return [emit_csv(rows, schema, out / "delay_doppler.csv")]


def _run_waveform_sweep(p: dict, seed: int, out: Path, workers: int) -> list[Path]:
    template = OfdmConfig(
        delta_f=p["delta_f_min_hz"],
        n_subcarriers=p["n_subcarriers"],
        n_symbols=p["n_symbols"],
        t_pri=1.0 / p["delta_f_min_hz"],
        fc=p["fc_hz"],
    )
    table = metrics_sweep(
        p["delta_f_min_hz"], p["delta_f_max_hz"], p["levels"], template, c=p["speed_of_light"]
    )
    rows = [
        {
            "level": i,
            "delta_f_hz": df,
            "t_pri_s": 1.0 / df,
            "r_max_km": m.r_max,
            "delta_r_km": m.delta_r,
            "v_max_km_s": m.v_max,
            "delta_v_m_s": m.delta_v,
        }
        for i, (df, m) in enumerate(table)
    ]
    schema = [
        ("level", "int"),
        ("delta_f_hz", "float"),
        ("t_pri_s", "float"),
        ("r_max_km", "float"),
        ("delta_r_km", "float"),
        ("v_max_km_s", "float"),
        ("delta_v_m_s", "float"),
    ]
    return [emit_csv(rows, schema, out / "waveform_sweep.csv")]


def _run_waveform_design(p: dict, seed: int, out: Path, workers: int) -> list[Path]:
    df_max, t_max = required_config(p["r_max_km"], p["v_max_km_s"], p["fc_hz"])
    rows = [
        {
            "r_max_target_km": p["r_max_km"],
            "v_max_target_km_s": p["v_max_km_s"],
            "fc_hz": p["fc_hz"],
            "delta_f_max_hz": df_max,
            "t_pri_max_s": t_max,
        }
    ]
    schema = [
        ("r_max_target_km", "float"),
        ("v_max_target_km_s", "float"),
        ("fc_hz", "float"),
        ("delta_f_max_hz", "float"),
        ("t_pri_max_s", "float"),
    ]
    return [emit_csv(rows, schema, out / "waveform_design.csv")]


_SCHEMES = ("centralized", "ring", "star", "s3")


def _beamform_point(args) -> dict[str, float]:
    """Sum rates of every scheme on one seeded instance."""
    scenario, n_sats, n_users, inst_seed, central_cfg, dec_cfg, schemes = args
    csi, noise, powers = downlink_instance(scenario, n_sats, n_users, inst_seed)
    out = {}
    for scheme in schemes:
        if scheme == "centralized":
            w, _ = wmmse_centralized(csi, noise, powers, central_cfg)
        elif scheme == "ring":
            w, _, _ = wmmse_decentralized(Topology.ring(n_sats), csi, noise, powers, dec_cfg)
        elif scheme == "star":
            w, _, _ = wmmse_decentralized(Topology.star(0), csi, noise, powers, dec_cfg)
        else:
            _, rates, _ = s3_baseline(csi, noise, powers, central_cfg)
            out[scheme] = float(np.sum(rates))
            continue
        out[scheme] = float(np.sum(hardening_rates(w, csi, noise)))
    return out


def _ordered_map(fn, items: list, workers: int) -> list:
    """``map`` that may fan out to processes but always returns in input order."""
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _run_beamform_sweep(p: dict, seed: int, out: Path, workers: int) -> list[Path]:
    scenario = DownlinkScenario(**p["scenario"])
    schemes = list(p["schemes"])
    central_cfg = WmmseConfig(max_iters=p["max_iters"], rel_tol=p["rel_tol"])
    dec_cfg = WmmseConfig(max_iters=p["decentralized_iters"], rel_tol=p["rel_tol"])
    jobs, keys = [], []
    for n_sats in p["n_sats"]:
        for n_users in p["n_users"]:
            for i in range(p["instances"]):
                inst_seed = derive_seed(seed, "beamform-instance", i)
                jobs.append((scenario, n_sats, n_users, inst_seed, central_cfg, dec_cfg, schemes))
                keys.append((n_sats, n_users, i, inst_seed))
    results = _ordered_map(_beamform_point, jobs, workers)

    per_instance, summary = [], []
    for (n_sats, n_users, i, inst_seed), res in zip(keys, results):
        for scheme in schemes:
            per_instance.append(
                {
                    "scheme": scheme,
                    "S": n_sats,
                    "U": n_users,
                    "instance": i,
                    "instance_seed": str(inst_seed),
                    "sum_rate_bps": res[scheme],
                }
            )
    for n_sats in p["n_sats"]:
        for n_users in p["n_users"]:
            for scheme in schemes:
                vals = [
                    res[scheme]
                    for (s, u, _, _), res in zip(keys, results)
                    if s == n_sats and u == n_users
                ]
                summary.append(
                    {"scheme": scheme, "S": n_sats, "U": n_users, "sum_rate_bps": math.fsum(vals) / len(vals)}
                )
    base = [("scheme", "str"), ("S", "int"), ("U", "int")]
    return [
        emit_csv(summary, base + [("sum_rate_bps", "float")], out / "beamform_sweep.csv"),
        emit_csv(
            per_instance,
            base + [("instance", "int"), ("instance_seed", "str"), ("sum_rate_bps", "float")],
            out / "beamform_instances.csv",
        ),
    ]


def _run_overhead_sweep(p: dict, seed: int, out: Path, workers: int) -> list[Path]:
    model_rows = []
    for u in p["n_users"]:
        for s in p["n_sats"]:
            for topo, role in (("ring", "edge"), ("star", "edge"), ("star", "central")):
                model_rows.append(
                    {
                        "topology": topo,
                        "role": role,
                        "S": s,
                        "U": u,
                        "overhead_count": overhead_model(topo, role, s, u),
                    }
                )
    schema = [("topology", "str"), ("role", "str"), ("S", "int"), ("U", "int"), ("overhead_count", "int")]
    paths = [emit_csv(model_rows, schema, out / "overhead_model.csv")]
    if not p["measured"]:
        return paths

    # the measured ledger does not depend on the channel once the iteration count is fixed
    scenario = DownlinkScenario(**p["scenario"])
    cfg = WmmseConfig(max_iters=p["measured_iters"], rel_tol=1e-300)
    measured = []
    for s in p["n_sats"]:
        for u in p["n_users"]:
            csi, noise, powers = downlink_instance(scenario, s, u, derive_seed(seed, "overhead", 0))
            for kind in (TopologyKind.RING, TopologyKind.STAR):
                topo = Topology.ring(s) if kind is TopologyKind.RING else Topology.star(0)
                _, _, ledger = wmmse_decentralized(topo, csi, noise, powers, cfg)
                roles = [("edge", 1)] if kind is TopologyKind.RING else [("edge", 1), ("central", 0)]
                for role, node in roles:
                    measured.append(
                        {
                            "topology": kind.value,
                            "role": role,
                            "S": s,
                            "U": u,
                            "iterations": ledger.iterations,
                            "overhead_count": ledger.node_total(node),
                        }
                    )
    mschema = schema[:4] + [("iterations", "int"), ("overhead_count", "int")]
    paths.append(emit_csv(measured, mschema, out / "overhead_measured.csv"))
    return paths


def _sensing_job(args):
    scene, kinds, trials, seed = args
    return run_bench(scene, kinds, trials, seed)


def _run_sensing_mc(p: dict, seed: int, out: Path, workers: int) -> list[Path]:
    wf = p["waveform"]
    waveform = OfdmConfig(
        delta_f=wf["delta_f_hz"],
        n_subcarriers=wf["n_subcarriers"],
        n_symbols=wf["n_symbols"],
        t_pri=wf["t_pri_s"],
        fc=wf["fc_hz"],
    )
    kinds = [EstimatorKind(k) for k in p["estimators"]]
    base = default_scene(
        n_nodes=p["n_nodes"],
        snr_db=p["snr_db"],
        distance_km=p["distance_km"],
        angles_deg=tuple(p["angles_deg"]),
        target_velocity=tuple(p["target_velocity_km_s"]),
        waveform=waveform,
    )
    if len(base.nodes) < p["n_nodes"]:
        raise ConfigError("fewer node angles than n_nodes", "sensing-mc.angles_deg")
    # one job per antenna count; trials inside a job run in order
    jobs = [(base.with_antennas(n), kinds, p["trials"], seed) for n in p["n_antennas"]]
    results = _ordered_map(_sensing_job, jobs, workers)
    rows = []
    for n, res in zip(p["n_antennas"], results):
        for k in kinds:
            r = res[k]
            rows.append(
                {
                    "estimator": k.value,
                    "n_antennas": n,
                    "trials": r.trials,
                    "rmse_over_delta_r": r.rmse_over_delta_r,
                    "discarded": r.discarded,
                }
            )
    schema = [
        ("estimator", "str"),
        ("n_antennas", "int"),
        ("trials", "int"),
        ("rmse_over_delta_r", "float"),
        ("discarded", "int"),
    ]
    return [emit_csv(rows, schema, out / "sensing_mc.csv")]


_SCENARIO_DEFAULTS = asdict(DownlinkScenario())

EXPERIMENTS: dict[str, Experiment] = {
    e.name: e
    for e in [
        Experiment(
            "delay-doppler",
            "differential delay / Doppler of an overhead constellation with CP and SCS checks",
            {
                "count": 200,
                "altitude_km": 600.0,
                "speed_km_s": 7.5,
                "zenith_min_deg": 0.0,
                "zenith_max_deg": 5.0,
                "fc_hz": 2e9,
                "cp_s": 1.6e-6,
                "scs_hz": 60e3,
                "doppler_factor": 0.1,
                "ue_lat_deg": 0.0,
                "ue_lon_deg": 0.0,
            },
            _run_delay_doppler,
        ),
        Experiment(
            "waveform-sweep",
            "OFDM radar metrics over log-spaced subband spacings (t_pri = 1/delta_f)",
            {
                "delta_f_min_hz": 1e3,
                "delta_f_max_hz": 200e3,
                "levels": 10,
                "fc_hz": 1e9,
                "n_subcarriers": 1024,
                "n_symbols": 1,
                "speed_of_light": 3e8,
            },
            _run_waveform_sweep,
        ),
        Experiment(
            "waveform-design",
            "largest delta_f and t_pri meeting unambiguous range / velocity targets",
            {"r_max_km": 100.0, "v_max_km_s": 7.5, "fc_hz": 1e9},
            _run_waveform_design,
        ),
        Experiment(
            "beamform-sweep",
            "sum rates of centralized, Ring, Star and single-satellite service",
            {
                "n_sats": [2, 4],
                "n_users": [4],
                "instances": 20,
                "schemes": list(_SCHEMES),
                "max_iters": 200,
                "decentralized_iters": 16,
                "rel_tol": 1e-8,
                "scenario": dict(_SCENARIO_DEFAULTS),
            },
            _run_beamform_sweep,
        ),
        Experiment(
            "overhead-sweep",
            "signaling overhead per node: reference model and measured ledger",
            {
                "n_users": [4, 8, 16, 32],
                "n_sats": [4, 8, 16],
                "measured": True,
                "measured_iters": 4,
                "scenario": dict(_SCENARIO_DEFAULTS),
            },
            _run_overhead_sweep,
        ),
        Experiment(
            "sensing-mc",
            "position RMSE / delta_R of single-node, LEF and DFE estimators",
            {
                "n_antennas": [2, 3, 4, 6, 8, 16],
                "n_nodes": 4,
                "trials": 500,
                "estimators": ["single", "lef", "dfe"],
                "snr_db": -10.0,
                "distance_km": 60.0,
                "angles_deg": [270.0, 0.0, 135.0, 200.0],
                "target_velocity_km_s": [2.0, -1.0],
                "waveform": {
                    "delta_f_hz": 1.5e3,
                    "n_subcarriers": 32,
                    "n_symbols": 4,
                    "t_pri_s": 1.5e-6,
                    "fc_hz": 6.67e9,
                },
            },
            _run_sensing_mc,
        ),
    ]
}


# --- parameters -------------------------------------------------------------------


def _coerce(value: Any, default: Any, path: str) -> Any:
    """Check ``value`` against the type of its default and normalise it."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected a boolean, got {value!r}", path)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path)
        if not math.isfinite(value):
            raise ConfigError("must be finite", path)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not value:
            raise ConfigError("expected a nonempty list", path)
        proto = default[0]
        return [_coerce(v, proto, f"{path}[{i}]") for i, v in enumerate(value)]
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError("expected a table", path)
        return _merge(default, value, path)
    raise ConfigError(f"unsupported parameter type {type(default).__name__}", path)


def _merge(defaults: dict, overrides: dict, path: str) -> dict:
    out = {}
    for key in overrides:
        if key not in defaults:
            raise ConfigError(f"unknown parameter (known: {', '.join(sorted(defaults))})", f"{path}.{key}")
    for key, default in defaults.items():
        if key in overrides:
            out[key] = _coerce(overrides[key], default, f"{path}.{key}")
        else:
            out[key] = json.loads(json.dumps(default))  # deep copy
    return out


def _check_ranges(name: str, p: dict) -> None:
    def need(cond: bool, key: str, msg: str):
        if not cond:
            raise ConfigError(msg, f"{name}.{key}")

    if name == "delay-doppler":
        need(p["count"] >= 1, "count", "must be >= 1")
        need(p["altitude_km"] > 0, "altitude_km", "must be positive")
        need(0 <= p["zenith_min_deg"] <= p["zenith_max_deg"] <= 90, "zenith_max_deg", "need 0 <= min <= max <= 90")
        need(p["cp_s"] > 0, "cp_s", "must be positive")
        need(p["scs_hz"] > 0, "scs_hz", "must be positive")
        need(0 < p["doppler_factor"] <= 1, "doppler_factor", "must lie in (0, 1]")
    elif name == "waveform-sweep":
        need(p["levels"] >= 2, "levels", "must be >= 2")
        need(0 < p["delta_f_min_hz"] < p["delta_f_max_hz"], "delta_f_max_hz", "need 0 < min < max")
        need(p["speed_of_light"] > 0, "speed_of_light", "must be positive")
    elif name == "waveform-design":
        for k in ("r_max_km", "v_max_km_s", "fc_hz"):
            need(p[k] > 0, k, "must be positive")
    elif name == "beamform-sweep":
        need(all(s >= 1 for s in p["n_sats"]), "n_sats", "entries must be >= 1")
        need(all(u >= 1 for u in p["n_users"]), "n_users", "entries must be >= 1")
        need(p["instances"] >= 1, "instances", "must be >= 1")
        need(all(s in _SCHEMES for s in p["schemes"]), "schemes", f"entries must be in {_SCHEMES}")
        need(p["max_iters"] >= 1 and p["decentralized_iters"] >= 1, "max_iters", "must be >= 1")
        need(p["rel_tol"] > 0, "rel_tol", "must be positive")
    elif name == "overhead-sweep":
        need(all(u >= 1 for u in p["n_users"]), "n_users", "entries must be >= 1")
        need(all(s >= 2 for s in p["n_sats"]), "n_sats", "a Star hub needs S >= 2")
        need(p["measured_iters"] >= 1, "measured_iters", "must be >= 1")
    elif name == "sensing-mc":
        need(all(n >= 1 for n in p["n_antennas"]), "n_antennas", "entries must be >= 1")
        need(p["n_nodes"] >= 1, "n_nodes", "must be >= 1")
        need(p["trials"] >= 1, "trials", "must be >= 1")
        valid = {k.value for k in EstimatorKind}
        need(all(e in valid for e in p["estimators"]), "estimators", f"entries must be in {sorted(valid)}")
        if "lef" in p["estimators"]:
            need(p["n_nodes"] >= 2, "n_nodes", "LEF needs at least two nodes")


def resolve_parameters(name: str, overrides: dict | None = None) -> dict:
    """Defaults for experiment ``name`` with ``overrides`` applied and checked."""
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; valid: {', '.join(EXPERIMENTS)}", "experiment")
    params = _merge(EXPERIMENTS[name].defaults, overrides or {}, name)
    _check_ranges(name, params)
    return params


# --- specs, manifests, configs ------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    parameters: dict = field(default_factory=dict)
    master_seed: int = 0
    output_dir: Path = Path("out")

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.name!r}; valid: {', '.join(EXPERIMENTS)}", "experiment")
        if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, int):
            raise ConfigError("seed must be an integer", "seed")
        if not 0 <= self.master_seed <= MASK64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
        object.__setattr__(self, "output_dir", Path(self.output_dir))


@dataclass(frozen=True)
class RunManifest:
    experiment: str
    parameters: dict
    seed: int
    artifacts: list[dict]  # {"file": name, "sha256": hex digest}
    duration_s: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        d = json.loads(text)
        try:
            return cls(d["experiment"], d["parameters"], int(d["seed"]), list(d["artifacts"]), float(d["duration_s"]))
        except KeyError as exc:
            raise ConfigError(f"manifest lacks {exc.args[0]!r}", "manifest") from None


def parse_config(text: str, fmt: str) -> dict:
    if fmt == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", "config") from None
    elif fmt == "toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}", "config") from None
    else:
        raise ConfigError(f"unknown config format {fmt!r}", "config")
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a table/object", "config")
    return doc


def load_config(
    path: str | os.PathLike, seed: int | None = None, output_dir: str | os.PathLike | None = None
) -> ExperimentSpec:
    """Read a TOML (``.toml``) or JSON config; ``seed``/``output_dir`` override the file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    doc = parse_config(text, "json" if path.suffix.lower() == ".json" else "toml")
    allowed = {"experiment", "seed", "output_dir"} | set(EXPERIMENTS)
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"unknown top-level key (allowed: {', '.join(sorted(allowed))})", key)
    name = doc.get("experiment")
    if not isinstance(name, str):
        raise ConfigError("missing or non-string experiment name", "experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; valid: {', '.join(EXPERIMENTS)}", "experiment")
    section = doc.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError("expected a table", name)
    params = resolve_parameters(name, section)
    if seed is None:
        seed = doc.get("seed", 0)
    out = output_dir if output_dir is not None else doc.get("output_dir", f"out/{name}")
    if not isinstance(out, (str, os.PathLike)):
        raise ConfigError("expected a path string", "output_dir")
    return ExperimentSpec(name, params, seed, Path(out))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> RunManifest:
    """Run one experiment, write its CSVs and ``manifest.json`` into ``spec.output_dir``.

    ``workers`` only changes how independent sweep points are scheduled; the
    artifacts are byte-identical for any value.
    """
    if workers < 1:
        raise ConfigError("must be >= 1", "workers")
    params = resolve_parameters(spec.name, spec.parameters)
    out = spec.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = tempfile.NamedTemporaryFile(dir=out, delete=True)
        probe.close()
    except OSError as exc:
        raise RunnerError(f"output directory {str(out)!r} is not writable: {exc.strerror}") from None
    t0 = time.perf_counter()
    try:
        paths = EXPERIMENTS[spec.name].run(params, spec.master_seed, out, workers)
    except OSError as exc:
        raise RunnerError(f"writing artifacts failed: {exc}") from None
    duration = time.perf_counter() - t0
    manifest = RunManifest(
        experiment=spec.name,
        parameters=params,
        seed=spec.master_seed,
        artifacts=[{"file": p.name, "sha256": _sha256(p)} for p in paths],
        duration_s=duration,
    )
    (out / MANIFEST_NAME).write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def rerun_from_manifest(
    manifest_path: str | os.PathLike, output_dir: str | os.PathLike, workers: int = 1
) -> RunManifest:
    """Reproduce a run from its manifest alone, writing into ``output_dir``."""
    try:
        text = Path(manifest_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read manifest: {exc.strerror}", str(manifest_path)) from None
    m = RunManifest.from_json(text)
    spec = ExperimentSpec(m.experiment, m.parameters, m.seed, Path(output_dir))
    return run_experiment(spec, workers=workers)
