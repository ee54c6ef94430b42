"""Bit-stable output files: run.json, series.csv, coeffs.csv and profile snapshots."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .config import effective_config, parse_config
from .flow import RunResult, attach_rescaling
from .geometry import SupportProfile, embed_profile, nodal_radii
from .monitors import CSV_FIELDS, MonitorSettings, monitor_sample, monotonicity_reports


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    return "%.17g" % x


def _clean(obj):
    """JSON-safe copy: dataclasses to dicts, numpy scalars to floats, non-finite to null."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return _clean(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_text(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def series_csv(records) -> str:
    lines = [",".join(CSV_FIELDS)]
    for r in records:
        lines.append(",".join(fmt(getattr(r, k)) for k in CSV_FIELDS))
    return "\n".join(lines) + "\n"


def coeffs_csv(records, coeffs, t_comps=None) -> str:
    """Support coefficients per record; ``t_comp`` is the low part of ``t``."""
    M = len(coeffs[0]) - 1
    t_comps = t_comps or [0.0] * len(records)
    lines = [",".join(["t", "t_comp"] + [f"a{m}" for m in range(M + 1)])]
    for r, c, a in zip(records, t_comps, coeffs):
        lines.append(",".join([fmt(r.t), fmt(c)] + [fmt(v) for v in a]))
    return "\n".join(lines) + "\n"


def read_coeffs_csv(path) -> tuple[list, list, list]:
    ts, comps, rows = [], [], []
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            vals = [float(v) for v in line.strip().split(",")]
            ts.append(vals[0])
            comps.append(vals[1])
            rows.append(np.array(vals[2:]))
    return ts, comps, rows


def profile_csv(profile: SupportProfile) -> str:
    r1, r2 = nodal_radii(profile.coeffs, profile.M, profile.N)
    lines = ["theta,u,r1,r2"]
    for row in zip(profile.theta, profile.values(), r1, r2):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def profile_svg(profile: SupportProfile, samples: int = 361, margin: float = 5.0) -> str:
    """Meridian section of the body, scaled to fit a 100 x 100 view box."""
    theta = np.linspace(0.0, np.pi, samples)
    zr = embed_profile(profile, theta)
    z, rho = zr[:, 0], zr[:, 1]
    # full section: the generating curve and its mirror image
    xs = np.concatenate([rho, -rho[::-1]])
    ys = np.concatenate([z, z[::-1]])
    span = max(xs.max() - xs.min(), ys.max() - ys.min(), 1e-300)
    scale = (100.0 - 2 * margin) / span
    cx, cy = 0.5 * (xs.max() + xs.min()), 0.5 * (ys.max() + ys.min())
    px = 50.0 + scale * (xs - cx)
    py = 50.0 - scale * (ys - cy)
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 100">\n'
        f'  <polygon points="{pts}" fill="none" stroke="black" stroke-width="0.5"/>\n'
        "</svg>\n"
    )


def run_summary(result: RunResult) -> dict:
    cls = result.classification
    applicable = getattr(cls, "applicable_cases", []) or []
    return {
        "config": effective_config(result.config),
        "T_est": result.T_est,
        "remaining_at_stop": result.remaining,
        "p_est": result.p_est,
        "termination_reason": result.termination_reason,
        "low_confidence": result.low_confidence,
        "r_stop": result.extra.get("r_stop"),
        "steps": result.extra.get("steps"),
        "settings": result.settings,
        "classification": cls,
        "monotonicity": monotonicity_reports(result.records, applicable),
        "snapshots": [{"index": i, "t": t} for i, (t, _) in enumerate(result.snapshots)],
    }


def write_outputs(result: RunResult, out_dir) -> Path:
    out = Path(out_dir)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    _write_text(out / "run.json", dumps(run_summary(result)))
    _write_text(out / "series.csv", series_csv(result.records))
    _write_text(out / "coeffs.csv", coeffs_csv(result.records, result.coeffs, result.t_comps))
    for i, (_, prof) in enumerate(result.snapshots):
        _write_text(out / "snapshots" / f"profile_{i}.csv", profile_csv(prof))
        _write_text(out / "snapshots" / f"profile_{i}.svg", profile_svg(prof))
    return out


def rescale_saved_run(run_dir, T_est: float | None = None) -> RunResult:
    """Rebuild the monitor series of a saved run and redo the rescaling columns.

    With the stored ``T_est`` the rewritten series.csv matches the original
    byte for byte.
    """
    run_dir = Path(run_dir)
    info = json.loads((run_dir / "run.json").read_text(encoding="utf-8"))
    cfg = parse_config(json.dumps(info["config"]))
    settings = MonitorSettings(**info["settings"])
    f, phi = cfg.speed(), cfg.profile_phi()
    proto = cfg.initial_profile()
    ts, comps, rows = read_coeffs_csv(run_dir / "coeffs.csv")
    records = [monitor_sample(proto.with_coeffs(a), t, f, phi, settings) for t, a in zip(ts, rows)]
    if T_est is None:
        T_est, remaining = info["T_est"], info["remaining_at_stop"]
    else:
        T_est, remaining = float(T_est), None
    result = RunResult(config=cfg, records=records, coeffs=rows, snapshots=[], T_est=T_est,
                       p_est=info["p_est"], termination_reason=info["termination_reason"],
                       settings=settings, t_comps=comps, remaining=remaining)
    attach_rescaling(result)
    _write_text(run_dir / "series.csv", series_csv(result.records))
    return result
