"""Pose error metrics and per-category report aggregation.

Poses are compared in centimeters and reported in millimeters. The
Procrustes alignment is the closed-form similarity fit (rotation with
determinant +1, uniform positive scale, translation) minimizing the sum
of squared joint distances; PA-MPJPE is MPJPE after that alignment.
Multi-run aggregation reports the across-run mean and population sigma.
"""

from dataclasses import dataclass
import json
from pathlib import Path

import numpy as np

MM_PER_CM = 10.0


class AlignmentError(ValueError):
    """Raised when a pose is too degenerate to align (all joints coincide)."""


def _as_coords(pose) -> np.ndarray:
    coords = pose.coords if hasattr(pose, "coords") else pose
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise ValueError(f"expected (J, 3) joint array, got {coords.shape}")
    return coords


def mpjpe(pose, pose_hat) -> float:
    """Mean per-joint position error in millimeters."""
    p, q = _as_coords(pose), _as_coords(pose_hat)
    if p.shape != q.shape:
        raise ValueError(f"pose shapes differ: {p.shape} vs {q.shape}")
    return float(np.linalg.norm(p - q, axis=1).mean() * MM_PER_CM)


def procrustes_align(pose, pose_hat) -> np.ndarray:
    """Best similarity transform of `pose_hat` onto `pose`.

    Returns s * R @ pose_hat + t with det(R) = +1 and s > 0, the argmin of
    the summed squared distances (centroid removal, SVD of the cross
    covariance with reflection correction, closed-form optimal scale).
    """
    target, source = _as_coords(pose), _as_coords(pose_hat)
    if target.shape != source.shape:
        raise ValueError(f"pose shapes differ: {target.shape} vs {source.shape}")
    n = target.shape[0]
    mu_t, mu_s = target.mean(axis=0), source.mean(axis=0)
    tc, sc = target - mu_t, source - mu_s
    var_s = (sc**2).sum() / n
    if var_s < 1e-18 or (tc**2).sum() / n < 1e-18:
        raise AlignmentError("pose is degenerate: joints coincide")
    cov = tc.T @ sc / n
    u, d, vt = np.linalg.svd(cov)
    sign = np.ones(3)
    if np.linalg.det(u @ vt) < 0:
        sign[-1] = -1.0
    rot = u @ np.diag(sign) @ vt
    scale = float((d * sign).sum() / var_s)
    if scale <= 0:
        raise AlignmentError("optimal scale is non-positive")
    t = mu_t - scale * rot @ mu_s
    return scale * source @ rot.T + t


def pa_mpjpe(pose, pose_hat) -> float:
    """MPJPE (mm) after Procrustes alignment of the prediction."""
    return mpjpe(pose, procrustes_align(pose, pose_hat))


@dataclass
class FrameEval:
    category: str
    run: int
    mpjpe_mm: float
    pa_mpjpe_mm: float


@dataclass
class EvalReport:
    """Per-category and overall metrics with across-run mean and sigma."""

    categories: list
    per_category: dict  # category -> metric name -> value
    overall: dict  # metric name -> value
    per_run_overall: list  # one {"mpjpe_mm", "pa_mpjpe_mm"} dict per run
    frame_counts: dict  # category -> frames per run
    pose_frame: str = "device"

    def to_dict(self) -> dict:
        return {
            "categories": list(self.categories),
            "per_category": self.per_category,
            "overall": self.overall,
            "per_run_overall": self.per_run_overall,
            "frame_counts": self.frame_counts,
            "pose_frame": self.pose_frame,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=1)
        )

    @classmethod
    def load(cls, path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def format_mean_sigma(mean: float, sigma: float) -> str:
    return f"{mean:.2f} ({sigma:.2f})"


def combine_run_reports(reports: list) -> EvalReport:
    """Merge single-run EvalReports into one with across-run mean/sigma."""
    if not reports:
        raise ValueError("no reports to combine")
    categories = reports[0].categories
    if any(r.categories != categories for r in reports):
        raise ValueError("runs evaluated different category sets")

    def mean_sigma(values):
        return float(np.mean(values)), float(np.std(values))

    per_category = {}
    for cat in categories:
        stats = {}
        for key in ("mpjpe_mm", "pa_mpjpe_mm"):
            m, s = mean_sigma(
                [r.per_category[cat][f"{key}_mean"] for r in reports]
            )
            stats[f"{key}_mean"] = m
            stats[f"{key}_sigma"] = s
        per_category[cat] = stats
    per_run_overall = [run for r in reports for run in r.per_run_overall]
    overall = {}
    for key in ("mpjpe_mm", "pa_mpjpe_mm"):
        m, s = mean_sigma([run[key] for run in per_run_overall])
        overall[f"{key}_mean"] = m
        overall[f"{key}_sigma"] = s
    return EvalReport(
        categories=list(categories),
        per_category=per_category,
        overall=overall,
        per_run_overall=per_run_overall,
        frame_counts=dict(reports[0].frame_counts),
        pose_frame=reports[0].pose_frame,
    )


def aggregate(frames: list, pose_frame: str = "device") -> EvalReport:
    """Fold per-frame FrameEval rows into an EvalReport.

    Category means weight frames equally within a run; the overall value
    is the frame-weighted mean (so it equals the plain mean over frames).
    Across runs we report the mean of run means and the population sigma.
    """
    if not frames:
        raise ValueError("no frames to aggregate")
    runs = sorted({f.run for f in frames})
    categories = sorted({f.category for f in frames})

    def run_stats(rows):
        return {
            "mpjpe_mm": float(np.mean([r.mpjpe_mm for r in rows])),
            "pa_mpjpe_mm": float(np.mean([r.pa_mpjpe_mm for r in rows])),
        }

    per_run_overall = []
    per_run_category: dict = {c: [] for c in categories}
    frame_counts: dict = {}
    for run in runs:
        rows = [f for f in frames if f.run == run]
        per_run_overall.append(run_stats(rows))
        for cat in categories:
            cat_rows = [f for f in rows if f.category == cat]
            if not cat_rows:
                raise ValueError(f"run {run} has no frames for {cat!r}")
            per_run_category[cat].append(run_stats(cat_rows))
            frame_counts[cat] = len(cat_rows)

    def mean_sigma(values):
        return float(np.mean(values)), float(np.std(values))

    per_category = {}
    for cat in categories:
        stats = {}
        for key in ("mpjpe_mm", "pa_mpjpe_mm"):
            m, s = mean_sigma([r[key] for r in per_run_category[cat]])
            stats[f"{key}_mean"] = m
            stats[f"{key}_sigma"] = s
        per_category[cat] = stats
    overall = {}
    for key in ("mpjpe_mm", "pa_mpjpe_mm"):
        m, s = mean_sigma([r[key] for r in per_run_overall])
        overall[f"{key}_mean"] = m
        overall[f"{key}_sigma"] = s
    return EvalReport(
        categories=categories,
        per_category=per_category,
        overall=overall,
        per_run_overall=per_run_overall,
        frame_counts=frame_counts,
        pose_frame=pose_frame,
    )
