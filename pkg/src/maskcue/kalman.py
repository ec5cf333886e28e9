"""Constant-velocity Kalman filter over (cx, cy, aspect, height) box states.

Noise levels scale with box height: position std h/20, velocity std h/160,
the usual choice for BYTE-style trackers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .geometry import BBox

STD_WEIGHT_POSITION = 1.0 / 20
STD_WEIGHT_VELOCITY = 1.0 / 160

_NDIM = 4
_F = np.eye(2 * _NDIM)
for _k in range(_NDIM):
    _F[_k, _NDIM + _k] = 1.0
_H = np.eye(_NDIM, 2 * _NDIM)


class CorruptStateError(RuntimeError):
    """A filter state decoded to a non-positive height or aspect ratio."""


@dataclass(frozen=True)
class KFState:
    mean: np.ndarray  # (8,) cx, cy, a, h, vcx, vcy, va, vh
    cov: np.ndarray  # (8, 8)


def _xyah(b: BBox) -> np.ndarray:
    cx, cy = b.center
    return np.array([cx, cy, b.w / b.h, b.h], dtype=np.float64)


def kf_init(b: BBox) -> KFState:
    mean = np.zeros(2 * _NDIM)
    mean[:_NDIM] = _xyah(b)
    h = b.h
    std = np.array(
        [
            2 * STD_WEIGHT_POSITION * h,
            2 * STD_WEIGHT_POSITION * h,
            1e-2,
            2 * STD_WEIGHT_POSITION * h,
            10 * STD_WEIGHT_VELOCITY * h,
            10 * STD_WEIGHT_VELOCITY * h,
            1e-5,
            10 * STD_WEIGHT_VELOCITY * h,
        ]
    )
    return KFState(mean, np.diag(std**2))


def kf_predict(s: KFState) -> KFState:
    h = s.mean[3]
    std = np.array(
        [
            STD_WEIGHT_POSITION * h,
            STD_WEIGHT_POSITION * h,
            1e-2,
            STD_WEIGHT_POSITION * h,
            STD_WEIGHT_VELOCITY * h,
            STD_WEIGHT_VELOCITY * h,
            1e-5,
            STD_WEIGHT_VELOCITY * h,
        ]
    )
    mean = _F @ s.mean
    cov = _F @ s.cov @ _F.T + np.diag(std**2)
    return KFState(mean, cov)


def kf_update(s: KFState, z: BBox) -> KFState:
    h = s.mean[3]
    std = np.array(
        [STD_WEIGHT_POSITION * h, STD_WEIGHT_POSITION * h, 1e-1, STD_WEIGHT_POSITION * h]
    )
    proj_mean = _H @ s.mean
    proj_cov = _H @ s.cov @ _H.T + np.diag(std**2)
    chol = scipy.linalg.cho_factor(proj_cov, lower=True, check_finite=False)
    gain = scipy.linalg.cho_solve(chol, (s.cov @ _H.T).T, check_finite=False).T
    innovation = _xyah(z) - proj_mean
    mean = s.mean + gain @ innovation
    cov = s.cov - gain @ proj_cov @ gain.T
    cov = 0.5 * (cov + cov.T)
    return KFState(mean, cov)


def kf_to_bbox(s: KFState) -> BBox:
    cx, cy, a, h = (float(v) for v in s.mean[:_NDIM])
    if not (h > 0 and a > 0):
        raise CorruptStateError(f"filter state has aspect={a}, height={h}")
    w = a * h
    return BBox(cx - w / 2.0, cy - h / 2.0, w, h)


def kf_set_box(s: KFState, b: BBox) -> KFState:
    """Replace the position block with ``b``; velocities and covariance are kept."""
    mean = s.mean.copy()
    mean[:_NDIM] = _xyah(b)
    return KFState(mean, s.cov)
