"""Numerical core: linear map, cosine geometry, softmax triplet loss,
analytic gradients, and Adam.

All arithmetic is float64; float32 exists only at the storage boundary.
The map carries no bias: pair vectors are differences of transformed
vectors, so a constant offset could never reach the training objective.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    CountMismatchError,
    DimMismatchError,
    InvalidDimsError,
    UnminedBatchError,
)

NORM_EPS = 1e-12

MAP_MAGIC = b"SMAP"
MAP_VERSION = 1
MAP_HEADER = struct.Struct("<4sHII")  # magic, version, n, m


@dataclass
class LinearMap:
    """The learned transformation: a dense (m, n) float64 matrix, no bias."""

    W: np.ndarray

    def __post_init__(self):
        self.W = np.ascontiguousarray(self.W, dtype=np.float64)
        if self.W.ndim != 2:
            raise DimMismatchError(f"W must be 2-D, got shape {self.W.shape}")

    @property
    def n(self) -> int:
        return self.W.shape[1]

    @property
    def m(self) -> int:
        return self.W.shape[0]


@dataclass
class AdamState:
    step: int
    m1: np.ndarray
    m2: np.ndarray
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def initial(
        cls,
        shape: tuple[int, int],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> "AdamState":
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise InvalidDimsError("betas must lie in [0, 1)")
        if lr <= 0 or eps <= 0:
            raise InvalidDimsError("lr and eps must be > 0")
        return cls(step=0, m1=np.zeros(shape), m2=np.zeros(shape), lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def init_map(n: int, m: int, seed: int) -> LinearMap:
    """Uniform init on [-1/sqrt(n), +1/sqrt(n)], deterministic under seed."""
    if n < 1 or m < 1:
        raise InvalidDimsError(f"dims must be >= 1, got n={n} m={m}")
    bound = 1.0 / math.sqrt(n)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return LinearMap(rng.uniform(-bound, bound, size=(m, n)))


def forward(f: LinearMap, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (f.n,):
        raise DimMismatchError(f"input has shape {x.shape}, map expects ({f.n},)")
    return f.W @ x


def pair_vector(f: LinearMap, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """W @ (x - y): the transformed difference representing the pair (x, y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != (f.n,) or y.shape != (f.n,):
        raise DimMismatchError(f"inputs {x.shape}/{y.shape}, map expects ({f.n},)")
    return f.W @ (x - y)


def cosine_distance_with_flag(u: np.ndarray, v: np.ndarray) -> tuple[float, bool]:
    """Cosine distance in [0, 2]; (1.0, True) when either norm is degenerate.

    The denominator is one sqrt of the squared-norm product, which keeps
    exact parallels at 0.0 and exact antiparallels at 2.0.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu2 = float(np.dot(u, u))
    nv2 = float(np.dot(v, v))
    if nu2 < NORM_EPS**2 or nv2 < NORM_EPS**2:
        return 1.0, True
    d = 1.0 - float(np.dot(u, v)) / math.sqrt(nu2 * nv2)
    return min(2.0, max(0.0, d)), False


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    return cosine_distance_with_flag(u, v)[0]


def triplet_loss(d_ap: float, d_an: float) -> float:
    """Softmax triplet loss e^dAP / (e^dAP + e^dAN), max-subtracted."""
    m = max(d_ap, d_an)
    ea = math.exp(d_ap - m)
    en = math.exp(d_an - m)
    return ea / (ea + en)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def batch_loss_grad(f: LinearMap, d, batch) -> tuple[float, np.ndarray, int]:
    """Mean softmax triplet loss over a mined batch and its exact gradient.

    Entries whose anchor, positive, or negative pair vector has degenerate
    norm contribute zero loss and zero gradient; their count is returned as
    the third element.  Input vectors are treated as constants: the
    gradient flows only into W.

    Distances here are left unclipped so the loss is smooth everywhere;
    they can stray from [0, 2] by one ulp at exact (anti)parallelism.
    """
    if batch.negative_index is None:
        raise UnminedBatchError("mine negatives before computing the loss")
    store = d.store
    if f.n != store.dim:
        raise DimMismatchError(f"map expects n={f.n}, store dim={store.dim}")

    x = store.data
    a = batch.anchor_rows
    p = batch.positive_rows
    delta_a = x[a[:, 0]].astype(np.float64) - x[a[:, 1]].astype(np.float64)
    delta_p = x[p[:, 0]].astype(np.float64) - x[p[:, 1]].astype(np.float64)
    neg = batch.negative_index
    delta_n = delta_a[neg]

    va = delta_a @ f.W.T
    vp = delta_p @ f.W.T
    vn = va[neg]

    na = np.linalg.norm(va, axis=1)
    npv = np.linalg.norm(vp, axis=1)
    nn = na[neg]
    ok = (na >= NORM_EPS) & (npv >= NORM_EPS) & (nn >= NORM_EPS)
    skipped = int(np.sum(~ok))

    sa = np.where(na < NORM_EPS, 1.0, na)
    sp = np.where(npv < NORM_EPS, 1.0, npv)
    sn = np.where(nn < NORM_EPS, 1.0, nn)
    ua = va / sa[:, None]
    up = vp / sp[:, None]
    un = vn / sn[:, None]

    cos_ap = np.sum(ua * up, axis=1)
    cos_an = np.sum(ua * un, axis=1)
    z = (1.0 - cos_ap) - (1.0 - cos_an)
    losses = _sigmoid(z)
    losses[~ok] = 0.0

    b = len(losses)
    loss = float(np.sum(losses)) / b

    s = losses * (1.0 - losses)
    s[~ok] = 0.0

    gu_ap = (cos_ap[:, None] * ua - up) / sa[:, None]
    gv_ap = (cos_ap[:, None] * up - ua) / sp[:, None]
    gu_an = (cos_an[:, None] * ua - un) / sa[:, None]
    gv_an = (cos_an[:, None] * un - ua) / sn[:, None]

    c1 = s[:, None] * (gu_ap - gu_an)
    c2 = s[:, None] * gv_ap
    c3 = -s[:, None] * gv_an
    c1[~ok] = 0.0
    c2[~ok] = 0.0
    c3[~ok] = 0.0

    grad = (c1.T @ delta_a + c2.T @ delta_p + c3.T @ delta_n) / b
    return loss, grad, skipped


def adam_step(f: LinearMap, s: AdamState, grad: np.ndarray) -> tuple[LinearMap, AdamState]:
    """One bias-corrected Adam update; returns fresh copies, mutates nothing."""
    if grad.shape != f.W.shape or s.m1.shape != f.W.shape:
        raise DimMismatchError(
            f"shape mismatch: W {f.W.shape}, grad {grad.shape}, state {s.m1.shape}"
        )
    step = s.step + 1
    m1 = s.beta1 * s.m1 + (1.0 - s.beta1) * grad
    m2 = s.beta2 * s.m2 + (1.0 - s.beta2) * grad * grad
    m_hat = m1 / (1.0 - s.beta1**step)
    v_hat = m2 / (1.0 - s.beta2**step)
    w = f.W - s.lr * m_hat / (np.sqrt(v_hat) + s.eps)
    return LinearMap(w), AdamState(
        step=step, m1=m1, m2=m2, lr=s.lr, beta1=s.beta1, beta2=s.beta2, eps=s.eps
    )


def save_map(f: LinearMap, path: str | Path) -> None:
    """SMAP format: magic, version u16, n u32, m u32, then m*n float64 row-major."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAP_HEADER.pack(MAP_MAGIC, MAP_VERSION, f.n, f.m))
        fh.write(np.ascontiguousarray(f.W, dtype="<f8").tobytes())


def load_map(path: str | Path) -> LinearMap:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < MAP_HEADER.size:
        raise BadMagicError(f"{path}: truncated header")
    magic, version, n, m = MAP_HEADER.unpack_from(raw)
    if magic != MAP_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if version != MAP_VERSION:
        raise BadMagicError(f"{path}: unsupported version {version}")
    payload = raw[MAP_HEADER.size:]
    if len(payload) != m * n * 8:
        raise CountMismatchError(f"{path}: payload {len(payload)} bytes, expected {m * n * 8}")
    return LinearMap(np.frombuffer(payload, dtype="<f8").reshape(m, n).copy())
