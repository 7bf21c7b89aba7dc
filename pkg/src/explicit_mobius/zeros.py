"""Critical-line zeros: sign-change scan of Z_χ, bisection, argument-principle
count, the good ordinates T_ν and T_*, and the on-disk zero cache.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .characters import DirichletCharacter
from .lfunc import DEFAULT_POLICY, PrecisionPolicy, hardy_z, l_values

log = logging.getLogger(__name__)

LZC_MAGIC = b"LZC1"
CACHE_VERSION = 1
SCAN_STEP = 0.03
BISECT_WIDTH = 1e-9
MAX_BISECTIONS = 60
MAX_RESCANS = 3
ARG_STEP = 0.75        # largest phase jump accepted between contour samples
CONTOUR_BOTTOM = 0.01  # keeps the rectangle off the real axis (trivial zero at 0, pole at 1)


class ZeroCountMismatch(RuntimeError):
    """The scan and the argument principle disagree after all rescans."""


@dataclass(frozen=True)
class ZeroRecord:
    character_label: str
    ordinate_gamma: float
    half_width: float
    assumed_multiplicity: int = 1


@dataclass
class ZeroCache:
    character_label: str
    T_max: float
    records: list[ZeroRecord]
    count_verified: bool = False
    step: float = SCAN_STEP
    policy: dict = field(default_factory=DEFAULT_POLICY.as_dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def ordinates(self) -> np.ndarray:
        return np.array([r.ordinate_gamma for r in self.records], dtype=float)

    def below(self, T: float) -> np.ndarray:
        g = self.ordinates
        return g[g < T]

    def __len__(self):
        return len(self.records)


@dataclass(frozen=True)
class GoodOrdinate:
    T_nu: float
    attained_bound: float
    grid_step: float
    sigma_step: float = 0.25
    T_requested: float = 0.0
    labels: tuple[str, ...] = ()


# -- scanning ---------------------------------------------------------------------

def _bisect(chi, a: np.ndarray, b: np.ndarray, za: np.ndarray, policy) -> tuple[np.ndarray, np.ndarray]:
    a, b, za = a.copy(), b.copy(), za.copy()
    for _ in range(MAX_BISECTIONS):
        if a.size == 0 or np.max(b - a) / 2 <= BISECT_WIDTH:
            break
        m = 0.5 * (a + b)
        zm = hardy_z(m, chi, policy)
        left = np.sign(zm) == np.sign(za)
        a = np.where(left, m, a)
        za = np.where(left, zm, za)
        b = np.where(left, b, m)
    return 0.5 * (a + b), 0.5 * (b - a)


def _sign_changes(chi, T: float, step: float, policy, t0: float = 0.0):
    n = max(2, math.ceil((T - t0) / step) + 1)
    t = np.linspace(t0, T, n)
    z = hardy_z(t, chi, policy)
    sg = np.where(z >= 0, 1, -1)
    idx = np.nonzero(sg[:-1] != sg[1:])[0]
    gam, hw = _bisect(chi, t[idx], t[idx + 1], z[idx], policy)
    warnings = []
    az = np.abs(z)
    mins = np.nonzero((az[1:-1] < az[:-2]) & (az[1:-1] < az[2:]) & (sg[:-2] == sg[2:]) & (sg[1:-1] == sg[:-2]))[0] + 1
    for i in mins:
        if az[i] < 0.1 * min(az[i - 1], az[i + 1]):
            warnings.append(f"suspected multiple zero or close pair near t={t[i]:.4f} (|Z|={az[i]:.2e})")
    return gam, hw, warnings


def scan_zeros(chi: DirichletCharacter, T: float, policy: PrecisionPolicy = DEFAULT_POLICY,
               step: float = SCAN_STEP, verify: bool = True) -> ZeroCache:
    """All sign changes of Z_χ on [0, T], refined to half-width ≤ 1e−9 and, if asked,
    checked against the argument principle (rescanning at step/4 on mismatch)."""
    if T <= 0:
        raise ValueError("T must be positive")
    for attempt in range(MAX_RESCANS + 1):
        gam, hw, warn = _sign_changes(chi, T, step, policy)
        recs = [ZeroRecord(chi.label, float(g), float(h)) for g, h in zip(gam, hw)]
        cache = ZeroCache(chi.label, float(T), recs, False, step, policy.as_dict(), warn)
        for w in warn:
            log.warning("%s: %s", chi.label, w)
        if not verify or verify_count(cache, chi, policy):
            return cache
        log.warning("%s: zero count mismatch at step %g, rescanning", chi.label, step)
        step /= 4
    raise ZeroCountMismatch(f"{chi.label}: scan and argument principle disagree up to T={T}")


# -- argument principle --------------------------------------------------------------

def _edge_phase(f, z0: complex, z1: complex, n0: int) -> float:
    """Continuous change of arg f along the segment z0 → z1, refined adaptively."""
    u = np.linspace(0.0, 1.0, max(n0, 2))
    vals = f(z0 + (z1 - z0) * u)
    for _ in range(30):
        d = np.angle(vals[1:] / vals[:-1])
        bad = np.nonzero(np.abs(d) > ARG_STEP)[0]
        if bad.size == 0:
            return float(np.sum(d))
        mid = 0.5 * (u[bad] + u[bad + 1])
        if np.min(u[bad + 1] - u[bad]) < 1e-13:
            break
        mv = f(z0 + (z1 - z0) * mid)
        u = np.insert(u, bad + 1, mid)
        vals = np.insert(vals, bad + 1, mv)
    raise ArithmeticError("phase refinement did not converge (contour too close to a zero)")


def winding_number(f, sigma0: float, sigma1: float, t0: float, t1: float, spacing: float = 0.05) -> int:
    """Number of zeros of f inside the rectangle, from the total change of argument."""
    corners = [complex(sigma0, t0), complex(sigma1, t0), complex(sigma1, t1), complex(sigma0, t1)]
    total = 0.0
    for k in range(4):
        z0, z1 = corners[k], corners[(k + 1) % 4]
        n = int(abs(z1 - z0) / spacing) + 2
        total += _edge_phase(f, z0, z1, n)
    w = total / (2 * math.pi)
    if abs(w - round(w)) > 0.1:
        raise ArithmeticError(f"winding {w:.3f} is not close to an integer")
    return int(round(w))


def argument_count(chi: DirichletCharacter, T: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> int:
    f = lambda s: l_values(s, chi, policy)  # noqa: E731
    return winding_number(f, -0.5, 1.5, CONTOUR_BOTTOM, T)


def verify_count(cache: ZeroCache, chi: DirichletCharacter, policy: PrecisionPolicy = DEFAULT_POLICY) -> bool:
    """Compare the record count with the winding number of L on [−1/2, 3/2] × [0.01, T_max]."""
    top = cache.T_max
    g = cache.ordinates
    for _ in range(5):
        if g.size == 0 or np.min(np.abs(g - top)) > 1e-3:
            break
        top -= 1e-2  # keep the top edge off a known zero
    expected = int(np.count_nonzero((g > CONTOUR_BOTTOM) & (g < top)))
    n = argument_count(chi, top, policy)
    cache.count_verified = n == expected
    if not cache.count_verified:
        log.warning("%s: argument principle gives %d zeros below %.3f, scan has %d", chi.label, n, top, expected)
    return cache.count_verified


# -- good ordinates ------------------------------------------------------------------

def _close_under_conjugation(chars: Iterable[DirichletCharacter]) -> list[DirichletCharacter]:
    out: list[DirichletCharacter] = []
    for c in chars:
        for d in (c, c.conj()):
            if d not in out:
                out.append(d)
    return out


def grid_minimize(T: float, inv_abs, sigma_step: float, t_step: float,
                  T_hi: float | None = None) -> tuple[float, float]:
    """Minimize over t ∈ [T, T_hi] the max over the σ-grid of inv_abs(σ + it).

    inv_abs maps an array of complex points to 1/|f|; inf entries are skipped.
    Ties go to the smaller t.
    """
    T_hi = 2 * T if T_hi is None else T_hi
    ts = T + t_step * np.arange(int(math.floor((T_hi - T) / t_step + 1e-9)) + 1)
    sig = 0.5 + sigma_step * np.arange(int(math.floor(1.5 / sigma_step + 1e-9)) + 1)
    S, Tt = np.meshgrid(sig, ts, indexing="ij")
    vals = inv_abs((S + 1j * Tt).ravel()).reshape(S.shape)
    worst = vals.max(axis=0)
    worst[~np.isfinite(worst)] = np.inf
    i = int(np.argmin(worst))
    if not np.isfinite(worst[i]):
        raise ArithmeticError("every grid ordinate hits a zero")
    return float(ts[i]), float(worst[i])


def find_t_nu(T: float, characters: Sequence[DirichletCharacter], sigma_grid_step: float = 0.25,
              t_grid_step: float = 0.05, policy: PrecisionPolicy = DEFAULT_POLICY) -> GoodOrdinate:
    """Grid surrogate for the good ordinate T_ν ∈ [T, 2T].

    The set is closed under conjugation first: the contour runs at both ±T_ν and
    L(σ − it, χ) = conj L(σ + it, χ̄).
    """
    chars = _close_under_conjugation(characters)
    if not chars:
        raise ValueError("empty character set")

    def inv_abs(s):
        out = np.zeros(len(s))
        with np.errstate(divide="ignore"):
            for c in chars:
                out = np.maximum(out, 1.0 / np.abs(l_values(s, c, policy)))
        return out

    t, b = grid_minimize(T, inv_abs, sigma_grid_step, t_grid_step)
    return GoodOrdinate(t, b, t_grid_step, sigma_grid_step, T, tuple(c.label for c in chars))


def find_t_star(T_nu: float, products) -> tuple[float, float]:
    """Point of [T_ν, T_ν + 1] farthest from every lattice ordinate ±η (midpoint when none inside)."""
    from .finite_euler import zero_lattice

    etas = set()
    for F in products:
        for z in zero_lattice(F, T_nu + 3.0):
            etas.add(abs(z.eta))
    if not etas:
        return T_nu + 0.5, math.inf
    e = np.array(sorted(etas))
    lo, hi = T_nu, T_nu + 1.0
    inside = e[(e >= lo) & (e <= hi)]
    dist = lambda t: float(np.min(np.abs(e - t)))  # noqa: E731
    if inside.size == 0:
        return lo + 0.5, dist(lo + 0.5)
    cand = [lo, hi] + list(0.5 * (inside[1:] + inside[:-1]))
    cand.sort()
    best = max(cand, key=lambda t: (round(dist(t), 12), -t))
    return float(best), dist(best)


# -- persistence ---------------------------------------------------------------------

def save_cache(cache: ZeroCache, directory) -> Path:
    """Write zeros.lzc and meta.json under directory/<label>/."""
    d = Path(directory) / cache.character_label
    d.mkdir(parents=True, exist_ok=True)
    lab = cache.character_label.encode()
    with open(d / "zeros.lzc", "wb") as fh:
        fh.write(LZC_MAGIC)
        fh.write(struct.pack("<H", len(lab)))
        fh.write(lab)
        fh.write(struct.pack("<dQ", cache.T_max, len(cache.records)))
        for r in cache.records:
            fh.write(struct.pack("<dd", r.ordinate_gamma, r.half_width))
    meta = {
        "version": CACHE_VERSION,
        "label": cache.character_label,
        "T_max": cache.T_max,
        "count": len(cache.records),
        "count_verified": cache.count_verified,
        "step": cache.step,
        "policy": cache.policy,
        "warnings": cache.warnings,
    }
    (d / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return d


def load_cache(directory, label: str) -> ZeroCache:
    d = Path(directory) / label
    data = (d / "zeros.lzc").read_bytes()
    if data[:4] != LZC_MAGIC:
        raise ValueError(f"{d}: not a zero cache")
    (n,) = struct.unpack_from("<H", data, 4)
    lab = data[6 : 6 + n].decode()
    off = 6 + n
    T_max, count = struct.unpack_from("<dQ", data, off)
    pairs = np.frombuffer(data, dtype="<f8", count=2 * count, offset=off + 16).reshape(-1, 2)
    meta_path = d / "meta.json"
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    recs = [ZeroRecord(lab, float(g), float(h)) for g, h in pairs]
    return ZeroCache(
        lab, T_max, recs, bool(meta.get("count_verified", False)),
        meta.get("step", SCAN_STEP), meta.get("policy", {}), meta.get("warnings", []),
    )


def write_csv(cache: ZeroCache, fh) -> None:
    w = csv.writer(fh)
    w.writerow(["label", "gamma", "half_width", "multiplicity"])
    for r in cache.records:
        w.writerow([r.character_label, repr(r.ordinate_gamma), repr(r.half_width), r.assumed_multiplicity])


class ZeroBank:
    """Verified zero caches keyed by character, kept in memory and optionally on disk.

    Caches are reused when they reach the requested height and were built under
    the same precision policy; anything else triggers a fresh scan.
    """

    def __init__(self, directory=None, policy: PrecisionPolicy = DEFAULT_POLICY):
        self.directory = Path(directory) if directory is not None else None
        self.policy = policy
        self._mem: dict[str, ZeroCache] = {}

    def _usable(self, c: ZeroCache | None, T: float) -> bool:
        return c is not None and c.count_verified and c.T_max >= T and c.policy == self.policy.as_dict()

    def get(self, chi: DirichletCharacter, T: float) -> ZeroCache:
        c = self._mem.get(chi.label)
        if not self._usable(c, T) and self.directory is not None:
            try:
                c = load_cache(self.directory, chi.label)
            except (FileNotFoundError, ValueError):
                c = None
        if not self._usable(c, T):
            c = scan_zeros(chi, T, self.policy)
            if self.directory is not None:
                save_cache(c, self.directory)
        self._mem[chi.label] = c
        return c

    def ordinates(self, chi: DirichletCharacter, T: float) -> np.ndarray:
        return self.get(chi, T).below(T)

