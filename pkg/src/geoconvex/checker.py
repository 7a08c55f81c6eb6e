"""Core sampled convexity predicates with deterministic refinement.

Every check scans seeded samples, measures violations as lhs - rhs against
the threshold tol_abs + tol_rel * max(1, |rhs|), and locally refines the
best near-violation by coordinate-wise golden-section ascent.  Sample i is
a pure function of (seed, i), and reductions (max violation, ties broken
by least sample position; earliest domain error wins) are associative and
order-independent, so any worker count produces the identical Report.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .algebra import (
    DomainSet,
    Instance,
    ProductSet,
    member_mask_batch,
    outside_margin_batch,
    sample_members,
    sample_product_members,
)
from .errors import EvalDomainError, InverseSearchFailedError
from .exprlang import Bifunction, EndoMap
from .manifold import (
    Manifold,
    ManifoldKind,
    Point,
    antipodal_mask,
    distance_batch,
    geodesic_batch,
    valid_mask,
)
from .reports import CheckConfig, Report, Verdict, Witness

__all__ = [
    "CheckConfig",
    "Report",
    "Verdict",
    "Witness",
    "check_phiE_convex_interval",
    "check_slope_inequality",
    "check_geodesic_E_convex_set",
    "check_geodesic_phiE_convex_fn",
    "check_geodesic_phiE_convex_set",
    "search_counterexample",
    "epigraph_membership",
    "EpigraphMembership",
]

# refinement triggers when the best gap is within this factor of tolerance
NEAR_VIOLATION_FACTOR = 10.0
# golden-section probes per coordinate line search; 0.618^40 of the interval
# is ~4.5e-9, fine enough to pin witnesses and preimages at tolerance scale
GOLDEN_PROBES = 40
# strict mode demands rhs - lhs > tol; folded into rhs as a 2*tol shift
STRICT_MARGIN_FACTOR = 2.0
# strict lanes need separated images: the margin of a strictly convex
# function shrinks quadratically with the image gap and would otherwise
# fall under tolerance for arbitrarily close sampled pairs
STRICT_SEP_FRACTION = 0.01
# chunk cap keeps per-chunk scratch matrices modest
MAX_CHUNK = 1 << 16
# accepted preimage distance for epigraph membership
INVERSE_TOL = 1e-6

_BIG = np.iinfo(np.int64).max


# ---------------------------------------------------------------------------
# generic chunked scan

@dataclass
class _ChunkScan:
    i0: int
    i1: int
    err_flat: int  # _BIG when clean
    err_note: str | None
    # candidates: list of (violation, flat, payload), best first
    cands: list
    max_viol: float  # max violation among counted lanes, -inf if none
    violated: bool
    extra: dict


def _chunk_ranges(n: int, workers: int):
    size = min(MAX_CHUNK, max(1, math.ceil(n / workers)))
    return [(i, min(i + size, n)) for i in range(0, n, size)]


def _run_chunks(n: int, cfg: CheckConfig, chunk_fn) -> list[_ChunkScan]:
    ranges = _chunk_ranges(n, cfg.workers)
    if cfg.workers == 1 or len(ranges) == 1:
        return [chunk_fn(i0, i1) for i0, i1 in ranges]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda r: chunk_fn(*r), ranges))


def _merge_chunks(chunks: list[_ChunkScan], lanes_per_pair: int, top_k: int):
    err_flat = min(c.err_flat for c in chunks)
    err_note = None
    cands = []
    max_viol = -np.inf
    violated = False
    extras = [c.extra for c in chunks]
    for c in chunks:
        if c.i0 * lanes_per_pair > err_flat:
            continue  # entirely after the first domain error
        if c.err_flat == err_flat and c.err_note is not None:
            err_note = c.err_note
        cands.extend(c.cands)
        max_viol = max(max_viol, c.max_viol)
        violated = violated or c.violated
    cands.sort(key=lambda c: (-c[0], c[1]))
    return err_flat, err_note, cands[:top_k], max_viol, violated, extras


def _select_candidates(viol: np.ndarray, flats: np.ndarray, counted: np.ndarray, k: int):
    """Top-k (violation, flat, unravel-index) among counted lanes."""
    masked = np.where(counted, viol, -np.inf)
    flat_view = masked.ravel()
    order_n = min(k, flat_view.size)
    if order_n == 0:
        return []
    if k == 1:
        pos = int(np.argmax(flat_view))
        if not np.isfinite(flat_view[pos]):
            return []
        return [(float(flat_view[pos]), int(flats.ravel()[pos]), pos)]
    idx = np.argsort(-flat_view, kind="stable")[:order_n]
    out = []
    for pos in idx:
        if np.isfinite(flat_view[pos]):
            out.append((float(flat_view[pos]), int(flats.ravel()[pos]), int(pos)))
    return out


def _golden_refine(objective, z0, intervals, steps: int):
    """Round-robin coordinate ascent; each step runs one golden-section line
    search over the coordinate's full admissible interval.  The best point
    ever evaluated is kept, so the result never falls below the start."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    best_z = list(z0)
    best_v = objective(best_z)
    nv = len(z0)
    for it in range(steps):
        k = it % nv
        lo, hi = intervals[k]
        if not hi > lo:
            continue
        base = list(best_z)

        def f(x):
            nonlocal best_z, best_v
            trial = list(base)
            trial[k] = x
            v = objective(trial)
            if v > best_v:
                best_v = v
                best_z = trial
            return v

        a, b = lo, hi
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc, fd = f(c), f(d)
        for _ in range(GOLDEN_PROBES):
            if fc < fd:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = f(d)
            else:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = f(c)
    return best_z, best_v


def _clean_images(m: Manifold, W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Validate E-outputs as manifold points; sphere rows within the snap
    tolerance are renormalized."""
    ok = valid_mask(m, W)
    if m.kind is ManifoldKind.SPHERE:
        W = W.copy()
        r = np.linalg.norm(W[ok], axis=1, keepdims=True)
        W[ok] = W[ok] / r
    return W, ok


def _finite(*arrays) -> np.ndarray:
    out = np.isfinite(arrays[0])
    for a in arrays[1:]:
        out &= np.isfinite(a)
    return out


def _scalar_image(inst: Instance, coords):
    """E-image of one point as clean manifold coordinates, or None."""
    try:
        w = np.asarray(inst.E(coords), dtype=np.float64)
    except EvalDomainError:
        return None
    W, ok = _clean_images(inst.manifold, w[None, :])
    return W[0] if ok[0] else None


def _pair_error_reason(p: int, pair_bad, e_bad, anti) -> str:
    if pair_bad[p]:
        return "rejection sampling exhausted for a domain point"
    if e_bad[p]:
        return "E produced an invalid manifold point"
    if anti[p]:
        return "antipodal E-images: geodesic not unique"
    return "h or phi non-finite at an E-image"


# ---------------------------------------------------------------------------
# convexity of h along curves between E-images

@dataclass
class _ConvexityScan:
    inst: Instance
    cfg: CheckConfig
    strict: bool = False

    def lanes_per_pair(self) -> int:
        return self.cfg.t_grid + 1

    def t_values(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.cfg.t_grid)

    def chunk(self, i0: int, i1: int) -> _ChunkScan:
        cfg = self.cfg
        inst = self.inst
        m = inst.manifold
        n = i1 - i0
        G = cfg.t_grid
        L = G + 1
        local = np.arange(n, dtype=np.int64)
        gidx = local + i0
        bases = rng.base_array(cfg.seed, np.arange(i0, i1, dtype=np.uint64))
        U1, ok1 = sample_members(inst.domain, bases, region=0, on_fail="mask")
        U2, ok2 = sample_members(inst.domain, bases, region=1, on_fail="mask")
        pair_bad = ~(ok1 & ok2)
        W1 = inst.E.eval_batch(U1)
        W2 = inst.E.eval_batch(U2)
        W1, okw1 = _clean_images(m, W1)
        W2, okw2 = _clean_images(m, W2)
        e_bad = ~pair_bad & ~(okw1 & okw2)
        anti = np.zeros(n, dtype=bool)
        if m.kind is ManifoldKind.SPHERE:
            anti = ~pair_bad & ~e_bad & antipodal_mask(W1, W2)
        h1 = inst.h.eval_batch(W1)
        h2 = inst.h.eval_batch(W2)
        p12 = inst.phi.eval_batch(h1, h2)
        val_bad = ~pair_bad & ~e_bad & ~anti & ~_finite(h1, h2, p12)
        pair_err = pair_bad | e_bad | anti | val_bad
        err_flat = _BIG
        err_note = None
        if np.any(pair_err):
            p = int(np.argmax(pair_err))
            err_flat = int(gidx[p]) * L
            err_note = f"{_pair_error_reason(p, pair_bad, e_bad, anti)} (pair {int(gidx[p])})"

        ts = self.t_values()
        viol = np.empty((n, G))
        thr = np.empty((n, G))
        lane_err = np.zeros((n, G), dtype=bool)
        strict_lane = np.zeros((n, G), dtype=bool)
        if self.strict:
            with np.errstate(all="ignore"):
                sep = distance_batch(m, W1, W2)
            strict_sep = STRICT_SEP_FRACTION * inst.domain.scale()
        with np.errstate(all="ignore"):
            for j, t in enumerate(ts):
                gp = geodesic_batch(m, W1, W2, float(t))
                lhs = inst.h.eval_batch(gp)
                rhs = h2 + t * p12
                v = lhs - rhs
                tau = cfg.tol_abs + cfg.tol_rel * np.maximum(1.0, np.abs(rhs))
                if self.strict and 0 < j < G - 1:
                    elig = sep > strict_sep
                    v = np.where(elig, v + STRICT_MARGIN_FACTOR * tau, v)
                    strict_lane[:, j] = elig
                viol[:, j] = v
                thr[:, j] = tau
                lane_err[:, j] = ~pair_err & ~np.isfinite(lhs)
        flats = gidx[:, None] * L + 1 + np.arange(G, dtype=np.int64)[None, :]
        if np.any(lane_err):
            le_flats = np.where(lane_err, flats, _BIG)
            le_min = int(le_flats.min())
            if le_min < err_flat:
                err_flat = le_min
                pos = int(np.argmin(le_flats.ravel()))
                pi, _ = divmod(pos, G)
                err_note = (
                    f"curve point left h's evaluable domain (pair {int(gidx[pi])})"
                )
        counted = (~pair_err[:, None]) & (~lane_err) & np.isfinite(viol) & (flats < err_flat)
        cands_raw = _select_candidates(viol, flats, counted, k=8)
        cands = []
        for v, flat, pos in cands_raw:
            pi, j = divmod(pos, G)
            payload = {
                "u1": tuple(U1[pi]),
                "u2": tuple(U2[pi]),
                "t": float(ts[j]),
                "strict_lane": bool(strict_lane[pi, j]),
            }
            cands.append((v, flat, payload))
        any_counted = bool(np.any(counted))
        max_viol = float(np.max(np.where(counted, viol, -np.inf))) if any_counted else -np.inf
        violated = bool(np.any(counted & (viol > thr)))
        return _ChunkScan(i0, i1, err_flat, err_note, cands, max_viol, violated, {})

    def objective(self, z) -> float:
        """Scalar twin of the chunk computation for refinement; returns -inf
        off the admissible region or on evaluation failures."""
        inst = self.inst
        cfg = self.cfg
        m = inst.manifold
        d = m.ambient_dim
        u1 = np.asarray(z[:d], dtype=np.float64)
        u2 = np.asarray(z[d : 2 * d], dtype=np.float64)
        t = float(z[2 * d])
        if m.kind is ManifoldKind.SPHERE:
            n1, n2 = np.linalg.norm(u1), np.linalg.norm(u2)
            if n1 < 1e-12 or n2 < 1e-12:
                return -np.inf
            u1, u2 = u1 / n1, u2 / n2
        if not (
            member_mask_batch(inst.domain, u1[None, :])[0]
            and member_mask_batch(inst.domain, u2[None, :])[0]
        ):
            return -np.inf
        w1 = _scalar_image(inst, tuple(u1))
        w2 = _scalar_image(inst, tuple(u2))
        if w1 is None or w2 is None:
            return -np.inf
        if m.kind is ManifoldKind.SPHERE and antipodal_mask(w1[None, :], w2[None, :])[0]:
            return -np.inf
        try:
            h1 = inst.h(tuple(w1))
            h2 = inst.h(tuple(w2))
            p12 = inst.phi(h1, h2)
            gp = geodesic_batch(m, w1[None, :], w2[None, :], t)[0]
            lhs = inst.h(tuple(gp))
        except EvalDomainError:
            return -np.inf
        rhs = h2 + t * p12
        v = lhs - rhs
        if self.strict and 0.0 < t < 1.0:
            strict_sep = STRICT_SEP_FRACTION * inst.domain.scale()
            if float(distance_batch(m, w1[None, :], w2[None, :])[0]) > strict_sep:
                v += STRICT_MARGIN_FACTOR * cfg.threshold(rhs)
        return v

    def refine_setup(self, payload):
        z0 = list(payload["u1"]) + list(payload["u2"]) + [payload["t"]]
        box = list(self.inst.domain.box)
        if self.strict:
            # stays on the tested interior range: the strict margin dies
            # out toward the endpoints for every function
            ts = self.t_values()
            t_iv = (float(ts[1]), float(ts[-2]))
        else:
            t_iv = (0.0, 1.0)
        return z0, box + box + [t_iv]

    def witness(self, z, viol) -> Witness:
        inst = self.inst
        m = inst.manifold
        d = m.ambient_dim
        u1 = np.asarray(z[:d])
        u2 = np.asarray(z[d : 2 * d])
        t = float(z[2 * d])
        if m.kind is ManifoldKind.SPHERE:
            u1 = u1 / np.linalg.norm(u1)
            u2 = u2 / np.linalg.norm(u2)
        w1 = _scalar_image(inst, tuple(u1))
        w2 = _scalar_image(inst, tuple(u2))
        h1 = inst.h(tuple(w1))
        h2 = inst.h(tuple(w2))
        p12 = inst.phi(h1, h2)
        gp = geodesic_batch(m, w1[None, :], w2[None, :], t)[0]
        lhs = inst.h(tuple(gp))
        rhs = h2 + t * p12
        if self.strict and 0.0 < t < 1.0 and viol - (lhs - rhs) > 1e-300:
            rhs = rhs - STRICT_MARGIN_FACTOR * self.cfg.threshold(rhs)
        return Witness(
            points=(Point(tuple(u1)), Point(tuple(u2))),
            t=t,
            lhs=float(lhs),
            rhs=float(rhs),
            violation=float(lhs - rhs),
        )


def _finish_scan(scan, cfg: CheckConfig, notes=(), flags=None, top_k: int = 1,
                 force_refine: bool = False) -> Report:
    n = cfg.samples
    L = scan.lanes_per_pair()
    chunks = _run_chunks(n, cfg, scan.chunk)
    err_flat, err_note, cands, max_viol, violated, extras = _merge_chunks(chunks, L, top_k)
    flags = dict(flags or {})
    for handler in (getattr(scan, "merge_extras", None),):
        if handler:
            flags.update(handler(extras, err_flat))
    samples_used = n if err_flat == _BIG else err_flat // L
    notes = tuple(notes)

    best = None
    confirmed = []
    for viol0, flat, payload in cands:
        tau_hint = cfg.tol_abs + cfg.tol_rel  # scale-free trigger hint
        if not force_refine and viol0 <= -NEAR_VIOLATION_FACTOR * tau_hint and not violated:
            continue
        z0, intervals = scan.refine_setup(payload)
        z, v = _golden_refine(scan.objective, z0, intervals, cfg.refine_steps)
        if np.isfinite(v):
            w = replace(scan.witness(z, v), origin_index=flat // L)
            if w.violation > cfg.threshold(w.rhs):
                confirmed.append(w)
        if best is None or v > best[1]:
            best = (z, v, flat)
        if not force_refine:
            break

    if best is not None and np.isfinite(best[1]):
        witness = replace(scan.witness(best[0], best[1]), origin_index=best[2] // L)
        max_viol = max(max_viol, float(best[1]))
        if witness.violation > cfg.threshold(witness.rhs):
            return Report(
                Verdict.VIOLATED,
                float(max_viol),
                witness,
                samples_used,
                cfg.seed,
                flags=flags,
                notes=notes,
                refined=tuple(confirmed),
            )

    if err_flat != _BIG:
        return Report(
            Verdict.DOMAIN_ERROR,
            None if not np.isfinite(max_viol) else float(max_viol),
            None,
            samples_used,
            cfg.seed,
            flags=flags,
            notes=notes + (err_note or "domain error",),
        )
    if violated:
        # bulk scan saw a violation but the refined re-evaluation did not
        # confirm it; report the conservative verdict with the raw value
        return Report(
            Verdict.HOLDS_ON_SAMPLES,
            float(max_viol),
            None,
            samples_used,
            cfg.seed,
            flags=flags,
            notes=notes + ("unconfirmed raw violation did not survive re-evaluation",),
        )
    return Report(
        Verdict.HOLDS_ON_SAMPLES,
        None if not np.isfinite(max_viol) else float(max_viol),
        None,
        samples_used,
        cfg.seed,
        flags=flags,
        notes=notes,
    )


def check_geodesic_phiE_convex_fn(
    inst: Instance, cfg: CheckConfig, strict: bool = False
) -> Report:
    """Test h(curve(t)) <= h(E(mu2)) + t*phi(h(E(mu1)), h(E(mu2))) along
    geodesics between E-images of sampled member pairs.

    The domain must first pass the geodesic E-convex set check on the same
    budget; otherwise the premise fails.  Strict mode additionally demands
    a > tol margin whenever the E-images differ and t is interior.
    """
    set_report = check_geodesic_E_convex_set(inst.manifold, inst.E, inst.domain, cfg)
    if not set_report.holds:
        return Report(
            Verdict.PREMISE_FAILED,
            set_report.max_violation,
            None,
            set_report.samples_used,
            cfg.seed,
            flags=dict(set_report.flags),
            notes=(
                f"domain is not geodesic E-convex on samples ({set_report.verdict.value})",
            )
            + set_report.notes,
        )
    notes = ("strict margin of 2*tol folded into rhs",) if strict else ()
    return _finish_scan(_ConvexityScan(inst, cfg, strict), cfg, notes=notes)


def check_phiE_convex_interval(inst: Instance, cfg: CheckConfig) -> Report:
    """1-D combination form: h(t*E(u1) + (1-t)*E(u2)) <= h(E(u2)) + t*phi(...).

    On Euclidean(1) the straight segment is the geodesic, so this is the
    geodesic scan without the set premise.
    """
    if inst.manifold.kind is not ManifoldKind.EUCLIDEAN or inst.manifold.dim != 1:
        raise ValueError("interval check requires Euclidean(1)")
    return _finish_scan(_ConvexityScan(inst, cfg, strict=False), cfg)


def search_counterexample(inst: Instance, cfg: CheckConfig, strict: bool = False) -> Report:
    """Like the function check but refines the top candidates regardless of
    the near-violation trigger, for deliberate counterexample hunting."""
    return _finish_scan(
        _ConvexityScan(inst, cfg, strict), cfg, top_k=8, force_refine=True,
        notes=("counterexample search: refined top candidates",),
    )


# ---------------------------------------------------------------------------
# slope form on Euclidean(1)

@dataclass
class _SlopeScan:
    inst: Instance
    cfg: CheckConfig

    def lanes_per_pair(self) -> int:
        return 2

    def chunk(self, i0: int, i1: int) -> _ChunkScan:
        cfg = self.cfg
        inst = self.inst
        n = i1 - i0
        L = 2
        gidx = np.arange(i0, i1, dtype=np.int64)
        bases = rng.base_array(cfg.seed, np.arange(i0, i1, dtype=np.uint64))
        pts = []
        oks = []
        for region in range(3):
            P, ok = sample_members(inst.domain, bases, region=region, on_fail="mask")
            pts.append(P[:, 0])
            oks.append(ok)
        pair_bad = ~(oks[0] & oks[1] & oks[2])
        U = np.stack(pts, axis=1)  # (n, 3) in mu-space
        Evals = np.stack([inst.E.eval_batch(U[:, k : k + 1])[:, 0] for k in range(3)], axis=1)
        e_bad = ~pair_bad & ~np.all(np.isfinite(Evals), axis=1)
        order = np.argsort(Evals, axis=1, kind="stable")
        Es = np.take_along_axis(Evals, order, axis=1)
        Us = np.take_along_axis(U, order, axis=1)
        e1, em, e2 = Es[:, 0], Es[:, 1], Es[:, 2]
        admissible = ~pair_bad & ~e_bad & (e1 < em) & (em < e2)
        h1 = inst.h.eval_batch(e1[:, None])
        hm = inst.h.eval_batch(em[:, None])
        h2 = inst.h.eval_batch(e2[:, None])
        p = inst.phi.eval_batch(h1, h2)
        with np.errstate(all="ignore"):
            lhs = p / (e1 - e2)
            rhs = (h2 - hm) / (e2 - em)
            viol = lhs - rhs
        val_bad = admissible & ~_finite(h1, hm, h2, p, viol)
        err_flat = _BIG
        err_note = None
        bad = pair_bad | e_bad | val_bad
        if np.any(bad):
            k = int(np.argmax(bad))
            err_flat = int(gidx[k]) * L
            err_note = f"evaluation failed on triple {int(gidx[k])}"
        flats = gidx * L + 1
        counted = admissible & ~val_bad & (flats < err_flat)
        thr = cfg.tol_abs + cfg.tol_rel * np.maximum(1.0, np.abs(rhs))
        cands_raw = _select_candidates(viol[:, None], flats[:, None], counted[:, None], k=8)
        cands = []
        for v, flat, pos in cands_raw:
            cands.append((v, flat, {"u": tuple(float(x) for x in Us[pos])}))
        any_counted = bool(np.any(counted))
        max_viol = float(np.max(np.where(counted, viol, -np.inf))) if any_counted else -np.inf
        violated = bool(np.any(counted & (viol > thr)))
        return _ChunkScan(
            i0, i1, err_flat, err_note, cands, max_viol, violated,
            {"admissible": int(np.sum(admissible & (flats < err_flat)))},
        )

    def merge_extras(self, extras, err_flat):
        total = sum(e.get("admissible", 0) for e in extras)
        self._admissible = total
        return {}

    def objective(self, z) -> float:
        inst = self.inst
        us = [np.asarray([z[k]]) for k in range(3)]
        for u in us:
            if not member_mask_batch(inst.domain, u[None, :])[0]:
                return -np.inf
        try:
            es = sorted(inst.E((float(u[0]),))[0] for u in us)
        except EvalDomainError:
            return -np.inf
        e1, em, e2 = es
        if not (e1 < em < e2):
            return -np.inf
        try:
            h1 = inst.h((e1,))
            hm = inst.h((em,))
            h2 = inst.h((e2,))
            p = inst.phi(h1, h2)
        except EvalDomainError:
            return -np.inf
        lhs = p / (e1 - e2)
        rhs = (h2 - hm) / (e2 - em)
        v = lhs - rhs
        return v if math.isfinite(v) else -np.inf

    def refine_setup(self, payload):
        z0 = list(payload["u"])
        intervals = list(self.inst.domain.box) * 3
        return z0, intervals

    def witness(self, z, viol) -> Witness:
        inst = self.inst
        es = sorted(inst.E((float(zk),))[0] for zk in z)
        e1, em, e2 = es
        h1 = inst.h((e1,))
        hm = inst.h((em,))
        h2 = inst.h((e2,))
        p = inst.phi(h1, h2)
        lhs = p / (e1 - e2)
        rhs = (h2 - hm) / (e2 - em)
        return Witness(
            points=(Point((e1,)), Point((em,)), Point((e2,))),
            t=None,
            lhs=float(lhs),
            rhs=float(rhs),
            violation=float(lhs - rhs),
        )


def check_slope_inequality(inst: Instance, cfg: CheckConfig) -> Report:
    """Difference-quotient form on Euclidean(1): for sampled triples with
    E(mu1) < E(mu) < E(mu2),

        [h(E(mu2)) - h(E(mu))] / [E(mu2) - E(mu)]
            >= phi(h(E(mu1)), h(E(mu2))) / [E(mu1) - E(mu2)].

    Triples are labeled by sorting the three E-values; with no admissible
    triple at all (constant E, say) the premise fails.
    """
    if inst.manifold.kind is not ManifoldKind.EUCLIDEAN or inst.manifold.dim != 1:
        raise ValueError("slope check requires Euclidean(1)")
    scan = _SlopeScan(inst, cfg)
    report = _finish_scan(scan, cfg)
    admissible = getattr(scan, "_admissible", 0)
    if report.verdict is Verdict.HOLDS_ON_SAMPLES and admissible == 0:
        return Report(
            Verdict.PREMISE_FAILED,
            None,
            None,
            report.samples_used,
            cfg.seed,
            notes=("no sampled triple satisfied E(mu1) < E(mu) < E(mu2)",),
        )
    flags = dict(report.flags)
    flags["admissible_triples"] = admissible
    return Report(
        report.verdict, report.max_violation, report.witness,
        report.samples_used, report.seed, flags=flags, notes=report.notes,
    )


# ---------------------------------------------------------------------------
# geodesic E-convex sets

@dataclass
class _SetScan:
    manifold: Manifold
    E: EndoMap
    B: DomainSet
    cfg: CheckConfig

    def lanes_per_pair(self) -> int:
        return self.cfg.t_grid + 1

    def chunk(self, i0: int, i1: int) -> _ChunkScan:
        cfg = self.cfg
        m = self.manifold
        n = i1 - i0
        G = cfg.t_grid
        L = G + 1
        gidx = np.arange(i0, i1, dtype=np.int64)
        bases = rng.base_array(cfg.seed, np.arange(i0, i1, dtype=np.uint64))
        U1, ok1 = sample_members(self.B, bases, region=0, on_fail="mask")
        U2, ok2 = sample_members(self.B, bases, region=1, on_fail="mask")
        pair_bad = ~(ok1 & ok2)
        note = "rejection sampling exhausted for a domain point"
        W1, okw1 = _clean_images(m, self.E.eval_batch(U1))
        W2, okw2 = _clean_images(m, self.E.eval_batch(U2))
        e_bad = ~pair_bad & ~(okw1 & okw2)
        if np.any(e_bad):
            note = "E produced an invalid manifold point"
        anti = np.zeros(n, dtype=bool)
        if m.kind is ManifoldKind.SPHERE:
            anti = ~pair_bad & ~e_bad & antipodal_mask(W1, W2)
            if np.any(anti):
                note = "antipodal E-images: geodesic not unique"
        pair_err = pair_bad | e_bad | anti
        err_flat = _BIG
        err_note = None
        if np.any(pair_err):
            k = int(np.argmax(pair_err))
            err_flat = int(gidx[k]) * L
            err_note = f"{note} (pair {int(gidx[k])})"
        ok_rows = ~pair_err
        with np.errstate(all="ignore"):
            d_im = distance_batch(m, W1, W2)
            d_base = distance_batch(m, U1, U2)
        len_disc = np.where(ok_rows, np.abs(d_im - d_base), 0.0)
        len_thr = cfg.tol_abs + cfg.tol_rel * np.maximum(1.0, np.abs(d_base))
        len_bad = int(np.sum(ok_rows & (len_disc > len_thr)))
        max_len_disc = float(np.max(len_disc, initial=0.0))

        ts = np.linspace(0.0, 1.0, G)
        viol = np.empty((n, G))
        lane_err = np.zeros((n, G), dtype=bool)
        with np.errstate(all="ignore"):
            for j, t in enumerate(ts):
                gp = geodesic_batch(m, W1, W2, float(t))
                margin = outside_margin_batch(self.B, gp)
                viol[:, j] = margin
                lane_err[:, j] = ~pair_err & ~np.isfinite(margin)
        flats = gidx[:, None] * L + 1 + np.arange(G, dtype=np.int64)[None, :]
        if np.any(lane_err):
            le_flats = np.where(lane_err, flats, _BIG)
            le_min = int(le_flats.min())
            if le_min < err_flat:
                err_flat = le_min
                err_note = "membership predicate failed to evaluate on a curve point"
        counted = (~pair_err[:, None]) & ~lane_err & np.isfinite(viol) & (flats < err_flat)
        thr = cfg.tol_abs + cfg.tol_rel  # rhs of a margin test is 0
        cands_raw = _select_candidates(viol, flats, counted, k=8)
        cands = []
        for v, flat, pos in cands_raw:
            pi, j = divmod(pos, G)
            cands.append(
                (v, flat, {"u1": tuple(U1[pi]), "u2": tuple(U2[pi]), "t": float(ts[j])})
            )
        any_counted = bool(np.any(counted))
        max_viol = float(np.max(np.where(counted, viol, -np.inf))) if any_counted else -np.inf
        violated = bool(np.any(counted & (viol > thr)))
        return _ChunkScan(
            i0, i1, err_flat, err_note, cands, max_viol, violated,
            {"len_bad": len_bad, "max_len_disc": max_len_disc},
        )

    def merge_extras(self, extras, err_flat):
        len_bad = sum(e["len_bad"] for e in extras)
        max_disc = max(e["max_len_disc"] for e in extras)
        self._length_note = (
            f"geodesic length vs base distance: max discrepancy {max_disc!r}, "
            f"{len_bad} pair(s) beyond tolerance"
        )
        return {"length_matches_base_distance": len_bad == 0}

    def objective(self, z) -> float:
        m = self.manifold
        d = m.ambient_dim
        u1 = np.asarray(z[:d], dtype=np.float64)
        u2 = np.asarray(z[d : 2 * d], dtype=np.float64)
        t = float(z[2 * d])
        if m.kind is ManifoldKind.SPHERE:
            n1, n2 = np.linalg.norm(u1), np.linalg.norm(u2)
            if n1 < 1e-12 or n2 < 1e-12:
                return -np.inf
            u1, u2 = u1 / n1, u2 / n2
        if not (
            member_mask_batch(self.B, u1[None, :])[0]
            and member_mask_batch(self.B, u2[None, :])[0]
        ):
            return -np.inf
        try:
            w1 = np.asarray(self.E(tuple(u1)), dtype=np.float64)
            w2 = np.asarray(self.E(tuple(u2)), dtype=np.float64)
        except EvalDomainError:
            return -np.inf
        W1, ok1 = _clean_images(m, w1[None, :])
        W2, ok2 = _clean_images(m, w2[None, :])
        if not (ok1[0] and ok2[0]):
            return -np.inf
        if m.kind is ManifoldKind.SPHERE and antipodal_mask(W1, W2)[0]:
            return -np.inf
        gp = geodesic_batch(m, W1, W2, t)
        margin = float(outside_margin_batch(self.B, gp)[0])
        return margin if math.isfinite(margin) else -np.inf

    def refine_setup(self, payload):
        z0 = list(payload["u1"]) + list(payload["u2"]) + [payload["t"]]
        box = list(self.B.box)
        return z0, box + box + [(0.0, 1.0)]

    def witness(self, z, viol) -> Witness:
        m = self.manifold
        d = m.ambient_dim
        u1 = np.asarray(z[:d])
        u2 = np.asarray(z[d : 2 * d])
        t = float(z[2 * d])
        if m.kind is ManifoldKind.SPHERE:
            u1 = u1 / np.linalg.norm(u1)
            u2 = u2 / np.linalg.norm(u2)
        return Witness(
            points=(Point(tuple(u1)), Point(tuple(u2))),
            t=t,
            lhs=float(viol),
            rhs=0.0,
            violation=float(viol),
        )


def check_geodesic_E_convex_set(
    m: Manifold, E: EndoMap, B: DomainSet, cfg: CheckConfig
) -> Report:
    """For sampled member pairs, the geodesic between their E-images must
    stay inside B.  Whether the geodesic's length matches the base-point
    distance is reported as the separate flag `length_matches_base_distance`
    and never folds into the verdict.
    """
    scan = _SetScan(m, E, B, cfg)
    report = _finish_scan(scan, cfg)
    note = getattr(scan, "_length_note", None)
    if note:
        report = Report(
            report.verdict, report.max_violation, report.witness,
            report.samples_used, report.seed, flags=report.flags,
            notes=report.notes + (note,),
        )
    return report


# ---------------------------------------------------------------------------
# product-space sets

@dataclass
class _ProductSetScan:
    manifold: Manifold
    E: EndoMap
    phi: Bifunction
    S: ProductSet
    cfg: CheckConfig

    def lanes_per_pair(self) -> int:
        return self.cfg.t_grid + 1

    def chunk(self, i0: int, i1: int) -> _ChunkScan:
        cfg = self.cfg
        m = self.manifold
        n = i1 - i0
        G = cfg.t_grid
        L = G + 1
        gidx = np.arange(i0, i1, dtype=np.int64)
        bases = rng.base_array(cfg.seed, np.arange(i0, i1, dtype=np.uint64))
        (U1, V1), ok1 = sample_product_members(self.S, bases, region=0, on_fail="mask")
        (U2, V2), ok2 = sample_product_members(self.S, bases, region=1, on_fail="mask")
        pair_bad = ~(ok1 & ok2)
        unsampled = int(np.sum(pair_bad))
        W1, okw1 = _clean_images(m, self.E.eval_batch(U1))
        W2, okw2 = _clean_images(m, self.E.eval_batch(U2))
        e_bad = ~pair_bad & ~(okw1 & okw2)
        anti = np.zeros(n, dtype=bool)
        if m.kind is ManifoldKind.SPHERE:
            anti = ~pair_bad & ~e_bad & antipodal_mask(W1, W2)
        pv = self.phi.eval_batch(V1, V2)
        val_bad = ~pair_bad & ~e_bad & ~anti & ~np.isfinite(pv)
        pair_err = e_bad | anti | val_bad
        err_flat = _BIG
        err_note = None
        if np.any(pair_err):
            k = int(np.argmax(pair_err))
            err_flat = int(gidx[k]) * L
            err_note = f"E, geodesic, or phi failed on member pair {int(gidx[k])}"
        ts = np.linspace(0.0, 1.0, G)
        viol = np.empty((n, G))
        lane_err = np.zeros((n, G), dtype=bool)
        with np.errstate(all="ignore"):
            for j, t in enumerate(ts):
                gp = geodesic_batch(m, W1, W2, float(t))
                w = V2 + t * pv
                margin = self.S.outside_margin(gp, w)
                viol[:, j] = margin
                lane_err[:, j] = ~pair_bad & ~pair_err & ~np.isfinite(margin)
        flats = gidx[:, None] * L + 1 + np.arange(G, dtype=np.int64)[None, :]
        if np.any(lane_err):
            le_flats = np.where(lane_err, flats, _BIG)
            le_min = int(le_flats.min())
            if le_min < err_flat:
                err_flat = le_min
                err_note = "graph predicate failed to evaluate on a candidate"
        counted = (
            (~pair_bad[:, None]) & (~pair_err[:, None]) & ~lane_err
            & np.isfinite(viol) & (flats < err_flat)
        )
        thr = cfg.tol_abs + cfg.tol_rel
        cands_raw = _select_candidates(viol, flats, counted, k=8)
        cands = []
        for v, flat, pos in cands_raw:
            pi, j = divmod(pos, G)
            cands.append((
                v, flat,
                {
                    "u1": tuple(U1[pi]), "v1": float(V1[pi]),
                    "u2": tuple(U2[pi]), "v2": float(V2[pi]),
                    "t": float(ts[j]),
                },
            ))
        any_counted = bool(np.any(counted))
        max_viol = float(np.max(np.where(counted, viol, -np.inf))) if any_counted else -np.inf
        violated = bool(np.any(counted & (viol > thr)))
        return _ChunkScan(
            i0, i1, err_flat, err_note, cands, max_viol, violated,
            {"unsampled": unsampled, "n": n},
        )

    def merge_extras(self, extras, err_flat):
        self._unsampled = sum(e["unsampled"] for e in extras)
        self._n = sum(e["n"] for e in extras)
        return {}

    def objective(self, z) -> float:
        m = self.manifold
        d = m.ambient_dim
        u1 = np.asarray(z[:d], dtype=np.float64)
        v1 = float(z[d])
        u2 = np.asarray(z[d + 1 : 2 * d + 1], dtype=np.float64)
        v2 = float(z[2 * d + 1])
        t = float(z[2 * d + 2])
        if m.kind is ManifoldKind.SPHERE:
            n1, n2 = np.linalg.norm(u1), np.linalg.norm(u2)
            if n1 < 1e-12 or n2 < 1e-12:
                return -np.inf
            u1, u2 = u1 / n1, u2 / n2
        if not (
            self.S.member_mask(u1[None, :], np.array([v1]))[0]
            and self.S.member_mask(u2[None, :], np.array([v2]))[0]
        ):
            return -np.inf
        try:
            w1 = np.asarray(self.E(tuple(u1)), dtype=np.float64)
            w2 = np.asarray(self.E(tuple(u2)), dtype=np.float64)
            pv = self.phi(v1, v2)
        except EvalDomainError:
            return -np.inf
        W1, ok1 = _clean_images(m, w1[None, :])
        W2, ok2 = _clean_images(m, w2[None, :])
        if not (ok1[0] and ok2[0]):
            return -np.inf
        if m.kind is ManifoldKind.SPHERE and antipodal_mask(W1, W2)[0]:
            return -np.inf
        gp = geodesic_batch(m, W1, W2, t)
        margin = float(self.S.outside_margin(gp, np.array([v2 + t * pv]))[0])
        return margin if math.isfinite(margin) else -np.inf

    def refine_setup(self, payload):
        z0 = (
            list(payload["u1"]) + [payload["v1"]]
            + list(payload["u2"]) + [payload["v2"]] + [payload["t"]]
        )
        box = list(self.S.base.box)
        vr = [tuple(self.S.v_range)]
        return z0, box + vr + box + vr + [(0.0, 1.0)]

    def witness(self, z, viol) -> Witness:
        d = self.manifold.ambient_dim
        u1 = np.asarray(z[:d])
        v1 = float(z[d])
        u2 = np.asarray(z[d + 1 : 2 * d + 1])
        v2 = float(z[2 * d + 1])
        t = float(z[2 * d + 2])
        if self.manifold.kind is ManifoldKind.SPHERE:
            u1 = u1 / np.linalg.norm(u1)
            u2 = u2 / np.linalg.norm(u2)
        return Witness(
            points=(Point(tuple(u1) + (v1,)), Point(tuple(u2) + (v2,))),
            t=t,
            lhs=float(viol),
            rhs=0.0,
            violation=float(viol),
        )


def check_geodesic_phiE_convex_set(
    m: Manifold, E: EndoMap, phi: Bifunction, S: ProductSet, cfg: CheckConfig
) -> Report:
    """For sampled member pairs ((u1,v1),(u2,v2)) of S and grid t, the
    candidate (curve_{E(u1),E(u2)}(t), v2 + t*phi(v1,v2)) must be in S.

    If no member can be sampled at all the condition is vacuous and the
    check holds with zero samples.
    """
    scan = _ProductSetScan(m, E, phi, S, cfg)
    report = _finish_scan(scan, cfg)
    unsampled = getattr(scan, "_unsampled", 0)
    total = getattr(scan, "_n", cfg.samples)
    if unsampled == total:
        return Report(
            Verdict.HOLDS_ON_SAMPLES, None, None, 0, cfg.seed,
            notes=("no members found; membership condition is vacuous",),
        )
    if unsampled > 0 and report.verdict is Verdict.HOLDS_ON_SAMPLES:
        return Report(
            report.verdict, report.max_violation, report.witness,
            report.samples_used - unsampled, report.seed, flags=report.flags,
            notes=report.notes + (f"{unsampled} draws found no member and were skipped",),
        )
    return report


# ---------------------------------------------------------------------------
# epigraph membership

@dataclass
class EpigraphMembership:
    """Membership predicate for {(u, v): u in E(domain), h(u) <= v}.

    Whether u lies in the E-image is decided by sampled inverse search over
    the domain followed by coordinate refinement; preimage distances above
    INVERSE_TOL raise InverseSearchFailedError.
    """

    inst: Instance
    cfg: CheckConfig

    def preimage_distance(self, u) -> tuple[float, tuple[float, ...]]:
        inst = self.inst
        cfg = self.cfg
        target = np.asarray(getattr(u, "coords", u), dtype=np.float64)
        n = cfg.samples
        best_d = np.inf
        best_mu = None
        for i0, i1 in _chunk_ranges(n, 1):
            bases = rng.base_array(cfg.seed, np.arange(i0, i1, dtype=np.uint64))
            U, ok = sample_members(inst.domain, bases, region=5, on_fail="mask")
            W = inst.E.eval_batch(U)
            with np.errstate(all="ignore"):
                dist = np.linalg.norm(W - target[None, :], axis=1)
            dist = np.where(ok & np.isfinite(dist), dist, np.inf)
            k = int(np.argmin(dist))
            if dist[k] < best_d:
                best_d = float(dist[k])
                best_mu = tuple(U[k])
        if best_mu is None:
            raise InverseSearchFailedError("no domain sample could be drawn")

        def objective(z):
            x = np.asarray(z, dtype=np.float64)
            if not member_mask_batch(inst.domain, x[None, :])[0]:
                return -np.inf
            try:
                w = np.asarray(inst.E(tuple(x)), dtype=np.float64)
            except EvalDomainError:
                return -np.inf
            d = float(np.linalg.norm(w - target))
            return -d if math.isfinite(d) else -np.inf

        z, v = _golden_refine(objective, list(best_mu), list(inst.domain.box), cfg.refine_steps)
        if math.isfinite(v) and -v < best_d:
            best_d, best_mu = -v, tuple(z)
        return best_d, best_mu

    def __call__(self, u, v: float) -> bool:
        dist, _ = self.preimage_distance(u)
        if dist > INVERSE_TOL:
            raise InverseSearchFailedError(
                f"nearest E-image is {dist!r} away from the queried point"
            )
        coords = tuple(getattr(u, "coords", u))
        hv = self.inst.h(coords)
        return hv <= v + self.cfg.threshold(v)


def epigraph_membership(inst: Instance, cfg: CheckConfig | None = None) -> EpigraphMembership:
    return EpigraphMembership(inst, cfg or CheckConfig())
