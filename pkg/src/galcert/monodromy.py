"""Analytic continuation of second-order linear ODEs and monodromy groups.

Transport matrices act on solution-vector coordinates (X, X') at the start of
a path: Y_end = M Y_start.  Concatenated paths therefore compose right to
left, M(path1 then path2) = M(path2) M(path1).

Loops around singular points are built from a common basepoint with a
"highway" construction: descend from the basepoint to a horizontal corridor
below the real axis, travel to a vertical column near the target, approach,
and circle once counterclockwise; the return leg retraces the approach.  A
loop's distance to every other singularity is validated against the declared
clearance before any stepping happens.

For equations with branch-tracked transcendental coefficients, the tracked
triple (w, u, v) is continued simultaneously with the fundamental matrix by
its exact derivative relations.
"""

from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import kernels
from .algebra import FieldElement, residue_at
from .errors import NoConvergence, NotAPole, SingularityTooClose
from .variational import (
    BranchState,
    ExactODE2,
    family_coeffs_ts,
    transverse_coeffs_ts,
    SQRT2,
)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# path geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Line:
    z0: complex
    z1: complex

    @property
    def start(self) -> complex:
        return self.z0

    @property
    def end(self) -> complex:
        return self.z1

    def reversed(self) -> "Line":
        return Line(self.z1, self.z0)

    def kernel_params(self):
        return 0, (self.z0, self.z1 - self.z0, 0j)

    def distance_to(self, p: complex) -> float:
        d = self.z1 - self.z0
        L2 = abs(d) ** 2
        if L2 == 0.0:
            return abs(p - self.z0)
        u = ((p - self.z0) * d.conjugate()).real / L2
        u = min(1.0, max(0.0, u))
        return abs(p - (self.z0 + u * d))


@dataclass(frozen=True)
class Arc:
    """t(sigma) = center + radius * exp(i (theta0 + sigma * dtheta))."""

    center: complex
    radius: float
    theta0: float
    dtheta: float

    @property
    def start(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.theta0)

    @property
    def end(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * (self.theta0 + self.dtheta))

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta0 + self.dtheta, -self.dtheta)

    def kernel_params(self):
        return 1, (self.center, self.radius * cmath.exp(1j * self.theta0), complex(self.dtheta))

    def distance_to(self, p: complex) -> float:
        rel = p - self.center
        rho = abs(rel)
        if abs(self.dtheta) >= TWO_PI - 1e-12:
            return abs(rho - self.radius)
        if rho == 0.0:
            return self.radius
        ang = cmath.phase(rel)
        span = abs(self.dtheta)
        off = (ang - self.theta0) * (1.0 if self.dtheta >= 0 else -1.0)
        off %= TWO_PI
        if off <= span:
            return abs(rho - self.radius)
        return min(abs(p - self.start), abs(p - self.end))


Segment = Union[Line, Arc]


@dataclass(frozen=True)
class LoopPath:
    """Piecewise path with basepoint; closed when end returns to basepoint."""

    basepoint: complex
    segments: Tuple[Segment, ...]
    enclosed: Optional[complex] = None
    clearance: float = 0.05
    approach_column: Optional[float] = None
    from_below: Optional[bool] = None

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValueError("empty path")
        if abs(segs[0].start - self.basepoint) > 1e-14:
            raise ValueError("path does not start at the basepoint")
        for a, b in zip(segs, segs[1:]):
            if abs(a.end - b.start) > 1e-12:
                raise ValueError("path segments are not contiguous")
        object.__setattr__(self, "segments", segs)

    @property
    def endpoint(self) -> complex:
        return self.segments[-1].end

    @property
    def is_closed(self) -> bool:
        return abs(self.endpoint - self.basepoint) <= 1e-12

    def reversed(self) -> "LoopPath":
        return LoopPath(
            self.endpoint,
            tuple(s.reversed() for s in reversed(self.segments)),
            self.enclosed,
            self.clearance,
        )

    def min_distance(self, points: Sequence[complex]) -> float:
        return min(seg.distance_to(p) for seg in self.segments for p in points)

    def validate_clearance(self, points: Sequence[complex]) -> None:
        others = [p for p in points if self.enclosed is None or abs(p - self.enclosed) > 1e-12]
        if others:
            d = self.min_distance(others)
            if d < self.clearance:
                raise SingularityTooClose(
                    f"path at distance {d:.4f} < clearance {self.clearance} from a singularity"
                )

    def describe(self) -> dict:
        segs = []
        for s in self.segments:
            if isinstance(s, Line):
                segs.append({"kind": "line", "from": _cpair(s.z0), "to": _cpair(s.z1)})
            else:
                segs.append(
                    {
                        "kind": "arc",
                        "center": _cpair(s.center),
                        "radius": s.radius,
                        "theta0": s.theta0,
                        "dtheta": s.dtheta,
                    }
                )
        return {
            "basepoint": _cpair(self.basepoint),
            "enclosed": _cpair(self.enclosed) if self.enclosed is not None else None,
            "clearance": self.clearance,
            "segments": segs,
        }


def _cpair(z: complex) -> Tuple[float, float]:
    return (float(z.real), float(z.imag))


def polyline(points: Sequence[complex]) -> List[Segment]:
    segs: List[Segment] = []
    for a, b in zip(points, points[1:]):
        if abs(b - a) > 1e-12:
            segs.append(Line(a, b))
    return segs


# ---------------------------------------------------------------------------
# loop construction from a common basepoint
# ---------------------------------------------------------------------------

_COLUMN_OFFSETS = (0.0, -0.35, 0.35, -0.6, 0.6, -1.0, 1.0)


def loop_around(
    center: complex,
    singularities: Sequence[complex],
    basepoint: complex = 5.0 + 0.0j,
    radius: Optional[float] = None,
    clearance: float = 0.2,
    highway_im: float = -0.4,
) -> LoopPath:
    """Simple positively oriented loop around one singular point.

    The default radius is min(0.25, half the distance to the nearest other
    singularity); the approach legs run along the corridor Im t = highway_im.
    Raises SingularityTooClose when no clearance-respecting approach exists.
    """
    others = [s for s in singularities if abs(s - center) > 1e-12]
    if radius is None:
        radius = 0.25
        if others:
            radius = min(0.25, 0.5 * min(abs(s - center) for s in others))
    clearance = min(clearance, 0.98 * radius)
    from_below = center.imag >= highway_im
    for off in _COLUMN_OFFSETS:
        col = center.real + off
        pts = [basepoint, complex(basepoint.real, highway_im), complex(col, highway_im)]
        if off == 0.0:
            if from_below:
                entry_angle = -0.5 * math.pi
                pts.append(center - 1j * radius)
            else:
                entry_angle = 0.5 * math.pi
                pts.append(center + 1j * radius)
        else:
            pts.append(complex(col, center.imag))
            if off < 0.0:
                entry_angle = math.pi
                pts.append(center - radius)
            else:
                entry_angle = 0.0
                pts.append(center + radius)
        approach = polyline(pts)
        circle = Arc(center, radius, entry_angle, TWO_PI)
        back = [s.reversed() for s in reversed(approach)]
        loop = LoopPath(
            basepoint,
            tuple(approach + [circle] + back),
            center,
            clearance,
            approach_column=col,
            from_below=from_below,
        )
        try:
            loop.validate_clearance(singularities)
        except SingularityTooClose:
            continue
        if loop.min_distance([center]) < radius - 1e-9:
            continue
        return loop
    raise SingularityTooClose(
        f"no clearance-{clearance} approach to {center} from {basepoint} found"
    )


def big_circle(basepoint: complex = 5.0 + 0.0j) -> LoopPath:
    """Counterclockwise circle through the basepoint around the origin."""
    rho = abs(basepoint)
    th = cmath.phase(basepoint)
    return LoopPath(basepoint, (Arc(0.0, rho, th, TWO_PI),), None, 0.05)


# ---------------------------------------------------------------------------
# transport
# ---------------------------------------------------------------------------


@dataclass
class FamilyEquation:
    """Branch-tracked equation selector for transport.

    kind 'family' is the closed-form family member (energy E, shift k);
    kind 'corrected' is the transverse linearization at energy E.
    """

    E: complex
    k: int = 0
    kind: str = "family"

    @property
    def tag(self) -> str:
        if self.kind == "family":
            return f"family(E={self.E}, k={self.k})"
        return f"corrected(E={self.E})"


def _segment_stream(path_or_segments):
    if isinstance(path_or_segments, LoopPath):
        return list(path_or_segments.segments)
    if isinstance(path_or_segments, (Line, Arc)):
        return [path_or_segments]
    return list(path_or_segments)


def transport(
    equation,
    path,
    tol: float = 1e-12,
    branch: Optional[BranchState] = None,
    validate: bool = True,
):
    """Fundamental-matrix transfer matrix along a path, basis (X, X').

    Exact-coefficient equations run in the compiled kernel; branch-tracked
    equations carry (w, u, v) alongside the matrix.  Returns a 2x2 numpy
    array; use transport_with_branch to also recover the final branch state.
    """
    m, _ = transport_with_branch(equation, path, tol, branch, validate)
    return m


def transport_with_branch(
    equation,
    path,
    tol: float = 1e-12,
    branch: Optional[BranchState] = None,
    validate: bool = True,
):
    segments = _segment_stream(path)
    if isinstance(equation, ExactODE2):
        if validate and isinstance(path, LoopPath):
            sings = [s.embed() for s in equation.singularities()]
            path.validate_clearance(sings)
        kinds, params = [], []
        for seg in segments:
            k, p = seg.kernel_params()
            kinds.append(k)
            params.append(p)
        try:
            flat, _steps = kernels.transport_poly_segments(
                equation.a2.embed_coeffs(),
                equation.a1.embed_coeffs(),
                equation.a0.embed_coeffs(),
                kinds,
                params,
                tol,
            )
        except kernels.KernelError as exc:
            raise SingularityTooClose(str(exc)) from exc
        return np.array([[flat[0], flat[1]], [flat[2], flat[3]]]), None
    if isinstance(equation, FamilyEquation):
        if branch is None:
            raise ValueError("branch-tracked transport needs an initial BranchState")
        return _transport_family(equation, segments, tol, branch)
    raise TypeError(f"unsupported equation type {type(equation).__name__}")


def _transport_family(eq: FamilyEquation, segments, tol: float, branch: BranchState):
    start = segments[0].start
    if abs(branch.t - start) > 1e-9:
        raise ValueError("branch state is not anchored at the path start")
    state = (1 + 0j, 0j, 0j, 1 + 0j, branch.w, branch.u, branch.v)
    shift_k = eq.k
    E = eq.E
    corrected = eq.kind == "corrected"
    for seg in segments:
        kind, (pa, pb, pc) = seg.kernel_params()

        def rhs(sigma, y):
            if kind == 0:
                t = pa + sigma * pb
                dt = pb
            else:
                e = pb * cmath.exp(1j * pc * sigma)
                t = pa + e
                dt = 1j * pc * e
            m00, m01, m10, m11, w, u, v = y
            sw = cmath.sin(w)
            if abs(sw) < 1e-14:
                raise kernels.KernelError(f"branch derivative singular at t = {t}")
            s = 1j * w / (SQRT2 * u)
            if corrected:
                a2, a1, a0 = transverse_coeffs_ts(t, s, E)
            else:
                if shift_k:
                    s = s + (2j * math.pi * shift_k) / (SQRT2 * u)
                a2, a1, a0 = family_coeffs_ts(t, s, E)
            if a2 == 0:
                raise kernels.KernelError(f"leading coefficient vanished at t = {t}")
            p = a1 / a2
            q = a0 / a2
            return (
                dt * m10,
                dt * m11,
                dt * (-q * m00 - p * m10),
                dt * (-q * m01 - p * m11),
                dt * 3.0 * SQRT2 * v ** -5 / sw,
                dt * (-1.5) * t * t / u,
                dt * 0.5 / v,
            )

        try:
            state, _n = kernels.dp45(rhs, state, tol)
        except kernels.KernelError as exc:
            raise SingularityTooClose(str(exc)) from exc
    m = np.array([[state[0], state[1]], [state[2], state[3]]])
    end_t = segments[-1].end
    out_branch = BranchState(end_t, state[4], state[5], state[6])
    res = out_branch.residuals()
    if max(res) > 1e-6:
        raise NoConvergence(f"branch invariants drifted to {max(res):.2e} along the path")
    return m, out_branch


def branch_transport(path, branch: BranchState, tol: float = 1e-12) -> BranchState:
    """Continue only the branch triple (w, u, v) along a path."""
    segments = _segment_stream(path)
    state = (branch.w, branch.u, branch.v)
    for seg in segments:
        kind, (pa, pb, pc) = seg.kernel_params()

        def rhs(sigma, y):
            if kind == 0:
                t = pa + sigma * pb
                dt = pb
            else:
                e = pb * cmath.exp(1j * pc * sigma)
                t = pa + e
                dt = 1j * pc * e
            w, u, v = y
            sw = cmath.sin(w)
            if abs(sw) < 1e-14:
                raise kernels.KernelError(f"branch derivative singular at t = {t}")
            return (
                dt * 3.0 * SQRT2 * v ** -5 / sw,
                dt * (-1.5) * t * t / u,
                dt * 0.5 / v,
            )

        try:
            state, _ = kernels.dp45(rhs, state, tol)
        except kernels.KernelError as exc:
            raise SingularityTooClose(str(exc)) from exc
    end_t = segments[-1].end
    return BranchState(end_t, state[0], state[1], state[2])


# ---------------------------------------------------------------------------
# monodromy generators
# ---------------------------------------------------------------------------


@dataclass
class MonodromyMatrix:
    entries: np.ndarray
    loop: Optional[LoopPath]
    equation_tag: str
    enclosed: Optional[complex] = None
    det_predicted: Optional[complex] = None

    @property
    def det(self) -> complex:
        m = self.entries
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]

    @property
    def det_residual(self) -> Optional[float]:
        if self.det_predicted is None:
            return None
        return abs(self.det - self.det_predicted)

    def describe(self) -> dict:
        m = self.entries
        return {
            "entries": [[_cpair(m[0, 0]), _cpair(m[0, 1])], [_cpair(m[1, 0]), _cpair(m[1, 1])]],
            "enclosed": _cpair(self.enclosed) if self.enclosed is not None else None,
            "det": _cpair(self.det),
            "det_predicted": _cpair(self.det_predicted) if self.det_predicted is not None else None,
            "det_residual": self.det_residual,
            "loop": self.loop.describe() if self.loop is not None else None,
        }


def det_prediction(e: ExactODE2, pole) -> complex:
    """exp(-2 pi i * Res(a1/a2)) at a finite singularity, from the exact residue."""
    pole_fe = pole if isinstance(pole, FieldElement) else FieldElement.of(pole)
    p = e.p()
    if not p.den.eval_exact(pole_fe).is_zero():
        if e.a2.eval_exact(pole_fe).is_zero():
            return 1.0 + 0.0j  # apparent point of a2 cancelled in the ratio
        raise NotAPole(f"{pole_fe} is not a singularity of the equation")
    res = residue_at(p, pole_fe)
    return cmath.exp(-2j * math.pi * res.embed())


@dataclass
class GeneratorSet:
    equation_tag: str
    basepoint: complex
    matrices: List[MonodromyMatrix]
    infinity_representative: np.ndarray

    def product_of_finite(self) -> np.ndarray:
        """Matrix of the composite loop (first listed loop traversed first)."""
        out = np.eye(2, dtype=complex)
        for m in self.matrices:
            out = m.entries @ out
        return out


# Basepoint-ordering of the generator loops: the comb construction makes the
# composite of the loops, taken first over the targets approached from below
# the highway in order of decreasing approach column and then over the
# targets approached from above in increasing column order, homotopic to the
# counterclockwise circle through the basepoint.  The product test against
# big_circle transport pins this down numerically.
def _comb_order_key(loop: LoopPath):
    if loop.from_below:
        return (0, -loop.approach_column)
    return (1, loop.approach_column)


def generators(
    e: ExactODE2,
    basepoint: complex = 5.0 + 0.0j,
    tol: float = 1e-12,
    clearance: float = 0.2,
) -> GeneratorSet:
    """One positively oriented loop per finite singular point, plus the
    product matrix as the infinity representative.

    Loops are listed in basepoint ordering: their composite (first listed
    traversed first) is homotopic to the counterclockwise boundary circle, so
    the product of the matrices inverts the monodromy around infinity.
    """
    sings_exact = e.singularities()
    sings = [s.embed() for s in sings_exact]
    loops = [loop_around(c, sings, basepoint, clearance=clearance) for c in sings]
    order = sorted(range(len(sings)), key=lambda i: _comb_order_key(loops[i]))
    mats: List[MonodromyMatrix] = []
    for i in order:
        m = transport(e, loops[i], tol)
        try:
            pred = det_prediction(e, sings_exact[i])
        except NotAPole:
            pred = None
        mats.append(MonodromyMatrix(m, loops[i], e.tag, sings[i], pred))
    gs = GeneratorSet(e.tag, basepoint, mats, np.eye(2, dtype=complex))
    gs.infinity_representative = np.linalg.inv(gs.product_of_finite())
    return gs


# ---------------------------------------------------------------------------
# group-theoretic tests
# ---------------------------------------------------------------------------


def _inv2(m: np.ndarray) -> np.ndarray:
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det


def _unit_scale(m: np.ndarray) -> np.ndarray:
    """Divide by the largest entry magnitude; commutators are unchanged by
    rescaling their arguments, and this keeps deep words inside double range."""
    a = float(np.max(np.abs(m)))
    return m / a if a > 0.0 else m


def _commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = _unit_scale(a)
    b = _unit_scale(b)
    return a @ b @ _inv2(a) @ _inv2(b)


def _power_deviation(m: np.ndarray, power: int) -> float:
    """||m^power - I|| in the 2-norm, via log-scaled binary powering.

    Hyperbolic words overflow double precision long before the 60th power;
    the scaled product keeps the magnitude as (matrix, log-scale) and the
    returned deviation is capped at the largest finite double.
    """

    if not np.all(np.isfinite(m)):
        return math.exp(690.0)  # overflowed word: deviation is astronomically large

    def rescale(x, lx):
        a = float(np.max(np.abs(x)))
        if a > 1e50:
            return x / a, lx + math.log(a)
        return x, lx

    out = np.eye(2, dtype=complex)
    lo = 0.0
    base = np.asarray(m, dtype=complex)
    lb = 0.0
    n = power
    while n:
        if n & 1:
            out = out @ base
            lo += lb
            out, lo = rescale(out, lo)
        base = base @ base
        lb *= 2.0
        base, lb = rescale(base, lb)
        n >>= 1
    if lo > 200.0:
        # deviation magnitude exp(lo + log ||out||), reported as a finite float
        mag = lo + math.log(max(float(np.linalg.norm(out, 2)), 1e-300))
        return math.exp(min(mag, 690.0))
    mp = out * math.exp(lo)
    return float(np.linalg.norm(mp - np.eye(2), 2))


def derived_power_test(
    gens: Sequence[np.ndarray],
    depth: int = 2,
    power: int = 60,
    samples: int = 50,
    seed: int = 0,
) -> Tuple[float, List[float]]:
    """Max operator-norm deviation of (nested commutator)^power from identity.

    Nested commutators have the shape [[g1, g2], [g3, g4]] at depth 2 and one
    more bracketing level at depth 3; the g_i are sampled (seeded) from the
    given matrices and their inverses.  A virtually solvable group of the
    relevant type would make every sampled deviation vanish; a deviation well
    above integration error witnesses that the necessary condition fails.
    """
    if depth not in (2, 3):
        raise ValueError("depth must be 2 or 3")
    rng = random.Random(seed)
    pool = [np.asarray(g, dtype=complex) for g in gens]
    pool = pool + [_inv2(g) for g in pool]

    def word(d: int) -> np.ndarray:
        if d == 0:
            return pool[rng.randrange(len(pool))]
        return _commutator(word(d - 1), word(d - 1))

    devs: List[float] = []
    # deep hyperbolic words push intermediate entries to the edge of double
    # range; non-finite results are mapped to the capped deviation, so the
    # transient numpy warnings carry no information
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(samples):
            devs.append(_power_deviation(word(depth), power))
    return max(devs), devs


def eigenvalue_set(m: np.ndarray) -> List[complex]:
    return sorted(np.linalg.eigvals(m), key=lambda z: (round(z.real, 9), round(z.imag, 9)))


# ---------------------------------------------------------------------------
# sheaf-translation loop
# ---------------------------------------------------------------------------


def _shift_candidate_words():
    # Circling a zero of 8 - t^3 reflects the tracked w about the local mirror
    # (w even multiple of pi over t = 2, odd multiple over the two complex
    # cube roots); composing a mirror at pi with the mirror at 0 translates w
    # by exactly 2 pi.  The leading candidates implement that; longer words
    # over the same alphabet follow as fallbacks.
    leading = [
        (("w2m", 1), ("t2", 1)),
        (("w2p", 1), ("w2m", 1)),
        (("w2m", -1), ("t2", 1)),
        (("w2p", -1), ("w2m", 1)),
    ]
    for w in leading:
        yield w
    names = ("t2", "t0", "w2p", "w2m")
    for a in names:
        for sa in (1, -1):
            for b in names:
                for sb in (1, -1):
                    yield ((a, sa), (b, sb))


def find_sheaf_shift_loop(
    basepoint: complex = 5.0 + 0.0j,
    singularities: Optional[Sequence[complex]] = None,
    tol: float = 1e-11,
) -> LoopPath:
    """A closed loop returning t to the basepoint while shifting w by +2 pi.

    The loop realizes the sheaf translation: transporting the coefficient
    family along it re-reads the coefficients one shift higher.  Candidates
    are words in the loops around the zeros of 8 - t^3 and around t = 0,
    validated by branch-only transport.
    """
    basepoint = complex(basepoint.real)  # the search anchors on the real ray
    if singularities is None:
        sings = [s.embed() for s in _default_singularities()]
    else:
        sings = list(singularities)
    sq3 = math.sqrt(3.0)
    base_loops = {
        "t2": loop_around(2 + 0j, sings, basepoint, radius=0.25, clearance=0.2),
        "t0": loop_around(0j, sings, basepoint, radius=0.25, clearance=0.2),
        "w2p": loop_around(-1 + sq3 * 1j, sings, basepoint, radius=0.25, clearance=0.2),
        "w2m": loop_around(-1 - sq3 * 1j, sings, basepoint, radius=0.25, clearance=0.2),
    }
    b0 = BranchState.at_real_point(basepoint.real)
    for word in _shift_candidate_words():
        segs: List[Segment] = []
        for name, orient in word:
            lp = base_loops[name] if orient == 1 else base_loops[name].reversed()
            segs.extend(lp.segments)
        out = branch_transport(segs, b0, tol)
        ok_w = abs(out.w - b0.w - TWO_PI) < 1e-7
        ok_u = abs(out.u - b0.u) < 1e-7
        ok_v = abs(out.v - b0.v) < 1e-7
        if ok_w and ok_u and ok_v:
            return LoopPath(basepoint, tuple(segs), None, 0.1)
    raise NoConvergence("no sheaf-translation word found among the candidates")


def _default_singularities():
    from .variational import limit_equation

    return limit_equation().singularities()
