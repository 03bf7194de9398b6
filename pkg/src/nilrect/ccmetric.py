"""Horizontal curves, control transfer and CC distance brackets.

Distances are always reported as (lower, upper).  The upper end is the length
of an actual horizontal path found by direct transcription; the lower end
comes from comparison with the tangent group at a chart base point (or from
the quasinorm when the tangent has no closed-form distance).
"""
from __future__ import annotations

import logging
import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .carnot import CarnotGroup, ControlSignal
from .errors import BlowUp, DimensionMismatch, LoopNotClosed, SolverFailed
from .flag import word_field
from .linalg import rank as exact_rank
from .nilpot import (PrivilegedChart, _compile_polys, nilpotent_approximation,
                     privileged_coordinates, structure_constants)
from .symvec import Frame

log = logging.getLogger(__name__)

__all__ = [
    "CompiledFrame", "HorizontalCurve", "EstimateConstants", "TangentModel",
    "integrate_controls", "control_length", "transfer_controls",
    "cc_distance_bounds", "fit_constants", "closed_loop_defect", "transfer_defect",
    "DefectTable", "default_loop", "bounded_across_scales", "loglog_slope",
]


class CompiledFrame:
    """Float evaluator for a frame: ``matrix(x)`` has shape (..., n, d)."""

    def __init__(self, frame: Frame):
        self.frame = frame
        self.n = frame.ambient_dim
        self.d = frame.rank
        polys = [frame.fields[j].components[i] for i in range(self.n) for j in range(self.d)]
        self._f = _compile_polys(polys)

    def matrix(self, x):
        x = np.asarray(x, dtype=float)
        return self._f(x).reshape(x.shape[:-1] + (self.n, self.d))

    def velocity(self, x, u):
        return np.einsum("...ij,...j->...i", self.matrix(x), u)


def _compiled(frame):
    if isinstance(frame, CompiledFrame):
        return frame
    cache = getattr(frame, "_compiled", None)
    if cache is None:
        cache = CompiledFrame(frame)
        try:
            frame._compiled = cache
        except AttributeError:
            pass
    return cache


def _rk4(cf, x, u, durations, nsub, box=None):
    """Integrate x' = M(x) u_k over each segment.

    x: (B, n); u: (B, K, d); durations: (K,); nsub: substeps per segment.
    """
    for k, dt in enumerate(durations):
        h = dt / nsub
        uk = u[:, k, :]
        for _ in range(nsub):
            k1 = cf.velocity(x, uk)
            k2 = cf.velocity(x + 0.5 * h * k1, uk)
            k3 = cf.velocity(x + 0.5 * h * k2, uk)
            k4 = cf.velocity(x + h * k3, uk)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if box is not None and (not np.all(np.isfinite(x)) or np.any(np.abs(x) > box)):
            raise BlowUp(f"trajectory left the box |x| <= {box} in segment {k}")
    return x


@dataclass
class HorizontalCurve:
    frame_name: str
    start: np.ndarray
    control: ControlSignal
    times: np.ndarray
    trajectory: np.ndarray
    step: float
    error_estimate: float

    @property
    def endpoint(self):
        return self.trajectory[-1]

    @property
    def length(self):
        return self.control.length()

    def to_json(self):
        return {"frame": self.frame_name, "start": self.start.tolist(),
                "endpoint": self.endpoint.tolist(), "length": self.length,
                "step": self.step, "error_estimate": self.error_estimate,
                "control": self.control.to_json()}


def control_length(u: ControlSignal) -> float:
    return u.length()


def _substeps(durations, step):
    return [max(1, int(math.ceil(dt / step - 1e-12))) for dt in durations]


def _integrate_path(cf, start, u, step, box):
    x = np.asarray(start, dtype=float)[None, :]
    times, traj = [0.0], [x[0].copy()]
    t = 0.0
    for dt, val, m in zip(u.durations, u.values, _substeps(u.durations, step)):
        x = _rk4(cf, x, val[None, None, :], [dt], m, box)
        t += dt
        times.append(t)
        traj.append(x[0].copy())
    return np.array(times), np.array(traj)


def integrate_controls(frame: Frame, start, u: ControlSignal, step=None, box=1e6) -> HorizontalCurve:
    """RK4 with a fixed step (default 1e-3 of the duration); the error estimate
    compares the endpoint against a run at half the step."""
    cf = _compiled(frame)
    start = np.asarray(start, dtype=float)
    if start.shape != (cf.n,):
        raise DimensionMismatch(f"start point has shape {start.shape}, frame lives in R^{cf.n}")
    if len(u) and u.rank != cf.d:
        raise DimensionMismatch(f"control has {u.rank} components, frame has rank {cf.d}")
    if step is None:
        step = 1e-3 * max(u.total_duration, 1e-300)
    if step <= 0:
        raise ValueError("step must be positive")
    if not len(u):
        return HorizontalCurve(frame.name, start, u, np.zeros(1), start[None, :].copy(), step, 0.0)
    _, coarse = _integrate_path(cf, start, u, step, box)
    times, fine = _integrate_path(cf, start, u, step / 2, box)
    err = float(np.max(np.abs(coarse[-1] - fine[-1])))
    return HorizontalCurve(frame.name, start, u, times, fine, step / 2, err)


def transfer_controls(u: ControlSignal, target_frame: Frame, start, step=None) -> HorizontalCurve:
    """Run the same controls in another frame."""
    return integrate_controls(target_frame, start, u, step)


# ---------------------------------------------------------------------------
# tangent model at a chart base point


class TangentModel:
    """Nilpotent approximation at a base point, as a Carnot group.

    Chart coordinates t are of the second kind, so the group element is
    exp(t_n e_n) ... exp(t_1 e_1) in first-kind coordinates.
    """

    def __init__(self, chart: PrivilegedChart):
        self.chart = chart
        hat = nilpotent_approximation(chart)
        self.algebra = structure_constants(hat, chart.flag_basis)
        self.group = CarnotGroup(self.algebra, check=False)
        self.s = chart.step
        self._exact = None

    @classmethod
    def at(cls, frame, p, order=None):
        return cls(privileged_coordinates(frame, p, order))

    def group_coords(self, t):
        t = np.asarray(t, dtype=float)
        n = t.shape[-1]
        g = np.zeros_like(t)
        for j in reversed(range(n)):
            v = np.zeros_like(t)
            v[..., j] = t[..., j]
            g = self.group.bch_product(g, v)
        return g

    def point_to_group(self, x):
        return self.group_coords(self.chart.to_chart(x))

    @property
    def has_distance(self):
        return self.group.is_heisenberg_type

    @property
    def exact(self):
        """True when the frame is itself nilpotent of step s with an
        n-dimensional bracket algebra; it is then a left-invariant frame of
        the tangent group and the model distance is the true distance."""
        if self._exact is None:
            self._exact = _self_nilpotent(self.chart.frame, self.s)
        return self._exact

    def distance(self, a, b):
        """Tangent-group distance between the images of two points near the base."""
        return float(self.group.distance(self.point_to_group(a), self.point_to_group(b)))

    def quasinorm(self, a, b):
        return float(self.group.homogeneous_quasinorm(
            self.group.difference(self.point_to_group(a), self.point_to_group(b))))

    def radius(self, x):
        return float(self.group.homogeneous_quasinorm(self.point_to_group(x)))

    def initial_controls(self, a, b, segments):
        if not self.has_distance:
            return None
        ctrl, _ = self.group.group_geodesic(self.point_to_group(a), self.point_to_group(b),
                                            segments=segments)
        if not len(ctrl):
            return None
        if len(ctrl) != segments:
            v = np.repeat(ctrl.values, segments // len(ctrl) + 1, axis=0)[:segments]
            return v
        return ctrl.values


def _self_nilpotent(frame: Frame, s):
    cache = {}
    d, n = frame.rank, frame.ambient_dim
    words = [(i,) for i in range(d)]
    rows = []
    for k in range(1, s + 2):
        if k > 1:
            words = [(i,) + w for i in range(d) for w in words]
        for w in words:
            f = word_field(frame, w, cache)
            if k == s + 1:
                if not f.is_zero():
                    return False
                continue
            rows.append({(i, e): c for i, comp in enumerate(f.components)
                         for e, c in comp.terms.items()})
    keys = sorted({key for r in rows for key in r})
    return exact_rank([[r.get(key, 0) for key in keys] for r in rows]) == n


@dataclass
class EstimateConstants:
    """Fitted comparison constants with provenance.

    C0: quasinorm ball-box constant; kappa: tangent comparison slack, so
    lower = dhat - kappa * R^{1/s} * dhat; C, L: transfer bound and its
    length scope.
    """
    C0: float = 4.0
    L0: float = 0.5
    C: float = 1.0
    L: float = 0.5
    kappa: float = 1.0
    fitted: dict = field(default_factory=lambda: {"C0": False, "L0": False, "C": False,
                                                  "L": False, "kappa": False})
    events: list = field(default_factory=list)

    def to_json(self):
        return {"C0": self.C0, "L0": self.L0, "C": self.C, "L": self.L, "kappa": self.kappa,
                "fitted": dict(self.fitted), "events": list(self.events)}


# ---------------------------------------------------------------------------
# direct transcription in a manifold frame


def _adapted_scaling(model: TangentModel | None, n):
    if model is None:
        return np.eye(n), np.ones(n)
    fb = model.chart.flag_basis
    mat = np.array([[float(c) for c in f.evaluate(fb.point)] for f in fb.fields]).T
    return np.linalg.inv(mat), np.array(fb.weights, dtype=float)


def _gauss_newton(cons, cons_jac, v, tol, max_iter=40):
    """Minimum-norm Newton steps onto the endpoint constraint."""
    for _ in range(max_iter):
        c = cons(v)
        if float(np.max(np.abs(c))) <= tol:
            return v
        step, *_ = np.linalg.lstsq(cons_jac(v), c, rcond=None)
        # damp steps that would blow the path up
        nrm = np.linalg.norm(step)
        lim = 2.0 * np.sqrt(v.size)
        if nrm > lim:
            step *= lim / nrm
        v = v - step
    return v if float(np.max(np.abs(cons(v)))) <= tol else None


def _transcribe(frame, a, b, segments=32, restarts=8, seed=0, model=None, tol=1e-9,
                nsub=4, polish=60):
    """Shortest-found horizontal path a -> b: energy minimization with the
    endpoint as an equality constraint, scaled to the expected distance."""
    cf = _compiled(frame)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k, d, n = segments, cf.d, cf.n
    binv, w = _adapted_scaling(model, n)
    diff = binv @ (b - a)
    rho = float(np.sum(np.abs(diff) ** (1.0 / w)))
    if rho == 0:
        return ControlSignal.empty(d), 0.0, 0.0
    if model is not None and model.has_distance:
        rho = max(model.distance(a, b), 1e-300)
    scale = rho ** -w
    durations = np.full(k, 1.0 / k)

    def endpoints(v):
        u = v.reshape(-1, k, d) * rho
        x = np.repeat(a[None, :], u.shape[0], axis=0)
        return _rk4(cf, x, u, durations, nsub)

    def cons(v):
        return scale * (binv @ (endpoints(v[None, :])[0] - b))

    def cons_jac(v):
        h = 1e-7
        batch = np.repeat(v[None, :], v.size + 1, axis=0)
        batch[1:] += h * np.eye(v.size)
        ends = (endpoints(batch) - b) @ binv.T * scale
        return ((ends[1:] - ends[0]) / h).T

    def energy(v):
        return float(v @ v) / k

    def energy_grad(v):
        return 2 * v / k

    rng = np.random.default_rng(seed)
    starts = []
    init = model.initial_controls(a, b, k) if model is not None else None
    if init is not None:
        starts.append(np.asarray(init, dtype=float) / rho)
    while len(starts) < restarts:
        base = starts[0] if starts else np.zeros((k, d))
        jitter = rng.normal(scale=0.5 if starts else 1.0, size=(k, d))
        starts.append(base + jitter)
    best = None
    for v0 in starts[:max(restarts, 1)]:
        v = _gauss_newton(cons, cons_jac, v0.ravel(), tol)
        if v is None:
            continue
        if polish:
            sol = minimize(energy, v, jac=energy_grad, method="SLSQP",
                           constraints=[{"type": "eq", "fun": cons, "jac": cons_jac}],
                           options={"maxiter": polish, "ftol": 1e-12})
            # SLSQP may stop early; keep its iterate only if still feasible
            if float(np.max(np.abs(cons(sol.x)))) <= tol and energy(sol.x) < energy(v):
                v = sol.x
            else:
                v2 = _gauss_newton(cons, cons_jac, sol.x, tol)
                if v2 is not None and energy(v2) < energy(v):
                    v = v2
        resid = float(np.max(np.abs(cons(v))))
        length = float(np.sum(np.linalg.norm(v.reshape(k, d), axis=1))) / k * rho
        if best is None or length < best[1]:
            best = (v, length, resid)
    if best is None:
        raise SolverFailed(f"transcription missed the endpoint on all {len(starts)} starts")
    ctrl = ControlSignal(durations, best[0].reshape(k, d) * rho)
    return ctrl, best[1], best[2]


def cc_distance_bounds(frame: Frame, p, q, chart: PrivilegedChart | None = None,
                       constants: EstimateConstants | None = None, budget=None,
                       model: TangentModel | None = None):
    """(lower, upper) for d_M(p, q).

    ``chart`` (or a prebuilt ``model``) should be based at p or at a point
    close to both p and q.  Budget keys: segments, restarts, seed.
    """
    budget = dict(budget or {})
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.array_equal(p, q):
        return 0.0, 0.0
    if constants is None:
        constants = EstimateConstants()
    if model is None:
        if chart is None:
            chart = privileged_coordinates(frame, [Fraction(float(x)) for x in p])
        model = TangentModel(chart)
    _, upper, _ = _transcribe(frame, p, q, segments=budget.get("segments", 32),
                              restarts=budget.get("restarts", 8), seed=budget.get("seed", 0),
                              model=model, polish=budget.get("polish", 60))
    lower = _lower_bound(model, p, q, constants)
    if lower > upper and model.exact:
        # solver residual left the path a hair short of the exact distance
        lower = upper
    if lower > upper:
        # the fitted slack was too small for this pair: refit and log
        old = (constants.C0, constants.kappa)
        if model is not None and model.has_distance:
            dhat = model.distance(p, q)
            r = _config_radius(model, p, q, dhat)
            constants.kappa = 1.5 * (dhat - upper) / (r ** (1.0 / model.s) * dhat)
        else:
            constants.C0 = 1.5 * model.quasinorm(p, q) / upper if model else constants.C0 * 1.5
        constants.events.append({"event": "refit", "old": old,
                                 "new": (constants.C0, constants.kappa)})
        log.info("lower bound exceeded upper; refitted constants %s -> %s", old,
                 (constants.C0, constants.kappa))
        lower = _lower_bound(model, p, q, constants)
    return lower, upper


def _config_radius(model, p, q, dhat):
    return max(model.radius(p), model.radius(q), dhat)


def _lower_bound(model, p, q, constants):
    if model is None:
        return 0.0
    if model.has_distance:
        dhat = model.distance(p, q)
        if model.exact:
            return dhat * (1 - 1e-9)
        r = _config_radius(model, p, q, dhat)
        return max(0.0, dhat * (1 - constants.kappa * r ** (1.0 / model.s)))
    return model.quasinorm(p, q) / constants.C0


def fit_constants(frame: Frame, p, radius=0.25, samples=12, seed=0, budget=None,
                  chart: PrivilegedChart | None = None) -> EstimateConstants:
    """Fit C0 and kappa from sampled targets around p (valid on the sample only)."""
    model = TangentModel(chart if chart is not None else privileged_coordinates(frame, p))
    rng = np.random.default_rng(seed)
    budget = dict(budget or {"segments": 16, "restarts": 2})
    p_f = np.array([float(x) for x in model.chart.base_point])
    ratios_qn, kappas = [], []
    w = np.array(model.chart.weights, dtype=float)
    for i in range(samples):
        t = rng.normal(size=len(w))
        t /= np.sum(np.abs(t) ** (1 / w))
        rho = radius * 2.0 ** (-(i % 4))
        q = model.chart.from_chart(t * rho ** w)
        _, upper, _ = _transcribe(frame, p_f, q, segments=budget["segments"],
                                  restarts=budget["restarts"], seed=seed + i, model=model)
        qn = model.quasinorm(p_f, q)
        ratios_qn.append(max(qn / upper, upper / qn))
        if model.has_distance:
            dhat = model.distance(p_f, q)
            r = _config_radius(model, p_f, q, dhat)
            kappas.append(max(0.0, (dhat - upper) / (r ** (1.0 / model.s) * dhat)))
    out = EstimateConstants()
    out.C0 = 1.25 * max(ratios_qn)
    out.L0 = radius
    out.fitted.update({"C0": True, "L0": True})
    if kappas:
        out.kappa = 1.5 * max(kappas) + 0.05
        out.fitted["kappa"] = True
    return out


# ---------------------------------------------------------------------------
# defect experiments


def default_loop(rank):
    """Unit-speed loop closing in every step-2 Carnot group: for rank >= 4 a
    positive square in the (e1, e2) plane then a negative one in (e3, e4);
    for rank 2 or 3 a positive square followed by a mirrored negative one."""
    e = np.eye(rank)
    if rank >= 4:
        vals = [e[0], e[1], -e[0], -e[1], e[3], e[2], -e[3], -e[2]]
    else:
        vals = [e[0], e[1], -e[0], -e[1], -e[0], e[1], e[0], -e[1]]
    return ControlSignal(np.ones(len(vals)), np.array(vals))


@dataclass
class DefectTable:
    rows: list
    slope: float
    s: int
    constants: dict

    def ratios(self):
        return [r["ratio"] for r in self.rows]

    def to_json(self):
        return {"rows": self.rows, "loglog_slope": self.slope, "s": self.s,
                "expected_slope": 1 + 1 / self.s, "constants": self.constants}

    def to_csv(self):
        keys = ["scale", "length", "defect_lo", "defect_hi", "ratio"]
        lines = [",".join(keys)]
        lines += [",".join(repr(float(r[k])) for k in keys) for r in self.rows]
        return "\n".join(lines) + "\n"


def loglog_slope(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def bounded_across_scales(ratios, discard=2, factor=2.0):
    """max <= factor * min after dropping the ``discard`` coarsest scales."""
    r = np.asarray(ratios, dtype=float)[discard:]
    if r.size == 0 or np.any(~np.isfinite(r)):
        return False
    if np.all(r == 0):
        return True
    return bool(r.min() > 0 and r.max() <= factor * r.min())


def closed_loop_defect(frame: Frame, group: CarnotGroup, p, loop: ControlSignal | None = None,
                       scales=None, budget=None, constants=None, step=None):
    """Run dilated copies of a group-closed loop in the manifold frame and
    bracket d_M(gamma(0), gamma(1)) at each scale."""
    if loop is None:
        loop = default_loop(group.rank)
    if scales is None:
        scales = [2.0 ** -k for k in range(1, 7)]
    gap = group.endpoint(loop)
    if np.max(np.abs(gap)) > 1e-9 * max(1.0, loop.length()):
        raise LoopNotClosed(f"loop ends at {gap.tolist()} in the group")
    chart = privileged_coordinates(frame, p)
    model = TangentModel(chart)
    s = chart.step
    p_f = np.array([float(x) for x in chart.base_point])
    constants = constants or EstimateConstants()
    budget = dict(budget or {"segments": 16, "restarts": 3})
    rows = []
    for lam in scales:
        u = loop.scaled(lam)
        curve = integrate_controls(frame, p_f, u, step=step)
        end = curve.endpoint
        length = u.length()
        sep = float(np.max(np.abs(end - p_f)))
        if sep <= max(10 * curve.error_estimate, 1e-14 * max(1.0, length)):
            lo, hi = 0.0, 0.0
        else:
            lo, hi = cc_distance_bounds(frame, p_f, end, constants=constants,
                                        budget=budget, model=model)
        rows.append({"scale": lam, "length": length, "defect_lo": lo, "defect_hi": hi,
                     "ratio": hi / length ** (1 + 1 / s),
                     "integrator_error": curve.error_estimate})
    slope = loglog_slope([r["length"] for r in rows], [r["defect_hi"] for r in rows])
    return DefectTable(rows, slope, s, constants.to_json())


def transfer_defect(frameM: Frame, group: CarnotGroup, q, u1: ControlSignal, u2: ControlSignal,
                    constants=None, budget=None, model: TangentModel | None = None, step=None):
    """Interval for |d_X(gamma1(1), gamma2(1)) - d_Y(lambda1(1), lambda2(1))|.

    gamma_i run from q in the manifold frame, lambda_i from the identity in
    the group; both driven by the same controls.
    """
    if model is None:
        model = TangentModel.at(frameM, q)
    q_f = np.array([float(x) for x in q])
    constants = constants or EstimateConstants()
    budget = dict(budget or {"segments": 16, "restarts": 3})
    g1, g2 = integrate_controls(frameM, q_f, u1, step), integrate_controls(frameM, q_f, u2, step)
    l1, l2 = group.endpoint(u1), group.endpoint(u2)
    if group.is_heisenberg_type:
        dy = float(group.distance(l1, l2))
        dy_lo, dy_hi = dy * (1 - 1e-9), dy * (1 + 1e-9)
    else:
        dy_lo, dy_hi = group.distance_bounds(l1, l2)
    dx_lo, dx_hi = cc_distance_bounds(frameM, g1.endpoint, g2.endpoint, constants=constants,
                                      budget=budget, model=model)
    lo = max(0.0, dx_lo - dy_hi, dy_lo - dx_hi)
    hi = max(dx_hi - dy_lo, dy_hi - dx_lo)
    total = u1.length() + u2.length()
    s = model.s
    return {"defect_lo": lo, "defect_hi": hi, "dX": (dx_lo, dx_hi), "dY": (dy_lo, dy_hi),
            "length": total, "ratio": hi / total ** (1 + 1 / s) if total > 0 else 0.0}
