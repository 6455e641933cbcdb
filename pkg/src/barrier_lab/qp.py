"""Optimization-based controllers: small active-set QP solver and fast paths.

Every controller here minimizes (1/2)||u||^2_W (+ (1/2) p delta^2 when a
relaxed row exists) subject to affine rows in u:

    cbf rows:          a(x)^T u + c(x) >= 0
    clf-relaxed rows:  a(x)^T u + c(x) - r delta <= 0
    custom rows:       a(x)^T u + c(x) <= 0

with a = g^T grad and c the drift term of the directional derivative plus the
class-K margin, i.e. F_h(x) = grad_h^T f + alpha(h) for cbf rows and
F_V(x) = grad_v^T f + beta(V) for clf rows. Multipliers of >=-rows enter
stationarity with a minus sign: W u + sum_i lambda_i s_i a_i = 0, s_i = +1
for <=-rows and -1 for >=-rows.

Closed-form fast paths (safety filter, CLF-CBF QP, unfiltered CLF control)
are vectorized over leading state axes; the generic solver handles one state
at a time and serves as the oracle the fast paths are tested against.
"""

import itertools
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (DefinitenessError, InfeasibleProblemError, InvalidParameterError,
                     StrictFeasibilityError, StructuralError)
from .model import BarrierPair, LyapunovPair, SystemModel, dot, identity_weight, matvec

MAX_ROWS = 12
FEAS_TOL = 1e-9          # row satisfaction at the returned point
DUAL_TOL = 1e-12         # multipliers may undershoot zero by this much
WEAK_ACTIVE_TOL = 1e-10  # inactive rows must have multiplier below this
SYMMETRY_TOL = 1e-12
TANGENCY_TOL = 1e-8      # |grad_h^T f + alpha(h)| below this marks a tangency
NORMAL_MIN = 1e-8        # required ||g^T grad_h|| at tangency samples
DEGENERATE_NORM = 1e-12  # explicit-law denominator floor when the row binds

Weight = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ConstraintRow:
    """One affine row; kind fixes the inequality sense and delta coupling."""

    kind: str
    normal: Callable[[np.ndarray], np.ndarray]
    offset: Callable[[np.ndarray], np.ndarray]
    relax_coeff: float = 0.0

    def __post_init__(self):
        if self.kind not in ("clf-relaxed", "cbf", "custom"):
            raise InvalidParameterError("unknown row kind %r" % (self.kind,))
        if self.kind == "cbf" and self.relax_coeff != 0.0:
            raise InvalidParameterError("cbf rows admit no relaxation")

    @property
    def sense(self) -> float:
        """+1 for <=-rows, -1 for >=-rows."""
        return -1.0 if self.kind == "cbf" else 1.0


@dataclass(frozen=True)
class QpProblem:
    """Weighted min-norm QP with affine rows; weight and rows are evaluators."""

    weight: Weight
    penalty: Optional[float]
    rows: Tuple[ConstraintRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        relaxed = any(row.relax_coeff != 0.0 for row in self.rows)
        if relaxed and (self.penalty is None or float(self.penalty) <= 0.0):
            raise InvalidParameterError("a relaxed row requires penalty p > 0")
        if self.penalty is not None and float(self.penalty) <= 0.0:
            raise InvalidParameterError("penalty must be positive, got %r" % (self.penalty,))

    @property
    def relaxed(self) -> bool:
        return self.penalty is not None


@dataclass(frozen=True)
class KktPoint:
    """Primal/dual solution of one QP evaluation."""

    u: np.ndarray
    delta: float
    multipliers: Tuple[float, ...]
    active_set: Tuple[int, ...]
    stationarity_residual: float


def _checked_weight(problem_weight: Weight, x: np.ndarray) -> np.ndarray:
    w = np.asarray(problem_weight(x), dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise StructuralError("weight evaluator returned shape %s" % (w.shape,))
    if float(np.max(np.abs(w - w.T))) > SYMMETRY_TOL:
        raise DefinitenessError("weight matrix is not symmetric within %g" % SYMMETRY_TOL)
    try:
        np.linalg.cholesky(w)
    except np.linalg.LinAlgError:
        raise DefinitenessError("weight matrix is not positive definite")
    return w


def solve_small_qp(problem: QpProblem, x: np.ndarray) -> KktPoint:
    """Global minimizer of the strongly convex QP by active-subset enumeration.

    Subsets are tried by increasing cardinality (lexicographic within equal
    cardinality); the first candidate with nonnegative multipliers that
    satisfies every row is the unique minimizer. Singular subset systems are
    skipped. No subset certifying means the rows are inconsistent at x.
    """
    x = np.asarray(x, dtype=float)
    if len(problem.rows) > MAX_ROWS:
        raise InvalidParameterError("solver accepts at most %d rows, got %d" % (MAX_ROWS, len(problem.rows)))
    w = _checked_weight(problem.weight, x)
    m = w.shape[0]
    has_delta = problem.relaxed
    nz = m + 1 if has_delta else m

    hess = np.zeros((nz, nz))
    hess[:m, :m] = w
    if has_delta:
        hess[m, m] = float(problem.penalty)

    normals: List[np.ndarray] = []
    offsets: List[float] = []
    senses: List[float] = []
    for row in problem.rows:
        a = np.asarray(row.normal(x), dtype=float)
        if a.shape != (m,):
            raise StructuralError("row normal has shape %s, expected (%d,)" % (a.shape, m))
        tilde = np.concatenate([a, [-row.relax_coeff]]) if has_delta else a
        normals.append(tilde)
        offsets.append(float(row.offset(x)))
        senses.append(row.sense)

    k = len(problem.rows)

    def residuals(z: np.ndarray) -> np.ndarray:
        # signed slack s_i (a_i z + c_i); feasible where <= FEAS_TOL
        return np.array([senses[i] * (normals[i] @ z + offsets[i]) for i in range(k)])

    for card in range(k + 1):
        for subset in itertools.combinations(range(k), card):
            if card == 0:
                z = np.zeros(nz)
                lam_subset = np.zeros(0)
            else:
                size = nz + card
                system = np.zeros((size, size))
                rhs = np.zeros(size)
                system[:nz, :nz] = hess
                for j, i in enumerate(subset):
                    system[:nz, nz + j] = senses[i] * normals[i]
                    system[nz + j, :nz] = normals[i]
                    rhs[nz + j] = -offsets[i]
                try:
                    sol = np.linalg.solve(system, rhs)
                except np.linalg.LinAlgError:
                    continue
                z = sol[:nz]
                lam_subset = sol[nz:]
            if lam_subset.size and float(np.min(lam_subset)) < -DUAL_TOL:
                continue
            if k and float(np.max(residuals(z))) > FEAS_TOL:
                continue
            multipliers = np.zeros(k)
            for j, i in enumerate(subset):
                multipliers[i] = max(0.0, float(lam_subset[j]))
            grad = hess @ z
            for i in subset:
                grad = grad + multipliers[i] * senses[i] * normals[i]
            return KktPoint(
                u=z[:m].copy(),
                delta=float(z[m]) if has_delta else 0.0,
                multipliers=tuple(multipliers.tolist()),
                active_set=tuple(subset),
                stationarity_residual=float(np.max(np.abs(grad))) if nz else 0.0,
            )

    viol = [max(0.0, senses[i] * offsets[i]) for i in range(k)]
    worst = int(np.argmax(viol))
    raise InfeasibleProblemError("no active subset certifies; rows inconsistent at the given state",
                                 row=worst, violation=viol[worst])


def certificate_errors(problem: QpProblem, x: np.ndarray, point: KktPoint) -> dict:
    """Stationarity / feasibility / dual / complementarity residuals at a point."""
    x = np.asarray(x, dtype=float)
    w = _checked_weight(problem.weight, x)
    m = w.shape[0]
    has_delta = problem.relaxed
    grad_u = w @ np.asarray(point.u, dtype=float)
    grad_d = (float(problem.penalty) * point.delta) if has_delta else 0.0
    worst_primal = 0.0
    worst_comp = 0.0
    for row, lam in zip(problem.rows, point.multipliers):
        a = np.asarray(row.normal(x), dtype=float)
        value = float(a @ point.u + float(row.offset(x)) - row.relax_coeff * point.delta)
        worst_primal = max(worst_primal, row.sense * value)
        worst_comp = max(worst_comp, abs(lam * value))
        grad_u = grad_u + lam * row.sense * a
        grad_d = grad_d + lam * row.sense * (-row.relax_coeff)
    stationarity = float(np.max(np.abs(grad_u)))
    if has_delta:
        stationarity = max(stationarity, abs(grad_d))
    return {
        "stationarity": stationarity,
        "primal": worst_primal,
        "dual": -min(0.0, min(point.multipliers, default=0.0)),
        "complementarity": worst_comp,
    }


def _weight_or_identity(weight: Optional[Weight], m: int) -> Weight:
    return identity_weight(m) if weight is None else weight


def _apply_inverse(w: np.ndarray, vec: np.ndarray) -> np.ndarray:
    # batched W^{-1} vec over trailing axes; the identity check is exact, so
    # skipping the LU solve cannot move any value
    m = w.shape[-1]
    if w.shape[-2] == m and np.array_equal(w, np.broadcast_to(np.eye(m), w.shape)):
        return np.asarray(vec, dtype=float)
    return np.linalg.solve(w, vec[..., None])[..., 0]


def safety_filter_problem(model: SystemModel, pair: BarrierPair,
                          weight: Optional[Weight] = None) -> QpProblem:
    """QP form of the safety filter; one cbf row, no relaxation.

    The stored objective weight is 2 G so the row multiplier comes out as
    lambda = max(0, -2 eta / ||g^T grad_h||^2_{G^{-1}}); the minimizer itself
    is invariant to that scaling and equals the explicit filter law.
    """
    base = _weight_or_identity(weight, model.m)

    def doubled(x):
        return 2.0 * np.asarray(base(x), dtype=float)

    def normal(x):
        return matvec(np.swapaxes(model.g(x), -1, -2), pair.grad_h(x))

    def offset(x):
        return dot(pair.grad_h(x), model.drift(x)) + pair.alpha(pair.h(x))

    row = ConstraintRow(kind="cbf", normal=normal, offset=offset, relax_coeff=0.0)
    return QpProblem(weight=doubled, penalty=None, rows=(row,))


def safety_filter(model: SystemModel, pair: BarrierPair, weight: Optional[Weight],
                  x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Explicit safety-filter law; returns (u, eta), batched over states.

    eta(x) = grad_h^T (f + g k) + alpha(h); u = 0 where eta >= 0, otherwise
    u = -eta G^{-1} g^T grad_h / ||g^T grad_h||^2_{G^{-1}}.
    """
    x = np.asarray(x, dtype=float)
    weight = _weight_or_identity(weight, model.m)
    grad = pair.grad_h(x)
    eta = np.asarray(dot(grad, model.drift(x)) + pair.alpha(pair.h(x)), dtype=float)
    a = matvec(np.swapaxes(model.g(x), -1, -2), grad)
    winv_a = _apply_inverse(np.asarray(weight(x), dtype=float), a)
    den = dot(a, winv_a)
    active = eta < 0.0
    degenerate = active & (den <= DEGENERATE_NORM ** 2)
    if x.ndim == 1:
        if bool(degenerate):
            raise StrictFeasibilityError("eta < 0 with ||g^T grad_h|| ~ 0: the cbf row cannot be met")
        u = np.zeros(model.m) if not active else -eta * winv_a / den
        return u, eta
    safe_den = np.where(active & ~degenerate, den, 1.0)
    u = np.where(active[..., None], -eta[..., None] * winv_a / safe_den[..., None], 0.0)
    u = np.where(degenerate[..., None], np.nan, u)
    return u, eta


def safety_filter_point(model: SystemModel, pair: BarrierPair, weight: Optional[Weight],
                        x: np.ndarray) -> KktPoint:
    """Safety filter at one state as a KktPoint matching safety_filter_problem."""
    x = np.asarray(x, dtype=float)
    u, eta = safety_filter(model, pair, weight, x)
    eta = float(eta)
    if eta >= 0.0:
        return KktPoint(u=u, delta=0.0, multipliers=(0.0,), active_set=(), stationarity_residual=0.0)
    weight = _weight_or_identity(weight, model.m)
    a = matvec(np.swapaxes(model.g(x), -1, -2), pair.grad_h(x))
    den = float(dot(a, _apply_inverse(np.asarray(weight(x), dtype=float), a)))
    lam = max(0.0, -2.0 * eta / den)
    residual = float(np.max(np.abs(2.0 * np.asarray(weight(x), dtype=float) @ u - lam * a)))
    return KktPoint(u=u, delta=0.0, multipliers=(lam,), active_set=(0,), stationarity_residual=residual)


def clf_cbf_problem(model: SystemModel, cbf: BarrierPair, clf: LyapunovPair,
                    weight: Optional[Weight] = None, p: float = 1.0) -> QpProblem:
    """QP with one relaxed clf row (index 0) and one cbf row (index 1)."""
    p = float(p)
    if p <= 0.0:
        raise InvalidParameterError("penalty p must be positive, got %g" % p)
    weight = _weight_or_identity(weight, model.m)

    def clf_normal(x):
        return matvec(np.swapaxes(model.g(x), -1, -2), clf.grad_v(x))

    def clf_offset(x):
        return dot(clf.grad_v(x), model.f(x)) + clf.beta(clf.v(x))

    def cbf_normal(x):
        return matvec(np.swapaxes(model.g(x), -1, -2), cbf.grad_h(x))

    def cbf_offset(x):
        return dot(cbf.grad_h(x), model.f(x)) + cbf.alpha(cbf.h(x))

    rows = (
        ConstraintRow(kind="clf-relaxed", normal=clf_normal, offset=clf_offset, relax_coeff=1.0),
        ConstraintRow(kind="cbf", normal=cbf_normal, offset=cbf_offset, relax_coeff=0.0),
    )
    return QpProblem(weight=weight, penalty=p, rows=rows)


def clf_problem(model: SystemModel, clf: LyapunovPair,
                weight: Optional[Weight] = None, p: float = 1.0) -> QpProblem:
    """The clf_cbf_problem with the cbf row deleted (unfiltered controller)."""
    full = clf_cbf_problem(model, _DUMMY_PAIR, clf, weight=weight, p=p)
    return QpProblem(weight=full.weight, penalty=full.penalty, rows=(full.rows[0],))


def _dummy_scalar(x):
    x = np.asarray(x, dtype=float)
    return np.zeros(x.shape[:-1])


_DUMMY_PAIR = BarrierPair(h=_dummy_scalar,
                          grad_h=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                          hess_h=lambda x: np.zeros(np.asarray(x).shape[:-1] + (np.asarray(x).shape[-1],) * 2),
                          alpha=lambda s: np.asarray(s, dtype=float),
                          alpha_prime=lambda s: np.ones_like(np.asarray(s, dtype=float)))


def _clf_cbf_fields(model: SystemModel, cbf: Optional[BarrierPair], clf: LyapunovPair,
                    weight: Weight, x: np.ndarray) -> dict:
    """Shared geometric quantities of the CLF(-CBF) controllers at x (batched)."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(model.g(x), dtype=float)
    gt = np.swapaxes(g, -1, -2)
    w = np.asarray(weight(x), dtype=float)
    grad_v = np.asarray(clf.grad_v(x), dtype=float)
    av = matvec(gt, grad_v)
    winv_av = _apply_inverse(w, av)
    data = {
        "f": np.asarray(model.f(x), dtype=float),
        "g": g,
        "w": w,
        "grad_v": grad_v,
        "av": av,
        "winv_av": winv_av,
        "fv": np.asarray(dot(grad_v, model.f(x)) + clf.beta(clf.v(x)), dtype=float),
        "vdv": dot(av, winv_av),   # ||grad_v||_D^2
    }
    if cbf is not None:
        grad_h = np.asarray(cbf.grad_h(x), dtype=float)
        ah = matvec(gt, grad_h)
        winv_ah = _apply_inverse(w, ah)
        data.update({
            "grad_h": grad_h,
            "ah": ah,
            "winv_ah": winv_ah,
            "fh": np.asarray(dot(grad_h, data["f"]) + cbf.alpha(cbf.h(x)), dtype=float),
            "hdh": dot(ah, winv_ah),          # ||grad_h||_D^2
            "vdh": dot(av, winv_ah),          # grad_v^T D grad_h
        })
    return data


def _clf_cbf_solution(data: dict, p: float):
    """Four-case active-set selection, vectorized; mirrors solve_small_qp.

    Case order (empty; clf; cbf; both) matches the solver's subset order, so
    borderline states resolve identically. Returns (u, delta, lam1, lam2,
    code) with code 0/1/2/3 for the four cases and -1 where no case holds
    (cbf row unsatisfiable: g^T grad_h = 0 with F_h < 0).
    """
    fv, fh = data["fv"], data["fh"]
    a = data["vdv"] + 1.0 / p
    bb = data["vdh"]
    c = data["hdh"]

    cond_empty = (fv <= FEAS_TOL) & (fh >= -FEAS_TOL)
    lam1_clf = fv / a
    cond_clf = (lam1_clf >= -DUAL_TOL) & (fh - lam1_clf * bb >= -FEAS_TOL)
    pos_c = c > 0.0
    lam2_cbf = np.where(pos_c, -fh / np.where(pos_c, c, 1.0), 0.0)
    cond_cbf = pos_c & (lam2_cbf >= -DUAL_TOL) & (fv + lam2_cbf * bb <= FEAS_TOL)
    det = a * c - bb * bb
    pos_det = det > 0.0
    safe_det = np.where(pos_det, det, 1.0)
    lam1_both = (fv * c - fh * bb) / safe_det
    lam2_both = (fv * bb - fh * a) / safe_det
    cond_both = pos_det & (lam1_both >= -DUAL_TOL) & (lam2_both >= -DUAL_TOL)

    # nested where keeps np.select's first-true-wins order at stepping cost
    code = np.where(cond_empty, 0,
           np.where(cond_clf, 1,
           np.where(cond_cbf, 2,
           np.where(cond_both, 3, -1))))
    lam1 = np.where(cond_empty, 0.0,
           np.where(cond_clf, lam1_clf,
           np.where(cond_cbf, 0.0,
           np.where(cond_both, lam1_both, np.nan))))
    lam2 = np.where(cond_empty, 0.0,
           np.where(cond_clf, 0.0,
           np.where(cond_cbf, lam2_cbf,
           np.where(cond_both, lam2_both, np.nan))))
    u = -lam1[..., None] * data["winv_av"] + lam2[..., None] * data["winv_ah"]
    delta = lam1 / p
    return u, delta, lam1, lam2, code


def clf_cbf_control(model: SystemModel, cbf: BarrierPair, clf: LyapunovPair,
                    weight: Optional[Weight], p: float, x: np.ndarray):
    """Batched CLF-CBF controller; returns (u, delta, lam1, lam2, code)."""
    weight = _weight_or_identity(weight, model.m)
    data = _clf_cbf_fields(model, cbf, clf, weight, x)
    return _clf_cbf_solution(data, float(p))


def clf_cbf_qp(model: SystemModel, cbf: BarrierPair, clf: LyapunovPair,
               weight: Optional[Weight], p: float, x: np.ndarray) -> KktPoint:
    """Closed-form CLF-CBF QP at one state; matches solve_small_qp on clf_cbf_problem."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidParameterError("clf_cbf_qp takes a single state; use clf_cbf_control for batches")
    p = float(p)
    if p <= 0.0:
        raise InvalidParameterError("penalty p must be positive, got %g" % p)
    weight = _weight_or_identity(weight, model.m)
    data = _clf_cbf_fields(model, cbf, clf, weight, x)
    u, delta, lam1, lam2, code = _clf_cbf_solution(data, p)
    code = int(code)
    if code < 0:
        raise InfeasibleProblemError("cbf row unsatisfiable: g^T grad_h = 0 with F_h < 0 at this state",
                                     row=1, violation=float(-data["fh"]))
    lam1 = max(0.0, float(lam1))
    lam2 = max(0.0, float(lam2))
    active = {0: (), 1: (0,), 2: (1,), 3: (0, 1)}[code]
    grad_u = data["w"] @ u + lam1 * data["av"] - lam2 * data["ah"]
    grad_d = p * float(delta) - lam1
    residual = max(float(np.max(np.abs(grad_u))), abs(grad_d))
    return KktPoint(u=u, delta=float(delta), multipliers=(lam1, lam2),
                    active_set=active, stationarity_residual=residual)


def unfiltered_control(model: SystemModel, clf: LyapunovPair, weight: Optional[Weight],
                       p: float, x: np.ndarray) -> KktPoint:
    """Min-norm CLF controller (no cbf row) at one state.

    u = -lam1 G^{-1} g^T grad_v with lam1 = max(0, F_V / (||grad_v||_D^2 + 1/p)).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidParameterError("unfiltered_control takes a single state")
    p = float(p)
    if p <= 0.0:
        raise InvalidParameterError("penalty p must be positive, got %g" % p)
    weight = _weight_or_identity(weight, model.m)
    data = _clf_cbf_fields(model, None, clf, weight, x)
    fv = float(data["fv"])
    a = float(data["vdv"]) + 1.0 / p
    if fv <= 0.0:
        return KktPoint(u=np.zeros(model.m), delta=0.0, multipliers=(0.0,), active_set=(),
                        stationarity_residual=0.0)
    lam1 = fv / a
    u = -lam1 * data["winv_av"]
    delta = lam1 / p
    grad_u = data["w"] @ u + lam1 * data["av"]
    residual = max(float(np.max(np.abs(grad_u))), abs(p * delta - lam1))
    return KktPoint(u=u, delta=delta, multipliers=(lam1,), active_set=(0,),
                    stationarity_residual=residual)


def unfiltered_control_batch(model: SystemModel, clf: LyapunovPair, weight: Optional[Weight],
                             p: float, x: np.ndarray):
    """Batched unfiltered CLF controller; returns (u, delta, lam1)."""
    weight = _weight_or_identity(weight, model.m)
    data = _clf_cbf_fields(model, None, clf, weight, x)
    a = data["vdv"] + 1.0 / float(p)
    # exact threshold: the explicit law switches at F_V = 0, unlike the
    # four-case solver mirror which carries the solver's feasibility slack
    lam1 = np.where(data["fv"] <= 0.0, 0.0, data["fv"] / a)
    u = -lam1[..., None] * data["winv_av"]
    return u, lam1 / float(p), lam1


@dataclass(frozen=True)
class FeasibilityViolation:
    index: int
    state: np.ndarray
    offset_value: float
    normal_norm: float


@dataclass(frozen=True)
class FeasibilityReport:
    """Tangency audit of the strict-feasibility condition for one barrier."""

    checked: int
    tangency_count: int
    violations: Tuple[FeasibilityViolation, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def check_strict_feasibility(model: SystemModel, pair: BarrierPair,
                             samples: Sequence[np.ndarray]) -> FeasibilityReport:
    """Where grad_h^T f + alpha(h) vanishes, ||g^T grad_h|| must not.

    Samples with |grad_h^T f + alpha(h)| < 1e-8 are the states where the cbf
    row binds with u = 0; at each of them ||g^T grad_h|| > 1e-8 is required
    for the row to be strictly satisfiable.
    """
    samples = [np.asarray(s, dtype=float) for s in samples]
    if not samples:
        raise InvalidParameterError("feasibility check needs a nonempty sample set")
    violations = []
    tangencies = 0
    for idx, x in enumerate(samples):
        offset = float(dot(pair.grad_h(x), model.f(x)) + pair.alpha(pair.h(x)))
        if abs(offset) >= TANGENCY_TOL:
            continue
        tangencies += 1
        a = matvec(np.swapaxes(model.g(x), -1, -2), pair.grad_h(x))
        norm = float(np.linalg.norm(a))
        if norm <= NORMAL_MIN:
            violations.append(FeasibilityViolation(index=idx, state=x, offset_value=offset,
                                                   normal_norm=norm))
    return FeasibilityReport(checked=len(samples), tangency_count=tangencies,
                             violations=tuple(violations))


class SafetyFilterController:
    """Nominal closed loop f + g k wrapped by the explicit safety filter."""

    kind = "safety-filter"

    def __init__(self, model: SystemModel, pair: BarrierPair, weight: Optional[Weight] = None):
        if model.k is None:
            raise StructuralError("the safety filter needs a nominal controller k")
        self.model = model
        self.pair = pair
        self.weight = _weight_or_identity(weight, model.m)
        self.cbf_pairs: Tuple[BarrierPair, ...] = (pair,)

    def control(self, x: np.ndarray) -> np.ndarray:
        return safety_filter(self.model, self.pair, self.weight, x)[0]

    def eta(self, x: np.ndarray) -> np.ndarray:
        return safety_filter(self.model, self.pair, self.weight, x)[1]

    def field(self, x: np.ndarray) -> np.ndarray:
        u, _ = safety_filter(self.model, self.pair, self.weight, x)
        return self.model.drift(x) + matvec(self.model.g(x), u)

    def unfiltered_field(self, x: np.ndarray) -> np.ndarray:
        return self.model.drift(x)

    def active_code(self, x: np.ndarray) -> np.ndarray:
        _, eta = safety_filter(self.model, self.pair, self.weight, x)
        return np.where(np.asarray(eta) < 0.0, 2, 0)

    def multipliers(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        grad = self.pair.grad_h(x)
        eta = np.asarray(dot(grad, self.model.drift(x)) + self.pair.alpha(self.pair.h(x)), dtype=float)
        a = matvec(np.swapaxes(self.model.g(x), -1, -2), grad)
        den = dot(a, _apply_inverse(np.asarray(self.weight(x), dtype=float), a))
        lam = np.where(eta < 0.0, -2.0 * eta / np.where(den > 0.0, den, 1.0), 0.0)
        return np.maximum(lam, 0.0)[..., None]

    def problem(self) -> QpProblem:
        return safety_filter_problem(self.model, self.pair, self.weight)

    def point(self, x: np.ndarray) -> KktPoint:
        return safety_filter_point(self.model, self.pair, self.weight, x)


class ClfCbfController:
    """CLF-CBF QP controller on the raw plant (no nominal k)."""

    kind = "clf-cbf-qp"

    def __init__(self, model: SystemModel, cbf: BarrierPair, clf: LyapunovPair,
                 weight: Optional[Weight] = None, p: float = 1.0):
        self.model = model
        self.pair = cbf
        self.clf = clf
        self.weight = _weight_or_identity(weight, model.m)
        self.p = float(p)
        if self.p <= 0.0:
            raise InvalidParameterError("penalty p must be positive, got %g" % self.p)
        self.cbf_pairs: Tuple[BarrierPair, ...] = (cbf,)

    def control(self, x: np.ndarray) -> np.ndarray:
        u, _, _, _, code = clf_cbf_control(self.model, self.pair, self.clf, self.weight, self.p, x)
        return np.where(np.asarray(code)[..., None] < 0, np.nan, u)

    def field(self, x: np.ndarray) -> np.ndarray:
        return self.model.f(x) + matvec(self.model.g(x), self.control(x))

    def unfiltered_field(self, x: np.ndarray) -> np.ndarray:
        u, _, _ = unfiltered_control_batch(self.model, self.clf, self.weight, self.p, x)
        return self.model.f(x) + matvec(self.model.g(x), u)

    def active_code(self, x: np.ndarray) -> np.ndarray:
        _, _, lam1, lam2, code = clf_cbf_control(self.model, self.pair, self.clf, self.weight, self.p, x)
        out = (np.asarray(lam1) > 0.0).astype(int) + 2 * (np.asarray(lam2) > 0.0).astype(int)
        return np.where(np.asarray(code) < 0, -1, out)

    def multipliers(self, x: np.ndarray) -> np.ndarray:
        _, _, lam1, lam2, _ = clf_cbf_control(self.model, self.pair, self.clf, self.weight, self.p, x)
        return np.stack([np.maximum(lam1, 0.0), np.maximum(lam2, 0.0)], axis=-1)

    def problem(self) -> QpProblem:
        return clf_cbf_problem(self.model, self.pair, self.clf, self.weight, self.p)

    def point(self, x: np.ndarray) -> KktPoint:
        return clf_cbf_qp(self.model, self.pair, self.clf, self.weight, self.p, x)


class ClfController:
    """Unfiltered min-norm CLF controller (the clf-cbf QP without its cbf row)."""

    kind = "clf"

    def __init__(self, model: SystemModel, clf: LyapunovPair,
                 weight: Optional[Weight] = None, p: float = 1.0):
        self.model = model
        self.clf = clf
        self.weight = _weight_or_identity(weight, model.m)
        self.p = float(p)
        if self.p <= 0.0:
            raise InvalidParameterError("penalty p must be positive, got %g" % self.p)
        self.cbf_pairs: Tuple[BarrierPair, ...] = ()

    def control(self, x: np.ndarray) -> np.ndarray:
        return unfiltered_control_batch(self.model, self.clf, self.weight, self.p, x)[0]

    def field(self, x: np.ndarray) -> np.ndarray:
        return self.model.f(x) + matvec(self.model.g(x), self.control(x))

    def unfiltered_field(self, x: np.ndarray) -> np.ndarray:
        return self.field(x)

    def active_code(self, x: np.ndarray) -> np.ndarray:
        _, _, lam1 = unfiltered_control_batch(self.model, self.clf, self.weight, self.p, x)
        return (np.asarray(lam1) > 0.0).astype(int)

    def multipliers(self, x: np.ndarray) -> np.ndarray:
        _, _, lam1 = unfiltered_control_batch(self.model, self.clf, self.weight, self.p, x)
        return np.maximum(lam1, 0.0)[..., None]

    def problem(self) -> QpProblem:
        return clf_problem(self.model, self.clf, self.weight, self.p)

    def point(self, x: np.ndarray) -> KktPoint:
        return unfiltered_control(self.model, self.clf, self.weight, self.p, x)


class NominalClosedLoop:
    """The nominal closed loop f + g k with no optimization in the loop."""

    kind = "nominal"

    def __init__(self, model: SystemModel):
        if model.k is None:
            raise StructuralError("nominal closed loop needs a controller k on the model")
        self.model = model
        self.cbf_pairs: Tuple[BarrierPair, ...] = ()

    def control(self, x: np.ndarray) -> np.ndarray:
        return self.model.k(x)

    def field(self, x: np.ndarray) -> np.ndarray:
        return self.model.drift(x)

    def unfiltered_field(self, x: np.ndarray) -> np.ndarray:
        return self.model.drift(x)

    def active_code(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1], dtype=int)

    def multipliers(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (0,))
