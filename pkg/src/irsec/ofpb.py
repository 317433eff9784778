"""Operator set and CA-ADMM solver for the orthogonal-forcing phase subproblem.

The fourth-order phase objective
    ||h_a + H1 x* + H2 x + H3 vec(x x^H)||^2 - alpha_b ||h_ab + H4 x||^2
is split consensus-style over (x, y1, y2): y1 carries the quartic term, y2
carries the quadratic forms H5/H6 whose subtraction in x makes the x-block
linear on the unit-modulus torus. The y1 block is minimized through its
Lipschitz quadratic upper bound (convex-approximation step); y2 has a
closed-form solve in the real lifting; x has the elementwise phase solution.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import khatri_rao, lu_factor, lu_solve

from .channel import ChannelSet, PhaseVector


class SolverError(RuntimeError):
    """A subproblem solve failed (e.g. singular y2 system)."""


def vec(a: np.ndarray) -> np.ndarray:
    """Column-major vectorization."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v).reshape((rows, cols), order="F")


@dataclass
class OfpbOperatorSet:
    """Precomputed operators of the vectorized phase objective."""

    h_tilde_a: np.ndarray   # (N_B*N_E,)
    h_pb1: np.ndarray       # (N_B*N_E, N_I)
    h_pb2: np.ndarray       # (N_B*N_E, N_I)
    h_pb3: np.ndarray       # (N_B*N_E, N_I^2)
    h_pb4: np.ndarray       # (N_B*N_A, N_I)
    h_pb5: np.ndarray       # (N_I, N_I), Hermitian
    h_pb6: np.ndarray       # (N_I, N_I)
    h_ab_vec: np.ndarray    # (N_B*N_A,)
    alpha_b: float

    @property
    def n_irs(self):
        return self.h_pb1.shape[1]


def build_operators(chset: ChannelSet, alpha_b: float) -> OfpbOperatorSet:
    """Assemble the vectorization operators from the five link channels.

    h_a  = vec(H_AB H_AE^H)
    H1   = H_IE^* (khatri-rao) (H_AB H_AI^H)
    H2   = (H_AI H_AE^H)^T (khatri-rao) H_IB
    H3   = (H_IE^* kron H_IB) diag(vec(H_AI H_AI^H))
    H4   = H_AI^T (khatri-rao) H_IB
    H6   = H1^H H2
    H5   = (H1^H H1)^* + H2^H H2 - alpha_b H4^H H4
    """
    if alpha_b < 0:
        raise ValueError("alpha_b must be >= 0")
    ab, ae, ai, ib, ie = chset.h_ab, chset.h_ae, chset.h_ai, chset.h_ib, chset.h_ie
    h_tilde_a = vec(ab @ ae.conj().T)
    h_pb1 = khatri_rao(ie.conj(), ab @ ai.conj().T)
    h_pb2 = khatri_rao((ai @ ae.conj().T).T, ib)
    h_pb4 = khatri_rao(ai.T, ib)
    h_pb3 = np.kron(ie.conj(), ib) * vec(ai @ ai.conj().T)[np.newaxis, :]
    h_pb6 = h_pb1.conj().T @ h_pb2
    h_pb5 = ((h_pb1.conj().T @ h_pb1).conj() + h_pb2.conj().T @ h_pb2
             - alpha_b * (h_pb4.conj().T @ h_pb4))
    return OfpbOperatorSet(h_tilde_a=h_tilde_a, h_pb1=h_pb1, h_pb2=h_pb2,
                           h_pb3=h_pb3, h_pb4=h_pb4, h_pb5=h_pb5, h_pb6=h_pb6,
                           h_ab_vec=vec(ab), alpha_b=alpha_b)


def anchor_y(ops: OfpbOperatorSet, x: np.ndarray) -> np.ndarray:
    """a_y = h_a + H1 x^* + H2 x, the quartic term's affine offset at fixed x."""
    return ops.h_tilde_a + ops.h_pb1 @ x.conj() + ops.h_pb2 @ x


def eval_f(ops: OfpbOperatorSet, x: np.ndarray, y1: np.ndarray,
           y2: np.ndarray) -> float:
    """The split objective f(x, y1, y2); real up to a tiny Hermitian-form residue."""
    quart = ops.h_tilde_a + ops.h_pb1 @ x.conj() + ops.h_pb2 @ x \
        + ops.h_pb3 @ vec(np.outer(y1, y1.conj()))
    q_x = x.conj() @ ops.h_pb5 @ x
    q_y2 = y2.conj() @ ops.h_pb5 @ y2
    total = (np.linalg.norm(quart) ** 2
             - ops.alpha_b * np.linalg.norm(ops.h_ab_vec + ops.h_pb4 @ x) ** 2
             - q_x.real - 2.0 * np.real(x @ ops.h_pb6 @ x)
             + q_y2.real + 2.0 * np.real(y2 @ ops.h_pb6 @ y2))
    residue = abs(q_x.imag) + abs(q_y2.imag)
    if residue > 1e-9 * (1.0 + abs(q_x) + abs(q_y2)):
        raise FloatingPointError("Hermitian quadratic form has non-real value")
    return float(total)


# ---------------------------------------------------------------------------
# real lifting of the quartic block
# ---------------------------------------------------------------------------

def real_lift(y: np.ndarray) -> np.ndarray:
    """[Re(y); Im(y)], the real-domain representation of a complex vector."""
    y = np.asarray(y, dtype=complex)
    return np.concatenate([y.real, y.imag])


def lift_to_complex(y_hat: np.ndarray) -> np.ndarray:
    n = len(y_hat) // 2
    return y_hat[:n] + 1j * y_hat[n:]


def _outer_lift(y_hat: np.ndarray) -> np.ndarray:
    # real lift of vec(y y^H): Re part = vec(aa^T + bb^T), Im part = vec(ba^T - ab^T)
    n = len(y_hat) // 2
    a, b = y_hat[:n], y_hat[n:]
    return np.concatenate([vec(np.outer(a, a) + np.outer(b, b)),
                           vec(np.outer(b, a) - np.outer(a, b))])


def lifted_quartic(ops: OfpbOperatorSet, y_hat: np.ndarray,
                   anchor: np.ndarray) -> float:
    """||H3 vec(y y^H) + a_y||^2 evaluated entirely in the real lifting."""
    h3 = ops.h_pb3
    h3_hat = np.block([[h3.real, -h3.imag], [h3.imag, h3.real]])
    return float(np.linalg.norm(h3_hat @ _outer_lift(y_hat) + real_lift(anchor)) ** 2)


def grad_fy(ops: OfpbOperatorSet, y_hat: np.ndarray,
            anchor: np.ndarray) -> np.ndarray:
    """Exact gradient of the lifted quartic at y_hat (real vector of length 2*N_I).

    With g = H3 vec(y y^H) + a_y and S = unvec(H3^H g), the complex-form
    gradient is 2 (S + S^H) y, lifted back to the real domain.
    """
    y = lift_to_complex(y_hat)
    n = len(y)
    g = ops.h_pb3 @ vec(np.outer(y, y.conj())) + anchor
    s = unvec(ops.h_pb3.conj().T @ g, n, n)
    return real_lift(2.0 * (s + s.conj().T) @ y)


def lipschitz_bound_terms(ops: OfpbOperatorSet):
    """The three summands of the curvature bound for the lifted quartic.

    Absolute values are taken entrywise inside the double sums so every
    summand is a nonnegative majorant; the anchor proxy evaluates the affine
    offset at the all-ones phase vector.
    """
    h3 = ops.h_pb3
    h3_hat = np.block([[h3.real, -h3.imag], [h3.imag, h3.real]])
    gram_sum = np.abs(h3_hat.T @ h3_hat).sum()
    ones = np.ones(ops.n_irs)
    anchor_ones = ops.h_tilde_a + ops.h_pb1 @ ones + ops.h_pb2 @ ones
    anchor_term = np.abs(real_lift(anchor_ones)) @ np.abs(h3_hat) @ np.ones(h3_hat.shape[1])
    return 8.0 * gram_sum, 4.0 * gram_sum, 4.0 * anchor_term


def lipschitz_bound(ops: OfpbOperatorSet) -> float:
    """A sufficient Lipschitz constant for the lifted quartic's gradient (c2 = 1)."""
    return float(sum(lipschitz_bound_terms(ops)))


# ---------------------------------------------------------------------------
# solver state and parameters
# ---------------------------------------------------------------------------

@dataclass
class AdmmParams:
    rho1: float = 16.0
    rho2: float = 16.0
    l_y: float = 8.0
    eps1: float = 1e-5
    max_iter: int = 1000

    def __post_init__(self):
        if min(self.rho1, self.rho2, self.l_y) <= 0:
            raise ValueError("rho1, rho2 and l_y must be > 0")
        if not (0 < self.eps1 < 1):
            raise ValueError("eps1 must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class AdmmState:
    x: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    k: int = 0


@dataclass
class ConvergenceTrace:
    """Per-iteration residual/Lagrangian/objective records plus the outcome."""

    residual: list = field(default_factory=list)
    lagrangian: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    ms: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self):
        return len(self.residual)

    def append(self, residual, lagrangian, objective, ms):
        self.residual.append(float(residual))
        self.lagrangian.append(float(lagrangian))
        self.objective.append(float(objective))
        self.ms.append(float(ms))

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("iter,residual,lagrangian,objective,ms\n")
            for i in range(self.iterations):
                fh.write(f"{i + 1},{self.residual[i]!r},{self.lagrangian[i]!r},"
                         f"{self.objective[i]!r},{self.ms[i]:.3f}\n")


# ---------------------------------------------------------------------------
# block updates
# ---------------------------------------------------------------------------

def minimize_linear_torus(c: np.ndarray, x_prev: np.ndarray) -> np.ndarray:
    """argmin Re(c^H x) over |x_n| = 1; zero coefficients keep the previous phase."""
    x = x_prev.copy()
    mask = np.abs(c) > 0
    x[mask] = -c[mask] / np.abs(c[mask])
    return x


def x_linear_coefficient(ops: OfpbOperatorSet, state: AdmmState,
                         params: AdmmParams) -> np.ndarray:
    """c with L(x, y1, y2, lambdas) = Re(c^H x) + const on the torus."""
    u = ops.h_tilde_a + ops.h_pb3 @ vec(np.outer(state.y1, state.y1.conj()))
    return (2.0 * (ops.h_pb1.T @ u.conj())
            + 2.0 * (ops.h_pb2.conj().T @ u)
            - 2.0 * ops.alpha_b * (ops.h_pb4.conj().T @ ops.h_ab_vec)
            - state.lambda1 - state.lambda2
            - params.rho1 * state.y1 - params.rho2 * state.y2)


def update_x(ops: OfpbOperatorSet, state: AdmmState,
             params: AdmmParams) -> np.ndarray:
    return minimize_linear_torus(x_linear_coefficient(ops, state, params), state.x)


def update_y1(ops: OfpbOperatorSet, state: AdmmState,
              params: AdmmParams) -> np.ndarray:
    """Minimizer of the quadratic upper bound anchored at the fresh x iterate."""
    x_hat = real_lift(state.x)
    grad = grad_fy(ops, x_hat, anchor_y(ops, state.x))
    y1_hat = x_hat - (grad + real_lift(state.lambda1)) / (params.rho1 + params.l_y)
    return lift_to_complex(y1_hat)


def y2_system_matrix(ops: OfpbOperatorSet, rho2: float) -> np.ndarray:
    """Real 2N x 2N matrix A with the y2 stationarity condition A y2_hat = rhs.

    Encodes y^H H5 y (Hermitian form) and 2 Re(y^T H6 y) (widely-linear form)
    plus the rho2 proximal term.
    """
    h5, h6 = ops.h_pb5, ops.h_pb6
    r5 = np.block([[h5.real, -h5.imag], [h5.imag, h5.real]])
    h6s = (h6 + h6.T) / 2.0
    s6 = np.block([[h6s.real, -h6s.imag], [-h6s.imag, -h6s.real]])
    n = ops.n_irs
    return 2.0 * (r5 + 2.0 * s6) + rho2 * np.eye(2 * n)


def update_y2(ops: OfpbOperatorSet, state: AdmmState, params: AdmmParams,
              system_lu=None) -> np.ndarray:
    rhs = params.rho2 * real_lift(state.x) - real_lift(state.lambda2)
    if system_lu is None:
        matrix = y2_system_matrix(ops, params.rho2)
        try:
            sol = np.linalg.solve(matrix, rhs)
        except np.linalg.LinAlgError:
            smallest = np.linalg.svd(matrix, compute_uv=False)[-1]
            raise SolverError(
                f"singular y2 system (smallest singular value {smallest:.3e})")
    else:
        sol = lu_solve(system_lu, rhs)
    return lift_to_complex(sol)


def update_duals(state: AdmmState, params: AdmmParams):
    """Exact ascent steps lambda_i += rho_i (y_i - x)."""
    lambda1 = state.lambda1 + params.rho1 * (state.y1 - state.x)
    lambda2 = state.lambda2 + params.rho2 * (state.y2 - state.x)
    return lambda1, lambda2


def primal_residual(state: AdmmState) -> float:
    return float(np.linalg.norm(state.x - state.y1) ** 2
                 + np.linalg.norm(state.x - state.y2) ** 2)


def augmented_lagrangian(ops: OfpbOperatorSet, state: AdmmState,
                         params: AdmmParams) -> float:
    return (eval_f(ops, state.x, state.y1, state.y2)
            + np.real(state.lambda1.conj() @ (state.y1 - state.x)
                      + state.lambda2.conj() @ (state.y2 - state.x))
            + params.rho1 / 2.0 * np.linalg.norm(state.y1 - state.x) ** 2
            + params.rho2 / 2.0 * np.linalg.norm(state.y2 - state.x) ** 2)


# ---------------------------------------------------------------------------
# convergence conditions
# ---------------------------------------------------------------------------

@dataclass
class ConditionReport:
    eps_x: float
    eps_y1: float
    eps_y2: float
    rho1_minus_5ly: float
    satisfied: bool


def check_convergence_conditions(rho1: float, rho2: float, l_y: float,
                                 l_y2: float) -> ConditionReport:
    """Sufficient-decrease and lower-bound constants of the convergence analysis.

    Conditions are sufficient, not necessary; violations never abort a run.
    """
    eps_x = (rho1 + rho2) / 2.0 - (8.0 * l_y ** 2 * rho1 + 32.0 * l_y ** 3) / rho1 ** 2
    eps_y1 = (rho1 - 7.0 * l_y) / 2.0 - (2.0 * rho1 + 8.0 * l_y) / rho1 ** 2
    eps_y2 = l_y2 * rho2 / 2.0 - l_y2 / rho2 ** 2
    lower = rho1 - 5.0 * l_y
    ok = eps_x >= 0 and eps_y1 >= 0 and eps_y2 >= 0 and lower >= 0
    return ConditionReport(eps_x=eps_x, eps_y1=eps_y1, eps_y2=eps_y2,
                           rho1_minus_5ly=lower, satisfied=ok)


def l_y2_constant(ops: OfpbOperatorSet) -> float:
    """Max absolute element of H5 + H6 + H6^*, the y2-block gradient-step matrix."""
    return float(np.max(np.abs(ops.h_pb5 + ops.h_pb6 + ops.h_pb6.conj())))


def l_y2_appendix_literal(ops: OfpbOperatorSet) -> float:
    """Max absolute element of H4 + H5 + H5^* as literally typeset.

    The literal sum is dimensionally inconsistent unless N_B*N_A == N_I
    (the operator indices drifted by one in the appendix); returns nan in
    that case.
    """
    if ops.h_pb4.shape != ops.h_pb5.shape:
        return float("nan")
    return float(np.max(np.abs(ops.h_pb4 + ops.h_pb5 + ops.h_pb5.conj())))


# ---------------------------------------------------------------------------
# normalization and driver
# ---------------------------------------------------------------------------

SCALE_TARGET = 4.0
_SCALE_PROBE_SEED = 12345
_SCALE_PROBE_SAMPLES = 16


def operator_scale_statistic(ops: OfpbOperatorSet) -> float:
    """Mean magnitude of the objective's two norm terms at random unit-modulus x.

    Drawn from a fixed internal seed so the statistic (and everything built
    on it) is deterministic. Scales quadratically when all operators are
    scaled together.
    """
    rng = np.random.default_rng(_SCALE_PROBE_SEED)
    total = 0.0
    for _ in range(_SCALE_PROBE_SAMPLES):
        x = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, ops.n_irs))
        quart = ops.h_tilde_a + ops.h_pb1 @ x.conj() + ops.h_pb2 @ x \
            + ops.h_pb3 @ vec(np.outer(x, x.conj()))
        total += (np.linalg.norm(quart) ** 2
                  + ops.alpha_b * np.linalg.norm(ops.h_ab_vec + ops.h_pb4 @ x) ** 2)
    return total / _SCALE_PROBE_SAMPLES


def scaled_operator_set(ops: OfpbOperatorSet, target: float = SCALE_TARGET):
    """Rescale all operators by a common factor m so the scale statistic hits target.

    Every objective value scales by exactly m^2, so minimizers are unchanged;
    returns (scaled_ops, m). Zero operators are returned untouched (m = 1).
    """
    stat = operator_scale_statistic(ops)
    if stat <= 0.0:
        return ops, 1.0
    m = float(np.sqrt(target / stat))
    h1, h2, h4 = ops.h_pb1 * m, ops.h_pb2 * m, ops.h_pb4 * m
    return OfpbOperatorSet(
        h_tilde_a=ops.h_tilde_a * m, h_pb1=h1, h_pb2=h2, h_pb3=ops.h_pb3 * m,
        h_pb4=h4,
        h_pb5=(h1.conj().T @ h1).conj() + h2.conj().T @ h2
        - ops.alpha_b * (h4.conj().T @ h4),
        h_pb6=h1.conj().T @ h2,
        h_ab_vec=ops.h_ab_vec * m, alpha_b=ops.alpha_b), m


def initial_state(ops: OfpbOperatorSet, rng: np.random.Generator) -> AdmmState:
    """Random feasible start: uniform phases, consensus y's, duals at the
    problem's natural dual scale (zero in the degenerate all-zero case)."""
    n = ops.n_irs
    x = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n))
    dual_scale = np.linalg.norm(grad_fy(ops, real_lift(x), anchor_y(ops, x)))
    dual_scale /= np.sqrt(2.0 * n)
    lam1 = dual_scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    lam2 = dual_scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    return AdmmState(x=x, y1=x.copy(), y2=x.copy(), lambda1=lam1, lambda2=lam2, k=0)


def ca_admm_solve(ops: OfpbOperatorSet, params: AdmmParams,
                  rng_seed: int, objective_scale: float = 1.0):
    """Run the consensus recursion on the operator set exactly as given.

    Returns (AdmmState, ConvergenceTrace); the state holds the best iterate
    (lowest objective seen) when the tolerance was not reached.
    """
    rng = np.random.default_rng(rng_seed)
    state = initial_state(ops, rng)
    try:
        system_lu = lu_factor(y2_system_matrix(ops, params.rho2))
    except Exception:
        matrix = y2_system_matrix(ops, params.rho2)
        smallest = np.linalg.svd(matrix, compute_uv=False)[-1]
        raise SolverError(
            f"singular y2 system (smallest singular value {smallest:.3e})")
    trace = ConvergenceTrace()
    best_obj = np.inf
    best_x = state.x
    t0 = time.perf_counter()
    for k in range(1, params.max_iter + 1):
        state.x = update_x(ops, state, params)
        state.y1 = update_y1(ops, state, params)
        state.y2 = update_y2(ops, state, params, system_lu=system_lu)
        state.lambda1, state.lambda2 = update_duals(state, params)
        state.k = k
        res = primal_residual(state)
        obj = eval_f(ops, state.x, state.x, state.x)
        if obj < best_obj:
            best_obj, best_x = obj, state.x.copy()
        trace.append(res, augmented_lagrangian(ops, state, params),
                     obj * objective_scale, (time.perf_counter() - t0) * 1e3)
        if res < params.eps1:
            trace.converged = True
            break
    if not trace.converged:
        state.x = best_x
    return state, trace


def run_ca_admm(chset: ChannelSet, params: AdmmParams, alpha_b: float,
                rng_seed: int, normalize: bool = True):
    """Solve the phase subproblem for a channel set.

    With normalize=True (default) the operators are pre-scaled to a fixed
    magnitude so that the penalty/majorization parameters are scale-free;
    this changes nothing about the minimizers and the trace's objective
    column is reported at the true (unscaled) value.

    Returns (PhaseVector, ConvergenceTrace).
    """
    ops = build_operators(chset, alpha_b)
    obj_scale = 1.0
    if normalize:
        ops, m = scaled_operator_set(ops)
        obj_scale = 1.0 / m ** 2
    state, trace = ca_admm_solve(ops, params, rng_seed, objective_scale=obj_scale)
    return PhaseVector.from_unit(state.x), trace
