"""Hybrid beamformer design for fixed IRS phases: full-digital solve,
sparse analog/digital factorization by orthogonal matching pursuit, and
artificial noise confined to the null space of Bob's effective channel.
"""

from dataclasses import dataclass

import numpy as np

from .channel import (ChannelSet, PhaseVector, array_response,
                      equivalent_channel, read_matrix_blocks,
                      write_matrix_blocks)
from .metrics import HybridBeamformer, secrecy_capacity_effective


@dataclass
class PowerSplit:
    """Fraction of the power budget assigned to artificial noise."""

    beta_an: float = 0.2

    def __post_init__(self):
        if not (0.0 <= self.beta_an < 1.0):
            raise ValueError("beta_an must lie in [0, 1)")


@dataclass
class FdbSolution:
    """Unconstrained full-digital precoders and their power bookkeeping."""

    w_tilde_s: np.ndarray  # (N_A, L_s)
    w_tilde_z: np.ndarray  # (N_A, L_z)
    achieved_power: float
    rank_deficient: bool = False


@dataclass
class Dictionary:
    """Candidate analog columns (unit-modulus entries) and their grid angles."""

    atoms: np.ndarray   # (N_A, G)
    angles: np.ndarray  # (G,)

    @property
    def size(self):
        return self.atoms.shape[1]


@dataclass
class NsjhbConfig:
    fdb_method: str = "svd"      # "svd" or "ascent"
    grid_size: int = 64
    use_channel_hint: bool = True
    ascent_iters: int = 200


@dataclass
class NsjhbResult:
    beamformer: HybridBeamformer
    secrecy_rate: float
    omp_residual: float
    an_power: float
    unused_power: float
    fdb: FdbSolution


def _null_space_columns(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis of null(a) from the trailing right singular vectors."""
    rows, cols = a.shape
    _, svals, vh = np.linalg.svd(a, full_matrices=True)
    tol = max(rows, cols) * np.finfo(float).eps * (svals[0] if len(svals) else 0.0)
    rank = int(np.sum(svals > tol))
    return vh[rank:].conj().T


def _fdb_svd(h_b: np.ndarray, p_max: float, beta: float, l_s: int, l_z: int):
    """Strongest right singular vectors for the signal, null-space columns
    for the noise, each group at equal per-column power."""
    n_a = h_b.shape[1]
    _, svals, vh = np.linalg.svd(h_b)
    tol = max(h_b.shape) * np.finfo(float).eps * (svals[0] if len(svals) else 0.0)
    rank = int(np.sum(svals > tol))
    n_sig = min(l_s, rank)
    w_s = np.zeros((n_a, l_s), dtype=complex)
    if n_sig > 0:
        w_s[:, :n_sig] = np.sqrt((1.0 - beta) * p_max / n_sig) * vh[:n_sig].conj().T
    w_z = np.zeros((n_a, l_z), dtype=complex)
    if beta > 0:
        basis = _null_space_columns(h_b)
        n_an = min(l_z, basis.shape[1])
        if n_an > 0:
            w_z[:, :n_an] = np.sqrt(beta * p_max / n_an) * basis[:, :n_an]
    return w_s, w_z, rank < l_s


def _secrecy_gradients(h_b, h_e, w_s, w_z, noise_power):
    """Conjugate-coordinate gradients of the (unclamped) secrecy rate."""
    def node_terms(h):
        hs = h @ w_s
        hz = h @ w_z
        n = h.shape[0]
        cov_noise = hz @ hz.conj().T + noise_power * np.eye(n)
        cov_total = cov_noise + hs @ hs.conj().T
        inv_total = np.linalg.inv(cov_total)
        inv_noise = np.linalg.inv(cov_noise)
        return h.conj().T @ inv_total @ h, h.conj().T @ inv_noise @ h
    gb_total, gb_noise = node_terms(h_b)
    ge_total, ge_noise = node_terms(h_e)
    ln2 = np.log(2.0)
    grad_s = ((gb_total - ge_total) @ w_s) / ln2
    grad_z = ((gb_total - gb_noise - ge_total + ge_noise) @ w_z) / ln2
    return grad_s, grad_z


def solve_fdb(chset: ChannelSet, phases: PhaseVector, p_max: float,
              split: PowerSplit, l_s: int, l_z: int, method: str = "svd",
              ascent_iters: int = 200) -> FdbSolution:
    """Full-digital precoders under the power budget.

    "svd": information streams along the strongest right singular vectors of
    Bob's equivalent channel at equal power summing to (1-beta)P, noise
    streams along null-space directions of the same channel at total power
    beta*P. "ascent": projected gradient ascent on the secrecy capacity,
    started from the svd solution, accepting only improving steps, so its
    objective never falls below the starting point's.
    """
    if method not in ("svd", "ascent"):
        raise ValueError("method must be 'svd' or 'ascent'")
    if p_max <= 0:
        raise ValueError("p_max must be > 0")
    h_b = equivalent_channel(chset, phases, "bob")
    w_s, w_z, deficient = _fdb_svd(h_b, p_max, split.beta_an, l_s, l_z)
    if method == "ascent":
        w_s, w_z = _fdb_ascent(chset, phases, w_s, w_z, p_max, ascent_iters)
    power = (np.linalg.norm(w_s, "fro") ** 2 + np.linalg.norm(w_z, "fro") ** 2)
    return FdbSolution(w_tilde_s=w_s, w_tilde_z=w_z, achieved_power=float(power),
                       rank_deficient=deficient)


def _fdb_ascent(chset, phases, w_s, w_z, p_max, max_iters):
    h_b = equivalent_channel(chset, phases, "bob")
    h_e = equivalent_channel(chset, phases, "eve")

    def rate(ws, wz):
        return secrecy_capacity_effective(chset, phases, ws, wz)

    def project(ws, wz):
        power = np.linalg.norm(ws, "fro") ** 2 + np.linalg.norm(wz, "fro") ** 2
        if power > p_max:
            scale = np.sqrt(p_max / power)
            return ws * scale, wz * scale
        return ws, wz

    current = rate(w_s, w_z)
    step = 1.0
    for _ in range(max_iters):
        grad_s, grad_z = _secrecy_gradients(h_b, h_e, w_s, w_z, chset.noise_power)
        norm = np.sqrt(np.linalg.norm(grad_s, "fro") ** 2
                       + np.linalg.norm(grad_z, "fro") ** 2)
        if norm < 1e-12:
            break
        improved = False
        while step > 1e-8:
            cand = project(w_s + step * grad_s / norm, w_z + step * grad_z / norm)
            value = rate(*cand)
            if value > current:
                w_s, w_z = cand
                current = value
                improved = True
                break
            step /= 2.0
        if not improved:
            break
    return w_s, w_z


def build_dictionary(n_alice: int, grid_size: int,
                     channel_hint=None) -> Dictionary:
    """Array-response atoms on a sin-space uniform grid, plus optional hinted angles."""
    if grid_size < 1:
        raise ValueError("grid_size must be >= 1")
    sins = -1.0 + 2.0 * np.arange(grid_size) / grid_size
    angles = np.arcsin(sins)
    if channel_hint is not None:
        angles = np.concatenate([angles, np.asarray(channel_hint, dtype=float)])
    atoms = np.stack([array_response(n_alice, a) for a in angles], axis=1)
    return Dictionary(atoms=atoms, angles=angles)


def omp_factorize(w_tilde_s: np.ndarray, dictionary: Dictionary, n_rf: int):
    """Greedy sparse factorization W_tilde ~ F W_s with F drawn from the dictionary.

    Picks the atom with the largest residual correlation energy n_rf times
    (without replacement), refits W_s by least squares each round, and finally
    rescales W_s so that ||F W_s||_F equals ||W_tilde||_F.
    """
    atoms = dictionary.atoms
    if n_rf > dictionary.size:
        raise ValueError("n_rf must not exceed the dictionary size")
    target_norm = np.linalg.norm(w_tilde_s, "fro")
    if target_norm == 0:
        return atoms[:, :n_rf], np.zeros((n_rf, w_tilde_s.shape[1]), dtype=complex)
    residual = w_tilde_s.copy()
    selected = []
    for _ in range(n_rf):
        energy = np.sum(np.abs(atoms.conj().T @ residual) ** 2, axis=1)
        energy[selected] = -np.inf
        selected.append(int(np.argmax(energy)))
        f_analog = atoms[:, selected]
        w_s, *_ = np.linalg.lstsq(f_analog, w_tilde_s, rcond=None)
        residual = w_tilde_s - f_analog @ w_s
    achieved = np.linalg.norm(f_analog @ w_s, "fro")
    if achieved > 0:
        w_s = w_s * (target_norm / achieved)
    return f_analog, w_s


def an_nullspace(h_eq_b: np.ndarray, f_analog: np.ndarray, an_power: float,
                 l_z: int):
    """Noise precoder in the null space of the effective channel H_eq_B @ F.

    Uses the first min(l_z, q) orthonormal null-space columns, scaled so
    ||F W_z||_F^2 = an_power; a trivial null space (q = 0) yields W_z = 0
    with the whole budget reported back. Returns (w_z, used, unused).
    """
    if an_power < 0:
        raise ValueError("an_power must be >= 0")
    n_rf = f_analog.shape[1]
    w_z = np.zeros((n_rf, l_z), dtype=complex)
    if an_power == 0:
        return w_z, 0.0, 0.0
    basis = _null_space_columns(h_eq_b @ f_analog)
    if basis.shape[1] == 0:
        return w_z, 0.0, float(an_power)
    cols = basis[:, :min(l_z, basis.shape[1])]
    scale = np.sqrt(an_power) / np.linalg.norm(f_analog @ cols, "fro")
    w_z[:, :cols.shape[1]] = scale * cols
    return w_z, float(an_power), 0.0


def dump_beamformer(bf: HybridBeamformer, path):
    """Write the beamformer in the shared complex-CSV fixture format."""
    write_matrix_blocks(path, {"f_analog": bf.f_analog, "w_s": bf.w_s,
                               "w_z": bf.w_z}, scalars={"p_max": bf.p_max})


def load_beamformer(path) -> HybridBeamformer:
    mats, scalars = read_matrix_blocks(path)
    return HybridBeamformer(f_analog=mats["f_analog"], w_s=mats["w_s"],
                            w_z=mats["w_z"], p_max=scalars["p_max"])


def run_nsjhb(chset: ChannelSet, phases: PhaseVector, p_max: float,
              split: PowerSplit, n_rf: int, l_s: int, l_z: int,
              cfg: NsjhbConfig | None = None) -> NsjhbResult:
    """Full pipeline: full-digital solve, OMP factorization, null-space noise."""
    cfg = cfg or NsjhbConfig()
    fdb = solve_fdb(chset, phases, p_max, split, l_s, l_z,
                    method=cfg.fdb_method, ascent_iters=cfg.ascent_iters)
    hint = None
    if cfg.use_channel_hint and chset.alice_aods:
        hint = np.concatenate([np.asarray(v) for v in chset.alice_aods.values()])
    dictionary = build_dictionary(chset.n_alice, cfg.grid_size, channel_hint=hint)
    f_analog, w_s = omp_factorize(fdb.w_tilde_s, dictionary, n_rf)
    fit, *_ = np.linalg.lstsq(f_analog, fdb.w_tilde_s, rcond=None)
    omp_residual = np.linalg.norm(fdb.w_tilde_s - f_analog @ fit, "fro")
    h_b = equivalent_channel(chset, phases, "bob")
    w_z, an_power, unused = an_nullspace(h_b, f_analog, split.beta_an * p_max, l_z)
    bf = HybridBeamformer(f_analog=f_analog, w_s=w_s, w_z=w_z, p_max=p_max)
    rate = secrecy_capacity_effective(chset, phases, bf.effective_signal,
                                      bf.effective_noise)
    return NsjhbResult(beamformer=bf, secrecy_rate=rate,
                       omp_residual=float(omp_residual), an_power=an_power,
                       unused_power=unused, fdb=fdb)
