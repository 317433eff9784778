"""Transmit power, secrecy capacity, its high-SNR lower bound, and the
orthogonal-forcing objective for the IRS phase subproblem.

All rates are in bits/s/Hz (log base 2).
"""

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, PhaseVector, equivalent_channel


@dataclass
class HybridBeamformer:
    """Analog precoder F plus digital precoders for information and noise streams.

    F entries must have modulus 1/sqrt(N_A) (constant-modulus analog stage),
    and ||F W_s||_F^2 + ||F W_z||_F^2 must stay within p_max.
    """

    f_analog: np.ndarray  # (N_A, N_RF)
    w_s: np.ndarray       # (N_RF, L_s)
    w_z: np.ndarray       # (N_RF, L_z)
    p_max: float

    def __post_init__(self):
        n_a = self.f_analog.shape[0]
        mods = np.abs(self.f_analog)
        if np.max(np.abs(mods - 1.0 / np.sqrt(n_a))) > 1e-9:
            raise ValueError("analog beamformer entries must have modulus 1/sqrt(N_A)")
        if transmit_power(self) > self.p_max * (1.0 + 1e-9):
            raise ValueError("transmit power exceeds p_max")

    @property
    def effective_signal(self) -> np.ndarray:
        return self.f_analog @ self.w_s

    @property
    def effective_noise(self) -> np.ndarray:
        return self.f_analog @ self.w_z


def transmit_power(bf: HybridBeamformer) -> float:
    """||F W_s||_F^2 + ||F W_z||_F^2."""
    return (np.linalg.norm(bf.f_analog @ bf.w_s, "fro") ** 2
            + np.linalg.norm(bf.f_analog @ bf.w_z, "fro") ** 2)


def _node_rate(h_eq: np.ndarray, t_s: np.ndarray, t_z: np.ndarray,
               noise_power: float) -> float:
    # log2 det(I + S C^-1) = log2 det(C + S) - log2 det(C), with
    # S = H T_s T_s^H H^H and C = H T_z T_z^H H^H + sigma^2 I
    hs = h_eq @ t_s
    hz = h_eq @ t_z
    n = h_eq.shape[0]
    cov_noise = hz @ hz.conj().T + noise_power * np.eye(n)
    cov_total = cov_noise + hs @ hs.conj().T
    sign_t, logdet_t = np.linalg.slogdet(cov_total)
    sign_n, logdet_n = np.linalg.slogdet(cov_noise)
    if sign_t <= 0 or sign_n <= 0:
        raise ValueError("covariance matrices must be positive definite")
    return (logdet_t - logdet_n) / np.log(2.0)


def secrecy_capacity_effective(chset: ChannelSet, phases: PhaseVector,
                               t_s: np.ndarray, t_z: np.ndarray) -> float:
    """Secrecy capacity for effective (full-digital) precoders T_s = F W_s, T_z = F W_z."""
    for m in (t_s, t_z):
        m = np.asarray(m)
        if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
            raise ValueError("precoder entries must be finite")
    h_b = equivalent_channel(chset, phases, "bob")
    h_e = equivalent_channel(chset, phases, "eve")
    rate_b = _node_rate(h_b, t_s, t_z, chset.noise_power)
    rate_e = _node_rate(h_e, t_s, t_z, chset.noise_power)
    return max(rate_b - rate_e, 0.0)


def secrecy_capacity(chset: ChannelSet, phases: PhaseVector,
                     bf: HybridBeamformer) -> float:
    """{log2 det(I + S_B C_B^-1) - log2 det(I + S_E C_E^-1)}^+, clamp on the difference."""
    return secrecy_capacity_effective(chset, phases,
                                      bf.effective_signal, bf.effective_noise)


def lower_bound_secrecy(chset: ChannelSet, phases: PhaseVector,
                        p_max: float, l_s: int) -> float:
    """High-SNR lower bound on the secrecy capacity as a function of phases only.

    log2(1 + rho ||H_B||_F^2) - log2 det(I + rho H_B H_E^H H_E H_B^H) with
    rho = p_max / (noise_power * l_s).
    """
    if p_max <= 0 or l_s < 1:
        raise ValueError("p_max must be > 0 and l_s >= 1")
    h_b = equivalent_channel(chset, phases, "bob")
    h_e = equivalent_channel(chset, phases, "eve")
    rho = p_max / (chset.noise_power * l_s)
    first = np.log2(1.0 + rho * np.linalg.norm(h_b, "fro") ** 2)
    cross = h_b @ h_e.conj().T
    gram = cross @ cross.conj().T
    _, logdet = np.linalg.slogdet(np.eye(h_b.shape[0]) + rho * gram)
    return first - logdet / np.log(2.0)


def ofpb_objective(chset: ChannelSet, phases: PhaseVector, alpha_b: float) -> float:
    """||H_B H_E^H||_F^2 - alpha_b * ||H_B||_F^2, the phase-only surrogate to minimize."""
    if alpha_b < 0:
        raise ValueError("alpha_b must be >= 0")
    h_b = equivalent_channel(chset, phases, "bob")
    h_e = equivalent_channel(chset, phases, "eve")
    return (np.linalg.norm(h_b @ h_e.conj().T, "fro") ** 2
            - alpha_b * np.linalg.norm(h_b, "fro") ** 2)
