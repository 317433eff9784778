"""Geometry-driven sparse mmWave channel generation and the IRS-equivalent channel.

All arrays are half-wavelength ULAs (including the IRS, treated as a linear
array of reflecting elements). Channels follow the clustered sparse model:
one deterministic LoS path at the geometric angle plus Rician-weighted
Gaussian NLoS paths at uniform random angles.
"""

from dataclasses import dataclass, field

import numpy as np

# noise power for sigma^2 = -59 dBm, i.e. 10**((-59-30)/10) W
DEFAULT_NOISE_POWER = 10.0 ** (-8.9)

# sub-seed offsets, one per link (seed XOR index)
LINK_INDEX = {"ab": 1, "ae": 2, "ai": 3, "ib": 4, "ie": 5}


@dataclass
class SystemGeometry:
    """Node positions (meters, 2-D) and array/stream dimensions."""

    pos_alice: np.ndarray
    pos_bob: np.ndarray
    pos_eve: np.ndarray
    pos_irs: np.ndarray
    n_alice: int = 32
    n_bob: int = 2
    n_eve: int = 2
    n_irs: int = 32
    n_rf: int = 4
    l_s: int = 2
    l_z: int = 2

    def __post_init__(self):
        self.pos_alice = np.asarray(self.pos_alice, dtype=float)
        self.pos_bob = np.asarray(self.pos_bob, dtype=float)
        self.pos_eve = np.asarray(self.pos_eve, dtype=float)
        self.pos_irs = np.asarray(self.pos_irs, dtype=float)
        counts = (self.n_alice, self.n_bob, self.n_eve, self.n_irs,
                  self.n_rf, self.l_s, self.l_z)
        if any(int(c) < 1 for c in counts):
            raise ValueError("all antenna/stream counts must be >= 1")
        if self.n_rf > self.n_alice:
            raise ValueError("n_rf must not exceed n_alice")
        if self.l_s + self.l_z > self.n_rf:
            raise ValueError("l_s + l_z must not exceed n_rf")
        pos = [self.pos_alice, self.pos_bob, self.pos_eve, self.pos_irs]
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                if np.linalg.norm(pos[i] - pos[j]) <= 0:
                    raise ValueError("node positions must be pairwise distinct")


def paper_geometry(**overrides) -> SystemGeometry:
    """Default placement A=[0,5], B=[60,0], E=[45,0], I=[55,5]."""
    kw = dict(pos_alice=[0.0, 5.0], pos_bob=[60.0, 0.0],
              pos_eve=[45.0, 0.0], pos_irs=[55.0, 5.0])
    kw.update(overrides)
    return SystemGeometry(**kw)


@dataclass
class ChannelParams:
    """Sparse-channel statistics: path count, Rician factor, path-loss law."""

    n_paths: int = 4
    rician_kappa: float = 13.2  # linear ratio
    pathloss_exp_direct: float = 4.0
    pathloss_exp_reflected: float = 2.0
    reference_gain: float = 1.0  # linear gain at 1 m

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.rician_kappa < 0:
            raise ValueError("rician_kappa must be >= 0")
        if self.pathloss_exp_direct < 0 or self.pathloss_exp_reflected < 0:
            raise ValueError("path-loss exponents must be >= 0")


@dataclass
class ChannelSet:
    """The five link channels of the wiretap system plus the noise power.

    Shapes: h_ab (N_B,N_A), h_ae (N_E,N_A), h_ai (N_I,N_A),
    h_ib (N_B,N_I), h_ie (N_E,N_I).
    """

    h_ab: np.ndarray
    h_ae: np.ndarray
    h_ai: np.ndarray
    h_ib: np.ndarray
    h_ie: np.ndarray
    noise_power: float = DEFAULT_NOISE_POWER
    # transmit-side path angles of the Alice-originating links, used as
    # optional dictionary hints downstream; not part of the core contract
    alice_aods: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.noise_power <= 0:
            raise ValueError("noise_power must be > 0")
        n_b, n_a = self.h_ab.shape
        n_e = self.h_ae.shape[0]
        n_i = self.h_ai.shape[0]
        ok = (self.h_ae.shape == (n_e, n_a) and self.h_ai.shape == (n_i, n_a)
              and self.h_ib.shape == (n_b, n_i) and self.h_ie.shape == (n_e, n_i))
        if not ok:
            raise ValueError("channel matrix shapes are inconsistent")
        for m in (self.h_ab, self.h_ae, self.h_ai, self.h_ib, self.h_ie):
            if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
                raise ValueError("channel entries must be finite")

    @property
    def n_alice(self):
        return self.h_ab.shape[1]

    @property
    def n_bob(self):
        return self.h_ab.shape[0]

    @property
    def n_eve(self):
        return self.h_ae.shape[0]

    @property
    def n_irs(self):
        return self.h_ai.shape[0]


@dataclass
class PhaseVector:
    """IRS phase shifts theta in [0, 2*pi); the reflection is diag(exp(j*theta))."""

    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.mod(np.asarray(self.theta, dtype=float), 2.0 * np.pi)

    @classmethod
    def from_unit(cls, x: np.ndarray) -> "PhaseVector":
        """Phases of a unit-modulus vector, principal argument mapped to [0, 2*pi)."""
        return cls(np.angle(x))

    @property
    def unit(self) -> np.ndarray:
        """x = exp(j*theta); |x_n| = 1 exactly by construction."""
        return np.exp(1j * self.theta)

    def reflection_matrix(self) -> np.ndarray:
        return np.diag(self.unit)

    def __len__(self):
        return len(self.theta)


def array_response(n: int, angle: float) -> np.ndarray:
    """Unit-norm half-wavelength ULA steering vector, entry k = e^{j*pi*k*sin(angle)}/sqrt(n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.exp(1j * np.pi * np.arange(n) * np.sin(angle)) / np.sqrt(n)


def path_gain(distance: float, exponent: float, reference_gain: float = 1.0) -> float:
    """Large-scale power gain g * d^(-alpha)."""
    if distance <= 0:
        raise ValueError("distance must be > 0")
    return reference_gain * distance ** (-exponent)


def generate_link_channel(n_rx: int, n_tx: int, distance: float, exponent: float,
                          params: ChannelParams, rng_seed: int,
                          los_aod: float = 0.0, los_aoa: float = 0.0):
    """One sparse link channel H (n_rx, n_tx), deterministic in rng_seed.

    H = sqrt(n_rx*n_tx*g) * [sqrt(k/(k+1)) a_rx(los_aoa) a_tx(los_aod)^H
        + sum_l c_l a_rx(phi_l) a_tx(psi_l)^H],
    with c_l ~ CN(0, 1/((n_paths-1)(k+1))) and NLoS angles uniform on
    [-pi/2, pi/2], so E||H||_F^2 = n_rx*n_tx*g.

    Returns (H, tx_angles) where tx_angles holds the LoS and NLoS AoDs.
    """
    rng = np.random.default_rng(rng_seed)
    g = path_gain(distance, exponent, params.reference_gain)
    kappa = params.rician_kappa

    H = np.sqrt(kappa / (kappa + 1.0)) * np.outer(array_response(n_rx, los_aoa),
                                                  array_response(n_tx, los_aod).conj())
    tx_angles = [los_aod]
    n_nlos = params.n_paths - 1
    if n_nlos > 0:
        sigma = np.sqrt(1.0 / (n_nlos * (kappa + 1.0)))
        for _ in range(n_nlos):
            gain = sigma * (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2.0)
            aoa = rng.uniform(-np.pi / 2, np.pi / 2)
            aod = rng.uniform(-np.pi / 2, np.pi / 2)
            H = H + gain * np.outer(array_response(n_rx, aoa),
                                    array_response(n_tx, aod).conj())
            tx_angles.append(aod)
    return np.sqrt(n_rx * n_tx * g) * H, np.array(tx_angles)


def link_distance(geometry: SystemGeometry, link: str) -> float:
    a, b = _link_endpoints(geometry, link)
    return float(np.linalg.norm(a - b))


def _link_endpoints(geometry: SystemGeometry, link: str):
    nodes = {"a": geometry.pos_alice, "b": geometry.pos_bob,
             "e": geometry.pos_eve, "i": geometry.pos_irs}
    return nodes[link[0]], nodes[link[1]]


def _bearing(src: np.ndarray, dst: np.ndarray) -> float:
    d = dst - src
    return float(np.arctan2(d[1], d[0]))


def generate_channel_set(geometry: SystemGeometry, params: ChannelParams,
                         rng_seed: int,
                         noise_power: float = DEFAULT_NOISE_POWER) -> ChannelSet:
    """All five link channels with per-link sub-seeds (rng_seed XOR link index).

    Direct links (A->B, A->E) use the direct path-loss exponent, the
    reflected segments (A->I, I->B, I->E) the reflected one.
    """
    g = geometry
    dims = {"ab": (g.n_bob, g.n_alice), "ae": (g.n_eve, g.n_alice),
            "ai": (g.n_irs, g.n_alice), "ib": (g.n_bob, g.n_irs),
            "ie": (g.n_eve, g.n_irs)}
    exps = {"ab": params.pathloss_exp_direct, "ae": params.pathloss_exp_direct,
            "ai": params.pathloss_exp_reflected, "ib": params.pathloss_exp_reflected,
            "ie": params.pathloss_exp_reflected}
    mats = {}
    aods = {}
    for link, (n_rx, n_tx) in dims.items():
        src, dst = _link_endpoints(g, link)
        H, tx_angles = generate_link_channel(
            n_rx, n_tx, link_distance(g, link), exps[link], params,
            rng_seed ^ LINK_INDEX[link],
            los_aod=_bearing(src, dst), los_aoa=_bearing(dst, src))
        mats[link] = H
        aods[link] = tx_angles
    return ChannelSet(h_ab=mats["ab"], h_ae=mats["ae"], h_ai=mats["ai"],
                      h_ib=mats["ib"], h_ie=mats["ie"], noise_power=noise_power,
                      alice_aods={k: aods[k] for k in ("ab", "ae", "ai")})


def equivalent_channel(chset: ChannelSet, phases: PhaseVector, node: str) -> np.ndarray:
    """H_eq = H_A<node> + H_I<node> @ diag(exp(j*theta)) @ H_AI, node in {'bob','eve'}."""
    if node not in ("bob", "eve"):
        raise ValueError("node must be 'bob' or 'eve'")
    direct = chset.h_ab if node == "bob" else chset.h_ae
    reflect = chset.h_ib if node == "bob" else chset.h_ie
    return direct + (reflect * phases.unit[np.newaxis, :]) @ chset.h_ai


# ---------------------------------------------------------------------------
# text fixture format: named complex matrices as CSV blocks of re,im pairs
# ---------------------------------------------------------------------------

def write_matrix_blocks(path, matrices: dict, scalars: dict | None = None):
    """Write named complex matrices (and float scalars) as plain text.

    Layout: a `scalar,<name>,<repr>` line per scalar, then per matrix a
    `matrix,<name>,<rows>,<cols>` line followed by one CSV row per matrix
    row with entries flattened as re,im pairs.
    """
    lines = ["schema,complex-matrix-blocks,1"]
    for name, value in (scalars or {}).items():
        lines.append(f"scalar,{name},{value!r}")
    for name, m in matrices.items():
        m = np.atleast_2d(np.asarray(m, dtype=complex))
        lines.append(f"matrix,{name},{m.shape[0]},{m.shape[1]}")
        for row in m:
            parts = []
            for z in row:
                parts.append(repr(float(z.real)))
                parts.append(repr(float(z.imag)))
            lines.append(",".join(parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix_blocks(path):
    """Inverse of write_matrix_blocks; returns (matrices, scalars)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("schema,complex-matrix-blocks"):
        raise ValueError(f"{path}: not a complex-matrix-blocks file")
    matrices, scalars = {}, {}
    i = 1
    while i < len(lines):
        kind, name, *rest = lines[i].split(",")
        if kind == "scalar":
            scalars[name] = float(rest[0])
            i += 1
        elif kind == "matrix":
            rows, cols = int(rest[0]), int(rest[1])
            block = np.empty((rows, cols), dtype=complex)
            for r in range(rows):
                vals = [float(v) for v in lines[i + 1 + r].split(",")]
                vals = np.array(vals).reshape(cols, 2)
                block[r] = vals[:, 0] + 1j * vals[:, 1]
            matrices[name] = block
            i += 1 + rows
        else:
            raise ValueError(f"{path}: unknown record kind {kind!r}")
    return matrices, scalars


def dump_channel_set(chset: ChannelSet, path):
    write_matrix_blocks(path,
                        {"h_ab": chset.h_ab, "h_ae": chset.h_ae, "h_ai": chset.h_ai,
                         "h_ib": chset.h_ib, "h_ie": chset.h_ie},
                        scalars={"noise_power": chset.noise_power})


def load_channel_set(path) -> ChannelSet:
    mats, scalars = read_matrix_blocks(path)
    return ChannelSet(h_ab=mats["h_ab"], h_ae=mats["h_ae"], h_ai=mats["h_ai"],
                      h_ib=mats["h_ib"], h_ie=mats["h_ie"],
                      noise_power=scalars["noise_power"])
