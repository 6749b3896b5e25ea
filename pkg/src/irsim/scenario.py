"""Scenario geometry, path loss, and Rayleigh channel generation."""

import json
import logging
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from .reflection import FrequencyPlan, DEFAULT_FREQUENCIES

log = logging.getLogger(__name__)


def db_to_linear(x_db):
    """x dB -> linear power ratio."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watts(x_dbm):
    """x dBm -> watts."""
    return 10.0 ** ((np.asarray(x_dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(p):
    return 10.0 * np.log10(p) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """Single source of truth for a multi-cell multi-band scenario."""

    S: int = 3                 # number of BSs / cells
    K: int = 2                 # users per BS
    Nt: int = 4                # BS antennas
    M: int = 16                # IRS elements
    sigma2: float = 1e-10      # noise power, watts (-70 dBm)
    gamma: float = 10 ** 0.5   # per-user SINR target, linear (5 dB)
    P: float = 10 ** -0.5      # per-BS power budget, watts (-5 dB)
    L: float = 52.0            # BS-IRS distance, meters
    D: float = 2.0             # IRS-user distance, meters
    C0: float = 1e-3           # reference path gain, linear (-30 dB)
    d0: float = 1.0            # reference distance, meters
    alpha_bi: float = 2.5      # BS-IRS path-loss exponent
    alpha_iu: float = 2.8      # IRS-user path-loss exponent
    alpha_bu: float = 3.5      # BS-user path-loss exponent
    seed: int = 0
    frequencies: tuple = DEFAULT_FREQUENCIES

    def __post_init__(self):
        if self.S < 1 or self.K < 1 or self.M < 0:
            raise ValueError("counts must be positive")
        if self.Nt < self.K:
            raise ValueError("Nt >= K required for the full-rank assumption")
        for name in ("sigma2", "gamma", "P", "L", "D", "C0", "d0"):
            if getattr(self, name) < 0:
                raise ValueError("%s must be nonnegative" % name)
        object.__setattr__(self, "frequencies", tuple(self.frequencies))

    def frequency_plan(self):
        return FrequencyPlan(self.frequencies[: self.S])

    def replace(self, **kwargs):
        return replace(self, **kwargs)

    def to_dict(self):
        d = asdict(self)
        d["frequencies"] = list(d["frequencies"])
        return d

    @classmethod
    def from_dict(cls, data):
        allowed = set(cls.__dataclass_fields__)
        unknown = set(data) - allowed
        if unknown:
            raise KeyError("unknown config keys: %s" % sorted(unknown))
        if "frequencies" in data:
            data = dict(data, frequencies=tuple(data["frequencies"]))
        return cls(**data)

    @classmethod
    def from_file(cls, path):
        """Load from a JSON (or TOML, on Python >= 3.11) config file."""
        text = open(path, "rb").read()
        if str(path).endswith(".toml"):
            try:
                import tomllib
            except ImportError as exc:  # Python 3.10
                raise RuntimeError("TOML configs need Python >= 3.11; use JSON") from exc
            data = tomllib.loads(text.decode())
        else:
            data = json.loads(text)
        return cls.from_dict(data)


def path_gain(cfg, d, alpha):
    """Distance-dependent gain C0 * (d / d0)^(-alpha), linear scale."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    return cfg.C0 * (d / cfg.d0) ** (-alpha)


@dataclass(frozen=True)
class Geometry:
    """IRS at the origin; 2-D positions of BSs (S x 2) and users (S x K x 2)."""

    bs_pos: np.ndarray
    user_pos: np.ndarray

    def bs_irs_distances(self):
        return np.linalg.norm(self.bs_pos, axis=-1)

    def user_irs_distances(self):
        return np.linalg.norm(self.user_pos, axis=-1)

    def bs_user_distances(self):
        return np.linalg.norm(self.user_pos - self.bs_pos[:, None, :], axis=-1)


def place_scenario(cfg, rng):
    """BSs uniform on the circle of radius L, users on the circle of radius D."""
    bs_ang = rng.uniform(0.0, 2 * np.pi, size=cfg.S)
    usr_ang = rng.uniform(0.0, 2 * np.pi, size=(cfg.S, cfg.K))
    bs_pos = cfg.L * np.stack([np.cos(bs_ang), np.sin(bs_ang)], axis=-1)
    user_pos = cfg.D * np.stack([np.cos(usr_ang), np.sin(usr_ang)], axis=-1)
    return Geometry(bs_pos=bs_pos, user_pos=user_pos)


@dataclass
class ChannelSet:
    """Per-BS channels: G (S x M x Nt), h_r (S x K x M), h_d (S x K x Nt)."""

    G: np.ndarray
    hr: np.ndarray
    hd: np.ndarray

    def __post_init__(self):
        for arr in (self.G, self.hr, self.hd):
            if not np.all(np.isfinite(arr.view(float))):
                raise ValueError("channel entries must be finite")
        S, M, Nt = self.G.shape
        if self.hr.shape[0] != S or self.hr.shape[2] != M:
            raise ValueError("h_r shape inconsistent with G")
        if self.hd.shape[:2] != self.hr.shape[:2] or self.hd.shape[2] != Nt:
            raise ValueError("h_d shape inconsistent")

    @property
    def num_bs(self):
        return self.G.shape[0]

    @property
    def num_users(self):
        return self.hr.shape[1]

    @property
    def num_elements(self):
        return self.G.shape[1]

    @property
    def num_antennas(self):
        return self.G.shape[2]

    def without_irs(self):
        """Copy with the IRS cascade removed (h_r = 0)."""
        return ChannelSet(self.G.copy(), np.zeros_like(self.hr), self.hd.copy())


def _cn(rng, shape, var):
    """i.i.d. circularly-symmetric complex Gaussian entries with variance var."""
    scale = np.sqrt(np.asarray(var, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channels(cfg, geometry, rng, max_redraws=10):
    """Rayleigh channels with per-link path-loss variances; full-rank enforced.

    Equivalent channels G_s^H H_r,s + H_d,s must have numerical rank
    min(Nt, K); rank-deficient draws are redrawn and logged.
    """
    d_bi = geometry.bs_irs_distances()                     # (S,)
    d_iu = geometry.user_irs_distances()                   # (S, K)
    d_bu = geometry.bs_user_distances()                    # (S, K)
    var_G = path_gain(cfg, d_bi, cfg.alpha_bi)[:, None, None]
    var_hr = path_gain(cfg, d_iu, cfg.alpha_iu)[:, :, None] if cfg.C0 > 0 else np.zeros(d_iu.shape + (1,))
    var_hd = path_gain(cfg, d_bu, cfg.alpha_bu)[:, :, None] if cfg.C0 > 0 else np.zeros(d_bu.shape + (1,))
    if cfg.C0 == 0:
        var_G = np.zeros_like(var_G)

    for attempt in range(max_redraws + 1):
        G = _cn(rng, (cfg.S, cfg.M, cfg.Nt), var_G) if cfg.M else np.zeros((cfg.S, 0, cfg.Nt), complex)
        hr = _cn(rng, (cfg.S, cfg.K, cfg.M), var_hr) if cfg.M else np.zeros((cfg.S, cfg.K, 0), complex)
        hd = _cn(rng, (cfg.S, cfg.K, cfg.Nt), var_hd)
        if cfg.C0 == 0:
            return ChannelSet(G, hr, hd)
        ok = True
        for s in range(cfg.S):
            Hr = hr[s].T                                   # M x K
            Hd = hd[s].T                                   # Nt x K
            eq = G[s].conj().T @ Hr + Hd
            sv = np.linalg.svd(eq, compute_uv=False)
            if sv.size and sv[-1] <= 1e-10:
                ok = False
                break
        if ok:
            return ChannelSet(G, hr, hd)
        log.warning("rank-deficient equivalent channel, redrawing (attempt %d)", attempt + 1)
    raise RuntimeError("could not draw full-rank channels after %d redraws" % max_redraws)


def trial_rng(master_seed, *counters):
    """Independent, reproducible RNG sub-stream keyed by counters."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *map(int, counters)]))
