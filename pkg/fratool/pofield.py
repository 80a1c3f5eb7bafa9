"""Physical-optics radiation model of the folded reflectarray.

The feed is a cos^q horn imaged to the virtual focus. Each active element
re-radiates the field left after the polarizer cascade, and the far field is
the element-factor-weighted array sum over all of them. Total radiated power
is computed exactly from element pairs (no sphere sampling), so directivity
does not depend on the angular grid used for the pattern cuts.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, special

from .emcore import (
    FrequencyLike,
    JonesVector,
    Y_HAT,
    db,
    db_amplitude,
    ghz,
    phase_distance,
    phase_deg,
    wavelength,
    wavenumber,
)
from .errors import DomainError, PatternError
from .layout import DesignedAperture, FoldedGeometry
from .polarizer import MpgModel, cascade_arrays, chain_efficiency
from .unitcell import PhaseSource

logger = logging.getLogger(__name__)

XPOL_FLOOR = 1e-15


@dataclass(frozen=True)
class FeedModel:
    q_exponent: float = 5.57
    peak_gain_dbi: Optional[float] = None
    polarization: JonesVector = Y_HAT

    def __post_init__(self):
        if not self.q_exponent > 0:
            raise DomainError(f'q exponent must be positive, got {self.q_exponent!r}')

    @classmethod
    def from_hpbw(cls, hpbw_deg: float, **kwargs) -> 'FeedModel':
        return cls(fit_cosq(hpbw_deg), **kwargs)

    @property
    def directivity_dbi(self) -> float:
        return cosq_directivity(self.q_exponent)

    def amplitude(self, theta_rad):
        cosine = np.clip(np.cos(theta_rad), 0.0, None)
        return cosine ** self.q_exponent


def fit_cosq(hpbw_deg: float) -> float:
    if not 0 < hpbw_deg < 180:
        raise DomainError(f'half-power beamwidth must lie in (0, 180) deg, got {hpbw_deg!r}')
    return math.log(0.5) / (2.0 * math.log(math.cos(math.radians(hpbw_deg / 2.0))))


def cosq_directivity(q: float) -> float:
    if not q > 0:
        raise DomainError(f'q exponent must be positive, got {q!r}')
    return db(2.0 * (2.0 * q + 1.0))


def cosq_directivity_numeric(q: float) -> float:
    """Same quantity by quadrature of the cos^2q power pattern."""
    power, _ = integrate.quad(lambda t: math.cos(t) ** (2 * q) * math.sin(t), 0.0, math.pi / 2)
    return db(4.0 * math.pi / (2.0 * math.pi * power))


def spillover_efficiency(feed: FeedModel, geom: FoldedGeometry) -> float:
    """Fraction of feed power whose image ray lands inside the square aperture."""
    exponent = 2.0 * feed.q_exponent + 1.0
    half = geom.aperture_d / 2.0
    focal = geom.virtual_focal_f

    def captured(phi):
        theta_edge = math.atan2(half, focal * math.cos(phi))
        return 1.0 - math.cos(theta_edge) ** exponent

    value, _ = integrate.quad(captured, 0.0, math.pi / 4, epsabs=1e-12, epsrel=1e-10)
    return 4.0 / math.pi * value


def cone_spillover(feed: FeedModel, half_angle_deg: float) -> float:
    return 1.0 - math.cos(math.radians(half_angle_deg)) ** (2.0 * feed.q_exponent + 1.0)


@dataclass(frozen=True)
class ApertureField:
    positions: np.ndarray
    co: np.ndarray
    cross: np.ndarray
    incident: np.ndarray
    r_xy: np.ndarray
    freq: float

    @property
    def size(self) -> int:
        return int(self.co.size)

    def scaled(self, factor: complex) -> 'ApertureField':
        return ApertureField(self.positions, self.co * factor, self.cross * factor,
                             self.incident * factor, self.r_xy, self.freq)


def incident_field(positions: np.ndarray, feed: FeedModel, geom: FoldedGeometry,
                   f: FrequencyLike) -> np.ndarray:
    """cos^q(theta) * F / r amplitude with the -k r propagation phase."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    focal = geom.virtual_focal_f
    distance = np.sqrt(positions[:, 0] ** 2 + positions[:, 1] ** 2 + focal ** 2)
    theta = np.arccos(focal / distance)
    magnitude = feed.amplitude(theta) * focal / distance
    return magnitude * np.exp(-1j * wavenumber(f) * distance)


def illuminate(design: DesignedAperture, feed: FeedModel, geom: FoldedGeometry, mpg: MpgModel,
               f: FrequencyLike, source: Optional[PhaseSource] = None) -> ApertureField:
    """Aperture field at ``f``.

    At the synthesis frequency the stored achieved reflections are used;
    elsewhere the element response is re-evaluated through ``source``.
    """
    value = ghz(f)
    positions = design.positions()
    if math.isclose(value, design.frequency_ghz, rel_tol=0, abs_tol=1e-9) or source is None:
        r_xy = design.cross_reflections()
        r_yy = design.co_reflections()
    else:
        r_xy, r_yy = source.reflections([e.geometry for e in design.active], value)
    incident = incident_field(positions, feed, geom, value)
    co, cross = cascade_arrays(feed.polarization, mpg, r_xy, r_yy, value)
    return ApertureField(positions, co * incident, cross * incident, incident, r_xy, value)


def aperture_phase_spread(ap: ApertureField) -> float:
    """Largest deviation of the co-pol aperture phase from its mean direction."""
    weights = np.abs(ap.co)
    live = weights > 0
    if not live.any():
        return 0.0
    mean = phase_deg(np.sum(ap.co[live] / weights[live]))
    return float(np.abs(phase_distance(phase_deg(ap.co[live]), mean)).max())


@dataclass(frozen=True)
class FarFieldPattern:
    theta_deg: np.ndarray
    phi_deg: np.ndarray
    co: np.ndarray
    cross: np.ndarray
    freq: float

    def __post_init__(self):
        if self.theta_deg.size == 0 or self.phi_deg.size == 0:
            raise DomainError('pattern grids must not be empty')
        if np.any(np.diff(self.theta_deg) <= 0):
            raise DomainError('theta grid must be strictly increasing')

    @property
    def peak(self) -> float:
        return float(np.abs(self.co).max())


def element_factor(theta_rad, n: float = 1.0):
    """cos^n(theta) toward the front half-space, zero behind the aperture."""
    cosine = np.cos(theta_rad)
    return np.where(cosine > 0, np.abs(cosine) ** n, 0.0)


def _array_sum(positions: np.ndarray, weights: np.ndarray, u: np.ndarray, v: np.ndarray,
               k: float) -> np.ndarray:
    phase = k * (np.outer(u, positions[:, 0]) + np.outer(v, positions[:, 1]))
    return np.sum(weights[None, :] * np.exp(1j * phase), axis=1)


def far_field(ap: ApertureField, f: FrequencyLike, theta_grid: Sequence[float],
              phi_cuts: Sequence[float], element_n: float = 1.0, chunk: int = 256,
              threads: int = 1) -> FarFieldPattern:
    """Pattern cuts E(theta, phi) for co- and cross-polarized amplitudes.

    Negative theta points toward phi + 180 so one cut spans both sides of
    broadside. Angles are evaluated in blocks of ``chunk``; block results
    do not depend on how many threads evaluate them.
    """
    theta = np.asarray(theta_grid, dtype=float)
    phi = np.asarray(phi_cuts, dtype=float)
    if theta.size == 0 or phi.size == 0:
        raise DomainError('pattern grids must not be empty')
    k = wavenumber(f)
    t, p = np.meshgrid(np.radians(theta), np.radians(phi))
    u = (np.sin(t) * np.cos(p)).ravel()
    v = (np.sin(t) * np.sin(p)).ravel()
    factor = element_factor(t, element_n).ravel()

    blocks = [slice(i, min(i + chunk, u.size)) for i in range(0, u.size, chunk)]

    def evaluate(block: slice):
        co = _array_sum(ap.positions, ap.co, u[block], v[block], k)
        cross = _array_sum(ap.positions, ap.cross, u[block], v[block], k)
        logger.debug('Far-field block %s-%s of %s.', block.start, block.stop, u.size)
        return co, cross

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(evaluate, blocks))
    else:
        results = [evaluate(b) for b in blocks]

    co = np.concatenate([r[0] for r in results]) * factor
    cross = np.concatenate([r[1] for r in results]) * factor
    shape = (phi.size, theta.size)
    return FarFieldPattern(theta, phi, co.reshape(shape), cross.reshape(shape), ghz(f))


def pair_kernel(b, element_n: float = 1.0):
    """Front-hemisphere integral of cos^2n(theta) * exp(j k d . r) for spacing k d = b."""
    mu = element_n - 0.5
    b = np.asarray(b, dtype=float)
    safe = np.where(b > 0, b, 1.0)
    scale = 2.0 * math.pi * 2.0 ** mu * special.gamma(mu + 1.0)
    value = scale * special.jv(mu + 1.0, safe) / safe ** (mu + 1.0)
    return np.where(b > 0, value, math.pi / (mu + 1.0))


def radiated_power(positions: np.ndarray, amplitudes: np.ndarray, f: FrequencyLike,
                   element_n: float = 1.0, block: int = 512) -> float:
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    amplitudes = np.asarray(amplitudes, dtype=complex)
    k = wavenumber(f)
    total = 0.0
    for start in range(0, amplitudes.size, block):
        stop = min(start + block, amplitudes.size)
        dx = positions[start:stop, 0, None] - positions[None, :, 0]
        dy = positions[start:stop, 1, None] - positions[None, :, 1]
        kernel = pair_kernel(k * np.hypot(dx, dy), element_n)
        terms = (amplitudes[start:stop, None] * np.conj(amplitudes)[None, :]).real * kernel
        total += float(np.sum(terms))
    return total


def sphere_quadrature_power(ap: ApertureField, f: FrequencyLike, element_n: float = 1.0,
                            n_theta: int = 64, n_phi: int = 128) -> float:
    """Radiated power by Gauss-Legendre (theta) and trapezoid (phi) quadrature."""
    nodes, weights = np.polynomial.legendre.leggauss(n_theta)
    theta = (nodes + 1.0) * math.pi / 4.0
    theta_weights = weights * math.pi / 4.0
    phi = np.arange(n_phi) * 2.0 * math.pi / n_phi
    t, p = np.meshgrid(theta, phi)
    u = (np.sin(t) * np.cos(p)).ravel()
    v = (np.sin(t) * np.sin(p)).ravel()
    k = wavenumber(f)
    intensity = np.abs(_array_sum(ap.positions, ap.co, u, v, k)) ** 2
    intensity += np.abs(_array_sum(ap.positions, ap.cross, u, v, k)) ** 2
    intensity = intensity.reshape(t.shape) * element_factor(t, element_n) ** 2
    return float(np.sum(intensity * np.sin(t) * theta_weights[None, :]) * 2.0 * math.pi / n_phi)


@dataclass(frozen=True)
class EfficiencyBudget:
    spillover: float = 1.0
    chain: float = 1.0
    conversion: float = 1.0
    radiation: float = 1.0
    taper: Optional[float] = None
    phase_coherence: Optional[float] = None

    @property
    def product(self) -> float:
        return self.spillover * self.chain * self.conversion * self.radiation


def efficiency_budget(ap: ApertureField, feed: FeedModel, geom: FoldedGeometry, mpg: MpgModel,
                      radiation_efficiency: float = 1.0) -> EfficiencyBudget:
    illumination = np.abs(ap.incident) ** 2
    conversion = float(np.sum(illumination * np.abs(ap.r_xy) ** 2) / np.sum(illumination)) \
        if illumination.sum() > 0 else 0.0
    magnitude = np.abs(ap.co)
    taper = float(magnitude.sum() ** 2 / (ap.size * np.sum(magnitude ** 2))) if magnitude.any() else 0.0
    coherence = float(abs(ap.co.sum()) ** 2 / magnitude.sum() ** 2) if magnitude.any() else 0.0
    return EfficiencyBudget(
        spillover=spillover_efficiency(feed, geom),
        chain=chain_efficiency(mpg, ap.freq),
        conversion=conversion,
        radiation=radiation_efficiency,
        taper=taper,
        phase_coherence=coherence,
    )


@dataclass(frozen=True)
class PatternMetrics:
    freq: float
    directivity_dbi: float
    realized_gain_dbi: float
    hpbw_xoz: float
    hpbw_yoz: float
    sll_db: float
    xpol_db: float
    aperture_efficiency: float
    illumination_efficiency: float
    peak_theta_deg: float
    budget: EfficiencyBudget = field(default_factory=EfficiencyBudget)

    def as_dict(self) -> Dict[str, float]:
        values = {
            'freq_ghz': self.freq,
            'directivity_dbi': self.directivity_dbi,
            'realized_gain_dbi': self.realized_gain_dbi,
            'hpbw_xoz_deg': self.hpbw_xoz,
            'hpbw_yoz_deg': self.hpbw_yoz,
            'sll_db': self.sll_db,
            'xpol_db': self.xpol_db,
            'aperture_efficiency': self.aperture_efficiency,
            'illumination_efficiency': self.illumination_efficiency,
            'peak_theta_deg': self.peak_theta_deg,
        }
        values.update({f'eff_{k}': v for k, v in vars(self.budget).items() if v is not None})
        return values


def aperture_efficiency(gain_dbi: float, f: FrequencyLike, aperture_d: float) -> float:
    """G lambda^2 / (4 pi D^2) for a D x D square aperture."""
    return 10.0 ** (gain_dbi / 10.0) * wavelength(f) ** 2 / (4.0 * math.pi * aperture_d ** 2)


def _cut_in_db(values: np.ndarray, peak: float) -> np.ndarray:
    return 20.0 * np.log10(np.maximum(np.abs(values) / peak, XPOL_FLOOR))


def half_power_beamwidth(theta: np.ndarray, cut_db: np.ndarray) -> float:
    """Width between the -3 dB points around the cut maximum, linear in dB."""
    top = int(np.argmax(cut_db))
    level = cut_db[top] - 10.0 * math.log10(2.0)
    edges = []
    for step in (-1, 1):
        i = top
        while 0 <= i + step < theta.size and cut_db[i + step] >= level:
            i += step
        j = i + step
        if not 0 <= j < theta.size:
            raise PatternError('main beam is not resolved inside the pattern grid')
        t = (level - cut_db[i]) / (cut_db[j] - cut_db[i])
        edges.append(theta[i] + t * (theta[j] - theta[i]))
    return float(edges[1] - edges[0])


def sidelobe_level(cut_db: np.ndarray) -> float:
    """Highest level outside the null-to-null main beam, relative to the cut peak."""
    top = int(np.argmax(cut_db))
    left = top
    while left > 0 and cut_db[left - 1] < cut_db[left]:
        left -= 1
    right = top
    while right < cut_db.size - 1 and cut_db[right + 1] < cut_db[right]:
        right += 1
    if left == 0 or right == cut_db.size - 1:
        raise PatternError('first nulls of the main beam fall outside the pattern grid')
    outside = np.concatenate([cut_db[:left], cut_db[right + 1:]])
    return float(outside.max() - cut_db[top])


def metrics(pattern: FarFieldPattern, ap: ApertureField, aperture_d: float,
            budget: EfficiencyBudget | None = None, element_n: float = 1.0,
            block: int = 512) -> PatternMetrics:
    steps = np.diff(pattern.theta_deg)
    if steps.size == 0 or steps.max() > 0.1 + 1e-12:
        raise PatternError('pattern cuts need an angular step of 0.1 deg or finer')
    budget = budget or EfficiencyBudget()
    f = pattern.freq
    peak = pattern.peak
    if peak <= 0:
        raise PatternError('co-polarized pattern is identically zero')

    power = radiated_power(ap.positions, ap.co, f, element_n, block) \
        + radiated_power(ap.positions, ap.cross, f, element_n, block)
    directivity = 4.0 * math.pi * peak ** 2 / power

    widths = []
    sidelobes = []
    for row in range(pattern.phi_deg.size):
        cut = _cut_in_db(pattern.co[row], peak)
        widths.append(half_power_beamwidth(pattern.theta_deg, cut))
        sidelobes.append(sidelobe_level(cut) + float(cut.max()))
    xpol = db_amplitude(max(float(np.abs(pattern.cross).max()) / peak, XPOL_FLOOR))
    row, col = np.unravel_index(int(np.argmax(np.abs(pattern.co))), pattern.co.shape)

    directivity_dbi = db(directivity)
    gain_dbi = directivity_dbi + db(budget.product) if budget.product > 0 else -math.inf
    hpbw_xoz = _cut_width(pattern, widths, 0.0)
    hpbw_yoz = _cut_width(pattern, widths, 90.0)
    return PatternMetrics(
        freq=f,
        directivity_dbi=directivity_dbi,
        realized_gain_dbi=gain_dbi,
        hpbw_xoz=hpbw_xoz,
        hpbw_yoz=hpbw_yoz,
        sll_db=max(sidelobes),
        xpol_db=xpol,
        aperture_efficiency=aperture_efficiency(gain_dbi, f, aperture_d),
        illumination_efficiency=directivity * wavelength(f) ** 2 / (4.0 * math.pi * aperture_d ** 2),
        peak_theta_deg=float(pattern.theta_deg[col]),
        budget=budget,
    )


def _cut_width(pattern: FarFieldPattern, widths: List[float], phi: float) -> float:
    rows = np.flatnonzero(np.isclose(pattern.phi_deg, phi))
    return widths[int(rows[0])] if rows.size else widths[0]


@dataclass(frozen=True)
class AnalysisOptions:
    theta_span: float = 15.0
    theta_step: float = 0.05
    phi_cuts: Tuple[float, ...] = (0.0, 90.0)
    element_n: float = 1.0
    chunk: int = 256
    block: int = 512
    threads: int = 1

    @property
    def theta_grid(self) -> np.ndarray:
        count = int(round(2 * self.theta_span / self.theta_step))
        return np.linspace(-self.theta_span, self.theta_span, count + 1)


def analyze_frequency(design: DesignedAperture, feed: FeedModel, mpg: MpgModel, f: FrequencyLike,
                      source: Optional[PhaseSource] = None, options: AnalysisOptions | None = None,
                      radiation_efficiency: float = 1.0) -> Tuple[PatternMetrics, FarFieldPattern]:
    options = options or AnalysisOptions()
    geom = design.folded_geometry
    ap = illuminate(design, feed, geom, mpg, f, source)
    pattern = far_field(ap, f, options.theta_grid, options.phi_cuts, options.element_n,
                        options.chunk, options.threads)
    budget = efficiency_budget(ap, feed, geom, mpg, radiation_efficiency)
    result = metrics(pattern, ap, geom.aperture_d, budget, options.element_n, options.block)
    logger.info('%.3f GHz: gain %.2f dBi, directivity %.2f dBi, SLL %.1f dB.',
                result.freq, result.realized_gain_dbi, result.directivity_dbi, result.sll_db)
    return result, pattern


@dataclass(frozen=True)
class Bandwidths:
    bw1_percent: float
    bw3_percent: float
    peak_freq: float
    peak_gain_dbi: float
    truncated: bool


def gain_bandwidths(freqs: Sequence[float], gains_dbi: Sequence[float]) -> Bandwidths:
    freqs = np.asarray(freqs, dtype=float)
    gains = np.asarray(gains_dbi, dtype=float)
    if freqs.size < 3:
        raise DomainError(f'band sweep needs at least 3 frequencies, got {freqs.size}')
    top = int(np.argmax(gains))
    truncated = top in (0, freqs.size - 1)
    widths = []
    for drop in (1.0, 3.0):
        level = gains[top] - drop
        edges = []
        for step in (-1, 1):
            i = top
            while 0 <= i + step < freqs.size and gains[i + step] >= level:
                i += step
            j = i + step
            if not 0 <= j < freqs.size:
                truncated = True
                edges.append(freqs[i])
                continue
            t = (level - gains[i]) / (gains[j] - gains[i])
            edges.append(freqs[i] + t * (freqs[j] - freqs[i]))
        low, high = edges
        widths.append(100.0 * (high - low) / ((high + low) / 2.0))
    return Bandwidths(widths[0], widths[1], float(freqs[top]), float(gains[top]), truncated)


@dataclass(frozen=True)
class BandSweep:
    results: Tuple[PatternMetrics, ...]
    bandwidths: Bandwidths

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([r.freq for r in self.results])

    @property
    def gains(self) -> np.ndarray:
        return np.array([r.realized_gain_dbi for r in self.results])


def band_sweep(design: DesignedAperture, feed: FeedModel, mpg: MpgModel, f_list: Sequence[float],
               source: Optional[PhaseSource] = None, options: AnalysisOptions | None = None,
               radiation_efficiency: float = 1.0) -> BandSweep:
    if len(f_list) < 3:
        raise DomainError(f'band sweep needs at least 3 frequencies, got {len(f_list)}')
    results = tuple(
        analyze_frequency(design, feed, mpg, f, source, options, radiation_efficiency)[0]
        for f in sorted(ghz(f) for f in f_list)
    )
    sweep = BandSweep(results, gain_bandwidths([r.freq for r in results],
                                               [r.realized_gain_dbi for r in results]))
    if sweep.bandwidths.truncated:
        logger.warning('Gain bandwidth is truncated by the sweep boundary (peak at %s GHz).',
                       sweep.bandwidths.peak_freq)
    return sweep


def export_pattern_csv(pattern: FarFieldPattern, target, header: str | None = None) -> None:
    peak = pattern.peak
    rows = []
    for i, phi in enumerate(pattern.phi_deg):
        co = _cut_in_db(pattern.co[i], peak)
        cx = _cut_in_db(pattern.cross[i], peak)
        rows.extend((pattern.freq, phi, t, a, b) for t, a, b in zip(pattern.theta_deg, co, cx))
    frame = pd.DataFrame(rows, columns=['freq_ghz', 'phi_deg', 'theta_deg', 'co_db', 'cx_db'])
    if isinstance(target, (str, bytes)) or hasattr(target, '__fspath__'):
        with open(target, 'w', encoding='utf-8', newline='') as handle:
            _write_pattern(frame, handle, header)
    else:
        _write_pattern(frame, target, header)


def _write_pattern(frame: pd.DataFrame, handle, header: str | None) -> None:
    if header:
        handle.write(f'# {header}\n')
    frame.to_csv(handle, index=False, float_format='%.6f', lineterminator='\n')
