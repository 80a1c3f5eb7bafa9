"""Strip-grid polarizer (MPG) and the folded three-interaction cascade.

The strips run along y: the grid reflects the y component and transmits the
x component. A ray leaves the feed, reflects off the grid, is rotated by the
RMS element and finally crosses the grid:

    out = T_mpg . J_element . R_mpg . feed
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .emcore import FrequencyLike, JonesMatrix, JonesVector, db, from_db_amplitude, ghz, polar
from .errors import BandError, DomainError, IngestionError

logger = logging.getLogger(__name__)

MPG_COLUMNS = ('freq_ghz', 'ryy_db', 'txx_db')
MPG_PHASE_COLUMNS = ('ryy_phase_deg', 'txx_phase_deg')


@dataclass(frozen=True)
class MpgResponse:
    """Tabulated grid response, interpolated linearly in dB and degrees."""

    freq_ghz: Tuple[float, ...] = (24.0, 34.0)
    ryy_db: Tuple[float, ...] = (-0.04, -0.04)
    txx_db: Tuple[float, ...] = (-0.18, -0.18)
    ryy_phase_deg: Tuple[float, ...] = (180.0, 180.0)
    txx_phase_deg: Tuple[float, ...] = (0.0, 0.0)

    def __post_init__(self):
        n = len(self.freq_ghz)
        if n == 0:
            raise DomainError('grid response needs at least one frequency')
        for name in ('ryy_db', 'txx_db', 'ryy_phase_deg', 'txx_phase_deg'):
            if len(getattr(self, name)) != n:
                raise DomainError(f'{name} has {len(getattr(self, name))} samples, expected {n}')
        if any(b <= a for a, b in zip(self.freq_ghz, self.freq_ghz[1:])):
            raise DomainError('grid response frequencies must be strictly increasing')
        if max(self.ryy_db) > 1e-9 or max(self.txx_db) > 1e-9:
            raise DomainError('grid response magnitudes above 0 dB are not passive')

    @property
    def band(self) -> Tuple[float, float]:
        return self.freq_ghz[0], self.freq_ghz[-1]

    def sample(self, f: FrequencyLike) -> Tuple[complex, complex]:
        value = ghz(f)
        low, high = self.band
        if value < low - 1e-9 or value > high + 1e-9:
            raise BandError(f'{value} GHz is outside the grid model band {low}-{high} GHz')
        freqs = np.asarray(self.freq_ghz)

        def at(samples):
            return float(np.interp(value, freqs, np.asarray(samples, dtype=float)))

        r_par = polar(float(from_db_amplitude(at(self.ryy_db))), at(self.ryy_phase_deg))
        t_perp = polar(float(from_db_amplitude(at(self.txx_db))), at(self.txx_phase_deg))
        return complex(r_par), complex(t_perp)


@dataclass(frozen=True)
class MpgModel:
    strip_width: float = 0.5
    pitch: float = 1.0
    response: MpgResponse = field(default_factory=MpgResponse)
    r_xx_leak: Optional[complex] = None
    t_yy_leak: Optional[complex] = None

    def __post_init__(self):
        if not 0 < self.strip_width < self.pitch:
            raise DomainError(
                f'strip width {self.strip_width} mm must be positive and below the pitch {self.pitch} mm'
            )

    @classmethod
    def ideal(cls, strip_width: float = 0.5, pitch: float = 1.0) -> 'MpgModel':
        response = MpgResponse((1.0, 1000.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0))
        return cls(strip_width, pitch, response)

    def r_parallel(self, f: FrequencyLike) -> complex:
        return self.response.sample(f)[0]

    def t_perp(self, f: FrequencyLike) -> complex:
        return self.response.sample(f)[1]

    def leakage(self, f: FrequencyLike) -> Tuple[complex, complex]:
        """(r_xx, t_yy): explicit values, else the lossless complement."""
        r_par, t_perp = self.response.sample(f)
        r_xx = self.r_xx_leak
        if r_xx is None:
            r_xx = math.sqrt(max(0.0, 1.0 - abs(t_perp) ** 2))
        t_yy = self.t_yy_leak
        if t_yy is None:
            t_yy = math.sqrt(max(0.0, 1.0 - abs(r_par) ** 2))
        return complex(r_xx), complex(t_yy)


def mpg_reflect_jones(m: MpgModel, f: FrequencyLike) -> JonesMatrix:
    r_xx, _ = m.leakage(f)
    return JonesMatrix.diag(r_xx, m.r_parallel(f))


def mpg_transmit_jones(m: MpgModel, f: FrequencyLike) -> JonesMatrix:
    _, t_yy = m.leakage(f)
    return JonesMatrix.diag(m.t_perp(f), t_yy)


def load_mpg_response(source) -> MpgResponse:
    """Read ``freq_ghz, ryy_db, txx_db`` (+ optional phase columns) from CSV."""
    try:
        frame = pd.read_csv(source, skipinitialspace=True, skip_blank_lines=False, encoding='utf-8')
    except pd.errors.EmptyDataError:
        raise IngestionError('grid response file is empty') from None
    except pd.errors.ParserError as exc:
        raise IngestionError(f'malformed CSV: {exc}') from None
    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in MPG_COLUMNS if c not in frame.columns]
    if missing:
        raise IngestionError(f'grid response is missing columns {missing}')
    frame = frame.dropna(how='all')
    if frame.empty:
        raise IngestionError('grid response has no rows')

    numeric = frame.apply(pd.to_numeric, errors='coerce')
    if 'ryy_phase_deg' not in numeric:
        numeric['ryy_phase_deg'] = 180.0
    if 'txx_phase_deg' not in numeric:
        numeric['txx_phase_deg'] = 0.0
    columns = list(MPG_COLUMNS + MPG_PHASE_COLUMNS)
    problems: List[Tuple[int, str]] = []
    for index, row in zip(numeric.index, numeric[columns].itertuples(index=False)):
        line = int(index) + 2
        values = np.array(row, dtype=float)
        if not np.all(np.isfinite(values)):
            problems.append((line, 'malformed or missing value'))
        elif values[1] > 0 or values[2] > 0:
            problems.append((line, 'magnitude above 0 dB'))
    if problems:
        raise IngestionError('grid response rejected', rows=problems)

    numeric = numeric.sort_values('freq_ghz')
    if numeric['freq_ghz'].duplicated().any():
        raise IngestionError('grid response repeats a frequency')
    return MpgResponse(*(tuple(float(v) for v in numeric[c]) for c in columns))


@dataclass(frozen=True)
class CascadeBudget:
    co_pol_output_amp: complex
    cross_leakage_amp: complex
    stage_losses_db: Dict[str, float]
    power_deficit: float
    trapped_power: float

    @property
    def output_power(self) -> float:
        return abs(self.co_pol_output_amp) ** 2 + abs(self.cross_leakage_amp) ** 2

    @property
    def insertion_loss_db(self) -> float:
        return _loss_db(abs(self.co_pol_output_amp) ** 2, 1.0)


def _loss_db(power_out: float, power_in: float) -> float:
    if power_in <= 0:
        return 0.0
    if power_out <= 0:
        return math.inf
    return -db(power_out / power_in)


def folded_cascade(feed_state: JonesVector, mpg: MpgModel, element_jones: JonesMatrix,
                   f: FrequencyLike) -> CascadeBudget:
    if abs(feed_state.power - 1.0) > 1e-9:
        raise DomainError(f'feed state must be normalized, got power {feed_state.power:.6f}')
    reflect = mpg_reflect_jones(mpg, f)
    transmit = mpg_transmit_jones(mpg, f)

    after_grid = reflect @ feed_state
    after_element = element_jones @ after_grid
    output = transmit @ after_element
    trapped = reflect @ after_element

    losses = {
        'mpg_reflect': _loss_db(after_grid.power, feed_state.power),
        'element': _loss_db(after_element.power, after_grid.power),
        'mpg_transmit': _loss_db(output.power, after_element.power),
    }
    return CascadeBudget(
        co_pol_output_amp=output.ex,
        cross_leakage_amp=output.ey,
        stage_losses_db=losses,
        power_deficit=max(0.0, feed_state.power - output.power),
        trapped_power=trapped.power,
    )


def cascade_arrays(feed_state: JonesVector, mpg: MpgModel, r_xy, r_yy,
                   f: FrequencyLike) -> Tuple[np.ndarray, np.ndarray]:
    """Co-pol (x) and cross-pol (y) outputs for symmetric element operators.

    Each element is ``[[r_yy, r_xy], [r_xy, r_yy]]``, the global-basis form
    of a cell with eigen axes at 45 degrees.
    """
    r_xy = np.asarray(r_xy, dtype=complex)
    r_yy = np.asarray(r_yy, dtype=complex)
    r_xx_leak, t_yy_leak = mpg.leakage(f)
    r_par, t_perp = mpg.response.sample(f)
    a = r_xx_leak * feed_state.ex
    b = r_par * feed_state.ey
    co = t_perp * (r_yy * a + r_xy * b)
    cross = t_yy_leak * (r_xy * a + r_yy * b)
    return co, cross


def chain_efficiency(mpg: MpgModel, f: FrequencyLike) -> float:
    """Power kept by the two grid interactions of the primary path."""
    r_par, t_perp = mpg.response.sample(f)
    return abs(r_par) ** 2 * abs(t_perp) ** 2
