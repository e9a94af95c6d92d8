import numpy as np
import pytest

from denitlab.dataset import SCHEMA, TimeSeriesFrame
from denitlab.synthpilot import Fault, SynthConfig, generate

QUIET = {
    "temperature": {"base": 12.0, "amplitude": 0.0,
                    "period_samples": 365 * 144, "noise": 0.0},
    "oxygen": {"base": 7.0, "noise": 0.0},
    "ammonium": {"base": 0.8, "noise": 0.0},
    "ortho_phosphate": {"base": 0.15, "noise": 0.0},
    "turbidity": {"base": 2.0, "noise": 0.0},
}


def quiet_config(**overrides) -> SynthConfig:
    """Generator config with every nuisance source silenced.

    Temperature flat, no spikes, no outlet noise, no lag: nitrate_out is an
    exact deterministic function of nitrate_in, which several oracles rely on.
    """
    from denitlab.synthpilot import CleaningSchedule, ReactionParams, \
        SinusoidProfile, SpikyProfile

    kwargs = dict(
        days=10,
        seed=0,
        temperature=SinusoidProfile(**QUIET["temperature"]),
        oxygen=SpikyProfile(**QUIET["oxygen"]),
        ammonium=SpikyProfile(**QUIET["ammonium"]),
        ortho_phosphate=SpikyProfile(**QUIET["ortho_phosphate"]),
        turbidity=SpikyProfile(**QUIET["turbidity"]),
        reaction=ReactionParams(lag_samples=0.0, out_noise=0.0),
        cleaning=CleaningSchedule(target_disturbance=0.0),
    )
    kwargs.update(overrides)
    return SynthConfig(**kwargs)


def learnable_config(**overrides) -> SynthConfig:
    """Config where the target is (almost exactly) linear in nitrate_in.

    Nuisance columns keep a whisper of noise so that standardization over all
    columns stays well-posed; the residual nonlinearity they induce in the
    target is orders of magnitude below the nitrate_in-driven signal.
    """
    from denitlab.synthpilot import CleaningSchedule, ReactionParams, \
        SinusoidProfile, SpikyProfile

    kwargs = dict(
        days=10,
        seed=0,
        temperature=SinusoidProfile(base=12.0, amplitude=0.0,
                                    period_samples=365 * 144, noise=1e-3),
        oxygen=SpikyProfile(base=7.0, noise=1e-3),
        ammonium=SpikyProfile(base=0.8, noise=1e-3),
        ortho_phosphate=SpikyProfile(base=0.15, noise=1e-3),
        turbidity=SpikyProfile(base=2.0, noise=1e-3),
        reaction=ReactionParams(lag_samples=0.0, out_noise=0.0),
        cleaning=CleaningSchedule(target_disturbance=0.0),
    )
    kwargs.update(overrides)
    return SynthConfig(**kwargs)


@pytest.fixture(scope="session")
def small_frame():
    """10 noisy days with one backwash per day; shared and never mutated."""
    frame, schedule = generate(SynthConfig(days=10, seed=42))
    return frame, schedule


@pytest.fixture(scope="session")
def fault_frame():
    """20 days with one methanol dropout late in the series."""
    cfg = SynthConfig(days=20, seed=7,
                      faults=(Fault("methanol_dropout", 2500, 24),))
    frame, schedule = generate(cfg)
    return frame, schedule


def make_frame(columns: dict, gaps=()) -> TimeSeriesFrame:
    """Frame from raw column arrays (must include nitrate_out)."""
    from datetime import datetime, timezone

    names = tuple(columns.keys())
    values = np.column_stack([np.asarray(v, dtype=float) for v in columns.values()])
    return TimeSeriesFrame(
        start_time=datetime(2023, 1, 1, tzinfo=timezone.utc),
        names=names,
        units=tuple(SCHEMA.get(n, "1") for n in names),
        values=values,
        gaps=tuple(gaps))
