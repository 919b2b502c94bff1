"""Run a validated experiment configuration."""

from concurrent.futures import ProcessPoolExecutor

from .config import ExperimentConfig, validate_config
from .scenarios import SCENARIO_FUNCS

__all__ = ["run", "trial_map"]


def trial_map(workers):
    """Map over trial indices; results always come back in trial order."""
    if workers <= 1:
        return lambda fn, trials: [fn(t) for t in trials]

    def pooled(fn, trials):
        trials = list(trials)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, trials, chunksize=max(1, len(trials) // (4 * workers))))

    return pooled


def run(config):
    """Execute a scenario and return its result rows.

    ``config`` is an :class:`ExperimentConfig` or a plain mapping that is
    validated first (raising :class:`ConfigError`).
    """
    cfg = config if isinstance(config, ExperimentConfig) else validate_config(config)
    return SCENARIO_FUNCS[cfg.scenario](cfg, trial_map(cfg.workers))
