"""Flat key-value experiment configuration.

Config files are `key = value` lines; `#` starts a comment, blank lines
are ignored. Unknown keys are rejected, and every validation error
names the offending field.

Key groups
----------
run:        scenario, algorithm, samples, trials, seed, out
input:      input (gaussian-ar1 | cauchy-ar1 | file), ar_pole,
            input_variance, input_gamma, input_file, normalize_input
disturbance: noise_alpha, noise_gamma (absent alpha -> no additive noise)
engine:     mu, mu_b, p_order, frac_order, rank, seg_len, n_seg,
            n_subbands, bank_taps, update_interval, switch_db,
            switch_db_file, calib_window, init_scale, init_method,
            reg_eps, filter_len, strict_frac_order
systems:    system_taps | system_file, flip_at (identification/echo);
            primary_taps | primary_file, secondary_taps | secondary_file,
            secondary_model_taps | secondary_model_file (single control);
            n_sources, n_mics and the indexed forms primary_taps_<c>,
            secondary_taps_<v>_<c>, secondary_model_taps_<v>_<c>
            (or *_file_ variants) for multichannel control.
"""

from dataclasses import dataclass, field, fields

import numpy as np

from .anc import FX_ENGINE_NAMES
from .engines import ENGINE_NAMES, AlgoConfig
from .errors import ConfigError
from .signals import load_signal

__all__ = ["ExperimentConfig", "parse_config_text", "load_config", "config_as_dict"]

SCENARIOS = ("identify", "aec", "anc", "anc-multi")
INPUT_KINDS = ("gaussian-ar1", "cauchy-ar1", "file")


@dataclass
class ExperimentConfig:
    scenario: str = "identify"
    algorithm: str = "nkp-fonspn"
    samples: int = 50_000
    trials: int = 10
    seed: int = 0
    out: str | None = None

    input: str = "gaussian-ar1"
    ar_pole: float = 0.9
    input_variance: float = 1.0
    input_gamma: float = 0.1
    input_file: str | None = None
    normalize_input: bool = True

    noise_alpha: float | None = None
    noise_gamma: float | None = None

    mu: float = 0.01
    mu_b: float | None = None
    p_order: float = 1.4
    frac_order: float = 1.1
    rank: int = 2
    seg_len: int = 8
    n_seg: int = 8
    n_subbands: int = 4
    bank_taps: int = 33
    update_interval: int = 4
    switch_db: float | None = None
    switch_db_file: str | None = None
    calib_window: int = 5000
    init_scale: float = 7e-4
    init_method: str = "impulse"
    reg_eps: float = 1e-8
    filter_len: int | None = None
    strict_frac_order: bool = True

    system_taps: str | None = None
    system_file: str | None = None
    flip_at: int = 0

    primary_taps: str | None = None
    primary_file: str | None = None
    secondary_taps: str | None = None
    secondary_file: str | None = None
    secondary_model_taps: str | None = None
    secondary_model_file: str | None = None

    n_sources: int = 1
    n_mics: int = 1
    indexed_paths: dict = field(default_factory=dict)


_BOOL_FIELDS = {"normalize_input", "strict_frac_order"}
_INT_FIELDS = {
    "samples",
    "trials",
    "seed",
    "rank",
    "seg_len",
    "n_seg",
    "n_subbands",
    "bank_taps",
    "update_interval",
    "calib_window",
    "filter_len",
    "flip_at",
    "n_sources",
    "n_mics",
}
_FLOAT_FIELDS = {
    "ar_pole",
    "input_variance",
    "input_gamma",
    "noise_alpha",
    "noise_gamma",
    "mu",
    "mu_b",
    "p_order",
    "frac_order",
    "switch_db",
    "init_scale",
    "reg_eps",
}
_STR_FIELDS = {
    "scenario",
    "algorithm",
    "out",
    "input",
    "input_file",
    "switch_db_file",
    "init_method",
    "system_taps",
    "system_file",
    "primary_taps",
    "primary_file",
    "secondary_taps",
    "secondary_file",
    "secondary_model_taps",
    "secondary_model_file",
}
_INDEXED_PREFIXES = (
    "primary_taps_",
    "primary_file_",
    "secondary_taps_",
    "secondary_file_",
    "secondary_model_taps_",
    "secondary_model_file_",
)


def _parse_bool(key, raw):
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"field '{key}' must be a boolean, got '{raw}'")


def parse_config_text(text):
    """Parse config file text into an ExperimentConfig (no validation)."""
    cfg = ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)} - {"indexed_paths"}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got '{stripped}'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key.startswith(_INDEXED_PREFIXES):
            cfg.indexed_paths[key] = raw
            continue
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown field '{key}'")
        try:
            if key in _BOOL_FIELDS:
                value = _parse_bool(key, raw)
            elif key in _INT_FIELDS:
                value = int(raw)
            elif key in _FLOAT_FIELDS:
                value = float(raw)
            else:
                value = raw
        except ValueError as exc:
            raise ConfigError(f"field '{key}' has invalid value '{raw}': {exc}") from None
        setattr(cfg, key, value)
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file '{path}': {exc}") from exc
    return parse_config_text(text)


def parse_taps(raw, key):
    """Parse an inline comma/space separated tap list."""
    parts = [p for chunk in str(raw).split(",") for p in chunk.split()]
    if not parts:
        raise ConfigError(f"field '{key}' holds no taps")
    try:
        arr = np.array([float(p) for p in parts])
    except ValueError:
        raise ConfigError(f"field '{key}' holds a non-numeric tap") from None
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"field '{key}' holds a non-finite tap")
    return arr


def resolve_taps(cfg, base, required=False):
    """Fetch `<base>_taps` or `<base>_file` from a config; None if absent."""
    inline = getattr(cfg, f"{base}_taps")
    fileref = getattr(cfg, f"{base}_file")
    if inline is not None and fileref is not None:
        raise ConfigError(f"fields '{base}_taps' and '{base}_file' are mutually exclusive")
    if inline is not None:
        return parse_taps(inline, f"{base}_taps")
    if fileref is not None:
        try:
            return load_signal(fileref)
        except Exception as exc:
            raise ConfigError(f"field '{base}_file': {exc}") from exc
    if required:
        raise ConfigError(f"field '{base}_taps' or '{base}_file' is required for this scenario")
    return None


def resolve_indexed_taps(cfg, base, index):
    """Fetch `<base>_taps_<index>` / `<base>_file_<index>` (index like '2' or '1_3')."""
    inline = cfg.indexed_paths.get(f"{base}_taps_{index}")
    fileref = cfg.indexed_paths.get(f"{base}_file_{index}")
    if inline is not None and fileref is not None:
        raise ConfigError(
            f"fields '{base}_taps_{index}' and '{base}_file_{index}' are mutually exclusive"
        )
    if inline is not None:
        return parse_taps(inline, f"{base}_taps_{index}")
    if fileref is not None:
        try:
            return load_signal(fileref)
        except Exception as exc:
            raise ConfigError(f"field '{base}_file_{index}': {exc}") from exc
    raise ConfigError(f"field '{base}_taps_{index}' or '{base}_file_{index}' is required")


def algo_config(cfg):
    """Project the engine-relevant fields into an AlgoConfig."""
    return AlgoConfig(
        mu=cfg.mu,
        mu_b=cfg.mu_b,
        p_order=cfg.p_order,
        frac_order=cfg.frac_order,
        rank=cfg.rank,
        seg_len=cfg.seg_len,
        n_seg=cfg.n_seg,
        n_subbands=cfg.n_subbands,
        bank_taps=cfg.bank_taps,
        update_interval=cfg.update_interval,
        switch_db=cfg.switch_db,
        init_scale=cfg.init_scale,
        init_method=cfg.init_method,
        reg_eps=cfg.reg_eps,
        strict_frac_order=cfg.strict_frac_order,
    )


def validate_config(cfg):
    """Cross-field validation; raises ConfigError naming the field."""
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"field 'scenario' must be one of {SCENARIOS}, got '{cfg.scenario}'")
    engines = FX_ENGINE_NAMES if cfg.scenario in ("anc", "anc-multi") else ENGINE_NAMES
    if cfg.algorithm not in engines:
        raise ConfigError(
            f"field 'algorithm' '{cfg.algorithm}' is not valid for scenario "
            f"'{cfg.scenario}'; choose from {sorted(engines)}"
        )
    if cfg.samples < 1:
        raise ConfigError(f"field 'samples' must be >= 1, got {cfg.samples}")
    if cfg.trials < 1:
        raise ConfigError(f"field 'trials' must be >= 1, got {cfg.trials}")
    if cfg.input not in INPUT_KINDS:
        raise ConfigError(f"field 'input' must be one of {INPUT_KINDS}, got '{cfg.input}'")
    if cfg.input == "file" and cfg.input_file is None:
        raise ConfigError("field 'input_file' is required when input = file")
    if cfg.input != "file" and not abs(cfg.ar_pole) < 1.0:
        raise ConfigError(f"field 'ar_pole' must satisfy |pole| < 1, got {cfg.ar_pole}")
    if cfg.input == "gaussian-ar1" and not cfg.input_variance > 0.0:
        raise ConfigError(f"field 'input_variance' must be positive, got {cfg.input_variance}")
    if cfg.input == "cauchy-ar1" and not cfg.input_gamma > 0.0:
        raise ConfigError(f"field 'input_gamma' must be positive, got {cfg.input_gamma}")
    if (cfg.noise_alpha is None) != (cfg.noise_gamma is None):
        raise ConfigError("fields 'noise_alpha' and 'noise_gamma' must be given together")
    if cfg.noise_alpha is not None and not 0.0 < cfg.noise_alpha <= 2.0:
        raise ConfigError(f"field 'noise_alpha' must lie in (0, 2], got {cfg.noise_alpha}")
    if cfg.noise_gamma is not None and not cfg.noise_gamma > 0.0:
        raise ConfigError(f"field 'noise_gamma' must be positive, got {cfg.noise_gamma}")
    if cfg.flip_at < 0:
        raise ConfigError(f"field 'flip_at' must be >= 0, got {cfg.flip_at}")
    if cfg.scenario in ("anc", "anc-multi") and cfg.noise_alpha is not None:
        raise ConfigError(
            "fields 'noise_alpha'/'noise_gamma' model the additive identification "
            "disturbance and do not apply to control scenarios"
        )
    if cfg.switch_db is not None and cfg.switch_db_file is not None:
        raise ConfigError("fields 'switch_db' and 'switch_db_file' are mutually exclusive")
    if cfg.scenario == "anc-multi":
        if cfg.n_sources < 1 or cfg.n_mics < 1:
            raise ConfigError("fields 'n_sources' and 'n_mics' must be >= 1")
    try:
        algo_config(cfg).validate(engine=cfg.algorithm, noise_alpha=cfg.noise_alpha)
    except Exception as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def config_as_dict(cfg):
    """Manifest-ready plain dict (indexed path entries inlined)."""
    out = {}
    for f in fields(ExperimentConfig):
        if f.name == "indexed_paths":
            continue
        out[f.name] = getattr(cfg, f.name)
    for key, value in sorted(cfg.indexed_paths.items()):
        out[key] = value
    return out
