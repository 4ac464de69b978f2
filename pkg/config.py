# config.py
import io
import math
import os
from dataclasses import dataclass, field

from dotenv import dotenv_values, load_dotenv

from models.errors import ConfigError, ModelParamsError
from models.friction_model import PHI_FAMILIES, ModelParams, make_phi

load_dotenv()


class Config:
    # process-wide defaults, overridable from the environment / .env
    RTOL = float(os.environ.get('STICTION_RTOL', '1e-9'))
    ATOL = float(os.environ.get('STICTION_ATOL', '1e-11'))
    OUT_DIR = os.environ.get('STICTION_OUT', 'results')
    THREADS = int(os.environ.get('STICTION_THREADS', '1'))
    VERSION = '0.3.0'


def _float_list(text):
    return tuple(float(v) for v in text.split(',') if v.strip())


# key -> (parser, default text); defaults reproduce the standard parameter set
SCHEMA = {
    'MODEL_DELTA': (float, '0.6'),
    'MODEL_MU_S': (float, '1.1'),
    'MODEL_MU_D': (float, '0.4'),
    'MODEL_XI': (float, '0.795'),
    'MODEL_EPS': (float, '0.01'),
    'PHI_FAMILY': (str, 'standard'),
    'SINGULAR_SEED_OFFSET': (float, '1e-06'),
    'SINGULAR_EXTENT': (float, repr(2 * math.pi)),
    'SINGULAR_XI_VALUES': (_float_list, ''),
    'THRESHOLDS_PD_LO': (float, '0.65'),
    'THRESHOLDS_PD_HI': (float, '1.2'),
    'THRESHOLDS_T_LO': (float, '0.72'),
    'THRESHOLDS_T_HI': (float, '0.8'),
    'THRESHOLDS_SWEEP_MU_D': (_float_list, ''),
    'THRESHOLDS_SWEEP_XI': (_float_list, ''),
    'RETURN_MAP_THETA_STAR': (float, '0.0'),
    'RETURN_MAP_POINTS': (int, '200'),
    'RETURN_MAP_CONVERGENCE_EPS': (_float_list, ''),
    'RETURN_MAP_CONVERGENCE_Y2': (_float_list, ''),
    'CYCLES_THETA_STAR': (float, '0.0'),
    'CYCLES_SEEDS_Y2': (_float_list, ''),
    'CONTINUE_XI_START': (float, '0.95'),
    'CONTINUE_XI_STOP': (float, '0.75'),
    'CONTINUE_STEP': (float, '0.005'),
    'CONTINUE_MIN_STEP': (float, '1e-06'),
    'CONTINUE_MAX_POINTS': (int, '400'),
    'CONTINUE_THETA_STAR': (float, '0.0'),
    'CONTINUE_SEED_Y2': (float, '0.0'),
    'SIMULATE_X0': (float, '0.0'),
    'SIMULATE_Y0': (float, '0.0'),
    'SIMULATE_THETA0': (float, '0.0'),
    'SIMULATE_PERIODS': (float, '6.0'),
    'SIMULATE_DT_OUT': (float, '0.05'),
    'SIMULATE_THRESHOLD': (float, '0.0'),
    'EVIDENCE_GRID': (int, '16'),
    'EVIDENCE_DEPTHS': (int, '3'),
    'EVIDENCE_MAX_ITER': (int, '8'),
    'EVIDENCE_WIDTH': (float, '0.0'),
    'TOL_RTOL': (float, repr(Config.RTOL)),
    'TOL_ATOL': (float, repr(Config.ATOL)),
    'TOL_NEWTON': (float, '1e-09'),
    'TOL_THRESHOLD': (float, '1e-06'),
}

BRACKETS = (('THRESHOLDS_PD_LO', 'THRESHOLDS_PD_HI'), ('THRESHOLDS_T_LO', 'THRESHOLDS_T_HI'))


def _format(value):
    if isinstance(value, tuple):
        return ','.join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class RunConfig:
    """Flat KEY=value run configuration."""
    values: dict = field(default_factory=dict)

    @classmethod
    def defaults(cls):
        return cls.from_mapping({})

    @classmethod
    def from_mapping(cls, mapping):
        unknown = sorted(set(mapping) - set(SCHEMA))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values = {}
        for key, (parse, default) in SCHEMA.items():
            text = mapping.get(key)
            text = default if text is None or text == '' else text
            try:
                values[key] = parse(text)
            except ValueError as e:
                raise ConfigError(f"{key}: cannot parse {text!r} ({e})") from e
        config = cls(values)
        config.validate()
        return config

    @classmethod
    def from_text(cls, text):
        return cls.from_mapping(dotenv_values(stream=io.StringIO(text)))

    @classmethod
    def load(cls, path=None):
        if path is None:
            return cls.defaults()
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        return cls.from_mapping(dotenv_values(path))

    def __getitem__(self, key):
        return self.values[key]

    def section(self, prefix):
        """Keys of one section, lower-cased, prefix stripped."""
        prefix = prefix.upper().rstrip('_') + '_'
        return {k[len(prefix):].lower(): v for k, v in self.values.items() if k.startswith(prefix)}

    def with_overrides(self, **overrides):
        values = dict(self.values)
        for key, value in overrides.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key: {key}")
            values[key] = value
        config = RunConfig(values)
        config.validate()
        return config

    def with_tol_override(self, rtol):
        """Replace every relative tolerance."""
        return self.with_overrides(TOL_RTOL=float(rtol), TOL_NEWTON=float(rtol))

    @property
    def tols(self):
        return (self['TOL_RTOL'], self['TOL_ATOL'])

    def model_params(self, **changes):
        kwargs = dict(delta=self['MODEL_DELTA'], mu_s=self['MODEL_MU_S'], mu_d=self['MODEL_MU_D'],
                      xi=self['MODEL_XI'], eps=self['MODEL_EPS'])
        kwargs.update(changes)
        try:
            params = ModelParams(**kwargs)
            if self['PHI_FAMILY'] != 'standard':
                params = params.with_(phi=make_phi(self['PHI_FAMILY'], params.delta, params.mu))
        except ModelParamsError as e:
            raise ConfigError(f"invalid model parameters: {e}") from e
        return params

    def validate(self):
        if self['PHI_FAMILY'] not in PHI_FAMILIES:
            raise ConfigError(f"PHI_FAMILY must be one of {sorted(PHI_FAMILIES)}, got {self['PHI_FAMILY']!r}")
        for key, value in self.values.items():
            if key.startswith('TOL_') and not value > 0:
                raise ConfigError(f"{key} must be positive, got {value}")
        for lo, hi in BRACKETS:
            if not self[lo] < self[hi]:
                raise ConfigError(f"bracket {lo}={self[lo]} must lie below {hi}={self[hi]}")
        for key in ('RETURN_MAP_POINTS', 'CONTINUE_MAX_POINTS', 'EVIDENCE_GRID', 'EVIDENCE_DEPTHS',
                    'EVIDENCE_MAX_ITER'):
            if self[key] < 1:
                raise ConfigError(f"{key} must be at least 1, got {self[key]}")
        if not self['CONTINUE_STEP'] > 0 or not self['SIMULATE_PERIODS'] > 0:
            raise ConfigError("CONTINUE_STEP and SIMULATE_PERIODS must be positive")
        self.model_params()

    def to_text(self):
        return ''.join(f"{key}={_format(self.values[key])}\n" for key in sorted(self.values))
