import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Dict, Optional, Tuple

from models.roof.trig_polynomial import RoofFunction, TrigPolynomial
from models.spectral.automorphism import IntegerMatrix, companion
from scripts.logging_config import logger
from utils.errors import ConfigInvalid
from utils.helper import config_hash

DEFAULT_NORMS = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4]

# Parameters accepted per experiment kind, with their defaults.
KIND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    'catalog': {'d': 3, 'coeff_bound': 1},
    'livshits': {'n_max': 6, 'trunc': 8, 'tol': 1e-8},
    'pcf': {'count': 8, 'radius': 0.05, 'tol': 1e-10},
    'subbundle': {'budget': 200, 'radius': 0.05, 'conjugacy_translation': None, 'time_shift': 0.0,
                  'grid_size': 3, 'patch_radius': 1e-3, 'invariance_samples': 4},
    'claim44': {'steps': [1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4], 'amplitude': 0.05, 'direction': None,
                'norms': DEFAULT_NORMS, 'max_period': 12},
    'sweep': {'directions': 8, 'amplitudes': [0.01, 0.02, 0.04], 'max_period': 12},
    'bunching': {'returns': [1, 2, 4], 'nu_grid': None, 'sample_steps': 40, 'samples': 1024},
}
KINDS = tuple(KIND_DEFAULTS)
_TOP_KEYS = {'kind', 'matrix', 'roof', 'translation', 'params', 'seed', 'out_dir', 'workers'}


@dataclass(frozen=True)
class MatrixSpec:
    """Base automorphism given by explicit rows or by monic polynomial coefficients."""
    rows: Optional[Tuple[Tuple[int, ...], ...]] = None
    poly: Optional[Tuple[int, ...]] = None

    @classmethod
    def from_dict(cls, data: dict) -> "MatrixSpec":
        _reject_unknown(data, {'rows', 'poly'}, 'matrix')
        if ('rows' in data) == ('poly' in data):
            raise ConfigInvalid("matrix needs exactly one of 'rows' or 'poly'")
        try:
            if 'rows' in data:
                return cls(rows=tuple(tuple(_strict_int(v) for v in row) for row in data['rows']))
            return cls(poly=tuple(_strict_int(v) for v in data['poly']))
        except TypeError as e:
            raise ConfigInvalid(f"matrix entries must be integer lists: {e}") from e

    def to_dict(self) -> dict:
        if self.rows is not None:
            return {'rows': [list(r) for r in self.rows]}
        return {'poly': list(self.poly)}

    def build(self) -> IntegerMatrix:
        if self.rows is not None:
            return IntegerMatrix.from_rows(self.rows)
        return companion(self.poly)


@dataclass(frozen=True)
class RoofSpec:
    """Roof as a list of Fourier terms {k, re, im}."""
    terms: Tuple[Tuple[Tuple[int, ...], float, float], ...]

    @classmethod
    def from_dict(cls, data: dict) -> "RoofSpec":
        _reject_unknown(data, {'terms'}, 'roof')
        terms = []
        for term in data.get('terms', []):
            if not isinstance(term, dict):
                raise ConfigInvalid("roof terms must be objects")
            _reject_unknown(term, {'k', 're', 'im'}, 'roof term')
            if 'k' not in term:
                raise ConfigInvalid("roof term without frequency 'k'")
            try:
                terms.append((tuple(_strict_int(v) for v in term['k']), float(term.get('re', 0.0)),
                              float(term.get('im', 0.0))))
            except (TypeError, ValueError) as e:
                raise ConfigInvalid(f"Bad roof term {term}: {e}") from e
        if not terms:
            raise ConfigInvalid("roof needs at least one term")
        return cls(tuple(terms))

    def to_dict(self) -> dict:
        return {'terms': [{'k': list(k), 're': re, 'im': im} for k, re, im in self.terms]}

    def build(self, dim: int) -> RoofFunction:
        return RoofFunction.certify(TrigPolynomial.from_json_dict(
            {'dim': dim, 'terms': [{'k': list(k), 're': re, 'im': im} for k, re, im in self.terms]}))


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One experiment run.

    Attributes:
        kind (str): Subcommand, one of KINDS.
        matrix (Optional[MatrixSpec]): Base automorphism (all kinds but catalog).
        roof (Optional[RoofSpec]): Roof (all kinds but catalog).
        translation (Tuple[str, ...]): Rational translation of the base map, as strings.
        params (Dict[str, Any]): Kind parameters with defaults filled in.
        seed (int): Seed for every random draw.
        out_dir (str): Report directory.
        workers (int): Worker processes.
    """
    kind: str
    matrix: Optional[MatrixSpec] = None
    roof: Optional[RoofSpec] = None
    translation: Tuple[str, ...] = ()
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    out_dir: str = 'results'
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """
        Parses and validates a config dictionary.

        Raises:
            ConfigInvalid: Unknown keys, bad values, a matrix that is not an automorphism or a
                roof that cannot be certified positive.
        """
        if not isinstance(data, dict):
            raise ConfigInvalid("config must be a JSON object")
        _reject_unknown(data, _TOP_KEYS, 'config')
        kind = data.get('kind')
        if kind not in KIND_DEFAULTS:
            raise ConfigInvalid(f"kind must be one of {', '.join(KINDS)}, got {kind!r}")

        params = dict(KIND_DEFAULTS[kind])
        given = data.get('params', {})
        if not isinstance(given, dict):
            raise ConfigInvalid("params must be an object")
        _reject_unknown(given, set(params), f"{kind} params")
        params.update(given)

        seed = data.get('seed', 0)
        workers = data.get('workers', 1)
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
            raise ConfigInvalid(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        if not isinstance(workers, int) or workers < 1:
            raise ConfigInvalid(f"workers must be a positive integer, got {workers!r}")
        try:
            translation = tuple(str(Fraction(str(c))) for c in data.get('translation', []))
        except (ValueError, ZeroDivisionError) as e:
            raise ConfigInvalid(f"translation entries must be rationals: {e}") from e

        config = cls(
            kind=kind,
            matrix=MatrixSpec.from_dict(data['matrix']) if data.get('matrix') is not None else None,
            roof=RoofSpec.from_dict(data['roof']) if data.get('roof') is not None else None,
            translation=translation,
            params=params,
            seed=seed,
            out_dir=str(data.get('out_dir', 'results')),
            workers=workers,
        )
        config.validate()
        return config

    def validate(self) -> None:
        if self.kind == 'catalog':
            return
        if self.matrix is None or self.roof is None:
            raise ConfigInvalid(f"{self.kind} needs both 'matrix' and 'roof'")
        try:
            matrix = self.matrix.build()
            self.roof.build(matrix.dim)
        except ValueError as e:
            raise ConfigInvalid(str(e)) from e
        if self.translation and len(self.translation) != matrix.dim:
            raise ConfigInvalid(f"translation has {len(self.translation)} entries, expected {matrix.dim}")

    def to_dict(self) -> dict:
        data = {'kind': self.kind, 'params': dict(self.params), 'seed': self.seed,
                'out_dir': self.out_dir, 'workers': self.workers}
        if self.matrix is not None:
            data['matrix'] = self.matrix.to_dict()
        if self.roof is not None:
            data['roof'] = self.roof.to_dict()
        if self.translation:
            data['translation'] = list(self.translation)
        return data

    def with_overrides(self, out_dir: Optional[str] = None, seed: Optional[int] = None,
                       workers: Optional[int] = None) -> "ExperimentConfig":
        changes = {k: v for k, v in (('out_dir', out_dir), ('seed', seed), ('workers', workers)) if v is not None}
        updated = replace(self, **changes)
        return ExperimentConfig.from_dict(updated.to_dict())

    @property
    def hash(self) -> str:
        """Hash of the report-relevant fields; out_dir and workers do not change reports."""
        data = self.to_dict()
        data.pop('out_dir')
        data.pop('workers')
        return config_hash(data)

    def build_matrix(self) -> IntegerMatrix:
        return self.matrix.build()

    def build_roof(self) -> RoofFunction:
        return self.roof.build(self.build_matrix().dim)

    def build_translation(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(c) for c in self.translation)


def _strict_int(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"{value!r} is not an integer")
    return value


def _reject_unknown(data: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigInvalid(f"Unknown {where} keys: {', '.join(unknown)}")


def load_config(path: str) -> ExperimentConfig:
    """
    Reads an ExperimentConfig from a JSON file.

    Raises:
        ConfigInvalid: The file is missing, is not JSON, or does not validate.
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Error reading config {path}: {e}")
        raise ConfigInvalid(f"Cannot read config {path}: {e}") from e
    config = ExperimentConfig.from_dict(data)
    logger.info(f"Loaded {config.kind} config from {path} (hash {config.hash[:12]})")
    return config
