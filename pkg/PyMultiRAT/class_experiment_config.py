from __future__ import annotations

import collections
import copy
import hashlib
import os
from typing import Any

import numpy as np
import yaml

from PyMultiRAT import helper_baselines as bsl
from PyMultiRAT import helper_generic as hlp
from PyMultiRAT import helper_radio as rad
from PyMultiRAT.class_distortion_model import Distortion_Model
from PyMultiRAT.class_exceptions import Config_Error
from PyMultiRAT.class_profiles import Channel_Params, Pen_Profile, Ran_Profile
from PyMultiRAT.class_scenario import Scenario
from PyMultiRAT.class_team import Network_Config
from PyMultiRAT.helper_training import Train_Config

logger = hlp.get_logger(__name__)

DATA_DIR = os.path.join(os.path.dirname(os.path.realpath(__file__)), 'data')
SHIPPED_CONFIGS = ('default', 'desk', 'smoke')

REQUIRED = object()

SCHEMA = {
    'scenario': {
        'step_duration_s': 10.0,
        'resource_share_ms': 20.0,
        'seizure_mean_duration_steps': 10.0,
        'kappa_max': 0.99,
        'kappa_init': 0.5,
        'connection_threshold': 1e-3,
    },
    'rans': {
        'names': REQUIRED,
        'bandwidth_hz': 20e6,
        'cost_per_bit': REQUIRED,
        'access_delay_ms': 0.0,
        'energy_scale': 1.0,
        'energy_offset_j': 1e-4,
        'nominal_rate_mbps': None,
    },
    'pens': {
        'count': REQUIRED,
        'raw_data_mb': 1.0,
        'battery_capacity_j': 0.2,
        'seizure_prob': 0.1,
        'weight_energy': 0.25,
        'weight_cost': 0.25,
        'weight_latency': 0.25,
        'weight_distortion': 0.25,
        'seizure_weight_latency': 0.5,
        'seizure_weight_distortion': 0.5,
    },
    'channel': {
        'tx_power_dbm': 20.0,
        'noise_density_dbm_per_hz': -174.0,
        'path_loss': 3.6e-6,
        'ber': 1e-3,
        'rayleigh_scale': 1.0,
        'rate_cap_shared': True,
    },
    'distortion': {
        'c1': 0.5,
        'c2': 3.0,
        'c3': 0.92,
        'c4': 2.0,
        'c5': 1.0,
        'c6': 2.859,
        'filter_length': 4.0,
        'validation_samples': 1000,
    },
    'normalization': {
        'energy_max_j': None,
        'cost_max': None,
        'latency_max_s': None,
        'min_usable_bw_fraction': 0.05,
        'weak_fading_mag_sq': 0.05,
    },
    'network': {
        'hidden_sizes': [64, 64],
        'hidden_activation': 'relu',
        'actor_lr': 1e-4,
        'critic_lr': 3e-4,
        'adam_beta1': 0.9,
        'adam_beta2': 0.999,
        'adam_epsilon': 1e-8,
        'grad_clip_norm': 1.0,
    },
    'train': {
        'episodes': 6000,
        'steps_per_episode': 200,
        'batch_size': 128,
        'gamma': 0.95,
        'buffer_capacity': 10000,
        'train_interval': 1,
        'updates_per_train': 1,
        'soft_epsilon': 0.01,
        'warmup_episodes': 500,
        'noise_initial': 1.0,
        'noise_final': 0.05,
        'noise_decay_episodes': 2000,
        'seed': 0,
        'log_interval': 100,
    },
    'eval': {
        'seeds': list(range(1000, 1010)),
        'max_steps': 3000,
        'parallel': False,
        'n_cores': None,
    },
    'baselines': {
        'utilization_resolution': 11,
        'ratio_resolution': 21,
        'onsra_max_rounds': 20,
        'onsra_tol': 1e-9,
        'onsra_pg_steps': 20,
        'violation_penalty': 1e6,
        'recompute_on': 'seizure',
    },
    'output': {
        'dir': 'multirat_output',
    },
}

# Sections that shape a trained model. Seeds, run lengths and paths are left
# out so that they can be overridden without invalidating a checkpoint.
HASHED_SECTIONS = (
    'scenario',
    'rans',
    'pens',
    'channel',
    'distortion',
    'normalization',
    'network',
)

_STRING_KEYS = {
    ('rans', 'names'),
    ('network', 'hidden_activation'),
    ('baselines', 'recompute_on'),
    ('output', 'dir'),
}
_BOOL_KEYS = {('channel', 'rate_cap_shared'), ('eval', 'parallel')}
_INT_KEYS = {
    ('pens', 'count'),
    ('distortion', 'validation_samples'),
    ('network', 'hidden_sizes'),
    ('eval', 'seeds'),
    ('eval', 'max_steps'),
    ('eval', 'n_cores'),
    ('baselines', 'utilization_resolution'),
    ('baselines', 'ratio_resolution'),
    ('baselines', 'onsra_max_rounds'),
    ('baselines', 'onsra_pg_steps'),
} | {
    ('train', key)
    for key in [
        'episodes',
        'steps_per_episode',
        'batch_size',
        'buffer_capacity',
        'train_interval',
        'updates_per_train',
        'warmup_episodes',
        'noise_decay_episodes',
        'seed',
        'log_interval',
    ]
}
# Keys of the "rans"/"pens" sections that are not per-entity values.
_SCALAR_ENTITY_KEYS = {('pens', 'count'), ('rans', 'names')}


class Config_Section(collections.UserDict):
    """
    One section of an experiment configuration. Its objects behave like
    dictionaries restricted to the section's allowable keys.

    Parameters
    ----------
    name : str
        Section name.
    values : dict[str, Any]
        User-provided key/value pairs. Missing keys get their defaults.

    Attributes
    ----------
    name : str
        Same as the input parameter.
    data : dict[str, Any]
        The values (defaults applied), stored as a regular dictionary.
    allowable_keys : set[str]
        The keys the section accepts.

    Raises
    ------
    KeyError
        When ``name`` is not a known section, or when ``values`` contains a
        key the section does not accept
    Config_Error
        When a required key is missing, or a value has the wrong type
    """

    def __init__(self, name: str, values: dict[str, Any] | None) -> None:
        if name not in SCHEMA:
            raise KeyError(
                '`%s`: unknown section (allowed: %s)' % (name, sorted(SCHEMA))
            )

        values = {} if values is None else values
        if not isinstance(values, dict):
            raise Config_Error(name, None, 'must be a mapping of key: value')

        schema = SCHEMA[name]
        unknown = sorted(set(values) - set(schema))
        if unknown:
            raise KeyError(
                '`%s.%s`: unknown key (allowed: %s)'
                % (name, unknown[0], sorted(schema)),
            )

        data = {}
        for key, default in schema.items():
            if key in values:
                data[key] = _coerce(name, key, values[key])
            elif default is REQUIRED:
                raise Config_Error(name, key, 'required key is missing')
            else:
                data[key] = copy.deepcopy(default)

        self.name = name
        self.allowable_keys = set(schema)
        super().__init__(data)

    def __setitem__(self, key, item) -> None:
        if key not in self.allowable_keys:
            raise KeyError(
                '`%s.%s`: unknown key (allowed: %s)'
                % (self.name, key, sorted(self.allowable_keys)),
            )

        self.data[key] = _coerce(self.name, key, item)

    def __delitem__(self, key) -> None:
        raise ValueError('Deleting keys from a configuration section is not allowed.')


def _coerce_scalar(section: str, key: str, value: Any) -> Any:
    if value is None:
        return None

    if (section, key) in _STRING_KEYS:
        return str(value)

    if (section, key) in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise Config_Error(section, key, 'must be true or false')

        return value

    # YAML reads "1e-6" (no dot) as a string.
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            raise Config_Error(
                section, key, 'must be a number, not "%s"' % value
            ) from None

    if not hlp.is_number(value):
        raise Config_Error(section, key, 'must be a number')

    if (section, key) in _INT_KEYS:
        if not hlp.is_int(value):
            raise Config_Error(section, key, 'must be an integer')

        return int(value)

    return float(value)


def _coerce(section: str, key: str, value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [_coerce_scalar(section, key, _) for _ in value]

    return _coerce_scalar(section, key, value)


class Experiment_Config:
    """
    A complete, validated experiment: scenario, networks, training,
    evaluation, baselines and output settings.

    Parameters
    ----------
    sections : dict[str, dict[str, Any]]
        Raw section dictionaries (as read from YAML). Missing sections get
        all their defaults, except "rans" and "pens" which are required.

    Attributes
    ----------
    sections : dict[str, Config_Section]
        The validated sections with defaults applied.
    n_pens : int
        N.
    n_rans : int
        M.

    Raises
    ------
    KeyError
        When an unknown section or key is present
    Config_Error
        When a required key is missing or a constraint is broken; the
        message names the key and the constraint
    """

    def __init__(self, sections: dict[str, dict[str, Any]]) -> None:
        if not isinstance(sections, dict):
            raise Config_Error('config', None, 'must be a mapping of sections')

        for name in sections:
            if name not in SCHEMA:
                raise KeyError(
                    '`%s`: unknown section (allowed: %s)'
                    % (name, sorted(SCHEMA)),
                )

        for name in ['rans', 'pens']:
            if name not in sections:
                raise Config_Error(name, None, 'required section is missing')

        self.sections = {
            name: Config_Section(name, sections.get(name))
            for name in SCHEMA
        }
        self._validate()

    def __getitem__(self, section: str) -> Config_Section:
        return self.sections[section]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Experiment_Config):
            return NotImplemented

        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return 'Experiment_Config(N=%d, M=%d, hash=%s)' % (
            self.n_pens,
            self.n_rans,
            self.config_hash()[:12],
        )

    @property
    def n_pens(self) -> int:
        """N"""
        return self.sections['pens']['count']

    @property
    def n_rans(self) -> int:
        """M"""
        return len(self.sections['rans']['names'])

    def to_dict(self) -> dict[str, dict[str, Any]]:
        """
        The canonical form: every section with defaults applied and values
        in the units of the key names.

        Returns
        -------
        dict[str, dict[str, Any]]
            A deep copy of the section data.
        """
        return {
            name: copy.deepcopy(section.data)
            for name, section in self.sections.items()
        }

    def serialize(self) -> str:
        """
        Dump the canonical form as YAML with sorted keys.

        Returns
        -------
        str
            The YAML text. ``parse_config`` of it gives an equal config.
        """
        return yaml.safe_dump(
            self.to_dict(), sort_keys=True, default_flow_style=None
        )

    def config_hash(self) -> str:
        """
        SHA-256 of the canonical YAML of the model-shaping sections.

        Returns
        -------
        str
            Hex digest.
        """
        hashed = {name: self.sections[name].data for name in HASHED_SECTIONS}
        text = yaml.safe_dump(hashed, sort_keys=True, default_flow_style=None)
        return hashlib.sha256(text.encode('utf-8')).hexdigest()

    def with_seed(self, seed: int) -> Experiment_Config:
        """
        A copy with the training seed replaced by ``seed`` and the
        evaluation seeds replaced by ``seed, seed + 1, ...`` (same count).

        Parameters
        ----------
        seed : int
            The new master seed.

        Returns
        -------
        Experiment_Config
            The new config. The config hash is unchanged.

        Raises
        ------
        Config_Error
            When ``seed`` is not a non-negative integer
        """
        if not hlp.is_int(seed) or seed < 0:
            raise Config_Error('train', 'seed', 'must be a non-negative integer')

        raw = self.to_dict()
        raw['train']['seed'] = int(seed)
        raw['eval']['seeds'] = [
            int(seed) + k for k in range(len(raw['eval']['seeds']))
        ]
        return Experiment_Config(raw)

    def _entity_values(
            self,
            section: str,
            key: str,
            length: int,
    ) -> np.ndarray:
        value = self.sections[section][key]
        try:
            return hlp.check_length_or_extend_to_array(
                value, length, name='`%s.%s`' % (section, key)
            )
        except (TypeError, ValueError) as exc:
            raise Config_Error(
                section,
                key,
                'must be a number or a list of %d numbers' % length,
            ) from exc

    def _validate(self) -> None:
        pens = self.sections['pens']
        if pens['count'] is None or pens['count'] < 1:
            raise Config_Error('pens', 'count', 'must be an integer >= 1')

        names = self.sections['rans']['names']
        if not isinstance(names, list) or len(names) == 0:
            raise Config_Error('rans', 'names', 'must be a non-empty list')

        if len(set(names)) != len(names):
            raise Config_Error('rans', 'names', 'names must be unique')

        for key in SCHEMA['rans']:
            if ('rans', key) in _SCALAR_ENTITY_KEYS:
                continue

            if key == 'nominal_rate_mbps':
                self._nominal_rates()
                continue

            self._entity_values('rans', key, self.n_rans)

        for key in SCHEMA['pens']:
            if ('pens', key) not in _SCALAR_ENTITY_KEYS:
                self._entity_values('pens', key, self.n_pens)

        train = self.sections['train']
        if not 0 <= train['gamma'] < 1:
            raise Config_Error('train', 'gamma', 'discount factor must be < 1')

        if train['batch_size'] > train['buffer_capacity']:
            raise Config_Error(
                'train', 'batch_size', 'must not exceed `train.buffer_capacity`'
            )

        evals = self.sections['eval']
        if not isinstance(evals['seeds'], list) or len(evals['seeds']) == 0:
            raise Config_Error('eval', 'seeds', 'must be a non-empty list')

        if any(_ < 0 for _ in evals['seeds']):
            raise Config_Error('eval', 'seeds', 'must be non-negative integers')

        if evals['max_steps'] < 1:
            raise Config_Error('eval', 'max_steps', 'must be >= 1')

        if evals['n_cores'] is not None and evals['n_cores'] < 1:
            raise Config_Error('eval', 'n_cores', 'must be >= 1 or null')

        baselines = self.sections['baselines']
        if baselines['recompute_on'] not in ('seizure', 'step'):
            raise Config_Error(
                'baselines', 'recompute_on', 'must be "seizure" or "step"'
            )

        for key in ['onsra_max_rounds', 'onsra_pg_steps']:
            if baselines[key] < 1:
                raise Config_Error('baselines', key, 'must be >= 1')

        if baselines['violation_penalty'] <= 0:
            raise Config_Error('baselines', 'violation_penalty', 'must be > 0')

        network = self.sections['network']
        if not isinstance(network['hidden_sizes'], list) or any(
            _ < 1 for _ in network['hidden_sizes']
        ):
            raise Config_Error(
                'network', 'hidden_sizes', 'must be a list of positive integers'
            )

        if network['hidden_activation'] not in ('relu', 'tanh'):
            raise Config_Error(
                'network', 'hidden_activation', 'must be "relu" or "tanh"'
            )

        # The object constructors re-check every module-level invariant.
        for section, builder in [
            ('scenario', self.build_scenario),
            ('network', self.build_network_config),
            ('train', self.build_train_config),
            ('baselines', self.build_grid_spec),
        ]:
            try:
                builder()
            except Config_Error:
                raise
            except (TypeError, ValueError) as exc:
                raise Config_Error(section, None, str(exc)) from exc

    def _nominal_rates(self) -> list[float | None]:
        value = self.sections['rans']['nominal_rate_mbps']
        if not isinstance(value, list):
            value = [value] * self.n_rans

        if len(value) != self.n_rans:
            raise Config_Error(
                'rans',
                'nominal_rate_mbps',
                'must be null, a number or a list of %d entries' % self.n_rans,
            )

        if any(_ is not None and _ <= 0 for _ in value):
            raise Config_Error('rans', 'nominal_rate_mbps', 'must be positive')

        return value

    def build_scenario(self) -> Scenario:
        """
        Build the scenario, converting dBm to W, Mb to bits, Mbps to bit/s
        and ms to s.

        Returns
        -------
        Scenario
            The scenario.
        """
        sc = self.sections['scenario']
        rans_cfg = self.sections['rans']
        pens_cfg = self.sections['pens']
        ch = self.sections['channel']
        dist = self.sections['distortion']
        norm = self.sections['normalization']
        M, N = self.n_rans, self.n_pens

        bandwidth = self._entity_values('rans', 'bandwidth_hz', M)
        cost = self._entity_values('rans', 'cost_per_bit', M)
        delay_ms = self._entity_values('rans', 'access_delay_ms', M)
        psi = self._entity_values('rans', 'energy_scale', M)
        offset = self._entity_values('rans', 'energy_offset_j', M)
        caps = self._nominal_rates()
        rans = [
            Ran_Profile(
                j,
                bandwidth[j],
                cost[j],
                delay_ms[j] / 1e3,
                energy_scale=psi[j],
                energy_offset_j=offset[j],
                nominal_rate_cap_bps=None if caps[j] is None else caps[j] * 1e6,
                name=rans_cfg['names'][j],
            )
            for j in range(M)
        ]

        per_pen = {
            key: self._entity_values('pens', key, N)
            for key in SCHEMA['pens']
            if ('pens', key) not in _SCALAR_ENTITY_KEYS
        }
        pens = [
            Pen_Profile(
                i,
                per_pen['raw_data_mb'][i] * 1e6,
                per_pen['battery_capacity_j'][i],
                per_pen['seizure_prob'][i],
                weights_normal=(
                    per_pen['weight_energy'][i],
                    per_pen['weight_cost'][i],
                    per_pen['weight_latency'][i],
                    per_pen['weight_distortion'][i],
                ),
                weights_seizure=(
                    per_pen['seizure_weight_latency'][i],
                    per_pen['seizure_weight_distortion'][i],
                ),
            )
            for i in range(N)
        ]

        channel = Channel_Params(
            rad.dbm_to_watt(ch['tx_power_dbm']),
            rad.dbm_to_watt(ch['noise_density_dbm_per_hz']),
            ch['path_loss'],
            ber=ch['ber'],
        )
        model = Distortion_Model(
            *[dist['c%d' % k] for k in range(1, 7)],
            filter_length=dist['filter_length'],
            kappa_max=sc['kappa_max'],
            n_validation_samples=dist['validation_samples'],
        )
        return Scenario(
            rans,
            pens,
            channel,
            model,
            resource_share_s=sc['resource_share_ms'] / 1e3,
            step_duration_s=sc['step_duration_s'],
            seizure_mean_duration=sc['seizure_mean_duration_steps'],
            kappa_init=sc['kappa_init'],
            connection_threshold=sc['connection_threshold'],
            rate_cap_shared=ch['rate_cap_shared'],
            rayleigh_scale=ch['rayleigh_scale'],
            energy_max_j=norm['energy_max_j'],
            cost_max=norm['cost_max'],
            latency_max_s=norm['latency_max_s'],
            min_usable_bw_fraction=norm['min_usable_bw_fraction'],
            weak_fading_mag_sq=norm['weak_fading_mag_sq'],
        )

    def build_network_config(self) -> Network_Config:
        """
        Returns
        -------
        Network_Config
            Architecture and optimizer settings.
        """
        return Network_Config(**self.sections['network'].data)

    def build_train_config(self) -> Train_Config:
        """
        Returns
        -------
        Train_Config
            Training settings.
        """
        return Train_Config(**self.sections['train'].data)

    def build_grid_spec(self) -> bsl.Grid_Spec:
        """
        Returns
        -------
        Grid_Spec
            The baselines' search grid.
        """
        baselines = self.sections['baselines']
        return bsl.Grid_Spec(
            baselines['utilization_resolution'], baselines['ratio_resolution']
        )

    def baseline_kwargs(self) -> dict[str, Any]:
        """
        Keyword arguments of ``Baseline_Policy`` other than tag, scenario
        and grid.

        Returns
        -------
        dict[str, Any]
            ``recompute_on``, ``max_rounds``, ``tol``, ``pg_steps`` and
            ``penalty``.
        """
        baselines = self.sections['baselines']
        return {
            'recompute_on': baselines['recompute_on'],
            'max_rounds': baselines['onsra_max_rounds'],
            'tol': baselines['onsra_tol'],
            'pg_steps': baselines['onsra_pg_steps'],
            'penalty': baselines['violation_penalty'],
        }


def parse_config(text: str) -> Experiment_Config:
    """
    Parse and validate an experiment configuration.

    Parameters
    ----------
    text : str
        YAML text made of flat sections of ``key: value`` pairs.

    Returns
    -------
    Experiment_Config
        The validated configuration with defaults applied.

    Raises
    ------
    Config_Error
        When the text is not valid YAML, a required key is missing or a
        constraint is broken
    KeyError
        When an unknown section or key is present
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise Config_Error('config', None, 'invalid YAML: %s' % exc) from exc

    return Experiment_Config({} if raw is None else raw)


def load_config(path_or_name: str) -> Experiment_Config:
    """
    Load a configuration file, or one of the shipped configurations by name
    ("default", "desk" or "smoke").

    Parameters
    ----------
    path_or_name : str
        File path, or shipped configuration name.

    Returns
    -------
    Experiment_Config
        The validated configuration.

    Raises
    ------
    FileNotFoundError
        When the file does not exist
    """
    path = path_or_name
    if not os.path.exists(path) and path_or_name in SHIPPED_CONFIGS:
        path = os.path.join(DATA_DIR, '%s.yaml' % path_or_name)

    with open(path, encoding='utf-8') as fp:
        text = fp.read()

    logger.debug('Loaded configuration from %s', path)
    return parse_config(text)
