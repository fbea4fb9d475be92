#
# Run configuration: a YAML document with the sections
#
#   scene:         inline {background_range, primitives} or {file: path}
#   pattern:       rows, k_design, theta_range, phi_range, delta_t,
#                  serpentine, frame_period_laser
#   misalignment:  m_start, drift_pulses_per_frame, k_true
#   noise:         range_sigma, range_sigma_rel, dropout_prob, rng_seed
#   search:        m_max, k_min, k_max, min_valid_pairs, degeneracy_ratio,
#                  k_probe_frames, cost
#   run:           n_frames, output_dir
#
# Unknown sections or keys are rejected with the line they appear on.
#

import logging
import os
from dataclasses import dataclass

import yaml

from mvglidar.errors import ConfigError, InvariantError
from mvglidar.scan.geometry import ScanPattern
from mvglidar.scan.scene import Scene, scene_from_dict
from mvglidar.scan.simulator import MisalignmentSpec, NoiseSpec
from mvglidar.calib.calibrate import SearchSpec, COSTS

logger = logging.getLogger(__name__)

SCHEMA = {
    'scene': ('file', 'background_range', 'primitives'),
    'pattern': ('rows', 'k_design', 'theta_range', 'phi_range', 'delta_t',
                'serpentine', 'frame_period_laser'),
    'misalignment': ('m_start', 'drift_pulses_per_frame', 'k_true'),
    'noise': ('range_sigma', 'range_sigma_rel', 'dropout_prob', 'rng_seed'),
    'search': ('m_max', 'k_min', 'k_max', 'min_valid_pairs', 'degeneracy_ratio',
               'k_probe_frames', 'cost'),
    'run': ('n_frames', 'output_dir'),
}

PRIMITIVE_KEYS = {
    'plane': ('type', 'normal', 'offset'),
    'box': ('type', 'min', 'max'),
}

REQUIRED_PATTERN_KEYS = ('rows', 'k_design', 'theta_range', 'phi_range', 'delta_t')


@dataclass(eq=False)
class RunConfig(object):
    """Fully validated configuration of a simulate/calibrate run."""

    scene: Scene
    scene_path: str
    pattern: ScanPattern
    misalignment: MisalignmentSpec
    noise: NoiseSpec
    search: SearchSpec
    cost: str = 'mvg'
    n_frames: int = 1
    output_dir: str = '.'


def _line(node):
    return node.start_mark.line + 1


def _check_mapping(node, allowed, where):
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError("%s must be a mapping" % where, line=_line(node))
    for key_node, _ in node.value:
        if key_node.value not in allowed:
            raise ConfigError("unknown key %r in %s" % (key_node.value, where),
                              line=_line(key_node), field=key_node.value)


def _check_scene_node(node, where):
    _check_mapping(node, SCHEMA['scene'], where)
    for key_node, value in node.value:
        if key_node.value != 'primitives':
            continue
        if not isinstance(value, yaml.SequenceNode):
            raise ConfigError("%s.primitives must be a list" % where, line=_line(value))
        for pi, prim in enumerate(value.value):
            _check_mapping(prim, ('type', 'normal', 'offset', 'min', 'max'),
                           "%s.primitives[%d]" % (where, pi))
            kind = [v.value for k, v in prim.value if k.value == 'type']
            if not kind or kind[0] not in PRIMITIVE_KEYS:
                raise ConfigError("%s.primitives[%d] needs a type in %s"
                                  % (where, pi, sorted(PRIMITIVE_KEYS)), line=_line(prim))
            _check_mapping(prim, PRIMITIVE_KEYS[kind[0]], "%s.primitives[%d]" % (where, pi))


def _compose(text):
    try:
        return yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        raise ConfigError("malformed YAML: %s" % getattr(e, 'problem', e),
                          line=None if mark is None else mark.line + 1)


def _check_document(node):
    if node is None:
        raise ConfigError("empty configuration document")
    _check_mapping(node, SCHEMA, "the document")
    for key_node, value in node.value:
        if key_node.value == 'scene':
            _check_scene_node(value, 'scene')
        else:
            _check_mapping(value, SCHEMA[key_node.value], key_node.value)


def _number(kind, section, key, value):
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise ValueError(value)
            return value
        if kind is int:
            if isinstance(value, bool):
                raise ValueError(value)
            if isinstance(value, int):
                return value
            if isinstance(value, str):
                try:
                    return int(value)
                except ValueError:
                    pass
            # integral floats such as 1e3
            if float(value) != int(float(value)):
                raise ValueError(value)
            return int(float(value))
        return float(value)
    except (TypeError, ValueError, OverflowError):
        raise ConfigError("%s.%s: expected %s, got %r" % (section, key, kind.__name__, value),
                          field="%s.%s" % (section, key))


def _pair(section, key, value):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError("%s.%s: expected a [min, max] pair, got %r" % (section, key, value),
                          field="%s.%s" % (section, key))
    return tuple(_number(float, section, key, v) for v in value)


def apply_overrides(data, overrides):
    """
    Set ``section.key`` entries of a parsed document.

    Parameters
    ----------
    data : dict
    overrides : dict
        Dotted keys to values, e.g. ``{'pattern.rows': 32}``.
    """
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition('.')
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError("unknown override key %r" % dotted, field=dotted)
        data.setdefault(section, {})
        if data[section] is None:
            data[section] = {}
        data[section][key] = value
    if any(dotted.startswith('scene.') for dotted in (overrides or {})):
        _check_scene_node(yaml.compose(yaml.safe_dump(data['scene']), Loader=yaml.SafeLoader),
                          'scene (with overrides)')
    return data


def _load_scene(section, base_dir):
    section = dict(section or {})
    path = section.pop('file', None)
    if path is None:
        return scene_from_dict(section), None

    path = os.path.join(base_dir or '.', path)
    if not os.path.isfile(path):
        raise ConfigError("scene file %s does not exist" % path, field='scene.file')
    with open(path) as f:
        text = f.read()
    node = _compose(text)
    if node is None:
        raise ConfigError("scene file %s is empty" % path, field='scene.file')
    _check_scene_node(node, 'scene file %s' % path)

    merged = yaml.safe_load(text)
    merged.pop('file', None)
    merged.update(section)
    return scene_from_dict(merged), path


def _build(data, base_dir):
    pat = dict(data.get('pattern') or {})
    for key in REQUIRED_PATTERN_KEYS:
        if key not in pat:
            raise ConfigError("pattern.%s is required" % key, field='pattern.%s' % key)

    section = 'scene'
    try:
        scene, scene_path = _load_scene(data.get('scene'), base_dir)

        section = 'pattern'
        frame_period = pat.get('frame_period_laser')
        pattern = ScanPattern(
            rows=_number(int, section, 'rows', pat['rows']),
            k_design=_number(int, section, 'k_design', pat['k_design']),
            theta_range=_pair(section, 'theta_range', pat['theta_range']),
            phi_range=_pair(section, 'phi_range', pat['phi_range']),
            delta_t=_number(float, section, 'delta_t', pat['delta_t']),
            serpentine=_number(bool, section, 'serpentine', pat.get('serpentine', True)),
            frame_period_laser=(None if frame_period is None
                                else _number(float, section, 'frame_period_laser', frame_period)),
        )

        section = 'misalignment'
        mis = data.get(section) or {}
        misalignment = MisalignmentSpec(
            m_start=_number(int, section, 'm_start', mis.get('m_start', 0)),
            drift_pulses_per_frame=_number(float, section, 'drift_pulses_per_frame',
                                           mis.get('drift_pulses_per_frame', 0.0)),
            k_true=_number(int, section, 'k_true', mis.get('k_true', pattern.k_design)),
        )

        section = 'noise'
        noi = data.get(section) or {}
        noise = NoiseSpec(
            range_sigma=_number(float, section, 'range_sigma', noi.get('range_sigma', 0.0)),
            range_sigma_rel=_number(float, section, 'range_sigma_rel',
                                    noi.get('range_sigma_rel', 0.02)),
            dropout_prob=_number(float, section, 'dropout_prob', noi.get('dropout_prob', 0.01)),
            rng_seed=_number(int, section, 'rng_seed', noi.get('rng_seed', 0)),
        )

        section = 'search'
        sea = data.get(section) or {}
        k_min = _number(int, section, 'k_min', sea.get('k_min', max(2, pattern.k_design - 5)))
        k_max = _number(int, section, 'k_max', sea.get('k_max', pattern.k_design + 5))
        if k_max > pattern.pulses_per_frame:
            raise InvariantError('k_range', "k_max=%d exceeds pulses per frame %d"
                                 % (k_max, pattern.pulses_per_frame))
        search = SearchSpec(
            m_range=(0, _number(int, section, 'm_max', sea.get('m_max', 49))),
            k_range=(k_min, k_max),
            min_valid_pairs=_number(int, section, 'min_valid_pairs', sea.get('min_valid_pairs', 1)),
            degeneracy_ratio=_number(float, section, 'degeneracy_ratio',
                                     sea.get('degeneracy_ratio', 0.01)),
            k_probe_frames=_number(int, section, 'k_probe_frames', sea.get('k_probe_frames', 0)),
        )
        cost = sea.get('cost', 'mvg')
        if cost not in COSTS:
            raise InvariantError('cost', "expected one of %s, got %r" % (', '.join(COSTS), cost))

        section = 'run'
        run = data.get(section) or {}
        n_frames = _number(int, section, 'n_frames', run.get('n_frames', 1))
        if n_frames < 1:
            raise InvariantError('n_frames', "must be >= 1")

    except InvariantError as e:
        raise ConfigError(str(e).replace(e.field, "%s.%s" % (section, e.field), 1),
                          field="%s.%s" % (section, e.field))

    return RunConfig(scene, scene_path, pattern, misalignment, noise, search, cost,
                     n_frames, str(run.get('output_dir', '.')))


def parse_config(text, base_dir=None, overrides=None):
    """
    Parse and validate a configuration document.

    Parameters
    ----------
    text : str
        YAML document.
    base_dir : str, optional
        Directory that relative scene file paths are resolved against.
    overrides : dict, optional
        Dotted ``section.key`` values applied over the document.

    Returns
    -------
    config : RunConfig

    Raises
    ------
    ConfigError
        On malformed YAML, unknown keys, or invalid values. Invariant
        violations name the field, e.g. ``pattern.rows``.
    """
    _check_document(_compose(text))
    data = yaml.safe_load(text) or {}
    apply_overrides(data, overrides)

    config = _build(data, base_dir)
    logger.debug("Parsed config: %d rows x %d pulses, %d frame(s)",
                 config.pattern.rows, config.pattern.k_design, config.n_frames)
    return config


def load_config(path, overrides=None):
    """Read and parse a configuration file."""
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigError("cannot read %s: %s" % (path, e))
    return parse_config(text, os.path.dirname(os.path.abspath(path)), overrides)


def parse_override(item):
    """Split a ``section.key=value`` flag; the value is read as a YAML scalar."""
    key, sep, value = item.partition('=')
    if not sep or '.' not in key:
        raise ConfigError("override %r is not of the form section.key=value" % item)
    return key.strip(), yaml.safe_load(value)
