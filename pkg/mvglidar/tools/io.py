#
# File formats.
#
# Range stream (CSV):
#
#     # delta_t=1e-06 pulses_per_frame=29200
#     frame,pulse,range_m
#     0,0,
#     0,1,12.4187532
#
# one row per pulse, invalid echoes as an empty range field. Ranges are
# written as the shortest repr that reads back to the same double. A stream
# may also be stored as .npz (arrays ``frames`` and ``delta_t``).
#
# Cost surface (CSV): header ``m,k,cost,valid_pairs``, one row per hypothesis,
# empty cost for inadmissible cells.
#
# Point clouds: XYZ (``x y z`` per line) or ASCII PLY.
#
# Other numbers are written with a fixed number of significant digits. Either
# way identical inputs give byte-identical files.
#

import csv
import logging
import os

import numpy as np
import yaml

from mvglidar.errors import StreamFormatError, OutputError
from mvglidar.scan.simulator import RangeStream
from mvglidar.calib.calibrate import CostSurface

logger = logging.getLogger(__name__)

DIGITS = 9

STREAM_HEADER = ['frame', 'pulse', 'range_m']
SURFACE_HEADER = ['m', 'k', 'cost', 'valid_pairs']


def _fmt(value, digits=DIGITS):
    if not np.isfinite(value):
        return ''
    if digits is None:
        return repr(float(value))
    return '%.*g' % (digits, value)


def _extension(path, extension):
    if extension is not None:
        return extension.lstrip('.').lower()
    return os.path.splitext(path)[1].lstrip('.').lower()


def write_range_stream(stream, path, extension=None, digits=None):
    """
    Write a RangeStream as CSV (default) or npz.

    Parameters
    ----------
    stream : RangeStream
    path : str
    extension : {'csv', 'npz'}, optional
        Inferred from ``path`` when omitted.
    digits : int, optional
        Significant digits of the CSV ranges. By default each range is written
        as its shortest exact representation and the round trip is lossless.
    """
    ext = _extension(path, extension)
    try:
        if ext == 'npz':
            with open(path, 'wb') as f:
                np.savez(f, frames=stream.frames, delta_t=np.float64(stream.delta_t))
        else:
            with open(path, 'w', newline='') as f:
                f.write('# delta_t=%s pulses_per_frame=%d\n'
                        % (repr(stream.delta_t), stream.pulses_per_frame))
                writer = csv.writer(f, lineterminator='\n')
                writer.writerow(STREAM_HEADER)
                for j, frame in enumerate(stream.frames):
                    writer.writerows((j, p, _fmt(r, digits)) for p, r in enumerate(frame))
    except OSError as e:
        raise OutputError(path, e)

    logger.debug("Wrote %d frame(s) to %s", stream.n_frames, path)


def _parse_stream_header(line):
    if not line.startswith('#'):
        raise StreamFormatError("missing '# delta_t=... pulses_per_frame=...' comment", line=1)
    fields = {}
    for item in line[1:].split():
        key, sep, value = item.partition('=')
        if sep:
            fields[key] = value
    try:
        return float(fields['delta_t']), int(fields['pulses_per_frame'])
    except (KeyError, ValueError):
        raise StreamFormatError("bad header comment %r" % line.strip(), line=1)


def _read_stream_csv(f):
    delta_t, ppf = _parse_stream_header(f.readline())
    reader = csv.reader(f)

    header = next(reader, None)
    if header != STREAM_HEADER:
        raise StreamFormatError("expected header %s, got %r" % (','.join(STREAM_HEADER), header),
                                line=2)

    js, ps, rs = [], [], []
    for lineno, row in enumerate(reader, start=3):
        if len(row) != 3:
            raise StreamFormatError("expected 3 fields, got %d" % len(row), line=lineno)
        try:
            j = int(row[0])
            p = int(row[1])
            r = float(row[2]) if row[2] != '' else np.nan
        except ValueError:
            raise StreamFormatError("non-numeric field in %r" % (row,), line=lineno)
        if j < 0 or not 0 <= p < ppf:
            raise StreamFormatError("frame/pulse index (%d, %d) out of range" % (j, p),
                                    line=lineno)
        if r < 0:
            raise StreamFormatError("negative range %r" % r, line=lineno)
        js.append(j)
        ps.append(p)
        rs.append(r)

    if not rs:
        raise StreamFormatError("no samples")
    n_frames = max(js) + 1

    frames = np.full((n_frames, ppf), np.nan)
    count = np.zeros((n_frames, ppf), dtype=np.int64)
    np.add.at(count, (js, ps), 1)
    if np.any(count != 1):
        raise StreamFormatError("every (frame, pulse) of %d frame(s) must appear exactly once"
                                % n_frames)
    frames[js, ps] = rs
    return RangeStream(frames, delta_t)


def read_range_stream(path, extension=None):
    """
    Read a RangeStream written by :func:`write_range_stream`.

    Raises
    ------
    StreamFormatError
        On a malformed file, with the offending line number.
    OutputError
        If the file cannot be opened.
    """
    ext = _extension(path, extension)
    try:
        if ext == 'npz':
            with np.load(path) as data:
                return RangeStream(data['frames'], float(data['delta_t']))
        with open(path, newline='') as f:
            return _read_stream_csv(f)
    except OSError as e:
        raise OutputError(path, e)


def write_point_cloud(points, path, format=None, digits=DIGITS):
    """
    Write an (n, 3) point array as XYZ or ASCII PLY.

    Parameters
    ----------
    points : np.ndarray([n, 3])
    path : str
        Its extension must match ``format``.
    format : {'xyz', 'ply'}, optional
        Inferred from ``path`` when omitted.
    """
    ext = _extension(path, None)
    format = ext if format is None else format.lower()
    if format not in ('xyz', 'ply'):
        raise ValueError("unsupported point cloud format %r" % format)
    if ext != format:
        raise ValueError("path %s does not end in .%s" % (path, format))

    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    try:
        with open(path, 'w') as f:
            if format == 'ply':
                f.write('ply\n')
                f.write('format ascii 1.0\n')
                f.write('element vertex %d\n' % points.shape[0])
                f.write('property float x\n')
                f.write('property float y\n')
                f.write('property float z\n')
                f.write('end_header\n')
            for x, y, z in points:
                f.write('%s %s %s\n' % (_fmt(x, digits), _fmt(y, digits), _fmt(z, digits)))
    except OSError as e:
        raise OutputError(path, e)

    logger.debug("Wrote %d points to %s", points.shape[0], path)


def write_cost_surface(surface, path, digits=DIGITS):
    """Write a CostSurface as CSV, inadmissible cells with an empty cost."""
    try:
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(SURFACE_HEADER)
            for i, m in enumerate(surface.ms):
                for j, k in enumerate(surface.ks):
                    writer.writerow((int(m), int(k), _fmt(surface.cost[i, j], digits),
                                     int(surface.valid_pairs[i, j])))
    except OSError as e:
        raise OutputError(path, e)


def read_cost_surface(path):
    """Read a cost surface CSV back into a CostSurface."""
    rows = []
    try:
        with open(path, newline='') as f:
            reader = csv.reader(f)
            if next(reader, None) != SURFACE_HEADER:
                raise StreamFormatError("expected header %s" % ','.join(SURFACE_HEADER), line=1)
            for lineno, row in enumerate(reader, start=2):
                try:
                    m, k, cost, pairs = row
                    rows.append((int(m), int(k), float(cost) if cost != '' else np.nan,
                                 int(pairs)))
                except ValueError:
                    raise StreamFormatError("malformed row %r" % (row,), line=lineno)
    except OSError as e:
        raise OutputError(path, e)

    ms = np.unique([r[0] for r in rows])
    ks = np.unique([r[1] for r in rows])
    if len(rows) != len(ms) * len(ks):
        raise StreamFormatError("rows do not form a full (m, k) grid")

    cost = np.full((len(ms), len(ks)), np.nan)
    pairs = np.zeros((len(ms), len(ks)), dtype=np.int64)
    for m, k, c, n in rows:
        i = np.searchsorted(ms, m)
        j = np.searchsorted(ks, k)
        cost[i, j] = c
        pairs[i, j] = n
    return CostSurface(ms, ks, cost, pairs)


def _write_text(path, lines):
    try:
        with open(path, 'w') as f:
            f.write('\n'.join(lines) + '\n')
    except OSError as e:
        raise OutputError(path, e)


def write_calibration_report(result, path, digits=DIGITS):
    """Plain-text summary of a CalibrationResult."""
    _write_text(path, [
        'm_star: %d' % result.m_star,
        'k_star: %d' % result.k_star,
        't_s: %s' % _fmt(result.t_s, digits),
        'cost: %s' % _fmt(result.cost, digits),
        'gap: %s' % ('inf' if np.isinf(result.gap) else _fmt(result.gap, digits)),
        'degenerate: %s' % str(result.degenerate).lower(),
    ])


def write_drift_report(estimate, path, frame_period_laser=None, digits=DIGITS):
    """Plain-text drift report: t_e, signed slope, m_track."""
    lines = [
        't_e: %s' % _fmt(estimate.t_e, digits),
        'signed_slope: %s' % _fmt(estimate.signed_slope, digits),
        'k_star: %s' % estimate.k_star,
    ]
    if frame_period_laser is not None:
        lines.append('mirror_frame_period: %s'
                     % _fmt(estimate.mirror_frame_period(frame_period_laser), digits))
    lines += [
        'frames: %s' % ' '.join(str(j) for j in estimate.frames),
        'm_track: %s' % ' '.join(str(m) for m in estimate.m_track),
        'excluded: %s' % ' '.join(str(j) for j in estimate.excluded),
    ]
    _write_text(path, lines)


def write_truth(path, misalignment, pattern, offsets):
    """Ground-truth sidecar of a simulation, as YAML."""
    k_true = misalignment.resolve_k(pattern)
    truth = {
        'm_start': int(misalignment.m_start),
        'drift_pulses_per_frame': float(misalignment.drift_pulses_per_frame),
        'k_true': int(k_true),
        'delta_t': float(pattern.delta_t),
        't_s': float(pattern.delta_t * misalignment.m_start),
        't_e': float(pattern.delta_t * abs(misalignment.drift_pulses_per_frame)),
        'offsets': [int(o) for o in offsets],
    }
    try:
        with open(path, 'w') as f:
            yaml.safe_dump(truth, f, sort_keys=False)
    except OSError as e:
        raise OutputError(path, e)


def read_truth(path):
    try:
        with open(path) as f:
            return yaml.safe_load(f)
    except OSError as e:
        raise OutputError(path, e)
