#
# Command line entry point.
#
#   mvglidar simulate    config -> range stream + ground-truth sidecar
#   mvglidar calibrate   stream -> calibration report, cost surface, cloud
#   mvglidar track       stream -> drift report (and per-frame clouds)
#   mvglidar reconstruct stream + explicit m, k -> cloud
#   mvglidar surface     stream -> full cost surface CSV
#
# Exit codes: 0 success, 1 usage error, 2 data/parse error,
# 3 calibration failed, or degenerate result under --strict.
#

import argparse
import logging
import os
import sys

from mvglidar.errors import (ConfigError, StreamFormatError, InvariantError, OutputError,
                             HypothesisOutOfRangeError, CalibrationFailedError,
                             DriftEstimationFailedError)
from mvglidar.scan.simulator import simulate_frames, offset_schedule
from mvglidar.calib.calibrate import (calibrate_frame, cost_surface, reconstruct_point_cloud,
                                      COSTS)
from mvglidar.calib.drift import track_offsets
from mvglidar.tools import config as cfg
from mvglidar.tools import io

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CALIBRATION = 3


class _Parser(argparse.ArgumentParser):

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "%s: error: %s\n" % (self.prog, message))


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument('-c', '--config', required=True, help="YAML run configuration")
    p.add_argument('--out', help="output directory (overrides run.output_dir)")
    p.add_argument('--seed', type=int, help="noise seed (overrides noise.rng_seed)")
    p.add_argument('--frames', type=int, help="frame count (overrides run.n_frames)")
    p.add_argument('--set', action='append', default=[], metavar='SECTION.KEY=VALUE',
                   help="override any config entry, may be repeated")
    p.add_argument('--format', choices=('xyz', 'ply'), default='ply', help="point cloud format")
    p.add_argument('--cost', choices=COSTS, help="cost function (overrides search.cost)")
    p.add_argument('--strict', action='store_true',
                   help="exit with code 3 on a degenerate calibration")
    p.add_argument('-v', '--verbose', action='store_true')
    p.add_argument('-q', '--quiet', action='store_true')
    return p


def _stream_args(p):
    p.add_argument('-s', '--stream', required=True, help="range stream (.csv or .npz)")
    p.add_argument('--frame', type=int, default=0, help="frame index to calibrate")


def build_parser():
    common = _common()
    parser = _Parser(prog='mvglidar',
                     description="MEMS LiDAR scan simulator and laser/mirror timing self-calibration")
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('simulate', parents=[common], help="simulate a range stream")
    p.add_argument('--stream-format', choices=('csv', 'npz'), default='csv')

    p = sub.add_parser('calibrate', parents=[common], help="calibrate one frame")
    _stream_args(p)

    p = sub.add_parser('track', parents=[common], help="track offsets and frame drift")
    p.add_argument('-s', '--stream', required=True, help="range stream (.csv or .npz)")
    p.add_argument('--clouds', action='store_true', help="write one corrected cloud per frame")

    p = sub.add_parser('reconstruct', parents=[common], help="point cloud for explicit m, k")
    _stream_args(p)
    p.add_argument('-m', type=int, required=True, help="start offset in pulses")
    p.add_argument('-k', type=int, required=True, help="pulses per row")

    p = sub.add_parser('surface', parents=[common], help="dump the full cost surface")
    _stream_args(p)

    return parser


def _load(args):
    overrides = dict(cfg.parse_override(item) for item in args.set)
    if args.seed is not None:
        overrides['noise.rng_seed'] = args.seed
    if args.frames is not None:
        overrides['run.n_frames'] = args.frames
    if args.out is not None:
        overrides['run.output_dir'] = args.out
    if args.cost is not None:
        overrides['search.cost'] = args.cost

    config = cfg.load_config(args.config, overrides)
    os.makedirs(config.output_dir, exist_ok=True)
    return config


def _read_stream(args, config):
    stream = io.read_range_stream(args.stream)
    if abs(stream.delta_t - config.pattern.delta_t) > 1e-9 * config.pattern.delta_t:
        raise StreamFormatError("stream delta_t=%g differs from pattern.delta_t=%g"
                                % (stream.delta_t, config.pattern.delta_t))
    return stream


def _frame(args, stream):
    if not 0 <= args.frame < stream.n_frames:
        raise StreamFormatError("frame %d not in stream of %d frame(s)"
                                % (args.frame, stream.n_frames))
    return stream[args.frame]


def _out(config, name):
    return os.path.join(config.output_dir, name)


def cmd_simulate(args, config):
    stream = simulate_frames(config.scene, config.pattern, config.misalignment,
                             config.noise, config.n_frames)
    path = _out(config, 'stream.%s' % args.stream_format)
    io.write_range_stream(stream, path)
    io.write_truth(_out(config, 'truth.yaml'), config.misalignment, config.pattern,
                   offset_schedule(config.misalignment, config.n_frames))
    logger.info("Simulated %d frame(s) into %s", stream.n_frames, path)
    return EXIT_OK


def cmd_calibrate(args, config):
    stream = _read_stream(args, config)
    result = calibrate_frame(_frame(args, stream), config.search, config.pattern, config.cost)

    io.write_calibration_report(result, _out(config, 'calibration.txt'))
    io.write_cost_surface(result.cost_surface, _out(config, 'surface.csv'))
    cloud = reconstruct_point_cloud(_frame(args, stream), result.m_star, result.k_star,
                                    config.pattern)
    io.write_point_cloud(cloud, _out(config, 'cloud.%s' % args.format), args.format)

    logger.info("m*=%d k*=%d T_s=%.6g s%s", result.m_star, result.k_star, result.t_s,
                " (degenerate)" if result.degenerate else "")
    if result.degenerate and args.strict:
        return EXIT_CALIBRATION
    return EXIT_OK


def cmd_track(args, config):
    stream = _read_stream(args, config)
    estimate = track_offsets(stream, config.search, config.pattern, config.cost)
    io.write_drift_report(estimate, _out(config, 'drift.txt'), config.pattern.frame_period_laser)

    if args.clouds:
        for j, m in zip(estimate.frames, estimate.m_track):
            cloud = reconstruct_point_cloud(stream[j], int(m), estimate.k_star, config.pattern)
            io.write_point_cloud(cloud, _out(config, 'cloud_%04d.%s' % (j, args.format)),
                                 args.format)

    logger.info("T_e=%.6g s, signed slope %.6g s/frame", estimate.t_e, estimate.signed_slope)
    return EXIT_OK


def cmd_reconstruct(args, config):
    stream = _read_stream(args, config)
    cloud = reconstruct_point_cloud(_frame(args, stream), args.m, args.k, config.pattern)
    io.write_point_cloud(cloud, _out(config, 'cloud.%s' % args.format), args.format)
    logger.info("Wrote %d points", len(cloud))
    return EXIT_OK


def cmd_surface(args, config):
    stream = _read_stream(args, config)
    surface = cost_surface(_frame(args, stream), config.search, config.pattern.serpentine,
                           config.cost)
    io.write_cost_surface(surface, _out(config, 'surface.csv'))
    return EXIT_OK


COMMANDS = {
    'simulate': cmd_simulate,
    'calibrate': cmd_calibrate,
    'track': cmd_track,
    'reconstruct': cmd_reconstruct,
    'surface': cmd_surface,
}


def main(argv=None):
    args = build_parser().parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s")

    try:
        config = _load(args)
        return COMMANDS[args.command](args, config)
    except (ConfigError, StreamFormatError, InvariantError, OutputError,
            HypothesisOutOfRangeError) as e:
        logger.error("%s", e)
        return EXIT_DATA
    except (CalibrationFailedError, DriftEstimationFailedError) as e:
        logger.error("Calibration failed: %s", e)
        return EXIT_CALIBRATION


if __name__ == '__main__':
    sys.exit(main())
