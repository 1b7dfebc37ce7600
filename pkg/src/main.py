"""
Main entry point for the RoI point cloud codec.

This module provides the command-line interface: synthetic scene
generation, RoI detection, encoding, decoding, evaluation sweeps and the
points-in-boxes speed harness.
"""

import sys
import logging
import argparse
from typing import Callable, Dict, List, Optional

from .config import (
    LOG_FILE, LOG_LEVEL, OUTPUT_DIR, WORKERS, DETECTORS,
    RunConfig, ensure_directories, load_run_config
)
from .commands import cmd_bench_pib, cmd_decode, cmd_encode, cmd_eval, cmd_roi, cmd_synth
from .models.errors import RoiPccError
from .scenes.synth import SceneParams

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(verbose: bool = False) -> None:
    """
    Configure the root logger with a log file and stdout.

    Args:
        verbose: Log at DEBUG level instead of the configured level
    """
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        handlers=[
            logging.FileHandler(LOG_FILE),
            logging.StreamHandler(sys.stdout)
        ],
        force=True
    )


def _qp_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected comma-separated numbers, got {text!r}")


def _name_list(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    """
    Build the command-line parser.

    Returns:
        Parser with one subparser per command
    """
    parser = argparse.ArgumentParser(description='RoI-based point cloud sequence compression')
    parser.add_argument('--config', type=str, default=None,
                        help='YAML run configuration (sections roi, codec, eval)')
    parser.add_argument('--verbose', '-v', action='store_true', help='Enable debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    synth = sub.add_parser('synth', help='Generate synthetic scenes')
    synth.add_argument('--out', type=str, default=OUTPUT_DIR, help='Output directory')
    synth.add_argument('--seed', type=int, default=0, help='Seed of the first scene')
    synth.add_argument('--scenes', type=int, default=1, help='Number of scenes')
    synth.add_argument('--frames', type=int, default=None, help='Frames per scene')
    synth.add_argument('--objects', type=int, default=None, help='Objects per scene')
    synth.add_argument('--ground-points', type=int, default=None, help='Ground points per scene')
    synth.add_argument('--points-per-object', type=int, default=None, help='Points per object')
    synth.add_argument('--slope', type=float, default=None, help='Ground slope in degrees')
    synth.add_argument('--ego-speed', type=float, default=None, help='Sensor speed in m/s')
    synth.add_argument('--yaw-rate', type=float, default=None, help='Sensor yaw rate in rad/s')

    roi = sub.add_parser('roi', help='Compute RoI masks for a scene')
    roi.add_argument('manifest', type=str, help='Scene manifest or directory')
    roi.add_argument('--out', type=str, default=None, help='Mask directory')
    roi.add_argument('--detector', choices=DETECTORS, default=None, help='RoI detector')
    roi.add_argument('--no-ground-removal', action='store_true', help='Keep ground points in the RoI')
    roi.add_argument('--k', type=int, default=None, help='GMM components per box')
    roi.add_argument('--gamma', type=float, default=None, help='Heatmap threshold')
    roi.add_argument('--stride', type=int, default=None, help='Key frame stride')
    roi.add_argument('--export-heatmaps', action='store_true', help='Write key frame heatmaps as PGM')

    encode = sub.add_parser('encode', help='Encode a scene')
    encode.add_argument('manifest', type=str, help='Scene manifest or directory')
    encode.add_argument('--out', type=str, required=True, help='Output bitstream file')
    encode.add_argument('--masks', type=str, default=None, help='Mask directory (uniform coding without)')
    encode.add_argument('--q-r', type=int, default=None, help='QP of RoI macroblocks')
    encode.add_argument('--q-b', type=int, default=None, help='QP of background macroblocks')
    encode.add_argument('--no-point-map', action='store_true', help='Omit the point-to-pixel map')

    decode = sub.add_parser('decode', help='Decode a bitstream into clouds')
    decode.add_argument('bitstream', type=str, help='Bitstream file')
    decode.add_argument('--out', type=str, required=True, help='Output directory')
    decode.add_argument('--format', choices=('bin', 'ply'), default='bin', help='Cloud file format')

    evaluate = sub.add_parser('eval', help='Rate-distortion evaluation')
    evaluate.add_argument('manifests', nargs='+', help='Scene manifests or directories')
    evaluate.add_argument('--out', type=str, default=OUTPUT_DIR, help='Report directory')
    evaluate.add_argument('--bitstream', nargs='+', default=None, help='Measure these bitstreams')
    evaluate.add_argument('--q-r-values', type=_qp_list, default=None, help='RoI QPs, e.g. 15,20,25')
    evaluate.add_argument('--q-b-values', type=_qp_list, default=None, help='Background QPs')
    evaluate.add_argument('--detectors', type=_name_list, default=None,
                          help='Detector variants to compare, e.g. gmm,naive')
    evaluate.add_argument('--k-values', type=_qp_list, default=None, help='GMM component counts, e.g. 3,5')
    evaluate.add_argument('--gamma-values', type=_float_list, default=None, help='GMM thresholds, e.g. 0.2,0.4')
    evaluate.add_argument('--samples', type=int, default=None, help='Samples of the averaged advantage')
    evaluate.add_argument('--workers', type=int, default=None, help=f'Worker processes (default {WORKERS})')
    evaluate.add_argument('--no-progress', action='store_true', help='Hide the progress bar')

    bench = sub.add_parser('bench-pib', help='Points-in-boxes speed comparison')
    bench.add_argument('--points', type=int, default=100000, help='Cloud size')
    bench.add_argument('--boxes', type=int, default=100, help='Box count')
    bench.add_argument('--repeats', type=int, default=3, help='Timing repeats')
    bench.add_argument('--seed', type=int, default=0, help='Random seed')
    bench.add_argument('--threads', type=int, default=1, help='Threads for per-box queries')
    bench.add_argument('--out', type=str, default=None, help='JSON report path')
    return parser


def _scene_params(args: argparse.Namespace) -> SceneParams:
    overrides = {
        'num_frames': args.frames,
        'num_objects': args.objects,
        'ground_points': args.ground_points,
        'points_per_object': args.points_per_object,
        'ground_slope_deg': args.slope,
        'ego_speed': args.ego_speed,
        'yaw_rate': args.yaw_rate,
    }
    return SceneParams.from_dict({k: v for k, v in overrides.items() if v is not None})


def _run_synth(args: argparse.Namespace, config: RunConfig) -> None:
    cmd_synth(args.out, args.seed, args.scenes, _scene_params(args))


def _run_roi(args: argparse.Namespace, config: RunConfig) -> None:
    config = config.with_overrides(
        detector=args.detector, k_components=args.k, gamma=args.gamma,
        propagation_stride=args.stride,
        use_ground_removal=False if args.no_ground_removal else None)
    cmd_roi(args.manifest, config, args.out, args.export_heatmaps)


def _run_encode(args: argparse.Namespace, config: RunConfig) -> None:
    config = config.with_overrides(q_r=args.q_r, q_b=args.q_b,
                                   store_point_map=False if args.no_point_map else None)
    cmd_encode(args.manifest, config, args.out, args.masks)


def _run_decode(args: argparse.Namespace, config: RunConfig) -> None:
    cmd_decode(args.bitstream, args.out, args.format)


def _run_eval(args: argparse.Namespace, config: RunConfig) -> None:
    config = config.with_overrides(q_r_values=args.q_r_values, q_b_values=args.q_b_values,
                                   advantage_samples=args.samples, workers=args.workers,
                                   detectors=args.detectors, k_values=args.k_values,
                                   gamma_values=args.gamma_values)
    cmd_eval(args.manifests, config, args.out, args.bitstream, progress=not args.no_progress)


def _run_bench(args: argparse.Namespace, config: RunConfig) -> None:
    report = cmd_bench_pib(args.points, args.boxes, args.repeats, args.seed, args.threads, args.out)
    print(f"k-d tree: {report['kdtree_ms_per_box']:.3f} ms/box, "
          f"brute force: {report['bruteforce_ms_per_box']:.3f} ms/box")


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], None]] = {
    'synth': _run_synth,
    'roi': _run_roi,
    'encode': _run_encode,
    'decode': _run_decode,
    'eval': _run_eval,
    'bench-pib': _run_bench,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Args:
        argv: Command-line arguments (defaults to sys.argv)

    Returns:
        Exit code: 0 success, 1 unexpected failure, 2 usage error,
        3 data error, 4 internal invariant violation
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    logger.info(f"Starting roi-pcc {args.command}")

    try:
        ensure_directories()
        config = load_run_config(args.config)
        COMMANDS[args.command](args, config)
        logger.info(f"roi-pcc {args.command} completed successfully")
        return 0
    except RoiPccError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"An error occurred: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
