"""
Command line of tada2go. Exit codes: 0 success, 1 configuration error, 2 stage failure.
"""
import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from tada2go.harness.ablation import run_ablation
from tada2go.harness.config import (ExperimentConfig, load_config,
                                    validate_config)
from tada2go.harness.experiment import diagonal_gap, run_cross_matrix, run_experiment
from tada2go.harness.helpers import (load_raw_directory, load_target_images,
                                     write_coefficients, write_images)
from tada2go.harness.report import (REPORT_FORMATS, emit_panels, emit_report,
                                    load_report, summary_table)
from tada2go.toolkit.emulator.checkpoint import save_checkpoint, write_training_log
from tada2go.toolkit.emulator.training import train
from tada2go.toolkit.exceptions.exceptions import (ConfigurationException,
                                                   OutputExistsException,
                                                   TadaException)
from tada2go.toolkit.imagery.pipeline import (default_catalog, develop,
                                              find_pipeline, load_catalog)
from tada2go.toolkit.imagery.synthesis import crop_pool, generate_synthetic_raw
from tada2go.toolkit.jpegcodec.compression import compress_hard
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.steganalysis.detector import Detector, evaluate, train_detector
from tada2go.toolkit.steganalysis.features import (SCHEMAS, extract_features,
                                                   read_feature_csv,
                                                   write_feature_csv)
from tada2go.toolkit.stego.embedding import EmbeddingConfig, embed_pool
from tada2go.toolkit.utils.constants import (ABLATION_AXES,
                                             EMBEDDING_SCHEMES,
                                             EXIT_CONFIG_ERROR,
                                             EXIT_STAGE_FAILURE, EXIT_SUCCESS,
                                             STRATEGIES)


def _synth(args) -> None:
    pool = generate_synthetic_raw(args.count, args.size, args.noise_alpha, args.noise_beta, args.smoothness, args.seed)
    if args.crop:
        pool = crop_pool(pool, args.crop, args.crop_mode)
    paths = write_images(list(pool), args.out, stem='raw')
    print(f"Wrote {len(paths)} RAW images to {args.out}")


def _develop(args) -> None:
    quant = QuantTable.from_config(args.quant)
    pipelines = load_catalog(args.catalog, quant) if args.catalog else default_catalog(quant)
    pipeline = find_pipeline(pipelines, args.pipeline)
    pool = load_raw_directory(args.input)
    developed = [develop(raw, pipeline).block_aligned() for raw in pool]
    write_images(developed, args.out, stem=pipeline.identifier)
    print(f"Developed {len(developed)} images with '{pipeline.identifier}' into {args.out}")


def _compress(args) -> None:
    quant = QuantTable.from_config(args.quant)
    pool = load_raw_directory(args.input)
    covers = [compress_hard(image.block_aligned(), quant) for image in pool]
    write_coefficients(covers, args.out, stem='cover', image_format=args.format)
    print(f"Compressed {len(covers)} images with {quant.identifier} into {args.out}")


def _embed(args) -> None:
    covers = load_target_images(args.input)
    stegos = embed_pool(covers, EmbeddingConfig(args.scheme, args.payload, args.seed).validated())
    write_coefficients(stegos, args.out, stem='stego', image_format=args.format)
    print(f"Embedded {len(stegos)} images into {args.out}")


def _features(args) -> None:
    images = load_target_images(args.input)
    matrix = extract_features(images, args.schema)
    labels = None if args.label is None else [args.label] * matrix.shape[0]
    write_feature_csv(matrix, args.schema, args.out, labels)
    print(f"Wrote {matrix.shape[0]} x {matrix.shape[1]} {args.schema} features to {args.out}")


def _train_detector(args) -> None:
    covers, cover_schema, _ = read_feature_csv(args.covers)
    stegos, stego_schema, _ = read_feature_csv(args.stegos)
    if cover_schema != stego_schema:
        raise ConfigurationException(f"Cover features use '{cover_schema}', stego features '{stego_schema}'.")
    detector = train_detector(covers, stegos, reg=args.reg, seed=args.seed, schema_id=cover_schema)
    detector.save(args.out)
    print(f"Trained detector ({detector.iterations} iterations, converged={detector.converged}) -> {args.out}")


def _eval(args) -> None:
    detector = Detector.load(args.detector)
    covers, _, _ = read_feature_csv(args.covers)
    stegos, _, _ = read_feature_csv(args.stegos)
    print(f"accuracy={evaluate(detector, covers, stegos):.6f}")


def _tada_learn(args) -> None:
    config = load_config(args.config)
    pool = load_raw_directory(args.raw)
    targets = load_target_images(args.target)
    state = train(pool, targets, config.loss, config.training._replace(workers=config.workers))
    os.makedirs(args.out, exist_ok=True)
    save_checkpoint(state, os.path.join(args.out, 'kernel.json'), targets[0].quant.identifier)
    write_training_log(state, os.path.join(args.out, 'training_log.csv'))
    print(f"L_eval {state.initial_eval:.6g} -> {state.best_eval:.6g} after {state.epoch} epochs ({state.stop_reason})")
    print(np.array2string(state.best_kernel.kernel, precision=4))


def _experiment_config(args, strategies: Optional[List[str]] = None) -> ExperimentConfig:
    config = load_config(args.config)
    changes = {}
    if args.output:
        changes['output_dir'] = args.output
    if args.overwrite:
        changes['overwrite'] = True
    if strategies:
        changes['strategies'] = tuple(strategies)
    return validate_config(config._replace(**changes)) if changes else config


def _print_summary(rows) -> None:
    print(summary_table(rows).to_string(float_format=lambda value: f"{value:.4f}"))


def _baseline(args) -> None:
    _print_summary(run_experiment(_experiment_config(args, args.strategies)))


def _experiment(args) -> None:
    config = _experiment_config(args)
    if args.cross_matrix:
        frame = run_cross_matrix(config, args.cross_matrix)
        print(frame.pivot_table(index='source', columns='target', values='accuracy', aggfunc='mean').to_string())
        print(f"diagonal gap: {diagonal_gap(frame):.4f}")
        return
    _print_summary(run_experiment(config))


def _ablation(args) -> None:
    values = [json.loads(value) if value.lower() in ('true', 'false') else value for value in args.values]
    table = run_ablation(_experiment_config(args), args.axis, values)
    print(table.pivot_table(index=['value', 'strategy'], columns='balance', values='accuracy', aggfunc='mean',
                            sort=False).to_string())


def _report(args) -> None:
    rows = [row for path in args.inputs for row in load_report(path)]
    if args.panels:
        for balance, path in emit_panels(rows, args.out, args.format).items():
            print(f"{balance}: {path}")
    else:
        print(emit_report(rows, args.out, args.format))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='tada2go', description="Development-pipeline emulation for steganalysis "
                                                                 "under cover-source mismatch.")
    commands = parser.add_subparsers(dest='command', required=True)

    synth = commands.add_parser('synth', help="Generate synthetic RAW-like images (16-bit PGM).")
    synth.add_argument('--count', type=int, default=64)
    synth.add_argument('--size', type=int, default=256)
    synth.add_argument('--noise-alpha', type=float, default=0.5)
    synth.add_argument('--noise-beta', type=float, default=4.0)
    synth.add_argument('--smoothness', type=float, default=1.5)
    synth.add_argument('--seed', type=int, default=0)
    synth.add_argument('--crop', type=int, default=None, help="Crop side, none by default.")
    synth.add_argument('--crop-mode', choices=('most-textured', 'most-uniform'), default='most-textured')
    synth.add_argument('--out', required=True)
    synth.set_defaults(handler=_synth)

    develop_cmd = commands.add_parser('develop', help="Develop PGM images with a catalog pipeline.")
    develop_cmd.add_argument('--input', required=True, help="Directory of PGM files.")
    develop_cmd.add_argument('--pipeline', required=True)
    develop_cmd.add_argument('--catalog', default=None, help="Pipeline catalog JSON, the default catalog otherwise.")
    develop_cmd.add_argument('--quant', default='qf85')
    develop_cmd.add_argument('--out', required=True)
    develop_cmd.set_defaults(handler=_develop)

    compress = commands.add_parser('compress', help="JPEG-compress PGM images.")
    compress.add_argument('--input', required=True)
    compress.add_argument('--quant', default='qf85', help="'qf<NN>'.")
    compress.add_argument('--format', choices=('jpeg', 'container'), default='jpeg')
    compress.add_argument('--out', required=True)
    compress.set_defaults(handler=_compress)

    embed = commands.add_parser('embed', help="Simulate embedding into JPEG covers.")
    embed.add_argument('--input', required=True)
    embed.add_argument('--scheme', choices=EMBEDDING_SCHEMES, default='UERD')
    embed.add_argument('--payload', type=float, default=0.5, help="Bits per non-zero AC coefficient.")
    embed.add_argument('--seed', type=int, default=0)
    embed.add_argument('--format', choices=('jpeg', 'container'), default='jpeg')
    embed.add_argument('--out', required=True)
    embed.set_defaults(handler=_embed)

    features = commands.add_parser('features', help="Extract DCT-residual features to CSV.")
    features.add_argument('--input', required=True)
    features.add_argument('--schema', choices=sorted(SCHEMAS), default='dctr')
    features.add_argument('--label', type=int, choices=(0, 1), default=None)
    features.add_argument('--out', required=True)
    features.set_defaults(handler=_features)

    detector = commands.add_parser('train-detector', help="Train a logistic detector on feature CSVs.")
    detector.add_argument('--covers', required=True)
    detector.add_argument('--stegos', required=True)
    detector.add_argument('--reg', type=float, default=None, help="Defaults to 1 / number of training examples.")
    detector.add_argument('--seed', type=int, default=0)
    detector.add_argument('--out', required=True)
    detector.set_defaults(handler=_train_detector)

    evaluation = commands.add_parser('eval', help="Balanced accuracy of a detector.")
    evaluation.add_argument('--detector', required=True)
    evaluation.add_argument('--covers', required=True)
    evaluation.add_argument('--stegos', required=True)
    evaluation.set_defaults(handler=_eval)

    learn = commands.add_parser('tada-learn', help="Learn the development kernel of a target.")
    learn.add_argument('--raw', required=True, help="Directory of RAW PGM files.")
    learn.add_argument('--target', required=True, help="Directory of target JPEGs.")
    learn.add_argument('--config', default=None, help="Experiment JSON; its training and loss sections are used.")
    learn.add_argument('--out', required=True)
    learn.set_defaults(handler=_tada_learn)

    for name, handler, text in (('baseline', _baseline, "Run selected strategies of an experiment."),
                                ('experiment', _experiment, "Run a full experiment."),
                                ('ablation', _ablation, "Run an ablation sweep.")):
        command = commands.add_parser(name, help=text)
        command.add_argument('--config', default=None, help="Experiment JSON, the defaults otherwise.")
        command.add_argument('--output', default=None, help="Output directory.")
        command.add_argument('--overwrite', action='store_true')
        command.set_defaults(handler=handler)
        if name == 'baseline':
            command.add_argument('--strategies', nargs='+', choices=STRATEGIES, required=True)
        elif name == 'experiment':
            command.add_argument('--cross-matrix', nargs='+', default=None, metavar='PIPELINE',
                                 help="Compute the source-only cross-accuracy matrix of these pipelines instead.")
        else:
            command.add_argument('--axis', choices=ABLATION_AXES, required=True)
            command.add_argument('--values', nargs='+', required=True)

    report = commands.add_parser('report', help="Merge or convert report files.")
    report.add_argument('inputs', nargs='+')
    report.add_argument('--format', choices=REPORT_FORMATS, default='csv')
    report.add_argument('--panels', action='store_true', help="One file per balance in the --out directory.")
    report.add_argument('--out', required=True)
    report.set_defaults(handler=_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.handler(args)
    except (ConfigurationException, OutputExistsException) as err:
        logger.error(str(err))
        print(str(err), file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except TadaException as err:
        logger.error(str(err))
        print(str(err), file=sys.stderr)
        return EXIT_STAGE_FAILURE
    return EXIT_SUCCESS


if __name__ == '__main__':
    sys.exit(main())
