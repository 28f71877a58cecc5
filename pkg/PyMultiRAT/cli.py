from __future__ import annotations

import argparse
import json
import os
import sys

import pandas as pd

from PyMultiRAT import __version__
from PyMultiRAT import helper_baselines as bsl
from PyMultiRAT import helper_checkpoint as ckpt
from PyMultiRAT import helper_generic as hlp
from PyMultiRAT import helper_training as trn
from PyMultiRAT.class_batch_evaluation import Batch_Evaluation
from PyMultiRAT.class_episode_metrics import (
    Episode_Metrics,
    metrics_table,
    summary_table,
    timeseries_table,
    trace_table,
    write_csv,
)
from PyMultiRAT.class_experiment_config import Experiment_Config, load_config
from PyMultiRAT.class_policies import Baseline_Policy, Learned_Policy
from PyMultiRAT.class_team import Team, build_teams

logger = hlp.get_logger(__name__)

CHECKPOINT_FILE = 'checkpoint.bin'
MANIFEST_FILE = 'manifest.json'
RUNTIME_ERRORS = (ValueError, KeyError, TypeError, OSError)


def _prepare(args: argparse.Namespace) -> tuple[Experiment_Config, str]:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)

    out_dir = cfg['output']['dir'] if args.out is None else args.out
    os.makedirs(out_dir, exist_ok=True)
    return cfg, out_dir


def _write_manifest(
        out_dir: str,
        command: str,
        cfg: Experiment_Config,
        outputs: list[str],
        **extra,
) -> None:
    manifest = {
        'command': command,
        'code_version': __version__,
        'config_hash': cfg.config_hash(),
        'seed': cfg['train']['seed'],
        'eval_seeds': cfg['eval']['seeds'],
        'config': cfg.to_dict(),
        'outputs': outputs,
        **extra,
    }
    with open(os.path.join(out_dir, MANIFEST_FILE), 'w', encoding='utf-8') as fp:
        json.dump(manifest, fp, indent=2, sort_keys=True)


def _load_teams(
        cfg: Experiment_Config,
        checkpoint_path: str,
        allow_hash_mismatch: bool,
        buffer_capacity: int = 1,
) -> tuple[Team, Team, dict]:
    scenario = cfg.build_scenario()
    teams = build_teams(
        scenario.n_pens,
        scenario.n_rans,
        cfg.build_network_config(),
        buffer_capacity=buffer_capacity,
        seed=cfg['train']['seed'],
        kappa_max=scenario.kappa_max,
    )
    header = ckpt.load_checkpoint(
        checkpoint_path,
        list(teams),
        cfg.config_hash(),
        allow_hash_mismatch=allow_hash_mismatch,
    )
    return teams[0], teams[1], header


def _write_episode_tables(
        out_dir: str,
        metrics: list[Episode_Metrics],
        table_name: str,
        trace: bool,
) -> list[str]:
    table = metrics_table(metrics)
    outputs = [table_name, 'summary.csv']
    write_csv(table, os.path.join(out_dir, table_name))
    write_csv(summary_table(table), os.path.join(out_dir, 'summary.csv'))
    if trace:
        write_csv(trace_table(metrics), os.path.join(out_dir, 'trace.csv'))
        outputs.append('trace.csv')

    return outputs


def cmd_train(args: argparse.Namespace) -> int:
    """
    Train both teams, then write ``training.csv``, the checkpoint and the
    run manifest.

    With ``--resume``, the networks, optimizer moments, episode counter and
    generator states come from the given checkpoint, which must match the
    config hash. Replay buffers are not checkpointed and refill from empty.

    Parameters
    ----------
    args : argparse.Namespace
        Parsed command-line arguments.

    Returns
    -------
    int
        Exit status.
    """
    cfg, out_dir = _prepare(args)
    scenario = cfg.build_scenario()
    train_cfg = cfg.build_train_config()
    teams, resume_state, extra = None, None, {}
    if args.resume is not None:
        pen_team, ran_team, header = _load_teams(
            cfg, args.resume, False, buffer_capacity=train_cfg.buffer_capacity
        )
        teams, resume_state = (pen_team, ran_team), header['rng_state']
        extra['resumed_from'] = args.resume
        logger.info(
            'Resuming from %s at episode %s',
            args.resume,
            'start' if resume_state is None else resume_state['episode'],
        )

    pen_team, ran_team, training_log = trn.train(
        scenario,
        train_cfg,
        cfg.build_network_config(),
        teams=teams,
        resume_state=resume_state,
        verbose=True,
    )
    write_csv(training_log, os.path.join(out_dir, 'training.csv'))
    checkpoint_path = args.checkpoint or os.path.join(out_dir, CHECKPOINT_FILE)
    ckpt.save_checkpoint(
        checkpoint_path,
        [pen_team, ran_team],
        cfg.config_hash(),
        rng_state=training_log.attrs.get('rng_state'),
    )
    _write_manifest(
        out_dir,
        'train',
        cfg,
        ['training.csv', os.path.basename(checkpoint_path)],
        n_obs_clamped=scenario.n_obs_clamped,
        n_distortion_clamped=scenario.distortion_model.n_clamped,
        **extra,
    )
    logger.info('Training finished; outputs in %s', out_dir)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    """
    Evaluate the trained actors of a checkpoint without exploration noise.

    Parameters
    ----------
    args : argparse.Namespace
        Parsed command-line arguments.

    Returns
    -------
    int
        Exit status.
    """
    cfg, out_dir = _prepare(args)
    pen_team, ran_team, _ = _load_teams(
        cfg, args.checkpoint, args.allow_hash_mismatch
    )
    policy = Learned_Policy(pen_team, ran_team)
    metrics = Batch_Evaluation([policy], cfg.build_scenario()).run(
        cfg['eval']['seeds'],
        max_steps=cfg['eval']['max_steps'],
        gamma=cfg['train']['gamma'],
        trace=args.trace,
        parallel=cfg['eval']['parallel'],
        n_cores=cfg['eval']['n_cores'],
    )
    outputs = _write_episode_tables(out_dir, metrics, 'eval.csv', args.trace)
    _write_manifest(out_dir, 'eval', cfg, outputs, checkpoint=args.checkpoint)
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    """
    Run one baseline in the environment.

    Parameters
    ----------
    args : argparse.Namespace
        Parsed command-line arguments.

    Returns
    -------
    int
        Exit status.
    """
    cfg, out_dir = _prepare(args)
    scenario = cfg.build_scenario()
    policy = Baseline_Policy(
        args.policy, scenario, cfg.build_grid_spec(), **cfg.baseline_kwargs()
    )
    metrics = Batch_Evaluation([policy], scenario).run(
        cfg['eval']['seeds'],
        max_steps=cfg['eval']['max_steps'],
        gamma=cfg['train']['gamma'],
        trace=args.trace,
        parallel=cfg['eval']['parallel'],
        n_cores=cfg['eval']['n_cores'],
    )
    outputs = _write_episode_tables(out_dir, metrics, 'eval.csv', args.trace)
    _write_manifest(out_dir, 'baseline', cfg, outputs, policy=args.policy)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    """
    Evaluate the trained policy and the three baselines on the same seeds.

    Parameters
    ----------
    args : argparse.Namespace
        Parsed command-line arguments.

    Returns
    -------
    int
        Exit status.
    """
    cfg, out_dir = _prepare(args)
    scenario = cfg.build_scenario()
    pen_team, ran_team, _ = _load_teams(
        cfg, args.checkpoint, args.allow_hash_mismatch
    )
    grid = cfg.build_grid_spec()
    policies = [Learned_Policy(pen_team, ran_team)] + [
        Baseline_Policy(tag, scenario, grid, **cfg.baseline_kwargs())
        for tag in bsl.POLICY_TAGS
    ]
    metrics = Batch_Evaluation(policies, scenario).run(
        cfg['eval']['seeds'],
        max_steps=cfg['eval']['max_steps'],
        gamma=cfg['train']['gamma'],
        trace=args.trace,
        parallel=cfg['eval']['parallel'],
        n_cores=cfg['eval']['n_cores'],
    )
    outputs = _write_episode_tables(
        out_dir, metrics, 'compare.csv', args.trace
    )
    write_csv(timeseries_table(metrics), os.path.join(out_dir, 'timeseries.csv'))
    outputs.append('timeseries.csv')
    _write_manifest(
        out_dir, 'compare', cfg, outputs, checkpoint=args.checkpoint
    )
    summary = pd.read_csv(os.path.join(out_dir, 'summary.csv'))
    logger.info('Comparison summary:\n%s', summary.to_string(index=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    """
    Returns
    -------
    argparse.ArgumentParser
        The command-line parser with the train, eval, baseline and compare
        subcommands.
    """
    parser = argparse.ArgumentParser(
        prog='multirat',
        description='Multi-RAT network selection and bandwidth allocation '
        'with team-based multi-agent DDPG.',
    )
    parser.add_argument('--version', action='version', version=__version__)
    subparsers = parser.add_subparsers(dest='command', required=True)

    def add_common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument(
            '--config',
            required=True,
            help='YAML file, or a shipped config name: default, desk, smoke.',
        )
        sub.add_argument('--out', default=None, help='Output directory.')
        sub.add_argument(
            '--seed', type=int, default=None, help='Overrides the config seeds.'
        )
        sub.add_argument(
            '--trace',
            action='store_true',
            help='Also write per-step traces (trace.csv).',
        )

    train = subparsers.add_parser('train', help='Train the PEN and RAN teams.')
    add_common(train)
    train.add_argument(
        '--checkpoint', default=None, help='Checkpoint path to write.'
    )
    train.add_argument(
        '--resume',
        default=None,
        help='Checkpoint of an earlier run of the same config to continue.',
    )
    train.set_defaults(func=cmd_train)

    for name, func, help_text in [
        ('eval', cmd_eval, 'Evaluate a trained checkpoint.'),
        ('compare', cmd_compare, 'Compare a checkpoint with the baselines.'),
    ]:
        sub = subparsers.add_parser(name, help=help_text)
        add_common(sub)
        sub.add_argument('--checkpoint', required=True)
        sub.add_argument(
            '--allow-hash-mismatch',
            action='store_true',
            help='Load a checkpoint trained under another config.',
        )
        sub.set_defaults(func=func)

    baseline = subparsers.add_parser('baseline', help='Run one baseline.')
    add_common(baseline)
    baseline.add_argument('--policy', required=True, choices=bsl.POLICY_TAGS)
    baseline.set_defaults(func=cmd_baseline)
    return parser


def main(argv: list[str] | None = None) -> int:
    """
    Entry point of the ``multirat`` command.

    Parameters
    ----------
    argv : list[str] | None
        Arguments (without the program name). ``None`` means ``sys.argv``.

    Returns
    -------
    int
        0 on success, 1 on a runtime failure. Usage errors exit with 2.
    """
    args = build_parser().parse_args(argv)
    try:
        hlp.configure_logging()
    except ValueError as exc:
        print('error: %s' % exc, file=sys.stderr)
        return 2

    try:
        return args.func(args)
    except RUNTIME_ERRORS as exc:
        logger.error('%s failed: %s: %s', args.command, type(exc).__name__, exc)
        return 1
