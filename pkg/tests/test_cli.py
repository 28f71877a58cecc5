import json
import os
import tempfile
import unittest
from unittest import mock

import pandas as pd

from PyMultiRAT.class_episode_metrics import TIMESERIES_COLUMNS, TRACE_COLUMNS
from PyMultiRAT.class_experiment_config import (
    DATA_DIR,
    Experiment_Config,
    load_config,
)
from PyMultiRAT.cli import CHECKPOINT_FILE, MANIFEST_FILE, build_parser, main


def _manifest(out_dir):
    with open(os.path.join(out_dir, MANIFEST_FILE)) as fp:
        return json.load(fp)


class Test_CLI(unittest.TestCase):
    def test_train_eval_compare__smoke_run(self):
        smoke_hash = load_config('smoke').config_hash()
        with tempfile.TemporaryDirectory() as tmp:
            train_dir = os.path.join(tmp, 'train')
            status = main(['train', '--config', 'smoke', '--out', train_dir])
            self.assertEqual(status, 0)
            checkpoint = os.path.join(train_dir, CHECKPOINT_FILE)
            self.assertTrue(os.path.isfile(checkpoint))
            log = pd.read_csv(os.path.join(train_dir, 'training.csv'))
            self.assertEqual(len(log), 10 * (2 + 2))
            manifest = _manifest(train_dir)
            self.assertEqual(manifest['command'], 'train')
            self.assertEqual(manifest['config_hash'], smoke_hash)
            self.assertEqual(manifest['seed'], 7)
            self.assertEqual(manifest['outputs'], ['training.csv', CHECKPOINT_FILE])

            eval_dir = os.path.join(tmp, 'eval')
            status = main(
                [
                    'eval',
                    '--config',
                    'smoke',
                    '--checkpoint',
                    checkpoint,
                    '--out',
                    eval_dir,
                ],
            )
            self.assertEqual(status, 0)
            table = pd.read_csv(os.path.join(eval_dir, 'eval.csv'))
            self.assertEqual(set(table['policy']), {'tb-maddpg'})
            self.assertEqual(sorted(set(table['seed'])), [0, 1])
            allocation = {'utilization_1_0', 'ratio_seizure_1', 'ratio_nonseizure_0'}
            allocation |= {'bw_fraction_0_1', 'bw_fraction_1_0'}
            self.assertTrue(allocation <= set(table['metric']))
            self.assertEqual(_manifest(eval_dir)['checkpoint'], checkpoint)

            compare_dir = os.path.join(tmp, 'compare')
            status = main(
                [
                    'compare',
                    '--config',
                    'smoke',
                    '--checkpoint',
                    checkpoint,
                    '--out',
                    compare_dir,
                ],
            )
            self.assertEqual(status, 0)
            summary = pd.read_csv(os.path.join(compare_dir, 'summary.csv'))
            self.assertEqual(
                sorted(summary['policy']),
                ['aansc', 'heuristic', 'onsra', 'tb-maddpg'],
            )
            self.assertTrue((summary['n_seeds'] == 2).all())
            series = pd.read_csv(os.path.join(compare_dir, 'timeseries.csv'))
            self.assertEqual(list(series.columns), TIMESERIES_COLUMNS)
            self.assertIn('timeseries.csv', _manifest(compare_dir)['outputs'])

    def test_baseline__trace_and_seed_override(self):
        with tempfile.TemporaryDirectory() as tmp:
            status = main(
                [
                    'baseline',
                    '--config',
                    'smoke',
                    '--policy',
                    'heuristic',
                    '--seed',
                    '11',
                    '--trace',
                    '--out',
                    tmp,
                ],
            )
            self.assertEqual(status, 0)
            trace = pd.read_csv(os.path.join(tmp, 'trace.csv'))
            self.assertEqual(list(trace.columns), TRACE_COLUMNS)
            manifest = _manifest(tmp)
            self.assertEqual(manifest['policy'], 'heuristic')
            self.assertEqual(manifest['seed'], 11)
            self.assertEqual(manifest['eval_seeds'], [11, 12])
            self.assertIn('trace.csv', manifest['outputs'])

    def test_main__usage_errors_exit_with_2(self):
        with self.assertRaises(SystemExit) as cm:
            main(['train'])

        self.assertEqual(cm.exception.code, 2)
        with self.assertRaises(SystemExit) as cm:
            main(['baseline', '--config', 'smoke', '--policy', 'random'])

        self.assertEqual(cm.exception.code, 2)
        with tempfile.TemporaryDirectory() as tmp:
            with mock.patch.dict(os.environ, {'MULTIRAT_LOG_LEVEL': 'loud'}):
                status = main(
                    [
                        'baseline',
                        '--config',
                        'smoke',
                        '--policy',
                        'heuristic',
                        '--out',
                        tmp,
                    ],
                )

        self.assertEqual(status, 2)

    def test_main__runtime_errors_exit_with_1(self):
        with tempfile.TemporaryDirectory() as tmp:
            missing = os.path.join(tmp, 'missing.bin')
            status = main(
                ['eval', '--config', 'smoke', '--checkpoint', missing, '--out', tmp]
            )
            self.assertEqual(status, 1)

            status = main(
                [
                    'baseline',
                    '--config',
                    os.path.join(tmp, 'missing.yaml'),
                    '--policy',
                    'aansc',
                ],
            )
            self.assertEqual(status, 1)

    def test_eval__config_hash_mismatch(self):
        with open(os.path.join(DATA_DIR, 'smoke.yaml')) as fp:
            text = fp.read()

        with tempfile.TemporaryDirectory() as tmp:
            other = os.path.join(tmp, 'other.yaml')
            with open(other, 'w') as fp:
                fp.write(text + '\nscenario:\n  resource_share_ms: 30.0\n')

            train_dir = os.path.join(tmp, 'train')
            main(['train', '--config', 'smoke', '--out', train_dir])
            checkpoint = os.path.join(train_dir, CHECKPOINT_FILE)
            args = ['eval', '--config', other, '--checkpoint', checkpoint]
            args += ['--out', os.path.join(tmp, 'eval')]
            self.assertEqual(main(args), 1)
            self.assertEqual(main(args + ['--allow-hash-mismatch']), 0)

    def test_train__resume_continues_at_the_saved_episode(self):
        raw = load_config('smoke').to_dict()
        raw['train']['episodes'] = 12
        longer = Experiment_Config(raw)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'longer.yaml')
            with open(path, 'w') as fp:
                fp.write(longer.serialize())

            first = os.path.join(tmp, 'first')
            main(['train', '--config', 'smoke', '--out', first])
            checkpoint = os.path.join(first, CHECKPOINT_FILE)
            second = os.path.join(tmp, 'second')
            status = main(
                ['train', '--config', path, '--resume', checkpoint, '--out', second]
            )
            self.assertEqual(status, 0)
            log = pd.read_csv(os.path.join(second, 'training.csv'))
            self.assertEqual(sorted(set(log['episode'])), [10, 11])
            self.assertEqual(len(log), 2 * (2 + 2))
            self.assertEqual(_manifest(second)['resumed_from'], checkpoint)

    def test_build_parser__subcommands(self):
        parser = build_parser()
        args = parser.parse_args(
            ['compare', '--config', 'smoke', '--checkpoint', 'x.bin']
        )
        self.assertEqual(args.command, 'compare')
        self.assertFalse(args.allow_hash_mismatch)
        self.assertIsNone(args.out)
        self.assertFalse(args.trace)


if __name__ == '__main__':
    SUITE = unittest.TestLoader().loadTestsFromTestCase(Test_CLI)
    unittest.TextTestRunner(verbosity=2).run(SUITE)
