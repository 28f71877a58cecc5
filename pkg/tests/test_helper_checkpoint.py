import json
import os
import tempfile
import unittest

import numpy as np

import PyMultiRAT.helper_checkpoint as ckp
from PyMultiRAT.class_exceptions import (
    Checkpoint_Integrity_Error,
    Config_Hash_Mismatch_Error,
)
from PyMultiRAT.class_team import Network_Config, build_teams


def _teams(seed=0, hidden_sizes=(8,)):
    return list(
        build_teams(
            2,
            2,
            Network_Config(hidden_sizes=list(hidden_sizes)),
            buffer_capacity=10,
            seed=seed,
            kappa_max=0.99,
        ),
    )


def _all_arrays(teams):
    return [
        getattr(net, kind).copy()
        for team in teams
        for _, _, net in team.networks()
        for kind in ckp.BLOCK_KINDS
    ]


class Test_Helper_Checkpoint(unittest.TestCase):
    def test_save_and_load__restores_every_block(self):
        source = _teams(seed=1)
        for team in source:
            for _, _, net in team.networks():
                net.adam_step(np.ones(net.n_params), team.actor_adam)

        rng_state = np.random.default_rng(5).bit_generator.state
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'sub', 'teams.ckpt')
            header = ckp.save_checkpoint(path, source, 'abc', rng_state=rng_state)
            self.assertEqual(os.listdir(os.path.dirname(path)), ['teams.ckpt'])
            self.assertEqual(len(header['blocks']), 2 * 4 * 4)

            target = _teams(seed=2)
            loaded = ckp.load_checkpoint(path, target, 'abc')

        self.assertEqual(loaded['rng_state'], rng_state)
        for a, b in zip(_all_arrays(source), _all_arrays(target)):
            self.assertTrue(np.array_equal(a, b))

        self.assertEqual(target[1].agents[0].actor.adam_step_count, 1)

    def test_read_checkpoint__not_a_checkpoint(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'other.bin')
            with open(path, 'wb') as fp:
                fp.write(b'hello world\n')

            with self.assertRaisesRegex(
                Checkpoint_Integrity_Error, 'not a checkpoint'
            ):
                ckp.read_checkpoint(path)

    def test_read_checkpoint__truncated_payload(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'teams.ckpt')
            ckp.save_checkpoint(path, _teams(), 'abc')
            with open(path, 'rb') as fp:
                content = fp.read()

            with open(path, 'wb') as fp:
                fp.write(content[:-8])

            with self.assertRaisesRegex(Checkpoint_Integrity_Error, 'truncated'):
                ckp.read_checkpoint(path)

    def test_read_checkpoint__flipped_payload_byte(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'teams.ckpt')
            ckp.save_checkpoint(path, _teams(), 'abc')
            with open(path, 'rb') as fp:
                content = bytearray(fp.read())

            content[-1] ^= 0xFF
            with open(path, 'wb') as fp:
                fp.write(bytes(content))

            with self.assertRaisesRegex(Checkpoint_Integrity_Error, 'checksum'):
                ckp.read_checkpoint(path)

    def test_read_checkpoint__corrupt_header_and_newer_version(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'bad.ckpt')
            with open(path, 'wb') as fp:
                fp.write(ckp.MAGIC + b'{not json\n')

            with self.assertRaisesRegex(Checkpoint_Integrity_Error, 'corrupt'):
                ckp.read_checkpoint(path)

            header = {'format_version': ckp.FORMAT_VERSION + 1}
            with open(path, 'wb') as fp:
                fp.write(ckp.MAGIC + json.dumps(header).encode() + b'\n')

            with self.assertRaisesRegex(
                Checkpoint_Integrity_Error, 'Unsupported checkpoint format'
            ):
                ckp.read_checkpoint(path)

    def test_load_checkpoint__config_hash_mismatch(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'teams.ckpt')
            ckp.save_checkpoint(path, _teams(seed=1), 'abc')
            target = _teams(seed=2)
            before = _all_arrays(target)
            with self.assertRaises(Config_Hash_Mismatch_Error) as cm:
                ckp.load_checkpoint(path, target, 'xyz')

            self.assertEqual(cm.exception.found, 'abc')
            for a, b in zip(before, _all_arrays(target)):
                self.assertTrue(np.array_equal(a, b))

            with self.assertLogs('PyMultiRAT.helper_checkpoint', 'WARNING'):
                ckp.load_checkpoint(
                    path, target, 'xyz', allow_hash_mismatch=True
                )

            ckp.load_checkpoint(path, _teams(), None)

    def test_load_checkpoint__architecture_mismatch(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'teams.ckpt')
            ckp.save_checkpoint(path, _teams(), 'abc')
            with self.assertRaisesRegex(
                Checkpoint_Integrity_Error, 'Architecture'
            ):
                ckp.load_checkpoint(path, _teams(hidden_sizes=(4,)), 'abc')

            pen_only = os.path.join(tmp, 'pen.ckpt')
            ckp.save_checkpoint(pen_only, _teams()[:1], 'abc')
            with self.assertRaisesRegex(
                Checkpoint_Integrity_Error, 'lacks networks'
            ):
                ckp.load_checkpoint(pen_only, _teams(), 'abc')

    def test_load_checkpoint__failed_load_leaves_targets_untouched(self):
        source = _teams(seed=1)[:1]
        for _, _, net in source[0].networks():
            net.adam_step(np.ones(net.n_params), source[0].actor_adam)

        target = _teams(seed=2)
        before = _all_arrays(target)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'pen.ckpt')
            ckp.save_checkpoint(path, source, 'abc')
            with self.assertRaisesRegex(
                Checkpoint_Integrity_Error, 'lacks networks'
            ):
                ckp.load_checkpoint(path, target, 'abc')

        for a, b in zip(before, _all_arrays(target)):
            self.assertTrue(np.array_equal(a, b))

        for team in target:
            for _, _, net in team.networks():
                self.assertEqual(net.adam_step_count, 0)


if __name__ == '__main__':
    SUITE = unittest.TestLoader().loadTestsFromTestCase(Test_Helper_Checkpoint)
    unittest.TextTestRunner(verbosity=2).run(SUITE)
