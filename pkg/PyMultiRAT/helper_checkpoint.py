from __future__ import annotations

import hashlib
import json
import os
import tempfile
from typing import Any

import numpy as np

from PyMultiRAT import __version__
from PyMultiRAT import helper_generic as hlp
from PyMultiRAT.class_exceptions import (
    Checkpoint_Integrity_Error,
    Config_Hash_Mismatch_Error,
)
from PyMultiRAT.class_mlp import MLP_Net, MLP_Spec
from PyMultiRAT.class_team import Team

logger = hlp.get_logger(__name__)

MAGIC = b'PYMULTIRAT-CHECKPOINT\n'
FORMAT_VERSION = 1
PAYLOAD_DTYPE = '<f8'
BLOCK_KINDS = ('params', 'target_params', 'adam_m', 'adam_v')


def _team_blocks(team: Team) -> list[tuple[dict[str, Any], np.ndarray]]:
    blocks = []
    for agent_index, role, net in team.networks():
        for kind in BLOCK_KINDS:
            array = getattr(net, kind)
            meta = {
                'team': team.name,
                'agent': agent_index,
                'role': role,
                'kind': kind,
                'length': len(array),
                'spec': net.spec.to_dict(),
                'adam_step_count': net.adam_step_count,
            }
            blocks.append((meta, array))

    return blocks


def save_checkpoint(
        path: str,
        teams: list[Team],
        config_hash: str,
        *,
        rng_state: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """
    Save the parameters, target parameters and Adam moments of every network
    of ``teams``.

    The file is a magic line, a one-line JSON header (format version, config
    hash, block table, RNG state, payload length and SHA-256), and then the
    little-endian float64 payload. It is written to a temporary file in the
    same directory and renamed, so an interrupted save never leaves a
    partial checkpoint at ``path``.

    Parameters
    ----------
    path : str
        Destination file.
    teams : list[Team]
        The teams to save.
    config_hash : str
        Hash of the configuration the teams were built from.
    rng_state : dict[str, Any] | None
        State of the run's bit generator (``Generator.bit_generator.state``)
        to store along the parameters.

    Returns
    -------
    dict[str, Any]
        The header.
    """
    metas, arrays = [], []
    for team in teams:
        for meta, array in _team_blocks(team):
            metas.append(meta)
            arrays.append(np.asarray(array, dtype=PAYLOAD_DTYPE))

    payload = b''.join(_.tobytes() for _ in arrays)
    header = {
        'format_version': FORMAT_VERSION,
        'code_version': __version__,
        'config_hash': config_hash,
        'blocks': metas,
        'rng_state': rng_state,
        'payload_length': len(payload),
        'sha256': hashlib.sha256(payload).hexdigest(),
    }
    header_line = (json.dumps(header, sort_keys=True) + '\n').encode('utf-8')

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix='.tmp')
    try:
        with os.fdopen(fd, 'wb') as fp:
            fp.write(MAGIC)
            fp.write(header_line)
            fp.write(payload)
            fp.flush()
            os.fsync(fp.fileno())

        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)

        raise

    logger.info(
        'Saved checkpoint with %d blocks (%d bytes) to %s',
        len(metas),
        len(payload),
        path,
    )
    return header


def read_checkpoint(path: str) -> tuple[dict[str, Any], np.ndarray]:
    """
    Read and verify a checkpoint file.

    Parameters
    ----------
    path : str
        The checkpoint file.

    Returns
    -------
    header : dict[str, Any]
        The JSON header.
    payload : np.ndarray
        All blocks, concatenated, as float64.

    Raises
    ------
    Checkpoint_Integrity_Error
        When the file is not a checkpoint, is truncated, fails its checksum,
        or has a newer format version
    """
    with open(path, 'rb') as fp:
        content = fp.read()

    if not content.startswith(MAGIC):
        raise Checkpoint_Integrity_Error('%s is not a checkpoint file.' % path)

    end = content.find(b'\n', len(MAGIC))
    if end < 0:
        raise Checkpoint_Integrity_Error('Checkpoint header is truncated.')

    try:
        header = json.loads(content[len(MAGIC):end].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise Checkpoint_Integrity_Error(
            'Checkpoint header is corrupt: %s' % exc
        ) from exc

    version = header.get('format_version')
    if not isinstance(version, int) or version > FORMAT_VERSION:
        raise Checkpoint_Integrity_Error(
            'Unsupported checkpoint format version %s (this code reads up '
            'to %d).' % (version, FORMAT_VERSION),
        )

    payload = content[end + 1:]
    if len(payload) != header.get('payload_length'):
        raise Checkpoint_Integrity_Error(
            'Checkpoint payload has %d bytes; the header expects %s '
            '(truncated file?).' % (len(payload), header.get('payload_length')),
        )

    if hashlib.sha256(payload).hexdigest() != header.get('sha256'):
        raise Checkpoint_Integrity_Error('Checkpoint checksum mismatch.')

    total = sum(block['length'] for block in header['blocks'])
    if total * np.dtype(PAYLOAD_DTYPE).itemsize != len(payload):
        raise Checkpoint_Integrity_Error(
            'Checkpoint block table does not match the payload length.'
        )

    return header, np.frombuffer(payload, dtype=PAYLOAD_DTYPE).astype(float)


def load_checkpoint(
        path: str,
        teams: list[Team],
        config_hash: str | None = None,
        *,
        allow_hash_mismatch: bool = False,
) -> dict[str, Any]:
    """
    Load a checkpoint into existing teams (built from the same config).

    Parameters
    ----------
    path : str
        The checkpoint file.
    teams : list[Team]
        Teams whose networks are overwritten in place.
    config_hash : str | None
        Hash of the current configuration. ``None`` skips the check.
    allow_hash_mismatch : bool
        Whether a config-hash mismatch only logs a warning.

    Returns
    -------
    dict[str, Any]
        The header.

    Raises
    ------
    Checkpoint_Integrity_Error
        When the file is corrupt, or its blocks do not match the networks
    Config_Hash_Mismatch_Error
        When the checkpoint's config hash differs from ``config_hash``
    """
    header, payload = read_checkpoint(path)
    if config_hash is not None and header['config_hash'] != config_hash:
        if not allow_hash_mismatch:
            raise Config_Hash_Mismatch_Error(config_hash, header['config_hash'])

        logger.warning(
            'Loading checkpoint %s despite a config hash mismatch.', path
        )

    nets: dict[tuple[str, int, str], MLP_Net] = {}
    for team in teams:
        for agent_index, role, net in team.networks():
            nets[(team.name, agent_index, role)] = net

    offset = 0
    assignments = []
    seen = set()
    for block in header['blocks']:
        key = (block['team'], block['agent'], block['role'])
        if key not in nets or block['kind'] not in BLOCK_KINDS:
            raise Checkpoint_Integrity_Error(
                'Checkpoint block %s/%s has no matching network.'
                % (key, block['kind']),
            )

        net = nets[key]
        if MLP_Spec.from_dict(block['spec']) != net.spec:
            raise Checkpoint_Integrity_Error(
                'Architecture of %s differs from the checkpoint.' % (key,)
            )

        if block['length'] != getattr(net, block['kind']).size:
            raise Checkpoint_Integrity_Error(
                'Block %s/%s has the wrong length.' % (key, block['kind'])
            )

        values = payload[offset:offset + block['length']]
        offset += block['length']
        assignments.append((net, block, values))
        seen.add(key)

    if seen != set(nets):
        raise Checkpoint_Integrity_Error(
            'Checkpoint lacks networks: %s' % sorted(set(nets) - seen)
        )

    # nothing is written before every block has been checked
    for net, block, values in assignments:
        getattr(net, block['kind'])[:] = values
        net.adam_step_count = int(block['adam_step_count'])

    logger.info('Loaded checkpoint %s', path)
    return header
