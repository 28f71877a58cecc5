from __future__ import annotations


class Zero_Rate_Transmission_Error(ValueError):
    """Positive payload over a link whose achievable rate is zero."""

    def __init__(self, bits: float | None = None) -> None:
        msg = 'zero-rate transmission'
        if bits is not None:
            msg += ' (%g bits over a link with rate 0 bit/s)' % bits

        super().__init__(msg)


class Non_Finite_Gradient_Error(ValueError):
    """A gradient contains NaN or infinite entries."""

    def __init__(self, n_bad: int | None = None) -> None:
        msg = 'non-finite gradient'
        if n_bad is not None:
            msg += ' (%d non-finite entries)' % n_bad

        super().__init__(msg)


class Config_Error(ValueError):
    """
    An experiment configuration breaks a constraint.

    Parameters
    ----------
    section : str
        Name of the configuration section.
    key : str | None
        Name of the key inside the section. ``None`` if the problem concerns
        the whole section.
    constraint : str
        Human-readable description of the broken constraint.
    """

    def __init__(self, section: str, key: str | None, constraint: str) -> None:
        self.section = section
        self.key = key
        self.constraint = constraint
        where = section if key is None else '%s.%s' % (section, key)
        super().__init__('`%s`: %s' % (where, constraint))


class Checkpoint_Integrity_Error(ValueError):
    """A checkpoint file is corrupt, truncated, or of an unknown version."""


class Config_Hash_Mismatch_Error(ValueError):
    """A checkpoint was produced under a different configuration."""

    def __init__(self, expected: str, found: str) -> None:
        self.expected = expected
        self.found = found
        super().__init__(
            'config hash mismatch: checkpoint has %s, current config has %s.'
            % (found, expected),
        )


class Training_Error(ValueError):
    """An exception raised inside the training loop, tagged with the episode."""

    def __init__(self, episode: int, cause: BaseException) -> None:
        self.episode = episode
        super().__init__(
            'Training failed at episode %d: %s: %s'
            % (episode, type(cause).__name__, cause),
        )


class Baseline_Error(ValueError):
    """A baseline optimizer produced a non-finite objective."""

    def __init__(self, round_index: int, detail: str = '') -> None:
        self.round_index = round_index
        msg = 'non-finite objective at round %d' % round_index
        if detail:
            msg += ': %s' % detail

        super().__init__(msg)
