from __future__ import annotations

import numpy as np
from scipy.special import expit, softmax

from PyMultiRAT import helper_generic as hlp
from PyMultiRAT.class_distortion_model import KAPPA_MAX
from PyMultiRAT.class_exceptions import Non_Finite_Gradient_Error

HIDDEN_ACTIVATIONS = {'relu', 'tanh'}
HEAD_ACTIVATIONS = {'linear', 'simplex', 'unit_interval'}


class MLP_Spec:
    """
    Architecture of a multilayer perceptron.

    Parameters
    ----------
    layer_sizes : list[int]
        Widths of all layers, input first and output last. At least 2.
    hidden_activation : {'relu', 'tanh'}
        Nonlinearity of the hidden layers.
    output_heads : list[tuple[int, str]] | None
        Consecutive slices of the output layer and their activations
        ('linear', 'simplex' or 'unit_interval'). The widths must add up to
        the output width. If ``None``, one linear head covers the output.
    kappa_max : float
        Upper end of the 'unit_interval' heads.

    Attributes
    ----------
    Same as the input parameters.

    Raises
    ------
    ValueError
        When the architecture is invalid
    """

    def __init__(
            self,
            layer_sizes: list[int],
            hidden_activation: str = 'relu',
            output_heads: list[tuple[int, str]] | None = None,
            kappa_max: float = KAPPA_MAX,
    ) -> None:
        layer_sizes = list(layer_sizes)
        if len(layer_sizes) < 2:
            raise ValueError('`layer_sizes` must have at least 2 entries.')

        if any(not hlp.is_int(_) or _ < 1 for _ in layer_sizes):
            raise ValueError('`layer_sizes` must be positive integers.')

        if hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(
                '`hidden_activation` must be one of %s.'
                % sorted(HIDDEN_ACTIVATIONS),
            )

        if output_heads is None:
            output_heads = [(layer_sizes[-1], 'linear')]

        output_heads = [(int(w), str(a)) for w, a in output_heads]
        for width, activation in output_heads:
            if width < 1:
                raise ValueError('Head widths must be positive.')

            if activation not in HEAD_ACTIVATIONS:
                raise ValueError(
                    'Head activations must be one of %s.'
                    % sorted(HEAD_ACTIVATIONS),
                )

        if sum(w for w, _ in output_heads) != layer_sizes[-1]:
            raise ValueError(
                'The head widths must sum to the output width (%d).'
                % layer_sizes[-1],
            )

        if not 0 < kappa_max <= 1:
            raise ValueError('`kappa_max` must be within (0, 1].')

        self.layer_sizes = [int(_) for _ in layer_sizes]
        self.hidden_activation = hidden_activation
        self.output_heads = output_heads
        self.kappa_max = float(kappa_max)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, MLP_Spec) and self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return 'MLP_Spec(%s)' % self.to_dict()

    @property
    def n_inputs(self) -> int:
        """Input width."""
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        """Output width."""
        return self.layer_sizes[-1]

    @property
    def n_params(self) -> int:
        """Total number of weights and biases."""
        sizes = self.layer_sizes
        return sum((a + 1) * b for a, b in zip(sizes[:-1], sizes[1:]))

    def head_slices(self) -> list[tuple[slice, str]]:
        """
        Output slices of the heads.

        Returns
        -------
        list[tuple[slice, str]]
            (slice, activation) per head.
        """
        result, start = [], 0
        for width, activation in self.output_heads:
            result.append((slice(start, start + width), activation))
            start += width

        return result

    def to_dict(self) -> dict:
        """
        JSON-friendly representation.

        Returns
        -------
        dict
            The spec as plain Python types.
        """
        return {
            'layer_sizes': list(self.layer_sizes),
            'hidden_activation': self.hidden_activation,
            'output_heads': [[w, a] for w, a in self.output_heads],
            'kappa_max': self.kappa_max,
        }

    @classmethod
    def from_dict(cls, data: dict) -> MLP_Spec:
        """
        Inverse of ``to_dict()``.

        Parameters
        ----------
        data : dict
            Output of ``to_dict()``.

        Returns
        -------
        MLP_Spec
            The spec.
        """
        return cls(
            data['layer_sizes'],
            hidden_activation=data['hidden_activation'],
            output_heads=[tuple(_) for _ in data['output_heads']],
            kappa_max=data['kappa_max'],
        )


class Adam_Config:
    """
    Hyperparameters of the Adam optimizer.

    Parameters
    ----------
    learning_rate : float
        Step size. Must be positive.
    beta1 : float
        Decay of the first moment, in (0, 1).
    beta2 : float
        Decay of the second moment, in (0, 1).
    epsilon_hat : float
        Small positive constant in the denominator.

    Attributes
    ----------
    Same as the input parameters.

    Raises
    ------
    ValueError
        When any value is out of range
    """

    def __init__(
            self,
            learning_rate: float,
            beta1: float = 0.9,
            beta2: float = 0.999,
            epsilon_hat: float = 1e-8,
    ) -> None:
        if not learning_rate > 0:
            raise ValueError('`learning_rate` must be positive.')

        if not 0 < beta1 < 1 or not 0 < beta2 < 1:
            raise ValueError('`beta1` and `beta2` must be within (0, 1).')

        if not epsilon_hat > 0:
            raise ValueError('`epsilon_hat` must be positive.')

        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon_hat = float(epsilon_hat)


def clip_by_global_norm(grad: np.ndarray, max_norm: float | None) -> np.ndarray:
    """
    Rescale ``grad`` so that its Euclidean norm does not exceed ``max_norm``.

    Parameters
    ----------
    grad : np.ndarray
        Flat gradient.
    max_norm : float | None
        Largest allowed norm. ``None`` disables clipping.

    Returns
    -------
    np.ndarray
        The (possibly rescaled) gradient.
    """
    if max_norm is None:
        return grad

    norm = float(np.linalg.norm(grad))
    if norm > max_norm:
        return grad * (max_norm / norm)

    return grad


class MLP_Net:
    """
    Multilayer perceptron with explicit forward and reverse-mode passes, Adam
    state and a time-delayed target copy.

    All parameters live in one flat float64 vector; per-layer weight and bias
    arrays are reshaped views into it.

    Parameters
    ----------
    spec : MLP_Spec
        The architecture.
    seed : int | None
        Seed of the initialization. Weights are uniform in
        [-sqrt(6 / (fan_in + fan_out)), +sqrt(6 / (fan_in + fan_out))];
        biases are zero; the target starts equal to the online parameters.

    Attributes
    ----------
    spec : MLP_Spec
        Same as the input parameter.
    params : np.ndarray
        Flat online parameters.
    target_params : np.ndarray
        Flat target parameters.
    adam_m, adam_v : np.ndarray
        First and second moment accumulators.
    adam_step_count : int
        Number of Adam steps taken.
    n_forward_calls : int
        Number of forward evaluations (online or target), for instrumentation.

    Raises
    ------
    TypeError
        When ``spec`` is not an ``MLP_Spec``
    """

    def __init__(self, spec: MLP_Spec, seed: int | None = None) -> None:
        if not isinstance(spec, MLP_Spec):
            raise TypeError('`spec` must be an `MLP_Spec` object.')

        self.spec = spec
        self._layout = []
        offset = 0
        for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
            w_slice = slice(offset, offset + fan_in * fan_out)
            offset += fan_in * fan_out
            b_slice = slice(offset, offset + fan_out)
            offset += fan_out
            self._layout.append((w_slice, b_slice, (fan_in, fan_out)))

        rng = np.random.default_rng(seed)
        self.params = np.zeros(offset)
        for w_slice, _, (fan_in, fan_out) in self._layout:
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            self.params[w_slice] = rng.uniform(
                -bound, bound, size=fan_in * fan_out
            )

        self.target_params = self.params.copy()
        self.adam_m = np.zeros(offset)
        self.adam_v = np.zeros(offset)
        self.adam_step_count = 0
        self.n_forward_calls = 0

    @property
    def n_params(self) -> int:
        """Length of the flat parameter vector."""
        return len(self.params)

    def layers(
            self,
            target: bool = False,
    ) -> list[tuple[np.ndarray, np.ndarray]]:
        """
        Per-layer (weight, bias) views.

        Parameters
        ----------
        target : bool
            Whether to view the target parameters instead of the online ones.

        Returns
        -------
        list[tuple[np.ndarray, np.ndarray]]
            Weight matrices of shape (fan_in, fan_out) and bias vectors.
        """
        flat = self.target_params if target else self.params
        return [
            (flat[w_slice].reshape(shape), flat[b_slice])
            for w_slice, b_slice, shape in self._layout
        ]

    def set_params(
            self,
            params: np.ndarray,
            target_params: np.ndarray | None = None,
    ) -> None:
        """
        Overwrite the parameters in place.

        Parameters
        ----------
        params : np.ndarray
            New online parameters.
        target_params : np.ndarray | None
            New target parameters. ``None`` leaves them unchanged.
        """
        hlp.assert_array_length(params, self.n_params, name='`params`')
        self.params[:] = params
        if target_params is not None:
            hlp.assert_array_length(
                target_params, self.n_params, name='`target_params`'
            )
            self.target_params[:] = target_params

    def _hidden(self, z: np.ndarray) -> np.ndarray:
        if self.spec.hidden_activation == 'relu':
            return np.maximum(z, 0.0)

        return np.tanh(z)

    def _hidden_backward(self, z: np.ndarray, a: np.ndarray) -> np.ndarray:
        if self.spec.hidden_activation == 'relu':
            return (z > 0).astype(float)

        return 1.0 - a**2

    def _heads(self, z: np.ndarray) -> np.ndarray:
        out = np.empty_like(z)
        for sl, activation in self.spec.head_slices():
            if activation == 'simplex':
                out[:, sl] = softmax(z[:, sl], axis=1)
            elif activation == 'unit_interval':
                out[:, sl] = self.spec.kappa_max * expit(z[:, sl])
            else:
                out[:, sl] = z[:, sl]

        return out

    def _heads_backward(
            self,
            out: np.ndarray,
            upstream: np.ndarray,
    ) -> np.ndarray:
        dz = np.empty_like(upstream)
        for sl, activation in self.spec.head_slices():
            u = upstream[:, sl]
            y = out[:, sl]
            if activation == 'simplex':
                dz[:, sl] = y * (u - np.sum(u * y, axis=1, keepdims=True))
            elif activation == 'unit_interval':
                s = y / self.spec.kappa_max
                dz[:, sl] = u * self.spec.kappa_max * s * (1.0 - s)
            else:
                dz[:, sl] = u

        return dz

    def _as_batch(self, x: np.ndarray) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        batch = x[None, :] if single else x
        if batch.ndim != 2 or batch.shape[1] != self.spec.n_inputs:
            raise ValueError(
                'The input must have %d columns, not shape %s.'
                % (self.spec.n_inputs, x.shape),
            )

        return batch, single

    def _forward_cache(
            self,
            x: np.ndarray,
            target: bool,
            noise: np.ndarray | None,
    ) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
        self.n_forward_calls += 1
        layers = self.layers(target=target)
        activations = [x]
        pre_activations = []
        a = x
        for k, (W, b) in enumerate(layers):
            z = a @ W + b
            pre_activations.append(z)
            if k < len(layers) - 1:
                a = self._hidden(z)
                activations.append(a)

        z_out = pre_activations[-1]
        if noise is not None:
            z_out = z_out + noise
            pre_activations[-1] = z_out

        return activations, pre_activations, self._heads(z_out)

    def forward(
            self,
            x: np.ndarray,
            *,
            target: bool = False,
            noise: np.ndarray | None = None,
    ) -> np.ndarray:
        """
        Evaluate the network.

        Parameters
        ----------
        x : np.ndarray
            One input (1D) or a batch of inputs (2D, one per row).
        target : bool
            Whether to use the target parameters.
        noise : np.ndarray | None
            Perturbation added to the pre-activations of the output heads
            (broadcast against the output), used for exploration.

        Returns
        -------
        np.ndarray
            Output(s), 1D or 2D like ``x``.

        Raises
        ------
        ValueError
            When the input width is wrong
        """
        batch, single = self._as_batch(x)
        _, _, out = self._forward_cache(batch, target, noise)
        return out[0] if single else out

    def gradient(
            self,
            x: np.ndarray,
            upstream: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray]:
        """
        Reverse-mode gradient of ``sum(upstream * forward(x))`` with respect
        to the online parameters (summed over the batch) and to the input.

        Parameters
        ----------
        x : np.ndarray
            One input (1D) or a batch of inputs (2D).
        upstream : np.ndarray
            Gradient with respect to the output, same shape as the output.

        Returns
        -------
        param_grad : np.ndarray
            Flat gradient, same length as ``params``.
        input_grad : np.ndarray
            Gradient with respect to ``x`` (same shape as ``x``).

        Raises
        ------
        ValueError
            When the shapes of ``x`` and ``upstream`` do not match the network
        """
        batch, single = self._as_batch(x)
        up = np.asarray(upstream, dtype=float)
        up = up[None, :] if up.ndim == 1 else up
        if up.shape != (batch.shape[0], self.spec.n_outputs):
            raise ValueError(
                '`upstream` must have shape %s, not %s.'
                % ((batch.shape[0], self.spec.n_outputs), up.shape),
            )

        activations, pre_activations, out = self._forward_cache(
            batch, False, None
        )
        layers = self.layers()
        grad = np.zeros_like(self.params)
        delta = self._heads_backward(out, up)
        for k in range(len(layers) - 1, -1, -1):
            W, _ = layers[k]
            w_slice, b_slice, _ = self._layout[k]
            grad[w_slice] = (activations[k].T @ delta).ravel()
            grad[b_slice] = delta.sum(axis=0)
            delta_in = delta @ W.T
            if k > 0:
                delta = delta_in * self._hidden_backward(
                    pre_activations[k - 1], activations[k]
                )

        input_grad = delta_in[0] if single else delta_in
        return grad, input_grad

    def adam_step(
            self,
            grad: np.ndarray,
            cfg: Adam_Config,
            sign: str = 'descend',
    ) -> MLP_Net:
        """
        One bias-corrected Adam update of the online parameters.

        Parameters
        ----------
        grad : np.ndarray
            Flat gradient.
        cfg : Adam_Config
            Optimizer hyperparameters.
        sign : {'descend', 'ascend'}
            Direction of the update.

        Returns
        -------
        MLP_Net
            The network itself.

        Raises
        ------
        ValueError
            When ``sign`` is invalid or ``grad`` has the wrong length
        Non_Finite_Gradient_Error
            When ``grad`` contains NaN or infinite entries
        """
        if sign not in {'descend', 'ascend'}:
            raise ValueError("`sign` must be 'descend' or 'ascend'.")

        grad = np.asarray(grad, dtype=float)
        hlp.assert_array_length(grad, self.n_params, name='`grad`')
        finite = np.isfinite(grad)
        if not np.all(finite):
            raise Non_Finite_Gradient_Error(int(np.sum(~finite)))

        self.adam_step_count += 1
        t = self.adam_step_count
        self.adam_m *= cfg.beta1
        self.adam_m += (1.0 - cfg.beta1) * grad
        self.adam_v *= cfg.beta2
        self.adam_v += (1.0 - cfg.beta2) * grad**2
        m_hat = self.adam_m / (1.0 - cfg.beta1**t)
        v_hat = self.adam_v / (1.0 - cfg.beta2**t)
        update = cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon_hat)
        if sign == 'descend':
            self.params -= update
        else:
            self.params += update

        return self

    def soft_update(self, epsilon: float) -> MLP_Net:
        """
        Move the target parameters toward the online ones:
        target <- (1 - epsilon) * target + epsilon * online.

        Parameters
        ----------
        epsilon : float
            Mixing factor, in [0, 1].

        Returns
        -------
        MLP_Net
            The network itself.

        Raises
        ------
        ValueError
            When ``epsilon`` is outside [0, 1]
        """
        if not 0 <= epsilon <= 1:
            raise ValueError('`epsilon` must be within [0, 1].')

        if epsilon == 1:
            self.target_params[:] = self.params
        elif epsilon > 0:
            self.target_params *= 1.0 - epsilon
            self.target_params += epsilon * self.params

        return self
