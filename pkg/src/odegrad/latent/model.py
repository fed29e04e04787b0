"""Latent ODE: GRU recognition network, latent dynamics and decoder in one parameter vector."""

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from odegrad.core.exceptions import ArgumentError, DimensionError
from odegrad.core.io import atomic_write_bytes
from odegrad.core.rng import RngState
from odegrad.core.tensor import Tensor, as_tensor
from odegrad.dynamics.architectures import MlpDynamics
from odegrad.dynamics.layers import Mlp, MlpCache
from odegrad.dynamics.serialization import decode_dynamics, encode_dynamics
from odegrad.latent.networks import GruCache, GruCell
from odegrad.latent.spirals import IrregularDataset
from odegrad.solvers.config import SolveConfig, Trajectory
from odegrad.solvers.integrate import DEFAULT_CONFIG, solve_at_times

logger = logging.getLogger(__name__)

SEGMENTS = ("encoder", "head", "dynamics", "decoder", "log_noise")
DEFAULT_LOG_NOISE = float(np.log(0.1))


@dataclass(frozen=True)
class LatentOdeModel:
    """Parameters and sizes of a latent ODE.

    theta is laid out as [encoder GRU, encoder head, dynamics, decoder, log noise std].
    z0 belongs to time t0; the latent dynamics never see t.
    """

    theta: Tensor
    t0: float = 0.0
    obs_dim: int = 2
    latent_dim: int = 4
    rnn_hidden: int = 25
    dyn_hidden: int = 20
    dec_hidden: int = 20

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=np.float64).ravel()
        if theta.shape != (self.param_count,):
            raise DimensionError("latent ODE parameters", (self.param_count,), theta.shape)
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    @property
    def encoder(self) -> GruCell:
        return GruCell(self.obs_dim + 1, self.rnn_hidden)

    @property
    def head(self) -> Mlp:
        return Mlp((self.rnn_hidden, 2 * self.latent_dim))

    @property
    def decoder(self) -> Mlp:
        return Mlp((self.latent_dim, self.dec_hidden, self.obs_dim))

    @property
    def _dynamics_net(self) -> Mlp:
        return Mlp((self.latent_dim, self.dyn_hidden, self.latent_dim))

    def segment_sizes(self) -> dict[str, int]:
        return {
            "encoder": self.encoder.param_count,
            "head": self.head.param_count,
            "dynamics": self._dynamics_net.param_count,
            "decoder": self.decoder.param_count,
            "log_noise": 1,
        }

    @property
    def param_count(self) -> int:
        return sum(self.segment_sizes().values())

    def slices(self) -> dict[str, slice]:
        out, offset = {}, 0
        for name, size in self.segment_sizes().items():
            out[name] = slice(offset, offset + size)
            offset += size
        return out

    def part(self, name: str) -> Tensor:
        return self.theta[self.slices()[name]]

    @property
    def dynamics(self) -> MlpDynamics:
        return MlpDynamics(
            self.latent_dim, self.part("dynamics"), hidden=(self.dyn_hidden,), with_time=False
        )

    @property
    def noise_std(self) -> float:
        return float(np.exp(self.theta[-1]))

    def with_theta(self, theta: Tensor) -> "LatentOdeModel":
        return replace(self, theta=theta)

    def pack(self, parts: dict[str, Tensor]) -> Tensor:
        """Assemble a flat vector (e.g. a gradient) from per-segment pieces."""
        return np.concatenate([np.ravel(parts[name]) for name in SEGMENTS])

    @classmethod
    def init(
        cls,
        rng: RngState,
        obs_dim: int = 2,
        latent_dim: int = 4,
        rnn_hidden: int = 25,
        dyn_hidden: int = 20,
        dec_hidden: int = 20,
        t0: float = 0.0,
        log_noise: float = DEFAULT_LOG_NOISE,
    ) -> "LatentOdeModel":
        parts = [
            GruCell(obs_dim + 1, rnn_hidden).init_theta(rng),
            Mlp((rnn_hidden, 2 * latent_dim)).init_theta(rng),
            Mlp((latent_dim, dyn_hidden, latent_dim)).init_theta(rng),
            Mlp((latent_dim, dec_hidden, obs_dim)).init_theta(rng),
            [log_noise],
        ]
        return cls(
            np.concatenate(parts), t0, obs_dim, latent_dim, rnn_hidden, dyn_hidden, dec_hidden
        )

    def predict(
        self,
        data: IrregularDataset,
        query_times: Tensor,
        cfg: SolveConfig = DEFAULT_CONFIG,
    ) -> Tensor:
        """Decoded means at query_times (n, H, obs_dim) from the posterior mean of z0."""
        mu, _ = encode(self, data.observations, data.times)
        query_times = as_tensor(query_times)
        if query_times[0] <= self.t0:
            raise ArgumentError(f"predict: query times must start after t0={self.t0}")
        decoded = decode_trajectory(self, mu, np.concatenate([[self.t0], query_times]), cfg)
        return np.swapaxes(decoded[1:], 0, 1)


@dataclass(frozen=True)
class EncoderCache:
    order: Tensor
    caches: list[GruCache]
    head_cache: MlpCache


def _encoder_inputs(observations: Tensor, times: Tensor, backward: bool) -> tuple[Tensor, Tensor]:
    """Inputs (k, n, obs_dim + 1) in processing order plus that order."""
    k = times.shape[1]
    order = np.arange(k)[::-1] if backward else np.arange(k)
    ordered_times = times[:, order]
    gaps = np.zeros_like(ordered_times)
    gaps[:, 1:] = np.abs(np.diff(ordered_times, axis=1))
    features = np.concatenate([observations[:, order], gaps[..., None]], axis=-1)
    return np.swapaxes(features, 0, 1), order


def _as_sequences(
    model: LatentOdeModel, observations: Tensor, times: Tensor
) -> tuple[Tensor, Tensor, bool]:
    observations, times = as_tensor(observations), as_tensor(times)
    single = observations.ndim == 2
    if single:
        observations, times = observations[None], times[None]
    if observations.ndim != 3 or observations.shape[2] != model.obs_dim:
        raise DimensionError("encode", f"(n, k, {model.obs_dim})", observations.shape)
    if times.shape != observations.shape[:2]:
        raise DimensionError("encode times", observations.shape[:2], times.shape)
    if times.shape[1] == 0:
        raise ArgumentError("encode: empty observation sequence")
    return observations, times, single


def encode_with_cache(
    model: LatentOdeModel, observations: Tensor, times: Tensor, backward: bool = True
) -> tuple[Tensor, Tensor, EncoderCache]:
    """Batched encoder pass keeping what ``encode_backward`` needs.

    Returns:
        Tuple of (mu[n, L], log sigma[n, L], cache)
    """
    observations, times, _ = _as_sequences(model, observations, times)
    if backward and np.any(np.diff(times, axis=1) < 0):
        raise ArgumentError("encode: times must be ascending")
    xs, order = _encoder_inputs(observations, times, backward)
    h0 = np.zeros((observations.shape[0], model.rnn_hidden))
    states, caches = model.encoder.run(model.part("encoder"), xs, h0)
    out, head_cache = model.head.forward(model.part("head"), states[-1])
    mu, log_sigma = out[:, : model.latent_dim], out[:, model.latent_dim :]
    return mu, log_sigma, EncoderCache(order, caches, head_cache)


def encode_backward(
    model: LatentOdeModel, cache: EncoderCache, grad_mu: Tensor, grad_log_sigma: Tensor
) -> tuple[Tensor, Tensor]:
    """Gradients of the encoder and head parameters for cotangents on (mu, log sigma)."""
    grad_out = np.concatenate([grad_mu, grad_log_sigma], axis=1)
    grad_h, grad_head = model.head.backward(model.part("head"), cache.head_cache, grad_out)
    grad_states = np.zeros((len(cache.caches), *grad_h.shape))
    grad_states[-1] = grad_h
    encoder = model.encoder
    _, _, grad_encoder = encoder.run_backward(model.part("encoder"), cache.caches, grad_states)
    return grad_encoder, grad_head


def encode(
    model: LatentOdeModel, observations: Tensor, times: Tensor, backward: bool = True
) -> tuple[Tensor, Tensor]:
    """Posterior mean and standard deviation of z0.

    The GRU consumes [x_i, gap_i] pairs, where gap_i is the time elapsed since the
    previously consumed observation (0 for the first). With backward=True the sequence
    is consumed from the last observation to the first; passing an already reversed
    sequence with backward=False gives the same result.

    Args:
        model: Latent ODE
        observations: (k, obs_dim) or a batch (n, k, obs_dim)
        times: (k,) or (n, k)
        backward: Consume the sequence in reverse time order

    Returns:
        Tuple of (mu, sigma), each (L,) or (n, L)

    Raises:
        ArgumentError: If the sequence is empty or times are not ascending
    """
    _, _, single = _as_sequences(model, observations, times)
    mu, log_sigma, _ = encode_with_cache(model, observations, times, backward)
    sigma = np.exp(log_sigma)
    return (mu[0], sigma[0]) if single else (mu, sigma)


def decode_states(model: LatentOdeModel, z: Tensor) -> tuple[Tensor, MlpCache]:
    """Decoder means for latent states of any leading shape (..., L)."""
    flat = np.reshape(z, (-1, model.latent_dim))
    out, cache = model.decoder.forward(model.part("decoder"), flat)
    return out.reshape(*np.shape(z)[:-1], model.obs_dim), cache


def latent_trajectory(
    model: LatentOdeModel, z0: Tensor, times: Tensor, cfg: SolveConfig = DEFAULT_CONFIG
) -> Trajectory:
    """Latent states at times; times[0] is the time z0 belongs to."""
    times = as_tensor(times)
    if len(times) == 1:
        return Trajectory(times.copy(), as_tensor(z0)[None], 0)
    return solve_at_times(model.dynamics, z0, times, cfg)


def decode_trajectory(
    model: LatentOdeModel, z0: Tensor, times: Tensor, cfg: SolveConfig = DEFAULT_CONFIG
) -> Tensor:
    """Observation means at every time, shape (len(times), [n,] obs_dim).

    Times may extend past the observed range; a single time decodes z0 directly.
    """
    return decode_states(model, latent_trajectory(model, z0, times, cfg).states)[0]


def checkpoint_bytes(model: LatentOdeModel) -> bytes:
    """Dynamics in the binary dynamics format, followed by sizes and the other parts."""
    header = [
        model.t0,
        model.obs_dim,
        model.latent_dim,
        model.rnn_hidden,
        model.dyn_hidden,
        model.dec_hidden,
    ]
    blocks = [np.asarray(header, dtype=np.float64)]
    blocks += [model.part(name) for name in ("encoder", "head", "decoder", "log_noise")]
    return encode_dynamics(model.dynamics, blocks)


def save_checkpoint(model: LatentOdeModel, path: Path) -> Path:
    return atomic_write_bytes(path, checkpoint_bytes(model))


def load_checkpoint(path: Path) -> LatentOdeModel:
    """Read a checkpoint written by ``save_checkpoint``.

    Raises:
        ArgumentError: If the file does not hold the five latent ODE blocks
    """
    dynamics, blocks = decode_dynamics(Path(path).read_bytes())
    if len(blocks) != 5:
        raise ArgumentError(f"{path}: expected 5 latent ODE blocks, found {len(blocks)}")
    t0, *sizes = blocks[0]
    parts = {
        "encoder": blocks[1],
        "head": blocks[2],
        "dynamics": dynamics.theta,
        "decoder": blocks[3],
        "log_noise": blocks[4],
    }
    theta = np.concatenate([parts[name] for name in SEGMENTS])
    return LatentOdeModel(theta, float(t0), *(int(v) for v in sizes))
