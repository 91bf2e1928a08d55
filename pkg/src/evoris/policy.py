"""Policy networks mapping channel state to RIS phases and a precoder pick.

Two families live here: an attention-convolutional policy that works on the
channel matrices directly, and a plain fully-connected benchmark that takes
every channel flattened into one vector.  Both are evaluated straight from a
flat float64 parameter vector; fixed slices of that vector are reshaped into
per-layer weights on every call, so population-based trainers can treat the
whole network as a single real genome.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

from .channel import ChannelSet, stack_real_imag
from .numerics import conv2d_same, layer_norm, relu, sign_pm1, softmax_global


@dataclass(frozen=True)
class ArchConfig:
    """Shape parameters of the attention-convolutional policy."""

    n_tx: int
    n_ris: int
    codebook_size: int
    conv_kernel: int = 3
    conv_channels: tuple[int, int] = (8, 8)
    phase_hidden: tuple[int, ...] = (16,)
    precoder_hidden: int = 64
    direct_branch: bool = False
    phase_states: int = 2
    conv_activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))
        object.__setattr__(self, "phase_hidden", tuple(int(c) for c in self.phase_hidden))
        if min(self.n_tx, self.n_ris, self.codebook_size) < 1:
            raise ValueError("n_tx, n_ris and codebook_size must be >= 1")
        if self.conv_kernel < 1 or self.conv_kernel % 2 == 0:
            raise ValueError("conv_kernel must be odd and positive")
        if len(self.conv_channels) != 2 or min(self.conv_channels) < 1:
            raise ValueError("conv_channels must hold two positive channel counts")
        if not self.phase_hidden or min(self.phase_hidden) < 1:
            raise ValueError("phase_hidden must hold positive layer widths")
        if self.precoder_hidden < 1:
            raise ValueError("precoder_hidden must be >= 1")
        if self.phase_states < 2:
            raise ValueError("phase_states must be >= 2")
        if self.conv_activation not in ("tanh", "identity"):
            raise ValueError("conv_activation must be 'tanh' or 'identity'")

    @property
    def d_cat(self) -> int:
        """Feature width after column-concatenating the two RIS-sized branches."""
        return 2 * self.n_tx + 2

    @property
    def genome_size(self) -> int:
        return genome_layout(self).size


@dataclass(frozen=True)
class FFConfig:
    """Shape parameters of the flat fully-connected benchmark policy."""

    n_tx: int
    n_ris: int
    codebook_size: int
    ris_count: int = 1
    hidden: tuple[int, ...] = (800, 600, 600, 500, 200)

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(c) for c in self.hidden))
        if min(self.n_tx, self.n_ris, self.codebook_size, self.ris_count) < 1:
            raise ValueError("all size fields must be >= 1")
        if not self.hidden or min(self.hidden) < 1:
            raise ValueError("hidden must hold positive layer widths")

    @property
    def input_size(self) -> int:
        per_ris = 2 * self.n_tx * self.n_ris + 2 * self.n_ris
        return 2 * self.n_tx + self.ris_count * per_ris

    @property
    def genome_size(self) -> int:
        return ff_layout(self).size


class GenomeLayout:
    """Mapping from named parameter tensors to slices of one flat vector."""

    def __init__(self, shapes):
        self.segments: dict[str, tuple[int, tuple[int, ...]]] = {}
        offset = 0
        for name, shape in shapes:
            shape = tuple(int(s) for s in shape)
            self.segments[name] = (offset, shape)
            offset += int(np.prod(shape, dtype=np.int64))
        self.size = offset

    def view(self, w: np.ndarray, name: str) -> np.ndarray:
        offset, shape = self.segments[name]
        n = int(np.prod(shape, dtype=np.int64))
        return w[offset:offset + n].reshape(shape)


def _phase_out_width(arch: ArchConfig) -> int:
    return 1 if arch.phase_states == 2 else arch.phase_states


@lru_cache(maxsize=None)
def genome_layout(arch: ArchConfig) -> GenomeLayout:
    """Canonical slice layout of the attention-convolutional genome."""
    d1 = 2 * arch.n_tx
    dc = arch.d_cat
    c1, c2 = arch.conv_channels
    k = arch.conv_kernel
    shapes = []
    shapes += [(f"attn_tx_ris.{n}", (d1, d1)) for n in ("wq", "wk", "wv")]
    shapes += [(f"attn_ris_rx.{n}", (2, 2)) for n in ("wq", "wk", "wv")]
    if arch.direct_branch:
        shapes += [(f"attn_direct.{n}", (2, 2)) for n in ("wq", "wk", "wv")]
        shapes += [("direct.w", (d1, dc * arch.n_ris)), ("direct.b", (dc * arch.n_ris,))]
    shapes += [("conv0.w", (c1, 1, k, k)), ("conv0.b", (c1,)),
               ("conv1.w", (c2, c1, k, k)), ("conv1.b", (c2,)),
               ("conv2.w", (1, c2, k, k)), ("conv2.b", (1,))]
    widths = (dc,) + arch.phase_hidden + (_phase_out_width(arch),)
    for i in range(len(widths) - 1):
        shapes += [(f"phase{i}.w", (widths[i], widths[i + 1])),
                   (f"phase{i}.b", (widths[i + 1],))]
    shapes += [("prec0.w", (arch.n_ris * dc, arch.precoder_hidden)),
               ("prec0.b", (arch.precoder_hidden,)),
               ("prec1.w", (arch.precoder_hidden, arch.codebook_size)),
               ("prec1.b", (arch.codebook_size,))]
    return GenomeLayout(shapes)


@lru_cache(maxsize=None)
def ff_layout(cfg: FFConfig) -> GenomeLayout:
    """Canonical slice layout of the fully-connected benchmark genome."""
    widths = (cfg.input_size,) + cfg.hidden
    shapes = []
    for i in range(len(widths) - 1):
        shapes += [(f"fc{i}.w", (widths[i], widths[i + 1])),
                   (f"fc{i}.b", (widths[i + 1],))]
    last = widths[-1]
    n_phase = cfg.ris_count * cfg.n_ris
    shapes += [("phase.w", (last, n_phase)), ("phase.b", (n_phase,)),
               ("prec.w", (last, cfg.codebook_size)), ("prec.b", (cfg.codebook_size,))]
    return GenomeLayout(shapes)


@dataclass
class PolicyOutput:
    """Discrete actions of one forward pass plus the precoder distribution."""

    phases: np.ndarray
    precoder_index: int
    precoder_probs: np.ndarray


def attention_branch(tokens: np.ndarray, wq: np.ndarray, wk: np.ndarray,
                     wv: np.ndarray, return_scores: bool = False):
    """Self-attention with the softmax normalized over the whole score matrix.

    Scores are (X Wq)(X Wk)^T / sqrt(d) passed through a softmax across all
    n^2 entries (not per row), then applied to the value projection X Wv.
    """
    x = np.asarray(tokens, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("tokens must be 2-D (n_tokens, d)")
    d = x.shape[1]
    for w in (wq, wk, wv):
        if w.shape != (d, d):
            raise ValueError(f"attention weights must be ({d}, {d})")
    q = x @ wq
    k = x @ wk
    scores = softmax_global(q @ k.T / np.sqrt(d))
    out = scores @ (x @ wv)
    if return_scores:
        return out, scores
    return out


def merge_branches(a_tx_ris: np.ndarray, a_ris_rx: np.ndarray,
                   a_direct: np.ndarray | None = None) -> np.ndarray:
    """Combine branch outputs into the (n_ris, d_cat) feature map.

    The two RIS-sized outputs are column-concatenated and row-normalized;
    when present, the row-normalized direct-branch map is added on top.
    """
    if a_tx_ris.shape[0] != a_ris_rx.shape[0]:
        raise ValueError("branch outputs must agree on the token count")
    a_c = np.concatenate([a_tx_ris, a_ris_rx], axis=1)
    merged = layer_norm(a_c)
    if a_direct is not None:
        if a_direct.shape != a_c.shape:
            raise ValueError("direct-branch features must match the merged shape")
        merged = merged + layer_norm(a_direct)
    return merged


def cnn_forward(features: np.ndarray, w: np.ndarray, arch: ArchConfig) -> np.ndarray:
    """Three same-padded conv layers 1 -> c1 -> c2 -> 1, activated in between."""
    act = np.tanh if arch.conv_activation == "tanh" else (lambda x: x)
    layout = genome_layout(arch)
    x = features[None, :, :]
    x = act(conv2d_same(x, layout.view(w, "conv0.w"), layout.view(w, "conv0.b")))
    x = act(conv2d_same(x, layout.view(w, "conv1.w"), layout.view(w, "conv1.b")))
    x = conv2d_same(x, layout.view(w, "conv2.w"), layout.view(w, "conv2.b"))
    return x[0]


def phase_head(features: np.ndarray, w: np.ndarray, arch: ArchConfig) -> np.ndarray:
    """Per-element phase decisions from the (n_ris, d_cat) feature map.

    Binary mode thresholds a tanh scalar per row into {-1, +1} with ties
    going to +1; multi-state mode picks the argmax of per-row level scores.
    """
    layout = genome_layout(arch)
    n_layers = len(arch.phase_hidden) + 1
    x = features
    for i in range(n_layers - 1):
        x = np.tanh(x @ layout.view(w, f"phase{i}.w") + layout.view(w, f"phase{i}.b"))
    last = n_layers - 1
    y = x @ layout.view(w, f"phase{last}.w") + layout.view(w, f"phase{last}.b")
    if arch.phase_states == 2:
        return sign_pm1(np.tanh(y[:, 0]))
    return np.argmax(y, axis=1)


def _select_index(probs: np.ndarray, rng, mode: str) -> int:
    if mode == "argmax":
        return int(np.argmax(probs))
    if mode == "sample":
        if rng is None:
            raise ValueError("sampling mode needs an rng")
        idx = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
        return min(idx, probs.size - 1)
    raise ValueError(f"unknown mode {mode!r}")


def precoder_head(features: np.ndarray, w: np.ndarray, arch: ArchConfig,
                  rng=None, mode: str = "sample"):
    """Codebook index from the flattened feature map via softmax logits."""
    layout = genome_layout(arch)
    x = features.reshape(-1)
    hid = relu(x @ layout.view(w, "prec0.w") + layout.view(w, "prec0.b"))
    logits = hid @ layout.view(w, "prec1.w") + layout.view(w, "prec1.b")
    probs = softmax_global(logits)
    return _select_index(probs, rng, mode), probs


def forward(w: np.ndarray, arch: ArchConfig, h: np.ndarray, h1: np.ndarray,
            h2: np.ndarray, rng=None, mode: str = "sample") -> PolicyOutput:
    """Full policy pass from complex channels to discrete actions.

    Channels come in complex (h (n_tx,), h1 (n_tx, n_ris), h2 (n_ris,));
    real/imag stacking happens internally.  ``mode`` controls the precoder
    pick: "sample" draws from the softmax, "argmax" is deterministic.
    """
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    layout = genome_layout(arch)
    if w.size != layout.size:
        raise ValueError(f"genome has {w.size} values, architecture needs {layout.size}")
    h = np.asarray(h, dtype=np.complex128)
    h1 = np.asarray(h1, dtype=np.complex128)
    h2 = np.asarray(h2, dtype=np.complex128)
    if h.shape != (arch.n_tx,) or h1.shape != (arch.n_tx, arch.n_ris) or \
            h2.shape != (arch.n_ris,):
        raise ValueError("channel shapes do not match the architecture")

    tokens_tx_ris = np.concatenate([h1.real, h1.imag], axis=0).T
    tokens_ris_rx = np.column_stack([h2.real, h2.imag])
    a1 = attention_branch(tokens_tx_ris,
                          layout.view(w, "attn_tx_ris.wq"),
                          layout.view(w, "attn_tx_ris.wk"),
                          layout.view(w, "attn_tx_ris.wv"))
    a2 = attention_branch(tokens_ris_rx,
                          layout.view(w, "attn_ris_rx.wq"),
                          layout.view(w, "attn_ris_rx.wk"),
                          layout.view(w, "attn_ris_rx.wv"))
    a0 = None
    if arch.direct_branch:
        tokens_direct = np.column_stack([h.real, h.imag])
        a3 = attention_branch(tokens_direct,
                              layout.view(w, "attn_direct.wq"),
                              layout.view(w, "attn_direct.wk"),
                              layout.view(w, "attn_direct.wv"))
        flat = a3.reshape(-1)
        a0 = (flat @ layout.view(w, "direct.w") +
              layout.view(w, "direct.b")).reshape(arch.n_ris, arch.d_cat)
    merged = merge_branches(a1, a2, a0)
    feat = cnn_forward(merged, w, arch)
    phases = phase_head(feat, w, arch)
    idx, probs = precoder_head(feat, w, arch, rng, mode)
    return PolicyOutput(phases=phases, precoder_index=idx, precoder_probs=probs)


def ff_forward(w: np.ndarray, cfg: FFConfig, cs: ChannelSet,
               rng=None, mode: str = "sample") -> PolicyOutput:
    """Benchmark pass: every channel flattened into one input vector.

    Phases come out as (n_ris,) for a single RIS and (ris_count, n_ris)
    otherwise; the precoder pick follows the same sample/argmax contract
    as the attention policy.
    """
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    layout = ff_layout(cfg)
    if w.size != layout.size:
        raise ValueError(f"genome has {w.size} values, architecture needs {layout.size}")
    if cs.ris_count != cfg.ris_count:
        raise ValueError(f"channel set has {cs.ris_count} RIS, config says {cfg.ris_count}")
    h_t, h1_t, h2_t = stack_real_imag(cs)
    parts = [h_t]
    for m, v in zip(h1_t, h2_t):
        parts.append(m.reshape(-1))
        parts.append(v)
    x = np.concatenate(parts)
    if x.size != cfg.input_size:
        raise ValueError("stacked channel size does not match the architecture")
    for i in range(len(cfg.hidden)):
        x = relu(x @ layout.view(w, f"fc{i}.w") + layout.view(w, f"fc{i}.b"))
    raw = np.tanh(x @ layout.view(w, "phase.w") + layout.view(w, "phase.b"))
    phases = sign_pm1(raw)
    if cfg.ris_count > 1:
        phases = phases.reshape(cfg.ris_count, cfg.n_ris)
    logits = x @ layout.view(w, "prec.w") + layout.view(w, "prec.b")
    probs = softmax_global(logits)
    return PolicyOutput(phases=phases, precoder_index=_select_index(probs, rng, mode),
                        precoder_probs=probs)


# -- genome files ------------------------------------------------------------

_GENOME_MAGIC = b"EVGENOM1"
_GENOME_VERSION = 1


def config_signature(*cfgs) -> bytes:
    """8-byte digest identifying an ordered tuple of network configs."""
    payload = repr([(type(c).__name__, sorted(asdict(c).items())) for c in cfgs])
    return hashlib.sha256(payload.encode("utf-8")).digest()[:8]


def save_genome(path, w: np.ndarray, *cfgs) -> None:
    """Write a flat genome with a header binding it to its config(s)."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    expected = sum(c.genome_size for c in cfgs)
    if w.size != expected:
        raise ValueError(f"genome has {w.size} values, configs need {expected}")
    with open(path, "wb") as fh:
        fh.write(_GENOME_MAGIC)
        fh.write(struct.pack("<I", _GENOME_VERSION))
        fh.write(config_signature(*cfgs))
        fh.write(struct.pack("<Q", w.size))
        fh.write(w.astype("<f8").tobytes())


def load_genome(path, *cfgs) -> np.ndarray:
    """Read a genome written by save_genome, checking header and length."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 28 or blob[:8] != _GENOME_MAGIC:
        raise ValueError(f"{path}: not a genome file")
    version = struct.unpack_from("<I", blob, 8)[0]
    if version != _GENOME_VERSION:
        raise ValueError(f"{path}: unsupported genome version {version}")
    if blob[12:20] != config_signature(*cfgs):
        raise ValueError(f"{path}: genome was saved for a different configuration")
    m = struct.unpack_from("<Q", blob, 20)[0]
    data = blob[28:]
    if len(data) != 8 * m:
        raise ValueError(f"{path}: genome payload is truncated")
    expected = sum(c.genome_size for c in cfgs)
    if m != expected:
        raise ValueError(f"{path}: genome length {m} does not match configured size {expected}")
    return np.frombuffer(data, dtype="<f8").astype(np.float64)
