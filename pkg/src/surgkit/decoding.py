"""Decoding-side kernels at desk scale.

Two pieces: a token-mixing engine that learns m extra global tokens as convex
combinations of a pathway's L input tokens and fuses two pathways by channel
concatenation, and a visual-contrast decoding loop that sharpens the output
distribution against a noise-distorted conditioning branch while restricting
choices to tokens the original branch already finds plausible.

Vision encoders are out of scope; `synthetic_pathway` stands in for them with
seeded random tensors (sub-image tiling modeled as a token-count multiplier).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np


class DecodingError(ValueError):
    """Raised for shape or parameter violations."""


class ProviderError(RuntimeError):
    """Raised when a logit provider cannot serve a step."""


@dataclass
class TokenTensor:
    """An (L, D) float array tagged with its pathway name (o, d, or fused)."""

    data: np.ndarray
    pathway: str = "o"

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise DecodingError(f"token tensor must be (L, D) with L, D >= 1, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise DecodingError("token tensor must be finite")

    @property
    def tokens(self) -> int:
        return int(self.data.shape[0])

    @property
    def channels(self) -> int:
        return int(self.data.shape[1])


def synthetic_pathway(
    seed: int, tokens: int = 32, channels: int = 16, tiles: int = 1, pathway: str = "o"
) -> TokenTensor:
    """Seeded stand-in for an encoder pathway: (tokens * tiles, channels)."""
    if tokens < 1 or channels < 1 or tiles < 1:
        raise DecodingError("tokens, channels, and tiles must all be >= 1")
    rng = np.random.default_rng(seed)
    return TokenTensor(rng.normal(0.0, 1.0, size=(tokens * tiles, channels)), pathway=pathway)


@dataclass
class MVTEParams:
    """Weights for the token mixer and the post-fusion projection.

    The mixer is a per-token Linear-ReLU-Linear map D -> H -> m whose output
    columns, softmaxed over the token axis, weight the m generated tokens.
    The projection maps the channel concatenation D_o + D_d to D_out.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    proj_w: np.ndarray
    proj_b: np.ndarray

    def __post_init__(self) -> None:
        for name in ("w1", "b1", "w2", "b2", "proj_w", "proj_b"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if self.w1.ndim != 2 or self.b1.shape != (self.w1.shape[1],):
            raise DecodingError("w1 must be (D, H) with b1 of shape (H,)")
        if self.w2.ndim != 2 or self.w2.shape[0] != self.w1.shape[1]:
            raise DecodingError("w2 must be (H, m)")
        if self.b2.shape != (self.w2.shape[1],):
            raise DecodingError("b2 must be shaped (m,)")
        if self.w2.shape[1] < 1:
            raise DecodingError("need at least one generated token")
        if self.proj_w.ndim != 2 or self.proj_b.shape != (self.proj_w.shape[1],):
            raise DecodingError("proj_w must be (D_o + D_d, D_out) with matching proj_b")

    @property
    def mixture_tokens(self) -> int:
        return int(self.w2.shape[1])

    @staticmethod
    def initialize(
        channels: int,
        mixture_tokens: int,
        seed: int,
        hidden: int = 32,
        fused_channels: Optional[int] = None,
        out_channels: Optional[int] = None,
    ) -> "MVTEParams":
        """Random params for a pathway with `channels` channels.

        The projection defaults to mapping two same-width pathways back down
        to `channels` outputs.
        """
        fused = 2 * channels if fused_channels is None else fused_channels
        out = channels if out_channels is None else out_channels
        rng = np.random.default_rng(seed)
        return MVTEParams(
            w1=rng.normal(0.0, 1.0 / math.sqrt(channels), size=(channels, hidden)),
            b1=np.zeros(hidden),
            w2=rng.normal(0.0, 1.0 / math.sqrt(hidden), size=(hidden, mixture_tokens)),
            b2=np.zeros(mixture_tokens),
            proj_w=rng.normal(0.0, 1.0 / math.sqrt(fused), size=(fused, out)),
            proj_b=np.zeros(out),
        )


def softmax(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax."""
    v = np.asarray(values, dtype=np.float64)
    shifted = v - np.max(v, axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=axis, keepdims=True)


def mixture_weights(x: TokenTensor, params: MVTEParams) -> np.ndarray:
    """(L, m) assignment matrix; each of the m columns sums to 1."""
    if x.channels != params.w1.shape[0]:
        raise DecodingError(
            f"pathway has {x.channels} channels but params expect {params.w1.shape[0]}"
        )
    hidden = np.maximum(x.data @ params.w1 + params.b1, 0.0)
    scores = hidden @ params.w2 + params.b2
    return softmax(scores, axis=0)


def mvte_generate(x: TokenTensor, params: MVTEParams) -> TokenTensor:
    """Extend a pathway with m generated tokens: output is (L + m, D).

    Each generated token is a convex combination of the inputs, weighted by
    one softmax column, and the originals pass through unchanged.
    """
    weights = mixture_weights(x, params)
    generated = weights.T @ x.data
    return TokenTensor(np.concatenate([x.data, generated], axis=0), pathway=x.pathway)


def mvte_fuse(x_original: TokenTensor, x_depth: TokenTensor, params: MVTEParams) -> TokenTensor:
    """Channel-concatenate two equally long token sequences and project."""
    if x_original.tokens != x_depth.tokens:
        raise DecodingError(
            f"pathways disagree on token count: {x_original.tokens} vs {x_depth.tokens}"
        )
    stacked = np.concatenate([x_original.data, x_depth.data], axis=1)
    if stacked.shape[1] != params.proj_w.shape[0]:
        raise DecodingError(
            f"projection expects {params.proj_w.shape[0]} channels, got {stacked.shape[1]}"
        )
    return TokenTensor(stacked @ params.proj_w + params.proj_b, pathway="fused")


@dataclass(frozen=True)
class VCDConfig:
    """Contrast weight, truncation fraction, noise scale, and noise seed."""

    alpha: float = 1.0
    beta: float = 0.1
    sigma: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise DecodingError("alpha must be >= 0")
        if not 0.0 <= self.beta <= 1.0:
            raise DecodingError("beta must be in [0, 1]")
        if self.sigma < 0:
            raise DecodingError("sigma must be >= 0")


def distort(x: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """Additive seeded Gaussian noise: x + sigma * eps."""
    if sigma < 0:
        raise DecodingError("sigma must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(seed)
    return x + sigma * rng.standard_normal(x.shape)


def contrastive_distribution(
    logits_original: np.ndarray, logits_distorted: np.ndarray, alpha: float
) -> np.ndarray:
    """softmax((1 + alpha) * l_orig - alpha * l_dist)."""
    if alpha < 0:
        raise DecodingError("alpha must be >= 0")
    lo = np.asarray(logits_original, dtype=np.float64)
    ld = np.asarray(logits_distorted, dtype=np.float64)
    if lo.ndim != 1 or lo.shape != ld.shape:
        raise DecodingError("logit vectors must be 1-D with matching shapes")
    return softmax((1.0 + alpha) * lo - alpha * ld)


def plausible_set(probs_original: np.ndarray, beta: float) -> np.ndarray:
    """Boolean mask of tokens with probability >= beta * max probability."""
    if not 0.0 <= beta <= 1.0:
        raise DecodingError("beta must be in [0, 1]")
    p = np.asarray(probs_original, dtype=np.float64)
    return p >= beta * np.max(p)


def vcd_step(
    logits_original: np.ndarray,
    logits_distorted: np.ndarray,
    probs_original: np.ndarray,
    config: VCDConfig,
) -> np.ndarray:
    """One decoding step's output distribution.

    Contrast the two branches, zero out everything outside the original
    distribution's plausible set, and renormalize within it. The set always
    holds at least the argmax, so the masked softmax is well defined.
    """
    mask = plausible_set(probs_original, config.beta)
    lo = np.asarray(logits_original, dtype=np.float64)
    ld = np.asarray(logits_distorted, dtype=np.float64)
    restricted = np.where(mask, (1.0 + config.alpha) * lo - config.alpha * ld, -np.inf)
    return softmax(restricted)


class LogitProvider(Protocol):
    """Serves next-token logits for a context under some conditioning input.

    Implementations must be safe to call concurrently with independent
    contexts and return a constant-length finite vector.
    """

    def logits(self, context: Sequence[int], conditioning: object) -> np.ndarray: ...

    @property
    def vocab_size(self) -> int: ...


@dataclass
class DecodeResult:
    """Chosen tokens, per-step distributions, and the error that cut the run
    short, if any."""

    tokens: List[int]
    distributions: List[np.ndarray]
    error: Optional[str] = None


def greedy_decode(
    provider: LogitProvider,
    x: object,
    x_distorted: object,
    config: VCDConfig,
    max_len: int,
    eos_token: Optional[int] = None,
    use_contrast: bool = True,
) -> DecodeResult:
    """Greedy loop over vcd_step; ties break toward the lowest token index.

    With ``use_contrast`` off the distorted branch is never queried and each
    step is plain greedy on the original logits. Provider failures end the
    run early, returning the partial sequence with the error message.
    """
    if max_len < 1:
        raise DecodingError("max_len must be >= 1")
    tokens: List[int] = []
    distributions: List[np.ndarray] = []
    for _ in range(max_len):
        try:
            logits_orig = np.asarray(provider.logits(tokens, x), dtype=np.float64)
            logits_dist = (
                np.asarray(provider.logits(tokens, x_distorted), dtype=np.float64)
                if use_contrast
                else logits_orig
            )
        except ProviderError as exc:
            return DecodeResult(tokens=tokens, distributions=distributions, error=str(exc))
        if logits_orig.shape != (provider.vocab_size,) or not np.all(np.isfinite(logits_orig)):
            return DecodeResult(
                tokens=tokens,
                distributions=distributions,
                error=f"provider returned bad logits of shape {logits_orig.shape}",
            )
        probs_orig = softmax(logits_orig)
        dist = vcd_step(logits_orig, logits_dist, probs_orig, config) if use_contrast else probs_orig
        choice = int(np.argmax(dist))
        tokens.append(choice)
        distributions.append(dist)
        if eos_token is not None and choice == eos_token:
            break
    return DecodeResult(tokens=tokens, distributions=distributions)


def counterexample_script() -> str:
    """The packaged script on which contrastive and plain greedy disagree."""
    from importlib import resources

    return (resources.files("surgkit") / "fixtures" / "vcd_counterexample.txt").read_text(
        encoding="utf-8"
    )


class ScriptedProvider:
    """Replays logits from a script: one line per step, whitespace-separated
    original-branch logits followed by distorted-branch logits.

    Conditioning selects the branch: the string "original" maps to the first
    half of the line, anything else to the second. Running past the script
    is a provider failure.
    """

    ORIGINAL = "original"
    DISTORTED = "distorted"

    def __init__(self, steps: Sequence[Tuple[np.ndarray, np.ndarray]]):
        if not steps:
            raise DecodingError("scripted provider needs at least one step")
        width = steps[0][0].shape[0]
        for orig, dist in steps:
            if orig.shape != (width,) or dist.shape != (width,):
                raise DecodingError("scripted steps must share one vocab size")
        self.steps = list(steps)
        self._vocab = int(width)

    @staticmethod
    def from_text(text: str) -> "ScriptedProvider":
        steps = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values = [float(v) for v in line.split()]
            except ValueError as exc:
                raise DecodingError(f"script line {lineno}: {exc}") from exc
            if len(values) < 2 or len(values) % 2 != 0:
                raise DecodingError(
                    f"script line {lineno}: expected an even count of logits "
                    f"(original then distorted), got {len(values)}"
                )
            half = len(values) // 2
            steps.append((np.array(values[:half]), np.array(values[half:])))
        return ScriptedProvider(steps)

    @property
    def vocab_size(self) -> int:
        return self._vocab

    def logits(self, context: Sequence[int], conditioning: object) -> np.ndarray:
        step = len(context)
        if step >= len(self.steps):
            raise ProviderError(f"script exhausted after {len(self.steps)} steps")
        orig, dist = self.steps[step]
        return orig if conditioning == self.ORIGINAL else dist


class BigramProvider:
    """Next-token logits from a bigram table plus a conditioning bias vector.

    The table is (V, V): row = previous token, columns = next-token logits;
    a separate start row serves the empty context. Conditioning is a length-V
    bias added to the row, so a noise-distorted bias perturbs that branch.
    """

    def __init__(self, start: np.ndarray, table: np.ndarray):
        self.start = np.asarray(start, dtype=np.float64)
        self.table = np.asarray(table, dtype=np.float64)
        if self.table.ndim != 2 or self.table.shape[0] != self.table.shape[1]:
            raise DecodingError("bigram table must be square")
        if self.start.shape != (self.table.shape[0],):
            raise DecodingError("start row must match the table's vocab size")
        if not (np.all(np.isfinite(self.start)) and np.all(np.isfinite(self.table))):
            raise DecodingError("bigram logits must be finite")

    @staticmethod
    def from_json(obj: dict) -> "BigramProvider":
        try:
            return BigramProvider(np.array(obj["start"]), np.array(obj["table"]))
        except KeyError as exc:
            raise DecodingError(f"bigram file missing key {exc}") from exc

    @property
    def vocab_size(self) -> int:
        return int(self.table.shape[0])

    def logits(self, context: Sequence[int], conditioning: object) -> np.ndarray:
        bias = np.asarray(conditioning, dtype=np.float64)
        if bias.shape != (self.vocab_size,):
            raise ProviderError(f"conditioning bias must be length {self.vocab_size}")
        row = self.start if not context else self.table[int(context[-1]) % self.vocab_size]
        return row + bias
