"""Kolmogorov-Arnold network with spline edge activations, in plain numpy.

Every edge ``p -> q`` of a layer carries

    phi(x) = w_base * silu(x) + w_spline * sum_k c_k B_k(x)

and node ``q`` sums its incoming edges.  Inputs to the first layer are mapped
affinely onto ``[-1, 1]`` from the training-set range.  Grids are fixed once
the model is initialised; points outside a grid are clamped to its boundary
for the spline term (the base term sees the raw value).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .bspline import extended_grid, local_basis

HIDDEN_GRID_MARGIN = 0.1


@dataclass(frozen=True)
class KanConfig:
    widths: tuple[int, ...] = (2, 3, 1)
    order: int = 3
    grid_size: int = 10
    lr: float = 0.01
    epochs: int = 50
    seed: int = 0
    base: bool = True
    # "grid_size" counts spline intervals; set True to read it as basis functions
    grid_counts_basis: bool = False
    history: int = 10
    # inner L-BFGS iterations per optimiser step; one step per epoch
    iterations_per_epoch: int = 20
    max_line_search: int = 20
    init_scale: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2 or self.widths[0] != 2 or self.widths[-1] != 1:
            raise ValueError(f"widths must start at 2 and end at 1, got {self.widths}")
        if min(self.widths) < 1:
            raise ValueError("every layer needs at least one node")
        if self.order < 1:
            raise ValueError("spline order must be >= 1")
        if self.intervals < 1 or self.grid_size < self.order:
            raise ValueError(f"grid size {self.grid_size} too small for order {self.order}")
        if self.epochs < 0 or self.lr <= 0:
            raise ValueError("need epochs >= 0 and lr > 0")

    @property
    def intervals(self) -> int:
        return self.grid_size - self.order if self.grid_counts_basis else self.grid_size

    @property
    def n_basis(self) -> int:
        return self.intervals + self.order


def silu(x):
    return x / (1.0 + np.exp(-x))


def silu_derivative(x):
    s = 1.0 / (1.0 + np.exp(-x))
    return s * (1.0 + x * (1.0 - s))


@dataclass
class KanLayer:
    coef: np.ndarray  # (n_out, n_in, n_basis)
    w_base: np.ndarray  # (n_out, n_in)
    w_spline: np.ndarray  # (n_out, n_in)
    lo: np.ndarray  # (n_in,) grid range per input node
    hi: np.ndarray

    @property
    def shape(self):
        return self.w_base.shape


@dataclass
class KanModel:
    config: KanConfig
    input_lo: np.ndarray
    input_hi: np.ndarray
    layers: list = field(default_factory=list)

    # ---------------------------------------------------------------- setup

    @classmethod
    def initialise(cls, config: KanConfig, X) -> "KanModel":
        """Seeded initialisation with grids covering the rows of ``X``."""
        X = np.asarray(X, dtype=float)
        rng = np.random.default_rng(config.seed)
        lo, hi = X.min(axis=0), X.max(axis=0)
        hi = np.where(hi > lo, hi, lo + 1.0)
        model = cls(config, lo, hi)

        a = model.normalise(X)
        for l, (n_in, n_out) in enumerate(zip(config.widths[:-1], config.widths[1:])):
            if l == 0:
                g_lo, g_hi = -np.ones(n_in), np.ones(n_in)
            else:
                g_lo, g_hi = a.min(axis=0), a.max(axis=0)
                pad = HIDDEN_GRID_MARGIN * np.maximum(g_hi - g_lo, 1e-3)
                g_lo, g_hi = g_lo - pad, g_hi + pad
            layer = KanLayer(
                coef=rng.normal(0.0, config.init_scale, size=(n_out, n_in, config.n_basis)),
                w_base=np.ones((n_out, n_in)) if config.base else np.zeros((n_out, n_in)),
                w_spline=np.ones((n_out, n_in)),
                lo=g_lo,
                hi=g_hi,
            )
            model.layers.append(layer)
            a, _ = model._layer_forward(layer, a)
        return model

    def normalise(self, X):
        return 2.0 * (np.asarray(X, dtype=float) - self.input_lo) / (self.input_hi - self.input_lo) - 1.0

    def grids(self, layer: KanLayer) -> np.ndarray:
        c = self.config
        return np.stack([extended_grid(l, h, c.intervals, c.order) for l, h in zip(layer.lo, layer.hi)])

    # ------------------------------------------------------- parameter vector

    def parameters(self) -> np.ndarray:
        parts = []
        for layer in self.layers:
            parts += [layer.coef.ravel(), layer.w_spline.ravel()]
            if self.config.base:
                parts.append(layer.w_base.ravel())
        return np.concatenate(parts)

    def with_parameters(self, theta) -> "KanModel":
        theta = np.asarray(theta, dtype=float)
        out = KanModel(self.config, self.input_lo.copy(), self.input_hi.copy())
        pos = 0

        def take(shape):
            nonlocal pos
            size = int(np.prod(shape))
            chunk = theta[pos : pos + size].reshape(shape)
            pos += size
            return chunk.copy()

        for layer in self.layers:
            coef = take(layer.coef.shape)
            w_spline = take(layer.w_spline.shape)
            w_base = take(layer.w_base.shape) if self.config.base else layer.w_base.copy()
            out.layers.append(KanLayer(coef, w_base, w_spline, layer.lo.copy(), layer.hi.copy()))
        if pos != theta.size:
            raise ValueError(f"parameter vector has {theta.size} entries, model needs {pos}")
        return out

    # --------------------------------------------------------------- forward

    def _layer_basis(self, layer: KanLayer, a):
        inside = (a >= layer.lo) & (a <= layer.hi)
        ac = np.clip(a, layer.lo, layer.hi)
        c = self.config
        start, N, dN = local_basis(ac, layer.lo, layer.hi, c.intervals, c.order)
        idx = start[..., None] + np.arange(c.order + 1)
        # flat position of each active coefficient in coef.ravel(), for the scatter in backprop
        n_out, n_in, n_basis = layer.coef.shape
        offset = (np.arange(n_out)[:, None] * n_in + np.arange(n_in)) * n_basis
        flat = (offset[:, None, :, None] + idx[None]).ravel()
        return a, inside, idx, N, dN, silu(a), flat

    def input_basis(self, X):
        """Parameter-independent first-layer basis, reusable across evaluations on ``X``."""
        return self._layer_basis(self.layers[0], self.normalise(np.atleast_2d(X)))

    def _layer_forward(self, layer: KanLayer, a, basis=None):
        a, inside, idx, N, dN, base, flat = basis if basis is not None else self._layer_basis(layer, a)
        # active coefficients per point: (n_out, n, n_in, order + 1)
        active = layer.coef[:, np.arange(idx.shape[1])[None, :, None], idx]
        spline = np.einsum("onir,nir->noi", active, N)
        out = base @ layer.w_base.T + np.einsum("noi,oi->no", spline, layer.w_spline)
        cache = (a, inside, idx, N, dN, base, flat, active, spline)
        return out, cache

    def forward(self, X, return_clamped: bool = False):
        """Predict ``S_A`` for rows ``(U, n_A)`` of ``X``."""
        a = self.normalise(np.atleast_2d(X))
        clamped = 0
        for layer in self.layers:
            clamped += int((~((a >= layer.lo) & (a <= layer.hi))).sum())
            a, _ = self._layer_forward(layer, a)
        y = a[:, 0]
        return (y, clamped) if return_clamped else y

    __call__ = forward

    # -------------------------------------------------------------- gradient

    def loss_and_gradient(self, X, y, input_basis=None):
        """Mean squared error and its exact gradient w.r.t. :meth:`parameters`.

        ``input_basis`` may carry :meth:`input_basis` of ``X`` from a model with
        the same grids, to skip recomputing it.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        if X.shape[0] == 0:
            raise ValueError("empty batch")
        a = self.normalise(X)
        caches = []
        for l, layer in enumerate(self.layers):
            a, cache = self._layer_forward(layer, a, input_basis if l == 0 else None)
            caches.append(cache)
        resid = a[:, 0] - y
        loss = float(np.mean(resid**2))

        g = (2.0 / y.size) * resid[:, None]
        grads = []
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            a_in, inside, idx, N, dN, base, flat, active, spline = cache
            weights = g.T[:, :, None, None] * N[None]
            d_coef = np.bincount(flat, weights.ravel(), minlength=layer.coef.size)
            d_coef = d_coef.reshape(layer.coef.shape) * layer.w_spline[:, :, None]
            d_ws = np.einsum("no,noi->oi", g, spline)
            parts = [d_coef.ravel(), d_ws.ravel()]
            if self.config.base:
                parts.append((g.T @ base).ravel())
            grads.append(np.concatenate(parts))

            if layer is self.layers[0]:
                break
            dspline = np.einsum("onir,nir->noi", active, dN) * inside[:, None, :]
            g = (g @ layer.w_base) * silu_derivative(a_in) + np.einsum(
                "no,noi->ni", g, layer.w_spline * dspline
            )
        return loss, np.concatenate(grads[::-1])

    # ---------------------------------------------------------- persistence

    def to_dict(self) -> dict:
        return {
            "format": "entropy_transport.kan/1",
            "config": asdict(self.config),
            "input_lo": self.input_lo.tolist(),
            "input_hi": self.input_hi.tolist(),
            "layers": [
                {
                    "lo": layer.lo.tolist(),
                    "hi": layer.hi.tolist(),
                    "coef": layer.coef.tolist(),
                    "w_base": layer.w_base.tolist(),
                    "w_spline": layer.w_spline.tolist(),
                }
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KanModel":
        if data.get("format") != "entropy_transport.kan/1":
            raise ValueError(f"unknown checkpoint format {data.get('format')!r}")
        config = KanConfig(**data["config"])
        model = cls(config, np.array(data["input_lo"]), np.array(data["input_hi"]))
        for entry in data["layers"]:
            model.layers.append(
                KanLayer(
                    coef=np.array(entry["coef"], dtype=float),
                    w_base=np.array(entry["w_base"], dtype=float),
                    w_spline=np.array(entry["w_spline"], dtype=float),
                    lo=np.array(entry["lo"], dtype=float),
                    hi=np.array(entry["hi"], dtype=float),
                )
            )
        return model

    def save(self, path) -> None:
        # json writes floats with repr(), the shortest string that round-trips exactly
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "KanModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
