"""Variational wavefunctions: complex-parameter maps sigma -> log Psi(sigma).

Every machine exposes ``log_val`` and its analytic log-derivatives
``der_log`` with O_k = d log Psi / d alpha_k (holomorphic derivative in the
complex parameters). Both accept a single configuration of shape (N,) or a
batch of shape (B, N).

Parameter layouts (flattened complex vectors):

* RbmSpin:        [a (N), b (M), W row-major (M*N)]
                  log Psi = sum_i a_i s_i + sum_j ln 2cosh(b_j + sum_i W_ji s_i)
* RbmSpinSymm:    [a_s (1), b_s (F), W_s row-major (F*N)]; hidden units are
                  tied over the symmetry group (M = F * group order)
* RbmMultiVal:    RbmSpin on the one-hot encoding (N*d binary visibles)
* Ffnn:           per layer, dense layers as [W row-major, b]
* Jastrow:        strict upper triangle of W, row-major;
                  log Psi = sum_{i<j} s_i W_ij s_j
* LookupMachine:  the table of log-amplitudes itself (one entry per state)
"""

from __future__ import annotations

import numpy as np

from .hilbert import HilbertIndex, HilbertSpace
from .lattice import SymmetryGroup

LN2 = np.log(2.0)


def lncosh(z: np.ndarray) -> np.ndarray:
    """Overflow-safe ln cosh for complex input.

    Uses ln cosh z = s - ln 2 + ln(1 + exp(-2s)) with s = z mirrored into
    Re s >= 0 (cosh is even), so the exponential never overflows.
    """
    z = np.asarray(z, dtype=np.complex128)
    s = np.where(z.real < 0, -z, z)
    return s - LN2 + np.log(1.0 + np.exp(-2 * s))


def _split_batch(sigma):
    sigma = np.asarray(sigma, dtype=np.float64)
    single = sigma.ndim == 1
    return (sigma[None, :] if single else sigma), single


class Machine:
    """Common parameter plumbing; subclasses provide the analytics."""

    kind = "abstract"

    @property
    def n_par(self) -> int:
        raise NotImplementedError

    @property
    def n_visible(self) -> int:
        raise NotImplementedError

    def get_parameters(self) -> np.ndarray:
        raise NotImplementedError

    def set_parameters(self, params: np.ndarray):
        raise NotImplementedError

    def log_val(self, sigma):
        batch, single = _split_batch(sigma)
        out = self._log_val_batch(batch)
        return out[0] if single else out

    def der_log(self, sigma):
        batch, single = _split_batch(sigma)
        out = self._der_log_batch(batch)
        return out[0] if single else out

    def init_random_parameters(self, seed: int, sigma: float):
        """Draw each real and imaginary part i.i.d. from N(0, sigma^2)."""
        if sigma < 0:
            raise ValueError("sigma must be non-negative")
        rng = np.random.default_rng(seed)
        re = rng.normal(0.0, 1.0, self.n_par)
        im = rng.normal(0.0, 1.0, self.n_par)
        self.set_parameters(sigma * (re + 1j * im))

    def shape_metadata(self) -> dict:
        raise NotImplementedError

    def _check_params(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=np.complex128)
        if params.shape != (self.n_par,):
            raise ValueError(f"expected {self.n_par} parameters, got shape {params.shape}")
        return params


class RbmSpin(Machine):
    """Restricted Boltzmann machine with complex visible/hidden biases and weights."""

    kind = "rbm"

    def __init__(self, hilbert: HilbertSpace, n_hidden: int | None = None, alpha: float | None = None):
        self.hilbert = hilbert
        n = hilbert.n_sites
        if n_hidden is None:
            n_hidden = round((alpha if alpha is not None else 1.0) * n)
        if n_hidden < 1:
            raise ValueError("n_hidden must be positive")
        self._n = n
        self._m = n_hidden
        self.a = np.zeros(n, dtype=np.complex128)
        self.b = np.zeros(n_hidden, dtype=np.complex128)
        self.W = np.zeros((n_hidden, n), dtype=np.complex128)

    @property
    def n_par(self) -> int:
        return self._n + self._m + self._n * self._m

    @property
    def n_visible(self) -> int:
        return self._n

    @property
    def n_hidden(self) -> int:
        return self._m

    def get_parameters(self) -> np.ndarray:
        return np.concatenate([self.a, self.b, self.W.ravel()])

    def set_parameters(self, params):
        params = self._check_params(params)
        n, m = self._n, self._m
        self.a = params[:n].copy()
        self.b = params[n : n + m].copy()
        self.W = params[n + m :].reshape(m, n).copy()

    def _theta(self, batch):
        return self.b[None, :] + batch @ self.W.T

    def _log_val_batch(self, batch):
        theta = self._theta(batch)
        return batch @ self.a + (lncosh(theta) + LN2).sum(axis=1)

    def _der_log_batch(self, batch):
        t = np.tanh(self._theta(batch))
        dw = t[:, :, None] * batch[:, None, :]
        return np.concatenate([batch.astype(np.complex128), t, dw.reshape(batch.shape[0], -1)], axis=1)

    def shape_metadata(self) -> dict:
        return {"n_visible": self._n, "n_hidden": self._m}


class RbmSpinSymm(Machine):
    """RBM with weights tied over a symmetry group of site permutations.

    One visible-bias scalar, ``alpha`` hidden-bias scalars and ``alpha * N``
    independent weights, replicated over the group: the expanded machine has
    hidden unit (f, g) with theta_{f,g} = b_f + sum_i W_f[p_g(i)] sigma_i.
    """

    kind = "rbm_symm"

    def __init__(self, hilbert: HilbertSpace, group: SymmetryGroup, alpha: int = 1):
        if group.n_sites != hilbert.n_sites:
            raise ValueError("symmetry group site count does not match the Hilbert space")
        if alpha < 1:
            raise ValueError("alpha must be a positive integer")
        self.hilbert = hilbert
        self.group = group
        self._n = hilbert.n_sites
        self._f = alpha
        self._perms = group.permutations
        self._inv_perms = group.inverse_permutations()
        self.a = np.zeros(1, dtype=np.complex128)
        self.b = np.zeros(alpha, dtype=np.complex128)
        self.W = np.zeros((alpha, self._n), dtype=np.complex128)

    @property
    def n_par(self) -> int:
        return 1 + self._f + self._f * self._n

    @property
    def n_visible(self) -> int:
        return self._n

    @property
    def n_hidden(self) -> int:
        return self._f * self.group.order

    def get_parameters(self) -> np.ndarray:
        return np.concatenate([self.a, self.b, self.W.ravel()])

    def set_parameters(self, params):
        params = self._check_params(params)
        f = self._f
        self.a = params[:1].copy()
        self.b = params[1 : 1 + f].copy()
        self.W = params[1 + f :].reshape(f, self._n).copy()

    def expanded(self) -> RbmSpin:
        """The equivalent plain RBM with explicitly tied weights."""
        g = self.group.order
        rbm = RbmSpin(self.hilbert, n_hidden=self._f * g)
        rbm.a = np.full(self._n, self.a[0], dtype=np.complex128)
        rbm.b = np.repeat(self.b, g)
        W = np.empty((self._f * g, self._n), dtype=np.complex128)
        for f in range(self._f):
            for gi in range(g):
                W[f * g + gi] = self.W[f, self._perms[gi]]
        rbm.W = W
        return rbm

    def _thetas(self, batch):
        # theta_{f,g} = b_f + sum_i W_f[p_g(i)] s_i = b_f + sum_k W_f[k] s_{p_g^{-1}(k)}
        return self.b[None, :, None] + np.einsum("fk,bgk->bfg", self.W, batch[:, self._inv_perms])

    def _log_val_batch(self, batch):
        theta = self._thetas(batch)
        vis = self.a[0] * batch.sum(axis=1)
        return vis + (lncosh(theta) + LN2).sum(axis=(1, 2))

    def _der_log_batch(self, batch):
        theta = self._thetas(batch)
        t = np.tanh(theta)  # (B, F, G)
        da = batch.sum(axis=1)[:, None]
        db = t.sum(axis=2)
        sig_inv = batch[:, self._inv_perms]  # (B, G, N): sigma[p_g^{-1}(k)]
        dw = np.einsum("bfg,bgk->bfk", t, sig_inv)
        return np.concatenate([da, db, dw.reshape(batch.shape[0], -1)], axis=1)

    def shape_metadata(self) -> dict:
        return {"n_visible": self._n, "alpha": self._f, "group_order": self.group.order}


class RbmMultiVal(Machine):
    """RBM over the one-hot encoding of configurations (d > 2 local spaces).

    Visible unit (i, k) is 1 when site i holds local value k (ascending value
    order), 0 otherwise.
    """

    kind = "rbm_multival"

    def __init__(self, hilbert: HilbertSpace, n_hidden: int):
        self.hilbert = hilbert
        self._n = hilbert.n_sites
        self._d = hilbert.local_dim
        self._inner = RbmSpin(
            HilbertSpace(self._n * self._d, np.array([0.0, 1.0]), kind="custom"),
            n_hidden=n_hidden,
        )

    @property
    def n_par(self) -> int:
        return self._inner.n_par

    @property
    def n_visible(self) -> int:
        return self._n

    @property
    def n_hidden(self) -> int:
        return self._inner.n_hidden

    def get_parameters(self) -> np.ndarray:
        return self._inner.get_parameters()

    def set_parameters(self, params):
        self._inner.set_parameters(params)

    def one_hot(self, batch) -> np.ndarray:
        idx = self.hilbert.value_indices(batch)
        out = np.zeros((batch.shape[0], self._n * self._d))
        flat = np.arange(self._n) * self._d + idx
        np.put_along_axis(out, flat, 1.0, axis=1)
        return out

    def _log_val_batch(self, batch):
        return self._inner._log_val_batch(self.one_hot(batch))

    def _der_log_batch(self, batch):
        return self._inner._der_log_batch(self.one_hot(batch))

    def shape_metadata(self) -> dict:
        return {"n_visible": self._n, "local_dim": self._d, "n_hidden": self._inner.n_hidden}


class DenseLayer:
    """Affine map y = W x + b with complex weights."""

    def __init__(self, n_in: int, n_out: int):
        self.W = np.zeros((n_out, n_in), dtype=np.complex128)
        self.b = np.zeros(n_out, dtype=np.complex128)

    @property
    def n_par(self) -> int:
        return self.W.size + self.b.size

    def forward(self, x):
        return x @ self.W.T + self.b[None, :]

    def backward(self, x, delta):
        dW = np.einsum("bm,bn->bmn", delta, x)
        grads = np.concatenate([dW.reshape(x.shape[0], -1), delta], axis=1)
        return delta @ self.W, grads


class ActivationLayer:
    """Elementwise activation: relu (real-part gate), tanh or lncosh.

    The complex relu passes z through when Re z > 0 and outputs 0 otherwise;
    its derivative uses the same gate (non-holomorphic but piecewise so).
    """

    KINDS = ("relu", "tanh", "lncosh")

    def __init__(self, kind: str):
        if kind not in self.KINDS:
            raise ValueError(f"unknown activation {kind!r} (valid: {', '.join(self.KINDS)})")
        self.kind = kind

    n_par = 0

    def forward(self, x):
        if self.kind == "relu":
            return np.where(x.real > 0, x, 0.0)
        if self.kind == "tanh":
            return np.tanh(x)
        return lncosh(x)

    def backward(self, x, delta):
        if self.kind == "relu":
            return delta * (x.real > 0), None
        if self.kind == "tanh":
            return delta * (1.0 - np.tanh(x) ** 2), None
        return delta * np.tanh(x), None


class Ffnn(Machine):
    """Feed-forward network; log Psi is the sum of the final layer's outputs."""

    kind = "ffnn"

    def __init__(self, hilbert: HilbertSpace, layers: list):
        self.hilbert = hilbert
        self._n = hilbert.n_sites
        self.layers = layers
        dim = self._n
        for layer in layers:
            if isinstance(layer, DenseLayer):
                if layer.W.shape[1] != dim:
                    raise ValueError(
                        f"dense layer expects input dim {layer.W.shape[1]}, previous layer gives {dim}"
                    )
                dim = layer.W.shape[0]

    @classmethod
    def from_spec(cls, hilbert: HilbertSpace, layer_specs: list[dict]) -> "Ffnn":
        """Build from config-style layer dicts: {"kind": "dense", "output_dim": m} or
        {"kind": "relu" | "tanh" | "lncosh"}."""
        layers = []
        dim = hilbert.n_sites
        for spec in layer_specs:
            kind = spec.get("kind")
            if kind == "dense":
                out = int(spec["output_dim"])
                layers.append(DenseLayer(dim, out))
                dim = out
            else:
                layers.append(ActivationLayer(kind))
        return cls(hilbert, layers)

    @property
    def n_par(self) -> int:
        return sum(l.n_par for l in self.layers)

    @property
    def n_visible(self) -> int:
        return self._n

    def get_parameters(self) -> np.ndarray:
        parts = []
        for l in self.layers:
            if isinstance(l, DenseLayer):
                parts.append(l.W.ravel())
                parts.append(l.b)
        if not parts:
            return np.zeros(0, dtype=np.complex128)
        return np.concatenate(parts)

    def set_parameters(self, params):
        params = self._check_params(params)
        pos = 0
        for l in self.layers:
            if isinstance(l, DenseLayer):
                w = l.W.size
                l.W = params[pos : pos + w].reshape(l.W.shape).copy()
                pos += w
                l.b = params[pos : pos + l.b.size].copy()
                pos += l.b.size

    def _forward(self, batch):
        x = batch.astype(np.complex128)
        inputs = []
        for l in self.layers:
            inputs.append(x)
            x = l.forward(x)
        return inputs, x

    def _log_val_batch(self, batch):
        _, out = self._forward(batch)
        return out.sum(axis=1)

    def _der_log_batch(self, batch):
        inputs, out = self._forward(batch)
        delta = np.ones_like(out)
        grads_rev = []
        for l, x in zip(reversed(self.layers), reversed(inputs)):
            delta, grads = l.backward(x, delta)
            if grads is not None:
                grads_rev.append(grads)
        if not grads_rev:
            return np.zeros((batch.shape[0], 0), dtype=np.complex128)
        return np.concatenate(list(reversed(grads_rev)), axis=1)

    def shape_metadata(self) -> dict:
        spec = []
        for l in self.layers:
            if isinstance(l, DenseLayer):
                spec.append({"kind": "dense", "input_dim": l.W.shape[1], "output_dim": l.W.shape[0]})
            else:
                spec.append({"kind": l.kind})
        return {"n_visible": self._n, "layers": spec}


class Jastrow(Machine):
    """Two-body Jastrow factor log Psi = sum_{i<j} s_i W_ij s_j."""

    kind = "jastrow"

    def __init__(self, hilbert: HilbertSpace):
        self.hilbert = hilbert
        self._n = hilbert.n_sites
        self._iu = np.triu_indices(self._n, k=1)
        self.w = np.zeros(len(self._iu[0]), dtype=np.complex128)

    @property
    def n_par(self) -> int:
        return self.w.size

    @property
    def n_visible(self) -> int:
        return self._n

    def get_parameters(self) -> np.ndarray:
        return self.w.copy()

    def set_parameters(self, params):
        self.w = self._check_params(params).copy()

    def _pair_products(self, batch):
        return batch[:, self._iu[0]] * batch[:, self._iu[1]]

    def _log_val_batch(self, batch):
        return self._pair_products(batch) @ self.w

    def _der_log_batch(self, batch):
        return self._pair_products(batch).astype(np.complex128)

    def shape_metadata(self) -> dict:
        return {"n_visible": self._n}


class LookupMachine(Machine):
    """Exact table of log-amplitudes; parameters are the table entries.

    der_log is the one-hot indicator of the sampled state, which makes the
    zero-variance identities exact. Intended for tests and oracles.
    """

    kind = "lookup"

    def __init__(self, hilbert: HilbertSpace, log_table: np.ndarray | None = None):
        self.hilbert = hilbert
        self.index = HilbertIndex(hilbert)
        if log_table is None:
            log_table = np.zeros(self.index.n_states, dtype=np.complex128)
        log_table = np.asarray(log_table, dtype=np.complex128)
        if log_table.shape != (self.index.n_states,):
            raise ValueError("log table length must equal n_states")
        self.table = log_table.copy()

    @classmethod
    def from_state_vector(cls, hilbert: HilbertSpace, vec: np.ndarray) -> "LookupMachine":
        vec = np.asarray(vec, dtype=np.complex128)
        with np.errstate(divide="ignore"):
            table = np.where(vec == 0, -np.inf + 0j, np.log(np.where(vec == 0, 1.0, vec)))
        return cls(hilbert, table)

    @property
    def n_par(self) -> int:
        return self.table.size

    @property
    def n_visible(self) -> int:
        return self.hilbert.n_sites

    def get_parameters(self) -> np.ndarray:
        return self.table.copy()

    def set_parameters(self, params):
        self.table = self._check_params(params).copy()

    def _log_val_batch(self, batch):
        return self.table[self.index.states_to_numbers(batch)]

    def _der_log_batch(self, batch):
        idx = self.index.states_to_numbers(batch)
        out = np.zeros((batch.shape[0], self.table.size), dtype=np.complex128)
        out[np.arange(batch.shape[0]), idx] = 1.0
        return out

    def shape_metadata(self) -> dict:
        return {"n_states": self.table.size}


MACHINE_KINDS = {
    "rbm": RbmSpin,
    "rbm_symm": RbmSpinSymm,
    "rbm_multival": RbmMultiVal,
    "ffnn": Ffnn,
    "jastrow": Jastrow,
    "lookup": LookupMachine,
}
