"""Nonlinear parametrization maps Phi: R^Q -> L2(-pi, pi).

Two parametrizations are provided: a small periodic tanh MLP whose first
layer consists of phase-shifted sine features (so the output is 2pi-periodic
by construction), and a linear real Fourier basis used as an exactly
analyzable oracle in tests.

Everything is evaluated as "jets": the function value together with its
first and second spatial derivatives at a batch of points, plus, on demand,
the Jacobian of each jet component with respect to the full parameter
vector. All derivatives are propagated exactly by the chain rule; no
numerical differentiation is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError

CHECKPOINT_MAGIC = "parastiff-checkpoint-v1"


@dataclass(frozen=True)
class MlpArchitecture:
    """Fixed-topology periodic MLP: sin input features, tanh hidden layers, affine output."""

    input_width: int = 5
    hidden_layers: int = 4
    hidden_width: int = 5

    @property
    def param_count(self) -> int:
        win, nl, w = self.input_width, self.hidden_layers, self.hidden_width
        if nl < 1:
            return win + w + 1
        first = w * win + w
        rest = (nl - 1) * (w * w + w)
        return win + first + rest + w + 1

    def layer_shapes(self):
        """(rows, cols) of each hidden weight matrix, in order."""
        shapes = []
        prev = self.input_width
        for _ in range(self.hidden_layers):
            shapes.append((self.hidden_width, prev))
            prev = self.hidden_width
        return shapes


def default_architecture() -> MlpArchitecture:
    """The 131-parameter network used throughout the experiments."""
    return MlpArchitecture(input_width=5, hidden_layers=4, hidden_width=5)


@dataclass
class JetBatch:
    """Values and spatial derivatives of a parametrized function at sample points."""

    values: np.ndarray
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None

    @property
    def max_order(self) -> int:
        if self.d2 is not None:
            return 2
        if self.d1 is not None:
            return 1
        return 0


@dataclass
class JacobianBatch:
    """Parameter Jacobians of each jet component; rows index points, columns parameters."""

    J0: np.ndarray
    J1: np.ndarray | None = None
    J2: np.ndarray | None = None

    @property
    def max_order(self) -> int:
        if self.J2 is not None:
            return 2
        if self.J1 is not None:
            return 1
        return 0


def unpack_params(theta: np.ndarray, arch: MlpArchitecture):
    """Split the flat parameter vector into (b_in, [(W_j, b_j)], w_out, b_out).

    Layout: input biases, then per hidden layer the weight matrix in row-major
    order followed by its bias, then the output weights and output bias. The
    returned arrays are views into theta.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (arch.param_count,):
        raise ShapeError(f"expected {arch.param_count} parameters, got shape {theta.shape}")
    pos = arch.input_width
    b_in = theta[:pos]
    hidden = []
    for rows, cols in arch.layer_shapes():
        W = theta[pos:pos + rows * cols].reshape(rows, cols)
        pos += rows * cols
        b = theta[pos:pos + rows]
        pos += rows
        hidden.append((W, b))
    w_out = theta[pos:pos + arch.hidden_width]
    pos += arch.hidden_width
    b_out = theta[pos]
    return b_in, hidden, w_out, b_out


def _check_order(max_order: int):
    if max_order not in (0, 1, 2):
        raise ConfigurationError(f"max_order must be 0, 1 or 2, got {max_order}")


def mlp_eval(theta, arch: MlpArchitecture, points, max_order: int = 2) -> JetBatch:
    """Forward pass returning (u, du/dx, d2u/dx2) at the given points."""
    _check_order(max_order)
    jets, _ = _mlp_forward(theta, arch, points, max_order, with_jacobian=False)
    return jets


def mlp_jacobian(theta, arch: MlpArchitecture, points, max_order: int = 2) -> JacobianBatch:
    """Exact parameter Jacobians of each jet component at the given points."""
    _check_order(max_order)
    _, jac = _mlp_forward(theta, arch, points, max_order, with_jacobian=True)
    return jac


def _mlp_forward(theta, arch, points, order, with_jacobian):
    # Forward pass propagates jets of order <= 2 in x; the parameter
    # Jacobians are then obtained by one reverse adjoint sweep per jet
    # component, all sweeps batched along a leading axis.
    x = np.atleast_1d(np.asarray(points, dtype=float))
    b_in, hidden, w_out, b_out = unpack_params(theta, arch)
    M = x.size
    no = order + 1

    # Input features: sin(x + b_i). The x-derivatives and the b_i-derivatives
    # coincide, which is what makes the network periodic.
    ang = x[:, None] + b_in[None, :]
    s0, c0 = np.sin(ang), np.cos(ang)
    y = [s0, c0, -s0][:no]

    tape = []
    for W, b in hidden:
        z = [y[0] @ W.T + b] + [y[o] @ W.T for o in range(1, no)]
        t = np.tanh(z[0])
        sig1 = 1.0 - t * t
        rec = {"W": W, "y_in": y, "z": z, "sig1": sig1}
        a = [t]
        if order >= 1:
            rec["sig2"] = -2.0 * t * sig1
            a.append(sig1 * z[1])
        if order >= 2:
            rec["sig3"] = (6.0 * t * t - 2.0) * sig1
            a.append(rec["sig2"] * z[1] * z[1] + sig1 * z[2])
        tape.append(rec)
        y = a

    out = [y[o] @ w_out for o in range(no)]
    out[0] = out[0] + b_out
    out += [None] * (3 - no)
    jets = JetBatch(out[0], out[1], out[2])
    if not with_jacobian:
        return jets, None

    Q = arch.param_count
    J = [np.zeros((M, Q)) for _ in range(no)]
    pos = Q - arch.hidden_width - 1  # start of the output layer block
    for o in range(no):
        J[o][:, pos:pos + arch.hidden_width] = y[o]
    J[0][:, pos + arch.hidden_width] = 1.0

    # Adjoints adj[s, o] of jet order o in the sweep for output component s.
    adj = np.zeros((no, no, M, arch.hidden_width))
    for s in range(no):
        adj[s, s] = w_out[None, :]

    for rec in reversed(tape):
        W = rec["W"]
        rows, cols = W.shape
        pos -= rows * cols + rows
        z, sig1 = rec["z"], rec["sig1"]
        zh = [adj[:, 0] * sig1]
        if order >= 1:
            sig2 = rec["sig2"]
            zh[0] = zh[0] + adj[:, 1] * (sig2 * z[1])
            zh.append(adj[:, 1] * sig1)
        if order >= 2:
            sig3 = rec["sig3"]
            zh[0] = zh[0] + adj[:, 2] * (sig3 * z[1] * z[1] + sig2 * z[2])
            zh[1] = zh[1] + adj[:, 2] * (2.0 * sig2 * z[1])
            zh.append(adj[:, 2] * sig1)

        y_in = rec["y_in"]
        gW = np.einsum("smi,ml->smil", zh[0], y_in[0])
        for o in range(1, no):
            gW += np.einsum("smi,ml->smil", zh[o], y_in[o])
        for s in range(no):
            J[s][:, pos:pos + rows * cols] = gW[s].reshape(M, rows * cols)
            J[s][:, pos + rows * cols:pos + rows * cols + rows] = zh[0][s]
        adj = np.stack(
            [(zh[o].reshape(no * M, rows) @ W).reshape(no, M, cols) for o in range(no)],
            axis=1,
        )

    # Input layer: d/db_i of (sin, cos, -sin)(x + b_i) is (cos, -sin, -cos).
    for s in range(no):
        Jin = adj[s, 0] * c0
        if order >= 1:
            Jin = Jin - adj[s, 1] * s0
        if order >= 2:
            Jin = Jin - adj[s, 2] * c0
        J[s][:, :arch.input_width] = Jin

    J += [None] * (3 - no)
    return jets, JacobianBatch(J[0], J[1], J[2])


# ---------------------------------------------------------------------------
# Linear Fourier parametrization (test oracle)


def fourier_mode_count(theta) -> int:
    theta = np.asarray(theta)
    if theta.ndim != 1 or theta.size % 2 == 0:
        raise ShapeError(f"Fourier coefficients must have odd length, got shape {theta.shape}")
    return (theta.size - 1) // 2


def fourier_design_matrices(points, k_max: int, max_order: int = 2):
    """Basis sample matrices (B0, B1, B2) for {1, cos kx, sin kx : k <= k_max}."""
    _check_order(max_order)
    x = np.atleast_1d(np.asarray(points, dtype=float))
    M, P = x.size, 1 + 2 * k_max
    B = [np.zeros((M, P)) for _ in range(max_order + 1)]
    B[0][:, 0] = 1.0
    for k in range(1, k_max + 1):
        ck, sk = np.cos(k * x), np.sin(k * x)
        B[0][:, 2 * k - 1], B[0][:, 2 * k] = ck, sk
        if max_order >= 1:
            B[1][:, 2 * k - 1], B[1][:, 2 * k] = -k * sk, k * ck
        if max_order >= 2:
            B[2][:, 2 * k - 1], B[2][:, 2 * k] = -k * k * ck, -k * k * sk
    return B + [None] * (3 - len(B))


def fourier_eval(theta, points, max_order: int = 2) -> JetBatch:
    k_max = fourier_mode_count(theta)
    B = fourier_design_matrices(points, k_max, max_order)
    vals = [Bo @ theta if Bo is not None else None for Bo in B]
    return JetBatch(vals[0], vals[1], vals[2])


def fourier_jacobian(theta, points, max_order: int = 2) -> JacobianBatch:
    k_max = fourier_mode_count(theta)
    B = fourier_design_matrices(points, k_max, max_order)
    return JacobianBatch(B[0], B[1], B[2])


# ---------------------------------------------------------------------------
# Uniform handles used by the steppers


class PeriodicMlp:
    """Callable wrapper binding an architecture to the mlp_* functions."""

    def __init__(self, arch: MlpArchitecture | None = None):
        self.arch = arch or default_architecture()

    @property
    def n_params(self) -> int:
        return self.arch.param_count

    def eval(self, theta, points, max_order: int = 2) -> JetBatch:
        return mlp_eval(theta, self.arch, points, max_order)

    def jacobian(self, theta, points, max_order: int = 2) -> JacobianBatch:
        return mlp_jacobian(theta, self.arch, points, max_order)


class FourierParametrization:
    """Linear oracle parametrization with analytic derivatives."""

    def __init__(self, k_max: int):
        if k_max < 0:
            raise ConfigurationError(f"k_max must be nonnegative, got {k_max}")
        self.k_max = k_max

    @property
    def n_params(self) -> int:
        return 1 + 2 * self.k_max

    def eval(self, theta, points, max_order: int = 2) -> JetBatch:
        if fourier_mode_count(theta) != self.k_max:
            raise ShapeError("coefficient length does not match k_max")
        return fourier_eval(theta, points, max_order)

    def jacobian(self, theta, points, max_order: int = 2) -> JacobianBatch:
        if fourier_mode_count(theta) != self.k_max:
            raise ShapeError("coefficient length does not match k_max")
        return fourier_jacobian(theta, points, max_order)


# ---------------------------------------------------------------------------
# Checkpoint file format


def save_checkpoint(path, theta, arch: MlpArchitecture, meta: dict | None = None):
    """Write a self-describing text checkpoint with full-precision parameters.

    Floats are printed with 17 significant digits, which round-trips IEEE
    doubles exactly.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (arch.param_count,):
        raise ShapeError(f"expected {arch.param_count} parameters, got shape {theta.shape}")
    lines = [
        CHECKPOINT_MAGIC,
        f"input_width {arch.input_width}",
        f"hidden_layers {arch.hidden_layers}",
        f"hidden_width {arch.hidden_width}",
        "activation tanh",
        f"param_count {arch.param_count}",
        "layout b_in;(W_j,b_j)*;w_out;b_out row-major",
    ]
    for key, val in (meta or {}).items():
        lines.append(f"meta.{key} {val}")
    lines.append("theta")
    lines.extend(format(v, ".17g") for v in theta)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path):
    """Read a checkpoint; returns (theta, arch, meta)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ConfigurationError(f"{path}: not a {CHECKPOINT_MAGIC} file")
    fields, meta = {}, {}
    i = 1
    while i < len(lines) and lines[i] != "theta":
        key, _, val = lines[i].partition(" ")
        if key.startswith("meta."):
            meta[key[5:]] = val
        else:
            fields[key] = val
        i += 1
    if i == len(lines):
        raise ConfigurationError(f"{path}: missing theta section")
    arch = MlpArchitecture(
        input_width=int(fields["input_width"]),
        hidden_layers=int(fields["hidden_layers"]),
        hidden_width=int(fields["hidden_width"]),
    )
    theta = np.array([float(v) for v in lines[i + 1:] if v], dtype=float)
    if theta.size != arch.param_count:
        raise ConfigurationError(
            f"{path}: expected {arch.param_count} parameters, found {theta.size}"
        )
    return theta, arch, meta
