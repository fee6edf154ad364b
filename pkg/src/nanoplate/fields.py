"""Scalar coefficient fields on the plate: Lamé moduli and subgrade coefficient.

A field is anything with ``__call__(x, y) -> values`` and ``gradient(x, y)``.
Three concrete kinds are provided: closed-form expressions parsed into a
restricted syntax tree, grid samples with bilinear interpolation, and
tensor-product splines (used for the subgrade coefficient).
"""
import ast
import hashlib
import json
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator

from . import bspline
from .errors import ConfigError, DomainError

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "tanh": np.tanh, "sinh": np.sinh, "cosh": np.cosh,
    "arctan": np.arctan, "atan": np.arctan, "abs": np.abs,
    "minimum": np.minimum, "maximum": np.maximum,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_ALLOWED = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
    ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


class Field:
    fd_step = 1e-6

    def __call__(self, x, y):
        raise NotImplementedError

    def gradient(self, x, y):
        """Central differences; subclasses override when exact derivatives exist."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        h = self.fd_step
        gx = (self(x + h, y) - self(x - h, y)) / (2 * h)
        gy = (self(x, y + h) - self(x, y - h)) / (2 * h)
        return np.stack([gx, gy], axis=-1)

    def describe(self):
        return {"kind": type(self).__name__}

    def digest(self):
        blob = json.dumps(self.describe(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


class ExprField(Field):
    """Closed-form field such as ``"20 + 5*sin(pi*x)*sin(pi*y)"``."""

    def __init__(self, expr):
        expr = str(expr)
        try:
            tree = ast.parse(expr, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {expr!r}: {exc}") from None
        for node in ast.walk(tree):
            if not isinstance(node, _ALLOWED):
                raise ConfigError(f"disallowed syntax {type(node).__name__} in {expr!r}")
            if isinstance(node, ast.Name) and node.id not in {*_FUNCS, *_CONSTS, "x", "y"}:
                raise ConfigError(f"unknown name {node.id!r} in {expr!r}")
            if isinstance(node, ast.Call) and not (
                isinstance(node.func, ast.Name) and node.func.id in _FUNCS
            ):
                raise ConfigError(f"unsupported call in {expr!r}")
        self.expr = expr
        self._code = compile(tree, "<field>", "eval")
        self.is_constant = not any(
            isinstance(n, ast.Name) and n.id in ("x", "y") for n in ast.walk(tree)
        )

    def __call__(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        env = {"__builtins__": {}, "x": x, "y": y, **_FUNCS, **_CONSTS}
        val = eval(self._code, env)
        return np.broadcast_to(np.asarray(val, float), np.broadcast(x, y).shape).copy()

    def gradient(self, x, y):
        if self.is_constant:
            shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
            return np.zeros(shape + (2,))
        return super().gradient(x, y)

    def describe(self):
        return {"kind": "expr", "expr": self.expr}

    def __repr__(self):
        return f"ExprField({self.expr!r})"


def constant(value):
    return ExprField(repr(float(value)))


class GridField(Field):
    """Node samples on a uniform grid over ``[0, Lx] x [0, Ly]``, bilinear in between."""

    def __init__(self, values, Lx, Ly, source=None):
        values = np.asarray(values, float)
        if values.ndim != 2 or min(values.shape) < 2:
            raise ConfigError("grid field needs at least 2x2 samples")
        self.values = values
        self.Lx, self.Ly = float(Lx), float(Ly)
        self.source = source
        ny, nx = values.shape
        self._interp = RegularGridInterpolator(
            (np.linspace(0, self.Ly, ny), np.linspace(0, self.Lx, nx)), values,
            method="linear", bounds_error=False, fill_value=None,
        )

    @classmethod
    def from_file(cls, path):
        """Read the plain-text grid format.

        First non-comment line: ``nx ny Lx Ly``; then ``ny`` rows of ``nx``
        values, row-major with ``y`` increasing down the file.
        """
        path = Path(path)
        try:
            lines = [ln for ln in path.read_text().splitlines()
                     if ln.strip() and not ln.lstrip().startswith("#")]
        except OSError as exc:
            raise ConfigError(f"cannot read grid file {path}: {exc}") from None
        head = lines[0].split()
        nx, ny = int(head[0]), int(head[1])
        Lx, Ly = float(head[2]), float(head[3])
        data = np.array(" ".join(lines[1:]).split(), dtype=float)
        if data.size != nx * ny:
            raise ConfigError(f"{path}: expected {nx * ny} samples, found {data.size}")
        return cls(data.reshape(ny, nx), Lx, Ly, source=str(path))

    def to_file(self, path):
        ny, nx = self.values.shape
        rows = [f"{nx} {ny} {self.Lx!r} {self.Ly!r}"]
        rows += [" ".join(repr(float(v)) for v in row) for row in self.values]
        Path(path).write_text("\n".join(rows) + "\n")

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        pts = np.stack([y.ravel(), x.ravel()], axis=-1)
        return self._interp(pts).reshape(x.shape)

    def describe(self):
        return {"kind": "grid", "shape": list(self.values.shape), "Lx": self.Lx,
                "Ly": self.Ly, "sha": hashlib.sha256(self.values.tobytes()).hexdigest()[:16]}


class SplineField(Field):
    """Tensor-product spline on ``[0, Lx] x [0, Ly]`` (all basis functions active).

    ``coefs`` has shape ``(nby, nbx)``.  With nonnegative B-splines forming a
    partition of unity, bounds on the coefficients bound the field.
    """

    def __init__(self, Lx, Ly, n_spans, degree=2, coefs=None):
        self.Lx, self.Ly = float(Lx), float(Ly)
        self.n_spans = tuple(int(n) for n in n_spans)
        self.degree = int(degree)
        self.knots_x = bspline.open_uniform_knots(0.0, self.Lx, self.n_spans[0], self.degree)
        self.knots_y = bspline.open_uniform_knots(0.0, self.Ly, self.n_spans[1], self.degree)
        self.shape = (bspline.n_basis(self.knots_y, self.degree),
                      bspline.n_basis(self.knots_x, self.degree))
        if coefs is None:
            coefs = np.zeros(self.shape)
        self.coefs = np.asarray(coefs, float).reshape(self.shape)

    @property
    def size(self):
        return self.shape[0] * self.shape[1]

    def with_coefs(self, coefs):
        return SplineField(self.Lx, self.Ly, self.n_spans, self.degree, coefs)

    def _check(self, x, y):
        tol = 1e-12 * max(self.Lx, self.Ly)
        if (np.any(x < -tol) or np.any(x > self.Lx + tol)
                or np.any(y < -tol) or np.any(y > self.Ly + tol)):
            raise DomainError("spline field evaluated outside its rectangle")

    def basis_matrix(self, x, y, dx=0, dy=0):
        """Sparse ``(N, size)`` matrix of basis values (or derivatives) at points."""
        x = np.atleast_1d(np.asarray(x, float)).ravel()
        y = np.atleast_1d(np.asarray(y, float)).ravel()
        self._check(x, y)
        q = self.degree
        sx, Nx = bspline.basis_ders(self.knots_x, q, x, dx)
        sy, Ny = bspline.basis_ders(self.knots_y, q, y, dy)
        vals = Ny[:, dy, :, None] * Nx[:, dx, None, :]
        iy = sy[:, None] - q + np.arange(q + 1)
        ix = sx[:, None] - q + np.arange(q + 1)
        cols = iy[:, :, None] * self.shape[1] + ix[:, None, :]
        rows = np.broadcast_to(np.arange(x.size)[:, None, None], cols.shape)
        return sp.csr_matrix((vals.ravel(), (rows.ravel(), cols.ravel())),
                             shape=(x.size, self.size))

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return (self.basis_matrix(x, y) @ self.coefs.ravel()).reshape(x.shape)

    def gradient(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        c = self.coefs.ravel()
        gx = self.basis_matrix(x, y, dx=1) @ c
        gy = self.basis_matrix(x, y, dy=1) @ c
        return np.stack([gx, gy], axis=-1).reshape(x.shape + (2,))

    def interpolate(self, func):
        """Spline interpolating ``func`` at the tensor Greville points."""
        q = self.degree
        gx = bspline.greville(self.knots_x, q)
        gy = bspline.greville(self.knots_y, q)
        Cx = bspline.collocation_matrix(self.knots_x, q, gx)
        Cy = bspline.collocation_matrix(self.knots_y, q, gy)
        X, Y = np.meshgrid(gx, gy)
        vals = np.asarray(func(X, Y), float)
        coefs = np.linalg.solve(Cy, np.linalg.solve(Cx, vals.T).T)
        return self.with_coefs(coefs)

    def describe(self):
        return {"kind": "spline", "Lx": self.Lx, "Ly": self.Ly, "n_spans": list(self.n_spans),
                "degree": self.degree, "coefs": self.coefs.ravel().tolist()}

    def __repr__(self):
        return f"SplineField(n_spans={self.n_spans}, degree={self.degree})"


def field_from_spec(spec, base_dir=None):
    """Build a field from a config value: number, expression string or ``{grid = path}``."""
    if isinstance(spec, Field):
        return spec
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return constant(spec)
    if isinstance(spec, str):
        return ExprField(spec)
    if isinstance(spec, dict) and "grid" in spec:
        path = Path(spec["grid"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return GridField.from_file(path)
    raise ConfigError(f"cannot interpret field specification {spec!r}")
