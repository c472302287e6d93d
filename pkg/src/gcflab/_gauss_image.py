"""Discrete Gauss-image operator on cell-centered grids.

A node's dual cell is the square spanned by the four surrounding quad
centers.  Its boundary carries eight gradient samples (four quad centers,
four edge midpoints), so a cell's gradient image is a small octagon in
p-space.  The edge midpoints matter: quad-center gradients alone are blind
to the odd-even (checkerboard) mode.  Measuring the octagon with the
spherical weight (1+|p|^2)^{-3/2} (the area of its gnomonic image on the
unit hemisphere) gives a conservative
Monge-Ampere discretization: summed over cells it telescopes to the
weighted area of the boundary image.  The 1-D analogue is the arctan flux.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def _kernels():
    """3x3 weights (times h) of the eight image vertices of a cell.

    Counterclockwise from the east edge midpoint: E, NE, N, NW, W, SW, S, SE.
    Corners take the central gradient of their quad; edge midpoints take a
    one-sided normal difference and an averaged tangential one.  Each is the
    exact gradient of a quadratic at that point.
    """
    K1 = np.zeros((8, 3, 3))
    K2 = np.zeros((8, 3, 3))

    def put(K, k, pairs):
        for (di, dj), w in pairs:
            K[k, di + 1, dj + 1] += w

    for k, (ci, cj) in zip((1, 3, 5, 7), ((0, 0), (-1, 0), (-1, -1), (0, -1))):
        q = [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)]
        put(K1, k, zip(q, (-0.5, 0.5, -0.5, 0.5)))
        put(K2, k, zip(q, (-0.5, -0.5, 0.5, 0.5)))
    for k, s in ((0, 1), (4, -1)):     # east / west midpoints
        put(K1, k, [((max(s, 0), 0), 1.0), ((min(s, 0), 0), -1.0)])
        put(K2, k, [((0, 1), 0.25), ((s, 1), 0.25), ((0, -1), -0.25), ((s, -1), -0.25)])
    for k, s in ((2, 1), (6, -1)):     # north / south midpoints
        put(K2, k, [((0, max(s, 0)), 1.0), ((0, min(s, 0)), -1.0)])
        put(K1, k, [((1, 0), 0.25), ((1, s), 0.25), ((-1, 0), -0.25), ((-1, s), -0.25)])
    # value weights: the vertex value is the mean of the nodes it is built from
    K0 = np.zeros((8, 3, 3))
    for k, (ci, cj) in zip((1, 3, 5, 7), ((0, 0), (-1, 0), (-1, -1), (0, -1))):
        put(K0, k, [((ci, cj), 0.25), ((ci + 1, cj), 0.25), ((ci, cj + 1), 0.25), ((ci + 1, cj + 1), 0.25)])
    for k, (di, dj) in ((0, (1, 0)), (2, (0, 1)), (4, (-1, 0)), (6, (0, -1))):
        put(K0, k, [((0, 0), 0.5), ((di, dj), 0.5)])
    return K0, K1, K2


_K0, _K1, _K2 = _kernels()
NV = 8


def pole_triangle_area(P, Q, grad=False):
    """Signed area of the spherical triangle (pole, g(P), g(Q)).

    ``g(p) = (p, -1)/sqrt(1+|p|^2)`` is the downward unit normal of a graph
    with gradient p.  Uses the half-angle (Oosterom-Strackee) formula.
    """
    a = np.sqrt(1.0 + (P * P).sum(-1))
    b = np.sqrt(1.0 + (Q * Q).sum(-1))
    y = P[..., 0] * Q[..., 1] - P[..., 1] * Q[..., 0]
    x = a * b + a + b + (P * Q).sum(-1) + 1.0
    E = 2.0 * np.arctan2(y, x)
    if not grad:
        return E
    den = x * x + y * y
    dy_dP = np.stack([Q[..., 1], -Q[..., 0]], -1)
    dy_dQ = np.stack([-P[..., 1], P[..., 0]], -1)
    dx_dP = ((b + 1.0) / a)[..., None] * P + Q
    dx_dQ = ((a + 1.0) / b)[..., None] * Q + P
    gP = 2.0 * (x[..., None] * dy_dP - y[..., None] * dx_dP) / den[..., None]
    gQ = 2.0 * (x[..., None] * dy_dQ - y[..., None] * dx_dQ) / den[..., None]
    return E, gP, gQ


def interior_of(active):
    """Active nodes whose eight neighbours are active too."""
    N0, N1 = active.shape
    A = np.pad(active, 1)
    out = active.copy()
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            out &= A[1 + di:N0 + 1 + di, 1 + dj:N1 + 1 + dj]
    return out


class GaussImage2D:
    """Cell gradient images and their spherical areas for a node mask."""

    def __init__(self, active, h, interior=None, fit=None):
        self.active = np.asarray(active, bool)
        self.h = float(h)
        self.fit = fit
        self.interior = interior_of(self.active) if interior is None else np.asarray(interior, bool)
        self.I, self.J = np.nonzero(self.interior)
        self.n = len(self.I)
        self.idx = -np.ones(self.active.shape, int)
        self.idx[self.I, self.J] = np.arange(self.n)

    def _neighbours(self, u):
        """Stack ``(n, 3, 3)`` of the 3x3 blocks around interior nodes."""
        B = np.empty((self.n, 3, 3))
        for a in range(3):
            for b in range(3):
                B[:, a, b] = u[self.I + a - 1, self.J + b - 1]
        return B

    def _vertex_data(self, u):
        B = self._neighbours(u)
        if self.fit is None:
            G = np.empty((self.n, NV, 2))
            G[..., 0] = np.einsum("nab,kab->nk", B, _K1) / self.h
            G[..., 1] = np.einsum("nab,kab->nk", B, _K2) / self.h
            return G, None
        # exponential fitting: differentiate w = exp(-u/c), exact for c*log profiles
        c = self.fit[:, None, None] if np.ndim(self.fit) else self.fit
        ref = B[:, 1:2, 1:2]
        Wb = np.exp(np.clip(-(B - ref) / c, -700.0, 700.0))
        wv = np.einsum("nab,kab->nk", Wb, _K0)
        cc = self.fit[:, None] if np.ndim(self.fit) else self.fit
        G = np.empty((self.n, NV, 2))
        G[..., 0] = -cc * np.einsum("nab,kab->nk", Wb, _K1) / (self.h * wv)
        G[..., 1] = -cc * np.einsum("nab,kab->nk", Wb, _K2) / (self.h * wv)
        return G, (Wb, wv, c)

    def vertex_gradients(self, u):
        """Array ``(n, 8, 2)`` of image vertices around every interior cell."""
        return self._vertex_data(u)[0]

    def _dW_blocks(self, G, aux, dW):
        """Chain rule from vertex gradients back to the 3x3 node block."""
        h = self.h
        if aux is None:
            return (np.einsum("nk,kab->nab", dW[..., 0], _K1)
                    + np.einsum("nk,kab->nab", dW[..., 1], _K2)) / h
        Wb, wv, c = aux
        # p = -c (K w)/(h K0 w), dw_m/du_m = -w_m/c
        # dp/du_m = (w_m/h) [K_m - (K w) K0_m / (K0 w)] / (K0 w)
        t = (np.einsum("nk,kab->nab", dW[..., 0] / wv, _K1)
             + np.einsum("nk,kab->nab", dW[..., 1] / wv, _K2))
        g0 = -(dW * G).sum(-1) * h / (-c.reshape(-1, 1) if np.ndim(c) else -c) / wv
        t = t + np.einsum("nk,kab->nab", g0, _K0)
        return t * Wb / h

    def areas(self, u):
        """Spherical area of each interior cell's gradient image."""
        G = self.vertex_gradients(u)
        return pole_triangle_area(G, np.roll(G, -1, axis=1)).sum(axis=1)

    def residual(self, u, rhs):
        """``W / h^2 - rhs`` on interior nodes."""
        return self.areas(u) / self.h ** 2 - rhs

    def residual_jacobian(self, u, rhs):
        """Residual and its sparse Jacobian with respect to interior values."""
        h = self.h
        G, aux = self._vertex_data(u)
        E, gP, gQ = pole_triangle_area(G, np.roll(G, -1, axis=1), grad=True)
        W = E.sum(axis=1)
        # dW/dp at every vertex: it appears as P in one triangle and Q in the previous
        dW = gP + np.roll(gQ, 1, axis=1)                       # (n, 8, 2)
        blk = self._dW_blocks(G, aux, dW)                        # (n, 3, 3)
        rows, cols, vals = [], [], []
        ar = np.arange(self.n)
        for a in range(3):
            for b in range(3):
                col = self.idx[self.I + a - 1, self.J + b - 1]
                ok = col >= 0
                rows.append(ar[ok])
                cols.append(col[ok])
                vals.append(blk[ok, a, b])
        F = W / h ** 2 - rhs
        Jm = sp.csr_matrix((np.concatenate(vals) / h ** 2, (np.concatenate(rows), np.concatenate(cols))),
                           shape=(self.n, self.n))
        return F, Jm

    def diagonal(self, u):
        """Diagonal of the Jacobian (explicit-step stability)."""
        G, aux = self._vertex_data(u)
        _, gP, gQ = pole_triangle_area(G, np.roll(G, -1, axis=1), grad=True)
        dW = gP + np.roll(gQ, 1, axis=1)
        return self._dW_blocks(G, aux, dW)[:, 1, 1] / self.h ** 2

    def euclidean_areas(self, u):
        """Lebesgue area of each cell's gradient polygon (shoelace)."""
        G = self.vertex_gradients(u)
        x, y = G[..., 0], G[..., 1]
        return 0.5 * (x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y).sum(axis=1)


def arctan_flux(u, h):
    """1-D analogue: (arctan D+u - arctan D-u)/h at nodes 1..N-2."""
    a = np.arctan(np.diff(u) / h)
    return (a[1:] - a[:-1]) / h
