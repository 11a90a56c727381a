"""Independent reference implementations used only by the tests.

These deliberately avoid the code paths of the package (and of LAPACK's
divide-and-conquer SVD) so that agreement is a genuine cross-check.
"""

import numpy as np


def jacobi_svd(M, sweeps=60, tol=1e-15):
    """Dense SVD via one-sided Jacobi rotations (Hestenes method).

    Orthogonalizes column pairs of A = M (or M^T for wide inputs) until
    every pairwise inner product is negligible; singular values are the
    column norms of the rotated matrix.  Returns (U, s, V) with s in
    non-increasing order and M ~= U @ diag(s) @ V.T.
    """
    M = np.asarray(M, dtype=np.float64)
    transposed = M.shape[0] < M.shape[1]
    A = (M.T if transposed else M).copy()
    m, n = A.shape
    V = np.eye(n)
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = A[:, p] @ A[:, p]
                aqq = A[:, q] @ A[:, q]
                apq = A[:, p] @ A[:, q]
                if abs(apq) <= tol * np.sqrt(app * aqq):
                    continue
                off = max(off, abs(apq))
                zeta = (aqq - app) / (2.0 * apq)
                t = np.sign(zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.hypot(1.0, t)
                s = c * t
                Ap = A[:, p].copy()
                A[:, p] = c * Ap - s * A[:, q]
                A[:, q] = s * Ap + c * A[:, q]
                Vp = V[:, p].copy()
                V[:, p] = c * Vp - s * V[:, q]
                V[:, q] = s * Vp + c * V[:, q]
        if off == 0.0:
            break
    sig = np.sqrt((A * A).sum(axis=0))
    order = np.argsort(-sig)
    sig = sig[order]
    A = A[:, order]
    V = V[:, order]
    U = np.zeros_like(A)
    for j in range(n):
        if sig[j] > 0:
            U[:, j] = A[:, j] / sig[j]
        else:
            U[:, j] = 0.0
    if transposed:
        return V, sig, U
    return U, sig, V


def jacobi_rank_r(M, r):
    """Best rank-r reconstruction according to the Jacobi oracle."""
    U, s, V = jacobi_svd(M)
    return (U[:, :r] * s[:r]) @ V[:, :r].T


def brute_force_sparsify(M, alpha_tilde):
    """Literal top-fraction sparsification using full sorts everywhere."""
    M = np.asarray(M, dtype=np.float64)
    n1, n2 = M.shape
    k_row = int(np.floor(alpha_tilde * n2))
    k_col = int(np.floor(alpha_tilde * n1))
    out = np.zeros_like(M)
    if k_row == 0 or k_col == 0:
        return out
    for i in range(n1):
        row_sorted = sorted(abs(x) for x in M[i])[::-1]
        row_cut = row_sorted[k_row - 1]
        for j in range(n2):
            col_sorted = sorted(abs(x) for x in M[:, j])[::-1]
            col_cut = col_sorted[k_col - 1]
            if abs(M[i, j]) >= row_cut and abs(M[i, j]) >= col_cut:
                out[i, j] = M[i, j]
    return out


def scalar_lrpca_step(L, R, Y, zeta, eta):
    """Plain-loop evaluation of one iteration for tiny problems."""
    L = [row[:] for row in L]
    R = [row[:] for row in R]
    n1, r = len(L), len(L[0])
    n2 = len(R)
    X = [[sum(L[i][k] * R[j][k] for k in range(r)) for j in range(n2)]
         for i in range(n1)]
    S = [[0.0] * n2 for _ in range(n1)]
    for i in range(n1):
        for j in range(n2):
            v = Y[i][j] - X[i][j]
            mag = abs(v) - zeta
            S[i][j] = (1.0 if v > 0 else -1.0) * mag if mag > 0 else 0.0
    W = [[X[i][j] + S[i][j] - Y[i][j] for j in range(n2)] for i in range(n1)]
    GR = [[sum(R[i][a] * R[i][b] for i in range(n2)) for b in range(r)]
          for a in range(r)]
    GL = [[sum(L[i][a] * L[i][b] for i in range(n1)) for b in range(r)]
          for a in range(r)]
    GR_inv = np.linalg.inv(np.array(GR))
    GL_inv = np.linalg.inv(np.array(GL))
    WR = np.array(W) @ np.array(R) @ GR_inv
    WL = np.array(W).T @ np.array(L) @ GL_inv
    L_new = np.array(L) - eta * WR
    R_new = np.array(R) - eta * WL
    return L_new, R_new, np.array(S)
