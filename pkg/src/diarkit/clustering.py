"""Speaker clustering.

Spectral clustering over cosine affinities: similarity matrix, symmetric
normalized Laplacian, a cyclic Jacobi eigensolver, the eigengap heuristic
for the cluster count, row-normalized leading eigenvectors, and k-means.
An average-linkage agglomerative clusterer with silhouette-based model
selection serves as the baseline.

Everything is deterministic given (inputs, seed); ties break toward the
smallest index.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BadKError, NoConvergenceError

DEFAULT_K_MAX = 8


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues ascending; eigenvectors[:, i] pairs with eigenvalues[i]."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray  # cluster ids 0..k-1, one per point
    k: int


def cosine_similarity_matrix(embeddings: np.ndarray) -> np.ndarray:
    """Pairwise cosine affinity of unit-norm rows.

    Off-diagonal entries are max(0, <e_i, e_j>) (negative cosines clamp to
    zero so degree normalization stays well-defined); the diagonal is zero.
    Exactly symmetric by construction.
    """
    e = np.asarray(embeddings, dtype=np.float64)
    if e.ndim != 2 or e.shape[0] < 1:
        raise ValueError("need an (n, d) embedding matrix with n >= 1")
    sim = np.maximum(e @ e.T, 0.0)
    np.clip(sim, 0.0, 1.0, out=sim)
    upper = np.triu(sim, k=1)
    return upper + upper.T


def normalized_laplacian(similarity: np.ndarray) -> np.ndarray:
    """L = I - D^(-1/2) S D^(-1/2); isolated nodes get a bare 1 on the diagonal."""
    s = np.asarray(similarity, dtype=np.float64)
    degrees = s.sum(axis=1)
    inv_sqrt = np.zeros_like(degrees)
    connected = degrees > 0
    inv_sqrt[connected] = 1.0 / np.sqrt(degrees[connected])
    scaled = s * np.outer(inv_sqrt, inv_sqrt)
    return np.eye(len(s)) - scaled


def symmetric_eigendecomposition(matrix: np.ndarray, max_sweeps: int = 100) -> EigenDecomposition:
    """Full eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps rotate every upper-triangle pair until the largest off-diagonal
    magnitude drops below 1e-12 * ||A||_F (or the sweep cap is hit, raising
    NoConvergenceError with the residual). Eigenpairs come back sorted
    ascending with a deterministic sign convention.
    """
    a = np.array(matrix, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    v = np.eye(n)
    if n == 1:
        return EigenDecomposition(a[0].copy(), v)

    tol = 1e-12 * max(np.linalg.norm(a, "fro"), 1e-300)
    iu = np.triu_indices(n, k=1)
    converged = False
    for _ in range(max_sweeps):
        if np.max(np.abs(a[iu])) <= tol:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tol:
                    continue
                # rotation angle zeroing a[p, q]
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # two-sided update: A <- G^T A G, columns then rows
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    if not converged:
        residual = float(np.max(np.abs(a[iu])))
        if residual > tol:
            raise NoConvergenceError(max_sweeps, residual)

    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = v[:, order]
    # sign convention: largest-magnitude component of each vector positive
    peaks = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[peaks, np.arange(n)])
    signs[signs == 0] = 1.0
    return EigenDecomposition(eigenvalues, vectors * signs)


def estimate_k_eigengap(eigenvalues: np.ndarray, k_max: int = DEFAULT_K_MAX) -> int:
    """Cluster count at the largest gap between consecutive ascending eigenvalues.

    Scans gaps lambda_{i+1} - lambda_i for i in 1..min(k_max, n-1) and
    returns the i with the largest gap, ties toward smaller i.
    """
    ev = np.asarray(eigenvalues, dtype=np.float64)
    n = len(ev)
    if n < 2:
        return 1
    best_k, best_gap = 1, -np.inf
    for i in range(1, min(k_max, n - 1) + 1):
        gap = ev[i] - ev[i - 1]
        if gap > best_gap:
            best_k, best_gap = i, gap
    return best_k


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))
    return centers


def _lloyd(points, centers, max_iter: int, tol: float):
    """Lloyd iterations; returns (labels, centers, wcss, per-iteration wcss)."""
    history = []
    labels = np.zeros(len(points), dtype=int)
    for _ in range(max_iter):
        d2 = np.sum((points[:, np.newaxis, :] - centers[np.newaxis, :, :]) ** 2, axis=2)
        labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(points)), labels].sum()))
        new_centers = centers.copy()
        for j in range(len(centers)):
            members = points[labels == j]
            if len(members):
                new_centers[j] = members.mean(axis=0)
        # empty clusters grab the point currently farthest from its centroid
        empty = [j for j in range(len(centers)) if not np.any(labels == j)]
        if empty:
            dist_to_own = d2[np.arange(len(points)), labels]
            order = np.argsort(-dist_to_own, kind="stable")
            for rank, j in enumerate(empty):
                new_centers[j] = points[order[rank % len(order)]]
        movement = float(np.max(np.sqrt(np.sum((new_centers - centers) ** 2, axis=1))))
        centers = new_centers
        if movement < tol and not empty:
            break
    d2 = np.sum((points[:, np.newaxis, :] - centers[np.newaxis, :, :]) ** 2, axis=2)
    labels = np.argmin(d2, axis=1)
    wcss = float(d2[np.arange(len(points)), labels].sum())
    return labels, centers, wcss, history


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> ClusterAssignment:
    """k-means++ with restarts; best run by within-cluster sum of squares."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if k < 1 or k > n:
        raise BadKError(f"need 1 <= k <= n, got k={k} n={n}")
    if k == 1:
        return ClusterAssignment(np.zeros(n, dtype=int), 1)

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        centers = _kmeans_pp_init(points, k, rng)
        labels, _, wcss, _ = _lloyd(points, centers, max_iter, tol)
        if best is None or wcss < best[0]:
            best = (wcss, labels)
    labels = best[1]
    return _compact(labels)


def _compact(labels: np.ndarray) -> ClusterAssignment:
    """Relabel to consecutive ids 0..k-1 in order of first appearance."""
    mapping: dict[int, int] = {}
    out = np.empty(len(labels), dtype=int)
    for i, lab in enumerate(labels):
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return ClusterAssignment(out, len(mapping))


def spectral_cluster(
    embeddings: np.ndarray,
    k_override: int | None = None,
    k_max: int = DEFAULT_K_MAX,
    seed: int = 0,
) -> ClusterAssignment:
    """Similarity -> Laplacian -> eigendecomposition -> eigengap -> k-means.

    The first k eigenvectors form the spectral embedding; rows are
    L2-normalized (zero rows left as zeros) before k-means.
    """
    e = np.asarray(embeddings, dtype=np.float64)
    n = len(e)
    if n == 1:
        return ClusterAssignment(np.zeros(1, dtype=int), 1)

    sim = cosine_similarity_matrix(e)
    lap = normalized_laplacian(sim)
    eig = symmetric_eigendecomposition(lap)
    k = k_override if k_override is not None else estimate_k_eigengap(eig.eigenvalues, k_max)
    k = max(1, min(k, n))

    spectral = eig.eigenvectors[:, :k].copy()
    norms = np.linalg.norm(spectral, axis=1)
    nonzero = norms > 0
    spectral[nonzero] /= norms[nonzero, np.newaxis]
    return kmeans(spectral, k, seed=seed)


# --- agglomerative baseline ---


def _silhouette(dist: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette over points; singleton clusters score 0."""
    n = len(labels)
    ids = np.unique(labels)
    if len(ids) < 2:
        return 0.0
    scores = np.zeros(n)
    masks = {c: labels == c for c in ids}
    sizes = {c: int(masks[c].sum()) for c in ids}
    for i in range(n):
        own = labels[i]
        if sizes[own] == 1:
            continue
        a = dist[i][masks[own]].sum() / (sizes[own] - 1)
        b = min(dist[i][masks[c]].mean() for c in ids if c != own)
        denom = max(a, b)
        scores[i] = (b - a) / denom if denom > 0 else 0.0
    return float(scores.mean())


def _average_linkage_merges(dist: np.ndarray):
    """Greedy group-average agglomeration.

    Returns (merge_distances, partitions): partitions[m] is the label array
    after m merges (partitions[0] = all singletons).
    """
    n = len(dist)
    d = dist.astype(np.float64).copy()
    np.fill_diagonal(d, np.inf)  # dead rows/cols stay at inf and never win argmin
    sizes = np.ones(n)
    labels = np.arange(n)
    partitions = [labels.copy()]
    merge_distances = []

    for _ in range(n - 1):
        flat = int(np.argmin(d))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        merge_distances.append(float(d[i, j]))
        # Lance-Williams update for group average linkage
        ni, nj = sizes[i], sizes[j]
        new_row = (ni * d[i, :] + nj * d[j, :]) / (ni + nj)
        d[i, :] = new_row
        d[:, i] = new_row
        d[i, i] = np.inf
        d[j, :] = np.inf
        d[:, j] = np.inf
        sizes[i] = ni + nj
        labels[labels == j] = i
        partitions.append(labels.copy())
    return merge_distances, partitions


def ahc_cluster(
    embeddings: np.ndarray,
    distance_threshold: float = 0.5,
    k_max: int = DEFAULT_K_MAX,
    k_override: int | None = None,
) -> ClusterAssignment:
    """Average-linkage agglomerative clustering on cosine distance (1 - cos).

    Candidate partitions for k in 2..min(k_max, n) are scored by silhouette
    and the best wins; when no candidate scores above zero (or n < 3) the
    dendrogram is cut at distance_threshold instead. k_override skips model
    selection and cuts to exactly k clusters.
    """
    e = np.asarray(embeddings, dtype=np.float64)
    n = len(e)
    if n == 1:
        return ClusterAssignment(np.zeros(1, dtype=int), 1)

    dist = 1.0 - e @ e.T
    np.fill_diagonal(dist, 0.0)
    dist = np.maximum(dist, 0.0)
    merge_distances, partitions = _average_linkage_merges(dist)

    def cut_to_k(k: int) -> np.ndarray:
        return partitions[n - k]

    if k_override is not None:
        k = max(1, min(k_override, n))
        return _compact(cut_to_k(k))

    best_k, best_score = None, 0.0
    if n >= 3:
        for k in range(2, min(k_max, n) + 1):
            score = _silhouette(dist, cut_to_k(k))
            if score > best_score:
                best_k, best_score = k, score
    if best_k is not None:
        return _compact(cut_to_k(best_k))

    # threshold cut: stop before the first merge above the distance threshold
    merges_applied = 0
    for md in merge_distances:
        if md > distance_threshold:
            break
        merges_applied += 1
    return _compact(partitions[merges_applied])
