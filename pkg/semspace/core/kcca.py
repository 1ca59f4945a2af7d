# -*- coding: utf-8 -*-
"""正则化核典型相关分析模块

拟合流程：
1. （可选）两个核矩阵各自除以平均对角元
2. PGSO（带主元的不完全 Cholesky）得到 Kv ≈ Gv·Gvᵀ, Kt ≈ Gt·Gtᵀ
3. 对因子做薄 SVD，在其列空间内白化后对交叉协方差做 SVD，得到相关系数与对偶系数
4. 把解映射回原始对偶坐标 A，使每个 α 满足 αᵀ·Kv·(Kv+κI)·α = 1

求解的特征问题为 (Kv+κI)⁻¹·Kt·(Kt+κI)⁻¹·Kv·α = λ²·α，λ 即相关系数 r。
"""
import numpy as np
import scipy.linalg as la
from loguru import logger

from ..exceptions import AppError
from ..model import FeatureMatrix, GramMatrix, KccaConfig, KernelBlock, PgsoFactor, SemanticProjector
from ..utils import stream_rng

# 因子奇异值的相对截断阈值
SPECTRUM_TOL = 1e-10
# 小于该值的相关系数视为不存在
MIN_CORRELATION = 1e-12
NEGATIVE_DIAGONAL_TOL = 1e-10


def pgso(K: GramMatrix | np.ndarray, max_rank: int, tol: float) -> PgsoFactor:
    """部分 Gram-Schmidt 正交化（带主元的不完全 Cholesky）
    Args:
        K: 对称半正定核矩阵
        max_rank: 秩上限 T
        tol: 残差迹 ≤ tol·trace(K) 时停止
    Returns:
        PgsoFactor: K ≈ G·Gᵀ 的因子、主元顺序与剩余残差迹
    Raises:
        AppError.NotPositiveSemidefinite: 对角元小于 −1e−10
    """
    values = K.values if isinstance(K, GramMatrix) else np.asarray(K, dtype=np.float64)
    n = values.shape[0]
    d = np.diag(values).astype(np.float64, copy=True)
    if d.size and d.min() < -NEGATIVE_DIAGONAL_TOL:
        AppError.NotPositiveSemidefinite.raise_(f"核矩阵第 {int(np.argmin(d))} 个对角元为 {d.min()}")
    d = np.clip(d, 0.0, None)
    trace = float(d.sum())
    rank_cap = min(max_rank, n)
    G = np.zeros((n, rank_cap))
    pivots: list[int] = []
    if trace <= 0:
        return PgsoFactor(G=G[:, :0], pivots=(), residual_trace=0.0)
    for j in range(rank_cap):
        if d.sum() <= tol * trace:
            break
        p = int(np.argmax(d))
        if d[p] <= 0:
            break
        column = (values[:, p] - G[:, :j] @ G[p, :j]) / np.sqrt(d[p])
        G[:, j] = column
        d -= column ** 2
        d[p] = 0.0
        np.clip(d, 0.0, None, out=d)
        pivots.append(p)
    rank = len(pivots)
    return PgsoFactor(G=G[:, :rank], pivots=tuple(pivots), residual_trace=float(max(d.sum(), 0.0)))


def _factor_spectrum(factor: PgsoFactor) -> tuple[np.ndarray, np.ndarray]:
    """因子的薄 SVD：G = U·diag(s)·Qᵀ，返回 (U, λ=s²)，舍去相对很小的分量"""
    if factor.rank == 0:
        AppError.DegenerateSolution.raise_("核矩阵的 PGSO 秩为 0, 无法拟合")
    try:
        U, s, _ = la.svd(factor.G, full_matrices=False)
    except (la.LinAlgError, ValueError) as e:
        AppError.EigenSolverFailure.raise_(f"因子 SVD 失败 —— {e}")
    keep = s > SPECTRUM_TOL * s[0]
    return U[:, keep], s[keep] ** 2


def _mean_diagonal_scale(K: GramMatrix) -> float:
    mean_diag = float(np.mean(np.diag(K.values)))
    return 1.0 / mean_diag if mean_diag > 0 else 1.0


def fit_kcca(Kv: GramMatrix, Kt: GramMatrix, cfg: KccaConfig) -> SemanticProjector:
    """拟合正则化 KCCA 并返回语义投影器
    Args:
        Kv: 训练图像的视觉核矩阵
        Kt: 同一批训练图像（同一顺序）的文本核矩阵
        cfg: κ、PGSO 秩上限与停止阈值、保留维数 M、是否归一化
    Returns:
        SemanticProjector: 对偶基 A（N×M）与非递增的相关系数 r
    """
    if Kv.row_ids != Kt.row_ids:
        AppError.DimensionMismatch.raise_(f"视觉核({Kv.n})与文本核({Kt.n})的训练图像不一致或顺序不同")
    visual_scale = 1.0
    if cfg.normalize:
        visual_scale = _mean_diagonal_scale(Kv)
        Kv, Kt = Kv.scaled(visual_scale), Kt.scaled(_mean_diagonal_scale(Kt))
    kappa = cfg.kappa
    Uv, lam_v = _factor_spectrum(pgso(Kv.values, cfg.max_rank, cfg.pgso_tol))
    Ut, lam_t = _factor_spectrum(pgso(Kt.values, cfg.max_rank, cfg.pgso_tol))
    # 白化后的交叉协方差
    whiten_v = np.sqrt(lam_v / (lam_v + kappa))
    whiten_t = np.sqrt(lam_t / (lam_t + kappa))
    cross = whiten_v[:, None] * (Uv.T @ Ut) * whiten_t[None, :]
    try:
        P, sigma, _ = la.svd(cross, full_matrices=False)
    except (la.LinAlgError, ValueError) as e:
        AppError.EigenSolverFailure.raise_(f"交叉协方差 SVD 失败 —— {e}")
    attainable = int(np.sum(sigma > MIN_CORRELATION))
    if attainable == 0:
        AppError.DegenerateSolution.raise_("两个视图之间没有正相关的方向")
    m = attainable if cfg.m_dims is None else cfg.m_dims
    if m > attainable:
        logger.opt(colors=True).warning("<y>KCCA</y>:请求 M=<y>{}</y> 超过可达秩 {}, 已截断", m, attainable)
        m = attainable
    r = sigma[:m]
    # 列空间内的对偶系数
    a = P[:, :m] / np.sqrt(lam_v * (lam_v + kappa))[:, None]
    A = Uv @ a
    if kappa > 0:
        # 列空间之外的分量
        projector_t = (Ut * (lam_t / (lam_t + kappa))) @ Ut.T
        spill = projector_t @ (Uv @ (lam_v[:, None] * a))
        spill -= Uv @ (Uv.T @ spill)
        A += spill / (r ** 2 * kappa)[None, :]
    # 每个分量绝对值最大的元素取正
    pivot_rows = np.argmax(np.abs(A), axis=0)
    signs = np.sign(A[pivot_rows, np.arange(m)])
    signs[signs == 0] = 1.0
    A *= signs[None, :]
    if not np.all(np.isfinite(A)):
        AppError.EigenSolverFailure.raise_("对偶基中出现非有限值")
    logger.opt(colors=True).info(
        "<g>KCCA</g>:秩 Gv=<c>{}</c> Gt=<c>{}</c> M=<c>{}</c> r₁=<c>{:.6f}</c> |<g>SUCCESS</g>",
        lam_v.size, lam_t.size, m, float(r[0]))
    return SemanticProjector(dual_basis=A, correlations=r, train_row_ids=Kv.row_ids,
                             kernel_id=Kv.kernel_id, visual_scale=visual_scale)


def project(p: SemanticProjector, Kv_rows: KernelBlock) -> FeatureMatrix:
    """把图像嵌入语义空间：ψ = (Kv_rows·A)·diag(r)
    Args:
        p: 语义投影器
        Kv_rows: 查询图像对训练图像的视觉核块（列为训练图像, 顺序与拟合时一致）
    Returns:
        FeatureMatrix: Q×M 的语义特征
    """
    if Kv_rows.col_ids != p.train_row_ids:
        AppError.KernelMismatch.raise_(
            f"核块有 {len(Kv_rows.col_ids)} 列, 与投影器的 {p.n_train} 张训练图像不一致或顺序不同")
    if Kv_rows.kernel_id != p.kernel_id:
        AppError.KernelMismatch.raise_(f"核块的核函数 {Kv_rows.kernel_id} 与投影器的 {p.kernel_id} 不一致")
    psi = ((Kv_rows.values * p.visual_scale) @ p.dual_basis) * p.correlations[None, :]
    return FeatureMatrix(values=psi, row_ids=Kv_rows.row_ids)


def dense_kcca_oracle(Kv: np.ndarray, Kt: np.ndarray, kappa: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    """直接求解稠密特征问题 (Kv+κI)⁻¹·Kt·(Kt+κI)⁻¹·Kv·α = λ²·α，用于校验

    返回 (r, A)，A 的归一化与符号约定同 fit_kcca。只适用于小规模满秩输入。
    """
    Kv = np.asarray(Kv, dtype=np.float64)
    Kt = np.asarray(Kt, dtype=np.float64)
    n = Kv.shape[0]
    eye = np.eye(n)
    M = la.solve(Kv + kappa * eye, Kt @ la.solve(Kt + kappa * eye, Kv))
    eigvals, eigvecs = la.eig(M)
    order = np.argsort(-eigvals.real, kind="stable")[:m]
    mu = np.clip(eigvals.real[order], 0.0, None)
    A = eigvecs.real[:, order]
    norms = np.sqrt(np.einsum("ij,ij->j", A, Kv @ (Kv + kappa * eye) @ A))
    A = A / norms[None, :]
    pivot_rows = np.argmax(np.abs(A), axis=0)
    A *= np.sign(A[pivot_rows, np.arange(A.shape[1])])[None, :]
    return np.sqrt(mu), A


def subsample_training(n: int, size: int, seed: int) -> np.ndarray:
    """从 n 张训练图像中无放回抽取 size 张（升序下标），用于子集拟合"""
    if not 1 <= size <= n:
        AppError.InvalidConfiguration.raise_(f"训练子集大小 {size} 必须位于 [1, {n}]")
    if size == n:
        return np.arange(n)
    return np.sort(stream_rng(seed, "kcca.train_subset").choice(n, size=size, replace=False))
