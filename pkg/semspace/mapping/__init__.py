from .mapping import KernelKind, NeighborMetric, EmbeddingSpace, TransferMethod
__all__ = [
    "KernelKind",
    "NeighborMetric",
    "EmbeddingSpace",
    "TransferMethod",
]
