"""名称映射配置模块

提供核函数、近邻度量、标签迁移方法等字符串标识与实现之间的映射关系，
用于配置校验、命令行参数解析以及注册表查找。
"""
from enum import Enum
from typing import Callable
from ..exceptions import AppError
"""
调用方法示例：python
# 获取核函数实现
fn = KernelKind.ARCCOS2.get_kernel_function()
# 直接使用枚举值
KernelKind.EXP_CHI2.value  # 返回: "exp_chi2"
# 获取所有枚举的value值
[kind.value for kind in KernelKind]
"""


class KernelKind(Enum):
    """
    核函数种类枚举类
    严格限制可用的核函数，参数名集合随种类固定
    """
    ARCCOS2 = "arccos2"
    LINEAR_LABELS = "linear_labels"
    ONTOLOGY_LABELS = "ontology_labels"
    WORDVEC_LABELS = "wordvec_labels"
    EXP_CHI2 = "exp_chi2"

    @property
    def param_names(self) -> frozenset[str]:
        """当前核函数允许的参数名"""
        return {
            KernelKind.ARCCOS2: frozenset({"n"}),
            KernelKind.EXP_CHI2: frozenset({"C"}),
        }.get(self, frozenset())

    @property
    def is_textual(self) -> bool:
        """是否为文本视图核函数"""
        return self is not KernelKind.ARCCOS2

    def get_kernel_function(self) -> Callable:
        """获取当前枚举值对应的核函数
        Returns:
            对应的核函数（arccos2_kernel、linear_label_kernel 等）
        Raises:
            AppError.InvalidParameter: 当枚举值没有对应实现时
        """
        from ..core import kernels
        kernel_function = {
            KernelKind.ARCCOS2: kernels.arccos2_kernel,
            KernelKind.LINEAR_LABELS: kernels.linear_label_kernel,
            KernelKind.ONTOLOGY_LABELS: kernels.ontology_label_kernel,
            KernelKind.WORDVEC_LABELS: kernels.wordvec_label_kernel,
            KernelKind.EXP_CHI2: kernels.exp_chi2_kernel,
        }.get(self)
        if kernel_function is None:
            AppError.InvalidParameter.raise_(f"未找到核函数 {self.value} 对应的实现")
        return kernel_function


class NeighborMetric(Enum):
    """近邻检索度量"""
    COSINE_ON_PSI = "cosine_on_psi"
    ONE_MINUS_KV = "one_minus_kv"


class EmbeddingSpace(Enum):
    """标签迁移所在空间：语义空间或视觉基线空间"""
    SEMANTIC = "semantic"
    BASELINE = "baseline"

    @property
    def metric(self) -> NeighborMetric:
        return NeighborMetric.COSINE_ON_PSI if self is EmbeddingSpace.SEMANTIC else NeighborMetric.ONE_MINUS_KV


class TransferMethod(Enum):
    """
    标签迁移方法枚举类
    每个枚举值对应一个已注册的相关度函数实现
    """
    NNVOT = "nnvot"
    TAGVOTE = "tagvote"
    TAGPROP = "tagprop"
    TWOPKNN = "2pknn"
    SVM = "svm"

    @property
    def uses_neighbors(self) -> bool:
        """是否依赖近邻个数K（交叉验证时决定搜索K还是λ）"""
        return self is not TransferMethod.SVM
