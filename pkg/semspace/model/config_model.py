# 导入必要的模块
from pathlib import Path
from typing import Annotated, Literal

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator, model_validator

from ..exceptions import AppError
from ..mapping import EmbeddingSpace, KernelKind, TransferMethod
from ..utils.data_conversion import convert_to_str

# 类型别名必须定义在类外部
StringOrNone = Annotated[str | None, BeforeValidator(convert_to_str)]
PathOrNone = Annotated[Path | None, BeforeValidator(convert_to_str)]
AutoOrPositive = float | Literal["auto"]


class KernelSpec(BaseModel):
    """核函数规格：种类 + 具名参数

    参数名必须与核函数种类匹配，例如 exp_chi2 只接受 C（正数或 "auto"），
    arccos2 只接受固定为 2 的阶数 n，ontology_labels 可选 clip_psd（0/1）。
    """
    model_config = ConfigDict(frozen=True)

    kind: KernelKind
    params: dict[str, float | str] = Field(default_factory=dict, description="核函数参数")

    @model_validator(mode="after")
    def check_params(self) -> "KernelSpec":
        allowed = self.kind.param_names | ({"clip_psd"} if self.kind is KernelKind.ONTOLOGY_LABELS else set())
        unknown = set(self.params) - allowed
        if unknown:
            AppError.InvalidConfiguration.raise_(f"核函数 {self.kind.value} 不支持参数 {sorted(unknown)}")
        if self.kind is KernelKind.ARCCOS2 and float(self.params.get("n", 2)) != 2:
            AppError.InvalidConfiguration.raise_("ArcCosine核的阶数固定为 n=2")
        if self.kind is KernelKind.EXP_CHI2:
            c = self.params.get("C", "auto")
            if c != "auto" and (not isinstance(c, (int, float)) or c <= 0):
                AppError.InvalidConfiguration.raise_(f"exp_chi2 的 C 必须为正数或 auto, 实际为 {c!r}")
        return self

    @property
    def kernel_id(self) -> str:
        """核函数标识字符串，如 arccos2(n=2)、exp_chi2(C=auto)"""
        params = dict(self.params)
        if self.kind is KernelKind.ARCCOS2:
            params = {"n": 2}
        if self.kind is KernelKind.EXP_CHI2:
            params.setdefault("C", "auto")
        body = ",".join(f"{k}={params[k]!r}" if not isinstance(params[k], str) else f"{k}={params[k]}"
                        for k in sorted(params))
        return f"{self.kind.value}({body})"


class DenoiseConfig(BaseModel):
    """标签预传播（去噪）配置"""
    model_config = ConfigDict(frozen=True)

    enabled: bool = Field(default=False, description="是否对训练标签做预传播")
    R: int = Field(default=100, ge=1, description="参与加权的视觉近邻数")
    sigma: AutoOrPositive = Field(default="auto", description="指数权重的尺度, auto 为所选近邻平方距离均值")

    @field_validator("sigma")
    @classmethod
    def check_sigma(cls, v: AutoOrPositive) -> AutoOrPositive:
        if v != "auto" and v <= 0:
            AppError.InvalidConfiguration.raise_(f"sigma 必须为正数或 auto, 实际为 {v}")
        return v


class KccaConfig(BaseModel):
    """正则化核典型相关分析配置"""
    model_config = ConfigDict(frozen=True)

    kappa: float = Field(default=0.5, ge=0.0, le=1.0, description="正则化系数 κ")
    max_rank: int = Field(default=4096, ge=1, description="PGSO秩上限 T")
    pgso_tol: float = Field(default=1e-6, gt=0.0, description="残差迹停止阈值（相对迹）")
    m_dims: int | None = Field(default=None, ge=1, description="保留的语义维度 M, 默认取可达秩")
    normalize: bool = Field(default=False, description="拟合前将两个核矩阵除以各自的平均对角元（默认关闭, 直接求解原始特征问题）")
    train_subset: int | None = Field(default=None, ge=2, description="仅用随机子集拟合投影")


class TransferConfig(BaseModel):
    """标签迁移配置"""
    model_config = ConfigDict(frozen=True)

    method: TransferMethod = TransferMethod.NNVOT
    space: EmbeddingSpace = EmbeddingSpace.SEMANTIC
    K: int = Field(default=10, ge=1, description="近邻数")
    m_per_label: int = Field(default=5, ge=1, description="2PKNN第一阶段每个标签的近邻数")
    svm_lambda: float = Field(default=1e-4, ge=0.0)
    svm_epochs: int = Field(default=20, ge=1)
    svm_step0: float = Field(default=0.1, gt=0.0)
    tagprop_epochs: int = Field(default=50, ge=1)
    tagprop_step: float = Field(default=0.5, gt=0.0)
    cv: bool = Field(default=False, description="用3折交叉验证选择K或λ")
    k_grid: list[int] = Field(default_factory=lambda: [5, 10, 25, 50])
    lambda_grid: list[float] = Field(default_factory=lambda: [1e-5, 1e-4, 1e-3, 1e-2])


class EvalConfig(BaseModel):
    """评估配置"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(default=5, ge=1, description="每张图像预测的标签数")
    per_label: bool = Field(default=False, description="报告中包含逐标签明细")
    jaccard_k: list[int] = Field(default_factory=list, description="额外计算近邻Jaccard诊断的K列表")


class SynthSpec(BaseModel):
    """合成多模态数据集规格"""
    model_config = ConfigDict(frozen=True)

    n_classes: int = Field(default=8, ge=1)
    images_per_class: int = Field(default=60, ge=1)
    feature_dim: int = Field(default=64, ge=1)
    vocab_size: int = Field(default=24, ge=1)
    labels_per_class: int = Field(default=3, ge=1)
    visual_noise: float = Field(default=1.0, ge=0.0, description="视觉高斯噪声 σ_v")
    tag_noise_rate: float = Field(default=0.0, ge=0.0, le=1.0, description="标签翻转概率 p_flip")
    test_fraction: float = Field(default=0.25, ge=0.0, lt=1.0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)

    @model_validator(mode="after")
    def check_label_budget(self) -> "SynthSpec":
        if self.labels_per_class > self.vocab_size:
            AppError.InvalidConfiguration.raise_(
                f"labels_per_class={self.labels_per_class} 超过词表大小 vocab_size={self.vocab_size}")
        return self


class DataConfig(BaseModel):
    """输入数据配置：文件路径或内嵌的合成数据规格（二选一）"""
    model_config = ConfigDict(frozen=True)

    synthetic: SynthSpec | None = None
    noisy_tags: bool = Field(default=False, description="合成数据训练时使用带噪用户标签")
    vocab: PathOrNone = None
    train_features: PathOrNone = None
    test_features: PathOrNone = None
    train_annotations: PathOrNone = None
    test_annotations: PathOrNone = None
    word_vectors: PathOrNone = None
    similarity: PathOrNone = None

    @model_validator(mode="after")
    def check_source(self) -> "DataConfig":
        if self.synthetic is not None:
            return self
        required = {"vocab": self.vocab, "train_features": self.train_features, "test_features": self.test_features,
                    "train_annotations": self.train_annotations, "test_annotations": self.test_annotations}
        missing = [name for name, value in required.items() if value is None]
        if missing:
            AppError.MissingConfiguration.raise_(f"data 段缺少 {missing}（或提供 synthetic）")
        return self


class KernelsConfig(BaseModel):
    """视觉核与文本核的选择"""
    model_config = ConfigDict(frozen=True)

    visual: KernelSpec = Field(default_factory=lambda: KernelSpec(kind=KernelKind.ARCCOS2))
    textual: KernelSpec = Field(default_factory=lambda: KernelSpec(kind=KernelKind.LINEAR_LABELS))

    @model_validator(mode="after")
    def check_views(self) -> "KernelsConfig":
        if self.visual.kind is not KernelKind.ARCCOS2:
            AppError.InvalidConfiguration.raise_("视觉核只支持 arccos2")
        if not self.textual.kind.is_textual:
            AppError.InvalidConfiguration.raise_(f"{self.textual.kind.value} 不是文本核")
        return self


class PipelineConfig(BaseModel):
    """完整流水线配置，对应 YAML 配置文件的各段"""
    model_config = ConfigDict(frozen=True)

    seed: int = Field(default=0, ge=0, lt=2 ** 64, description="全局随机种子")
    out_dir: Path = Field(default=Path("semspace_out"), description="产物输出目录")
    data: DataConfig
    kernels: KernelsConfig = Field(default_factory=KernelsConfig)
    denoise: DenoiseConfig = Field(default_factory=DenoiseConfig)
    kcca: KccaConfig = Field(default_factory=KccaConfig)
    transfer: TransferConfig = Field(default_factory=TransferConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    @model_validator(mode="after")
    def check_denoise_kernel(self) -> "PipelineConfig":
        if self.denoise.enabled and self.kernels.textual.kind is not KernelKind.EXP_CHI2:
            AppError.InvalidConfiguration.raise_("启用去噪时文本核必须为 exp_chi2")
        if self.kernels.textual.kind is KernelKind.EXP_CHI2 and not self.denoise.enabled:
            AppError.InvalidConfiguration.raise_("exp_chi2 文本核作用于去噪后的标签, 请启用 denoise")
        return self


class RuntimeOptions(BaseModel):
    """进程级运行选项，来自 .env/环境变量与命令行全局参数"""
    model_config = ConfigDict(validate_assignment=True)

    seed: int | None = Field(default=None, ge=0, lt=2 ** 64, description="全局种子, 为空时子命令取 0、流水线取配置文件中的 seed")
    threads: int = Field(default=1, ge=1, description="分块核计算的线程数")
    cache_dir: PathOrNone = Field(default=None, description="核矩阵缓存目录")
    log_level: str = Field(default="INFO")
    progress: bool = Field(default=False, description="显示分块计算进度条")


class WorkDir(BaseModel):
    """工作目录配置模型，定义应用程序使用的各种文件路径"""
    model_config = ConfigDict(validate_assignment=True)

    error_log: PathOrNone = Field(default=None, description="错误日志文件, 为空则不写入")
    default_config: Path = Field(default=Path(__file__).resolve().parents[1] / "res" / "default_config.yaml",
                                 description="默认流水线配置资源")
