from enum import Enum
from typing import NoReturn
import inspect

from loguru import logger

"""
应用程序统一错误处理模块

本模块定义了语义空间标注流水线中所有可能发生的错误类型，采用枚举方式统一管理错误代码和描述信息，
提供一致的异常抛出和捕获机制，并将错误类别映射为命令行退出码。

错误分类体系：
├── 系统错误 (1000-1999): 系统级错误和通用错误            -> 退出码 1
├── 配置错误 (2000-2999): 配置文件与参数相关错误          -> 退出码 2
├── 数据错误 (3000-3999): 文件格式、维度、词表等数据错误    -> 退出码 3
└── 数值错误 (4000-4999): 求解器、半正定性、梯度等数值错误  -> 退出码 4

使用示例：
    # 抛出异常
    AppError.DimensionMismatch.raise_("特征维度 4 与 5 不一致")

    # 捕获异常
    try:
        AppError.EmptyMatrix.raise_("rows=0")
    except AppError.Exception as e:
        print(f"错误码: {e.error_code.code}")
        print(f"退出码: {e.error_code.exit_code}")
        print(f"额外信息: {e.extra_msg}")
"""


class AppException(Exception):
    """携带错误码的异常，通过 AppError.Exception 访问"""

    def __init__(self, error_code: "AppError", extra_msg: str = "", stage: str | None = None):
        self.error_code = error_code
        self.extra_msg = extra_msg
        # 流水线阶段名，由 PipelineRunner 在阶段失败时写入
        self.stage = stage
        super().__init__(f"{error_code.msg} {extra_msg}".strip())

    def __str__(self):
        prefix = f"[{self.error_code.code}]"
        if self.stage:
            prefix += f"[{self.stage}]"
        return f"{prefix} {super().__str__()}"


class AppError(Enum):
    """应用程序错误代码枚举类

    错误代码格式: XXXX (四位数字)
    - 第一位数字表示错误类型分类
    - 后三位数字表示具体错误标识
    """

    # 系统错误 (1000-1999)
    UnknownError = (1000, "未知错误")
    InvalidParameter = (1006, "参数无效")
    MissingParameter = (1007, "缺少必要参数")
    PermissionDenied = (1010, "权限不足")
    FileIOError = (1012, "文件读写错误")
    ResourceCopyError = (1016, "资源复制失败")

    # 配置错误 (2000-2999)
    InvalidConfiguration = (2000, "配置无效")
    MissingConfiguration = (2001, "缺少必要配置")
    ConfigFileReadError = (2002, "配置文件读取失败")

    # 数据错误 (3000-3999)
    MatrixFormatError = (3000, "矩阵文件格式错误")
    NonFiniteValue = (3001, "存在非有限数值")
    DimensionMismatch = (3002, "维度不匹配")
    EmptyMatrix = (3003, "空矩阵")
    AnnotationFormatError = (3004, "标注文件格式错误")
    DuplicateIdentifier = (3005, "标识重复")
    VocabularyMismatch = (3006, "词表不一致")
    MissingWordVector = (3007, "缺少词向量")
    IntegrityError = (3008, "文件完整性校验失败")
    VersionMismatch = (3009, "文件版本不匹配")
    InvariantViolation = (3010, "数据不变量被破坏")
    ZeroNormRow = (3011, "存在零范数行")
    NegativeWeight = (3012, "存在负权重")
    KernelMismatch = (3013, "核函数或训练集不匹配")
    ResourceNotFound = (3014, "资源未找到")

    # 数值错误 (4000-4999)
    NotPositiveSemidefinite = (4000, "矩阵非半正定")
    EigenSolverFailure = (4001, "特征值求解失败")
    NonFiniteGradient = (4002, "训练中出现非有限值")
    DegenerateSolution = (4003, "解退化")

    @property
    def code(self) -> int:
        """获取状态码"""
        return self.value[0]

    @property
    def msg(self) -> str:
        """获取状态描述"""
        return self.value[1]

    @property
    def exit_code(self) -> int:
        """按错误类别给出命令行退出码"""
        return {2: 2, 3: 3, 4: 4}.get(self.code // 1000, 1)

    def __str__(self):
        """字符串表示"""
        return f"[{self.code}] {self.msg}"

    def raise_(self, extra_msg: str = "") -> NoReturn:
        """抛出此错误对应的异常
            并记录错误日志
        """
        error = AppException(self, extra_msg)
        self._log_error(error)
        raise error

    @staticmethod
    def _log_error(error: AppException) -> None:
        """记录错误日志

        始终写入DEBUG级别日志；若 WORKDIR.error_log 已配置，额外把调用栈追加到错误日志文件。
        """
        logger.opt(depth=2).debug("AppError {}: {}", error.error_code.name, error.extra_msg)
        from ..config import WORKDIR
        if WORKDIR.error_log is None:
            return
        from ..utils.dates import get_iso8601_timestamp
        # 获取调用栈信息（排除日志记录部分）
        stack = "\n".join(
            f"  File \"{frame.filename}\", line {frame.lineno}, in {frame.function}"
            for frame in inspect.stack()[2:])
        log_msg = (
            f"\n时间: {get_iso8601_timestamp()}\n"
            f"错误码: {error.error_code.code}\n"
            f"类型: {error.error_code.name}\n"
            f"描述: {error.error_code.msg}\n"
            f"详情: {error.extra_msg}\n"
            f"调用栈:\n{stack}\n\n"
            "────────────────────\n")
        try:
            WORKDIR.error_log.parent.mkdir(parents=True, exist_ok=True)
            with open(WORKDIR.error_log, "a", encoding="utf-8") as f:
                f.write(log_msg)
        except OSError as e:
            logger.warning("错误日志写入失败: {}", e)


# 在类体外挂载，Enum 类体内定义的类在 3.10-3.12 上会成为枚举成员
AppError.Exception = AppException
