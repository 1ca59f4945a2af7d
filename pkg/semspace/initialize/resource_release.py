import shutil
from pathlib import Path

from loguru import logger

from ..config import WORKDIR
from ..exceptions import AppError
"""
资源释放模块
负责把包内的默认资源（默认流水线配置）复制到用户指定的位置，供 `semspace init-config` 使用。

# 基本调用方式
from semspace.initialize import ResourceCopier
target = ResourceCopier.copy_default_config(Path("semspace.yaml"))
"""


class ResourceCopier:
    """
    资源复制器类，负责将包内资源文件复制到工作目录
    目标已存在时，除非显式要求覆盖，否则拒绝写入。
    """
    @classmethod
    def copy_default_config(cls, target: Path, force: bool = False) -> Path:
        """释放默认流水线配置
        Args:
            target: 目标文件路径
            force: 目标已存在时是否覆盖
        Returns:
            Path: 写出的文件路径
        Raises:
            AppError.ResourceNotFound: 包内默认配置缺失
            AppError.PermissionDenied: 目标已存在且未指定覆盖
            AppError.ResourceCopyError: 复制失败
        """
        source = WORKDIR.default_config
        if not source.is_file():
            AppError.ResourceNotFound.raise_(f"默认配置缺失 —— 路径:{source}不存在")
        target = Path(target)
        if target.exists() and not force:
            AppError.PermissionDenied.raise_(f"{target} 已存在, 如需覆盖请使用 --force")
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.copy(source, target)
        except OSError as e:
            AppError.ResourceCopyError.raise_(f"{e}")
        logger.opt(colors=True).info("<g>InitConfig</g>:默认配置已写入 <c>{}</c> |<g>SUCCESS</g>", target)
        return target
