"""运行时配置管理模块

提供全局单例配置对象，用于在整个应用程序中共享配置状态。
该模块实现了配置的集中管理，确保在整个进程生命周期中配置的一致性。

包含的应用程序配置对象：
- RUNTIME: 进程级运行选项（随机种子、线程数、核缓存目录、日志级别）
- WORKDIR: 工作目录设置（错误日志、默认配置资源路径）
"""

from ..model import RuntimeOptions, WorkDir

# 运行选项对象
# 先由 .env/环境变量填充，再由命令行全局参数覆盖
RUNTIME = RuntimeOptions()

# 工作目录配置对象
# 定义错误日志与默认配置资源的存储路径
WORKDIR = WorkDir()
